//! Well-formedness of protocols.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::{Command, Expr, Protocol};
use super::var::{ClientId, Federation, Var, VarKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A variable is assigned twice.
    DoubleWrite {
        var: Var,
        index: usize,
    },
    /// A message or reveal is read before any command writes it.
    UseBeforeDef {
        var: Var,
        index: usize,
    },
    /// `out@ι := ε@ι'` with `ι ≠ ι'`.
    Ownership {
        index: usize,
        output: ClientId,
        computed_on: ClientId,
    },
    /// An OT node that is not the whole right-hand side of a send, or
    /// whose receiver is not the destination.
    OtPlacement {
        index: usize,
    },
    UnknownClient {
        client: ClientId,
        index: usize,
    },
    /// References to outputs or synthetic variables inside expressions.
    IllegalReference {
        index: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DoubleWrite { var, index } => {
                write!(f, "command {index}: double-write {var}")
            }
            Violation::UseBeforeDef { var, index } => {
                write!(f, "command {index}: {var} read before it is written")
            }
            Violation::Ownership {
                index,
                output,
                computed_on,
            } => write!(
                f,
                "command {index}: ownership violation, out@{output} computed on client {computed_on}"
            ),
            Violation::OtPlacement { index } => write!(
                f,
                "command {index}: OT must be the entire right-hand side of a send to its receiver"
            ),
            Violation::UnknownClient { client, index } => {
                write!(f, "command {index}: client {client} is not in the federation")
            }
            Violation::IllegalReference { index } => {
                write!(f, "command {index}: expression references a non-readable variable")
            }
        }
    }
}

/// Checks a protocol where every read message/reveal must be written by
/// an earlier command.
pub fn validate(pi: &Protocol, federation: &Federation) -> Vec<Violation> {
    validate_with_preprocessing(pi, federation, &BTreeSet::new())
}

/// As [`validate`], with `initial` naming messages and reveals supplied
/// by a preprocessing phase.
pub fn validate_with_preprocessing(
    pi: &Protocol,
    federation: &Federation,
    initial: &BTreeSet<Var>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut defined: BTreeSet<Var> = initial.clone();
    for (index, cmd) in pi.commands.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for client in cmd.clients() {
            if !federation.contains(&client) && seen.insert(client) {
                out.push(Violation::UnknownClient { client, index });
            }
        }
        let exprs: Vec<&Expr> = match cmd.expr() {
            Some(e) => vec![e],
            None => cmd.pred_exprs(),
        };
        if exprs.iter().any(|e| has_illegal_ref(e)) {
            out.push(Violation::IllegalReference { index });
        }
        match cmd {
            Command::Send { dest, expr, .. } => {
                let misplaced = expr.has_nested_ot()
                    || match expr {
                        Expr::Ot(ot) => ot.receiver != *dest,
                        Expr::Ot4(ot) => ot.receiver != *dest,
                        _ => false,
                    };
                if misplaced {
                    out.push(Violation::OtPlacement { index });
                }
            }
            Command::Output { client, src, expr } => {
                if client != src {
                    out.push(Violation::Ownership {
                        index,
                        output: *client,
                        computed_on: *src,
                    });
                }
                if expr.is_ot() || expr.has_nested_ot() {
                    out.push(Violation::OtPlacement { index });
                }
            }
            Command::Reveal { expr, .. } => {
                if expr.is_ot() || expr.has_nested_ot() {
                    out.push(Violation::OtPlacement { index });
                }
            }
            Command::Assert { .. } => {
                if exprs.iter().any(|e| e.is_ot() || e.has_nested_ot()) {
                    out.push(Violation::OtPlacement { index });
                }
            }
        }
        for var in cmd.reads() {
            let needs_def = matches!(var.kind(), VarKind::Mesg | VarKind::Reveal);
            if needs_def && !defined.contains(&var) {
                out.push(Violation::UseBeforeDef { var, index });
            }
        }
        if let Some(target) = cmd.target() {
            if !defined.insert(target.clone()) {
                out.push(Violation::DoubleWrite { var: target, index });
            }
        }
    }
    out
}

fn has_illegal_ref(e: &Expr) -> bool {
    match e {
        Expr::Ref(kind, _) => matches!(kind, VarKind::Out | VarKind::GlobalView),
        Expr::Bin(_, a, b) => has_illegal_ref(a) || has_illegal_ref(b),
        Expr::Not(a) => has_illegal_ref(a),
        Expr::Ot(ot) => [&ot.choice, &ot.if_one, &ot.if_zero]
            .into_iter()
            .any(has_illegal_ref),
        Expr::Ot4(ot) => ot.choice.iter().chain(ot.rows.iter()).any(has_illegal_ref),
        Expr::Const(_) | Expr::Bool(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::parse_protocol;
    use crate::lang::var::{client, federation};

    fn check(src: &str) -> Vec<Violation> {
        validate(&parse_protocol(src).unwrap(), &federation([1, 2, 3]))
    }

    #[test]
    fn ownership_violation() {
        assert_eq!(
            check("out@1 := s[x]@2;"),
            vec![Violation::Ownership {
                index: 0,
                output: client(1),
                computed_on: client(2)
            }]
        );
    }

    #[test]
    fn double_write() {
        assert_eq!(
            check("m[z]@2 := s[x]@1; m[z]@2 := r[y]@1;"),
            vec![Violation::DoubleWrite {
                var: Var::mesg("z", client(2)),
                index: 1
            }]
        );
    }

    #[test]
    fn def_before_use_and_preprocessing() {
        let pi = parse_protocol("m[z]@2 := m[a]@1;").unwrap();
        let fed = federation([1, 2]);
        assert_eq!(
            validate(&pi, &fed),
            vec![Violation::UseBeforeDef {
                var: Var::mesg("a", client(1)),
                index: 0
            }]
        );
        let initial = [Var::mesg("a", client(1))].into_iter().collect();
        assert!(validate_with_preprocessing(&pi, &fed, &initial).is_empty());
    }

    #[test]
    fn ot_placement() {
        assert!(check("m[z]@2 := OT(s[c] @ 2; r[a], r[b]) @ 1;").is_empty());
        assert_eq!(
            check("m[z]@3 := OT(s[c] @ 2; r[a], r[b]) @ 1;"),
            vec![Violation::OtPlacement { index: 0 }]
        );
        assert_eq!(
            check("m[z]@2 := OT(s[c] @ 2; r[a], r[b]) + 1 @ 1;"),
            vec![Violation::OtPlacement { index: 0 }]
        );
    }

    #[test]
    fn unknown_client() {
        assert_eq!(
            check("m[z]@4 := s[x]@1;"),
            vec![Violation::UnknownClient {
                client: client(4),
                index: 0
            }]
        );
    }
}
