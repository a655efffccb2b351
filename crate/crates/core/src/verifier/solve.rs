//! Set-based evaluation: filtering memory sets by F2 expressions, and the
//! truth-table fold that computes all runs of an assert-free protocol.

use std::collections::BTreeSet;

use crate::dist::Preprocessing;
use crate::field::Modulus;
use crate::lang::{mems, BinOp, ClientId, Command, EvalError, Expr, Memory, Protocol, Value, Var};

/// A set of memories over a common domain.
pub type MemSet = BTreeSet<Memory>;

fn bit_of(m: &Memory, var: &Var) -> Result<bool, EvalError> {
    match m.get(var) {
        None => Err(EvalError::Unbound(var.clone())),
        Some(Value::Bottom) => Err(EvalError::Bottom(var.clone())),
        Some(Value::Elem(e)) => Ok(e.value() % 2 == 1),
    }
}

/// The members of `sigma` on which `e`, computed by `client`, is 1.
pub fn solve(sigma: &MemSet, e: &Expr, client: ClientId) -> Result<MemSet, EvalError> {
    match e {
        Expr::Const(v) => Ok(if v % 2 == 1 {
            sigma.clone()
        } else {
            MemSet::new()
        }),
        Expr::Bool(b) => Ok(if *b { sigma.clone() } else { MemSet::new() }),
        Expr::Ref(kind, name) => {
            let var = Var::resolve(*kind, name, client);
            let mut out = MemSet::new();
            for m in sigma {
                if bit_of(m, &var)? {
                    out.insert(m.clone());
                }
            }
            Ok(out)
        }
        Expr::Not(a) => {
            let sa = solve(sigma, a, client)?;
            Ok(sigma.difference(&sa).cloned().collect())
        }
        Expr::Bin(op, a, b) => {
            let sa = solve(sigma, a, client)?;
            let sb = solve(sigma, b, client)?;
            Ok(match op {
                BinOp::Add | BinOp::Sub | BinOp::Xor => {
                    sa.symmetric_difference(&sb).cloned().collect()
                }
                BinOp::Mul | BinOp::And => sa.intersection(&sb).cloned().collect(),
                BinOp::Or => sa.union(&sb).cloned().collect(),
            })
        }
        Expr::Ot(ot) => {
            let chosen = solve(sigma, &ot.choice, ot.receiver)?;
            let one = solve(sigma, &ot.if_one, client)?;
            let zero = solve(sigma, &ot.if_zero, client)?;
            let unchosen: MemSet = sigma.difference(&chosen).cloned().collect();
            Ok(chosen
                .intersection(&one)
                .chain(unchosen.intersection(&zero))
                .cloned()
                .collect())
        }
        Expr::Ot4(ot) => ot4_solve(
            sigma,
            [&ot.choice[0], &ot.choice[1]],
            ot.receiver,
            [&ot.rows[0], &ot.rows[1], &ot.rows[2], &ot.rows[3]],
            client,
        ),
    }
}

/// 1-of-4 transfer as two levels of 1-of-2 transfer: the first choice
/// picks between row pairs (1,2) and (3,4), the second within the pair.
pub fn ot4_solve(
    sigma: &MemSet,
    choice: [&Expr; 2],
    receiver: ClientId,
    rows: [&Expr; 4],
    sender: ClientId,
) -> Result<MemSet, EvalError> {
    let c1 = solve(sigma, choice[0], receiver)?;
    let c2 = solve(sigma, choice[1], receiver)?;
    let not = |s: &MemSet| -> MemSet { sigma.difference(s).cloned().collect() };
    let pick = |c: &MemSet, a: &MemSet, b: &MemSet| -> MemSet {
        let nc = not(c);
        c.intersection(a)
            .chain(nc.intersection(b))
            .cloned()
            .collect()
    };
    let r: Vec<MemSet> = rows
        .iter()
        .map(|e| solve(sigma, e, sender))
        .collect::<Result<_, _>>()?;
    let high = pick(&c2, &r[0], &r[1]);
    let low = pick(&c2, &r[2], &r[3]);
    Ok(pick(&c1, &high, &low))
}

/// One fold step: extends every memory with `x`, set to 1 exactly on the
/// members satisfying the command's expression.
pub fn tt_step(sigma: MemSet, cmd: &Command) -> Result<MemSet, EvalError> {
    let (Some(target), Some(e)) = (cmd.target(), cmd.expr()) else {
        return Err(EvalError::Empty);
    };
    let yes = solve(&sigma, e, cmd.computing_client())?;
    let mut out = MemSet::new();
    for m in sigma {
        let bit = yes.contains(&m);
        out.insert(m.with(target.clone(), Value::bit(bit)));
    }
    Ok(out)
}

/// Initial memories: every preprocessing memory combined with every
/// assignment to the flips it does not fix.
pub fn initial_memories(pi: &Protocol, preproc: &Preprocessing) -> Result<MemSet, EvalError> {
    let flips: Vec<Var> = pi
        .flips()
        .into_iter()
        .filter(|x| !preproc.vars().contains(x))
        .collect();
    let mut out = MemSet::new();
    for m in preproc.memories() {
        for tape in mems(&flips, Modulus::F2) {
            out.insert(m.union(&tape)?);
        }
    }
    Ok(out)
}

/// All runs of an assert-free protocol by folding [`tt_step`] over its
/// commands.
pub fn runs_tt(pi: &Protocol, preproc: &Preprocessing) -> Result<MemSet, RunsError> {
    if let Some(index) = pi.commands.iter().position(Command::is_assert) {
        return Err(RunsError::Assert(index));
    }
    let mut sigma = initial_memories(pi, preproc)?;
    for cmd in &pi.commands {
        sigma = tt_step(sigma, cmd)?;
    }
    Ok(sigma)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunsError {
    #[error("command {0} is an assertion; use the adversarial enumeration instead")]
    Assert(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<crate::lang::MemoryError> for RunsError {
    fn from(e: crate::lang::MemoryError) -> Self {
        RunsError::Eval(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{client, eval_expr, parse_expr, parse_protocol, run};

    fn sigma(vars: &[Var]) -> MemSet {
        mems(vars, Modulus::F2).collect()
    }

    #[test]
    fn solve_examples() {
        let x = Var::secret("x", client(1));
        let s = sigma(std::slice::from_ref(&x));
        let one = solve(&s, &parse_expr("s[x]").unwrap(), client(1)).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.iter().next().unwrap().get(&x), Some(Value::bit(true)));
        assert!(solve(&s, &parse_expr("s[x] xor s[x]").unwrap(), client(1))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn ot_solve_matches_case_analysis() {
        let vars = [
            Var::secret("c", client(2)),
            Var::flip("a", client(1)),
            Var::flip("b", client(1)),
        ];
        let s = sigma(&vars);
        let e = parse_expr("OT(s[c] @ 2; r[a], r[b])").unwrap();
        let got = solve(&s, &e, client(1)).unwrap();
        let expected: MemSet = s
            .iter()
            .filter(|m| {
                let bit = |i: usize| m.get(&vars[i]) == Some(Value::bit(true));
                if bit(0) {
                    bit(1)
                } else {
                    bit(2)
                }
            })
            .cloned()
            .collect();
        assert_eq!(got.len(), 4);
        assert_eq!(got, expected);
    }

    #[test]
    fn ot4_rows() {
        let vars = [Var::secret("c", client(2)), Var::secret("d", client(2))];
        let s = sigma(&vars);
        let table = |rows: &str| parse_expr(&format!("OT4(s[c], s[d] @ 2; {rows})")).unwrap();
        for (i, m) in s.iter().enumerate() {
            let only = MemSet::from([m.clone()]);
            let e = table("1, 0, 0, 0");
            let selected = !solve(&only, &e, client(1)).unwrap().is_empty();
            // mems order is (c,d) = 00, 01, 10, 11.
            assert_eq!(selected, i == 3);
        }
        assert!(solve(&s, &table("0, 0, 0, 0"), client(1))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn solve_agrees_with_evaluation() {
        let vars = [
            Var::secret("x", client(1)),
            Var::flip("y", client(1)),
            Var::mesg("z", client(1)),
        ];
        let s = sigma(&vars);
        for src in [
            "s[x] and not r[y] or m[z]",
            "s[x] + r[y] * m[z] - 1",
            "not (s[x] xor m[z]) and true",
        ] {
            let e = parse_expr(src).unwrap();
            let got = solve(&s, &e, client(1)).unwrap();
            for m in &s {
                let v = eval_expr(m, &e, client(1), Modulus::F2).unwrap().value();
                assert_eq!(got.contains(m), v == 1, "{src} on {m}");
            }
        }
    }

    #[test]
    fn fold_equals_run_sweep() {
        let pi = parse_protocol(
            "m[z]@2 := (s[x] xor r[y])@1; m[w]@1 := (m[z] and s[v])@2; out@1 := m[w]@1;",
        )
        .unwrap();
        let pre = Preprocessing::default_for(&pi);
        let folded = runs_tt(&pi, &pre).unwrap();
        let swept: MemSet = initial_memories(&pi, &pre)
            .unwrap()
            .iter()
            .map(|m0| run(m0, &pi, Modulus::F2).unwrap())
            .collect();
        assert_eq!(folded.len(), 8);
        assert_eq!(folded, swept);
    }

    #[test]
    fn fold_rejects_asserts() {
        let pi = parse_protocol("assert(s[x] == 0)@1;").unwrap();
        assert_eq!(
            runs_tt(&pi, &Preprocessing::default_for(&pi)),
            Err(RunsError::Assert(0))
        );
    }
}
