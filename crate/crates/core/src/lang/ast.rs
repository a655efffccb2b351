use std::collections::BTreeSet;
use std::fmt;

use super::var::{ClientId, Federation, Var, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    And,
    Xor,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::And => "and",
            BinOp::Xor => "xor",
            BinOp::Or => "or",
        }
    }

    /// Multiplicative operators bind tighter than additive ones.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Mul | BinOp::And => 2,
            _ => 1,
        }
    }
}

/// 1-of-2 oblivious transfer: the receiver supplies `choice`, the sender
/// (the computing client of the enclosing command) supplies both branches.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ot {
    pub choice: Expr,
    pub receiver: ClientId,
    pub if_one: Expr,
    pub if_zero: Expr,
}

/// 1-of-4 oblivious transfer. Choice `(1,1)` selects `rows[0]`, `(1,0)`
/// `rows[1]`, `(0,1)` `rows[2]`, `(0,0)` `rows[3]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ot4 {
    pub choice: [Expr; 2],
    pub receiver: ClientId,
    pub rows: [Expr; 4],
}

/// Field expressions. Variable references carry no owner; the owner is
/// the client the expression is computed on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(u64),
    Bool(bool),
    Ref(VarKind, String),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Ot(Box<Ot>),
    Ot4(Box<Ot4>),
}

impl Expr {
    pub fn secret(name: &str) -> Expr {
        Expr::Ref(VarKind::Secret, name.to_string())
    }

    pub fn flip(name: &str) -> Expr {
        Expr::Ref(VarKind::Flip, name.to_string())
    }

    pub fn mesg(name: &str) -> Expr {
        Expr::Ref(VarKind::Mesg, name.to_string())
    }

    pub fn reveal(name: &str) -> Expr {
        Expr::Ref(VarKind::Reveal, name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn is_ot(&self) -> bool {
        matches!(self, Expr::Ot(_) | Expr::Ot4(_))
    }

    fn contains_ot(&self) -> bool {
        match self {
            Expr::Ot(_) | Expr::Ot4(_) => true,
            Expr::Bin(_, a, b) => a.contains_ot() || b.contains_ot(),
            Expr::Not(a) => a.contains_ot(),
            _ => false,
        }
    }

    /// True when an OT node sits anywhere other than the root, or inside
    /// another OT's operands.
    pub fn has_nested_ot(&self) -> bool {
        match self {
            Expr::Ot(ot) => {
                ot.choice.contains_ot() || ot.if_one.contains_ot() || ot.if_zero.contains_ot()
            }
            Expr::Ot4(ot) => ot
                .choice
                .iter()
                .chain(ot.rows.iter())
                .any(Expr::contains_ot),
            e => e.contains_ot(),
        }
    }

    /// `vars ε ι`: the variables read when `self` is computed on `client`.
    /// OT choice expressions are read on the receiver.
    pub fn vars(&self, client: ClientId) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(client, &mut out);
        out
    }

    pub fn collect_vars(&self, client: ClientId, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) | Expr::Bool(_) => {}
            Expr::Ref(kind, name) => {
                out.insert(Var::resolve(*kind, name, client));
            }
            Expr::Bin(_, a, b) => {
                a.collect_vars(client, out);
                b.collect_vars(client, out);
            }
            Expr::Not(a) => a.collect_vars(client, out),
            Expr::Ot(ot) => {
                ot.choice.collect_vars(ot.receiver, out);
                ot.if_one.collect_vars(client, out);
                ot.if_zero.collect_vars(client, out);
            }
            Expr::Ot4(ot) => {
                for c in &ot.choice {
                    c.collect_vars(ot.receiver, out);
                }
                for r in &ot.rows {
                    r.collect_vars(client, out);
                }
            }
        }
    }

    /// Clients named inside OT nodes.
    fn receivers(&self, out: &mut Vec<ClientId>) {
        match self {
            Expr::Bin(_, a, b) => {
                a.receivers(out);
                b.receivers(out);
            }
            Expr::Not(a) => a.receivers(out),
            Expr::Ot(ot) => {
                out.push(ot.receiver);
                ot.choice.receivers(out);
                ot.if_one.receivers(out);
                ot.if_zero.receivers(out);
            }
            Expr::Ot4(ot) => {
                out.push(ot.receiver);
                for e in ot.choice.iter().chain(ot.rows.iter()) {
                    e.receivers(out);
                }
            }
            _ => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            _ => 3,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Ref(kind, name) => write!(f, "{}[{}]", kind.prefix(), name),
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                if a.precedence() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // Left-associative: an equal-precedence right operand needs
                // parentheses.
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Not(a) => {
                if a.precedence() < 3 {
                    write!(f, "not ({a})")
                } else {
                    write!(f, "not {a}")
                }
            }
            Expr::Ot(ot) => write!(
                f,
                "OT({} @ {}; {}, {})",
                ot.choice, ot.receiver, ot.if_one, ot.if_zero
            ),
            Expr::Ot4(ot) => write!(
                f,
                "OT4({}, {} @ {}; {}, {}, {}, {})",
                ot.choice[0],
                ot.choice[1],
                ot.receiver,
                ot.rows[0],
                ot.rows[1],
                ot.rows[2],
                ot.rows[3]
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
}

/// Assertion predicates: comparisons of field expressions under boolean
/// connectives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pred {
    Cmp(CmpOp, Expr, Expr),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

impl Pred {
    pub fn eq(a: Expr, b: Expr) -> Pred {
        Pred::Cmp(CmpOp::Eq, a, b)
    }

    pub fn collect_vars(&self, client: ClientId, out: &mut BTreeSet<Var>) {
        match self {
            Pred::Cmp(_, a, b) => {
                a.collect_vars(client, out);
                b.collect_vars(client, out);
            }
            Pred::Not(p) => p.collect_vars(client, out),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.collect_vars(client, out);
                b.collect_vars(client, out);
            }
        }
    }

    fn exprs<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Pred::Cmp(_, a, b) => {
                out.push(a);
                out.push(b);
            }
            Pred::Not(p) => p.exprs(out),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.exprs(out);
                b.exprs(out);
            }
        }
    }

    fn level(&self) -> u8 {
        match self {
            Pred::Or(..) => 1,
            Pred::And(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, p: &Pred, min: u8| {
            if p.level() < min {
                write!(f, "({p})")
            } else {
                write!(f, "{p}")
            }
        };
        match self {
            Pred::Cmp(op, a, b) => {
                let sym = if *op == CmpOp::Eq { "==" } else { "!=" };
                write!(f, "{a} {sym} {b}")
            }
            Pred::Not(p) => {
                f.write_str("!")?;
                if p.level() < 3 || matches!(**p, Pred::Cmp(..)) {
                    write!(f, "({p})")
                } else {
                    write!(f, "{p}")
                }
            }
            Pred::And(a, b) => {
                wrap(f, a, 2)?;
                f.write_str(" && ")?;
                wrap(f, b, 3)
            }
            Pred::Or(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" || ")?;
                wrap(f, b, 2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Command {
    /// `m[name]@dest := expr @ src`
    Send {
        dest: ClientId,
        name: String,
        expr: Expr,
        src: ClientId,
    },
    /// `p[name] := expr @ src`
    Reveal {
        name: String,
        expr: Expr,
        src: ClientId,
    },
    /// `out@client := expr @ src`; well-formed only when `client == src`.
    Output {
        client: ClientId,
        expr: Expr,
        src: ClientId,
    },
    /// `assert(pred)@client`
    Assert { client: ClientId, pred: Pred },
}

impl Command {
    /// The variable this command writes, if any.
    pub fn target(&self) -> Option<Var> {
        match self {
            Command::Send { dest, name, .. } => Some(Var::mesg(name.clone(), *dest)),
            Command::Reveal { name, .. } => Some(Var::reveal(name.clone())),
            Command::Output { client, .. } => Some(Var::out(*client)),
            Command::Assert { .. } => None,
        }
    }

    /// The client that evaluates the command.
    pub fn computing_client(&self) -> ClientId {
        match self {
            Command::Send { src, .. }
            | Command::Reveal { src, .. }
            | Command::Output { src, .. } => *src,
            Command::Assert { client, .. } => *client,
        }
    }

    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Command::Send { expr, .. }
            | Command::Reveal { expr, .. }
            | Command::Output { expr, .. } => Some(expr),
            Command::Assert { .. } => None,
        }
    }

    pub fn is_assert(&self) -> bool {
        matches!(self, Command::Assert { .. })
    }

    /// Variables read by the command.
    pub fn reads(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        match self {
            Command::Assert { client, pred } => pred.collect_vars(*client, &mut out),
            other => {
                let client = other.computing_client();
                other
                    .expr()
                    .expect("assignment")
                    .collect_vars(client, &mut out);
            }
        }
        out
    }

    /// Every client the command mentions.
    pub fn clients(&self) -> Vec<ClientId> {
        let mut out = vec![self.computing_client()];
        match self {
            Command::Send { dest, expr, .. } => {
                out.push(*dest);
                expr.receivers(&mut out);
            }
            Command::Output { client, expr, .. } => {
                out.push(*client);
                expr.receivers(&mut out);
            }
            Command::Reveal { expr, .. } => expr.receivers(&mut out),
            Command::Assert { pred, .. } => {
                let mut exprs = Vec::new();
                pred.exprs(&mut exprs);
                for e in exprs {
                    e.receivers(&mut out);
                }
            }
        }
        out
    }

    pub(crate) fn pred_exprs(&self) -> Vec<&Expr> {
        let mut exprs = Vec::new();
        if let Command::Assert { pred, .. } = self {
            pred.exprs(&mut exprs);
        }
        exprs
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Send {
                dest,
                name,
                expr,
                src,
            } => write!(f, "m[{name}]@{dest} := {} @ {src}", paren_rhs(expr)),
            Command::Reveal { name, expr, src } => {
                write!(f, "p[{name}] := {} @ {src}", paren_rhs(expr))
            }
            Command::Output { client, expr, src } => {
                write!(f, "out@{client} := {} @ {src}", paren_rhs(expr))
            }
            Command::Assert { client, pred } => write!(f, "assert({pred})@{client}"),
        }
    }
}

fn paren_rhs(e: &Expr) -> String {
    match e {
        Expr::Bin(..) => format!("({e})"),
        _ => e.to_string(),
    }
}

/// An Overture protocol: an ordered command sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Protocol {
    pub commands: Vec<Command>,
}

impl Protocol {
    pub fn new(commands: Vec<Command>) -> Self {
        Protocol { commands }
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn has_asserts(&self) -> bool {
        self.commands.iter().any(Command::is_assert)
    }

    fn all_reads(&self) -> BTreeSet<Var> {
        self.commands.iter().flat_map(|c| c.reads()).collect()
    }

    /// Variables written by some command, in no particular order.
    pub fn written(&self) -> BTreeSet<Var> {
        self.commands.iter().filter_map(Command::target).collect()
    }

    pub fn secrets(&self) -> BTreeSet<Var> {
        self.all_reads()
            .into_iter()
            .filter(|x| x.kind() == VarKind::Secret)
            .collect()
    }

    pub fn flips(&self) -> BTreeSet<Var> {
        self.all_reads()
            .into_iter()
            .filter(|x| x.kind() == VarKind::Flip)
            .collect()
    }

    /// Messages and reveals read but never written: values a
    /// preprocessing phase must supply.
    pub fn preprocessed(&self) -> BTreeSet<Var> {
        let written = self.written();
        self.all_reads()
            .into_iter()
            .filter(|x| matches!(x.kind(), VarKind::Mesg | VarKind::Reveal))
            .filter(|x| !written.contains(x))
            .collect()
    }

    /// `views(π) = M ∪ P`, the written messages and reveals.
    pub fn views(&self) -> BTreeSet<Var> {
        self.written()
            .into_iter()
            .filter(|x| matches!(x.kind(), VarKind::Mesg | VarKind::Reveal))
            .collect()
    }

    pub fn outputs(&self) -> BTreeSet<Var> {
        self.written()
            .into_iter()
            .filter(|x| x.kind() == VarKind::Out)
            .collect()
    }

    /// `iovars(π) = S ∪ M ∪ P ∪ O`.
    pub fn iovars(&self) -> BTreeSet<Var> {
        let mut out = self.secrets();
        out.extend(self.written());
        out
    }

    /// Every client mentioned by the protocol.
    pub fn clients(&self) -> Federation {
        self.commands.iter().flat_map(|c| c.clients()).collect()
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.commands {
            writeln!(f, "{c};")?;
        }
        Ok(())
    }
}

/// An honest/corrupt split of a federation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    pub honest: Federation,
    pub corrupt: Federation,
}

impl Partition {
    /// `None` when `corrupt` is not a subset of `federation`.
    pub fn new(federation: &Federation, corrupt: &Federation) -> Option<Partition> {
        corrupt.is_subset(federation).then(|| Partition {
            honest: federation.difference(corrupt).copied().collect(),
            corrupt: corrupt.clone(),
        })
    }

    /// Every split with nonempty honest and corrupt sides, ordered by
    /// corrupt-set size then lexicographically.
    pub fn all_proper(federation: &Federation) -> Vec<Partition> {
        let clients: Vec<ClientId> = federation.iter().copied().collect();
        let n = clients.len();
        let mut out: Vec<Partition> = (1u64..(1u64 << n).saturating_sub(1))
            .map(|mask| {
                let corrupt = clients
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, c)| *c)
                    .collect();
                Partition::new(federation, &corrupt).expect("subset")
            })
            .collect();
        out.sort_by(|a, b| {
            (a.corrupt.len(), a.corrupt.iter().collect::<Vec<_>>())
                .cmp(&(b.corrupt.len(), b.corrupt.iter().collect::<Vec<_>>()))
        });
        out
    }

    pub fn is_corrupt(&self, c: ClientId) -> bool {
        self.corrupt.contains(&c)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &Federation| {
            s.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "H={{{}}} C={{{}}}",
            show(&self.honest),
            show(&self.corrupt)
        )
    }
}

fn view_flows(pi: &Protocol, from: &Federation, to: &Federation) -> BTreeSet<Var> {
    pi.commands
        .iter()
        .filter_map(|c| match c {
            Command::Send {
                dest, name, src, ..
            } if from.contains(src) && to.contains(dest) => Some(Var::mesg(name.clone(), *dest)),
            Command::Reveal { name, src, .. } if from.contains(src) && !to.is_empty() => {
                Some(Var::reveal(name.clone()))
            }
            _ => None,
        })
        .collect()
}

/// `V_{H▷C}`: honest reveals and honest-to-corrupt messages.
pub fn corrupt_views(pi: &Protocol, part: &Partition) -> BTreeSet<Var> {
    view_flows(pi, &part.honest, &part.corrupt)
}

/// `V_{C▷H}`: corrupt reveals and corrupt-to-honest messages.
pub fn honest_views(pi: &Protocol, part: &Partition) -> BTreeSet<Var> {
    view_flows(pi, &part.corrupt, &part.honest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::var::{client, federation};

    #[test]
    fn partitions_of_three() {
        let parts = Partition::all_proper(&federation([1, 2, 3]));
        assert_eq!(parts.len(), 6);
        assert_eq!(parts[0].corrupt, federation([1]));
        assert_eq!(parts[5].corrupt, federation([2, 3]));
        assert_eq!(parts[0].to_string(), "H={2,3} C={1}");
    }

    #[test]
    fn view_sets_of_single_send() {
        let pi = Protocol::new(vec![Command::Send {
            dest: client(2),
            name: "z".into(),
            expr: Expr::secret("x"),
            src: client(1),
        }]);
        let fed = federation([1, 2]);
        let part = Partition::new(&fed, &federation([1])).unwrap();
        assert!(corrupt_views(&pi, &part).is_empty());
        assert_eq!(
            honest_views(&pi, &part),
            [Var::mesg("z", client(2))].into_iter().collect()
        );
        let nobody = Partition::new(&fed, &Federation::new()).unwrap();
        assert!(corrupt_views(&pi, &nobody).is_empty());
    }

    #[test]
    fn expression_printing_respects_precedence() {
        let e = Expr::bin(
            BinOp::Xor,
            Expr::flip("r"),
            Expr::bin(
                BinOp::And,
                Expr::bin(BinOp::Xor, Expr::mesg("x"), Expr::Bool(true)),
                Expr::mesg("y"),
            ),
        );
        assert_eq!(e.to_string(), "r[r] xor (m[x] xor true) and m[y]");
        let left = Expr::bin(
            BinOp::Sub,
            Expr::secret("a"),
            Expr::bin(BinOp::Sub, Expr::secret("b"), Expr::secret("c")),
        );
        assert_eq!(left.to_string(), "s[a] - (s[b] - s[c])");
    }
}
