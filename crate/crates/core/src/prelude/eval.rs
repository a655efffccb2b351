//! Substitution-based small-step evaluation. Each step contracts the
//! leftmost innermost redex; assignments append to the residual protocol.

use super::{Codebase, MetaExpr, MetaPred, MetaValue, PreludeError};
use crate::lang::{ClientId, Command, Expr, Ot, Ot4, Pred, Protocol};

/// Default bound on reduction steps.
pub const STEP_LIMIT: u64 = 1_000_000;

/// A configuration: the protocol emitted so far and the remaining
/// expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaConfig {
    pub pi: Protocol,
    pub expr: MetaExpr,
}

impl MetaConfig {
    pub fn new(expr: MetaExpr) -> MetaConfig {
        MetaConfig {
            pi: Protocol::default(),
            expr,
        }
    }
}

fn pred_leaves<'a>(p: &'a mut MetaPred, out: &mut Vec<&'a mut MetaExpr>) {
    match p {
        MetaPred::Cmp(_, a, b) => {
            out.push(a);
            out.push(b);
        }
        MetaPred::Not(p) => pred_leaves(p, out),
        MetaPred::And(a, b) | MetaPred::Or(a, b) => {
            pred_leaves(a, out);
            pred_leaves(b, out);
        }
    }
}

/// Subexpressions in evaluation order. With `contexts` set, only those
/// that are evaluation contexts: the bound term of a `let` and the first
/// term of a sequence.
fn children(e: &mut MetaExpr, contexts: bool) -> Vec<&mut MetaExpr> {
    match e {
        MetaExpr::Val(_) | MetaExpr::Var(_) => vec![],
        MetaExpr::Call(_, args) => args.iter_mut().collect(),
        MetaExpr::Let(_, bound, body) => {
            if contexts {
                vec![&mut **bound]
            } else {
                vec![&mut **bound, &mut **body]
            }
        }
        MetaExpr::Seq(a, b) => {
            if contexts {
                vec![&mut **a]
            } else {
                vec![&mut **a, &mut **b]
            }
        }
        MetaExpr::Record(fields) => fields.iter_mut().map(|(_, v)| v).collect(),
        MetaExpr::Proj(a, _) | MetaExpr::Ref(_, a) | MetaExpr::Not(a) => vec![&mut **a],
        MetaExpr::Concat(a, b) | MetaExpr::Bin(_, a, b) | MetaExpr::At(a, b) => {
            vec![&mut **a, &mut **b]
        }
        MetaExpr::Ot(xs) => xs.iter_mut().collect(),
        MetaExpr::Ot4(xs) => xs.iter_mut().collect(),
        MetaExpr::Ot4Call(xs) => xs.iter_mut().collect(),
        MetaExpr::Send { name, dest, rhs } => vec![&mut **name, &mut **dest, &mut **rhs],
        MetaExpr::Reveal { name, rhs } => vec![&mut **name, &mut **rhs],
        MetaExpr::Output { client, rhs } => vec![&mut **client, &mut **rhs],
        MetaExpr::Assert { pred, client } => {
            let mut out = Vec::new();
            pred_leaves(pred, &mut out);
            out.push(&mut **client);
            out
        }
    }
}

/// `e[v/y]`: replaces free occurrences of `y`.
pub fn subst(mut e: MetaExpr, y: &str, v: &MetaValue) -> MetaExpr {
    subst_in(&mut e, y, v);
    e
}

fn subst_in(e: &mut MetaExpr, y: &str, v: &MetaValue) {
    match e {
        MetaExpr::Var(x) if x == y => *e = MetaExpr::Val(v.clone()),
        MetaExpr::Let(x, bound, body) => {
            subst_in(bound, y, v);
            if x != y {
                subst_in(body, y, v);
            }
        }
        _ => {
            for c in children(e, false) {
                subst_in(c, y, v);
            }
        }
    }
}

fn type_error<T>(msg: String) -> Result<T, PreludeError> {
    Err(PreludeError::Type(msg))
}

fn value(e: MetaExpr) -> MetaValue {
    match e {
        MetaExpr::Val(v) => v,
        other => unreachable!("contracted a redex with a non-value operand: {other:?}"),
    }
}

fn to_expr(v: MetaValue) -> Result<Expr, PreludeError> {
    match v {
        MetaValue::Expr(e) => Ok(e),
        MetaValue::Client(c) => Ok(Expr::Const(c.get().into())),
        other => type_error(format!("expected a field expression, found {other}")),
    }
}

fn to_client(v: MetaValue) -> Result<ClientId, PreludeError> {
    match v {
        MetaValue::Client(c) => Ok(c),
        MetaValue::Expr(Expr::Const(n)) => u32::try_from(n)
            .ok()
            .and_then(ClientId::new)
            .map_or_else(|| type_error(format!("{n} is not a client id")), Ok),
        other => type_error(format!("expected a client id, found {other}")),
    }
}

/// Strings name variables; integer literals and message handles coerce to
/// their text.
fn to_name(v: MetaValue) -> Result<String, PreludeError> {
    match v {
        MetaValue::Str(s) => Ok(s),
        MetaValue::Expr(Expr::Const(n)) => Ok(n.to_string()),
        MetaValue::Expr(Expr::Ref(_, n)) => Ok(n),
        other => type_error(format!("expected a string, found {other}")),
    }
}

fn located(v: MetaValue) -> Result<(Expr, ClientId), PreludeError> {
    match v {
        MetaValue::Located(e, c) => Ok((e, c)),
        other => type_error(format!(
            "the right side of an assignment needs `@ client`, found {other}"
        )),
    }
}

fn field(v: MetaValue, name: &str) -> Result<MetaValue, PreludeError> {
    match v {
        MetaValue::Record(fields) => fields
            .into_iter()
            .find(|(f, _)| f == name)
            .map(|(_, v)| v)
            .ok_or_else(|| PreludeError::MissingField(name.to_string())),
        other => type_error(format!("projection `.{name}` of non-record {other}")),
    }
}

fn build_pred(p: MetaPred) -> Result<Pred, PreludeError> {
    Ok(match p {
        MetaPred::Cmp(op, a, b) => Pred::Cmp(op, to_expr(value(a))?, to_expr(value(b))?),
        MetaPred::Not(p) => Pred::Not(Box::new(build_pred(*p)?)),
        MetaPred::And(a, b) => Pred::And(Box::new(build_pred(*a)?), Box::new(build_pred(*b)?)),
        MetaPred::Or(a, b) => Pred::Or(Box::new(build_pred(*a)?), Box::new(build_pred(*b)?)),
    })
}

fn val(v: MetaValue) -> MetaExpr {
    MetaExpr::Val(v)
}

/// Contracts a redex whose evaluation-context operands are all values.
fn contract(cb: &Codebase, e: MetaExpr, out: &mut Vec<Command>) -> Result<MetaExpr, PreludeError> {
    Ok(match e {
        MetaExpr::Val(_) => unreachable!("values do not reduce"),
        MetaExpr::Var(y) => return Err(PreludeError::Unbound(y)),
        MetaExpr::Call(f, args) => {
            let decl = cb
                .get(&f)
                .ok_or_else(|| PreludeError::UnknownFunction(f.clone()))?;
            if decl.params.len() != args.len() {
                return Err(PreludeError::Arity {
                    name: f,
                    expected: decl.params.len(),
                    given: args.len(),
                });
            }
            let mut body = decl.body.clone();
            for (p, a) in decl.params.iter().zip(args) {
                body = subst(body, p, &value(a));
            }
            body
        }
        MetaExpr::Let(y, bound, body) => subst(*body, &y, &value(*bound)),
        MetaExpr::Seq(_, rest) => *rest,
        MetaExpr::Record(fields) => val(MetaValue::Record(
            fields.into_iter().map(|(f, v)| (f, value(v))).collect(),
        )),
        MetaExpr::Proj(r, f) => val(field(value(*r), &f)?),
        MetaExpr::Concat(a, b) => {
            let mut s = to_name(value(*a))?;
            s.push_str(&to_name(value(*b))?);
            val(MetaValue::Str(s))
        }
        MetaExpr::Ref(kind, name) => val(MetaValue::Expr(Expr::Ref(kind, to_name(value(*name))?))),
        MetaExpr::Bin(op, a, b) => val(MetaValue::Expr(Expr::bin(
            op,
            to_expr(value(*a))?,
            to_expr(value(*b))?,
        ))),
        MetaExpr::Not(a) => val(MetaValue::Expr(Expr::not(to_expr(value(*a))?))),
        MetaExpr::At(e, c) => val(MetaValue::Located(
            to_expr(value(*e))?,
            to_client(value(*c))?,
        )),
        MetaExpr::Ot(xs) => {
            let [choice, receiver, one, zero] = *xs;
            val(MetaValue::Expr(Expr::Ot(Box::new(Ot {
                choice: to_expr(value(choice))?,
                receiver: to_client(value(receiver))?,
                if_one: to_expr(value(one))?,
                if_zero: to_expr(value(zero))?,
            }))))
        }
        MetaExpr::Ot4(xs) => {
            let [c1, c2, receiver, r1, r2, r3, r4] = *xs;
            val(MetaValue::Expr(Expr::Ot4(Box::new(Ot4 {
                choice: [to_expr(value(c1))?, to_expr(value(c2))?],
                receiver: to_client(value(receiver))?,
                rows: [
                    to_expr(value(r1))?,
                    to_expr(value(r2))?,
                    to_expr(value(r3))?,
                    to_expr(value(r4))?,
                ],
            }))))
        }
        MetaExpr::Ot4Call(xs) => {
            let [c1, c2, table, receiver, sender] = *xs;
            let table = value(table);
            let row = |name: &str| to_expr(field(table.clone(), name)?);
            let ot = Ot4 {
                choice: [to_expr(value(c1))?, to_expr(value(c2))?],
                receiver: to_client(value(receiver))?,
                rows: [row("row1")?, row("row2")?, row("row3")?, row("row4")?],
            };
            val(MetaValue::Located(
                Expr::Ot4(Box::new(ot)),
                to_client(value(sender))?,
            ))
        }
        MetaExpr::Send { name, dest, rhs } => {
            let name = to_name(value(*name))?;
            let dest = to_client(value(*dest))?;
            let (expr, src) = located(value(*rhs))?;
            out.push(Command::Send {
                dest,
                name,
                expr,
                src,
            });
            MetaExpr::unit()
        }
        MetaExpr::Reveal { name, rhs } => {
            let name = to_name(value(*name))?;
            let (expr, src) = located(value(*rhs))?;
            out.push(Command::Reveal { name, expr, src });
            MetaExpr::unit()
        }
        MetaExpr::Output { client, rhs } => {
            let client = to_client(value(*client))?;
            let (expr, src) = located(value(*rhs))?;
            out.push(Command::Output { client, expr, src });
            MetaExpr::unit()
        }
        MetaExpr::Assert { pred, client } => {
            let client = to_client(value(*client))?;
            out.push(Command::Assert {
                client,
                pred: build_pred(*pred)?,
            });
            MetaExpr::unit()
        }
    })
}

fn reduce(cb: &Codebase, e: &mut MetaExpr, out: &mut Vec<Command>) -> Result<(), PreludeError> {
    for c in children(e, true) {
        if c.as_value().is_none() {
            return reduce(cb, c, out);
        }
    }
    let redex = std::mem::replace(e, MetaExpr::unit());
    *e = contract(cb, redex, out)?;
    Ok(())
}

/// One reduction step; `false` when the expression is already a value.
pub fn step(cb: &Codebase, cfg: &mut MetaConfig) -> Result<bool, PreludeError> {
    if cfg.expr.as_value().is_some() {
        return Ok(false);
    }
    reduce(cb, &mut cfg.expr, &mut cfg.pi.commands)?;
    Ok(true)
}

/// Evaluates `e` to a value, returning the residual protocol.
pub fn eval_meta(cb: &Codebase, e: MetaExpr) -> Result<(Protocol, MetaValue), PreludeError> {
    eval_meta_with_limit(cb, e, STEP_LIMIT)
}

pub fn eval_meta_with_limit(
    cb: &Codebase,
    e: MetaExpr,
    limit: u64,
) -> Result<(Protocol, MetaValue), PreludeError> {
    let mut cfg = MetaConfig::new(e);
    let mut steps = 0u64;
    while step(cb, &mut cfg)? {
        steps += 1;
        if steps > limit {
            return Err(PreludeError::StepLimit(limit));
        }
    }
    let MetaExpr::Val(v) = cfg.expr else {
        unreachable!("evaluation stops at values")
    };
    Ok((cfg.pi, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_protocol;
    use crate::prelude::parse_prelude;

    fn eval(src: &str) -> Result<(Protocol, MetaValue), PreludeError> {
        let (cb, main) = parse_prelude(src)?;
        eval_meta(&cb, main)
    }

    const ENCODE: &str = "encodegmw(in, i1, i2) {
        m[in]@i2 := (s[in] xor r[in])@i2;
        m[in]@i1 := r[in]@i2;
        m[in]
    }";

    #[test]
    fn encode_residual() {
        let (pi, v) = eval(&format!("{ENCODE} encodegmw(\"s1\", 2, 1)")).unwrap();
        let expected =
            parse_protocol("m[s1]@1 := (s[s1] xor r[s1])@1; m[s1]@2 := r[s1]@1;").unwrap();
        assert_eq!(pi, expected);
        assert_eq!(v, MetaValue::Expr(Expr::mesg("s1")));
    }

    #[test]
    fn unit_program() {
        let (pi, v) = eval_meta(&Codebase::default(), MetaExpr::unit()).unwrap();
        assert!(pi.is_empty());
        assert_eq!(v, MetaValue::Unit);
        assert_eq!(eval("()").unwrap().1, MetaValue::Unit);
    }

    #[test]
    fn substitution() {
        let (_, e) = parse_prelude("y ++ \"s\"").unwrap();
        let d = MetaValue::Str("d".into());
        let e = subst(e, "y", &d);
        assert_eq!(
            eval_meta(&Codebase::default(), e).unwrap().1,
            MetaValue::Str("ds".into())
        );
        let (_, shadow) = parse_prelude("let y = 1 in y").unwrap();
        assert_eq!(subst(shadow.clone(), "y", &d), shadow);
        let (_, call) = parse_prelude("f(y)").unwrap();
        let three = MetaValue::Expr(Expr::Const(3));
        assert_eq!(
            subst(call, "y", &three),
            MetaExpr::Call("f".into(), vec![MetaExpr::Val(three)])
        );
    }

    #[test]
    fn errors() {
        assert_eq!(eval("x"), Err(PreludeError::Unbound("x".into())));
        assert_eq!(eval("f()"), Err(PreludeError::UnknownFunction("f".into())));
        assert!(matches!(
            eval("f(a) { a } f()"),
            Err(PreludeError::Arity { .. })
        ));
        assert_eq!(
            eval("{ a = 1 }.b"),
            Err(PreludeError::MissingField("b".into()))
        );
        assert!(matches!(
            eval("m[\"x\"]@1 := 1"),
            Err(PreludeError::Type(_))
        ));
        let (cb, main) = parse_prelude("loop(x) { loop(x) } loop(1)").unwrap();
        assert_eq!(
            eval_meta_with_limit(&cb, main, 1000),
            Err(PreludeError::StepLimit(1000))
        );
    }

    #[test]
    fn ot4_call_form_locates_at_the_sender() {
        let src = "let t = { row1 = 1; row2 = 0; row3 = 0; row4 = 1 } in \
                   m[\"z\"]@2 := OT4(m[\"a\"], m[\"b\"], t, 2, 1)";
        let (pi, _) = eval(src).unwrap();
        let expected = parse_protocol("m[z]@2 := OT4(m[a], m[b] @ 2; 1, 0, 0, 1)@1;").unwrap();
        assert_eq!(pi, expected);
    }

    #[test]
    fn residuation_is_append_only() {
        let src = format!(
            "{ENCODE} let a = encodegmw(\"a\", 2, 1) in let b = encodegmw(\"b\", 1, 2) in \
             m[\"c\"]@1 := (a and b)@1; assert(m[\"c\"] == 0)@1"
        );
        let (cb, main) = parse_prelude(&src).unwrap();
        let mut cfg = MetaConfig::new(main);
        let mut prefixes = vec![];
        while step(&cb, &mut cfg).unwrap() {
            prefixes.push(cfg.pi.commands.clone());
        }
        let last = cfg.pi.commands;
        assert_eq!(last.len(), 6);
        assert!(prefixes.iter().all(|p| last.starts_with(p)));
    }
}
