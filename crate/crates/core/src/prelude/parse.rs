//! Parser for `.pre` sources: function declarations followed by an
//! optional main expression.

use super::{Codebase, FunDecl, MetaExpr, MetaPred, MetaValue, PreludeError};
use crate::lang::{BinOp, CmpOp, Expr, VarKind};
use crate::lex::{Cursor, SyntaxError, Tok};

type PResult<T> = Result<T, SyntaxError>;

/// Splits `source` into its codebase and main expression (unit when
/// absent).
pub fn parse_prelude(source: &str) -> Result<(Codebase, MetaExpr), PreludeError> {
    let mut cur = Cursor::new(source)?;
    let mut codebase = Codebase::default();
    while let Some(decl) = declaration(&mut cur)? {
        if codebase.get(&decl.name).is_some() {
            return Err(SyntaxError {
                pos: cur.pos(),
                msg: format!("function `{}` is declared twice", decl.name),
            }
            .into());
        }
        codebase.decls.push(decl);
    }
    let main = if cur.at_end() {
        MetaExpr::unit()
    } else {
        seq(&mut cur)?
    };
    if !cur.at_end() {
        return Err(cur.unexpected::<()>().unwrap_err().into());
    }
    Ok((codebase, main))
}

fn ident(w: &str) -> bool {
    w.chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
}

/// `f(a, b) { body }`, or `None` when the next tokens are not a
/// declaration.
fn declaration(cur: &mut Cursor) -> PResult<Option<FunDecl>> {
    let mark = cur.mark();
    let Some(Tok::Word(name)) = cur.peek().cloned() else {
        return Ok(None);
    };
    if !ident(&name) || cur.peek_at(1) != Some(&Tok::Sym("(")) {
        return Ok(None);
    }
    cur.next();
    cur.next();
    let mut params = Vec::new();
    if !cur.eat_sym(")") {
        loop {
            match cur.next() {
                Some(Tok::Word(p)) if ident(&p) => params.push(p),
                _ => {
                    cur.reset(mark);
                    return Ok(None);
                }
            }
            if cur.eat_sym(")") {
                break;
            }
            if !cur.eat_sym(",") {
                cur.reset(mark);
                return Ok(None);
            }
        }
    }
    if !cur.eat_sym("{") {
        cur.reset(mark);
        return Ok(None);
    }
    let body = if cur.is_sym("}") {
        MetaExpr::unit()
    } else {
        seq(cur)?
    };
    cur.expect_sym("}")?;
    Ok(Some(FunDecl { name, params, body }))
}

fn ends_block(cur: &Cursor) -> bool {
    cur.at_end() || cur.is_sym("}") || cur.is_sym(")")
}

/// `e1; e2; ...` with an optional trailing `;`.
fn seq(cur: &mut Cursor) -> PResult<MetaExpr> {
    let first = stmt(cur)?;
    if cur.eat_sym(";") {
        let rest = if ends_block(cur) {
            MetaExpr::unit()
        } else {
            seq(cur)?
        };
        return Ok(MetaExpr::Seq(Box::new(first), Box::new(rest)));
    }
    Ok(first)
}

fn stmt(cur: &mut Cursor) -> PResult<MetaExpr> {
    if cur.eat_word("let") {
        let name = cur.expect_word()?;
        cur.expect_sym("=")?;
        let bound = stmt(cur)?;
        if !cur.eat_word("in") {
            return cur.error(format!("expected `in`, found {}", found(cur)));
        }
        let body = seq(cur)?;
        return Ok(MetaExpr::Let(name, Box::new(bound), Box::new(body)));
    }
    if cur.eat_word("assert") {
        cur.expect_sym("(")?;
        let pred = pred(cur)?;
        cur.expect_sym(")")?;
        cur.expect_sym("@")?;
        let client = client_atom(cur)?;
        return Ok(MetaExpr::Assert {
            pred: Box::new(pred),
            client: Box::new(client),
        });
    }
    if cur.is_word("out") && cur.peek_at(1) == Some(&Tok::Sym("@")) {
        cur.next();
        cur.next();
        let client = client_atom(cur)?;
        cur.expect_sym(":=")?;
        let rhs = rhs(cur)?;
        return Ok(MetaExpr::Output {
            client: Box::new(client),
            rhs: Box::new(rhs),
        });
    }
    if (cur.is_word("m") || cur.is_word("p")) && cur.peek_at(1) == Some(&Tok::Sym("[")) {
        let mark = cur.mark();
        let is_m = cur.is_word("m");
        cur.next();
        let name = bracket(cur)?;
        if is_m && cur.eat_sym("@") {
            let dest = client_atom(cur)?;
            if cur.eat_sym(":=") {
                let rhs = rhs(cur)?;
                return Ok(MetaExpr::Send {
                    name: Box::new(name),
                    dest: Box::new(dest),
                    rhs: Box::new(rhs),
                });
            }
        } else if !is_m && cur.eat_sym(":=") {
            let rhs = rhs(cur)?;
            return Ok(MetaExpr::Reveal {
                name: Box::new(name),
                rhs: Box::new(rhs),
            });
        }
        cur.reset(mark);
    }
    rhs(cur)
}

fn found(cur: &Cursor) -> String {
    cur.peek().map_or("end of input".into(), |t| t.to_string())
}

/// A field expression, optionally located with `@ client`.
fn rhs(cur: &mut Cursor) -> PResult<MetaExpr> {
    let e = expr(cur)?;
    if cur.eat_sym("@") {
        let c = client_atom(cur)?;
        return Ok(MetaExpr::At(Box::new(e), Box::new(c)));
    }
    Ok(e)
}

fn client_atom(cur: &mut Cursor) -> PResult<MetaExpr> {
    postfix(cur)
}

fn bracket(cur: &mut Cursor) -> PResult<MetaExpr> {
    cur.expect_sym("[")?;
    let e = expr(cur)?;
    cur.expect_sym("]")?;
    Ok(e)
}

enum AddOp {
    Bin(BinOp),
    Concat,
}

fn additive(cur: &Cursor) -> Option<AddOp> {
    match cur.peek()? {
        Tok::Sym("+") => Some(AddOp::Bin(BinOp::Add)),
        Tok::Sym("-") => Some(AddOp::Bin(BinOp::Sub)),
        Tok::Sym("++") => Some(AddOp::Concat),
        Tok::Word(w) if w == "xor" => Some(AddOp::Bin(BinOp::Xor)),
        Tok::Word(w) if w == "or" => Some(AddOp::Bin(BinOp::Or)),
        _ => None,
    }
}

fn multiplicative(cur: &Cursor) -> Option<BinOp> {
    match cur.peek()? {
        Tok::Sym("*") => Some(BinOp::Mul),
        Tok::Word(w) if w == "and" => Some(BinOp::And),
        _ => None,
    }
}

fn expr(cur: &mut Cursor) -> PResult<MetaExpr> {
    let mut lhs = term(cur)?;
    while let Some(op) = additive(cur) {
        cur.next();
        let rhs = term(cur)?;
        lhs = match op {
            AddOp::Bin(op) => MetaExpr::Bin(op, Box::new(lhs), Box::new(rhs)),
            AddOp::Concat => MetaExpr::Concat(Box::new(lhs), Box::new(rhs)),
        };
    }
    Ok(lhs)
}

fn term(cur: &mut Cursor) -> PResult<MetaExpr> {
    let mut lhs = unary(cur)?;
    while let Some(op) = multiplicative(cur) {
        cur.next();
        lhs = MetaExpr::Bin(op, Box::new(lhs), Box::new(unary(cur)?));
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor) -> PResult<MetaExpr> {
    if cur.eat_word("not") {
        return Ok(MetaExpr::Not(Box::new(unary(cur)?)));
    }
    postfix(cur)
}

fn postfix(cur: &mut Cursor) -> PResult<MetaExpr> {
    let mut e = primary(cur)?;
    while cur.eat_sym(".") {
        let field = cur.expect_word()?;
        e = MetaExpr::Proj(Box::new(e), field);
    }
    Ok(e)
}

fn ref_kind(w: &str) -> Option<VarKind> {
    match w {
        "s" => Some(VarKind::Secret),
        "r" => Some(VarKind::Flip),
        "m" => Some(VarKind::Mesg),
        "p" => Some(VarKind::Reveal),
        _ => None,
    }
}

fn args(cur: &mut Cursor) -> PResult<Vec<MetaExpr>> {
    cur.expect_sym("(")?;
    let mut out = Vec::new();
    if cur.eat_sym(")") {
        return Ok(out);
    }
    loop {
        out.push(stmt(cur)?);
        if cur.eat_sym(")") {
            return Ok(out);
        }
        cur.expect_sym(",")?;
    }
}

fn primary(cur: &mut Cursor) -> PResult<MetaExpr> {
    match cur.peek().cloned() {
        Some(Tok::Str(s)) => {
            cur.next();
            Ok(MetaExpr::Val(MetaValue::Str(s)))
        }
        Some(Tok::Sym("(")) => {
            cur.next();
            if cur.eat_sym(")") {
                return Ok(MetaExpr::unit());
            }
            let e = seq(cur)?;
            cur.expect_sym(")")?;
            Ok(e)
        }
        Some(Tok::Sym("{")) => record(cur),
        Some(Tok::Word(w)) if w.chars().all(|c| c.is_ascii_digit()) => {
            let v = cur.expect_int()?;
            Ok(MetaExpr::Val(MetaValue::Expr(Expr::Const(v))))
        }
        Some(Tok::Word(w)) => {
            cur.next();
            match w.as_str() {
                "true" => return Ok(MetaExpr::Val(MetaValue::Expr(Expr::Const(1)))),
                "false" => return Ok(MetaExpr::Val(MetaValue::Expr(Expr::Const(0)))),
                "OT" if cur.is_sym("(") => return ot(cur),
                "OT4" if cur.is_sym("(") => return ot4(cur),
                _ => {}
            }
            if let Some(kind) = ref_kind(&w).filter(|_| cur.is_sym("[")) {
                let name = bracket(cur)?;
                return Ok(MetaExpr::Ref(kind, Box::new(name)));
            }
            if cur.is_sym("(") {
                return Ok(MetaExpr::Call(w, args(cur)?));
            }
            if !ident(&w) {
                return cur.error(format!("unexpected `{w}`"));
            }
            Ok(MetaExpr::Var(w))
        }
        _ => cur.unexpected(),
    }
}

fn record(cur: &mut Cursor) -> PResult<MetaExpr> {
    cur.expect_sym("{")?;
    let mut fields: Vec<(String, MetaExpr)> = Vec::new();
    while !cur.eat_sym("}") {
        let name = cur.expect_word()?;
        if fields.iter().any(|(f, _)| *f == name) {
            return cur.error(format!("duplicate field `{name}`"));
        }
        cur.expect_sym("=")?;
        fields.push((name, expr(cur)?));
        if !cur.eat_sym(";") && !cur.is_sym("}") {
            return cur.error(format!("expected `;` or `}}`, found {}", found(cur)));
        }
    }
    Ok(MetaExpr::Record(fields))
}

/// `OT(choice @ receiver; if_one, if_zero)`
fn ot(cur: &mut Cursor) -> PResult<MetaExpr> {
    cur.expect_sym("(")?;
    let choice = expr(cur)?;
    cur.expect_sym("@")?;
    let receiver = client_atom(cur)?;
    cur.expect_sym(";")?;
    let one = expr(cur)?;
    cur.expect_sym(",")?;
    let zero = expr(cur)?;
    cur.expect_sym(")")?;
    Ok(MetaExpr::Ot(Box::new([choice, receiver, one, zero])))
}

/// Either the Overture form `OT4(c1, c2 @ R; r1, r2, r3, r4)` or the call
/// form `OT4(c1, c2, table, R, S)`.
fn ot4(cur: &mut Cursor) -> PResult<MetaExpr> {
    cur.expect_sym("(")?;
    let c1 = expr(cur)?;
    cur.expect_sym(",")?;
    let c2 = expr(cur)?;
    if cur.eat_sym("@") {
        let receiver = client_atom(cur)?;
        cur.expect_sym(";")?;
        let mut rows = Vec::with_capacity(4);
        for i in 0..4 {
            if i > 0 {
                cur.expect_sym(",")?;
            }
            rows.push(expr(cur)?);
        }
        cur.expect_sym(")")?;
        let [r1, r2, r3, r4]: [MetaExpr; 4] = rows.try_into().expect("four rows");
        return Ok(MetaExpr::Ot4(Box::new([c1, c2, receiver, r1, r2, r3, r4])));
    }
    let mut rest = Vec::with_capacity(3);
    for _ in 0..3 {
        cur.expect_sym(",")?;
        rest.push(expr(cur)?);
    }
    cur.expect_sym(")")?;
    let [table, receiver, sender]: [MetaExpr; 3] = rest.try_into().expect("three arguments");
    Ok(MetaExpr::Ot4Call(Box::new([
        c1, c2, table, receiver, sender,
    ])))
}

fn pred(cur: &mut Cursor) -> PResult<MetaPred> {
    let mut lhs = pred_and(cur)?;
    while cur.eat_sym("||") {
        lhs = MetaPred::Or(Box::new(lhs), Box::new(pred_and(cur)?));
    }
    Ok(lhs)
}

fn pred_and(cur: &mut Cursor) -> PResult<MetaPred> {
    let mut lhs = pred_atom(cur)?;
    while cur.eat_sym("&&") {
        lhs = MetaPred::And(Box::new(lhs), Box::new(pred_atom(cur)?));
    }
    Ok(lhs)
}

fn pred_atom(cur: &mut Cursor) -> PResult<MetaPred> {
    if cur.eat_sym("!") {
        return Ok(MetaPred::Not(Box::new(pred_atom(cur)?)));
    }
    if cur.is_sym("(") {
        let mark = cur.mark();
        cur.next();
        if let Ok(p) = pred(cur) {
            if cur.eat_sym(")") && !continues_expr(cur) {
                return Ok(p);
            }
        }
        cur.reset(mark);
    }
    let a = expr(cur)?;
    let op = if cur.eat_sym("==") || cur.eat_sym("=") {
        CmpOp::Eq
    } else if cur.eat_sym("!=") {
        CmpOp::Ne
    } else {
        return cur.error("expected `==` or `!=` in assertion");
    };
    Ok(MetaPred::Cmp(op, a, expr(cur)?))
}

fn continues_expr(cur: &Cursor) -> bool {
    additive(cur).is_some()
        || multiplicative(cur).is_some()
        || cur.is_sym("==")
        || cur.is_sym("=")
        || cur.is_sym("!=")
        || cur.is_sym(".")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn let_is_a_literal_program() {
        let (cb, main) = parse_prelude("let x = 1 in x").unwrap();
        assert!(cb.decls.is_empty());
        assert!(matches!(main, MetaExpr::Let(..)));
    }

    #[test]
    fn declarations_then_main() {
        let src = "f(a, b) { a ++ b } g() { } f(\"x\", \"y\")";
        let (cb, main) = parse_prelude(src).unwrap();
        assert_eq!(cb.names(), ["f", "g"]);
        assert_eq!(cb.get("g").unwrap().body, MetaExpr::unit());
        assert!(matches!(main, MetaExpr::Call(ref f, ref a) if f == "f" && a.len() == 2));
    }

    #[test]
    fn unbalanced_braces_fail() {
        assert!(parse_prelude("f(a) { a ").is_err());
        assert!(parse_prelude("f(a) { a } }").is_err());
        assert!(parse_prelude("f(a, a) { a }").is_ok());
        assert!(parse_prelude("f(a) { a } f(b) { b }").is_err());
    }

    #[test]
    fn command_forms() {
        let (_, main) = parse_prelude(
            "m[x ++ \"s\"]@i := (m[x] + 1)@i; p[\"1\"] := z@1; out@1 := m[\"a\"] + p[\"b\"]@1; \
             assert(m == k + (m[\"delta\"] * s))@i",
        )
        .unwrap();
        let mut kinds = Vec::new();
        let mut e = &main;
        while let MetaExpr::Seq(a, b) = e {
            kinds.push(std::mem::discriminant(&**a));
            e = b;
        }
        kinds.push(std::mem::discriminant(e));
        assert_eq!(kinds.len(), 4);
        assert!(matches!(e, MetaExpr::Assert { .. }));
    }

    #[test]
    fn handles_are_not_commands() {
        let (_, main) = parse_prelude("m[z]").unwrap();
        assert!(matches!(main, MetaExpr::Ref(VarKind::Mesg, _)));
        let (_, main) = parse_prelude("{ row1 = a; row2 = b }.row2").unwrap();
        assert!(matches!(main, MetaExpr::Proj(..)));
    }
}
