//! Parser for the `.ovt` concrete syntax.

use super::ast::{BinOp, CmpOp, Command, Expr, Ot, Ot4, Pred, Protocol};
use super::var::{ClientId, VarKind};
use crate::lex::{Cursor, SyntaxError, Tok};

pub fn parse_protocol(src: &str) -> Result<Protocol, SyntaxError> {
    let mut cur = Cursor::new(src)?;
    let mut commands = Vec::new();
    while !cur.at_end() {
        commands.push(command(&mut cur)?);
        cur.expect_sym(";")?;
    }
    Ok(Protocol::new(commands))
}

pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let mut cur = Cursor::new(src)?;
    let e = expr(&mut cur)?;
    if !cur.at_end() {
        return cur.unexpected();
    }
    Ok(e)
}

fn client(cur: &mut Cursor) -> Result<ClientId, SyntaxError> {
    let v = cur.expect_int()?;
    u32::try_from(v)
        .ok()
        .and_then(ClientId::new)
        .map_or_else(|| cur.error("client ids are positive integers"), Ok)
}

fn name(cur: &mut Cursor) -> Result<String, SyntaxError> {
    cur.expect_sym("[")?;
    let n = cur.expect_word()?;
    cur.expect_sym("]")?;
    Ok(n)
}

fn command(cur: &mut Cursor) -> Result<Command, SyntaxError> {
    if cur.eat_word("assert") {
        cur.expect_sym("(")?;
        let pred = pred(cur)?;
        cur.expect_sym(")")?;
        cur.expect_sym("@")?;
        let client = client(cur)?;
        return Ok(Command::Assert { client, pred });
    }
    if cur.eat_word("out") {
        cur.expect_sym("@")?;
        let c = client(cur)?;
        cur.expect_sym(":=")?;
        let (expr, src) = rhs(cur)?;
        return Ok(Command::Output {
            client: c,
            expr,
            src,
        });
    }
    if cur.eat_word("m") {
        let n = name(cur)?;
        cur.expect_sym("@")?;
        let dest = client(cur)?;
        cur.expect_sym(":=")?;
        let (expr, src) = rhs(cur)?;
        return Ok(Command::Send {
            dest,
            name: n,
            expr,
            src,
        });
    }
    if cur.eat_word("p") {
        let n = name(cur)?;
        cur.expect_sym(":=")?;
        let (expr, src) = rhs(cur)?;
        return Ok(Command::Reveal { name: n, expr, src });
    }
    cur.error("expected a command (`m[..]@..`, `p[..]`, `out@..` or `assert`)")
}

fn rhs(cur: &mut Cursor) -> Result<(Expr, ClientId), SyntaxError> {
    let e = expr(cur)?;
    cur.expect_sym("@")?;
    Ok((e, client(cur)?))
}

fn additive_op(cur: &Cursor) -> Option<BinOp> {
    match cur.peek()? {
        Tok::Sym("+") => Some(BinOp::Add),
        Tok::Sym("-") => Some(BinOp::Sub),
        Tok::Word(w) if w == "xor" => Some(BinOp::Xor),
        Tok::Word(w) if w == "or" => Some(BinOp::Or),
        _ => None,
    }
}

fn multiplicative_op(cur: &Cursor) -> Option<BinOp> {
    match cur.peek()? {
        Tok::Sym("*") => Some(BinOp::Mul),
        Tok::Word(w) if w == "and" => Some(BinOp::And),
        _ => None,
    }
}

pub(crate) fn expr(cur: &mut Cursor) -> Result<Expr, SyntaxError> {
    let mut lhs = term(cur)?;
    while let Some(op) = additive_op(cur) {
        cur.next();
        lhs = Expr::bin(op, lhs, term(cur)?);
    }
    Ok(lhs)
}

fn term(cur: &mut Cursor) -> Result<Expr, SyntaxError> {
    let mut lhs = unary(cur)?;
    while let Some(op) = multiplicative_op(cur) {
        cur.next();
        lhs = Expr::bin(op, lhs, unary(cur)?);
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor) -> Result<Expr, SyntaxError> {
    if cur.eat_word("not") {
        return Ok(Expr::not(unary(cur)?));
    }
    atom(cur)
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

fn atom(cur: &mut Cursor) -> Result<Expr, SyntaxError> {
    if cur.eat_sym("(") {
        let e = expr(cur)?;
        cur.expect_sym(")")?;
        return Ok(e);
    }
    let Some(Tok::Word(w)) = cur.peek().cloned() else {
        return cur.unexpected();
    };
    if w.chars().all(|c| c.is_ascii_digit()) {
        return Ok(Expr::Const(cur.expect_int()?));
    }
    cur.next();
    match w.as_str() {
        "true" => Ok(Expr::Bool(true)),
        "false" => Ok(Expr::Bool(false)),
        "OT" => {
            cur.expect_sym("(")?;
            let choice = expr(cur)?;
            cur.expect_sym("@")?;
            let receiver = client(cur)?;
            cur.expect_sym(";")?;
            let if_one = expr(cur)?;
            cur.expect_sym(",")?;
            let if_zero = expr(cur)?;
            cur.expect_sym(")")?;
            Ok(Expr::Ot(Box::new(Ot {
                choice,
                receiver,
                if_one,
                if_zero,
            })))
        }
        "OT4" => {
            cur.expect_sym("(")?;
            let c1 = expr(cur)?;
            cur.expect_sym(",")?;
            let c2 = expr(cur)?;
            cur.expect_sym("@")?;
            let receiver = client(cur)?;
            cur.expect_sym(";")?;
            let mut rows = Vec::with_capacity(4);
            for i in 0..4 {
                if i > 0 {
                    cur.expect_sym(",")?;
                }
                rows.push(expr(cur)?);
            }
            cur.expect_sym(")")?;
            let rows: [Expr; 4] = rows.try_into().expect("four rows");
            Ok(Expr::Ot4(Box::new(Ot4 {
                choice: [c1, c2],
                receiver,
                rows,
            })))
        }
        other => match ref_kind(other) {
            Some(kind) if cur.is_sym("[") => Ok(Expr::Ref(kind, name(cur)?)),
            _ => cur.error(format!("unexpected identifier `{other}` in expression")),
        },
    }
}

fn pred(cur: &mut Cursor) -> Result<Pred, SyntaxError> {
    let mut lhs = pred_and(cur)?;
    while cur.eat_sym("||") {
        lhs = Pred::Or(Box::new(lhs), Box::new(pred_and(cur)?));
    }
    Ok(lhs)
}

fn pred_and(cur: &mut Cursor) -> Result<Pred, SyntaxError> {
    let mut lhs = pred_atom(cur)?;
    while cur.eat_sym("&&") {
        lhs = Pred::And(Box::new(lhs), Box::new(pred_atom(cur)?));
    }
    Ok(lhs)
}

fn pred_atom(cur: &mut Cursor) -> Result<Pred, SyntaxError> {
    if cur.eat_sym("!") {
        return Ok(Pred::Not(Box::new(pred_atom(cur)?)));
    }
    if cur.is_sym("(") {
        // Either a parenthesized predicate or a comparison whose left
        // operand starts with a parenthesis.
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
    let b = expr(cur)?;
    Ok(Pred::Cmp(op, a, b))
}

fn continues_expr(cur: &Cursor) -> bool {
    additive_op(cur).is_some()
        || multiplicative_op(cur).is_some()
        || cur.is_sym("==")
        || cur.is_sym("=")
        || cur.is_sym("!=")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::var::client;

    #[test]
    fn parses_each_command_form() {
        let pi = parse_protocol(
            "m[z]@2 := (s[x] - r[y])@1;\n\
             p[1] := r[local] + m[s2] @ 1; # reveal\n\
             out@1 := (p[1] + p[2])@1;\n\
             assert(m[z] == 0)@2;",
        )
        .unwrap();
        assert_eq!(pi.len(), 4);
        assert_eq!(
            pi.commands[0],
            Command::Send {
                dest: client(2),
                name: "z".into(),
                expr: Expr::bin(BinOp::Sub, Expr::secret("x"), Expr::flip("y")),
                src: client(1),
            }
        );
        assert!(pi.commands[3].is_assert());
    }

    #[test]
    fn round_trips_through_printer() {
        let src = "m[z]@2 := OT4(m[x], m[y] @ 2; r[z] xor (m[x] xor true) and (m[y] xor true), \
                   r[z], 0, not m[x]) @ 1;\n\
                   m[w]@1 := OT(s[c] @ 2; r[a], r[b]) @ 1;\n\
                   assert(!(m[a] == 1 || (m[b] + 1) != m[c]) && m[d] == 0)@1;\n\
                   out@1 := s[a] - (s[b] - s[c]) @ 1;";
        let pi = parse_protocol(src).unwrap();
        let again = parse_protocol(&pi.to_string()).unwrap();
        assert_eq!(pi, again);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_protocol("m[z]@2 := s[x]@1;\nm[w]@2 := s[x] +@1;").unwrap_err();
        assert_eq!(err.pos.line, 2);
        assert!(parse_protocol("m[z]@0 := s[x]@1;").is_err());
        assert!(parse_protocol("m[z]@2 := s[x]@1").is_err());
        assert!(parse_protocol("m[z]@2 := q[x]@1;").is_err());
    }
}
