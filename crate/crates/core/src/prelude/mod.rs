//! The Prelude metalanguage: records, strings and functions whose
//! evaluation emits an Overture protocol as a side effect.

mod eval;
mod parse;

use std::fmt;

use thiserror::Error;

use crate::lang::{BinOp, ClientId, CmpOp, Expr, Protocol, VarKind};
use crate::lex::SyntaxError;

pub use eval::{eval_meta, eval_meta_with_limit, step, subst, MetaConfig, STEP_LIMIT};
pub use parse::parse_prelude;

/// Values of the metalanguage. Integer literals are field constants and
/// double as client ids wherever a client is expected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaValue {
    Client(ClientId),
    Str(String),
    /// A field expression; message handles are `Expr::Ref(Mesg, _)`.
    Expr(Expr),
    /// A field expression paired with the client that computes it, as on
    /// the right of an assignment.
    Located(Expr, ClientId),
    Unit,
    Record(Vec<(String, MetaValue)>),
}

impl fmt::Display for MetaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaValue::Client(c) => write!(f, "{c}"),
            MetaValue::Str(s) => write!(f, "{s:?}"),
            MetaValue::Expr(e) => write!(f, "{e}"),
            MetaValue::Located(e, c) => write!(f, "({e})@{c}"),
            MetaValue::Unit => f.write_str("()"),
            MetaValue::Record(fields) => {
                f.write_str("{ ")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{k} = {v}")?;
                }
                f.write_str(" }")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaPred {
    Cmp(CmpOp, MetaExpr, MetaExpr),
    Not(Box<MetaPred>),
    And(Box<MetaPred>, Box<MetaPred>),
    Or(Box<MetaPred>, Box<MetaPred>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaExpr {
    Val(MetaValue),
    Var(String),
    Call(String, Vec<MetaExpr>),
    Let(String, Box<MetaExpr>, Box<MetaExpr>),
    Seq(Box<MetaExpr>, Box<MetaExpr>),
    Record(Vec<(String, MetaExpr)>),
    Proj(Box<MetaExpr>, String),
    Concat(Box<MetaExpr>, Box<MetaExpr>),
    /// `s[e]`, `r[e]`, `m[e]`, `p[e]` with a computed name.
    Ref(VarKind, Box<MetaExpr>),
    Bin(BinOp, Box<MetaExpr>, Box<MetaExpr>),
    Not(Box<MetaExpr>),
    /// `e @ c`
    At(Box<MetaExpr>, Box<MetaExpr>),
    /// `OT(choice @ receiver; if_one, if_zero)`
    Ot(Box<[MetaExpr; 4]>),
    /// `OT4(c1, c2 @ receiver; r1, r2, r3, r4)`
    Ot4(Box<[MetaExpr; 7]>),
    /// `OT4(c1, c2, table, receiver, sender)`: the table is a record with
    /// fields `row1`..`row4`; the result is located at the sender.
    Ot4Call(Box<[MetaExpr; 5]>),
    Send {
        name: Box<MetaExpr>,
        dest: Box<MetaExpr>,
        rhs: Box<MetaExpr>,
    },
    Reveal {
        name: Box<MetaExpr>,
        rhs: Box<MetaExpr>,
    },
    Output {
        client: Box<MetaExpr>,
        rhs: Box<MetaExpr>,
    },
    Assert {
        pred: Box<MetaPred>,
        client: Box<MetaExpr>,
    },
}

impl MetaExpr {
    pub fn unit() -> MetaExpr {
        MetaExpr::Val(MetaValue::Unit)
    }

    pub fn as_value(&self) -> Option<&MetaValue> {
        match self {
            MetaExpr::Val(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: MetaExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Codebase {
    pub decls: Vec<FunDecl>,
}

impl Codebase {
    pub fn get(&self, name: &str) -> Option<&FunDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.decls.iter().map(|d| d.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreludeError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` takes {expected} arguments, given {given}")]
    Arity {
        name: String,
        expected: usize,
        given: usize,
    },
    #[error("no field `{0}`")]
    MissingField(String),
    #[error("{0}")]
    Type(String),
    #[error("evaluation exceeded {0} steps")]
    StepLimit(u64),
}

/// Parses and evaluates `source`, returning the residual protocol.
pub fn expand(source: &str) -> Result<Protocol, PreludeError> {
    let (codebase, main) = parse_prelude(source)?;
    Ok(eval_meta(&codebase, main)?.0)
}
