//! The Overture language: variables, memories, syntax, well-formedness
//! and the interpreter.

pub mod ast;
pub mod interp;
pub mod memory;
pub mod parse;
pub mod validate;
pub mod var;

pub use ast::{
    corrupt_views, honest_views, BinOp, CmpOp, Command, Expr, Ot, Ot4, Partition, Pred, Protocol,
};
pub use interp::{
    corrupt_view, eval_expr, eval_pred, run, run_adv, step, AdvRun, AdversaryStrategy, EvalError,
    ExprStrategy, Identity,
};
pub use memory::{mems, Memory, MemoryError, Value};
pub use parse::{parse_expr, parse_protocol};
pub use validate::{validate, validate_with_preprocessing, Violation};
pub use var::{client, federation, ClientId, Federation, Var, VarKind};
