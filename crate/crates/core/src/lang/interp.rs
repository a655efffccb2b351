//! Small-step interpreter for passive and adversarial executions.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, CmpOp, Command, Expr, Partition, Pred, Protocol};
use super::memory::{Memory, MemoryError, Value};
use super::var::{ClientId, Var, VarKind};
use crate::field::{FieldElem, FieldError, Modulus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(Var),
    #[error("read of undefined (⊥) variable {0}")]
    Bottom(Var),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("honest assertion at command {index} failed on client {client}")]
    AssertionFailed { index: usize, client: ClientId },
    #[error("oblivious transfer is only defined over F2")]
    OtOutsideF2,
    #[error("step on an empty protocol")]
    Empty,
}

/// `⟦m, ε⟧_ι`: evaluates `e` computed on `client`.
pub fn eval_expr(
    m: &Memory,
    e: &Expr,
    client: ClientId,
    modulus: Modulus,
) -> Result<FieldElem, EvalError> {
    match e {
        Expr::Const(v) => Ok(modulus.elem(*v)),
        Expr::Bool(b) => {
            if !modulus.is_binary() {
                return Err(FieldError::Unsupported {
                    op: "true/false",
                    modulus: modulus.get(),
                }
                .into());
            }
            Ok(modulus.elem(*b as u64))
        }
        Expr::Ref(kind, name) => {
            let var = Var::resolve(*kind, name, client);
            match m.get(&var) {
                Some(Value::Elem(v)) => Ok(v),
                Some(Value::Bottom) => Err(EvalError::Bottom(var)),
                None => Err(EvalError::Unbound(var)),
            }
        }
        Expr::Bin(op, a, b) => {
            let x = eval_expr(m, a, client, modulus)?;
            let y = eval_expr(m, b, client, modulus)?;
            Ok(match op {
                BinOp::Add => x.add(y),
                BinOp::Sub => x.sub(y),
                BinOp::Mul => x.mul(y),
                BinOp::And => x.and(y),
                BinOp::Xor => x.xor(y),
                BinOp::Or => x.or(y),
            }?)
        }
        Expr::Not(a) => Ok(eval_expr(m, a, client, modulus)?.not()?),
        Expr::Ot(ot) => {
            if !modulus.is_binary() {
                return Err(EvalError::OtOutsideF2);
            }
            let c = eval_expr(m, &ot.choice, ot.receiver, modulus)?;
            let one = eval_expr(m, &ot.if_one, client, modulus)?;
            let zero = eval_expr(m, &ot.if_zero, client, modulus)?;
            Ok(if c.is_zero() { zero } else { one })
        }
        Expr::Ot4(ot) => {
            if !modulus.is_binary() {
                return Err(EvalError::OtOutsideF2);
            }
            let c1 = eval_expr(m, &ot.choice[0], ot.receiver, modulus)?;
            let c2 = eval_expr(m, &ot.choice[1], ot.receiver, modulus)?;
            let rows = ot
                .rows
                .iter()
                .map(|r| eval_expr(m, r, client, modulus))
                .collect::<Result<Vec<_>, _>>()?;
            let idx = match (c1.value(), c2.value()) {
                (1, 1) => 0,
                (1, 0) => 1,
                (0, 1) => 2,
                _ => 3,
            };
            Ok(rows[idx])
        }
    }
}

pub fn eval_pred(
    m: &Memory,
    p: &Pred,
    client: ClientId,
    modulus: Modulus,
) -> Result<bool, EvalError> {
    Ok(match p {
        Pred::Cmp(op, a, b) => {
            let eq = eval_expr(m, a, client, modulus)? == eval_expr(m, b, client, modulus)?;
            (*op == CmpOp::Eq) == eq
        }
        Pred::Not(q) => !eval_pred(m, q, client, modulus)?,
        Pred::And(a, b) => eval_pred(m, a, client, modulus)? && eval_pred(m, b, client, modulus)?,
        Pred::Or(a, b) => eval_pred(m, a, client, modulus)? || eval_pred(m, b, client, modulus)?,
    })
}

fn exec(m: &mut Memory, cmd: &Command, index: usize, modulus: Modulus) -> Result<(), EvalError> {
    match cmd {
        Command::Assert { client, pred } => {
            if eval_pred(m, pred, *client, modulus)? {
                Ok(())
            } else {
                Err(EvalError::AssertionFailed {
                    index,
                    client: *client,
                })
            }
        }
        other => {
            let v = eval_expr(
                m,
                other.expr().expect("assignment"),
                other.computing_client(),
                modulus,
            )?;
            m.extend(other.target().expect("assignment"), Value::Elem(v))?;
            Ok(())
        }
    }
}

/// One reduction step `(m, c; π) → (m', π)`.
pub fn step<'a>(
    m: &Memory,
    commands: &'a [Command],
    modulus: Modulus,
) -> Result<(Memory, &'a [Command]), EvalError> {
    let (head, tail) = commands.split_first().ok_or(EvalError::Empty)?;
    let mut next = m.clone();
    exec(&mut next, head, 0, modulus)?;
    Ok((next, tail))
}

/// `(m0, π) →* (m, ∅)`. A failing assertion is reported as an error.
pub fn run(m0: &Memory, pi: &Protocol, modulus: Modulus) -> Result<Memory, EvalError> {
    let mut m = m0.clone();
    for (index, cmd) in pi.commands.iter().enumerate() {
        exec(&mut m, cmd, index, modulus)?;
    }
    Ok(m)
}

/// A deterministic adversary controlling the corrupt clients.
///
/// `view` is the corrupt-visible part of the memory: variables owned by
/// corrupt clients and all reveals.
pub trait AdversaryStrategy: Send + Sync {
    /// The expression a corrupt client evaluates instead of `original` at
    /// command `index`.
    fn rewrite(&self, view: &Memory, index: usize, original: &Expr) -> Expr;

    /// Whether the adversary aborts at its own assertion `index`, made by
    /// corrupt `client`.
    fn aborts_at(&self, _view: &Memory, _index: usize, _client: ClientId) -> bool {
        false
    }
}

/// The passive adversary: follows the protocol.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl AdversaryStrategy for Identity {
    fn rewrite(&self, _view: &Memory, _index: usize, original: &Expr) -> Expr {
        original.clone()
    }
}

/// A strategy given by expression substitution: command `i` computed by
/// a corrupt client evaluates `rewrites[i]` instead of its own expression,
/// and the adversary aborts at its own assertion `i` when `aborts[i]`
/// evaluates to 1. Expressions are computed on the corrupt client, so
/// they only read what that client can see.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ExprStrategy {
    pub rewrites: BTreeMap<usize, Expr>,
    pub aborts: BTreeMap<usize, Expr>,
}

impl ExprStrategy {
    pub fn is_identity(&self) -> bool {
        self.rewrites.is_empty() && self.aborts.is_empty()
    }
}

impl AdversaryStrategy for ExprStrategy {
    fn rewrite(&self, _view: &Memory, index: usize, original: &Expr) -> Expr {
        self.rewrites
            .get(&index)
            .cloned()
            .unwrap_or_else(|| original.clone())
    }

    fn aborts_at(&self, view: &Memory, index: usize, client: ClientId) -> bool {
        self.aborts
            .get(&index)
            .is_some_and(|e| eval_expr(view, e, client, Modulus::F2).is_ok_and(|v| v.value() == 1))
    }
}

impl fmt::Display for ExprStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("passive");
        }
        let mut parts: Vec<String> = self
            .rewrites
            .iter()
            .map(|(i, e)| format!("#{i} := {e}"))
            .collect();
        parts.extend(
            self.aborts
                .iter()
                .map(|(i, e)| format!("#{i} abort if {e}")),
        );
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdvRun {
    /// Final memory; on abort, undefined views and outputs are ⊥.
    pub memory: Memory,
    /// Index of the assertion that halted execution.
    pub aborted_at: Option<usize>,
}

pub fn corrupt_view(m: &Memory, part: &Partition) -> Memory {
    m.iter()
        .filter(|(x, _)| x.kind() == VarKind::Reveal || x.is_owned_by(&part.corrupt))
        .map(|(x, v)| (x.clone(), *v))
        .collect()
}

/// Adversarial execution: corrupt commands are rewritten by `adv`,
/// corrupt assertions are skipped unless the adversary chooses to abort,
/// and a failing honest assertion halts the run.
pub fn run_adv(
    m0: &Memory,
    pi: &Protocol,
    adv: &dyn AdversaryStrategy,
    part: &Partition,
    modulus: Modulus,
) -> Result<AdvRun, EvalError> {
    let mut m = m0.clone();
    let mut aborted_at = None;
    for (index, cmd) in pi.commands.iter().enumerate() {
        let client = cmd.computing_client();
        let corrupt = part.is_corrupt(client);
        match cmd {
            Command::Assert { pred, .. } => {
                let halt = if corrupt {
                    adv.aborts_at(&corrupt_view(&m, part), index, client)
                } else {
                    !eval_pred(&m, pred, client, modulus)?
                };
                if halt {
                    aborted_at = Some(index);
                    break;
                }
            }
            other => {
                let original = other.expr().expect("assignment");
                let v = if corrupt {
                    let e = adv.rewrite(&corrupt_view(&m, part), index, original);
                    eval_expr(&m, &e, client, modulus)?
                } else {
                    eval_expr(&m, original, client, modulus)?
                };
                m.extend(other.target().expect("assignment"), Value::Elem(v))?;
            }
        }
    }
    if aborted_at.is_some() {
        for x in pi.views().into_iter().chain(pi.outputs()) {
            if !m.contains(&x) {
                m.extend(x, Value::Bottom)?;
            }
        }
    }
    Ok(AdvRun {
        memory: m,
        aborted_at,
    })
}
