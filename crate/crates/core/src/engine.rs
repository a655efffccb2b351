//! Bitsliced F2 evaluation of protocols over their whole initial-memory
//! space.
//!
//! Each variable holds a 64-bit word whose lane `l` is its value in run
//! `l` of the current batch, so one pass over the commands executes 64
//! runs. Aborted lanes keep computing garbage; their later writes are
//! marked ⊥.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::dist::{Pmf, Preprocessing, Row};
use crate::lang::{
    BinOp, ClientId, CmpOp, Command, Expr, ExprStrategy, Partition, Pred, Protocol, Var,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("command {index}: {var} is read but neither supplied initially nor written before")]
    Unbound { var: Var, index: usize },
    #[error("command {index}: {var} is written twice")]
    DoubleWrite { var: Var, index: usize },
    #[error("{0} is not a variable of the protocol runs")]
    NotInDomain(Var),
    #[error("{0} variables exceed the 128-column limit")]
    TooManyVars(usize),
    #[error("the run space (2^{0} or more initial memories) is too large to enumerate")]
    TooManyRuns(u32),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Aborted runs, in total and by the assertion that halted them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Aborts {
    pub total: u64,
    pub at: BTreeMap<usize, u64>,
}

impl Aborts {
    fn add(&mut self, other: Aborts) {
        self.total += other.total;
        for (i, n) in other.at {
            *self.at.entry(i).or_default() += n;
        }
    }
}

/// Upper bound on enumerated initial memories.
pub const MAX_RUNS_LOG2: u32 = 34;

#[derive(Debug, Clone, Copy)]
enum Op {
    Load(usize),
    Const(bool),
    Not,
    And,
    Xor,
    Or,
    /// Pops `zero, one, choice`.
    Sel,
    /// Pops `r4, r3, r2, r1, c2, c1`.
    Sel4,
}

#[derive(Debug, Clone, Copy)]
enum Effect {
    Write(usize),
    /// Honest assertion: lanes where the code yields 0 abort.
    Check,
    /// Corrupt abort choice: lanes where the code yields 1 abort.
    Abort,
}

#[derive(Debug, Clone)]
struct Compiled {
    index: usize,
    code: Vec<Op>,
    effect: Effect,
}

/// A protocol compiled against a preprocessing enumerator, optionally
/// under an adversary.
#[derive(Debug, Clone)]
pub struct Engine {
    vars: Vec<Var>,
    index: HashMap<Var, usize>,
    cmds: Vec<Compiled>,
    pre_slots: Vec<usize>,
    flip_slots: Vec<usize>,
    preproc: Preprocessing,
    runs: u64,
}

struct Compiler<'a> {
    index: &'a HashMap<Var, usize>,
    defined: &'a [bool],
    at: usize,
}

impl Compiler<'_> {
    fn load(&self, var: Var, code: &mut Vec<Op>) -> Result<(), EngineError> {
        match self.index.get(&var) {
            Some(&i) if self.defined[i] => {
                code.push(Op::Load(i));
                Ok(())
            }
            _ => Err(EngineError::Unbound {
                var,
                index: self.at,
            }),
        }
    }

    fn expr(&self, e: &Expr, client: ClientId, code: &mut Vec<Op>) -> Result<(), EngineError> {
        match e {
            Expr::Const(v) => code.push(Op::Const(v % 2 == 1)),
            Expr::Bool(b) => code.push(Op::Const(*b)),
            Expr::Ref(kind, name) => self.load(Var::resolve(*kind, name, client), code)?,
            Expr::Bin(op, a, b) => {
                self.expr(a, client, code)?;
                self.expr(b, client, code)?;
                code.push(match op {
                    BinOp::Add | BinOp::Sub | BinOp::Xor => Op::Xor,
                    BinOp::Mul | BinOp::And => Op::And,
                    BinOp::Or => Op::Or,
                });
            }
            Expr::Not(a) => {
                self.expr(a, client, code)?;
                code.push(Op::Not);
            }
            Expr::Ot(ot) => {
                self.expr(&ot.choice, ot.receiver, code)?;
                self.expr(&ot.if_one, client, code)?;
                self.expr(&ot.if_zero, client, code)?;
                code.push(Op::Sel);
            }
            Expr::Ot4(ot) => {
                for c in &ot.choice {
                    self.expr(c, ot.receiver, code)?;
                }
                for r in &ot.rows {
                    self.expr(r, client, code)?;
                }
                code.push(Op::Sel4);
            }
        }
        Ok(())
    }

    fn pred(&self, p: &Pred, client: ClientId, code: &mut Vec<Op>) -> Result<(), EngineError> {
        match p {
            Pred::Cmp(op, a, b) => {
                self.expr(a, client, code)?;
                self.expr(b, client, code)?;
                code.push(Op::Xor);
                if *op == CmpOp::Eq {
                    code.push(Op::Not);
                }
            }
            Pred::Not(q) => {
                self.pred(q, client, code)?;
                code.push(Op::Not);
            }
            Pred::And(a, b) | Pred::Or(a, b) => {
                self.pred(a, client, code)?;
                self.pred(b, client, code)?;
                code.push(if matches!(p, Pred::And(..)) {
                    Op::And
                } else {
                    Op::Or
                });
            }
        }
        Ok(())
    }
}

fn exec(code: &[Op], vals: &[u64], stack: &mut Vec<u64>) -> u64 {
    stack.clear();
    for op in code {
        match *op {
            Op::Load(i) => stack.push(vals[i]),
            Op::Const(b) => stack.push(if b { u64::MAX } else { 0 }),
            Op::Not => {
                let a = stack.pop().expect("operand");
                stack.push(!a);
            }
            Op::And | Op::Xor | Op::Or => {
                let b = stack.pop().expect("operand");
                let a = stack.pop().expect("operand");
                stack.push(match op {
                    Op::And => a & b,
                    Op::Xor => a ^ b,
                    _ => a | b,
                });
            }
            Op::Sel => {
                let zero = stack.pop().expect("operand");
                let one = stack.pop().expect("operand");
                let c = stack.pop().expect("operand");
                stack.push((c & one) | (!c & zero));
            }
            Op::Sel4 => {
                let r4 = stack.pop().expect("operand");
                let r3 = stack.pop().expect("operand");
                let r2 = stack.pop().expect("operand");
                let r1 = stack.pop().expect("operand");
                let c2 = stack.pop().expect("operand");
                let c1 = stack.pop().expect("operand");
                stack.push((c1 & c2 & r1) | (c1 & !c2 & r2) | (!c1 & c2 & r3) | (!c1 & !c2 & r4));
            }
        }
    }
    stack.pop().expect("result")
}

struct Batch {
    vals: Vec<u64>,
    bots: Vec<u64>,
    stack: Vec<u64>,
}

impl Engine {
    /// Compiles `pi` for passive runs.
    pub fn passive(pi: &Protocol, preproc: &Preprocessing) -> Result<Engine, EngineError> {
        Engine::compile(pi, preproc, None)
    }

    /// Compiles `pi` with corrupt commands rewritten by `adv`. Corrupt
    /// assertions are dropped unless `adv` may abort there.
    pub fn compile(
        pi: &Protocol,
        preproc: &Preprocessing,
        adv: Option<(&ExprStrategy, &Partition)>,
    ) -> Result<Engine, EngineError> {
        let mut all: BTreeSet<Var> = preproc.vars().iter().cloned().collect();
        let free_flips: Vec<Var> = pi
            .flips()
            .into_iter()
            .filter(|x| !all.contains(x))
            .collect();
        all.extend(free_flips.iter().cloned());
        all.extend(pi.written());
        if all.len() > 128 {
            return Err(EngineError::TooManyVars(all.len()));
        }
        let vars: Vec<Var> = all.into_iter().collect();
        let index: HashMap<Var, usize> = vars.iter().cloned().zip(0..).collect();
        let mut defined = vec![false; vars.len()];
        let pre_slots: Vec<usize> = preproc.vars().iter().map(|x| index[x]).collect();
        let flip_slots: Vec<usize> = free_flips.iter().map(|x| index[x]).collect();
        for &i in pre_slots.iter().chain(&flip_slots) {
            defined[i] = true;
        }

        let log2 = 64 - preproc.count().saturating_sub(1).leading_zeros() + flip_slots.len() as u32;
        if log2 > MAX_RUNS_LOG2 {
            return Err(EngineError::TooManyRuns(log2));
        }
        let runs = preproc.count() << flip_slots.len();

        let mut cmds = Vec::new();
        for (at, cmd) in pi.commands.iter().enumerate() {
            let client = cmd.computing_client();
            let corrupt = adv.is_some_and(|(_, part)| part.is_corrupt(client));
            let compiler = Compiler {
                index: &index,
                defined: &defined,
                at,
            };
            let mut code = Vec::new();
            let effect = match cmd {
                Command::Assert { pred, .. } => {
                    if corrupt {
                        let strategy = adv.expect("adversary").0;
                        match strategy.aborts.get(&at) {
                            Some(e) => {
                                compiler.expr(e, client, &mut code)?;
                                Effect::Abort
                            }
                            None => continue,
                        }
                    } else {
                        compiler.pred(pred, client, &mut code)?;
                        Effect::Check
                    }
                }
                other => {
                    let original = other.expr().expect("assignment");
                    let e = match adv {
                        Some((strategy, _)) if corrupt => {
                            strategy.rewrites.get(&at).unwrap_or(original)
                        }
                        _ => original,
                    };
                    compiler.expr(e, client, &mut code)?;
                    let target = other.target().expect("assignment");
                    let slot = index[&target];
                    if defined[slot] {
                        return Err(EngineError::DoubleWrite {
                            var: target,
                            index: at,
                        });
                    }
                    defined[slot] = true;
                    Effect::Write(slot)
                }
            };
            cmds.push(Compiled {
                index: at,
                code,
                effect,
            });
        }
        Ok(Engine {
            vars,
            index,
            cmds,
            pre_slots,
            flip_slots,
            preproc: preproc.clone(),
            runs,
        })
    }

    /// All columns of the run memories, in `Var` order.
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Number of enumerated initial memories.
    pub fn runs(&self) -> u64 {
        self.runs
    }

    fn new_batch(&self) -> Batch {
        Batch {
            vals: vec![0; self.vars.len()],
            bots: vec![0; self.vars.len()],
            stack: Vec::with_capacity(16),
        }
    }

    /// Executes runs `start..start+lanes`; returns the lanes that ended
    /// without abort.
    fn run_batch(&self, b: &mut Batch, start: u64, lanes: usize, aborts: &mut Aborts) -> u64 {
        b.vals.iter_mut().for_each(|v| *v = 0);
        b.bots.iter_mut().for_each(|v| *v = 0);
        let nf = self.flip_slots.len();
        let mut cached: Option<(u64, u128)> = None;
        for l in 0..lanes {
            let idx = start + l as u64;
            let p = idx >> nf;
            let bits = match cached {
                Some((q, bits)) if q == p => bits,
                _ => {
                    let bits = self.preproc.bits(p);
                    cached = Some((p, bits));
                    bits
                }
            };
            for (j, &slot) in self.pre_slots.iter().enumerate() {
                b.vals[slot] |= ((bits >> j & 1) as u64) << l;
            }
            for (k, &slot) in self.flip_slots.iter().enumerate() {
                b.vals[slot] |= ((idx >> (nf - 1 - k)) & 1) << l;
            }
        }
        let lane_mask = if lanes == 64 {
            u64::MAX
        } else {
            (1u64 << lanes) - 1
        };
        let mut alive = lane_mask;
        for cmd in &self.cmds {
            let w = exec(&cmd.code, &b.vals, &mut b.stack);
            match cmd.effect {
                Effect::Write(slot) => {
                    b.vals[slot] = w;
                    b.bots[slot] = !alive & lane_mask;
                }
                Effect::Check | Effect::Abort => {
                    let pass = if matches!(cmd.effect, Effect::Check) {
                        w
                    } else {
                        !w
                    };
                    let killed = (alive & !pass).count_ones() as u64;
                    if killed > 0 {
                        aborts.total += killed;
                        *aborts.at.entry(cmd.index).or_default() += killed;
                    }
                    alive &= pass;
                }
            }
        }
        alive
    }

    fn slots(&self, cols: &[Var]) -> Result<Vec<usize>, EngineError> {
        cols.iter()
            .map(|x| {
                self.index
                    .get(x)
                    .copied()
                    .ok_or_else(|| EngineError::NotInDomain(x.clone()))
            })
            .collect()
    }

    fn count_range(&self, slots: &[usize], from: u64, to: u64) -> (HashMap<Row, u64>, Aborts) {
        let mut b = self.new_batch();
        let mut counts: HashMap<Row, u64> = HashMap::new();
        let mut aborted = Aborts::default();
        let mut start = from;
        while start < to {
            let lanes = (to - start).min(64) as usize;
            self.run_batch(&mut b, start, lanes, &mut aborted);
            for l in 0..lanes {
                let mut row = Row::default();
                for (k, &s) in slots.iter().enumerate() {
                    row.bits |= ((b.vals[s] >> l & 1) as u128) << k;
                    row.bot |= ((b.bots[s] >> l & 1) as u128) << k;
                }
                // ⊥ cells carry no value.
                row.bits &= !row.bot;
                *counts.entry(row).or_default() += 1;
            }
            start += lanes as u64;
        }
        (counts, aborted)
    }

    /// The uniform distribution over all runs, projected onto `cols`,
    /// together with the number of aborted runs. `workers == 1` runs
    /// sequentially; `0` uses the global pool.
    pub fn pmf_with_aborts(
        &self,
        cols: &[Var],
        workers: usize,
    ) -> Result<(Pmf, Aborts), EngineError> {
        let slots = self.slots(cols)?;
        let (counts, aborted) = if workers == 1 || self.runs <= 4096 {
            self.count_range(&slots, 0, self.runs)
        } else {
            let parallel = || {
                let chunks = (rayon::current_num_threads() as u64 * 8).max(1);
                // Chunk boundaries on multiples of 64 keep batches full.
                let per = (self.runs.div_ceil(chunks)).div_ceil(64) * 64;
                (0..self.runs.div_ceil(per))
                    .into_par_iter()
                    .map(|c| self.count_range(&slots, c * per, ((c + 1) * per).min(self.runs)))
                    .reduce(
                        || (HashMap::new(), Aborts::default()),
                        |(a, mut na), (b, nb)| {
                            na.add(nb);
                            let (mut big, small) = if a.len() < b.len() { (b, a) } else { (a, b) };
                            for (r, c) in small {
                                *big.entry(r).or_default() += c;
                            }
                            (big, na)
                        },
                    )
            };
            if workers == 0 {
                parallel()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| EngineError::Pool(e.to_string()))?
                    .install(parallel)
            }
        };
        let pmf = Pmf::from_counts(cols.to_vec(), counts).expect("at least one run");
        Ok((pmf, aborted))
    }

    pub fn pmf(&self, cols: &[Var], workers: usize) -> Result<Pmf, EngineError> {
        Ok(self.pmf_with_aborts(cols, workers)?.0)
    }

    /// The full basic distribution over every column.
    pub fn full_pmf(&self, workers: usize) -> Result<Pmf, EngineError> {
        self.pmf(&self.vars.clone(), workers)
    }
}
