//! Active adversaries: a finite strategy family, adversarial inputs, and
//! the cheating-detection and integrity checks.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::checks::{decode, group};
use super::{project, sorted, Model, Reading, Verdict, VerifyError, Witness};
use crate::dist::{Pmf, Preprocessing, Prob, Row};
use crate::engine::{Aborts, Engine};
use crate::field::Modulus;
use crate::lang::{
    corrupt_views, eval_expr, honest_views, mems, BinOp, Expr, ExprStrategy, Partition, Protocol,
    Var, VarKind,
};

/// Largest strategy family [`enumerate_adversaries`] will produce.
pub const MAX_STRATEGIES: u128 = 1 << 16;

/// View-dependent replacements are tabulated only over this many inputs.
const MAX_TABLE_INPUTS: usize = 3;

/// Commands computed by a corrupt client whose result an honest client
/// sees: corrupt-to-honest messages and corrupt reveals.
pub fn decision_points(pi: &Protocol, part: &Partition) -> Vec<usize> {
    let to_honest = honest_views(pi, part);
    pi.commands
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            part.is_corrupt(c.computing_client())
                && c.target().is_some_and(|t| to_honest.contains(&t))
        })
        .map(|(i, _)| i)
        .collect()
}

fn var_expr(x: &Var) -> Expr {
    Expr::Ref(x.kind(), x.name().to_string())
}

/// The sum of minterms of truth table `t` over `vars` (row `j` in `mems`
/// order has value bit `j` of `t`).
fn table_expr(vars: &[Var], t: u64) -> Expr {
    let n = vars.len();
    let mut terms = Vec::new();
    for j in 0..(1usize << n) {
        if t >> j & 1 == 0 {
            continue;
        }
        let lits: Vec<Expr> = vars
            .iter()
            .enumerate()
            .map(|(i, x)| {
                if j >> (n - 1 - i) & 1 == 1 {
                    var_expr(x)
                } else {
                    Expr::not(var_expr(x))
                }
            })
            .collect();
        let term = lits
            .into_iter()
            .reduce(|a, b| Expr::bin(BinOp::And, a, b))
            .unwrap_or(Expr::Const(1));
        terms.push(term);
    }
    terms
        .into_iter()
        .reduce(|a, b| Expr::bin(BinOp::Or, a, b))
        .unwrap_or(Expr::Const(0))
}

/// Replacement choices at one decision point; `None` keeps the original.
fn options(pi: &Protocol, index: usize, view_dependent: bool) -> Vec<Option<Expr>> {
    let mut out = vec![None, Some(Expr::Const(0)), Some(Expr::Const(1))];
    if !view_dependent {
        return out;
    }
    let cmd = &pi.commands[index];
    let client = cmd.computing_client();
    let original = cmd.expr().expect("decision points are assignments");
    let all = original.vars(client);
    let readable: Vec<Var> = all
        .iter()
        .filter(|x| x.kind() == VarKind::Reveal || x.owner() == Some(client))
        .cloned()
        .collect();
    let n = readable.len();
    if n == 0 || n > MAX_TABLE_INPUTS {
        return out;
    }
    // The original's own table, when it depends on the readable inputs only.
    let own = (readable.len() == all.len()).then(|| {
        mems(&readable, Modulus::F2)
            .enumerate()
            .fold(0u64, |t, (j, m)| {
                let v = eval_expr(&m, original, client, Modulus::F2).map_or(0, |v| v.value());
                t | (v & 1) << j
            })
    });
    let full = (1u64 << (1u64 << n)) - 1;
    for t in 1..full {
        if Some(t) != own {
            out.push(Some(table_expr(&readable, t)));
        }
    }
    out
}

/// A finite adversary family for `part`: every combination of
/// {keep, 0, 1} at each decision point, extended to every truth table over
/// the corrupt client's local inputs when there are at most `budget`
/// decision points. The passive strategy comes first.
pub fn enumerate_adversaries(
    pi: &Protocol,
    part: &Partition,
    budget: usize,
) -> Result<Vec<ExprStrategy>, VerifyError> {
    let points = decision_points(pi, part);
    let view_dependent = !points.is_empty() && points.len() <= budget;
    let choices: Vec<Vec<Option<Expr>>> = points
        .iter()
        .map(|&i| options(pi, i, view_dependent))
        .collect();
    let count = choices
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if count > MAX_STRATEGIES {
        return Err(VerifyError::Budget {
            count,
            limit: MAX_STRATEGIES,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; points.len()];
    loop {
        let mut s = ExprStrategy::default();
        for (k, &i) in points.iter().enumerate() {
            if let Some(e) = &choices[k][digits[k]] {
                s.rewrites.insert(i, e.clone());
            }
        }
        out.push(s);
        // Odometer with the last decision point varying fastest.
        let mut k = points.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < choices[k].len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// The honest initial state that adversarial runs are anchored to.
pub fn anchor(model: &Model, pi: &Protocol, part: &Partition, reading: Reading) -> Vec<Var> {
    let written = pi.written();
    model
        .vars()
        .iter()
        .filter(|x| x.is_owned_by(&part.honest) && !written.contains(x))
        .filter(|x| reading == Reading::WithPreprocessing || x.kind() == VarKind::Secret)
        .cloned()
        .collect()
}

fn mask_of(cols: &[Var], vars: &[Var]) -> u128 {
    cols.iter()
        .enumerate()
        .filter(|(_, x)| vars.contains(x))
        .fold(0u128, |m, (i, _)| m | 1 << i)
}

fn vars_of(cols: &[Var], mask: u128) -> Vec<Var> {
    cols.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, x)| x.clone())
        .collect()
}

/// Least subsets of `candidates` that depend on `x_h` given `anchor`: the
/// union of every dependent subset of the smallest dependent size.
fn inputs_from(
    pmf: &Pmf,
    anchor: &[Var],
    candidates: &[Var],
    x_h: &[Var],
) -> Result<BTreeSet<Var>, VerifyError> {
    let n = candidates.len();
    if x_h.is_empty() || n == 0 {
        return Ok(BTreeSet::new());
    }
    if n > 20 {
        return Err(VerifyError::Budget {
            count: 1u128 << n,
            limit: 1 << 20,
        });
    }
    for size in 1..=n {
        let mut found = BTreeSet::new();
        for subset in 1u32..(1u32 << n) {
            if subset.count_ones() as usize != size {
                continue;
            }
            let xs: Vec<Var> = (0..n)
                .filter(|i| subset >> i & 1 == 1)
                .map(|i| candidates[i].clone())
                .collect();
            if !pmf.cond_sep(anchor, &xs, x_h)? {
                found.extend(xs);
            }
        }
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Ok(BTreeSet::new())
}

/// The adversarial inputs to `x_h`: the corrupt-to-honest views on which
/// `x_h` depends in the passive runs, given the anchor of `reading`.
pub fn adversarial_inputs(
    model: &Model,
    pi: &Protocol,
    part: &Partition,
    x_h: &[Var],
    reading: Reading,
) -> Result<BTreeSet<Var>, VerifyError> {
    let k = anchor(model, pi, part, reading);
    let candidates = sorted(honest_views(pi, part));
    let cols = columns(&[&k, &candidates, x_h]);
    let pmf = model.pmf(&cols)?;
    inputs_from(&pmf, &k, &candidates, x_h)
}

fn columns(parts: &[&[Var]]) -> Vec<Var> {
    let mut seen = BTreeSet::new();
    parts
        .iter()
        .flat_map(|p| p.iter())
        .filter(|x| seen.insert((*x).clone()))
        .cloned()
        .collect()
}

struct Frame {
    cols: Vec<Var>,
    anchor: Vec<Var>,
    candidates: Vec<Var>,
    mk: u128,
    mc: u128,
    mx: u128,
    passive: Pmf,
}

impl Frame {
    fn new(
        model: &Model,
        pi: &Protocol,
        part: &Partition,
        reading: Reading,
    ) -> Result<Frame, VerifyError> {
        let k = anchor(model, pi, part, reading);
        let candidates = sorted(honest_views(pi, part));
        let x_all = sorted(
            corrupt_views(pi, part).into_iter().chain(
                pi.outputs()
                    .into_iter()
                    .filter(|o| o.is_owned_by(&part.honest)),
            ),
        );
        let cols = columns(&[&k, &candidates, &x_all]);
        let passive = model.pmf(&cols)?;
        Ok(Frame {
            mk: mask_of(&cols, &k),
            mc: mask_of(&cols, &candidates),
            mx: mask_of(&cols, &x_all),
            cols,
            anchor: k,
            candidates,
            passive,
        })
    }

    fn adversarial(
        &self,
        pi: &Protocol,
        preproc: &Preprocessing,
        part: &Partition,
        strategy: &ExprStrategy,
        workers: usize,
    ) -> Result<Vec<(Row, u64)>, VerifyError> {
        let engine = Engine::compile(pi, preproc, Some((strategy, part)))?;
        let pmf = project(&engine, &self.cols, workers, false)?;
        let mut rows: Vec<(Row, u64)> = pmf.counts().map(|(r, n)| (*r, *n)).collect();
        rows.sort();
        Ok(rows)
    }
}

fn proj(r: Row, mask: u128) -> Row {
    Row {
        bits: r.bits & mask,
        bot: r.bot & mask,
    }
}

/// Cheating detection: every adversarial run agrees with some passive run
/// on the honest anchor, the defined honest-to-corrupt views and honest
/// outputs `X_H`, and the defined adversarial inputs to `X_H`.
pub fn check_cheating_detection(
    model: &Model,
    pi: &Protocol,
    preproc: &Preprocessing,
    part: &Partition,
    strategies: &[ExprStrategy],
    reading: Reading,
) -> Result<Verdict, VerifyError> {
    let frame = Frame::new(model, pi, part, reading)?;
    let mut inputs: HashMap<u128, u128> = HashMap::new();
    let mut passive_sets: HashMap<u128, HashSet<Row>> = HashMap::new();
    for strategy in strategies {
        if strategy.is_identity() {
            continue;
        }
        for (row, _) in frame.adversarial(pi, preproc, part, strategy, model.workers())? {
            let defined = !row.bot;
            let xh_mask = frame.mx & defined;
            let xc_mask = match inputs.get(&xh_mask) {
                Some(m) => *m,
                None => {
                    let x_h = vars_of(&frame.cols, xh_mask);
                    let xc = inputs_from(&frame.passive, &frame.anchor, &frame.candidates, &x_h)?;
                    let m = mask_of(&frame.cols, &xc.into_iter().collect::<Vec<_>>());
                    inputs.insert(xh_mask, m);
                    m
                }
            };
            let match_mask = frame.mk | xh_mask | (xc_mask & frame.mc & defined);
            let set = passive_sets
                .entry(match_mask)
                .or_insert_with(|| group(&frame.passive, match_mask).into_keys().collect());
            if !set.contains(&proj(row, match_mask)) {
                return Ok(Verdict::fail(Witness::Run {
                    strategy: strategy.to_string(),
                    run: decode(&frame.cols, row, u128::MAX),
                }));
            }
        }
    }
    Ok(Verdict::pass())
}

/// Integrity: for every adversarial run, the distribution of the defined
/// honest responses given the anchor and the defined corrupt-to-honest
/// views equals the passive one.
pub fn check_integrity(
    model: &Model,
    pi: &Protocol,
    preproc: &Preprocessing,
    part: &Partition,
    strategies: &[ExprStrategy],
    reading: Reading,
) -> Result<Verdict, VerifyError> {
    let frame = Frame::new(model, pi, part, reading)?;
    let mut passive_groups: HashMap<u128, HashMap<Row, u64>> = HashMap::new();
    let mut passive_count = |mask: u128, row: Row| -> u64 {
        passive_groups
            .entry(mask)
            .or_insert_with(|| group(&frame.passive, mask))
            .get(&proj(row, mask))
            .copied()
            .unwrap_or(0)
    };
    for strategy in strategies {
        let rows = frame.adversarial(pi, preproc, part, strategy, model.workers())?;
        // (key mask, response mask, key row) -> response row -> count
        let mut groups: HashMap<(u128, u128, Row), HashMap<Row, u64>> = HashMap::new();
        for (row, n) in rows {
            let defined = !row.bot;
            let key_mask = frame.mk | (frame.mc & defined);
            let resp_mask = frame.mx & defined;
            *groups
                .entry((key_mask, resp_mask, proj(row, key_mask)))
                .or_default()
                .entry(proj(row, resp_mask))
                .or_default() += n;
        }
        let mut keys: Vec<&(u128, u128, Row)> = groups.keys().collect();
        keys.sort();
        for key in keys {
            let (key_mask, resp_mask, key_row) = *key;
            let responses = &groups[key];
            let total: u64 = responses.values().sum();
            let p_key = passive_count(key_mask, key_row);
            let mut resp: Vec<(&Row, &u64)> = responses.iter().collect();
            resp.sort();
            for (r, n) in resp {
                let full = Row {
                    bits: key_row.bits | r.bits,
                    bot: key_row.bot | r.bot,
                };
                let p_joint = passive_count(key_mask | resp_mask, full);
                let adversarial = Prob::new(*n as u128, total as u128);
                let passive = if p_key == 0 {
                    Prob::from_integer(0)
                } else {
                    Prob::new(p_joint as u128, p_key as u128)
                };
                if adversarial != passive {
                    return Ok(Verdict::fail(Witness::Response {
                        strategy: strategy.to_string(),
                        key: decode(&frame.cols, key_row, key_mask),
                        response: decode(&frame.cols, *r, resp_mask),
                        adversarial,
                        passive,
                    }));
                }
            }
        }
    }
    Ok(Verdict::pass())
}

/// How many runs of `strategy` abort, and where.
pub fn abort_profile(
    pi: &Protocol,
    preproc: &Preprocessing,
    part: &Partition,
    strategy: &ExprStrategy,
    workers: usize,
) -> Result<Aborts, VerifyError> {
    let engine = Engine::compile(pi, preproc, Some((strategy, part)))?;
    Ok(engine.pmf_with_aborts(&[], workers)?.1)
}
