//! Passive-model checks: correctness, noninterference modulo output,
//! gradual release and the GMW conditioning properties.

use std::collections::{BTreeSet, HashMap};

use super::{sorted, Model, Verdict, VerifyError, Witness};
use crate::dist::{Functionality, Pmf, Prob, Row};
use crate::lang::{client, corrupt_views, Memory, Partition, Protocol, Value, Var, VarKind};

fn mask(lo: usize, hi: usize) -> u128 {
    (lo..hi).fold(0u128, |m, i| m | 1 << i)
}

fn proj(r: Row, mask: u128) -> Row {
    Row {
        bits: r.bits & mask,
        bot: r.bot & mask,
    }
}

pub(crate) fn group(pmf: &Pmf, mask: u128) -> HashMap<Row, u64> {
    let mut out: HashMap<Row, u64> = HashMap::new();
    for (r, c) in pmf.counts() {
        *out.entry(proj(*r, mask)).or_default() += c;
    }
    out
}

/// Decodes the columns of `cols` selected by `mask`.
pub(crate) fn decode(cols: &[Var], r: Row, mask: u128) -> Memory {
    cols.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(i, x)| {
            let v = if r.bot >> i & 1 == 1 {
                Value::Bottom
            } else {
                Value::bit(r.bits >> i & 1 == 1)
            };
            (x.clone(), v)
        })
        .collect()
}

fn ratio(a: u64, b: u64) -> Prob {
    if b == 0 {
        Prob::from_integer(0)
    } else {
        Prob::new(a as u128, b as u128)
    }
}

fn split(secrets: &[Var], part: &Partition) -> (Vec<Var>, Vec<Var>) {
    secrets
        .iter()
        .cloned()
        .partition(|x| x.is_owned_by(&part.honest))
}

/// `BD(π)(F(m) | m) = 1` for every input memory of `f`.
pub fn check_passive_correct(model: &Model, f: &Functionality) -> Result<Verdict, VerifyError> {
    let ins = f.inputs().to_vec();
    let outs = f.outputs().to_vec();
    let cols = [ins.clone(), outs].concat();
    let pmf = model.pmf(&cols)?;
    let mi = mask(0, ins.len());
    let by_input = group(&pmf, mi);
    let joint = group(&pmf, u128::MAX);
    for (m, expected) in f.entries() {
        let secrets_row = encode(&cols, m);
        let full = encode(
            &cols,
            &m.union(expected).expect("disjoint input and output"),
        );
        let den = by_input.get(&secrets_row).copied().unwrap_or(0);
        let num = joint.get(&full).copied().unwrap_or(0);
        if den == 0 || num != den {
            return Ok(Verdict::fail(Witness::Output {
                secrets: m.clone(),
                expected: expected.clone(),
                prob: ratio(num, den),
            }));
        }
    }
    Ok(Verdict::pass())
}

fn encode(cols: &[Var], m: &Memory) -> Row {
    let mut r = Row::default();
    for (i, x) in cols.iter().enumerate() {
        match m.get(x) {
            Some(Value::Bottom) => r.bot |= 1 << i,
            Some(Value::Elem(e)) if e.value() == 1 => r.bits |= 1 << i,
            _ => {}
        }
    }
    r
}

/// Noninterference modulo output for one partition: conditioning on the
/// corrupt views adds nothing to what corrupt secrets and all outputs
/// say about honest secrets.
pub fn check_nimo(model: &Model, pi: &Protocol, part: &Partition) -> Result<Verdict, VerifyError> {
    let (s_h, s_c) = split(&model.secrets(), part);
    let outs = sorted(pi.outputs());
    let a = [s_c, outs].concat();
    let v = sorted(corrupt_views(pi, part));
    if v.is_empty() || s_h.is_empty() {
        return Ok(Verdict::pass());
    }
    let cols = [a.clone(), v.clone(), s_h].concat();
    let pmf = model.pmf(&cols)?;
    let ma = mask(0, a.len());
    let mv = mask(a.len(), a.len() + v.len());
    let ms = mask(a.len() + v.len(), cols.len());
    let c_a = group(&pmf, ma);
    let c_as = group(&pmf, ma | ms);
    let c_av = group(&pmf, ma | mv);
    let c_avs = group(&pmf, u128::MAX);
    let mut by_a: HashMap<Row, Vec<(Row, u64)>> = HashMap::new();
    for (r, n) in &c_as {
        by_a.entry(proj(*r, ma)).or_default().push((*r, *n));
    }
    let mut keys: Vec<&Row> = c_av.keys().collect();
    keys.sort();
    for av in keys {
        let ra = proj(*av, ma);
        let mut targets = by_a[&ra].clone();
        targets.sort();
        for (as_row, n_as) in targets {
            let full = Row {
                bits: as_row.bits | av.bits,
                bot: as_row.bot | av.bot,
            };
            let n_avs = c_avs.get(&full).copied().unwrap_or(0);
            if n_avs as u128 * c_a[&ra] as u128 != n_as as u128 * c_av[av] as u128 {
                return Ok(Verdict::fail(Witness::Conditional {
                    target: decode(&cols, full, ms),
                    given: decode(&cols, full, ma),
                    extra: decode(&cols, full, mv),
                    without: ratio(n_as, c_a[&ra]),
                    with: ratio(n_avs, c_av[av]),
                }));
            }
        }
    }
    Ok(Verdict::pass())
}

/// Exact independence of `left` and `right`, with a witness cell.
fn independence(model: &Model, left: &[Var], right: &[Var]) -> Result<Verdict, VerifyError> {
    if left.is_empty() || right.is_empty() {
        return Ok(Verdict::pass());
    }
    let cols = [left, right].concat();
    let pmf = model.pmf(&cols)?;
    let ml = mask(0, left.len());
    let mr = mask(left.len(), cols.len());
    let cl = group(&pmf, ml);
    let cr = group(&pmf, mr);
    let total = pmf.total();
    let mut cells: Vec<(Row, u64)> = pmf.counts().map(|(r, n)| (*r, *n)).collect();
    cells.sort();
    // Present cells carry all the mass, so checking them alone is exact.
    for (r, n) in cells {
        let (nl, nr) = (cl[&proj(r, ml)], cr[&proj(r, mr)]);
        if n as u128 * total as u128 != nl as u128 * nr as u128 {
            return Ok(Verdict::fail(Witness::Dependence {
                left: decode(&cols, r, ml),
                right: decode(&cols, r, mr),
                joint: ratio(n, total),
                product: ratio(nl, total) * ratio(nr, total),
            }));
        }
    }
    Ok(Verdict::pass())
}

/// Gradual release: messages received by corrupt clients are independent
/// of honest secrets.
pub fn check_gradual_release(
    model: &Model,
    pi: &Protocol,
    part: &Partition,
) -> Result<Verdict, VerifyError> {
    let (s_h, _) = split(&model.secrets(), part);
    let m_c = sorted(
        pi.written()
            .into_iter()
            .filter(|x| x.kind() == VarKind::Mesg && x.is_owned_by(&part.corrupt)),
    );
    independence(model, &m_c, &s_h)
}

/// Messages that honest clients send to corrupt ones.
pub fn corrupt_messages(pi: &Protocol, part: &Partition) -> Vec<Var> {
    sorted(
        corrupt_views(pi, part)
            .into_iter()
            .filter(|x| x.kind() == VarKind::Mesg),
    )
}

fn conditions(failed: Vec<String>) -> Verdict {
    if failed.is_empty() {
        Verdict::pass()
    } else {
        Verdict::fail(Witness::Conditions(failed))
    }
}

fn names(vars: &[Var]) -> String {
    vars.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// The gate-level conditions for an AND gate with inputs `<m[x]>`,
/// `<m[y]>` and output `<m[z]>`: determinism of the output, uniformity
/// of each output share, and separation of the output from its shares.
pub fn check_and_gate_tactic(
    model: &Model,
    x: &str,
    y: &str,
    z: &str,
) -> Result<Verdict, VerifyError> {
    let inputs = [Var::global_view(x), Var::global_view(y)];
    let gz = Var::global_view(z);
    let shares = [Var::mesg(z, client(1)), Var::mesg(z, client(2))];
    let cols = [inputs.to_vec(), vec![gz.clone()], shares.to_vec()].concat();
    let pmf = model.pmf(&cols)?;
    let mut failed = Vec::new();
    if !pmf.cond_det(&inputs, std::slice::from_ref(&gz))? {
        failed.push(format!("det {} -> {gz}", names(&inputs)));
    }
    for s in &shares {
        if !pmf.cond_uni(&inputs, std::slice::from_ref(s))? {
            failed.push(format!("uni {} -> {s}", names(&inputs)));
        }
    }
    if !pmf.cond_sep(&inputs, std::slice::from_ref(&gz), &shares)? {
        failed.push(format!(
            "sep {} ; {gz} ; {}",
            names(&inputs),
            names(&shares)
        ));
    }
    Ok(conditions(failed))
}

/// The circuit invariant at gate output `<m[z]>`: determined by the
/// secrets, corrupt-received messages uniform given the secrets, and the
/// output separated from its shares given the secrets.
pub fn check_gmw_invariant(
    model: &Model,
    pi: &Protocol,
    z: &str,
    part: &Partition,
) -> Result<Verdict, VerifyError> {
    let s = model.secrets();
    let gz = Var::global_view(z);
    let shares = [Var::mesg(z, client(1)), Var::mesg(z, client(2))];
    let m_c = corrupt_messages(pi, part);
    let mut cols: Vec<Var> = s.clone();
    let mut seen: BTreeSet<Var> = s.iter().cloned().collect();
    for x in std::iter::once(&gz).chain(&shares).chain(&m_c) {
        if seen.insert(x.clone()) {
            cols.push(x.clone());
        }
    }
    let pmf = model.pmf(&cols)?;
    let mut failed = Vec::new();
    if !pmf.cond_det(&s, std::slice::from_ref(&gz))? {
        failed.push(format!("det S -> {gz}"));
    }
    if !pmf.cond_uni(&s, &m_c)? {
        failed.push(format!("uni S -> {}", names(&m_c)));
    }
    if !pmf.cond_sep(&s, std::slice::from_ref(&gz), &shares)? {
        failed.push(format!("sep S ; {gz} ; {}", names(&shares)));
    }
    Ok(conditions(failed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Preprocessing;
    use crate::lang::{federation, parse_protocol};

    fn model(src: &str) -> (Protocol, Model) {
        let pi = parse_protocol(src).unwrap();
        let m = Model::new(&pi, &Preprocessing::default_for(&pi), 1).unwrap();
        (pi, m)
    }

    #[test]
    fn leaky_copy_fails_nimo_with_witness() {
        let (pi, m) = model("m[z]@2 := s[x]@1; out@2 := 0@2;");
        let part = Partition::new(&federation([1, 2]), &federation([2])).unwrap();
        let v = check_nimo(&m, &pi, &part).unwrap();
        assert!(!v.holds);
        let Some(Witness::Conditional { without, with, .. }) = v.witness else {
            panic!("expected a conditional witness");
        };
        assert_eq!(without, Prob::new(1, 2));
        assert_eq!(with, Prob::from_integer(1));
    }

    #[test]
    fn one_time_pad_is_released_gradually() {
        let (pi, m) = model("m[z]@2 := (s[x] xor r[y])@1;");
        let part = Partition::new(&federation([1, 2]), &federation([2])).unwrap();
        assert!(check_gradual_release(&m, &pi, &part).unwrap().holds);
        assert!(check_nimo(&m, &pi, &part).unwrap().holds);
        let (pi, m) = model("m[z]@2 := s[x]@1;");
        assert!(!check_gradual_release(&m, &pi, &part).unwrap().holds);
    }

    #[test]
    fn no_messages_release_nothing() {
        let (pi, m) = model("out@1 := s[x]@1;");
        let part = Partition::new(&federation([1, 2]), &federation([2])).unwrap();
        assert!(check_gradual_release(&m, &pi, &part).unwrap().holds);
    }

    #[test]
    fn constant_output_is_not_a_sum() {
        let (_, m) = model("out@1 := 0@1; m[a]@2 := s[x]@1; m[b]@1 := s[y]@2;");
        let x = Var::secret("x", client(1));
        let y = Var::secret("y", client(2));
        let f =
            Functionality::from_fn(vec![x.clone(), y.clone()], vec![Var::out(client(1))], |m| {
                let bit = |v: &Var| m.get(v) == Some(Value::bit(true));
                Memory::new().with(Var::out(client(1)), Value::bit(bit(&x) ^ bit(&y)))
            })
            .unwrap();
        let v = check_passive_correct(&m, &f).unwrap();
        assert!(!v.holds);
        assert!(matches!(v.witness, Some(Witness::Output { .. })));
    }
}
