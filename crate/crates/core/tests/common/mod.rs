//! Random small pmfs and the algebraic laws they should obey.
#![allow(dead_code)]

use overture::dist::{Pmf, Prob, Row};
use overture::field::Modulus;
use overture::lang::{client, mems, Var};
use proptest::prelude::*;

/// A pmf over at most four binary columns, with each column assigned one
/// role: 0 = S, 1 = V1, 2 = V2, 3 = V3, 4 = unused.
#[derive(Debug, Clone)]
pub struct Sample {
    pub pmf: Pmf,
    pub roles: Vec<u8>,
    /// Two subsets used for the chain rule and marginal laws.
    pub split: u8,
    pub nested: (u8, u8),
}

pub fn columns(n: usize) -> Vec<Var> {
    (0..n)
        .map(|i| Var::secret(format!("v{i}"), client(1)))
        .collect()
}

fn sparse(n: usize) -> impl Strategy<Value = Vec<(Row, u64)>> {
    prop::collection::vec((0u128..(1 << n), 1u64..5), 1..9).prop_map(|cells| {
        cells
            .into_iter()
            .map(|(bits, c)| (Row { bits, bot: 0 }, c))
            .collect()
    })
}

/// Uniform base bits with the remaining columns given by truth tables
/// over them, so that determinism and uniformity actually occur.
fn structured(n: usize) -> impl Strategy<Value = Vec<(Row, u64)>> {
    (1..=n, prop::collection::vec(any::<u16>(), n)).prop_map(move |(k, tables)| {
        (0..1u128 << k)
            .map(|base| {
                let mut bits = base;
                for (j, t) in tables.iter().enumerate().skip(k) {
                    let bit = (*t as u128 >> (base & 0xf)) & 1;
                    bits |= bit << j;
                }
                (Row { bits, bot: 0 }, 1)
            })
            .collect()
    })
}

pub fn sample() -> impl Strategy<Value = Sample> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop_oneof![sparse(n), structured(n)],
                prop::collection::vec(0u8..5, n),
                0u8..16,
                (0u8..16, 0u8..16),
            )
        })
        .prop_map(|(n, cells, roles, split, (a, b))| {
            let mask = (1u8 << n) - 1;
            let outer = (a | b) & mask;
            Sample {
                pmf: Pmf::from_counts(columns(n), cells).unwrap(),
                roles,
                split: split & mask,
                nested: (a & outer, outer),
            }
        })
}

pub fn subset(vars: &[Var], mask: u8) -> Vec<Var> {
    vars.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, x)| x.clone())
        .collect()
}

pub fn role(s: &Sample, r: u8) -> Vec<Var> {
    s.pmf
        .vars()
        .iter()
        .zip(&s.roles)
        .filter(|(_, k)| **k == r)
        .map(|(x, _)| x.clone())
        .collect()
}

/// Mass, chain rule and marginal composition; returns the laws broken.
pub fn algebra_violations(s: &Sample) -> Vec<&'static str> {
    let p = &s.pmf;
    let vars = p.vars().to_vec();
    let mut broken = Vec::new();
    let sum: Prob = p.support().iter().map(|(_, w)| *w).sum();
    if sum != Prob::from_integer(1) {
        broken.push("mass");
    }
    let x1 = subset(&vars, s.split);
    let x2 = subset(&vars, !s.split);
    let marg: Prob = p
        .marginal(&x1)
        .unwrap()
        .support()
        .iter()
        .map(|(_, w)| *w)
        .sum();
    if marg != Prob::from_integer(1) {
        broken.push("marginal mass");
    }
    for m1 in mems(&x1, Modulus::F2) {
        for m2 in mems(&x2, Modulus::F2) {
            let joint = p.prob(&m1.union(&m2).unwrap()).unwrap();
            let pm2 = p.prob(&m2).unwrap();
            if pm2 > Prob::from_integer(0) && joint != p.prob_given(&m1, &m2).unwrap() * pm2 {
                broken.push("chain rule");
            }
        }
    }
    let (inner, outer) = s.nested;
    let (xi, xo) = (subset(&vars, inner), subset(&vars, outer));
    let twice = p.marginal(&xo).unwrap().marginal(&xi).unwrap();
    if twice != p.marginal(&xi).unwrap() {
        broken.push("marginal composition");
    }
    broken
}

/// Which of the three composition implications fail on `s`, as stated:
/// (1) det S→V1, det V1→V2 ⇒ det S→V2;
/// (2) det S→V1, uni V1→V2 ⇒ uni S→V2;
/// (3) det S→V1, sep V1;V2,V3 ⇒ sep S;V2,V3.
pub fn composition_violations(s: &Sample) -> [bool; 3] {
    let p = &s.pmf;
    let (sv, v1, v2, v3) = (role(s, 0), role(s, 1), role(s, 2), role(s, 3));
    let det = p.cond_det(&sv, &v1).unwrap();
    [
        det && p.cond_det(&v1, &v2).unwrap() && !p.cond_det(&sv, &v2).unwrap(),
        det && p.cond_uni(&v1, &v2).unwrap() && !p.cond_uni(&sv, &v2).unwrap(),
        det && p.cond_sep(&v1, &v2, &v3).unwrap() && !p.cond_sep(&sv, &v2, &v3).unwrap(),
    ]
}

/// (2) and (3) with the extra hypothesis that S is separated from the
/// conclusion's variables given V1, under which both hold.
pub fn strengthened_violations(s: &Sample) -> [bool; 2] {
    let p = &s.pmf;
    let (sv, v1, v2, v3) = (role(s, 0), role(s, 1), role(s, 2), role(s, 3));
    let det = p.cond_det(&sv, &v1).unwrap();
    let v23 = [v2.clone(), v3.clone()].concat();
    [
        det && p.cond_sep(&v1, &sv, &v2).unwrap()
            && p.cond_uni(&v1, &v2).unwrap()
            && !p.cond_uni(&sv, &v2).unwrap(),
        det && p.cond_sep(&v1, &sv, &v23).unwrap()
            && p.cond_sep(&v1, &v2, &v3).unwrap()
            && !p.cond_sep(&sv, &v2, &v3).unwrap(),
    ]
}

/// Expressions readable at `client` given the messages it has received.
fn atoms(client: u32, inbox: &[String]) -> Vec<String> {
    let own = if client == 1 { "s[x]" } else { "s[y]" };
    let mut out = vec![own.to_string(), "r[a]".into(), "r[b]".into(), "1".into()];
    out.extend(inbox.iter().cloned());
    out
}

fn expr(atoms: &[String], picks: &[(u8, u8, u8)]) -> String {
    let pick = |i: u8| atoms[i as usize % atoms.len()].clone();
    let mut e = pick(picks[0].1);
    for &(op, a, _) in &picks[1..] {
        e = match op % 4 {
            0 => format!("({e} + {})", pick(a)),
            1 => format!("({e} * {})", pick(a)),
            2 => format!("not ({e})"),
            _ => format!("({e} xor {})", pick(a)),
        };
    }
    e
}

/// Straight-line two-party protocols of sends and reveals ending in an
/// output, as source text.
pub fn protocol() -> impl Strategy<Value = String> {
    prop::collection::vec(
        (
            any::<bool>(),
            0u8..3,
            prop::collection::vec((any::<u8>(), any::<u8>(), any::<u8>()), 1..4),
        ),
        1..6,
    )
    .prop_map(|cmds| {
        let mut inbox: [Vec<String>; 2] = [Vec::new(), Vec::new()];
        let mut text = String::new();
        for (i, (from_one, kind, picks)) in cmds.iter().enumerate() {
            let src = if *from_one { 1 } else { 2 };
            let e = expr(&atoms(src, &inbox[src as usize - 1]), picks);
            match kind {
                0 => {
                    text += &format!("p[w{i}] := ({e})@{src};\n");
                    inbox[0].push(format!("p[w{i}]"));
                    inbox[1].push(format!("p[w{i}]"));
                }
                _ => {
                    let dest = 3 - src;
                    text += &format!("m[w{i}]@{dest} := ({e})@{src};\n");
                    inbox[dest as usize - 1].push(format!("m[w{i}]"));
                }
            }
        }
        let last = expr(&atoms(1, &inbox[0]), &[(0, 0, 0), (0, 200, 0), (3, 3, 0)]);
        text += &format!("out@1 := ({last})@1;\n");
        text
    })
}
