//! The checked-in protocol corpus: sources, preprocessing predicates,
//! reference functionalities and expected verdicts.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::dist::{Functionality, FunctionalityError, Preprocessing};
use crate::lang::{
    client, parse_protocol, validate_with_preprocessing, Federation, Partition, Protocol, Var,
    Violation,
};
use crate::lex::SyntaxError;
use crate::prelude::{expand, PreludeError};
use crate::verifier::Property;

pub const MANIFEST: &str = include_str!("../protocols/manifest.txt");

/// Every checked-in source file by name.
pub const SOURCES: &[(&str, &str)] = &[
    (
        "shamir_add3.ovt",
        include_str!("../protocols/shamir_add3.ovt"),
    ),
    ("otp.ovt", include_str!("../protocols/otp.ovt")),
    ("leaky.ovt", include_str!("../protocols/leaky.ovt")),
    ("gmw.pre", include_str!("../protocols/gmw.pre")),
    ("gmw_and.pre", include_str!("../protocols/gmw_and.pre")),
    ("gmw_xor.pre", include_str!("../protocols/gmw_xor.pre")),
    (
        "gmw_depth2.pre",
        include_str!("../protocols/gmw_depth2.pre"),
    ),
    ("and_gate.pre", include_str!("../protocols/and_gate.pre")),
    ("bdoz.pre", include_str!("../protocols/bdoz.pre")),
    ("beaver.pre", include_str!("../protocols/beaver.pre")),
    (
        "shamir_add3.fn",
        include_str!("../protocols/shamir_add3.fn"),
    ),
    ("leaky.fn", include_str!("../protocols/leaky.fn")),
    ("gmw_and.fn", include_str!("../protocols/gmw_and.fn")),
    ("gmw_xor.fn", include_str!("../protocols/gmw_xor.fn")),
    ("gmw_depth2.fn", include_str!("../protocols/gmw_depth2.fn")),
    ("beaver.fn", include_str!("../protocols/beaver.fn")),
];

pub fn source(file: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == file).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StdlibError {
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("no package `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Prelude(#[from] PreludeError),
    #[error(transparent)]
    Functionality(#[from] FunctionalityError),
    #[error("residual protocol is not well formed: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("netlist: {0}")]
    Netlist(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocKind {
    /// Uniform over the secrets.
    Default,
    /// Uniform over the secrets and every message read but not written.
    UniformInputs,
    /// BDOZ shares, MACs, keys and a Beaver triple.
    Bdoz,
    /// [`PreprocKind::Bdoz`] with client 2's keys and global key fixed to 0.
    BdozTrimmed,
}

impl PreprocKind {
    pub fn parse(s: &str) -> Option<PreprocKind> {
        Some(match s {
            "default" => PreprocKind::Default,
            "uniform-inputs" => PreprocKind::UniformInputs,
            "bdoz" => PreprocKind::Bdoz,
            "bdoz-trimmed" => PreprocKind::BdozTrimmed,
            _ => return None,
        })
    }

    pub fn build(self, pi: &Protocol) -> Preprocessing {
        match self {
            PreprocKind::Default => Preprocessing::default_for(pi),
            PreprocKind::UniformInputs => Preprocessing::uniform_inputs(pi),
            PreprocKind::Bdoz => bdoz_preproc_enumerate(),
            PreprocKind::BdozTrimmed => bdoz_preproc_trimmed(),
        }
    }
}

/// A verdict the verifier is expected to reproduce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub property: Property,
    pub corrupt: Option<Federation>,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct Package {
    pub name: String,
    pub source: &'static str,
    pub lib: Option<&'static str>,
    pub federation: Federation,
    pub preproc: PreprocKind,
    pub functionality: Option<Functionality>,
    pub expected: Vec<Expectation>,
}

impl Package {
    /// The full source text: library declarations followed by the main
    /// program.
    pub fn text(&self) -> String {
        let main = source(self.source).expect("manifest sources are checked in");
        match self.lib {
            Some(lib) => format!("{}\n{main}", source(lib).expect("checked-in library")),
            None => main.to_string(),
        }
    }

    pub fn is_prelude(&self) -> bool {
        self.source.ends_with(".pre")
    }

    /// The Overture protocol, expanded from Prelude when needed and
    /// validated against the package preprocessing.
    pub fn protocol(&self) -> Result<Protocol, StdlibError> {
        let pi = if self.is_prelude() {
            expand(&self.text())?
        } else {
            parse_protocol(&self.text())?
        };
        let pre = self.preproc.build(&pi);
        let initial: BTreeSet<Var> = pre.vars().iter().cloned().collect();
        let violations = validate_with_preprocessing(&pi, &self.federation, &initial);
        if !violations.is_empty() {
            return Err(StdlibError::Invalid(violations));
        }
        Ok(pi)
    }

    pub fn preprocessing(&self, pi: &Protocol) -> Preprocessing {
        self.preproc.build(pi)
    }

    pub fn partition(&self, corrupt: &Federation) -> Option<Partition> {
        Partition::new(&self.federation, corrupt)
    }
}

fn ids(s: &str) -> Option<Federation> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().ok().filter(|&n| n > 0).map(client))
        .collect()
}

/// Every package of the manifest, in manifest order.
pub fn packages() -> Result<Vec<Package>, StdlibError> {
    let mut out: Vec<Package> = Vec::new();
    for (n, raw) in MANIFEST.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| StdlibError::Manifest {
            line: n + 1,
            msg: msg.to_string(),
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["package", name, fields @ ..] => {
                let mut pkg = Package {
                    name: name.to_string(),
                    source: "",
                    lib: None,
                    federation: Federation::new(),
                    preproc: PreprocKind::Default,
                    functionality: None,
                    expected: vec![],
                };
                for f in fields {
                    let (k, v) = f.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                    let file = || {
                        SOURCES
                            .iter()
                            .find(|(n, _)| *n == v)
                            .map(|(n, _)| *n)
                            .ok_or_else(|| bad(&format!("unknown file {v}")))
                    };
                    match k {
                        "source" => pkg.source = file()?,
                        "lib" => pkg.lib = Some(file()?),
                        "clients" => pkg.federation = ids(v).ok_or_else(|| bad("bad clients"))?,
                        "preproc" => {
                            pkg.preproc =
                                PreprocKind::parse(v).ok_or_else(|| bad("unknown preprocessing"))?
                        }
                        "func" => {
                            pkg.functionality = Some(Functionality::parse(
                                source(file()?).expect("checked-in table"),
                            )?)
                        }
                        _ => return Err(bad(&format!("unknown key {k}"))),
                    }
                }
                if pkg.source.is_empty() || pkg.federation.is_empty() {
                    return Err(bad("package needs source and clients"));
                }
                out.push(pkg);
            }
            ["expect", name, property, corrupt, verdict] => {
                let property: Property = property.parse().map_err(|_| bad("unknown property"))?;
                let corrupt = match *corrupt {
                    "-" => None,
                    c => Some(ids(c).ok_or_else(|| bad("bad corrupt set"))?),
                };
                let holds = match *verdict {
                    "pass" => true,
                    "fail" => false,
                    _ => return Err(bad("verdict must be pass or fail")),
                };
                let pkg = out
                    .iter_mut()
                    .find(|p| p.name == *name)
                    .ok_or_else(|| bad("expectation before its package"))?;
                pkg.expected.push(Expectation {
                    property,
                    corrupt,
                    holds,
                });
            }
            _ => return Err(bad("expected `package` or `expect`")),
        }
    }
    Ok(out)
}

pub fn package(name: &str) -> Result<Package, StdlibError> {
    packages()?
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| StdlibError::Unknown(name.to_string()))
}

pub fn shamir_add3() -> Package {
    package("shamir_add3").expect("checked-in package")
}

pub fn bdoz_package() -> Package {
    package("beaver").expect("checked-in package")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOp {
    And,
    Xor,
}

/// A 2-party boolean circuit: input secrets with their owners, then gates
/// in evaluation order. The last gate is the output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub inputs: Vec<(String, u32)>,
    pub gates: Vec<(String, GateOp, String, String)>,
}

/// The Prelude main program for `netlist` over the GMW library: input
/// encodings and gates as let-bindings, with the output gate inlined
/// into the decode.
pub fn gmw_circuit(netlist: &Netlist) -> Result<String, StdlibError> {
    let err = |m: String| StdlibError::Netlist(m);
    let ident = |s: &str| {
        !s.is_empty()
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
    };
    let mut wires: BTreeSet<&str> = BTreeSet::new();
    let mut out = String::new();
    for (name, owner) in &netlist.inputs {
        if !ident(name) || !wires.insert(name) {
            return Err(err(format!("bad or duplicate input `{name}`")));
        }
        if !matches!(owner, 1 | 2) {
            return Err(err(format!("input `{name}` belongs to client {owner}")));
        }
        let _ = writeln!(
            out,
            "let {name} = encodegmw(\"{name}\",{},{owner}) in",
            3 - owner
        );
    }
    let Some(last) = netlist.gates.len().checked_sub(1) else {
        return Err(err("no gates".into()));
    };
    for (i, (id, op, a, b)) in netlist.gates.iter().enumerate() {
        for w in [a, b] {
            if !wires.contains(w.as_str()) {
                return Err(err(format!("gate `{id}` reads undefined wire `{w}`")));
            }
        }
        if !ident(id) || !wires.insert(id) {
            return Err(err(format!("duplicate gate id `{id}`")));
        }
        let f = match op {
            GateOp::And => "andgmw",
            GateOp::Xor => "xorgmw",
        };
        let call = format!("{f}(\"{id}\",{a},{b})");
        if i == last {
            let _ = writeln!(out, "decodegmw({call})");
        } else {
            let _ = writeln!(out, "let {id} = {call} in");
        }
    }
    Ok(out)
}

/// The residual protocol of [`gmw_circuit`].
pub fn gmw_protocol(netlist: &Netlist) -> Result<Protocol, StdlibError> {
    let text = format!(
        "{}\n{}",
        source("gmw.pre").expect("checked-in library"),
        gmw_circuit(netlist)?
    );
    Ok(expand(&text)?)
}

const WIRES: [&str; 5] = ["a", "b", "c", "x", "y"];

/// The variables of BDOZ preprocessing, in enumerator bit order: the two
/// secrets, then share, MAC and key of each wire on each client, then the
/// two global keys.
pub fn bdoz_vars() -> Vec<Var> {
    let mut vars = vec![Var::secret("x", client(1)), Var::secret("y", client(2))];
    for w in WIRES {
        for c in [1, 2] {
            for suffix in ["s", "m", "k"] {
                vars.push(Var::mesg(format!("{w}{suffix}"), client(c)));
            }
        }
    }
    vars.push(Var::mesg("delta", client(1)));
    vars.push(Var::mesg("delta", client(2)));
    vars
}

/// Position of `m[w s|m|k]@c` in [`bdoz_vars`].
fn slot(w: usize, c: usize, part: usize) -> usize {
    2 + w * 6 + c * 3 + part
}

const DELTA: usize = 32;

/// Free bits: x, y; shares a1 a2 b1 b2 c1 x1 y1; keys of client 1 for
/// a..y; global key of client 1; keys of client 2; global key of client 2.
const FREE_BITS: u32 = 21;

fn bdoz_memory(i: u64) -> u128 {
    let bit = |k: u32| (i >> k & 1) as u8;
    let (x, y) = (bit(0), bit(1));
    let mut share = [[0u8; 2]; 5];
    share[0] = [bit(2), bit(3)];
    share[1] = [bit(4), bit(5)];
    let c1 = bit(6);
    share[2] = [
        c1,
        ((share[0][0] ^ share[0][1]) & (share[1][0] ^ share[1][1])) ^ c1,
    ];
    share[3] = [bit(7), x ^ bit(7)];
    share[4] = [bit(8), y ^ bit(8)];
    let mut key = [[0u8; 2]; 5];
    for (w, k) in key.iter_mut().enumerate() {
        k[0] = bit(9 + w as u32);
        k[1] = bit(15 + w as u32);
    }
    let delta = [bit(14), bit(20)];
    let mut out = x as u128 | (y as u128) << 1;
    for w in 0..5 {
        for c in 0..2 {
            let other = 1 - c;
            let mac = key[w][other] ^ (delta[other] & share[w][c]);
            out |= (share[w][c] as u128) << slot(w, c, 0);
            out |= (mac as u128) << slot(w, c, 1);
            out |= (key[w][c] as u128) << slot(w, c, 2);
        }
    }
    out | (delta[0] as u128) << DELTA | (delta[1] as u128) << (DELTA + 1)
}

/// Every memory satisfying BDOZ preprocessing: 2^21 of them.
pub fn bdoz_preproc_enumerate() -> Preprocessing {
    Preprocessing::from_fn("bdoz", bdoz_vars(), 1 << FREE_BITS, bdoz_memory)
}

/// The BDOZ memories with client 2's five keys and global key fixed to 0:
/// 2^15 of them. Client 1 is honest in the integrity experiments, so only
/// client 1's keys authenticate anything a corrupt client 2 sends.
pub fn bdoz_preproc_trimmed() -> Preprocessing {
    Preprocessing::from_fn("bdoz-trimmed", bdoz_vars(), 1 << 15, bdoz_memory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::federation;

    #[test]
    fn manifest_loads() {
        let pkgs = packages().unwrap();
        assert_eq!(pkgs.len(), 8);
        let shamir = shamir_add3();
        assert_eq!(shamir.federation, federation([1, 2, 3]));
        assert_eq!(shamir.protocol().unwrap().len(), 12);
        assert_eq!(shamir.expected.len(), 8);
    }

    #[test]
    fn netlist_errors() {
        let ok = Netlist {
            inputs: vec![("s1".into(), 1), ("s2".into(), 2)],
            gates: vec![("z".into(), GateOp::And, "s1".into(), "s2".into())],
        };
        assert!(gmw_circuit(&ok).is_ok());
        let mut dup = ok.clone();
        dup.gates
            .push(("z".into(), GateOp::Xor, "s1".into(), "z".into()));
        assert!(gmw_circuit(&dup).is_err());
        let mut fwd = ok.clone();
        fwd.gates[0].3 = "w".into();
        assert!(gmw_circuit(&fwd).is_err());
        let empty = Netlist {
            inputs: ok.inputs.clone(),
            gates: vec![],
        };
        assert!(gmw_circuit(&empty).is_err());
    }

    #[test]
    fn trimmed_fixes_client_two_keys() {
        let pre = bdoz_preproc_trimmed();
        for i in 0..pre.count() {
            let bits = pre.bits(i);
            for w in 0..5 {
                assert_eq!(bits >> slot(w, 1, 2) & 1, 0);
            }
            assert_eq!(bits >> (DELTA + 1) & 1, 0);
        }
    }
}
