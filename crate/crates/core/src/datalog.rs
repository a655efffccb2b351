//! Export of assert-free F2 protocols to stratified Datalog with negation,
//! and a least-model evaluator that serves as an independent oracle for the
//! interpreter.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::field::Modulus;
use crate::lang::{client, mems, EvalError, Memory, Protocol, Value, Var, VarKind};
use crate::verifier::{solve, MemSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatalogError {
    #[error("command {0} is an assertion and has no Datalog translation")]
    Assert(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0} is not a bit")]
    NonBinary(Var),
    #[error("atom {0} is read before its defining clauses")]
    NotStratified(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot mangle `{0}`")]
    Mangle(String),
}

/// `s[x]@1` ↦ `s_x_c1`, `p[w]` ↦ `p_w`, `out@1` ↦ `out_c1`.
pub fn mangle(x: &Var) -> Result<String, DatalogError> {
    if x.name().is_empty() && x.kind() != VarKind::Out
        || !x
            .name()
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        return Err(DatalogError::Mangle(x.to_string()));
    }
    Ok(match (x.kind(), x.owner()) {
        (VarKind::Out, Some(c)) => format!("out_c{c}"),
        (VarKind::Reveal, _) => format!("p_{}", x.name()),
        (VarKind::Secret | VarKind::Flip | VarKind::Mesg, Some(c)) => {
            format!("{}_{}_c{c}", x.kind().prefix(), x.name())
        }
        _ => return Err(DatalogError::Mangle(x.to_string())),
    })
}

/// Inverse of [`mangle`].
pub fn unmangle(atom: &str) -> Result<Var, DatalogError> {
    let bad = || DatalogError::Mangle(atom.to_string());
    let owner = |rest: &str| -> Result<(String, crate::lang::ClientId), DatalogError> {
        let (name, id) = rest.rsplit_once("_c").ok_or_else(bad)?;
        let id: u32 = id.parse().map_err(|_| bad())?;
        if name.is_empty() || id == 0 {
            return Err(bad());
        }
        Ok((name.to_string(), client(id)))
    };
    if let Some(id) = atom.strip_prefix("out_c") {
        let id: u32 = id.parse().map_err(|_| bad())?;
        if id == 0 {
            return Err(bad());
        }
        return Ok(Var::out(client(id)));
    }
    let (prefix, rest) = atom.split_once('_').ok_or_else(bad)?;
    match prefix {
        "p" if !rest.is_empty() => Ok(Var::reveal(rest)),
        "s" => owner(rest).map(|(n, c)| Var::secret(n, c)),
        "r" => owner(rest).map(|(n, c)| Var::flip(n, c)),
        "m" => owner(rest).map(|(n, c)| Var::mesg(n, c)),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Var,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub head: Var,
    pub body: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatalogProgram {
    pub clauses: Vec<Clause>,
}

fn atom(x: &Var) -> String {
    mangle(x).unwrap_or_else(|_| x.to_string())
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("not ")?;
        }
        f.write_str(&atom(&self.atom))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", atom(&self.head))?;
        for (i, l) in self.body.iter().enumerate() {
            write!(f, "{}{l}", if i == 0 { " :- " } else { ", " })?;
        }
        f.write_str(".")
    }
}

impl fmt::Display for DatalogProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

impl DatalogProgram {
    /// Head atoms in order of first definition.
    pub fn heads(&self) -> Vec<Var> {
        let mut seen = HashSet::new();
        self.clauses
            .iter()
            .filter(|c| seen.insert(c.head.clone()))
            .map(|c| c.head.clone())
            .collect()
    }

    /// Parses the `.dl` text format: `head :- l1, not l2.` or `head.`, with
    /// `%` starting a comment.
    pub fn parse(text: &str) -> Result<DatalogProgram, DatalogError> {
        let mut clauses = Vec::new();
        let mut pending = String::new();
        let mut start = 1;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('%').next().unwrap_or("");
            if pending.trim().is_empty() {
                start = i + 1;
            }
            pending.push(' ');
            pending.push_str(line);
            while let Some(end) = pending.find('.') {
                let clause: String = pending.drain(..=end).collect();
                clauses.push(parse_clause(&clause[..clause.len() - 1], start)?);
                start = i + 1;
            }
        }
        if !pending.trim().is_empty() {
            return Err(DatalogError::Parse {
                line: start,
                msg: "clause is missing its final `.`".into(),
            });
        }
        Ok(DatalogProgram { clauses })
    }
}

fn parse_clause(text: &str, line: usize) -> Result<Clause, DatalogError> {
    let err = |msg: String| DatalogError::Parse { line, msg };
    let atom = |s: &str| unmangle(s.trim()).map_err(|e| err(e.to_string()));
    let (head, body) = match text.split_once(":-") {
        Some((h, b)) => (h, Some(b)),
        None => (text, None),
    };
    let head = atom(head)?;
    let mut lits = Vec::new();
    if let Some(body) = body {
        for lit in body.split(',') {
            let lit = lit.trim();
            let (positive, name) = match lit.strip_prefix("not ") {
                Some(rest) => (false, rest),
                None => (true, lit),
            };
            lits.push(Literal {
                atom: atom(name)?,
                positive,
            });
        }
    }
    Ok(Clause { head, body: lits })
}

/// One clause per local memory satisfying each command's expression; the
/// inputs of a clause appear in mangled-name order and its memories in
/// ascending binary order.
pub fn to_datalog(pi: &Protocol) -> Result<DatalogProgram, DatalogError> {
    let mut clauses = Vec::new();
    for (index, cmd) in pi.commands.iter().enumerate() {
        let (Some(head), Some(e)) = (cmd.target(), cmd.expr()) else {
            return Err(DatalogError::Assert(index));
        };
        mangle(&head)?;
        let mut inputs: Vec<(String, Var)> = e
            .vars(cmd.computing_client())
            .into_iter()
            .map(|x| mangle(&x).map(|a| (a, x)))
            .collect::<Result<_, _>>()?;
        inputs.sort();
        let inputs: Vec<Var> = inputs.into_iter().map(|(_, x)| x).collect();
        let local: Vec<Memory> = mems(&inputs, Modulus::F2).collect();
        let sigma: MemSet = local.iter().cloned().collect();
        let models = solve(&sigma, e, cmd.computing_client())?;
        for m in local.iter().filter(|m| models.contains(*m)) {
            let body = inputs
                .iter()
                .map(|x| Literal {
                    atom: x.clone(),
                    positive: m.get(x) == Some(Value::bit(true)),
                })
                .collect();
            clauses.push(Clause {
                head: head.clone(),
                body,
            });
        }
    }
    Ok(DatalogProgram { clauses })
}

/// One fact per variable of `m` set to 1.
pub fn facts(m: &Memory) -> Result<DatalogProgram, DatalogError> {
    let mut clauses = Vec::new();
    for (x, v) in m {
        match v {
            Value::Elem(e) if e.value() == 1 => clauses.push(Clause {
                head: x.clone(),
                body: vec![],
            }),
            Value::Elem(e) if e.value() == 0 => {}
            _ => return Err(DatalogError::NonBinary(x.clone())),
        }
    }
    Ok(DatalogProgram { clauses })
}

/// The least model of `prog` over the fact base `facts`, computed one head
/// atom at a time in order of first definition with negation as failure.
///
/// The result maps fact atoms and derived heads to 1, and input atoms
/// without a fact and underivable heads to 0.
pub fn lhm_eval(facts: &DatalogProgram, prog: &DatalogProgram) -> Result<Memory, DatalogError> {
    let heads = prog.heads();
    let stratum: HashMap<&Var, usize> = heads.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut by_head: Vec<Vec<&Clause>> = vec![Vec::new(); heads.len()];
    let mut inputs = BTreeSet::new();
    for c in &prog.clauses {
        let s = stratum[&c.head];
        for l in &c.body {
            match stratum.get(&l.atom) {
                Some(&t) if t >= s => return Err(DatalogError::NotStratified(atom(&l.atom))),
                Some(_) => {}
                None => {
                    inputs.insert(l.atom.clone());
                }
            }
        }
        by_head[s].push(c);
    }
    let mut truth: HashSet<Var> = HashSet::new();
    for f in &facts.clauses {
        if stratum.contains_key(&f.head) {
            return Err(DatalogError::NotStratified(atom(&f.head)));
        }
        // A fact base is a program of bodiless clauses.
        if !f.body.is_empty() {
            return Err(DatalogError::Parse {
                line: 0,
                msg: format!("fact {} has a body", atom(&f.head)),
            });
        }
        truth.insert(f.head.clone());
        inputs.insert(f.head.clone());
    }
    let mut out = Memory::new();
    for x in &inputs {
        out = out.with(x.clone(), Value::bit(truth.contains(x)));
    }
    for (head, clauses) in heads.iter().zip(&by_head) {
        let derived = clauses
            .iter()
            .any(|c| c.body.iter().all(|l| truth.contains(&l.atom) == l.positive));
        if derived {
            truth.insert(head.clone());
        }
        out = out.with(head.clone(), Value::bit(derived));
    }
    Ok(out)
}

/// [`lhm_eval`] over many fact bases in parallel.
pub fn lhm_eval_all(
    fact_bases: &[DatalogProgram],
    prog: &DatalogProgram,
) -> Vec<Result<Memory, DatalogError>> {
    fact_bases.par_iter().map(|f| lhm_eval(f, prog)).collect()
}

/// Renders `prog` as a `.dl` file with a comment naming its source.
pub fn to_text(prog: &DatalogProgram, source: &str) -> String {
    format!("% generated from {source}\n{prog}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_protocol, run};

    #[test]
    fn xor_exports_two_clauses() {
        let pi = parse_protocol("m[z]@2 := (s[x] xor r[y])@1;").unwrap();
        let dl = to_datalog(&pi).unwrap();
        // r_y_c1 sorts before s_x_c1.
        assert_eq!(
            dl.to_string(),
            "m_z_c2 :- not r_y_c1, s_x_c1.\nm_z_c2 :- r_y_c1, not s_x_c1.\n"
        );
    }

    #[test]
    fn constants_and_contradictions() {
        let pi = parse_protocol("out@1 := 1@1; m[z]@2 := (s[x] and not s[x])@1;").unwrap();
        let dl = to_datalog(&pi).unwrap();
        assert_eq!(dl.to_string(), "out_c1.\n");
        let m = lhm_eval(&DatalogProgram::default(), &dl).unwrap();
        assert_eq!(m.get(&Var::out(client(1))), Some(Value::bit(true)));
    }

    #[test]
    fn asserts_are_rejected() {
        let pi = parse_protocol("assert(s[x] == 0)@1;").unwrap();
        assert_eq!(to_datalog(&pi), Err(DatalogError::Assert(0)));
    }

    #[test]
    fn facts_keep_ones() {
        let x = Var::secret("x", client(1));
        let y = Var::flip("y", client(1));
        let m = Memory::new().with_bit(x.clone(), 1).with_bit(y.clone(), 0);
        assert_eq!(facts(&m).unwrap().to_string(), "s_x_c1.\n");
        let zero = Memory::new().with_bit(x.clone(), 0);
        assert!(facts(&zero).unwrap().clauses.is_empty());
        let ones = Memory::new()
            .with_bit(x, 1)
            .with_bit(y, 1)
            .with_bit(Var::reveal("w"), 1);
        assert_eq!(facts(&ones).unwrap().clauses.len(), 3);
    }

    #[test]
    fn otp_model_matches_run() {
        let pi = parse_protocol("m[z]@2 := (s[x] xor r[y])@1;").unwrap();
        let dl = to_datalog(&pi).unwrap();
        let x = Var::secret("x", client(1));
        let y = Var::flip("y", client(1));
        let m0 = Memory::new().with_bit(x, 1).with_bit(y, 0);
        let model = lhm_eval(&facts(&m0).unwrap(), &dl).unwrap();
        assert_eq!(model, run(&m0, &pi, Modulus::F2).unwrap());
    }

    #[test]
    fn mangling_round_trips() {
        for x in [
            Var::secret("x", client(1)),
            Var::flip("a_c1", client(12)),
            Var::mesg("z", client(2)),
            Var::reveal("1"),
            Var::reveal("w_c3"),
            Var::out(client(3)),
        ] {
            assert_eq!(unmangle(&mangle(&x).unwrap()).unwrap(), x);
        }
        assert_eq!(mangle(&Var::mesg("z", client(2))).unwrap(), "m_z_c2");
        assert_eq!(mangle(&Var::reveal("1")).unwrap(), "p_1");
        assert!(unmangle("q_x_c1").is_err());
        assert!(mangle(&Var::mesg("a b", client(1))).is_err());
    }

    #[test]
    fn text_round_trips() {
        let pi = parse_protocol(
            "m[z]@2 := (s[x] xor r[y])@1; p[w] := (m[z] and s[v])@2; out@1 := p[w]@1;",
        )
        .unwrap();
        let dl = to_datalog(&pi).unwrap();
        let text = to_text(&dl, "inline");
        assert_eq!(DatalogProgram::parse(&text).unwrap(), dl);
        let split = DatalogProgram::parse("out_c1 :- % first\n  p_w.\n").unwrap();
        assert_eq!(split.clauses.len(), 1);
        assert!(DatalogProgram::parse("out_c1 :- p_w").is_err());
    }

    #[test]
    fn unstratified_programs_are_rejected() {
        let prog =
            DatalogProgram::parse("m_a_c1 :- not m_b_c1.\nm_b_c1 :- m_a_c1.\nm_a_c1 :- s_x_c1.\n")
                .unwrap();
        assert!(matches!(
            lhm_eval(&DatalogProgram::default(), &prog),
            Err(DatalogError::NotStratified(_))
        ));
    }
}
