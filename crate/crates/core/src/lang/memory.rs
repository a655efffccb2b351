use std::collections::btree_map;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::var::Var;
use crate::field::{FieldElem, Modulus};

/// A memory cell: a field value, or `⊥` for views left undefined by an
/// aborted run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Elem(FieldElem),
    Bottom,
}

impl Value {
    pub fn elem(self) -> Option<FieldElem> {
        match self {
            Value::Elem(e) => Some(e),
            Value::Bottom => None,
        }
    }

    pub fn bit(b: bool) -> Value {
        Value::Elem(Modulus::F2.elem(b as u64))
    }
}

impl From<FieldElem> for Value {
    fn from(e: FieldElem) -> Self {
        Value::Elem(e)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Elem(e) => write!(f, "{e}"),
            Value::Bottom => f.write_str("bot"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("{0} is already defined")]
    AlreadyDefined(Var),
    #[error("memories disagree on {0}")]
    Conflict(Var),
    #[error("malformed assignment `{0}`")]
    Malformed(String),
}

/// A finite partial map from variables to values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Memory(BTreeMap<Var, Value>);

impl Memory {
    pub fn new() -> Self {
        Memory(BTreeMap::new())
    }

    pub fn get(&self, var: &Var) -> Option<Value> {
        self.0.get(var).copied()
    }

    pub fn contains(&self, var: &Var) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dom(&self) -> BTreeSet<Var> {
        self.0.keys().cloned().collect()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Var, Value> {
        self.0.iter()
    }

    /// `m{x ↦ v}`; `x` must be fresh.
    pub fn extend(&mut self, var: Var, value: Value) -> Result<(), MemoryError> {
        match self.0.entry(var) {
            btree_map::Entry::Occupied(e) => Err(MemoryError::AlreadyDefined(e.key().clone())),
            btree_map::Entry::Vacant(e) => {
                e.insert(value);
                Ok(())
            }
        }
    }

    /// Builder form of [`Memory::extend`] for literals; panics on clash.
    pub fn with(mut self, var: Var, value: impl Into<Value>) -> Self {
        self.extend(var, value.into()).expect("fresh variable");
        self
    }

    pub fn with_bit(self, var: Var, bit: u64) -> Self {
        self.with(var, Modulus::F2.elem(bit))
    }

    /// `m ⊎ m'`, defined when the memories agree on their overlap.
    pub fn union(&self, other: &Memory) -> Result<Memory, MemoryError> {
        let mut out = self.clone();
        for (x, v) in &other.0 {
            match out.0.get(x) {
                Some(w) if w != v => return Err(MemoryError::Conflict(x.clone())),
                Some(_) => {}
                None => {
                    out.0.insert(x.clone(), *v);
                }
            }
        }
        Ok(out)
    }

    /// `m_X`: restriction to the variables of `vars` present in `m`.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Memory {
        Memory(
            vars.into_iter()
                .filter_map(|x| self.0.get(x).map(|v| (x.clone(), *v)))
                .collect(),
        )
    }

    pub fn is_submemory_of(&self, other: &Memory) -> bool {
        self.0.iter().all(|(x, v)| other.0.get(x) == Some(v))
    }

    /// Parses `s[x]@1=1, r[y]@1=0` style assignment lists. `bot` stands
    /// for ⊥.
    pub fn parse_assignments(text: &str, modulus: Modulus) -> Result<Memory, MemoryError> {
        let mut m = Memory::new();
        for part in text
            .split([',', ' '])
            .map(str::trim)
            .filter(|p| !p.is_empty())
        {
            let (lhs, rhs) = part
                .split_once('=')
                .ok_or_else(|| MemoryError::Malformed(part.to_string()))?;
            let var: Var = lhs
                .parse()
                .map_err(|_| MemoryError::Malformed(part.to_string()))?;
            let value = match rhs.trim() {
                "bot" | "⊥" => Value::Bottom,
                n => Value::Elem(
                    modulus.elem(
                        n.parse::<u64>()
                            .ok()
                            .filter(|v| *v < modulus.get())
                            .ok_or_else(|| MemoryError::Malformed(part.to_string()))?,
                    ),
                ),
            };
            m.extend(var, value)?;
        }
        Ok(m)
    }

    /// `var=val` pairs sorted lexicographically by their text.
    pub fn sorted_pairs(&self) -> Vec<String> {
        let mut pairs: Vec<String> = self.0.iter().map(|(x, v)| format!("{x}={v}")).collect();
        pairs.sort();
        pairs
    }
}

impl FromIterator<(Var, Value)> for Memory {
    fn from_iter<T: IntoIterator<Item = (Var, Value)>>(iter: T) -> Self {
        Memory(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Memory {
    type Item = (&'a Var, &'a Value);
    type IntoIter = btree_map::Iter<'a, Var, Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.sorted_pairs().join(", "))
    }
}

/// `mems(X)`: every total assignment of field values to `vars`, in
/// ascending binary order with the first variable most significant.
pub fn mems(vars: &[Var], modulus: Modulus) -> impl Iterator<Item = Memory> + '_ {
    let p = modulus.get();
    let n = vars.len() as u32;
    let total = p.checked_pow(n).expect("mems(X) too large to enumerate");
    (0..total).map(move |mut idx| {
        let mut digits = vec![0u64; vars.len()];
        for d in digits.iter_mut().rev() {
            *d = idx % p;
            idx /= p;
        }
        vars.iter()
            .zip(digits)
            .map(|(x, d)| (x.clone(), Value::Elem(modulus.elem(d))))
            .collect()
    })
}
