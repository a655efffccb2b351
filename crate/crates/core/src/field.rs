//! Arithmetic in the prime field F_p.
//!
//! Every element carries its modulus so that mixing elements of two
//! different fields is reported instead of silently reduced. F2 is the
//! privileged case: the boolean connectives (`and`, `xor`, `or`, `not`)
//! are only defined there.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("boolean operation `{op}` requires F2, field is F{modulus}")]
    Unsupported { op: &'static str, modulus: u64 },
}

/// A prime modulus. Construction checks primality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus(u64);

impl Modulus {
    pub const F2: Modulus = Modulus(2);

    pub fn new(p: u64) -> Result<Self, FieldError> {
        if is_prime(p) {
            Ok(Modulus(p))
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn is_binary(self) -> bool {
        self.0 == 2
    }

    pub fn elem(self, value: u64) -> FieldElem {
        FieldElem {
            value: value % self.0,
            modulus: self.0,
        }
    }

    pub fn zero(self) -> FieldElem {
        self.elem(0)
    }

    pub fn one(self) -> FieldElem {
        self.elem(1)
    }

    /// All elements of the field in ascending order.
    pub fn elements(self) -> impl Iterator<Item = FieldElem> {
        (0..self.0).map(move |v| self.elem(v))
    }
}

impl Default for Modulus {
    fn default() -> Self {
        Modulus::F2
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of F_p. `0 <= value < modulus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem {
    value: u64,
    modulus: u64,
}

impl FieldElem {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> Modulus {
        Modulus(self.modulus)
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: FieldElem) -> Result<u64, FieldError> {
        if self.modulus == other.modulus {
            Ok(self.modulus)
        } else {
            Err(FieldError::ModulusMismatch(self.modulus, other.modulus))
        }
    }

    fn require_binary(self, op: &'static str) -> Result<(), FieldError> {
        if self.modulus == 2 {
            Ok(())
        } else {
            Err(FieldError::Unsupported {
                op,
                modulus: self.modulus,
            })
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        let p = self.same_field(other)?;
        Ok(FieldElem {
            value: ((self.value as u128 + other.value as u128) % p as u128) as u64,
            modulus: p,
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        let p = self.same_field(other)?;
        Ok(FieldElem {
            value: ((self.value as u128 + p as u128 - other.value as u128) % p as u128) as u64,
            modulus: p,
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        let p = self.same_field(other)?;
        Ok(FieldElem {
            value: ((self.value as u128 * other.value as u128) % p as u128) as u64,
            modulus: p,
        })
    }

    pub fn and(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        self.require_binary("and")?;
        self.mul(other)
    }

    pub fn xor(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        self.require_binary("xor")?;
        self.add(other)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Result<FieldElem, FieldError> {
        self.require_binary("not")?;
        self.add(Modulus::F2.one())
    }

    /// `or(x, y) = not(and(not x, not y))`.
    pub fn or(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        self.require_binary("or")?;
        self.not()?.and(other.not()?)?.not()
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64, v: u64) -> FieldElem {
        Modulus::new(p).unwrap().elem(v)
    }

    #[test]
    fn small_examples() {
        assert_eq!(f(2, 1).add(f(2, 1)).unwrap(), f(2, 0));
        assert_eq!(f(2, 0).add(f(2, 1)).unwrap(), f(2, 1));
        assert_eq!(f(5, 3).add(f(5, 4)).unwrap(), f(5, 2));
        assert_eq!(f(2, 1).sub(f(2, 1)).unwrap(), f(2, 0));
        assert_eq!(f(2, 1).mul(f(2, 1)).unwrap(), f(2, 1));
        assert_eq!(f(5, 2).mul(f(5, 4)).unwrap(), f(5, 3));
    }

    #[test]
    fn boolean_sugar() {
        assert_eq!(f(2, 0).not().unwrap(), f(2, 1));
        assert_eq!(f(2, 0).or(f(2, 0)).unwrap(), f(2, 0));
        assert_eq!(f(2, 1).xor(f(2, 1)).unwrap(), f(2, 0));
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(f(2, a).or(f(2, b)).unwrap().value(), a | b);
                assert_eq!(f(2, a).and(f(2, b)).unwrap().value(), a & b);
            }
        }
    }

    #[test]
    fn boolean_sugar_rejected_outside_f2() {
        assert!(matches!(
            f(3, 1).xor(f(3, 1)),
            Err(FieldError::Unsupported {
                op: "xor",
                modulus: 3
            })
        ));
        assert!(f(5, 1).not().is_err());
        assert!(f(5, 1).or(f(5, 0)).is_err());
    }

    #[test]
    fn mismatch_and_primality() {
        assert_eq!(f(2, 1).add(f(3, 1)), Err(FieldError::ModulusMismatch(2, 3)));
        assert_eq!(Modulus::new(4), Err(FieldError::NotPrime(4)));
        assert_eq!(Modulus::new(1), Err(FieldError::NotPrime(1)));
        assert!(Modulus::new(7).is_ok());
    }

    #[test]
    fn field_laws_exhaustive() {
        for p in [2u64, 3, 5] {
            let m = Modulus::new(p).unwrap();
            for a in m.elements() {
                for b in m.elements() {
                    assert_eq!(a.add(b), b.add(a));
                    assert_eq!(a.mul(b), b.mul(a));
                    for c in m.elements() {
                        let lhs = a.mul(b.add(c).unwrap()).unwrap();
                        let rhs = a.mul(b).unwrap().add(a.mul(c).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
        let m = Modulus::F2;
        for a in m.elements() {
            for b in m.elements() {
                assert_eq!(a.sub(b), a.add(b));
            }
        }
    }
}
