mod common;

use common::{algebra_violations, composition_violations, sample, strengthened_violations, Sample};
use overture::dist::{Pmf, Row};
use overture::lang::{client, Var};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn algebra_laws_hold(s in sample()) {
        prop_assert!(algebra_violations(&s).is_empty(), "{:?}", algebra_violations(&s));
    }

    #[test]
    fn determinism_composes(s in sample()) {
        prop_assert!(!composition_violations(&s)[0]);
    }

    #[test]
    fn composition_holds_with_separation(s in sample()) {
        prop_assert_eq!(strengthened_violations(&s), [false, false]);
    }
}

/// Three bits: `a` constant, `b = c` uniform. `b` determines `a` and `c`
/// is uniform given `a`, yet `c` is fixed given `b`.
fn copy_pmf() -> Sample {
    let cells = [(0b110u128, 1u64), (0b000, 1)].map(|(bits, n)| (Row { bits, bot: 0 }, n));
    let vars = ["a", "b", "c"].map(|n| Var::secret(n, client(1))).to_vec();
    Sample {
        pmf: Pmf::from_counts(vars, cells).unwrap(),
        roles: vec![1, 0, 2],
        split: 0,
        nested: (0, 0),
    }
}

#[test]
fn uniformity_does_not_compose_without_separation() {
    assert_eq!(composition_violations(&copy_pmf()), [false, true, false]);
    assert_eq!(strengthened_violations(&copy_pmf()), [false, false]);
}

#[test]
fn separation_does_not_compose_without_separation() {
    // a constant, b and c uniform and independent, s = b + c.
    let cells = [0b0000u128, 0b0110, 0b1010, 0b1100].map(|bits| (Row { bits, bot: 0 }, 1));
    let vars = ["a", "b", "c", "s"]
        .map(|n| Var::secret(n, client(1)))
        .to_vec();
    let s = Sample {
        pmf: Pmf::from_counts(vars, cells).unwrap(),
        roles: vec![1, 2, 3, 0],
        split: 0,
        nested: (0, 0),
    };
    assert_eq!(composition_violations(&s), [false, false, true]);
    assert_eq!(strengthened_violations(&s), [false, false]);
}
