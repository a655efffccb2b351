use overture::dist::{bd, bd_adv, bd_adv_reference, bd_reference, Preprocessing};
use overture::lang::{federation, parse_protocol, validate, Partition, Protocol};
use overture::stdlib::packages;
use overture::verifier::enumerate_adversaries;
use proptest::prelude::*;

mod common;
use common::protocol;

fn part(c: u32) -> Partition {
    Partition::new(&federation([1, 2]), &federation([c])).unwrap()
}

fn well_formed(src: &str) -> Protocol {
    let pi = parse_protocol(src).unwrap();
    assert!(validate(&pi, &federation([1, 2])).is_empty(), "{src}");
    pi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn passive_engine_matches_interpreter(src in protocol()) {
        let pi = well_formed(&src);
        let pre = Preprocessing::default_for(&pi);
        prop_assert_eq!(bd(&pi, &pre, 1).unwrap(), bd_reference(&pi, &pre).unwrap());
    }

    #[test]
    fn adversarial_engine_matches_interpreter(src in protocol(), c in 1u32..3) {
        let pi = well_formed(&src);
        let pre = Preprocessing::default_for(&pi);
        let family = enumerate_adversaries(&pi, &part(c), 1).unwrap();
        for adv in family.iter().take(12) {
            prop_assert_eq!(
                bd_adv(&pi, adv, &part(c), &pre, 1).unwrap(),
                bd_adv_reference(&pi, adv, &part(c), &pre).unwrap(),
                "{}", adv
            );
        }
    }
}

#[test]
fn stdlib_engine_matches_interpreter() {
    for pkg in packages().unwrap() {
        let pi = pkg.protocol().unwrap();
        if pi.has_asserts() {
            continue;
        }
        let pre = pkg.preprocessing(&pi);
        assert_eq!(
            bd(&pi, &pre, 1).unwrap(),
            bd_reference(&pi, &pre).unwrap(),
            "{}",
            pkg.name
        );
        for c in pkg.federation.iter() {
            let part = pkg.partition(&federation([c.get()])).unwrap();
            for adv in enumerate_adversaries(&pi, &part, 0)
                .unwrap()
                .iter()
                .take(27)
            {
                assert_eq!(
                    bd_adv(&pi, adv, &part, &pre, 2).unwrap(),
                    bd_adv_reference(&pi, adv, &part, &pre).unwrap(),
                    "{} {adv}",
                    pkg.name
                );
            }
        }
    }
}

#[test]
fn worker_counts_agree() {
    let pi = parse_protocol(
        "m[a]@2 := (s[x] + r[k])@1; m[b]@1 := (s[y] * m[a])@2; out@1 := (m[b] + r[k])@1;",
    )
    .unwrap();
    let pre = Preprocessing::default_for(&pi);
    let one = bd(&pi, &pre, 1).unwrap();
    for w in [0, 2, 3] {
        assert_eq!(bd(&pi, &pre, w).unwrap(), one);
    }
}
