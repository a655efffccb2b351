use overture::dist::{bd, Preprocessing};
use overture::lang::{federation, parse_protocol, validate};
use overture::prelude::{eval_meta_with_limit, expand, parse_prelude, PreludeError};
use overture::stdlib::source;

fn with_lib(lib: &str, main: &str) -> String {
    format!("{}\n{main}", source(lib).unwrap())
}

#[test]
fn and_circuit_residual() {
    let pi = expand(&with_lib("gmw.pre", source("gmw_and.pre").unwrap())).unwrap();
    let expected = parse_protocol(
        "m[s1]@1 := (s[s1] xor r[s1])@1;
         m[s1]@2 := r[s1]@1;
         m[s2]@2 := (s[s2] xor r[s2])@2;
         m[s2]@1 := r[s2]@2;
         m[z]@2 := OT4(m[s1], m[s2] @ 2;
                       r[z] xor (m[s1] xor 1) and (m[s2] xor 1),
                       r[z] xor (m[s1] xor 1) and (m[s2] xor 0),
                       r[z] xor (m[s1] xor 0) and (m[s2] xor 1),
                       r[z] xor (m[s1] xor 0) and (m[s2] xor 0))@1;
         m[z]@1 := r[z]@1;
         p[z1] := m[z]@1;
         p[z2] := m[z]@2;
         out@1 := (p[z1] xor p[z2])@1;
         out@2 := (p[z1] xor p[z2])@2;",
    )
    .unwrap();
    assert_eq!(pi.to_string(), expected.to_string());
    assert_eq!(pi, expected);
}

#[test]
fn open_residual_in_the_bdoz_library() {
    let pi = expand(&with_lib("bdoz.pre", "open(\"d\",1,2)")).unwrap();
    let expected = parse_protocol(
        "m[dexts]@1 := m[ds]@2;
         m[dextm]@1 := m[dm]@2;
         assert(m[dextm] == m[dk] + m[delta] * m[dexts])@1;
         m[d]@1 := (m[dexts] + m[ds])@1;",
    )
    .unwrap();
    assert_eq!(pi, expected);
}

#[test]
fn stdlib_programs_expand_to_well_formed_protocols() {
    for (main, lib, runs) in [
        ("gmw_and.pre", "gmw.pre", 32),
        ("gmw_xor.pre", "gmw.pre", 16),
        ("gmw_depth2.pre", "gmw.pre", 128),
    ] {
        let pi = expand(&with_lib(lib, source(main).unwrap())).unwrap();
        assert!(validate(&pi, &federation([1, 2])).is_empty(), "{main}");
        assert_eq!(
            bd(&pi, &Preprocessing::default_for(&pi), 1)
                .unwrap()
                .total(),
            runs
        );
    }
}

#[test]
fn xor_gate_is_local() {
    let pi = expand(&with_lib("gmw.pre", "xorgmw(\"z\", m[\"x\"], m[\"y\"])")).unwrap();
    let expected =
        parse_protocol("m[z]@1 := (m[x] xor m[y])@1; m[z]@2 := (m[x] xor m[y])@2;").unwrap();
    assert_eq!(pi, expected);
}

#[test]
fn runaway_recursion_hits_the_step_limit() {
    let (cb, main) = parse_prelude("loop(x) { loop(x) }\nloop(1)").unwrap();
    assert_eq!(
        eval_meta_with_limit(&cb, main, 1000).unwrap_err(),
        PreludeError::StepLimit(1000)
    );
}

#[test]
fn error_cases() {
    assert!(matches!(
        expand("f(1)").unwrap_err(),
        PreludeError::UnknownFunction(f) if f == "f"
    ));
    assert!(matches!(
        expand("f(a, b) { a }\nf(1)").unwrap_err(),
        PreludeError::Arity {
            expected: 2,
            given: 1,
            ..
        }
    ));
    assert!(matches!(expand("y").unwrap_err(), PreludeError::Unbound(_)));
    assert!(matches!(
        expand("{ a = 1 }.b").unwrap_err(),
        PreludeError::MissingField(_)
    ));
    assert!(matches!(
        expand("f(x) { x").unwrap_err(),
        PreludeError::Syntax(_)
    ));
}
