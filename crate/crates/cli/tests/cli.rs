use std::path::PathBuf;
use std::process::{Command, Output};

fn protocols() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/protocols")
}

fn overture(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overture"))
        .current_dir(protocols())
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn shamir_nimo_passes() {
    let o = overture(&[
        "verify",
        "--property",
        "nimo",
        "--corrupt",
        "2",
        "shamir_add3.ovt",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "PASS\n");
}

#[test]
fn leaky_nimo_fails_with_a_witness() {
    let o = overture(&[
        "verify",
        "--property",
        "nimo",
        "--corrupt",
        "2",
        "leaky.ovt",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("FAIL\n"));
    assert!(
        text.contains("weight=1/2") && text.contains("weight=1/1"),
        "{text}"
    );
}

#[test]
fn otp_marginal() {
    let o = overture(&["pmf", "otp.ovt", "--marginal", "m[z]@2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "m[z]@2=0 weight=1/2\nm[z]@2=1 weight=1/2\n");
}

#[test]
fn conditional_pmf() {
    let o = overture(&[
        "pmf",
        "leaky.ovt",
        "--marginal",
        "m[z]@2",
        "--given",
        "s[x]@1=1",
    ]);
    assert_eq!(stdout(&o), "m[z]@2=1 weight=1/1\n");
}

#[test]
fn all_partitions_is_deterministic() {
    let args = [
        "verify",
        "--property",
        "nimo",
        "--all-partitions",
        "shamir_add3.ovt",
    ];
    let a = overture(&args);
    let b = overture(&[&args[..], &["--workers", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 6);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &[
            "verify",
            "--property",
            "nimo",
            "--corrupt",
            "2",
            "--field",
            "3",
            "otp.ovt",
        ][..],
        &["verify", "--property", "nimo", "otp.ovt"],
        &["verify", "--property", "nimo", "--corrupt", "5", "otp.ovt"],
        &[
            "verify",
            "--property",
            "sideways",
            "--corrupt",
            "2",
            "otp.ovt",
        ],
        &["run", "missing.ovt"],
        &["frobnicate"],
    ] {
        assert_eq!(overture(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn expand_then_verify_a_written_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("and.ovt");
    let o = overture(&[
        "expand",
        "--lib",
        "gmw.pre",
        "gmw_and.pre",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    std::fs::copy(protocols().join("gmw_and.fn"), dir.path().join("and.fn")).unwrap();
    let o = overture(&["verify", "--property", "correct", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn datalog_export_agrees_with_run() {
    let dir = tempfile::tempdir().unwrap();
    let dl = dir.path().join("otp.dl");
    let o = overture(&["export-datalog", "otp.ovt", "-o", dl.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let input = format!("s[x]@1={x} r[y]@1={y}");
        let run = stdout(&overture(&["run", "otp.ovt", "--input", &input]));
        let lhm = stdout(&overture(&["lhm", dl.to_str().unwrap(), "--facts", &input]));
        assert_eq!(run, lhm);
    }
}

#[test]
fn failed_assertion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("check.ovt");
    std::fs::write(&p, "m[a]@2 := s[x]@1; assert(m[a] == 0)@2;").unwrap();
    let o = overture(&["run", p.to_str().unwrap(), "--input", "s[x]@1=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("abort"));
}

#[test]
fn bundled_packages() {
    let o = overture(&[
        "verify",
        "--package",
        "gmw_depth2",
        "--property",
        "gmw-invariant",
        "--corrupt",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let list = stdout(&overture(&["list"]));
    assert!(
        list.contains("beaver (beaver.pre, clients {1,2})"),
        "{list}"
    );
}

#[test]
fn runs_in_a_larger_field() {
    let o = overture(&[
        "run",
        "otp.ovt",
        "--field",
        "5",
        "--input",
        "s[x]@1=4 r[y]@1=1",
    ]);
    assert_eq!(stdout(&o), "m[z]@2=3\nr[y]@1=1\ns[x]@1=4\n");
}
