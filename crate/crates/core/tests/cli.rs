use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn asset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join(name)
}

fn dialectic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialectic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_empty_spec_passes() {
    let o = dialectic(&["validate", asset("empty.spec").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).ends_with("pass\n"));
}

#[test]
fn validate_reports_iteration_witness() {
    let o = dialectic(&["validate", asset("no-iteration.spec").to_str().unwrap(), "--width", "1"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    // {a0} gives {a0, a1}, whose image also holds a2
    assert!(out.contains("violation: Iteration violated for F = {a0}\n"), "{out}");
    assert!(out.ends_with("fail\n"));
}

#[test]
fn validate_scope_error() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "wide.spec", "[rules]\nat 0 : a20 |- CE\n");
    let o = dialectic(&["validate", &spec]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bound 8"), "{}", stderr(&o));
}

#[test]
fn malformed_line_reports_location() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "bad.spec", "[rules]\nat 1 : a0 |- CE\nat 2 a1 |- BOT\n");
    let o = dialectic(&["validate", &spec]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.spec:3:"), "{}", stderr(&o));
    let o = dialectic(&["run", &spec]);
    assert_eq!(code(&o), 2);
}

#[test]
fn run_empty_spec_expands() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    let o = dialectic(&[
        "run",
        asset("empty.spec").to_str().unwrap(),
        "--horizon",
        "5",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().last().unwrap(), "4\tEXP\t-\t-\ta4\ta0 a1 a2 a3 a4");
    assert!(stdout(&o).contains("variant: d\n"));
    assert!(stdout(&o).contains("length: 5\n"));
}

#[test]
fn run_scenario_matches_golden_trace() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    let o = dialectic(&[
        "run",
        asset("scenario.spec").to_str().unwrap(),
        "--horizon",
        "6",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let golden = fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/scenario.trace")).unwrap();
    assert_eq!(fs::read(&trace).unwrap(), golden);
    assert!(stdout(&o).starts_with("variant: p\n"));
}

#[test]
fn run_refuses_bottom_in_p_spec() {
    let o = dialectic(&["run", asset("bad-variant.spec").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad-variant.spec:4:1"), "{}", stderr(&o));
}

#[test]
fn run_missing_replacement_is_a_domain_failure() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "norep.spec", "[rules]\nat 2 : a1 |- CE\n");
    let o = dialectic(&["run", &spec, "--horizon", "10"]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("stage 2, position 2: r(a1) is undefined"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn diff_agrees_and_catches_mutation() {
    let empty = asset("empty.spec");
    let o = dialectic(&["diff", empty.to_str().unwrap(), "--horizon", "100"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "backward: agree over 101 stages\nforward: agree over 101 stages\n"
    );

    let tie = asset("tie.spec");
    let o = dialectic(&["diff", tie.to_str().unwrap(), "--horizon", "50"]);
    assert_eq!(code(&o), 0);
    let o = dialectic(&["diff", tie.to_str().unwrap(), "--horizon", "50", "--mutate"]);
    assert_eq!(code(&o), 1);
    assert!(
        stdout(&o).starts_with("backward: position 1 differs at q-stage 3"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn diff_fuzz_is_independent_of_jobs() {
    let one = dialectic(&["diff", "--fuzz", "12", "--seed", "40", "--horizon", "300"]);
    let four = dialectic(&[
        "diff",
        "--fuzz",
        "12",
        "--seed",
        "40",
        "--horizon",
        "300",
        "--jobs",
        "4",
    ]);
    assert_eq!(code(&one), 0, "{}", stdout(&one));
    assert_eq!(stdout(&one), stdout(&four));
    assert!(stdout(&one).ends_with("12 systems, 0 with mismatches\n"));
}

#[test]
fn diff_needs_exactly_one_source() {
    assert_eq!(code(&dialectic(&["diff"])), 2);
    let empty = asset("empty.spec");
    assert_eq!(code(&dialectic(&["diff", empty.to_str().unwrap(), "--fuzz", "3"])), 2);
}

#[test]
fn diagonalize_bundled_family() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.txt");
    let o = dialectic(&["diagonalize", "--report", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    for line in [
        "opponent 0: S8done witness=a4",
        "opponent 1: S8done witness=a65",
        "opponent 2: S8done witness=a114",
        "opponent 3: PO2wait witness=-",
        "opponent 4: S2wait witness=a191",
    ] {
        assert!(out.contains(line), "{out}");
    }
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("[verdicts]"));
}

#[test]
fn diagonalize_empty_family_is_pure_expansion() {
    let dir = TempDir::new().unwrap();
    let family = write(&dir, "none.family", "# nobody\n");
    let trace = dir.path().join("t.trace");
    let o = dialectic(&[
        "diagonalize",
        &family,
        "--horizon",
        "50",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 50);
    assert!(text.lines().all(|l| l.split('\t').nth(1) == Some("EXP")));
}

#[test]
fn diagonalize_bad_family_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let family = write(&dir, "bad.family", "opponent x g=nope h=nope r=nope\n");
    let o = dialectic(&["diagonalize", &family]);
    assert_eq!(code(&o), 2);
}

#[test]
fn repair_and_revise() {
    let kb = asset("conflict.kb");
    let o = dialectic(&["repair", kb.to_str().unwrap(), "--horizon", "200", "--window", "50"]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).starts_with("kept: k0 k1 k3\nremoved: k2\n"),
        "{}",
        stdout(&o)
    );

    let dir = TempDir::new().unwrap();
    let consistent = write(&dir, "ok.kb", "item k0\nitem k1\nrule k0 -> k1\n");
    let o = dialectic(&["repair", &consistent, "--horizon", "50", "--window", "10"]);
    assert!(stdout(&o).starts_with("kept: k0 k1\nremoved: \n"), "{}", stdout(&o));

    let input = asset("incoming.kb");
    let o = dialectic(&[
        "revise",
        kb.to_str().unwrap(),
        input.to_str().unwrap(),
        "--horizon",
        "200",
    ]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).starts_with("accepted: b\nkept: k0 k2 k3\nremoved: k1\n"),
        "{}",
        stdout(&o)
    );

    let clash = write(&dir, "clash.kb", "item b0\nitem b1\nconflict b0 b1\n");
    let o = dialectic(&["revise", kb.to_str().unwrap(), &clash]);
    assert_eq!(code(&o), 1);

    let o = dialectic(&["repair", kb.to_str().unwrap(), "--horizon", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_command_and_missing_file_are_usage_errors() {
    assert_eq!(code(&dialectic(&["frobnicate"])), 2);
    assert_eq!(code(&dialectic(&["run", "/nonexistent/spec"])), 2);
    assert_eq!(code(&dialectic(&["--help"])), 0);
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for round in 0..2 {
        let trace = dir.path().join(format!("t{round}"));
        let report = dir.path().join(format!("r{round}"));
        let o = dialectic(&[
            "diagonalize",
            "--horizon",
            "3000",
            "--report",
            report.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ]);
        outputs.push((o.stdout, fs::read(&trace).unwrap(), fs::read(&report).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}
