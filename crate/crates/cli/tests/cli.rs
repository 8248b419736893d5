use std::fs;
use std::process::{Command, Output};

fn qsurg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsurg")).args(args).output().expect("run qsurg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn build_then_verify_and_distance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = qsurg(&["build", "--code", "surface:3", "--out", d, "--name", "s3"]);
    assert!(o.status.success());
    let manifest = format!("{d}/s3.manifest");
    let o = qsurg(&["verify", "--code", &manifest]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("d\t3"));
    let o = qsurg(&["distance", "--code", "builtin:repetition:5"]);
    assert_eq!(stdout(&o).trim(), "5");
    let o = qsurg(&["distance", "--code", "builtin:repetition:5", "--budget", "2"]);
    assert_eq!(stdout(&o).trim(), ">=3");
    let o = qsurg(&["verify", "--code", "builtin:hamming743"]);
    assert!(stdout(&o).contains("soundness\t7/3"));
}

#[test]
fn declared_distance_mismatch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    qsurg(&["build", "--code", "steane", "--out", d.to_str().unwrap()]);
    let path = d.join("steane.manifest");
    let text = fs::read_to_string(&path).unwrap().replace("d=3", "d=5");
    assert!(text.contains("d=5"));
    fs::write(&path, text).unwrap();
    let o = qsurg(&["verify", "--code", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_inputs_exit_nonzero() {
    let o = qsurg(&["verify", "--code", "/nonexistent/x.manifest"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
    let o = qsurg(&["sim", "run", "--circuit", "builtin:surface:3", "--p", "0.01", "--trials", "10", "--lambda", "1"]);
    assert!(!o.status.success());
    let o = qsurg(&["ledger", "--preset", "galaxy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sim_run_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.tsv");
    let args = [
        "sim", "run", "--circuit", "builtin:surface:3", "--p", "0", "--trials", "200", "--seed", "1", "--lambda", "1",
        "--out", out.to_str().unwrap(),
    ];
    assert!(qsurg(&args).status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p\ttrials\tfailures\testimate\tci_low\tci_high");
    let row: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!((row[1], row[2]), ("200", "0"));
}

#[test]
fn surgery_build_then_protocol_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("alpha.in"), "1 1\n1\n").unwrap();
    let out = d.join("deformed");
    let o = qsurg(&[
        "surgery", "build", "--target", "builtin:surface:3", "--alpha", d.join("alpha.in").to_str().unwrap(), "--rcode",
        "builtin:hamming743", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    for f in ["deformed.manifest", "deformed.h_x.txt", "lifted.h_m.txt", "extraction.txt", "report.tsv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let o = qsurg(&[
        "protocol", "check", "--deformed", out.to_str().unwrap(), "--max-weight", "1", "--samples", "200", "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("lemma.cs.csmX\tpass"));
}

#[test]
fn ltsp_verify_ledger() {
    let o = qsurg(&[
        "ltsp", "verify", "--source", "builtin:steane", "--fcode", "builtin:hamming743", "--max-weight", "1", "--samples",
        "100",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("lemma.ltsp.spZ\tpass"));
}

#[test]
fn compile_writes_schedule_and_cost() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("ops.txt"), "INIT 0\nCNOT 0.0 1.0\nCNOT 0.1 1.1\nT 2.3\nMEA 1.2\n").unwrap();
    let out = format!("{},{}", d.join("s.tsv").display(), d.join("c.tsv").display());
    let o = qsurg(&["compile", "--circuit", d.join("ops.txt").to_str().unwrap(), "--k", "4", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sched = fs::read_to_string(d.join("s.tsv")).unwrap();
    assert_eq!(sched.lines().count(), 6);
    assert!(fs::read_to_string(d.join("c.tsv")).unwrap().contains("bound_present_holds\ttrue"));
    let o = qsurg(&["compile", "--circuit", d.join("ops.txt").to_str().unwrap(), "--k", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn vacuous_ledger_and_determinism() {
    let o = qsurg(&["ledger", "--preset", "quick", "--max-weight", "0", "--seed", "5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("lemma.ltsp.spX\tpass\t0\tvacuous"));
    let again = qsurg(&["ledger", "--preset", "quick", "--max-weight", "0", "--seed", "5"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn thread_cap_is_honoured() {
    let o = Command::new(env!("CARGO_BIN_EXE_qsurg"))
        .args(["distance", "--code", "builtin:steane"])
        .env("QSURG_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(stdout(&o).trim(), "3");
    let o = Command::new(env!("CARGO_BIN_EXE_qsurg"))
        .args(["distance", "--code", "builtin:steane"])
        .env("QSURG_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
