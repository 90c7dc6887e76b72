use std::path::{Path, PathBuf};
use std::process::Command;

use forge_core::cli::run;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn forge(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["forge"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn fx(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

#[test]
fn graph_age_amalgamates() {
    let (code, out, _) = forge(&["check", "--age", "graphs", "--span", "3", "--amalgam", "6"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("amalgamation: holds-within-bound"));
    assert!(out.contains("span: 3"));
}

#[test]
fn cospan_fails_ore() {
    let (code, out, _) = forge(&["check", "--cat", &fx("cospan.cat"), "--ore"]);
    assert_eq!(code, 1);
    assert!(out.contains("right-ore: violated"));
    assert!(out.contains("counterexample: cospan"));
}

#[test]
fn empty_category_is_trivial() {
    let (code, out, _) = forge(&["check", "--cat", &fx("empty.cat")]);
    assert_eq!(code, 0);
    assert!(out.contains("trivial topos"));
}

#[test]
fn diamond_poset_full_check() {
    let (code, out, _) = forge(&["check", "--cat", &fx("diamond.cat"), "--format", "kv"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("components: 1"));
    assert!(out.contains("jat-ideals: 2"));
    assert!(out.contains("duality-agrees: true"));
    assert!(!out.contains("[details]"));
}

#[test]
fn failure_fixtures_write_counterexamples() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("apf");
    let (code, out, _) = forge(&[
        "check",
        "--class-dir",
        &fx("ap-failure"),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("amalgamation: fails-with-counterexample"));
    let cx = std::fs::read_to_string(out_dir.join("counterexample.txt")).unwrap();
    assert!(cx.contains("[maps]"));
    assert!(out_dir.join("report.txt").exists());
    let (code, out, _) = forge(&["check", "--class-dir", &fx("fields")]);
    assert_eq!(code, 1);
    assert!(out.contains("joint-embedding: fails-with-counterexample"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cat");
    std::fs::write(&bad, "objects: m\nmorphisms: e: m -> m\n").unwrap();
    let (code, _, err) = forge(&["check", "--cat", bad.to_str().unwrap()]);
    assert_eq!(code, 64, "{err}");
    let (code, _, _) = forge(&["check", "--age", "fields"]);
    assert_eq!(code, 64);
    let (code, _, _) = forge(&["frobnicate"]);
    assert_eq!(code, 64);
}

#[test]
fn missing_file_is_an_io_error() {
    let (code, _, err) = forge(&["check", "--cat", "/nonexistent/x.cat"]);
    assert_eq!(code, 74, "{err}");
    let (code, _, _) = forge(&["audit", "/nonexistent/run"]);
    assert_eq!(code, 74);
}

#[test]
fn build_writes_stages_and_rejects_zero_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("lo");
    let (code, out, _) = forge(&[
        "build",
        "--age",
        "linords",
        "--steps",
        "15",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{out}");
    let stages = std::fs::read_dir(&dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("stage-")
        })
        .count();
    assert_eq!(stages, 16);
    assert!(out.contains("stage-sizes: 0 1 2"));
    let (code, _, _) = forge(&["build", "--age", "linords", "--steps", "0"]);
    assert_eq!(code, 64);
}

#[test]
fn audit_of_fresh_rado_run_has_nothing_violated() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("rado");
    forge(&[
        "build",
        "--age",
        "graphs",
        "--steps",
        "30",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let (code, out, _) = forge(&["audit", dir.to_str().unwrap(), "--format", "kv"]);
    assert!(code == 0 || code == 2, "{out}");
    assert!(!out.contains(": violated"), "{out}");
    // against itself the weave is the identity
    assert!(out.contains("uniqueness: holds"));
    assert!(out.contains("uniqueness-identity: true"));
}

#[test]
fn audit_against_second_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    forge(&[
        "build",
        "--age",
        "graphs",
        "--steps",
        "30",
        "--seed",
        "0",
        "--out",
        a.to_str().unwrap(),
    ]);
    forge(&[
        "build",
        "--age",
        "graphs",
        "--steps",
        "30",
        "--seed",
        "1",
        "--out",
        b.to_str().unwrap(),
    ]);
    let (_, out, _) = forge(&[
        "audit",
        a.to_str().unwrap(),
        "--against",
        b.to_str().unwrap(),
    ]);
    assert!(out.contains("uniqueness: holds"), "{out}");
    assert!(out.contains("depth 6: k="));
}

#[test]
fn rigid_fixture_is_violated_with_witness() {
    let (code, out, _) = forge(&["audit", &fx("rigid"), "--bound", "2", "--depth", "2"]);
    assert_eq!(code, 1);
    assert!(out.contains("universal: violated"));
    assert!(out.contains("witness: member of size 2 does not embed"));
}

#[test]
fn galois_subcommand() {
    let (code, out, _) = forge(&["galois", "--age", "pure", "--u-size", "5", "--c-max", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("[functor]"));
    let (code, out, _) = forge(&["galois", "--age", "pure", "--u-size", "4", "--c-max", "3"]);
    assert_eq!(code, 1);
    assert!(out.contains("full: violated"));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(["build", "--age", "pure", "--steps", "3", "--seed", "2"])
        .env(forge_core::cli::OUT_ENV, tmp.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(tmp
        .path()
        .join("pure-seed2-steps3")
        .join("chain.txt")
        .exists());
}
