use std::path::{Path, PathBuf};

use ahdiag_cli::format::{fmt_complex, parse_complex};
use ahdiag_cli::{parse_str, run, serialize};
use ahdiag_core::diagmaps::is_maximally_homogeneous;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ahdiag(args: &[&str]) -> Out {
    let mut o = Vec::new();
    let mut e = Vec::new();
    let argv = std::iter::once("ahdiag").chain(args.iter().copied());
    let code = run(argv, None, &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn fx(name: &str) -> String {
    fixture(name).display().to_string()
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const TINY: &str = r#"
version = 1

[[graphs]]
id = "I"
vertices = ["a", "b"]
edges = [{ name = "e", tail = "a", head = "b", length = "1" }]

[[blocks]]
id = "A"
summands = [{ graph = "I", size = 1 }]

[[blocks]]
id = "B"
summands = [{ graph = "I", size = 2 }]

[[diagonal_forms]]
id = "f"
source = "A"
target = "B"

[[diagonal_forms.targets]]
entries = [
  { source = 0, knots = [[["0", "e", "0"], ["1", "e", "2/6"]]] },
  { source = 0, knots = [[["0", "e", "1/3"], ["1", "e", "1"]]] },
]
"#;

#[test]
fn minimal_file() {
    let m = parse_str("version = 1\n").unwrap();
    assert!(m.forms.is_empty() && m.system.is_none());
    assert_eq!(serialize(&m), "version = 1\n");
}

#[test]
fn rationals_are_normalized_and_round_trip() {
    let m = parse_str(TINY).unwrap();
    let text = serialize(&m);
    assert!(text.contains("\"1/3\""), "{text}");
    assert!(!text.contains("2/6"));
    let again = parse_str(&text).unwrap();
    assert_eq!(again, m);
    assert_eq!(serialize(&again), text);
    assert!(is_maximally_homogeneous(m.form("f").unwrap()).holds);
}

#[test]
fn complex_entries() {
    for (s, norm) in [("1/2", "1/2"), ("0+1i", "0+1i"), ("i", "0+1i"), ("-i", "0-1i"), ("3/4-2/8i", "3/4-1/4i"), ("-1+2i", "-1+2i")] {
        let c = parse_complex(s).unwrap_or_else(|| panic!("{s}"));
        assert_eq!(fmt_complex(&c), norm);
        assert_eq!(parse_complex(norm), Some(c));
    }
    assert_eq!(parse_complex("1/0"), None);
    assert_eq!(parse_complex("x"), None);
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let dangling = write_tmp(&dir, "d.toml", &TINY.replace("source = \"A\"", "source = \"Nope\""));
    let r = ahdiag(&["check", &dangling]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("Nope") && r.stderr.contains("d.toml"), "{}", r.stderr);

    let unknown = write_tmp(&dir, "u.toml", &format!("{TINY}\nbogus = 1\n"));
    let r = ahdiag(&["check", &unknown]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("bogus"), "{}", r.stderr);

    let bad_q = write_tmp(&dir, "q.toml", &TINY.replace("\"2/6\"", "\"0.33\""));
    let r = ahdiag(&["check", &bad_q]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("0.33"), "{}", r.stderr);

    let r = ahdiag(&["check", &dir.path().join("missing.toml").display().to_string()]);
    assert_eq!(r.code, 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(ahdiag(&["frobnicate"]).code, 2);
    assert_eq!(ahdiag(&["perturb", &fx("thirds.toml"), "--delta", "abc"]).code, 2);
    assert_eq!(ahdiag(&["groupoid", &fx("goodearl_half.toml"), "--level", "9"]).code, 2);
    assert_eq!(ahdiag(&["--help"]).code, 0);
}

#[test]
fn delta_gate_cites_the_bound() {
    let r = ahdiag(&["perturb", &fx("delta4.toml"), "--delta", "1/4"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("must be < 1/4"), "{}", r.stderr);
    let r = ahdiag(&["perturb", &fx("delta4.toml"), "--delta", "1/5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn perturb_writes_a_checkable_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let r = ahdiag(&["perturb", &fx("thirds.toml"), "--out", &out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = ahdiag_cli::parse_file(&dir.path().join("perturbed.toml")).unwrap();
    assert!(is_maximally_homogeneous(m.form("phi_mh").unwrap()).holds);
    assert_eq!(m.run.form.as_deref(), Some("phi_mh"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("perturb.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "pass");
    assert_eq!(json["sections"][0]["facts"][0][0], "delta");

    // the perturbed form is injective, the original is not
    let r = ahdiag(&["check", &dir.path().join("perturbed.toml").display().to_string()]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("[PASS] diagonal form phi_mh"), "{}", r.stdout);
    assert!(r.stdout.contains("[FAIL] diagonal form phi\n"), "{}", r.stdout);
}

#[test]
fn intertwine_exit_codes() {
    let r = ahdiag(&["intertwine", &fx("schedule.toml")]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let r = ahdiag(&["intertwine", &fx("violation.toml")]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("[FAIL] level 2"), "{}", r.stdout);
}

#[test]
fn groupoid_csv_has_every_word() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let r = ahdiag(&["groupoid", &fx("goodearl_half.toml"), "--depth", "2", "--out", &out]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let csv = std::fs::read_to_string(dir.path().join("orbits.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    // s = 2 at every step: 4 words per sample, 5 default samples on the interval
    assert_eq!(rows.len(), 20);
    let mut per_sample = std::collections::BTreeMap::new();
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 5);
        *per_sample.entry(f[2].to_string()).or_insert(0) += 1;
    }
    assert!(per_sample.values().all(|&c| c == 4), "{per_sample:?}");
}

#[test]
fn twisted_systems_need_untwisting() {
    let r = ahdiag(&["groupoid", &fx("villadsen2.toml")]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("untwist"), "{}", r.stderr);
    assert_eq!(ahdiag(&["check", &fx("villadsen2.toml")]).code, 0);
}

#[test]
fn export_to_stdout() {
    let r = ahdiag(&["export", &fx("villadsen1.toml"), "--dot"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.starts_with("digraph stage_n1_m2 {"));
    assert!(r.stdout.trim_end().ends_with('}'));
    let r = ahdiag(&["export", &fx("villadsen1.toml"), "--csv", "--depth", "1"]);
    assert!(r.stdout.starts_with("base_level,depth,z,word,orbit_size\n"));
}

#[test]
fn generated_corpus_is_current() {
    let cases: &[(&str, &[&str])] = &[
        ("goodearl_half.toml", &["--kind", "goodearl-half", "--levels", "4"]),
        ("goodearl_dense.toml", &["--kind", "goodearl-dense", "--levels", "8", "--per-level", "2"]),
        ("goodearl_stuck.toml", &["--kind", "goodearl-stuck", "--levels", "8", "--per-level", "2"]),
        ("villadsen1.toml", &["--kind", "villadsen1", "--levels", "3"]),
        ("villadsen2.toml", &["--kind", "villadsen2", "--levels", "3"]),
        ("dynamics.toml", &["--kind", "dynamics", "--levels", "4"]),
        ("thirds.toml", &["--kind", "thirds"]),
        ("pipeline_2.toml", &["--kind", "pipeline", "--seed", "2"]),
        ("violation.toml", &["--kind", "violation"]),
    ];
    for (file, args) in cases {
        let mut argv = vec!["generate"];
        argv.extend_from_slice(args);
        let r = ahdiag(&argv);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(r.stdout, std::fs::read_to_string(fixture(file)).unwrap(), "{file} is stale");
    }
}

#[test]
fn binary_honours_the_output_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_ahdiag"))
        .args(["--json", "check", &fx("goodearl_half.toml")])
        .env(ahdiag_cli::OUT_ENV, dir.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    let printed: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("check.json")).unwrap()).unwrap();
    assert_eq!(printed["status"], "pass");
    // the written copy also lists itself as an artifact
    assert_eq!(written["artifacts"][0], "check.json");
}
