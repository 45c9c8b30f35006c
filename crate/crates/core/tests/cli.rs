use std::path::PathBuf;
use std::process::Command;

use mgame::cli::{run_cli_with, EXIT_INVALID, EXIT_NEGATIVE, EXIT_OK};

fn roshambo_file() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("games/roshambo.game.json")
        .display()
        .to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("mgame").chain(args.iter().copied());
    let code = run_cli_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn utilities(json: &str) -> Vec<(String, String)> {
    let doc: serde_json::Value = serde_json::from_str(json).unwrap();
    let table = doc["tables"].as_array().unwrap().iter().find(|t| t["name"] == "utilities").unwrap();
    table["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r[1].as_str().unwrap().to_string(), r[2].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn list_names_every_experiment() {
    let (code, out, _) = run(&["list"]);
    assert_eq!(code, EXIT_OK);
    for name in ["roshambo", "primality", "frpd", "first-impressions", "tennis-prg", "revelation"] {
        assert!(out.contains(name), "{name} missing from\n{out}");
    }
}

#[test]
fn frpd_runs_clean() {
    let (code, out, err) = run(&["run", "frpd", "--format", "json"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["scenario"], "frpd");
    assert!(doc["findings"].as_object().unwrap().values().all(|v| v == true));
}

#[test]
fn roshambo_search_finds_nothing() {
    let file = roshambo_file();
    let (code, out, _) = run(&["search", "--game", &file]);
    assert_eq!(code, EXIT_NEGATIVE, "{out}");
}

#[test]
fn failed_certificate_exits_negative() {
    let file = roshambo_file();
    let (code, _, _) = run(&["certify", "--game", &file, "--profile", "const-0,const-0"]);
    assert_eq!(code, EXIT_NEGATIVE);
}

#[test]
fn single_sample_matches_exact_on_deterministic_profile() {
    let file = roshambo_file();
    let profile = "const-0,const-1";
    let (code, exact, err) = run(&["eval", "--game", &file, "--profile", profile, "--format", "json"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (code, mc, err) = run(&[
        "eval", "--game", &file, "--profile", profile, "--engine", "mc", "--samples", "1", "--format", "json",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (e, m) = (utilities(&exact), utilities(&mc));
    assert_eq!(e.len(), 2);
    for ((id_e, u_e), (id_m, u_m)) in e.iter().zip(&m) {
        assert_eq!(id_e, id_m);
        let exact: f64 = mgame::rational::parse_q(u_e).map(|q| mgame::rational::q_to_f64(&q)).unwrap();
        let sampled: f64 = u_m.parse().or_else(|_| mgame::rational::parse_q(u_m).map(|q| mgame::rational::q_to_f64(&q))).unwrap();
        assert_eq!(exact, sampled);
    }
}

#[test]
fn bad_input_exits_invalid() {
    let file = roshambo_file();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "no-such-experiment"],
        vec!["run", "frpd", "--param", "bogus=1"],
        vec!["run", "frpd", "--param", "rounds"],
        vec!["teleport"],
        vec!["search", "--game", "/no/such/file.json"],
        vec!["certify", "--game", &file, "--profile", "const-0"],
        vec!["certify", "--game", &file, "--profile", "const-0,nobody"],
        vec!["certify", "--game", &file, "--profile", "const-0,const-0", "--epsilon", "x"],
        vec!["eval", "--game", &file, "--profile", "const-0,const-0", "--format", "pdf"],
    ];
    for args in cases {
        let (code, _, err) = run(&args);
        assert_eq!(code, EXIT_INVALID, "{args:?}: {err}");
    }
}

#[test]
fn out_writes_one_file_per_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().display().to_string();
    let (code, out, err) = run(&["run", "revelation", "--param", "n=4", "--param", "k=1", "--format", "csv", "--out", &path]);
    assert_eq!(code, EXIT_OK, "{err}");
    let written = PathBuf::from(out.trim());
    assert_eq!(written, dir.path().join("revelation.csv"));
    let text = std::fs::read_to_string(written).unwrap();
    assert!(text.starts_with("# scenario\nrevelation\n"));
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mgame");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["list"]), Some(EXIT_OK));
    assert_eq!(status(&["search", "--game", &roshambo_file()]), Some(EXIT_NEGATIVE));
    assert_eq!(status(&["run", "frpd", "--param", "delta=2"]), Some(EXIT_INVALID));
}
