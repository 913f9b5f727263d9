use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn riesz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riesz")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn run_in(dir: &Path, name: &str, extra: &[&str]) -> Output {
    let out = dir.display().to_string();
    let path = scenario(name);
    let mut args = vec!["run", path.as_str(), "--out", out.as_str()];
    args.extend_from_slice(extra);
    riesz(&args)
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn bundled_scenarios_meet_their_expectations() {
    for name in [
        "remark-linf.json",
        "ck-uaw.json",
        "seq-metric.json",
        "preservation.json",
        "topology.json",
        "lemma-audits.json",
        "empty.json",
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = run_in(dir.path(), name, &[]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
    }
}

#[test]
fn remark_reports_the_expected_failure() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), "remark-linf.json", &[]);
    let csv = read(dir.path().join("remark-linf.csv"));
    assert!(csv.starts_with("check_id,index,quantity,threshold,verdict\n"));
    assert!(csv.contains("v-un,41,1/41,1/10,pass"));
    assert!(csv.contains("uv-un,\"7,7\",1,1/10,fail"));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path().join("remark-linf.json"))).unwrap();
    assert_eq!(summary["scenario"], "remark-linf");
    assert!(summary["ledger_ref"].is_null());
    let uv = summary["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["id"] == "uv-un")
        .unwrap();
    assert_eq!(uv["status"], "fail");
    assert_eq!(uv["expected"], "fail");
    assert_eq!(uv["matches"], true);
    assert!(uv["property"].as_str().unwrap().contains("un-null"));
}

#[test]
fn empty_scenario_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "empty.json", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        read(dir.path().join("empty.csv")),
        "check_id,index,quantity,threshold,verdict\n"
    );
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path().join("empty.json"))).unwrap();
    assert_eq!(summary["results"], serde_json::json!([]));
}

#[test]
fn flags_override_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    // A tolerance this small makes v-un fail.
    let o = run_in(dir.path(), "remark-linf.json", &["--horizon", "30", "--tol", "1/1000"]);
    assert_eq!(o.status.code(), Some(1));
    let csv = read(dir.path().join("remark-linf.csv"));
    assert!(csv.contains("v-un,30,1/30,1/1000,fail"));
    assert!(!csv.contains("v-un,31,"));
}

#[test]
fn unexpected_outcome_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        read(PathBuf::from(scenario("remark-linf.json"))).replace("\"expect\": \"fail\"", "\"expect\": \"pass\"");
    let path = dir.path().join("flipped.json");
    std::fs::write(&path, text).unwrap();
    let o = riesz(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MISMATCH"));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("not-json.json", "{"),
        ("unknown-op.json", r#"{"checks": [{"id": "a", "op": "nope"}]}"#),
        (
            "dangling.json",
            r#"{"spaces": [{"id": "K", "kind": "grid", "size": 2}], "checks": [{"id": "a", "op": "is_un_null", "trace": "missing"}]}"#,
        ),
        ("bad-field.json", r#"{"checks": [], "extra": 1}"#),
        ("escape.json", r#"{"outputs": {"csv": "../x.csv"}}"#),
        (
            "bad-space.json",
            r#"{"spaces": [{"id": "T", "kind": "tensor", "left": "A", "right": "B"}]}"#,
        ),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let o = riesz(&[
            "run",
            path.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!o.stderr.is_empty());
    }
    let o = riesz(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = riesz(&["check-lemmas", "--trials", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn audit_scenario_writes_ledger() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), "lemma-audits.json", &[]);
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path().join("lemma-audits.json"))).unwrap();
    assert_eq!(summary["ledger_ref"], "reports/audit-ledger.json");
    let ledger: serde_json::Value = serde_json::from_str(&read(dir.path().join("reports/audit-ledger.json"))).unwrap();
    let wedge = &ledger["entries"][0];
    assert_eq!(wedge["claim_id"], "wedge_equality");
    assert_eq!(wedge["status"], "falsified");
    assert_eq!(wedge["witnesses_revalidated"], true);
}

#[test]
fn check_lemmas_is_reproducible_and_honours_expectations() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = riesz(&[
            "check-lemmas",
            "--trials",
            "1",
            "--seed",
            "5",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let la = read(a.path().join("reports/audit-ledger.json"));
    assert_eq!(la, read(b.path().join("reports/audit-ledger.json")));
    let ledger: serde_json::Value = serde_json::from_str(&la).unwrap();
    for e in ledger["entries"].as_array().unwrap() {
        let expected = if ["wedge_equality", "refinement_inclusion"].contains(&e["claim_id"].as_str().unwrap()) {
            "falsified"
        } else {
            "verified-on-space"
        };
        assert_eq!(e["expected"], expected);
    }

    let tamper = a.path().join("expect.json");
    std::fs::write(&tamper, r#"{"wedge_equality": "verified-on-space"}"#).unwrap();
    let o = riesz(&[
        "check-lemmas",
        "--trials",
        "1",
        "--out",
        a.path().to_str().unwrap(),
        "--expect",
        tamper.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
