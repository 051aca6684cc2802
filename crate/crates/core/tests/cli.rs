#![cfg(feature = "cli")]

use std::path::PathBuf;

use cloudnet_core::cli::{run, EXIT_OK, EXIT_REJECTED, EXIT_USAGE};
use cloudnet_core::scenario::parse_metrics_csv;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn cloudnet(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cloudnet").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("stdout is not JSON ({e}):\n{text}"))
}

#[test]
fn validate_shipped_problem() {
    let o = cloudnet(&["validate", "--problem", &data("problem.json")]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert_eq!(json(&o.out)["issues"], serde_json::json!([]));
}

#[test]
fn embed_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let next = dir.path().join("state.json");
    let emb = dir.path().join("embedding.json");
    let o = cloudnet(&[
        "embed",
        "--state",
        &data("state.json"),
        "--request",
        &data("request.json"),
        "--deterministic",
        "--state-out",
        next.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let doc = json(&o.out);
    assert_eq!(doc["embedding"]["mapping"]["ap1"], serde_json::json!(["A"]));
    std::fs::write(&emb, &o.out).unwrap();

    let v = cloudnet(&["verify", "--state", next.to_str().unwrap(), "--embedding", emb.to_str().unwrap()]);
    assert_eq!(v.code, EXIT_OK, "{}", v.out);
    assert_eq!(json(&v.out)["valid"], true);

    // a committed embedding is checked against the rest of the state
    let again = cloudnet(&["verify", "--state", &data("state_committed.json"), "--embedding", &data("embedding.json")]);
    assert_eq!(again.code, EXIT_OK);
}

#[test]
fn verify_flags_tampered_embedding() {
    let mut doc = json(&std::fs::read_to_string(data("embedding.json")).unwrap());
    let allocs = doc["embedding"]["allocations"].as_array_mut().unwrap();
    let a = allocs.iter_mut().find(|a| a["element"] == "cr").unwrap();
    a["amount"] = serde_json::json!(20.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let o = cloudnet(&["verify", "--state", &data("state.json"), "--embedding", path.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_REJECTED);
    let report = json(&o.out);
    assert_eq!(report["valid"], false);
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn infeasible_embed_is_a_rejection_document() {
    let o = cloudnet(&["embed", "--state", &data("state.json"), "--request", &data("request_infeasible.json")]);
    assert_eq!(o.code, EXIT_REJECTED);
    let r = json(&o.out);
    assert_eq!(r["request_id"], "too-big");
    assert_eq!(r["status"], "infeasible");
}

#[test]
fn whatif_full_and_partial() {
    let full = cloudnet(&["whatif", "--state", &data("state_committed.json"), "--subset", &data("subset_full.txt")]);
    assert_eq!(full.code, EXIT_OK, "{}", full.err);
    let w = json(&full.out);
    assert_eq!(w["feasible"], true);
    assert_eq!(w["migration_cost"], 0.0);

    let part = cloudnet(&["whatif", "--state", &data("state_committed.json"), "--subset", &data("subset_ab.txt")]);
    assert_eq!(part.code, EXIT_REJECTED);
    assert_eq!(json(&part.out)["feasible"], false);
}

#[test]
fn reembed_prints_plan() {
    let o = cloudnet(&["reembed", "--state", &data("state_committed.json"), "--deterministic"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let plan = json(&o.out);
    assert_eq!(plan["entries"], serde_json::json!([]));
    assert!(plan["migration_cost"].is_number());
    assert!(plan["improvement"].is_number());
}

#[test]
fn export_both_formats() {
    let lp = cloudnet(&["export-model", "--problem", &data("problem.json"), "--format", "lp"]);
    assert_eq!(lp.code, EXIT_OK);
    assert!(lp.out.to_lowercase().contains("subject to"));
    let mps = cloudnet(&["export-model", "--problem", &data("problem.json"), "--format", "mps"]);
    assert_eq!(mps.code, EXIT_OK);
    assert!(mps.out.starts_with("NAME"));
    assert!(mps.out.trim_end().ends_with("ENDATA"));
}

#[test]
fn experiment_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let o = cloudnet(&[
        "experiment",
        "--config",
        &data("scenario.json"),
        "--out",
        dir.path().to_str().unwrap(),
        "--deterministic",
        "--seed",
        "3",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert!(o.err.contains("seed 3"));
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let records = parse_metrics_csv(&csv).unwrap();
    assert!(!records.is_empty());
    let config = json(&std::fs::read_to_string(dir.path().join("config.json")).unwrap());
    assert_eq!(config["seed"], 3);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cloudnet(&["embed", "--bogus"]).code, EXIT_USAGE);
    assert_eq!(cloudnet(&["frobnicate"]).code, EXIT_USAGE);
    let missing = cloudnet(&["validate", "--problem", "/nonexistent/problem.json"]);
    assert_eq!(missing.code, EXIT_USAGE);
    assert!(missing.out.is_empty());
    assert!(missing.err.contains("error"));
    let bad = cloudnet(&["export-model", "--problem", &data("problem.json"), "--format", "xml"]);
    assert_eq!(bad.code, EXIT_USAGE);
}
