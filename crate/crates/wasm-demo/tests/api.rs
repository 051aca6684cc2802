use cloudnet_wasm_demo::api;
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn embed_verify_whatif_round() {
    let out = parse(&api::embed(api::SAMPLE_STATE, api::SAMPLE_REQUEST, "resource").unwrap());
    assert_eq!(out["accepted"], true);
    let state = out["state"].to_string();
    let embedding = out["embedding"].to_string();

    let v = parse(&api::verify(&state, &embedding).unwrap());
    assert_eq!(v["valid"], true, "{v}");

    let w = parse(&api::whatif(&state, "A B C A-B A-C B-C").unwrap());
    assert_eq!(w["feasible"], true);
    assert_eq!(w["migration_cost"], 0.0);

    // ap2 is pinned to C
    let w = parse(&api::whatif(&state, "A, B, A-B").unwrap());
    assert_eq!(w["feasible"], false);
}

#[test]
fn load_objective_also_embeds() {
    let out = parse(&api::embed(api::SAMPLE_STATE, api::SAMPLE_REQUEST, "load").unwrap());
    assert_eq!(out["accepted"], true);
}

#[test]
fn verify_catches_a_moved_node() {
    let out = parse(&api::embed(api::SAMPLE_STATE, api::SAMPLE_REQUEST, "resource").unwrap());
    let mut e = out["embedding"].clone();
    e["embedding"]["mapping"]["ap1"] = serde_json::json!(["B"]);
    let v = parse(&api::verify(api::SAMPLE_STATE, &e.to_string()).unwrap());
    assert_eq!(v["valid"], false);
}

#[test]
fn repeated_request_fills_the_substrate() {
    let mut state = api::SAMPLE_STATE.to_string();
    let mut accepted = 0;
    for k in 0..10 {
        let req = api::SAMPLE_REQUEST.replace("\"tenant\"", &format!("\"tenant{k}\""));
        let out = parse(&api::embed(&state, &req, "resource").unwrap());
        if out["accepted"] == false {
            assert_eq!(out["rejection"]["status"], "infeasible");
            break;
        }
        accepted += 1;
        state = out["state"].to_string();
    }
    // 4 slots per node; every request takes one on A and one on C plus two
    // in one piece for `cr`, so a third request finds only single slots left
    assert_eq!(accepted, 2);
}

#[test]
fn bad_input_is_an_error() {
    assert!(api::embed("{", api::SAMPLE_REQUEST, "resource").is_err());
    assert!(api::embed(api::SAMPLE_STATE, api::SAMPLE_REQUEST, "fastest").is_err());
    assert!(api::whatif(api::SAMPLE_STATE, "  ").is_err());
    assert!(api::whatif(api::SAMPLE_STATE, "Z").is_err());
}
