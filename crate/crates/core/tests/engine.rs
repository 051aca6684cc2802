mod support;

use std::collections::BTreeSet;

use cloudnet_core::engine::*;
use cloudnet_core::network::*;
use cloudnet_core::solver::{MilpStatus, SolverConfig};
use support::*;

fn cfg() -> SolverConfig {
    SolverConfig::deterministic()
}

fn accept(state: &SubstrateState, r: &VirtualRequest, p: &PolicyMatrices) -> Embedding {
    let rep = embed(state, r, p, ObjectiveConfig::ResourceMin, &cfg()).unwrap();
    rep.embedding().cloned().expect("accepted")
}

#[test]
fn single_node_lands_on_the_only_suitable_host() {
    let s = triangle(2.0, 5.0);
    let state = SubstrateState::new(s.clone());
    let r = request("r", &[("x", 1.0)], &[]);
    let e = accept(&state, &r, &fixed(&s, &[("x", "B")]));
    assert_eq!(e.host_of(&eid("x")), Some(&eid("B")));
    assert!((e.objective - 1.0).abs() < 1e-9);
}

#[test]
fn path_flow_allocates_demand_on_every_traversed_element() {
    let s = substrate(
        &[("A", 1.0, 10.0), ("B", 1.0, 10.0), ("C", 1.0, 10.0)],
        &[("A", "B", 10.0), ("B", "C", 10.0)],
        10.0,
    );
    let state = SubstrateState::new(s.clone());
    let r = request(
        "r",
        &[("x", 1.0), ("y", 1.0)],
        &[("xy", &["x", "y"], ValueType::Constant, 3.0)],
    );
    let e = accept(&state, &r, &fixed(&s, &[("x", "A"), ("y", "C")]));
    let path: BTreeSet<ElementId> = ["A", "A-B", "B", "B-C", "C"].into_iter().map(eid).collect();
    assert_eq!(e.mapping[&eid("xy")], path);
    for v in &path {
        let used: f64 = e
            .allocations
            .iter()
            .filter(|a| a.element == eid("xy") && &a.host == v)
            .map(|a| a.amount)
            .sum();
        assert!((used - 3.0).abs() < 1e-9, "{v}: {used}");
    }
    // 2 slots + 3 bandwidth on five elements
    assert!((e.objective - 17.0).abs() < 1e-6);
}

#[test]
fn sixteenth_node_is_rejected() {
    let s = substrate(&[("A", 15.0, 0.0)], &[], 0.0);
    let mut state = SubstrateState::new(s.clone());
    for i in 0..15 {
        let r = request(&format!("r{i:02}"), &[("x", 1.0)], &[]);
        let p = fixed(&s, &[("x", "A")]);
        let e = accept(&state, &r, &p);
        state.commit(r, p, e).unwrap();
    }
    let r = request("r15", &[("x", 1.0)], &[]);
    let rep = embed(&state, &r, &fixed(&s, &[("x", "A")]), ObjectiveConfig::ResourceMin, &cfg()).unwrap();
    match rep.outcome {
        EmbedOutcome::Rejected(rej) => assert_eq!(rej.status, MilpStatus::Infeasible),
        EmbedOutcome::Accepted(_) => panic!("16th node accepted"),
    }
}

#[test]
fn commit_then_withdraw_restores_residuals_bit_for_bit() {
    let s = triangle(3.0, 7.3);
    let mut state = SubstrateState::new(s.clone());
    let base = state.residuals();
    let r = request("r", &[("x", 1.3), ("y", 0.7)], &[("xy", &["x", "y"], ValueType::Minimum, 1.1)]);
    let p = fixed(&s, &[("x", "A"), ("y", "C")]);
    let e = accept(&state, &r, &p);
    state.commit(r.clone(), p.clone(), e.clone()).unwrap();
    assert_ne!(state.residuals(), base);
    assert!(matches!(state.commit(r, p, e), Err(cloudnet_core::error::EngineError::AlreadyCommitted(_))));
    state.withdraw("r").unwrap();
    let after = state.residuals();
    for (k, v) in &base {
        assert_eq!(v.to_bits(), after[k].to_bits());
    }
    assert!(matches!(
        state.withdraw("r"),
        Err(cloudnet_core::error::EngineError::UnknownRequest(_))
    ));
}

#[test]
fn commit_beyond_residual_is_refused() {
    let s = triangle(1.0, 1.0);
    let mut state = SubstrateState::new(s.clone());
    let p = fixed(&s, &[("x", "A")]);
    let r1 = request("r1", &[("x", 1.0)], &[]);
    let e1 = accept(&state, &r1, &p);
    let r2 = request("r2", &[("x", 1.0)], &[]);
    let mut e2 = e1.clone();
    e2.request_id = "r2".into();
    state.commit(r1, p.clone(), e1).unwrap();
    assert!(matches!(
        state.commit(r2, p, e2),
        Err(cloudnet_core::error::EngineError::Refused(_))
    ));
}

#[test]
fn disjoint_commits_commute() {
    let s = triangle(2.0, 4.0);
    let empty = SubstrateState::new(s.clone());
    let ra = request("a", &[("x", 1.0)], &[]);
    let rb = request("b", &[("x", 2.0)], &[]);
    let pa = fixed(&s, &[("x", "A")]);
    let pb = fixed(&s, &[("x", "B")]);
    let ea = accept(&empty, &ra, &pa);
    let eb = accept(&empty, &rb, &pb);
    let mut one = empty.clone();
    one.commit(ra.clone(), pa.clone(), ea.clone()).unwrap();
    one.commit(rb.clone(), pb.clone(), eb.clone()).unwrap();
    let mut two = empty.clone();
    two.commit(rb, pb, eb).unwrap();
    two.commit(ra, pa, ea).unwrap();
    assert_eq!(one.residuals(), two.residuals());
    assert_eq!(one, two);
}

/// `x` committed at A (weight 1) while B (weight 0.4) was occupied.
fn two_location_state(penalty: f64, transit: f64) -> (SubstrateState, MigrationInputs) {
    let s = substrate(&[("A", 1.0, 0.0), ("B", 1.0, 0.0)], &[], 0.0);
    let mut state = SubstrateState::new(s.clone());
    let blocker = request("a-blocker", &[("y", 1.0)], &[]);
    let pb = fixed(&s, &[("y", "B")]);
    let eb = accept(&state, &blocker, &pb);
    state.commit(blocker, pb, eb).unwrap();
    let r = request("b-tenant", &[("x", 1.0)], &[]);
    let mut p = PolicyMatrices::default();
    p.set_weight("x", "A", 1.0);
    p.set_weight("x", "B", 0.4);
    let e = accept(&state, &r, &p);
    assert_eq!(e.host_of(&eid("x")), Some(&eid("A")));
    state.commit(r, p, e).unwrap();
    state.withdraw("a-blocker").unwrap();
    let mut inputs = MigrationInputs::default();
    inputs.penalty.insert(eid("x"), penalty);
    inputs.default_transit = transit;
    (state, inputs)
}

#[test]
fn expensive_migration_is_not_proposed() {
    let (state, inputs) = two_location_state(5.0, 0.0);
    let plan = reembed(&state, ObjectiveConfig::ResourceMin, &inputs, &cfg(), ReembedMode::Sequential).unwrap();
    assert!(plan.entries.is_empty());
    assert_eq!(plan.migration_cost, 0.0);
    assert!(plan.improvement.abs() < 1e-9);
}

#[test]
fn cheap_migration_moves_the_element() {
    let (state, inputs) = two_location_state(0.1, 0.05);
    for mode in [ReembedMode::Sequential, ReembedMode::Joint] {
        let plan = reembed(&state, ObjectiveConfig::ResourceMin, &inputs, &cfg(), mode).unwrap();
        assert_eq!(plan.entries.len(), 1, "{mode:?}");
        let entry = &plan.entries[0];
        assert_eq!(entry.proposed.host_of(&eid("x")), Some(&eid("B")));
        assert!(entry.migrated.contains(&eid("x")));
        assert!((entry.improvement - (0.6 - 0.1 - 0.05)).abs() < 1e-6, "{}", entry.improvement);
        assert!((plan.improvement - 0.45).abs() < 1e-6);
        let next = apply_plan(&state, &plan).unwrap();
        assert_eq!(next.get("b-tenant").unwrap().embedding.host_of(&eid("x")), Some(&eid("B")));
    }
}

#[test]
fn reembed_of_empty_state_is_empty() {
    let state = SubstrateState::new(triangle(1.0, 1.0));
    let plan = reembed(
        &state,
        ObjectiveConfig::ResourceMin,
        &MigrationInputs::default(),
        &cfg(),
        ReembedMode::Sequential,
    )
    .unwrap();
    assert!(plan.entries.is_empty());
}

fn triangle_with_ap() -> SubstrateState {
    let s = triangle(2.0, 4.0);
    let mut state = SubstrateState::new(s.clone());
    let r = request("r", &[("ap", 1.0), ("cr", 1.0)], &[("l", &["ap", "cr"], ValueType::Constant, 1.0)]);
    let p = fixed(&s, &[("ap", "A")]);
    let e = accept(&state, &r, &p);
    state.commit(r, p, e).unwrap();
    state
}

#[test]
fn whatif_full_substrate_costs_nothing() {
    let state = triangle_with_ap();
    let all: BTreeSet<ElementId> = state.substrate.elements.keys().cloned().collect();
    let w = whatif_subset(&state, &all, &cfg()).unwrap();
    assert!(w.feasible);
    assert_eq!(w.migration_cost, 0.0);
}

#[test]
fn whatif_without_the_access_point_host_is_infeasible() {
    let state = triangle_with_ap();
    let subset: BTreeSet<ElementId> = ["B", "C", "B-C"].into_iter().map(eid).collect();
    let w = whatif_subset(&state, &subset, &cfg()).unwrap();
    assert!(!w.feasible);
}

#[test]
fn checker_names_mutations() {
    let s = triangle(2.0, 4.0);
    let state = SubstrateState::new(s.clone());
    let r = request("r", &[("x", 1.0), ("y", 1.0)], &[("xy", &["x", "y"], ValueType::Constant, 2.0)]);
    let p = fixed(&s, &[("x", "A"), ("y", "C")]);
    let e = accept(&state, &r, &p);
    let problem = state.problem_for(&r, &p, ObjectiveConfig::ResourceMin, None).unwrap();
    assert!(verify_embedding(&problem, &e, CheckScope::Full, 1e-6).is_clean());

    let mut inflated = e.clone();
    inflated.allocations[0].amount *= 10.0;
    let rep = verify_embedding(&problem, &inflated, CheckScope::Placement, 1e-6);
    assert!(!rep.is_clean());

    let mut teleport = e.clone();
    let k = teleport.flows.iter().position(|f| f.from == eid("A")).unwrap();
    teleport.flows.remove(k);
    let rep = verify_embedding(&problem, &teleport, CheckScope::Placement, 1e-6);
    assert!(rep.violations.iter().any(|v| v.contains("req_fconst") && v.contains("at A")), "{rep}");
}
