mod support;

use cloudnet_core::engine::*;
use cloudnet_core::network::*;
use cloudnet_core::solver::SolverConfig;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

fn cfg() -> SolverConfig {
    SolverConfig::deterministic()
}

#[derive(Debug, Clone)]
struct Arrival {
    slots: f64,
    bw: f64,
    /// Index into the substrate nodes, per virtual node.
    at: Vec<usize>,
    pinned: bool,
}

fn arrival() -> impl Strategy<Value = Arrival> {
    (
        prop::sample::select(vec![0.5, 1.0, 2.0]),
        prop::sample::select(vec![0.5, 1.0, 3.0]),
        prop::collection::vec(0usize..8, 1..=3),
        any::<bool>(),
    )
        .prop_map(|(slots, bw, at, pinned)| Arrival { slots, bw, at, pinned })
}

fn arrival_request(i: usize, a: &Arrival, s: &SubstrateGraph) -> (VirtualRequest, PolicyMatrices) {
    let names = ["x", "y", "z"];
    let k = a.at.len();
    let nodes: Vec<(&str, f64)> = names[..k].iter().map(|n| (*n, a.slots)).collect();
    let links: Vec<(&str, &[&str], ValueType, f64)> = if k >= 2 {
        vec![("l", &names[..k], ValueType::Constant, a.bw)]
    } else {
        Vec::new()
    };
    let r = request(&format!("r{i:02}"), &nodes, &links);
    let hosts: Vec<ElementId> = s.elements.values().filter(|e| e.is_node()).map(|e| e.id.clone()).collect();
    let mut p = PolicyMatrices::default();
    for (u, idx) in names.iter().zip(&a.at) {
        if a.pinned {
            p.fix(&eid(u), &hosts[idx % hosts.len()], s);
        } else {
            for v in s.elements.values().filter(|e| e.is_link()) {
                p.suit.insert((eid(u), v.id.clone()), false);
            }
        }
    }
    (r, p)
}

fn fill(seed: u64, arrivals: &[Arrival]) -> SubstrateState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_substrate(&mut rng, 4, 2, &[2.0, 3.0, 4.0], &[2.0, 4.0]);
    let mut state = SubstrateState::new(s.clone());
    for (i, a) in arrivals.iter().enumerate() {
        let (r, p) = arrival_request(i, a, &s);
        let rep = embed(&state, &r, &p, ObjectiveConfig::ResourceMin, &cfg()).unwrap();
        if let Some(e) = rep.embedding().cloned() {
            let problem = state.problem_for(&r, &p, ObjectiveConfig::ResourceMin, None).unwrap();
            let check = verify_embedding(&problem, &e, CheckScope::Full, 1e-6);
            assert!(check.is_clean(), "{check}");
            state.commit(r, p, e).unwrap();
        }
    }
    state
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn residuals_stay_non_negative(seed in 0u64..1000, arrivals in prop::collection::vec(arrival(), 1..6)) {
        let state = fill(seed, &arrivals);
        for ((v, r), left) in state.residuals() {
            prop_assert!(left >= -1e-6, "{v}/{r}: {left}");
        }
    }

    #[test]
    fn reembed_never_worsens(seed in 0u64..1000, arrivals in prop::collection::vec(arrival(), 1..5), penalty in 0.01f64..2.0) {
        let state = fill(seed, &arrivals);
        let inputs = MigrationInputs { node_penalty: penalty, ..Default::default() };
        let plan = reembed(&state, ObjectiveConfig::ResourceMin, &inputs, &cfg(), ReembedMode::Sequential).unwrap();
        prop_assert!(plan.objective <= plan.status_quo + 1e-6, "{} > {}", plan.objective, plan.status_quo);
        prop_assert!(plan.improvement >= -1e-6);
        let next = apply_plan(&state, &plan).unwrap();
        for ((v, r), left) in next.residuals() {
            prop_assert!(left >= -1e-6, "{v}/{r}: {left}");
        }
    }

    #[test]
    fn withdrawing_everything_restores_capacity(seed in 0u64..1000, arrivals in prop::collection::vec(arrival(), 1..5)) {
        let mut state = fill(seed, &arrivals);
        let empty = SubstrateState::new(state.substrate.clone()).residuals();
        let ids: Vec<String> = state.committed().keys().cloned().collect();
        for id in ids {
            state.withdraw(&id).unwrap();
        }
        prop_assert_eq!(state.residuals(), empty);
    }
}
