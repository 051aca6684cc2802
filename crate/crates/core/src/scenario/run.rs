use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::engine::{apply_plan, embed, reembed, EmbedOutcome, MigrationInputs, ReembedMode, SubstrateState};
use crate::error::{DocError, ScenarioError};
use crate::network::SubstrateGraph;
use crate::solver::{MilpStatus, SolverConfig};

use super::generate::generate_request;
use super::topology::{parse_topology, random_topology, TopologyDefaults};
use super::ScenarioConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub request_index: usize,
    pub accepted: bool,
    pub wall_ms: f64,
    pub nodes_explored: u64,
    /// Objective of the accepted embedding.
    pub objective: Option<f64>,
    pub migrations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub records: usize,
    pub accepted: usize,
    pub accepted_per_run: Vec<usize>,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub max_ms: f64,
    pub median_nodes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    pub warnings: Vec<String>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

fn summarize(records: &[RunRecord], runs: usize) -> Summary {
    let times: Vec<f64> = records.iter().map(|r| r.wall_ms).collect();
    let mut accepted_per_run = vec![0; runs];
    for r in records.iter().filter(|r| r.accepted) {
        accepted_per_run[r.run] += 1;
    }
    Summary {
        runs,
        records: records.len(),
        accepted: accepted_per_run.iter().sum(),
        accepted_per_run,
        mean_ms: if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 },
        median_ms: median(times.clone()),
        max_ms: times.iter().copied().fold(0.0, f64::max),
        median_nodes: median(records.iter().map(|r| r.nodes_explored as f64).collect()),
    }
}

/// The substrate an experiment runs on, plus topology warnings.
pub fn experiment_substrate(config: &ScenarioConfig) -> Result<(SubstrateGraph, Vec<String>), ScenarioError> {
    let defaults = TopologyDefaults {
        slots: config.element_capacity_slots,
        bandwidth: config.bandwidth,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (topology, warnings) = match &config.topology {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(DocError::from)?;
            let t = parse_topology(&text)?;
            let warnings = t.warnings.clone();
            if t.nodes.len() > config.substrate_size {
                (t.connected_subset(config.substrate_size, &mut rng)?, warnings)
            } else {
                (t, warnings)
            }
        }
        None => (
            random_topology(config.substrate_size, config.substrate_size / 2, &mut rng),
            Vec::new(),
        ),
    };
    Ok((topology.to_substrate(defaults)?, warnings))
}

fn run_seed(seed: u64, run: usize) -> u64 {
    seed ^ (run as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Places generated requests one after another until the first rejection
/// or the request budget, for every repetition.
pub fn run_experiment(config: &ScenarioConfig, solver: &SolverConfig) -> Result<ExperimentResult, ScenarioError> {
    config.validate()?;
    let (substrate, warnings) = experiment_substrate(config)?;
    let mut solver = solver.clone();
    if let Some(t) = config.time_limit {
        solver.time_limit = Some(Duration::from_secs_f64(t));
    }
    let inputs = MigrationInputs {
        node_penalty: config.migration_penalty,
        ..Default::default()
    };
    let mut records = Vec::new();
    for run in 0..config.repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed(config.seed, run));
        let mut state = SubstrateState::new(substrate.clone());
        for index in 0..config.max_requests {
            let g = generate_request(config, &substrate, &format!("r{index:04}"), &mut rng)?;
            let start = Instant::now();
            let report = embed(&state, &g.request, &g.policies, config.objective, &solver)?;
            let mut nodes = report.stats.nodes;
            let mut migrations = 0;
            let (accepted, objective) = match report.outcome {
                EmbedOutcome::Accepted(e) => {
                    let objective = e.objective;
                    state.commit(g.request, g.policies, e)?;
                    if config.migration {
                        let plan = reembed(&state, config.objective, &inputs, &solver, ReembedMode::Sequential)?;
                        nodes += plan.nodes_explored;
                        migrations = plan.entries.iter().map(|e| e.migrated.len()).sum();
                        state = apply_plan(&state, &plan)?;
                    }
                    (true, Some(objective))
                }
                EmbedOutcome::Rejected(r) => {
                    debug_assert!(matches!(r.status, MilpStatus::Infeasible | MilpStatus::TimeLimit));
                    (false, None)
                }
            };
            records.push(RunRecord {
                run,
                request_index: index,
                accepted,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                nodes_explored: nodes,
                objective,
                migrations,
            });
            if !accepted {
                break;
            }
        }
    }
    let summary = summarize(&records, config.repetitions);
    Ok(ExperimentResult {
        records,
        summary,
        warnings,
    })
}
