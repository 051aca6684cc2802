//! Experiment harness: topologies, random requests, iterative embedding runs
//! and metrics.

mod generate;
mod metrics;
mod run;
pub mod topology;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::DocError;
use crate::network::ObjectiveConfig;

pub use generate::{generate_request, GeneratedRequest};
pub use metrics::{emit_metrics, parse_metrics_csv, MetricsFormat, COLUMNS};
pub use run::{experiment_substrate, run_experiment, ExperimentResult, RunRecord, Summary};
pub use topology::{load_topology, parse_topology, random_topology, Topology, TopologyDefaults};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Every node fixed.
    Vpn,
    /// Fixed access points plus flexible cloud resources.
    Oc,
    /// Every node flexible.
    Dc,
}

fn default_cr() -> (usize, usize) {
    (1, 3)
}

fn default_ap() -> (usize, usize) {
    (1, 7)
}

fn default_slots() -> f64 {
    15.0
}

fn default_bandwidth() -> f64 {
    15.0
}

fn default_repetitions() -> usize {
    10
}

fn default_requests() -> usize {
    100
}

fn default_objective() -> ObjectiveConfig {
    ObjectiveConfig::LoadBalance { c: 2.0 }
}

fn default_penalty() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Share of flexible nodes. Absent for OC: drawn from the CR/AP ranges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freedom: Option<f64>,
    /// Inclusive range of flexible cloud nodes per request.
    #[serde(default = "default_cr")]
    pub cr_range: (usize, usize),
    /// Inclusive range of fixed access points per request.
    #[serde(default = "default_ap")]
    pub ap_range: (usize, usize),
    pub substrate_size: usize,
    /// Edge-list file; a seeded random topology is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<PathBuf>,
    #[serde(default = "default_slots")]
    pub element_capacity_slots: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Requests per run; a run also stops at its first rejection.
    #[serde(default = "default_requests")]
    pub max_requests: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub migration: bool,
    /// Penalty of migrating one node when `migration` is on.
    #[serde(default = "default_penalty")]
    pub migration_penalty: f64,
    #[serde(default = "default_objective")]
    pub objective: ObjectiveConfig,
    /// Per-solve time limit in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, substrate_size: usize) -> Self {
        ScenarioConfig {
            scenario,
            freedom: match scenario {
                Scenario::Vpn => Some(0.0),
                Scenario::Dc => Some(1.0),
                Scenario::Oc => None,
            },
            cr_range: default_cr(),
            ap_range: default_ap(),
            substrate_size,
            topology: None,
            element_capacity_slots: default_slots(),
            bandwidth: default_bandwidth(),
            repetitions: default_repetitions(),
            max_requests: default_requests(),
            seed: 0,
            migration: false,
            migration_penalty: default_penalty(),
            objective: default_objective(),
            time_limit: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, DocError> {
        let c: ScenarioConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// The effective freedom, if fixed by the scenario or the config.
    pub fn fixed_freedom(&self) -> Option<f64> {
        match self.scenario {
            Scenario::Vpn => Some(0.0),
            Scenario::Dc => Some(1.0),
            Scenario::Oc => self.freedom,
        }
    }

    pub fn validate(&self) -> Result<(), DocError> {
        let bad = |m: String| Err(DocError::Invalid(m));
        match (self.scenario, self.freedom) {
            (Scenario::Vpn, Some(f)) if f != 0.0 => return bad(format!("VPN requires freedom 0, got {f}")),
            (Scenario::Dc, Some(f)) if f != 1.0 => return bad(format!("DC requires freedom 1, got {f}")),
            (_, Some(f)) if !(0.0..=1.0).contains(&f) => return bad(format!("freedom {f} is outside [0, 1]")),
            _ => {}
        }
        for (name, (lo, hi)) in [("cr_range", self.cr_range), ("ap_range", self.ap_range)] {
            if lo > hi {
                return bad(format!("{name} is empty"));
            }
        }
        if self.cr_range.1 + self.ap_range.1 == 0 {
            return bad("requests would have no nodes".into());
        }
        if self.substrate_size == 0 {
            return bad("substrate_size must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be positive".into());
        }
        if self.element_capacity_slots < 0.0 || self.bandwidth < 0.0 {
            return bad("capacities must be nonnegative".into());
        }
        if let ObjectiveConfig::LoadBalance { c } = self.objective {
            if c < 2.0 {
                return bad(format!("load factor c = {c} is below the sum of load weights 2"));
            }
        }
        Ok(())
    }
}
