//! Running an external MILP solver through files.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::SolveError;
use crate::mip::MipModel;

use super::export::{export_model, ExportFormat};
use super::import::import_solution;
use super::{MilpSolution, SolverConfig};

/// External solver invocation.
///
/// `command` is split on whitespace; `{model}` and `{solution}` are replaced
/// by the exported model path and the path the solver must write, and
/// `{time_limit}` by the configured limit in seconds (or `inf`).
#[derive(Clone, Debug)]
pub struct ExternalSolver {
    pub command: String,
    pub format: ExportFormat,
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

struct Scratch(PathBuf);

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalSolver {
            command: command.into(),
            format: ExportFormat::LpText,
        }
    }

    pub fn solve(&self, model: &MipModel, config: &SolverConfig) -> Result<MilpSolution, SolveError> {
        let dir = std::env::temp_dir().join(format!(
            "cloudnet-{}-{}",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::create_dir_all(&dir)?;
        let scratch = Scratch(dir);
        let model_path = scratch.0.join(format!("model.{}", self.format.extension()));
        let solution_path = scratch.0.join("solution.txt");
        std::fs::write(&model_path, export_model(model, self.format)?)?;
        let limit = config
            .time_limit
            .map_or_else(|| "inf".to_string(), |t| t.as_secs_f64().to_string());
        let args: Vec<String> = self
            .command
            .split_whitespace()
            .map(|a| {
                a.replace("{model}", &model_path.to_string_lossy())
                    .replace("{solution}", &solution_path.to_string_lossy())
                    .replace("{time_limit}", &limit)
            })
            .collect();
        let Some((program, rest)) = args.split_first() else {
            return Err(SolveError::External("empty command".into()));
        };
        let output = Command::new(program)
            .args(rest)
            .output()
            .map_err(|e| SolveError::External(format!("cannot run `{program}`: {e}")))?;
        if !output.status.success() {
            return Err(SolveError::External(format!(
                "`{program}` exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let text = std::fs::read_to_string(&solution_path)
            .map_err(|e| SolveError::External(format!("no solution file: {e}")))?;
        let solution = import_solution(model, &text)?;
        if solution.has_incumbent() {
            let (viol, row) = model.max_violation(&solution.point);
            if viol > config.tolerance.max(1e-6) * 10.0 {
                return Err(SolveError::External(format!(
                    "solution violates {} by {viol:e}",
                    row.unwrap_or_default()
                )));
            }
        }
        Ok(solution)
    }
}
