//! Reading external solver output back into a [`MilpSolution`].
//!
//! Two layouts are accepted:
//!
//! - plain: one `name value` pair per line; `#` starts a comment and a
//!   `# status <word>` comment sets the status (default `optimal`);
//! - listing: a first line such as `Optimal - objective value 3.5`
//!   followed by `index name value [reduced cost]` rows.
//!
//! Names may be the model's own names or their sanitized export forms.

use std::collections::HashMap;

use crate::error::FormatError;
use crate::mip::MipModel;

use super::export::sanitized_names;
use super::{MilpSolution, MilpStatus, SolveStats};

fn status_word(word: &str) -> Option<MilpStatus> {
    match word.to_ascii_lowercase().as_str() {
        "optimal" | "integer" => Some(MilpStatus::Optimal),
        "feasible" | "stopped" => Some(MilpStatus::Feasible),
        "infeasible" | "unbounded" => Some(MilpStatus::Infeasible),
        "timelimit" | "time_limit" => Some(MilpStatus::TimeLimit),
        _ => None,
    }
}

pub fn import_solution(model: &MipModel, text: &str) -> Result<MilpSolution, FormatError> {
    let mut lookup: HashMap<String, usize> = HashMap::new();
    for (j, v) in model.variables.iter().enumerate() {
        lookup.insert(v.name.clone(), j);
    }
    if let Ok(names) = sanitized_names(model) {
        for (j, n) in names.into_iter().enumerate() {
            lookup.entry(n).or_insert(j);
        }
    }
    let mut values: Vec<Option<f64>> = vec![None; model.variables.len()];
    let mut status = MilpStatus::Optimal;
    let mut listing = false;
    let mut first = true;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if first {
            first = false;
            let word = trimmed.split_whitespace().next().unwrap_or("");
            if let Some(s) = status_word(word) {
                if trimmed.contains("objective value") || trimmed.contains(" - ") {
                    listing = true;
                    status = s;
                    if word.eq_ignore_ascii_case("stopped") && trimmed.contains("time") {
                        status = MilpStatus::TimeLimit;
                    }
                    continue;
                }
            }
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("status") {
                let w = words.next().unwrap_or("");
                status = status_word(w).ok_or_else(|| FormatError::Parse {
                    line,
                    message: format!("unknown status `{w}`"),
                })?;
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let (name, value) = if listing {
            // `**` marks infeasibilities in some listings
            let fields: Vec<&str> = fields.into_iter().filter(|f| *f != "**").collect();
            if fields.len() < 3 {
                return Err(FormatError::Parse {
                    line,
                    message: "expected `index name value`".into(),
                });
            }
            (fields[1], fields[2])
        } else {
            if fields.len() != 2 {
                return Err(FormatError::Parse {
                    line,
                    message: "expected `name value`".into(),
                });
            }
            (fields[0], fields[1])
        };
        let value: f64 = value.parse().map_err(|_| FormatError::Parse {
            line,
            message: format!("bad value `{value}`"),
        })?;
        let Some(&j) = lookup.get(name) else {
            return Err(FormatError::UnknownVariable {
                line,
                name: name.to_string(),
            });
        };
        values[j] = Some(value);
    }

    let mut warnings = Vec::new();
    let has_values = values.iter().any(Option::is_some);
    if matches!(status, MilpStatus::Infeasible) || (!has_values && status != MilpStatus::Optimal) {
        let mut s = MilpSolution::new(
            model,
            status,
            Vec::new(),
            f64::INFINITY,
            f64::INFINITY,
            SolveStats::default(),
            Vec::new(),
        );
        s.warnings = warnings;
        return Ok(s);
    }
    let point: Vec<f64> = values
        .iter()
        .zip(&model.variables)
        .map(|(v, var)| {
            v.unwrap_or_else(|| {
                warnings.push(format!("{} missing, set to 0", var.name));
                0.0
            })
        })
        .collect();
    let objective = model.objective_value(&point);
    let bound = if status == MilpStatus::Optimal { objective } else { f64::NEG_INFINITY };
    let mut s = MilpSolution::new(model, status, point, objective, bound, SolveStats::default(), Vec::new());
    s.objective = model.objective_value(&s.point);
    s.warnings = warnings;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::VarKey;

    fn model() -> MipModel {
        let mut m = MipModel::new();
        let x = m.add_binary(VarKey::External("new(x,A)".into()));
        let y = m.add_continuous(VarKey::External("y".into()));
        m.set_objective(vec![(x, 2.0), (y, 1.0)]);
        m
    }

    #[test]
    fn plain_identity() {
        let s = import_solution(&model(), "new(x,A) 1\ny 2.5\n").unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert_eq!(s.objective, 4.5);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn sanitized_names_map_back() {
        let s = import_solution(&model(), "# status feasible\nnew_x_A_ 1\n").unwrap();
        assert_eq!(s.status, MilpStatus::Feasible);
        assert_eq!(s.value("new(x,A)"), Some(1.0));
        assert_eq!(s.warnings, vec!["y missing, set to 0"]);
    }

    #[test]
    fn unknown_variable_is_an_error() {
        match import_solution(&model(), "y 1\nz 2\n") {
            Err(FormatError::UnknownVariable { line, name }) => {
                assert_eq!((line, name.as_str()), (2, "z"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn listing_format() {
        let text = "Optimal - objective value 2.00000000\n      0 new_x_A_               1                       2\n";
        let s = import_solution(&model(), text).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert_eq!(s.objective, 2.0);
        let inf = import_solution(&model(), "Infeasible - objective value 0\n").unwrap();
        assert_eq!(inf.status, MilpStatus::Infeasible);
        assert!(!inf.has_incumbent());
    }

    #[test]
    fn malformed_line_reports_number() {
        match import_solution(&model(), "y 1\ny\n") {
            Err(FormatError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
