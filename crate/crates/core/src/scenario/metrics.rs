use serde::{Deserialize, Serialize};

use crate::error::DocError;

use super::run::RunRecord;

pub const COLUMNS: [&str; 7] = [
    "run",
    "request_index",
    "accepted",
    "wall_ms",
    "nodes_explored",
    "objective",
    "migrations",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsFormat {
    CsvTable,
    JsonLines,
}

/// Fixed column order and decimal places: `wall_ms` with 3, `objective`
/// with 6 (empty for rejections).
#[derive(Serialize, Deserialize)]
struct Row {
    run: usize,
    request_index: usize,
    accepted: bool,
    wall_ms: String,
    nodes_explored: u64,
    objective: String,
    migrations: usize,
}

impl From<&RunRecord> for Row {
    fn from(r: &RunRecord) -> Self {
        Row {
            run: r.run,
            request_index: r.request_index,
            accepted: r.accepted,
            wall_ms: format!("{:.3}", r.wall_ms),
            nodes_explored: r.nodes_explored,
            objective: r.objective.map(|o| format!("{o:.6}")).unwrap_or_default(),
            migrations: r.migrations,
        }
    }
}

pub fn emit_metrics(records: &[RunRecord], format: MetricsFormat) -> String {
    match format {
        MetricsFormat::CsvTable => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(COLUMNS).expect("in-memory write");
            for r in records {
                w.serialize(Row::from(r)).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        MetricsFormat::JsonLines => {
            let mut out = String::new();
            for r in records {
                let row = Row::from(r);
                // numbers stay numbers; the fixed formatting is kept by
                // writing them as raw JSON
                out.push_str(&format!(
                    "{{\"run\":{},\"request_index\":{},\"accepted\":{},\"wall_ms\":{},\"nodes_explored\":{},\"objective\":{},\"migrations\":{}}}\n",
                    row.run,
                    row.request_index,
                    row.accepted,
                    row.wall_ms,
                    row.nodes_explored,
                    if row.objective.is_empty() { "null".to_string() } else { row.objective },
                    row.migrations
                ));
            }
            out
        }
    }
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<RunRecord>, DocError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DocError::Invalid(e.to_string()))?
        .clone();
    if headers.iter().ne(COLUMNS) {
        return Err(DocError::Invalid(format!("unexpected header `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (k, row) in reader.deserialize::<Row>().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| DocError::Parse {
            line,
            message: e.to_string(),
        })?;
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| DocError::Parse {
                line,
                message: format!("bad number `{s}`"),
            })
        };
        out.push(RunRecord {
            run: row.run,
            request_index: row.request_index,
            accepted: row.accepted,
            wall_ms: num(&row.wall_ms)?,
            nodes_explored: row.nodes_explored,
            objective: if row.objective.is_empty() { None } else { Some(num(&row.objective)?) },
            migrations: row.migrations,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(accepted: bool) -> RunRecord {
        RunRecord {
            run: 0,
            request_index: 3,
            accepted,
            wall_ms: 1.23456,
            nodes_explored: 7,
            objective: accepted.then_some(0.1234567),
            migrations: 2,
        }
    }

    #[test]
    fn empty_records_give_header_only() {
        assert_eq!(
            emit_metrics(&[], MetricsFormat::CsvTable),
            "run,request_index,accepted,wall_ms,nodes_explored,objective,migrations\n"
        );
        assert_eq!(emit_metrics(&[], MetricsFormat::JsonLines), "");
    }

    #[test]
    fn one_record_one_row() {
        let text = emit_metrics(&[record(true)], MetricsFormat::CsvTable);
        assert_eq!(text.lines().nth(1), Some("0,3,true,1.235,7,0.123457,2"));
        let json = emit_metrics(&[record(false)], MetricsFormat::JsonLines);
        let v: serde_json::Value = serde_json::from_str(json.trim()).unwrap();
        assert_eq!(v["objective"], serde_json::Value::Null);
        assert_eq!(v["wall_ms"], 1.235);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![record(true), record(false)];
        let back = parse_metrics_csv(&emit_metrics(&rows, MetricsFormat::CsvTable)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].objective, Some(0.123457));
        assert_eq!(back[1].objective, None);
        assert_eq!(back[0].wall_ms, 1.235);
        assert_eq!(back[1].migrations, 2);
    }
}
