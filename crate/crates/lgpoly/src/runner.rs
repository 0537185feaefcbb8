//! Resolving configs and writing run artifacts.
//!
//! A config is resolved in three layers: the experiment defaults, then the
//! keys of an optional JSON file, then command-line overrides. The file may
//! also carry a `seed`. The resolved config is validated against the
//! experiment schema and recorded in full in `summary.json`.

use crate::catalog::Entry;
use crate::{Outcome, RunError, Table};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs;
use std::path::Path;
use std::time::Instant;

pub const DEFAULT_SEED: u64 = 1;

/// How a run ended. Maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Aborted,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Aborted => 3,
        }
    }
}

/// Exit code for configuration and I/O errors.
pub const ERROR_EXIT_CODE: i32 = 2;

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: Value,
    pub seed: u64,
}

/// Reads a config file as a JSON object.
pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, RunError> {
    let text = fs::read_to_string(path)?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(RunError::Config { path: path.display().to_string(), message: "expected a JSON object".into() }),
        Err(e) => Err(RunError::Config { path: path.display().to_string(), message: e.to_string() }),
    }
}

/// Layers `file` and `overrides` over the defaults, validates the result and
/// picks the seed (`seed` argument, else the file's `seed`, else the default).
pub fn resolve(
    entry: &Entry,
    file: Option<Map<String, Value>>,
    overrides: Map<String, Value>,
    seed: Option<u64>,
) -> Result<Resolved, RunError> {
    let Value::Object(mut config) = entry.defaults() else {
        unreachable!("configs serialize as objects")
    };
    let mut file_seed = None;
    for (k, v) in file.into_iter().flatten() {
        if k == "seed" {
            file_seed = Some(v.as_u64().ok_or_else(|| RunError::Config {
                path: "seed".into(),
                message: format!("expected a nonnegative integer, found {v}"),
            })?);
        } else {
            config.insert(k, v);
        }
    }
    config.extend(overrides);
    let config = entry.validate(Value::Object(config))?;
    Ok(Resolved { config, seed: seed.or(file_seed).unwrap_or(DEFAULT_SEED) })
}

/// Writes the table as CSV: comma-separated, header row, LF line endings.
pub fn write_csv(table: &Table, path: &Path) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Report of a finished or aborted run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub status: Status,
    pub outcome: Option<Outcome>,
    pub summary: Value,
}

/// Runs the experiment and writes `summary.json` and `data.csv` under `out`.
/// A resource overrun is not an error: it yields [`Status::Aborted`] with a
/// summary flagged `partial`.
pub fn execute(entry: &Entry, resolved: &Resolved, out: &Path) -> Result<RunReport, RunError> {
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let result = entry.run(resolved.config.clone(), resolved.seed);
    let wall = start.elapsed().as_secs_f64();
    let mut summary = json!({
        "experiment": entry.name,
        "claim": entry.claim,
        "criterion": entry.criterion,
        "seed": resolved.seed,
        "config": resolved.config,
    });
    let (status, outcome) = match result {
        Ok(outcome) => {
            let status = if outcome.pass() { Status::Pass } else { Status::Fail };
            write_csv(&outcome.table, &out.join("data.csv"))?;
            summary["status"] = json!(status);
            summary["partial"] = json!(false);
            summary["checks"] = serde_json::to_value(&outcome.checks)?;
            summary["stats"] = outcome.stats.clone();
            (status, Some(outcome))
        }
        Err(RunError::Library(loggamma::Error::Resource(message))) => {
            summary["status"] = json!(Status::Aborted);
            summary["partial"] = json!(true);
            summary["error"] = json!(message);
            (Status::Aborted, None)
        }
        Err(e) => return Err(e),
    };
    summary["wall_time_s"] = json!(wall);
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(out.join("summary.json"), text)?;
    Ok(RunReport { status, outcome, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::find;

    #[test]
    fn layers_apply_in_order() {
        let e = find("duality").unwrap();
        let file = json!({ "grid": 5, "seed": 9 }).as_object().cloned();
        let over = json!({ "grid": 7 }).as_object().cloned().unwrap();
        let r = resolve(&e, file, over, None).unwrap();
        assert_eq!(r.config["grid"], json!(7));
        assert_eq!(r.seed, 9);
        let r = resolve(&e, None, Map::new(), Some(3)).unwrap();
        assert_eq!(r.seed, 3);
        assert_eq!(r.config["grid"], json!(9));
    }

    #[test]
    fn unknown_key_is_a_config_error() {
        let e = find("duality").unwrap();
        let over = json!({ "gird": 7 }).as_object().cloned().unwrap();
        assert!(matches!(resolve(&e, None, over, None), Err(RunError::Config { .. })));
    }

    #[test]
    fn wrong_type_reports_the_path() {
        let e = find("oracle").unwrap();
        let over = json!({ "size": "six" }).as_object().cloned().unwrap();
        match resolve(&e, None, over, None) {
            Err(RunError::Config { path, .. }) => assert_eq!(path, "size"),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Pass.exit_code(), 0);
        assert_eq!(Status::Fail.exit_code(), 1);
        assert_eq!(Status::Aborted.exit_code(), 3);
    }
}
