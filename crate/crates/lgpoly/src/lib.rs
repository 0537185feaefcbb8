//! Experiment runner for the `loggamma` library.
//!
//! Every experiment is a serializable config with defaults and a `run` method
//! returning an [`Outcome`] of gated checks plus a data table. The
//! [`catalog`] maps subcommand names to experiments; [`runner`] resolves
//! configs and writes `summary.json` and `data.csv`.

pub mod catalog;
pub mod experiments;
pub mod runner;

use serde::Serialize;
use std::fmt;

/// One gated comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance bound, e.g. `< 1e-10`.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check { name: name.into(), value, bound: format!("< {limit:e}"), pass: value < limit }
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check { name: name.into(), value, bound: format!("<= {limit}"), pass: value <= limit }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Check {
        Check { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), pass: (lo..=hi).contains(&value) }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Check {
        Check { name: name.into(), value: if pass { 1.0 } else { 0.0 }, bound: "true".into(), pass }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "pass" } else { "FAIL" };
        write!(f, "{verdict} {} = {:.4e} ({})", self.name, self.value, self.bound)
    }
}

/// Rows of a CSV file with a header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Formats a cell value; `f64` uses the shortest round-trip representation.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(format!("{}", $x)),*] };
}

/// Result of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub stats: serde_json::Value,
    pub table: Table,
}

impl Outcome {
    /// True when every gated check passes (vacuously for ungated runs).
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Errors raised while configuring or running an experiment.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Library(#[from] loggamma::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
