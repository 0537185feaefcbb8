//! The table of experiments behind the subcommands.

use crate::experiments::{chain, free, gamma, oracle, paths};
use crate::{Outcome, RunError};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// An experiment with a defaulted, serializable config.
pub trait Experiment: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;
    /// The statement the experiment checks, one line.
    const CLAIM: &'static str;
    /// Acceptance criterion gated by this experiment, if any.
    const CRITERION: Option<u8>;

    fn run(&self, seed: u64) -> loggamma::Result<Outcome>;
}

/// Type-erased catalog row.
#[derive(Clone, Copy)]
pub struct Entry {
    pub name: &'static str,
    pub claim: &'static str,
    pub criterion: Option<u8>,
    defaults: fn() -> Value,
    validate: fn(Value) -> Result<Value, RunError>,
    run: fn(Value, u64) -> Result<Outcome, RunError>,
}

impl Entry {
    /// The default config as a JSON object.
    pub fn defaults(&self) -> Value {
        (self.defaults)()
    }

    /// Parses a config against the experiment's schema and returns it with
    /// every field filled in.
    pub fn validate(&self, config: Value) -> Result<Value, RunError> {
        (self.validate)(config)
    }

    pub fn run(&self, config: Value, seed: u64) -> Result<Outcome, RunError> {
        (self.run)(config, seed)
    }
}

fn parse<E: Experiment>(config: Value) -> Result<E, RunError> {
    serde_path_to_error::deserialize(config).map_err(|e| RunError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn entry<E: Experiment>() -> Entry {
    Entry {
        name: E::NAME,
        claim: E::CLAIM,
        criterion: E::CRITERION,
        defaults: || serde_json::to_value(E::default()).expect("configs serialize"),
        validate: |v| Ok(serde_json::to_value(parse::<E>(v)?)?),
        run: |v, seed| Ok(parse::<E>(v)?.run(seed)?),
    }
}

/// Every experiment, in acceptance-criterion order followed by the
/// exploratory ones.
pub fn catalog() -> Vec<Entry> {
    vec![
        entry::<oracle::OracleConfig>(),
        entry::<gamma::BurkeConfig>(),
        entry::<oracle::NeRatioConfig>(),
        entry::<gamma::RatioLimitConfig>(),
        entry::<oracle::CompareLemmaConfig>(),
        entry::<oracle::RatioBoundConfig>(),
        entry::<paths::RwreIdentitiesConfig>(),
        entry::<free::DualityConfig>(),
        entry::<free::RoundTripConfig>(),
        entry::<gamma::ElogzConfig>(),
        entry::<paths::ExponentConfig>(),
        entry::<chain::EnvChainConfig>(),
        entry::<chain::XicheckLawConfig>(),
        entry::<chain::SizeBiasConfig>(),
        entry::<paths::DegenerateConfig>(),
        entry::<paths::P2lRatioConfig>(),
        entry::<paths::MeasureLimitConfig>(),
        entry::<paths::PropertySuitesConfig>(),
        entry::<gamma::CorrectorErgConfig>(),
        entry::<gamma::BusemannConfig>(),
        entry::<gamma::LdpTailConfig>(),
        entry::<paths::OverlapConfig>(),
    ]
}

pub fn find(name: &str) -> Result<Entry, RunError> {
    catalog().into_iter().find(|e| e.name == name).ok_or_else(|| RunError::UnknownExperiment(name.to_string()))
}

/// One line per experiment: name, criterion, claim.
pub fn listing() -> Vec<String> {
    catalog()
        .iter()
        .map(|e| {
            let crit = e.criterion.map_or("-".to_string(), |c| c.to_string());
            format!("{:<16} {:>3}  {}", e.name, crit, e.claim)
        })
        .collect()
}
