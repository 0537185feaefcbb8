//! The environment seen from the walk and its invariant measure.

use crate::catalog::Experiment;
use crate::{row, Check, Outcome, Table};
use loggamma::env_chain::{size_bias_check, stationarity_check, xicheck_path_law_check, EnvWindowState, SizeBiasFunctions};
use loggamma::stats::KsLevel;
use loggamma::{Point, RandomStream, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvChainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub window: usize,
    pub steps: usize,
    pub lag: usize,
    pub burn_in: usize,
    /// Allowed distance of the e1 frequency from `α/(α+β)` in binomial s.e.
    pub stderr_multiple: f64,
}

impl Default for EnvChainConfig {
    fn default() -> Self {
        EnvChainConfig { alpha: 0.75, beta: 0.75, window: 4, steps: 100_000, lag: 50, burn_in: 1000, stderr_multiple: 3.0 }
    }
}

impl Experiment for EnvChainConfig {
    const NAME: &'static str = "env-chain";
    const CLAIM: &'static str = "mu^{alpha,beta} is invariant for the environment seen from the RWRE";
    const CRITERION: Option<u8> = Some(12);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let names = EnvWindowState::coordinate_names(self.window);
        let level = KsLevel::OnePercent.bonferroni(names.len());
        let r = stationarity_check(
            self.alpha,
            self.beta,
            self.window,
            self.steps,
            self.lag,
            self.burn_in,
            level,
            &mut RandomStream::new(seed),
        )?;
        let mut table = Table::new(&["coordinate", "n", "ks_statistic", "threshold", "pass"]);
        for c in &r.coordinates {
            table.push(row![c.name, c.report.n, c.report.statistic, c.report.threshold, c.report.pass]);
        }
        let worst = r.coordinates.iter().map(|c| c.report.statistic / c.report.threshold).fold(0.0, f64::max);
        let freq_dev = (r.e1_fraction - r.e1_expected).abs() / r.e1_stderr;
        Ok(Outcome {
            checks: vec![
                Check::at_most("|e1 frequency - alpha/(alpha+beta)| / s.e.", freq_dev, self.stderr_multiple),
                Check::at_most("largest KS D / Bonferroni threshold", worst, 1.0),
            ],
            stats: json!({
                "e1_fraction": r.e1_fraction,
                "e1_expected": r.e1_expected,
                "e1_stderr": r.e1_stderr,
                "ks_level": level.alpha(),
                "coordinates": r.coordinates.iter().map(|c| json!({ "name": c.name, "ks": c.report })).collect::<Vec<_>>(),
            }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XicheckLawConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Sites with `|x|_1` up to this level are tested.
    pub level: usize,
    pub replicates: usize,
}

impl Default for XicheckLawConfig {
    fn default() -> Self {
        XicheckLawConfig { alpha: 0.75, beta: 0.75, level: 2, replicates: 100_000 }
    }
}

impl Experiment for XicheckLawConfig {
    const NAME: &'static str = "xicheck-law";
    const CLAIM: &'static str = "under mu^{alpha,beta}, xicheck_x is a binomial mixture of Gamma(alpha+beta) and Gamma(alpha+beta+1)";
    const CRITERION: Option<u8> = Some(13);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let sites: Vec<Point> =
            (0..=self.level).flat_map(|d| (0..=d).map(move |i| Point::new(i, d - i))).collect();
        let level = KsLevel::OnePercent.bonferroni(sites.len());
        let root = RandomStream::new(seed);
        let mut table = Table::new(&["i", "j", "visit_probability", "ks_statistic", "threshold", "pass"]);
        let mut worst = 0.0_f64;
        let mut reports = Vec::new();
        for (k, &x) in sites.iter().enumerate() {
            let r = xicheck_path_law_check(self.alpha, self.beta, x, self.replicates, level, &root.split(k as u64))?;
            worst = worst.max(r.ks.statistic / r.ks.threshold);
            table.push(row![x.i, x.j, r.visit_probability, r.ks.statistic, r.ks.threshold, r.ks.pass]);
            reports.push(r);
        }
        Ok(Outcome {
            checks: vec![Check::at_most("largest KS D / Bonferroni threshold", worst, 1.0)],
            stats: json!({ "ks_level": level.alpha(), "sites": reports }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizeBiasConfig {
    pub alpha: f64,
    pub beta: f64,
    pub samples: usize,
    pub z_limit: f64,
}

impl Default for SizeBiasConfig {
    fn default() -> Self {
        SizeBiasConfig { alpha: 0.75, beta: 0.75, samples: 1_000_000, z_limit: 4.0 }
    }
}

impl Experiment for SizeBiasConfig {
    const NAME: &'static str = "size-bias";
    const CLAIM: &'static str = "E[B f(GB) g(G(1-B)) h(G_a+G_b)] = a/(a+b) E f(G_{a+1}) E g(G_b) E h(G_{a+b})";
    const CRITERION: Option<u8> = Some(14);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let root = RandomStream::new(seed);
        let mut table = Table::new(&["functions", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "z_score"]);
        let mut checks = Vec::new();
        let mut reports = Vec::new();
        for (k, f) in SizeBiasFunctions::ALL.into_iter().enumerate() {
            let r = size_bias_check(self.alpha, self.beta, f, self.samples, &root.split(k as u64))?;
            let name = format!("{f:?}");
            checks.push(Check::at_most(format!("|z| for {name}"), r.z_score.abs(), self.z_limit));
            table.push(row![name, r.lhs, r.lhs_stderr, r.rhs, r.rhs_stderr, r.z_score]);
            reports.push(r);
        }
        Ok(Outcome { checks, stats: json!({ "reports": reports }), table })
    }
}
