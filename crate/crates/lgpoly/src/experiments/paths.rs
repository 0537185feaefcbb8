//! Path measures, random walks and convergence trends.

use super::{env_stream, strictly_decreasing};
use crate::catalog::Experiment;
use crate::experiments::gamma::CorrectorErgConfig;
use crate::{row, Check, Outcome, Table};
use loggamma::busemann::horizon_point;
use loggamma::free_energy::{char_direction, tilt_of_u};
use loggamma::gamma_system::{build_gamma_system, ModelParams};
use loggamma::partition::tilted_p2l_backward;
use loggamma::polymer_paths::{
    degenerate_ij_replicates, enumerate_paths, fluctuation_experiment, homogeneous_system, measure_convergence_check,
    overlap_experiment, rwre_identity_check, LatticePath, WalkEnvironment,
};
use loggamma::stats::KsLevel;
use loggamma::{Error, Point, RandomStream, Result, Shape};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwreIdentitiesConfig {
    pub lambda: f64,
    pub rho: f64,
    /// Identities are checked on `|x|_1 <= level`.
    pub level: usize,
    pub environments: usize,
    pub tolerance: f64,
}

impl Default for RwreIdentitiesConfig {
    fn default() -> Self {
        RwreIdentitiesConfig { lambda: 1.0, rho: 2.5, level: 6, environments: 20, tolerance: 1e-12 }
    }
}

impl Experiment for RwreIdentitiesConfig {
    const NAME: &'static str = "rwre-identities";
    const CLAIM: &'static str = "RWRE marginals equal Zcheck/Z and conditional path laws equal the quenched polymer measure";
    const CRITERION: Option<u8> = Some(7);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let size = self.level + 1;
        let mut table = Table::new(&["environment", "sites", "paths", "max_marginal_error", "max_conditional_error"]);
        let (mut marg, mut cond) = (0.0_f64, 0.0_f64);
        for k in 0..self.environments {
            let params = ModelParams::new(self.lambda, self.rho, size, size, seed)?;
            let sys = build_gamma_system(params, &env_stream(seed, k))?;
            let r = rwre_identity_check(&sys, self.level)?;
            marg = marg.max(r.max_marginal_error);
            cond = cond.max(r.max_conditional_error);
            table.push(row![k, r.sites, r.paths, r.max_marginal_error, r.max_conditional_error]);
        }
        Ok(Outcome {
            checks: vec![
                Check::below("max marginal error", marg, self.tolerance),
                Check::below("max conditional path-law error", cond, self.tolerance),
            ],
            stats: json!({ "max_marginal_error": marg, "max_conditional_error": cond }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentConfig {
    pub lambda: f64,
    pub rho: f64,
    pub n_list: Vec<usize>,
    pub environments: usize,
    pub walks: usize,
    pub slope_range: (f64, f64),
    pub control_range: (f64, f64),
    pub memory_budget: usize,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            lambda: 1.0,
            rho: 2.0,
            n_list: vec![256, 512, 1024, 2048, 4096, 8192],
            environments: 200,
            walks: 20,
            slope_range: (0.55, 0.80),
            control_range: (0.42, 0.58),
            memory_budget: 1 << 30,
        }
    }
}

impl Experiment for ExponentConfig {
    const NAME: &'static str = "exponent";
    const CLAIM: &'static str = "the averaged RWRE deviation E|X_N - N u|_1 grows like N^{2/3}";
    const CRITERION: Option<u8> = Some(11);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let env = WalkEnvironment::Stationary { lambda: Shape::new(self.lambda)?, rho: Shape::new(self.rho)? };
        let root = RandomStream::new(seed);
        let stat = fluctuation_experiment(env, &self.n_list, self.environments, self.walks, self.memory_budget, &root.split(0))?;
        let ctrl = fluctuation_experiment(
            WalkEnvironment::Homogeneous,
            &self.n_list,
            self.environments,
            self.walks,
            self.memory_budget,
            &root.split(1),
        )?;
        let mut table = Table::new(&["environment_kind", "n", "mean_deviation", "stderr"]);
        for (kind, rep) in [("stationary", &stat), ("homogeneous", &ctrl)] {
            for s in &rep.per_n {
                table.push(row![kind, s.n, s.mean, s.stderr]);
            }
        }
        let slope = |fit: Option<loggamma::stats::SlopeFit>| {
            fit.map(|f| f.slope).ok_or_else(|| Error::Precondition("slope fit needs at least three N".into()))
        };
        let (s, c) = (slope(stat.fit)?, slope(ctrl.fit)?);
        Ok(Outcome {
            checks: vec![
                Check::within("stationary log-log slope", s, self.slope_range.0, self.slope_range.1),
                Check::within("homogeneous control slope", c, self.control_range.0, self.control_range.1),
            ],
            stats: json!({
                "velocity": stat.velocity,
                "stationary": { "fit": stat.fit, "per_n": stat.per_n },
                "homogeneous": { "fit": ctrl.fit, "per_n": ctrl.per_n },
            }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegenerateConfig {
    pub alpha: f64,
    pub beta: f64,
    pub window: usize,
    pub burn_in: usize,
    pub replicates: usize,
}

impl Default for DegenerateConfig {
    fn default() -> Self {
        DegenerateConfig { alpha: 1.0, beta: 0.6, window: 8, burn_in: 2000, replicates: 5000 }
    }
}

impl Experiment for DegenerateConfig {
    const NAME: &'static str = "degenerate";
    const CLAIM: &'static str = "in the zero-temperature limit the interface increments I, J are Exp(alpha), Exp(beta)";
    const CRITERION: Option<u8> = Some(15);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let r = degenerate_ij_replicates(
            self.alpha,
            self.beta,
            self.window,
            self.burn_in,
            self.replicates,
            KsLevel::OnePercent,
            &RandomStream::new(seed),
        )?;
        let mut table = Table::new(&["replicate", "i", "j"]);
        for (k, (i, j)) in r.i_samples.iter().zip(&r.j_samples).enumerate() {
            table.push(row![k, i, j]);
        }
        Ok(Outcome {
            checks: vec![
                Check::below("KS D of I against Exp(alpha)", r.ks_i.statistic, r.ks_i.threshold),
                Check::below("KS D of J against Exp(beta)", r.ks_j.statistic, r.ks_j.threshold),
            ],
            stats: json!({ "e1_fraction": r.e1_fraction, "ks_i": r.ks_i, "ks_j": r.ks_j }),
            table,
        })
    }
}

/// Gate on a discrepancy sequence; the reported value is the last entry.
fn trend_check(name: &str, values: &[f64]) -> Check {
    Check {
        name: format!("{name} at the largest size"),
        value: values.last().copied().unwrap_or(f64::NAN),
        bound: "strictly decreasing in size".into(),
        pass: values.len() >= 2 && strictly_decreasing(values),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct P2lRatioConfig {
    pub lambda: f64,
    pub rho: f64,
    pub n_list: Vec<usize>,
    /// Side of the gamma system whose `ξ̌` serves as the environment.
    pub box_size: usize,
    pub environments: usize,
    /// Sites `x` with coordinates up to this bound are averaged.
    pub sites: usize,
}

impl Default for P2lRatioConfig {
    fn default() -> Self {
        P2lRatioConfig { lambda: 1.0, rho: 2.0, n_list: vec![50, 100, 200], box_size: 800, environments: 200, sites: 3 }
    }
}

impl P2lRatioConfig {
    /// Mean `|log(Z^h_x / (e^{-h_z} Z^h_{x-z})) - log(limit)|` per line level.
    pub(crate) fn discrepancies(&self, seed: u64) -> Result<(Vec<f64>, Table)> {
        let lambda = Shape::new(self.lambda)?;
        let rho = Shape::new(self.rho)?;
        let h = tilt_of_u(char_direction(lambda, rho)?, rho);
        let mut table = Table::new(&["environment", "n", "mean_abs_log_error"]);
        let mut sums = vec![0.0; self.n_list.len()];
        for k in 0..self.environments {
            let params = ModelParams::new(self.lambda, self.rho, self.box_size, self.box_size, seed)?;
            let sys = build_gamma_system(params, &env_stream(seed, k))?;
            for (s, &n) in sums.iter_mut().zip(&self.n_list) {
                let z = tilted_p2l_backward(sys.xicheck_grid(), h.as_pair(), n)?;
                let (mut err, mut count) = (0.0, 0usize);
                for i in 0..=self.sites {
                    for j in 0..=self.sites {
                        let x = Point::new(i, j);
                        if i >= 1 {
                            let prev = Point::new(i - 1, j);
                            err += (z.get(x) - z.get(prev) + h.h1 - sys.eta(x).ln()).abs();
                            count += 1;
                        }
                        if j >= 1 {
                            let prev = Point::new(i, j - 1);
                            err += (z.get(x) - z.get(prev) + h.h2 - sys.zeta(x).ln()).abs();
                            count += 1;
                        }
                    }
                }
                let e = err / count as f64;
                *s += e;
                table.push(row![k, n, e]);
            }
        }
        Ok((sums.iter().map(|s| s / self.environments as f64).collect(), table))
    }
}

impl Experiment for P2lRatioConfig {
    const NAME: &'static str = "p2l-ratio";
    const CLAIM: &'static str = "ratios of h-tilted point-to-line partition functions converge to eta, zeta of the matching gamma system";
    const CRITERION: Option<u8> = None;

    fn run(&self, seed: u64) -> Result<Outcome> {
        let (d, table) = self.discrepancies(seed)?;
        Ok(Outcome {
            checks: vec![trend_check("point-to-line ratio discrepancy", &d)],
            stats: json!({ "n_list": self.n_list, "discrepancy": d }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureLimitConfig {
    pub lambda: f64,
    pub rho: f64,
    pub n_list: Vec<usize>,
    pub box_size: usize,
    pub environments: usize,
    pub prefix_length: usize,
}

impl Default for MeasureLimitConfig {
    fn default() -> Self {
        MeasureLimitConfig {
            lambda: 1.0,
            rho: 2.0,
            n_list: vec![100, 200, 400],
            box_size: 800,
            environments: 200,
            prefix_length: 4,
        }
    }
}

impl MeasureLimitConfig {
    /// Mean `|Q_{0,x̂_N}{prefix} - P{prefix}|` over prefixes and environments.
    pub(crate) fn discrepancies(&self, seed: u64) -> Result<(Vec<f64>, Table)> {
        let u = char_direction(Shape::new(self.lambda)?, Shape::new(self.rho)?)?;
        let prefixes: Vec<LatticePath> = (0..=self.prefix_length)
            .map(|a| enumerate_paths(Point::ORIGIN, Point::new(a, self.prefix_length - a)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let mut table = Table::new(&["environment", "n", "mean_abs_error"]);
        let mut sums = vec![0.0; self.n_list.len()];
        for k in 0..self.environments {
            let params = ModelParams::new(self.lambda, self.rho, self.box_size, self.box_size, seed)?;
            let sys = build_gamma_system(params, &env_stream(seed, k))?;
            for (s, &n) in sums.iter_mut().zip(&self.n_list) {
                let target = horizon_point(u, n);
                let mut err = 0.0;
                for p in &prefixes {
                    let (q, pr) = measure_convergence_check(&sys, p, target)?;
                    err += (q - pr).abs();
                }
                let e = err / prefixes.len() as f64;
                *s += e;
                table.push(row![k, n, e]);
            }
        }
        Ok((sums.iter().map(|s| s / self.environments as f64).collect(), table))
    }
}

impl Experiment for MeasureLimitConfig {
    const NAME: &'static str = "measure-limit";
    const CLAIM: &'static str = "quenched point-to-point path measures converge to the RWRE path law";
    const CRITERION: Option<u8> = None;

    fn run(&self, seed: u64) -> Result<Outcome> {
        let (d, table) = self.discrepancies(seed)?;
        Ok(Outcome {
            checks: vec![trend_check("path-measure discrepancy", &d)],
            stats: json!({ "n_list": self.n_list, "discrepancy": d }),
            table,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropertySuitesConfig {
    pub p2l_ratio: P2lRatioConfig,
    pub measure_limit: MeasureLimitConfig,
    pub corrector_erg: CorrectorErgConfig,
}

impl Experiment for PropertySuitesConfig {
    const NAME: &'static str = "property-suites";
    const CLAIM: &'static str = "point-to-line ratios, path measures and corrector averages converge along doubling sizes";
    const CRITERION: Option<u8> = Some(16);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let mut table = Table::new(&["suite", "size", "value"]);
        let (p2l, _) = self.p2l_ratio.discrepancies(seed)?;
        for (n, d) in self.p2l_ratio.n_list.iter().zip(&p2l) {
            table.push(row!["p2l-ratio", n, d]);
        }
        let (meas, _) = self.measure_limit.discrepancies(seed)?;
        for (n, d) in self.measure_limit.n_list.iter().zip(&meas) {
            table.push(row!["measure-limit", n, d]);
        }
        let (corr, corr_checks) = self.corrector_erg.rows(seed)?;
        for (n, d) in &corr {
            table.push(row!["corrector-erg", n, d]);
        }
        let mut checks =
            vec![trend_check("point-to-line ratio discrepancy", &p2l), trend_check("path-measure discrepancy", &meas)];
        checks.extend(corr_checks);
        Ok(Outcome {
            checks,
            stats: json!({
                "p2l_ratio": { "n_list": self.p2l_ratio.n_list, "discrepancy": p2l },
                "measure_limit": { "n_list": self.measure_limit.n_list, "discrepancy": meas },
                "corrector_erg": { "levels": self.corrector_erg.levels, "mean_max_ratio": corr.iter().map(|r| r.1).collect::<Vec<_>>() },
            }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    pub lambda: f64,
    pub rho: f64,
    pub steps: usize,
    pub pairs: usize,
    pub environments: usize,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig { lambda: 1.0, rho: 2.0, steps: 200, pairs: 200, environments: 20 }
    }
}

impl Experiment for OverlapConfig {
    const NAME: &'static str = "overlap";
    const CLAIM: &'static str = "two RWRE walks in a common environment overlap more than two walks in a homogeneous one";
    const CRITERION: Option<u8> = None;

    fn run(&self, seed: u64) -> Result<Outcome> {
        let size = self.steps + 1;
        let mut table = Table::new(&["environment_kind", "environment", "mean_overlap", "stderr"]);
        let mut env_means = Vec::with_capacity(self.environments);
        for k in 0..self.environments {
            let params = ModelParams::new(self.lambda, self.rho, size, size, seed)?;
            let stream = env_stream(seed, k);
            let sys = build_gamma_system(params, &stream)?;
            let r = overlap_experiment(&sys, self.steps, self.pairs, &stream.split(1))?;
            env_means.push(r.mean);
            table.push(row!["stationary", k, r.mean, r.stderr]);
        }
        let flat = homogeneous_system(size, size)?;
        let ctrl = overlap_experiment(&flat, self.steps, self.pairs * self.environments, &RandomStream::new(seed).split(2))?;
        table.push(row!["homogeneous", 0, ctrl.mean, ctrl.stderr]);
        let mo = loggamma::stats::moments(&env_means)?;
        Ok(Outcome {
            checks: Vec::new(),
            stats: json!({ "stationary": mo, "homogeneous": { "mean": ctrl.mean, "stderr": ctrl.stderr } }),
            table,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_prefixes_of_length_four() {
        let n: usize = (0..=4).map(|a| enumerate_paths(Point::ORIGIN, Point::new(a, 4 - a)).unwrap().len()).sum();
        assert_eq!(n, 16);
    }

    #[test]
    fn trend_gate_needs_strict_decrease() {
        assert!(trend_check("d", &[3.0, 2.0, 1.0]).pass);
        assert!(!trend_check("d", &[3.0, 3.0, 1.0]).pass);
        assert!(!trend_check("d", &[1.0]).pass);
    }
}
