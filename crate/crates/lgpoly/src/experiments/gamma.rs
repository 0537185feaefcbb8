//! Distributional checks on gamma systems and i.i.d. environments.

use super::{env_stream, iid_gamma_weights, strictly_decreasing};
use crate::catalog::Experiment;
use crate::{row, Check, Outcome, Table};
use loggamma::busemann::{corrector_rectangle_average, BusemannField, Corrector};
use loggamma::free_energy::{char_direction, elogz, theta_of_u, Velocity};
use loggamma::gamma_system::{build_gamma_system, ModelParams};
use loggamma::partition::{exit_tail_log_prob, log_partition, ratio_weights, Direction, WeightConvention};
use loggamma::specfun::gamma_cdf;
use loggamma::stats::{autocorr, batch_means, ks_test_unsorted, moments, KsLevel, KsReport};
use loggamma::{Point, RandomStream, Result, Shape, Step};
use serde::{Deserialize, Serialize};
use serde_json::json;

fn gamma_ks(samples: &[f64], shape: Shape, level: KsLevel) -> Result<KsReport> {
    ks_test_unsorted(samples, |x| gamma_cdf(shape, x).unwrap_or(0.0), level)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurkeConfig {
    pub lambda: f64,
    pub rho: f64,
    pub size: usize,
}

impl Default for BurkeConfig {
    fn default() -> Self {
        BurkeConfig { lambda: 1.0, rho: 2.5, size: 2000 }
    }
}

impl Experiment for BurkeConfig {
    const NAME: &'static str = "verify-burke";
    const CLAIM: &'static str = "edge weights on a down-right path and the bulk weights off it are independent gammas";
    const CRITERION: Option<u8> = Some(2);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let params = ModelParams::new(self.lambda, self.rho, self.size, self.size, seed)?;
        let sys = build_gamma_system(params, &RandomStream::new(seed))?;
        let (m, n) = sys.dims();
        let north = sys.north_row();
        let east = sys.east_column();
        // Antidiagonal staircase from (0, n-1) down to (n-1, 0).
        let xicheck: Vec<f64> = (0..m.min(n)).map(|k| sys.xicheck(Point::new(k, n - 1 - k))).collect();
        let series = [
            ("north_eta", north, params.lambda),
            ("east_zeta", east, params.rho_minus_lambda()),
            ("staircase_xicheck", xicheck, params.rho),
        ];
        let mut checks = Vec::new();
        let mut stats = serde_json::Map::new();
        let mut table = Table::new(&["series", "index", "value"]);
        for (name, samples, shape) in &series {
            let ks = gamma_ks(samples, *shape, KsLevel::OnePercent)?;
            let ac = autocorr(samples, 1)?;
            let limit = 3.0 / (samples.len() as f64).sqrt();
            checks.push(Check::below(format!("{name} KS D"), ks.statistic, ks.threshold));
            checks.push(Check::below(format!("{name} |lag-1 autocorr|"), ac.abs(), limit));
            stats.insert(
                (*name).to_string(),
                json!({ "shape": shape.get(), "ks": ks, "lag1_autocorr": ac, "autocorr_limit": limit }),
            );
            for (k, v) in samples.iter().enumerate() {
                table.push(row![name, k, v]);
            }
        }
        Ok(Outcome { checks, stats: serde_json::Value::Object(stats), table })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioLimitConfig {
    pub lambda: f64,
    pub rho: f64,
    /// Horizon `m + n` of the terminal in the characteristic direction.
    pub level: usize,
    pub environments: usize,
    pub ks_limit: f64,
}

impl Default for RatioLimitConfig {
    fn default() -> Self {
        RatioLimitConfig { lambda: 1.0, rho: 2.0, level: 800, environments: 500, ks_limit: 0.10 }
    }
}

impl Experiment for RatioLimitConfig {
    const NAME: &'static str = "ratio-limit";
    const CLAIM: &'static str = "in i.i.d. Gamma(rho) weights, eta_{(1,1),v} is Gamma(lambda) as v runs off in the characteristic direction";
    const CRITERION: Option<u8> = Some(4);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let lambda = Shape::new(self.lambda)?;
        let rho = Shape::new(self.rho)?;
        let u = char_direction(lambda, rho)?;
        let v = loggamma::busemann::horizon_point(u, self.level);
        let x = Point::new(1, 1);
        if !(x.le(v) && v.i >= 1 && v.j >= 2) {
            return Err(loggamma::Error::Precondition(format!("terminal {v} too close to {x}")));
        }
        let mut table = Table::new(&["environment", "eta"]);
        let mut samples = Vec::with_capacity(self.environments);
        for k in 0..self.environments {
            let w = iid_gamma_weights(rho, v.i, v.j, &env_stream(seed, k));
            let g = log_partition(&w, v, WeightConvention::StartIncluded, Direction::Backward)?;
            let eta = ratio_weights(&g, x, Step::E1)?;
            samples.push(eta);
            table.push(row![k, eta]);
        }
        let ks = gamma_ks(&samples, lambda, KsLevel::OnePercent)?;
        let mo = moments(&samples)?;
        Ok(Outcome {
            checks: vec![Check::below("KS D against Gamma(lambda)", ks.statistic, self.ks_limit)],
            stats: json!({ "terminal": v, "velocity": u.u(), "ks": ks, "moments": mo }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElogzConfig {
    pub lambda: f64,
    pub rho: f64,
    pub m: usize,
    pub n: usize,
    pub replicates: usize,
    /// Allowed distance from the formula in standard errors.
    pub stderr_multiple: f64,
}

impl Default for ElogzConfig {
    fn default() -> Self {
        ElogzConfig { lambda: 1.0, rho: 2.5, m: 500, n: 500, replicates: 200, stderr_multiple: 3.0 }
    }
}

impl Experiment for ElogzConfig {
    const NAME: &'static str = "elogz";
    const CLAIM: &'static str = "stationary-boundary E log Z_{0,(m,n)} = -m Psi0(lambda) - n Psi0(rho - lambda)";
    const CRITERION: Option<u8> = Some(10);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let target = Point::new(self.m, self.n);
        let mut table = Table::new(&["replicate", "log_z"]);
        let mut values = Vec::with_capacity(self.replicates);
        for k in 0..self.replicates {
            let params = ModelParams::new(self.lambda, self.rho, self.m, self.n, seed)?;
            let sys = build_gamma_system(params, &env_stream(seed, k))?;
            let g = log_partition(&sys.vertex_weights(), Point::ORIGIN, WeightConvention::EndIncluded, Direction::Forward)?;
            let lz = g.log_z(target);
            values.push(lz);
            table.push(row![k, lz]);
        }
        let expected = elogz(self.m, self.n, Shape::new(self.lambda)?, Shape::new(self.rho)?)?;
        let mo = moments(&values)?;
        let z = (mo.mean - expected) / mo.stderr;
        Ok(Outcome {
            checks: vec![Check::at_most("|mean - formula| / s.e.", z.abs(), self.stderr_multiple)],
            stats: json!({ "expected": expected, "moments": mo, "z_score": z }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectorErgConfig {
    pub lambda: f64,
    pub rho: f64,
    /// Levels `n` of `max_{|x|_1 = n} |f(x)| / n`; the last is compared with the first.
    pub levels: Vec<usize>,
    pub environments: usize,
    /// The last level's average must be below this fraction of the first's.
    pub ratio_limit: f64,
}

impl Default for CorrectorErgConfig {
    fn default() -> Self {
        CorrectorErgConfig { lambda: 1.0, rho: 2.0, levels: vec![200, 400, 800, 1600], environments: 10, ratio_limit: 0.5 }
    }
}

impl CorrectorErgConfig {
    /// Per-level means over environments of `max_{|x|_1 = n} |f(x)| / n`,
    /// the per-environment rows, and batch means of the corrector window means.
    fn trend(&self, seed: u64) -> Result<(Vec<f64>, Table, serde_json::Value)> {
        let top = *self.levels.iter().max().ok_or_else(|| loggamma::Error::Precondition("no levels".into()))?;
        let mut table = Table::new(&["environment", "level", "max_ratio", "square_average"]);
        let mut sums = vec![0.0; self.levels.len()];
        let (mut f1_means, mut f2_means) = (Vec::new(), Vec::new());
        for k in 0..self.environments {
            let params = ModelParams::new(self.lambda, self.rho, top, top, seed)?;
            let sys = build_gamma_system(params, &env_stream(seed, k))?;
            let c = Corrector::exact(&sys)?;
            f1_means.push(vec![c.window_mean(Step::E1)]);
            f2_means.push(vec![c.window_mean(Step::E2)]);
            for (s, &n) in sums.iter_mut().zip(&self.levels) {
                let r = c.max_level_ratio(n)?;
                let sq = corrector_rectangle_average(&c, &[Step::E1, Step::E2], n)?;
                *s += r;
                table.push(row![k, n, r, sq]);
            }
        }
        let means: Vec<f64> = sums.iter().map(|s| s / self.environments as f64).collect();
        let extra = match (batch_means(&f1_means), batch_means(&f2_means)) {
            (Ok(a), Ok(b)) => json!({ "mean_f_e1": a, "mean_f_e2": b }),
            _ => json!(null),
        };
        Ok((means, table, extra))
    }

    pub(crate) fn checks(&self, means: &[f64]) -> Vec<Check> {
        let (first, last) = (means[0], means[means.len() - 1]);
        vec![Check::below(
            format!("level-{} / level-{} corrector average", self.levels[self.levels.len() - 1], self.levels[0]),
            last / first,
            self.ratio_limit,
        )]
    }

    pub(crate) fn rows(&self, seed: u64) -> Result<(Vec<(usize, f64)>, Vec<Check>)> {
        let (means, _, _) = self.trend(seed)?;
        Ok((self.levels.iter().copied().zip(means.iter().copied()).collect(), self.checks(&means)))
    }
}

impl Experiment for CorrectorErgConfig {
    const NAME: &'static str = "corrector-erg";
    const CLAIM: &'static str = "the exact corrector satisfies max_{|x|=n} |f(x)|/n -> 0 and has mean zero";
    const CRITERION: Option<u8> = None;

    fn run(&self, seed: u64) -> Result<Outcome> {
        let (means, table, extra) = self.trend(seed)?;
        Ok(Outcome {
            checks: self.checks(&means),
            stats: json!({ "levels": self.levels, "mean_max_ratio": means, "corrector_mean": extra }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusemannConfig {
    pub rho: f64,
    pub u: f64,
    pub horizon: usize,
    pub environments: usize,
    pub ks_limit: f64,
}

impl Default for BusemannConfig {
    fn default() -> Self {
        BusemannConfig { rho: 2.0, u: 0.5, horizon: 800, environments: 500, ks_limit: 0.10 }
    }
}

impl Experiment for BusemannConfig {
    const NAME: &'static str = "busemann";
    const CLAIM: &'static str = "exp(-B(0,e1)) and exp(-B(0,e2)) in direction u are Gamma(theta(u)) and Gamma(rho - theta(u))";
    const CRITERION: Option<u8> = None;

    fn run(&self, seed: u64) -> Result<Outcome> {
        let rho = Shape::new(self.rho)?;
        let u = Velocity::new(self.u)?;
        let theta = theta_of_u(u, rho);
        let other = Shape::new(rho.get() - theta.get())?;
        let v = loggamma::busemann::horizon_point(u, self.horizon);
        let mut table = Table::new(&["environment", "exp_minus_b1", "exp_minus_b2"]);
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        for k in 0..self.environments {
            let w = iid_gamma_weights(rho, v.i, v.j, &env_stream(seed, k));
            let field = BusemannField::estimate(&w, u, Point::ORIGIN, self.horizon)?;
            let a = (-field.b(Point::ORIGIN, Step::E1)?).exp();
            let b = (-field.b(Point::ORIGIN, Step::E2)?).exp();
            s1.push(a);
            s2.push(b);
            table.push(row![k, a, b]);
        }
        let ks1 = gamma_ks(&s1, theta, KsLevel::OnePercent)?;
        let ks2 = gamma_ks(&s2, other, KsLevel::OnePercent)?;
        Ok(Outcome {
            checks: vec![
                Check::below("KS D of exp(-B(0,e1)) against Gamma(theta)", ks1.statistic, self.ks_limit),
                Check::below("KS D of exp(-B(0,e2)) against Gamma(rho - theta)", ks2.statistic, self.ks_limit),
            ],
            stats: json!({ "theta": theta.get(), "terminal": v, "ks_e1": ks1, "ks_e2": ks2 }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdpTailConfig {
    pub rho: f64,
    pub u: f64,
    pub horizon: usize,
    pub environments: usize,
    /// Exit lengths `r` at which the tail is examined.
    pub exits: Vec<usize>,
    /// Rate `δ` of the event `log Q(t_e1 >= r) >= -δ r`.
    pub delta: f64,
}

impl Default for LdpTailConfig {
    fn default() -> Self {
        LdpTailConfig { rho: 2.0, u: 0.5, horizon: 200, environments: 200, exits: vec![5, 10, 20, 40, 80], delta: 0.5 }
    }
}

impl Experiment for LdpTailConfig {
    const NAME: &'static str = "ldp-tail";
    const CLAIM: &'static str = "quenched exit-time tails decay exponentially: P(log Q(t_e1 >= r) >= -delta r) falls with r";
    const CRITERION: Option<u8> = None;

    fn run(&self, seed: u64) -> Result<Outcome> {
        let rho = Shape::new(self.rho)?;
        let u = Velocity::new(self.u)?;
        let v = loggamma::busemann::horizon_point(u, self.horizon);
        let mut table = Table::new(&["environment", "r", "log_tail"]);
        let mut hits = vec![0usize; self.exits.len()];
        for k in 0..self.environments {
            let w = iid_gamma_weights(rho, v.i, v.j, &env_stream(seed, k));
            let g = log_partition(&w, v, WeightConvention::StartIncluded, Direction::Backward)?;
            for (h, &r) in hits.iter_mut().zip(&self.exits) {
                let lt = exit_tail_log_prob(&g, Step::E1, r)?;
                if lt >= -self.delta * r as f64 {
                    *h += 1;
                }
                table.push(row![k, r, lt]);
            }
        }
        let freq: Vec<f64> = hits.iter().map(|&h| h as f64 / self.environments as f64).collect();
        let non_increasing = freq.windows(2).all(|w| w[1] <= w[0]);
        let strict = strictly_decreasing(&freq);
        Ok(Outcome {
            checks: vec![Check::flag("event frequency non-increasing in r", non_increasing)],
            stats: json!({ "terminal": v, "exits": self.exits, "frequency": freq, "strictly_decreasing": strict }),
            table,
        })
    }
}
