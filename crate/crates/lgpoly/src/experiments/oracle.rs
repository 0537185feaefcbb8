//! Exact checks of the partition-function machinery.

use super::{env_stream, iid_gamma_weights};
use crate::catalog::Experiment;
use crate::{row, Check, Outcome, Table};
use loggamma::gamma_system::{build_gamma_system, ModelParams};
use loggamma::partition::{
    brute_force_partition, comparison_ratios, log_partition, ne_boundary_partition, ratio_weights, Direction,
    WeightConvention,
};
use loggamma::{Point, Result, Shape, Step};
use serde::{Deserialize, Serialize};
use serde_json::json;

const CONVENTIONS: [WeightConvention; 2] = [WeightConvention::StartIncluded, WeightConvention::EndIncluded];

fn convention_name(c: WeightConvention) -> &'static str {
    match c {
        WeightConvention::StartIncluded => "start_included",
        WeightConvention::EndIncluded => "end_included",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Grid is `{0..size}²`.
    pub size: usize,
    pub environments: usize,
    pub rho: f64,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { size: 6, environments: 100, rho: 2.0, tolerance: 1e-10 }
    }
}

impl Experiment for OracleConfig {
    const NAME: &'static str = "oracle";
    const CLAIM: &'static str = "forward and backward DP log Z equal exhaustive path sums on every rectangle";
    const CRITERION: Option<u8> = Some(1);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let rho = Shape::new(self.rho)?;
        let mut table = Table::new(&["environment", "convention", "pairs", "max_abs_diff"]);
        let mut worst = 0.0_f64;
        let mut pairs = 0usize;
        for k in 0..self.environments {
            let w = iid_gamma_weights(rho, self.size, self.size, &env_stream(seed, k));
            for conv in CONVENTIONS {
                let mut env_worst = 0.0_f64;
                let mut env_pairs = 0usize;
                let backward: Vec<_> = w
                    .points()
                    .map(|v| log_partition(&w, v, conv, Direction::Backward))
                    .collect::<Result<_>>()?;
                for u in w.points() {
                    let fwd = log_partition(&w, u, conv, Direction::Forward)?;
                    for (v, bwd) in w.points().zip(&backward) {
                        if !u.le(v) {
                            continue;
                        }
                        let exact = brute_force_partition(&w, u, v, conv, None)?;
                        let d = (fwd.log_z(v) - exact).abs().max((bwd.log_z(u) - exact).abs());
                        env_worst = env_worst.max(d);
                        env_pairs += 1;
                    }
                }
                worst = worst.max(env_worst);
                pairs += env_pairs;
                table.push(row![k, convention_name(conv), env_pairs, env_worst]);
            }
        }
        Ok(Outcome {
            checks: vec![Check::below("max |DP - enumeration| of log Z", worst, self.tolerance)],
            stats: json!({ "pairs": pairs, "max_abs_diff": worst }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeRatioConfig {
    pub lambda: f64,
    pub rho: f64,
    pub size: usize,
    pub environments: usize,
    pub tolerance: f64,
}

impl Default for NeRatioConfig {
    fn default() -> Self {
        NeRatioConfig { lambda: 1.0, rho: 2.5, size: 20, environments: 10, tolerance: 1e-9 }
    }
}

impl Experiment for NeRatioConfig {
    const NAME: &'static str = "ne-ratio";
    const CLAIM: &'static str = "ratios of north-east boundary partition functions reproduce the edge weights eta and zeta";
    const CRITERION: Option<u8> = Some(3);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let mut table = Table::new(&["environment", "ratios", "exceptions", "max_rel_error"]);
        let (mut exceptions, mut total, mut worst) = (0usize, 0usize, 0.0_f64);
        let ne = Point::new(self.size, self.size);
        for k in 0..self.environments {
            let params = ModelParams::new(self.lambda, self.rho, self.size, self.size, seed)?;
            let sys = build_gamma_system(params, &env_stream(seed, k))?;
            let mut z = loggamma::Grid::new(Point::ORIGIN, ne, 0.0);
            for x in z.points().collect::<Vec<_>>() {
                z.set(x, ne_boundary_partition(&sys, x, ne)?);
            }
            let (mut env_exc, mut env_total, mut env_worst) = (0usize, 0usize, 0.0_f64);
            for x in z.points() {
                for (axis, want) in [(Step::E1, x.i >= 1), (Step::E2, x.j >= 1)] {
                    if !want {
                        continue;
                    }
                    let prev = x.minus(axis).expect("checked coordinate");
                    let ratio = (z.get(x) - z.get(prev)).exp();
                    let truth = match axis {
                        Step::E1 => sys.eta(x),
                        Step::E2 => sys.zeta(x),
                    };
                    let rel = (ratio - truth).abs() / truth;
                    env_worst = env_worst.max(rel);
                    env_total += 1;
                    if !(rel <= self.tolerance) {
                        env_exc += 1;
                    }
                }
            }
            exceptions += env_exc;
            total += env_total;
            worst = worst.max(env_worst);
            table.push(row![k, env_total, env_exc, env_worst]);
        }
        Ok(Outcome {
            checks: vec![Check::at_most("ratios off by more than the tolerance", exceptions as f64, 0.0)],
            stats: json!({ "ratios": total, "exceptions": exceptions, "max_rel_error": worst, "tolerance": self.tolerance }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareLemmaConfig {
    pub size: usize,
    pub environments: usize,
    pub rho: f64,
}

impl Default for CompareLemmaConfig {
    fn default() -> Self {
        CompareLemmaConfig { size: 8, environments: 1000, rho: 2.0 }
    }
}

impl Experiment for CompareLemmaConfig {
    const NAME: &'static str = "compare-lemma";
    const CLAIM: &'static str = "exit-restricted partition ratios sandwich the ratio from (1,1), samplewise";
    const CRITERION: Option<u8> = Some(5);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let rho = Shape::new(self.rho)?;
        let mut table = Table::new(&["environment", "rectangles", "violations"]);
        let (mut violations, mut rectangles) = (0usize, 0usize);
        for k in 0..self.environments {
            let w = iid_gamma_weights(rho, self.size, self.size, &env_stream(seed, k));
            let mut env_viol = 0usize;
            let mut env_rect = 0usize;
            for m in 2..=self.size {
                for n in 1..=self.size {
                    let [a, b, c] = comparison_ratios(&w, m, n)?;
                    env_rect += 1;
                    if !(a <= b) {
                        env_viol += 1;
                    }
                    if !(b <= c) {
                        env_viol += 1;
                    }
                }
            }
            violations += env_viol;
            rectangles += env_rect;
            table.push(row![k, env_rect, env_viol]);
        }
        Ok(Outcome {
            checks: vec![Check::at_most("violated inequalities", violations as f64, 0.0)],
            stats: json!({ "rectangles": rectangles, "violations": violations }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioBoundConfig {
    pub size: usize,
    pub environments: usize,
    pub rho: f64,
}

impl Default for RatioBoundConfig {
    fn default() -> Self {
        RatioBoundConfig { size: 40, environments: 200, rho: 2.0 }
    }
}

impl Experiment for RatioBoundConfig {
    const NAME: &'static str = "ratio-bound";
    const CLAIM: &'static str = "ratio weights never exceed the weight they divide off: eta_{x,v} <= Y_{x-e1}, zeta_{x,v} <= Y_{x-e2}";
    const CRITERION: Option<u8> = Some(6);

    fn run(&self, seed: u64) -> Result<Outcome> {
        let rho = Shape::new(self.rho)?;
        let v = Point::new(self.size, self.size);
        let mut table = Table::new(&["environment", "sites", "violations", "max_ratio_over_weight"]);
        let (mut violations, mut sites) = (0usize, 0usize);
        let mut worst = 0.0_f64;
        for k in 0..self.environments {
            let w = iid_gamma_weights(rho, self.size, self.size, &env_stream(seed, k));
            let g = log_partition(&w, v, WeightConvention::StartIncluded, Direction::Backward)?;
            let (mut env_viol, mut env_sites, mut env_worst) = (0usize, 0usize, 0.0_f64);
            for x in w.points() {
                for axis in [Step::E1, Step::E2] {
                    let Some(prev) = x.minus(axis) else { continue };
                    let r = ratio_weights(&g, x, axis)?;
                    let bound = w.get(prev);
                    env_worst = env_worst.max(r / bound);
                    env_sites += 1;
                    if !(r <= bound) {
                        env_viol += 1;
                    }
                }
            }
            violations += env_viol;
            sites += env_sites;
            worst = worst.max(env_worst);
            table.push(row![k, env_sites, env_viol, env_worst]);
        }
        Ok(Outcome {
            checks: vec![Check::at_most("sites violating the bound", violations as f64, 0.0)],
            stats: json!({ "sites": sites, "violations": violations, "max_ratio_over_weight": worst }),
            table,
        })
    }
}
