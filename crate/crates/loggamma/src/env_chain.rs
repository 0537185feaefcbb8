//! The environment seen from the polymer RWRE under the product measure
//! `μ^{α,β}`: boundary `η_{i,0} ~ Gamma(α)`, `ζ_{0,j} ~ Gamma(β)` and bulk
//! `ξ ~ Gamma(α+β+1)`, all independent, with the rest of the weights filled
//! in by NE induction.
//!
//! The chain is simulated on an `M×M` window. A step shifts the window by the
//! walk's step, recomputes the boundary across the step by NE induction and
//! replenishes the far side with fresh variables.

use crate::error::{domain, precondition, Result};
use crate::free_energy::char_direction;
use crate::gamma_system::{corner, GammaSystem, ModelParams};
use crate::lattice::{Grid, Point, Step};
use crate::rng::{tag, RandomStream};
use crate::specfun::{gamma_cdf_unchecked, GammaSampler, Shape};
use crate::stats::{binomial_stderr, ks_test_unsorted, moments, KsLevel, KsReport};
use serde::Serialize;

/// Laws of the variables that enter the window from the north and east.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreshShapes {
    pub eta: Shape,
    pub zeta: Shape,
    pub xi: Shape,
}

/// The window `(η_{i,0}, ζ_{0,j}, ξ_{i,j})_{i,j ∈ [M]}` around the walker.
#[derive(Debug, Clone)]
pub struct EnvWindowState {
    m: usize,
    /// `eta_row[i-1] = η_{i,0}`.
    pub eta_row: Vec<f64>,
    /// `zeta_col[j-1] = ζ_{0,j}`.
    pub zeta_col: Vec<f64>,
    /// `ξ_{i,j}` on `[1,M]²`.
    pub xi_block: Grid<f64>,
    shapes: FreshShapes,
    samplers: [GammaSampler; 3],
}

fn shape_pair(alpha: f64, beta: f64) -> Result<(Shape, Shape)> {
    Ok((Shape::new(alpha)?, Shape::new(beta)?))
}

impl EnvWindowState {
    /// A window with independent entries drawn from the given shapes.
    pub fn sample(shapes: FreshShapes, m: usize, rng: &mut RandomStream) -> Result<EnvWindowState> {
        if m == 0 {
            return Err(precondition("window size must be at least 1"));
        }
        let samplers = [GammaSampler::new(shapes.eta), GammaSampler::new(shapes.zeta), GammaSampler::new(shapes.xi)];
        let eta_row = (0..m).map(|_| samplers[0].sample(rng)).collect();
        let zeta_col = (0..m).map(|_| samplers[1].sample(rng)).collect();
        let mut xi_block = Grid::new(Point::new(1, 1), Point::new(m, m), 0.0);
        for j in 1..=m {
            for i in 1..=m {
                *xi_block.at_mut(i, j) = samplers[2].sample(rng);
            }
        }
        Ok(EnvWindowState { m, eta_row, zeta_col, xi_block, shapes, samplers })
    }

    /// A window with explicit contents.
    pub fn from_parts(shapes: FreshShapes, eta_row: Vec<f64>, zeta_col: Vec<f64>, xi_block: Grid<f64>) -> Result<EnvWindowState> {
        let m = eta_row.len();
        if m == 0 || zeta_col.len() != m || xi_block.lo() != Point::new(1, 1) || xi_block.hi() != Point::new(m, m) {
            return Err(precondition(format!("window parts do not form an {m}x{m} window")));
        }
        if eta_row.iter().chain(&zeta_col).chain(xi_block.values()).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(domain("window weights must be positive and finite"));
        }
        let samplers = [GammaSampler::new(shapes.eta), GammaSampler::new(shapes.zeta), GammaSampler::new(shapes.xi)];
        Ok(EnvWindowState { m, eta_row, zeta_col, xi_block, shapes, samplers })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn shapes(&self) -> FreshShapes {
        self.shapes
    }

    /// `ξ̌_0 = η_{e1} + ζ_{e2}`.
    pub fn xicheck_origin(&self) -> f64 {
        self.eta_row[0] + self.zeta_col[0]
    }

    /// Probability that the next step is `e1`.
    pub fn step_probability(&self) -> f64 {
        self.eta_row[0] / (self.eta_row[0] + self.zeta_col[0])
    }

    /// The window completed by NE induction, as a gamma system on `[0,M]²`.
    pub fn completed(&self) -> Result<GammaSystem> {
        let params = ModelParams::new(self.shapes.eta.get(), self.shapes.xi.get(), self.m, self.m, 0)?;
        GammaSystem::from_inputs(params, &self.eta_row, &self.zeta_col, self.xi_block.clone())
    }

    /// All `2M + M²` coordinates in the order η row, ζ column, ξ row-major.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.m + self.m * self.m);
        v.extend_from_slice(&self.eta_row);
        v.extend_from_slice(&self.zeta_col);
        v.extend_from_slice(self.xi_block.values());
        v
    }

    /// Names matching [`EnvWindowState::coordinates`].
    pub fn coordinate_names(m: usize) -> Vec<String> {
        let mut v: Vec<String> = (1..=m).map(|i| format!("eta_{i}_0")).collect();
        v.extend((1..=m).map(|j| format!("zeta_0_{j}")));
        for j in 1..=m {
            v.extend((1..=m).map(|i| format!("xi_{i}_{j}")));
        }
        v
    }

    /// Law of each coordinate under the stationary product measure the window
    /// was drawn from.
    pub fn coordinate_shapes(&self) -> Vec<Shape> {
        let mut v = vec![self.shapes.eta; self.m];
        v.extend(vec![self.shapes.zeta; self.m]);
        v.extend(vec![self.shapes.xi; self.m * self.m]);
        v
    }
}

/// A window drawn from `μ^{α,β}`.
pub fn mu_ab_init(alpha: f64, beta: f64, m: usize, rng: &mut RandomStream) -> Result<EnvWindowState> {
    let (a, b) = shape_pair(alpha, beta)?;
    let shapes = FreshShapes { eta: a, zeta: b, xi: Shape::new(alpha + beta + 1.0)? };
    EnvWindowState::sample(shapes, m, rng)
}

/// A window cut from a stationary gamma system with parameters `(λ, ρ)`;
/// fresh variables follow the same laws.
pub fn gamma_system_init(lambda: Shape, rho: Shape, m: usize, rng: &mut RandomStream) -> Result<EnvWindowState> {
    if lambda >= rho {
        return Err(domain("need 0 < lambda < rho"));
    }
    let shapes = FreshShapes { eta: lambda, zeta: Shape::new(rho.get() - lambda.get())?, xi: rho };
    EnvWindowState::sample(shapes, m, rng)
}

/// One move of the environment chain. The walk steps `e1` with probability
/// `η_{e1} / (η_{e1} + ζ_{e2})`. After an `e1` step the new `ζ` column is
/// `ζ_{1,j}`, computed up column 1 from `(ξ_{1,j}, η_{1,j-1}, ζ_{0,j})`; the
/// `η` row and `ξ` block shift left and take fresh entries on the east side.
/// An `e2` step is the mirror image.
pub fn env_chain_step(state: &mut EnvWindowState, rng: &mut RandomStream) -> Step {
    let m = state.m;
    if rng.uniform() < state.step_probability() {
        let mut eta_below = state.eta_row[0];
        for j in 1..=m {
            let (eta, zeta, _) = corner(state.xi_block.at(1, j), eta_below, state.zeta_col[j - 1]);
            state.zeta_col[j - 1] = zeta;
            eta_below = eta;
        }
        state.eta_row.rotate_left(1);
        state.eta_row[m - 1] = state.samplers[0].sample(rng);
        for j in 1..=m {
            for i in 1..m {
                *state.xi_block.at_mut(i, j) = state.xi_block.at(i + 1, j);
            }
            *state.xi_block.at_mut(m, j) = state.samplers[2].sample(rng);
        }
        Step::E1
    } else {
        let mut zeta_left = state.zeta_col[0];
        for i in 1..=m {
            let (eta, zeta, _) = corner(state.xi_block.at(i, 1), state.eta_row[i - 1], zeta_left);
            state.eta_row[i - 1] = eta;
            zeta_left = zeta;
        }
        state.zeta_col.rotate_left(1);
        state.zeta_col[m - 1] = state.samplers[1].sample(rng);
        for j in 1..m {
            for i in 1..=m {
                *state.xi_block.at_mut(i, j) = state.xi_block.at(i, j + 1);
            }
        }
        for i in 1..=m {
            *state.xi_block.at_mut(i, m) = state.samplers[2].sample(rng);
        }
        Step::E2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateKs {
    pub name: String,
    pub report: KsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub steps: usize,
    pub e1_fraction: f64,
    /// `α/(α+β)`.
    pub e1_expected: f64,
    /// Binomial standard error of the frequency.
    pub e1_stderr: f64,
    pub coordinates: Vec<CoordinateKs>,
    /// Sampled values, one row per sampling time.
    pub samples: Vec<Vec<f64>>,
}

impl StationarityReport {
    /// Frequency within `k` standard errors.
    pub fn frequency_ok(&self, k: f64) -> bool {
        (self.e1_fraction - self.e1_expected).abs() <= k * self.e1_stderr
    }

    pub fn all_ks_pass(&self) -> bool {
        self.coordinates.iter().all(|c| c.report.pass)
    }
}

/// Runs one chain from `μ^{α,β}` for `burn_in + steps` steps. Counts `e1`
/// steps after burn-in and samples every coordinate every `lag` steps; each
/// coordinate is KS-tested against its law at `level` split over all
/// coordinates.
pub fn stationarity_check(
    alpha: f64,
    beta: f64,
    m: usize,
    steps: usize,
    lag: usize,
    burn_in: usize,
    level: KsLevel,
    rng: &mut RandomStream,
) -> Result<StationarityReport> {
    let lag = lag.max(1);
    let mut state = mu_ab_init(alpha, beta, m, rng)?;
    for _ in 0..burn_in {
        env_chain_step(&mut state, rng);
    }
    let mut e1 = 0usize;
    let mut samples = Vec::with_capacity(steps / lag);
    for t in 1..=steps {
        if env_chain_step(&mut state, rng) == Step::E1 {
            e1 += 1;
        }
        if t % lag == 0 {
            samples.push(state.coordinates());
        }
    }
    let names = EnvWindowState::coordinate_names(m);
    let shapes = state.coordinate_shapes();
    let level = level.bonferroni(names.len());
    let coordinates = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let column: Vec<f64> = samples.iter().map(|row| row[k]).collect();
            let a = shapes[k].get();
            Ok(CoordinateKs { name, report: ks_test_unsorted(&column, |x| gamma_cdf_unchecked(a, x), level)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let p = alpha / (alpha + beta);
    Ok(StationarityReport {
        steps,
        e1_fraction: e1 as f64 / steps.max(1) as f64,
        e1_expected: p,
        e1_stderr: binomial_stderr(p, steps),
        coordinates,
        samples,
    })
}

/// KS reports of every coordinate across independent chains after `steps`
/// steps from `μ^{α,β}`.
pub fn marginals_after(
    alpha: f64,
    beta: f64,
    m: usize,
    steps: usize,
    replicates: usize,
    level: KsLevel,
    rng: &RandomStream,
) -> Result<Vec<CoordinateKs>> {
    let mut rows = Vec::with_capacity(replicates);
    let mut shapes = Vec::new();
    for r in 0..replicates {
        let mut s = rng.substream(&[tag::REPLICATE, r as u64]);
        let mut state = mu_ab_init(alpha, beta, m, &mut s)?;
        for _ in 0..steps {
            env_chain_step(&mut state, &mut s);
        }
        rows.push(state.coordinates());
        shapes = state.coordinate_shapes();
    }
    let names = EnvWindowState::coordinate_names(m);
    let level = level.bonferroni(names.len());
    names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let column: Vec<f64> = rows.iter().map(|row| row[k]).collect();
            let a = shapes[k].get();
            Ok(CoordinateKs { name, report: ks_test_unsorted(&column, |x| gamma_cdf_unchecked(a, x), level)? })
        })
        .collect()
}

/// Probability that the `(α/(α+β), β/(α+β))` walk visits `x`.
pub fn walk_visit_probability(alpha: f64, beta: f64, x: Point) -> f64 {
    let p = alpha / (alpha + beta);
    let (i, j) = (x.i as i32, x.j as i32);
    let mut binom = 1.0;
    for k in 0..x.i.min(x.j) {
        binom = binom * (x.l1() - k) as f64 / (k + 1) as f64;
    }
    binom * p.powi(i) * (1.0 - p).powi(j)
}

/// CDF of `ξ̌_x` under `μ^{α,β}`: Gamma(α+β) with the visit probability of
/// `x`, Gamma(α+β+1) otherwise.
pub fn xicheck_mixture_cdf(alpha: f64, beta: f64, x: Point, t: f64) -> f64 {
    let w = walk_visit_probability(alpha, beta, x);
    w * gamma_cdf_unchecked(alpha + beta, t) + (1.0 - w) * gamma_cdf_unchecked(alpha + beta + 1.0, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XicheckLawReport {
    pub site: Point,
    pub visit_probability: f64,
    pub ks: KsReport,
}

/// Draws `replicates` windows from `μ^{α,β}`, computes `ξ̌_x` by NE
/// induction, and KS-tests the sample against the mixture law.
pub fn xicheck_path_law_check(
    alpha: f64,
    beta: f64,
    site: Point,
    replicates: usize,
    level: KsLevel,
    rng: &RandomStream,
) -> Result<XicheckLawReport> {
    if site.l1() > 4 {
        return Err(precondition(format!("site {site} is beyond |x|_1 <= 4")));
    }
    let m = site.i.max(site.j) + 1;
    let samples = (0..replicates)
        .map(|r| {
            let s = mu_ab_init(alpha, beta, m, &mut rng.substream(&[tag::REPLICATE, r as u64]))?;
            Ok(s.completed()?.xicheck(site))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ks = ks_test_unsorted(&samples, |t| xicheck_mixture_cdf(alpha, beta, site, t), level)?;
    Ok(XicheckLawReport { site, visit_probability: walk_visit_probability(alpha, beta, site), ks })
}

/// Test functions `(f, g, h)` for the size-biasing identity
/// `E[B f(G B) g(G (1-B)) h(G_α+G_β)] = α/(α+β) E f(G_{α+1}) E g(G_β) E h(G_{α+β})`
/// with `B = G_α/(G_α+G_β)` and `G ~ Gamma(α+β+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SizeBiasFunctions {
    /// `f = g = h = 1`.
    Constant,
    /// `f(x) = min(x, 1)`, `g = h = 1`.
    CappedF,
    /// `f(x) = e^{-x}`, `g(x) = 1/(1+x)`, `h(x) = min(x, 2)`.
    Mixed,
}

impl SizeBiasFunctions {
    pub const ALL: [SizeBiasFunctions; 3] = [SizeBiasFunctions::Constant, SizeBiasFunctions::CappedF, SizeBiasFunctions::Mixed];

    fn eval(self) -> (fn(f64) -> f64, fn(f64) -> f64, fn(f64) -> f64) {
        fn one(_: f64) -> f64 {
            1.0
        }
        match self {
            SizeBiasFunctions::Constant => (one, one, one),
            SizeBiasFunctions::CappedF => (|x| x.min(1.0), one, one),
            SizeBiasFunctions::Mixed => (|x| (-x).exp(), |x| 1.0 / (1.0 + x), |x| x.min(2.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeBiasReport {
    pub functions: SizeBiasFunctions,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// `(lhs - rhs) / sqrt(se_lhs² + se_rhs²)`.
    pub z_score: f64,
}

/// Monte Carlo of both sides of the size-biasing identity on independent
/// streams, `n_samples` draws per expectation.
pub fn size_bias_check(
    alpha: f64,
    beta: f64,
    functions: SizeBiasFunctions,
    n_samples: usize,
    rng: &RandomStream,
) -> Result<SizeBiasReport> {
    let (a, b) = shape_pair(alpha, beta)?;
    if n_samples < 2 {
        return Err(precondition("need at least two samples"));
    }
    let (f, g, h) = functions.eval();
    let (ga, gb, gc) = (GammaSampler::new(a), GammaSampler::new(b), GammaSampler::new(Shape::new(alpha + beta + 1.0)?));
    let mut s = rng.substream(&[tag::REPLICATE, 0]);
    let lhs_vals: Vec<f64> = (0..n_samples)
        .map(|_| {
            let (x, y, z) = (ga.sample(&mut s), gb.sample(&mut s), gc.sample(&mut s));
            let beta_var = x / (x + y);
            beta_var * f(z * beta_var) * g(z * (1.0 - beta_var)) * h(x + y)
        })
        .collect();
    let lhs = moments(&lhs_vals)?;
    let side = |label: u64, shape: f64, func: fn(f64) -> f64| -> Result<(f64, f64)> {
        let sampler = GammaSampler::new(Shape::new(shape)?);
        let mut s = rng.substream(&[tag::REPLICATE, label]);
        let vals: Vec<f64> = (0..n_samples).map(|_| func(sampler.sample(&mut s))).collect();
        let m = moments(&vals)?;
        Ok((m.mean, m.stderr))
    };
    let (ef, sf) = side(1, alpha + 1.0, f)?;
    let (eg, sg) = side(2, beta, g)?;
    let (eh, sh) = side(3, alpha + beta, h)?;
    let c = alpha / (alpha + beta);
    let rhs = c * ef * eg * eh;
    let rhs_stderr = c * ((sf * eg * eh).powi(2) + (ef * sg * eh).powi(2) + (ef * eg * sh).powi(2)).sqrt();
    let denom = (lhs.stderr.powi(2) + rhs_stderr.powi(2)).sqrt();
    let z_score = if denom > 0.0 { (lhs.mean - rhs) / denom } else { if lhs.mean == rhs { 0.0 } else { f64::INFINITY } };
    Ok(SizeBiasReport { functions, lhs: lhs.mean, lhs_stderr: lhs.stderr, rhs, rhs_stderr, z_score })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub time: usize,
    pub mean_eta: f64,
    pub mean_zeta: f64,
    /// KS distance of `η_{1,0}` from Gamma(α).
    pub ks_eta_to_limit: f64,
    /// KS distance of `ζ_{0,1}` from Gamma(β).
    pub ks_zeta_to_limit: f64,
    /// KS distance of `η_{1,0}` from its initial law Gamma(λ).
    pub ks_eta_to_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Starts independent chains from gamma-system windows with parameters
/// `(λ, ρ)`, `ρ > 1`, and tracks the boundary marginals against the
/// candidate limit `μ^{α,β}` with `α+β = ρ-1` and `α/(α+β)` the
/// characteristic direction. Reports trends only.
pub fn gamma_start_convergence(
    lambda: Shape,
    rho: Shape,
    m: usize,
    times: &[usize],
    replicates: usize,
    rng: &RandomStream,
) -> Result<ConvergenceReport> {
    if rho.get() <= 1.0 {
        return Err(domain(format!("need rho > 1, got {}", rho.get())));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(precondition("times must be strictly ascending"));
    }
    let u = char_direction(lambda, rho)?.u();
    let (alpha, beta) = ((rho.get() - 1.0) * u, (rho.get() - 1.0) * (1.0 - u));
    let mut etas = vec![Vec::with_capacity(replicates); times.len()];
    let mut zetas = vec![Vec::with_capacity(replicates); times.len()];
    for r in 0..replicates {
        let mut s = rng.substream(&[tag::REPLICATE, r as u64]);
        let mut state = gamma_system_init(lambda, rho, m, &mut s)?;
        let mut t = 0;
        for (k, &target) in times.iter().enumerate() {
            while t < target {
                env_chain_step(&mut state, &mut s);
                t += 1;
            }
            etas[k].push(state.eta_row[0]);
            zetas[k].push(state.zeta_col[0]);
        }
    }
    let level = KsLevel::OnePercent;
    let rows = times
        .iter()
        .enumerate()
        .map(|(k, &time)| {
            Ok(ConvergenceRow {
                time,
                mean_eta: moments(&etas[k])?.mean,
                mean_zeta: moments(&zetas[k])?.mean,
                ks_eta_to_limit: ks_test_unsorted(&etas[k], |x| gamma_cdf_unchecked(alpha, x), level)?.statistic,
                ks_zeta_to_limit: ks_test_unsorted(&zetas[k], |x| gamma_cdf_unchecked(beta, x), level)?.statistic,
                ks_eta_to_start: ks_test_unsorted(&etas[k], |x| gamma_cdf_unchecked(lambda.get(), x), level)?.statistic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { alpha, beta, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma_cdf;

    fn shapes(a: f64, b: f64) -> FreshShapes {
        FreshShapes { eta: Shape::new(a).unwrap(), zeta: Shape::new(b).unwrap(), xi: Shape::new(a + b + 1.0).unwrap() }
    }

    #[test]
    fn init_marginal_eta() {
        let xs: Vec<f64> = (0..10_000)
            .map(|r| mu_ab_init(0.6, 1.4, 2, &mut RandomStream::new(r)).unwrap().eta_row[0])
            .collect();
        let r = ks_test_unsorted(&xs, |x| gamma_cdf(Shape::new(0.6).unwrap(), x).unwrap(), KsLevel::OnePercent).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn init_rejects_bad_parameters() {
        assert!(mu_ab_init(0.0, 1.0, 2, &mut RandomStream::new(0)).is_err());
        assert!(mu_ab_init(1.0, 1.0, 0, &mut RandomStream::new(0)).is_err());
        assert!(gamma_system_init(Shape::new(2.0).unwrap(), Shape::new(1.5).unwrap(), 2, &mut RandomStream::new(0)).is_err());
    }

    #[test]
    fn xicheck_origin_is_gamma_alpha_plus_beta() {
        let xs: Vec<f64> = (0..100_000)
            .map(|r| mu_ab_init(0.7, 1.1, 1, &mut RandomStream::new(r)).unwrap().xicheck_origin())
            .collect();
        let r = ks_test_unsorted(&xs, |x| gamma_cdf_unchecked(1.8, x), KsLevel::OnePercent).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn symmetric_parameters_give_transposable_law() {
        // With α = β, η_{2,0} and ζ_{0,2} have the same law.
        let n = 5000;
        let (mut e, mut z) = (Vec::new(), Vec::new());
        for r in 0..n {
            let s = mu_ab_init(0.9, 0.9, 3, &mut RandomStream::new(r)).unwrap();
            e.push(s.eta_row[1]);
            z.push(s.zeta_col[1]);
        }
        let re = ks_test_unsorted(&e, |x| gamma_cdf_unchecked(0.9, x), KsLevel::OnePercent).unwrap();
        let rz = ks_test_unsorted(&z, |x| gamma_cdf_unchecked(0.9, x), KsLevel::OnePercent).unwrap();
        assert!(re.pass && rz.pass);
    }

    #[test]
    fn step_probability_formula() {
        let xi = Grid::new(Point::new(1, 1), Point::new(2, 2), 1.0);
        let s = EnvWindowState::from_parts(shapes(1.0, 1.0), vec![3.0, 1.0], vec![1.0, 1.0], xi).unwrap();
        assert_eq!(s.step_probability(), 0.75);
        let mut hits = 0;
        let n = 100_000;
        let mut rng = RandomStream::new(1);
        for _ in 0..n {
            let mut c = s.clone();
            if env_chain_step(&mut c, &mut rng) == Step::E1 {
                hits += 1;
            }
        }
        let f = hits as f64 / n as f64;
        assert!((f - 0.75).abs() < 4.0 * binomial_stderr(0.75, n));
    }

    #[test]
    fn step_matches_ne_completion() {
        // After an e1 step the new ζ column equals ζ_{1,j} of the completed
        // window, and the η row is the old row shifted.
        let mut rng = RandomStream::new(2);
        for _ in 0..50 {
            let s = mu_ab_init(0.8, 1.3, 4, &mut rng).unwrap();
            let full = s.completed().unwrap();
            let mut c = s.clone();
            let step = env_chain_step(&mut c, &mut rng);
            for k in 1..4 {
                match step {
                    Step::E1 => {
                        assert!((c.zeta_col[k - 1] - full.zeta(Point::new(1, k))).abs() < 1e-12 * c.zeta_col[k - 1]);
                        assert_eq!(c.eta_row[k - 1], s.eta_row[k]);
                        assert_eq!(c.xi_block.at(k, 2), s.xi_block.at(k + 1, 2));
                    }
                    Step::E2 => {
                        assert!((c.eta_row[k - 1] - full.eta(Point::new(k, 1))).abs() < 1e-12 * c.eta_row[k - 1]);
                        assert_eq!(c.zeta_col[k - 1], s.zeta_col[k]);
                        assert_eq!(c.xi_block.at(2, k), s.xi_block.at(2, k + 1));
                    }
                }
            }
        }
    }

    #[test]
    fn chain_is_stationary_and_frequency_matches() {
        let r = stationarity_check(0.75, 0.75, 3, 60_000, 50, 1000, KsLevel::OnePercent, &mut RandomStream::new(3))
            .unwrap();
        assert!(r.frequency_ok(3.0), "{} vs {}", r.e1_fraction, r.e1_expected);
        assert!(r.all_ks_pass(), "{:?}", r.coordinates.iter().filter(|c| !c.report.pass).collect::<Vec<_>>());
        assert_eq!(r.coordinates.len(), 15);
    }

    #[test]
    fn asymmetric_frequency() {
        let r = stationarity_check(0.5, 1.5, 2, 50_000, 50, 100, KsLevel::OnePercent, &mut RandomStream::new(4)).unwrap();
        assert!(r.frequency_ok(3.0), "{}", r.e1_fraction);
    }

    #[test]
    fn marginals_after_many_steps() {
        let r = marginals_after(1.2, 0.4, 2, 2000, 1500, KsLevel::OnePercent, &RandomStream::new(5)).unwrap();
        assert!(r.iter().all(|c| c.report.pass), "{r:?}");
    }

    #[test]
    fn visit_probabilities() {
        assert_eq!(walk_visit_probability(1.0, 3.0, Point::ORIGIN), 1.0);
        assert!((walk_visit_probability(1.0, 1.0, Point::new(1, 0)) - 0.5).abs() < 1e-15);
        assert!((walk_visit_probability(1.0, 3.0, Point::new(1, 1)) - 2.0 * 0.25 * 0.75).abs() < 1e-15);
        let total: f64 = (0..=4).map(|i| walk_visit_probability(0.7, 1.9, Point::new(i, 4 - i))).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mixture_cdf_at_e1_symmetric() {
        let t = 1.7;
        let want = 0.5 * gamma_cdf_unchecked(2.0, t) + 0.5 * gamma_cdf_unchecked(3.0, t);
        assert!((xicheck_mixture_cdf(1.0, 1.0, Point::new(1, 0), t) - want).abs() < 1e-15);
    }

    #[test]
    fn xicheck_law_small_sites() {
        for site in [Point::ORIGIN, Point::new(1, 0), Point::new(1, 1)] {
            let r = xicheck_path_law_check(0.8, 1.2, site, 20_000, KsLevel::OnePercent, &RandomStream::new(6)).unwrap();
            assert!(r.ks.pass, "{r:?}");
        }
        assert!(xicheck_path_law_check(1.0, 1.0, Point::new(3, 2), 10, KsLevel::OnePercent, &RandomStream::new(0)).is_err());
    }

    #[test]
    fn size_bias_constant_case() {
        let r = size_bias_check(0.6, 1.5, SizeBiasFunctions::Constant, 200_000, &RandomStream::new(7)).unwrap();
        assert_eq!(r.rhs, 0.6 / 2.1);
        assert!(r.z_score.abs() < 4.0, "{r:?}");
        assert!((r.lhs - r.rhs).abs() < 3.0 * r.lhs_stderr);
    }

    #[test]
    fn size_bias_other_cases() {
        for f in [SizeBiasFunctions::CappedF, SizeBiasFunctions::Mixed] {
            let r = size_bias_check(1.3, 0.8, f, 200_000, &RandomStream::new(8)).unwrap();
            assert!(r.z_score.abs() < 4.0, "{r:?}");
        }
    }

    #[test]
    fn convergence_experiment_runs() {
        let rep = gamma_start_convergence(Shape::new(1.0).unwrap(), Shape::new(3.0).unwrap(), 3, &[0, 10, 100], 300, &RandomStream::new(9))
            .unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!((rep.alpha + rep.beta - 2.0).abs() < 1e-12);
        assert!(rep.rows[0].ks_eta_to_start < rep.rows[0].ks_eta_to_limit);
    }
}
