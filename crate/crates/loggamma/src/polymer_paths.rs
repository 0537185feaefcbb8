//! Quenched polymer paths, the polymer random walk in random environment
//! (RWRE), the zero-temperature limit and the path-level experiments.
//!
//! The RWRE in a gamma system steps from `x` to `x+e1` with probability
//! `η_{x+e1} / (η_{x+e1} + ζ_{x+e2})`. Averaged over a stationary gamma system
//! its fluctuations around the characteristic velocity are of order `N^{2/3}`.

use crate::error::{precondition, Error, Result};
use crate::free_energy::char_direction;
use crate::gamma_system::{corner, GammaSystem};
use crate::lattice::{Grid, Point, Step};
use crate::partition::{
    log_partition, log_partition_within, path_log_weight, tilted_p2l_backward, Direction, ExitStats,
    LogPartitionGrid, WeightConvention, BRUTE_FORCE_MAX_STEPS,
};
use crate::rng::{tag, RandomStream};
use crate::specfun::{exp_sample, log_add_exp, GammaSampler, LnGammaSampler, Shape};
use crate::stats::{ks_test_unsorted, moments, slope_fit, KsLevel, KsReport, Moments, SlopeFit};
use serde::Serialize;

/// An up-right lattice path given by its start and steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LatticePath {
    pub start: Point,
    pub steps: Vec<Step>,
}

impl LatticePath {
    pub fn new(start: Point, steps: Vec<Step>) -> LatticePath {
        LatticePath { start, steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn end(&self) -> Point {
        self.steps.iter().fold(self.start, |p, &s| p.plus(s))
    }

    /// `x_0, …, x_n`.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut p = self.start;
        out.push(p);
        for &s in &self.steps {
            p = p.plus(s);
            out.push(p);
        }
        out
    }

    pub fn exit_stats(&self) -> ExitStats {
        ExitStats::from_steps(&self.steps)
    }

    /// Whether `sub` appears as a contiguous piece of this path.
    pub fn contains_subpath(&self, sub: &LatticePath) -> bool {
        let pts = self.points();
        match pts.iter().position(|&p| p == sub.start) {
            Some(k) => self.steps.get(k..k + sub.steps.len()) == Some(&sub.steps[..]),
            None => false,
        }
    }
}

/// Every path in `Π_{u,v}`, for `|v-u|_1` up to the enumeration bound.
pub fn enumerate_paths(u: Point, v: Point) -> Result<Vec<LatticePath>> {
    if !u.le(v) {
        return Err(precondition(format!("no paths from {u} to {v}")));
    }
    let k = v.l1() - u.l1();
    if k > BRUTE_FORCE_MAX_STEPS {
        return Err(precondition(format!("{k} steps exceeds the enumeration bound {BRUTE_FORCE_MAX_STEPS}")));
    }
    fn rec(a: usize, b: usize, steps: &mut Vec<Step>, sink: &mut Vec<Vec<Step>>) {
        if a == 0 && b == 0 {
            sink.push(steps.clone());
            return;
        }
        if a > 0 {
            steps.push(Step::E1);
            rec(a - 1, b, steps, sink);
            steps.pop();
        }
        if b > 0 {
            steps.push(Step::E2);
            rec(a, b - 1, steps, sink);
            steps.pop();
        }
    }
    let mut steps = Vec::with_capacity(k);
    let mut sink = Vec::new();
    rec(v.i - u.i, v.j - u.j, &mut steps, &mut sink);
    Ok(sink.into_iter().map(|s| LatticePath::new(u, s)).collect())
}

/// `log Q_{u,v}{path}` under the grid's convention, for a forward grid based
/// at the path's start.
pub fn path_log_prob(grid: &LogPartitionGrid, path: &LatticePath) -> Result<f64> {
    if grid.direction != Direction::Forward || grid.base != path.start {
        return Err(precondition("path probabilities need a forward grid based at the path start"));
    }
    let v = path.end();
    if !grid.contains(v) {
        return Err(precondition(format!("path end {v} outside the grid")));
    }
    Ok(path_log_weight(grid.weights(), path.start, &path.steps, grid.convention) - grid.log_z(v))
}

/// A path from `Q_{u,v}` with `u` the base of the forward grid, generated
/// backward from `v` by the kernel
/// `P(x → x-e_r) ∝ Z_{u,x-e_r} × (step weight)`; on the two boundary rays
/// through `u` the backward step is forced.
pub fn sample_quenched_path(grid: &LogPartitionGrid, v: Point, rng: &mut RandomStream) -> Result<LatticePath> {
    if grid.direction != Direction::Forward {
        return Err(precondition("quenched path sampling needs a forward grid"));
    }
    let u = grid.base;
    if !grid.contains(v) || !u.le(v) {
        return Err(precondition(format!("endpoint {v} outside the grid based at {u}")));
    }
    let w = grid.weights();
    let mut steps = Vec::with_capacity(v.l1() - u.l1());
    let mut x = v;
    while x != u {
        let s = if x.i == u.i {
            Step::E2
        } else if x.j == u.j {
            Step::E1
        } else {
            let back = |s: Step| {
                let p = x.minus(s).expect("interior point");
                let lw = match grid.convention {
                    WeightConvention::StartIncluded => -w.get(p).ln(),
                    WeightConvention::EndIncluded => 0.0,
                };
                grid.log_z(p) + lw
            };
            let (a1, a2) = (back(Step::E1), back(Step::E2));
            let p1 = 1.0 / (1.0 + (a2 - a1).exp());
            if rng.uniform() < p1 {
                Step::E1
            } else {
                Step::E2
            }
        };
        steps.push(s);
        x = x.minus(s).expect("path stays above the base");
    }
    steps.reverse();
    Ok(LatticePath::new(u, steps))
}

/// A path from the tilted point-to-line measure `Q^h_{0,(N)}` with
/// start-included weights, sampled forward with
/// `P(x → x+e_r) ∝ e^{h_r} Z^h_{x+e_r,(N)}`.
pub fn sample_tilted_p2l_path(
    weights: &Grid<f64>,
    h: (f64, f64),
    n_line: usize,
    rng: &mut RandomStream,
) -> Result<LatticePath> {
    let z = tilted_p2l_backward(weights, h, n_line)?;
    let mut x = Point::ORIGIN;
    let mut steps = Vec::with_capacity(n_line);
    for _ in 0..n_line {
        let a1 = h.0 + z.get(x.plus(Step::E1));
        let a2 = h.1 + z.get(x.plus(Step::E2));
        let p1 = 1.0 / (1.0 + (a2 - a1).exp());
        let s = if rng.uniform() < p1 { Step::E1 } else { Step::E2 };
        steps.push(s);
        x = x.plus(s);
    }
    Ok(LatticePath::new(Point::ORIGIN, steps))
}

/// RWRE transition probabilities `(π(x,x+e1), π(x,x+e2))` in a gamma system.
/// The second is `1 - π(x,x+e1)`, so the pair sums to one exactly.
pub fn rwre_transition(system: &GammaSystem, x: Point) -> Result<(f64, f64)> {
    let (m, n) = system.dims();
    if x.i >= m || x.j >= n {
        return Err(precondition(format!("site {x} has no outgoing edges inside a {m}x{n} system")));
    }
    let eta = system.eta(x.plus(Step::E1));
    let zeta = system.zeta(x.plus(Step::E2));
    let p1 = eta / (eta + zeta);
    Ok((p1, 1.0 - p1))
}

/// One RWRE trajectory of `n_steps` steps from the origin.
pub fn rwre_sample(system: &GammaSystem, n_steps: usize, rng: &mut RandomStream) -> Result<LatticePath> {
    let mut x = Point::ORIGIN;
    let mut steps = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let (p1, _) = rwre_transition(system, x)
            .map_err(|_| precondition(format!("walk would exit the system at {x} before step {}", steps.len() + 1)))?;
        let s = if rng.uniform() < p1 { Step::E1 } else { Step::E2 };
        steps.push(s);
        x = x.plus(s);
    }
    Ok(LatticePath::new(Point::ORIGIN, steps))
}

/// `log P^ω{path}` as a product of RWRE transitions.
pub fn rwre_path_log_prob(system: &GammaSystem, path: &LatticePath) -> Result<f64> {
    let mut x = path.start;
    let mut acc = 0.0;
    for &s in &path.steps {
        let (p1, p2) = rwre_transition(system, x)?;
        acc += match s {
            Step::E1 => p1.ln(),
            Step::E2 => p2.ln(),
        };
        x = x.plus(s);
    }
    Ok(acc)
}

/// `P^ω(X_k = x)` for every `|x|_1 <= n` by propagating transition products.
pub fn rwre_marginals(system: &GammaSystem, n: usize) -> Result<Grid<f64>> {
    let (sm, sn) = system.dims();
    if n > sm.min(sn) {
        return Err(precondition(format!("{n} steps can leave a {sm}x{sn} system")));
    }
    let mut p = Grid::new(Point::ORIGIN, Point::new(n, n), 0.0);
    p.set(Point::ORIGIN, 1.0);
    for d in 0..n {
        for i in 0..=d {
            let x = Point::new(i, d - i);
            let (p1, p2) = rwre_transition(system, x)?;
            let mass = p.get(x);
            *p.at_mut(i + 1, d - i) += mass * p1;
            *p.at_mut(i, d - i + 1) += mass * p2;
        }
    }
    Ok(p)
}

/// The two sides of the RWRE identities on `|x|_1 <= n`: the largest
/// deviations of `P(X_k = x)` from `Ž_{0,x}/Z_{0,x}` and of the conditional
/// path law from `Q̌_{0,x}`. `Ž` uses start-included `ξ̌` weights, `Z`
/// end-included vertex weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RwreIdentityReport {
    pub max_marginal_error: f64,
    pub max_conditional_error: f64,
    pub sites: usize,
    pub paths: usize,
}

pub fn rwre_identity_check(system: &GammaSystem, n: usize) -> Result<RwreIdentityReport> {
    let (sm, sn) = system.dims();
    if n >= sm.min(sn) {
        return Err(precondition(format!("identity check to level {n} needs a system larger than {sm}x{sn}")));
    }
    let marg = rwre_marginals(system, n)?;
    let zc = log_partition(system.xicheck_grid(), Point::ORIGIN, WeightConvention::StartIncluded, Direction::Forward)?;
    let z = log_partition(&system.vertex_weights(), Point::ORIGIN, WeightConvention::EndIncluded, Direction::Forward)?;
    let mut report = RwreIdentityReport { max_marginal_error: 0.0, max_conditional_error: 0.0, sites: 0, paths: 0 };
    for d in 0..=n {
        for i in 0..=d {
            let x = Point::new(i, d - i);
            let ratio = (zc.log_z(x) - z.log_z(x)).exp();
            let pm = marg.get(x);
            report.max_marginal_error = report.max_marginal_error.max((pm - ratio).abs());
            report.sites += 1;
            for path in enumerate_paths(Point::ORIGIN, x)? {
                let cond = (rwre_path_log_prob(system, &path)?).exp() / pm;
                let q = path_log_prob(&zc, &path)?.exp();
                report.max_conditional_error = report.max_conditional_error.max((cond - q).abs());
                report.paths += 1;
            }
        }
    }
    Ok(report)
}

/// `(Q_{0,(m,n)}{prefix}, P^{ω,λ}{prefix})` in the environment `ω = ξ̌` of a
/// gamma system with parameters `(λ, ρ)`. `Q` uses start-included weights:
/// `Q{prefix} = Z_{x_M,(m,n)} / Z_{0,(m,n)} ∏_{i<M} ω^{-1}_{x_i}`.
pub fn measure_convergence_check(system: &GammaSystem, prefix: &LatticePath, target: Point) -> Result<(f64, f64)> {
    if prefix.start != Point::ORIGIN {
        return Err(precondition("prefix must start at the origin"));
    }
    let omega = system.xicheck_grid();
    if !omega.contains(target) {
        return Err(precondition(format!("target {target} outside the environment {}", omega.hi())));
    }
    let end = prefix.end();
    if !end.le(target) {
        return Err(precondition(format!("prefix ends at {end}, beyond {target}")));
    }
    if prefix.is_empty() {
        return Ok((1.0, 1.0));
    }
    let g = log_partition_within(omega, target, WeightConvention::StartIncluded, Direction::Backward, Point::ORIGIN)?;
    let head = path_log_weight(omega, Point::ORIGIN, &prefix.steps, WeightConvention::StartIncluded);
    let q = (g.log_z(end) - g.log_z(Point::ORIGIN) + head).exp();
    let p = rwre_path_log_prob(system, prefix)?.exp();
    Ok((q, p))
}

/// Last-passage values `G_{lo,x} = max(G_{lo,x-e1}, G_{lo,x-e2}) + ω_x` with the
/// weight at the base excluded, plus a count of exact ties met on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct LppGrid {
    weights: Grid<f64>,
    g: Grid<f64>,
    ties: usize,
}

impl LppGrid {
    pub fn new(weights: &Grid<f64>) -> LppGrid {
        let (lo, hi) = (weights.lo(), weights.hi());
        let mut g: Grid<f64> = Grid::new(lo, hi, 0.0);
        let mut ties = 0;
        for j in lo.j..=hi.j {
            for i in lo.i..=hi.i {
                if i == lo.i && j == lo.j {
                    continue;
                }
                let prev = match (i > lo.i, j > lo.j) {
                    (true, true) => {
                        let (a, b) = (g.at(i - 1, j), g.at(i, j - 1));
                        if a == b {
                            ties += 1;
                        }
                        a.max(b)
                    }
                    (true, false) => g.at(i - 1, j),
                    (false, true) => g.at(i, j - 1),
                    (false, false) => unreachable!(),
                };
                *g.at_mut(i, j) = prev + weights.at(i, j);
            }
        }
        LppGrid { weights: weights.clone(), g, ties }
    }

    pub fn g(&self, x: Point) -> f64 {
        self.g.get(x)
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.g
    }

    /// Ties met while filling the grid.
    pub fn ties(&self) -> usize {
        self.ties
    }

    /// The geodesic from the base to `v`, built backward by moving to the
    /// predecessor with the larger `G` (ties toward `x-e1`), and the number
    /// of ties met.
    pub fn geodesic(&self, v: Point) -> Result<(LatticePath, usize)> {
        let u = self.g.lo();
        if !self.g.contains(v) {
            return Err(precondition(format!("{v} outside the last-passage grid")));
        }
        let mut steps = Vec::new();
        let mut ties = 0;
        let mut x = v;
        while x != u {
            let s = if x.i == u.i {
                Step::E2
            } else if x.j == u.j {
                Step::E1
            } else {
                let (a, b) = (self.g.at(x.i - 1, x.j), self.g.at(x.i, x.j - 1));
                if a == b {
                    ties += 1;
                }
                if a >= b {
                    Step::E1
                } else {
                    Step::E2
                }
            };
            steps.push(s);
            x = x.minus(s).expect("inside the grid");
        }
        steps.reverse();
        Ok((LatticePath::new(u, steps), ties))
    }

    /// Sum of weights along a path, excluding its start.
    pub fn path_weight(&self, path: &LatticePath) -> f64 {
        path.points().iter().skip(1).fold(0.0, |acc, &p| acc + self.weights.get(p))
    }

    /// The competition interface: from the base, step to whichever of
    /// `φ+e1`, `φ+e2` has the smaller `G` (ties toward `e1`), until a
    /// neighbour leaves the grid. Returns the path and the tie count.
    pub fn competition_interface(&self) -> (LatticePath, usize) {
        let (lo, hi) = (self.g.lo(), self.g.hi());
        let mut x = lo;
        let mut steps = Vec::new();
        let mut ties = 0;
        while x.i < hi.i && x.j < hi.j {
            let (a, b) = (self.g.get(x.plus(Step::E1)), self.g.get(x.plus(Step::E2)));
            if a == b {
                ties += 1;
            }
            let s = if a <= b { Step::E1 } else { Step::E2 };
            steps.push(s);
            x = x.plus(s);
        }
        (LatticePath::new(lo, steps), ties)
    }
}

/// Mean absolute difference of matched order statistics (a QQ-plot distance).
pub fn qq_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(precondition("QQ distance needs two samples of equal nonzero size"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    Ok(x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum::<f64>() / x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroTemperatureRow {
    pub epsilon: f64,
    pub qq_distance: f64,
    pub mean_scaled_log_z: f64,
    pub mean_lpp: f64,
}

/// Zero-temperature comparison on `{0..m}×{0..n}`: for each `ε`, samples of
/// `ε log Z_{0,(m,n)}` with i.i.d. Gamma(ερ) weights (end included) against
/// samples of `G_{0,(m,n)}` with i.i.d. Exp(ρ) weights.
pub fn zero_temperature_comparison(
    rho: Shape,
    epsilons: &[f64],
    m: usize,
    n: usize,
    replicates: usize,
    rng: &RandomStream,
) -> Result<Vec<ZeroTemperatureRow>> {
    let lpp: Vec<f64> = (0..replicates)
        .map(|r| {
            let mut s = rng.substream(&[tag::REPLICATE, r as u64, 0]);
            let mut w = Grid::new(Point::ORIGIN, Point::new(m, n), 0.0);
            for j in 0..=n {
                for i in 0..=m {
                    *w.at_mut(i, j) = exp_sample(rho.get(), &mut s);
                }
            }
            LppGrid::new(&w).g(Point::new(m, n))
        })
        .collect();
    let mean_lpp = lpp.iter().sum::<f64>() / replicates as f64;
    epsilons
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let shape = Shape::new(eps * rho.get())?;
            let ln_y = LnGammaSampler::new(shape);
            let vals: Vec<f64> = (0..replicates)
                .map(|r| {
                    let mut s = rng.substream(&[tag::REPLICATE, r as u64, 1 + k as u64]);
                    eps * end_included_log_z_from_logs(m, n, || ln_y.sample(&mut s))
                })
                .collect();
            Ok(ZeroTemperatureRow {
                epsilon: eps,
                qq_distance: qq_distance(&vals, &lpp)?,
                mean_scaled_log_z: vals.iter().sum::<f64>() / replicates as f64,
                mean_lpp,
            })
        })
        .collect()
}

/// `log Z_{0,(m,n)}` (end included) with log-weights drawn row by row.
fn end_included_log_z_from_logs(m: usize, n: usize, mut ln_y: impl FnMut() -> f64) -> f64 {
    let mut row = vec![f64::NEG_INFINITY; m + 1];
    for j in 0..=n {
        for i in 0..=m {
            let l = ln_y();
            row[i] = if i == 0 && j == 0 {
                0.0
            } else {
                let left = if i > 0 { row[i - 1] } else { f64::NEG_INFINITY };
                log_add_exp(left, row[i]) - l
            };
        }
    }
    row[m]
}

/// `(I_x, J_x) = ((I_{x-e2} - J_{x-e1})⁺, (J_{x-e1} - I_{x-e2})⁺)`, the
/// zero-temperature corner map for last-passage increments with zero bulk.
pub fn degenerate_corner(i_south: f64, j_west: f64) -> (f64, f64) {
    ((i_south - j_west).max(0.0), (j_west - i_south).max(0.0))
}

/// Increments `I_{X+(i,0)}`, `J_{X+(0,j)}`, `i, j ∈ [M]`, seen from the
/// competition interface `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct IjWindow {
    pub alpha: f64,
    pub beta: f64,
    pub i_row: Vec<f64>,
    pub j_col: Vec<f64>,
}

impl IjWindow {
    /// Independent `I ~ Exp(α)` and `J ~ Exp(β)`.
    pub fn init(alpha: f64, beta: f64, m: usize, rng: &mut RandomStream) -> Result<IjWindow> {
        if !(alpha > 0.0 && beta > 0.0) || m == 0 {
            return Err(crate::error::domain(format!("need alpha, beta > 0 and M >= 1, got ({alpha}, {beta}, {m})")));
        }
        let i_row = (0..m).map(|_| exp_sample(alpha, rng)).collect();
        let j_col = (0..m).map(|_| exp_sample(beta, rng)).collect();
        Ok(IjWindow { alpha, beta, i_row, j_col })
    }

    /// The interface step `e1` iff `I_{X+e1} < J_{X+e2}`, then the window is
    /// re-centred: the increments across the step are recomputed by
    /// [`degenerate_corner`] and one fresh boundary value enters at the far end.
    pub fn step(&mut self, rng: &mut RandomStream) -> Step {
        let m = self.i_row.len();
        if self.i_row[0] < self.j_col[0] {
            let mut i_below = self.i_row[0];
            for j in 0..m {
                let (i_new, j_new) = degenerate_corner(i_below, self.j_col[j]);
                self.j_col[j] = j_new;
                i_below = i_new;
            }
            self.i_row.rotate_left(1);
            self.i_row[m - 1] = exp_sample(self.alpha, rng);
            Step::E1
        } else {
            let mut j_left = self.j_col[0];
            for i in 0..m {
                let (i_new, j_new) = degenerate_corner(self.i_row[i], j_left);
                self.i_row[i] = i_new;
                j_left = j_new;
            }
            self.j_col.rotate_left(1);
            self.j_col[m - 1] = exp_sample(self.beta, rng);
            Step::E2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateReport {
    pub e1_fraction: f64,
    pub i_samples: Vec<f64>,
    pub j_samples: Vec<f64>,
    pub ks_i: KsReport,
    pub ks_j: KsReport,
}

/// Runs one window chain for `burn_in + n_steps` steps and records `I_{X+e1}`
/// and `J_{X+e2}` every `lag` steps after burn-in; KS against Exp(α), Exp(β).
pub fn degenerate_ij_chain(
    alpha: f64,
    beta: f64,
    n_steps: usize,
    m: usize,
    burn_in: usize,
    lag: usize,
    level: KsLevel,
    rng: &mut RandomStream,
) -> Result<DegenerateReport> {
    let lag = lag.max(1);
    let mut w = IjWindow::init(alpha, beta, m, rng)?;
    for _ in 0..burn_in {
        w.step(rng);
    }
    let (mut e1, mut is, mut js) = (0usize, Vec::new(), Vec::new());
    for t in 1..=n_steps {
        if w.step(rng) == Step::E1 {
            e1 += 1;
        }
        if t % lag == 0 {
            is.push(w.i_row[0]);
            js.push(w.j_col[0]);
        }
    }
    degenerate_report(alpha, beta, e1 as f64 / n_steps.max(1) as f64, is, js, level)
}

/// Independent chains, each burned in, sampled once at the end.
pub fn degenerate_ij_replicates(
    alpha: f64,
    beta: f64,
    m: usize,
    burn_in: usize,
    replicates: usize,
    level: KsLevel,
    rng: &RandomStream,
) -> Result<DegenerateReport> {
    let (mut e1, mut is, mut js) = (0usize, Vec::with_capacity(replicates), Vec::with_capacity(replicates));
    for r in 0..replicates {
        let mut s = rng.substream(&[tag::REPLICATE, r as u64]);
        let mut w = IjWindow::init(alpha, beta, m, &mut s)?;
        for _ in 0..burn_in {
            if w.step(&mut s) == Step::E1 {
                e1 += 1;
            }
        }
        is.push(w.i_row[0]);
        js.push(w.j_col[0]);
    }
    let steps = (burn_in * replicates).max(1);
    degenerate_report(alpha, beta, e1 as f64 / steps as f64, is, js, level)
}

fn degenerate_report(
    alpha: f64,
    beta: f64,
    e1_fraction: f64,
    i_samples: Vec<f64>,
    j_samples: Vec<f64>,
    level: KsLevel,
) -> Result<DegenerateReport> {
    let ks_i = ks_test_unsorted(&i_samples, |x| 1.0 - (-alpha * x).exp(), level)?;
    let ks_j = ks_test_unsorted(&j_samples, |x| 1.0 - (-beta * x).exp(), level)?;
    Ok(DegenerateReport { e1_fraction, i_samples, j_samples, ks_i, ks_j })
}

/// Environment of the fluctuation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WalkEnvironment {
    /// Stationary gamma system on the quadrant: boundary `η ~ Gamma(λ)`,
    /// `ζ ~ Gamma(ρ-λ)`, bulk `ξ ~ Gamma(ρ)`.
    Stationary { lambda: Shape, rho: Shape },
    /// `η = ζ ≡ 1`: the symmetric coin-flip walk.
    Homogeneous,
}

impl WalkEnvironment {
    pub fn velocity(self) -> Result<f64> {
        match self {
            WalkEnvironment::Stationary { lambda, rho } => Ok(char_direction(lambda, rho)?.u()),
            WalkEnvironment::Homogeneous => Ok(0.5),
        }
    }
}

/// Builds a quadrant gamma system one antidiagonal at a time, keeping only
/// the front. After `advance` returns for antidiagonal `d`, `eta()[i]` is
/// `η_{(i,d-i)}` (valid for `i >= 1`) and `zeta()[i]` is `ζ_{(i,d-i)}` (valid
/// for `i <= d-1`).
#[derive(Debug, Clone)]
pub struct AntidiagonalSweep {
    d: usize,
    eta: Vec<f64>,
    zeta: Vec<f64>,
    next_eta: Vec<f64>,
    next_zeta: Vec<f64>,
    samplers: (GammaSampler, GammaSampler, GammaSampler),
    rng: RandomStream,
}

impl AntidiagonalSweep {
    pub fn new(lambda: Shape, rho: Shape, capacity: usize, rng: RandomStream) -> Result<AntidiagonalSweep> {
        if lambda >= rho {
            return Err(crate::error::domain("need 0 < lambda < rho"));
        }
        let rml = Shape::new(rho.get() - lambda.get())?;
        Ok(AntidiagonalSweep {
            d: 0,
            eta: Vec::with_capacity(capacity + 1),
            zeta: Vec::with_capacity(capacity + 1),
            next_eta: Vec::with_capacity(capacity + 1),
            next_zeta: Vec::with_capacity(capacity + 1),
            samplers: (GammaSampler::new(lambda), GammaSampler::new(rml), GammaSampler::new(rho)),
            rng,
        })
    }

    pub fn antidiagonal(&self) -> usize {
        self.d
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn advance(&mut self) {
        let d = self.d + 1;
        self.next_eta.clear();
        self.next_zeta.clear();
        self.next_eta.resize(d + 1, 0.0);
        self.next_zeta.resize(d + 1, 0.0);
        let mut s = self.rng.substream(&[tag::BULK, d as u64]);
        self.next_zeta[0] = self.samplers.1.sample(&mut s);
        self.next_eta[d] = self.samplers.0.sample(&mut s);
        for i in 1..d {
            let xi = self.samplers.2.sample(&mut s);
            let (e, z, _) = corner(xi, self.eta[i], self.zeta[i - 1]);
            self.next_eta[i] = e;
            self.next_zeta[i] = z;
        }
        std::mem::swap(&mut self.eta, &mut self.next_eta);
        std::mem::swap(&mut self.zeta, &mut self.next_zeta);
        self.d = d;
    }
}

/// `E|X_1 - u|_1` for one environment: `2(1-u) π_1 + 2u π_2`.
pub fn one_step_mean_deviation(eta_e1: f64, zeta_e2: f64, u: f64) -> f64 {
    let p1 = eta_e1 / (eta_e1 + zeta_e2);
    2.0 * (1.0 - u) * p1 + 2.0 * u * (1.0 - p1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow {
    pub n: usize,
    pub environment: usize,
    pub walk: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationStat {
    pub n: usize,
    pub mean: f64,
    /// Standard error from per-environment means.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationReport {
    pub velocity: f64,
    pub per_n: Vec<DeviationStat>,
    /// Log-log slope of the mean deviation, when at least three `N` are given.
    pub fit: Option<SlopeFit>,
    pub rows: Vec<DeviationRow>,
}

/// Memory used by one sweep to antidiagonal `n_max`.
pub fn sweep_memory_bytes(n_max: usize, walks: usize) -> usize {
    4 * (n_max + 2) * std::mem::size_of::<f64>() + walks * 256
}

/// `E|X_N - N u|_1` over fresh environments and walks for each `N` in the
/// ascending list, and the log-log slope against `N`. All walks in one
/// environment advance together through a single antidiagonal sweep.
pub fn fluctuation_experiment(
    env: WalkEnvironment,
    n_list: &[usize],
    environments: usize,
    walks: usize,
    memory_budget: usize,
    rng: &RandomStream,
) -> Result<FluctuationReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(precondition("N list must be nonempty, positive and strictly ascending"));
    }
    if environments < 2 || walks == 0 {
        return Err(precondition("need at least two environments and one walk"));
    }
    let n_max = *n_list.last().expect("nonempty");
    let need = sweep_memory_bytes(n_max, walks);
    if need > memory_budget {
        let max_n = (memory_budget.saturating_sub(walks * 256) / (4 * std::mem::size_of::<f64>())).saturating_sub(2);
        return Err(Error::Resource(format!("sweep to N = {n_max} needs {need} bytes; largest N within budget is {max_n}")));
    }
    let u = env.velocity()?;
    let mut rows = Vec::with_capacity(n_list.len() * environments * walks);
    for e in 0..environments {
        let env_rng = rng.substream(&[tag::REPLICATE, e as u64]);
        let mut walkers: Vec<RandomStream> = (0..walks).map(|w| env_rng.substream(&[tag::WALK, w as u64])).collect();
        let mut pos = vec![0usize; walks];
        let mut sweep = match env {
            WalkEnvironment::Stationary { lambda, rho } => Some(AntidiagonalSweep::new(lambda, rho, n_max, env_rng.clone())?),
            WalkEnvironment::Homogeneous => None,
        };
        let mut next_target = 0;
        for d in 1..=n_max {
            if let Some(s) = sweep.as_mut() {
                s.advance();
            }
            for (a, wr) in pos.iter_mut().zip(walkers.iter_mut()) {
                let p1 = match &sweep {
                    Some(s) => {
                        let (eta, zeta) = (s.eta()[*a + 1], s.zeta()[*a]);
                        eta / (eta + zeta)
                    }
                    None => 0.5,
                };
                if wr.uniform() < p1 {
                    *a += 1;
                }
            }
            if d == n_list[next_target] {
                for (w, &a) in pos.iter().enumerate() {
                    rows.push(DeviationRow { n: d, environment: e, walk: w, deviation: 2.0 * (a as f64 - d as f64 * u).abs() });
                }
                next_target += 1;
            }
        }
    }
    let mut per_n = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let env_means: Vec<f64> = (0..environments)
            .map(|e| {
                let devs = rows.iter().filter(|r| r.n == n && r.environment == e).map(|r| r.deviation);
                devs.sum::<f64>() / walks as f64
            })
            .collect();
        let m: Moments = moments(&env_means)?;
        per_n.push(DeviationStat { n, mean: m.mean, stderr: m.stderr });
    }
    let pts: Vec<(f64, f64)> = per_n.iter().map(|s| ((s.n as f64).ln(), s.mean.ln())).collect();
    let fit = if pts.len() >= 3 { Some(slope_fit(&pts)?) } else { None };
    Ok(FluctuationReport { velocity: u, per_n, fit, rows })
}

/// Fraction of times `k ∈ 0..=n` at which two paths of equal length coincide.
pub fn overlap_fraction(a: &LatticePath, b: &LatticePath) -> Result<f64> {
    if a.len() != b.len() || a.start != b.start {
        return Err(precondition("overlap needs paths with a common start and length"));
    }
    let (pa, pb) = (a.points(), b.points());
    Ok(pa.iter().zip(&pb).filter(|(x, y)| x == y).count() as f64 / pa.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub n_steps: usize,
    pub mean: f64,
    pub stderr: f64,
    pub fractions: Vec<f64>,
}

/// Mean overlap of pairs of independent RWRE walks in one environment.
pub fn overlap_experiment(
    system: &GammaSystem,
    n_steps: usize,
    pairs: usize,
    rng: &RandomStream,
) -> Result<OverlapReport> {
    if pairs < 2 {
        return Err(precondition("need at least two pairs"));
    }
    let fractions = (0..pairs)
        .map(|p| {
            let a = rwre_sample(system, n_steps, &mut rng.substream(&[tag::WALK, 2 * p as u64]))?;
            let b = rwre_sample(system, n_steps, &mut rng.substream(&[tag::WALK, 2 * p as u64 + 1]))?;
            overlap_fraction(&a, &b)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = moments(&fractions)?;
    Ok(OverlapReport { n_steps, mean: m.mean, stderr: m.stderr, fractions })
}

/// A gamma system with `η = ζ ≡ 1` and `ξ ≡ 2`, on which the RWRE is the
/// symmetric coin-flip walk.
pub fn homogeneous_system(m: usize, n: usize) -> Result<GammaSystem> {
    let params = crate::gamma_system::ModelParams::new(1.0, 2.0, m, n, 0)?;
    let xi = Grid::new(Point::new(1, 1), Point::new(m, n), 2.0);
    GammaSystem::from_inputs(params, &vec![1.0; m], &vec![1.0; n], xi)
}
