//! Log-domain partition functions.
//!
//! `Z_{u,v}` sums, over up-right paths `u = x_0, …, x_k = v`, the product of
//! reciprocal vertex weights `Y^{-1}`. Two placements of the weights occur:
//!
//! * [`WeightConvention::StartIncluded`]: `∏_{i=0}^{k-1} Y^{-1}_{x_i}` (weight at
//!   `u` counted, at `v` not). Forward recursion uses the predecessor's weight:
//!   `Z_{u,v} = Z_{u,v-e1} Y^{-1}_{v-e1} + Z_{u,v-e2} Y^{-1}_{v-e2}`, so along the
//!   base row `Z_{u,u+r e1} = ∏_{i<r} Y^{-1}_{u+i e1}`.
//! * [`WeightConvention::EndIncluded`]: `∏_{i=1}^{k} Y^{-1}_{x_i}` (weight at
//!   `v` counted, at `u` not). Forward recursion uses the target's weight:
//!   `Z_{u,v} = (Z_{u,v-e1} + Z_{u,v-e2}) Y^{-1}_v`, so along the base row
//!   `Z_{u,u+r e1} = ∏_{i=1}^{r} Y^{-1}_{u+i e1}`.
//!
//! Values are stored as natural logs; `-∞` marks an empty path set.

use crate::error::{precondition, Result};
use crate::gamma_system::GammaSystem;
use crate::lattice::{Grid, Point, Step};
use crate::specfun::{log_add_exp, log_sum_exp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightConvention {
    StartIncluded,
    EndIncluded,
}

/// Whether the base point is the start (forward) or the terminal (backward)
/// of the paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Boundary exit statistics of a path relative to its start `u`: `t_e1` is the
/// number of initial `e1` steps and `t_e2` the number of initial `e2` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ExitStats {
    pub t_e1: usize,
    pub t_e2: usize,
}

impl ExitStats {
    pub fn from_steps(steps: &[Step]) -> ExitStats {
        match steps.first() {
            None => ExitStats::default(),
            Some(&first) => {
                let run = steps.iter().take_while(|&&s| s == first).count();
                match first {
                    Step::E1 => ExitStats { t_e1: run, t_e2: 0 },
                    Step::E2 => ExitStats { t_e1: 0, t_e2: run },
                }
            }
        }
    }
}

/// `log Z` for one base point and one convention over a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPartitionGrid {
    pub base: Point,
    pub convention: WeightConvention,
    pub direction: Direction,
    values: Grid<f64>,
    weights: Grid<f64>,
}

impl LogPartitionGrid {
    /// `log Z_{base,x}` (forward) or `log Z_{x,base}` (backward); `-∞` when no
    /// admissible path exists or `x` is outside the computed rectangle.
    pub fn log_z(&self, x: Point) -> f64 {
        self.values.try_get(x).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    /// The weights over the computed rectangle.
    pub fn weights(&self) -> &Grid<f64> {
        &self.weights
    }

    pub fn contains(&self, x: Point) -> bool {
        self.values.contains(x)
    }
}

fn sub_grid(w: &Grid<f64>, lo: Point, hi: Point) -> Grid<f64> {
    let mut g = Grid::new(lo, hi, 0.0);
    for j in lo.j..=hi.j {
        for i in lo.i..=hi.i {
            *g.at_mut(i, j) = w.at(i, j);
        }
    }
    g
}

/// `log Z` from (forward) or to (backward) `base` for every point of the
/// weight grid on the correct side of `base`.
pub fn log_partition(
    weights: &Grid<f64>,
    base: Point,
    convention: WeightConvention,
    direction: Direction,
) -> Result<LogPartitionGrid> {
    let limit = match direction {
        Direction::Forward => weights.hi(),
        Direction::Backward => weights.lo(),
    };
    log_partition_within(weights, base, convention, direction, limit)
}

/// As [`log_partition`], restricted to the rectangle spanned by `base` and
/// `limit` (`limit >= base` forward, `limit <= base` backward).
pub fn log_partition_within(
    weights: &Grid<f64>,
    base: Point,
    convention: WeightConvention,
    direction: Direction,
    limit: Point,
) -> Result<LogPartitionGrid> {
    if !weights.contains(base) {
        return Err(precondition(format!("base {base} outside weight grid {}..{}", weights.lo(), weights.hi())));
    }
    if !weights.contains(limit) {
        return Err(precondition(format!("limit {limit} outside weight grid")));
    }
    let (lo, hi) = match direction {
        Direction::Forward if base.le(limit) => (base, limit),
        Direction::Backward if limit.le(base) => (limit, base),
        _ => return Err(precondition(format!("limit {limit} on the wrong side of base {base}"))),
    };
    if let Some(v) = weights.values().iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(crate::error::domain(format!("weights must be positive and finite, found {v}")));
    }
    let w = sub_grid(weights, lo, hi);
    let lw = w.map(f64::ln);
    let mut z = Grid::new(lo, hi, f64::NEG_INFINITY);
    z.set(base, 0.0);
    let ninf = f64::NEG_INFINITY;
    match direction {
        Direction::Forward => {
            for j in lo.j..=hi.j {
                for i in lo.i..=hi.i {
                    if i == base.i && j == base.j {
                        continue;
                    }
                    let a = if i > lo.i { Some(Point::new(i - 1, j)) } else { None };
                    let b = if j > lo.j { Some(Point::new(i, j - 1)) } else { None };
                    let v = match convention {
                        WeightConvention::StartIncluded => {
                            let ta = a.map_or(ninf, |p| z.get(p) - lw.get(p));
                            let tb = b.map_or(ninf, |p| z.get(p) - lw.get(p));
                            log_add_exp(ta, tb)
                        }
                        WeightConvention::EndIncluded => {
                            let ta = a.map_or(ninf, |p| z.get(p));
                            let tb = b.map_or(ninf, |p| z.get(p));
                            log_add_exp(ta, tb) - lw.at(i, j)
                        }
                    };
                    *z.at_mut(i, j) = v;
                }
            }
        }
        Direction::Backward => {
            for j in (lo.j..=hi.j).rev() {
                for i in (lo.i..=hi.i).rev() {
                    if i == base.i && j == base.j {
                        continue;
                    }
                    let a = if i < hi.i { Some(Point::new(i + 1, j)) } else { None };
                    let b = if j < hi.j { Some(Point::new(i, j + 1)) } else { None };
                    let v = match convention {
                        WeightConvention::StartIncluded => {
                            let ta = a.map_or(ninf, |p| z.get(p));
                            let tb = b.map_or(ninf, |p| z.get(p));
                            log_add_exp(ta, tb) - lw.at(i, j)
                        }
                        WeightConvention::EndIncluded => {
                            let ta = a.map_or(ninf, |p| z.get(p) - lw.get(p));
                            let tb = b.map_or(ninf, |p| z.get(p) - lw.get(p));
                            log_add_exp(ta, tb)
                        }
                    };
                    *z.at_mut(i, j) = v;
                }
            }
        }
    }
    Ok(LogPartitionGrid { base, convention, direction, values: z, weights: w })
}

/// Largest `|v-u|_1` accepted by [`brute_force_partition`].
pub const BRUTE_FORCE_MAX_STEPS: usize = 24;

/// Exhaustive path enumeration of `log Z_{u,v}`, optionally keeping only paths
/// whose [`ExitStats`] satisfy `restriction`. Test oracle only.
pub fn brute_force_partition(
    weights: &Grid<f64>,
    u: Point,
    v: Point,
    convention: WeightConvention,
    restriction: Option<&dyn Fn(ExitStats) -> bool>,
) -> Result<f64> {
    if !u.le(v) || !weights.contains(u) || !weights.contains(v) {
        return Err(precondition(format!("need u <= v inside the grid, got {u} -> {v}")));
    }
    let k = v.l1() - u.l1();
    if k > BRUTE_FORCE_MAX_STEPS {
        return Err(precondition(format!("{k} steps exceeds the enumeration bound {BRUTE_FORCE_MAX_STEPS}")));
    }
    let mut terms = Vec::new();
    let mut steps = Vec::with_capacity(k);
    enumerate(weights, u, v, convention, restriction, &mut steps, &mut terms);
    Ok(log_sum_exp(&terms))
}

fn enumerate(
    w: &Grid<f64>,
    u: Point,
    v: Point,
    conv: WeightConvention,
    restriction: Option<&dyn Fn(ExitStats) -> bool>,
    steps: &mut Vec<Step>,
    out: &mut Vec<f64>,
) {
    let pos = steps.iter().fold(u, |p, &s| p.plus(s));
    if pos == v {
        if restriction.is_none_or(|r| r(ExitStats::from_steps(steps))) {
            out.push(path_log_weight(w, u, steps, conv));
        }
        return;
    }
    for s in [Step::E1, Step::E2] {
        if pos.plus(s).le(v) {
            steps.push(s);
            enumerate(w, u, v, conv, restriction, steps, out);
            steps.pop();
        }
    }
}

/// `log ∏ Y^{-1}` along the path from `u` with the given steps.
pub fn path_log_weight(w: &Grid<f64>, u: Point, steps: &[Step], conv: WeightConvention) -> f64 {
    let mut p = u;
    let mut acc = 0.0;
    for &s in steps {
        let q = p.plus(s);
        acc -= match conv {
            WeightConvention::StartIncluded => w.get(p).ln(),
            WeightConvention::EndIncluded => w.get(q).ln(),
        };
        p = q;
    }
    acc
}

/// `log Z_{u,v}(first step = first)`: the path sum restricted to paths whose
/// first step is `first`, i.e. `t_{first} > 0`. Computed on the restricted
/// graph: the forced first step followed by an unrestricted path.
pub fn restricted_log_partition(
    weights: &Grid<f64>,
    u: Point,
    v: Point,
    convention: WeightConvention,
    first: Step,
) -> Result<f64> {
    if !u.le(v) || !weights.contains(v) || !weights.contains(u) {
        return Err(precondition(format!("need u <= v inside the grid, got {u} -> {v}")));
    }
    let u1 = u.plus(first);
    if !u1.le(v) {
        return Ok(f64::NEG_INFINITY);
    }
    let head = match convention {
        WeightConvention::StartIncluded => -weights.get(u).ln(),
        WeightConvention::EndIncluded => -weights.get(u1).ln(),
    };
    let rest = log_partition_within(weights, u1, convention, Direction::Forward, v)?;
    Ok(head + rest.log_z(v))
}

/// End-included ratio weights `Z_{u,x-e1}/Z_{u,x}` (first) and
/// `Z_{u,x-e2}/Z_{u,x}` (second) for `x` in `u..=hi`, by the corner recursion:
/// both equal `Y_x` on the rays out of `u`, and in the bulk
/// `(η_x, ζ_x) = corner(Y_x, η_{x-e2}, ζ_{x-e1})`. Entries not defined are 0.
pub fn end_included_ratio_fields(weights: &Grid<f64>, u: Point, hi: Point) -> Result<(Grid<f64>, Grid<f64>)> {
    if !u.le(hi) || !weights.contains(u) || !weights.contains(hi) {
        return Err(precondition(format!("need {u} <= {hi} inside the weight grid")));
    }
    let mut eta = Grid::new(u, hi, 0.0);
    let mut zeta = Grid::new(u, hi, 0.0);
    for j in u.j..=hi.j {
        for i in u.i..=hi.i {
            let y = weights.at(i, j);
            if j == u.j && i > u.i {
                *eta.at_mut(i, j) = y;
            } else if i == u.i && j > u.j {
                *zeta.at_mut(i, j) = y;
            } else if i > u.i && j > u.j {
                let (e, z, _) = crate::gamma_system::corner(y, eta.at(i, j - 1), zeta.at(i - 1, j));
                *eta.at_mut(i, j) = e;
                *zeta.at_mut(i, j) = z;
            }
        }
    }
    Ok((eta, zeta))
}

/// The three log-ratios of the comparison sandwich for end-included weights:
///
/// `log Z_{0,(m-1,n)}(t_e1>0)/Z_{0,(m,n)}(t_e1>0)`,
/// `log Z_{(1,1),(m-1,n)}/Z_{(1,1),(m,n)}` and
/// `log Z_{0,(m-1,n)}(t_e2>0)/Z_{0,(m,n)}(t_e2>0)`,
///
/// which are ordered increasingly for every environment (`m >= 2`, `n >= 1`).
/// The restricted sums are `Y^{-1}_{e_k} Z_{e_k,·}`, so each ratio is a ratio
/// weight of [`end_included_ratio_fields`]; the corner recursion keeps the
/// ordering exact after rounding.
pub fn comparison_ratios(weights: &Grid<f64>, m: usize, n: usize) -> Result<[f64; 3]> {
    if m < 2 || n < 1 || weights.lo() != Point::ORIGIN || !weights.contains(Point::new(m, n)) {
        return Err(precondition(format!("comparison needs m >= 2, n >= 1 on a grid from the origin, got ({m},{n})")));
    }
    let target = Point::new(m, n);
    let ratio = |start: Point| -> Result<f64> {
        let (eta, _) = end_included_ratio_fields(weights, start, target)?;
        Ok(eta.get(target).ln())
    };
    Ok([ratio(Point::new(1, 0))?, ratio(Point::new(1, 1))?, ratio(Point::new(0, 1))?])
}

/// Ratio variables `η_{x,v} = Z_{x,v}/Z_{x-e1,v}` (axis `e1`) or
/// `ζ_{x,v} = Z_{x,v}/Z_{x-e2,v}` (axis `e2`) from a backward start-included
/// grid with terminal `v`.
///
/// Evaluated through the recursion `Z_{x-e1,v} = Y^{-1}_{x-e1}(Z_{x,v} +
/// Z_{x-e1+e2,v})`, which gives `η_{x,v} = Y_{x-e1} / (1 + Z_{x-e1+e2,v}/Z_{x,v})`
/// and makes the bound `η_{x,v} <= Y_{x-e1}` hold exactly in floating point.
pub fn ratio_weights(grid: &LogPartitionGrid, x: Point, axis: Step) -> Result<f64> {
    if grid.convention != WeightConvention::StartIncluded || grid.direction != Direction::Backward {
        return Err(precondition("ratio weights need a backward start-included grid"));
    }
    let prev = x.minus(axis).filter(|p| grid.contains(*p));
    let prev = match prev {
        Some(p) if grid.contains(x) => p,
        _ => return Err(precondition(format!("site {x} or its predecessor lies outside the grid"))),
    };
    let lz = grid.log_z(x);
    let side = grid.log_z(prev.plus(axis.other()));
    Ok(grid.weights.get(prev) / (1.0 + (side - lz).exp()))
}

/// `log Q_{0,v}(t_axis >= r)` from a backward start-included grid based at
/// `v` whose rectangle contains the origin.
pub fn exit_tail_log_prob(grid: &LogPartitionGrid, axis: Step, r: usize) -> Result<f64> {
    if grid.convention != WeightConvention::StartIncluded || grid.direction != Direction::Backward {
        return Err(precondition("exit tails need a backward start-included grid"));
    }
    if !grid.contains(Point::ORIGIN) {
        return Err(precondition("grid must contain the origin"));
    }
    let mut p = Point::ORIGIN;
    let mut head = 0.0;
    for _ in 0..r {
        head -= grid.weights.get(p).ln();
        p = p.plus(axis);
        if !p.le(grid.base) {
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(head + grid.log_z(p) - grid.log_z(Point::ORIGIN))
}

/// `log Z^h_{x,(N)} = log Σ_{|v|_1 = N} e^{h·(v-x)} Z_{x,v}` with start-included
/// weights, by one forward sweep over the antidiagonals between `x` and the
/// terminal line.
pub fn tilted_p2l_log_partition(weights: &Grid<f64>, h: (f64, f64), x: Point, n_line: usize) -> Result<f64> {
    if x.l1() > n_line {
        return Err(precondition(format!("terminal line {n_line} lies below |x|_1 = {}", x.l1())));
    }
    let d = n_line - x.l1();
    if d == 0 {
        return Ok(0.0);
    }
    let far = Point::new(x.i + d - 1, x.j + d - 1);
    if !weights.contains(x) || !weights.contains(far) {
        return Err(precondition(format!("weights must cover {x}..{far}")));
    }
    // cur[a] = log Z_{x, x + (a, k-a)} on antidiagonal k.
    let mut cur = vec![0.0];
    for k in 1..=d {
        let mut next = vec![f64::NEG_INFINITY; k + 1];
        for (a, &z) in cur.iter().enumerate() {
            let p = Point::new(x.i + a, x.j + (k - 1 - a));
            let t = z - weights.get(p).ln();
            next[a + 1] = log_add_exp(next[a + 1], t);
            next[a] = log_add_exp(next[a], t);
        }
        cur = next;
    }
    let terms: Vec<f64> =
        cur.iter().enumerate().map(|(a, &z)| z + h.0 * a as f64 + h.1 * (d - a) as f64).collect();
    Ok(log_sum_exp(&terms))
}

/// `log Z^h_{x,(N)}` for every `x` with `|x|_1 <= N` in the grid's quadrant,
/// by the backward recursion
/// `Z^h_{x,(N)} = Y^{-1}_x (e^{h1} Z^h_{x+e1,(N)} + e^{h2} Z^h_{x+e2,(N)})`.
/// Entries with `|x|_1 > N` are `-∞`.
pub fn tilted_p2l_backward(weights: &Grid<f64>, h: (f64, f64), n_line: usize) -> Result<Grid<f64>> {
    if weights.lo() != Point::ORIGIN || !weights.contains(Point::new(n_line, n_line)) {
        return Err(precondition(format!("weights must cover {{0..{n_line}}}^2")));
    }
    let hi = Point::new(n_line, n_line);
    let mut z = Grid::new(Point::ORIGIN, hi, f64::NEG_INFINITY);
    for s in (0..=n_line).rev() {
        for i in 0..=s {
            let p = Point::new(i, s - i);
            let v = if s == n_line {
                0.0
            } else {
                let a = z.at(i + 1, s - i) + h.0;
                let b = z.at(i, s - i + 1) + h.1;
                log_add_exp(a, b) - weights.get(p).ln()
            };
            z.set(p, v);
        }
    }
    Ok(z)
}

/// Entry-point decomposition of the north-east boundary partition function
/// `log Z^NE_{sw,ne}`: bulk weights `ξ̌` (start included), then one free step
/// onto the north row `n` or east column `m`, then the boundary edge weights
/// `η_{·,n}` or `ζ_{m,·}` up to `ne`.
pub fn ne_boundary_partition(system: &GammaSystem, sw: Point, ne: Point) -> Result<f64> {
    let (sm, sn) = system.dims();
    if !sw.le(ne) || ne.i > sm || ne.j > sn {
        return Err(precondition(format!("rectangle {sw}..{ne} not inside a {sm}x{sn} system")));
    }
    let (m, n) = (ne.i, ne.j);
    let north = |from: usize| -> f64 { ((from + 1)..=m).map(|s| -system.eta(Point::new(s, n)).ln()).sum() };
    let east = |from: usize| -> f64 { ((from + 1)..=n).map(|t| -system.zeta(Point::new(m, t)).ln()).sum() };
    if sw.j == n {
        return Ok(north(sw.i));
    }
    if sw.i == m {
        return Ok(east(sw.j));
    }
    let bulk = log_partition_within(
        system.xicheck_grid(),
        sw,
        WeightConvention::StartIncluded,
        Direction::Forward,
        Point::new(m - 1, n - 1),
    )?;
    let xc = |p: Point| system.xicheck(p).ln();
    let mut terms = Vec::with_capacity((m - sw.i) + (n - sw.j));
    for i in sw.i..m {
        let p = Point::new(i, n - 1);
        terms.push(bulk.log_z(p) - xc(p) + north(i));
    }
    for j in sw.j..n {
        let p = Point::new(m - 1, j);
        terms.push(bulk.log_z(p) - xc(p) + east(j));
    }
    Ok(log_sum_exp(&terms))
}

/// `log Z^NE_{x,ne}` for all `x <= ne` by a backward sweep:
/// boundary products on the north row and east column, and
/// `Z^NE_x = ξ̌^{-1}_x (Z^NE_{x+e1} + Z^NE_{x+e2})` in the bulk.
pub fn ne_boundary_log_grid(system: &GammaSystem, ne: Point) -> Result<Grid<f64>> {
    let (sm, sn) = system.dims();
    if ne.i > sm || ne.j > sn {
        return Err(precondition(format!("corner {ne} outside a {sm}x{sn} system")));
    }
    let (m, n) = (ne.i, ne.j);
    let mut z = Grid::new(Point::ORIGIN, ne, 0.0);
    for i in (0..m).rev() {
        let v = z.at(i + 1, n) - system.eta(Point::new(i + 1, n)).ln();
        *z.at_mut(i, n) = v;
    }
    for j in (0..n).rev() {
        let v = z.at(m, j + 1) - system.zeta(Point::new(m, j + 1)).ln();
        *z.at_mut(m, j) = v;
    }
    for j in (0..n).rev() {
        for i in (0..m).rev() {
            let v = log_add_exp(z.at(i + 1, j), z.at(i, j + 1)) - system.xicheck(Point::new(i, j)).ln();
            *z.at_mut(i, j) = v;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_system::{build_gamma_system, ModelParams};
    use crate::rng::RandomStream;
    use proptest::prelude::*;

    fn random_weights(m: usize, n: usize, seed: u64) -> Grid<f64> {
        let mut rng = RandomStream::new(seed);
        let mut g = Grid::new(Point::ORIGIN, Point::new(m, n), 0.0);
        for j in 0..=n {
            for i in 0..=m {
                *g.at_mut(i, j) = 0.2 + 3.0 * rng.uniform();
            }
        }
        g
    }

    const BOTH: [WeightConvention; 2] = [WeightConvention::StartIncluded, WeightConvention::EndIncluded];

    #[test]
    fn base_is_empty_product() {
        let w = random_weights(4, 4, 1);
        for conv in BOTH {
            for dir in [Direction::Forward, Direction::Backward] {
                let g = log_partition(&w, Point::new(2, 1), conv, dir).unwrap();
                assert_eq!(g.log_z(Point::new(2, 1)), 0.0);
            }
        }
    }

    #[test]
    fn single_step_start_included() {
        let w = random_weights(3, 3, 2);
        let g = log_partition(&w, Point::ORIGIN, WeightConvention::StartIncluded, Direction::Forward).unwrap();
        assert!((g.log_z(Point::new(1, 0)) + w.at(0, 0).ln()).abs() < 1e-15);
        let g = log_partition(&w, Point::ORIGIN, WeightConvention::EndIncluded, Direction::Forward).unwrap();
        assert!((g.log_z(Point::new(1, 0)) + w.at(1, 0).ln()).abs() < 1e-15);
    }

    #[test]
    fn base_outside_grid_rejected() {
        let w = random_weights(2, 2, 3);
        let r = log_partition(&w, Point::new(5, 0), WeightConvention::StartIncluded, Direction::Forward);
        assert!(matches!(r, Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn dp_matches_enumeration_all_pairs() {
        let w = random_weights(5, 5, 4);
        for conv in BOTH {
            for u in w.points() {
                let fwd = log_partition(&w, u, conv, Direction::Forward).unwrap();
                for v in w.points().filter(|v| u.le(*v)) {
                    let want = brute_force_partition(&w, u, v, conv, None).unwrap();
                    assert!((fwd.log_z(v) - want).abs() < 1e-10, "{conv:?} {u}->{v}");
                    let bwd = log_partition(&w, v, conv, Direction::Backward).unwrap();
                    assert!((bwd.log_z(u) - want).abs() < 1e-10, "{conv:?} {u}->{v} backward");
                }
            }
        }
    }

    #[test]
    fn one_square_end_included_by_hand() {
        let sys = build_gamma_system(ModelParams::new(1.0, 2.0, 1, 1, 0).unwrap(), &RandomStream::new(0)).unwrap();
        let w = sys.vertex_weights();
        let got = brute_force_partition(&w, Point::ORIGIN, Point::new(1, 1), WeightConvention::EndIncluded, None)
            .unwrap()
            .exp();
        let e = sys.eta(Point::new(1, 0));
        let z = sys.zeta(Point::new(0, 1));
        let x = sys.xi(Point::new(1, 1));
        assert!((got - (1.0 / e + 1.0 / z) / x).abs() < 1e-14);
    }

    #[test]
    fn restricted_first_step_identity() {
        let w = random_weights(5, 4, 5);
        let conv = WeightConvention::EndIncluded;
        let only_e1 = |s: ExitStats| s.t_e1 > 0;
        let only_e2 = |s: ExitStats| s.t_e2 > 0;
        let from_e1 = log_partition(&w, Point::new(1, 0), conv, Direction::Forward).unwrap();
        for x in w.points().filter(|p| p.i >= 1) {
            let r = brute_force_partition(&w, Point::ORIGIN, x, conv, Some(&only_e1)).unwrap();
            let want = -w.at(1, 0).ln() + from_e1.log_z(x);
            assert!((r - want).abs() < 1e-10, "{x}");
            let dp = restricted_log_partition(&w, Point::ORIGIN, x, conv, Step::E1).unwrap();
            assert!((dp - want).abs() < 1e-10);
            if x.i >= 1 && x.j >= 1 {
                let r2 = brute_force_partition(&w, Point::ORIGIN, x, conv, Some(&only_e2)).unwrap();
                let all = brute_force_partition(&w, Point::ORIGIN, x, conv, None).unwrap();
                assert!((log_add_exp(r, r2) - all).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn brute_force_size_bound() {
        let w = random_weights(13, 13, 6);
        let r = brute_force_partition(&w, Point::ORIGIN, Point::new(13, 12), WeightConvention::EndIncluded, None);
        assert!(matches!(r, Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn tilted_p2l_cases() {
        let w = random_weights(12, 12, 7);
        let x = Point::new(1, 2);
        assert_eq!(tilted_p2l_log_partition(&w, (0.3, -0.2), x, 3).unwrap(), 0.0);
        assert!(tilted_p2l_log_partition(&w, (0.0, 0.0), x, 2).is_err());
        let n_line = 12;
        let z0 = tilted_p2l_log_partition(&w, (0.0, 0.0), Point::ORIGIN, n_line).unwrap();
        let zc = tilted_p2l_log_partition(&w, (0.7, 0.7), Point::ORIGIN, n_line).unwrap();
        assert!((zc - (0.7 * n_line as f64 + z0)).abs() < 1e-10);
    }

    #[test]
    fn tilted_p2l_matches_enumeration() {
        let w = random_weights(12, 12, 8);
        let h = (0.4, -0.3);
        for x in [Point::ORIGIN, Point::new(2, 1), Point::new(0, 3)] {
            for n_line in [x.l1() + 1, 7, 12] {
                let d = n_line - x.l1();
                let terms: Vec<f64> = (0..=d)
                    .map(|a| {
                        let v = Point::new(x.i + a, x.j + d - a);
                        let z = brute_force_partition(&w, x, v, WeightConvention::StartIncluded, None).unwrap();
                        z + h.0 * a as f64 + h.1 * (d - a) as f64
                    })
                    .collect();
                let want = log_sum_exp(&terms);
                let got = tilted_p2l_log_partition(&w, h, x, n_line).unwrap();
                assert!((got - want).abs() < 1e-10, "{x} N={n_line}");
                let all = tilted_p2l_backward(&w, h, n_line).unwrap();
                assert!((all.get(x) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ratio_bound_and_log_difference() {
        let w = random_weights(15, 15, 9);
        let v = Point::new(15, 15);
        let g = log_partition(&w, v, WeightConvention::StartIncluded, Direction::Backward).unwrap();
        for x in w.points() {
            if x.i >= 1 {
                let eta = ratio_weights(&g, x, Step::E1).unwrap();
                assert!(eta <= w.get(x.minus(Step::E1).unwrap()));
                let direct = (g.log_z(x) - g.log_z(x.minus(Step::E1).unwrap())).exp();
                assert!((eta - direct).abs() <= 1e-12 * direct);
            }
            if x.j >= 1 {
                let zeta = ratio_weights(&g, x, Step::E2).unwrap();
                assert!(zeta <= w.get(x.minus(Step::E2).unwrap()));
            }
        }
        assert!(ratio_weights(&g, Point::new(0, 3), Step::E1).is_err());
        let fwd = log_partition(&w, Point::ORIGIN, WeightConvention::StartIncluded, Direction::Forward).unwrap();
        assert!(ratio_weights(&fwd, Point::new(1, 1), Step::E1).is_err());
    }

    #[test]
    fn exit_tail_matches_enumeration() {
        let w = random_weights(5, 5, 10);
        let v = Point::new(5, 5);
        let g = log_partition(&w, v, WeightConvention::StartIncluded, Direction::Backward).unwrap();
        let total = g.log_z(Point::ORIGIN);
        for r in 0..=5 {
            let pred = move |s: ExitStats| s.t_e1 >= r;
            let want =
                brute_force_partition(&w, Point::ORIGIN, v, WeightConvention::StartIncluded, Some(&pred)).unwrap()
                    - total;
            assert!((exit_tail_log_prob(&g, Step::E1, r).unwrap() - want).abs() < 1e-10, "r={r}");
        }
        assert_eq!(exit_tail_log_prob(&g, Step::E1, 6).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn ne_boundary_degenerate_rows() {
        let sys = build_gamma_system(ModelParams::new(1.0, 2.0, 6, 5, 0).unwrap(), &RandomStream::new(3)).unwrap();
        let ne = Point::new(6, 5);
        let got = ne_boundary_partition(&sys, Point::new(2, 5), ne).unwrap();
        let want: f64 = (3..=6).map(|s| -sys.eta(Point::new(s, 5)).ln()).sum();
        assert!((got - want).abs() < 1e-13);
        let got = ne_boundary_partition(&sys, Point::new(6, 1), ne).unwrap();
        let want: f64 = (2..=5).map(|t| -sys.zeta(Point::new(6, t)).ln()).sum();
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn ne_boundary_decomposition_matches_sweep() {
        let sys = build_gamma_system(ModelParams::new(0.8, 2.3, 9, 7, 0).unwrap(), &RandomStream::new(4)).unwrap();
        for ne in [Point::new(9, 7), Point::new(5, 6), Point::new(1, 1)] {
            let grid = ne_boundary_log_grid(&sys, ne).unwrap();
            for sw in grid.points() {
                let a = ne_boundary_partition(&sys, sw, ne).unwrap();
                assert!((a - grid.get(sw)).abs() < 1e-11, "{sw}..{ne}");
            }
        }
    }

    #[test]
    fn ne_ratios_recover_edge_weights() {
        let sys = build_gamma_system(ModelParams::new(1.0, 2.5, 8, 8, 0).unwrap(), &RandomStream::new(5)).unwrap();
        let ne = Point::new(8, 8);
        let z = ne_boundary_log_grid(&sys, ne).unwrap();
        for x in z.points() {
            if x.i >= 1 {
                let r = (z.get(x) - z.get(x.minus(Step::E1).unwrap())).exp();
                assert!((r / sys.eta(x) - 1.0).abs() < 1e-12, "{x}");
            }
            if x.j >= 1 {
                let r = (z.get(x) - z.get(x.minus(Step::E2).unwrap())).exp();
                assert!((r / sys.zeta(x) - 1.0).abs() < 1e-12, "{x}");
            }
        }
    }

    #[test]
    fn comparison_sandwich_small() {
        for seed in 0..50 {
            let w = random_weights(6, 6, 100 + seed);
            for (m, n) in [(2, 1), (3, 3), (6, 6), (6, 2)] {
                let [a, b, c] = comparison_ratios(&w, m, n).unwrap();
                assert!(a <= b && b <= c, "seed {seed} ({m},{n}): {a} {b} {c}");
            }
        }
        assert!(comparison_ratios(&random_weights(3, 3, 0), 1, 1).is_err());
    }

    #[test]
    fn ratio_fields_match_log_differences() {
        let w = random_weights(7, 6, 11);
        let u = Point::new(1, 0);
        let hi = Point::new(7, 6);
        let (eta, zeta) = end_included_ratio_fields(&w, u, hi).unwrap();
        let z = log_partition(&w, u, WeightConvention::EndIncluded, Direction::Forward).unwrap();
        for x in eta.points() {
            if x.i > u.i {
                let want = z.log_z(x.minus(Step::E1).unwrap()) - z.log_z(x);
                assert!((eta.get(x).ln() - want).abs() < 1e-12, "{x}");
            }
            if x.j > u.j {
                let want = z.log_z(x.minus(Step::E2).unwrap()) - z.log_z(x);
                assert!((zeta.get(x).ln() - want).abs() < 1e-12, "{x}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dp_interior_recursion(seed in 0u64..10_000, m in 1usize..8, n in 1usize..8) {
            let w = random_weights(m, n, seed);
            let g = log_partition(&w, Point::ORIGIN, WeightConvention::EndIncluded, Direction::Forward).unwrap();
            for x in w.points().filter(|p| p.i > 0 && p.j > 0) {
                let want = log_add_exp(g.log_z(x.minus(Step::E1).unwrap()), g.log_z(x.minus(Step::E2).unwrap())) - w.get(x).ln();
                prop_assert!((g.log_z(x) - want).abs() < 1e-12);
            }
        }

        #[test]
        fn tilt_diagonal_shift(seed in 0u64..10_000, c in -2.0f64..2.0, h1 in -1.0f64..1.0, h2 in -1.0f64..1.0, xi in 0usize..3, xj in 0usize..3) {
            let w = random_weights(10, 10, seed);
            let x = Point::new(xi, xj);
            let n_line = 10;
            let a = tilted_p2l_log_partition(&w, (h1 + c, h2 + c), x, n_line).unwrap();
            let b = tilted_p2l_log_partition(&w, (h1, h2), x, n_line).unwrap();
            prop_assert!((a - b - c * (n_line - x.l1()) as f64).abs() < 1e-10);
        }

        #[test]
        fn comparison_holds_samplewise(seed in 0u64..100_000, m in 2usize..9, n in 1usize..9) {
            let w = random_weights(8, 8, seed);
            let [a, b, c] = comparison_ratios(&w, m, n).unwrap();
            prop_assert!(a <= b && b <= c);
        }
    }
}
