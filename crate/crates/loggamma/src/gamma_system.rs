//! Gamma systems: stationary weight configurations `(ξ, η, ζ, ξ̌)` on a
//! rectangle, built from independent boundary and bulk gamma weights by
//! north-east induction.
//!
//! Indexing follows the edge convention `η_x` on the edge `(x-e1, x)` and
//! `ζ_x` on the edge `(x-e2, x)`. For an `m x n` system:
//!
//! | array | sites |
//! |-------|-------|
//! | `ξ`   | `{1..m} x {1..n}` |
//! | `η`   | `{1..m} x {0..n}` |
//! | `ζ`   | `{0..m} x {1..n}` |
//! | `ξ̌`   | `{0..m-1} x {0..n-1}` |
//!
//! The unit square with north-east corner `x` maps `(ξ_x, η_{x-e2}, ζ_{x-e1})`
//! to `(η_x, ζ_x, ξ̌_{x-e1-e2})` via [`corner_map`].

use crate::error::{domain, precondition, Error, Result};
use crate::lattice::{Grid, Point};
use crate::rng::{tag, RandomStream};
use crate::specfun::{gamma_quantile, GammaSampler, Shape};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Default memory budget for a single system (all four arrays).
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

/// Shape parameters, dimensions and seed of a gamma system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: Shape,
    pub rho: Shape,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(lambda: f64, rho: f64, m: usize, n: usize, seed: u64) -> Result<ModelParams> {
        let lambda = Shape::new(lambda)?;
        let rho = Shape::new(rho)?;
        if lambda.get() >= rho.get() {
            return Err(domain(format!("need 0 < lambda < rho, got lambda={} rho={}", lambda.get(), rho.get())));
        }
        if m == 0 || n == 0 {
            return Err(precondition(format!("dimensions must be positive, got {m}x{n}")));
        }
        Ok(ModelParams { lambda, rho, m, n, seed })
    }

    /// Shape `ρ - λ` of the vertical edge weights.
    pub fn rho_minus_lambda(&self) -> Shape {
        Shape::new(self.rho.get() - self.lambda.get()).expect("lambda < rho")
    }

    /// Bytes needed by the four arrays of the system.
    pub fn memory_bytes(&self) -> usize {
        let (m, n) = (self.m, self.n);
        8 * (m * n + m * (n + 1) + (m + 1) * n + m * n)
    }
}

/// The north-east map of one unit square:
/// `(ξ, η, ζ) ↦ (ξη/(η+ζ), ξζ/(η+ζ), η+ζ)`.
pub fn corner_map(xi: f64, eta_s: f64, zeta_w: f64) -> Result<(f64, f64, f64)> {
    if !(xi > 0.0 && eta_s > 0.0 && zeta_w > 0.0) || !(xi.is_finite() && eta_s.is_finite() && zeta_w.is_finite()) {
        return Err(domain(format!("corner_map needs positive finite inputs, got ({xi}, {eta_s}, {zeta_w})")));
    }
    Ok(corner(xi, eta_s, zeta_w))
}

/// Unchecked [`corner_map`]. Written as `ξ / (1 + ζ/η)` so that the outputs
/// are monotone in each input even after rounding, which keeps coupled
/// systems exactly ordered.
#[inline]
pub(crate) fn corner(xi: f64, eta_s: f64, zeta_w: f64) -> (f64, f64, f64) {
    let eta_n = xi / (1.0 + zeta_w / eta_s);
    let zeta_e = xi / (1.0 + eta_s / zeta_w);
    (eta_n, zeta_e, eta_s + zeta_w)
}

/// A finished gamma system. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSystem {
    pub params: ModelParams,
    xi: Grid<f64>,
    eta: Grid<f64>,
    zeta: Grid<f64>,
    xicheck: Grid<f64>,
}

impl GammaSystem {
    /// Builds the system from its independent inputs: `eta0[i-1] = η_{i,0}`,
    /// `zeta0[j-1] = ζ_{0,j}` and bulk `ξ` over `{1..m} x {1..n}`.
    pub fn from_inputs(params: ModelParams, eta0: &[f64], zeta0: &[f64], xi: Grid<f64>) -> Result<GammaSystem> {
        let (m, n) = (params.m, params.n);
        if eta0.len() != m || zeta0.len() != n {
            return Err(precondition(format!(
                "boundary lengths ({}, {}) do not match dimensions {m}x{n}",
                eta0.len(),
                zeta0.len()
            )));
        }
        if xi.lo() != Point::new(1, 1) || xi.hi() != Point::new(m, n) {
            return Err(precondition("bulk grid must cover {1..m} x {1..n}"));
        }
        if let Some(v) = eta0.iter().chain(zeta0).chain(xi.values()).find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(domain(format!("weights must be positive and finite, found {v}")));
        }
        let mut eta = Grid::new(Point::new(1, 0), Point::new(m, n), 0.0);
        let mut zeta = Grid::new(Point::new(0, 1), Point::new(m, n), 0.0);
        let mut xicheck = Grid::new(Point::new(0, 0), Point::new(m - 1, n - 1), 0.0);
        for (k, &v) in eta0.iter().enumerate() {
            *eta.at_mut(k + 1, 0) = v;
        }
        for (k, &v) in zeta0.iter().enumerate() {
            *zeta.at_mut(0, k + 1) = v;
        }
        // Row by row; every site only reads its south and west neighbours, so
        // this gives the same values as an antidiagonal sweep.
        for j in 1..=n {
            for i in 1..=m {
                let (en, ze, xc) = corner(xi.at(i, j), eta.at(i, j - 1), zeta.at(i - 1, j));
                *eta.at_mut(i, j) = en;
                *zeta.at_mut(i, j) = ze;
                *xicheck.at_mut(i - 1, j - 1) = xc;
            }
        }
        Ok(GammaSystem { params, xi, eta, zeta, xicheck })
    }

    pub fn xi(&self, p: Point) -> f64 {
        self.xi.get(p)
    }
    pub fn eta(&self, p: Point) -> f64 {
        self.eta.get(p)
    }
    pub fn zeta(&self, p: Point) -> f64 {
        self.zeta.get(p)
    }
    pub fn xicheck(&self, p: Point) -> f64 {
        self.xicheck.get(p)
    }
    pub fn xi_grid(&self) -> &Grid<f64> {
        &self.xi
    }
    pub fn eta_grid(&self) -> &Grid<f64> {
        &self.eta
    }
    pub fn zeta_grid(&self) -> &Grid<f64> {
        &self.zeta
    }
    pub fn xicheck_grid(&self) -> &Grid<f64> {
        &self.xicheck
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.params.m, self.params.n)
    }

    /// `{η_{i,n}}_{i=1..m}` along the north row.
    pub fn north_row(&self) -> Vec<f64> {
        (1..=self.params.m).map(|i| self.eta.at(i, self.params.n)).collect()
    }

    /// `{ζ_{m,j}}_{j=1..n}` along the east column.
    pub fn east_column(&self) -> Vec<f64> {
        (1..=self.params.n).map(|j| self.zeta.at(self.params.m, j)).collect()
    }

    /// Vertex weights over `{0..m} x {0..n}` in the convention where a vertex
    /// carries the weight of the edge or site that enters it: `η_{i,0}` on the
    /// south axis, `ζ_{0,j}` on the west axis, `ξ` in the bulk. The origin
    /// carries 1; it is never counted by end-included partition functions.
    pub fn vertex_weights(&self) -> Grid<f64> {
        let (m, n) = self.dims();
        let mut w = Grid::new(Point::ORIGIN, Point::new(m, n), 1.0);
        for i in 1..=m {
            *w.at_mut(i, 0) = self.eta.at(i, 0);
        }
        for j in 1..=n {
            *w.at_mut(0, j) = self.zeta.at(0, j);
            for i in 1..=m {
                *w.at_mut(i, j) = self.xi.at(i, j);
            }
        }
        w
    }

    /// Writes the system as CSV: a parameter header, then one line per array
    /// entry in row-major order (`xi`, `eta`, `zeta`, `xicheck`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let p = &self.params;
        writeln!(w, "lambda,rho,m,n,seed")?;
        writeln!(w, "{},{},{},{},{}", p.lambda.get(), p.rho.get(), p.m, p.n, p.seed)?;
        writeln!(w, "array,i,j,value")?;
        for (name, grid) in [("xi", &self.xi), ("eta", &self.eta), ("zeta", &self.zeta), ("xicheck", &self.xicheck)] {
            for (pt, v) in grid.points().zip(grid.values()) {
                writeln!(w, "{name},{},{},{v}", pt.i, pt.j)?;
            }
        }
        Ok(())
    }

    /// Reads a dump written by [`GammaSystem::write_csv`]. The induced arrays
    /// are recomputed from the inputs and compared against the file.
    pub fn read_csv<R: BufRead>(r: R) -> Result<GammaSystem> {
        let bad = |msg: String| Error::Parse(msg);
        let mut lines = r.lines().map(|l| l.map_err(|e| Error::Parse(e.to_string())));
        if take_line(&mut lines, "parameter header")?.trim() != "lambda,rho,m,n,seed" {
            return Err(bad("missing parameter header".into()));
        }
        let head = take_line(&mut lines, "parameter line")?;
        let f: Vec<&str> = head.trim().split(',').collect();
        if f.len() != 5 {
            return Err(bad(format!("bad parameter line: {head}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("{s}: {e}")));
        let params = ModelParams::new(num(f[0])?, num(f[1])?, int(f[2])? as usize, int(f[3])? as usize, int(f[4])?)?;
        if take_line(&mut lines, "array header")?.trim() != "array,i,j,value" {
            return Err(bad("missing array header".into()));
        }
        let (m, n) = (params.m, params.n);
        let mut xi = Grid::new(Point::new(1, 1), Point::new(m, n), f64::NAN);
        let mut eta = Grid::new(Point::new(1, 0), Point::new(m, n), f64::NAN);
        let mut zeta = Grid::new(Point::new(0, 1), Point::new(m, n), f64::NAN);
        let mut xicheck = Grid::new(Point::ORIGIN, Point::new(m - 1, n - 1), f64::NAN);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 4 {
                return Err(bad(format!("bad array line: {line}")));
            }
            let p = Point::new(int(f[1])? as usize, int(f[2])? as usize);
            let grid = match f[0] {
                "xi" => &mut xi,
                "eta" => &mut eta,
                "zeta" => &mut zeta,
                "xicheck" => &mut xicheck,
                other => return Err(bad(format!("unknown array {other}"))),
            };
            if !grid.contains(p) {
                return Err(bad(format!("{} index {p} out of range", f[0])));
            }
            grid.set(p, num(f[3])?);
        }
        let eta0: Vec<f64> = (1..=m).map(|i| eta.at(i, 0)).collect();
        let zeta0: Vec<f64> = (1..=n).map(|j| zeta.at(0, j)).collect();
        let sys = GammaSystem::from_inputs(params, &eta0, &zeta0, xi)?;
        let same = |a: &Grid<f64>, b: &Grid<f64>| a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits());
        if !same(&sys.eta, &eta) || !same(&sys.zeta, &zeta) || !same(&sys.xicheck, &xicheck) {
            return Err(bad("induced arrays disagree with north-east induction".into()));
        }
        Ok(sys)
    }
}

fn take_line(lines: &mut impl Iterator<Item = Result<String>>, what: &str) -> Result<String> {
    lines.next().unwrap_or_else(|| Err(Error::Parse(format!("missing {what}"))))
}

/// Bulk `ξ ~ Gamma(ρ)` over `{1..m} x {1..n}`, one stream per row.
fn draw_bulk(rho: Shape, m: usize, n: usize, rng: &RandomStream) -> Grid<f64> {
    let g = GammaSampler::new(rho);
    let mut xi = Grid::new(Point::new(1, 1), Point::new(m, n), 0.0);
    for j in 1..=n {
        let mut s = rng.substream(&[tag::BULK, j as u64]);
        for i in 1..=m {
            *xi.at_mut(i, j) = g.sample(&mut s);
        }
    }
    xi
}

fn check_budget(params: &ModelParams, budget: usize) -> Result<()> {
    let need = params.memory_bytes();
    if need > budget {
        return Err(Error::Resource(format!(
            "a {}x{} system needs {need} bytes, budget is {budget}",
            params.m, params.n
        )));
    }
    Ok(())
}

/// Draws `η_{i,0} ~ Gamma(λ)`, `ζ_{0,j} ~ Gamma(ρ-λ)`, `ξ ~ Gamma(ρ)`
/// independently and completes the system by north-east induction.
///
/// Boundary draws use one stream per site and the bulk one stream per row,
/// all split from `rng`, so the result depends only on `rng`'s key.
pub fn build_gamma_system(params: ModelParams, rng: &RandomStream) -> Result<GammaSystem> {
    build_gamma_system_with_budget(params, rng, DEFAULT_MEMORY_BUDGET)
}

pub fn build_gamma_system_with_budget(params: ModelParams, rng: &RandomStream, budget: usize) -> Result<GammaSystem> {
    check_budget(&params, budget)?;
    let ge = GammaSampler::new(params.lambda);
    let gz = GammaSampler::new(params.rho_minus_lambda());
    let eta0: Vec<f64> = (1..=params.m).map(|i| ge.sample(&mut rng.substream(&[tag::BOUNDARY_ETA, i as u64]))).collect();
    let zeta0: Vec<f64> =
        (1..=params.n).map(|j| gz.sample(&mut rng.substream(&[tag::BOUNDARY_ZETA, j as u64]))).collect();
    let xi = draw_bulk(params.rho, params.m, params.n, rng);
    GammaSystem::from_inputs(params, &eta0, &zeta0, xi)
}

/// Gamma systems for several `λ` sharing the bulk `ξ` and the boundary
/// uniforms: `η^λ_{i,0} = F_λ^{-1}(U_{i,0})` and
/// `ζ^λ_{0,j} = F_{ρ-λ}^{-1}(U_{0,j})`. Edge weights are then ordered,
/// `η` increasing and `ζ` decreasing in `λ`, at every site.
pub fn build_coupled_systems(
    lambdas: &[Shape],
    rho: Shape,
    m: usize,
    n: usize,
    seed: u64,
    rng: &RandomStream,
) -> Result<Vec<GammaSystem>> {
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(precondition("lambdas must be sorted ascending"));
    }
    let params: Vec<ModelParams> =
        lambdas.iter().map(|l| ModelParams::new(l.get(), rho.get(), m, n, seed)).collect::<Result<_>>()?;
    for p in &params {
        check_budget(p, DEFAULT_MEMORY_BUDGET)?;
    }
    let u_eta: Vec<f64> = (1..=m).map(|i| rng.substream(&[tag::BOUNDARY_ETA, i as u64]).uniform()).collect();
    let u_zeta: Vec<f64> = (1..=n).map(|j| rng.substream(&[tag::BOUNDARY_ZETA, j as u64]).uniform()).collect();
    let xi = draw_bulk(rho, m, n, rng);
    params
        .into_iter()
        .map(|p| {
            let eta0 = u_eta.iter().map(|&u| gamma_quantile(p.lambda, u)).collect::<Result<Vec<_>>>()?;
            let zeta0 = u_zeta.iter().map(|&u| gamma_quantile(p.rho_minus_lambda(), u)).collect::<Result<Vec<_>>>()?;
            GammaSystem::from_inputs(p, &eta0, &zeta0, xi.clone())
        })
        .collect()
}

/// Which north-east equation a residual belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NeEquation {
    Eta,
    Zeta,
    Xicheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeReport {
    pub ok: bool,
    pub max_residual: f64,
    /// North-east corner of the worst unit square.
    pub worst_site: Option<Point>,
    pub worst_equation: Option<NeEquation>,
}

/// Checks the three north-east equations at every unit square to relative
/// tolerance `tol`.
pub fn verify_ne(system: &GammaSystem, tol: f64) -> NeReport {
    let (m, n) = system.dims();
    let mut worst = (0.0_f64, None, None);
    let mut note = |r: f64, p: Point, e: NeEquation| {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > worst.0 || (worst.1.is_none() && r >= worst.0) {
            worst = (r, Some(p), Some(e));
        }
    };
    for j in 1..=n {
        for i in 1..=m {
            let x = Point::new(i, j);
            let xi = system.xi.at(i, j);
            let es = system.eta.at(i, j - 1);
            let zw = system.zeta.at(i - 1, j);
            let s = es + zw;
            let eta = system.eta.at(i, j);
            let zeta = system.zeta.at(i, j);
            let xc = system.xicheck.at(i - 1, j - 1);
            let rel = |got: f64, want: f64| if got > 0.0 && got.is_finite() { (got - want).abs() / got.abs() } else { f64::INFINITY };
            note(rel(eta, xi * es / s), x, NeEquation::Eta);
            note(rel(zeta, xi * zw / s), x, NeEquation::Zeta);
            note(rel(xc, s), x, NeEquation::Xicheck);
        }
    }
    NeReport { ok: worst.0 <= tol, max_residual: worst.0, worst_site: worst.1, worst_equation: worst.2 }
}
