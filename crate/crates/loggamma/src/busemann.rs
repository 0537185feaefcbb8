//! Busemann functions, correctors and their ergodic averages.
//!
//! With start-included weights, `B(x, z) = log Z_{x,v} - log Z_{x+z,v}` for a
//! far terminal `v` in direction `u`. As `v → ∞` along `u`, `e^{-B(x,e1)}`
//! becomes Gamma(θ(u)) and `e^{-B(x,e2)}` Gamma(ρ-θ(u)). A gamma system
//! provides these limits exactly: in the environment `ξ̌`,
//! `e^{-B(x,e1)} = η_{x+e1}` and `e^{-B(x,e2)} = ζ_{x+e2}`.

use crate::error::{precondition, Result};
use crate::free_energy::{char_direction, tilt_of_u, Tilt, Velocity};
use crate::gamma_system::GammaSystem;
use crate::lattice::{Grid, Point, Step};
use crate::partition::{log_partition_within, Direction, WeightConvention};
use crate::specfun::Shape;

/// `x̂_n(u) = (⌊nu⌋, n - ⌊nu⌋)`.
pub fn horizon_point(u: Velocity, n: usize) -> Point {
    let a = (n as f64 * u.u()).floor() as usize;
    Point::new(a, n - a)
}

/// Busemann increments `B(x, e1)` and `B(x, e2)` over a window at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct BusemannField {
    pub u: Velocity,
    /// Horizon `n` of the terminal `x̂_n(u)`; `None` for exact fields.
    pub horizon: Option<usize>,
    b1: Grid<f64>,
    b2: Grid<f64>,
}

impl BusemannField {
    /// Finite-horizon estimates on the window `{0..w.i} × {0..w.j}` from one
    /// backward grid with terminal `x̂_n(u)`, which must dominate `w + (1,1)`.
    pub fn estimate(weights: &Grid<f64>, u: Velocity, window: Point, n: usize) -> Result<BusemannField> {
        let v = horizon_point(u, n);
        if v.i < window.i + 1 || v.j < window.j + 1 {
            return Err(precondition(format!("terminal {v} of horizon {n} does not dominate window {window} + (1,1)")));
        }
        if weights.lo() != Point::ORIGIN {
            return Err(precondition("weights must start at the origin"));
        }
        let z = log_partition_within(weights, v, WeightConvention::StartIncluded, Direction::Backward, Point::ORIGIN)?;
        let mut b1 = Grid::new(Point::ORIGIN, window, 0.0);
        let mut b2 = Grid::new(Point::ORIGIN, window, 0.0);
        for x in b1.points().collect::<Vec<_>>() {
            let lz = z.log_z(x);
            b1.set(x, lz - z.log_z(x.plus(Step::E1)));
            b2.set(x, lz - z.log_z(x.plus(Step::E2)));
        }
        Ok(BusemannField { u, horizon: Some(n), b1, b2 })
    }

    /// The exact Busemann function of the environment `ξ̌` of a gamma system:
    /// `B(x,e1) = -log η_{x+e1}` for `x ∈ {0..m-1}×{0..n}` and
    /// `B(x,e2) = -log ζ_{x+e2}` for `x ∈ {0..m}×{0..n-1}`, in the
    /// characteristic direction of `(λ, ρ)`.
    pub fn exact(system: &GammaSystem) -> Result<BusemannField> {
        let (m, n) = system.dims();
        let u = char_direction(system.params.lambda, system.params.rho)?;
        let mut b1 = Grid::new(Point::ORIGIN, Point::new(m - 1, n), 0.0);
        for j in 0..=n {
            for i in 0..m {
                *b1.at_mut(i, j) = -system.eta(Point::new(i + 1, j)).ln();
            }
        }
        let mut b2 = Grid::new(Point::ORIGIN, Point::new(m, n - 1), 0.0);
        for j in 0..n {
            for i in 0..=m {
                *b2.at_mut(i, j) = -system.zeta(Point::new(i, j + 1)).ln();
            }
        }
        Ok(BusemannField { u, horizon: None, b1, b2 })
    }

    pub fn b(&self, x: Point, z: Step) -> Result<f64> {
        let g = self.grid(z);
        g.try_get(x).ok_or_else(|| precondition(format!("{x} outside the Busemann window {}", g.hi())))
    }

    pub fn grid(&self, z: Step) -> &Grid<f64> {
        match z {
            Step::E1 => &self.b1,
            Step::E2 => &self.b2,
        }
    }

    /// Largest `|B(x,e1) + B(x+e1,e2) - B(x,e2) - B(x+e2,e1)|` over the window.
    pub fn cocycle_defect(&self) -> f64 {
        cocycle_defect(&self.b1, &self.b2)
    }
}

fn cocycle_defect(g1: &Grid<f64>, g2: &Grid<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for x in g1.points() {
        let (a, b, c, d) = (
            g1.try_get(x),
            g2.try_get(x.plus(Step::E1)),
            g2.try_get(x),
            g1.try_get(x.plus(Step::E2)),
        );
        if let (Some(a), Some(b), Some(c), Some(d)) = (a, b, c, d) {
            worst = worst.max(((a + b) - (c + d)).abs());
        }
    }
    worst
}

/// `log Z_{x,v_n} - log Z_{x+z,v_n}` with `v_n = x̂_n(u)`, start-included
/// weights, from a backward grid restricted to the rectangle `x..=v_n`.
pub fn busemann_estimate(weights: &Grid<f64>, u: Velocity, x: Point, z: Step, n: usize) -> Result<f64> {
    let v = horizon_point(u, n);
    let xz = x.plus(z);
    if !xz.le(v) {
        return Err(precondition(format!("terminal {v} of horizon {n} does not dominate {xz}")));
    }
    let g = log_partition_within(weights, v, WeightConvention::StartIncluded, Direction::Backward, x)?;
    Ok(g.log_z(x) - g.log_z(xz))
}

/// The corrector `F(x,z) = -B(x,z) - h(u)·z` and its path integral `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrector {
    pub u: Velocity,
    pub tilt: Tilt,
    f1: Grid<f64>,
    f2: Grid<f64>,
    path: Grid<f64>,
}

impl Corrector {
    pub fn from_busemann(field: &BusemannField, rho: Shape) -> Corrector {
        let tilt = tilt_of_u(field.u, rho);
        let f1 = field.b1.map(|b| -b - tilt.h1);
        let f2 = field.b2.map(|b| -b - tilt.h2);
        let path = path_integral(&f1, &f2);
        Corrector { u: field.u, tilt, f1, f2, path }
    }

    /// The corrector of the exact Busemann function of a gamma system.
    pub fn exact(system: &GammaSystem) -> Result<Corrector> {
        Ok(Corrector::from_busemann(&BusemannField::exact(system)?, system.params.rho))
    }

    pub fn f(&self, x: Point, z: Step) -> Result<f64> {
        let g = self.grid(z);
        g.try_get(x).ok_or_else(|| precondition(format!("{x} outside the corrector window {}", g.hi())))
    }

    pub fn grid(&self, z: Step) -> &Grid<f64> {
        match z {
            Step::E1 => &self.f1,
            Step::E2 => &self.f2,
        }
    }

    /// `f(x)`: the sum of `F` along any up-right path from the origin to `x`.
    pub fn path_integral(&self) -> &Grid<f64> {
        &self.path
    }

    pub fn cocycle_defect(&self) -> f64 {
        cocycle_defect(&self.f1, &self.f2)
    }

    /// `Σ_z p(z) e^{g(ω) + h·z + F(x,z)}` with `p = 1/2` and
    /// `g = -log Y_x + log 2`, which reduces to `(η̂ + ζ̂) / Y_x` for the
    /// increments `η̂ = e^{-B(x,e1)}` and `ζ̂ = e^{-B(x,e2)}`.
    pub fn normalization(&self, x: Point, y: f64) -> Result<f64> {
        let a = (self.tilt.h1 + self.f(x, Step::E1)?).exp();
        let b = (self.tilt.h2 + self.f(x, Step::E2)?).exp();
        Ok((a + b) / y)
    }

    /// Average of `F(·, z)` over its window.
    pub fn window_mean(&self, z: Step) -> f64 {
        let v = self.grid(z).values();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// `max_{|x|_1 = n} |f(x)| / n`.
    pub fn max_level_ratio(&self, n: usize) -> Result<f64> {
        let hi = self.path.hi();
        if n == 0 || hi.i < n || hi.j < n {
            return Err(precondition(format!("level {n} not covered by path integral up to {hi}")));
        }
        Ok((0..=n).map(|i| self.path.at(i, n - i).abs()).fold(0.0, f64::max) / n as f64)
    }
}

/// `f` from the origin: along the first row with `F(·,e1)`, then up each
/// column with `F(·,e2)`.
fn path_integral(f1: &Grid<f64>, f2: &Grid<f64>) -> Grid<f64> {
    let mi = (f1.hi().i + 1).min(f2.hi().i);
    let mj = f2.hi().j + 1;
    let mut f = Grid::new(Point::ORIGIN, Point::new(mi, mj), 0.0);
    for i in 1..=mi {
        let v = f.at(i - 1, 0) + f1.at(i - 1, 0);
        *f.at_mut(i, 0) = v;
    }
    for j in 1..=mj {
        for i in 0..=mi {
            let v = f.at(i, j - 1) + f2.at(i, j - 1);
            *f.at_mut(i, j) = v;
        }
    }
    f
}

/// `n^{-r} Σ_{k_1..k_r = 0}^{n-1} f(k_1 z_1 + … + k_r z_r) / n` for `r`
/// distinct steps.
pub fn corrector_rectangle_average(corrector: &Corrector, steps: &[Step], n: usize) -> Result<f64> {
    let f = corrector.path_integral();
    let nf = n as f64;
    match steps {
        [z] => {
            let last = match z {
                Step::E1 => Point::new(n.saturating_sub(1), 0),
                Step::E2 => Point::new(0, n.saturating_sub(1)),
            };
            if n == 0 || !f.contains(last) {
                return Err(precondition(format!("rectangle of side {n} exceeds the corrector window")));
            }
            let s: f64 = (0..n)
                .map(|k| match z {
                    Step::E1 => f.at(k, 0),
                    Step::E2 => f.at(0, k),
                })
                .sum();
            Ok(s / (nf * nf))
        }
        [a, b] if a != b => {
            if n == 0 || !f.contains(Point::new(n - 1, n - 1)) {
                return Err(precondition(format!("rectangle of side {n} exceeds the corrector window")));
            }
            let mut s = 0.0;
            for j in 0..n {
                for i in 0..n {
                    s += f.at(i, j);
                }
            }
            Ok(s / (nf * nf * nf))
        }
        _ => Err(precondition("rectangle averages take one step or the two distinct steps")),
    }
}

/// The one-dimensional average rearranged as
/// `n^{-1} Σ_{k=0}^{n-1} (1 - (k+1)/n) F(k z, z)`.
pub fn rearranged_line_average(corrector: &Corrector, z: Step, n: usize) -> Result<f64> {
    let nf = n as f64;
    let mut s = 0.0;
    let mut x = Point::ORIGIN;
    for k in 0..n {
        s += (1.0 - (k + 1) as f64 / nf) * corrector.f(x, z)?;
        x = x.plus(z);
    }
    Ok(s / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_system::{build_coupled_systems, build_gamma_system, ModelParams};
    use crate::rng::RandomStream;
    use crate::specfun::{gamma_cdf, GammaSampler};
    use crate::stats::{ks_test_unsorted, KsLevel};

    fn sh(x: f64) -> Shape {
        Shape::new(x).unwrap()
    }

    fn iid_gamma(rho: f64, m: usize, n: usize, seed: u64) -> Grid<f64> {
        let g = GammaSampler::new(sh(rho));
        let mut rng = RandomStream::new(seed);
        let mut w = Grid::new(Point::ORIGIN, Point::new(m, n), 0.0);
        for j in 0..=n {
            for i in 0..=m {
                *w.at_mut(i, j) = g.sample(&mut rng);
            }
        }
        w
    }

    #[test]
    fn horizon_point_floor() {
        assert_eq!(horizon_point(Velocity::new(0.5).unwrap(), 801), Point::new(400, 401));
        assert_eq!(horizon_point(Velocity::new(0.3).unwrap(), 10), Point::new(3, 7));
    }

    #[test]
    fn estimate_requires_domination() {
        let w = iid_gamma(2.0, 20, 20, 1);
        let u = Velocity::new(0.5).unwrap();
        assert!(BusemannField::estimate(&w, u, Point::new(10, 2), 20).is_err());
        assert!(busemann_estimate(&w, u, Point::new(10, 10), Step::E1, 20).is_err());
    }

    #[test]
    fn estimate_agrees_with_pointwise() {
        let w = iid_gamma(2.0, 40, 40, 2);
        let u = Velocity::new(0.5).unwrap();
        let field = BusemannField::estimate(&w, u, Point::new(5, 5), 60).unwrap();
        for x in [Point::ORIGIN, Point::new(3, 1), Point::new(5, 5)] {
            for z in [Step::E1, Step::E2] {
                let a = field.b(x, z).unwrap();
                let b = busemann_estimate(&w, u, x, z, 60).unwrap();
                assert!((a - b).abs() < 1e-9, "{x} {z:?}");
            }
        }
    }

    #[test]
    fn finite_horizon_cocycle_exact() {
        let w = iid_gamma(2.0, 100, 100, 3);
        let field = BusemannField::estimate(&w, Velocity::new(0.4).unwrap(), Point::new(20, 20), 100).unwrap();
        // Telescoping log Z differences of magnitude up to ~100.
        assert!(field.cocycle_defect() < 1e-12);
    }

    #[test]
    fn exact_normalization_is_one() {
        let sys = build_gamma_system(ModelParams::new(0.7, 2.2, 30, 25, 0).unwrap(), &RandomStream::new(4)).unwrap();
        let c = Corrector::exact(&sys).unwrap();
        for j in 0..25 {
            for i in 0..30 {
                let x = Point::new(i, j);
                let v = c.normalization(x, sys.xicheck(x)).unwrap();
                assert!((v - 1.0).abs() < 1e-12, "{x}: {v}");
            }
        }
        assert!(c.cocycle_defect() < 1e-12);
    }

    #[test]
    fn tilt_at_half_for_rho_two() {
        let w = iid_gamma(2.0, 30, 30, 5);
        let field = BusemannField::estimate(&w, Velocity::new(0.5).unwrap(), Point::new(3, 3), 40).unwrap();
        let c = Corrector::from_busemann(&field, sh(2.0));
        assert!((c.tilt.h1 + 0.5772156649015329).abs() < 1e-12);
        assert!((c.tilt.h2 + 0.5772156649015329).abs() < 1e-12);
    }

    #[test]
    fn path_integral_consistent_with_both_routes() {
        let sys = build_gamma_system(ModelParams::new(1.0, 2.0, 12, 9, 0).unwrap(), &RandomStream::new(6)).unwrap();
        let c = Corrector::exact(&sys).unwrap();
        let f = c.path_integral();
        assert_eq!(f.hi(), Point::new(12, 9));
        // Route: up the first column, then along each row.
        for x in f.points() {
            let mut s = 0.0;
            for j in 0..x.j {
                s += c.f(Point::new(0, j), Step::E2).unwrap();
            }
            for i in 0..x.i {
                s += c.f(Point::new(i, x.j), Step::E1).unwrap();
            }
            assert!((s - f.get(x)).abs() < 1e-11, "{x}");
        }
    }

    #[test]
    fn rearrangement_identity() {
        let sys = build_gamma_system(ModelParams::new(1.0, 2.0, 50, 50, 0).unwrap(), &RandomStream::new(7)).unwrap();
        let c = Corrector::exact(&sys).unwrap();
        for z in [Step::E1, Step::E2] {
            for n in [1, 7, 50] {
                let a = corrector_rectangle_average(&c, &[z], n).unwrap();
                let b = rearranged_line_average(&c, z, n).unwrap();
                assert!((a - b).abs() < 1e-12, "{z:?} n={n}");
            }
        }
        assert!(corrector_rectangle_average(&c, &[Step::E1], 52).is_err());
        assert!(corrector_rectangle_average(&c, &[Step::E1, Step::E1], 5).is_err());
        assert!(corrector_rectangle_average(&c, &[Step::E1, Step::E2], 50).is_ok());
    }

    #[test]
    fn zero_corrector_averages_vanish() {
        // u = 1/2 and B = -h·z on a constant field give F ≡ 0.
        let rho = sh(2.0);
        let u = Velocity::new(0.5).unwrap();
        let h = tilt_of_u(u, rho);
        let field = BusemannField {
            u,
            horizon: None,
            b1: Grid::new(Point::ORIGIN, Point::new(10, 10), -h.h1),
            b2: Grid::new(Point::ORIGIN, Point::new(10, 10), -h.h2),
        };
        let c = Corrector::from_busemann(&field, rho);
        assert_eq!(corrector_rectangle_average(&c, &[Step::E1], 10).unwrap(), 0.0);
        assert_eq!(corrector_rectangle_average(&c, &[Step::E2, Step::E1], 10).unwrap(), 0.0);
        assert_eq!(c.max_level_ratio(10).unwrap(), 0.0);
    }

    #[test]
    fn coupled_exact_busemann_ordered() {
        let lambdas = [sh(0.5), sh(1.0), sh(1.5)];
        let systems = build_coupled_systems(&lambdas, sh(2.0), 40, 40, 0, &RandomStream::new(8)).unwrap();
        let fields: Vec<BusemannField> = systems.iter().map(|s| BusemannField::exact(s).unwrap()).collect();
        assert!(fields[0].u < fields[1].u && fields[1].u < fields[2].u);
        for pair in fields.windows(2) {
            for x in pair[0].grid(Step::E1).points() {
                assert!(pair[0].b(x, Step::E1).unwrap() >= pair[1].b(x, Step::E1).unwrap());
            }
            for x in pair[0].grid(Step::E2).points() {
                assert!(pair[0].b(x, Step::E2).unwrap() <= pair[1].b(x, Step::E2).unwrap());
            }
        }
    }

    #[test]
    fn estimated_busemann_marginal_close_to_gamma() {
        // Smaller than the full acceptance run: 200 environments, n = 200.
        let u = Velocity::new(0.5).unwrap();
        let samples: Vec<f64> = (0..200)
            .map(|k| {
                let w = iid_gamma(2.0, 200, 200, 1000 + k);
                (-busemann_estimate(&w, u, Point::ORIGIN, Step::E1, 200).unwrap()).exp()
            })
            .collect();
        let r = ks_test_unsorted(&samples, |x| gamma_cdf(sh(1.0), x).unwrap(), KsLevel::OnePercent).unwrap();
        assert!(r.statistic < 0.15, "D = {}", r.statistic);
    }
}
