//! Closed-form free energies of the log-gamma polymer and the tilt/velocity
//! duality between the point-to-point and tilted point-to-line versions.

use crate::error::{domain, Result};
use crate::specfun::{digamma, trigamma, Shape};
use serde::{Deserialize, Serialize};

/// A direction `(u, 1-u)` in the open simplex.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Velocity(f64);

impl Velocity {
    pub fn new(u: f64) -> Result<Velocity> {
        if u > 0.0 && u < 1.0 {
            Ok(Velocity(u))
        } else {
            Err(domain(format!("velocity must lie in (0,1), got {u}")))
        }
    }

    pub fn u(self) -> f64 {
        self.0
    }

    pub fn as_pair(self) -> (f64, f64) {
        (self.0, 1.0 - self.0)
    }
}

impl TryFrom<f64> for Velocity {
    type Error = crate::Error;
    fn try_from(u: f64) -> Result<Velocity> {
        Velocity::new(u)
    }
}

impl From<Velocity> for f64 {
    fn from(v: Velocity) -> f64 {
        v.0
    }
}

/// A tilt vector `h = (h1, h2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tilt {
    pub h1: f64,
    pub h2: f64,
}

impl Tilt {
    pub fn new(h1: f64, h2: f64) -> Result<Tilt> {
        if h1.is_finite() && h2.is_finite() {
            Ok(Tilt { h1, h2 })
        } else {
            Err(domain(format!("tilt must be finite, got ({h1}, {h2})")))
        }
    }

    /// `h · v` for the velocity `(u, 1-u)`.
    pub fn dot(self, v: Velocity) -> f64 {
        self.h1 * v.u() + self.h2 * (1.0 - v.u())
    }

    pub fn as_pair(self) -> (f64, f64) {
        (self.h1, self.h2)
    }
}

/// Relative distance from either end of `(0, ρ)` used as the bisection bracket.
const BRACKET_EPS: f64 = 1e-12;

/// Bisection of an increasing function on `(lo, hi)` down to adjacent doubles.
fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn theta_bracket(rho: f64) -> (f64, f64) {
    (BRACKET_EPS * rho, rho - BRACKET_EPS * rho)
}

/// The stationarity residual `-u Ψ1(θ) + (1-u) Ψ1(ρ-θ)`, increasing in `θ`.
pub fn theta_residual(u: Velocity, rho: Shape, theta: f64) -> f64 {
    -u.u() * trigamma(theta) + (1.0 - u.u()) * trigamma(rho.get() - theta)
}

/// The unique `θ ∈ (0, ρ)` with `-u Ψ1(θ) + (1-u) Ψ1(ρ-θ) = 0`.
pub fn theta_of_u(u: Velocity, rho: Shape) -> Shape {
    let (lo, hi) = theta_bracket(rho.get());
    let t = bisect_increasing(|t| theta_residual(u, rho, t), lo, hi);
    Shape::new(t).expect("bisection stays inside (0, rho)")
}

/// The velocity `u = Ψ1(ρ-θ) / (Ψ1(θ) + Ψ1(ρ-θ))` whose `θ(u)` is `θ`.
fn u_of_theta(theta: f64, rho: f64) -> f64 {
    let (a, b) = (trigamma(theta), trigamma(rho - theta));
    b / (a + b)
}

/// The characteristic direction of the stationary model with parameters
/// `(λ, ρ)`: `(Ψ1(ρ-λ), Ψ1(λ)) / (Ψ1(λ) + Ψ1(ρ-λ))`.
pub fn char_direction(lambda: Shape, rho: Shape) -> Result<Velocity> {
    let (l, r) = (lambda.get(), rho.get());
    if l >= r {
        return Err(domain(format!("need 0 < lambda < rho, got ({l}, {r})")));
    }
    Velocity::new(u_of_theta(l, r))
}

/// `h(u) = (Ψ0(θ(u)), Ψ0(ρ-θ(u)))`.
pub fn tilt_of_u(u: Velocity, rho: Shape) -> Tilt {
    let t = theta_of_u(u, rho).get();
    Tilt { h1: digamma(t), h2: digamma(rho.get() - t) }
}

/// The `θ ∈ (0, ρ)` with `Ψ0(θ) - Ψ0(ρ-θ) = h1 - h2`.
pub fn theta_of_tilt(h: Tilt, rho: Shape) -> f64 {
    let r = rho.get();
    let d = h.h1 - h.h2;
    let (lo, hi) = theta_bracket(r);
    bisect_increasing(|t| digamma(t) - digamma(r - t) - d, lo, hi)
}

/// The velocity `u(h)` maximizing `Λ_p2p(u) + h·u`.
pub fn u_of_tilt(h: Tilt, rho: Shape) -> Result<Velocity> {
    Velocity::new(u_of_theta(theta_of_tilt(h, rho), rho.get()))
}

/// Point-to-point free energy `Λ_p2p(u) = -u Ψ0(θ(u)) - (1-u) Ψ0(ρ-θ(u))`.
pub fn lambda_p2p(u: Velocity, rho: Shape) -> f64 {
    let t = theta_of_u(u, rho).get();
    -u.u() * digamma(t) - (1.0 - u.u()) * digamma(rho.get() - t)
}

/// `Λ_p2p` at an arbitrary vector of `R²_+` with both coordinates positive,
/// extended by homogeneity `Λ(c x) = c Λ(x)`.
pub fn lambda_p2p_vec(x: (f64, f64), rho: Shape) -> Result<f64> {
    if !(x.0 > 0.0 && x.1 > 0.0 && x.0.is_finite() && x.1.is_finite()) {
        return Err(domain(format!("free energy needs an interior direction, got ({}, {})", x.0, x.1)));
    }
    let s = x.0 + x.1;
    Ok(s * lambda_p2p(Velocity::new(x.0 / s)?, rho))
}

/// Tilted point-to-line free energy `Λ_p2ℓ(h) = -Ψ0(ρ - θ(u(h))) + h2`.
pub fn lambda_p2l(h: Tilt, rho: Shape) -> f64 {
    let t = theta_of_tilt(h, rho);
    -digamma(rho.get() - t) + h.h2
}

/// `E log Z_{0,(m,n)} = -m Ψ0(λ) - n Ψ0(ρ-λ)` for the stationary model.
pub fn elogz(m: usize, n: usize, lambda: Shape, rho: Shape) -> Result<f64> {
    let (l, r) = (lambda.get(), rho.get());
    if l >= r {
        return Err(domain(format!("need 0 < lambda < rho, got ({l}, {r})")));
    }
    Ok(-(m as f64) * digamma(l) - (n as f64) * digamma(r - l))
}

/// Minimizer and minimum of `h ↦ Λ_p2ℓ(h) - h·u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityResult {
    /// Representative of the minimizing diagonal class, with `h2 = 0`.
    pub tilt: Tilt,
    pub value: f64,
}

/// Minimizes `Λ_p2ℓ(h) - h·u` numerically. The objective is constant along
/// diagonals `h + (c, c)`, so it is minimized over `t = h1 - h2` with `h2 = 0`
/// by golden-section search. The bracket is grown until the derivative
/// `u(t) - u` changes sign across it.
pub fn duality_minimize(u: Velocity, rho: Shape) -> DualityResult {
    let phi = |t: f64| lambda_p2l(Tilt { h1: t, h2: 0.0 }, rho) - t * u.u();
    let slope = |t: f64| u_of_theta(theta_of_tilt(Tilt { h1: t, h2: 0.0 }, rho), rho.get()) - u.u();
    let (mut a, mut b) = (-1.0_f64, 1.0_f64);
    while slope(a) > 0.0 {
        a *= 2.0;
    }
    while slope(b) < 0.0 {
        b *= 2.0;
    }
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = phi(d);
        }
    }
    let t = 0.5 * (a + b);
    DualityResult { tilt: Tilt { h1: t, h2: 0.0 }, value: phi(t) }
}

/// Velocity rate function `I_h(v) = Λ_p2ℓ(h) - h·v - Λ_p2p(v)`: nonnegative,
/// zero exactly at `v = u(h)`.
pub fn rate_function(h: Tilt, v: Velocity, rho: Shape) -> f64 {
    lambda_p2l(h, rho) - h.dot(v) - lambda_p2p(v, rho)
}

/// One row of the free-energy table: `(u, θ(u), h(u), Λ_p2p(u), duality value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergyRow {
    pub u: f64,
    pub theta: f64,
    pub h1: f64,
    pub h2: f64,
    pub lambda_p2p: f64,
    pub duality_value: f64,
}

pub fn free_energy_row(u: Velocity, rho: Shape) -> FreeEnergyRow {
    let h = tilt_of_u(u, rho);
    FreeEnergyRow {
        u: u.u(),
        theta: theta_of_u(u, rho).get(),
        h1: h.h1,
        h2: h.h2,
        lambda_p2p: lambda_p2p(u, rho),
        duality_value: duality_minimize(u, rho).value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sh(x: f64) -> Shape {
        Shape::new(x).unwrap()
    }

    /// Euler's constant from the harmonic series with its asymptotic correction.
    fn euler_gamma_oracle() -> f64 {
        let n = 1_000_000u64;
        let h: f64 = (1..=n).rev().map(|k| 1.0 / k as f64).sum();
        let nf = n as f64;
        h - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * nf * nf)
    }

    const EULER_GAMMA: f64 = 0.5772156649015329;

    #[test]
    fn euler_constant_frozen() {
        assert!((euler_gamma_oracle() - EULER_GAMMA).abs() < 1e-12);
    }

    #[test]
    fn velocity_domain() {
        assert!(Velocity::new(0.0).is_err());
        assert!(Velocity::new(1.0).is_err());
        assert!(Velocity::new(f64::NAN).is_err());
        assert!(Tilt::new(f64::INFINITY, 0.0).is_err());
        assert!(lambda_p2p_vec((0.0, 1.0), sh(2.0)).is_err());
    }

    #[test]
    fn theta_at_half_is_midpoint() {
        for r in [0.3, 1.0, 2.0, 7.5] {
            let t = theta_of_u(Velocity::new(0.5).unwrap(), sh(r)).get();
            assert!((t - r / 2.0).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn theta_residual_small() {
        for r in [0.5, 1.5, 2.0, 4.0] {
            for k in 1..10 {
                let u = Velocity::new(k as f64 / 10.0).unwrap();
                let t = theta_of_u(u, sh(r)).get();
                let scale = u.u() * trigamma(t) + (1.0 - u.u()) * trigamma(r - t);
                assert!(theta_residual(u, sh(r), t).abs() < 1e-12 * scale.max(1.0), "u={} rho={r}", u.u());
            }
        }
    }

    #[test]
    fn theta_strictly_increasing() {
        let r = sh(2.5);
        let mut prev = 0.0;
        for k in 1..200 {
            let t = theta_of_u(Velocity::new(k as f64 / 200.0).unwrap(), r).get();
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn char_direction_round_trip() {
        for r in [0.7, 1.5, 2.0, 4.0] {
            for k in 1..10 {
                let l = r * k as f64 / 10.0;
                let u = char_direction(sh(l), sh(r)).unwrap();
                assert!((theta_of_u(u, sh(r)).get() - l).abs() < 1e-10);
            }
        }
        assert!(char_direction(sh(2.0), sh(2.0)).is_err());
    }

    #[test]
    fn char_direction_examples() {
        assert!((char_direction(sh(1.0), sh(2.0)).unwrap().u() - 0.5).abs() < 1e-15);
        assert!((char_direction(sh(1.7), sh(3.4)).unwrap().u() - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for k in 1..50 {
            let u = char_direction(sh(3.0 * k as f64 / 50.0), sh(3.0)).unwrap().u();
            assert!(u > prev);
            prev = u;
        }
    }

    #[test]
    fn tilt_at_half() {
        let h = tilt_of_u(Velocity::new(0.5).unwrap(), sh(2.0));
        assert!((h.h1 + EULER_GAMMA).abs() < 1e-12);
        assert!((h.h2 + EULER_GAMMA).abs() < 1e-12);
    }

    #[test]
    fn free_energy_examples() {
        let half = Velocity::new(0.5).unwrap();
        assert!((lambda_p2p(half, sh(2.0)) - EULER_GAMMA).abs() < 1e-12);
        assert!((elogz(1, 1, sh(1.0), sh(2.0)).unwrap() - 2.0 * EULER_GAMMA).abs() < 1e-12);
        assert!(elogz(1, 1, sh(3.0), sh(2.0)).is_err());
        let v = lambda_p2p_vec((3.0, 3.0), sh(2.0)).unwrap();
        assert!((v - 6.0 * EULER_GAMMA).abs() < 1e-11);
    }

    #[test]
    fn p2l_vanishes_at_tilt_of_u() {
        for r in [1.5, 2.0, 4.0] {
            for k in 1..=9 {
                let u = Velocity::new(k as f64 / 10.0).unwrap();
                assert!(lambda_p2l(tilt_of_u(u, sh(r)), sh(r)).abs() < 1e-12, "u={} rho={r}", u.u());
            }
        }
    }

    #[test]
    fn duality_matches_closed_form() {
        for r in [1.5, 2.0, 4.0] {
            for k in 1..=9 {
                let u = Velocity::new(k as f64 / 10.0).unwrap();
                let res = duality_minimize(u, sh(r));
                assert!((res.value - lambda_p2p(u, sh(r))).abs() < 1e-8);
                let h = tilt_of_u(u, sh(r));
                assert!(((res.tilt.h1 - res.tilt.h2) - (h.h1 - h.h2)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rate_function_zero_only_at_u_of_h() {
        let r = sh(2.0);
        assert!(rate_function(Tilt::new(0.0, 0.0).unwrap(), Velocity::new(0.5).unwrap(), r).abs() < 1e-12);
        for h in [Tilt::new(0.3, -0.2).unwrap(), Tilt::new(-1.0, 0.5).unwrap()] {
            let star = u_of_tilt(h, r).unwrap();
            assert!(rate_function(h, star, r).abs() < 1e-12);
            for k in 1..50 {
                let v = Velocity::new(k as f64 / 50.0).unwrap();
                let i = rate_function(h, v, r);
                assert!(i >= -1e-12);
                if (v.u() - star.u()).abs() > 1e-3 {
                    assert!(i > 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn tilt_round_trip(u in 0.01f64..0.99, r in 0.3f64..6.0) {
            let v = Velocity::new(u).unwrap();
            let back = u_of_tilt(tilt_of_u(v, sh(r)), sh(r)).unwrap();
            prop_assert!((back.u() - u).abs() < 1e-10);
        }

        #[test]
        fn u_of_tilt_diagonal_invariance(h1 in -3.0f64..3.0, h2 in -3.0f64..3.0, c in -5.0f64..5.0, r in 0.5f64..5.0) {
            let a = u_of_tilt(Tilt::new(h1, h2).unwrap(), sh(r)).unwrap();
            let b = u_of_tilt(Tilt::new(h1 + c, h2 + c).unwrap(), sh(r)).unwrap();
            prop_assert!((a.u() - b.u()).abs() < 1e-12);
        }

        #[test]
        fn rate_nonnegative(h1 in -2.0f64..2.0, h2 in -2.0f64..2.0, v in 0.02f64..0.98, r in 0.5f64..5.0) {
            let i = rate_function(Tilt::new(h1, h2).unwrap(), Velocity::new(v).unwrap(), sh(r));
            prop_assert!(i >= -1e-10);
        }

        #[test]
        fn p2p_homogeneous(x in 0.1f64..5.0, y in 0.1f64..5.0, c in 0.1f64..10.0) {
            let a = lambda_p2p_vec((c * x, c * y), sh(2.0)).unwrap();
            let b = lambda_p2p_vec((x, y), sh(2.0)).unwrap();
            prop_assert!((a - c * b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }
}
