//! Special functions and samplers: log-gamma, digamma, trigamma, the gamma
//! distribution (sampling, CDF, quantile) and log-domain addition.

use crate::error::{domain, Result};
use crate::rng::RandomStream;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A gamma shape parameter: positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Shape(f64);

impl Shape {
    pub fn new(value: f64) -> Result<Shape> {
        if value > 0.0 && value.is_finite() {
            Ok(Shape(value))
        } else {
            Err(domain(format!("gamma shape must be positive and finite, got {value}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Shape {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Shape> {
        Shape::new(v)
    }
}

impl From<Shape> for f64 {
    fn from(s: Shape) -> f64 {
        s.0
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const ASYMPTOTIC_FROM: f64 = 10.0;

/// Shift `x` up by whole units until it reaches the asymptotic range.
/// Returns the shifted argument and the number of unit shifts.
#[inline]
fn shift_up(x: f64) -> (f64, u32) {
    let mut z = x;
    let mut k = 0;
    while z < ASYMPTOTIC_FROM {
        z += 1.0;
        k += 1;
    }
    (z, k)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let (z, k) = shift_up(x);
    // ln Γ(x) = ln Γ(x+k) - ln(x (x+1) ... (x+k-1))
    let mut prod = 1.0;
    for i in 0..k {
        prod *= x + i as f64;
    }
    let r = 1.0 / (z * z);
    let series = (1.0 / 12.0
        + r * (-1.0 / 360.0
            + r * (1.0 / 1260.0
                + r * (-1.0 / 1680.0 + r * (1.0 / 1188.0 + r * (-691.0 / 360_360.0 + r / 156.0))))))
        / z;
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series - prod.ln()
}

/// Digamma `Ψ0(x)` for `x > 0`.
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let (z, k) = shift_up(x);
    let mut acc = 0.0;
    // Sum the small terms first.
    for i in (0..k).rev() {
        acc += 1.0 / (x + i as f64);
    }
    let r = 1.0 / (z * z);
    let tail = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32_760.0 - r / 12.0))))));
    z.ln() - 0.5 / z - tail - acc
}

/// Trigamma `Ψ1(x)` for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let (z, k) = shift_up(x);
    let mut acc = 0.0;
    for i in (0..k).rev() {
        let y = x + i as f64;
        acc += 1.0 / (y * y);
    }
    let r = 1.0 / (z * z);
    let tail = (1.0 / 6.0
        - r * (1.0 / 30.0
            - r * (1.0 / 42.0 - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))))
        * r
        / z;
    1.0 / z + 0.5 * r + tail + acc
}

/// `Ψ0` (order 0) or `Ψ1` (order 1).
pub fn polygamma(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("polygamma needs a positive finite argument, got {x}")));
    }
    match order {
        0 => Ok(digamma(x)),
        1 => Ok(trigamma(x)),
        _ => Err(crate::Error::Unsupported(format!("polygamma of order {order}"))),
    }
}

/// Density of Gamma(shape) at `x`.
pub fn gamma_pdf(shape: Shape, x: f64) -> f64 {
    let a = shape.get();
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match a.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0,
            _ => 0.0,
        };
    }
    ((a - 1.0) * x.ln() - x - ln_gamma(a)).exp()
}

const CF_TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// `x^a e^{-x} / Γ(a)`, the common prefactor of both incomplete-gamma expansions.
fn incomplete_prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Lower regularized incomplete gamma by its power series (good for x < a+1).
fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * incomplete_prefactor(a, x)
}

/// Upper regularized incomplete gamma by the modified Lentz continued fraction
/// (good for x >= a+1).
fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * incomplete_prefactor(a, x)
}

/// Gamma(shape) CDF, i.e. the lower regularized incomplete gamma `P(shape, x)`.
pub fn gamma_cdf(shape: Shape, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("gamma_cdf needs x >= 0, got {x}")));
    }
    Ok(gamma_cdf_unchecked(shape.get(), x))
}

pub(crate) fn gamma_cdf_unchecked(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else if x < a + 1.0 {
        lower_series(a, x).min(1.0)
    } else {
        (1.0 - upper_fraction(a, x)).max(0.0)
    }
}

/// Inverse of [`gamma_cdf`] in its second argument.
///
/// Safeguarded Newton iteration inside a shrinking bisection bracket.
pub fn gamma_quantile(shape: Shape, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("gamma_quantile needs p in (0,1), got {p}")));
    }
    let a = shape.get();
    let cdf = |x: f64| gamma_cdf_unchecked(a, x);

    let mut lo = 0.0_f64;
    let mut hi = a.max(1.0);
    while cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    // Small-p start from P(a,x) ~ x^a / Γ(a+1); otherwise the bracket midpoint.
    let small = (p.ln() + ln_gamma(a + 1.0)) / a;
    let mut x = if small < hi.ln() && small.exp() > lo { small.exp() } else { 0.5 * (lo + hi) };
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }

    for _ in 0..400 {
        let f = cdf(x) - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = gamma_pdf(shape, x);
        let mut next = x - f / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo > 0.0 { (lo * hi).sqrt().clamp(lo, hi) } else { 0.5 * hi };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x || hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(next.max(f64::MIN_POSITIVE));
        }
        x = next;
    }
    Ok(x.max(f64::MIN_POSITIVE))
}

/// Pre-built Gamma(shape) sampler (Marsaglia–Tsang squeeze for shape >= 1,
/// `G_a = G_{a+1} U^{1/a}` for shape < 1).
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    dist: rand_distr::Gamma<f64>,
}

impl GammaSampler {
    pub fn new(shape: Shape) -> GammaSampler {
        let dist = rand_distr::Gamma::new(shape.get(), 1.0).expect("validated shape");
        GammaSampler { dist }
    }

    #[inline]
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        loop {
            // Guard the (astronomically rare) underflow to zero for tiny shapes.
            let g = self.dist.sample(rng);
            if g > 0.0 {
                return g;
            }
        }
    }
}

/// One Gamma(shape) draw with unit scale.
pub fn gamma_sample(shape: Shape, rng: &mut RandomStream) -> f64 {
    GammaSampler::new(shape).sample(rng)
}

/// Sampler of `ln G` for `G ~ Gamma(shape)`, working in the log domain so that
/// tiny shapes cannot underflow: `ln G_a = ln G_{a+1} + ln U / a` for shape < 1.
#[derive(Debug, Clone, Copy)]
pub struct LnGammaSampler {
    base: GammaSampler,
    inv_shape: Option<f64>,
}

impl LnGammaSampler {
    pub fn new(shape: Shape) -> LnGammaSampler {
        let a = shape.get();
        if a >= 1.0 {
            LnGammaSampler { base: GammaSampler::new(shape), inv_shape: None }
        } else {
            let boosted = Shape::new(a + 1.0).expect("a + 1 is a valid shape");
            LnGammaSampler { base: GammaSampler::new(boosted), inv_shape: Some(1.0 / a) }
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        let g = self.base.sample(rng).ln();
        match self.inv_shape {
            None => g,
            Some(inv) => g + rng.uniform().ln() * inv,
        }
    }
}

/// One Exp(rate) draw by inversion, `-ln U / rate`.
pub fn exp_sample(rate: f64, rng: &mut RandomStream) -> f64 {
    -rng.uniform().ln() / rate
}

/// `ln(e^a + e^b)` without overflow; `-∞` is the identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_k}`; `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `π²/6`, handy for tests and docs.
pub const ZETA2: f64 = PI * PI / 6.0;
