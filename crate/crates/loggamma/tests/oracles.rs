//! Values frozen from 40-digit mpmath evaluations and exact path sums.

use loggamma::free_energy::{char_direction, elogz, lambda_p2p, theta_of_u, tilt_of_u, Velocity};
use loggamma::partition::{brute_force_partition, log_partition, ratio_weights, Direction, WeightConvention};
use loggamma::specfun::{digamma, gamma_cdf, gamma_quantile, ln_gamma, polygamma, trigamma};
use loggamma::{Grid, Point, Shape, Step};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

fn shape(x: f64) -> Shape {
    Shape::new(x).unwrap()
}

#[test]
fn digamma_and_trigamma_values() {
    let cases = [
        (0.1, -10.423754940411076795, 101.43329915079275882),
        (0.5, -1.9635100260214234794, 4.9348022005446793094),
        (1.0, -0.57721566490153286061, 1.6449340668482264365),
        (2.5, 0.70315664064524318723, 0.49035775610023486497),
        (10.0, 2.2517525890667211076, 0.10516633568168574612),
        (100.0, 4.6001618527380874002, 0.010050166663333571395),
    ];
    for (x, psi0, psi1) in cases {
        assert!(close(digamma(x), psi0, 1e-12), "digamma({x}) = {}", digamma(x));
        assert!(close(trigamma(x), psi1, 1e-12), "trigamma({x}) = {}", trigamma(x));
    }
    assert!(close(polygamma(1, 1.0).unwrap(), std::f64::consts::PI.powi(2) / 6.0, 1e-15));
    assert!(matches!(polygamma(2, 1.5), Err(loggamma::Error::Unsupported(_))));
}

#[test]
fn ln_gamma_values() {
    for (x, v) in [(0.5, 0.57236494292470008707), (3.7, 1.4280723266653879219), (150.0, 600.00947055532742811)] {
        assert!(close(ln_gamma(x), v, 1e-13), "ln_gamma({x})");
    }
}

#[test]
fn gamma_cdf_and_quantile_values() {
    let cases = [
        (0.75, 0.3, 0.38938912172566100462),
        (2.5, 1.0, 0.15085496391539036377),
        (10.0, 12.0, 0.75760783832948765132),
        (1.0, 2.0, 0.86466471676338730811),
    ];
    for (a, x, p) in cases {
        assert!(close(gamma_cdf(shape(a), x).unwrap(), p, 1e-12), "cdf({a}, {x})");
    }
    assert!(close(gamma_quantile(shape(2.5), 0.9).unwrap(), 4.6181784498905592257, 1e-10));
}

#[test]
fn free_energy_values() {
    let u = char_direction(shape(1.0), shape(2.5)).unwrap();
    assert!(close(u.u(), 0.36236347581739238993, 1e-12));
    let v = Velocity::new(0.3).unwrap();
    let rho = shape(2.0);
    assert!(close(theta_of_u(v, rho).get(), 0.72075440881632202755, 1e-10));
    assert!(close(lambda_p2p(v, rho), 0.48386127396750053380, 1e-10));
    let h = tilt_of_u(v, rho);
    assert!(close(h.h1, -1.1625529883625464169, 1e-10));
    assert!(close(h.h2, -0.19299339636962372675, 1e-10));
    assert!(close(elogz(500, 500, shape(1.0), shape(2.5)).unwrap(), 270.36284546147817002, 1e-12));
}

/// `Y_{i,j} = 1 + i + 2j + ij/3` on `{0..2}²`.
fn fixed_weights() -> Grid<f64> {
    let mut w = Grid::new(Point::ORIGIN, Point::new(2, 2), 0.0);
    for i in 0..=2 {
        for j in 0..=2 {
            *w.at_mut(i, j) = 1.0 + i as f64 + 2.0 * j as f64 + (i * j) as f64 / 3.0;
        }
    }
    w
}

#[test]
fn partition_values_on_a_fixed_grid() {
    let w = fixed_weights();
    let v = Point::new(2, 2);
    let start = -2.2808767324111853326;
    let end = -4.4011402686112763904;
    let f = log_partition(&w, Point::ORIGIN, WeightConvention::StartIncluded, Direction::Forward).unwrap();
    assert!(close(f.log_z(v), start, 1e-14));
    let b = log_partition(&w, v, WeightConvention::EndIncluded, Direction::Backward).unwrap();
    assert!(close(b.log_z(Point::ORIGIN), end, 1e-14));
    let bf = brute_force_partition(&w, Point::ORIGIN, v, WeightConvention::EndIncluded, None).unwrap();
    assert!(close(bf, end, 1e-14));
    let g = log_partition(&w, v, WeightConvention::StartIncluded, Direction::Backward).unwrap();
    assert!(close(ratio_weights(&g, Point::new(1, 0), Step::E1).unwrap(), 0.65640912109807394288, 1e-14));
}
