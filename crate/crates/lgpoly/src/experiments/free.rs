//! Closed-form free energies and their duality.

use super::one_or_many;
use crate::catalog::Experiment;
use crate::{row, Check, Outcome, Table};
use loggamma::free_energy::{
    char_direction, duality_minimize, lambda_p2l, lambda_p2p, theta_of_u, tilt_of_u, u_of_tilt, Velocity,
};
use loggamma::{Result, Shape};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// `k/(grid+1)` for `k = 1..=grid`.
fn velocity_grid(grid: usize) -> Result<Vec<Velocity>> {
    (1..=grid).map(|k| Velocity::new(k as f64 / (grid + 1) as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualityConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub rho: Vec<f64>,
    /// Number of interior velocities `k/(grid+1)`.
    pub grid: usize,
    pub duality_tolerance: f64,
    pub p2l_tolerance: f64,
}

impl Default for DualityConfig {
    fn default() -> Self {
        DualityConfig { rho: vec![1.5, 2.0, 4.0], grid: 9, duality_tolerance: 1e-8, p2l_tolerance: 1e-12 }
    }
}

impl Experiment for DualityConfig {
    const NAME: &'static str = "duality";
    const CLAIM: &'static str = "min_h {Lambda_p2l(h) - h.u} = Lambda_p2p(u), and h(u) kills the point-to-line free energy";
    const CRITERION: Option<u8> = Some(8);

    fn run(&self, _seed: u64) -> Result<Outcome> {
        let mut table = Table::new(&["rho", "u", "lambda_p2p", "duality_value", "abs_diff", "lambda_p2l_at_h_u"]);
        let (mut worst, mut worst_p2l) = (0.0_f64, 0.0_f64);
        for &r in &self.rho {
            let rho = Shape::new(r)?;
            for u in velocity_grid(self.grid)? {
                let p2p = lambda_p2p(u, rho);
                let dual = duality_minimize(u, rho).value;
                let diff = (dual - p2p).abs();
                let at_h = lambda_p2l(tilt_of_u(u, rho), rho);
                worst = worst.max(diff);
                worst_p2l = worst_p2l.max(at_h.abs());
                table.push(row![r, u.u(), p2p, dual, diff, at_h]);
            }
        }
        Ok(Outcome {
            checks: vec![
                Check::below("max |duality value - Lambda_p2p|", worst, self.duality_tolerance),
                Check::below("max |Lambda_p2l(h(u))|", worst_p2l, self.p2l_tolerance),
            ],
            stats: json!({ "max_abs_diff": worst, "max_abs_p2l_at_h_u": worst_p2l }),
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundTripConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub rho: Vec<f64>,
    /// Number of interior points in each parameter grid.
    pub grid: usize,
    pub tolerance: f64,
}

impl Default for RoundTripConfig {
    fn default() -> Self {
        RoundTripConfig { rho: vec![0.5, 1.0, 1.5, 2.0, 4.0, 10.0], grid: 19, tolerance: 1e-10 }
    }
}

impl Experiment for RoundTripConfig {
    const NAME: &'static str = "round-trip";
    const CLAIM: &'static str = "theta(u_{lambda,rho}) = lambda and u(h(u)) = u";
    const CRITERION: Option<u8> = Some(9);

    fn run(&self, _seed: u64) -> Result<Outcome> {
        let mut table = Table::new(&["rho", "kind", "input", "round_trip", "abs_error"]);
        let (mut theta_err, mut u_err) = (0.0_f64, 0.0_f64);
        for &r in &self.rho {
            let rho = Shape::new(r)?;
            for k in 1..=self.grid {
                let lambda = Shape::new(r * k as f64 / (self.grid + 1) as f64)?;
                let back = theta_of_u(char_direction(lambda, rho)?, rho).get();
                let e = (back - lambda.get()).abs();
                theta_err = theta_err.max(e);
                table.push(row![r, "theta", lambda.get(), back, e]);
            }
            for u in velocity_grid(self.grid)? {
                let back = u_of_tilt(tilt_of_u(u, rho), rho)?.u();
                let e = (back - u.u()).abs();
                u_err = u_err.max(e);
                table.push(row![r, "u", u.u(), back, e]);
            }
        }
        Ok(Outcome {
            checks: vec![
                Check::below("max |theta(u_{lambda,rho}) - lambda|", theta_err, self.tolerance),
                Check::below("max |u(h(u)) - u|", u_err, self.tolerance),
            ],
            stats: json!({ "max_theta_error": theta_err, "max_u_error": u_err }),
            table,
        })
    }
}
