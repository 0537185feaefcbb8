//! Exact lattice constructions and Monte Carlo verification tools for the
//! 1+1 dimensional log-gamma directed polymer.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`] and [`rng`]: special functions, gamma sampling and reproducible
//!   random streams.
//! * [`stats`]: Kolmogorov–Smirnov tests, moments, autocorrelation, slope fits.
//! * [`gamma_system`]: stationary weight systems built by north-east induction.
//! * [`partition`]: log-domain partition functions under both weight conventions.
//! * [`busemann`]: finite-horizon Busemann estimates and correctors.
//! * [`polymer_paths`]: polymer path sampling, the polymer RWRE, last-passage
//!   percolation and the fluctuation and overlap experiments.
//! * [`env_chain`]: the environment seen from the walk under `μ^{α,β}`.
//! * [`free_energy`]: closed-form free energies and the tilt/velocity duality.

pub mod busemann;
pub mod env_chain;
pub mod error;
pub mod free_energy;
pub mod gamma_system;
pub mod lattice;
pub mod partition;
pub mod polymer_paths;
pub mod rng;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{Grid, Point, Step};
pub use rng::RandomStream;
pub use specfun::Shape;
