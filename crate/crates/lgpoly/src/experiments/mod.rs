//! Experiment configs and their runs, grouped by topic.

pub mod chain;
pub mod free;
pub mod gamma;
pub mod oracle;
pub mod paths;

use loggamma::rng::{tag, RandomStream};
use loggamma::specfun::GammaSampler;
use loggamma::{Grid, Point, Shape};

/// I.i.d. Gamma(ρ) weights on `{0..m}×{0..n}`, one substream per column.
pub(crate) fn iid_gamma_weights(rho: Shape, m: usize, n: usize, rng: &RandomStream) -> Grid<f64> {
    let sampler = GammaSampler::new(rho);
    let mut w = Grid::new(Point::ORIGIN, Point::new(m, n), 0.0);
    for i in 0..=m {
        let mut s = rng.substream(&[tag::BULK, i as u64]);
        for j in 0..=n {
            *w.at_mut(i, j) = sampler.sample(&mut s);
        }
    }
    w
}

/// Substream for environment `k`.
pub(crate) fn env_stream(seed: u64, k: usize) -> RandomStream {
    RandomStream::new(seed).substream(&[tag::REPLICATE, k as u64])
}

/// Whether each entry is strictly below its predecessor.
pub(crate) fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Accepts a single number or a list for list-valued knobs.
pub(crate) fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match serde::Deserialize::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}
