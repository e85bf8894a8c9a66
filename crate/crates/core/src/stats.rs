//! Poisson sampling and resampling error bars.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; every
//! independent unit of work (a bootstrap set, an optimizer restart) uses
//! its own ChaCha stream, so results do not depend on scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_SETS: usize = 50;

/// Generator for work unit `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::NegativeMean(mean));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|_| Error::NegativeMean(mean))?;
    Ok(d.sample(rng) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub n_sets: usize,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(n_sets: usize, seed: u64) -> Result<Self> {
        if n_sets < 2 {
            return Err(Error::InvalidParameter(format!(
                "bootstrap needs at least 2 sets, got {n_sets}"
            )));
        }
        Ok(Self { n_sets, seed })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std: f64,
    pub n_sets: usize,
    pub seed: u64,
}

/// Sample standard deviation (`n − 1` denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// One synthetic data set: each cell redrawn as `Poisson(observed)`.
pub fn resample<R: Rng + ?Sized>(counts: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    counts
        .iter()
        .map(|&c| poisson_sample(c, rng).map(|k| k as f64))
        .collect()
}

/// Evaluates `estimator` on the observed counts and on `n_sets` resampled
/// copies; the error is the spread of the resampled values.
pub fn bootstrap<F, E>(counts: &[f64], estimator: F, cfg: &BootstrapConfig) -> Result<EstimateWithError>
where
    F: Fn(&[f64]) -> std::result::Result<f64, E> + Sync,
    E: std::fmt::Display,
{
    let mut out = bootstrap_many(counts, |c| estimator(c).map(|v| vec![v]), cfg)?;
    Ok(out.remove(0))
}

/// [`bootstrap`] for an estimator returning several quantities; each set is
/// evaluated once and every component gets its own spread.
pub fn bootstrap_many<F, E>(counts: &[f64], estimator: F, cfg: &BootstrapConfig) -> Result<Vec<EstimateWithError>>
where
    F: Fn(&[f64]) -> std::result::Result<Vec<f64>, E> + Sync,
    E: std::fmt::Display,
{
    let cfg = BootstrapConfig::new(cfg.n_sets, cfg.seed)?;
    let observed = estimator(counts).map_err(|e| Error::Estimator {
        set: None,
        message: e.to_string(),
    })?;
    let sets: Vec<Vec<f64>> = (0..cfg.n_sets)
        .into_par_iter()
        .map(|set| {
            let mut rng = stream_rng(cfg.seed, set as u64);
            let data = resample(counts, &mut rng)?;
            let v = estimator(&data).map_err(|e| Error::Estimator {
                set: Some(set),
                message: e.to_string(),
            })?;
            if v.len() != observed.len() {
                return Err(Error::Estimator {
                    set: Some(set),
                    message: format!("returned {} values, expected {}", v.len(), observed.len()),
                });
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    Ok(observed
        .iter()
        .enumerate()
        .map(|(k, &value)| {
            let column: Vec<f64> = sets.iter().map(|v| v[k]).collect();
            EstimateWithError {
                value,
                std: sample_std(&column),
                n_sets: cfg.n_sets,
                seed: cfg.seed,
            }
        })
        .collect())
}
