//! Signal-dependent Gaussian sensor noise: `n(x) ~ N(0, sigma1^2 * x + sigma2^2)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::BayerRaw;

/// Noise variance at intensity `x`.
#[inline]
pub fn noise_variance(x: f64, sigma1: f64, sigma2: f64) -> f64 {
    sigma1 * sigma1 * x + sigma2 * sigma2
}

/// Adds independent heteroscedastic noise to every sensel and clips to `[0, 1]`.
/// Draws are taken in raster order, one standard normal per sensel.
pub fn add_hetero_noise<R: Rng + ?Sized>(raw: &BayerRaw, sigma1: f64, sigma2: f64, rng: &mut R) -> Result<BayerRaw> {
    if !(sigma1 >= 0.0 && sigma2 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise sigmas must be non-negative, got {sigma1} and {sigma2}"
        )));
    }
    if sigma1 == 0.0 && sigma2 == 0.0 {
        return Ok(raw.clone());
    }
    let data = raw
        .data()
        .iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(rng);
            (x + noise_variance(x, sigma1, sigma2).sqrt() * z).clamp(0.0, 1.0)
        })
        .collect();
    Ok(BayerRaw::from_parts(raw.height(), raw.width(), data, raw.pattern()))
}
