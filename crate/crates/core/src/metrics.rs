//! Full-reference quality metrics: PSNR and single-scale SSIM.

use crate::error::{Error, Result};
use crate::types::{ColorImage8, LinearImage};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Read-only view over a three-channel image for metric computation.
pub trait Planar {
    /// Peak sample value used when a metric needs a dynamic range.
    const PEAK: f64;

    fn dims(&self) -> (usize, usize);
    fn samples(&self) -> Vec<f64>;
}

impl Planar for LinearImage {
    const PEAK: f64 = 1.0;

    fn dims(&self) -> (usize, usize) {
        (self.height(), self.width())
    }

    fn samples(&self) -> Vec<f64> {
        self.data().to_vec()
    }
}

impl Planar for ColorImage8 {
    const PEAK: f64 = 255.0;

    fn dims(&self) -> (usize, usize) {
        (self.height(), self.width())
    }

    fn samples(&self) -> Vec<f64> {
        self.data().iter().map(|&v| f64::from(v)).collect()
    }
}

fn same_dims<T: Planar>(a: &T, b: &T) -> Result<(usize, usize)> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(a.dims())
}

/// Neumaier-compensated sum; keeps the mean of many equal terms exact.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + carry
}

pub fn mse<T: Planar>(a: &T, b: &T) -> Result<f64> {
    same_dims(a, b)?;
    let (sa, sb) = (a.samples(), b.samples());
    let sum = compensated_sum(sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)));
    Ok(sum / sa.len() as f64)
}

/// Peak signal-to-noise ratio in dB; identical images give `f64::INFINITY`.
pub fn psnr<T: Planar>(a: &T, b: &T, peak: f64) -> Result<f64> {
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::InvalidParameter(format!("peak must be positive, got {peak}")));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let x = i as f64 - half;
        *t = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = taps.iter().sum();
    taps.map(|t| t / total)
}

/// Separable Gaussian filter evaluated only at fully-inside window positions.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = taps.iter().enumerate().map(|(t, wt)| wt * plane[r * w + c + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = taps.iter().enumerate().map(|(t, wt)| wt * rows[(r + t) * ow + c]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, peak: f64) -> f64 {
    let taps = gaussian_taps();
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter_valid(a, h, w, &taps);
    let mu_b = filter_valid(b, h, w, &taps);
    let e_aa = filter_valid(&prod(a, a), h, w, &taps);
    let e_bb = filter_valid(&prod(b, b), h, w, &taps);
    let e_ab = filter_valid(&prod(a, b), h, w, &taps);
    let n = mu_a.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        // Products are ordered so swapping a and b yields the same terms.
        let num = (2.0 * (ma * mb) + c1) * (2.0 * cov + c2);
        let den = ((ma * ma + mb * mb) + c1) * ((var_a + var_b) + c2);
        total += num / den;
    }
    total / n as f64
}

/// Mean SSIM (11x11 Gaussian window, sigma 1.5), averaged over channels.
pub fn ssim<T: Planar>(a: &T, b: &T) -> Result<f64> {
    ssim_with_peak(a, b, T::PEAK)
}

pub fn ssim_with_peak<T: Planar>(a: &T, b: &T, peak: f64) -> Result<f64> {
    let (h, w) = same_dims(a, b)?;
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            min: SSIM_WINDOW,
        });
    }
    let (sa, sb) = (a.samples(), b.samples());
    let plane = |s: &[f64], ch: usize| s.iter().skip(ch).step_by(3).copied().collect::<Vec<_>>();
    let total: f64 = (0..3)
        .map(|ch| ssim_plane(&plane(&sa, ch), &plane(&sb, ch), h, w, peak))
        .sum();
    Ok(total / 3.0)
}
