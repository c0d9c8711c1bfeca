//! Synthetic degradation of a linear image into a low-resolution noisy mosaic:
//! defocus blur, motion blur, 2x downsampling, Bayer sampling and
//! signal-dependent Gaussian noise, applied in that order.

pub mod kernel;
pub mod noise;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_stream, StreamRng};
use crate::types::{BayerPattern, BayerRaw, LinearImage};

pub use kernel::{disk_kernel, random_walk_motion_kernel, Kernel};
pub use noise::add_hetero_noise;

pub const DEFOCUS_RADIUS_RANGE: (f64, f64) = (1.0, 5.0);
pub const SIGMA1_MAX: f64 = 1e-2;
pub const SIGMA2_MAX: f64 = 1e-3;

/// Mirror index without repeating the edge sample (`d c b | a b c d`).
#[inline]
fn reflect(k: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut k = k.rem_euclid(period);
    if k >= n {
        k = period - k;
    }
    k as usize
}

/// Per-channel 2-D convolution with reflect padding; output has the input size.
pub fn convolve(img: &LinearImage, k: &Kernel) -> Result<LinearImage> {
    let (h, w) = (img.height(), img.width());
    let size = k.size();
    if size > h || size > w {
        return Err(Error::KernelTooLarge {
            size,
            height: h,
            width: w,
        });
    }
    if k.is_delta() {
        return Ok(img.clone());
    }
    let half = k.radius() as isize;
    let src = img.data();
    // Flipped taps turn the correlation loop below into a convolution.
    let taps: Vec<(isize, isize, f64)> = (0..size)
        .flat_map(|u| (0..size).map(move |v| (u, v)))
        .filter_map(|(u, v)| {
            let wgt = k.at(u, v);
            (wgt != 0.0).then_some((half - u as isize, half - v as isize, wgt))
        })
        .collect();
    let col_index: Vec<Vec<usize>> = taps
        .iter()
        .map(|&(_, dc, _)| (0..w).map(|c| reflect(c as isize + dc, w)).collect())
        .collect();

    let mut out = vec![0.0; h * w * 3];
    out.par_chunks_mut(w * 3).enumerate().for_each(|(r, row)| {
        for (t, &(dr, _, wgt)) in taps.iter().enumerate() {
            let sr = reflect(r as isize + dr, h);
            let src_row = &src[sr * w * 3..(sr + 1) * w * 3];
            for (c, &sc) in col_index[t].iter().enumerate() {
                let (o, s) = (c * 3, sc * 3);
                row[o] += wgt * src_row[s];
                row[o + 1] += wgt * src_row[s + 1];
                row[o + 2] += wgt * src_row[s + 2];
            }
        }
        for v in row.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
    });
    Ok(LinearImage::from_parts(h, w, out))
}

/// 2x2 box average.
pub fn downsample2(img: &LinearImage) -> Result<LinearImage> {
    let (h, w) = (img.height(), img.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::OddDimensions {
            what: "downsampling",
            height: h,
            width: w,
        });
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut data = Vec::with_capacity(oh * ow * 3);
    for i in 0..oh {
        for j in 0..ow {
            for ch in 0..3 {
                let top = img.get(2 * i, 2 * j, ch) + img.get(2 * i, 2 * j + 1, ch);
                let bottom = img.get(2 * i + 1, 2 * j, ch) + img.get(2 * i + 1, 2 * j + 1, ch);
                data.push((top + bottom) * 0.25);
            }
        }
    }
    Ok(LinearImage::from_parts(oh, ow, data))
}

/// Keeps, at each pixel, only the channel the CFA measures there.
pub fn bayer_sample(img: &LinearImage, pattern: BayerPattern) -> Result<BayerRaw> {
    let (h, w) = (img.height(), img.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::OddDimensions {
            what: "Bayer sampling",
            height: h,
            width: w,
        });
    }
    let data = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            img.get(r, c, pattern.color_at(r, c).index())
        })
        .collect();
    Ok(BayerRaw::from_parts(h, w, data, pattern))
}

/// Full parameter set of one synthetic degradation.
///
/// A `defocus_radius` of 0 and a `motion_steps` of 0 both select the
/// identity kernel. Kernel and noise randomness are derived from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationParams {
    pub defocus_radius: f64,
    pub motion_max_size: usize,
    pub motion_steps: usize,
    pub sigma1: f64,
    pub sigma2: f64,
    pub pattern: BayerPattern,
    pub seed: u64,
}

impl DegradationParams {
    /// No blur, no noise.
    pub fn identity(pattern: BayerPattern) -> Self {
        DegradationParams {
            defocus_radius: 0.0,
            motion_max_size: kernel::MOTION_SIZE_RANGE.0,
            motion_steps: 0,
            sigma1: 0.0,
            sigma2: 0.0,
            pattern,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.defocus_radius >= 0.0 && self.defocus_radius.is_finite()) {
            return bad(format!("defocus radius {} must be >= 0", self.defocus_radius));
        }
        let (lo, hi) = kernel::MOTION_SIZE_RANGE;
        if self.motion_max_size.is_multiple_of(2) || !(lo..=hi).contains(&self.motion_max_size) {
            return bad(format!(
                "motion size {} must be odd in [{lo}, {hi}]",
                self.motion_max_size
            ));
        }
        if !(self.sigma1 >= 0.0 && self.sigma2 >= 0.0) {
            return bad(format!(
                "noise sigmas must be >= 0, got {} and {}",
                self.sigma1, self.sigma2
            ));
        }
        Ok(())
    }

    /// Whether every parameter lies inside the published sampling ranges.
    pub fn within_default_ranges(&self) -> bool {
        let (rlo, rhi) = DEFOCUS_RADIUS_RANGE;
        (rlo..=rhi).contains(&self.defocus_radius)
            && (0.0..=SIGMA1_MAX).contains(&self.sigma1)
            && (0.0..=SIGMA2_MAX).contains(&self.sigma2)
            && self.validate().is_ok()
    }

    pub fn defocus_kernel(&self) -> Result<Kernel> {
        if self.defocus_radius == 0.0 {
            Ok(Kernel::delta())
        } else {
            disk_kernel(self.defocus_radius)
        }
    }

    pub fn motion_kernel(&self) -> Result<Kernel> {
        random_walk_motion_kernel(self.motion_max_size, self.motion_steps, &mut self.motion_rng())
    }

    pub fn motion_rng(&self) -> StreamRng {
        child_stream(self.seed, "motion", 0)
    }

    pub fn noise_rng(&self) -> StreamRng {
        child_stream(self.seed, "noise", 0)
    }
}

/// Blur, downsample, mosaic and add noise with explicit kernels and stream.
pub fn degrade_with(
    x_lin: &LinearImage,
    defocus: &Kernel,
    motion: &Kernel,
    pattern: BayerPattern,
    sigma1: f64,
    sigma2: f64,
    rng: &mut StreamRng,
) -> Result<BayerRaw> {
    let (h, w) = (x_lin.height(), x_lin.width());
    if h % 4 != 0 || w % 4 != 0 {
        return Err(Error::NotDivisible {
            height: h,
            width: w,
            factor: 4,
        });
    }
    let blurred = convolve(&convolve(x_lin, defocus)?, motion)?;
    let mosaic = bayer_sample(&downsample2(&blurred)?, pattern)?;
    add_hetero_noise(&mosaic, sigma1, sigma2, rng)
}

/// Produces the degraded low-resolution mosaic for `x_lin`.
/// Deterministic in `params` (including its seed).
pub fn degrade(x_lin: &LinearImage, params: &DegradationParams) -> Result<BayerRaw> {
    params.validate()?;
    degrade_with(
        x_lin,
        &params.defocus_kernel()?,
        &params.motion_kernel()?,
        params.pattern,
        params.sigma1,
        params.sigma2,
        &mut params.noise_rng(),
    )
}
