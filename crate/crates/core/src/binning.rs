//! Virtual-sensel binning: each 2x2 Bayer block becomes one full-RGB pixel.
//!
//! Inside a block the R and B sensels sit a quarter of a binned pixel away
//! from the block center, while the mean of the two G sensels is already
//! centered. Compensation resamples the R and B planes bilinearly so every
//! channel is sampled at the block center.

use crate::error::{Error, Result};
use crate::types::{BayerPattern, BayerRaw, Channel, LinearImage};

/// Naive binning without color-shift compensation.
pub fn bin_naive(raw: &BayerRaw) -> Result<LinearImage> {
    let (h, w) = (raw.height(), raw.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::OddDimensions {
            what: "binning",
            height: h,
            width: w,
        });
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut data = Vec::with_capacity(oh * ow * 3);
    for i in 0..oh {
        for j in 0..ow {
            let mut rgb = [0.0; 3];
            let mut greens = [0.0; 2];
            let mut ng = 0;
            for dr in 0..2 {
                for dc in 0..2 {
                    let (r, c) = (2 * i + dr, 2 * j + dc);
                    let v = raw.get(r, c);
                    match raw.color_at(r, c) {
                        Channel::G => {
                            greens[ng] = v;
                            ng += 1;
                        }
                        ch => rgb[ch.index()] = v,
                    }
                }
            }
            rgb[1] = (greens[0] + greens[1]) * 0.5;
            data.extend(rgb);
        }
    }
    Ok(LinearImage::from_parts(oh, ow, data))
}

/// Offset, in binned-pixel units, at which a channel's plane must be
/// resampled so its samples land on the block center.
pub fn compensation_offset(pattern: BayerPattern, channel: Channel) -> (f64, f64) {
    match pattern.site_of(channel) {
        Some((pr, pc)) => (0.25 - 0.5 * pr as f64, 0.25 - 0.5 * pc as f64),
        None => (0.0, 0.0),
    }
}

/// Bilinearly resamples a plane at `(i + dr, j + dc)` with replicated borders.
pub(crate) fn shift_plane(plane: &[f64], h: usize, w: usize, dr: f64, dc: f64) -> Vec<f64> {
    let rows = shift_axis(plane, h, w, dr, true);
    shift_axis(&rows, h, w, dc, false)
}

fn shift_axis(plane: &[f64], h: usize, w: usize, offset: f64, vertical: bool) -> Vec<f64> {
    if offset == 0.0 {
        return plane.to_vec();
    }
    let n = if vertical { h } else { w };
    let base = offset.floor();
    let frac = offset - base;
    let base = base as isize;
    let clamp = |k: isize| k.clamp(0, n as isize - 1) as usize;
    let mut out = vec![0.0; plane.len()];
    for r in 0..h {
        for c in 0..w {
            let k = if vertical { r } else { c } as isize;
            let (k0, k1) = (clamp(k + base), clamp(k + base + 1));
            let at = |kk: usize| {
                if vertical {
                    plane[kk * w + c]
                } else {
                    plane[r * w + kk]
                }
            };
            let (a, b) = (at(k0), at(k1));
            out[r * w + c] = a + frac * (b - a);
        }
    }
    out
}

/// Aligns the sampling centroid of the R and B planes with the
/// virtual-sensel center. G is left untouched.
pub fn compensate_color_shift(img: &LinearImage, pattern: BayerPattern) -> LinearImage {
    let (h, w) = (img.height(), img.width());
    let planes: Vec<Vec<f64>> = Channel::ALL
        .iter()
        .map(|&ch| {
            let plane = img.plane(ch);
            let (dr, dc) = compensation_offset(pattern, ch);
            shift_plane(&plane, h, w, dr, dc)
        })
        .collect();
    LinearImage::from_planes(h, w, [&planes[0], &planes[1], &planes[2]])
}

/// Produces the ground-truth linear image from a high-quality mosaic.
pub fn bin_bayer_to_linear(raw: &BayerRaw) -> Result<LinearImage> {
    let naive = bin_naive(raw)?;
    Ok(compensate_color_shift(&naive, raw.pattern()))
}
