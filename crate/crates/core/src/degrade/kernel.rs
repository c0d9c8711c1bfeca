//! Blur kernels: antialiased defocus disks and random-walk motion trails.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviation of the per-step heading perturbation of the motion walk.
pub const MOTION_HEADING_SIGMA: f64 = PI / 6.0;
/// Points splatted per unit-length walk segment.
pub const MOTION_SAMPLES_PER_STEP: usize = 16;
pub const MOTION_SIZE_RANGE: (usize, usize) = (3, 11);

/// Square, odd-sized, non-negative blur kernel normalized to unit sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Validates and normalizes `weights` (row-major, `size * size`).
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("kernel size {size} must be odd")));
        }
        if weights.len() != size * size {
            return Err(Error::SampleCount {
                expected: size * size,
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "kernel weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("kernel weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Kernel { size, weights })
    }

    pub fn delta() -> Self {
        Kernel {
            size: 1,
            weights: vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.weights[u * self.size + v]
    }

    pub fn is_delta(&self) -> bool {
        self.weights[self.size * self.size / 2] == 1.0
    }
}

/// Antiderivative of `sqrt(r^2 - x^2)` on `[-r, r]`.
fn half_disk_primitive(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// Exact value of `integral over [x0, x1] of clamp(h(x), y0, y1) dx`, where
/// `h(x) = sqrt(r^2 - x^2)` inside the disk and 0 outside.
fn clamped_profile_integral(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    let mut cuts = vec![x0, x1, -r, r];
    for y in [y0, y1] {
        if y.abs() <= r {
            let s = (r * r - y * y).max(0.0).sqrt();
            cuts.extend([-s, s]);
        }
    }
    cuts.retain(|&c| c >= x0 && c <= x1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let profile = |x: f64| if x.abs() < r { (r * r - x * x).sqrt() } else { 0.0 };
    cuts.windows(2)
        .map(|seg| {
            let (a, b) = (seg[0], seg[1]);
            let h = profile(0.5 * (a + b));
            if h <= y0 {
                y0 * (b - a)
            } else if h >= y1 {
                y1 * (b - a)
            } else {
                half_disk_primitive(b, r) - half_disk_primitive(a, r)
            }
        })
        .sum()
}

/// Area of the intersection of the disk of radius `r` centered at the
/// origin with the rectangle `[x0, x1] x [y0, y1]`.
pub fn disk_rect_overlap(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    // Upper half contributes clamp(h), lower half contributes clamp(-h).
    let upper = clamped_profile_integral(x0, x1, y0, y1, r);
    let lower = clamped_profile_integral(x0, x1, -y1, -y0, r);
    (upper + lower).max(0.0)
}

/// Defocus kernel: each weight is the exact overlap area between its pixel
/// cell and a disk of `radius` centered on the kernel center.
pub fn disk_kernel(radius: f64) -> Result<Kernel> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    let half = radius.ceil() as usize;
    let size = 2 * half + 1;
    let mut weights = Vec::with_capacity(size * size);
    for u in 0..size {
        for v in 0..size {
            let y = u as f64 - half as f64;
            let x = v as f64 - half as f64;
            weights.push(disk_rect_overlap(x - 0.5, x + 0.5, y - 0.5, y + 0.5, radius));
        }
    }
    Kernel::new(size, weights)
}

/// Samples the walk's step count: uniform on `[4, 2 * max_size]`.
pub fn sample_motion_steps<R: Rng + ?Sized>(max_size: usize, rng: &mut R) -> usize {
    rng.random_range(4..=2 * max_size)
}

fn check_motion_size(max_size: usize) -> Result<()> {
    let (lo, hi) = MOTION_SIZE_RANGE;
    if max_size.is_multiple_of(2) || !(lo..=hi).contains(&max_size) {
        return Err(Error::InvalidParameter(format!(
            "motion kernel size must be odd in [{lo}, {hi}], got {max_size}"
        )));
    }
    Ok(())
}

/// Camera-shake kernel from a random walk of `steps` unit-length segments.
///
/// The heading starts uniformly on the circle and drifts by a Gaussian of
/// standard deviation [`MOTION_HEADING_SIGMA`] per step. The trajectory is
/// densely sampled, re-centered on its centroid, clamped to the
/// `max_size x max_size` box and splatted bilinearly.
pub fn random_walk_motion_kernel<R: Rng + ?Sized>(max_size: usize, steps: usize, rng: &mut R) -> Result<Kernel> {
    check_motion_size(max_size)?;
    if steps == 0 {
        return Ok(Kernel::delta());
    }
    let heading_noise = Normal::new(0.0, MOTION_HEADING_SIGMA).expect("valid sigma");
    let mut theta: f64 = rng.random_range(0.0..2.0 * PI);
    let mut pos = (0.0f64, 0.0f64);
    let mut points = vec![pos];
    for _ in 0..steps {
        let (dy, dx) = (theta.sin(), theta.cos());
        for s in 1..=MOTION_SAMPLES_PER_STEP {
            let t = s as f64 / MOTION_SAMPLES_PER_STEP as f64;
            points.push((pos.0 + t * dy, pos.1 + t * dx));
        }
        pos = (pos.0 + dy, pos.1 + dx);
        theta += heading_noise.sample(rng);
    }
    let n = points.len() as f64;
    let cy = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cx = points.iter().map(|p| p.1).sum::<f64>() / n;

    let half = (max_size / 2) as f64;
    let mut weights = vec![0.0; max_size * max_size];
    for &(py, px) in &points {
        let y = (py - cy).clamp(-half, half) + half;
        let x = (px - cx).clamp(-half, half) + half;
        let (y0, x0) = (y.floor(), x.floor());
        let (fy, fx) = (y - y0, x - x0);
        let (y0, x0) = (y0 as usize, x0 as usize);
        for (yy, wy) in [(y0, 1.0 - fy), (y0 + 1, fy)] {
            for (xx, wx) in [(x0, 1.0 - fx), (x0 + 1, fx)] {
                let w = wy * wx;
                if w > 0.0 && yy < max_size && xx < max_size {
                    weights[yy * max_size + xx] += w;
                }
            }
        }
    }
    Kernel::new(max_size, weights)
}
