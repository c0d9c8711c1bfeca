//! Simulated camera ISP: white balance, color space conversion, tone curve,
//! 8-bit quantization and JPEG compression.
//!
//! The same [`IspProfile`] renders both the ground truth (from the linear
//! image, stored losslessly) and the reference (from the degraded mosaic via
//! AHD, stored as JPEG), so their colors correspond.

use serde::{Deserialize, Serialize};

use crate::demosaic::demosaic_ahd;
use crate::error::{Error, Result};
use crate::io::{decode_jpeg, encode_jpeg, JPEG_SUBSAMPLING};
use crate::types::{BayerRaw, ColorImage8, LinearImage};

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Default camera RGB to sRGB matrix. Rows sum to one so neutral colors
/// stay neutral.
pub const DEFAULT_COLOR_MATRIX: Mat3 = [[1.70, -0.60, -0.10], [-0.20, 1.50, -0.30], [0.05, -0.50, 1.45]];
pub const DEFAULT_WB_GAINS: [f64; 3] = [2.0, 1.0, 1.5];
pub const DEFAULT_JPEG_QUALITY: u8 = 95;

const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ToneCurve {
    Srgb,
    Gamma { gamma: f64 },
    Identity,
}

impl ToneCurve {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ToneCurve::Srgb => srgb_encode(x),
            ToneCurve::Gamma { gamma } => x.max(0.0).powf(1.0 / gamma),
            ToneCurve::Identity => x,
        }
    }
}

/// Standard sRGB transfer function.
#[inline]
pub fn srgb_encode(x: f64) -> f64 {
    if x <= 0.003_130_8 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

/// Inverse of [`srgb_encode`].
#[inline]
pub fn srgb_decode(v: f64) -> f64 {
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IspProfile {
    pub wb_gains: [f64; 3],
    pub color_matrix: Mat3,
    pub tone_curve: ToneCurve,
    pub jpeg_quality: u8,
}

impl Default for IspProfile {
    fn default() -> Self {
        IspProfile {
            wb_gains: DEFAULT_WB_GAINS,
            color_matrix: DEFAULT_COLOR_MATRIX,
            tone_curve: ToneCurve::Srgb,
            jpeg_quality: DEFAULT_JPEG_QUALITY,
        }
    }
}

impl IspProfile {
    /// Unit gains, identity matrix, sRGB curve.
    pub fn neutral() -> Self {
        IspProfile {
            wb_gains: [1.0; 3],
            color_matrix: IDENTITY3,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_gains(self.wb_gains)?;
        if self.wb_gains[1] != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "white balance gains must be G-normalized, got G = {}",
                self.wb_gains[1]
            )));
        }
        check_color_matrix(&self.color_matrix)?;
        if let ToneCurve::Gamma { gamma } = self.tone_curve {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
            }
        }
        if !(1..=100).contains(&self.jpeg_quality) {
            return Err(Error::InvalidParameter(format!(
                "JPEG quality {} outside [1, 100]",
                self.jpeg_quality
            )));
        }
        Ok(())
    }

    pub fn jpeg_subsampling(&self) -> &'static str {
        JPEG_SUBSAMPLING
    }
}

fn check_gains(gains: [f64; 3]) -> Result<()> {
    if gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "white balance gains must be positive, got {gains:?}"
        )));
    }
    Ok(())
}

fn check_color_matrix(m: &Mat3) -> Result<()> {
    for (i, row) in m.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if !row.iter().all(|v| v.is_finite()) || (s - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "color matrix row {i} sums to {s}, expected 1"
            )));
        }
    }
    Ok(())
}

pub fn white_balance(img: &LinearImage, gains: [f64; 3]) -> Result<LinearImage> {
    check_gains(gains)?;
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|px| [0, 1, 2].map(|c| (px[c] * gains[c]).clamp(0.0, 1.0)))
        .collect();
    Ok(LinearImage::from_parts(img.height(), img.width(), data))
}

#[inline]
pub(crate) fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

/// Per-pixel matrix product, clipped. The matrix must preserve white.
pub fn apply_color_matrix(img: &LinearImage, m: &Mat3) -> Result<LinearImage> {
    check_color_matrix(m)?;
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|px| mat_vec(m, [px[0], px[1], px[2]]).map(|v| v.clamp(0.0, 1.0)))
        .collect();
    Ok(LinearImage::from_parts(img.height(), img.width(), data))
}

/// Display-referred encoding; output stays in `[0, 1]`.
pub fn tone_map(img: &LinearImage, curve: ToneCurve) -> LinearImage {
    img.map_clipped(|v| curve.apply(v.clamp(0.0, 1.0)))
}

/// `round(x * 255)` with ties to even.
pub fn quantize8(img: &LinearImage) -> ColorImage8 {
    let data = img
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round_ties_even() as u8)
        .collect();
    ColorImage8::new(img.height(), img.width(), data).expect("dimensions carried over")
}

/// Color steps shared by reference and ground-truth rendering.
pub fn render_display(img: &LinearImage, profile: &IspProfile) -> Result<ColorImage8> {
    profile.validate()?;
    let balanced = white_balance(img, profile.wb_gains)?;
    let converted = apply_color_matrix(&balanced, &profile.color_matrix)?;
    Ok(quantize8(&tone_map(&converted, profile.tone_curve)))
}

#[derive(Debug, Clone)]
pub struct RenderedReference {
    /// Pixels decoded back from `jpeg`.
    pub image: ColorImage8,
    pub jpeg: Vec<u8>,
    /// Rendered pixels before compression.
    pub uncompressed: ColorImage8,
}

/// AHD demosaicing followed by the profile's color steps and JPEG coding.
pub fn render_reference(raw: &BayerRaw, profile: &IspProfile) -> Result<RenderedReference> {
    let uncompressed = render_display(&demosaic_ahd(raw), profile)?;
    let jpeg = encode_jpeg(&uncompressed, profile.jpeg_quality)?;
    let image = decode_jpeg(&jpeg)?;
    Ok(RenderedReference {
        image,
        jpeg,
        uncompressed,
    })
}

/// The ground-truth color image: same color steps, no demosaicing or JPEG.
pub fn render_ground_truth(x_lin: &LinearImage, profile: &IspProfile) -> Result<ColorImage8> {
    render_display(x_lin, profile)
}
