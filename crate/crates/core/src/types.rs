//! Image containers shared by every stage of the pipeline.
//!
//! All containers are immutable after construction. Linear and raw samples
//! are `f64` in `[0, 1]`; integer bit depths are only a storage concern.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance accepted on the `[0, 1]` range at construction time.
pub const RANGE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    R = 0,
    G = 1,
    B = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One of the four phases of a 2x2 Bayer color filter array.
///
/// The name lists the colors of the block in raster order: top-left,
/// top-right, bottom-left, bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BayerPattern {
    #[default]
    #[serde(rename = "RGGB")]
    Rggb,
    #[serde(rename = "BGGR")]
    Bggr,
    #[serde(rename = "GRBG")]
    Grbg,
    #[serde(rename = "GBRG")]
    Gbrg,
}

impl BayerPattern {
    pub const ALL: [BayerPattern; 4] = [
        BayerPattern::Rggb,
        BayerPattern::Bggr,
        BayerPattern::Grbg,
        BayerPattern::Gbrg,
    ];

    fn block(self) -> [Channel; 4] {
        use Channel::*;
        match self {
            BayerPattern::Rggb => [R, G, G, B],
            BayerPattern::Bggr => [B, G, G, R],
            BayerPattern::Grbg => [G, R, B, G],
            BayerPattern::Gbrg => [G, B, R, G],
        }
    }

    /// Color measured by the sensel at `(row, col)`.
    #[inline]
    pub fn color_at(self, row: usize, col: usize) -> Channel {
        self.block()[(row & 1) * 2 + (col & 1)]
    }

    /// Position `(row, col)` inside the 2x2 block of the single R or B
    /// sensel. Returns `None` for green, which occupies two positions.
    pub fn site_of(self, channel: Channel) -> Option<(usize, usize)> {
        if channel == Channel::G {
            return None;
        }
        let idx = self.block().iter().position(|&c| c == channel)?;
        Some((idx / 2, idx % 2))
    }

    pub fn name(self) -> &'static str {
        match self {
            BayerPattern::Rggb => "RGGB",
            BayerPattern::Bggr => "BGGR",
            BayerPattern::Grbg => "GRBG",
            BayerPattern::Gbrg => "GBRG",
        }
    }
}

impl fmt::Display for BayerPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BayerPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BayerPattern::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown Bayer pattern {s:?}")))
    }
}

/// Sample-level validation shared by the real-valued containers.
fn validate_unit_samples(samples: &[f64]) -> Result<()> {
    for (index, &value) in samples.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
    }
    Ok(())
}

fn check_window(top: usize, left: usize, h: usize, w: usize, height: usize, width: usize) -> Result<()> {
    if h == 0 || w == 0 || top + h > height || left + w > width {
        return Err(Error::OutOfBounds {
            top,
            left,
            h,
            w,
            height,
            width,
        });
    }
    Ok(())
}

/// Copies a `h x w` window out of a row-major buffer with `stride`
/// interleaved values per pixel.
fn copy_window<T: Copy>(
    data: &[T],
    width: usize,
    stride: usize,
    top: usize,
    left: usize,
    h: usize,
    w: usize,
) -> Vec<T> {
    let mut out = Vec::with_capacity(h * w * stride);
    for r in top..top + h {
        let start = (r * width + left) * stride;
        out.extend_from_slice(&data[start..start + w * stride]);
    }
    out
}

/// Rectangular sub-window extraction.
pub trait Crop: Sized {
    fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Self>;
}

/// Height x width x 3 grid of linear radiance samples, row-major and
/// channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl LinearImage {
    pub fn new(height: usize, width: usize, samples: Vec<f64>) -> Result<Self> {
        let expected = height * width * 3;
        if samples.len() != expected {
            return Err(Error::SampleCount {
                expected,
                actual: samples.len(),
            });
        }
        if height == 0 || width == 0 {
            return Err(Error::TooSmall { height, width, min: 1 });
        }
        validate_unit_samples(&samples)?;
        Ok(LinearImage {
            height,
            width,
            data: samples,
        })
    }

    pub fn constant(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        let data = (0..height * width).flat_map(|_| rgb).collect();
        Self::new(height, width, data)
    }

    /// Builds an image from a per-pixel function. Values are clipped to `[0, 1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend(f(r, c).map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self::new(height, width, data)
    }

    /// Crate-internal constructor for buffers whose range is already
    /// guaranteed by the producing operation.
    pub(crate) fn from_parts(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * 3);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        LinearImage { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * 3 + channel]
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Extracts one channel as a row-major plane.
    pub fn plane(&self, channel: Channel) -> Vec<f64> {
        self.data.iter().skip(channel.index()).step_by(3).copied().collect()
    }

    /// Reassembles an image from three planes of equal size.
    pub(crate) fn from_planes(height: usize, width: usize, planes: [&[f64]; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for i in 0..height * width {
            data.extend([planes[0][i], planes[1][i], planes[2][i]]);
        }
        Self::from_parts(height, width, data)
    }

    /// Applies `f` to every sample and clips the result to `[0, 1]`.
    pub(crate) fn map_clipped(&self, f: impl Fn(f64) -> f64) -> Self {
        let data = self.data.iter().map(|&v| f(v).clamp(0.0, 1.0)).collect();
        Self::from_parts(self.height, self.width, data)
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.height {
            for c in (0..self.width).rev() {
                data.extend(self.pixel(r, c));
            }
        }
        Self::from_parts(self.height, self.width, data)
    }
}

impl Crop for LinearImage {
    fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Self> {
        check_window(top, left, h, w, self.height, self.width)?;
        let data = copy_window(&self.data, self.width, 3, top, left, h, w);
        Ok(Self::from_parts(h, w, data))
    }
}

/// Single-plane Bayer mosaic with its CFA phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BayerRaw {
    height: usize,
    width: usize,
    data: Vec<f64>,
    pattern: BayerPattern,
}

impl BayerRaw {
    pub fn new(height: usize, width: usize, samples: Vec<f64>, pattern: BayerPattern) -> Result<Self> {
        let expected = height * width;
        if samples.len() != expected {
            return Err(Error::SampleCount {
                expected,
                actual: samples.len(),
            });
        }
        if height == 0 || width == 0 {
            return Err(Error::TooSmall { height, width, min: 2 });
        }
        if !height.is_multiple_of(2) || !width.is_multiple_of(2) {
            return Err(Error::OddDimensions {
                what: "Bayer raw",
                height,
                width,
            });
        }
        validate_unit_samples(&samples)?;
        Ok(BayerRaw {
            height,
            width,
            data: samples,
            pattern,
        })
    }

    pub(crate) fn from_parts(height: usize, width: usize, data: Vec<f64>, pattern: BayerPattern) -> Self {
        debug_assert_eq!(data.len(), height * width);
        debug_assert!(height.is_multiple_of(2) && width.is_multiple_of(2));
        BayerRaw {
            height,
            width,
            data,
            pattern,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pattern(&self) -> BayerPattern {
        self.pattern
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn color_at(&self, row: usize, col: usize) -> Channel {
        self.pattern.color_at(row, col)
    }
}

impl Crop for BayerRaw {
    fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Self> {
        if !top.is_multiple_of(2) || !left.is_multiple_of(2) {
            return Err(Error::OddOffset { top, left });
        }
        check_window(top, left, h, w, self.height, self.width)?;
        if !h.is_multiple_of(2) || !w.is_multiple_of(2) {
            return Err(Error::OddDimensions {
                what: "Bayer crop",
                height: h,
                width: w,
            });
        }
        let data = copy_window(&self.data, self.width, 1, top, left, h, w);
        Ok(Self::from_parts(h, w, data, self.pattern))
    }
}

/// Display-referred 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage8 {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl ColorImage8 {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        let expected = height * width * 3;
        if data.len() != expected {
            return Err(Error::SampleCount {
                expected,
                actual: data.len(),
            });
        }
        if height == 0 || width == 0 {
            return Err(Error::TooSmall { height, width, min: 1 });
        }
        Ok(ColorImage8 { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_unit(&self) -> LinearImage {
        let data = self.data.iter().map(|&v| f64::from(v) / 255.0).collect();
        LinearImage::from_parts(self.height, self.width, data)
    }

    /// Nearest-neighbour upsampling by an integer factor.
    pub fn upsample_nearest(&self, factor: usize) -> Self {
        let (h, w) = (self.height * factor, self.width * factor);
        let mut data = Vec::with_capacity(h * w * 3);
        for r in 0..h {
            for c in 0..w {
                data.extend(self.pixel(r / factor, c / factor));
            }
        }
        ColorImage8 {
            height: h,
            width: w,
            data,
        }
    }
}

impl Crop for ColorImage8 {
    fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Self> {
        check_window(top, left, h, w, self.height, self.width)?;
        let data = copy_window(&self.data, self.width, 3, top, left, h, w);
        Ok(ColorImage8 {
            height: h,
            width: w,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_construction() {
        let img = LinearImage::new(2, 2, vec![0.5; 12]).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn rejects_nan() {
        let mut s = vec![0.5; 12];
        s[7] = f64::NAN;
        assert!(matches!(LinearImage::new(2, 2, s), Err(Error::NonFinite { index: 7 })));
        let mut s = vec![0.5; 12];
        s[0] = f64::INFINITY;
        assert!(LinearImage::new(2, 2, s).is_err());
    }

    #[test]
    fn rejects_wrong_count() {
        assert!(matches!(
            LinearImage::new(2, 2, vec![0.5; 11]),
            Err(Error::SampleCount {
                expected: 12,
                actual: 11
            })
        ));
    }

    #[test]
    fn range_slack() {
        assert!(LinearImage::new(1, 1, vec![-1e-7, 1.0 + 1e-7, 0.3]).is_ok());
        assert!(LinearImage::new(1, 1, vec![-1e-5, 0.0, 0.3]).is_err());
        assert!(LinearImage::new(1, 1, vec![0.0, 1.01, 0.3]).is_err());
    }

    #[test]
    fn bayer_requires_even() {
        assert!(BayerRaw::new(3, 2, vec![0.0; 6], BayerPattern::Rggb).is_err());
        assert!(BayerRaw::new(2, 2, vec![0.0; 4], BayerPattern::Rggb).is_ok());
    }

    #[test]
    fn pattern_examples() {
        assert_eq!(BayerPattern::Rggb.color_at(0, 0), Channel::R);
        assert_eq!(BayerPattern::Rggb.color_at(1, 1), Channel::B);
        assert_eq!(BayerPattern::Rggb.color_at(2, 1), Channel::G);
        assert_eq!(BayerPattern::Grbg.color_at(0, 1), Channel::R);
        assert_eq!(BayerPattern::Gbrg.color_at(1, 0), Channel::R);
        assert_eq!(BayerPattern::Bggr.site_of(Channel::R), Some((1, 1)));
    }

    #[test]
    fn one_r_one_b_two_g_per_block() {
        for p in BayerPattern::ALL {
            let colors: Vec<_> = (0..4).map(|i| p.color_at(i / 2, i % 2)).collect();
            assert_eq!(colors.iter().filter(|&&c| c == Channel::R).count(), 1);
            assert_eq!(colors.iter().filter(|&&c| c == Channel::B).count(), 1);
            assert_eq!(colors.iter().filter(|&&c| c == Channel::G).count(), 2);
        }
    }

    #[test]
    fn pattern_parses() {
        assert_eq!("gbrg".parse::<BayerPattern>().unwrap(), BayerPattern::Gbrg);
        assert!("RGBG".parse::<BayerPattern>().is_err());
        assert_eq!(serde_json::to_string(&BayerPattern::Grbg).unwrap(), "\"GRBG\"");
    }

    fn ramp(h: usize, w: usize) -> LinearImage {
        LinearImage::from_fn(h, w, |r, c| {
            let v = (r * w + c) as f64 / (h * w) as f64;
            [v, 1.0 - v, 0.5 * v]
        })
        .unwrap()
    }

    #[test]
    fn crop_whole_is_identity() {
        let img = ramp(6, 8);
        assert_eq!(img.crop(0, 0, 6, 8).unwrap(), img);
    }

    #[test]
    fn crop_window_matches_source() {
        let img = ramp(512, 512);
        let c = img.crop(128, 128, 256, 256).unwrap();
        for r in 0..256 {
            for col in 0..256 {
                assert_eq!(c.pixel(r, col), img.pixel(r + 128, col + 128));
            }
        }
    }

    #[test]
    fn crop_errors() {
        let img = ramp(4, 4);
        assert!(img.crop(2, 2, 3, 1).is_err());
        assert!(img.crop(0, 0, 0, 1).is_err());
        let raw = BayerRaw::new(4, 4, vec![0.1; 16], BayerPattern::Rggb).unwrap();
        assert!(matches!(raw.crop(1, 0, 2, 2), Err(Error::OddOffset { .. })));
        assert!(raw.crop(2, 0, 2, 2).is_ok());
    }

    proptest! {
        #[test]
        fn pattern_is_two_periodic(r in 0usize..1000, c in 0usize..1000, p in 0usize..4) {
            let p = BayerPattern::ALL[p];
            prop_assert_eq!(p.color_at(r, c), p.color_at(r + 2, c));
            prop_assert_eq!(p.color_at(r, c), p.color_at(r, c + 2));
        }

        #[test]
        fn nested_crop_composes(
            t1 in 0usize..8, l1 in 0usize..8, t2 in 0usize..8, l2 in 0usize..8,
            h in 1usize..8, w in 1usize..8,
        ) {
            let img = ramp(32, 32);
            let outer = img.crop(t1, l1, 24, 24).unwrap();
            let inner = outer.crop(t2, l2, h, w).unwrap();
            prop_assert_eq!(inner, img.crop(t1 + t2, l1 + l2, h, w).unwrap());
        }
    }
}
