//! Image codecs and file helpers.
//!
//! Linear data is stored as 16-bit PNG (`round(x * 65535)`), display images
//! as 8-bit PNG, references as baseline JPEG with 4:2:0 chroma subsampling.

use std::fs;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use jpeg_encoder::{ColorType, Encoder, SamplingFactor};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{BayerPattern, BayerRaw, ColorImage8, LinearImage};

pub const CHECKSUM_ALGORITHM: &str = "sha256";
pub const JPEG_SUBSAMPLING: &str = "4:2:0";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[inline]
pub fn to_u16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round_ties_even() as u16
}

fn png_bytes(raw: &[u8], width: usize, height: usize, color: ExtendedColorType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive).write_image(
        raw,
        width as u32,
        height as u32,
        color,
    )?;
    Ok(out)
}

fn u16_ne_bytes(values: impl Iterator<Item = u16>) -> Vec<u8> {
    // The PNG encoder expects native-endian 16-bit samples.
    values.flat_map(|v| v.to_ne_bytes()).collect()
}

pub fn encode_linear_png16(img: &LinearImage) -> Result<Vec<u8>> {
    let raw = u16_ne_bytes(img.data().iter().map(|&v| to_u16(v)));
    png_bytes(&raw, img.width(), img.height(), ExtendedColorType::Rgb16)
}

pub fn encode_raw_png16(raw: &BayerRaw) -> Result<Vec<u8>> {
    let bytes = u16_ne_bytes(raw.data().iter().map(|&v| to_u16(v)));
    png_bytes(&bytes, raw.width(), raw.height(), ExtendedColorType::L16)
}

pub fn encode_png8(img: &ColorImage8) -> Result<Vec<u8>> {
    png_bytes(img.data(), img.width(), img.height(), ExtendedColorType::Rgb8)
}

/// Baseline JPEG, 4:2:0, standard quantization tables scaled by `quality`.
pub fn encode_jpeg(img: &ColorImage8, quality: u8) -> Result<Vec<u8>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter(format!(
            "JPEG quality {quality} outside [1, 100]"
        )));
    }
    let (w, h) = (u16::try_from(img.width()), u16::try_from(img.height()));
    let (Ok(w), Ok(h)) = (w, h) else {
        return Err(Error::InvalidParameter("image too large for JPEG".into()));
    };
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, quality);
    enc.set_sampling_factor(SamplingFactor::R_4_2_0);
    enc.set_progressive(false);
    enc.set_optimized_huffman_tables(false);
    enc.encode(img.data(), w, h, ColorType::Rgb)?;
    Ok(out)
}

/// Decoded image content before conversion to a domain type.
pub enum Decoded {
    Gray16(usize, usize, Vec<u16>),
    Rgb16(usize, usize, Vec<u16>),
    Rgb8(usize, usize, Vec<u8>),
}

pub fn decode(bytes: &[u8]) -> Result<Decoded> {
    let img = image::load_from_memory(bytes)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(match img {
        DynamicImage::ImageLuma16(b) => Decoded::Gray16(h, w, b.into_raw()),
        DynamicImage::ImageRgb16(b) => Decoded::Rgb16(h, w, b.into_raw()),
        DynamicImage::ImageRgb8(b) => Decoded::Rgb8(h, w, b.into_raw()),
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            Decoded::Rgb8(h, w, img.to_rgb8().into_raw())
        }
        DynamicImage::ImageRgba16(_) => Decoded::Rgb16(h, w, img.to_rgb16().into_raw()),
        other => {
            return Err(Error::UnsupportedFormat(format!("{:?}", other.color())));
        }
    })
}

pub fn decode_jpeg(bytes: &[u8]) -> Result<ColorImage8> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Jpeg)?.to_rgb8();
    ColorImage8::new(img.height() as usize, img.width() as usize, img.into_raw())
}

pub fn decode_color8(bytes: &[u8]) -> Result<ColorImage8> {
    match decode(bytes)? {
        Decoded::Rgb8(h, w, d) => ColorImage8::new(h, w, d),
        _ => Err(Error::UnsupportedFormat("expected an 8-bit color image".into())),
    }
}

/// Reads a 16-bit RGB PNG as linear samples in `[0, 1]`.
pub fn decode_linear_png16(bytes: &[u8]) -> Result<LinearImage> {
    match decode(bytes)? {
        Decoded::Rgb16(h, w, d) => LinearImage::new(h, w, d.iter().map(|&v| f64::from(v) / 65535.0).collect()),
        _ => Err(Error::UnsupportedFormat("expected a 16-bit RGB image".into())),
    }
}

/// Reads a 16-bit single-plane PNG as a mosaic in `[0, 1]`.
pub fn decode_raw_png16(bytes: &[u8], pattern: BayerPattern) -> Result<BayerRaw> {
    match decode(bytes)? {
        Decoded::Gray16(h, w, d) => BayerRaw::new(h, w, d.iter().map(|&v| f64::from(v) / 65535.0).collect(), pattern),
        _ => Err(Error::UnsupportedFormat("expected a 16-bit single-plane image".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png16_round_trip_within_quantization() {
        let img = LinearImage::from_fn(5, 7, |r, c| [r as f64 / 4.0, c as f64 / 6.0, 0.123_456]).unwrap();
        let back = decode_linear_png16(&encode_linear_png16(&img).unwrap()).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
    }

    #[test]
    fn raw_png_round_trip() {
        let raw = BayerRaw::new(4, 4, (0..16).map(|i| i as f64 / 15.0).collect(), BayerPattern::Gbrg).unwrap();
        let back = decode_raw_png16(&encode_raw_png16(&raw).unwrap(), BayerPattern::Gbrg).unwrap();
        assert_eq!(back, raw);
    }

    #[test]
    fn jpeg_is_deterministic_and_decodable() {
        let img = ColorImage8::new(9, 11, (0..9 * 11 * 3).map(|i| (i * 7 % 256) as u8).collect()).unwrap();
        let a = encode_jpeg(&img, 95).unwrap();
        assert_eq!(a, encode_jpeg(&img, 95).unwrap());
        let dec = decode_jpeg(&a).unwrap();
        assert_eq!((dec.height(), dec.width()), (9, 11));
        assert!(encode_jpeg(&img, 0).is_err());
    }

    #[test]
    fn jpeg_declares_two_by_two_luma_sampling() {
        let img = ColorImage8::new(16, 16, vec![128; 16 * 16 * 3]).unwrap();
        let bytes = encode_jpeg(&img, 95).unwrap();
        // SOF0 marker, then length(2) precision(1) height(2) width(2) ncomp(1),
        // then component 1: id, sampling factors.
        let sof = bytes.windows(2).position(|w| w == [0xFF, 0xC0]).expect("baseline SOF0");
        assert_eq!(bytes[sof + 9], 3);
        assert_eq!(bytes[sof + 11], 0x22);
        assert_eq!(bytes[sof + 14], 0x11);
        assert_eq!(bytes[sof + 17], 0x11);
    }

    #[test]
    fn u16_quantization() {
        assert_eq!(to_u16(0.0), 0);
        assert_eq!(to_u16(1.0), 65535);
        assert_eq!(to_u16(0.5), 32768);
    }

    #[test]
    fn checksum_is_64_hex() {
        let s = sha256_hex(b"abc");
        assert_eq!(s.len(), 64);
        assert_eq!(s, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
