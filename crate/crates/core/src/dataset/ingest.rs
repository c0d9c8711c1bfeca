//! Source image ingestion.
//!
//! Accepted inputs:
//! * 16-bit single-plane images: Bayer mosaics. A JSON sidecar next to the
//!   file (same stem, `.json`) gives the pattern and black/white levels.
//! * 16-bit three-plane images: already linear RGB. A sidecar is optional
//!   and only supplies levels.
//! * 8-bit images: display-referred sRGB, linearized with the inverse sRGB
//!   curve and flagged as pseudo-linear.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{decode, read_bytes, Decoded};
use crate::isp::srgb_decode;
use crate::types::{BayerPattern, BayerRaw, LinearImage};

const U16_MAX: f64 = 65535.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    #[serde(default)]
    pub pattern: BayerPattern,
    pub black_level: f64,
    pub white_level: f64,
}

impl Sidecar {
    pub fn validate(&self) -> Result<()> {
        if !(self.black_level.is_finite() && self.white_level.is_finite() && self.black_level < self.white_level) {
            return Err(Error::InvalidParameter(format!(
                "black level {} must be below white level {}",
                self.black_level, self.white_level
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn normalize(&self, x: f64) -> f64 {
        ((x - self.black_level) / (self.white_level - self.black_level)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Bayer16,
    Linear16,
    Srgb8,
}

#[derive(Debug, Clone)]
pub enum SourceImage {
    Bayer(BayerRaw),
    Linear { image: LinearImage, pseudo_linear: bool },
}

impl SourceImage {
    pub fn kind(&self) -> SourceKind {
        match self {
            SourceImage::Bayer(_) => SourceKind::Bayer16,
            SourceImage::Linear {
                pseudo_linear: false, ..
            } => SourceKind::Linear16,
            SourceImage::Linear {
                pseudo_linear: true, ..
            } => SourceKind::Srgb8,
        }
    }

    pub fn pseudo_linear(&self) -> bool {
        matches!(
            self,
            SourceImage::Linear {
                pseudo_linear: true,
                ..
            }
        )
    }
}

pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("json")
}

/// Reads the sidecar next to `image`, if there is one.
pub fn load_sidecar(image: &Path) -> Result<Option<Sidecar>> {
    let path = sidecar_path(image);
    if !path.exists() {
        return Ok(None);
    }
    let sidecar: Sidecar = serde_json::from_slice(&read_bytes(&path)?)?;
    sidecar.validate()?;
    Ok(Some(sidecar))
}

/// Decodes and normalizes source bytes. `origin` is only used in messages.
pub fn ingest_bytes(bytes: &[u8], sidecar: Option<&Sidecar>, origin: &Path) -> Result<SourceImage> {
    if let Some(s) = sidecar {
        s.validate()?;
    }
    let levels = |s: Option<&Sidecar>| {
        s.copied().unwrap_or(Sidecar {
            pattern: BayerPattern::default(),
            black_level: 0.0,
            white_level: U16_MAX,
        })
    };
    match decode(bytes)? {
        Decoded::Gray16(h, w, d) => {
            let s = sidecar.ok_or_else(|| Error::MissingSidecar(sidecar_path(origin)))?;
            // A trailing odd row or column cannot hold a full CFA block.
            let (h2, w2) = (h & !1, w & !1);
            let mut samples = Vec::with_capacity(h2 * w2);
            for r in 0..h2 {
                samples.extend(d[r * w..r * w + w2].iter().map(|&v| s.normalize(f64::from(v))));
            }
            Ok(SourceImage::Bayer(BayerRaw::new(h2, w2, samples, s.pattern)?))
        }
        Decoded::Rgb16(h, w, d) => {
            let s = levels(sidecar);
            let image = LinearImage::new(h, w, d.iter().map(|&v| s.normalize(f64::from(v))).collect())?;
            Ok(SourceImage::Linear {
                image,
                pseudo_linear: false,
            })
        }
        Decoded::Rgb8(h, w, d) => {
            let image = LinearImage::new(h, w, d.iter().map(|&v| srgb_decode(f64::from(v) / 255.0)).collect())?;
            Ok(SourceImage::Linear {
                image,
                pseudo_linear: true,
            })
        }
    }
}

/// Reads a source file and its optional sidecar.
pub fn ingest_source(path: &Path) -> Result<(SourceImage, Vec<u8>)> {
    let bytes = read_bytes(path)?;
    let sidecar = load_sidecar(path)?;
    let img = ingest_bytes(&bytes, sidecar.as_ref(), path)?;
    Ok((img, bytes))
}

/// Image files in `dir`, sorted by file name. Sidecars are skipped.
pub fn list_sources(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            out.push(path);
        }
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(out)
}
