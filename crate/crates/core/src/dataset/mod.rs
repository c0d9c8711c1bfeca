//! Dataset synthesis: from source images to stored
//! `(X_lin, X_gt, X_raw, X_ref)` quadruples plus a manifest.
//!
//! Layout under the output root:
//!
//! ```text
//! lin/NNNNNN.png   16-bit RGB linear image
//! gt/NNNNNN.png    8-bit rendered ground truth
//! raw/NNNNNN.png   16-bit single-plane degraded mosaic (pattern in manifest)
//! ref/NNNNNN.jpg   rendered, JPEG-compressed reference
//! manifest.json
//! ```
//!
//! Every random draw comes from a stream derived from the master seed and the
//! image index, so the output does not depend on the number of workers.

pub mod config;
pub mod ingest;
pub mod manifest;

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

pub use config::{sample_params, GenerationConfig};
pub use ingest::{ingest_bytes, ingest_source, list_sources, Sidecar, SourceImage, SourceKind};
pub use manifest::{DatasetManifest, ExampleRecord, FailureRecord, FileEntry, OutputFiles};

use crate::binning::bin_bayer_to_linear;
use crate::degrade::{degrade, DegradationParams};
use crate::error::{Error, Result};
use crate::io::{
    decode_color8, decode_jpeg, decode_linear_png16, decode_raw_png16, encode_linear_png16, encode_png8,
    encode_raw_png16, read_bytes, sha256_hex, write_atomic,
};
use crate::isp::{render_ground_truth, render_reference, IspProfile};
use crate::rng::{child_stream, derive_seed, StreamRng};
use crate::types::{BayerRaw, ColorImage8, Crop, LinearImage};

/// One synthesized quadruple.
#[derive(Debug, Clone)]
pub struct Example {
    pub x_lin: LinearImage,
    pub x_gt: ColorImage8,
    pub x_raw: BayerRaw,
    /// Pixels decoded from `ref_jpeg`.
    pub x_ref: ColorImage8,
    pub ref_jpeg: Vec<u8>,
}

/// Encoded files of one example, in `lin, gt, raw, ref` order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub lin: Vec<u8>,
    pub gt: Vec<u8>,
    pub raw: Vec<u8>,
    pub reference: Vec<u8>,
}

impl Example {
    pub fn encode(&self) -> Result<EncodedExample> {
        Ok(EncodedExample {
            lin: encode_linear_png16(&self.x_lin)?,
            gt: encode_png8(&self.x_gt)?,
            raw: encode_raw_png16(&self.x_raw)?,
            reference: self.ref_jpeg.clone(),
        })
    }
}

/// The linear image a source contributes: binned if it is a mosaic, then
/// cropped at the top-left to dimensions divisible by 4.
pub fn linear_from_source(src: &SourceImage) -> Result<LinearImage> {
    let full = match src {
        SourceImage::Bayer(raw) => bin_bayer_to_linear(raw)?,
        SourceImage::Linear { image, .. } => image.clone(),
    };
    let (h, w) = (full.height() / 4 * 4, full.width() / 4 * 4);
    if h == 0 || w == 0 {
        return Err(Error::TooSmall {
            height: full.height(),
            width: full.width(),
            min: 4,
        });
    }
    if (h, w) == (full.height(), full.width()) {
        Ok(full)
    } else {
        full.crop(0, 0, h, w)
    }
}

/// Renders the ground truth, degrades, and renders the reference.
pub fn generate_example(x_lin: &LinearImage, params: &DegradationParams, profile: &IspProfile) -> Result<Example> {
    let x_gt = render_ground_truth(x_lin, profile)?;
    let x_raw = degrade(x_lin, params)?;
    let rendered = render_reference(&x_raw, profile)?;
    Ok(Example {
        x_lin: x_lin.clone(),
        x_gt,
        x_raw,
        x_ref: rendered.image,
        ref_jpeg: rendered.jpeg,
    })
}

pub fn file_stem(index: usize) -> String {
    format!("{index:06}")
}

fn relative_paths(index: usize) -> [String; 4] {
    let stem = file_stem(index);
    [
        format!("lin/{stem}.png"),
        format!("gt/{stem}.png"),
        format!("raw/{stem}.png"),
        format!("ref/{stem}.jpg"),
    ]
}

/// Seed of the degradation streams of image `index`.
pub fn example_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, "degrade", index as u64)
}

/// Stream from which image `index` draws its degradation parameters.
pub fn params_stream(master: u64, index: usize) -> StreamRng {
    child_stream(master, "params", index as u64)
}

fn source_id(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn process_source(
    config: &GenerationConfig,
    master: u64,
    index: usize,
    path: &Path,
    root: &Path,
) -> Result<ExampleRecord> {
    let (src, bytes) = ingest_source(path)?;
    let x_lin = linear_from_source(&src)?;
    if x_lin.height() < config.patch_size || x_lin.width() < config.patch_size {
        return Err(Error::TooSmall {
            height: x_lin.height(),
            width: x_lin.width(),
            min: config.patch_size,
        });
    }
    let params = sample_params(&mut params_stream(master, index), config, example_seed(master, index));
    let encoded = generate_example(&x_lin, &params, &config.isp_profile)?.encode()?;
    let [lin, gt, raw, reference] = relative_paths(index);
    let files = OutputFiles {
        lin: FileEntry::of(lin, &encoded.lin),
        gt: FileEntry::of(gt, &encoded.gt),
        raw: FileEntry::of(raw, &encoded.raw),
        reference: FileEntry::of(reference, &encoded.reference),
    };
    for (entry, data) in files
        .entries()
        .into_iter()
        .zip([&encoded.lin, &encoded.gt, &encoded.raw, &encoded.reference])
    {
        write_atomic(&root.join(&entry.path), data)?;
    }
    Ok(ExampleRecord {
        index,
        source_id: source_id(path),
        source_path: path.to_string_lossy().into_owned(),
        source_sha256: sha256_hex(&bytes),
        source_kind: src.kind(),
        pseudo_linear: src.pseudo_linear(),
        lin_height: x_lin.height(),
        lin_width: x_lin.width(),
        params,
        files,
    })
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Synthesizes one example per source and writes files and manifest.
///
/// Sources that fail are skipped and listed under `failures`; the manifest
/// is still written.
pub fn generate_dataset(
    config: &GenerationConfig,
    master: u64,
    sources: &[PathBuf],
    root: &Path,
    jobs: Option<usize>,
) -> Result<DatasetManifest> {
    config.validate()?;
    let results: Vec<(usize, &PathBuf, Result<ExampleRecord>)> = with_jobs(jobs, || {
        sources
            .par_iter()
            .enumerate()
            .map(|(i, path)| (i, path, process_source(config, master, i, path, root)))
            .collect()
    })?;
    let mut manifest = DatasetManifest::new(config, master);
    for (index, path, result) in results {
        match result {
            Ok(record) => manifest.examples.push(record),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                manifest.failures.push(FailureRecord {
                    index,
                    source_id: source_id(path),
                    error: e.to_string(),
                });
            }
        }
    }
    manifest.write(root)?;
    Ok(manifest)
}

/// Recomputes the files of one record from its source and parameters.
pub fn regenerate(record: &ExampleRecord, profile: &IspProfile) -> Result<EncodedExample> {
    let path = Path::new(&record.source_path);
    let (src, bytes) = ingest_source(path)?;
    let actual = sha256_hex(&bytes);
    if actual != record.source_sha256 {
        return Err(Error::ChecksumMismatch {
            path: path.to_path_buf(),
            expected: record.source_sha256.clone(),
            actual,
        });
    }
    generate_example(&linear_from_source(&src)?, &record.params, profile)?.encode()
}

/// Regenerates a record and compares digests with the manifest.
pub fn verify_regeneration(record: &ExampleRecord, profile: &IspProfile) -> Result<()> {
    let encoded = regenerate(record, profile)?;
    for (entry, data) in
        record
            .files
            .entries()
            .into_iter()
            .zip([&encoded.lin, &encoded.gt, &encoded.raw, &encoded.reference])
    {
        let actual = sha256_hex(data);
        if actual != entry.sha256 {
            return Err(Error::ChecksumMismatch {
                path: PathBuf::from(&entry.path),
                expected: entry.sha256.clone(),
                actual,
            });
        }
    }
    Ok(())
}

/// Reads a stored example back.
pub fn load_example(root: &Path, record: &ExampleRecord) -> Result<Example> {
    let files = &record.files;
    let ref_jpeg = read_bytes(&root.join(&files.reference.path))?;
    Ok(Example {
        x_lin: decode_linear_png16(&read_bytes(&root.join(&files.lin.path))?)?,
        x_gt: decode_color8(&read_bytes(&root.join(&files.gt.path))?)?,
        x_raw: decode_raw_png16(&read_bytes(&root.join(&files.raw.path))?, record.params.pattern)?,
        x_ref: decode_jpeg(&ref_jpeg)?,
        ref_jpeg,
    })
}

/// Aligned crops of one example. `top`/`left` index the full-resolution
/// grid; the half-resolution crops start at `top / 2`, `left / 2`.
#[derive(Debug, Clone)]
pub struct PatchQuad {
    pub top: usize,
    pub left: usize,
    pub lin: LinearImage,
    pub gt: ColorImage8,
    pub raw: BayerRaw,
    pub reference: ColorImage8,
}

/// Draws `count` full-resolution corners uniformly over aligned positions.
/// Corners are multiples of 4, so half-resolution corners are even.
pub fn patch_positions<R: Rng + ?Sized>(
    height: usize,
    width: usize,
    size: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if size == 0 || !size.is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!(
            "patch size {size} must be a positive multiple of 4"
        )));
    }
    if height < size || width < size {
        return Err(Error::TooSmall {
            height,
            width,
            min: size,
        });
    }
    let (rows, cols) = ((height - size) / 4, (width - size) / 4);
    Ok((0..count)
        .map(|_| (4 * rng.random_range(0..=rows), 4 * rng.random_range(0..=cols)))
        .collect())
}

pub fn extract_patches<R: Rng + ?Sized>(
    ex: &Example,
    size: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<PatchQuad>> {
    let positions = patch_positions(ex.x_lin.height(), ex.x_lin.width(), size, count, rng)?;
    let half = size / 2;
    positions
        .into_iter()
        .map(|(top, left)| {
            Ok(PatchQuad {
                top,
                left,
                lin: ex.x_lin.crop(top, left, size, size)?,
                gt: ex.x_gt.crop(top, left, size, size)?,
                raw: ex.x_raw.crop(top / 2, left / 2, half, half)?,
                reference: ex.x_ref.crop(top / 2, left / 2, half, half)?,
            })
        })
        .collect()
}

/// Stream for the patches of image `index`.
pub fn patch_stream(master: u64, index: usize) -> StreamRng {
    child_stream(master, "patches", index as u64)
}
