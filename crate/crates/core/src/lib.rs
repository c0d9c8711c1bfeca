//! Synthesis of realistic raw-domain super-resolution training data.
//!
//! The pipeline bins a high-quality Bayer mosaic into a ground-truth linear
//! image, degrades it (blur, downsampling, mosaicing, sensor noise), then
//! renders display-referred references through a simulated camera ISP.

// Pixel and matrix loops index several parallel buffers at once.
#![allow(clippy::needless_range_loop)]

pub mod binning;
pub mod color_transform;
pub mod dataset;
pub mod degrade;
pub mod demosaic;
pub mod error;
pub mod io;
pub mod isp;
pub mod metrics;
pub mod rng;
pub mod tiling;
pub mod types;

pub use error::{Error, Result};
pub use types::{BayerPattern, BayerRaw, Channel, ColorImage8, Crop, LinearImage};
