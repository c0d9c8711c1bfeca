#![allow(dead_code)]

use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use rawsynth::io::{encode_linear_png16, encode_png8};
use rawsynth::isp::{quantize8, tone_map, ToneCurve};
use rawsynth::{BayerPattern, LinearImage};

pub const BLACK: f64 = 512.0;
pub const WHITE: f64 = 16383.0;

/// Smooth shading plus a few hard edges; `k` varies the content.
pub fn scene(h: usize, w: usize, k: usize) -> LinearImage {
    let f = 1.0 + k as f64 * 0.37;
    LinearImage::from_fn(h, w, |r, c| {
        let (y, x) = (r as f64, c as f64);
        let bar = if ((x + 0.3 * y) / (17.0 + k as f64)).floor() as i64 % 3 == 0 {
            0.25
        } else {
            0.0
        };
        [
            0.2 + 0.15 * (x * 0.031 * f).sin() * (y * 0.023).cos() + bar,
            0.3 + 0.2 * (x * 0.017 + y * 0.029 * f).sin() + 0.6 * bar,
            0.25 + 0.15 * (y * 0.041 / f).cos() + 0.3 * bar,
        ]
    })
    .unwrap()
}

fn gray16_png(h: usize, w: usize, values: &[u16]) -> Vec<u8> {
    let raw: Vec<u8> = values.iter().flat_map(|v| v.to_ne_bytes()).collect();
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(&raw, w as u32, h as u32, ExtendedColorType::L16)
        .unwrap();
    out
}

/// Writes a Bayer source (16-bit plane plus sidecar) sampled from `scene`.
pub fn write_bayer_source(dir: &Path, name: &str, h: usize, w: usize, k: usize, pattern: BayerPattern) {
    let img = scene(h, w, k);
    let mut values = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let x = img.get(r, c, pattern.color_at(r, c).index());
            values.push((BLACK + x * (WHITE - BLACK)).round() as u16);
        }
    }
    std::fs::write(dir.join(format!("{name}.png")), gray16_png(h, w, &values)).unwrap();
    let sidecar = format!(
        r#"{{"pattern": "{}", "black_level": {BLACK}, "white_level": {WHITE}}}"#,
        pattern.name()
    );
    std::fs::write(dir.join(format!("{name}.json")), sidecar).unwrap();
}

pub fn write_linear_source(dir: &Path, name: &str, h: usize, w: usize, k: usize) {
    std::fs::write(
        dir.join(format!("{name}.png")),
        encode_linear_png16(&scene(h, w, k)).unwrap(),
    )
    .unwrap();
}

pub fn write_srgb_source(dir: &Path, name: &str, h: usize, w: usize, k: usize) {
    let display = quantize8(&tone_map(&scene(h, w, k), ToneCurve::Srgb));
    std::fs::write(dir.join(format!("{name}.png")), encode_png8(&display).unwrap()).unwrap();
}

/// Ten sources of all three kinds. Bayer sources are 2x larger since binning
/// halves them.
pub fn write_corpus(dir: &Path) {
    for k in 0..6 {
        let pattern = BayerPattern::ALL[k % 4];
        write_bayer_source(dir, &format!("bayer_{k}"), 256 + 8 * k, 264 - 4 * k, k, pattern);
    }
    for k in 0..2 {
        write_linear_source(dir, &format!("linear_{k}"), 136, 140 + 2 * k, k + 6);
    }
    for k in 0..2 {
        write_srgb_source(dir, &format!("srgb_{k}"), 130 + k, 136, k + 8);
    }
}

/// Minimal config for the synthetic corpus.
pub fn write_config(path: &Path, source_dir: &Path) {
    let cfg = format!(
        r#"{{"patch_size": 64, "patches_per_image": 2, "source_dir": {}}}"#,
        serde_json::to_string(&source_dir.to_string_lossy()).unwrap()
    );
    std::fs::write(path, cfg).unwrap();
}
