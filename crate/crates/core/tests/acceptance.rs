//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use rawsynth::color_transform::{apply_global, apply_pixelwise, fit_global, GlobalTransform, PixelTransformField};
use rawsynth::dataset::{verify_regeneration, DatasetManifest};
use rawsynth::degrade::kernel::sample_motion_steps;
use rawsynth::degrade::{
    add_hetero_noise, bayer_sample, convolve, degrade, disk_kernel, downsample2, random_walk_motion_kernel,
    DegradationParams, Kernel,
};
use rawsynth::demosaic::{demosaic_ahd, demosaic_bilinear};
use rawsynth::isp::{render_display, render_reference, IspProfile};
use rawsynth::metrics::{psnr, ssim};
use rawsynth::rng::stream;
use rawsynth::tiling::{chop_linear, merge};
use rawsynth::{BayerPattern, BayerRaw, LinearImage};

type Outcome = Result<String, String>;
type Field = fn(f64, f64) -> f64;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let spent = start.elapsed();
    ensure(spent < limit, || format!("took {spent:.2?}, limit {limit:?}"))?;
    Ok(spent)
}

fn check_kernel(k: &Kernel, declared: usize) -> Result<(), String> {
    let sum: f64 = k.weights().iter().sum();
    ensure((sum - 1.0).abs() <= 1e-9, || format!("sum {sum}"))?;
    ensure(k.weights().iter().all(|&w| w >= 0.0), || "negative weight".into())?;
    ensure(k.weights().len() == k.size() * k.size(), || "weight count".into())?;
    ensure(k.size() <= declared && k.size() % 2 == 1, || {
        format!("size {} exceeds declared support {declared}", k.size())
    })
}

fn kernel_contracts() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(2024);
    for _ in 0..1000 {
        let radius = rng.random_range(0.05..=5.0);
        let disk = disk_kernel(radius).map_err(|e| e.to_string())?;
        check_kernel(&disk, 2 * (radius.ceil() as usize) + 1).map_err(|e| format!("disk r={radius}: {e}"))?;

        let size = 3 + 2 * rng.random_range(0..=4usize);
        let steps = sample_motion_steps(size, &mut rng);
        let motion = random_walk_motion_kernel(size, steps, &mut rng).map_err(|e| e.to_string())?;
        check_kernel(&motion, size).map_err(|e| format!("motion size={size} steps={steps}: {e}"))?;
    }
    let spent = within_time(start, Duration::from_secs(5))?;
    Ok(format!("1000 disk + 1000 motion kernels in {spent:.2?}"))
}

fn noise_statistics() -> Outcome {
    let start = Instant::now();
    let (s1, s2, n) = (1e-2, 1e-3, 1000usize);
    let mut report = Vec::new();
    for (i, x) in [0.25, 0.1, 0.5, 0.9].into_iter().enumerate() {
        let raw = BayerRaw::new(n, n, vec![x; n * n], BayerPattern::Rggb).map_err(|e| e.to_string())?;
        let noisy = add_hetero_noise(&raw, s1, s2, &mut stream(100 + i as u64)).map_err(|e| e.to_string())?;
        let d = noisy.data();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        let want = s1 * s1 * x + s2 * s2;
        let rel = (var / want - 1.0).abs();
        ensure(rel <= 0.02, || format!("x={x}: variance {var:.4e} vs {want:.4e}"))?;
        report.push(format!("x={x}: {:.2}%", rel * 100.0));
    }
    let spent = within_time(start, Duration::from_secs(10))?;
    Ok(format!("{} in {spent:.2?}", report.join(", ")))
}

fn pipeline_composition() -> Outcome {
    let img = common::scene(16, 16, 3);
    let params = DegradationParams {
        defocus_radius: 2.3,
        motion_max_size: 7,
        motion_steps: 9,
        sigma1: 8e-3,
        sigma2: 6e-4,
        pattern: BayerPattern::Gbrg,
        seed: 31,
    };
    let got = degrade(&img, &params).map_err(|e| e.to_string())?;
    let chain = || -> rawsynth::Result<BayerRaw> {
        let kd = params.defocus_kernel()?;
        let km = params.motion_kernel()?;
        let blurred = convolve(&convolve(&img, &kd)?, &km)?;
        let mosaic = bayer_sample(&downsample2(&blurred)?, params.pattern)?;
        add_hetero_noise(&mosaic, params.sigma1, params.sigma2, &mut params.noise_rng())
    };
    let want = chain().map_err(|e| e.to_string())?;
    ensure(got == want, || "degrade differs from the explicit chain".into())?;
    Ok("16x16, bit-identical".into())
}

fn constancy_chain() -> Outcome {
    let color = [0.3, 0.5, 0.2];
    let img = LinearImage::constant(64, 64, color).map_err(|e| e.to_string())?;
    let raw = degrade(&img, &DegradationParams::identity(BayerPattern::Rggb)).map_err(|e| e.to_string())?;
    let demosaiced = demosaic_ahd(&raw);
    ensure(demosaiced == LinearImage::constant(32, 32, color).unwrap(), || {
        "demosaiced image is not the constant".into()
    })?;
    let profile = IspProfile::default();
    let display = render_display(&demosaiced, &profile).map_err(|e| e.to_string())?;
    let expected = render_display(&LinearImage::constant(1, 1, color).unwrap(), &profile)
        .unwrap()
        .pixel(0, 0);
    let all = |im: &rawsynth::ColorImage8, px: [u8; 3]| {
        (0..im.height()).all(|r| (0..im.width()).all(|c| im.pixel(r, c) == px))
    };
    ensure(all(&display, expected), || "rendered image is not constant".into())?;
    let jpeg = render_reference(&raw, &profile).map_err(|e| e.to_string())?;
    let first = jpeg.image.pixel(0, 0);
    ensure(all(&jpeg.image, first), || "decoded JPEG is not constant".into())?;
    Ok(format!("rendered {expected:?}, JPEG {first:?}"))
}

fn demosaic_ordering() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let fields: [(&str, Field); 3] = [
        ("radial", |r, c| {
            (-((r - 128.0).powi(2) + (c - 128.0).powi(2)) / (2.0 * 60.0 * 60.0)).exp()
        }),
        ("ramp", |r, c| (r + 0.6 * c) / 420.0),
        ("sinusoid", |r, c| 0.5 + 0.45 * (r * 0.031 + c * 0.012).sin()),
    ];
    let mut report = Vec::new();
    for (name, f) in fields {
        let img = LinearImage::from_fn(n, n, |r, c| {
            let t = f(r as f64, c as f64);
            [0.1 + 0.8 * t, 0.15 + 0.7 * t, 0.2 + 0.5 * t]
        })
        .unwrap();
        let raw = bayer_sample(&img, BayerPattern::Rggb).map_err(|e| e.to_string())?;
        let p_ahd = psnr(&demosaic_ahd(&raw), &img, 1.0).unwrap();
        let p_bil = psnr(&demosaic_bilinear(&raw), &img, 1.0).unwrap();
        ensure(p_ahd >= p_bil && p_bil >= 40.0, || {
            format!("{name}: AHD {p_ahd:.3} dB, bilinear {p_bil:.3} dB")
        })?;
        report.push(format!("{name} {p_ahd:.2}/{p_bil:.2}"));
    }
    let spent = within_time(start, Duration::from_secs(30))?;
    Ok(format!("AHD/bilinear dB: {} in {spent:.2?}", report.join(", ")))
}

fn metric_closed_forms() -> Outcome {
    let a = LinearImage::constant(32, 32, [0.5; 3]).unwrap();
    let b = LinearImage::constant(32, 32, [0.6; 3]).unwrap();
    let p = psnr(&a, &b, 1.0).map_err(|e| e.to_string())?;
    ensure(p == 20.0, || format!("PSNR {p:?}"))?;
    let img = common::scene(48, 40, 1);
    let s = ssim(&img, &img).map_err(|e| e.to_string())?;
    ensure((s - 1.0).abs() <= 1e-9, || format!("SSIM {s:?}"))?;
    Ok(format!("PSNR {p:?} dB, SSIM(a,a) {s:?}"))
}

fn tiling_identity() -> Outcome {
    let mut rng = stream(77);
    let mut configs = 0;
    for _ in 0..300 {
        let (h, w) = (rng.random_range(1..=160usize), rng.random_range(1..=160usize));
        let patch = rng.random_range(1..=h.min(w));
        let overlap = rng.random_range(0..patch);
        let img = LinearImage::from_fn(h, w, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap();
        let tiles = chop_linear(&img, patch, overlap).map_err(|e| e.to_string())?;
        let merged = merge(&tiles, h, w, 1).map_err(|e| e.to_string())?;
        ensure(merged == img, || format!("{h}x{w}, patch {patch}, overlap {overlap}"))?;
        configs += 1;
    }
    Ok(format!("{configs} random (size, patch, overlap) configurations"))
}

fn color_transform_oracle() -> Outcome {
    let mut rng = stream(5);
    let src = LinearImage::from_fn(64, 64, |_, _| {
        [
            rng.random_range(0.0..0.8),
            rng.random_range(0.0..0.8),
            rng.random_range(0.0..0.8),
        ]
    })
    .unwrap();
    let planted = [[1.2, 0.0, 0.0], [0.0, 0.9, 0.0], [0.0, 0.0, 1.1]];
    let dst = apply_global(&src, &GlobalTransform(planted));
    let fit = fit_global(&src, &dst).map_err(|e| e.to_string())?;
    let err = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (fit.0[i][j] - planted[i][j]).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-6, || format!("max entry error {err:.3e}"))?;
    let m = [[0.9, 0.2, -0.1], [0.05, 1.1, -0.15], [-0.2, 0.1, 1.3]];
    let field = PixelTransformField::constant(64, 64, &m);
    let pixelwise = apply_pixelwise(&src, &field).map_err(|e| e.to_string())?;
    ensure(pixelwise == apply_global(&src, &GlobalTransform(m)), || {
        "constant field differs from global transform".into()
    })?;
    Ok(format!("max entry error {err:.1e}; constant field bit-identical"))
}

fn tree_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sources = tmp.path().join("sources");
    std::fs::create_dir_all(&sources).unwrap();
    common::write_corpus(&sources);
    let config = tmp.path().join("config.json");
    common::write_config(&config, &sources);

    let run = |out: &Path, jobs: &str| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_rawsynth"))
            .args(["dataset", "--seed", "7", "--jobs", jobs, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("dataset run exited with {status}"))
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a, "1")?;
    run(&b, "4")?;
    let (fa, fb) = (tree_files(&a), tree_files(&b));
    ensure(fa.len() == 41, || {
        format!("expected 40 images + manifest, found {} files", fa.len())
    })?;
    ensure(fa == fb, || "runs differ".into())?;

    let manifest = DatasetManifest::read(&a).map_err(|e| e.to_string())?;
    ensure(manifest.examples.len() == 10 && manifest.failures.is_empty(), || {
        format!(
            "{} examples, {} failures",
            manifest.examples.len(),
            manifest.failures.len()
        )
    })?;
    manifest.verify_files(&a).map_err(|e| e.to_string())?;
    for record in &manifest.examples {
        ensure(manifest.config.admits(&record.params), || {
            format!("record {} out of range", record.index)
        })?;
        verify_regeneration(record, &manifest.isp_profile).map_err(|e| format!("record {}: {e}", record.index))?;
    }
    let spent = within_time(start, Duration::from_secs(120))?;
    Ok(format!(
        "10 images, 41 files identical across --jobs 1/4, all records regenerate, {spent:.2?}"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("kernel contracts", kernel_contracts),
        ("noise statistics", noise_statistics),
        ("pipeline composition", pipeline_composition),
        ("constancy chain", constancy_chain),
        ("demosaic ordering", demosaic_ordering),
        ("metric closed forms", metric_closed_forms),
        ("tiling identity", tiling_identity),
        ("color-transform oracle", color_transform_oracle),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
