use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use rawsynth::binning::bin_bayer_to_linear;
use rawsynth::color_transform::{apply_global, apply_pixelwise, GlobalTransform, PixelTransformField};
use rawsynth::dataset::{
    self, extract_patches, generate_dataset, ingest_source, list_sources, load_example, patch_stream, sample_params,
    DatasetManifest, GenerationConfig, SourceImage,
};
use rawsynth::degrade::degrade;
use rawsynth::demosaic::{demosaic_ahd, demosaic_bilinear};
use rawsynth::io::{
    decode, decode_linear_png16, decode_raw_png16, encode_linear_png16, encode_png8, encode_raw_png16, read_bytes,
    write_atomic, Decoded,
};
use rawsynth::isp::{render_ground_truth, render_reference};
use rawsynth::metrics::{psnr, ssim, Planar};
use rawsynth::rng::stream;
use rawsynth::{BayerPattern, ColorImage8, LinearImage};

#[derive(Parser)]
#[command(
    name = "rawsynth",
    version,
    about = "Synthesize raw-domain super-resolution training data"
)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Generation config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file, or output directory for `dataset` and `patches`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ahd,
    Bilinear,
}

#[derive(Subcommand)]
enum Command {
    /// Bin a 16-bit Bayer plane (with sidecar) into a linear RGB image.
    Bin { input: PathBuf },
    /// Degrade a 16-bit linear RGB image into a noisy half-size mosaic.
    Degrade {
        input: PathBuf,
        #[arg(long)]
        defocus: Option<f64>,
        #[arg(long)]
        motion_size: Option<usize>,
        #[arg(long)]
        motion_steps: Option<usize>,
        #[arg(long)]
        sigma1: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        pattern: Option<BayerPattern>,
    },
    /// Demosaic a 16-bit mosaic into a 16-bit linear RGB image.
    Demosaic {
        input: PathBuf,
        #[arg(long, default_value_t = BayerPattern::Rggb)]
        pattern: BayerPattern,
        #[arg(long, value_enum, default_value_t = Method::Ahd)]
        method: Method,
    },
    /// Render a mosaic to a JPEG reference, or a linear image to an 8-bit PNG.
    Isp {
        input: PathBuf,
        #[arg(long, default_value_t = BayerPattern::Rggb)]
        pattern: BayerPattern,
    },
    /// Synthesize a dataset from a directory of source images.
    Dataset {
        /// Source directory; overrides the config's `source_dir`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Cut aligned patch quadruples from a generated dataset.
    Patches {
        /// Dataset root containing manifest.json.
        dataset: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Print PSNR and SSIM of two images as one JSON line.
    Metrics { a: PathBuf, b: PathBuf },
    /// Apply a per-pixel (.npy, H x W x 9) or global (.json, 3x3) transform.
    ApplyTransform { input: PathBuf, transform: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<GenerationConfig> {
    match &cli.config {
        Some(path) => GenerationConfig::load(path).with_context(|| format!("loading config {}", path.display())),
        None => Ok(GenerationConfig::default()),
    }
}

fn out_path(cli: &Cli) -> Result<&Path> {
    cli.out.as_deref().context("--out is required")
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_linear(path: &Path) -> Result<LinearImage> {
    decode_linear_png16(&read_bytes(path)?).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Bin { input } => {
            let (src, _) = ingest_source(input)?;
            let SourceImage::Bayer(raw) = src else {
                bail!("{} is not a single-plane Bayer image", input.display());
            };
            write(out_path(cli)?, &encode_linear_png16(&bin_bayer_to_linear(&raw)?)?)?;
        }
        Command::Degrade {
            input,
            defocus,
            motion_size,
            motion_steps,
            sigma1,
            sigma2,
            pattern,
        } => {
            let x_lin = read_linear(input)?;
            let mut params = sample_params(&mut stream(cli.seed), &config, cli.seed);
            if let Some(r) = defocus {
                params.defocus_radius = *r;
            }
            if let Some(s) = motion_size {
                params.motion_max_size = *s;
            }
            if let Some(n) = motion_steps {
                params.motion_steps = *n;
            }
            if let Some(s) = sigma1 {
                params.sigma1 = *s;
            }
            if let Some(s) = sigma2 {
                params.sigma2 = *s;
            }
            if let Some(p) = pattern {
                params.pattern = *p;
            }
            let raw = degrade(&x_lin, &params)?;
            write(out_path(cli)?, &encode_raw_png16(&raw)?)?;
            println!("{}", serde_json::to_string(&params)?);
        }
        Command::Demosaic { input, pattern, method } => {
            let raw = decode_raw_png16(&read_bytes(input)?, *pattern)?;
            let rgb = match method {
                Method::Ahd => demosaic_ahd(&raw),
                Method::Bilinear => demosaic_bilinear(&raw),
            };
            write(out_path(cli)?, &encode_linear_png16(&rgb)?)?;
        }
        Command::Isp { input, pattern } => {
            let profile = &config.isp_profile;
            let bytes = match decode(&read_bytes(input)?)? {
                Decoded::Gray16(..) => {
                    let raw = decode_raw_png16(&read_bytes(input)?, *pattern)?;
                    render_reference(&raw, profile)?.jpeg
                }
                Decoded::Rgb16(..) => encode_png8(&render_ground_truth(&read_linear(input)?, profile)?)?,
                Decoded::Rgb8(..) => bail!("{} is already display-referred", input.display()),
            };
            write(out_path(cli)?, &bytes)?;
        }
        Command::Dataset { input } => return run_dataset(cli, &config, input.as_deref()),
        Command::Patches { dataset, size, count } => run_patches(cli, dataset, *size, *count)?,
        Command::Metrics { a, b } => println!("{}", metrics_line(a, b)?),
        Command::ApplyTransform { input, transform } => {
            let img = read_linear(input)?;
            let out = if transform.extension().is_some_and(|e| e == "npy") {
                let file = File::open(transform).with_context(|| format!("opening {}", transform.display()))?;
                apply_pixelwise(&img, &PixelTransformField::read_npy(BufReader::new(file))?)?
            } else {
                let m: [[f64; 3]; 3] = serde_json::from_slice(&read_bytes(transform)?)
                    .with_context(|| format!("{} must hold a 3x3 array", transform.display()))?;
                apply_global(&img, &GlobalTransform::new(m)?)
            };
            write(out_path(cli)?, &encode_linear_png16(&out)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_dataset(cli: &Cli, config: &GenerationConfig, input: Option<&Path>) -> Result<ExitCode> {
    let source_dir = input
        .or(config.source_dir.as_deref())
        .context("no source directory: pass --input or set source_dir in the config")?;
    let root = out_path(cli)?;
    let sources = list_sources(source_dir)?;
    if sources.is_empty() {
        bail!("no source images in {}", source_dir.display());
    }
    let manifest = generate_dataset(config, cli.seed, &sources, root, cli.jobs)?;
    eprintln!(
        "{} examples written to {}, {} failed",
        manifest.examples.len(),
        root.display(),
        manifest.failures.len()
    );
    Ok(if manifest.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_patches(cli: &Cli, root: &Path, size: Option<usize>, count: Option<usize>) -> Result<()> {
    let manifest = DatasetManifest::read(root)?;
    manifest.verify_files(root)?;
    let size = size.unwrap_or(manifest.config.patch_size);
    let count = count.unwrap_or(manifest.config.patches_per_image);
    let out = out_path(cli)?;
    let mut index = Vec::new();
    for record in &manifest.examples {
        let ex = load_example(root, record)?;
        let patches = extract_patches(&ex, size, count, &mut patch_stream(manifest.master_seed, record.index))?;
        for (k, p) in patches.iter().enumerate() {
            let stem = format!("{}_{k:02}", dataset::file_stem(record.index));
            write(&out.join(format!("lin/{stem}.png")), &encode_linear_png16(&p.lin)?)?;
            write(&out.join(format!("gt/{stem}.png")), &encode_png8(&p.gt)?)?;
            write(&out.join(format!("raw/{stem}.png")), &encode_raw_png16(&p.raw)?)?;
            write(&out.join(format!("ref/{stem}.png")), &encode_png8(&p.reference)?)?;
            index.push(json!({
                "example": record.index,
                "patch": k,
                "top": p.top,
                "left": p.left,
                "raw_top": p.top / 2,
                "raw_left": p.left / 2,
                "size": size,
                "pattern": p.raw.pattern(),
            }));
        }
    }
    let mut text = serde_json::to_string_pretty(&index)?;
    text.push('\n');
    write(&out.join("patches.json"), text.as_bytes())
}

fn psnr_json(v: f64) -> serde_json::Value {
    if v.is_infinite() {
        json!("inf")
    } else {
        json!(v)
    }
}

fn pair_line<T: Planar>(a: &T, b: &T) -> Result<String> {
    Ok(json!({"psnr": psnr_json(psnr(a, b, T::PEAK)?), "ssim": ssim(a, b)?}).to_string())
}

fn metrics_line(a: &Path, b: &Path) -> Result<String> {
    match (decode(&read_bytes(a)?)?, decode(&read_bytes(b)?)?) {
        (Decoded::Rgb8(h1, w1, d1), Decoded::Rgb8(h2, w2, d2)) => {
            pair_line(&ColorImage8::new(h1, w1, d1)?, &ColorImage8::new(h2, w2, d2)?)
        }
        (Decoded::Rgb16(..), Decoded::Rgb16(..)) => pair_line(&read_linear(a)?, &read_linear(b)?),
        _ => bail!("both images must be 8-bit RGB or both 16-bit RGB"),
    }
}
