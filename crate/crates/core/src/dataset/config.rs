use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::degrade::kernel::{sample_motion_steps, MOTION_SIZE_RANGE};
use crate::degrade::{DegradationParams, DEFOCUS_RADIUS_RANGE, SIGMA1_MAX, SIGMA2_MAX};
use crate::error::{Error, Result};
use crate::isp::IspProfile;
use crate::types::BayerPattern;

/// Defocus radius used by the non-blind setting.
pub const NON_BLIND_DEFOCUS_RADIUS: f64 = 5.0;
pub const DEFAULT_PATCHES_PER_IMAGE: usize = 8;

/// Everything that controls dataset synthesis apart from the master seed.
///
/// Read from JSON; omitted keys take their defaults and unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub defocus_radius_range: [f64; 2],
    pub motion_size_range: [usize; 2],
    pub sigma1_range: [f64; 2],
    pub sigma2_range: [f64; 2],
    pub patch_size: usize,
    pub patches_per_image: usize,
    pub isp_profile: IspProfile,
    /// Fixed radius-5 defocus and no motion blur.
    pub non_blind: bool,
    /// Mosaic layout of the degraded raw images.
    pub bayer_pattern: BayerPattern,
    /// Permits ranges beyond the published ones.
    pub override_bounds: bool,
    /// Directory of source images; relative paths resolve against the
    /// config file's directory.
    pub source_dir: Option<PathBuf>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            defocus_radius_range: [DEFOCUS_RADIUS_RANGE.0, DEFOCUS_RADIUS_RANGE.1],
            motion_size_range: [MOTION_SIZE_RANGE.0, MOTION_SIZE_RANGE.1],
            sigma1_range: [0.0, SIGMA1_MAX],
            sigma2_range: [0.0, SIGMA2_MAX],
            patch_size: crate::tiling::DEFAULT_PATCH_SIZE,
            patches_per_image: DEFAULT_PATCHES_PER_IMAGE,
            isp_profile: IspProfile::default(),
            non_blind: false,
            bayer_pattern: BayerPattern::Rggb,
            override_bounds: false,
            source_dir: None,
        }
    }
}

fn check_range(name: &str, [lo, hi]: [f64; 2], bounds: (f64, f64), enforce: bool) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter(format!("{name} range [{lo}, {hi}] is empty")));
    }
    if enforce && (lo < bounds.0 || hi > bounds.1) {
        return Err(Error::InvalidParameter(format!(
            "{name} range [{lo}, {hi}] exceeds [{}, {}]; set override_bounds to allow it",
            bounds.0, bounds.1
        )));
    }
    Ok(())
}

impl GenerationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GenerationConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file. A relative `source_dir` is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(dir), Some(base)) = (&cfg.source_dir, path.parent()) {
            if dir.is_relative() {
                cfg.source_dir = Some(base.join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let enforce = !self.override_bounds;
        check_range(
            "defocus radius",
            self.defocus_radius_range,
            DEFOCUS_RADIUS_RANGE,
            enforce,
        )?;
        if self.defocus_radius_range[0] <= 0.0 {
            return Err(Error::InvalidParameter("defocus radius must be positive".into()));
        }
        check_range("sigma1", self.sigma1_range, (0.0, SIGMA1_MAX), enforce)?;
        check_range("sigma2", self.sigma2_range, (0.0, SIGMA2_MAX), enforce)?;
        if self.sigma1_range[0] < 0.0 || self.sigma2_range[0] < 0.0 {
            return Err(Error::InvalidParameter("noise sigmas must be non-negative".into()));
        }
        // The kernel generator itself only supports odd sizes in this range.
        let [mlo, mhi] = self.motion_size_range;
        if mlo > mhi || mlo < MOTION_SIZE_RANGE.0 || mhi > MOTION_SIZE_RANGE.1 || odd_sizes(mlo, mhi).is_empty() {
            return Err(Error::InvalidParameter(format!(
                "motion size range [{mlo}, {mhi}] must contain an odd size within [{}, {}]",
                MOTION_SIZE_RANGE.0, MOTION_SIZE_RANGE.1
            )));
        }
        if self.patch_size == 0 || !self.patch_size.is_multiple_of(4) {
            return Err(Error::InvalidParameter(format!(
                "patch size {} must be a positive multiple of 4",
                self.patch_size
            )));
        }
        self.isp_profile.validate()
    }

    /// Whether `p` lies inside this config's ranges.
    pub fn admits(&self, p: &DegradationParams) -> bool {
        let inside = |[lo, hi]: [f64; 2], v: f64| lo <= v && v <= hi;
        let radius_ok = if self.non_blind {
            p.defocus_radius == NON_BLIND_DEFOCUS_RADIUS && p.motion_steps == 0
        } else {
            inside(self.defocus_radius_range, p.defocus_radius)
        };
        radius_ok
            && (self.motion_size_range[0]..=self.motion_size_range[1]).contains(&p.motion_max_size)
            && inside(self.sigma1_range, p.sigma1)
            && inside(self.sigma2_range, p.sigma2)
            && p.pattern == self.bayer_pattern
    }
}

fn odd_sizes(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).filter(|s| s % 2 == 1).collect()
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Draws one degradation setting; `seed` keys the kernel and noise streams.
///
/// Motion sizes are drawn uniformly among the odd sizes in range. In
/// non-blind mode the defocus radius is fixed and the motion kernel is the
/// identity; noise is still sampled.
pub fn sample_params<R: Rng + ?Sized>(rng: &mut R, config: &GenerationConfig, seed: u64) -> DegradationParams {
    let sizes = odd_sizes(config.motion_size_range[0], config.motion_size_range[1]);
    let (defocus_radius, motion_max_size, motion_steps) = if config.non_blind {
        (NON_BLIND_DEFOCUS_RADIUS, sizes[0], 0)
    } else {
        let radius = uniform(rng, config.defocus_radius_range);
        let size = sizes[rng.random_range(0..sizes.len())];
        (radius, size, sample_motion_steps(size, rng))
    };
    let sigma1 = uniform(rng, config.sigma1_range);
    let sigma2 = uniform(rng, config.sigma2_range);
    DegradationParams {
        defocus_radius,
        motion_max_size,
        motion_steps,
        sigma1,
        sigma2,
        pattern: config.bayer_pattern,
        seed,
    }
}
