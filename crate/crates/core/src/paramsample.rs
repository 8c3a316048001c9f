//! Per-image development recipes.
//!
//! A recipe is a pure function of `(master_seed, image_id, profile)`: the
//! image's keyed stream is consumed in a fixed order, drawing every
//! parameter even when the profile later discards it, so the learning and
//! test recipes of one image share their demosaic/resize/denoise draws.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("invalid distribution parameter: {0}")]
    Argument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DemosaicMethod {
    /// Nearest-neighbour fill within each Bayer cell.
    Fast,
    /// Gradient-corrected bilinear interpolation standing in for DCB.
    #[serde(rename = "DCB")]
    Dcb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResizeKernel {
    Nearest,
    Bilinear,
    Bicubic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Training corpora: unsharp masking is never applied.
    Learning,
    /// Test corpora: unsharp masking may be enabled to induce mismatch.
    Test,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Learning => "learning",
            Profile::Test => "test",
        })
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "learning" => Ok(Profile::Learning),
            "test" => Ok(Profile::Test),
            _ => Err(format!("unknown profile {s:?} (expected learning or test)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub image_id: String,
}

impl SeedSpec {
    pub fn new(master_seed: u64, image_id: impl Into<String>) -> Self {
        SeedSpec {
            master_seed,
            image_id: image_id.into(),
        }
    }

    pub fn stream(&self) -> rng::StreamRng {
        rng::stream("recipe", self.master_seed, &self.image_id)
    }
}

/// Complete development parameters of one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevRecipe {
    pub demosaic: DemosaicMethod,
    pub resize_kernel: ResizeKernel,
    pub target_side: usize,
    pub usm_enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usm_amount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoise_intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoise_detail: Option<u32>,
    pub microcontrast_enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_uniformity: Option<u32>,
    pub quality_factor: u8,
}

pub const DENOISE_INTENSITY_MAX: f64 = 60.0;
pub const DENOISE_DETAIL_MAX: u32 = 40;
pub const MC_STRENGTH_MAX: f64 = 100.0;

impl DevRecipe {
    /// Checks the range and presence invariants, naming the first violation.
    pub fn validate(&self, profile: Option<Profile>) -> Result<(), String> {
        if profile == Some(Profile::Learning) && self.usm_enabled {
            return Err("learning recipes never enable unsharp masking".into());
        }
        if self.usm_enabled != self.usm_amount.is_some() {
            return Err("usm_amount must be present exactly when USM is enabled".into());
        }
        if self.usm_amount.is_some_and(|a| !(a >= 0.0)) {
            return Err("usm_amount must be non-negative".into());
        }
        if !self.usm_enabled
            && (self.denoise_intensity.is_none() || self.denoise_detail.is_none())
        {
            return Err("denoise parameters required when USM is off".into());
        }
        if self
            .denoise_intensity
            .is_some_and(|v| !(0.0..=DENOISE_INTENSITY_MAX).contains(&v))
        {
            return Err("denoise_intensity outside [0, 60]".into());
        }
        if self.denoise_detail.is_some_and(|d| d > DENOISE_DETAIL_MAX) {
            return Err("denoise_detail outside [0, 40]".into());
        }
        if self.microcontrast_enabled != (self.mc_strength.is_some() && self.mc_uniformity.is_some())
        {
            return Err("micro-contrast parameters must be present exactly when enabled".into());
        }
        if self
            .mc_strength
            .is_some_and(|v| !(0.0..=MC_STRENGTH_MAX).contains(&v))
        {
            return Err("mc_strength outside [0, 100]".into());
        }
        if !(1..=100).contains(&self.quality_factor) {
            return Err("quality_factor outside [1, 100]".into());
        }
        if self.target_side == 0 {
            return Err("target_side must be positive".into());
        }
        Ok(())
    }
}

/// Knobs that the source material leaves open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Probability of enabling unsharp masking in the test profile.
    pub usm_probability: f64,
    /// Uniform range of the unsharp-mask amount when enabled.
    pub usm_amount_range: (f64, f64),
    pub target_side: usize,
    pub quality_factor: u8,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            usm_probability: 0.5,
            usm_amount_range: (0.5, 2.0),
            target_side: 1024,
            quality_factor: 75,
        }
    }
}

pub fn sample_recipe(seed: &SeedSpec, profile: Profile) -> DevRecipe {
    sample_recipe_with(seed, profile, &SamplerConfig::default())
}

pub fn sample_recipe_with(seed: &SeedSpec, profile: Profile, cfg: &SamplerConfig) -> DevRecipe {
    let mut rng = seed.stream();

    let demosaic = if rng.random::<f64>() < 0.35 {
        DemosaicMethod::Fast
    } else {
        DemosaicMethod::Dcb
    };
    let u: f64 = rng.random();
    let resize_kernel = if u < 0.2 {
        ResizeKernel::Nearest
    } else if u < 0.7 {
        ResizeKernel::Bicubic
    } else {
        ResizeKernel::Bilinear
    };

    let usm_draw: f64 = rng.random();
    let (lo, hi) = cfg.usm_amount_range;
    let usm_amount = lo + (hi - lo) * rng.random::<f64>();
    let usm_enabled = profile == Profile::Test && usm_draw < cfg.usm_probability;

    let intensity = sample_gamma_scaled(4.0, 10.0, 0.0, DENOISE_INTENSITY_MAX, &mut rng)
        .expect("constant gamma parameters are valid");
    let detail = rng.random_range(0..=DENOISE_DETAIL_MAX);

    let mc_enabled = rng.random::<f64>() < 0.5;
    let strength = sample_gamma_scaled(1.0, 50.0, 0.0, MC_STRENGTH_MAX, &mut rng)
        .expect("constant gamma parameters are valid");
    let uniformity = sample_floor_normal(30.0, 5.0, 0.0, &mut rng)
        .expect("constant normal parameters are valid");

    DevRecipe {
        demosaic,
        resize_kernel,
        target_side: cfg.target_side,
        usm_enabled,
        usm_amount: usm_enabled.then_some(usm_amount),
        denoise_intensity: (!usm_enabled).then_some(intensity),
        denoise_detail: (!usm_enabled).then_some(detail),
        microcontrast_enabled: mc_enabled,
        mc_strength: mc_enabled.then_some(strength),
        mc_uniformity: mc_enabled.then_some(uniformity as u32),
        quality_factor: cfg.quality_factor,
    }
}

/// `scale * X` with `X ~ Gamma(shape, 1)`, before any rectification.
pub fn draw_gamma_scaled<R: Rng + ?Sized>(
    shape: f64,
    scale: f64,
    rng: &mut R,
) -> Result<f64, SampleError> {
    if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
        return Err(SampleError::Argument(format!(
            "gamma needs shape > 0 and scale > 0, got shape={shape} scale={scale}"
        )));
    }
    let gamma = Gamma::new(shape, 1.0).map_err(|e| SampleError::Argument(e.to_string()))?;
    Ok(scale * gamma.sample(rng))
}

/// Gamma draw scaled by `scale` and clamped to `[lo, hi]`.
pub fn sample_gamma_scaled<R: Rng + ?Sized>(
    shape: f64,
    scale: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64, SampleError> {
    if !(lo < hi) {
        return Err(SampleError::Argument(format!("empty range [{lo}, {hi}]")));
    }
    Ok(draw_gamma_scaled(shape, scale, rng)?.clamp(lo, hi))
}

/// `max(lo, floor(X))` with `X ~ Normal(mu, sigma)`.
pub fn sample_floor_normal<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    lo: f64,
    rng: &mut R,
) -> Result<i64, SampleError> {
    let normal = Normal::new(mu, sigma)
        .ok()
        .filter(|_| sigma > 0.0)
        .ok_or_else(|| SampleError::Argument(format!("normal needs sigma > 0, got {sigma}")))?;
    Ok(normal.sample(rng).floor().max(lo) as i64)
}
