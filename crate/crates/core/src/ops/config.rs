//! Operator constants. Every field has a built-in default; a TOML file may
//! override any subset using the same key names.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CorruptionMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct DegradationConfig {
    pub base_severity: BaseSeverities,
    pub rain: RainConfig,
    pub snow: SnowConfig,
    pub haze: HazeConfig,
    pub motion_blur: MotionBlurConfig,
    pub gaussian_noise: GaussianNoiseConfig,
    pub low_light: LowLightConfig,
    pub jpeg: JpegConfig,
    pub mask_blur: MaskBlurConfig,
    pub schedule: ScheduleConfig,
    pub dataset: DatasetDefaults,
}


/// Base severity per mode, the centre of each mode's severity band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseSeverities {
    pub rain: f64,
    pub haze: f64,
    pub snow: f64,
    pub motion_blur: f64,
    pub gaussian_noise: f64,
    pub low_light: f64,
    pub jpeg: f64,
}

impl Default for BaseSeverities {
    fn default() -> Self {
        Self { rain: 0.6, haze: 0.6, snow: 0.6, motion_blur: 0.35, gaussian_noise: 0.5, low_light: 0.7, jpeg: 0.7 }
    }
}

impl BaseSeverities {
    pub fn get(&self, mode: CorruptionMode) -> f64 {
        match mode {
            CorruptionMode::Rain => self.rain,
            CorruptionMode::Haze => self.haze,
            CorruptionMode::Snow => self.snow,
            CorruptionMode::MotionBlur => self.motion_blur,
            CorruptionMode::GaussianNoise => self.gaussian_noise,
            CorruptionMode::LowLight => self.low_light,
            CorruptionMode::Jpeg => self.jpeg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RainConfig {
    pub opacity: f64,
    pub streak_factor: f64,
    pub length_min: f64,
    pub length_max: f64,
    /// Streak angle band, degrees from horizontal.
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub color: [u8; 3],
}

impl Default for RainConfig {
    fn default() -> Self {
        Self {
            opacity: 0.3,
            streak_factor: 500.0,
            length_min: 3.0,
            length_max: 10.0,
            angle_min_deg: 80.0,
            angle_max_deg: 100.0,
            color: [255, 255, 255],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnowConfig {
    pub opacity: f64,
    pub flake_factor: f64,
    pub radius_min: u32,
    pub radius_max: u32,
    pub brightness_min: f64,
    pub brightness_max: f64,
    pub color: [u8; 3],
}

impl Default for SnowConfig {
    fn default() -> Self {
        Self {
            opacity: 0.5,
            flake_factor: 1000.0,
            radius_min: 1,
            radius_max: 2,
            brightness_min: 200.0,
            brightness_max: 255.0,
            color: [255, 255, 255],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazeConfig {
    pub alpha_scale: f64,
    pub color: [u8; 3],
}

impl Default for HazeConfig {
    fn default() -> Self {
        Self { alpha_scale: 0.7, color: [200, 200, 200] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionBlurConfig {
    pub length_min: f64,
    pub length_max: f64,
}

impl Default for MotionBlurConfig {
    fn default() -> Self {
        Self { length_min: 5.0, length_max: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianNoiseConfig {
    /// Noise standard deviation at severity 1, in 8-bit units.
    pub sigma_max: f64,
}

impl Default for GaussianNoiseConfig {
    fn default() -> Self {
        Self { sigma_max: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowLightConfig {
    /// Brightness factor at severity 1.
    pub nu_min: f64,
    /// Noise standard deviation at severity 1, in 8-bit units.
    pub sigma: f64,
}

impl Default for LowLightConfig {
    fn default() -> Self {
        Self { nu_min: 0.2, sigma: 15.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JpegConfig {
    pub quality_min: f64,
    pub quality_max: f64,
}

impl Default for JpegConfig {
    fn default() -> Self {
        Self { quality_min: 10.0, quality_max: 90.0 }
    }
}

/// Smoothing applied to rasterized rain/snow masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskBlurConfig {
    pub size: usize,
    pub sigma: f64,
}

impl Default for MaskBlurConfig {
    fn default() -> Self {
        Self { size: 3, sigma: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Self-transition probability of the sticky mode chain.
    pub sticky_prob: f64,
    /// Relative half-width of each mode's severity band.
    pub band_delta: f64,
    /// Lower floor of every severity band.
    pub band_floor: f64,
    /// Standard deviation of the within-segment severity walk.
    pub walk_std: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { sticky_prob: 0.8, band_delta: 0.1, band_floor: 0.1, walk_std: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetDefaults {
    /// Relative severity jitter around the base severity.
    pub jitter: f64,
    pub train_ratio: f64,
    pub samples_per_pair: usize,
    pub frame_height: usize,
    pub frame_width: usize,
}

impl Default for DatasetDefaults {
    fn default() -> Self {
        Self { jitter: 0.1, train_ratio: 0.9, samples_per_pair: 5000, frame_height: 84, frame_width: 84 }
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")))
    }
}

fn ordered(name: &str, lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: need finite min <= max, got [{lo}, {hi}]")))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must be finite and nonnegative")))
    }
}

impl DegradationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for mode in CorruptionMode::ALL {
            unit(&format!("base_severity.{}", mode.name()), self.base_severity.get(mode))?;
        }
        unit("rain.opacity", self.rain.opacity)?;
        nonneg("rain.streak_factor", self.rain.streak_factor)?;
        ordered("rain.length", self.rain.length_min, self.rain.length_max)?;
        nonneg("rain.length_min", self.rain.length_min)?;
        ordered("rain.angle_deg", self.rain.angle_min_deg, self.rain.angle_max_deg)?;
        unit("snow.opacity", self.snow.opacity)?;
        nonneg("snow.flake_factor", self.snow.flake_factor)?;
        if self.snow.radius_min > self.snow.radius_max {
            return Err(Error::Config("snow.radius_min exceeds snow.radius_max".into()));
        }
        ordered("snow.brightness", self.snow.brightness_min, self.snow.brightness_max)?;
        if self.snow.brightness_min < 0.0 || self.snow.brightness_max > 255.0 {
            return Err(Error::Config("snow.brightness must lie in [0, 255]".into()));
        }
        unit("haze.alpha_scale", self.haze.alpha_scale)?;
        ordered("motion_blur.length", self.motion_blur.length_min, self.motion_blur.length_max)?;
        nonneg("motion_blur.length_min", self.motion_blur.length_min)?;
        nonneg("gaussian_noise.sigma_max", self.gaussian_noise.sigma_max)?;
        unit("low_light.nu_min", self.low_light.nu_min)?;
        nonneg("low_light.sigma", self.low_light.sigma)?;
        ordered("jpeg.quality", self.jpeg.quality_min, self.jpeg.quality_max)?;
        if self.jpeg.quality_min < 1.0 || self.jpeg.quality_max > 100.0 {
            return Err(Error::Config("jpeg.quality must lie in [1, 100]".into()));
        }
        if self.mask_blur.size.is_multiple_of(2) || !(self.mask_blur.sigma > 0.0) {
            return Err(Error::Config("mask_blur needs an odd size and positive sigma".into()));
        }
        unit("schedule.sticky_prob", self.schedule.sticky_prob)?;
        unit("schedule.band_delta", self.schedule.band_delta)?;
        unit("schedule.band_floor", self.schedule.band_floor)?;
        nonneg("schedule.walk_std", self.schedule.walk_std)?;
        unit("dataset.jitter", self.dataset.jitter)?;
        unit("dataset.train_ratio", self.dataset.train_ratio)?;
        if self.dataset.frame_height == 0 || self.dataset.frame_width == 0 {
            return Err(Error::Config("dataset frame size must be nonzero".into()));
        }
        Ok(())
    }

    /// Canonical JSON form; field order is fixed by the struct layout.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
