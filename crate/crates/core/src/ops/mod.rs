//! The seven physical degradation operators.
//!
//! Operators act on 8-bit frames and draw all of their randomness from an
//! explicit [`RngStream`]. The number and order of draws is fixed per
//! operator (see [`draws_required`]):
//!
//! | mode            | draws                                             |
//! |-----------------|---------------------------------------------------|
//! | rain            | 4 per streak: x, y, length, angle                 |
//! | snow            | 4 per flake: x, y, radius, brightness             |
//! | haze            | 0                                                 |
//! | motion blur     | 1: kernel angle                                   |
//! | gaussian noise  | 1 per channel value, row-major                    |
//! | low light       | 1 per channel value, row-major                    |
//! | jpeg            | 0                                                 |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image8;
use crate::rng::RngStream;

mod blur;
mod config;
mod jpeg;
mod noise;
mod weather;

pub use blur::{motion_blur, motion_blur_kernel, motion_blur_length};
pub use config::{
    BaseSeverities, DatasetDefaults, DegradationConfig, GaussianNoiseConfig, HazeConfig, JpegConfig,
    LowLightConfig, MaskBlurConfig, MotionBlurConfig, RainConfig, ScheduleConfig, SnowConfig,
};
pub use jpeg::{jpeg_compress, jpeg_quality, jpeg_roundtrip};
pub use noise::{brightness_factor, gaussian_noise, low_light, low_light_sigma, noise_sigma};
pub use weather::{
    alpha_blend, flake_count, haze, haze_density, rain, rain_with_mask, snow, snow_with_mask, streak_count,
};

/// Corruption mode, coded 1..=7 in this fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionMode {
    Rain,
    Haze,
    Snow,
    MotionBlur,
    GaussianNoise,
    LowLight,
    Jpeg,
}

impl CorruptionMode {
    pub const COUNT: usize = 7;

    pub const ALL: [CorruptionMode; 7] = [
        CorruptionMode::Rain,
        CorruptionMode::Haze,
        CorruptionMode::Snow,
        CorruptionMode::MotionBlur,
        CorruptionMode::GaussianNoise,
        CorruptionMode::LowLight,
        CorruptionMode::Jpeg,
    ];

    pub fn code(self) -> u8 {
        self.index() as u8 + 1
    }

    /// Zero-based position in [`Self::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1..=7 => Ok(Self::ALL[usize::from(code) - 1]),
            _ => Err(Error::UnknownMode(code.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CorruptionMode::Rain => "rain",
            CorruptionMode::Haze => "haze",
            CorruptionMode::Snow => "snow",
            CorruptionMode::MotionBlur => "motion_blur",
            CorruptionMode::GaussianNoise => "gaussian_noise",
            CorruptionMode::LowLight => "low_light",
            CorruptionMode::Jpeg => "jpeg",
        }
    }
}

impl fmt::Display for CorruptionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .or(match norm.as_str() {
                "blur" | "motionblur" => Some(CorruptionMode::MotionBlur),
                "noise" | "gaussian" => Some(CorruptionMode::GaussianNoise),
                "lowlight" => Some(CorruptionMode::LowLight),
                _ => None,
            })
            .ok_or_else(|| Error::UnknownMode(s.to_string()))
    }
}

/// Severity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Severity(f64);

impl Severity {
    pub const ZERO: Severity = Severity(0.0);
    pub const ONE: Severity = Severity(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidValue(format!("severity {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Severity {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Severity::new(v)
    }
}

impl From<Severity> for f64 {
    fn from(s: Severity) -> f64 {
        s.0
    }
}

/// Number of RNG draws `apply` consumes for a frame of the given size.
pub fn draws_required(cfg: &DegradationConfig, mode: CorruptionMode, height: usize, width: usize, severity: Severity) -> u64 {
    match mode {
        CorruptionMode::Rain => 4 * streak_count(severity, &cfg.rain) as u64,
        CorruptionMode::Snow => 4 * flake_count(severity, &cfg.snow) as u64,
        CorruptionMode::Haze | CorruptionMode::Jpeg => 0,
        CorruptionMode::MotionBlur => 1,
        CorruptionMode::GaussianNoise | CorruptionMode::LowLight => (height * width * 3) as u64,
    }
}

/// Applies the degradation operator for `mode`.
pub fn apply(
    cfg: &DegradationConfig,
    mode: CorruptionMode,
    frame: &Image8,
    severity: Severity,
    rng: &mut RngStream,
) -> Result<Image8> {
    Ok(match mode {
        CorruptionMode::Rain => rain(frame, severity, rng, &cfg.rain, &cfg.mask_blur),
        CorruptionMode::Haze => haze(frame, severity, &cfg.haze),
        CorruptionMode::Snow => snow(frame, severity, rng, &cfg.snow, &cfg.mask_blur),
        CorruptionMode::MotionBlur => motion_blur(frame, severity, rng, &cfg.motion_blur),
        CorruptionMode::GaussianNoise => gaussian_noise(frame, severity, rng, &cfg.gaussian_noise),
        CorruptionMode::LowLight => low_light(frame, severity, rng, &cfg.low_light),
        CorruptionMode::Jpeg => jpeg_compress(frame, severity, &cfg.jpeg)?,
    })
}

#[cfg(test)]
pub(crate) fn test_frame(h: usize, w: usize) -> Image8 {
    Image8::from_fn(h, w, |y, x| [(x * 255 / w.max(1)) as u8, (y * 255 / h.max(1)) as u8, ((x * 7 + y * 13) % 256) as u8])
}
