//! Additive sensor noise and low-light exposure.

use super::config::{GaussianNoiseConfig, LowLightConfig};
use super::Severity;
use crate::image::{quantize, Image8};
use crate::rng::RngStream;

pub fn noise_sigma(severity: Severity, cfg: &GaussianNoiseConfig) -> f64 {
    severity.value() * cfg.sigma_max
}

/// `nu = 1 - severity * (1 - nu_min)`.
pub fn brightness_factor(severity: Severity, cfg: &LowLightConfig) -> f64 {
    1.0 - severity.value() * (1.0 - cfg.nu_min)
}

pub fn low_light_sigma(severity: Severity, cfg: &LowLightConfig) -> f64 {
    severity.value() * cfg.sigma
}

/// `clip(o + N(0, sigma^2))` with one normal draw per channel value.
pub fn gaussian_noise(o: &Image8, severity: Severity, rng: &mut RngStream, cfg: &GaussianNoiseConfig) -> Image8 {
    let sigma = noise_sigma(severity, cfg);
    o.map_channels(|_, v| quantize(f64::from(v) + sigma * rng.standard_normal()))
}

/// `clip(nu * o + N(0, sigma^2))` with one normal draw per channel value.
pub fn low_light(o: &Image8, severity: Severity, rng: &mut RngStream, cfg: &LowLightConfig) -> Image8 {
    let nu = brightness_factor(severity, cfg);
    let sigma = low_light_sigma(severity, cfg);
    o.map_channels(|_, v| quantize(nu * f64::from(v) + sigma * rng.standard_normal()))
}
