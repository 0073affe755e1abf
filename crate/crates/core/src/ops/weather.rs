//! Rain, snow and haze overlays.
//!
//! Rain and snow rasterize a weather mask `M` in `[0, 1]`, smooth it with a
//! small Gaussian, and alpha-blend the weather colour:
//! `x = (1 - g*M) * o + g*M * c`. Haze blends toward its colour with a
//! weight that grows with the square root of the row index.

use super::config::{HazeConfig, MaskBlurConfig, RainConfig, SnowConfig};
use super::Severity;
use crate::image::{correlate_plane, quantize, Image8, Kernel2D, Mask, CHANNELS};
use crate::rng::RngStream;

/// `floor(factor * severity)` streaks.
pub fn streak_count(severity: Severity, cfg: &RainConfig) -> usize {
    (cfg.streak_factor * severity.value()).floor() as usize
}

/// `floor(factor * severity)` flakes.
pub fn flake_count(severity: Severity, cfg: &SnowConfig) -> usize {
    (cfg.flake_factor * severity.value()).floor() as usize
}

/// Blends one channel toward `color` with weight `w` and quantizes.
#[inline]
pub fn alpha_blend(value: u8, w: f64, color: u8) -> u8 {
    quantize((1.0 - w) * f64::from(value) + w * f64::from(color))
}

/// Distance from `(px, py)` to the segment `a`-`b`.
pub(super) fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn pixel_range(lo: f64, hi: f64, len: usize) -> std::ops::Range<usize> {
    let start = lo.floor().max(0.0) as usize;
    let end = (hi.ceil().max(0.0) as usize).min(len);
    start..end.max(start)
}

/// Anti-aliased 1-pixel line: coverage `max(0, 1 - d)` at pixel centres.
fn draw_streak(mask: &mut [f64], h: usize, w: usize, a: (f64, f64), b: (f64, f64)) {
    for py in pixel_range(a.1.min(b.1) - 1.5, a.1.max(b.1) + 1.5, h) {
        for px in pixel_range(a.0.min(b.0) - 1.5, a.0.max(b.0) + 1.5, w) {
            let d = segment_distance(px as f64 + 0.5, py as f64 + 0.5, a.0, a.1, b.0, b.1);
            let cov = 1.0 - d;
            let m = &mut mask[py * w + px];
            if cov > *m {
                *m = cov;
            }
        }
    }
}

/// Anti-aliased disc of radius `r`, scaled by `intensity`.
fn draw_flake(mask: &mut [f64], h: usize, w: usize, c: (f64, f64), r: f64, intensity: f64) {
    for py in pixel_range(c.1 - r - 1.5, c.1 + r + 1.5, h) {
        for px in pixel_range(c.0 - r - 1.5, c.0 + r + 1.5, w) {
            let d = ((px as f64 + 0.5 - c.0).powi(2) + (py as f64 + 0.5 - c.1).powi(2)).sqrt();
            let cov = (r + 0.5 - d).clamp(0.0, 1.0) * intensity;
            let m = &mut mask[py * w + px];
            if cov > *m {
                *m = cov;
            }
        }
    }
}

fn smooth_mask(raw: Vec<f64>, h: usize, w: usize, blur: &MaskBlurConfig) -> Mask {
    let kernel = Kernel2D::gaussian(blur.size, blur.sigma).expect("validated mask blur config");
    let smoothed = correlate_plane(&raw, h, w, &kernel)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Mask::new(h, w, smoothed).expect("mask values clamped to [0, 1]")
}

fn blend_mask(o: &Image8, mask: &Mask, opacity: f64, color: [u8; 3]) -> Image8 {
    o.map_channels(|i, v| {
        let m = mask.data()[i / CHANNELS];
        if m == 0.0 {
            v
        } else {
            alpha_blend(v, opacity * m, color[i % CHANNELS])
        }
    })
}

/// Rain overlay together with the smoothed weather mask it used.
pub fn rain_with_mask(
    o: &Image8,
    severity: Severity,
    rng: &mut RngStream,
    cfg: &RainConfig,
    blur: &MaskBlurConfig,
) -> (Image8, Mask) {
    let (h, w) = (o.height(), o.width());
    let mut raw = vec![0.0; h * w];
    for _ in 0..streak_count(severity, cfg) {
        let x0 = rng.uniform(0.0, w as f64);
        let y0 = rng.uniform(0.0, h as f64);
        let len = rng.uniform(cfg.length_min, cfg.length_max);
        let theta = rng.uniform(cfg.angle_min_deg, cfg.angle_max_deg).to_radians();
        let end = (x0 + len * theta.cos(), y0 + len * theta.sin());
        draw_streak(&mut raw, h, w, (x0, y0), end);
    }
    let mask = smooth_mask(raw, h, w, blur);
    (blend_mask(o, &mask, cfg.opacity, cfg.color), mask)
}

pub fn rain(o: &Image8, severity: Severity, rng: &mut RngStream, cfg: &RainConfig, blur: &MaskBlurConfig) -> Image8 {
    rain_with_mask(o, severity, rng, cfg, blur).0
}

/// Snow overlay together with its smoothed weather mask. Flake brightness
/// `b` scales the flake's mask contribution by `b / 255`.
pub fn snow_with_mask(
    o: &Image8,
    severity: Severity,
    rng: &mut RngStream,
    cfg: &SnowConfig,
    blur: &MaskBlurConfig,
) -> (Image8, Mask) {
    let (h, w) = (o.height(), o.width());
    let radii = (cfg.radius_max - cfg.radius_min + 1) as usize;
    let mut raw = vec![0.0; h * w];
    for _ in 0..flake_count(severity, cfg) {
        let cx = rng.uniform(0.0, w as f64);
        let cy = rng.uniform(0.0, h as f64);
        let r = f64::from(cfg.radius_min) + rng.below(radii) as f64;
        let b = rng.uniform(cfg.brightness_min, cfg.brightness_max);
        draw_flake(&mut raw, h, w, (cx, cy), r, b / 255.0);
    }
    let mask = smooth_mask(raw, h, w, blur);
    (blend_mask(o, &mask, cfg.opacity, cfg.color), mask)
}

pub fn snow(o: &Image8, severity: Severity, rng: &mut RngStream, cfg: &SnowConfig, blur: &MaskBlurConfig) -> Image8 {
    snow_with_mask(o, severity, rng, cfg, blur).0
}

/// Vertical haze density `sqrt(y / H)`.
pub fn haze_density(y: usize, height: usize) -> f64 {
    (y as f64 / height as f64).sqrt()
}

pub fn haze(o: &Image8, severity: Severity, cfg: &HazeConfig) -> Image8 {
    let alpha = cfg.alpha_scale * severity.value();
    let row_len = o.width() * CHANNELS;
    let h = o.height();
    o.map_channels(|i, v| {
        let weight = alpha * haze_density(i / row_len, h);
        alpha_blend(v, weight, cfg.color[i % CHANNELS])
    })
}
