//! Directional motion blur with a normalized line kernel.

use std::f64::consts::TAU;

use super::config::MotionBlurConfig;
use super::weather::segment_distance;
use super::Severity;
use crate::image::{correlate, Image8, Kernel2D};
use crate::rng::RngStream;

/// Kernel length `l_min + severity * (l_max - l_min)`, rounded to the nearest
/// odd integer (even ties go up) and at least 3.
pub fn motion_blur_length(severity: Severity, cfg: &MotionBlurConfig) -> usize {
    let raw = cfg.length_min + severity.value() * (cfg.length_max - cfg.length_min);
    let odd = 2 * (raw / 2.0).floor() as usize + 1;
    odd.max(3)
}

/// `length x length` kernel holding an anti-aliased line through the centre
/// at angle `theta` (radians), weights normalized to sum to one.
pub fn motion_blur_kernel(theta: f64, length: usize) -> Kernel2D {
    assert!(length % 2 == 1, "kernel length must be odd");
    let c = (length / 2) as f64;
    let (dx, dy) = (c * theta.cos(), c * theta.sin());
    let mut weights = Vec::with_capacity(length * length);
    for i in 0..length {
        for j in 0..length {
            let d = segment_distance(j as f64, i as f64, c - dx, c - dy, c + dx, c + dy);
            weights.push((1.0 - d).max(0.0));
        }
    }
    Kernel2D::normalized(length, length, weights).expect("centre tap is always positive")
}

/// Draws `theta ~ U[0, 2pi)` and convolves with the line kernel.
pub fn motion_blur(o: &Image8, severity: Severity, rng: &mut RngStream, cfg: &MotionBlurConfig) -> Image8 {
    let theta = TAU * rng.next_f64();
    let kernel = motion_blur_kernel(theta, motion_blur_length(severity, cfg));
    correlate(o, &kernel)
}

#[cfg(test)]
mod tests {
    use super::super::test_frame;
    use super::*;

    fn len(v: f64) -> usize {
        motion_blur_length(Severity::new(v).unwrap(), &MotionBlurConfig::default())
    }

    #[test]
    fn lengths() {
        assert_eq!(len(0.5), 15);
        assert_eq!(len(1.0), 25);
        assert_eq!(len(0.0), 5);
        // 5 + 0.35 * 20 = 12, an even tie between 11 and 13
        assert_eq!(len(0.35), 13);
        assert_eq!(len(0.33), 11);
        let tiny = MotionBlurConfig { length_min: 0.0, length_max: 0.0 };
        assert_eq!(motion_blur_length(Severity::ONE, &tiny), 3);
    }

    #[test]
    fn horizontal_kernel_is_a_row() {
        let k = motion_blur_kernel(0.0, 5);
        for i in 0..5 {
            for j in 0..5 {
                if i == 2 {
                    assert!((k.weight(i, j) - 0.2).abs() < 1e-12);
                } else {
                    assert_eq!(k.weight(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn kernel_symmetric_under_half_turn() {
        let k = motion_blur_kernel(0.7, 9);
        for i in 0..9 {
            for j in 0..9 {
                assert!((k.weight(i, j) - k.weight(8 - i, 8 - j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_frame_unchanged() {
        let f = Image8::filled(30, 30, [37, 180, 255]);
        for s in [0.0, 0.35, 1.0] {
            let out = motion_blur(&f, Severity::new(s).unwrap(), &mut RngStream::new(2), &MotionBlurConfig::default());
            assert_eq!(out, f);
        }
    }

    #[test]
    fn zero_severity_still_blurs() {
        let f = test_frame(32, 32);
        let out = motion_blur(&f, Severity::ZERO, &mut RngStream::new(2), &MotionBlurConfig::default());
        assert_ne!(out, f);
    }
}
