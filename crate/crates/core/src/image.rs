//! Pixel containers shared by every other module.
//!
//! Frames are row-major RGB. [`Image8`] carries raw 8-bit channels, [`ImageF`]
//! the normalized `[-1, 1]` representation consumed by downstream models.
//! All arithmetic is done in `f64`; quantization back to 8 bits rounds half
//! to even and clamps to `[0, 255]`.

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// Normalized RGB of pure black.
pub const BLACK: [f64; 3] = [-1.0, -1.0, -1.0];

/// Round half to even, then clamp to the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round_ties_even().clamp(0.0, 255.0) as u8
}

#[inline]
pub fn normalize_channel(v: u8) -> f64 {
    2.0 * (f64::from(v) / 255.0) - 1.0
}

#[inline]
pub fn denormalize_channel(v: f64) -> u8 {
    quantize(255.0 * (v + 1.0) / 2.0)
}

fn check_len(height: usize, width: usize, per_pixel: usize, len: usize) -> Result<()> {
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(per_pixel))
        .ok_or_else(|| Error::Shape(format!("{height}x{width} overflows")))?;
    if expected != len {
        return Err(Error::Shape(format!(
            "{height}x{width}x{per_pixel} needs {expected} values, got {len}"
        )));
    }
    Ok(())
}

/// 8-bit RGB frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image8 {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Image8 {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        check_len(height, width, CHANNELS, data.len())?;
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(height * width * CHANNELS).collect();
        Self { height, width, data }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(y, x));
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    pub fn same_shape(&self, other: &Image8) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn map_channels(&self, mut f: impl FnMut(usize, u8) -> u8) -> Image8 {
        let data = self.data.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        Image8 { height: self.height, width: self.width, data }
    }
}

/// Normalized RGB frame. Values produced by the public operations lie in
/// `[-1, 1]`; the constructor only enforces the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageF {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_len(height, width, CHANNELS, data.len())?;
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(height * width * CHANNELS).collect();
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_in_range(&self) -> bool {
        self.data.iter().all(|v| (-1.0..=1.0).contains(v))
    }
}

/// Single-channel map in `[0, 1]` (foreground masks, weather masks).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Mask {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_len(height, width, 1, data.len())?;
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!("mask value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// Odd-sized, nonnegative convolution kernel whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    height: usize,
    width: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if height.is_multiple_of(2) || width.is_multiple_of(2) {
            return Err(Error::Shape(format!("kernel dimensions {height}x{width} must be odd")));
        }
        check_len(height, width, 1, weights.len())?;
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidValue("kernel weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidValue(format!("kernel weights sum to {sum}, expected 1")));
        }
        Ok(Self { height, width, weights })
    }

    /// Scales arbitrary nonnegative weights to unit sum.
    pub fn normalized(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidValue("kernel weights have no positive mass".into()));
        }
        Self::new(height, width, weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn identity() -> Self {
        Self { height: 1, width: 1, weights: vec![1.0] }
    }

    pub fn box_filter(size: usize) -> Result<Self> {
        Self::normalized(size, size, vec![1.0; size * size])
    }

    /// Separable Gaussian sampled at integer offsets, normalized to unit sum.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidValue(format!("gaussian sigma {sigma} must be positive")));
        }
        let r = (size / 2) as f64;
        let mut weights = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let (dy, dx) = (i as f64 - r, j as f64 - r);
                weights.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
            }
        }
        Self::normalized(size, size, weights)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.width + j]
    }

    /// Nonzero taps as `(dy, dx, weight)` offsets from the kernel centre, in
    /// row-major order.
    fn taps(&self) -> Vec<(isize, isize, f64)> {
        let (ry, rx) = ((self.height / 2) as isize, (self.width / 2) as isize);
        let mut taps = Vec::new();
        for i in 0..self.height {
            for j in 0..self.width {
                let w = self.weight(i, j);
                if w != 0.0 {
                    taps.push((i as isize - ry, j as isize - rx, w));
                }
            }
        }
        taps
    }
}

/// `v -> 2 * v / 255 - 1` per channel.
pub fn normalize(img: &Image8) -> ImageF {
    ImageF {
        height: img.height,
        width: img.width,
        data: img.data.iter().map(|&v| normalize_channel(v)).collect(),
    }
}

/// Inverse of [`normalize`], rounding half to even and clamping.
pub fn denormalize(img: &ImageF) -> Result<Image8> {
    if let Some(v) = img.data.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidValue(format!("non-finite pixel value {v}")));
    }
    Ok(Image8 {
        height: img.height,
        width: img.width,
        data: img.data.iter().map(|&v| denormalize_channel(v)).collect(),
    })
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Correlates a single-channel `f64` plane with `kernel` using edge-clamp
/// padding. No quantization.
pub fn convolve_plane(plane: &[f64], height: usize, width: usize, kernel: &Kernel2D) -> Result<Vec<f64>> {
    check_len(height, width, 1, plane.len())?;
    if kernel.height > height || kernel.width > width {
        return Err(Error::KernelTooLarge { kh: kernel.height, kw: kernel.width, h: height, w: width });
    }
    Ok(correlate_plane(plane, height, width, kernel))
}

/// [`convolve_plane`] without the size check; edge clamping makes any kernel
/// size well defined.
pub(crate) fn correlate_plane(plane: &[f64], height: usize, width: usize, kernel: &Kernel2D) -> Vec<f64> {
    let taps = kernel.taps();
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for &(dy, dx, w) in &taps {
                let sy = clamp_index(y as isize + dy, height);
                let sx = clamp_index(x as isize + dx, width);
                acc += w * plane[sy * width + sx];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Per-channel correlation with edge-clamp padding; output rounded half to
/// even and clamped.
pub fn convolve(img: &Image8, kernel: &Kernel2D) -> Result<Image8> {
    if kernel.height > img.height || kernel.width > img.width {
        return Err(Error::KernelTooLarge { kh: kernel.height, kw: kernel.width, h: img.height, w: img.width });
    }
    Ok(correlate(img, kernel))
}

pub(crate) fn correlate(img: &Image8, kernel: &Kernel2D) -> Image8 {
    let (h, w) = (img.height, img.width);
    let taps = kernel.taps();
    let mut data = vec![0u8; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for &(dy, dx, wt) in &taps {
                let sy = clamp_index(y as isize + dy, h);
                let sx = clamp_index(x as isize + dx, w);
                let src = (sy * w + sx) * CHANNELS;
                for c in 0..CHANNELS {
                    acc[c] += wt * f64::from(img.data[src + c]);
                }
            }
            let dst = (y * w + x) * CHANNELS;
            for c in 0..CHANNELS {
                data[dst + c] = quantize(acc[c]);
            }
        }
    }
    Image8 { height: h, width: w, data }
}

/// Agent-centric composite `restored * m + background * (1 - m)`, the mask
/// broadcast over channels. Results are clamped to `[-1, 1]` to absorb
/// last-ulp rounding of the convex combination.
pub fn composite(restored: &ImageF, mask: &Mask, background: [f64; 3]) -> Result<ImageF> {
    if restored.height != mask.height || restored.width != mask.width {
        return Err(Error::Shape(format!(
            "image {}x{} vs mask {}x{}",
            restored.height, restored.width, mask.height, mask.width
        )));
    }
    let mut data = Vec::with_capacity(restored.data.len());
    for (px, &m) in restored.data.chunks_exact(CHANNELS).zip(&mask.data) {
        for c in 0..CHANNELS {
            data.push((px[c] * m + background[c] * (1.0 - m)).clamp(-1.0, 1.0));
        }
    }
    Ok(ImageF { height: restored.height, width: restored.width, data })
}
