//! JPEG encode/decode round trip.
//!
//! Baseline sequential encoding with the standard luminance/chrominance
//! quantization tables scaled by quality, 4:2:0 chroma subsampling with box
//! averaging, followed by a scalar (platform independent) decode.

use jpeg_encoder::{ChromaSubsamplingMethod, ColorType, Encoder, SamplingFactor};

use super::config::JpegConfig;
use super::Severity;
use crate::error::{Error, Result};
use crate::image::Image8;

/// `q = round(q_max - severity * (q_max - q_min))`.
pub fn jpeg_quality(severity: Severity, cfg: &JpegConfig) -> u8 {
    let q = cfg.quality_max - severity.value() * (cfg.quality_max - cfg.quality_min);
    q.round_ties_even().clamp(1.0, 100.0) as u8
}

/// Encodes `o` at `quality` and decodes it again.
pub fn jpeg_roundtrip(o: &Image8, quality: u8) -> Result<Image8> {
    let (w, h) = (o.width(), o.height());
    let (w16, h16) = match (u16::try_from(w), u16::try_from(h)) {
        (Ok(w), Ok(h)) if w > 0 && h > 0 => (w, h),
        _ => return Err(Error::Jpeg(format!("cannot encode a {h}x{w} frame"))),
    };
    let mut bytes = Vec::new();
    let mut encoder = Encoder::new(&mut bytes, quality);
    encoder.set_sampling_factor(SamplingFactor::R_4_2_0);
    encoder.set_chroma_subsampling_method(ChromaSubsamplingMethod::Average);
    encoder.encode(o.data(), w16, h16, ColorType::Rgb).map_err(|e| Error::Jpeg(e.to_string()))?;

    let mut decoder = jpeg_decoder::Decoder::new(bytes.as_slice());
    let pixels = decoder.decode().map_err(|e| Error::Jpeg(e.to_string()))?;
    let info = decoder.info().ok_or_else(|| Error::Jpeg("decoder returned no header".into()))?;
    if info.pixel_format != jpeg_decoder::PixelFormat::RGB24 || usize::from(info.width) != w || usize::from(info.height) != h {
        return Err(Error::Jpeg(format!("unexpected decoded layout {:?} {}x{}", info.pixel_format, info.height, info.width)));
    }
    Image8::new(h, w, pixels)
}

pub fn jpeg_compress(o: &Image8, severity: Severity, cfg: &JpegConfig) -> Result<Image8> {
    jpeg_roundtrip(o, jpeg_quality(severity, cfg))
}

#[cfg(test)]
mod tests {
    use super::super::test_frame;
    use super::*;

    #[test]
    fn quality_mapping() {
        let cfg = JpegConfig::default();
        assert_eq!(jpeg_quality(Severity::new(0.7).unwrap(), &cfg), 34);
        assert_eq!(jpeg_quality(Severity::ZERO, &cfg), 90);
        assert_eq!(jpeg_quality(Severity::ONE, &cfg), 10);
    }

    #[test]
    fn uniform_gray_survives_every_quality() {
        let f = Image8::filled(84, 84, [128, 128, 128]);
        for q in [10u8, 34, 50, 90] {
            let out = jpeg_roundtrip(&f, q).unwrap();
            assert!(out.data().iter().all(|&v| v.abs_diff(128) <= 2), "q={q}");
        }
    }

    #[test]
    fn lower_quality_loses_more() {
        let f = test_frame(64, 64);
        let err = |q| {
            let out = jpeg_roundtrip(&f, q).unwrap();
            f.data().iter().zip(out.data()).map(|(&a, &b)| f64::from(a.abs_diff(b))).sum::<f64>()
        };
        assert!(err(10) > err(90));
    }

    #[test]
    fn odd_sizes_roundtrip() {
        let f = test_frame(13, 7);
        let out = jpeg_roundtrip(&f, 75).unwrap();
        assert!(out.same_shape(&f));
    }

    #[test]
    fn deterministic() {
        let f = test_frame(40, 40);
        assert_eq!(jpeg_roundtrip(&f, 34).unwrap(), jpeg_roundtrip(&f, 34).unwrap());
    }
}
