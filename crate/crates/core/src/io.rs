//! PNG interchange. Only 8-bit RGB without alpha is accepted or produced.
//! Masks are stored as RGB with every channel `0` or `255`.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Image8, Mask};

pub fn decode_png(bytes: &[u8]) -> Result<Image8> {
    decode_png_inner(bytes, None)
}

fn decode_png_inner(bytes: &[u8], path: Option<&Path>) -> Result<Image8> {
    let unsupported = |reason: String| Error::UnsupportedPng { path: path.map(Path::to_path_buf), reason };
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info()?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(format!("bit depth {:?}, expected 8", info.bit_depth)));
    }
    if info.color_type != png::ColorType::Rgb {
        return Err(unsupported(format!("color type {:?}, expected RGB", info.color_type)));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader.output_buffer_size().ok_or_else(|| unsupported("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf)?;
    buf.truncate(frame.buffer_size());
    Image8::new(h, w, buf)
}

pub fn encode_png(img: &Image8) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(img.data())?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn read_png(path: &Path) -> Result<Image8> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png_inner(&bytes, Some(path))
}

pub fn write_png(path: &Path, img: &Image8) -> Result<()> {
    let bytes = encode_png(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Binary mask as an RGB image (`1 -> 255`, `0 -> 0`). Fractional values are
/// rounded.
pub fn mask_to_image(mask: &Mask) -> Image8 {
    Image8::from_fn(mask.height(), mask.width(), |y, x| [crate::image::quantize(mask.get(y, x) * 255.0); 3])
}

/// Inverse of [`mask_to_image`]; rejects anything but equal channels in {0, 255}.
pub fn image_to_mask(img: &Image8) -> Result<Mask> {
    let mut data = Vec::with_capacity(img.height() * img.width());
    for px in img.data().chunks_exact(3) {
        match px {
            [0, 0, 0] => data.push(0.0),
            [255, 255, 255] => data.push(1.0),
            _ => return Err(Error::InvalidValue(format!("mask pixel {px:?} is not binary"))),
        }
    }
    Mask::new(img.height(), img.width(), data)
}

pub fn read_mask_png(path: &Path) -> Result<Mask> {
    image_to_mask(&read_png(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_roundtrip() {
        let img = Image8::from_fn(5, 7, |y, x| [y as u8, x as u8, (x * y) as u8]);
        let bytes = encode_png(&img).unwrap();
        assert_eq!(decode_png(&bytes).unwrap(), img);
        assert_eq!(encode_png(&img).unwrap(), bytes);
    }

    #[test]
    fn rejects_rgba_and_16_bit() {
        for (color, depth, bpp) in [
            (png::ColorType::Rgba, png::BitDepth::Eight, 4),
            (png::ColorType::Rgb, png::BitDepth::Sixteen, 6),
            (png::ColorType::Grayscale, png::BitDepth::Eight, 1),
        ] {
            let mut out = Vec::new();
            {
                let mut enc = png::Encoder::new(&mut out, 2, 2);
                enc.set_color(color);
                enc.set_depth(depth);
                let mut w = enc.write_header().unwrap();
                w.write_image_data(&vec![0u8; 4 * bpp]).unwrap();
            }
            assert!(matches!(decode_png(&out), Err(Error::UnsupportedPng { .. })));
        }
    }

    #[test]
    fn mask_png_roundtrip() {
        let m = Mask::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(image_to_mask(&mask_to_image(&m)).unwrap(), m);
        assert!(image_to_mask(&Image8::filled(1, 1, [255, 0, 0])).is_err());
    }
}
