use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::ReflectionImage;
use crate::error::{Error, Result};

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("png: {e}"))
}

/// Decode an 8-bit PNG. Gray, palette and alpha variants are expanded to RGB.
pub fn decode_png(bytes: &[u8]) -> Result<ReflectionImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| png_err("image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width as usize, info.height as usize);
    let rgb = match info.color_type {
        png::ColorType::Rgb => buf,
        png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        other => return Err(png_err(format!("unsupported color type {other:?}"))),
    };
    ReflectionImage::new(h, w, rgb)
}

pub fn encode_png(img: &ReflectionImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.cols() as u32, img.rows() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(img.data()).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

pub fn load_png(path: impl AsRef<Path>) -> Result<ReflectionImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::from(e).context(path.display()))?;
    Ok(decode_png(&bytes).map_err(|e| e.context(path.display()))?.with_source(path.display().to_string()))
}

pub fn save_png(path: impl AsRef<Path>, img: &ReflectionImage) -> Result<()> {
    fs::write(path, encode_png(img)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let data: Vec<u8> = (0..20 * 17 * 3).map(|i| (i * 13 % 256) as u8).collect();
        let img = ReflectionImage::new(20, 17, data).unwrap();
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back, img);
        assert!(decode_png(b"not a png").is_err());
    }
}
