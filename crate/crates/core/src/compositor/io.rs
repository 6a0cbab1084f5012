use std::io::Cursor;
use std::path::Path;

use image::{ExtendedColorType, ImageFormat};
use jpeg_encoder::{ColorType, Encoder};

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Loads a PNG or JPEG as RGB; grayscale inputs are replicated to three channels.
pub fn load_rgb(path: &Path) -> Result<ImageBuffer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    let img = image::load_from_memory(bytes)?;
    Ok(img.into_rgb8().into())
}

pub fn encode_jpeg(img: &ImageBuffer, quality: u8) -> Result<Vec<u8>> {
    let (w, h) = img.dimensions();
    let dims = |v: u32| u16::try_from(v).map_err(|_| Error::Config(format!("{w}x{h} exceeds the JPEG size limit")));
    let mut buf = Vec::new();
    Encoder::new(&mut buf, quality.clamp(1, 100)).encode(img.data(), dims(w)?, dims(h)?, ColorType::Rgb)?;
    Ok(buf)
}

pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    image::write_buffer_with_format(
        &mut buf,
        img.data(),
        img.width(),
        img.height(),
        ExtendedColorType::Rgb8,
        ImageFormat::Png,
    )?;
    Ok(buf.into_inner())
}

/// Writes PNG or JPEG (quality 95) depending on the file extension.
pub fn save_image(img: &ImageBuffer, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let bytes = match ext.as_deref() {
        Some("jpg" | "jpeg") => encode_jpeg(img, 95)?,
        _ => encode_png(img)?,
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
