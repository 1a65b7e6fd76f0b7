use std::io::Cursor;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Encodes as 8-bit RGB PNG, non-interlaced.
pub fn encode_image(img: &ImageBuffer) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width(), img.height());
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("png header to memory");
        writer
            .write_image_data(img.pixels())
            .expect("png data to memory");
        writer.finish().expect("png finish to memory");
    }
    out
}

/// Decodes a PNG stream into 8-bit RGB. Grayscale is expanded channel-wise,
/// palettes are expanded, alpha is dropped. Bit depths above 8 are rejected.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Decode(e.to_string()))?;
    let source_depth = reader.info().bit_depth;
    if source_depth == png::BitDepth::Sixteen {
        return Err(Error::Decode("unsupported bit depth 16 (max 8)".into()));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Decode(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Decode(format!(
            "unsupported output bit depth {:?}",
            info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width, info.height);
    let n = w as usize * h as usize;
    let rgb: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => buf,
        png::ColorType::Rgba => buf
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => buf
            .chunks_exact(2)
            .flat_map(|p| [p[0], p[0], p[0]])
            .collect(),
        png::ColorType::Indexed => {
            return Err(Error::Decode("palette was not expanded".into()));
        }
    };
    if rgb.len() != n * 3 {
        return Err(Error::Decode("decoded size mismatch".into()));
    }
    ImageBuffer::new_with_min(w, h, rgb, 1)
}
