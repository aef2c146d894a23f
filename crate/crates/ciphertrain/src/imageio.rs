//! Reading and writing 8-bit images.
//!
//! PNG goes through the `image` crate; PGM (P5) and PPM (P6) are parsed and
//! written here directly as a dependency-free fallback. Everything is
//! normalized into [`ImageTensor`], row-major with interleaved channels.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image_crypto::ImageTensor;

/// File extensions this crate treats as images.
pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "pgm", "ppm"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Loads a PNG/PGM/PPM image. Grayscale files become 1-channel tensors, color
/// files 3-channel; alpha is dropped.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let bad = |reason: String| Error::BadImage {
        path: path.to_path_buf(),
        reason,
    };
    match extension_of(path).as_deref() {
        Some("png") => {
            let dynamic = image::open(path).map_err(|e| bad(e.to_string()))?;
            let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
            match dynamic.color().has_color() {
                false => ImageTensor::new(w, h, 1, dynamic.into_luma8().into_raw()),
                true => ImageTensor::new(w, h, 3, dynamic.into_rgb8().into_raw()),
            }
        }
        Some("pgm") | Some("ppm") => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_pnm(&bytes).map_err(bad)
        }
        _ => Err(bad("unsupported image extension".into())),
    }
}

/// Checks that a file parses as an image without decoding all pixel data.
pub fn probe_image(path: &Path) -> Result<()> {
    let bad = |reason: String| Error::BadImage {
        path: path.to_path_buf(),
        reason,
    };
    match extension_of(path).as_deref() {
        Some("png") => {
            image::image_dimensions(path).map_err(|e| bad(e.to_string()))?;
            Ok(())
        }
        Some("pgm") | Some("ppm") => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_pnm_header(&bytes).map_err(bad)?;
            Ok(())
        }
        _ => Err(bad("unsupported image extension".into())),
    }
}

/// Saves as PNG or PGM/PPM depending on the extension.
pub fn save_image(path: &Path, img: &ImageTensor) -> Result<()> {
    let bad = |reason: String| Error::BadImage {
        path: path.to_path_buf(),
        reason,
    };
    match extension_of(path).as_deref() {
        Some("png") => {
            let (w, h) = (img.width as u32, img.height as u32);
            match img.channels {
                1 => image::GrayImage::from_raw(w, h, img.pixels.clone())
                    .expect("tensor length invariant")
                    .save(path)
                    .map_err(|e| bad(e.to_string())),
                3 => image::RgbImage::from_raw(w, h, img.pixels.clone())
                    .expect("tensor length invariant")
                    .save(path)
                    .map_err(|e| bad(e.to_string())),
                _ => unreachable!("ImageTensor allows 1 or 3 channels"),
            }
        }
        Some("pgm") | Some("ppm") => {
            fs::write(path, encode_pnm(img)).map_err(|e| Error::io(path, e))
        }
        _ => Err(bad("unsupported image extension".into())),
    }
}

fn extension_of(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

// --- PNM (P5 grayscale / P6 color, maxval 255) ------------------------------

fn encode_pnm(img: &ImageTensor) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

struct PnmHeader {
    channels: usize,
    width: usize,
    height: usize,
    data_offset: usize,
}

fn decode_pnm_header(bytes: &[u8]) -> std::result::Result<PnmHeader, String> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err("not a P5/P6 PNM file".into()),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3]; // width, height, maxval
    for field in fields.iter_mut() {
        // skip whitespace and '#' comment lines
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err("expected integer in header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| "header value out of range".to_string())?;
    }
    if !bytes
        .get(pos)
        .map(|b| b.is_ascii_whitespace())
        .unwrap_or(false)
    {
        return Err("missing whitespace after maxval".into());
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval} (only 255)"));
    }
    if width == 0 || height == 0 {
        return Err("zero dimension".into());
    }
    Ok(PnmHeader {
        channels,
        width,
        height,
        data_offset: pos,
    })
}

fn decode_pnm(bytes: &[u8]) -> std::result::Result<ImageTensor, String> {
    let header = decode_pnm_header(bytes)?;
    let expected = header.width * header.height * header.channels;
    let data = &bytes[header.data_offset..];
    if data.len() < expected {
        return Err(format!(
            "pixel data truncated: expected {expected} bytes, found {}",
            data.len()
        ));
    }
    ImageTensor::new(
        header.width,
        header.height,
        header.channels,
        data[..expected].to_vec(),
    )
    .map_err(|e| e.to_string())
}
