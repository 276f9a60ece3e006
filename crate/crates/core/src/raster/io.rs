use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use super::image::{Plane, RasterImage};
use crate::error::{Error, Result};

/// Reads a PNG (8/16-bit gray or RGB), binary PPM (P6) or PGM (P5) file.
///
/// The format is detected from the file signature. Samples are divided by
/// the format's maximum value (255 for 8-bit, 65535 for 16-bit). Alpha
/// channels are discarded.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes).map_err(|reason| Error::format(path, reason))
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(&bytes).map_err(|reason| Error::format(path, reason))
    } else {
        Err(Error::format(path, "expected PNG, P5 or P6 signature"))
    }
}

/// Writes `img` as 8-bit PNG, PPM or PGM depending on the extension.
///
/// Samples are clamped to `[0, 1]` and quantized as `floor(v * 255 + 0.5)`.
/// `.ppm` replicates gray images to three channels; `.pgm` requires a gray image.
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = match ext.as_str() {
        "png" => encode_png(img).map_err(|reason| Error::format(path, reason))?,
        "ppm" => encode_pnm(&img.to_rgb(), b"P6"),
        "pgm" => {
            if img.channels() != 1 {
                return Err(Error::contract(format!(
                    "{}: PGM output needs a 1-channel image",
                    path.display()
                )));
            }
            encode_pnm(img, b"P5")
        }
        _ => {
            return Err(Error::format(
                path,
                "output extension must be .png, .ppm or .pgm",
            ))
        }
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn interleaved_u8(img: &RasterImage) -> Vec<u8> {
    let n = img.width() * img.height();
    let c = img.channels();
    let mut out = Vec::with_capacity(n * c);
    for i in 0..n {
        for p in img.planes() {
            out.push(quantize(p.as_slice()[i]));
        }
    }
    out
}

fn planes_from_samples(
    width: usize,
    height: usize,
    channels: usize,
    keep: usize,
    samples: impl Iterator<Item = f64>,
) -> std::result::Result<RasterImage, String> {
    let n = width * height;
    let mut planes: Vec<Vec<f64>> = (0..keep).map(|_| Vec::with_capacity(n)).collect();
    for (i, v) in samples.enumerate() {
        let c = i % channels;
        if c < keep {
            planes[c].push(v);
        }
    }
    if planes.iter().any(|p| p.len() != n) {
        return Err("truncated pixel data".into());
    }
    let planes = planes
        .into_iter()
        .map(|p| Plane::from_vec(width, height, p))
        .collect();
    RasterImage::from_planes(planes).map_err(|e| e.to_string())
}

fn decode_png(bytes: &[u8]) -> std::result::Result<RasterImage, String> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "image too large".to_string())?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (w, h) = (info.width as usize, info.height as usize);
    let (channels, keep) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => return Err("palette was not expanded".into()),
    };
    let data = &buf[..info.line_size * h];
    match info.bit_depth {
        png::BitDepth::Sixteen => planes_from_samples(
            w,
            h,
            channels,
            keep,
            data.chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0),
        ),
        png::BitDepth::Eight => {
            planes_from_samples(w, h, channels, keep, data.iter().map(|&b| b as f64 / 255.0))
        }
        other => Err(format!("unexpected bit depth {other:?} after expansion")),
    }
}

fn encode_png(img: &RasterImage) -> std::result::Result<Vec<u8>, String> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(if img.channels() == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| e.to_string())?;
        writer
            .write_image_data(&interleaved_u8(img))
            .map_err(|e| e.to_string())?;
        writer.finish().map_err(|e| e.to_string())?;
    }
    Ok(out)
}

fn encode_pnm(img: &RasterImage, magic: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(magic);
    out.extend_from_slice(format!("\n{} {}\n255\n", img.width(), img.height()).as_bytes());
    out.extend_from_slice(&interleaved_u8(img));
    out
}

/// Parses the whitespace/comment separated header fields of a binary PNM.
/// Returns the fields and the offset of the raster.
fn pnm_header(bytes: &[u8]) -> std::result::Result<([usize; 3], usize), String> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("malformed header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| "header value out of range".to_string())?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((fields, pos + 1)),
        _ => Err("missing raster separator".into()),
    }
}

fn decode_pnm(bytes: &[u8]) -> std::result::Result<RasterImage, String> {
    let channels = if bytes[1] == b'6' { 3 } else { 1 };
    let ([w, h, maxval], offset) = pnm_header(bytes)?;
    if w == 0 || h == 0 {
        return Err("zero-sized image".into());
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("invalid maxval {maxval}"));
    }
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let needed = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels * bytes_per_sample))
        .ok_or_else(|| "image too large".to_string())?;
    let raster = &bytes[offset..];
    if raster.len() < needed {
        return Err(format!(
            "truncated pixel data: {} of {needed} bytes",
            raster.len()
        ));
    }
    let scale = maxval as f64;
    let raster = &raster[..needed];
    if bytes_per_sample == 1 {
        planes_from_samples(w, h, channels, channels, raster.iter().map(|&b| b as f64 / scale))
    } else {
        planes_from_samples(
            w,
            h,
            channels,
            channels,
            raster
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / scale),
        )
    }
}
