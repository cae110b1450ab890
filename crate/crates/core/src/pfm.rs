//! Portable Float Map reading and writing.
//!
//! Layout: the ASCII header `Pf`, a `width height` line, and a scale line
//! whose sign encodes endianness (negative = little-endian), each terminated
//! by a single whitespace byte; then `height` rows of `width` 32-bit floats,
//! bottom row first. Invalid pixels are stored as NaN. The grayscale `Pf`
//! variant is the only one supported; color `PF` files are rejected.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Raster;

fn format_err(offset: usize, what: impl Into<String>) -> Error {
    Error::PfmFormat {
        offset,
        what: what.into(),
    }
}

/// Reads one ASCII token ending in a single whitespace byte, returning the
/// token and the offset just past its terminator.
fn read_token(data: &[u8], mut offset: usize) -> Result<(&str, usize)> {
    let start = offset;
    while offset < data.len() && !data[offset].is_ascii_whitespace() {
        offset += 1;
    }
    if offset == data.len() {
        return Err(format_err(start, "unexpected end of file in header"));
    }
    if offset == start {
        return Err(format_err(start, "empty header token"));
    }
    let token = std::str::from_utf8(&data[start..offset])
        .map_err(|_| format_err(start, "non-ASCII header token"))?;
    Ok((token, offset + 1))
}

/// Decodes PFM bytes into a raster. NaN and infinite samples are masked
/// invalid.
pub fn decode_pfm(data: &[u8]) -> Result<Raster> {
    let (magic, offset) = read_token(data, 0)?;
    if magic == "PF" {
        return Err(format_err(0, "color 'PF' maps are not supported, expected 'Pf'"));
    }
    if magic != "Pf" {
        return Err(format_err(0, format!("bad magic {magic:?}, expected \"Pf\"")));
    }

    let (w_tok, offset2) = read_token(data, offset)?;
    let width: usize = w_tok
        .parse()
        .map_err(|_| format_err(offset, format!("bad width {w_tok:?}")))?;
    let (h_tok, offset3) = read_token(data, offset2)?;
    let height: usize = h_tok
        .parse()
        .map_err(|_| format_err(offset2, format!("bad height {h_tok:?}")))?;
    if width == 0 || height == 0 {
        return Err(format_err(offset, format!("degenerate dimensions {width}x{height}")));
    }

    let (scale_tok, payload_at) = read_token(data, offset3)?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| format_err(offset3, format!("bad scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format_err(offset3, "scale must be finite and nonzero"));
    }
    let little_endian = scale < 0.0;

    let expected = width * height * 4;
    let actual = data.len() - payload_at;
    if actual != expected {
        return Err(format_err(
            payload_at,
            format!("payload has {actual} bytes, expected {expected}"),
        ));
    }

    let mut values = vec![0.0f64; width * height];
    let payload = &data[payload_at..];
    for file_row in 0..height {
        let row = height - 1 - file_row; // bottom row first
        for col in 0..width {
            let at = (file_row * width + col) * 4;
            let bytes: [u8; 4] = payload[at..at + 4].try_into().unwrap();
            let bits = if little_endian {
                u32::from_le_bytes(bytes)
            } else {
                u32::from_be_bytes(bytes)
            };
            values[row * width + col] = f32::from_bits(bits) as f64;
        }
    }
    Ok(Raster::from_values(width, height, values))
}

/// Encodes a raster as little-endian PFM bytes; invalid pixels become NaN.
pub fn encode_pfm(raster: &Raster) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + raster.width * raster.height * 4);
    write!(out, "Pf\n{} {}\n-1.0\n", raster.width, raster.height).unwrap();
    for file_row in 0..raster.height {
        let row = raster.height - 1 - file_row;
        for col in 0..raster.width {
            let v = raster.get(col, row).map_or(f32::NAN, |v| v as f32);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Raster> {
    let data = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    decode_pfm(&data)
}

pub fn write_pfm(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    fs::write(&path, encode_pfm(raster)).map_err(|e| Error::io(&path, e))
}
