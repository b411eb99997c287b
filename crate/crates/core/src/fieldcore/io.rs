//! `.flo` (Middlebury) and binary PGM (P5) readers and writers.

use std::io::{Read, Write};

use super::{BoundaryMode, GridSpec, ScalarField2D, VectorField2D};
use crate::error::{input_err, PivError, Result};

/// Magic tag opening every `.flo` file, stored as a little-endian `f32`.
pub const FLO_MAGIC: f32 = 202021.25;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(PivError::Format(msg.into()))
}

/// Write a flow in `.flo` layout: magic, `i32` width, `i32` height, then
/// interleaved `(u, v)` `f32` pairs row-major from the top row, all
/// little-endian.
pub fn write_flo<W: Write>(flow: &VectorField2D, sink: W) -> Result<()> {
    let pairs = flow.u().iter().zip(flow.v()).map(|(u, v)| (*u as f32, *v as f32));
    write_flo_raw(flow.width(), flow.height(), pairs, sink)
}

/// Encode raw `(u, v)` pairs in `.flo` layout without going through a
/// [`VectorField2D`] (which requires at least 2x2 samples).
pub fn write_flo_raw<W: Write>(
    width: usize,
    height: usize,
    pairs: impl IntoIterator<Item = (f32, f32)>,
    mut sink: W,
) -> Result<()> {
    let (Ok(wi), Ok(hi)) = (i32::try_from(width), i32::try_from(height)) else {
        return input_err("flow too large for .flo");
    };
    if wi <= 0 || hi <= 0 {
        return input_err(format!("non-positive .flo dimensions {width}x{height}"));
    }
    let mut buf = Vec::with_capacity(12 + 8 * width * height);
    buf.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    buf.extend_from_slice(&wi.to_le_bytes());
    buf.extend_from_slice(&hi.to_le_bytes());
    let mut count = 0;
    for (u, v) in pairs {
        if !u.is_finite() || !v.is_finite() {
            return input_err(format!("non-finite flow sample {count}"));
        }
        buf.extend_from_slice(&u.to_le_bytes());
        buf.extend_from_slice(&v.to_le_bytes());
        count += 1;
    }
    if count != width * height {
        return input_err(format!("expected {} flow samples, got {count}", width * height));
    }
    sink.write_all(&buf)?;
    Ok(())
}

/// Read a `.flo` stream. The returned grid uses [`BoundaryMode::Clamp`].
pub fn read_flo<R: Read>(mut source: R) -> Result<VectorField2D> {
    let mut header = [0u8; 12];
    read_full(&mut source, &mut header, "header")?;
    let magic = f32::from_le_bytes(header[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return format_err(format!("bad .flo magic {magic}"));
    }
    let w = i32::from_le_bytes(header[4..8].try_into().unwrap());
    let h = i32::from_le_bytes(header[8..12].try_into().unwrap());
    if w <= 0 || h <= 0 {
        return format_err(format!("non-positive .flo dimensions {w}x{h}"));
    }
    let (w, h) = (w as usize, h as usize);
    let Some(nbytes) = w.checked_mul(h).and_then(|n| n.checked_mul(8)) else {
        return format_err("oversized .flo dimensions");
    };
    let mut payload = Vec::new();
    source.take(nbytes as u64).read_to_end(&mut payload)?;
    if payload.len() != nbytes {
        return format_err(format!("truncated .flo payload: {} of {nbytes} bytes", payload.len()));
    }
    let spec = GridSpec::new(w, h, BoundaryMode::Clamp)
        .map_err(|e| PivError::Format(format!("unsupported .flo grid: {e}")))?;
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for pair in payload.chunks_exact(8) {
        u.push(f32::from_le_bytes(pair[0..4].try_into().unwrap()) as f64);
        v.push(f32::from_le_bytes(pair[4..8].try_into().unwrap()) as f64);
    }
    VectorField2D::new(spec, u, v).map_err(|e| PivError::Format(e.to_string()))
}

fn read_full<R: Read>(source: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    source.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => PivError::Format(format!("truncated {what}")),
        _ => PivError::Io(e),
    })
}

/// Write an 8-bit binary PGM, rounding each sample to the nearest integer.
pub fn write_pgm<W: Write>(image: &ScalarField2D, mut sink: W) -> Result<()> {
    if let Some((i, v)) = image
        .data()
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=255.0).contains(*v))
    {
        return input_err(format!("sample {i} = {v} outside [0, 255]"));
    }
    let mut buf = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    buf.extend(image.data().iter().map(|v| v.round() as u8));
    sink.write_all(&buf)?;
    Ok(())
}

/// Read a binary (P5) PGM with maxval 255. The grid uses
/// [`BoundaryMode::Clamp`].
pub fn read_pgm<R: Read>(mut source: R) -> Result<ScalarField2D> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let magic = header_token(&bytes, &mut pos)?;
    if magic != b"P5" {
        return format_err(format!("unsupported PGM magic {:?}", String::from_utf8_lossy(magic)));
    }
    let w = header_number(&bytes, &mut pos, "width")?;
    let h = header_number(&bytes, &mut pos, "height")?;
    let maxval = header_number(&bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return format_err(format!("unsupported PGM maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return format_err("missing whitespace after PGM header"),
    }
    let spec =
        GridSpec::new(w, h, BoundaryMode::Clamp).map_err(|e| PivError::Format(format!("unsupported PGM size: {e}")))?;
    let raster = &bytes[pos..];
    if raster.len() < spec.len() {
        return format_err(format!(
            "truncated PGM raster: {} of {} bytes",
            raster.len(),
            spec.len()
        ));
    }
    let data = raster[..spec.len()].iter().map(|&b| b as f64).collect();
    Ok(ScalarField2D::from_vec_unchecked(spec, data))
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return format_err("truncated PGM header"),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or_else(
            || format_err(format!("bad PGM {what} {:?}", String::from_utf8_lossy(tok))),
            Ok,
        )
}
