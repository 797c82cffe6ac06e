//! `HTDP` depth binaries and plain-text BLC files.
//!
//! HTDP layout (little-endian): magic `b"HTDP"`, `u32` version (1),
//! `u32` rows, `u32` cols, then `rows * cols` `f32` heights in µm, row-major.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Blc, DepthProfile};
use crate::error::{Error, Result};

pub const HTDP_MAGIC: &[u8; 4] = b"HTDP";
pub const HTDP_VERSION: u32 = 1;

pub fn write_htdp<W: Write>(mut w: W, profile: &DepthProfile) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 4 * profile.heights().len());
    buf.extend_from_slice(HTDP_MAGIC);
    buf.extend_from_slice(&HTDP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(profile.rows() as u32).to_le_bytes());
    buf.extend_from_slice(&(profile.cols() as u32).to_le_bytes());
    for &h in profile.heights() {
        buf.extend_from_slice(&(h as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_htdp<R: Read>(mut r: R) -> Result<DepthProfile> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_htdp(&bytes)
}

pub fn decode_htdp(bytes: &[u8]) -> Result<DepthProfile> {
    if bytes.len() < 16 || &bytes[..4] != HTDP_MAGIC {
        return Err(Error::invalid("not an HTDP depth file (bad magic)"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != HTDP_VERSION {
        return Err(Error::invalid(format!("unsupported HTDP version {version}")));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| Error::invalid("HTDP dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::invalid(format!(
            "HTDP {rows}x{cols} should be {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let heights = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DepthProfile::new(rows, cols, heights)
}

pub fn save_htdp(path: impl AsRef<Path>, profile: &DepthProfile) -> Result<()> {
    let mut buf = Vec::new();
    write_htdp(&mut buf, profile)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_htdp(path: impl AsRef<Path>) -> Result<DepthProfile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::from(e).context(path.display()))?;
    decode_htdp(&bytes).map_err(|e| e.context(path.display()))
}

/// One value per line. `{}` formatting of `f64` round-trips exactly.
pub fn format_blc_text(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_blc_text(text: &str) -> Result<Blc> {
    let values = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::invalid(format!("BLC line {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Blc::new(values)
}

pub fn save_blc(path: impl AsRef<Path>, blc: &Blc) -> Result<()> {
    fs::write(path, format_blc_text(blc.values()))?;
    Ok(())
}

pub fn load_blc(path: impl AsRef<Path>) -> Result<Blc> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display()))?;
    parse_blc_text(&text).map_err(|e| e.context(path.display()))
}
