//! Weight bundle container: one line of JSON header, then `HTWT` and the
//! parameters as little-endian f64 values.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const WEIGHT_MAGIC: &[u8; 4] = b"HTWT";

/// Serialize `header` as compact JSON followed by the parameter blob.
pub fn encode_weights<H: Serialize>(header: &H, tensors: &[&[f64]]) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(header)?;
    out.push(b'\n');
    out.extend_from_slice(WEIGHT_MAGIC);
    for t in tensors {
        for v in *t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Split a bundle into its header and flat parameter vector.
pub fn decode_weights<H: DeserializeOwned>(bytes: &[u8]) -> Result<(H, Vec<f64>)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::ModelFormat("missing header line".into()))?;
    let header: H = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;
    let rest = &bytes[nl + 1..];
    if rest.len() < 4 || &rest[..4] != WEIGHT_MAGIC {
        return Err(Error::ModelFormat("missing HTWT magic".into()));
    }
    let blob = &rest[4..];
    if blob.len() % 8 != 0 {
        return Err(Error::ModelFormat(format!("parameter blob of {} bytes is not a multiple of 8", blob.len())));
    }
    let values = blob.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((header, values))
}

/// Copy a flat parameter vector into tensors of the given layout.
pub fn scatter_params(values: &[f64], tensors: &mut [&mut [f64]]) -> Result<()> {
    let need: usize = tensors.iter().map(|t| t.len()).sum();
    if values.len() != need {
        return Err(Error::ModelFormat(format!(
            "bundle holds {} parameters, architecture needs {need}",
            values.len()
        )));
    }
    let mut at = 0;
    for t in tensors.iter_mut() {
        t.copy_from_slice(&values[at..at + t.len()]);
        at += t.len();
    }
    Ok(())
}
