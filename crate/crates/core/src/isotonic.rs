//! Least-squares projection onto non-increasing sequences
//! (pool adjacent violators).

use crate::error::Result;
use crate::surface::Blc;

/// Closest non-increasing vector to `values` in the Euclidean norm.
pub fn project_non_increasing(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count); block means are kept strictly decreasing
    let mut sums: Vec<f64> = Vec::with_capacity(values.len());
    let mut counts: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let n = sums.len();
            let last = sums[n - 1] / counts[n - 1] as f64;
            let prev = sums[n - 2] / counts[n - 2] as f64;
            if prev >= last {
                break;
            }
            let (s, c) = (sums.pop().unwrap(), counts.pop().unwrap());
            sums[n - 2] += s;
            counts[n - 2] += c;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in sums.iter().zip(&counts) {
        out.extend(std::iter::repeat_n(s / *c as f64, *c));
    }
    out
}

/// Project a raw network output onto the BLC cone.
pub fn monotone_blc(raw: &[f64]) -> Result<Blc> {
    Blc::new(project_non_increasing(raw))
}
