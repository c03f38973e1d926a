use crate::error::{Error, Result};

/// Endpoint-aligned linear resampling of `arr` to `target_len` samples.
///
/// Output sample `i` reads `arr` at position `i·(n−1)/(m−1)`. A single input
/// sample is broadcast; a single output sample takes `arr[0]`.
pub fn interp_linear(arr: &[f64], target_len: usize) -> Result<Vec<f64>> {
    let n = arr.len();
    if n == 0 {
        return Err(Error::Input("cannot interpolate an empty array".into()));
    }
    if target_len == 0 {
        return Err(Error::Input("interpolation target length must be ≥ 1".into()));
    }
    if n == 1 {
        return Ok(vec![arr[0]; target_len]);
    }
    if target_len == 1 {
        return Ok(vec![arr[0]]);
    }
    if n == target_len {
        return Ok(arr.to_vec());
    }
    let scale = (n - 1) as f64 / (target_len - 1) as f64;
    Ok((0..target_len)
        .map(|i| {
            let pos = i as f64 * scale;
            let lo = (pos.floor() as usize).min(n - 2);
            let frac = pos - lo as f64;
            arr[lo] * (1.0 - frac) + arr[lo + 1] * frac
        })
        .collect())
}
