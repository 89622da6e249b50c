//! Textual encoding of floats and confidence sets for the output writers.
//!
//! Finite values print as `{:.16e}` (17 significant digits), which
//! round-trips every f64 bit-exactly through `str::parse`. Unbounded
//! endpoints use the sentinels `inf` and `-inf`, and a set serializes its
//! pieces as `lo:hi` segments joined by `|`, the empty set being the empty
//! string.

use heavycs::ConfidenceSet;

pub fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_float(s: &str) -> Result<f64, String> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("bad float '{other}': {e}")),
    }
}

pub fn fmt_set(set: &ConfidenceSet) -> String {
    set.intervals()
        .iter()
        .map(|iv| format!("{}:{}", fmt_float(iv.lo), fmt_float(iv.hi)))
        .collect::<Vec<_>>()
        .join("|")
}

/// Inverse of [`fmt_set`]; returns the endpoint pairs in order.
pub fn parse_set(s: &str) -> Result<Vec<(f64, f64)>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('|')
        .map(|piece| {
            let (lo, hi) = piece
                .split_once(':')
                .ok_or_else(|| format!("bad set piece '{piece}': expected lo:hi"))?;
            Ok((parse_float(lo)?, parse_float(hi)?))
        })
        .collect()
}
