//! Monte Carlo estimation with deterministic reduction.
//!
//! Samples are evaluated in parallel but collected in index order and
//! summed sequentially, so estimates are bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;

/// Fraction of non-finite samples above which an estimate fails.
pub const MAX_NONFINITE_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    pub z: f64,
    pub bias: f64,
}

impl McOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        McOptions { samples, seed, z: 3.0, bias: 0.0 }
    }

    pub fn with_bias(self, bias: f64) -> Self {
        McOptions { bias, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub samples: usize,
    pub nonfinite: usize,
    pub estimate: f64,
    /// Value the estimate is compared against.
    #[serde(default)]
    pub target: f64,
    pub std_error: f64,
    /// `z·SE + bias`.
    pub tolerance: f64,
    pub pass: bool,
}

/// Mean and standard error of the finite entries; the report passes when
/// `|estimate| ≤ z·SE + bias` and non-finite samples stay rare.
pub fn summarize(values: &[f64], opts: &McOptions) -> McReport {
    summarize_about(values, 0.0, opts)
}

/// As [`summarize`], comparing against `target` instead of zero.
pub fn summarize_about(values: &[f64], target: f64, opts: &McOptions) -> McReport {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let nonfinite = values.len() - finite.len();
    let n = finite.len();
    let mut s = CompensatedSum::default();
    for v in &finite {
        s.add(*v);
    }
    let mean = if n > 0 { s.value() / n as f64 } else { f64::NAN };
    let mut q = CompensatedSum::default();
    for v in &finite {
        q.add((v - mean) * (v - mean));
    }
    let se = if n > 1 { (q.value() / (n - 1) as f64 / n as f64).sqrt() } else { f64::INFINITY };
    let tolerance = opts.z * se + opts.bias;
    let rare = (nonfinite as f64) <= MAX_NONFINITE_FRACTION * values.len() as f64;
    McReport {
        samples: values.len(),
        nonfinite,
        estimate: mean,
        target,
        std_error: se,
        tolerance,
        pass: rare && (mean - target).abs() <= tolerance,
    }
}

/// Evaluates `f(k)` for `k = 0..samples` and returns the `width` statistics
/// of every sample as columns.
pub fn collect<F>(samples: usize, width: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let rows: Vec<Result<Vec<f64>>> = (0..samples as u64).into_par_iter().map(&f).collect();
    let mut cols = vec![Vec::with_capacity(samples); width];
    for row in rows {
        let row = row?;
        if row.len() != width {
            return Err(Error::InvalidArgument(format!("sampler returned {} values, expected {width}", row.len())));
        }
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    Ok(cols)
}

/// `E[lhs + rhs] ≈ 0` for an integration-by-parts identity.
pub fn mc_ibp<F>(opts: &McOptions, sampler: F) -> Result<McReport>
where
    F: Fn(u64) -> Result<(f64, f64)> + Sync,
{
    let cols = collect(opts.samples, 1, |k| sampler(k).map(|(l, r)| vec![l + r]))?;
    Ok(summarize(&cols[0], opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::normals;

    #[test]
    fn standard_normal_mean() {
        let opts = McOptions::new(20_000, 9);
        let r = mc_ibp(&opts, |k| Ok((normals(9, k, 0, 1)[0], 0.0))).unwrap();
        assert!(r.pass);
        assert!((r.std_error - (1.0f64 / 20_000.0).sqrt()).abs() < 2e-4);
    }

    #[test]
    fn nonfinite_samples_fail() {
        let opts = McOptions::new(100, 0);
        let r = mc_ibp(&opts, |k| Ok((if k == 3 { f64::NAN } else { 0.0 }, 0.0))).unwrap();
        assert_eq!(r.nonfinite, 1);
        assert!(!r.pass);
    }

    #[test]
    fn shifted_mean_fails() {
        let opts = McOptions::new(5_000, 1);
        let r = mc_ibp(&opts, |k| Ok((1.0 + normals(1, k, 0, 1)[0], 0.0))).unwrap();
        assert!(!r.pass);
    }
}
