//! Eigenvalue histograms and trace moments of random frame submatrices.
//!
//! Spectra are taken from the `m x m` matrix `F_s F_s^T` (equivalently
//! `F P F^T` with `P` a diagonal 0/1 mask), which has the same nonzero
//! eigenvalues as the `k x k` Gram of the kept columns.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{submatrix, SamplingPattern};
use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::linalg;
use crate::rng::{self, Purpose};
use crate::stats::mean_and_std_error;

/// Largest `n` accepted by [`moment_md_exhaustive`].
pub const MAX_EXHAUSTIVE_N: usize = 20;

/// Equal-width histogram of pooled eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_samples: u64,
    /// Expected fraction of kept columns, `E[k]/n = p`.
    pub beta: f64,
    /// Aspect ratio `m/n`.
    pub gamma: f64,
}

impl SpectrumHistogram {
    /// Bins `values` into `bins` equal-width bins spanning
    /// `[min(0, min value), max value]`.
    pub fn from_values(values: &[f64], bins: usize, beta: f64, gamma: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::BadParameter(format!("need at least 2 bins, got {bins}")));
        }
        let lo = values.iter().copied().fold(0.0f64, f64::min);
        let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if (hi - lo).is_nan() || hi - lo <= 1e-12 {
            hi = lo + 1.0;
        }
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        bin_edges.push(hi);
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(SpectrumHistogram { bin_edges, counts, total_samples: values.len() as u64, beta, gamma })
    }

    /// `bin_lo,bin_hi,count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.bin_edges[i], self.bin_edges[i + 1], c);
        }
        out
    }

    /// Count of the bin containing `value`, if it lies inside the range.
    pub fn count_at(&self, value: f64) -> Option<u64> {
        let last = *self.bin_edges.last()?;
        if value < self.bin_edges[0] || value > last {
            return None;
        }
        let idx = self.bin_edges[1..].iter().position(|&e| value < e).unwrap_or(self.counts.len() - 1);
        Some(self.counts[idx])
    }
}

/// Monte-Carlo estimate of the `d`-th subset moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub d: u32,
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// `d,value,std_error,trials` rows.
pub fn moments_to_csv(moments: &[MomentEstimate]) -> String {
    let mut out = String::from("d,value,std_error,trials\n");
    for m in moments {
        let _ = writeln!(out, "{},{},{},{}", m.d, m.value, m.std_error, m.trials);
    }
    out
}

/// Ascending eigenvalues of `F_s F_s^T`.
pub fn submatrix_eigenvalues(f: &Frame, s: &SamplingPattern) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let fs = submatrix(f, s)?;
    Ok(linalg::sym_eigenvalues_sorted(fs.data() * fs.data().transpose()))
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!("keep probability must be in [0, 1], got {p}")));
    }
    Ok(())
}

/// Pooled eigenvalue histogram over `trials` Bernoulli(`p`) patterns. An
/// empty pattern contributes `m` zero eigenvalues.
pub fn empirical_spectrum(f: &Frame, p: f64, trials: usize, bins: usize, seed: u64) -> Result<SpectrumHistogram> {
    check_prob(p)?;
    if trials == 0 {
        return Err(Error::BadParameter("trials must be positive".into()));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = SamplingPattern::bernoulli(f.n(), p, &mut rng::stream(seed, Purpose::Pattern, t));
            if s.is_empty() {
                Ok(vec![0.0; f.m()])
            } else {
                submatrix_eigenvalues(f, &s)
            }
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = per_trial.into_iter().flatten().collect();
    SpectrumHistogram::from_values(&values, bins, p, f.m() as f64 / f.n() as f64)
}

/// `Tr(M^d)` for symmetric `M` and `d` in `1..=4`.
fn trace_power(mat: &DMatrix<f64>, d: u32) -> f64 {
    match d {
        1 => mat.trace(),
        2 => mat.norm_squared(),
        3 => (mat * mat).component_mul(mat).sum(),
        4 => (mat * mat).norm_squared(),
        _ => unreachable!("moment order checked by caller"),
    }
}

fn masked_outer(f: &DMatrix<f64>, mask: impl Iterator<Item = bool>) -> DMatrix<f64> {
    let mut scaled = f.clone();
    for (mut col, keep) in scaled.column_iter_mut().zip(mask) {
        if !keep {
            col.fill(0.0);
        }
    }
    &scaled * f.transpose()
}

fn check_order(d: u32) -> Result<()> {
    if !(1..=4).contains(&d) {
        return Err(Error::BadParameter(format!("moment order must be 1..=4, got {d}")));
    }
    Ok(())
}

/// Monte-Carlo estimate of `m_d = (1/n) E[Tr((F P F^T)^d)]` with `P`
/// diagonal i.i.d. Bernoulli(`p`).
pub fn moment_md(f: &Frame, p: f64, d: u32, trials: usize, seed: u64) -> Result<MomentEstimate> {
    check_prob(p)?;
    check_order(d)?;
    if trials == 0 {
        return Err(Error::BadParameter("trials must be positive".into()));
    }
    let n = f.n() as f64;
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = SamplingPattern::bernoulli(f.n(), p, &mut rng::stream(seed, Purpose::Pattern, t));
            let mut mask = vec![false; f.n()];
            for &i in s.kept() {
                mask[i] = true;
            }
            trace_power(&masked_outer(f.data(), mask.into_iter()), d) / n
        })
        .collect();
    let (value, std_error) = mean_and_std_error(&samples);
    Ok(MomentEstimate { d, value, std_error, trials })
}

/// Exact `m_d` by enumerating all `2^n` masks.
pub fn moment_md_exhaustive(f: &Frame, p: f64, d: u32) -> Result<f64> {
    check_prob(p)?;
    check_order(d)?;
    let n = f.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds {MAX_EXHAUSTIVE_N}")));
    }
    let total: f64 = (0u64..1 << n)
        .into_par_iter()
        .map(|bits| {
            let k = bits.count_ones() as i32;
            let weight = p.powi(k) * (1.0 - p).powi(n as i32 - k);
            if weight == 0.0 {
                return 0.0;
            }
            weight * trace_power(&masked_outer(f.data(), (0..n).map(|i| bits >> i & 1 == 1)), d)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total / n as f64)
}
