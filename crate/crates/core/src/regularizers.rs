//! ETF-similarity losses and the baselines they are compared with.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{coherence, etf_target_value, normalize_columns, Frame};
use crate::linalg;
use crate::rng::{self, Purpose};

/// Column norms are floored at this value before normalization inside the
/// ETF losses.
const NORM_FLOOR: f64 = 1e-12;
/// Entries of `|A^T A| - |G_ETF|` within this of the maximum count as ties.
pub const MAX_TIE_TOL: f64 = 1e-12;
/// Largest column count for which [`dropout_objective_exhaustive`] runs.
pub const MAX_EXHAUSTIVE_MASK_N: usize = 20;

/// Norm applied to `D = |A^T A| - |G_ETF|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtfLossVariant {
    /// `max |D_ij|` (the coherence loss).
    #[serde(rename = "linf")]
    MaxAbs,
    /// `sum |D_ij|`.
    #[serde(rename = "l1")]
    SumAbs,
    /// `sum D_ij^2`.
    #[serde(rename = "l2")]
    SumSquares,
}

impl EtfLossVariant {
    pub const ALL: [EtfLossVariant; 3] = [EtfLossVariant::MaxAbs, EtfLossVariant::SumAbs, EtfLossVariant::SumSquares];

    pub fn name(self) -> &'static str {
        match self {
            EtfLossVariant::MaxAbs => "linf",
            EtfLossVariant::SumAbs => "l1",
            EtfLossVariant::SumSquares => "l2",
        }
    }
}

impl std::str::FromStr for EtfLossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" | "max" => Ok(EtfLossVariant::MaxAbs),
            "l1" | "sum-abs" => Ok(EtfLossVariant::SumAbs),
            "l2" | "sum-squares" => Ok(EtfLossVariant::SumSquares),
            other => Err(Error::Parse(format!("unknown loss variant {other:?} (expected linf, l1 or l2)"))),
        }
    }
}

/// Normalized columns, their original norms, the Gram of the normalized
/// columns and `D = |G| - |G_ETF|` with a zero diagonal.
struct Deviation {
    unit: DMatrix<f64>,
    norms: Vec<f64>,
    gram: DMatrix<f64>,
    d: DMatrix<f64>,
}

fn deviation(a: &DMatrix<f64>) -> Deviation {
    let (m, n) = a.shape();
    let (unit, norms) = linalg::normalize_columns_floored(a, NORM_FLOOR);
    let gram = unit.tr_mul(&unit);
    let target = etf_target_value(m, n);
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { gram[(i, j)].abs() - target });
    Deviation { unit, norms, gram, d }
}

/// ETF-similarity loss of `a`, computed on its column-normalized copy. The
/// target is the ETF Gram for `n > m` and the identity for `n <= m`.
pub fn etf_loss(a: &DMatrix<f64>, variant: EtfLossVariant) -> f64 {
    let d = deviation(a).d;
    match variant {
        EtfLossVariant::MaxAbs => linalg::max_abs(&d),
        EtfLossVariant::SumAbs => d.iter().map(|v| v.abs()).sum(),
        EtfLossVariant::SumSquares => d.norm_squared(),
    }
}

fn sign_with_deadzone(v: f64, zone: f64) -> f64 {
    if v > zone {
        1.0
    } else if v < -zone {
        -1.0
    } else {
        0.0
    }
}

/// (Sub)gradient of [`etf_loss`] with respect to `a`, including the column
/// normalization.
///
/// For `MaxAbs` the contributions of every entry within [`MAX_TIE_TOL`] of
/// the maximum are averaged. Entries of `D` (and Gram entries) that are zero
/// up to rounding contribute nothing, so an exact ETF has zero gradient.
pub fn etf_loss_grad(a: &DMatrix<f64>, variant: EtfLossVariant) -> DMatrix<f64> {
    let Deviation { unit, norms, gram, d } = deviation(a);
    let n = d.ncols();
    // dL/dD
    let weights = match variant {
        EtfLossVariant::MaxAbs => {
            let max = linalg::max_abs(&d);
            if max <= MAX_TIE_TOL {
                DMatrix::zeros(n, n)
            } else {
                let ties = d.iter().filter(|v| v.abs() >= max - MAX_TIE_TOL).count() as f64;
                d.map(|v| if v.abs() >= max - MAX_TIE_TOL { v.signum() / ties } else { 0.0 })
            }
        }
        EtfLossVariant::SumAbs => d.map(|v| sign_with_deadzone(v, MAX_TIE_TOL)),
        EtfLossVariant::SumSquares => d.map(|v| if v.abs() <= MAX_TIE_TOL { 0.0 } else { 2.0 * v }),
    };
    // dL/dG, with D_ij = |G_ij| - t off the diagonal.
    let mut dg = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            weights[(i, j)] * sign_with_deadzone(gram[(i, j)], 0.0)
        }
    });
    dg += dg.transpose();
    // G = U^T U  =>  dL/dU = U (dL/dG + dL/dG^T)
    let du = &unit * dg;
    // u = a / |a|  =>  dL/da = (g - u (u . g)) / |a|
    let mut grad = du;
    for (j, mut col) in grad.column_iter_mut().enumerate() {
        let u = unit.column(j);
        let along = u.dot(&col);
        col -= u * along;
        col /= norms[j];
    }
    grad
}

/// `N x d` activations, one example per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBatch {
    data: DMatrix<f64>,
}

impl ActivationBatch {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::BadDims(format!("covariance needs N >= 2 examples, got {}", data.nrows())));
        }
        Ok(ActivationBatch { data })
    }

    /// Population covariance (`1/N` normalization).
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.data.nrows() as f64;
        let mean = self.data.row_mean();
        let mut centered = self.data.clone();
        for mut row in centered.row_iter_mut() {
            row -= &mean;
        }
        centered.tr_mul(&centered) / n
    }
}

/// DeCov penalty: half the squared Frobenius norm of the off-diagonal part of
/// the activation covariance.
pub fn decov_loss(h: &ActivationBatch) -> f64 {
    let c = h.covariance();
    let diag: f64 = c.diagonal().norm_squared();
    0.5 * (c.norm_squared() - diag)
}

/// Paired samples for the dropout objective: row `i` of `x` (`N x m1`) is
/// mapped to row `i` of `y` (`N x m2`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl PairedSamples {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() || x.nrows() == 0 {
            return Err(Error::DimMismatch(format!("{} inputs vs {} targets", x.nrows(), y.nrows())));
        }
        Ok(PairedSamples { x, y })
    }
}

/// Second-moment statistics that determine the dropout objective:
/// `E[x x^T]`, `E[y x^T]` and `E ||y||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoments {
    pub xx: DMatrix<f64>,
    pub yx: DMatrix<f64>,
    pub yy: f64,
}

impl SecondMoments {
    /// Empirical moments of a sample set.
    pub fn from_samples(s: &PairedSamples) -> Self {
        let n = s.x.nrows() as f64;
        SecondMoments { xx: s.x.tr_mul(&s.x) / n, yx: s.y.tr_mul(&s.x) / n, yy: s.y.norm_squared() / n }
    }
}

fn check_factor_shapes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimMismatch(format!("A has {} columns, B has {}", a.ncols(), b.ncols())));
    }
    Ok(())
}

fn check_samples(a: &DMatrix<f64>, b: &DMatrix<f64>, s: &PairedSamples) -> Result<()> {
    check_factor_shapes(a, b)?;
    if s.x.ncols() != a.nrows() || s.y.ncols() != b.nrows() {
        return Err(Error::DimMismatch(format!(
            "samples are {}->{} but A is {}x{} and B is {}x{}",
            s.x.ncols(),
            s.y.ncols(),
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

fn check_dropout_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadParameter(format!("keep probability must be in (0, 1], got {p}")));
    }
    Ok(())
}

/// Mean over the samples of `||y - (1/p) B diag(mask) A^T x||^2`.
fn masked_sample_loss(a: &DMatrix<f64>, b: &DMatrix<f64>, p: f64, mask: &[bool], s: &PairedSamples) -> f64 {
    let mut bm = b.clone();
    for (mut col, &keep) in bm.column_iter_mut().zip(mask) {
        if keep {
            col /= p;
        } else {
            col.fill(0.0);
        }
    }
    // Predictions for all samples at once: X A Bm^T  (N x m2).
    let pred = &s.x * a * bm.transpose();
    (&s.y - pred).norm_squared() / s.x.nrows() as f64
}

/// Monte-Carlo estimate of `E_{mask, (x,y)} ||y - (1/p) B diag(mask) A^T x||^2`.
/// Each trial draws one Bernoulli(`p`) mask and averages over all samples.
pub fn dropout_objective_mc(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    p: f64,
    samples: &PairedSamples,
    mask_trials: usize,
    seed: u64,
) -> Result<f64> {
    check_samples(a, b, samples)?;
    check_dropout_p(p)?;
    if mask_trials == 0 {
        return Err(Error::BadParameter("mask_trials must be positive".into()));
    }
    let n = a.ncols();
    let total: f64 = (0..mask_trials as u64)
        .map(|t| {
            let mut rng = rng::stream(seed, Purpose::Mask, t);
            let mask: Vec<bool> = (0..n).map(|_| rand::Rng::random::<f64>(&mut rng) < p).collect();
            masked_sample_loss(a, b, p, &mask, samples)
        })
        .sum();
    Ok(total / mask_trials as f64)
}

/// Exact expectation over all `2^n` masks, averaged over the samples.
pub fn dropout_objective_exhaustive(a: &DMatrix<f64>, b: &DMatrix<f64>, p: f64, samples: &PairedSamples) -> Result<f64> {
    check_samples(a, b, samples)?;
    check_dropout_p(p)?;
    let n = a.ncols();
    if n > MAX_EXHAUSTIVE_MASK_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds {MAX_EXHAUSTIVE_MASK_N}")));
    }
    let mut total = 0.0;
    for bits in 0u64..1 << n {
        let k = bits.count_ones() as i32;
        let weight = p.powi(k) * (1.0 - p).powi(n as i32 - k);
        if weight == 0.0 {
            continue;
        }
        let mask: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        total += weight * masked_sample_loss(a, b, p, &mask, samples);
    }
    Ok(total)
}

/// Plain squared loss `E ||y - B A^T x||^2` from second moments.
pub fn plain_squared_loss(a: &DMatrix<f64>, b: &DMatrix<f64>, stats: &SecondMoments) -> Result<f64> {
    check_factor_shapes(a, b)?;
    let w = b * a.transpose(); // m2 x m1
    if stats.xx.nrows() != w.ncols() || stats.yx.shape() != w.shape() {
        return Err(Error::DimMismatch("second-moment statistics do not match A and B".into()));
    }
    Ok(stats.yy - 2.0 * w.component_mul(&stats.yx).sum() + (&w * &stats.xx).component_mul(&w).sum())
}

/// Closed form of the dropout objective:
/// `l(A,B) + (1-p)/p * sum_i ||b_i||^2 a_i^T E[x x^T] a_i`.
/// With `E[x x^T] = I` the penalty is `lambda * sum_i ||a_i||^2 ||b_i||^2`.
pub fn dropout_objective_closed(a: &DMatrix<f64>, b: &DMatrix<f64>, p: f64, stats: &SecondMoments) -> Result<f64> {
    check_dropout_p(p)?;
    let plain = plain_squared_loss(a, b, stats)?;
    let lambda = (1.0 - p) / p;
    let penalty: f64 = a
        .column_iter()
        .zip(b.column_iter())
        .map(|(ai, bi)| bi.norm_squared() * (ai.transpose() * &stats.xx * ai)[(0, 0)])
        .sum();
    Ok(plain + lambda * penalty)
}

/// `max_i ||a_i|| ||b_i|| - min_i ||a_i|| ||b_i||`.
pub fn joint_equalization_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check_factor_shapes(a, b)?;
    if a.ncols() == 0 {
        return Ok(0.0);
    }
    let products: Vec<f64> = a.column_iter().zip(b.column_iter()).map(|(x, y)| x.norm() * y.norm()).collect();
    let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

/// Joint-equalization gap between the columns of `F_s` and the matching
/// rows of its pseudo-inverse. `F_s` must have full row rank.
pub fn subframe_pinv_gap(f_s: &Frame) -> Result<f64> {
    let fs = f_s.data();
    let g = fs * fs.transpose();
    let chol = g.cholesky().ok_or(Error::RankDeficient(0.0))?;
    // F_s^+ = F_s^T (F_s F_s^T)^-1, so row i of F_s^+ is column i of
    // (F_s F_s^T)^-1 F_s.
    let pinv_rows_as_columns = chol.solve(fs);
    joint_equalization_gap(fs, &pinv_rows_as_columns)
}

fn assemble_kernels(kernels: &[DVector<f64>], min_count: usize) -> Result<DMatrix<f64>> {
    if kernels.len() < min_count {
        return Err(Error::BadParameter(format!("need at least {min_count} kernels, got {}", kernels.len())));
    }
    let len = kernels[0].len();
    if len == 0 || kernels.iter().any(|k| k.len() != len) {
        return Err(Error::DimMismatch("kernels must share a nonzero length".into()));
    }
    for (i, k) in kernels.iter().enumerate() {
        if k.norm() < crate::frames::ZERO_NORM {
            return Err(Error::ZeroKernel(i));
        }
    }
    Ok(DMatrix::from_fn(len, kernels.len(), |r, c| kernels[c][r]))
}

/// Coherence of the matrix whose columns are the normalized (column-stacked)
/// kernels.
pub fn kernel_coherence(kernels: &[DVector<f64>]) -> Result<f64> {
    let f = Frame::new(assemble_kernels(kernels, 2)?)?;
    coherence(&normalize_columns(&f)?)
}

/// Boundary handling of the 1-D convolution matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Wrap-around shifts.
    Circular,
    /// Linear convolution with zero padding; kernels shifted past the edge
    /// are truncated.
    Zero,
}

/// Convolution matrix of `kernels` (length `L`) over a length-`signal_len`
/// signal: one column per kernel and shift, kernel-major.
pub fn convolution_toeplitz(kernels: &[DVector<f64>], signal_len: usize, boundary: Boundary) -> Result<DMatrix<f64>> {
    let k = assemble_kernels(kernels, 1)?;
    let len = k.nrows();
    let shifts: Vec<isize> = match boundary {
        Boundary::Circular => (0..signal_len as isize).collect(),
        Boundary::Zero => (1 - len as isize..signal_len as isize).collect(),
    };
    let mut out = DMatrix::zeros(signal_len, k.ncols() * shifts.len());
    for c in 0..k.ncols() {
        for (si, &s) in shifts.iter().enumerate() {
            let col = c * shifts.len() + si;
            for t in 0..len {
                let row = s + t as isize;
                let row = match boundary {
                    Boundary::Circular => row.rem_euclid(signal_len as isize),
                    Boundary::Zero if (0..signal_len as isize).contains(&row) => row,
                    Boundary::Zero => continue,
                };
                out[(row as usize, col)] += k[(t, c)];
            }
        }
    }
    Ok(out)
}

/// Stride matrix: a window of `3L - 2` rows holding each kernel at every
/// offset `0..=2L-2`, i.e. the central kernels plus every shift that overlaps
/// them.
pub fn stride_matrix(kernels: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let k = assemble_kernels(kernels, 1)?;
    let len = k.nrows();
    let offsets = 2 * len - 1;
    let mut out = DMatrix::zeros(3 * len - 2, k.ncols() * offsets);
    for c in 0..k.ncols() {
        for o in 0..offsets {
            for t in 0..len {
                out[(o + t, c * offsets + o)] = k[(t, c)];
            }
        }
    }
    Ok(out)
}

/// Coherence of a matrix after normalizing its columns; all-zero columns
/// (possible for truncated kernels) are ignored.
fn normalized_coherence_ignoring_zero(mat: &DMatrix<f64>) -> Result<f64> {
    let cols: Vec<usize> =
        (0..mat.ncols()).filter(|&j| mat.column(j).norm() >= crate::frames::ZERO_NORM).collect();
    let f = Frame::new(mat.select_columns(cols.iter()))?;
    coherence(&normalize_columns(&f)?)
}

/// Both coherences compared by [`toeplitz_coherence_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToeplitzCoherence {
    pub toeplitz_coh: f64,
    pub stride_coh: f64,
    pub equal: bool,
}

/// Tolerance of the Toeplitz / stride coherence comparison.
pub const TOEPLITZ_EQUAL_TOL: f64 = 1e-9;

/// Compares the coherence of the circular convolution matrix with that of
/// the stride matrix. Needs `signal_len >= 2 L`.
pub fn toeplitz_coherence_check(kernels: &[DVector<f64>], signal_len: usize) -> Result<ToeplitzCoherence> {
    toeplitz_coherence_check_with(kernels, signal_len, Boundary::Circular)
}

pub fn toeplitz_coherence_check_with(
    kernels: &[DVector<f64>],
    signal_len: usize,
    boundary: Boundary,
) -> Result<ToeplitzCoherence> {
    let len = kernels.first().map_or(0, |k| k.len());
    if signal_len < 2 * len {
        return Err(Error::BadDims(format!("signal length {signal_len} < 2 x kernel length {len}")));
    }
    let toeplitz_coh = normalized_coherence_ignoring_zero(&convolution_toeplitz(kernels, signal_len, boundary)?)?;
    let stride_coh = normalized_coherence_ignoring_zero(&stride_matrix(kernels)?)?;
    Ok(ToeplitzCoherence { toeplitz_coh, stride_coh, equal: (toeplitz_coh - stride_coh).abs() <= TOEPLITZ_EQUAL_TOL })
}
