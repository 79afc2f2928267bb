//! The analog erasure channel: encode with a frame, erase columns, add white
//! Gaussian noise and decode.
//!
//! Orientation: frames are `m x n`, signals `x` have length `m` and the
//! transmitted row vector is `y = x^T F_s + w` of length `k = |kept|`.
//! `p` is always the probability of *keeping* a column.

use nalgebra::{DMatrix, DVector, SVD};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::linalg;
use crate::rng::{self, Purpose, Rng};
use crate::stats::{mean_and_std_error, Estimate};

/// Ratio `sigma_min / sigma_max` below which a submatrix is rank deficient.
pub const RANK_TOL: f64 = 1e-10;
/// Default unroll depth of the gradient-descent decoder.
pub const DEFAULT_DECODER_ITERS: usize = 10;
/// Default channel noise standard deviation.
pub const DEFAULT_SIGMA_W: f64 = 1e-3;
/// Consecutive singular draws tolerated before an estimator gives up.
const MAX_RESAMPLES: usize = 100_000;

/// Sorted, duplicate-free set of kept column indices out of `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SamplingPattern {
    kept: Vec<usize>,
    n: usize,
}

impl SamplingPattern {
    pub fn new(kept: Vec<usize>, n: usize) -> Result<Self> {
        if kept.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadParameter("pattern indices must be strictly increasing".into()));
        }
        if kept.last().is_some_and(|&last| last >= n) {
            return Err(Error::BadParameter(format!("pattern index out of range for n = {n}")));
        }
        Ok(SamplingPattern { kept, n })
    }

    pub fn full(n: usize) -> Self {
        SamplingPattern { kept: (0..n).collect(), n }
    }

    /// Keeps index `i` when `mask[i]` is true.
    pub fn from_mask(mask: &[bool]) -> Self {
        let kept = mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
        SamplingPattern { kept, n: mask.len() }
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub(crate) fn bernoulli(n: usize, p: f64, rng: &mut Rng) -> Self {
        let kept = (0..n).filter(|_| rng.random::<f64>() < p).collect();
        SamplingPattern { kept, n }
    }

    pub(crate) fn fixed_k(n: usize, k: usize, rng: &mut Rng) -> Self {
        let mut kept = index::sample(rng, n, k).into_vec();
        kept.sort_unstable();
        SamplingPattern { kept, n }
    }
}

fn check_keep_prob(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadParameter(format!("keep probability must be in (0, 1], got {p}")));
    }
    Ok(())
}

/// Keeps each of `n` indices independently with probability `p`.
pub fn sample_pattern_bernoulli(n: usize, p: f64, seed: u64) -> Result<SamplingPattern> {
    check_keep_prob(p)?;
    Ok(SamplingPattern::bernoulli(n, p, &mut rng::stream(seed, Purpose::Pattern, 0)))
}

/// Uniformly random `k`-subset of `0..n`.
pub fn sample_pattern_fixed_k(n: usize, k: usize, seed: u64) -> Result<SamplingPattern> {
    if k > n {
        return Err(Error::BadParameter(format!("cannot keep {k} of {n} columns")));
    }
    Ok(SamplingPattern::fixed_k(n, k, &mut rng::stream(seed, Purpose::Pattern, 0)))
}

/// Columns of `f` listed in `s`, in order.
pub fn submatrix(f: &Frame, s: &SamplingPattern) -> Result<Frame> {
    if s.n != f.n() {
        return Err(Error::DimMismatch(format!("pattern over {} columns, frame has {}", s.n, f.n())));
    }
    Frame::new(f.data().select_columns(s.kept.iter()))
}

/// `y = x^T F_s + w` with `w ~ N(0, sigma_w^2)` drawn from the seed's noise
/// stream.
pub fn transmit(f: &Frame, x: &DVector<f64>, s: &SamplingPattern, sigma_w: f64, seed: u64) -> Result<DVector<f64>> {
    if s.is_empty() {
        return Err(Error::EmptyPattern);
    }
    if x.len() != f.m() {
        return Err(Error::DimMismatch(format!("signal length {} for a frame with m = {}", x.len(), f.m())));
    }
    let fs = submatrix(f, s)?;
    let noise = noise_vector(s.len(), sigma_w, &mut rng::stream(seed, Purpose::Noise, 0))?;
    Ok(fs.data().tr_mul(x) + noise)
}

fn noise_vector(k: usize, sigma_w: f64, rng: &mut Rng) -> Result<DVector<f64>> {
    let normal = Normal::new(0.0, sigma_w).map_err(|e| Error::BadParameter(format!("sigma_w: {e}")))?;
    Ok(DVector::from_fn(k, |_, _| normal.sample(rng)))
}

fn check_measurement(f_s: &Frame, y: &DVector<f64>) -> Result<()> {
    if f_s.n() == 0 {
        return Err(Error::EmptyPattern);
    }
    if y.len() != f_s.n() {
        return Err(Error::DimMismatch(format!("{} measurements for {} kept columns", y.len(), f_s.n())));
    }
    Ok(())
}

/// Least-squares decoding `x_hat = y F_s^+`, via the SVD of `F_s^T`.
pub fn decode_ls(f_s: &Frame, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_measurement(f_s, y)?;
    let svd = full_rank_svd(f_s.data(), true)?;
    Ok(solve_with_svd(&svd, y))
}

/// Thin SVD of `F_s^T` (`k x m`), rejecting rank-deficient submatrices.
/// SVD of `F_s^T`, rejected below [`RANK_TOL`]. Without `vectors` only the
/// singular values are computed.
fn full_rank_svd(fs: &DMatrix<f64>, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let (m, k) = fs.shape();
    if k < m {
        return Err(Error::RankDeficient(0.0));
    }
    let svd = SVD::new(fs.transpose(), vectors, vectors);
    let ratio = singular_ratio(&svd.singular_values);
    if ratio < RANK_TOL {
        return Err(Error::RankDeficient(ratio));
    }
    Ok(svd)
}

fn singular_ratio(sv: &DVector<f64>) -> f64 {
    let hi = sv.max();
    if hi <= 0.0 {
        0.0
    } else {
        sv.min() / hi
    }
}

fn solve_with_svd(svd: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, y: &DVector<f64>) -> DVector<f64> {
    let u = svd.u.as_ref().expect("computed with u");
    let v_t = svd.v_t.as_ref().expect("computed with v_t");
    let mut coeffs = u.tr_mul(y);
    for (c, s) in coeffs.iter_mut().zip(svd.singular_values.iter()) {
        *c /= s;
    }
    v_t.tr_mul(&coeffs)
}

/// Step size `1 / lambda_max(F_s F_s^T)`; 0 for an all-zero submatrix.
pub fn unrolled_step_size(f_s: &DMatrix<f64>) -> f64 {
    let lambda = linalg::lambda_max_power(&(f_s * f_s.transpose()));
    if lambda > 0.0 {
        1.0 / lambda
    } else {
        0.0
    }
}

/// `iters` gradient steps on `||y - x F_s||^2` from `x = 0` with step
/// `1 / lambda_max(F_s F_s^T)`.
pub fn decode_unrolled_gd(f_s: &Frame, y: &DVector<f64>, iters: usize) -> Result<DVector<f64>> {
    Ok(unrolled_gd_iterates(f_s, y, iters)?.pop().expect("iterates include the start"))
}

/// All iterates `x^0 = 0, x^1, ..., x^iters` of the unrolled decoder.
pub fn unrolled_gd_iterates(f_s: &Frame, y: &DVector<f64>, iters: usize) -> Result<Vec<DVector<f64>>> {
    check_measurement(f_s, y)?;
    let a = f_s.data();
    let mu = unrolled_step_size(a);
    let mut x = DVector::zeros(f_s.m());
    let mut out = Vec::with_capacity(iters + 1);
    out.push(x.clone());
    for _ in 0..iters {
        let residual = a.tr_mul(&x) - y;
        x -= a * residual * mu;
        out.push(x.clone());
    }
    Ok(out)
}

/// `||y - x_hat^T F_s||^2`.
pub fn ls_residual(f_s: &Frame, x_hat: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (f_s.data().tr_mul(x_hat) - y).norm_squared()
}

/// Decoder used by [`mse_monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoder {
    LeastSquares,
    UnrolledGd { iters: usize },
}

/// Erasure-channel Monte-Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Keep probability.
    pub p: f64,
    pub sigma_w: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        check_keep_prob(self.p)?;
        if !self.sigma_w.is_finite() || self.sigma_w < 0.0 {
            return Err(Error::BadParameter(format!("sigma_w must be >= 0, got {}", self.sigma_w)));
        }
        if self.trials == 0 {
            return Err(Error::BadParameter("trials must be positive".into()));
        }
        Ok(())
    }
}

/// One accepted draw: the pattern, its submatrix and the SVD of `F_s^T`.
struct Draw {
    fs: DMatrix<f64>,
    svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    skipped: usize,
}

/// Draws Bernoulli patterns from the trial's pattern stream until the
/// submatrix has full row rank. Estimators sharing a seed therefore accept
/// the same pattern on every trial.
fn draw_full_rank(f: &Frame, p: f64, seed: u64, trial: u64, vectors: bool) -> Result<Draw> {
    let mut rng = rng::stream(seed, Purpose::Pattern, trial);
    for skipped in 0..MAX_RESAMPLES {
        let s = SamplingPattern::bernoulli(f.n(), p, &mut rng);
        let fs = f.data().select_columns(s.kept.iter());
        if let Ok(svd) = full_rank_svd(&fs, vectors) {
            return Ok(Draw { fs, svd, skipped });
        }
    }
    Err(Error::RankDeficient(0.0))
}

fn collect_estimate(results: Vec<(f64, usize)>, seed: u64) -> Estimate {
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (estimate, std_error) = mean_and_std_error(&values);
    Estimate { estimate, std_error, trials: values.len(), skipped_singular: results.iter().map(|r| r.1).sum(), seed }
}

/// Monte-Carlo estimate of `E ||x - x_hat||^2` with `x ~ N(0, I_m)`, Bernoulli
/// patterns and AWGN. Rank-deficient patterns are redrawn and counted.
pub fn mse_monte_carlo(f: &Frame, cfg: &ChannelConfig, decoder: Decoder) -> Result<Estimate> {
    cfg.validate()?;
    if let Decoder::UnrolledGd { iters: 0 } = decoder {
        return Err(Error::BadParameter("unrolled decoder needs iters >= 1".into()));
    }
    let results = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let draw = draw_full_rank(f, cfg.p, cfg.seed, t, decoder == Decoder::LeastSquares)?;
            let mut sig = rng::stream(cfg.seed, Purpose::Signal, t);
            let x = DVector::from_fn(f.m(), |_, _| StandardNormal.sample(&mut sig));
            let w = noise_vector(draw.fs.ncols(), cfg.sigma_w, &mut rng::stream(cfg.seed, Purpose::Noise, t))?;
            let y = draw.fs.tr_mul(&x) + w;
            let x_hat = match decoder {
                Decoder::LeastSquares => solve_with_svd(&draw.svd, &y),
                Decoder::UnrolledGd { iters } => {
                    let fs = Frame::new(draw.fs)?;
                    decode_unrolled_gd(&fs, &y, iters)?
                }
            };
            Ok(((x - x_hat).norm_squared(), draw.skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_estimate(results, cfg.seed))
}

/// Monte-Carlo estimate of `E Tr((F_s F_s^T)^-1)` over Bernoulli(`p`)
/// patterns. Uses the same pattern streams as [`mse_monte_carlo`], so with
/// equal seeds the two estimators are matched trial by trial.
pub fn expected_inverse_trace(f: &Frame, p: f64, trials: usize, seed: u64) -> Result<Estimate> {
    check_keep_prob(p)?;
    if trials == 0 {
        return Err(Error::BadParameter("trials must be positive".into()));
    }
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let draw = draw_full_rank(f, p, seed, t, false)?;
            Ok((inverse_trace_from_singular_values(&draw.svd.singular_values), draw.skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_estimate(results, seed))
}

fn inverse_trace_from_singular_values(sv: &DVector<f64>) -> f64 {
    sv.iter().map(|s| 1.0 / (s * s)).sum()
}

/// `Tr((F_s F_s^T)^-1)` for one submatrix.
pub fn inverse_trace(f_s: &Frame) -> Result<f64> {
    Ok(inverse_trace_from_singular_values(&full_rank_svd(f_s.data(), false)?.singular_values))
}

/// Minimum-norm least-squares decoding that tolerates rank deficiency;
/// singular values below `RANK_TOL * sigma_max` are dropped. Returns zero
/// for an empty pattern.
pub fn decode_pinv(f_s: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if f_s.ncols() == 0 {
        return DVector::zeros(f_s.nrows());
    }
    let svd = SVD::new(f_s.transpose(), true, true);
    let cutoff = RANK_TOL * svd.singular_values.max();
    let u = svd.u.as_ref().expect("computed with u");
    let v_t = svd.v_t.as_ref().expect("computed with v_t");
    let mut coeffs = u.tr_mul(y);
    for (c, s) in coeffs.iter_mut().zip(svd.singular_values.iter()) {
        *c = if *s > cutoff { *c / s } else { 0.0 };
    }
    v_t.tr_mul(&coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{make_gaussian_frame, make_simplex_etf};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn pattern_validation() {
        assert!(SamplingPattern::new(vec![0, 2, 5], 6).is_ok());
        assert!(SamplingPattern::new(vec![2, 2], 6).is_err());
        assert!(SamplingPattern::new(vec![3, 1], 6).is_err());
        assert!(SamplingPattern::new(vec![6], 6).is_err());
        assert!(SamplingPattern::new(vec![], 6).unwrap().is_empty());
    }

    #[test]
    fn bernoulli_patterns() {
        assert_eq!(sample_pattern_bernoulli(10, 1.0, 3).unwrap(), SamplingPattern::full(10));
        assert_eq!(sample_pattern_bernoulli(150, 0.5, 9).unwrap(), sample_pattern_bernoulli(150, 0.5, 9).unwrap());
        assert!(sample_pattern_bernoulli(10, 0.0, 3).is_err());
        assert!(sample_pattern_bernoulli(10, 1.5, 3).is_err());

        let trials = 2000usize;
        let total: usize = (0..trials as u64).map(|s| sample_pattern_bernoulli(150, 0.5, s).unwrap().len()).sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 75.0).abs() < 3.0 * (150.0f64 * 0.25 / trials as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn fixed_k_patterns() {
        assert_eq!(sample_pattern_fixed_k(7, 7, 1).unwrap(), SamplingPattern::full(7));
        assert!(sample_pattern_fixed_k(7, 0, 1).unwrap().is_empty());
        assert!(sample_pattern_fixed_k(3, 4, 1).is_err());

        // Uniform over the 20 subsets of size 3 out of 6: chi-square test.
        let draws = 20_000u64;
        let mut counts = std::collections::HashMap::new();
        for seed in 0..draws {
            *counts.entry(sample_pattern_fixed_k(6, 3, seed).unwrap().kept().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 20);
        let expected = draws as f64 / 20.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 19 degrees of freedom; the 0.999 quantile is about 43.8.
        assert!(chi2 < 43.8, "chi2 = {chi2}");
    }

    #[test]
    fn submatrix_examples() {
        let f = make_simplex_etf(2).unwrap();
        assert_eq!(submatrix(&f, &SamplingPattern::full(3)).unwrap(), f);
        let id = Frame::identity(3);
        let s = submatrix(&id, &SamplingPattern::new(vec![0, 2], 3).unwrap()).unwrap();
        assert_eq!(s.data(), &DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
        let fs = submatrix(&f, &SamplingPattern::new(vec![0, 1], 3).unwrap()).unwrap();
        let g = fs.data().tr_mul(fs.data());
        assert!((g[(0, 1)].abs() - 0.5).abs() < 1e-12);
        assert!(matches!(submatrix(&f, &SamplingPattern::full(4)), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn transmit_examples() {
        let id = Frame::identity(3);
        let x = dv(&[1.0, -2.0, 0.5]);
        assert_eq!(transmit(&id, &x, &SamplingPattern::full(3), 0.0, 1).unwrap(), x);

        let f = make_simplex_etf(2).unwrap();
        let y = transmit(&f, &dv(&[1.0, 0.0]), &SamplingPattern::full(3), 0.0, 1).unwrap();
        for j in 0..3 {
            assert!((y[j] - f.data()[(0, j)]).abs() < 1e-15);
        }
        assert!(matches!(
            transmit(&f, &dv(&[1.0, 0.0]), &SamplingPattern::new(vec![], 3).unwrap(), 0.0, 1),
            Err(Error::EmptyPattern)
        ));

        let clean = f.data().tr_mul(&dv(&[0.3, 0.7]));
        let samples: Vec<f64> = (0..4000u64)
            .map(|s| transmit(&f, &dv(&[0.3, 0.7]), &SamplingPattern::full(3), 0.001, s).unwrap()[1] - clean[1])
            .collect();
        let var = samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64;
        // Relative standard error of a variance estimate from 4000 draws is ~2.2%.
        assert!((var / 1e-6 - 1.0).abs() < 0.1, "var = {var}");
    }

    #[test]
    fn ls_decoding() {
        let id = Frame::identity(3);
        let y = dv(&[0.1, 0.2, -0.3]);
        assert!((decode_ls(&id, &y).unwrap() - &y).norm() < 1e-15);

        let f = make_gaussian_frame(4, 9, 2).unwrap();
        let x = dv(&[1.0, -0.5, 0.25, 2.0]);
        let y = f.data().tr_mul(&x);
        assert!((decode_ls(&f, &y).unwrap() - &x).norm() < 1e-8);

        // Cross-check against the normal equations.
        let s = make_simplex_etf(2).unwrap();
        let y = dv(&[1.0, 0.0, 0.0]);
        let svd_route = decode_ls(&s, &y).unwrap();
        let g = s.data() * s.data().transpose();
        let normal_route = g.cholesky().unwrap().solve(&(s.data() * &y));
        assert!((svd_route - normal_route).norm() < 1e-10);
    }

    #[test]
    fn ls_residual_is_orthogonal_to_row_space() {
        let f = make_gaussian_frame(3, 7, 5).unwrap();
        let y = dv(&[0.3, -1.0, 0.2, 0.9, 0.0, 1.4, -0.6]);
        let x_hat = decode_ls(&f, &y).unwrap();
        let r = f.data().tr_mul(&x_hat) - &y;
        assert!((f.data() * r).amax() < 1e-8);
    }

    #[test]
    fn ls_rejects_rank_deficiency() {
        let f = Frame::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]).unwrap();
        assert!(matches!(decode_ls(&f, &dv(&[1.0, 1.0, 1.0])), Err(Error::RankDeficient(_))));
        let tall = Frame::from_row_slice(2, 1, &[1.0, 0.0]).unwrap();
        assert!(matches!(decode_ls(&tall, &dv(&[1.0])), Err(Error::RankDeficient(_))));
        let f = make_simplex_etf(2).unwrap();
        assert!(matches!(decode_ls(&f, &dv(&[1.0])), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn unrolled_gd_examples() {
        // Orthonormal rows: one step is exact.
        let f = Frame::identity(3);
        let y = dv(&[0.5, -0.1, 2.0]);
        assert!((decode_unrolled_gd(&f, &y, 1).unwrap() - &y).norm() < 1e-14);

        let f = make_gaussian_frame(5, 9, 8).unwrap();
        let y = dv(&[0.5, -0.1, 2.0, 0.0, 1.0, 0.3, -0.7, 0.2, 0.9]);
        let gd = decode_unrolled_gd(&f, &y, 500).unwrap();
        assert!((gd - decode_ls(&f, &y).unwrap()).norm() < 1e-6);

        let its = unrolled_gd_iterates(&f, &y, 10).unwrap();
        assert_eq!(its.len(), 11);
        assert_eq!(its[0], DVector::zeros(5));
        for w in its.windows(2) {
            assert!(ls_residual(&f, &w[1], &y) <= ls_residual(&f, &w[0], &y) + 1e-12);
        }
    }

    #[test]
    fn mse_orthonormal_square() {
        let f = Frame::identity(4);
        let cfg = ChannelConfig { p: 1.0, sigma_w: 0.0, trials: 50, seed: 1 };
        let e = mse_monte_carlo(&f, &cfg, Decoder::LeastSquares).unwrap();
        assert!(e.estimate.abs() < 1e-12);
        assert_eq!(e.skipped_singular, 0);

        let cfg = ChannelConfig { sigma_w: 0.1, trials: 4000, ..cfg };
        let e = mse_monte_carlo(&f, &cfg, Decoder::LeastSquares).unwrap();
        assert!((e.estimate - 4.0 * 0.01).abs() < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn inverse_trace_of_square_orthonormal() {
        let e = expected_inverse_trace(&Frame::identity(5), 1.0, 10, 0).unwrap();
        assert!((e.estimate - 5.0).abs() < 1e-12);
    }

    #[test]
    fn estimators_are_seed_deterministic() {
        let f = make_gaussian_frame(4, 8, 1).unwrap();
        let cfg = ChannelConfig { p: 0.7, sigma_w: 0.01, trials: 200, seed: 77 };
        let a = mse_monte_carlo(&f, &cfg, Decoder::UnrolledGd { iters: 10 }).unwrap();
        let b = mse_monte_carlo(&f, &cfg, Decoder::UnrolledGd { iters: 10 }).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| mse_monte_carlo(&f, &cfg, Decoder::UnrolledGd { iters: 10 }).unwrap());
        assert_eq!(a, c);
        assert!(a.skipped_singular > 0);
    }

    #[test]
    fn pinv_handles_rank_deficiency() {
        let fs = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let x_hat = decode_pinv(&fs, &dv(&[2.0, 3.0]));
        assert!((x_hat - dv(&[2.0, 3.0, 0.0])).norm() < 1e-14);
        assert_eq!(decode_pinv(&DMatrix::zeros(3, 0), &DVector::zeros(0)), DVector::zeros(3));
    }
}
