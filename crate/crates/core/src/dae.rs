//! Linear denoising autoencoder with dropout on the code.
//!
//! The encoder is an `m x n` matrix `A`. A signal `x` (length `m`) is encoded
//! as `x^T A`, dropout keeps each of the `n` outputs with probability `p`,
//! white noise is added to the survivors and the decoder runs a fixed number
//! of gradient steps on the least-squares problem for the kept columns
//! `A_s`, starting from zero with step `1 / lambda_max(A_s A_s^T)`.
//!
//! Training minimizes `MSE + beta * CL` where `CL` is one of the
//! ETF-similarity losses. Gradients are backpropagated through every
//! unrolled decoder step; the step size is held fixed (no gradient through
//! `lambda_max`).

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, SamplingPattern, DEFAULT_DECODER_ITERS, DEFAULT_SIGMA_W};
use crate::error::{Error, Result};
use crate::frames::{self, Frame};
use crate::regularizers::{etf_loss, etf_loss_grad, EtfLossVariant};
use crate::rng::{self, Purpose, Rng};

/// Encoder shape used by the reference experiments.
pub const DEFAULT_M: usize = 75;
pub const DEFAULT_N: usize = 150;
/// Default keep probability of the dropout layer.
pub const DEFAULT_KEEP_PROB: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDae {
    encoder: DMatrix<f64>,
    decoder_iters: usize,
    keep_prob: f64,
    sigma_w: f64,
}

impl LinearDae {
    pub fn new(encoder: Frame, decoder_iters: usize, keep_prob: f64, sigma_w: f64) -> Result<Self> {
        if decoder_iters == 0 {
            return Err(Error::BadParameter("decoder_iters must be >= 1".into()));
        }
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(Error::BadParameter(format!("keep probability must be in (0, 1], got {keep_prob}")));
        }
        if sigma_w.is_nan() || sigma_w < 0.0 {
            return Err(Error::BadParameter(format!("sigma_w must be >= 0, got {sigma_w}")));
        }
        Ok(LinearDae { encoder: encoder.into_inner(), decoder_iters, keep_prob, sigma_w })
    }

    /// Gaussian column-normalized encoder with the default decoder depth
    /// and noise level.
    pub fn gaussian(m: usize, n: usize, keep_prob: f64, seed: u64) -> Result<Self> {
        LinearDae::new(frames::make_gaussian_frame(m, n, seed)?, DEFAULT_DECODER_ITERS, keep_prob, DEFAULT_SIGMA_W)
    }

    pub fn encoder(&self) -> &DMatrix<f64> {
        &self.encoder
    }

    pub fn encoder_frame(&self) -> Frame {
        Frame::new(self.encoder.clone()).expect("encoder has rows")
    }

    pub fn m(&self) -> usize {
        self.encoder.nrows()
    }

    pub fn n(&self) -> usize {
        self.encoder.ncols()
    }

    pub fn decoder_iters(&self) -> usize {
        self.decoder_iters
    }

    pub fn keep_prob(&self) -> f64 {
        self.keep_prob
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    /// Coherence of the column-normalized encoder.
    pub fn coherence(&self) -> f64 {
        self.encoder_frame().normalized_coherence().unwrap_or(f64::NAN)
    }

    fn kept(&self, pattern: &SamplingPattern) -> DMatrix<f64> {
        self.encoder.select_columns(pattern.kept().iter())
    }
}

/// One training or test example: the signal, its dropout pattern and the
/// noise added to the kept outputs (length `pattern.len()`).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: DVector<f64>,
    pub pattern: SamplingPattern,
    pub noise: DVector<f64>,
}

/// Draws a non-empty Bernoulli pattern and matching noise.
fn draw_corruption(n: usize, p: f64, sigma_w: f64, rng: &mut Rng) -> (SamplingPattern, DVector<f64>) {
    let normal = Normal::new(0.0, sigma_w).expect("sigma_w validated");
    loop {
        let pattern = SamplingPattern::bernoulli(n, p, rng);
        if !pattern.is_empty() {
            let noise = DVector::from_fn(pattern.len(), |_, _| normal.sample(rng));
            return (pattern, noise);
        }
    }
}

fn gaussian_signal(m: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_fn(m, |_, _| StandardNormal.sample(rng))
}

/// A batch of examples.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub samples: Vec<Sample>,
}

impl Batch {
    pub fn new(samples: Vec<Sample>) -> Self {
        Batch { samples }
    }

    /// Fresh Gaussian signals with fresh corruption, all from `rng`.
    pub fn draw(dae: &LinearDae, size: usize, rng: &mut Rng) -> Self {
        let samples = (0..size)
            .map(|_| {
                let x = gaussian_signal(dae.m(), rng);
                let (pattern, noise) = draw_corruption(dae.n(), dae.keep_prob, dae.sigma_w, rng);
                Sample { x, pattern, noise }
            })
            .collect();
        Batch { samples }
    }

    /// Given signals (columns of `xs`) with fresh corruption from `rng`.
    pub fn corrupt(dae: &LinearDae, xs: impl Iterator<Item = DVector<f64>>, rng: &mut Rng) -> Self {
        let samples = xs
            .map(|x| {
                let (pattern, noise) = draw_corruption(dae.n(), dae.keep_prob, dae.sigma_w, rng);
                Sample { x, pattern, noise }
            })
            .collect();
        Batch { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_sample(dae: &LinearDae, s: &Sample) -> Result<()> {
    if s.pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    if s.x.len() != dae.m() || s.pattern.n() != dae.n() || s.noise.len() != s.pattern.len() {
        return Err(Error::DimMismatch(format!(
            "sample (x: {}, pattern over {}, noise: {}) does not fit a {}x{} encoder with {} kept outputs",
            s.x.len(),
            s.pattern.n(),
            s.noise.len(),
            dae.m(),
            dae.n(),
            s.pattern.len()
        )));
    }
    Ok(())
}

/// Unrolled decoder on kept columns `a` with a fixed step.
fn decode(a: &DMatrix<f64>, y: &DVector<f64>, iters: usize, mu: f64) -> DVector<f64> {
    let mut u = DVector::zeros(a.nrows());
    for _ in 0..iters {
        let r = a.tr_mul(&u) - y;
        u -= a * r * mu;
    }
    u
}

/// Reconstruction of `x` through the dropout-and-noise channel.
pub fn forward(dae: &LinearDae, x: &DVector<f64>, pattern: &SamplingPattern, noise: &DVector<f64>) -> Result<DVector<f64>> {
    let sample = Sample { x: x.clone(), pattern: pattern.clone(), noise: noise.clone() };
    check_sample(dae, &sample)?;
    let a = dae.kept(pattern);
    let mu = channel::unrolled_step_size(&a);
    Ok(decode(&a, &(a.tr_mul(x) + noise), dae.decoder_iters, mu))
}

/// Decoder step size for every sample of the batch at the current encoder.
pub fn step_sizes(dae: &LinearDae, batch: &Batch) -> Vec<f64> {
    batch.samples.par_iter().map(|s| channel::unrolled_step_size(&dae.kept(&s.pattern))).collect()
}

/// Squared error and encoder gradient of one sample at a fixed step size.
fn sample_loss_and_grad(dae: &LinearDae, s: &Sample, mu: f64, want_grad: bool) -> (f64, Option<DMatrix<f64>>) {
    let a = dae.kept(&s.pattern);
    let y = a.tr_mul(&s.x) + &s.noise;
    let iters = dae.decoder_iters;
    let mut us = Vec::with_capacity(iters + 1);
    let mut rs = Vec::with_capacity(iters);
    let mut u = DVector::zeros(a.nrows());
    for _ in 0..iters {
        let r = a.tr_mul(&u) - &y;
        let next = &u - &a * &r * mu;
        us.push(u);
        rs.push(r);
        u = next;
    }
    let err = &u - &s.x;
    let loss = err.norm_squared();
    if !want_grad {
        return (loss, None);
    }
    // Reverse pass. g is dL/du_{i+1}; dy accumulates dL/dy.
    let mut g = err * 2.0;
    let mut ga = DMatrix::zeros(a.nrows(), a.ncols());
    let mut gy = DVector::zeros(a.ncols());
    for i in (0..iters).rev() {
        // u_{i+1} = u_i - mu A r_i
        ga.ger(-mu, &g, &rs[i], 1.0);
        let gr = a.tr_mul(&g) * -mu;
        // r_i = A^T u_i - y
        ga.ger(1.0, &us[i], &gr, 1.0);
        gy -= &gr;
        g += &a * &gr;
    }
    // y = A^T x + w
    ga.ger(1.0, &s.x, &gy, 1.0);
    (loss, Some(ga))
}

fn check_batch(dae: &LinearDae, batch: &Batch, steps: &[f64]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::BadParameter("empty batch".into()));
    }
    if steps.len() != batch.len() {
        return Err(Error::DimMismatch(format!("{} step sizes for {} samples", steps.len(), batch.len())));
    }
    batch.samples.iter().try_for_each(|s| check_sample(dae, s))
}

/// Mean squared reconstruction error of the batch at fixed step sizes.
pub fn mse_with_steps(dae: &LinearDae, batch: &Batch, steps: &[f64]) -> Result<f64> {
    check_batch(dae, batch, steps)?;
    let losses: Vec<f64> =
        batch.samples.par_iter().zip(steps).map(|(s, &mu)| sample_loss_and_grad(dae, s, mu, false).0).collect();
    Ok(losses.iter().sum::<f64>() / batch.len() as f64)
}

/// `mean ||x - x_hat||^2 + beta * CL(A)` at fixed step sizes.
pub fn loss_with_steps(dae: &LinearDae, batch: &Batch, steps: &[f64], beta: f64, variant: EtfLossVariant) -> Result<f64> {
    let mse = mse_with_steps(dae, batch, steps)?;
    Ok(if beta == 0.0 { mse } else { mse + beta * etf_loss(&dae.encoder, variant) })
}

/// Training loss `MSE + beta * CL`.
pub fn loss(dae: &LinearDae, batch: &Batch, beta: f64, variant: EtfLossVariant) -> Result<f64> {
    check_beta(beta)?;
    loss_with_steps(dae, batch, &step_sizes(dae, batch), beta, variant)
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::BadParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// Batch MSE and its gradient with respect to the full encoder.
fn mse_and_grad(dae: &LinearDae, batch: &Batch, steps: &[f64]) -> Result<(f64, DMatrix<f64>)> {
    check_batch(dae, batch, steps)?;
    let per_sample: Vec<(f64, DMatrix<f64>)> = batch
        .samples
        .par_iter()
        .zip(steps)
        .map(|(s, &mu)| {
            let (l, g) = sample_loss_and_grad(dae, s, mu, true);
            (l, g.expect("gradient requested"))
        })
        .collect();
    let scale = 1.0 / batch.len() as f64;
    let mut grad = DMatrix::zeros(dae.m(), dae.n());
    let mut total = 0.0;
    for ((l, g), s) in per_sample.iter().zip(&batch.samples) {
        total += l;
        for (local, &col) in s.pattern.kept().iter().enumerate() {
            let mut dst = grad.column_mut(col);
            dst.axpy(scale, &g.column(local), 1.0);
        }
    }
    Ok((total * scale, grad))
}

/// Gradient of [`loss_with_steps`] with respect to the encoder.
pub fn grad_with_steps(
    dae: &LinearDae,
    batch: &Batch,
    steps: &[f64],
    beta: f64,
    variant: EtfLossVariant,
) -> Result<DMatrix<f64>> {
    let (_, mut grad) = mse_and_grad(dae, batch, steps)?;
    if beta != 0.0 {
        grad += etf_loss_grad(&dae.encoder, variant) * beta;
    }
    Ok(grad)
}

/// Gradient of [`loss`] with the decoder step sizes frozen at their current
/// values.
pub fn grad(dae: &LinearDae, batch: &Batch, beta: f64, variant: EtfLossVariant) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    grad_with_steps(dae, batch, &step_sizes(dae, batch), beta, variant)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Parse(format!("unknown optimizer {other:?} (expected sgd or adam)"))),
        }
    }
}

/// Parameter update rule applied to the encoder.
#[derive(Debug, Clone)]
enum Optimizer {
    Sgd,
    Adam { first: DMatrix<f64>, second: DMatrix<f64>, t: i32 },
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    fn new(kind: OptimizerKind, shape: (usize, usize)) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => {
                Optimizer::Adam { first: DMatrix::zeros(shape.0, shape.1), second: DMatrix::zeros(shape.0, shape.1), t: 0 }
            }
        }
    }

    fn step(&mut self, params: &mut DMatrix<f64>, grad: &DMatrix<f64>, lr: f64) {
        match self {
            Optimizer::Sgd => *params -= grad * lr,
            Optimizer::Adam { first, second, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for ((p, g), (m1, m2)) in params.iter_mut().zip(grad.iter()).zip(first.iter_mut().zip(second.iter_mut())) {
                    *m1 = ADAM_BETA1 * *m1 + (1.0 - ADAM_BETA1) * g;
                    *m2 = ADAM_BETA2 * *m2 + (1.0 - ADAM_BETA2) * g * g;
                    *p -= lr * (*m1 / c1) / ((*m2 / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Training protocol settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Weight of the ETF-similarity term.
    pub beta: f64,
    pub variant: EtfLossVariant,
    pub batch_size: usize,
    /// Number of batches (online) or epochs (finite).
    pub steps: usize,
    /// Size of the fixed training set; `None` trains online on fresh data.
    pub train_set_size: Option<usize>,
    pub test_set_size: usize,
    /// Distinct dropout patterns in the test set; test signal `i` uses
    /// pattern `i % test_patterns`.
    pub test_patterns: usize,
    /// Online protocol: test MSE is measured every this many batches.
    pub eval_every: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Learning rate reached at the last update; the schedule decays
    /// geometrically from `learning_rate`. Equal values give a constant rate.
    pub final_learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            beta: 0.0,
            variant: EtfLossVariant::MaxAbs,
            batch_size: 100,
            steps: 300,
            train_set_size: Some(100),
            test_set_size: 5000,
            test_patterns: 100,
            eval_every: 50,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            final_learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Online protocol defaults: 100 fresh signals per batch.
    pub fn online(batches: usize, seed: u64) -> Self {
        TrainConfig { steps: batches, train_set_size: None, test_set_size: 1000, test_patterns: 50, seed, ..Default::default() }
    }

    /// Finite-data protocol defaults: 100 training signals, 5000 test
    /// signals, 300 epochs.
    pub fn finite(beta: f64, seed: u64) -> Self {
        TrainConfig { beta, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        let positive = [
            ("batch_size", self.batch_size),
            ("steps", self.steps),
            ("test_set_size", self.test_set_size),
            ("test_patterns", self.test_patterns),
            ("eval_every", self.eval_every),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::BadParameter(format!("{name} must be positive")));
            }
        }
        if self.train_set_size == Some(0) {
            return Err(Error::BadParameter("train_set_size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.final_learning_rate >= 0.0) {
            return Err(Error::BadParameter("learning rates must be >= 0".into()));
        }
        Ok(())
    }

    fn learning_rate_at(&self, update: usize, total_updates: usize) -> f64 {
        if total_updates <= 1 || self.learning_rate == self.final_learning_rate || self.learning_rate == 0.0 {
            return self.learning_rate;
        }
        let frac = update as f64 / (total_updates - 1) as f64;
        self.learning_rate * (self.final_learning_rate / self.learning_rate).powf(frac)
    }
}

/// What the online protocol minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// `MSE + beta * CL` with the configured beta (0 for pure MSE).
    Mse,
    /// Only the ETF-similarity loss; MSE is measured but not optimized.
    CoherenceOnly,
}

/// One row of a training trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRecord {
    pub step: usize,
    pub train_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub cl: f64,
    pub coherence: f64,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricTrace {
    pub records: Vec<MetricRecord>,
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricTrace {
    fn push(&mut self, r: MetricRecord) {
        debug_assert!(self.records.last().map_or(true, |last| last.step < r.step));
        self.records.push(r);
    }

    /// `step,train_mse,test_mse,cl,coherence,loss`; missing values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,train_mse,test_mse,cl,coherence,loss\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step,
                opt_cell(r.train_mse),
                opt_cell(r.test_mse),
                r.cl,
                r.coherence,
                opt_cell(r.loss)
            );
        }
        out
    }

    /// `(step, test_mse)` for every record with a test measurement.
    pub fn test_curve(&self) -> Vec<(usize, f64)> {
        self.records.iter().filter_map(|r| r.test_mse.map(|t| (r.step, t))).collect()
    }

    pub fn first(&self) -> Option<&MetricRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }
}

/// Fixed evaluation set: test signals grouped by shared dropout pattern.
#[derive(Debug, Clone)]
pub struct EvalSet {
    groups: Vec<EvalGroup>,
    size: usize,
}

#[derive(Debug, Clone)]
struct EvalGroup {
    pattern: SamplingPattern,
    /// `m x B` signals.
    x: DMatrix<f64>,
    /// `k x B` noise.
    w: DMatrix<f64>,
}

impl EvalSet {
    /// `size` Gaussian signals spread over `patterns` Bernoulli patterns,
    /// all drawn from the test-data stream of `seed`.
    pub fn draw(dae: &LinearDae, size: usize, patterns: usize, seed: u64) -> Self {
        let patterns = patterns.clamp(1, size.max(1));
        let mut rng = rng::stream(seed, Purpose::TestData, 0);
        let signals: Vec<DVector<f64>> = (0..size).map(|_| gaussian_signal(dae.m(), &mut rng)).collect();
        let normal = Normal::new(0.0, dae.sigma_w).expect("sigma_w validated");
        let groups = (0..patterns)
            .map(|g| {
                let (pattern, _) = draw_corruption(dae.n(), dae.keep_prob, dae.sigma_w, &mut rng);
                let members: Vec<usize> = (g..size).step_by(patterns).collect();
                let x = DMatrix::from_fn(dae.m(), members.len(), |r, c| signals[members[c]][r]);
                let w = DMatrix::from_fn(pattern.len(), members.len(), |_, _| normal.sample(&mut rng));
                EvalGroup { pattern, x, w }
            })
            .collect();
        EvalSet { groups, size }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Mean squared error of the unrolled decoder over the set.
    pub fn mse(&self, dae: &LinearDae) -> f64 {
        let errs: Vec<f64> = self
            .groups
            .par_iter()
            .map(|g| {
                let a = dae.kept(&g.pattern);
                let mu = channel::unrolled_step_size(&a);
                let y = a.tr_mul(&g.x) + &g.w;
                let mut u = DMatrix::zeros(dae.m(), g.x.ncols());
                for _ in 0..dae.decoder_iters {
                    let r = a.tr_mul(&u) - &y;
                    u -= &a * r * mu;
                }
                (u - &g.x).norm_squared()
            })
            .collect();
        errs.iter().sum::<f64>() / self.size as f64
    }

    /// Mean squared error of minimum-norm least-squares decoding with
    /// encoder `f` under the same patterns and noise. `f` must have the
    /// DAE's shape.
    pub fn mse_least_squares(&self, f: &Frame) -> f64 {
        let errs: Vec<f64> = self
            .groups
            .par_iter()
            .map(|g| {
                let a = f.data().select_columns(g.pattern.kept().iter());
                let y = a.tr_mul(&g.x) + &g.w;
                (0..g.x.ncols())
                    .map(|c| (channel::decode_pinv(&a, &y.column(c).into_owned()) - g.x.column(c)).norm_squared())
                    .sum::<f64>()
            })
            .collect();
        errs.iter().sum::<f64>() / self.size as f64
    }
}

struct Trainer {
    optimizer: Optimizer,
    updates: usize,
    total_updates: usize,
}

impl Trainer {
    fn new(dae: &LinearDae, cfg: &TrainConfig, total_updates: usize) -> Self {
        Trainer { optimizer: Optimizer::new(cfg.optimizer, (dae.m(), dae.n())), updates: 0, total_updates }
    }

    fn apply(&mut self, dae: &mut LinearDae, cfg: &TrainConfig, grad: &DMatrix<f64>) {
        let lr = cfg.learning_rate_at(self.updates, self.total_updates);
        self.optimizer.step(&mut dae.encoder, grad, lr);
        self.updates += 1;
    }
}

fn cl_of(dae: &LinearDae, variant: EtfLossVariant) -> f64 {
    etf_loss(&dae.encoder, variant)
}

/// Online protocol: every batch has fresh signals, patterns and noise.
///
/// Record `t` holds the batch-`t` metrics measured before update `t`; the
/// final record (step = number of batches) holds the trained encoder's
/// coherence and test MSE.
pub fn train_online(dae: &mut LinearDae, cfg: &TrainConfig, objective: Objective) -> Result<MetricTrace> {
    cfg.validate()?;
    if cfg.train_set_size.is_some() {
        return Err(Error::BadParameter("online training needs train_set_size = None".into()));
    }
    let eval = EvalSet::draw(dae, cfg.test_set_size, cfg.test_patterns, cfg.seed);
    let mut trainer = Trainer::new(dae, cfg, cfg.steps);
    let mut trace = MetricTrace::default();
    for t in 0..cfg.steps {
        let batch = Batch::draw(dae, cfg.batch_size, &mut rng::stream(cfg.seed, Purpose::TrainData, t as u64));
        let steps = step_sizes(dae, &batch);
        let cl = cl_of(dae, cfg.variant);
        let (mse, grad) = match objective {
            Objective::Mse => {
                let (mse, mut g) = mse_and_grad(dae, &batch, &steps)?;
                if cfg.beta != 0.0 {
                    g += etf_loss_grad(&dae.encoder, cfg.variant) * cfg.beta;
                }
                (mse, g)
            }
            Objective::CoherenceOnly => (mse_with_steps(dae, &batch, &steps)?, etf_loss_grad(&dae.encoder, cfg.variant)),
        };
        let loss = match objective {
            Objective::Mse => mse + cfg.beta * cl,
            Objective::CoherenceOnly => cl,
        };
        let test_mse = (t % cfg.eval_every == 0).then(|| eval.mse(dae));
        trace.push(MetricRecord { step: t, train_mse: Some(mse), test_mse, cl, coherence: dae.coherence(), loss: Some(loss) });
        trainer.apply(dae, cfg, &grad);
    }
    trace.push(MetricRecord {
        step: cfg.steps,
        train_mse: None,
        test_mse: Some(eval.mse(dae)),
        cl: cl_of(dae, cfg.variant),
        coherence: dae.coherence(),
        loss: None,
    });
    Ok(trace)
}

/// Result summary of a finite-data run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub beta: f64,
    pub initial_test_mse: f64,
    pub initial_coherence: f64,
    pub min_test_mse: f64,
    pub final_test_mse: f64,
    pub final_coherence: f64,
}

/// Finite-data protocol: a fixed training set, fresh patterns and noise on
/// every batch, test MSE once per epoch. Record 0 is the untrained encoder.
pub fn train_finite(dae: &mut LinearDae, cfg: &TrainConfig) -> Result<(MetricTrace, TrainSummary)> {
    let eval = EvalSet::draw(dae, cfg.test_set_size, cfg.test_patterns, cfg.seed);
    train_finite_with_eval(dae, cfg, &eval)
}

fn train_finite_with_eval(dae: &mut LinearDae, cfg: &TrainConfig, eval: &EvalSet) -> Result<(MetricTrace, TrainSummary)> {
    cfg.validate()?;
    let train_size = cfg
        .train_set_size
        .ok_or_else(|| Error::BadParameter("finite training needs train_set_size".into()))?;
    let mut data_rng = rng::stream(cfg.seed, Purpose::TrainData, 0);
    let train: Vec<DVector<f64>> = (0..train_size).map(|_| gaussian_signal(dae.m(), &mut data_rng)).collect();
    let batches_per_epoch = train_size.div_ceil(cfg.batch_size);
    let mut trainer = Trainer::new(dae, cfg, cfg.steps * batches_per_epoch);

    let mut trace = MetricTrace::default();
    let initial_test = eval.mse(dae);
    let initial_coherence = dae.coherence();
    trace.push(MetricRecord {
        step: 0,
        train_mse: None,
        test_mse: Some(initial_test),
        cl: cl_of(dae, cfg.variant),
        coherence: initial_coherence,
        loss: None,
    });
    let mut order: Vec<usize> = (0..train_size).collect();
    let mut min_test = f64::INFINITY;
    for epoch in 1..=cfg.steps {
        order.shuffle(&mut rng::stream(cfg.seed, Purpose::Shuffle, epoch as u64));
        let (mut mse_sum, mut loss_sum) = (0.0, 0.0);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let index = ((epoch - 1) * batches_per_epoch + b) as u64;
            let mut rng = rng::stream(cfg.seed, Purpose::Pattern, index);
            let batch = Batch::corrupt(dae, chunk.iter().map(|&i| train[i].clone()), &mut rng);
            let steps = step_sizes(dae, &batch);
            let (mse, mut g) = mse_and_grad(dae, &batch, &steps)?;
            let cl = cl_of(dae, cfg.variant);
            if cfg.beta != 0.0 {
                g += etf_loss_grad(&dae.encoder, cfg.variant) * cfg.beta;
            }
            mse_sum += mse * chunk.len() as f64;
            loss_sum += (mse + cfg.beta * cl) * chunk.len() as f64;
            trainer.apply(dae, cfg, &g);
        }
        let test = eval.mse(dae);
        min_test = min_test.min(test);
        trace.push(MetricRecord {
            step: epoch,
            train_mse: Some(mse_sum / train_size as f64),
            test_mse: Some(test),
            cl: cl_of(dae, cfg.variant),
            coherence: dae.coherence(),
            loss: Some(loss_sum / train_size as f64),
        });
    }
    let last = trace.last().expect("at least one epoch");
    let summary = TrainSummary {
        beta: cfg.beta,
        initial_test_mse: initial_test,
        initial_coherence,
        min_test_mse: min_test,
        final_test_mse: last.test_mse.expect("measured every epoch"),
        final_coherence: last.coherence,
    };
    Ok((trace, summary))
}

/// Outcome of a beta sweep: one summary per beta plus the approximate-ETF
/// reference measured on the same test set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub summaries: Vec<TrainSummary>,
    pub etf_mse: f64,
    pub etf_coherence: f64,
}

impl SweepResult {
    /// `beta,min_test_mse,final_test_mse,final_coherence,etf_mse,etf_coherence`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,min_test_mse,final_test_mse,final_coherence,etf_mse,etf_coherence\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.beta, s.min_test_mse, s.final_test_mse, s.final_coherence, self.etf_mse, self.etf_coherence
            );
        }
        out
    }
}

/// Runs [`train_finite`] for every beta from the same initial encoder and the
/// same data seeds. `reference` is the ETF-like encoder evaluated with a
/// least-squares decoder for the reference lines.
pub fn sweep_beta(dae: &LinearDae, cfg: &TrainConfig, betas: &[f64], reference: &Frame) -> Result<SweepResult> {
    if betas.is_empty() {
        return Err(Error::BadParameter("betas must be non-empty".into()));
    }
    if reference.m() != dae.m() || reference.n() != dae.n() {
        return Err(Error::DimMismatch("reference frame shape differs from the encoder".into()));
    }
    let eval = EvalSet::draw(dae, cfg.test_set_size, cfg.test_patterns, cfg.seed);
    let summaries = betas
        .par_iter()
        .map(|&beta| {
            let mut run = dae.clone();
            let cfg = TrainConfig { beta, ..cfg.clone() };
            train_finite_with_eval(&mut run, &cfg, &eval).map(|(_, s)| s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        summaries,
        etf_mse: eval.mse_least_squares(reference),
        etf_coherence: reference.normalized_coherence()?,
    })
}
