use framedrop::channel::{self, Decoder, SamplingPattern};
use framedrop::dae::{self, LinearDae, Objective, TrainConfig};
use framedrop::frames::{self, Frame};
use framedrop::regularizers::{self, PairedSamples, SecondMoments};
use framedrop::spectra;
use framedrop::{ChannelConfig, DMatrix, DVector};
use proptest::prelude::*;

fn frame_strategy(max_m: usize, max_extra: usize) -> impl Strategy<Value = Frame> {
    (1..=max_m, 0..=max_extra).prop_flat_map(|(m, extra)| {
        let n = m + extra;
        proptest::collection::vec(-1.0f64..1.0, m * n).prop_filter_map("zero column", move |v| {
            let f = Frame::from_row_slice(m, n, &v).ok()?;
            frames::normalize_columns(&f).ok()
        })
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherence_is_at_least_welch(f in frame_strategy(6, 8)) {
        prop_assume!(f.n() >= 2);
        let mu = frames::coherence(&f).unwrap();
        prop_assert!(mu >= frames::welch_bound(f.m(), f.n()).unwrap() - 1e-12);
        prop_assert!(mu <= 1.0 + 1e-12);
    }

    #[test]
    fn normalization_is_idempotent(f in frame_strategy(5, 5)) {
        let again = frames::normalize_columns(&f).unwrap();
        prop_assert!((again.data() - f.data()).amax() < 1e-15);
    }

    #[test]
    fn coherence_ignores_column_signs_and_order(f in frame_strategy(5, 6), flips in proptest::collection::vec(any::<bool>(), 11)) {
        prop_assume!(f.n() >= 2);
        let n = f.n();
        let mut g = DMatrix::from_fn(f.m(), n, |r, c| f.data()[(r, n - 1 - c)]);
        for (mut col, &flip) in g.column_iter_mut().zip(&flips) {
            if flip { col.neg_mut(); }
        }
        let g = Frame::new(g).unwrap();
        prop_assert!((frames::coherence(&f).unwrap() - frames::coherence(&g).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip(f in frame_strategy(4, 4)) {
        prop_assert_eq!(Frame::from_csv(&f.to_csv()).unwrap(), f);
    }

    #[test]
    fn noiseless_ls_is_exact(f in frame_strategy(5, 6), x in proptest::collection::vec(-3.0f64..3.0, 5)) {
        let x = DVector::from_column_slice(&x[..f.m()]);
        let y = f.data().tr_mul(&x);
        if let Ok(x_hat) = channel::decode_ls(&f, &y) {
            prop_assert!((x_hat - x).norm() < 1e-6);
        }
    }

    #[test]
    fn unrolled_residual_never_increases(f in frame_strategy(5, 6), y in proptest::collection::vec(-2.0f64..2.0, 11)) {
        let y = DVector::from_column_slice(&y[..f.n()]);
        let iterates = channel::unrolled_gd_iterates(&f, &y, 10).unwrap();
        let res: Vec<f64> = iterates.iter().map(|u| channel::ls_residual(&f, u, &y)).collect();
        for w in res.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn pattern_invariants(n in 1usize..40, p in 0.05f64..1.0, seed in any::<u64>()) {
        let s = channel::sample_pattern_bernoulli(n, p, seed).unwrap();
        prop_assert!(s.kept().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.kept().iter().all(|&i| i < n));
        prop_assert_eq!(s, channel::sample_pattern_bernoulli(n, p, seed).unwrap());
    }

    #[test]
    fn first_moment_is_p_for_unit_norm_frames(f in frame_strategy(3, 4), p in 0.0f64..=1.0) {
        let m1 = spectra::moment_md_exhaustive(&f, p, 1).unwrap();
        prop_assert!((m1 - p).abs() < 1e-12);
    }

    #[test]
    fn dropout_closed_form_is_exact(
        a in matrix(3, 5), b in matrix(2, 5), x in matrix(4, 3), y in matrix(4, 2), p in 0.1f64..=1.0,
    ) {
        let samples = PairedSamples::new(x, y).unwrap();
        let stats = SecondMoments::from_samples(&samples);
        let exact = regularizers::dropout_objective_exhaustive(&a, &b, p, &samples).unwrap();
        let closed = regularizers::dropout_objective_closed(&a, &b, p, &stats).unwrap();
        prop_assert!((exact - closed).abs() <= 1e-10 * exact.abs().max(1.0));
    }

    #[test]
    fn toeplitz_matches_stride(kernels in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 1..4)) {
        let kernels: Vec<DVector<f64>> = kernels.into_iter().map(DVector::from_vec).collect();
        prop_assume!(kernels.iter().all(|k| k.amax() > 1e-3));
        let check = regularizers::toeplitz_coherence_check(&kernels, 8).unwrap();
        prop_assert!(check.equal, "{:?}", check);
    }

    #[test]
    fn etf_loss_is_scale_invariant(a in matrix(3, 6), scale in 0.1f64..10.0) {
        prop_assume!(a.column_iter().all(|c| c.norm() > 1e-3));
        for v in regularizers::EtfLossVariant::ALL {
            let l = regularizers::etf_loss(&a, v);
            prop_assert!((l - regularizers::etf_loss(&(&a * scale), v)).abs() < 1e-10 * l.max(1.0));
            prop_assert!(l >= 0.0);
        }
    }
}

#[test]
fn lower_coherence_frames_have_lower_inverse_trace_on_average() {
    let etf = frames::approximate_etf(4, 8, 500, 1).unwrap();
    let gauss = frames::make_gaussian_frame(4, 8, 1).unwrap();
    let etf_tr = channel::expected_inverse_trace(&etf, 0.8, 2000, 5).unwrap();
    let gauss_tr = channel::expected_inverse_trace(&gauss, 0.8, 2000, 5).unwrap();
    assert!(etf_tr.estimate < gauss_tr.estimate);
}

#[test]
fn unrolled_decoder_never_beats_least_squares_on_average() {
    let f = frames::make_gaussian_frame(4, 10, 2).unwrap();
    let cfg = ChannelConfig { p: 0.8, sigma_w: 0.01, trials: 2000, seed: 4 };
    let ls = channel::mse_monte_carlo(&f, &cfg, Decoder::LeastSquares).unwrap();
    let gd = channel::mse_monte_carlo(&f, &cfg, Decoder::UnrolledGd { iters: 10 }).unwrap();
    assert!(gd.estimate >= ls.estimate);
}

#[test]
fn online_loss_decreases_over_first_batches() {
    let mut model = LinearDae::gaussian(8, 16, 0.8, 0).unwrap();
    let cfg = TrainConfig { learning_rate: 2e-3, final_learning_rate: 2e-3, test_set_size: 50, test_patterns: 5, ..TrainConfig::online(50, 0) };
    let trace = dae::train_online(&mut model, &cfg, Objective::Mse).unwrap();
    let losses: Vec<f64> = trace.records.iter().filter_map(|r| r.loss).collect();
    let head: f64 = losses[..10].iter().sum::<f64>() / 10.0;
    let tail: f64 = losses[40..].iter().sum::<f64>() / 10.0;
    assert!(tail < head, "loss {head} -> {tail}");
}

#[test]
fn identical_configs_give_identical_traces() {
    let cfg = TrainConfig { test_set_size: 40, test_patterns: 4, batch_size: 10, eval_every: 5, beta: 0.1, ..TrainConfig::online(12, 9) };
    let run = || {
        let mut m = LinearDae::gaussian(5, 10, 0.6, 1).unwrap();
        dae::train_online(&mut m, &cfg, Objective::Mse).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn full_pattern_spectrum_of_tight_frame_is_constant() {
    let f = frames::make_simplex_etf(3).unwrap();
    let eig = spectra::submatrix_eigenvalues(&f, &SamplingPattern::full(4)).unwrap();
    for e in eig {
        assert!((e - 4.0 / 3.0).abs() < 1e-12);
    }
}
