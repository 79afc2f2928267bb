//! Analytic gradients against central finite differences.

use framedrop::dae::{self, Batch, LinearDae};
use framedrop::frames::make_gaussian_frame;
use framedrop::regularizers::{etf_loss, etf_loss_grad, EtfLossVariant};
use framedrop::rng::{self, Purpose};
use framedrop::DMatrix;
use rand::Rng as _;

const H: f64 = 1e-6;

fn central_difference(a: &DMatrix<f64>, f: impl Fn(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        let mut plus = a.clone();
        plus[(i, j)] += H;
        let mut minus = a.clone();
        minus[(i, j)] -= H;
        (f(&plus) - f(&minus)) / (2.0 * H)
    })
}

fn rel_err(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    (analytic - numeric).norm() / numeric.norm().max(1e-12)
}

/// Gaussian matrix with random column scales, so the normalization path is
/// exercised too.
fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut a = make_gaussian_frame(m, n, seed).unwrap().into_inner();
    let mut rng = rng::stream(seed, Purpose::Init, 0);
    for mut col in a.column_iter_mut() {
        col *= rng.random_range(0.5..2.0);
    }
    a
}

#[test]
fn etf_loss_gradient_matches_finite_differences() {
    let mut worst: f64 = 0.0;
    for point in 0..20u64 {
        let (m, n) = [(3, 6), (4, 7), (5, 10), (6, 5)][point as usize % 4];
        let a = random_matrix(m, n, 100 + point);
        for v in EtfLossVariant::ALL {
            let numeric = central_difference(&a, |x| etf_loss(x, v));
            let err = rel_err(&etf_loss_grad(&a, v), &numeric);
            assert!(err < 1e-4, "variant {} at point {point}: rel err {err}", v.name());
            worst = worst.max(err);
        }
    }
    println!("etf_loss_grad worst rel err {worst:.2e}");
}

#[test]
fn dae_gradient_matches_finite_differences() {
    let betas = [0.0, 0.05, 0.5, 2.0];
    let mut worst: f64 = 0.0;
    for point in 0..20u64 {
        let (m, n) = [(3, 6), (4, 8), (5, 9)][point as usize % 3];
        let variant = EtfLossVariant::ALL[point as usize % 3];
        let beta = betas[point as usize % 4];
        let iters = 1 + point as usize % 10;
        let encoder = framedrop::Frame::new(random_matrix(m, n, 200 + point)).unwrap();
        let model = LinearDae::new(encoder, iters, 0.7, 0.05).unwrap();
        let batch = Batch::draw(&model, 6, &mut rng::stream(point, Purpose::TrainData, 0));
        let steps = dae::step_sizes(&model, &batch);
        let analytic = dae::grad_with_steps(&model, &batch, &steps, beta, variant).unwrap();
        let numeric = central_difference(model.encoder(), |a| {
            let perturbed = LinearDae::new(framedrop::Frame::new(a.clone()).unwrap(), iters, 0.7, 0.05).unwrap();
            dae::loss_with_steps(&perturbed, &batch, &steps, beta, variant).unwrap()
        });
        let err = rel_err(&analytic, &numeric);
        assert!(err < 1e-4, "point {point} (beta {beta}, {}): rel err {err}", variant.name());
        worst = worst.max(err);
    }
    println!("dae grad worst rel err {worst:.2e}");
}

#[test]
fn small_steps_decrease_the_loss() {
    let model = LinearDae::gaussian(6, 12, 0.8, 3).unwrap();
    let batch = Batch::draw(&model, 20, &mut rng::stream(3, Purpose::TrainData, 0));
    let steps = dae::step_sizes(&model, &batch);
    let v = EtfLossVariant::SumSquares;
    let before = dae::loss_with_steps(&model, &batch, &steps, 0.1, v).unwrap();
    let g = dae::grad_with_steps(&model, &batch, &steps, 0.1, v).unwrap();
    let moved = framedrop::Frame::new(model.encoder() - g * 1e-4).unwrap();
    let moved = LinearDae::new(moved, model.decoder_iters(), 0.8, model.sigma_w()).unwrap();
    assert!(dae::loss_with_steps(&moved, &batch, &steps, 0.1, v).unwrap() < before);
}
