//! Shared fixtures for the criterion benches, sized like the autoencoder
//! experiments (75 x 150).

use framedrop::channel::{self, SamplingPattern};
use framedrop::dae::{Batch, LinearDae, DEFAULT_KEEP_PROB, DEFAULT_M, DEFAULT_N};
use framedrop::frames::{self, Frame};
use framedrop::rng::{self, Purpose};
use framedrop::{DMatrix, DVector};

pub const SEED: u64 = 1;

pub fn gaussian_frame() -> Frame {
    frames::make_gaussian_frame(DEFAULT_M, DEFAULT_N, SEED).expect("valid shape")
}

/// A kept submatrix of the Gaussian frame with full row rank, and a
/// matching noiseless observation.
pub fn subframe_and_observation() -> (Frame, DVector<f64>) {
    let f = gaussian_frame();
    let s = SamplingPattern::new((0..DEFAULT_N).step_by(3).chain((1..DEFAULT_N).step_by(3)).collect(), DEFAULT_N)
        .expect("indices in range");
    let fs = channel::submatrix(&f, &s).expect("non-empty pattern");
    let x = DVector::from_fn(DEFAULT_M, |i, _| (i as f64).sin());
    let y = fs.data().tr_mul(&x);
    (fs, y)
}

pub fn dae_and_batch(size: usize) -> (LinearDae, Batch) {
    let model = LinearDae::gaussian(DEFAULT_M, DEFAULT_N, DEFAULT_KEEP_PROB, SEED).expect("valid shape");
    let batch = Batch::draw(&model, size, &mut rng::stream(SEED, Purpose::TrainData, 0));
    (model, batch)
}

pub fn raw_encoder() -> DMatrix<f64> {
    gaussian_frame().into_inner()
}
