//! Frame-theory workbench for studying dropout as an erasure channel.
//!
//! The crate is organised around a single central object, the [`Frame`]: a
//! real `m x n` matrix whose columns are the frame vectors. On top of it sit
//!
//! * [`frames`]: Gram matrices, coherence, the Welch bound, tightness and
//!   exact / approximate equiangular tight frame (ETF) constructions,
//! * [`channel`]: encode, erase, add noise and decode (least squares or an
//!   unrolled gradient-descent decoder), with Monte-Carlo error estimators,
//! * [`spectra`]: eigenvalue histograms and trace moments of random
//!   submatrices,
//! * [`regularizers`]: ETF-similarity losses and their gradients, DeCov,
//!   the dropout objective, joint equalization and convolutional coherence,
//! * [`dae`]: a linear denoising autoencoder trained with dropout plus an
//!   ETF-similarity penalty.
//!
//! Every random quantity is driven by an explicit `u64` seed; Monte-Carlo
//! trials derive independent streams from `(seed, trial)` so results do not
//! depend on the rayon thread count.

pub mod channel;
pub mod dae;
mod error;
pub mod frames;
mod gf;
pub mod linalg;
pub mod regularizers;
pub mod rng;
pub mod spectra;
pub mod stats;

pub use channel::{ChannelConfig, Decoder, SamplingPattern};
pub use dae::{LinearDae, MetricTrace, TrainConfig};
pub use error::{Error, Result};
pub use frames::{Frame, GramMatrix};
pub use regularizers::EtfLossVariant;
pub use spectra::{MomentEstimate, SpectrumHistogram};
pub use stats::Estimate;

/// Re-exported so downstream crates can build inputs without naming nalgebra.
pub use nalgebra::{DMatrix, DVector};
