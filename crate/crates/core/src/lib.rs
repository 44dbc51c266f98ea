//! Massive MIMO link simulation under heavy-tailed (Cauchy and SαS) noise.
//!
//! The crate covers the whole receive chain: pilot-based channel estimation
//! (de-spread and raw-signal maximum likelihood), hard symbol detection under
//! Gaussian and Cauchy metrics, Monte-Carlo achievable rates, soft bit
//! metrics with an LDPC codec, and an experiment harness that turns all of it
//! into CSV and SVG outputs.

pub mod chan_est;
pub mod coding;
pub mod detect;
pub mod error;
pub mod harness;
pub mod optim;
pub mod rates;
pub mod rng;
pub mod special;
pub mod stable_noise;
pub mod system_model;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix; rows are antennas, columns users or pilot samples.
pub type ComplexMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

pub use chan_est::{EstimationResult, Estimator, Init, RawMlOptions};
pub use coding::{LdpcCode, LlrFrame, Precoders};
pub use detect::SymbolAlphabet;
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentKind, ResultRow};
pub use num_complex;
pub use optim::BacktrackingOptions;
pub use rates::{McBudget, RateEstimate};
pub use stable_noise::{NoiseKind, StableNoiseSpec};
pub use system_model::{ChannelRealization, CoherenceBlock, PilotBook, PilotKind, PowerProfile};
