//! Soft bit metrics, dispersion adjustment for channel-estimation error,
//! downlink precoders and the LDPC codec used in the coded experiments.
//!
//! LLR sign convention everywhere: positive means bit 0 is more likely.

pub mod dispersion;
pub mod ldpc;
pub mod llr;
pub mod precoder;

pub use dispersion::adjust_dispersion;
pub use ldpc::{DecodeOutcome, LdpcCode};
pub use llr::{llr_downlink, LlrFrame, UplinkDemapper};
pub use precoder::{make_precoders, Precoders};
