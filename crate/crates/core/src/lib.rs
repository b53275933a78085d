//! Multi-modal video captioning with a three-stage training strategy.
//!
//! Appearance and motion features feed a vision LSTM, audio features an
//! audio LSTM; a top-down decoder attends to both streams separately under
//! topic guidance. Training runs teacher-forced cross-entropy, then
//! word-level oracle sampling with Gumbel noise and decaying teacher forcing,
//! then self-critical policy gradient on a CIDEr + BLEU reward.

pub mod audiofe;
pub mod corpus;
mod error;
pub mod metrics;
pub mod model;
pub mod training;

pub use error::{Error, Result};
