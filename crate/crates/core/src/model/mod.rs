//! Two-stream encoder and topic-guided top-down decoder.
//!
//! ```text
//! appearance ─proj─┐
//!                  ├─concat─ vision LSTM ─ vision_ctx ─┐
//! motion ─────proj─┘                                  │ attend (query h_att)
//! audio ──────proj─── audio LSTM ── audio_ctx ────────┤ attend (query h_att)
//! topic ─── embedding ──┐                             │
//! prev word ─ embedding ┴─ attention LSTM ─ h_att ────┴─ language LSTM ─ logits
//! ```

mod attention;
mod checkpoint;
mod config;
mod decode;
mod decoder;
mod encoder;
mod lstm;
mod params;

pub use attention::attend;
pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use config::ModelConfig;
pub use decode::{greedy_decode, greedy_decode_len, sample_decode, SampledCaption};
pub use decoder::{decoder_step, probabilities, DecoderState};
pub use encoder::{encode, encode_input, EncodedVideo, VideoInput};
pub use lstm::lstm_cell;
pub use params::{AttentionParams, Linear, LstmParams, ModelParams, TensorKind, TensorMut, TensorRef};

pub(crate) use attention::{log_softmax, softmax};
pub(crate) use decode::{argmax, sample_with_trace};
pub(crate) use decoder::{backward as decoder_backward, run_inputs};
pub(crate) use encoder::{encode_backward, encode_forward, EncodedGrad};

#[cfg(test)]
pub(crate) mod fixtures {
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::{ModelConfig, VideoInput};
    use crate::corpus::FeatureDims;

    /// All widths `w`, tiny input features.
    pub fn tiny_config(w: usize, vocab: usize, frames: usize) -> ModelConfig {
        ModelConfig::uniform(w, vocab, 3, 6).with_input_dims(&FeatureDims {
            frames,
            appearance: 7,
            motion: 5,
            audio: 4,
        })
    }

    pub fn random_input(cfg: &ModelConfig, frames: usize, topic: usize, seed: u64) -> VideoInput {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = |d: usize| Array2::from_shape_fn((frames, d), |_| rng.gen_range(-1.0..1.0));
        VideoInput {
            appearance: m(cfg.d_app),
            motion: m(cfg.d_mot),
            audio: m(cfg.d_aud),
            topic_id: topic,
        }
    }
}
