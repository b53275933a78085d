//! Run configuration: one JSON document, overridden by `CAPSTAGE_*`
//! environment variables, overridden in turn by flags.

use std::path::{Path, PathBuf};

use capstage_core::corpus::{FeatureDims, SynthConfig, Track};
use capstage_core::model::ModelConfig;
use capstage_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Small,
    Full,
}

/// Model preset plus optional per-field overrides. Input widths, vocabulary
/// size and topic count always come from the data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub preset: Preset,
    pub e_app: Option<usize>,
    pub e_mot: Option<usize>,
    pub e_aud: Option<usize>,
    pub h_vis: Option<usize>,
    pub h_aud: Option<usize>,
    pub e_word: Option<usize>,
    pub e_topic: Option<usize>,
    pub h_att: Option<usize>,
    pub h_lang: Option<usize>,
    pub d_attn: Option<usize>,
    pub max_len: Option<usize>,
}

impl ModelSpec {
    pub fn resolve(&self, vocab_size: usize, n_topics: usize, dims: &FeatureDims) -> ModelConfig {
        let mut c = match self.preset {
            Preset::Small => ModelConfig::small(vocab_size, n_topics),
            Preset::Full => ModelConfig::full(vocab_size, n_topics),
        }
        .with_input_dims(dims);
        let set = |slot: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.e_app, self.e_app);
        set(&mut c.e_mot, self.e_mot);
        set(&mut c.e_aud, self.e_aud);
        set(&mut c.h_vis, self.h_vis);
        set(&mut c.h_aud, self.h_aud);
        set(&mut c.e_word, self.e_word);
        set(&mut c.e_topic, self.e_topic);
        set(&mut c.h_att, self.h_att);
        set(&mut c.h_lang, self.h_lang);
        set(&mut c.d_attn, self.d_attn);
        set(&mut c.max_len, self.max_len);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory (written by `synth`, read by the others).
    pub data: PathBuf,
    /// Output directory for `synth` (defaults to `data`) and `train`.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub track: Track,
    pub synth: SynthConfig,
    pub model: ModelSpec,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: PathBuf::from("data"),
            out: None,
            seed: None,
            track: Track::English,
            synth: SynthConfig::default(),
            model: ModelSpec::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_documents_fill_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 3, "model": {"h_vis": 16}, "train": {"mu": 8.0}}"#).unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.train.mu, 8.0);
        assert_eq!(c.train.patience, 3);
        let m = c.model.resolve(30, 5, &FeatureDims::default());
        assert_eq!(m.h_vis, 16);
        assert_eq!(m.vocab_size, 30);
        assert_eq!(m.d_app, 2048);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 3}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"model": {"width": 3}}"#).is_err());
    }

    #[test]
    fn full_preset() {
        let c: RunConfig = serde_json::from_str(r#"{"model": {"preset": "full"}}"#).unwrap();
        let m = c.model.resolve(30, 5, &FeatureDims::default());
        assert_eq!((m.h_vis, m.h_aud), (512, 128));
    }
}
