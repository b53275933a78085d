use serde::{Deserialize, Serialize};

use crate::corpus::FeatureDims;

/// Layer widths of the encoder/decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d_app: usize,
    pub d_mot: usize,
    pub d_aud: usize,
    pub e_app: usize,
    pub e_mot: usize,
    pub e_aud: usize,
    pub h_vis: usize,
    pub h_aud: usize,
    pub e_word: usize,
    pub e_topic: usize,
    pub h_att: usize,
    pub h_lang: usize,
    /// Hidden width of the additive attention scorers.
    pub d_attn: usize,
    pub vocab_size: usize,
    pub n_topics: usize,
    /// Maximum decoder steps, EOS included.
    pub max_len: usize,
}

impl ModelConfig {
    /// Full-width configuration: 2048/1024/128 inputs, 512-D vision LSTM,
    /// 128-D audio LSTM.
    pub fn full(vocab_size: usize, n_topics: usize) -> Self {
        ModelConfig {
            d_app: 2048,
            d_mot: 1024,
            d_aud: 128,
            e_app: 512,
            e_mot: 512,
            e_aud: 128,
            h_vis: 512,
            h_aud: 128,
            e_word: 512,
            e_topic: 256,
            h_att: 512,
            h_lang: 512,
            d_attn: 512,
            vocab_size,
            n_topics,
            max_len: 20,
        }
    }

    /// Narrow configuration for desk-scale runs on the full input geometry.
    pub fn small(vocab_size: usize, n_topics: usize) -> Self {
        ModelConfig {
            e_app: 32,
            e_mot: 32,
            e_aud: 16,
            h_vis: 64,
            h_aud: 32,
            e_word: 32,
            e_topic: 16,
            h_att: 64,
            h_lang: 64,
            d_attn: 32,
            ..Self::full(vocab_size, n_topics)
        }
    }

    /// Every width set to `w`.
    pub fn uniform(w: usize, vocab_size: usize, n_topics: usize, max_len: usize) -> Self {
        ModelConfig {
            d_app: w,
            d_mot: w,
            d_aud: w,
            e_app: w,
            e_mot: w,
            e_aud: w,
            h_vis: w,
            h_aud: w,
            e_word: w,
            e_topic: w,
            h_att: w,
            h_lang: w,
            d_attn: w,
            vocab_size,
            n_topics,
            max_len,
        }
    }

    pub fn with_input_dims(mut self, dims: &FeatureDims) -> Self {
        self.d_app = dims.appearance;
        self.d_mot = dims.motion;
        self.d_aud = dims.audio;
        self
    }

    pub fn input_dims_match(&self, dims: &FeatureDims) -> bool {
        self.d_app == dims.appearance && self.d_mot == dims.motion && self.d_aud == dims.audio
    }

    pub fn validate(&self) -> crate::Result<()> {
        let widths = [
            self.d_app,
            self.d_mot,
            self.d_aud,
            self.e_app,
            self.e_mot,
            self.e_aud,
            self.h_vis,
            self.h_aud,
            self.e_word,
            self.e_topic,
            self.h_att,
            self.h_lang,
            self.d_attn,
            self.n_topics,
            self.max_len,
        ];
        if widths.contains(&0) {
            return Err(crate::Error::invalid(format!("all model widths must be positive: {self:?}")));
        }
        if self.vocab_size <= crate::corpus::N_SPECIALS {
            return Err(crate::Error::invalid("vocabulary has no regular tokens"));
        }
        Ok(())
    }

    pub(crate) fn att_input(&self) -> usize {
        self.h_lang + self.e_topic + self.h_vis + self.e_word
    }

    pub(crate) fn lang_input(&self) -> usize {
        self.h_att + self.h_vis + self.h_aud
    }
}
