//! Data model, file formats, tokenization and the synthetic corpus.

mod features;
mod frames;
mod manifest;
mod synth;
mod tokenize;
mod vocab;

use std::fs;
use std::path::{Path, PathBuf};

pub use features::{
    decode_matrix, encode_matrix, load_feature_bundle, load_feature_bundle_from_dir, save_feature_bundle,
    FeatureBundle, FeatureDims, Modality,
};
pub use frames::sample_frame_indices;
pub use manifest::{parse_manifest, read_manifest, write_manifest, DatasetSplit, FeaturePaths, SplitName, VideoRecord};
pub use synth::{synth_dataset, write_dataset, SynthConfig, SynthOutput, CONFIG_FILE, FEATURE_DIR};
pub use tokenize::{detokenize, tokenize, Track};
pub use vocab::{build_vocabulary, encode_caption, Vocabulary, BOS, EOS, N_SPECIALS, PAD, UNK};

/// A dataset directory: generating config plus three split manifests.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub config: SynthConfig,
    pub split: DatasetSplit,
}

impl Dataset {
    pub fn open(root: &Path) -> crate::Result<Self> {
        let cfg_path = root.join(CONFIG_FILE);
        let text = fs::read_to_string(&cfg_path).map_err(|e| crate::Error::io(&cfg_path, e))?;
        let config = SynthConfig::from_json(&text)?;
        let split = DatasetSplit {
            train: read_manifest(&root.join(SplitName::Train.manifest_name()))?,
            val: read_manifest(&root.join(SplitName::Val.manifest_name()))?,
            test: read_manifest(&root.join(SplitName::Test.manifest_name()))?,
        };
        split.validate(Some(config.n_topics))?;
        Ok(Dataset {
            root: root.to_path_buf(),
            config,
            split,
        })
    }
}
