//! Synthetic stand-in corpus with learnable feature/caption structure.
//!
//! Every video draws a topic and a short event sequence over that topic's
//! symbol set. Each `(topic, symbol)` pair owns a fixed random direction per
//! modality, written into the frames the event spans, and Gaussian noise is
//! added everywhere. Captions realize the event sequence through a small
//! two-style grammar so they are recoverable from the features.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::{save_feature_bundle, FeatureBundle, FeatureDims, Modality};
use super::manifest::{write_manifest, DatasetSplit, FeaturePaths, SplitName, VideoRecord};
use super::tokenize::Track;

const EN_VERBS: [&str; 16] = [
    "cuts", "throws", "opens", "paints", "washes", "kicks", "lifts", "folds", "pours", "carries", "pushes",
    "catches", "cleans", "fixes", "holds", "drops",
];
const EN_NOUNS: [&str; 16] = [
    "ball", "box", "door", "bread", "car", "shirt", "rope", "cup", "table", "guitar", "bike", "fish", "paper",
    "bottle", "chair", "window",
];
const ZH_VERBS: [&str; 16] = [
    "切", "扔", "打开", "画", "洗", "踢", "举起", "叠", "倒", "搬", "推", "接住", "擦", "修", "拿着", "放下",
];
const ZH_NOUNS: [&str; 16] = [
    "球", "盒子", "门", "面包", "汽车", "衬衫", "绳子", "杯子", "桌子", "吉他", "自行车", "鱼", "纸", "瓶子",
    "椅子", "窗户",
];

/// Caption indices (mod 10) realized with the secondary phrasing.
const SECONDARY_STYLE: [usize; 3] = [2, 5, 8];

pub const CONFIG_FILE: &str = "synth_config.json";
pub const FEATURE_DIR: &str = "features";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_topics: usize,
    pub symbols_per_topic: usize,
    pub min_events: usize,
    pub max_events: usize,
    pub captions_per_video: usize,
    pub noise_sigma: f64,
    pub dims: FeatureDims,
    pub tracks: Vec<Track>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_train: 50,
            n_val: 10,
            n_test: 10,
            n_topics: 5,
            symbols_per_topic: 6,
            min_events: 2,
            max_events: 4,
            captions_per_video: 10,
            noise_sigma: 0.1,
            dims: FeatureDims::default(),
            tracks: vec![Track::English, Track::Chinese],
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> crate::Result<()> {
        self.dims.validate()?;
        let lexicon = EN_VERBS.len() * EN_NOUNS.len();
        if self.n_topics == 0 || self.symbols_per_topic == 0 || self.symbols_per_topic > lexicon {
            return Err(crate::Error::invalid("n_topics and symbols_per_topic must be positive and fit the lexicon"));
        }
        if self.min_events == 0 || self.min_events > self.max_events || self.max_events > self.dims.frames {
            return Err(crate::Error::invalid("need 1 <= min_events <= max_events <= frames"));
        }
        if self.captions_per_video == 0 {
            return Err(crate::Error::invalid("captions_per_video must be positive"));
        }
        if self.tracks.is_empty() {
            return Err(crate::Error::invalid("at least one track required"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(crate::Error::invalid("noise_sigma must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn n_videos(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        let cfg: SynthConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A latent event: one (verb, noun) lexicon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Symbol {
    verb: usize,
    noun: usize,
}

fn render(events: &[Symbol], track: Track, secondary: bool) -> String {
    match track {
        Track::English => {
            let (subject, joiner) = if secondary { ("someone", " and ") } else { ("a person", " then ") };
            let body: Vec<String> = events
                .iter()
                .map(|s| format!("{} the {}", EN_VERBS[s.verb], EN_NOUNS[s.noun]))
                .collect();
            format!("{subject} {}", body.join(joiner))
        }
        Track::Chinese => {
            let (subject, joiner) = if secondary { ("有人", "接着") } else { ("一个人", "然后") };
            let body: Vec<String> = events
                .iter()
                .map(|s| format!("{}{}", ZH_VERBS[s.verb], ZH_NOUNS[s.noun]))
                .collect();
            format!("{subject}{}", body.join(joiner))
        }
    }
}

/// Generated corpus: records plus in-memory feature bundles (same order as
/// train, val, test).
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub split: DatasetSplit,
    pub bundles: Vec<(String, FeatureBundle)>,
}

struct DirectionBank {
    seed: u64,
    symbols_per_topic: usize,
    dims: FeatureDims,
}

impl DirectionBank {
    /// Fixed per-(topic, symbol, modality) unit-variance direction, derived
    /// from its own ChaCha stream.
    fn direction(&self, topic: usize, slot: usize, m: Modality) -> Array1<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_d1ec_0000_0000);
        let m_idx = Modality::ALL.iter().position(|&x| x == m).unwrap() as u64;
        rng.set_stream(((topic * self.symbols_per_topic + slot) as u64) * 3 + m_idx + 1);
        let normal = Normal::new(0.0f32, 1.0).unwrap();
        Array1::from_iter((0..self.dims.width(m)).map(|_| normal.sample(&mut rng)))
    }
}

/// Generates a deterministic synthetic corpus from `seed`.
pub fn synth_dataset(config: &SynthConfig, seed: u64) -> crate::Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let lexicon: Vec<Symbol> = (0..EN_VERBS.len())
        .flat_map(|verb| (0..EN_NOUNS.len()).map(move |noun| Symbol { verb, noun }))
        .collect();
    let topic_symbols: Vec<Vec<Symbol>> = (0..config.n_topics)
        .map(|_| lexicon.choose_multiple(&mut rng, config.symbols_per_topic).copied().collect())
        .collect();

    let bank = DirectionBank {
        seed,
        symbols_per_topic: config.symbols_per_topic,
        dims: config.dims,
    };
    let noise = Normal::new(0.0f32, config.noise_sigma as f32).map_err(|e| crate::Error::invalid(e.to_string()))?;
    let frames = config.dims.frames;

    let mut split = DatasetSplit::default();
    let mut bundles = Vec::with_capacity(config.n_videos());
    for idx in 0..config.n_videos() {
        let video_id = format!("vid{idx:05}");
        let topic = rng.gen_range(0..config.n_topics);
        let n_events = rng.gen_range(config.min_events..=config.max_events);
        let mut slots: Vec<usize> = Vec::with_capacity(n_events);
        while slots.len() < n_events {
            let s = rng.gen_range(0..config.symbols_per_topic);
            if config.symbols_per_topic > 1 && slots.last() == Some(&s) {
                continue;
            }
            slots.push(s);
        }
        let events: Vec<Symbol> = slots.iter().map(|&s| topic_symbols[topic][s]).collect();

        let mut mats = Vec::with_capacity(3);
        for m in Modality::ALL {
            let width = config.dims.width(m);
            let mut mat = Array2::<f32>::zeros((frames, width));
            for (j, &slot) in slots.iter().enumerate() {
                let dir = bank.direction(topic, slot, m);
                let (lo, hi) = (j * frames / n_events, (j + 1) * frames / n_events);
                for t in lo..hi {
                    mat.row_mut(t).assign(&dir);
                }
            }
            mat.mapv_inplace(|v| v + noise.sample(&mut rng));
            mats.push(mat);
        }
        let audio = mats.pop().unwrap();
        let motion = mats.pop().unwrap();
        let appearance = mats.pop().unwrap();

        let captions = config
            .tracks
            .iter()
            .map(|&track| {
                let caps = (0..config.captions_per_video)
                    .map(|k| render(&events, track, SECONDARY_STYLE.contains(&(k % 10))))
                    .collect();
                (track, caps)
            })
            .collect();
        let rel = |m: Modality| PathBuf::from(FEATURE_DIR).join(FeatureBundle::feature_file_name(&video_id, m));
        let record = VideoRecord {
            video_id: video_id.clone(),
            topic_id: topic,
            captions,
            features: FeaturePaths {
                appearance: rel(Modality::Appearance),
                motion: rel(Modality::Motion),
                audio: rel(Modality::Audio),
            },
            dims: config.dims,
        };
        if idx < config.n_train {
            split.train.push(record);
        } else if idx < config.n_train + config.n_val {
            split.val.push(record);
        } else {
            split.test.push(record);
        }
        bundles.push((video_id, FeatureBundle::new(appearance, motion, audio)?));
    }
    Ok(SynthOutput { split, bundles })
}

/// Writes manifests, feature files and the generating config under `dir`.
pub fn write_dataset(dir: &Path, config: &SynthConfig, out: &SynthOutput) -> crate::Result<()> {
    let feat_dir = dir.join(FEATURE_DIR);
    fs::create_dir_all(&feat_dir).map_err(|e| crate::Error::io(&feat_dir, e))?;
    for (id, bundle) in &out.bundles {
        save_feature_bundle(&feat_dir, id, bundle)?;
    }
    for s in SplitName::ALL {
        write_manifest(&dir.join(s.manifest_name()), out.split.get(s))?;
    }
    let cfg_path = dir.join(CONFIG_FILE);
    let text = serde_json::to_string_pretty(config)? + "\n";
    fs::write(&cfg_path, text).map_err(|e| crate::Error::io(&cfg_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, tokenize};

    fn tiny() -> SynthConfig {
        SynthConfig {
            n_train: 6,
            n_val: 2,
            n_test: 2,
            dims: FeatureDims {
                frames: 28,
                appearance: 16,
                motion: 8,
                audio: 4,
            },
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = synth_dataset(&tiny(), 7).unwrap();
        let b = synth_dataset(&tiny(), 7).unwrap();
        assert_eq!(a.split, b.split);
        for ((ia, ba), (ib, bb)) in a.bundles.iter().zip(&b.bundles) {
            assert_eq!(ia, ib);
            assert_eq!(ba, bb);
        }
    }

    #[test]
    fn seeds_differ() {
        let a = synth_dataset(&tiny(), 7).unwrap();
        let b = synth_dataset(&tiny(), 8).unwrap();
        let caps = |o: &SynthOutput| -> Vec<_> { o.split.train.iter().map(|r| r.captions.clone()).collect() };
        assert_ne!(caps(&a), caps(&b));
    }

    #[test]
    fn default_geometry() {
        let cfg = SynthConfig {
            n_train: 2,
            n_val: 1,
            n_test: 1,
            ..SynthConfig::default()
        };
        let out = synth_dataset(&cfg, 7).unwrap();
        for (_, b) in &out.bundles {
            assert_eq!(b.appearance.dim(), (28, 2048));
            assert_eq!(b.motion.dim(), (28, 1024));
            assert_eq!(b.audio.dim(), (28, 128));
        }
        out.split.validate(Some(cfg.n_topics)).unwrap();
    }

    #[test]
    fn vocabulary_bounded() {
        let cfg = SynthConfig {
            dims: tiny().dims,
            ..SynthConfig::default()
        };
        let out = synth_dataset(&cfg, 7).unwrap();
        assert_eq!(out.split.train.len(), 50);
        let caps: Vec<Vec<String>> = out
            .split
            .train
            .iter()
            .flat_map(|r| r.captions[&Track::English].iter().map(|c| tokenize(c, Track::English)))
            .collect();
        let v = build_vocabulary(&caps, 1);
        assert!((20..=200).contains(&v.len()), "vocab size {}", v.len());
        for r in &out.split.train {
            assert_eq!(r.captions[&Track::English].len(), 10);
            assert_eq!(r.captions[&Track::Chinese].len(), 10);
        }
    }

    #[test]
    fn captions_follow_template() {
        let ev = [Symbol { verb: 0, noun: 1 }, Symbol { verb: 2, noun: 3 }];
        assert_eq!(render(&ev, Track::English, false), "a person cuts the box then opens the bread");
        assert_eq!(render(&ev, Track::English, true), "someone cuts the box and opens the bread");
        assert_eq!(render(&ev, Track::Chinese, false), "一个人切盒子然后打开面包");
    }

    #[test]
    fn written_dataset_loads() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let out = synth_dataset(&cfg, 3).unwrap();
        write_dataset(dir.path(), &cfg, &out).unwrap();
        let ds = crate::corpus::Dataset::open(dir.path()).unwrap();
        assert_eq!(ds.split.train.len(), 6);
        let b = ds.split.train[0].load_features(dir.path()).unwrap();
        assert_eq!(b, out.bundles[0].1);
    }
}
