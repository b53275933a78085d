use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::features::{load_feature_bundle, FeatureBundle, FeatureDims};
use super::tokenize::{tokenize, Track};

/// Relative paths to a video's three feature files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturePaths {
    pub appearance: PathBuf,
    pub motion: PathBuf,
    pub audio: PathBuf,
}

/// One video: id, topic, raw captions per track and feature references.
/// Serialized as one manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoRecord {
    pub video_id: String,
    pub topic_id: usize,
    pub captions: BTreeMap<Track, Vec<String>>,
    pub features: FeaturePaths,
    pub dims: FeatureDims,
}

impl VideoRecord {
    /// Tokenized captions for `track`.
    pub fn tokenized(&self, track: Track) -> crate::Result<Vec<Vec<String>>> {
        let caps = self.captions.get(&track).ok_or_else(|| {
            crate::Error::data(&self.video_id, format!("no captions for track {track}"))
        })?;
        Ok(caps.iter().map(|c| tokenize(c, track)).collect())
    }

    /// Checks record invariants: nonempty captions with nonempty token
    /// sequences on every track, topic in range, positive dims.
    pub fn validate(&self, n_topics: Option<usize>) -> crate::Result<()> {
        if self.video_id.is_empty() {
            return Err(crate::Error::data("manifest", "empty video_id"));
        }
        if let Some(n) = n_topics {
            if self.topic_id >= n {
                return Err(crate::Error::data(
                    &self.video_id,
                    format!("topic_id {} out of range (n_topics = {n})", self.topic_id),
                ));
            }
        }
        if self.captions.is_empty() {
            return Err(crate::Error::data(&self.video_id, "no captions"));
        }
        for (&track, caps) in &self.captions {
            if caps.is_empty() {
                return Err(crate::Error::data(&self.video_id, format!("empty caption list for {track}")));
            }
            if caps.iter().any(|c| tokenize(c, track).is_empty()) {
                return Err(crate::Error::data(&self.video_id, format!("empty caption on track {track}")));
            }
        }
        self.dims.validate()
    }

    pub fn load_features(&self, root: &Path) -> crate::Result<FeatureBundle> {
        load_feature_bundle(
            [
                &root.join(&self.features.appearance),
                &root.join(&self.features.motion),
                &root.join(&self.features.audio),
            ],
            &self.dims,
        )
    }
}

/// Parses a JSON-lines manifest. Blank lines are skipped.
pub fn parse_manifest(text: &str) -> crate::Result<Vec<VideoRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: VideoRecord = serde_json::from_str(line)
            .map_err(|e| crate::Error::format(format!("manifest line {}", lineno + 1), e.to_string()))?;
        rec.validate(None)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, records: &[VideoRecord]) -> crate::Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| crate::Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> crate::Result<Vec<VideoRecord>> {
    let text = fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    parse_manifest(&text)
}

/// Train / validation / test records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<VideoRecord>,
    pub val: Vec<VideoRecord>,
    pub test: Vec<VideoRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Val, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }

    pub fn manifest_name(self) -> String {
        format!("{}.jsonl", self.as_str())
    }
}

impl std::str::FromStr for SplitName {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" | "valid" | "validation" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            other => Err(crate::Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

impl DatasetSplit {
    pub fn get(&self, s: SplitName) -> &[VideoRecord] {
        match s {
            SplitName::Train => &self.train,
            SplitName::Val => &self.val,
            SplitName::Test => &self.test,
        }
    }

    /// Splits must not share video ids.
    pub fn validate(&self, n_topics: Option<usize>) -> crate::Result<()> {
        let mut seen = BTreeSet::new();
        for s in SplitName::ALL {
            for r in self.get(s) {
                r.validate(n_topics)?;
                if !seen.insert(r.video_id.as_str()) {
                    return Err(crate::Error::data(
                        "dataset",
                        format!("video_id {} appears more than once", r.video_id),
                    ));
                }
            }
        }
        Ok(())
    }
}
