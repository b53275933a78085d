use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Input modality of a feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Appearance,
    Motion,
    Audio,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Appearance, Modality::Motion, Modality::Audio];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Appearance => "appearance",
            Modality::Motion => "motion",
            Modality::Audio => "audio",
        }
    }
}

/// Frame count and per-modality widths of a feature bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDims {
    pub frames: usize,
    pub appearance: usize,
    pub motion: usize,
    pub audio: usize,
}

impl Default for FeatureDims {
    fn default() -> Self {
        FeatureDims {
            frames: 28,
            appearance: 2048,
            motion: 1024,
            audio: 128,
        }
    }
}

impl FeatureDims {
    pub fn width(&self, m: Modality) -> usize {
        match m {
            Modality::Appearance => self.appearance,
            Modality::Motion => self.motion,
            Modality::Audio => self.audio,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.frames == 0 || self.appearance == 0 || self.motion == 0 || self.audio == 0 {
            return Err(crate::Error::invalid(format!("feature dims must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Frame-aligned appearance, motion and audio features of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub appearance: Array2<f32>,
    pub motion: Array2<f32>,
    pub audio: Array2<f32>,
}

impl FeatureBundle {
    pub fn new(appearance: Array2<f32>, motion: Array2<f32>, audio: Array2<f32>) -> crate::Result<Self> {
        let b = FeatureBundle {
            appearance,
            motion,
            audio,
        };
        b.check(&b.dims())?;
        Ok(b)
    }

    pub fn frames(&self) -> usize {
        self.appearance.nrows()
    }

    pub fn dims(&self) -> FeatureDims {
        FeatureDims {
            frames: self.appearance.nrows(),
            appearance: self.appearance.ncols(),
            motion: self.motion.ncols(),
            audio: self.audio.ncols(),
        }
    }

    pub fn get(&self, m: Modality) -> &Array2<f32> {
        match m {
            Modality::Appearance => &self.appearance,
            Modality::Motion => &self.motion,
            Modality::Audio => &self.audio,
        }
    }

    /// Verifies shapes against `dims` and that every value is finite.
    pub fn check(&self, dims: &FeatureDims) -> crate::Result<()> {
        for m in Modality::ALL {
            let mat = self.get(m);
            let want = (dims.frames, dims.width(m));
            if mat.dim() != want {
                return Err(crate::Error::format(
                    m.as_str(),
                    format!("expected shape {}x{}, got {}x{}", want.0, want.1, mat.nrows(), mat.ncols()),
                ));
            }
            if let Some(pos) = mat.iter().position(|v| !v.is_finite()) {
                return Err(crate::Error::data(
                    m.as_str(),
                    format!("non-finite value at row {}, col {}", pos / want.1, pos % want.1),
                ));
            }
        }
        Ok(())
    }

    pub fn feature_file_name(video_id: &str, m: Modality) -> String {
        format!("{video_id}.{}.f32", m.as_str())
    }
}

/// Raw little-endian f32, row-major, no header.
pub fn encode_matrix(mat: &Array2<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(mat.len() * 4);
    for v in mat.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_matrix`]. `context` names the modality in errors.
pub fn decode_matrix(bytes: &[u8], rows: usize, cols: usize, context: &str) -> crate::Result<Array2<f32>> {
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| crate::Error::invalid(format!("{context}: dims overflow")))?;
    if bytes.len() != expected {
        let actual = if cols > 0 && bytes.len().is_multiple_of(4 * cols) {
            format!("{}x{}", bytes.len() / (4 * cols), cols)
        } else {
            format!("{} bytes", bytes.len())
        };
        return Err(crate::Error::format(
            context,
            format!("expected shape {rows}x{cols}, got {actual}"),
        ));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), data).expect("length checked"))
}

pub fn save_feature_bundle(dir: &Path, video_id: &str, bundle: &FeatureBundle) -> crate::Result<()> {
    for m in Modality::ALL {
        let path = dir.join(FeatureBundle::feature_file_name(video_id, m));
        fs::write(&path, encode_matrix(bundle.get(m))).map_err(|e| crate::Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads one matrix file per modality and validates it against `dims`.
pub fn load_feature_bundle(
    paths: [&Path; 3],
    dims: &FeatureDims,
) -> crate::Result<FeatureBundle> {
    let mut mats = Vec::with_capacity(3);
    for (m, path) in Modality::ALL.into_iter().zip(paths) {
        let bytes = fs::read(path).map_err(|e| crate::Error::io(path, e))?;
        mats.push(decode_matrix(&bytes, dims.frames, dims.width(m), m.as_str())?);
    }
    let audio = mats.pop().unwrap();
    let motion = mats.pop().unwrap();
    let appearance = mats.pop().unwrap();
    let bundle = FeatureBundle {
        appearance,
        motion,
        audio,
    };
    bundle.check(dims)?;
    Ok(bundle)
}

/// Loads `<video_id>.<modality>.f32` files from `dir`.
pub fn load_feature_bundle_from_dir(dir: &Path, video_id: &str, dims: &FeatureDims) -> crate::Result<FeatureBundle> {
    let p: Vec<_> = Modality::ALL
        .iter()
        .map(|&m| dir.join(FeatureBundle::feature_file_name(video_id, m)))
        .collect();
    load_feature_bundle([&p[0], &p[1], &p[2]], dims)
}
