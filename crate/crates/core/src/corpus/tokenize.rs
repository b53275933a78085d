use serde::{Deserialize, Serialize};

/// Caption language track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    English,
    Chinese,
}

impl Track {
    pub fn as_str(self) -> &'static str {
        match self {
            Track::English => "english",
            Track::Chinese => "chinese",
        }
    }
}

impl std::str::FromStr for Track {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(Track::English),
            "chinese" | "zh" => Ok(Track::Chinese),
            other => Err(crate::Error::invalid(format!("unknown track `{other}`"))),
        }
    }
}

impl std::fmt::Display for Track {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Splits a caption into tokens.
///
/// English captions are lowercased, stripped of ASCII punctuation and split on
/// whitespace. Chinese captions drop whitespace and ASCII punctuation and
/// yield one token per code point.
pub fn tokenize(text: &str, track: Track) -> Vec<String> {
    match track {
        Track::English => text
            .chars()
            .filter(|c| !c.is_ascii_punctuation())
            .collect::<String>()
            .to_lowercase()
            .split_whitespace()
            .map(str::to_owned)
            .collect(),
        Track::Chinese => text
            .chars()
            .filter(|c| !c.is_whitespace() && !c.is_ascii_punctuation())
            .map(String::from)
            .collect(),
    }
}

/// Joins tokens back into display text.
pub fn detokenize<S: AsRef<str>>(tokens: &[S], track: Track) -> String {
    let sep = match track {
        Track::English => " ",
        Track::Chinese => "",
    };
    tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(sep)
}
