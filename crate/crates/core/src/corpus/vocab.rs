use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const N_SPECIALS: usize = 4;

const SPECIAL_TOKENS: [&str; N_SPECIALS] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Token/id bijection. Ids 0..4 are reserved for PAD, BOS, EOS and UNK.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
    min_count: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    min_count: usize,
    tokens: Vec<String>,
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            min_count: v.min_count,
            tokens: v.id_to_token[N_SPECIALS..].to_vec(),
        }
    }
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = crate::Error;

    fn try_from(r: VocabRepr) -> crate::Result<Self> {
        Vocabulary::from_tokens(r.tokens, r.min_count)
    }
}

impl Vocabulary {
    /// Builds a vocabulary from ordered non-special tokens. Duplicates and
    /// tokens colliding with the special markers are rejected.
    pub fn from_tokens(tokens: Vec<String>, min_count: usize) -> crate::Result<Self> {
        let mut id_to_token: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        id_to_token.extend(tokens);
        let mut token_to_id = HashMap::with_capacity(id_to_token.len());
        for (id, tok) in id_to_token.iter().enumerate() {
            if token_to_id.insert(tok.clone(), id as u32).is_some() {
                return Err(crate::Error::format("vocabulary", format!("duplicate token `{tok}`")));
            }
        }
        Ok(Vocabulary {
            id_to_token,
            token_to_id,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == N_SPECIALS
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Non-special tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.id_to_token[N_SPECIALS..]
    }

    /// Maps ids back to tokens, dropping specials.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&id| id as usize >= N_SPECIALS)
            .filter_map(|&id| self.token(id).map(str::to_owned))
            .collect()
    }
}

/// Counts tokens and assigns ids 4.. to those seen at least `min_count`
/// times, by descending count with lexicographic tie-breaking.
pub fn build_vocabulary<S: AsRef<str>>(captions: &[Vec<S>], min_count: usize) -> Vocabulary {
    let min_count = min_count.max(1);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in captions.iter().flatten() {
        *counts.entry(tok.as_ref()).or_default() += 1;
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && !SPECIAL_TOKENS.contains(&t))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t.to_owned()).collect(), min_count)
        .expect("counted tokens are unique")
}

/// `[BOS, ids.., EOS]`, truncated so the whole sequence fits in `max_len`.
pub fn encode_caption<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> Vec<u32> {
    let max_len = max_len.max(2);
    let mut ids = Vec::with_capacity((tokens.len() + 2).min(max_len));
    ids.push(BOS);
    ids.extend(
        tokens
            .iter()
            .take(max_len - 2)
            .map(|t| vocab.id(t.as_ref()).unwrap_or(UNK)),
    );
    ids.push(EOS);
    ids
}
