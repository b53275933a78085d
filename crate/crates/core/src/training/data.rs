use crate::corpus::{build_vocabulary, encode_caption, Dataset, SplitName, Track, VideoRecord, Vocabulary, UNK};
use crate::model::{ModelConfig, VideoInput};

/// A video ready for training or evaluation.
#[derive(Debug, Clone)]
pub struct Example {
    pub video_id: String,
    pub input: VideoInput,
    /// Framed id sequences `[BOS, .., EOS]`.
    pub captions: Vec<Vec<u32>>,
    /// Reference token strings.
    pub refs: Vec<Vec<String>>,
    /// References as ids, without framing (unknown tokens map to UNK).
    pub ref_ids: Vec<Vec<u32>>,
}

/// Vocabulary over the tokenized training captions of `track`.
pub fn vocabulary_for(records: &[VideoRecord], track: Track, min_count: usize) -> crate::Result<Vocabulary> {
    let mut caps = Vec::new();
    for r in records {
        caps.extend(r.tokenized(track)?);
    }
    Ok(build_vocabulary(&caps, min_count))
}

/// Loads features and encodes captions for every record of `split`.
/// Captions are truncated to the decoder's step budget.
pub fn load_examples(
    ds: &Dataset,
    split: SplitName,
    track: Track,
    vocab: &Vocabulary,
    cfg: &ModelConfig,
) -> crate::Result<Vec<Example>> {
    ds.split
        .get(split)
        .iter()
        .map(|r| {
            let bundle = r.load_features(&ds.root)?;
            let refs = r.tokenized(track)?;
            Ok(make_example(r.video_id.clone(), VideoInput::new(&bundle, r.topic_id), refs, vocab, cfg))
        })
        .collect()
}

pub fn make_example(
    video_id: String,
    input: VideoInput,
    refs: Vec<Vec<String>>,
    vocab: &Vocabulary,
    cfg: &ModelConfig,
) -> Example {
    let captions = refs.iter().map(|r| encode_caption(r, vocab, cfg.max_len + 1)).collect();
    let ref_ids = refs
        .iter()
        .map(|r| r.iter().map(|t| vocab.id(t).unwrap_or(UNK)).collect())
        .collect();
    Example {
        video_id,
        input,
        captions,
        refs,
        ref_ids,
    }
}
