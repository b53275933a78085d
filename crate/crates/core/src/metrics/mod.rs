//! Caption metrics: BLEU-4 (corpus and smoothed sentence level), plain
//! CIDEr, ROUGE-L and an exact-match METEOR variant.

mod bleu;
mod cider;
mod meteor;
mod ngram;
mod rouge;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu4_corpus, bleu4_sentence};
pub use cider::{cider, compute_df, CiderScorer, DocFreq};
pub use meteor::meteor_lite;
pub use ngram::{ngram_counts, NGramCounts, MAX_ORDER};
pub use rouge::{rouge_l, ROUGE_BETA};

/// Corpus-level scores. `cider` is on a 0..10 scale, the rest on 0..1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu4: f64,
    pub cider: f64,
    pub rouge_l: f64,
    pub meteor_lite: f64,
}

impl MetricReport {
    /// `{"bleu4":…, "cider":…, "rouge_l":…, "meteor_lite":…}` with four
    /// decimals per value.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"bleu4\":{:.4},\"cider\":{:.4},\"rouge_l\":{:.4},\"meteor_lite\":{:.4}}}",
            self.bleu4, self.cider, self.rouge_l, self.meteor_lite
        )
    }
}

/// Scores aligned hypotheses against their reference sets. BLEU is
/// corpus-level; the others are averaged over videos. Document frequencies
/// come from `refs_list` itself.
pub fn evaluate_corpus<T: Ord + Clone>(hyps: &[Vec<T>], refs_list: &[Vec<Vec<T>>]) -> crate::Result<MetricReport> {
    if hyps.len() != refs_list.len() {
        return Err(crate::Error::invalid(format!(
            "{} hypotheses vs {} reference sets",
            hyps.len(),
            refs_list.len()
        )));
    }
    if hyps.is_empty() {
        return Err(crate::Error::invalid("empty corpus"));
    }
    let n = hyps.len() as f64;
    let df = compute_df(refs_list);
    let mut report = MetricReport {
        bleu4: bleu4_corpus(hyps, refs_list)?,
        cider: 0.0,
        rouge_l: 0.0,
        meteor_lite: 0.0,
    };
    for (h, r) in hyps.iter().zip(refs_list) {
        report.cider += cider(h, r, &df);
        report.rouge_l += rouge_l(h, r);
        report.meteor_lite += meteor_lite(h, r);
    }
    report.cider /= n;
    report.rouge_l /= n;
    report.meteor_lite /= n;
    Ok(report)
}
