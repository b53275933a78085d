use super::ngram::{ngram_counts, MAX_ORDER};

/// Clipped match and candidate counts per order, plus lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl std::ops::AddAssign for BleuStats {
    fn add_assign(&mut self, o: Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }
}

/// Reference length closest to `hyp_len`; ties go to the shorter one.
fn closest_ref_len<T>(hyp_len: usize, refs: &[Vec<T>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

pub(crate) fn sentence_stats<T: Ord + Clone>(hyp: &[T], refs: &[Vec<T>]) -> BleuStats {
    let hyp_counts = ngram_counts(hyp, MAX_ORDER);
    let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, MAX_ORDER)).collect();
    let mut s = BleuStats {
        hyp_len: hyp.len(),
        ref_len: closest_ref_len(hyp.len(), refs),
        ..BleuStats::default()
    };
    for (gram, count) in hyp_counts.iter() {
        let max_ref = ref_counts.iter().map(|rc| rc.get(gram)).max().unwrap_or(0);
        s.matches[gram.len() - 1] += count.min(max_ref);
    }
    for n in 1..=MAX_ORDER {
        s.totals[n - 1] = hyp.len().saturating_sub(n - 1);
    }
    s
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

fn combine(stats: &BleuStats, smooth: bool) -> f64 {
    if stats.hyp_len == 0 || stats.matches[0] == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 0..MAX_ORDER {
        let (m, t) = (stats.matches[n], stats.totals[n]);
        let p = if m > 0 {
            m as f64 / t as f64
        } else if smooth && n > 0 {
            1.0 / (t as f64 + 1.0)
        } else {
            return 0.0;
        };
        log_sum += p.ln();
    }
    brevity_penalty(stats.hyp_len, stats.ref_len) * (log_sum / MAX_ORDER as f64).exp()
}

/// Corpus-level BLEU-4: clipped counts and lengths are summed over the corpus
/// before combining. Any order with zero matches yields 0.
pub fn bleu4_corpus<T: Ord + Clone>(hyps: &[Vec<T>], refs_list: &[Vec<Vec<T>>]) -> crate::Result<f64> {
    if hyps.len() != refs_list.len() {
        return Err(crate::Error::invalid(format!(
            "{} hypotheses vs {} reference sets",
            hyps.len(),
            refs_list.len()
        )));
    }
    let mut total = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs_list) {
        total += sentence_stats(h, r);
    }
    Ok(combine(&total, false))
}

/// Sentence BLEU-4 with add-one smoothing on zero-match orders n >= 2.
/// A hypothesis with no unigram match scores 0.
pub fn bleu4_sentence<T: Ord + Clone>(hyp: &[T], refs: &[Vec<T>]) -> f64 {
    combine(&sentence_stats(hyp, refs), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Vec<&str> {
        x.split_whitespace().collect()
    }

    #[test]
    fn perfect() {
        let r = vec![s("a person opens the door")];
        assert!((bleu4_sentence(&r[0], &r) - 1.0).abs() < 1e-12);
        assert!((bleu4_corpus(&[r[0].clone()], std::slice::from_ref(&r)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_four_gram_zeroes_corpus_bleu() {
        let h = s("a b c");
        let r = vec![s("a b c d")];
        assert_eq!(bleu4_corpus(std::slice::from_ref(&h), std::slice::from_ref(&r)).unwrap(), 0.0);
        let st = sentence_stats(&h, &r);
        assert_eq!(st.matches[..3], [3, 2, 1]);
        assert_eq!(st.totals, [3, 2, 1, 0]);
        // smoothed: p4 = 1/1, BP = exp(1 - 4/3)
        let expect = (1.0f64 - 4.0 / 3.0).exp();
        assert!((bleu4_sentence(&h, &r) - expect).abs() < 1e-12);
    }

    #[test]
    fn disjoint() {
        assert_eq!(bleu4_corpus(&[s("x y z w")], &[vec![s("a b c d")]]).unwrap(), 0.0);
        assert_eq!(bleu4_sentence(&s("x y z w"), &[s("a b c d")]), 0.0);
    }

    #[test]
    fn single_token_positive() {
        let v = bleu4_sentence(&s("a"), &[s("a")]);
        assert!((v - 1.0).abs() < 1e-12);
        assert!(bleu4_sentence(&s("a"), &[s("a b c")]) > 0.0);
    }

    #[test]
    fn clipping() {
        let st = sentence_stats(&s("the the the"), &[s("the cat")]);
        assert_eq!(st.matches[0], 1);
    }

    #[test]
    fn closest_length_tie_prefers_shorter() {
        assert_eq!(closest_ref_len(3, &[s("a b"), s("a b c d")]), 2);
    }

    #[test]
    fn length_mismatch() {
        assert!(bleu4_corpus(&[s("a")], &[]).is_err());
    }
}
