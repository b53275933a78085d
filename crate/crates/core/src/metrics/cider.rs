use std::collections::{BTreeMap, BTreeSet};

use super::ngram::{ngram_counts, MAX_ORDER};

/// Number of videos whose reference set contains each n-gram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocFreq<T> {
    df: BTreeMap<Vec<T>, usize>,
    n_docs: usize,
}

impl<T: Ord + Clone> DocFreq<T> {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Stored frequency, or 0 for unseen n-grams.
    pub fn get(&self, gram: &[T]) -> usize {
        self.df.get(gram).copied().unwrap_or(0)
    }

    /// `ln(|I| / max(1, df))`; unseen n-grams are clamped to df = 1.
    pub fn idf(&self, gram: &[T]) -> f64 {
        (self.n_docs as f64 / self.get(gram).max(1) as f64).ln()
    }
}

/// Document frequencies over videos (each reference set counts once).
pub fn compute_df<T: Ord + Clone>(corpus: &[Vec<Vec<T>>]) -> DocFreq<T> {
    let mut df = BTreeMap::new();
    for refs in corpus {
        let grams: BTreeSet<Vec<T>> = refs
            .iter()
            .flat_map(|r| ngram_counts(r, MAX_ORDER).iter().map(|(g, _)| g.to_vec()).collect::<Vec<_>>())
            .collect();
        for g in grams {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    DocFreq {
        df,
        n_docs: corpus.len(),
    }
}

/// Sorted TF-IDF weights of one order, with their L2 norm.
#[derive(Debug, Clone)]
struct OrderVec<T> {
    weights: Vec<(Vec<T>, f64)>,
    norm: f64,
}

#[derive(Debug, Clone)]
struct TfIdf<T> {
    orders: [OrderVec<T>; MAX_ORDER],
}

impl<T: Ord + Clone> TfIdf<T> {
    fn new(tokens: &[T], df: &DocFreq<T>) -> Self {
        let counts = ngram_counts(tokens, MAX_ORDER);
        let orders = std::array::from_fn(|i| {
            let weights: Vec<(Vec<T>, f64)> = counts
                .order(i + 1)
                .map(|(g, c)| (g.to_vec(), c as f64 * df.idf(g)))
                .collect();
            let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            OrderVec { weights, norm }
        });
        TfIdf { orders }
    }

    fn cosine(&self, other: &Self, order: usize) -> f64 {
        let (a, b) = (&self.orders[order], &other.orders[order]);
        if a.norm == 0.0 || b.norm == 0.0 {
            return 0.0;
        }
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < a.weights.len() && j < b.weights.len() {
            match a.weights[i].0.cmp(&b.weights[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += a.weights[i].1 * b.weights[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        dot / (a.norm * b.norm)
    }
}

fn score_against<T: Ord + Clone>(hyp: &TfIdf<T>, refs: &[TfIdf<T>]) -> f64 {
    if refs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for n in 0..MAX_ORDER {
        let mean = refs.iter().map(|r| hyp.cosine(r, n)).sum::<f64>() / refs.len() as f64;
        total += mean;
    }
    10.0 * total / MAX_ORDER as f64
}

/// Plain CIDEr: ten times the mean over orders 1..4 of the average cosine
/// between TF-IDF n-gram vectors of the hypothesis and each reference.
pub fn cider<T: Ord + Clone>(hyp: &[T], refs: &[Vec<T>], df: &DocFreq<T>) -> f64 {
    let h = TfIdf::new(hyp, df);
    let r: Vec<_> = refs.iter().map(|r| TfIdf::new(r, df)).collect();
    score_against(&h, &r)
}

/// CIDEr over a fixed corpus with reference vectors precomputed per video.
#[derive(Debug, Clone)]
pub struct CiderScorer<T> {
    df: DocFreq<T>,
    refs: Vec<Vec<TfIdf<T>>>,
}

impl<T: Ord + Clone> CiderScorer<T> {
    pub fn new(corpus: &[Vec<Vec<T>>]) -> Self {
        let df = compute_df(corpus);
        let refs = corpus
            .iter()
            .map(|rs| rs.iter().map(|r| TfIdf::new(r, &df)).collect())
            .collect();
        CiderScorer { df, refs }
    }

    pub fn df(&self) -> &DocFreq<T> {
        &self.df
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    /// CIDEr of `hyp` against the references of video `idx`.
    pub fn score(&self, idx: usize, hyp: &[T]) -> f64 {
        score_against(&TfIdf::new(hyp, &self.df), &self.refs[idx])
    }
}
