use std::collections::BTreeMap;

pub const MAX_ORDER: usize = 4;

/// Counts of contiguous n-grams, keyed by the token slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramCounts<T> {
    counts: BTreeMap<Vec<T>, usize>,
}

impl<T: Ord + Clone> NGramCounts<T> {
    pub fn get(&self, gram: &[T]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], usize)> {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// N-grams of exactly order `n`.
    pub fn order(&self, n: usize) -> impl Iterator<Item = (&[T], usize)> {
        self.iter().filter(move |(k, _)| k.len() == n)
    }
}

/// All contiguous n-grams of orders `1..=n_max`.
pub fn ngram_counts<T: Ord + Clone>(tokens: &[T], n_max: usize) -> NGramCounts<T> {
    let mut counts = BTreeMap::new();
    for n in 1..=n_max {
        for w in tokens.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    NGramCounts { counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aba() {
        let c = ngram_counts(&["a", "b", "a"], 4);
        let got: Vec<(Vec<&str>, usize)> = c.iter().map(|(k, v)| (k.to_vec(), v)).collect();
        let mut want = vec![
            (vec!["a"], 2),
            (vec!["b"], 1),
            (vec!["a", "b"], 1),
            (vec!["b", "a"], 1),
            (vec!["a", "b", "a"], 1),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_and_short() {
        assert!(ngram_counts::<u32>(&[], 4).is_empty());
        let c = ngram_counts(&[1u32, 2], 4);
        assert_eq!(c.order(3).count(), 0);
        assert_eq!(c.order(2).count(), 1);
    }
}
