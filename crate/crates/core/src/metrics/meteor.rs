//! METEOR with exact-match unigram alignment only.

use std::collections::BTreeMap;

/// Alignment search stops expanding after this many nodes and keeps the
/// best alignment found so far.
const SEARCH_BUDGET: usize = 200_000;

/// Matches and chunk count of the best alignment between `hyp` and `reference`:
/// maximal number of one-to-one exact matches, then fewest chunks.
pub(crate) fn align<T: Ord>(hyp: &[T], reference: &[T]) -> (usize, usize) {
    let mut types: BTreeMap<&T, usize> = BTreeMap::new();
    for t in hyp.iter().chain(reference) {
        let n = types.len();
        types.entry(t).or_insert(n);
    }
    let h: Vec<usize> = hyp.iter().map(|t| types[t]).collect();
    let r: Vec<usize> = reference.iter().map(|t| types[t]).collect();
    let n_types = types.len();

    let mut ref_pos = vec![Vec::new(); n_types];
    for (j, &t) in r.iter().enumerate() {
        ref_pos[t].push(j);
    }
    let mut hyp_count = vec![0usize; n_types];
    for &t in &h {
        hyp_count[t] += 1;
    }
    let need: Vec<usize> = (0..n_types).map(|t| hyp_count[t].min(ref_pos[t].len())).collect();
    let matches: usize = need.iter().sum();
    if matches == 0 {
        return (0, 0);
    }

    let mut search = Search {
        h: &h,
        ref_pos: &ref_pos,
        used: vec![false; r.len()],
        need,
        remaining: hyp_count,
        best: usize::MAX,
        nodes: 0,
    };
    search.dfs(0, None, 0);
    (matches, search.best)
}

struct Search<'a> {
    h: &'a [usize],
    ref_pos: &'a [Vec<usize>],
    used: Vec<bool>,
    need: Vec<usize>,
    remaining: Vec<usize>,
    best: usize,
    nodes: usize,
}

impl Search<'_> {
    fn dfs(&mut self, i: usize, prev: Option<usize>, chunks: usize) {
        // One chunk is optimal whenever anything matches.
        if chunks >= self.best || self.best == 1 {
            return;
        }
        if i == self.h.len() {
            self.best = chunks;
            return;
        }
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET && self.best != usize::MAX {
            return;
        }
        let t = self.h[i];
        self.remaining[t] -= 1;
        let must_align = self.need[t] > self.remaining[t];
        if self.need[t] > 0 {
            self.need[t] -= 1;
            // Continuing the current chunk first finds good bounds early.
            let cont = prev.map(|p| p + 1);
            let mut cands: Vec<usize> = Vec::with_capacity(self.ref_pos[t].len());
            if let Some(c) = cont {
                if self.ref_pos[t].binary_search(&c).is_ok() {
                    cands.push(c);
                }
            }
            cands.extend(self.ref_pos[t].iter().copied().filter(|&j| Some(j) != cont));
            for j in cands {
                if self.used[j] {
                    continue;
                }
                self.used[j] = true;
                let extra = usize::from(cont != Some(j));
                self.dfs(i + 1, Some(j), chunks + extra);
                self.used[j] = false;
            }
            self.need[t] += 1;
        }
        if !must_align {
            self.dfs(i + 1, None, chunks);
        }
        self.remaining[t] += 1;
    }
}

fn meteor_single<T: Ord>(hyp: &[T], reference: &[T]) -> f64 {
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (m, chunks) = align(hyp, reference);
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    let p = m / hyp.len() as f64;
    let r = m / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    f_mean * (1.0 - penalty)
}

/// Simplified METEOR, maximized over references.
pub fn meteor_lite<T: Ord>(hyp: &[T], refs: &[Vec<T>]) -> f64 {
    refs.iter().map(|r| meteor_single(hyp, r)).fold(0.0, f64::max)
}
