//! Brute-force evaluations of the metric definitions, and sweeps that
//! compare them with the library over every small corpus in a fixed family
//! (alphabet {a, b, c}, captions of at most four tokens, up to three
//! videos). Each sweep panics on the first disagreement.

use std::collections::{BTreeMap, BTreeSet};

use capstage_core::metrics::{bleu4_corpus, bleu4_sentence, cider, compute_df, meteor_lite, rouge_l};

pub type Seq = Vec<u8>;
const TOL: f64 = 1e-9;

/// Every sequence over {a, b, c} with length in `lens`.
pub fn sequences(lens: std::ops::RangeInclusive<usize>) -> Vec<Seq> {
    let mut out = Vec::new();
    for len in lens {
        for code in 0..3usize.pow(len as u32) {
            let mut c = code;
            let mut s = Vec::with_capacity(len);
            for _ in 0..len {
                s.push(b'a' + (c % 3) as u8);
                c /= 3;
            }
            out.push(s);
        }
    }
    out
}

/// All contiguous n-grams, with repetition, in order of appearance.
fn grams(s: &[u8], n: usize) -> Vec<&[u8]> {
    if s.len() < n {
        return Vec::new();
    }
    (0..=s.len() - n).map(|i| &s[i..i + n]).collect()
}

fn occurrences(s: &[u8], g: &[u8]) -> usize {
    grams(s, g.len()).into_iter().filter(|x| *x == g).count()
}

// ---- BLEU ----

struct Tally {
    matched: [f64; 4],
    total: [f64; 4],
    c: f64,
    r: f64,
}

fn tally(hyp: &[u8], refs: &[Seq]) -> Tally {
    let mut t = Tally { matched: [0.0; 4], total: [0.0; 4], c: hyp.len() as f64, r: 0.0 };
    for n in 1..=4 {
        let hg = grams(hyp, n);
        t.total[n - 1] = hg.len() as f64;
        let distinct: BTreeSet<&[u8]> = hg.iter().copied().collect();
        for g in distinct {
            let in_hyp = occurrences(hyp, g);
            let cap = refs.iter().map(|r| occurrences(r, g)).max().unwrap_or(0);
            t.matched[n - 1] += in_hyp.min(cap) as f64;
        }
    }
    // closest reference length, shorter wins a tie
    let mut best: Option<usize> = None;
    for r in refs {
        let d = (r.len() as i64 - hyp.len() as i64).abs();
        best = match best {
            None => Some(r.len()),
            Some(b) => {
                let db = (b as i64 - hyp.len() as i64).abs();
                if d < db || (d == db && r.len() < b) { Some(r.len()) } else { Some(b) }
            }
        };
    }
    t.r = best.unwrap_or(0) as f64;
    t
}

fn bleu_from(t: &Tally, smoothed: bool) -> f64 {
    if t.c == 0.0 || t.matched[0] == 0.0 {
        return 0.0;
    }
    let mut prod = 1.0;
    for n in 0..4 {
        let p = if t.matched[n] > 0.0 {
            t.matched[n] / t.total[n]
        } else if smoothed && n > 0 {
            1.0 / (t.total[n] + 1.0)
        } else {
            return 0.0;
        };
        prod *= p;
    }
    let bp = if t.c > t.r { 1.0 } else { (1.0 - t.r / t.c).exp() };
    bp * prod.powf(0.25)
}

fn oracle_bleu_sentence(hyp: &[u8], refs: &[Seq]) -> f64 {
    bleu_from(&tally(hyp, refs), true)
}

fn oracle_bleu_corpus(hyps: &[Seq], refs: &[Vec<Seq>]) -> f64 {
    let mut sum = Tally { matched: [0.0; 4], total: [0.0; 4], c: 0.0, r: 0.0 };
    for (h, r) in hyps.iter().zip(refs) {
        let t = tally(h, r);
        for n in 0..4 {
            sum.matched[n] += t.matched[n];
            sum.total[n] += t.total[n];
        }
        sum.c += t.c;
        sum.r += t.r;
    }
    bleu_from(&sum, false)
}

// ---- CIDEr ----

fn oracle_cider(hyp: &[u8], refs: &[Seq], corpus: &[Vec<Seq>]) -> f64 {
    let n_docs = corpus.len() as f64;
    let df = |g: &[u8]| corpus.iter().filter(|rs| rs.iter().any(|r| occurrences(r, g) > 0)).count();
    let vector = |s: &[u8], n: usize| -> BTreeMap<Seq, f64> {
        let mut v = BTreeMap::new();
        for g in grams(s, n) {
            let idf = (n_docs / df(g).max(1) as f64).ln();
            v.insert(g.to_vec(), occurrences(s, g) as f64 * idf);
        }
        v
    };
    let mut total = 0.0;
    for n in 1..=4 {
        let h = vector(hyp, n);
        let mut acc = 0.0;
        for r in refs {
            let rv = vector(r, n);
            let dot: f64 = h.iter().map(|(g, w)| w * rv.get(g).copied().unwrap_or(0.0)).sum();
            let nh = h.values().map(|w| w * w).sum::<f64>().sqrt();
            let nr = rv.values().map(|w| w * w).sum::<f64>().sqrt();
            acc += if nh > 0.0 && nr > 0.0 { dot / (nh * nr) } else { 0.0 };
        }
        total += acc / refs.len() as f64;
    }
    10.0 * total / 4.0
}

// ---- ROUGE-L ----

fn is_subsequence(sub: &[u8], s: &[u8]) -> bool {
    let mut it = s.iter();
    sub.iter().all(|x| it.any(|y| y == x))
}

fn oracle_lcs(a: &[u8], b: &[u8]) -> usize {
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let sub: Seq = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            is_subsequence(&sub, b).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

fn oracle_rouge(hyp: &[u8], refs: &[Seq]) -> f64 {
    let beta2 = 1.2f64 * 1.2;
    let mut best: f64 = 0.0;
    for r in refs {
        let l = oracle_lcs(hyp, r) as f64;
        if l == 0.0 {
            continue;
        }
        let p = l / hyp.len() as f64;
        let rc = l / r.len() as f64;
        best = best.max((1.0 + beta2) * p * rc / (rc + beta2 * p));
    }
    best
}

// ---- METEOR-lite ----

/// Every one-to-one assignment of hypothesis positions to equal reference
/// tokens (or to nothing); best = most matches, then fewest chunks.
fn oracle_alignment(hyp: &[u8], r: &[u8]) -> (usize, usize) {
    fn rec(i: usize, hyp: &[u8], r: &[u8], used: &mut Vec<bool>, map: &mut Vec<Option<usize>>, best: &mut (usize, usize)) {
        if i == hyp.len() {
            let pairs: Vec<(usize, usize)> = map.iter().enumerate().filter_map(|(h, m)| m.map(|j| (h, j))).collect();
            let m = pairs.len();
            let mut chunks = 0;
            for (k, &(h, j)) in pairs.iter().enumerate() {
                let continues = k > 0 && pairs[k - 1].0 + 1 == h && pairs[k - 1].1 + 1 == j;
                if !continues {
                    chunks += 1;
                }
            }
            if m > best.0 || (m == best.0 && chunks < best.1) {
                *best = (m, chunks);
            }
            return;
        }
        map.push(None);
        rec(i + 1, hyp, r, used, map, best);
        map.pop();
        for j in 0..r.len() {
            if !used[j] && r[j] == hyp[i] {
                used[j] = true;
                map.push(Some(j));
                rec(i + 1, hyp, r, used, map, best);
                map.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0, usize::MAX);
    rec(0, hyp, r, &mut vec![false; r.len()], &mut Vec::new(), &mut best);
    best
}

fn oracle_meteor(hyp: &[u8], refs: &[Seq]) -> f64 {
    let mut best: f64 = 0.0;
    for r in refs {
        if hyp.is_empty() || r.is_empty() {
            continue;
        }
        let (m, ch) = oracle_alignment(hyp, r);
        if m == 0 {
            continue;
        }
        let (m, ch) = (m as f64, ch as f64);
        let p = m / hyp.len() as f64;
        let rc = m / r.len() as f64;
        let f = 10.0 * p * rc / (rc + 9.0 * p);
        best = best.max(f * (1.0 - 0.5 * (ch / m).powi(3)));
    }
    best
}

fn close(a: f64, b: f64, what: &str) {
    assert!((a - b).abs() <= TOL, "{what}: implementation {a} vs oracle {b}");
}

pub fn sentence_metrics_every_pair() {
    let all = sequences(0..=4);
    for h in &all {
        for r in &all {
            let refs = vec![r.clone()];
            let ctx = format!("{h:?} | {r:?}");
            close(bleu4_sentence(h, &refs), oracle_bleu_sentence(h, &refs), &format!("sentence BLEU {ctx}"));
            close(rouge_l(h, &refs), oracle_rouge(h, &refs), &format!("ROUGE-L {ctx}"));
            close(meteor_lite(h, &refs), oracle_meteor(h, &refs), &format!("METEOR {ctx}"));
        }
    }
}

pub fn sentence_metrics_two_references() {
    let all = sequences(1..=3);
    let hyps = sequences(0..=4);
    for (i, r1) in all.iter().enumerate() {
        for r2 in &all[i..] {
            let refs = vec![r1.clone(), r2.clone()];
            for h in hyps.iter().step_by(7) {
                close(bleu4_sentence(h, &refs), oracle_bleu_sentence(h, &refs), "sentence BLEU");
                close(rouge_l(h, &refs), oracle_rouge(h, &refs), "ROUGE-L");
                close(meteor_lite(h, &refs), oracle_meteor(h, &refs), "METEOR");
            }
        }
    }
}

pub fn cider_every_three_video_corpus() {
    // ordered reference triples over captions of length 1..=2, every
    // hypothesis of length 0..=4 scored against the first video
    let refs = sequences(1..=2);
    let hyps = sequences(0..=4);
    for r0 in &refs {
        for r1 in &refs {
            for r2 in &refs {
                let corpus = vec![vec![r0.clone()], vec![r1.clone()], vec![r2.clone()]];
                let df = compute_df(&corpus);
                for h in &hyps {
                    close(cider(h, &corpus[0], &df), oracle_cider(h, &corpus[0], &corpus), "CIDEr");
                }
            }
        }
    }
}

pub fn cider_multi_reference_videos() {
    let seqs = sequences(1..=3);
    let hyps = sequences(1..=4);
    for (i, a) in seqs.iter().enumerate().step_by(3) {
        for b in seqs.iter().skip(i).step_by(5) {
            for c in seqs.iter().step_by(4) {
                let corpus = vec![vec![a.clone(), b.clone()], vec![c.clone()]];
                let df = compute_df(&corpus);
                for h in hyps.iter().step_by(3) {
                    close(cider(h, &corpus[0], &df), oracle_cider(h, &corpus[0], &corpus), "CIDEr");
                    close(cider(h, &corpus[1], &df), oracle_cider(h, &corpus[1], &corpus), "CIDEr");
                }
            }
        }
    }
}

pub fn corpus_bleu_every_two_video_corpus() {
    let s = sequences(1..=2);
    for h0 in &s {
        for h1 in &s {
            for r0 in &s {
                for r1 in &s {
                    let hyps = vec![h0.clone(), h1.clone()];
                    let refs = vec![vec![r0.clone()], vec![r1.clone()]];
                    close(bleu4_corpus(&hyps, &refs).unwrap(), oracle_bleu_corpus(&hyps, &refs), "corpus BLEU");
                }
            }
        }
    }
}

pub fn corpus_bleu_three_video_corpora() {
    let long = sequences(4..=4);
    let short = sequences(1..=2);
    // corpora with 4-token captions so every order can match
    for (i, h) in long.iter().enumerate() {
        let r0 = &long[(i * 7) % long.len()];
        for h1 in short.iter() {
            let hyps = vec![h.clone(), h1.clone(), long[(i + 5) % long.len()].clone()];
            let refs = vec![
                vec![r0.clone(), h.clone()],
                vec![short[(i + 1) % short.len()].clone()],
                vec![long[(i * 3 + 1) % long.len()].clone(), long[(i + 5) % long.len()].clone()],
            ];
            close(bleu4_corpus(&hyps, &refs).unwrap(), oracle_bleu_corpus(&hyps, &refs), "corpus BLEU");
        }
    }
}
