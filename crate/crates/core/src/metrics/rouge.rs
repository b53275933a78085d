pub const ROUGE_BETA: f64 = 1.2;

pub(crate) fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure (beta = 1.2), maximized over references.
pub fn rouge_l<T: PartialEq>(hyp: &[T], refs: &[Vec<T>]) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let beta2 = ROUGE_BETA * ROUGE_BETA;
    refs.iter()
        .filter(|r| !r.is_empty())
        .map(|r| {
            let lcs = lcs_len(hyp, r) as f64;
            if lcs == 0.0 {
                return 0.0;
            }
            let p = lcs / hyp.len() as f64;
            let rec = lcs / r.len() as f64;
            (1.0 + beta2) * p * rec / (rec + beta2 * p)
        })
        .fold(0.0, f64::max)
}
