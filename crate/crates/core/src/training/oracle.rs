//! Word-level oracle selection: Gumbel-perturbed choice of the previous
//! word, mixed with ground truth under a decaying probability.

use ndarray::ArrayView1;
use rand::distributions::Open01;
use rand::Rng;

/// Gumbel noise `-ln(-ln u)` for `u` in (0, 1).
pub fn gumbel_noise(u: f64) -> crate::Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(crate::Error::invalid(format!("gumbel input {u} outside (0, 1)")));
    }
    Ok(-(-u.ln()).ln())
}

pub(crate) fn sample_gumbel(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.sample(Open01);
    -(-u.ln()).ln()
}

/// `argmax_k(logits_k / τ + noise_k)`.
pub fn oracle_select_with_noise(logits: ArrayView1<f64>, tau: f64, noise: &[f64]) -> u32 {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, (&o, &eta)) in logits.iter().zip(noise).enumerate() {
        let v = o / tau + eta;
        if v > best_v {
            best_v = v;
            best = k;
        }
    }
    best as u32
}

/// Gumbel-Max draw from `softmax(logits / τ)`.
pub fn oracle_select(logits: ArrayView1<f64>, tau: f64, rng: &mut impl Rng) -> u32 {
    assert!(tau > 0.0, "temperature must be positive");
    let noise: Vec<f64> = (0..logits.len()).map(|_| sample_gumbel(rng)).collect();
    oracle_select_with_noise(logits, tau, &noise)
}

/// Probability of feeding the ground-truth word at oracle epoch `epoch`:
/// `μ / (μ + exp(epoch / μ))`.
pub fn teacher_force_prob(epoch: usize, mu: f64) -> f64 {
    mu / (mu + (epoch as f64 / mu).exp())
}
