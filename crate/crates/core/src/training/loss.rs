use ndarray::{Array1, ArrayView1};

use crate::model::{log_softmax, softmax};

/// Mean token cross-entropy over positions where `pad_mask` is false.
pub fn xe_loss(step_logits: &[Array1<f64>], target_ids: &[u32], pad_mask: &[bool]) -> crate::Result<f64> {
    if step_logits.len() != target_ids.len() || target_ids.len() != pad_mask.len() {
        return Err(crate::Error::invalid(format!(
            "{} logit steps, {} targets, {} mask entries",
            step_logits.len(),
            target_ids.len(),
            pad_mask.len()
        )));
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for ((logits, &target), &pad) in step_logits.iter().zip(target_ids).zip(pad_mask) {
        if pad {
            continue;
        }
        if target as usize >= logits.len() {
            return Err(crate::Error::invalid(format!("target {target} outside vocabulary")));
        }
        total -= log_softmax(logits.view())[target as usize];
        n += 1;
    }
    if n == 0 {
        return Err(crate::Error::invalid("every position is masked"));
    }
    Ok(total / n as f64)
}

/// `-log p(target)` and its gradient `scale·(softmax − onehot)`.
pub(crate) fn token_xe(logits: ArrayView1<f64>, target: u32, scale: f64) -> (f64, Array1<f64>) {
    let nll = -log_softmax(logits)[target as usize];
    let mut g = softmax(logits);
    g[target as usize] -= 1.0;
    g *= scale;
    (nll, g)
}
