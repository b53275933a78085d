use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::lstm::add_outer;
use super::params::AttentionParams;

pub(crate) fn softmax(x: ArrayView1<f64>) -> Array1<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = x.mapv(|v| (v - m).exp());
    let z = e.sum();
    e / z
}

pub(crate) fn log_softmax(x: ArrayView1<f64>) -> Array1<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    x.mapv(|v| v - lse)
}

/// `w_ctx · ctx_t` for every row, computed once per video.
pub(crate) fn keys(p: &AttentionParams, ctx: ArrayView2<f64>) -> Array2<f64> {
    ctx.dot(&p.w_ctx.t())
}

#[derive(Debug, Clone)]
pub(crate) struct AttnCache {
    pub query: Array1<f64>,
    pub weights: Array1<f64>,
    /// `tanh(keys_t + w_query·query)`, T×d_attn.
    pub hidden: Array2<f64>,
}

pub(crate) fn forward(
    p: &AttentionParams,
    query: ArrayView1<f64>,
    ctx: ArrayView2<f64>,
    keys: ArrayView2<f64>,
) -> (Array1<f64>, AttnCache) {
    let q = p.w_query.dot(&query);
    let mut hidden = keys.to_owned();
    hidden += &q.view().insert_axis(Axis(0));
    hidden.mapv_inplace(f64::tanh);
    let scores = hidden.dot(&p.v);
    let weights = softmax(scores.view());
    let context = ctx.t().dot(&weights);
    (
        context,
        AttnCache {
            query: query.to_owned(),
            weights,
            hidden,
        },
    )
}

/// Backward of [`forward`]. Context and key gradients are accumulated into
/// `d_ctx`/`d_keys`; the query gradient is returned.
pub(crate) fn backward(
    p: &AttentionParams,
    cache: &AttnCache,
    ctx: ArrayView2<f64>,
    d_context: ArrayView1<f64>,
    grad: &mut AttentionParams,
    d_ctx: &mut Array2<f64>,
    d_keys: &mut Array2<f64>,
) -> Array1<f64> {
    let a = &cache.weights;
    let d_weights = ctx.dot(&d_context);
    add_outer(d_ctx, a.view(), d_context);
    let mean = a.dot(&d_weights);
    let d_scores = a * &(d_weights - mean);
    grad.v += &cache.hidden.t().dot(&d_scores);
    let d_pre = Array2::from_shape_fn(cache.hidden.dim(), |(t, k)| {
        let u = cache.hidden[[t, k]];
        d_scores[t] * p.v[k] * (1.0 - u * u)
    });
    *d_keys += &d_pre;
    let dq = d_pre.sum_axis(Axis(0));
    add_outer(&mut grad.w_query, dq.view(), cache.query.view());
    p.w_query.t().dot(&dq)
}

/// Folds accumulated key gradients into `w_ctx` and the context rows.
pub(crate) fn backward_keys(
    p: &AttentionParams,
    ctx: ArrayView2<f64>,
    d_keys: &Array2<f64>,
    grad: &mut AttentionParams,
    d_ctx: &mut Array2<f64>,
) {
    ndarray::linalg::general_mat_mul(1.0, &d_keys.t(), &ctx, 1.0, &mut grad.w_ctx);
    ndarray::linalg::general_mat_mul(1.0, d_keys, &p.w_ctx, 1.0, d_ctx);
}

/// Soft attention over `contexts` (T×d): returns the weights and the
/// weighted context vector.
pub fn attend(
    query: ArrayView1<f64>,
    contexts: ArrayView2<f64>,
    params: &AttentionParams,
) -> crate::Result<(Array1<f64>, Array1<f64>)> {
    if contexts.nrows() == 0 {
        return Err(crate::Error::invalid("attention over zero positions"));
    }
    if params.w_ctx.ncols() != contexts.ncols() || params.w_query.ncols() != query.len() {
        return Err(crate::Error::invalid(format!(
            "attention shapes: w_ctx {:?}, w_query {:?}, contexts {:?}, query {}",
            params.w_ctx.dim(),
            params.w_query.dim(),
            contexts.dim(),
            query.len()
        )));
    }
    let k = keys(params, contexts);
    let (context, cache) = forward(params, query, contexts, k.view());
    Ok((cache.weights, context))
}
