use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, ArrayView1, Axis};

use super::params::LstmParams;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `acc += a ⊗ b`.
pub(crate) fn add_outer(acc: &mut ndarray::Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) {
    general_mat_mul(1.0, &a.insert_axis(Axis(1)), &b.insert_axis(Axis(0)), 1.0, acc);
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    /// `[x; h_prev]`
    pub xh: Array1<f64>,
    pub c_prev: Array1<f64>,
    /// Post-activation gates `[i; f; g; o]`.
    pub gates: Array1<f64>,
    pub tanh_c: Array1<f64>,
}

pub(crate) fn concat(parts: &[ArrayView1<f64>]) -> Array1<f64> {
    let mut out = Array1::zeros(parts.iter().map(|p| p.len()).sum::<usize>());
    let mut off = 0;
    for p in parts {
        out.slice_mut(s![off..off + p.len()]).assign(p);
        off += p.len();
    }
    out
}

/// One step. Returns `(h', c', cache)`.
pub(crate) fn forward(
    p: &LstmParams,
    x: ArrayView1<f64>,
    h: ArrayView1<f64>,
    c: ArrayView1<f64>,
) -> (Array1<f64>, Array1<f64>, LstmCache) {
    let hd = p.hidden();
    let xh = concat(&[x.view(), h.view()]);
    let mut gates = p.w.dot(&xh) + &p.b;
    for (k, z) in gates.iter_mut().enumerate() {
        *z = if (2 * hd..3 * hd).contains(&k) { z.tanh() } else { sigmoid(*z) };
    }
    let (i, f, g, o) = (
        gates.slice(s![..hd]),
        gates.slice(s![hd..2 * hd]),
        gates.slice(s![2 * hd..3 * hd]),
        gates.slice(s![3 * hd..]),
    );
    let c_new = &f * &c + &i * &g;
    let tanh_c = c_new.mapv(f64::tanh);
    let h_new = &o * &tanh_c;
    let cache = LstmCache {
        xh,
        c_prev: c.to_owned(),
        gates,
        tanh_c,
    };
    (h_new, c_new, cache)
}

/// Backward of [`forward`] given gradients on `h'` and `c'`. Accumulates
/// into `grad` and returns `(dx, dh_prev, dc_prev)`.
pub(crate) fn backward(
    p: &LstmParams,
    cache: &LstmCache,
    dh: ArrayView1<f64>,
    dc: ArrayView1<f64>,
    grad: &mut LstmParams,
) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let hd = p.hidden();
    let g = &cache.gates;
    let mut dz = Array1::zeros(4 * hd);
    let mut dc_prev = Array1::zeros(hd);
    for k in 0..hd {
        let (i, f, gg, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
        let tc = cache.tanh_c[k];
        let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
        dz[k] = dct * gg * i * (1.0 - i);
        dz[hd + k] = dct * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * hd + k] = dct * i * (1.0 - gg * gg);
        dz[3 * hd + k] = dh[k] * tc * o * (1.0 - o);
        dc_prev[k] = dct * f;
    }
    add_outer(&mut grad.w, dz.view(), cache.xh.view());
    grad.b += &dz;
    let dxh = p.w.t().dot(&dz);
    let n_in = p.input();
    (dxh.slice(s![..n_in]).to_owned(), dxh.slice(s![n_in..]).to_owned(), dc_prev)
}

/// Standard LSTM cell: `i,f,o = σ(W[x;h]+b)`, `g = tanh(W[x;h]+b)`,
/// `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`.
pub fn lstm_cell(
    x: ArrayView1<f64>,
    h: ArrayView1<f64>,
    c: ArrayView1<f64>,
    params: &LstmParams,
) -> crate::Result<(Array1<f64>, Array1<f64>)> {
    let hd = params.hidden();
    if !params.b.len().is_multiple_of(4)
        || params.w.nrows() != 4 * hd
        || x.len() != params.input()
        || h.len() != hd
        || c.len() != hd
    {
        return Err(crate::Error::invalid(format!(
            "lstm shapes: w {:?}, x {}, h {}, c {}",
            params.w.dim(),
            x.len(),
            h.len(),
            c.len()
        )));
    }
    let (h2, c2, _) = forward(params, x, h, c);
    Ok((h2, c2))
}
