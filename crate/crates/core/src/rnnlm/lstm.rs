//! Batched LSTM forward pass and exact backward pass over a truncated window.
//!
//! Time-major layout throughout: row `t * batch + b` of every `(T*B) x K`
//! matrix belongs to step `t` of stream `b`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Axis};

use super::params::{CellActivation, RnnlmParams};
use crate::error::{Error, Result};
use crate::lm::CharDistribution;

/// Per-layer hidden and cell state, one row per stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<Array2<f64>>,
    pub c: Vec<Array2<f64>>,
}

impl LstmState {
    pub fn zeros(layers: usize, batch: usize, hidden: usize) -> LstmState {
        LstmState {
            h: vec![Array2::zeros((batch, hidden)); layers],
            c: vec![Array2::zeros((batch, hidden)); layers],
        }
    }

    pub fn for_params(params: &RnnlmParams, batch: usize) -> LstmState {
        LstmState::zeros(params.layers.len(), batch, params.hidden_dim())
    }

    pub fn batch(&self) -> usize {
        self.h.first().map_or(0, |h| h.nrows())
    }
}

struct LayerCache {
    /// Layer input (after the previous layer's dropout).
    x_in: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// Activated gates `[i, f, o, g]`.
    gates: Array2<f64>,
    /// `act(c)`
    act_c: Array2<f64>,
    mask: Option<Array2<f64>>,
}

/// Everything the backward pass needs from a forward pass.
pub struct ForwardCache {
    steps: usize,
    batch: usize,
    activation: CellActivation,
    inputs: Vec<usize>,
    layers: Vec<LayerCache>,
    /// Top layer output after dropout, `(T*B) x H`.
    top: Array2<f64>,
    /// Softmax outputs, `(T*B) x V`.
    pub probs: Array2<f64>,
}

impl ForwardCache {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Hidden output `h_t` of `layer` before dropout, `(T*B) x H`.
    pub fn hidden(&self, layer: usize) -> Array2<f64> {
        let cache = &self.layers[layer];
        let hidden = cache.act_c.ncols();
        &cache.gates.slice(s![.., 2 * hidden..3 * hidden]) * &cache.act_c
    }

    /// Activated gates `[i, f, o, g]` of `layer`, `(T*B) x 4H`.
    pub fn gates(&self, layer: usize) -> ArrayView2<'_, f64> {
        self.layers[layer].gates.view()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn cell_act(activation: CellActivation, x: f64) -> f64 {
    match activation {
        CellActivation::Tanh => x.tanh(),
        CellActivation::Sigmoid => sigmoid(x),
    }
}

fn cell_act_grad(activation: CellActivation, a: f64) -> f64 {
    match activation {
        CellActivation::Tanh => 1.0 - a * a,
        CellActivation::Sigmoid => a * (1.0 - a),
    }
}

/// Run `inputs.len() / batch` steps for `batch` parallel streams.
///
/// `masks`, when given, holds one `(T*B) x H` inverted-dropout mask per
/// layer, applied to that layer's output.
pub fn forward_window(
    params: &RnnlmParams,
    activation: CellActivation,
    init: &LstmState,
    inputs: &[usize],
    batch: usize,
    masks: Option<&[Array2<f64>]>,
) -> Result<(ForwardCache, LstmState)> {
    let hidden = params.hidden_dim();
    let vocab = params.vocab_size();
    if batch == 0 || inputs.len() % batch != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} inputs do not divide into {batch} streams",
            inputs.len()
        )));
    }
    if init.batch() != batch || init.h.len() != params.layers.len() {
        return Err(Error::InvalidParameter("state shape does not match the window".into()));
    }
    if let Some(&bad) = inputs.iter().find(|&&s| s >= vocab) {
        return Err(Error::InvalidParameter(format!("symbol {bad} outside vocabulary")));
    }
    let steps = inputs.len() / batch;
    let rows = inputs.len();

    let mut x = Array2::zeros((rows, params.embedding_dim()));
    for (r, &symbol) in inputs.iter().enumerate() {
        x.row_mut(r).assign(&params.embedding.row(symbol));
    }

    let mut layers = Vec::with_capacity(params.layers.len());
    let mut final_state = init.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        let mut pre = Array2::zeros((rows, 4 * hidden));
        general_mat_mul(1.0, &x, &layer.w_ih, 0.0, &mut pre);
        pre += &layer.bias;

        let mut gates = Array2::zeros((rows, 4 * hidden));
        let mut h_prev_all = Array2::zeros((rows, hidden));
        let mut c_prev_all = Array2::zeros((rows, hidden));
        let mut act_all = Array2::zeros((rows, hidden));
        let mut out = Array2::zeros((rows, hidden));

        let mut h = init.h[l].clone();
        let mut c = init.c[l].clone();
        let mut z = Array2::zeros((batch, 4 * hidden));
        for t in 0..steps {
            let block = t * batch..(t + 1) * batch;
            z.assign(&pre.slice(s![block.clone(), ..]));
            general_mat_mul(1.0, &h, &layer.w_hh, 1.0, &mut z);
            h_prev_all.slice_mut(s![block.clone(), ..]).assign(&h);
            c_prev_all.slice_mut(s![block.clone(), ..]).assign(&c);

            let zs = z.as_slice().expect("standard layout");
            let cs = c.as_slice_mut().expect("standard layout");
            let hs = h.as_slice_mut().expect("standard layout");
            let row0 = block.start;
            for b in 0..batch {
                let zr = &zs[b * 4 * hidden..(b + 1) * 4 * hidden];
                let r = row0 + b;
                let mut g_row = gates.row_mut(r);
                let gr = g_row.as_slice_mut().expect("standard layout");
                for j in 0..hidden {
                    let i_g = sigmoid(zr[j]);
                    let f_g = sigmoid(zr[hidden + j]);
                    let o_g = sigmoid(zr[2 * hidden + j]);
                    let g_g = zr[3 * hidden + j].tanh();
                    gr[j] = i_g;
                    gr[hidden + j] = f_g;
                    gr[2 * hidden + j] = o_g;
                    gr[3 * hidden + j] = g_g;
                    let c_new = f_g * cs[b * hidden + j] + i_g * g_g;
                    let a = cell_act(activation, c_new);
                    cs[b * hidden + j] = c_new;
                    hs[b * hidden + j] = o_g * a;
                    act_all[[r, j]] = a;
                }
            }
            out.slice_mut(s![block, ..]).assign(&h);
        }
        if !h.iter().all(|v| v.is_finite()) || !c.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite LSTM activation in layer {l} over a {steps}-step window"
            )));
        }
        final_state.h[l] = h;
        final_state.c[l] = c;

        let mask = masks.map(|m| m[l].clone());
        if let Some(mask) = &mask {
            out *= mask;
        }
        layers.push(LayerCache {
            x_in: x,
            h_prev: h_prev_all,
            c_prev: c_prev_all,
            gates,
            act_c: act_all,
            mask,
        });
        x = out;
    }

    let mut probs = Array2::zeros((rows, vocab));
    general_mat_mul(1.0, &x, &params.w_out, 0.0, &mut probs);
    probs += &params.b_out;
    for mut row in probs.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row /= total;
    }
    if !probs.iter().all(|p| p.is_finite()) {
        return Err(Error::Numeric("non-finite output distribution".into()));
    }

    Ok((
        ForwardCache {
            steps,
            batch,
            activation,
            inputs: inputs.to_vec(),
            layers,
            top: x,
            probs,
        },
        final_state,
    ))
}

/// Summed negative log-likelihood and the number of scored targets.
/// `None` targets are not scored.
pub fn window_nll(cache: &ForwardCache, targets: &[Option<usize>]) -> (f64, usize) {
    let mut total = 0.0;
    let mut count = 0;
    for (r, target) in targets.iter().enumerate() {
        if let Some(t) = *target {
            total -= cache.probs[[r, t]].ln();
            count += 1;
        }
    }
    (total, count)
}

/// Gradients of the mean cross-entropy over the scored targets with respect
/// to every parameter. The initial state is treated as a constant.
pub fn backward_window(params: &RnnlmParams, cache: &ForwardCache, targets: &[Option<usize>]) -> RnnlmParams {
    let mut grads = params.zeros_like();
    let rows = cache.steps * cache.batch;
    let count = targets.iter().filter(|t| t.is_some()).count();
    if rows == 0 || count == 0 {
        return grads;
    }
    assert_eq!(targets.len(), rows, "one target slot per input");
    let hidden = params.hidden_dim();
    let batch = cache.batch;
    let scale = 1.0 / count as f64;

    let mut dlogits = cache.probs.clone();
    for (r, target) in targets.iter().enumerate() {
        let mut row = dlogits.row_mut(r);
        match *target {
            Some(t) => {
                row[t] -= 1.0;
                row *= scale;
            }
            None => row.fill(0.0),
        }
    }
    general_mat_mul(1.0, &cache.top.t(), &dlogits, 0.0, &mut grads.w_out);
    grads.b_out = dlogits.sum_axis(Axis(0));
    let mut dy = Array2::zeros((rows, hidden));
    general_mat_mul(1.0, &dlogits, &params.w_out.t(), 0.0, &mut dy);

    for (l, layer) in params.layers.iter().enumerate().rev() {
        let lc = &cache.layers[l];
        if let Some(mask) = &lc.mask {
            dy *= mask;
        }
        let mut dz = Array2::zeros((rows, 4 * hidden));
        let mut dh_next: Array2<f64> = Array2::zeros((batch, hidden));
        let mut dc_next: Array2<f64> = Array2::zeros((batch, hidden));
        for t in (0..cache.steps).rev() {
            let row0 = t * batch;
            {
                let dhn = dh_next.as_slice().expect("standard layout");
                let dcn = dc_next.as_slice_mut().expect("standard layout");
                for b in 0..batch {
                    let r = row0 + b;
                    let g = lc.gates.row(r);
                    let mut dz_row = dz.row_mut(r);
                    for j in 0..hidden {
                        let (i_g, f_g, o_g, g_g) = (g[j], g[hidden + j], g[2 * hidden + j], g[3 * hidden + j]);
                        let a = lc.act_c[[r, j]];
                        let dh = dy[[r, j]] + dhn[b * hidden + j];
                        let d_o = dh * a;
                        let dc = dcn[b * hidden + j] + dh * o_g * cell_act_grad(cache.activation, a);
                        let d_i = dc * g_g;
                        let d_g = dc * i_g;
                        let d_f = dc * lc.c_prev[[r, j]];
                        dcn[b * hidden + j] = dc * f_g;
                        dz_row[j] = d_i * i_g * (1.0 - i_g);
                        dz_row[hidden + j] = d_f * f_g * (1.0 - f_g);
                        dz_row[2 * hidden + j] = d_o * o_g * (1.0 - o_g);
                        dz_row[3 * hidden + j] = d_g * (1.0 - g_g * g_g);
                    }
                }
            }
            let dz_t = dz.slice(s![row0..row0 + batch, ..]);
            general_mat_mul(1.0, &dz_t, &layer.w_hh.t(), 0.0, &mut dh_next);
        }
        let lg = &mut grads.layers[l];
        general_mat_mul(1.0, &lc.x_in.t(), &dz, 0.0, &mut lg.w_ih);
        general_mat_mul(1.0, &lc.h_prev.t(), &dz, 0.0, &mut lg.w_hh);
        lg.bias = dz.sum_axis(Axis(0));
        let mut dx = Array2::zeros((rows, layer.w_ih.nrows()));
        general_mat_mul(1.0, &dz, &layer.w_ih.t(), 0.0, &mut dx);
        dy = dx;
    }

    for (r, &symbol) in cache.inputs.iter().enumerate() {
        let mut row = grads.embedding.row_mut(symbol);
        row += &dy.row(r);
    }
    grads
}

/// One step for a single stream (`state` has one row per layer).
pub fn forward_step(
    params: &RnnlmParams,
    activation: CellActivation,
    state: &LstmState,
    input: usize,
    masks: Option<&[Array2<f64>]>,
) -> Result<(CharDistribution, LstmState)> {
    let (cache, next) = forward_window(params, activation, state, &[input], 1, masks)?;
    let probs = cache.probs.row(0).to_vec();
    Ok((CharDistribution { probs }, next))
}
