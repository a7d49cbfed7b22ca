use std::collections::VecDeque;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonlinearity applied to the memory cell before the output gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellActivation {
    #[default]
    Tanh,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub cell_activation: CellActivation,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            embedding_dim: 24,
            hidden_dim: 200,
            layers: 2,
            cell_activation: CellActivation::Tanh,
        }
    }
}

/// Weights of one LSTM layer. Gate blocks are laid out along the column
/// axis in the order input, forget, output, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `input_dim x 4H`
    pub w_ih: Array2<f64>,
    /// `H x 4H`
    pub w_hh: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

/// All trainable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnlmParams {
    /// `V x M`: row `s` is the embedding of symbol `s`.
    pub embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    /// `H x V`
    pub w_out: Array2<f64>,
    /// `V`
    pub b_out: Array1<f64>,
}

impl RnnlmParams {
    pub fn zeros(vocab_size: usize, arch: &Architecture) -> RnnlmParams {
        let h = arch.hidden_dim;
        let layers = (0..arch.layers)
            .map(|l| {
                let input = if l == 0 { arch.embedding_dim } else { h };
                LayerParams {
                    w_ih: Array2::zeros((input, 4 * h)),
                    w_hh: Array2::zeros((h, 4 * h)),
                    bias: Array1::zeros(4 * h),
                }
            })
            .collect();
        RnnlmParams {
            embedding: Array2::zeros((vocab_size, arch.embedding_dim)),
            layers,
            w_out: Array2::zeros((h, vocab_size)),
            b_out: Array1::zeros(vocab_size),
        }
    }

    pub fn zeros_like(&self) -> RnnlmParams {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.nrows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_out.nrows()
    }

    /// Tensor names and shapes in canonical order.
    pub fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = vec![("embedding".to_string(), self.embedding.shape().to_vec())];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.w_ih"), layer.w_ih.shape().to_vec()));
            out.push((format!("layer{l}.w_hh"), layer.w_hh.shape().to_vec()));
            out.push((format!("layer{l}.bias"), layer.bias.shape().to_vec()));
        }
        out.push(("w_out".to_string(), self.w_out.shape().to_vec()));
        out.push(("b_out".to_string(), self.b_out.shape().to_vec()));
        out
    }

    /// Flat views of every tensor, in the same order as [`layout`](Self::layout).
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embedding.as_slice().expect("standard layout")];
        for layer in &self.layers {
            out.push(layer.w_ih.as_slice().expect("standard layout"));
            out.push(layer.w_hh.as_slice().expect("standard layout"));
            out.push(layer.bias.as_slice().expect("standard layout"));
        }
        out.push(self.w_out.as_slice().expect("standard layout"));
        out.push(self.b_out.as_slice().expect("standard layout"));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for layer in &mut self.layers {
            out.push(layer.w_ih.as_slice_mut().expect("standard layout"));
            out.push(layer.w_hh.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.w_out.as_slice_mut().expect("standard layout"));
        out.push(self.b_out.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn fill(&mut self, value: f64) {
        for slice in self.slices_mut() {
            slice.fill(value);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Rebuild from named tensors as produced by [`layout`](Self::layout) and
    /// [`slices`](Self::slices).
    pub fn from_tensors(tensors: Vec<(String, Vec<usize>, Vec<f64>)>) -> Result<RnnlmParams> {
        if tensors.len() < 6 || (tensors.len() - 3) % 3 != 0 {
            return Err(tensor_error(format!("unexpected tensor count {}", tensors.len())));
        }
        let n_layers = (tensors.len() - 3) / 3;
        let mut queue: VecDeque<_> = tensors.into();
        let embedding = take_matrix(&mut queue, "embedding")?;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            layers.push(LayerParams {
                w_ih: take_matrix(&mut queue, &format!("layer{l}.w_ih"))?,
                w_hh: take_matrix(&mut queue, &format!("layer{l}.w_hh"))?,
                bias: take_vector(&mut queue, &format!("layer{l}.bias"))?,
            });
        }
        let w_out = take_matrix(&mut queue, "w_out")?;
        let b_out = take_vector(&mut queue, "b_out")?;
        let params = RnnlmParams {
            embedding,
            layers,
            w_out,
            b_out,
        };
        params.check_shapes()?;
        Ok(params)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let v = self.vocab_size();
        let h = self.hidden_dim();
        let mut input = self.embedding_dim();
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.w_ih.dim() != (input, 4 * h) || layer.w_hh.dim() != (h, 4 * h) || layer.bias.len() != 4 * h {
                return Err(Error::InvalidParameter(format!("layer {l} has inconsistent shapes")));
            }
            input = h;
        }
        if self.layers.is_empty() || self.w_out.ncols() != v || self.b_out.len() != v {
            return Err(Error::InvalidParameter("output projection has inconsistent shapes".into()));
        }
        Ok(())
    }
}

/// Uniform(-a, a) with `a = 1/sqrt(fan_in)` per matrix, zero biases except
/// the forget-gate block, which starts at 1.
pub fn init_params<R: Rng + ?Sized>(vocab_size: usize, arch: &Architecture, rng: &mut R) -> Result<RnnlmParams> {
    if vocab_size < 2 {
        return Err(Error::InvalidParameter("vocabulary needs at least two symbols".into()));
    }
    if arch.embedding_dim == 0 || arch.hidden_dim == 0 || arch.layers == 0 {
        return Err(Error::InvalidParameter("architecture dimensions must be positive".into()));
    }
    let mut params = RnnlmParams::zeros(vocab_size, arch);
    let mut fill = |m: &mut Array2<f64>, fan_in: usize| {
        let a = 1.0 / (fan_in as f64).sqrt();
        m.mapv_inplace(|_| rng.random_range(-a..a));
    };
    fill(&mut params.embedding, vocab_size);
    let h = arch.hidden_dim;
    for layer in &mut params.layers {
        let fan_in = layer.w_ih.nrows();
        fill(&mut layer.w_ih, fan_in);
        fill(&mut layer.w_hh, h);
        layer.bias.slice_mut(ndarray::s![h..2 * h]).fill(1.0);
    }
    fill(&mut params.w_out, h);
    Ok(params)
}

type NamedTensor = (String, Vec<usize>, Vec<f64>);

fn tensor_error(message: String) -> Error {
    Error::InvalidParameter(format!("checkpoint tensors: {message}"))
}

fn take_matrix(queue: &mut VecDeque<NamedTensor>, name: &str) -> Result<Array2<f64>> {
    let (found, shape, data) = queue
        .pop_front()
        .ok_or_else(|| tensor_error(format!("missing {name}")))?;
    if found != name || shape.len() != 2 {
        return Err(tensor_error(format!("expected matrix {name}, found {found} {shape:?}")));
    }
    Array2::from_shape_vec((shape[0], shape[1]), data).map_err(|e| tensor_error(e.to_string()))
}

fn take_vector(queue: &mut VecDeque<NamedTensor>, name: &str) -> Result<Array1<f64>> {
    let (found, shape, data) = queue
        .pop_front()
        .ok_or_else(|| tensor_error(format!("missing {name}")))?;
    if found != name || shape.len() != 1 || shape[0] != data.len() {
        return Err(tensor_error(format!("expected vector {name}, found {found} {shape:?}")));
    }
    Ok(Array1::from(data))
}
