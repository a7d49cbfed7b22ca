use ndarray::Array2;
use rand::Rng;
use styloforge::rnnlm::{
    backward_window, forward_window, init_params, window_nll, Architecture, CellActivation, LstmState, RnnlmParams,
};
use styloforge::seeding::rng;

pub const EPS: f64 = 1e-5;

pub struct Case {
    params: RnnlmParams,
    activation: CellActivation,
    init: LstmState,
    inputs: Vec<usize>,
    targets: Vec<Option<usize>>,
    batch: usize,
    masks: Option<Vec<Array2<f64>>>,
}

impl Case {
    pub fn new(activation: CellActivation, batch: usize, with_masks: bool, seed: u64) -> Case {
        let arch = Architecture {
            embedding_dim: 4,
            hidden_dim: 5,
            layers: 2,
            cell_activation: activation,
        };
        let mut r = rng(seed);
        let mut params = init_params(7, &arch, &mut r).unwrap();
        // Move biases away from zero so every path carries gradient.
        for layer in &mut params.layers {
            layer.bias.mapv_inplace(|b| b + r.random_range(-0.5..0.5));
        }
        params.b_out.mapv_inplace(|_| r.random_range(-0.5..0.5));
        let steps = 12;
        let inputs: Vec<usize> = (0..steps * batch).map(|_| r.random_range(0..7)).collect();
        let targets = (0..steps * batch)
            .map(|i| (i % 5 != 3).then(|| r.random_range(0..7)))
            .collect();
        let mut init = LstmState::zeros(2, batch, 5);
        for m in init.h.iter_mut().chain(init.c.iter_mut()) {
            m.mapv_inplace(|_| r.random_range(-0.5..0.5));
        }
        let masks = with_masks.then(|| {
            (0..2)
                .map(|_| Array2::from_shape_simple_fn((steps * batch, 5), || if r.random::<f64>() < 0.3 { 0.0 } else { 1.0 / 0.7 }))
                .collect()
        });
        Case {
            params,
            activation,
            init,
            inputs,
            targets,
            batch,
            masks,
        }
    }

    fn loss(&self, params: &RnnlmParams) -> f64 {
        let (cache, _) = forward_window(
            params,
            self.activation,
            &self.init,
            &self.inputs,
            self.batch,
            self.masks.as_deref(),
        )
        .unwrap();
        let (sum, count) = window_nll(&cache, &self.targets);
        sum / count as f64
    }

    pub fn max_relative_error(&self) -> f64 {
        let (cache, _) = forward_window(
            &self.params,
            self.activation,
            &self.init,
            &self.inputs,
            self.batch,
            self.masks.as_deref(),
        )
        .unwrap();
        let grads = backward_window(&self.params, &cache, &self.targets);
        let analytic: Vec<f64> = grads.slices().iter().flat_map(|s| s.iter().copied()).collect();

        let mut worst: f64 = 0.0;
        let mut index = 0;
        let n_tensors = self.params.slices().len();
        for t in 0..n_tensors {
            let len = self.params.slices()[t].len();
            for k in 0..len {
                let mut plus = self.params.clone();
                plus.slices_mut()[t][k] += EPS;
                let mut minus = self.params.clone();
                minus.slices_mut()[t][k] -= EPS;
                let numeric = (self.loss(&plus) - self.loss(&minus)) / (2.0 * EPS);
                let a = analytic[index];
                let denom = a.abs().max(numeric.abs()).max(1e-7);
                worst = worst.max((a - numeric).abs() / denom);
                index += 1;
            }
        }
        worst
    }
}

