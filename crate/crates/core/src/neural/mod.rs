//! Small fully connected Q-network trained with plain SGD.
//!
//! Hidden layers use a rectifier, the output layer is affine. Only the output
//! of the action taken contributes to the loss.

mod io;

use rand::Rng;
use thiserror::Error;

pub use io::{read_model, write_model, MODEL_MAGIC, MODEL_VERSION};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("input has {got} values, network expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch arrays disagree in length: {inputs} inputs, {actions} actions, {targets} targets")]
    BatchLength {
        inputs: usize,
        actions: usize,
        targets: usize,
    },
    #[error("action {action} out of range for {outputs} outputs")]
    Action { action: usize, outputs: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("architecture mismatch: {0:?} vs {1:?}")]
    Architecture(Vec<usize>, Vec<usize>),
    #[error("need at least input and output sizes, all positive: {0:?}")]
    Sizes(Vec<usize>),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// `outputs × inputs`, row-major.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Dense>,
}

/// Loss gradient, laid out like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    /// All partial derivatives in parameter order.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

fn check_sizes(sizes: &[usize]) -> Result<(), NeuralError> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(NeuralError::Sizes(sizes.to_vec()));
    }
    Ok(())
}

impl Mlp {
    /// All-zero parameters.
    pub fn zeros(sizes: &[usize]) -> Result<Self, NeuralError> {
        check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| Dense {
                inputs: w[0],
                outputs: w[1],
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
            })
            .collect();
        Ok(Mlp {
            sizes: sizes.to_vec(),
            layers,
        })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, NeuralError> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Parameters in declaration order: per layer, weights row-major then biases.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<(), NeuralError> {
        if values.len() != self.param_count() {
            return Err(NeuralError::Format(format!(
                "{} parameters for a network with {}",
                values.len(),
                self.param_count()
            )));
        }
        for (p, v) in self.params_mut().zip(values) {
            *p = *v;
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NeuralError> {
        if input.len() != self.input_dim() {
            return Err(NeuralError::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        if !input.iter().all(|x| x.is_finite()) {
            return Err(NeuralError::NonFinite("input"));
        }
        Ok(())
    }

    /// Activations of every layer, input included.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.affine(acts.last().unwrap(), &mut out);
            if i < last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.check_input(input)?;
        Ok(self.activations(input).pop().unwrap())
    }

    fn check_batch(
        &self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(), NeuralError> {
        if inputs.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        if inputs.len() != actions.len() || inputs.len() != targets.len() {
            return Err(NeuralError::BatchLength {
                inputs: inputs.len(),
                actions: actions.len(),
                targets: targets.len(),
            });
        }
        if !targets.iter().all(|t| t.is_finite()) {
            return Err(NeuralError::NonFinite("target"));
        }
        if let Some(&action) = actions.iter().find(|&&a| a >= self.output_dim()) {
            return Err(NeuralError::Action {
                action,
                outputs: self.output_dim(),
            });
        }
        inputs.iter().try_for_each(|x| self.check_input(x))
    }

    /// Mean over the batch of `(Q(x)[a] − y)²`.
    pub fn loss(
        &self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<f64, NeuralError> {
        self.check_batch(inputs, actions, targets)?;
        let sum: f64 = inputs
            .iter()
            .zip(actions)
            .zip(targets)
            .map(|((x, &a), y)| {
                let q = self.activations(x).pop().unwrap();
                (q[a] - y).powi(2)
            })
            .sum();
        Ok(sum / inputs.len() as f64)
    }

    /// Loss and its gradient by backpropagation.
    pub fn gradients(
        &self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, Gradients), NeuralError> {
        self.check_batch(inputs, actions, targets)?;
        let n = inputs.len() as f64;
        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        };
        let mut loss = 0.0;
        let mut delta = Vec::new();
        let mut next_delta = Vec::new();
        for ((x, &a), y) in inputs.iter().zip(actions).zip(targets) {
            let acts = self.activations(x);
            let q = acts.last().unwrap();
            let err = q[a] - y;
            loss += err * err;

            delta.clear();
            delta.resize(self.output_dim(), 0.0);
            delta[a] = 2.0 * err / n;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let (gw, gb) = &mut grads.layers[li];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, xi) in row.iter_mut().zip(input) {
                        *g += d * xi;
                    }
                }
                if li == 0 {
                    break;
                }
                next_delta.clear();
                next_delta.resize(layer.inputs, 0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (nd, w) in next_delta.iter_mut().zip(row) {
                        *nd += d * w;
                    }
                }
                // Rectifier derivative of the layer below.
                for (nd, act) in next_delta.iter_mut().zip(input) {
                    if *act <= 0.0 {
                        *nd = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut next_delta);
            }
        }
        Ok((loss / n, grads))
    }

    /// `θ ← θ − lr·g`.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, g) in layer.weights.iter_mut().zip(gw) {
                *w -= lr * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
    }

    /// One SGD step on the batch; returns the loss before the update.
    pub fn train_batch(
        &mut self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
        lr: f64,
    ) -> Result<f64, NeuralError> {
        let (loss, grads) = self.gradients(inputs, actions, targets)?;
        if !loss.is_finite() {
            return Err(NeuralError::NonFinite("loss"));
        }
        self.apply_gradients(&grads, lr);
        Ok(loss)
    }

    /// `self ← tau·online + (1 − tau)·self`; `tau = 1` is a hard copy.
    pub fn sync_from(&mut self, online: &Mlp, tau: f64) -> Result<(), NeuralError> {
        if self.sizes != online.sizes {
            return Err(NeuralError::Architecture(
                self.sizes.clone(),
                online.sizes.clone(),
            ));
        }
        if tau >= 1.0 {
            self.layers.clone_from(&online.layers);
            return Ok(());
        }
        for (t, o) in self.params_mut().zip(online.params()) {
            *t = tau * o + (1.0 - tau) * *t;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn zero_net_outputs_zeros() {
        let net = Mlp::zeros(&[25, 64, 64, 9]).unwrap();
        assert_eq!(net.forward(&[0.3; 25]).unwrap(), vec![0.0; 9]);
        assert_eq!(net.param_count(), 25 * 64 + 64 + 64 * 64 + 64 + 64 * 9 + 9);
    }

    #[test]
    fn hand_computed_forward() {
        // 2 -> 2 -> 2 -> 2, hand-evaluated:
        // h1 = relu([1·1 + 2·(−1) + 0.5, 1·0.5 + 2·0.5 + 0]) = relu([−0.5, 1.5]) = [0, 1.5]
        // h2 = relu([0·2 + 1.5·1 − 1, 0·1 + 1.5·(−1) + 0]) = relu([0.5, −1.5]) = [0.5, 0]
        // q  = [0.5·3 + 0·1 + 0.1, 0.5·(−1) + 0·4 − 0.2] = [1.6, −0.7]
        let mut net = Mlp::zeros(&[2, 2, 2, 2]).unwrap();
        net.set_params(&[
            1.0, -1.0, 0.5, 0.5, 0.5, 0.0, // layer 1
            2.0, 1.0, 1.0, -1.0, -1.0, 0.0, // layer 2
            3.0, 1.0, -1.0, 4.0, 0.1, -0.2, // layer 3
        ])
        .unwrap();
        let q = net.forward(&[1.0, 2.0]).unwrap();
        assert!((q[0] - 1.6).abs() < 1e-12 && (q[1] + 0.7).abs() < 1e-12, "{q:?}");
    }

    #[test]
    fn forward_is_deterministic_and_checks_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(&[25, 64, 64, 9], &mut rng).unwrap();
        let x: Vec<f64> = (0..25).map(|i| i as f64 / 25.0).collect();
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert!(matches!(net.forward(&x[..24]), Err(NeuralError::Dimension { .. })));
    }

    #[test]
    fn zero_error_leaves_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = Mlp::new(&[4, 8, 3], &mut rng).unwrap();
        let xs = vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.5, 0.0, 0.9, 0.1]];
        let actions = [0, 2];
        let targets: Vec<f64> = xs
            .iter()
            .zip(actions)
            .map(|(x, a)| net.forward(x).unwrap()[a])
            .collect();
        let before = net.clone();
        let loss = net.train_batch(&refs(&xs), &actions, &targets, 0.1).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
    }

    #[test]
    fn linear_update_matches_closed_form() {
        let mut net = Mlp::zeros(&[3, 2]).unwrap();
        net.set_params(&[0.5, -0.25, 1.0, 0.0, 2.0, 0.0, 0.1, 0.0]).unwrap();
        let x = [1.0, 2.0, -1.0];
        let pred = 0.5 - 0.5 - 1.0 + 0.1;
        let target = 3.0;
        let lr = 0.01;
        net.train_batch(&[&x], &[0], &[target], lr).unwrap();
        let p: Vec<f64> = net.params().collect();
        let step = lr * 2.0 * (pred - target);
        let expect = [0.5 - step * 1.0, -0.25 - step * 2.0, 1.0 + step];
        for (got, want) in p[..3].iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        // Unselected output row and bias untouched.
        assert_eq!(&p[3..6], &[0.0, 2.0, 0.0]);
        assert!((p[6] - (0.1 - step)).abs() < 1e-12);
        assert_eq!(p[7], 0.0);
    }

    #[test]
    fn batch_errors() {
        let mut net = Mlp::zeros(&[2, 2]).unwrap();
        assert!(matches!(net.train_batch(&[], &[], &[], 0.1), Err(NeuralError::EmptyBatch)));
        assert!(matches!(
            net.train_batch(&[&[0.0, 0.0]], &[0], &[f64::NAN], 0.1),
            Err(NeuralError::NonFinite(_))
        ));
        assert!(matches!(
            net.train_batch(&[&[0.0, 0.0]], &[0, 1], &[0.0], 0.1),
            Err(NeuralError::BatchLength { .. })
        ));
        assert!(matches!(
            net.train_batch(&[&[0.0, 0.0]], &[2], &[0.0], 0.1),
            Err(NeuralError::Action { .. })
        ));
    }

    #[test]
    fn loss_does_not_increase_on_fixed_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut net = Mlp::new(&[25, 64, 64, 9], &mut rng).unwrap();
        let xs: Vec<Vec<f64>> = (0..32)
            .map(|_| (0..25).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let actions: Vec<usize> = (0..32).map(|_| rng.gen_range(0..9)).collect();
        let targets: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut prev = f64::INFINITY;
        for _ in 0..50 {
            let loss = net.train_batch(&refs(&xs), &actions, &targets, 1e-3).unwrap();
            assert!(loss <= prev + 1e-9, "{loss} > {prev}");
            prev = loss;
        }
    }

    #[test]
    fn target_sync() {
        let mut online = Mlp::zeros(&[2, 3, 2]).unwrap();
        online.params_mut().for_each(|p| *p = 2.0);
        let mut target = Mlp::zeros(&[2, 3, 2]).unwrap();
        target.sync_from(&online, 0.5).unwrap();
        assert!(target.params().all(|p| p == 1.0));
        target.sync_from(&online, 1.0).unwrap();
        assert_eq!(target, online);

        let mut slow = Mlp::zeros(&[2, 3, 2]).unwrap();
        for k in 1..=100 {
            slow.sync_from(&online, 0.1).unwrap();
            // Distance to online shrinks by 0.9 per update.
            let expect = 2.0 * (1.0 - 0.9f64.powi(k));
            assert!(slow.params().all(|p| (p - expect).abs() < 1e-12));
        }

        let other = Mlp::zeros(&[2, 4, 2]).unwrap();
        assert!(matches!(slow.sync_from(&other, 0.5), Err(NeuralError::Architecture(..))));
    }
}
