//! Heterogeneous layer stacks: full-network forward, cross-entropy loss,
//! backward sweep, and per-sample SGD training.

use std::time::Instant;

use crate::datasets::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::layers::{Layer, LayerCache, LayerGrads, ParamGroup};
use crate::scalar::{real, Scalar};
use crate::tensor::{Rng, Vector};
use crate::ActivationKind;

#[derive(Clone, Debug)]
pub struct Network<T> {
    input_dim: usize,
    layers: Vec<Layer<T>>,
}

/// Per-layer parameter gradients in network order.
#[derive(Clone, Debug)]
pub struct Gradients<T>(pub Vec<LayerGrads<T>>);

#[derive(Clone, Debug)]
pub struct TrainConfig<T> {
    pub eta: T,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Print a progress line every this many epochs; 0 disables logging.
    pub log_every: usize,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(eta: T, epochs: usize, seed: u64) -> Self {
        TrainConfig { eta, epochs, seed, shuffle: true, log_every: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport<T> {
    /// Mean training loss per epoch, one entry per epoch.
    pub epoch_loss: Vec<T>,
    pub wall_time_secs: f64,
}

/// Identifies one scalar parameter inside a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamPath {
    pub layer: usize,
    pub group: ParamGroup,
    pub index: usize,
}

impl std::fmt::Display for ParamPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "layer{}.{}[{}]", self.layer, self.group, self.index)
    }
}

/// Multi-label cross-entropy `-Σ [y ln ŷ + (1-y) ln(1-ŷ)]` for a single pair
/// of entries. `ŷ` is clamped to `[1e-12, 1-1e-12]` for the logarithms.
pub fn cross_entropy_term<T: Scalar>(y: T, y_hat: T) -> T {
    let eps = real::<T>(1e-12);
    let p = y_hat.max(eps).min(T::one() - eps);
    -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
}

/// Cross-entropy loss summed over all outputs. Targets must be 0/1.
pub fn loss<T: Scalar>(y_hat: &Vector<T>, y: &Vector<T>) -> Result<T> {
    if y_hat.len() != y.len() {
        return Err(Error::shape(format!(
            "loss: prediction length {} vs target length {}",
            y_hat.len(),
            y.len()
        )));
    }
    let mut total = T::zero();
    for i in 0..y.len() {
        if y[i] != T::zero() && y[i] != T::one() {
            return Err(Error::invalid(format!(
                "loss: target entry {i} is {}, expected 0 or 1",
                y[i]
            )));
        }
        total += cross_entropy_term(y[i], y_hat[i]);
    }
    Ok(total)
}

impl<T: Scalar> Network<T> {
    /// Build a network, validating that consecutive layer widths chain.
    pub fn new(input_dim: usize, layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer".to_string()));
        }
        let mut expected = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim() != expected {
                return Err(Error::shape(format!(
                    "layer {i}: expects input width {}, previous width is {expected}",
                    layer.in_dim()
                )));
            }
            expected = layer.out_dim();
        }
        Ok(Network { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim())
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Chain every layer's forward pass; returns the final activation and
    /// one cache per layer for the backward sweep.
    pub fn forward(&self, x: &Vector<T>) -> Result<(Vector<T>, Vec<LayerCache<T>>)> {
        if x.len() != self.input_dim {
            return Err(Error::shape(format!(
                "forward: expected input length {}, got {}",
                self.input_dim,
                x.len()
            )));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (next, cache) = layer
                .forward(&a)
                .map_err(|e| Error::shape(format!("layer {i}: {e}")))?;
            caches.push(cache);
            a = next;
        }
        Ok((a, caches))
    }

    /// Output-layer delta `δ^L = ŷ - y`.
    ///
    /// The simplification is specific to a sigmoid final layer paired with
    /// cross-entropy; any other final activation is rejected rather than
    /// silently producing wrong gradients.
    pub fn output_delta(&self, y_hat: &Vector<T>, y: &Vector<T>) -> Result<Vector<T>> {
        let last = self.layers.last().expect("validated non-empty");
        if last.activation() != ActivationKind::Sigmoid {
            return Err(Error::invalid(format!(
                "output_delta: final layer activation is {}, cross-entropy training requires sigmoid",
                last.activation()
            )));
        }
        y_hat.sub(y)
    }

    /// Backward sweep over cached forward state. Walks layers from last to
    /// first; between layers the previous layer's `g'(z)` is applied to the
    /// pre-delta returned by each layer kernel.
    pub fn backward(&self, caches: &[LayerCache<T>], delta_out: Vector<T>) -> Result<Gradients<T>> {
        if caches.len() != self.layers.len() {
            return Err(Error::invalid(format!(
                "backward: {} caches for {} layers",
                caches.len(),
                self.layers.len()
            )));
        }
        let mut delta = delta_out;
        let mut rev = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let (grads, pre) = self.layers[l].backward(&caches[l], &delta)?;
            rev.push(grads);
            if l > 0 {
                let prev = &caches[l - 1];
                let gprime = self.layers[l - 1].activation().derivative_vec(&prev.z, &prev.a_out);
                delta = gprime.hadamard(&pre)?;
            }
        }
        rev.reverse();
        Ok(Gradients(rev))
    }

    /// `θ ← θ - η·grad` for every parameter group of every layer.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, eta: T) -> Result<()> {
        if grads.0.len() != self.layers.len() {
            return Err(Error::invalid(format!(
                "apply_gradients: {} gradient sets for {} layers",
                grads.0.len(),
                self.layers.len()
            )));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.0) {
            layer.apply_grads(g, eta)?;
        }
        Ok(())
    }

    /// Per-sample SGD: forward, `δ^L = ŷ - y`, backward, apply. All
    /// gradients for a sample are computed from the pre-update parameters
    /// and applied together. Deterministic given the initial network, the
    /// data, and the config.
    pub fn sgd_train(&mut self, data: &Dataset<T>, cfg: &TrainConfig<T>) -> Result<TrainReport<T>> {
        if cfg.epochs == 0 {
            return Err(Error::invalid("sgd_train: epochs must be at least 1".to_string()));
        }
        if !(cfg.eta >= T::zero()) || !cfg.eta.is_finite() {
            return Err(Error::invalid(format!("sgd_train: learning rate {} invalid", cfg.eta)));
        }
        let n = data.len();
        if n == 0 {
            return Err(Error::invalid("sgd_train: empty dataset".to_string()));
        }
        if data.feature_count() != self.input_dim {
            return Err(Error::shape(format!(
                "sgd_train: dataset has {} features, network expects {}",
                data.feature_count(),
                self.input_dim
            )));
        }
        if data.target_width() != self.output_dim() {
            return Err(Error::shape(format!(
                "sgd_train: dataset targets have width {}, final layer has {}",
                data.target_width(),
                self.output_dim()
            )));
        }
        // Fails fast when the final activation is not sigmoid.
        self.output_delta(&Vector::zeros(self.output_dim()), &Vector::zeros(self.output_dim()))?;

        let started = Instant::now();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = Rng::new(cfg.seed);
        let mut epoch_loss = Vec::with_capacity(cfg.epochs);
        let inv_n = T::one() / real::<T>(n as f64);
        for epoch in 0..cfg.epochs {
            if cfg.shuffle {
                rng.shuffle(&mut order);
            }
            let mut loss_sum = T::zero();
            for &i in &order {
                let x = data.input_vector(i);
                let y = data.target_vector(i);
                let (y_hat, caches) = self.forward(&x)?;
                loss_sum += loss(&y_hat, &y)?;
                let delta = y_hat.sub(&y)?;
                let grads = self.backward(&caches, delta)?;
                self.apply_gradients(&grads, cfg.eta)?;
            }
            let mean = loss_sum * inv_n;
            epoch_loss.push(mean);
            if cfg.log_every > 0 && (epoch + 1) % cfg.log_every == 0 {
                eprintln!("epoch {:>5}  mean loss {}", epoch + 1, mean);
            }
        }
        Ok(TrainReport { epoch_loss, wall_time_secs: started.elapsed().as_secs_f64() })
    }

    /// Argmax over the network outputs; ties break toward the lowest index.
    pub fn predict_class(&self, x: &Vector<T>) -> Result<usize> {
        let (y_hat, _) = self.forward(x)?;
        y_hat.argmax().ok_or_else(|| Error::invalid("predict_class: empty output".to_string()))
    }

    /// Fraction of samples classified correctly. One-hot targets use the
    /// argmax rule; binary targets require a single output, thresholded
    /// at 0.5.
    pub fn accuracy(&self, data: &Dataset<T>) -> Result<T> {
        let n = data.len();
        if n == 0 {
            return Err(Error::invalid("accuracy: empty dataset".to_string()));
        }
        if let Targets::Binary(_) = data.targets {
            if self.output_dim() != 1 {
                return Err(Error::shape(format!(
                    "accuracy: binary targets need a single output, network has {}",
                    self.output_dim()
                )));
            }
        }
        let half = real::<T>(0.5);
        let mut correct = 0usize;
        for i in 0..n {
            let x = data.input_vector(i);
            let predicted = match &data.targets {
                Targets::OneHot(_) => self.predict_class(&x)?,
                Targets::Binary(_) => {
                    let (y_hat, _) = self.forward(&x)?;
                    usize::from(y_hat[0] >= half)
                }
            };
            if predicted == data.class_of(i) {
                correct += 1;
            }
        }
        Ok(real::<T>(correct as f64) / real::<T>(n as f64))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Flat parameter access across all layers, in layer order. See
    /// `Layer::get_param` for the in-layer order.
    pub fn get_param(&self, mut i: usize) -> T {
        for layer in &self.layers {
            let n = layer.param_count();
            if i < n {
                return layer.get_param(i);
            }
            i -= n;
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut i: usize, value: T) {
        for layer in &mut self.layers {
            let n = layer.param_count();
            if i < n {
                layer.set_param(i, value);
                return;
            }
            i -= n;
        }
        panic!("parameter index out of range");
    }

    pub fn param_path(&self, mut i: usize) -> ParamPath {
        for (l, layer) in self.layers.iter().enumerate() {
            let n = layer.param_count();
            if i < n {
                let (group, index) = layer.param_group(i);
                return ParamPath { layer: l, group, index };
            }
            i -= n;
        }
        panic!("parameter index out of range");
    }

    /// Flatten gradients in the `get_param` order.
    pub fn flatten_gradients(&self, grads: &Gradients<T>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.param_count());
        for (layer, g) in self.layers.iter().zip(&grads.0) {
            layer.flatten_grads(g, &mut out)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind::{Identity, Sigmoid, Tanh};
    use crate::datasets::{xor_dataset, XorEncoding};
    use crate::layers::{init_layer, AffineLayer, LayerKind, QInit};
    use crate::tensor::Matrix;

    fn stack(specs: &[(LayerKind, usize, usize, ActivationKind)], seed: u64) -> Network<f64> {
        let mut rng = Rng::new(seed);
        let layers = specs
            .iter()
            .map(|&(kind, n_in, n_out, act)| {
                init_layer(kind, n_in, n_out, act, &QInit::SymmetricRandom(0.5), &mut rng).unwrap()
            })
            .collect();
        Network::new(specs[0].1, layers).unwrap()
    }

    #[test]
    fn identity_affine_layer_passes_input_through() {
        let layer = Layer::Affine(AffineLayer {
            w: Matrix::identity(3),
            b: Vector::zeros(3),
            act: Identity,
        });
        let net = Network::new(3, vec![layer]).unwrap();
        let x = Vector::from_slice(&[1.0, -2.0, 3.0]);
        let (y, _) = net.forward(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn zero_parameter_sigmoid_stack_outputs_half() {
        let l1 = Layer::Affine(AffineLayer {
            w: Matrix::zeros(4, 2),
            b: Vector::zeros(4),
            act: Sigmoid,
        });
        let l2 = Layer::Affine(AffineLayer {
            w: Matrix::zeros(3, 4),
            b: Vector::zeros(3),
            act: Sigmoid,
        });
        let net = Network::new(2, vec![l1, l2]).unwrap();
        let (y, _) = net.forward(&Vector::from_slice(&[5.0, -5.0])).unwrap();
        for i in 0..3 {
            assert_eq!(y[i], 0.5);
        }
    }

    #[test]
    fn forward_matches_manual_layer_composition() {
        let net = stack(
            &[
                (LayerKind::Affine, 3, 4, Tanh),
                (LayerKind::Quadratic, 4, 3, Sigmoid),
                (LayerKind::Rpq, 3, 2, Sigmoid),
            ],
            42,
        );
        let x = Vector::from_slice(&[0.3, -0.8, 0.5]);
        let (y, _) = net.forward(&x).unwrap();
        let (a1, _) = net.layers()[0].forward(&x).unwrap();
        let (a2, _) = net.layers()[1].forward(&a1).unwrap();
        let (a3, _) = net.layers()[2].forward(&a2).unwrap();
        assert_eq!(y, a3);
    }

    #[test]
    fn forward_error_names_layer_index() {
        let net = stack(&[(LayerKind::Affine, 2, 3, Sigmoid)], 1);
        let err = net.forward(&Vector::zeros(5)).unwrap_err();
        assert!(err.to_string().contains("expected input length 2"));
        // mismatch in the middle of a stack reports the layer index
        let bad = Network::new(
            3,
            vec![
                init_layer::<f64>(LayerKind::Affine, 3, 4, Sigmoid, &QInit::Zero, &mut Rng::new(2))
                    .unwrap(),
                init_layer::<f64>(LayerKind::Affine, 5, 2, Sigmoid, &QInit::Zero, &mut Rng::new(3))
                    .unwrap(),
            ],
        );
        assert!(bad.unwrap_err().to_string().contains("layer 1"));
    }

    #[test]
    fn loss_values() {
        let l: f64 = loss(&Vector::from_slice(&[1.0]), &Vector::from_slice(&[1.0])).unwrap();
        assert!(l.abs() <= 1e-11, "{l}");
        let l = loss(&Vector::from_slice(&[0.5]), &Vector::from_slice(&[1.0])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let l = loss(&Vector::from_slice(&[0.5, 0.5]), &Vector::from_slice(&[1.0, 0.0])).unwrap();
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(loss(&Vector::<f64>::zeros(2), &Vector::zeros(3)).is_err());
        assert!(loss(&Vector::from_slice(&[0.5]), &Vector::from_slice(&[0.3])).is_err());
    }

    #[test]
    fn output_delta_basics() {
        let net = stack(&[(LayerKind::Quadratic, 2, 2, Sigmoid)], 3);
        let y_hat = Vector::from_slice(&[0.9, 0.1]);
        let y = Vector::from_slice(&[1.0, 0.0]);
        let d = net.output_delta(&y_hat, &y).unwrap();
        assert!((d[0] + 0.1).abs() < 1e-15 && (d[1] - 0.1).abs() < 1e-15);
        assert_eq!(net.output_delta(&y, &y).unwrap(), Vector::zeros(2));

        let non_sigmoid = stack(&[(LayerKind::Affine, 2, 2, Tanh)], 4);
        assert!(non_sigmoid.output_delta(&y_hat, &y).is_err());
    }

    // δ^L = ŷ - y must equal the numeric derivative of the loss with
    // respect to the final pre-activation z^L.
    #[test]
    fn output_delta_matches_loss_derivative_through_sigmoid() {
        let h = 1e-6f64;
        let mut rng = Rng::new(5);
        for _ in 0..200 {
            let z: f64 = rng.uniform(-4.0, 4.0);
            let y = f64::from(rng.next_u64() % 2 == 0);
            let f = |z: f64| cross_entropy_term(y, crate::activation::sigmoid(z));
            let numeric = (f(z + h) - f(z - h)) / (2.0 * h);
            let analytic = crate::activation::sigmoid(z) - y;
            assert!((numeric - analytic).abs() < 1e-8, "{numeric} vs {analytic}");
        }
    }

    #[test]
    fn backward_zero_delta_gives_zero_gradients() {
        let net = stack(
            &[(LayerKind::Quadratic, 3, 4, Tanh), (LayerKind::Quadratic, 4, 2, Sigmoid)],
            6,
        );
        let (_, caches) = net.forward(&Vector::from_slice(&[0.1, 0.2, -0.3])).unwrap();
        let grads = net.backward(&caches, Vector::zeros(2)).unwrap();
        let flat = net.flatten_gradients(&grads).unwrap();
        assert!(flat.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn train_with_zero_eta_keeps_parameters() {
        let data = xor_dataset::<f64>(XorEncoding::Binary);
        let mut net = stack(&[(LayerKind::Quadratic, 2, 1, Sigmoid)], 7);
        let before: Vec<f64> = (0..net.param_count()).map(|i| net.get_param(i)).collect();
        let mut cfg = TrainConfig::new(0.0, 3, 9);
        cfg.shuffle = true;
        net.sgd_train(&data, &cfg).unwrap();
        let after: Vec<f64> = (0..net.param_count()).map(|i| net.get_param(i)).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn train_is_seed_reproducible_bitwise() {
        let data = xor_dataset::<f64>(XorEncoding::Binary);
        let base = stack(&[(LayerKind::Quadratic, 2, 1, Sigmoid)], 8);
        let cfg = TrainConfig::new(0.1, 50, 21);
        let mut a = base.clone();
        let mut b = base.clone();
        let ra = a.sgd_train(&data, &cfg).unwrap();
        let rb = b.sgd_train(&data, &cfg).unwrap();
        for i in 0..a.param_count() {
            assert_eq!(a.get_param(i).to_bits(), b.get_param(i).to_bits());
        }
        assert_eq!(ra.epoch_loss.len(), 50);
        let bits_a: Vec<u64> = ra.epoch_loss.iter().map(|l| l.to_bits()).collect();
        let bits_b: Vec<u64> = rb.epoch_loss.iter().map(|l| l.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn train_rejects_mismatched_widths_and_non_sigmoid_output() {
        let data = xor_dataset::<f64>(XorEncoding::Binary);
        let mut wrong_width = stack(&[(LayerKind::Quadratic, 2, 3, Sigmoid)], 9);
        assert!(wrong_width.sgd_train(&data, &TrainConfig::new(0.1, 1, 0)).is_err());
        let mut tanh_out = stack(&[(LayerKind::Quadratic, 2, 1, Tanh)], 10);
        assert!(tanh_out.sgd_train(&data, &TrainConfig::new(0.1, 1, 0)).is_err());
        let mut ok = stack(&[(LayerKind::Quadratic, 2, 1, Sigmoid)], 11);
        assert!(ok.sgd_train(&data, &TrainConfig { eta: 0.1, epochs: 0, seed: 0, shuffle: false, log_every: 0 }).is_err());
    }

    #[test]
    fn predict_class_tie_breaks_low() {
        let net = stack(&[(LayerKind::Affine, 2, 2, Sigmoid)], 12);
        // zero weights after re-init => both outputs equal
        let mut net = net;
        for i in 0..net.param_count() {
            net.set_param(i, 0.0);
        }
        assert_eq!(net.predict_class(&Vector::from_slice(&[1.0, 2.0])).unwrap(), 0);
    }

    #[test]
    fn accuracy_on_empty_dataset_is_an_error() {
        use crate::datasets::Normalization;
        let net = stack(&[(LayerKind::Affine, 2, 2, Sigmoid)], 13);
        let empty = Dataset {
            inputs: Matrix::zeros(0, 2),
            targets: Targets::OneHot(Matrix::zeros(0, 2)),
            class_count: 2,
            normalization: Normalization::None,
        };
        assert!(net.accuracy(&empty).is_err());
    }
}
