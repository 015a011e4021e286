//! Hardware-aware teacher-student training.
//!
//! A real-valued teacher network holds shadow parameters in [-1, 1]. Every
//! forward and backward pass runs on the binarized snapshot of those
//! parameters (threshold delta_b, +1 on ties); the resulting gradients flow
//! through the binarization unchanged (straight-through, identity inside the
//! clip window and zero outside) and update the real-valued parameters,
//! which are clipped back into [-1, 1] after every step. Deployment extracts
//! the binarized student, which the crossbar network programs as device
//! states.
//!
//! Activations are o = sigmoid(-y): the falling sigmoid the analog neuron
//! realizes. The loss is mean squared error between the outputs and a
//! one-hot target, keeping that output activation in place; classification
//! is argmax of the outputs.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledImage;
use crate::math;
use crate::network::{BinLayer, BinarizedModel, MlpTopology, NetworkError};

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    EmptyDataset,
    /// A hyperparameter violated its documented range.
    InvalidConfig(&'static str),
    /// An input or target vector of the wrong length.
    ShapeMismatch { expected: usize, found: usize },
    /// Mismatched batch slices.
    BatchMismatch { inputs: usize, targets: usize },
    /// Bubbled up from model assembly.
    Network(NetworkError),
}

impl From<NetworkError> for TrainError {
    fn from(e: NetworkError) -> Self {
        TrainError::Network(e)
    }
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::EmptyDataset => write!(f, "dataset is empty"),
            TrainError::InvalidConfig(msg) => write!(f, "invalid training config: {msg}"),
            TrainError::ShapeMismatch { expected, found } => {
                write!(f, "vector length {found}, expected {expected}")
            }
            TrainError::BatchMismatch { inputs, targets } => {
                write!(f, "batch has {inputs} inputs but {targets} targets")
            }
            TrainError::Network(e) => write!(f, "{e}"),
        }
    }
}

/// Deterministic binarization: +1 if w_bar >= delta_b, else -1. The
/// threshold branch includes equality, so binarize(0, 0) = +1.
pub fn binarize(w_bar: f64, delta_b: f64) -> i8 {
    if w_bar >= delta_b {
        1
    } else {
        -1
    }
}

/// Clip into [-1, 1]. Idempotent.
pub fn clip(w: f64) -> f64 {
    math::clamp(w, -1.0, 1.0)
}

/// One-hot target vector for a class label.
pub fn one_hot(label: usize, num_classes: usize) -> Vec<f64> {
    let mut t = vec![0.0; num_classes];
    t[label] = 1.0;
    t
}

/// Mean squared error over one output vector: (1/K) sum (o - t)^2.
pub fn mse_loss(outputs: &[f64], targets: &[f64]) -> f64 {
    debug_assert_eq!(outputs.len(), targets.len());
    let k = outputs.len() as f64;
    outputs
        .iter()
        .zip(targets.iter())
        .map(|(o, t)| (o - t) * (o - t))
        .sum::<f64>()
        / k
}

/// Which parameter snapshot a forward pass reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    /// The real-valued teacher parameters as stored.
    RealValued,
    /// binarize(clip(.)) snapshots of the teacher parameters.
    BinarizedWeights,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    /// Binarization threshold.
    pub delta_b: f64,
}

impl Default for TrainConfig {
    /// Defaults that reach the expected MNIST accuracy within 10 epochs.
    /// The binarized forward pass saturates the falling sigmoid for most of
    /// the input range, so useful learning rates are far larger than
    /// real-valued training would suggest.
    fn default() -> Self {
        TrainConfig {
            learning_rate: 15.0,
            epochs: 10,
            batch_size: 100,
            rng_seed: 42,
            delta_b: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(TrainError::InvalidConfig("learning_rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be at least 1"));
        }
        if !self.delta_b.is_finite() {
            return Err(TrainError::InvalidConfig("delta_b must be finite"));
        }
        Ok(())
    }
}

/// One real-valued layer: row-major m x n weights and m biases.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLayer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Per-layer parameter gradients in the same layout as the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<GradLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradLayer {
    pub d_weights: Vec<f64>,
    pub d_biases: Vec<f64>,
}

/// Per-epoch training metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: u64,
    /// Mean per-sample loss over the epoch.
    pub train_loss: f64,
}

/// The real-valued teacher network.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherNetwork {
    topology: MlpTopology,
    layers: Vec<RealLayer>,
}

impl TeacherNetwork {
    /// Initialize every parameter uniformly in [-0.5, 0.5) from the seeded
    /// generator (stream 0; per-epoch shuffles use streams 1 + epoch).
    pub fn init(topology: MlpTopology, rng_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(0);
        let sizes = topology.layer_sizes().to_vec();
        let mut layers = Vec::with_capacity(topology.num_weight_layers());
        for pair in sizes.windows(2) {
            let (n, m) = (pair[0], pair[1]);
            let weights = (0..m * n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let biases = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
            layers.push(RealLayer { weights, biases });
        }
        TeacherNetwork { topology, layers }
    }

    /// Assemble a teacher from explicit parameters (checkpoint loading,
    /// tests). Parameters must already lie in [-1, 1].
    pub fn from_parts(topology: MlpTopology, layers: Vec<RealLayer>) -> Result<Self, TrainError> {
        if layers.len() != topology.num_weight_layers() {
            return Err(TrainError::ShapeMismatch {
                expected: topology.num_weight_layers(),
                found: layers.len(),
            });
        }
        let sizes = topology.layer_sizes();
        for (l, layer) in layers.iter().enumerate() {
            let (n, m) = (sizes[l], sizes[l + 1]);
            if layer.weights.len() != m * n {
                return Err(TrainError::ShapeMismatch {
                    expected: m * n,
                    found: layer.weights.len(),
                });
            }
            if layer.biases.len() != m {
                return Err(TrainError::ShapeMismatch { expected: m, found: layer.biases.len() });
            }
            if layer
                .weights
                .iter()
                .chain(layer.biases.iter())
                .any(|w| !w.is_finite() || w.abs() > 1.0)
            {
                return Err(TrainError::InvalidConfig("teacher parameters must lie in [-1, 1]"));
            }
        }
        Ok(TeacherNetwork { topology, layers })
    }

    pub fn topology(&self) -> &MlpTopology {
        &self.topology
    }

    pub fn layers(&self) -> &[RealLayer] {
        &self.layers
    }

    /// binarize(clip(.)) snapshot of every layer as f64 values (+-1.0).
    fn binarized_layers(&self, delta_b: f64) -> Vec<RealLayer> {
        self.layers
            .iter()
            .map(|layer| RealLayer {
                weights: layer
                    .weights
                    .iter()
                    .map(|w| f64::from(binarize(clip(*w), delta_b)))
                    .collect(),
                biases: layer
                    .biases
                    .iter()
                    .map(|b| f64::from(binarize(clip(*b), delta_b)))
                    .collect(),
            })
            .collect()
    }

    fn effective_layers(&self, mode: ForwardMode, delta_b: f64) -> Vec<RealLayer> {
        match mode {
            ForwardMode::RealValued => self.layers.clone(),
            ForwardMode::BinarizedWeights => self.binarized_layers(delta_b),
        }
    }

    /// Per-layer activations o = sigmoid(-(Wx + b)) for one input. The
    /// binarized mode snapshots the parameters with threshold 0.
    pub fn forward_pass(&self, x: &[f64], mode: ForwardMode) -> Result<Vec<Vec<f64>>, TrainError> {
        self.forward_pass_with_threshold(x, mode, 0.0)
    }

    /// `forward_pass` with an explicit binarization threshold.
    pub fn forward_pass_with_threshold(
        &self,
        x: &[f64],
        mode: ForwardMode,
        delta_b: f64,
    ) -> Result<Vec<Vec<f64>>, TrainError> {
        let sizes = self.topology.layer_sizes();
        if x.len() != sizes[0] {
            return Err(TrainError::ShapeMismatch { expected: sizes[0], found: x.len() });
        }
        let params = self.effective_layers(mode, delta_b);
        let mut activations = Vec::with_capacity(params.len());
        let mut current = x.to_vec();
        for (l, layer) in params.iter().enumerate() {
            let (n, m) = (sizes[l], sizes[l + 1]);
            let mut next = Vec::with_capacity(m);
            for r in 0..m {
                let y = math::dot(&layer.weights[r * n..(r + 1) * n], &current) + layer.biases[r];
                next.push(math::sigmoid(-y));
            }
            activations.push(next.clone());
            current = next;
        }
        Ok(activations)
    }

    /// Mean batch loss and parameter gradients for one mini-batch.
    ///
    /// The loss is the batch mean of the per-sample mean squared error; the
    /// gradients are with respect to the parameters the chosen mode actually
    /// used in the forward pass (for `BinarizedWeights`, the straight-through
    /// estimator hands them unchanged to the real-valued update).
    pub fn batch_gradients(
        &self,
        xs: &[Vec<f64>],
        targets: &[Vec<f64>],
        mode: ForwardMode,
        delta_b: f64,
    ) -> Result<(f64, Gradients), TrainError> {
        if xs.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        if xs.len() != targets.len() {
            return Err(TrainError::BatchMismatch { inputs: xs.len(), targets: targets.len() });
        }
        let sizes = self.topology.layer_sizes();
        let k_out = *sizes.last().expect("valid topology");
        for x in xs {
            if x.len() != sizes[0] {
                return Err(TrainError::ShapeMismatch { expected: sizes[0], found: x.len() });
            }
        }
        for t in targets {
            if t.len() != k_out {
                return Err(TrainError::ShapeMismatch { expected: k_out, found: t.len() });
            }
        }

        let params = self.effective_layers(mode, delta_b);
        let b = xs.len();
        let num_layers = params.len();

        // Forward, keeping each layer's activations per sample.
        let mut activations: Vec<Vec<Vec<f64>>> = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let (n, m) = (sizes[l], sizes[l + 1]);
            let layer = &params[l];
            let mut outs = Vec::with_capacity(b);
            for s in 0..b {
                let input: &[f64] =
                    if l == 0 { &xs[s] } else { &activations[l - 1][s] };
                let mut row = Vec::with_capacity(m);
                for r in 0..m {
                    let y = math::dot(&layer.weights[r * n..(r + 1) * n], input) + layer.biases[r];
                    row.push(math::sigmoid(-y));
                }
                outs.push(row);
            }
            activations.push(outs);
        }

        let mut loss = 0.0;
        for s in 0..b {
            loss += mse_loss(&activations[num_layers - 1][s], &targets[s]);
        }
        loss /= b as f64;

        // Backward: delta = dLoss/dy with o = sigmoid(-y), do/dy = -o(1-o).
        let mut grads: Vec<GradLayer> = params
            .iter()
            .map(|layer| GradLayer {
                d_weights: vec![0.0; layer.weights.len()],
                d_biases: vec![0.0; layer.biases.len()],
            })
            .collect();

        let mut delta: Vec<Vec<f64>> = (0..b)
            .map(|s| {
                let o = &activations[num_layers - 1][s];
                o.iter()
                    .zip(targets[s].iter())
                    .map(|(oi, ti)| {
                        let dl_do = 2.0 * (oi - ti) / (k_out as f64 * b as f64);
                        dl_do * (-oi * (1.0 - oi))
                    })
                    .collect()
            })
            .collect();

        for l in (0..num_layers).rev() {
            let n = sizes[l];
            let grad = &mut grads[l];
            for s in 0..b {
                let input: &[f64] = if l == 0 { &xs[s] } else { &activations[l - 1][s] };
                for (r, &d) in delta[s].iter().enumerate() {
                    if d != 0.0 {
                        let row = &mut grad.d_weights[r * n..(r + 1) * n];
                        for (dw, xi) in row.iter_mut().zip(input.iter()) {
                            *dw += d * xi;
                        }
                    }
                    grad.d_biases[r] += d;
                }
            }
            if l > 0 {
                let layer = &params[l];
                let mut prev_delta: Vec<Vec<f64>> = (0..b).map(|_| vec![0.0; n]).collect();
                for s in 0..b {
                    for (r, &d) in delta[s].iter().enumerate() {
                        if d != 0.0 {
                            let row = &layer.weights[r * n..(r + 1) * n];
                            for (pd, w) in prev_delta[s].iter_mut().zip(row.iter()) {
                                *pd += d * w;
                            }
                        }
                    }
                    let o_prev = &activations[l - 1][s];
                    for (pd, o) in prev_delta[s].iter_mut().zip(o_prev.iter()) {
                        *pd *= -o * (1.0 - o);
                    }
                }
                delta = prev_delta;
            }
        }

        Ok((loss, Gradients { layers: grads }))
    }

    /// Apply one SGD step: parameters inside the straight-through window
    /// (|w| <= 1, always true after clipping) take the binary-weight
    /// gradient, then every parameter is clipped back into [-1, 1].
    fn apply_update(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, grad) in self.layers.iter_mut().zip(grads.layers.iter()) {
            for (w, g) in layer
                .weights
                .iter_mut()
                .zip(grad.d_weights.iter())
                .chain(layer.biases.iter_mut().zip(grad.d_biases.iter()))
            {
                if w.abs() <= 1.0 {
                    *w = clip(*w - learning_rate * g);
                } else {
                    *w = clip(*w);
                }
            }
        }
    }

    /// One epoch of mini-batch SGD over the dataset with binarized forward
    /// and backward passes. Deterministic given `config.rng_seed`: the
    /// sample order comes from ChaCha8 stream 1 + `epoch_index` of that
    /// seed. Returns the mean per-sample loss.
    pub fn train_epoch(
        &mut self,
        data: &[LabeledImage],
        config: &TrainConfig,
        epoch_index: u64,
    ) -> Result<EpochMetrics, TrainError> {
        config.validate()?;
        if data.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        let sizes = self.topology.layer_sizes().to_vec();
        let (n0, k_out) = (sizes[0], *sizes.last().expect("valid topology"));

        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(1 + epoch_index);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let mut xs = Vec::with_capacity(chunk.len());
            let mut targets = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let image = &data[idx];
                if image.pixels.len() != n0 {
                    return Err(TrainError::ShapeMismatch {
                        expected: n0,
                        found: image.pixels.len(),
                    });
                }
                xs.push(image.pixels.iter().map(|p| f64::from(*p)).collect());
                targets.push(one_hot(usize::from(image.label), k_out));
            }
            let (loss, grads) =
                self.batch_gradients(&xs, &targets, ForwardMode::BinarizedWeights, config.delta_b)?;
            loss_sum += loss * chunk.len() as f64;
            self.apply_update(&grads, config.learning_rate);
        }

        Ok(EpochMetrics { epoch: epoch_index, train_loss: loss_sum / data.len() as f64 })
    }

    /// Element-wise binarize(clip(.)) over all weights and biases.
    pub fn extract_student(&self, delta_b: f64) -> Result<BinarizedModel, TrainError> {
        let layers = self
            .layers
            .iter()
            .map(|layer| BinLayer {
                weights: layer.weights.iter().map(|w| binarize(clip(*w), delta_b)).collect(),
                biases: layer.biases.iter().map(|b| binarize(clip(*b), delta_b)).collect(),
            })
            .collect();
        Ok(BinarizedModel::new(self.topology.clone(), layers)?)
    }

    /// Classification accuracy of the teacher on a labeled set.
    pub fn evaluate(&self, data: &[LabeledImage], mode: ForwardMode) -> Result<f64, TrainError> {
        if data.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        let mut correct = 0usize;
        for image in data {
            let x: Vec<f64> = image.pixels.iter().map(|p| f64::from(*p)).collect();
            let activations = self.forward_pass(&x, mode)?;
            let outputs = activations.last().expect("at least one layer");
            if math::argmax(outputs) == usize::from(image.label) {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

/// Classification accuracy of a binarized student on a labeled set,
/// evaluated through the exact-math network oracle.
pub fn evaluate_model(model: &BinarizedModel, data: &[LabeledImage]) -> Result<f64, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let n0 = model.topology().layer_sizes()[0];
    let mut correct = 0usize;
    for image in data {
        if image.pixels.len() != n0 {
            return Err(TrainError::ShapeMismatch { expected: n0, found: image.pixels.len() });
        }
        let x: Vec<f64> = image.pixels.iter().map(|p| f64::from(*p)).collect();
        let outputs = crate::network::ideal_outputs(model, &x);
        if math::argmax(&outputs) == usize::from(image.label) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
