//! Crossbar arrays concatenated into an MLP.
//!
//! Layer k of the topology [n_0, n_1, ..., n_L] is an n_k-input x
//! n_{k+1}-row array with a bias column. A neuron's output occupies
//! [vss, vdd]; an ideal affine re-scaler folds it back to [0, v_read] before
//! it drives the next array, so each layer sees the previous layer's
//! activation replayed at read level. The whole forward pass settles
//! combinationally in one clock cycle regardless of depth.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::crossbar::{
    signals_for_inference, validate_signals, CalibrationParams, CalibrationTarget, CrossbarArray,
    CrossbarError, Phase,
};
use crate::device::{DeviceGeometry, MaterialParams};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    /// Fewer than two layers or an empty layer.
    InvalidTopology(String),
    /// Model shapes do not match the network topology.
    TopologyMismatch { expected: Vec<usize>, found: Vec<usize> },
    /// A model entry outside {-1, +1}.
    NonBinaryEntry { layer: usize, index: usize, value: i32 },
    /// Layer shapes inconsistent within a model.
    ShapeMismatch { layer: usize, expected: usize, found: usize },
    /// Forward before calibration.
    NotCalibrated,
    /// Bubbled up from an array.
    Crossbar(CrossbarError),
}

impl From<CrossbarError> for NetworkError {
    fn from(e: CrossbarError) -> Self {
        NetworkError::Crossbar(e)
    }
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::InvalidTopology(msg) => write!(f, "invalid topology: {msg}"),
            NetworkError::TopologyMismatch { expected, found } => {
                write!(f, "model topology {found:?} does not match network {expected:?}")
            }
            NetworkError::NonBinaryEntry { layer, index, value } => {
                write!(f, "layer {layer} entry {index} must be -1 or +1, got {value}")
            }
            NetworkError::ShapeMismatch { layer, expected, found } => {
                write!(f, "layer {layer} has {found} entries, expected {expected}")
            }
            NetworkError::NotCalibrated => write!(f, "network has not been calibrated"),
            NetworkError::Crossbar(e) => write!(f, "{e}"),
        }
    }
}

/// Layer sizes of the MLP, input layer first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpTopology {
    layer_sizes: Vec<usize>,
}

impl MlpTopology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self, NetworkError> {
        if layer_sizes.len() < 2 {
            return Err(NetworkError::InvalidTopology(String::from(
                "need at least an input and an output layer",
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(NetworkError::InvalidTopology(String::from("layer sizes must be >= 1")));
        }
        Ok(MlpTopology { layer_sizes })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Number of weight layers (arrays), one less than the size list.
    pub fn num_weight_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("topology has at least two layers")
    }
}

/// One binarized weight layer: row-major m x n weights plus m biases, every
/// entry in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinLayer {
    pub weights: Vec<i8>,
    pub biases: Vec<i8>,
}

/// The student model: binarized weights and biases for every layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarizedModel {
    topology: MlpTopology,
    layers: Vec<BinLayer>,
}

impl BinarizedModel {
    pub fn new(topology: MlpTopology, layers: Vec<BinLayer>) -> Result<Self, NetworkError> {
        if layers.len() != topology.num_weight_layers() {
            return Err(NetworkError::TopologyMismatch {
                expected: topology.layer_sizes().to_vec(),
                found: layers.iter().map(|l| l.biases.len()).collect(),
            });
        }
        for (l, layer) in layers.iter().enumerate() {
            let n = topology.layer_sizes()[l];
            let m = topology.layer_sizes()[l + 1];
            if layer.weights.len() != m * n {
                return Err(NetworkError::ShapeMismatch {
                    layer: l,
                    expected: m * n,
                    found: layer.weights.len(),
                });
            }
            if layer.biases.len() != m {
                return Err(NetworkError::ShapeMismatch {
                    layer: l,
                    expected: m,
                    found: layer.biases.len(),
                });
            }
            for (i, w) in layer.weights.iter().chain(layer.biases.iter()).enumerate() {
                if *w != 1 && *w != -1 {
                    return Err(NetworkError::NonBinaryEntry {
                        layer: l,
                        index: i,
                        value: *w as i32,
                    });
                }
            }
        }
        Ok(BinarizedModel { topology, layers })
    }

    pub fn topology(&self) -> &MlpTopology {
        &self.topology
    }

    pub fn layers(&self) -> &[BinLayer] {
        &self.layers
    }

    /// Weight rows of one layer with the bias appended last, the layout the
    /// crossbar programs.
    pub fn layer_rows_with_bias(&self, layer: usize) -> Vec<Vec<i8>> {
        let n = self.topology.layer_sizes()[layer];
        let m = self.topology.layer_sizes()[layer + 1];
        let l = &self.layers[layer];
        (0..m)
            .map(|r| {
                let mut row = Vec::with_capacity(n + 1);
                row.extend_from_slice(&l.weights[r * n..(r + 1) * n]);
                row.push(l.biases[r]);
                row
            })
            .collect()
    }
}

/// The analog MLP: one crossbar array per weight layer plus the shared
/// calibration.
#[derive(Debug, Clone)]
pub struct AnalogMlp {
    topology: MlpTopology,
    arrays: Vec<CrossbarArray>,
    calibration: Option<CalibrationParams>,
    write_cycles: u64,
}

impl AnalogMlp {
    /// Allocate the arrays, all synapses unprogrammed.
    pub fn build(
        topology: MlpTopology,
        geometry: DeviceGeometry,
        params: MaterialParams,
        vdd: f64,
        vss: f64,
    ) -> Result<Self, NetworkError> {
        let sizes = topology.layer_sizes().to_vec();
        let mut arrays = Vec::with_capacity(topology.num_weight_layers());
        for pair in sizes.windows(2) {
            arrays.push(CrossbarArray::new(pair[0], pair[1], geometry, params, vdd, vss)?);
        }
        Ok(AnalogMlp { topology, arrays, calibration: None, write_cycles: 0 })
    }

    /// Default device stack and 0.8 V / 0 V rails.
    pub fn build_default(topology: MlpTopology) -> Result<Self, NetworkError> {
        Self::build(topology, DeviceGeometry::default(), MaterialParams::default(), 0.8, 0.0)
    }

    pub fn topology(&self) -> &MlpTopology {
        &self.topology
    }

    pub fn arrays(&self) -> &[CrossbarArray] {
        &self.arrays
    }

    pub fn array_mut(&mut self, layer: usize) -> &mut CrossbarArray {
        &mut self.arrays[layer]
    }

    pub fn calibration(&self) -> Option<&CalibrationParams> {
        self.calibration.as_ref()
    }

    /// Write cycles spent by every `map_model` call so far.
    pub fn write_cycles(&self) -> u64 {
        self.write_cycles
    }

    pub fn is_programmed(&self) -> bool {
        self.arrays.iter().all(CrossbarArray::is_programmed)
    }

    /// Program the model into the arrays row-serially. Returns the total
    /// write cycles: the sum of the layers' row counts.
    pub fn map_model(&mut self, model: &BinarizedModel) -> Result<u64, NetworkError> {
        if model.topology() != &self.topology {
            return Err(NetworkError::TopologyMismatch {
                expected: self.topology.layer_sizes().to_vec(),
                found: model.topology().layer_sizes().to_vec(),
            });
        }
        let mut cycles = 0u64;
        for (l, array) in self.arrays.iter_mut().enumerate() {
            let rows = model.layer_rows_with_bias(l);
            let before = array.cycle_count();
            array.set_phase(Phase::Training);
            array.program_array(&rows)?;
            array.set_phase(Phase::Idle);
            cycles += array.cycle_count() - before;
        }
        self.write_cycles += cycles;
        Ok(cycles)
    }

    /// Read the programmed model back from the device states.
    pub fn extract_model(&self) -> Result<BinarizedModel, NetworkError> {
        let mut layers = Vec::with_capacity(self.arrays.len());
        for array in &self.arrays {
            let rows = array.extract_weights()?;
            let n = array.n_inputs();
            let mut weights = Vec::with_capacity(array.m_rows() * n);
            let mut biases = Vec::with_capacity(array.m_rows());
            for row in rows {
                weights.extend_from_slice(&row[..n]);
                biases.push(row[n]);
            }
            layers.push(BinLayer { weights, biases });
        }
        BinarizedModel::new(self.topology.clone(), layers)
    }

    /// Calibrate every array with one shared parameter set, sized for the
    /// widest layer so every amplifier swing stays inside its clamps.
    pub fn calibrate(
        &mut self,
        target: &CalibrationTarget,
    ) -> Result<CalibrationParams, NetworkError> {
        let max_terms = self
            .arrays
            .iter()
            .map(CrossbarArray::terms_per_row)
            .max()
            .expect("topology guarantees at least one array");
        let params = self.arrays[0].calibration_params_for_terms(target, max_terms)?;
        for array in &mut self.arrays {
            array.apply_calibration(&params)?;
        }
        self.calibration = Some(params);
        Ok(params)
    }

    /// Perturb every device in every array; layer k uses seed + k so the
    /// draw is deterministic yet uncorrelated across layers.
    pub fn apply_variation(&mut self, sigma: f64, seed: u64) -> Result<(), NetworkError> {
        for (k, array) in self.arrays.iter_mut().enumerate() {
            array.apply_variation(sigma, seed.wrapping_add(k as u64))?;
        }
        Ok(())
    }

    /// Whole-network combinational inference: evaluate the arrays in chain
    /// order with the affine re-scaler between layers. The returned cycle
    /// count is exactly 1 for any depth; the signals each array would see
    /// are validated along the way.
    pub fn forward(&self, input_voltages: &[f64]) -> Result<(Vec<f64>, u64), NetworkError> {
        let calib = self.calibration.ok_or(NetworkError::NotCalibrated)?;
        let mut voltages = input_voltages.to_vec();
        for (k, array) in self.arrays.iter().enumerate() {
            let signals = signals_for_inference(array.m_rows(), &voltages);
            let violations = validate_signals(&signals, Phase::Inference, array.vdd());
            if !violations.is_empty() {
                return Err(NetworkError::Crossbar(CrossbarError::SignalViolation(violations)));
            }
            let outputs = array.evaluate(&voltages)?;
            if k + 1 == self.arrays.len() {
                return Ok((outputs, 1));
            }
            voltages = outputs
                .iter()
                .map(|v| (v - array.vss()) / (array.vdd() - array.vss()) * calib.v_read)
                .collect();
        }
        unreachable!("topology guarantees at least one array");
    }
}

/// Argmax class index with lowest-index tie-break.
pub fn classify(outputs: &[f64]) -> usize {
    math::argmax(outputs)
}

/// Exact-math forward of a binarized model: per layer o = sigmoid(-(Wx + b)),
/// the output of each layer feeding the next directly. Returns every layer's
/// activations; the last entry is the network output. This is the oracle the
/// calibrated analog chain must match.
pub fn ideal_forward(model: &BinarizedModel, x: &[f64]) -> Vec<Vec<f64>> {
    let sizes = model.topology().layer_sizes();
    assert_eq!(x.len(), sizes[0], "input length must match the topology");
    let mut activations = Vec::with_capacity(model.layers().len());
    let mut current: Vec<f64> = x.to_vec();
    for (l, layer) in model.layers().iter().enumerate() {
        let n = sizes[l];
        let m = sizes[l + 1];
        let mut next = Vec::with_capacity(m);
        for r in 0..m {
            let mut y = 0.0;
            let row = &layer.weights[r * n..(r + 1) * n];
            for (w, x) in row.iter().zip(current.iter()) {
                y += f64::from(*w) * x;
            }
            y += f64::from(layer.biases[r]);
            next.push(math::sigmoid(-y));
        }
        activations.push(next.clone());
        current = next;
    }
    activations
}

/// Network output of the exact-math forward.
pub fn ideal_outputs(model: &BinarizedModel, x: &[f64]) -> Vec<f64> {
    ideal_forward(model, x).pop().expect("at least one layer")
}
