//! An n-input x m-row SOT-MRAM crossbar subarray.
//!
//! The array holds one synapse per (row, column), an optional per-row bias
//! synapse driven at the read voltage, and one differential amplifier plus
//! one sigmoidal neuron per row. Programming is row-serial (one write word
//! line per clock cycle, so an m-row array programs in exactly m cycles);
//! inference evaluates every row in parallel in exactly one cycle.
//!
//! Control-line signaling:
//!
//! | phase      | WWL               | RWL | BL   | SL   | IN   |
//! |------------|-------------------|-----|------|------|------|
//! | write +1   | VDD on one row    | GND | VDD  | GND  | Hi-Z |
//! | write -1   | VDD on one row    | GND | GND  | VDD  | Hi-Z |
//! | inference  | GND on all rows   | VDD | Hi-Z | Hi-Z | Vin  |
//!
//! `validate_signals` enforces the table; `program_row` and `infer` build
//! their own signal vectors and check them against it before touching any
//! device.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bitcells::{BitcellError, DiffAmp, NeuronBitcell, SynapseBitcell, VtcModel};
use crate::device::{DeviceGeometry, MaterialParams, SotMramCell, MagState};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum CrossbarError {
    /// Operation issued in the wrong phase.
    WrongPhase { expected: Phase, found: Phase },
    /// Row index beyond the array.
    RowOutOfRange { row: usize, m_rows: usize },
    /// A weight row of the wrong length.
    WeightLength { expected: usize, found: usize },
    /// A weight outside {-1, +1}.
    InvalidWeight { row: usize, col: usize, value: i32 },
    /// Weight matrix with the wrong number of rows.
    DimensionMismatch { expected_rows: usize, found_rows: usize },
    /// Input vector of the wrong length.
    InputLength { expected: usize, found: usize },
    /// An input voltage outside [0, v_read].
    InputOutOfRange { index: usize, value: f64, v_read: f64 },
    /// The array has unprogrammed devices.
    NotProgrammed,
    /// Inference before calibration.
    NotCalibrated,
    /// The calibration passed to infer does not match the applied one.
    CalibrationMismatch,
    /// G_P equals G_AP, so no weight can be sensed.
    DegenerateDevice,
    /// Calibration target out of range.
    InvalidCalibrationTarget { v_read: f64 },
    /// Internally generated signals failed validation (invariant breach).
    SignalViolation(Vec<Violation>),
    /// Variation parameters out of range.
    InvalidVariation { sigma: f64 },
    /// Bubbled up from a bitcell.
    Bitcell(BitcellError),
}

impl From<BitcellError> for CrossbarError {
    fn from(e: BitcellError) -> Self {
        CrossbarError::Bitcell(e)
    }
}

impl fmt::Display for CrossbarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossbarError::WrongPhase { expected, found } => {
                write!(f, "array in phase {found:?}, operation requires {expected:?}")
            }
            CrossbarError::RowOutOfRange { row, m_rows } => {
                write!(f, "row {row} out of range for {m_rows}-row array")
            }
            CrossbarError::WeightLength { expected, found } => {
                write!(f, "weight row length {found}, expected {expected}")
            }
            CrossbarError::InvalidWeight { row, col, value } => {
                write!(f, "weight at ({row}, {col}) must be -1 or +1, got {value}")
            }
            CrossbarError::DimensionMismatch { expected_rows, found_rows } => {
                write!(f, "weight matrix has {found_rows} rows, expected {expected_rows}")
            }
            CrossbarError::InputLength { expected, found } => {
                write!(f, "input vector length {found}, expected {expected}")
            }
            CrossbarError::InputOutOfRange { index, value, v_read } => {
                write!(f, "input {index} is {value} V, outside [0, {v_read}] V")
            }
            CrossbarError::NotProgrammed => write!(f, "array has unprogrammed devices"),
            CrossbarError::NotCalibrated => write!(f, "array has not been calibrated"),
            CrossbarError::CalibrationMismatch => {
                write!(f, "calibration parameters do not match the ones applied to the array")
            }
            CrossbarError::DegenerateDevice => {
                write!(f, "G_P equals G_AP at the read bias; calibration impossible")
            }
            CrossbarError::InvalidCalibrationTarget { v_read } => {
                write!(f, "calibration read voltage {v_read} V out of range")
            }
            CrossbarError::SignalViolation(violations) => {
                write!(f, "internally generated signals failed validation:")?;
                for v in violations {
                    write!(f, " [{v}]")?;
                }
                Ok(())
            }
            CrossbarError::InvalidVariation { sigma } => {
                write!(f, "variation sigma {sigma} out of range")
            }
            CrossbarError::Bitcell(e) => write!(f, "{e}"),
        }
    }
}

/// Operating phase of the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Training,
    Inference,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Idle => f.write_str("Idle"),
            Phase::Training => f.write_str("Training"),
            Phase::Inference => f.write_str("Inference"),
        }
    }
}

/// State of one control or input line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineState {
    Vdd,
    Gnd,
    HiZ,
    /// An analog input voltage.
    Vin(f64),
}

impl fmt::Display for LineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineState::Vdd => f.write_str("VDD"),
            LineState::Gnd => f.write_str("GND"),
            LineState::HiZ => f.write_str("Hi-Z"),
            LineState::Vin(v) => write!(f, "VIN({v})"),
        }
    }
}

/// Every line driven into the array for one operation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignals {
    /// Write word lines, one per row.
    pub wwl: Vec<LineState>,
    /// Read word line (shared).
    pub rwl: LineState,
    /// Bit line (shared).
    pub bl: LineState,
    /// Source line (shared).
    pub sl: LineState,
    /// Input lines, one per column.
    pub inputs: Vec<LineState>,
}

/// One departure from the required signaling, naming the offending line.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub line: String,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: expected {}, found {}", self.line, self.expected, self.found)
    }
}

fn violation(line: String, expected: &str, found: &LineState) -> Violation {
    Violation { line, expected: String::from(expected), found: found.to_string() }
}

/// Signal vector for writing one weight into one row.
pub fn signals_for_write(m_rows: usize, n_inputs: usize, row: usize, weight: i8) -> ControlSignals {
    let mut wwl = vec![LineState::Gnd; m_rows];
    if row < m_rows {
        wwl[row] = LineState::Vdd;
    }
    let (bl, sl) = if weight >= 0 {
        (LineState::Vdd, LineState::Gnd)
    } else {
        (LineState::Gnd, LineState::Vdd)
    };
    ControlSignals { wwl, rwl: LineState::Gnd, bl, sl, inputs: vec![LineState::HiZ; n_inputs] }
}

/// Signal vector for one parallel inference over all rows.
pub fn signals_for_inference(m_rows: usize, input_voltages: &[f64]) -> ControlSignals {
    ControlSignals {
        wwl: vec![LineState::Gnd; m_rows],
        rwl: LineState::Vdd,
        bl: LineState::HiZ,
        sl: LineState::HiZ,
        inputs: input_voltages.iter().map(|v| LineState::Vin(*v)).collect(),
    }
}

/// Check a signal vector against the required pattern for the phase. An
/// empty list means the signals conform; each entry names the offending
/// line and the state it should carry.
pub fn validate_signals(signals: &ControlSignals, phase: Phase, vdd: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    match phase {
        Phase::Idle => {
            out.push(Violation {
                line: String::from("PHASE"),
                expected: String::from("Training or Inference"),
                found: String::from("Idle"),
            });
        }
        Phase::Training => {
            let selected = signals.wwl.iter().filter(|s| **s == LineState::Vdd).count();
            if selected != 1 {
                out.push(Violation {
                    line: String::from("WWL"),
                    expected: String::from("VDD on exactly one row"),
                    found: format!("VDD on {selected} rows"),
                });
            }
            for (i, s) in signals.wwl.iter().enumerate() {
                if *s != LineState::Vdd && *s != LineState::Gnd {
                    out.push(violation(format!("WWL[{i}]"), "VDD or GND", s));
                }
            }
            if signals.rwl != LineState::Gnd {
                out.push(violation(String::from("RWL"), "GND", &signals.rwl));
            }
            match (signals.bl, signals.sl) {
                (LineState::Vdd, LineState::Gnd) | (LineState::Gnd, LineState::Vdd) => {}
                (LineState::Vdd, sl) => {
                    out.push(violation(String::from("SL"), "GND", &sl));
                }
                (LineState::Gnd, sl) => {
                    out.push(violation(String::from("SL"), "VDD", &sl));
                }
                (bl, _) => {
                    out.push(violation(
                        String::from("BL"),
                        "VDD or GND (complementary with SL)",
                        &bl,
                    ));
                }
            }
            for (i, s) in signals.inputs.iter().enumerate() {
                if *s != LineState::HiZ {
                    out.push(violation(format!("IN[{i}]"), "Hi-Z", s));
                }
            }
        }
        Phase::Inference => {
            for (i, s) in signals.wwl.iter().enumerate() {
                if *s != LineState::Gnd {
                    out.push(violation(format!("WWL[{i}]"), "GND", s));
                }
            }
            if signals.rwl != LineState::Vdd {
                out.push(violation(String::from("RWL"), "VDD", &signals.rwl));
            }
            if signals.bl != LineState::HiZ {
                out.push(violation(String::from("BL"), "Hi-Z", &signals.bl));
            }
            if signals.sl != LineState::HiZ {
                out.push(violation(String::from("SL"), "Hi-Z", &signals.sl));
            }
            for (i, s) in signals.inputs.iter().enumerate() {
                match s {
                    LineState::Vin(v) if v.is_finite() && *v >= 0.0 && *v <= vdd => {}
                    other => {
                        out.push(violation(
                            format!("IN[{i}]"),
                            "VIN within [0, vdd]",
                            other,
                        ));
                    }
                }
            }
        }
    }
    out
}

/// What calibration should aim for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    /// Read voltage representing a full-scale (1.0) input.
    pub v_read: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        CalibrationTarget { v_read: 0.1 }
    }
}

/// Analog scale factors chosen by calibration.
///
/// `pre_activation_scale` is the amplifier output in volts produced by one
/// unit of algorithmic pre-activation (one full-scale input through one +1
/// synapse); the neuron slope is its reciprocal, so one algorithmic unit
/// maps onto exactly one logistic unit of the VTC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub v_read: f64,
    /// G_P - G_AP at the read bias, for nominal (variation-free) devices.
    pub unit_conductance_delta: f64,
    pub pre_activation_scale: f64,
}

/// The crossbar subarray.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarArray {
    n_inputs: usize,
    m_rows: usize,
    /// Row-major m x n synapse grid.
    synapses: Vec<SynapseBitcell>,
    /// One bias synapse per row, driven at v_read during inference.
    bias_column: Option<Vec<SynapseBitcell>>,
    amps: Vec<DiffAmp>,
    neurons: Vec<NeuronBitcell>,
    neuron_programmed: Vec<bool>,
    phase: Phase,
    cycle_count: u64,
    geometry: DeviceGeometry,
    params: MaterialParams,
    vdd: f64,
    vss: f64,
    calibration: Option<CalibrationParams>,
}

impl CrossbarArray {
    /// Build an array with a bias column (the configuration the MLP uses).
    pub fn new(
        n_inputs: usize,
        m_rows: usize,
        geometry: DeviceGeometry,
        params: MaterialParams,
        vdd: f64,
        vss: f64,
    ) -> Result<Self, CrossbarError> {
        Self::build(n_inputs, m_rows, geometry, params, vdd, vss, true)
    }

    /// Build an array without a bias column (pure weight grid).
    pub fn without_bias(
        n_inputs: usize,
        m_rows: usize,
        geometry: DeviceGeometry,
        params: MaterialParams,
        vdd: f64,
        vss: f64,
    ) -> Result<Self, CrossbarError> {
        Self::build(n_inputs, m_rows, geometry, params, vdd, vss, false)
    }

    /// Default device stack, 0.8 V / 0 V rails, bias column present.
    pub fn with_defaults(n_inputs: usize, m_rows: usize) -> Result<Self, CrossbarError> {
        Self::new(
            n_inputs,
            m_rows,
            DeviceGeometry::default(),
            MaterialParams::default(),
            0.8,
            0.0,
        )
    }

    fn build(
        n_inputs: usize,
        m_rows: usize,
        geometry: DeviceGeometry,
        params: MaterialParams,
        vdd: f64,
        vss: f64,
        with_bias: bool,
    ) -> Result<Self, CrossbarError> {
        if n_inputs == 0 || m_rows == 0 {
            return Err(CrossbarError::DimensionMismatch {
                expected_rows: 1,
                found_rows: 0,
            });
        }
        let synapse = SynapseBitcell::new(geometry, params);
        let synapses = vec![synapse.clone(); n_inputs * m_rows];
        let bias_column = if with_bias { Some(vec![synapse; m_rows]) } else { None };
        let half_swing = (vdd - vss) / 2.0;
        let amp = DiffAmp::new(1.0, -half_swing, half_swing)?;
        let neuron = NeuronBitcell::new(geometry, params, vdd, vss, 1.0)?;
        Ok(CrossbarArray {
            n_inputs,
            m_rows,
            synapses,
            bias_column,
            amps: vec![amp; m_rows],
            neurons: vec![neuron; m_rows],
            neuron_programmed: vec![false; m_rows],
            phase: Phase::Idle,
            cycle_count: 0,
            geometry,
            params,
            vdd,
            vss,
            calibration: None,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn m_rows(&self) -> usize {
        self.m_rows
    }

    pub fn has_bias_column(&self) -> bool {
        self.bias_column.is_some()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn cycle_count(&self) -> u64 {
        self.cycle_count
    }

    pub fn vdd(&self) -> f64 {
        self.vdd
    }

    pub fn vss(&self) -> f64 {
        self.vss
    }

    pub fn geometry(&self) -> &DeviceGeometry {
        &self.geometry
    }

    pub fn material_params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn calibration(&self) -> Option<&CalibrationParams> {
        self.calibration.as_ref()
    }

    pub fn synapse(&self, row: usize, col: usize) -> &SynapseBitcell {
        assert!(row < self.m_rows && col < self.n_inputs, "synapse index out of range");
        &self.synapses[row * self.n_inputs + col]
    }

    pub fn bias_cell(&self, row: usize) -> Option<&SynapseBitcell> {
        self.bias_column.as_ref().map(|b| &b[row])
    }

    pub fn neuron(&self, row: usize) -> &NeuronBitcell {
        &self.neurons[row]
    }

    pub fn amp(&self, row: usize) -> &DiffAmp {
        &self.amps[row]
    }

    /// Number of summed terms per row: the inputs plus the bias column.
    pub fn terms_per_row(&self) -> usize {
        self.n_inputs + usize::from(self.bias_column.is_some())
    }

    /// Length of a weight row accepted by `program_row`, bias included.
    pub fn weights_per_row(&self) -> usize {
        self.terms_per_row()
    }

    /// All synapses and bias cells programmed and every row's neuron driven
    /// to its required states.
    pub fn is_programmed(&self) -> bool {
        self.synapses.iter().all(SynapseBitcell::is_programmed)
            && self
                .bias_column
                .as_ref()
                .map(|b| b.iter().all(SynapseBitcell::is_programmed))
                .unwrap_or(true)
            && self.neuron_programmed.iter().all(|p| *p)
    }

    /// Read the programmed weights back, bias last in each row.
    pub fn extract_weights(&self) -> Result<Vec<Vec<i8>>, CrossbarError> {
        let mut rows = Vec::with_capacity(self.m_rows);
        for r in 0..self.m_rows {
            let mut row = Vec::with_capacity(self.weights_per_row());
            for c in 0..self.n_inputs {
                row.push(self.synapse(r, c).weight()?);
            }
            if let Some(bias) = &self.bias_column {
                row.push(bias[r].weight()?);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Program one row in one clock cycle. `weights` covers the synapse
    /// columns in order, with the bias weight last when the array has a bias
    /// column. The constructed control signals are checked against the
    /// signaling table before any device is written.
    pub fn program_row(&mut self, row: usize, weights: &[i8]) -> Result<(), CrossbarError> {
        if self.phase != Phase::Training {
            return Err(CrossbarError::WrongPhase { expected: Phase::Training, found: self.phase });
        }
        if row >= self.m_rows {
            return Err(CrossbarError::RowOutOfRange { row, m_rows: self.m_rows });
        }
        if weights.len() != self.weights_per_row() {
            return Err(CrossbarError::WeightLength {
                expected: self.weights_per_row(),
                found: weights.len(),
            });
        }
        for (col, w) in weights.iter().enumerate() {
            if *w != 1 && *w != -1 {
                return Err(CrossbarError::InvalidWeight { row, col, value: *w as i32 });
            }
        }
        for w in [1i8, -1] {
            if weights.contains(&w) {
                let signals = signals_for_write(self.m_rows, self.n_inputs, row, w);
                let violations = validate_signals(&signals, Phase::Training, self.vdd);
                if !violations.is_empty() {
                    return Err(CrossbarError::SignalViolation(violations));
                }
            }
        }
        let row_cells = &mut self.synapses[row * self.n_inputs..(row + 1) * self.n_inputs];
        for (cell, &w) in row_cells.iter_mut().zip(weights) {
            cell.program(w)?;
        }
        if let Some(bias) = &mut self.bias_column {
            bias[row].program(weights[self.n_inputs])?;
        }
        self.neurons[row].program();
        self.neuron_programmed[row] = true;
        self.cycle_count += 1;
        Ok(())
    }

    /// Program every row, one cycle each: an m-row array costs exactly m
    /// cycles, with the neuron bitcells written concurrently at no extra
    /// cycle cost.
    pub fn program_array(&mut self, weights: &[Vec<i8>]) -> Result<(), CrossbarError> {
        if weights.len() != self.m_rows {
            return Err(CrossbarError::DimensionMismatch {
                expected_rows: self.m_rows,
                found_rows: weights.len(),
            });
        }
        for (r, row) in weights.iter().enumerate() {
            self.program_row(r, row)?;
        }
        Ok(())
    }

    /// Choose the analog scale factors for this array and apply them.
    ///
    /// One unit of algorithmic pre-activation (a full-scale input through a
    /// +1 synapse) maps to `pre_activation_scale` volts at the amplifier,
    /// and the neuron slope is set to its reciprocal, so amplifier volts
    /// convert one-to-one into logistic units. The scale is sized so the
    /// largest possible pre-activation magnitude (every term saturated)
    /// lands exactly at the amplifier clamp. Requires a parametric VTC on
    /// every neuron.
    pub fn calibrate(&mut self, target: &CalibrationTarget) -> Result<CalibrationParams, CrossbarError> {
        if !self.is_programmed() {
            return Err(CrossbarError::NotProgrammed);
        }
        let params = self.calibration_params_for_terms(target, self.terms_per_row())?;
        self.apply_calibration(&params)?;
        Ok(params)
    }

    /// Compute calibration parameters sized for `max_terms` summed terms per
    /// row (used directly by single-array calibration; the network passes
    /// the widest layer so one parameter set serves every array).
    pub fn calibration_params_for_terms(
        &self,
        target: &CalibrationTarget,
        max_terms: usize,
    ) -> Result<CalibrationParams, CrossbarError> {
        if target.v_read <= 0.0 || !target.v_read.is_finite() || target.v_read > self.vdd {
            return Err(CrossbarError::InvalidCalibrationTarget { v_read: target.v_read });
        }
        let delta = self.nominal_conductance_delta(target.v_read);
        if delta <= 0.0 || !delta.is_finite() {
            return Err(CrossbarError::DegenerateDevice);
        }
        let scale = (self.vdd - self.vss) / (2.0 * max_terms as f64);
        Ok(CalibrationParams {
            v_read: target.v_read,
            unit_conductance_delta: delta,
            pre_activation_scale: scale,
        })
    }

    /// G_P - G_AP at the given bias for a nominal device of this array's
    /// stack (variation factors excluded).
    pub fn nominal_conductance_delta(&self, v_bias: f64) -> f64 {
        let reference = SotMramCell::new(self.geometry, self.params, MagState::Parallel);
        let r_p = reference.r_mtj();
        let r_ap = r_p * (1.0 + self.params.tmr(v_bias));
        1.0 / r_p - 1.0 / r_ap
    }

    /// Apply externally computed calibration parameters (shared-network
    /// case). The parameters' conductance delta must match this array's
    /// nominal devices.
    pub fn apply_calibration(&mut self, params: &CalibrationParams) -> Result<(), CrossbarError> {
        if !self.is_programmed() {
            return Err(CrossbarError::NotProgrammed);
        }
        let own_delta = self.nominal_conductance_delta(params.v_read);
        if own_delta <= 0.0 || !own_delta.is_finite() {
            return Err(CrossbarError::DegenerateDevice);
        }
        if (own_delta - params.unit_conductance_delta).abs() > 1e-12 * own_delta {
            return Err(CrossbarError::CalibrationMismatch);
        }
        let gain = params.pre_activation_scale / (params.v_read * params.unit_conductance_delta);
        let half_swing = (self.vdd - self.vss) / 2.0;
        let amp = DiffAmp::new(gain, -half_swing, half_swing)?;
        for a in &mut self.amps {
            *a = amp;
        }
        let gain_k = 1.0 / params.pre_activation_scale;
        for n in &mut self.neurons {
            n.set_gain_k(gain_k)?;
        }
        self.calibration = Some(*params);
        Ok(())
    }

    /// Replace every neuron's VTC (for externally extracted curves). After
    /// this the array is no longer recalibratable until parametric VTCs are
    /// restored, and oracle-exact agreement no longer applies.
    pub fn set_neuron_vtc(&mut self, vtc: &VtcModel) -> Result<(), CrossbarError> {
        for n in &mut self.neurons {
            n.attach_vtc(vtc.clone())?;
        }
        Ok(())
    }

    /// Evaluate all rows combinationally. Read-only: no phase change, no
    /// cycle accounting (see `infer`). Per row, synapse currents are summed
    /// column by column with the conductances at the calibration read bias,
    /// the bias column contributes at full v_read, the amplifier converts
    /// the differential current to volts, and the neuron is driven at its
    /// bias point plus that swing.
    pub fn evaluate(&self, inputs: &[f64]) -> Result<Vec<f64>, CrossbarError> {
        let calib = self.calibration.ok_or(CrossbarError::NotCalibrated)?;
        if !self.is_programmed() {
            return Err(CrossbarError::NotProgrammed);
        }
        if inputs.len() != self.n_inputs {
            return Err(CrossbarError::InputLength {
                expected: self.n_inputs,
                found: inputs.len(),
            });
        }
        for (i, v) in inputs.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 || *v > calib.v_read {
                return Err(CrossbarError::InputOutOfRange {
                    index: i,
                    value: *v,
                    v_read: calib.v_read,
                });
            }
        }
        let mut outputs = Vec::with_capacity(self.m_rows);
        for r in 0..self.m_rows {
            let mut i_plus = 0.0;
            let mut i_minus = 0.0;
            let row_cells = &self.synapses[r * self.n_inputs..(r + 1) * self.n_inputs];
            for (cell, &v_in) in row_cells.iter().zip(inputs) {
                let (p, m) = cell.currents_at_bias(v_in, calib.v_read);
                i_plus += p;
                i_minus += m;
            }
            if let Some(bias) = &self.bias_column {
                let (p, m) = bias[r].currents_at_bias(calib.v_read, calib.v_read);
                i_plus += p;
                i_minus += m;
            }
            let v_pre = self.amps[r].output(i_plus, i_minus);
            let neuron = &self.neurons[r];
            outputs.push(neuron.transfer(neuron.bias_point() + v_pre));
        }
        Ok(outputs)
    }

    /// One inference: validates phase and signaling, evaluates every row in
    /// parallel, and charges exactly one clock cycle regardless of the
    /// array dimensions.
    pub fn infer(
        &mut self,
        inputs: &[f64],
        calib: &CalibrationParams,
    ) -> Result<(Vec<f64>, u64), CrossbarError> {
        if self.phase != Phase::Inference {
            return Err(CrossbarError::WrongPhase {
                expected: Phase::Inference,
                found: self.phase,
            });
        }
        match self.calibration {
            Some(applied) if applied == *calib => {}
            Some(_) => return Err(CrossbarError::CalibrationMismatch),
            None => return Err(CrossbarError::NotCalibrated),
        }
        let signals = signals_for_inference(self.m_rows, inputs);
        let violations = validate_signals(&signals, Phase::Inference, self.vdd);
        if !violations.is_empty() {
            return Err(CrossbarError::SignalViolation(violations));
        }
        let outputs = self.evaluate(inputs)?;
        self.cycle_count += 1;
        Ok((outputs, 1))
    }

    /// Perturb every device's resistance by an independent multiplicative
    /// Gaussian factor 1 + sigma * z (z standard normal), floored at 0.05 to
    /// keep resistances physical. Deterministic for a given seed.
    pub fn apply_variation(&mut self, sigma: f64, seed: u64) -> Result<(), CrossbarError> {
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(CrossbarError::InvalidVariation { sigma });
        }
        if sigma == 0.0 {
            return Ok(());
        }
        let normal = Normal::new(0.0, sigma)
            .map_err(|_| CrossbarError::InvalidVariation { sigma })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perturb = |cell: &mut SotMramCell| {
            let z: f64 = normal.sample(&mut rng);
            cell.resistance_factor = math::clamp(1.0 + z, 0.05, f64::MAX);
        };
        for s in &mut self.synapses {
            perturb(&mut s.mram_plus);
            perturb(&mut s.mram_minus);
        }
        if let Some(bias) = &mut self.bias_column {
            for s in bias {
                perturb(&mut s.mram_plus);
                perturb(&mut s.mram_minus);
            }
        }
        for n in &mut self.neurons {
            perturb(&mut n.mram1);
            perturb(&mut n.mram2);
        }
        Ok(())
    }

    /// Serialize every device state plus the cycle counter to the
    /// plain-text snapshot format:
    ///
    /// ```text
    /// crossbar-snapshot v1
    /// dims <n_inputs> <m_rows> <bias: 0|1>
    /// phase <Idle|Training|Inference>
    /// cycles <count>
    /// geometry <mtj_l> <mtj_w> <hm_l> <hm_w> <hm_t>
    /// material <ra> <tmr0> <v0>
    /// rails <vdd> <vss>
    /// synapse <row> <col> <P|AP|-> <P|AP|-> <factor+> <factor->
    /// bias <row> ...            (same columns, if the bias column exists)
    /// neuron <row> <P|AP> <P|AP> <factor1> <factor2>
    /// ```
    ///
    /// '-' marks an unprogrammed cell. Numbers use shortest-round-trip
    /// formatting, so identical state always yields byte-identical text.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "crossbar-snapshot v1");
        let _ = writeln!(
            out,
            "dims {} {} {}",
            self.n_inputs,
            self.m_rows,
            u8::from(self.bias_column.is_some())
        );
        let _ = writeln!(out, "phase {}", self.phase);
        let _ = writeln!(out, "cycles {}", self.cycle_count);
        let g = &self.geometry;
        let _ = writeln!(
            out,
            "geometry {} {} {} {} {}",
            g.mtj_length, g.mtj_width, g.hm_length, g.hm_width, g.hm_thickness
        );
        let _ = writeln!(out, "material {} {} {}", self.params.ra_product, self.params.tmr0, self.params.v0);
        let _ = writeln!(out, "rails {} {}", self.vdd, self.vss);
        let cell_tokens = |s: &SynapseBitcell| -> (&'static str, &'static str) {
            if s.is_programmed() {
                (s.mram_plus.state.token(), s.mram_minus.state.token())
            } else {
                ("-", "-")
            }
        };
        for r in 0..self.m_rows {
            for c in 0..self.n_inputs {
                let s = self.synapse(r, c);
                let (p, m) = cell_tokens(s);
                let _ = writeln!(
                    out,
                    "synapse {r} {c} {p} {m} {} {}",
                    s.mram_plus.resistance_factor, s.mram_minus.resistance_factor
                );
            }
            if let Some(bias) = &self.bias_column {
                let s = &bias[r];
                let (p, m) = cell_tokens(s);
                let _ = writeln!(
                    out,
                    "bias {r} {p} {m} {} {}",
                    s.mram_plus.resistance_factor, s.mram_minus.resistance_factor
                );
            }
            let n = &self.neurons[r];
            let _ = writeln!(
                out,
                "neuron {r} {} {} {} {}",
                n.mram1.state.token(),
                n.mram2.state.token(),
                n.mram1.resistance_factor,
                n.mram2.resistance_factor
            );
        }
        out
    }
}

/// Exact-math oracle for one array: o_r = sigmoid(-(w_r . x + b_r)) with the
/// bias weight last in each row. This is the function the calibrated analog
/// path must reproduce.
pub fn ideal_row_forward(weights: &[Vec<i8>], x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(weights.len());
    for row in weights {
        assert_eq!(row.len(), x.len() + 1, "weight row must carry the bias last");
        let mut y = 0.0;
        for (w, xi) in row[..x.len()].iter().zip(x.iter()) {
            y += f64::from(*w) * xi;
        }
        y += f64::from(row[x.len()]);
        out.push(math::sigmoid(-y));
    }
    out
}

/// Deterministically sample a +-1 weight matrix, bias column included (rows
/// of length n + 1), for tests and report tooling.
pub fn seeded_weight_matrix(m_rows: usize, n_inputs: usize, seed: u64) -> Vec<Vec<i8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m_rows)
        .map(|_| {
            (0..=n_inputs)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect()
        })
        .collect()
}
