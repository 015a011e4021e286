//! Composite bitcells built from SOT-MRAM devices.
//!
//! Two cells exist:
//! - the sigmoidal neuron: two devices forming a voltage divider under an
//!   inverter whose voltage transfer characteristic (VTC) realizes a
//!   falling sigmoid biased around b = (vdd - vss) / 2;
//! - the differential binary synapse: two devices in opposite states whose
//!   conductance difference encodes a weight in {-1, +1}, sensed by a
//!   differential transimpedance amplifier.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::device::{DeviceGeometry, MagState, MaterialParams, SotMramCell, WritePolarity};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum BitcellError {
    /// A synapse weight outside {-1, +1}.
    InvalidWeight(i32),
    /// Reading a weight from a synapse that was never programmed.
    UnprogrammedSynapse,
    /// Reading a weight from a device pair in equal states.
    EqualStates(MagState),
    /// vdd must exceed vss.
    InvalidRails { vdd: f64, vss: f64 },
    /// Amplifier gain must be positive and clamps ordered.
    InvalidAmp { gain: f64, clamp_low: f64, clamp_high: f64 },
    /// A tabulated VTC needs at least two samples.
    VtcTooFewSamples(usize),
    /// A tabulated VTC sample holds a NaN or infinite coordinate.
    VtcNotFinite { index: usize },
    /// Tabulated VTC input column must be strictly increasing.
    VtcInputNotIncreasing { index: usize },
    /// Tabulated VTC output column must be non-increasing.
    VtcOutputIncreasing { index: usize },
    /// Tabulated VTC output left the [vss, vdd] window.
    VtcOutputOutOfRange { index: usize, value: f64 },
    /// A VTC table line failed to parse.
    VtcParse { line: usize, message: String },
    /// The operation needs a parametric VTC (calibration cannot choose a
    /// slope for an externally tabulated curve).
    VtcNotParametric,
}

impl fmt::Display for BitcellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitcellError::InvalidWeight(w) => write!(f, "synapse weight must be -1 or +1, got {w}"),
            BitcellError::UnprogrammedSynapse => write!(f, "synapse has not been programmed"),
            BitcellError::EqualStates(s) => {
                write!(f, "synapse devices both in {s}: no weight is encoded")
            }
            BitcellError::InvalidRails { vdd, vss } => {
                write!(f, "supply rails invalid: vdd {vdd} must exceed vss {vss}")
            }
            BitcellError::InvalidAmp { gain, clamp_low, clamp_high } => write!(
                f,
                "amplifier parameters invalid: gain {gain}, clamps [{clamp_low}, {clamp_high}]"
            ),
            BitcellError::VtcTooFewSamples(n) => {
                write!(f, "VTC table needs at least 2 samples, got {n}")
            }
            BitcellError::VtcNotFinite { index } => {
                write!(f, "VTC sample {index} has a non-finite coordinate")
            }
            BitcellError::VtcInputNotIncreasing { index } => {
                write!(f, "VTC input column not strictly increasing at sample {index}")
            }
            BitcellError::VtcOutputIncreasing { index } => {
                write!(f, "VTC output column increases at sample {index}")
            }
            BitcellError::VtcOutputOutOfRange { index, value } => {
                write!(f, "VTC output {value} at sample {index} outside the supply window")
            }
            BitcellError::VtcParse { line, message } => {
                write!(f, "VTC table line {line}: {message}")
            }
            BitcellError::VtcNotParametric => {
                write!(f, "operation requires a parametric VTC, found a tabulated one")
            }
        }
    }
}

/// Voltage transfer characteristic of the neuron inverter.
#[derive(Debug, Clone, PartialEq)]
pub enum VtcModel {
    /// Closed-form falling sigmoid with slope `gain_k` (per volt) around the
    /// bias point.
    Parametric { gain_k: f64 },
    /// Externally extracted curve as (v_in, v_out) samples, strictly
    /// increasing in v_in and non-increasing in v_out. Inputs that match a
    /// sample reproduce its output exactly; between samples the curve is
    /// piecewise-linear, and outside it the endpoint outputs hold.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl VtcModel {
    /// Validate tabulated samples: at least two, strictly increasing inputs,
    /// non-increasing outputs.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self, BitcellError> {
        if samples.len() < 2 {
            return Err(BitcellError::VtcTooFewSamples(samples.len()));
        }
        for (i, (v_in, v_out)) in samples.iter().enumerate() {
            if !v_in.is_finite() || !v_out.is_finite() {
                return Err(BitcellError::VtcNotFinite { index: i });
            }
        }
        for i in 1..samples.len() {
            if samples[i].0 <= samples[i - 1].0 {
                return Err(BitcellError::VtcInputNotIncreasing { index: i });
            }
            if samples[i].1 > samples[i - 1].1 {
                return Err(BitcellError::VtcOutputIncreasing { index: i });
            }
        }
        Ok(VtcModel::Tabulated { samples })
    }
}

/// Parse a two-column plain-text VTC table (volts in, volts out). Lines
/// starting with '#' and blank lines are skipped. Output-range checking
/// against the supply rails happens when the table is attached to a neuron.
pub fn parse_vtc_table(text: &str) -> Result<VtcModel, BitcellError> {
    let mut samples = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let v_in = parse_vtc_field(cols.next(), lineno + 1, "missing input voltage")?;
        let v_out = parse_vtc_field(cols.next(), lineno + 1, "missing output voltage")?;
        if cols.next().is_some() {
            return Err(BitcellError::VtcParse {
                line: lineno + 1,
                message: String::from("expected exactly two columns"),
            });
        }
        samples.push((v_in, v_out));
    }
    VtcModel::tabulated(samples)
}

fn parse_vtc_field(
    field: Option<&str>,
    line: usize,
    missing: &str,
) -> Result<f64, BitcellError> {
    let text = field.ok_or_else(|| BitcellError::VtcParse {
        line,
        message: String::from(missing),
    })?;
    let value: f64 = text.parse().map_err(|_| BitcellError::VtcParse {
        line,
        message: String::from("not a number"),
    })?;
    if !value.is_finite() {
        return Err(BitcellError::VtcParse { line, message: String::from("not finite") });
    }
    Ok(value)
}

/// The two-device sigmoidal neuron.
///
/// `mram1` (parallel after programming) and `mram2` (antiparallel) divide the
/// supply to bias the inverter at the center of its transition; the
/// behavioral transfer function is the fitted VTC. The device states are
/// tracked for programming and netlist fidelity; the VTC carries their
/// electrical effect.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronBitcell {
    pub mram1: SotMramCell,
    pub mram2: SotMramCell,
    pub vdd: f64,
    pub vss: f64,
    pub vtc: VtcModel,
}

impl NeuronBitcell {
    /// Build a neuron with a parametric VTC. The constructor programs the
    /// device pair, so a fresh neuron already satisfies the (P, AP)
    /// invariant.
    pub fn new(
        geometry: DeviceGeometry,
        params: MaterialParams,
        vdd: f64,
        vss: f64,
        gain_k: f64,
    ) -> Result<Self, BitcellError> {
        if vdd <= vss || !vdd.is_finite() || !vss.is_finite() {
            return Err(BitcellError::InvalidRails { vdd, vss });
        }
        Ok(NeuronBitcell {
            mram1: SotMramCell::new(geometry, params, MagState::Parallel),
            mram2: SotMramCell::new(geometry, params, MagState::AntiParallel),
            vdd,
            vss,
            vtc: VtcModel::Parametric { gain_k },
        })
    }

    /// Replace the VTC with a tabulated curve, checking its outputs against
    /// this neuron's supply window.
    pub fn attach_vtc(&mut self, vtc: VtcModel) -> Result<(), BitcellError> {
        if let VtcModel::Tabulated { samples } = &vtc {
            for (i, (_, v_out)) in samples.iter().enumerate() {
                if *v_out < self.vss || *v_out > self.vdd {
                    return Err(BitcellError::VtcOutputOutOfRange { index: i, value: *v_out });
                }
            }
        }
        self.vtc = vtc;
        Ok(())
    }

    /// Bias point b = (vdd - vss) / 2.
    pub fn bias_point(&self) -> f64 {
        (self.vdd - self.vss) / 2.0
    }

    /// Slope of a parametric VTC.
    pub fn gain_k(&self) -> Result<f64, BitcellError> {
        match &self.vtc {
            VtcModel::Parametric { gain_k } => Ok(*gain_k),
            VtcModel::Tabulated { .. } => Err(BitcellError::VtcNotParametric),
        }
    }

    /// Set the slope of a parametric VTC (used by calibration).
    pub fn set_gain_k(&mut self, gain_k: f64) -> Result<(), BitcellError> {
        match &mut self.vtc {
            VtcModel::Parametric { gain_k: g } => {
                *g = gain_k;
                Ok(())
            }
            VtcModel::Tabulated { .. } => Err(BitcellError::VtcNotParametric),
        }
    }

    /// Drive both devices to their required states: mram1 parallel, mram2
    /// antiparallel. Idempotent.
    pub fn program(&mut self) {
        self.mram1.apply_write(WritePolarity::PositiveX);
        self.mram2.apply_write(WritePolarity::NegativeX);
    }

    /// Whether the device pair is in the required (P, AP) configuration.
    pub fn is_programmed(&self) -> bool {
        self.mram1.state == MagState::Parallel && self.mram2.state == MagState::AntiParallel
    }

    /// Falling sigmoid transfer function.
    ///
    /// Parametric: vss + (vdd - vss) * sigmoid(gain_k * (b - v_in)).
    /// Tabulated: monotone piecewise-linear interpolation, clamped to the
    /// endpoint outputs outside the table.
    pub fn transfer(&self, v_in: f64) -> f64 {
        match &self.vtc {
            VtcModel::Parametric { gain_k } => {
                let b = self.bias_point();
                self.vss + (self.vdd - self.vss) * math::sigmoid(gain_k * (b - v_in))
            }
            VtcModel::Tabulated { samples } => interpolate_vtc(samples, v_in),
        }
    }
}

fn interpolate_vtc(samples: &[(f64, f64)], v_in: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if v_in <= first.0 {
        return first.1;
    }
    if v_in >= last.0 {
        return last.1;
    }
    let idx = samples.partition_point(|(x, _)| *x < v_in);
    let (x1, y1) = samples[idx];
    if x1 == v_in {
        return y1;
    }
    let (x0, y0) = samples[idx - 1];
    y0 + (y1 - y0) * (v_in - x0) / (x1 - x0)
}

/// Map a binary weight onto the differential pair's states:
/// +1 -> (Parallel, AntiParallel), -1 -> (AntiParallel, Parallel).
pub fn weight_to_states(w: i8) -> Result<(MagState, MagState), BitcellError> {
    match w {
        1 => Ok((MagState::Parallel, MagState::AntiParallel)),
        -1 => Ok((MagState::AntiParallel, MagState::Parallel)),
        other => Err(BitcellError::InvalidWeight(other as i32)),
    }
}

/// Inverse of `weight_to_states`. Equal states encode no weight.
pub fn states_to_weight(s1: MagState, s2: MagState) -> Result<i8, BitcellError> {
    match (s1, s2) {
        (MagState::Parallel, MagState::AntiParallel) => Ok(1),
        (MagState::AntiParallel, MagState::Parallel) => Ok(-1),
        (s, _) => Err(BitcellError::EqualStates(s)),
    }
}

/// The differential binary synapse: two devices whose conductance difference
/// carries one signed binary weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseBitcell {
    pub mram_plus: SotMramCell,
    pub mram_minus: SotMramCell,
    programmed: bool,
}

impl SynapseBitcell {
    /// A fresh, unprogrammed synapse. Both devices start parallel; reading a
    /// weight before programming is an error.
    pub fn new(geometry: DeviceGeometry, params: MaterialParams) -> Self {
        SynapseBitcell {
            mram_plus: SotMramCell::new(geometry, params, MagState::Parallel),
            mram_minus: SotMramCell::new(geometry, params, MagState::Parallel),
            programmed: false,
        }
    }

    pub fn is_programmed(&self) -> bool {
        self.programmed
    }

    /// Write a weight into the pair via the polarity mapping. Idempotent and
    /// last-write-wins, like the underlying device writes.
    pub fn program(&mut self, w: i8) -> Result<(), BitcellError> {
        let (plus, minus) = weight_to_states(w)?;
        self.mram_plus.apply_write(polarity_for(plus));
        self.mram_minus.apply_write(polarity_for(minus));
        self.programmed = true;
        Ok(())
    }

    /// Read the stored weight back from the device states.
    pub fn weight(&self) -> Result<i8, BitcellError> {
        if !self.programmed {
            return Err(BitcellError::UnprogrammedSynapse);
        }
        states_to_weight(self.mram_plus.state, self.mram_minus.state)
    }

    /// Differential read currents (I+, I-) = (v_in G+, v_in G-) with each
    /// conductance evaluated at bias v_in. Callers pass v_in >= 0.
    pub fn currents(&self, v_in: f64) -> (f64, f64) {
        self.currents_at_bias(v_in, v_in)
    }

    /// Differential read currents with the conductances evaluated at a fixed
    /// operating-point bias instead of the input value. Array inference uses
    /// this with the calibration read bias so the multiply-accumulate stays
    /// linear in v_in.
    pub fn currents_at_bias(&self, v_in: f64, v_bias: f64) -> (f64, f64) {
        debug_assert!(v_in >= 0.0, "read voltage must be non-negative: {v_in}");
        (
            v_in * self.mram_plus.conductance(v_bias),
            v_in * self.mram_minus.conductance(v_bias),
        )
    }
}

fn polarity_for(state: MagState) -> WritePolarity {
    match state {
        MagState::Parallel => WritePolarity::PositiveX,
        MagState::AntiParallel => WritePolarity::NegativeX,
    }
}

/// Ideal differential transimpedance amplifier with hard clamps at the
/// rails: out = clamp(gain * (i_plus - i_minus)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffAmp {
    pub transimpedance_gain: f64,
    pub v_clamp_low: f64,
    pub v_clamp_high: f64,
}

impl DiffAmp {
    pub fn new(
        transimpedance_gain: f64,
        v_clamp_low: f64,
        v_clamp_high: f64,
    ) -> Result<Self, BitcellError> {
        if transimpedance_gain <= 0.0
            || !transimpedance_gain.is_finite()
            || !v_clamp_low.is_finite()
            || !v_clamp_high.is_finite()
            || v_clamp_low >= v_clamp_high
        {
            return Err(BitcellError::InvalidAmp {
                gain: transimpedance_gain,
                clamp_low: v_clamp_low,
                clamp_high: v_clamp_high,
            });
        }
        Ok(DiffAmp { transimpedance_gain, v_clamp_low, v_clamp_high })
    }

    pub fn output(&self, i_plus: f64, i_minus: f64) -> f64 {
        math::clamp(
            self.transimpedance_gain * (i_plus - i_minus),
            self.v_clamp_low,
            self.v_clamp_high,
        )
    }
}
