//! Behavioral model of a single-cycle analog in-memory-computing MLP built
//! from SOT-MRAM sigmoidal neurons and binarized differential synapses.
//!
//! The crate is `no_std` (alloc is required) and contains no file IO; the
//! companion `sotmlp` crate supplies file handling, configuration, and the
//! command-line interface.
//!
//! Module map:
//! - [`device`]: compact model of one SOT-MRAM device (resistance vs.
//!   magnetization angle and bias voltage, polarity-driven switching).
//! - [`bitcells`]: the two composite cells built from devices: the sigmoidal
//!   neuron and the differential binary synapse, plus the differential
//!   amplifier.
//! - [`crossbar`]: an n-input x m-row subarray with control-line signaling,
//!   row-serial programming, single-cycle inference, and cycle accounting.
//! - [`network`]: crossbar arrays concatenated into an MLP, model mapping,
//!   and the exact-math forward oracle.
//! - [`trainer`]: teacher-student training with deterministic binarization,
//!   clipping, and straight-through gradients.
//! - [`dataset`]: IDX image/label parsing and input-voltage conversion.
//! - [`analysis`]: general-scaling normalization, power-area-product
//!   comparison, and the latency report.
//! - [`netlist`]: deterministic SPICE-style netlist export.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod bitcells;
pub mod crossbar;
pub mod dataset;
pub mod device;
pub mod math;
pub mod netlist;
pub mod network;
pub mod trainer;
