//! Command-line front end for the SOT-MRAM analog MLP simulator.
//!
//! The heavy lifting lives in `sotmlp-core`; this crate adds the pieces a
//! command-line workflow needs: a layered key=value configuration with
//! flag overrides, IDX dataset loading with transparent gzip handling, a
//! plain-text checkpoint format that round-trips f64 parameters exactly,
//! and the train / eval / infer / export-netlist / report commands.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod formats;
