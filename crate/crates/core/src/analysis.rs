//! Cost analysis: general-scaling normalization, power-area-product
//! comparison, and the latency report.
//!
//! Published designs are normalized to the reference operating point
//! (0.8 V supply, 14 nm node) through the general-scaling factors
//! U = 0.8 / vdd and S = 14 / node. Only ratios of prior designs are
//! published, so the bundled comparison table is ratio-based and the
//! products are convention-independent; when raw values are supplied the
//! normalization direction is selectable and recorded in the emitted report.
//!
//! The latency rows for CPU, GPU, and digital/mixed-signal in-memory
//! designs are stored reference constants (never measured here); this
//! architecture's row is measured from the simulated network's cycle
//! counters.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::network::{AnalogMlp, NetworkError};

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// A physical value that must be strictly positive was not.
    NonPositiveValue { name: &'static str, value: f64 },
    /// A range pair out of order.
    UnorderedRange { name: &'static str },
    /// The latency report needs a programmed, calibrated network.
    Network(NetworkError),
    /// Comparison over an empty design list.
    EmptyComparison,
}

impl From<NetworkError> for AnalysisError {
    fn from(e: NetworkError) -> Self {
        AnalysisError::Network(e)
    }
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::NonPositiveValue { name, value } => {
                write!(f, "{name} must be positive, got {value}")
            }
            AnalysisError::UnorderedRange { name } => write!(f, "{name} range out of order"),
            AnalysisError::Network(e) => write!(f, "{e}"),
            AnalysisError::EmptyComparison => write!(f, "no designs to compare"),
        }
    }
}

/// A neuron design as reported in its own technology.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronDesignSpec {
    pub name: String,
    pub power_watts: f64,
    pub area_m2: f64,
    pub vdd: f64,
    pub tech_node_nm: f64,
}

impl NeuronDesignSpec {
    pub fn new(
        name: &str,
        power_watts: f64,
        area_m2: f64,
        vdd: f64,
        tech_node_nm: f64,
    ) -> Result<Self, AnalysisError> {
        for (field, value) in [
            ("power_watts", power_watts),
            ("area_m2", area_m2),
            ("vdd", vdd),
            ("tech_node_nm", tech_node_nm),
        ] {
            if value <= 0.0 || !value.is_finite() {
                return Err(AnalysisError::NonPositiveValue { name: field, value });
            }
        }
        Ok(NeuronDesignSpec {
            name: String::from(name),
            power_watts,
            area_m2,
            vdd,
            tech_node_nm,
        })
    }
}

/// This design's reported operating point: 64 uW, 0.02 um^2, 0.8 V, 14 nm.
/// Stored constants; nothing here measures them.
pub fn reference_neuron_spec() -> NeuronDesignSpec {
    NeuronDesignSpec {
        name: String::from("this work (analog sigmoidal neuron)"),
        power_watts: 64e-6,
        area_m2: 0.02e-12,
        vdd: 0.8,
        tech_node_nm: 14.0,
    }
}

/// Direction of the general-scaling transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalingConvention {
    /// power * U^2 and area * S^2 (translate a foreign design to the
    /// reference operating point).
    #[default]
    MultiplyBySquares,
    /// power / U^2 and area / S^2.
    DivideBySquares,
}

impl ScalingConvention {
    pub fn label(self) -> &'static str {
        match self {
            ScalingConvention::MultiplyBySquares => "multiply-by-squares (power*U^2, area*S^2)",
            ScalingConvention::DivideBySquares => "divide-by-squares (power/U^2, area/S^2)",
        }
    }
}

/// General-scaling factors (U, S) = (0.8 / vdd, 14 / node_nm).
pub fn scale_factors(vdd: f64, tech_node_nm: f64) -> (f64, f64) {
    (0.8 / vdd, 14.0 / tech_node_nm)
}

/// Normalize a design's reported power and area to the reference operating
/// point under the chosen convention.
pub fn normalize(spec: &NeuronDesignSpec, convention: ScalingConvention) -> (f64, f64) {
    let (u, s) = scale_factors(spec.vdd, spec.tech_node_nm);
    match convention {
        ScalingConvention::MultiplyBySquares => {
            (spec.power_watts * u * u, spec.area_m2 * s * s)
        }
        ScalingConvention::DivideBySquares => {
            (spec.power_watts / (u * u), spec.area_m2 / (s * s))
        }
    }
}

/// The figure of merit: normalized power ratio times normalized area ratio.
pub fn power_area_product(power_ratio: f64, area_ratio: f64) -> f64 {
    power_ratio * area_ratio
}

/// One design's power and area expressed as ratios to this design.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEntry {
    pub name: String,
    pub power_ratio: f64,
    pub area_ratio: f64,
}

impl RatioEntry {
    pub fn new(name: &str, power_ratio: f64, area_ratio: f64) -> Result<Self, AnalysisError> {
        for (field, value) in [("power_ratio", power_ratio), ("area_ratio", area_ratio)] {
            if value <= 0.0 || !value.is_finite() {
                return Err(AnalysisError::NonPositiveValue { name: field, value });
            }
        }
        Ok(RatioEntry { name: String::from(name), power_ratio, area_ratio })
    }
}

/// The bundled comparison dataset: published normalized power and area
/// ratios of two prior analog sigmoidal neuron designs, with this design as
/// the unit.
pub fn reference_power_area_ratios() -> Vec<RatioEntry> {
    let entry = |name: &str, p: f64, a: f64| RatioEntry {
        name: String::from(name),
        power_ratio: p,
        area_ratio: a,
    };
    alloc::vec![
        entry("prior analog neuron A", 7.4, 10.0),
        entry("prior analog neuron B", 0.98, 12.3),
        entry("this work", 1.0, 1.0),
    ]
}

/// One row of the power-area comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub power_ratio: f64,
    pub area_ratio: f64,
    pub power_area_product: f64,
}

/// The power-area comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Normalization note carried into the report header.
    pub convention_note: String,
}

impl ComparisonTable {
    /// Build directly from published ratios (convention-independent).
    pub fn from_ratios(entries: &[RatioEntry]) -> Result<Self, AnalysisError> {
        if entries.is_empty() {
            return Err(AnalysisError::EmptyComparison);
        }
        let rows = entries
            .iter()
            .map(|e| ComparisonRow {
                name: e.name.clone(),
                power_ratio: e.power_ratio,
                area_ratio: e.area_ratio,
                power_area_product: power_area_product(e.power_ratio, e.area_ratio),
            })
            .collect();
        Ok(ComparisonTable {
            rows,
            convention_note: String::from(
                "ratios as published; scaling direction not recoverable from ratios alone",
            ),
        })
    }

    /// Build from raw design specs: normalize everything to the reference
    /// operating point, then take ratios against the baseline design.
    pub fn from_specs(
        specs: &[NeuronDesignSpec],
        baseline: &NeuronDesignSpec,
        convention: ScalingConvention,
    ) -> Result<Self, AnalysisError> {
        if specs.is_empty() {
            return Err(AnalysisError::EmptyComparison);
        }
        let (base_p, base_a) = normalize(baseline, convention);
        let rows = specs
            .iter()
            .map(|spec| {
                let (p, a) = normalize(spec, convention);
                let (pr, ar) = (p / base_p, a / base_a);
                ComparisonRow {
                    name: spec.name.clone(),
                    power_ratio: pr,
                    area_ratio: ar,
                    power_area_product: power_area_product(pr, ar),
                }
            })
            .collect();
        Ok(ComparisonTable {
            rows,
            convention_note: format!("normalization convention: {}", convention.label()),
        })
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "power-area comparison (normalized to 0.8 V / 14 nm)");
        let _ = writeln!(out, "# {}", self.convention_note);
        let name_width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(core::iter::once("design".len()))
            .max()
            .unwrap_or(6);
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>10}  {:>10}  {:>18}",
            "design", "power", "area", "power-area product"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<name_width$}  {:>10}  {:>10}  {:>18}",
                row.name,
                format_ratio(row.power_ratio),
                format_ratio(row.area_ratio),
                format_ratio(row.power_area_product)
            );
        }
        out
    }

    /// Comma-separated form, one header line then one line per design.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("design,power_ratio,area_ratio,power_area_product\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                csv_field(&row.name),
                row.power_ratio,
                row.area_ratio,
                row.power_area_product
            );
        }
        out
    }
}

fn format_ratio(value: f64) -> String {
    // Two decimals for table alignment; exact values live in the CSV form.
    format!("{value:.2}")
}

fn csv_field(name: &str) -> String {
    if name.contains(',') || name.contains('"') {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        String::from(name)
    }
}

/// An architecture's latency characteristics: clock frequency range in GHz
/// and total clock cycles per recognition (stored as a range).
#[derive(Debug, Clone, PartialEq)]
pub struct ArchLatencySpec {
    pub name: String,
    pub frequency_ghz: (f64, f64),
    pub total_clocks: (u64, u64),
}

impl ArchLatencySpec {
    pub fn new(
        name: &str,
        frequency_ghz: (f64, f64),
        total_clocks: (u64, u64),
    ) -> Result<Self, AnalysisError> {
        if frequency_ghz.0 <= 0.0
            || !frequency_ghz.0.is_finite()
            || !frequency_ghz.1.is_finite()
            || frequency_ghz.0 > frequency_ghz.1
        {
            return Err(AnalysisError::UnorderedRange { name: "frequency_ghz" });
        }
        if total_clocks.0 == 0 || total_clocks.0 > total_clocks.1 {
            return Err(AnalysisError::UnorderedRange { name: "total_clocks" });
        }
        Ok(ArchLatencySpec { name: String::from(name), frequency_ghz, total_clocks })
    }
}

/// Stored reference constants for the compared execution platforms. These
/// are published characteristics, not measurements made by this simulator.
pub fn reference_latency_specs() -> Vec<ArchLatencySpec> {
    let spec = |name: &str, f: (f64, f64), c: (u64, u64)| ArchLatencySpec {
        name: String::from(name),
        frequency_ghz: f,
        total_clocks: c,
    };
    alloc::vec![
        spec("CPU (digital MAC, digital activation)", (3.7, 3.7), (10_000_000, 100_000_000)),
        spec("GPU (digital MAC, digital activation)", (1.35, 1.35), (100_000, 1_000_000)),
        spec("in-memory digital MAC, digital activation", (0.667, 0.667), (10_000, 100_000)),
        spec("in-memory analog MAC, mixed-signal activation", (0.2, 0.667), (100, 10_000)),
    ]
}

/// Clock frequency range assumed for the analog array (upper end matches
/// digital in-memory designs; parasitics push toward the lower end).
pub const PROPOSED_FREQUENCY_GHZ: (f64, f64) = (0.2, 0.667);

/// One row of the latency report.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRow {
    pub name: String,
    pub frequency_ghz: (f64, f64),
    pub total_clocks: (u64, u64),
    /// True for the row measured from the simulated network.
    pub measured: bool,
}

/// The latency report: measured cycle counts for this architecture beside
/// the stored reference rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub topology: Vec<usize>,
    /// Clock cycles to program the whole network, measured row-serially.
    pub programming_clocks: u64,
    /// Clock cycles for one whole-network inference, measured.
    pub inference_clocks: u64,
    pub rows: Vec<LatencyRow>,
}

impl LatencyReport {
    /// Measure the network's cycle counts and assemble the report. The
    /// network must be programmed and calibrated; inference cost is taken
    /// from an actual forward pass over zero inputs.
    pub fn build(mlp: &AnalogMlp, references: &[ArchLatencySpec]) -> Result<Self, AnalysisError> {
        let zeros = alloc::vec![0.0; mlp.topology().input_size()];
        let (_, inference_clocks) = mlp.forward(&zeros)?;
        let mut rows: Vec<LatencyRow> = references
            .iter()
            .map(|r| LatencyRow {
                name: r.name.clone(),
                frequency_ghz: r.frequency_ghz,
                total_clocks: r.total_clocks,
                measured: false,
            })
            .collect();
        rows.push(LatencyRow {
            name: String::from("this work (analog MAC, analog activation)"),
            frequency_ghz: PROPOSED_FREQUENCY_GHZ,
            total_clocks: (inference_clocks, inference_clocks),
            measured: true,
        });
        Ok(LatencyReport {
            topology: mlp.topology().layer_sizes().to_vec(),
            programming_clocks: mlp.write_cycles(),
            inference_clocks,
            rows,
        })
    }

    /// Aligned plain-text report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let topo: Vec<String> = self.topology.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "latency report for a {} MLP", topo.join("x"));
        let _ = writeln!(out, "programming clocks (row-serial writes): {}", self.programming_clocks);
        let _ = writeln!(out, "inference clocks (whole network): {}", self.inference_clocks);
        let name_width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(core::iter::once("architecture".len()))
            .max()
            .unwrap_or(12);
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>12}  {:>14}",
            "architecture", "clock (GHz)", "total clocks"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<name_width$}  {:>12}  {:>14}",
                row.name,
                format_frequency(row.frequency_ghz),
                format_clocks(row.total_clocks)
            );
        }
        out
    }

    /// Comma-separated form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "architecture,frequency_ghz_low,frequency_ghz_high,total_clocks_low,total_clocks_high,measured\n",
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&row.name),
                row.frequency_ghz.0,
                row.frequency_ghz.1,
                row.total_clocks.0,
                row.total_clocks.1,
                row.measured
            );
        }
        out
    }
}

fn format_frequency(range: (f64, f64)) -> String {
    if range.0 == range.1 {
        format!("{}", range.0)
    } else {
        format!("{}-{}", range.0, range.1)
    }
}

fn format_clocks(range: (u64, u64)) -> String {
    if range.0 == range.1 {
        return format_clock_value(range.0);
    }
    format!("{}-{}", format_clock_value(range.0), format_clock_value(range.1))
}

fn format_clock_value(value: u64) -> String {
    if value >= 100 {
        let mut power = 0u32;
        let mut v = value;
        while v.is_multiple_of(10) {
            v /= 10;
            power += 1;
        }
        if v == 1 {
            return format!("10^{power}");
        }
    }
    value.to_string()
}
