//! SPICE-style netlist emission for programmed arrays and networks.
//!
//! Output grammar (also documented in the repository README):
//!   * comment lines start with '*'
//!   * resistors:  R<name> <node+> <node-> <ohms>
//!   * sources:    V<name> <node+> 0 <volts>
//!   * subcircuit instances: X<name> <pins...> <model>
//!
//! Resistor values are zero-bias resistances printed with Rust's shortest
//! round-trip float formatting, so a reader recovers them exactly; the
//! circuit simulator reintroduces bias dependence itself. Amplifier, neuron,
//! and rescaler subcircuit bodies are intentionally absent: instances name
//! the models `diffamp`, `neuron`, and `rescaler`, and the user supplies
//! behavioral or transistor-level definitions.
//!
//! Element order is fixed (layer, then row, then column, then the plus leg
//! before the minus leg), so emitting the same state twice yields
//! byte-identical text. A minimal reader is included to verify round trips.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::crossbar::CrossbarArray;
use crate::network::AnalogMlp;

#[derive(Debug, Clone, PartialEq)]
pub enum NetlistError {
    /// Emission requires every synapse and neuron to be programmed.
    Unprogrammed,
    /// The reader hit a malformed line (1-based line number).
    Parse { line: usize, message: String },
    /// A synapse leg referenced during weight recovery is absent.
    MissingResistor { layer: usize, row: usize, column: Option<usize> },
    /// Both legs of a synapse have equal resistance, so no weight sign.
    AmbiguousWeight { layer: usize, row: usize, column: Option<usize> },
}

impl fmt::Display for NetlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetlistError::Unprogrammed => {
                write!(f, "netlist emission requires a fully programmed array")
            }
            NetlistError::Parse { line, message } => {
                write!(f, "netlist parse error at line {line}: {message}")
            }
            NetlistError::MissingResistor { layer, row, column } => match column {
                Some(c) => write!(f, "missing resistor for layer {layer} row {row} column {c}"),
                None => write!(f, "missing bias resistor for layer {layer} row {row}"),
            },
            NetlistError::AmbiguousWeight { layer, row, column } => match column {
                Some(c) => write!(
                    f,
                    "equal leg resistances for layer {layer} row {row} column {c}; weight sign undefined"
                ),
                None => write!(
                    f,
                    "equal leg resistances for layer {layer} row {row} bias; weight sign undefined"
                ),
            },
        }
    }
}

/// Free-text header content carried into the emitted netlist.
#[derive(Debug, Clone, PartialEq)]
pub struct NetlistMeta {
    pub title: String,
    /// Extra '*' comment lines appended to the header, one per entry.
    pub comments: Vec<String>,
}

impl Default for NetlistMeta {
    fn default() -> Self {
        NetlistMeta { title: String::from("analog MLP crossbar netlist"), comments: Vec::new() }
    }
}

/// Emit a single programmed array. Input nodes are named `in<c>`, one
/// voltage source per input pinned at 0 V for the user to restimulate.
pub fn emit_array(array: &CrossbarArray, meta: &NetlistMeta) -> Result<String, NetlistError> {
    if !array.is_programmed() {
        return Err(NetlistError::Unprogrammed);
    }
    let mut out = String::new();
    write_header(&mut out, array, meta, None);
    let _ = writeln!(
        out,
        "* array: inputs={} rows={} bias={}",
        array.n_inputs(),
        array.m_rows(),
        yes_no(array.has_bias_column())
    );
    finish_header(&mut out, meta);
    let v_read = array.calibration().map_or(0.0, |c| c.v_read);
    write_sources(&mut out, array.n_inputs(), array.has_bias_column(), v_read);
    let input_nodes = input_node_names(array.n_inputs());
    write_layer(&mut out, array, 0, &input_nodes, false)?;
    Ok(out)
}

/// Emit a whole programmed network. Layer k's rescaler outputs feed layer
/// k+1; the final layer stops at the neuron outputs.
pub fn emit_mlp(mlp: &AnalogMlp, meta: &NetlistMeta) -> Result<String, NetlistError> {
    if !mlp.is_programmed() {
        return Err(NetlistError::Unprogrammed);
    }
    let arrays = mlp.arrays();
    let any_bias = arrays.iter().any(|a| a.has_bias_column());
    let mut out = String::new();
    write_header(&mut out, &arrays[0], meta, Some(mlp));
    for (k, array) in arrays.iter().enumerate() {
        let _ = writeln!(
            out,
            "* layer {k}: inputs={} rows={} bias={}",
            array.n_inputs(),
            array.m_rows(),
            yes_no(array.has_bias_column())
        );
    }
    finish_header(&mut out, meta);
    let v_read = mlp.calibration().map_or(0.0, |c| c.v_read);
    write_sources(&mut out, arrays[0].n_inputs(), any_bias, v_read);
    let mut input_nodes = input_node_names(arrays[0].n_inputs());
    for (k, array) in arrays.iter().enumerate() {
        let rescale = k + 1 < arrays.len();
        input_nodes = write_layer(&mut out, array, k, &input_nodes, rescale)?;
    }
    Ok(out)
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

fn input_node_names(n: usize) -> Vec<String> {
    (0..n).map(|c| format!("in{c}")).collect()
}

/// Meters to nanometers for the header comments, rounded to a microdigit so
/// stored binary values print as the figures they were specified as.
fn nanometers(meters: f64) -> f64 {
    libm::round(meters * 1e9 * 1e6) / 1e6
}

fn write_header(out: &mut String, sample: &CrossbarArray, meta: &NetlistMeta, mlp: Option<&AnalogMlp>) {
    let g = sample.geometry();
    let p = sample.material_params();
    let _ = writeln!(out, "* {}", meta.title);
    let _ = writeln!(out, "* format: sotmlp-netlist v1");
    if let Some(mlp) = mlp {
        let sizes: Vec<String> = mlp.topology().layer_sizes().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "* topology: {}", sizes.join("-"));
    }
    let _ = writeln!(
        out,
        "* mtj: length={} nm, width={} nm; heavy metal: {}x{}x{} nm",
        nanometers(g.mtj_length),
        nanometers(g.mtj_width),
        nanometers(g.hm_length),
        nanometers(g.hm_width),
        nanometers(g.hm_thickness)
    );
    let _ = writeln!(
        out,
        "* material: ra={} ohm.um^2, tmr0={} %, v0={} V",
        p.ra_product, p.tmr0, p.v0
    );
    let _ = writeln!(out, "* rails: vdd={} V, vss={} V", sample.vdd(), sample.vss());
    let _ = writeln!(
        out,
        "* resistor values are zero-bias resistances; the simulator reapplies bias dependence"
    );
    let _ = writeln!(
        out,
        "* subcircuit bodies for diffamp, neuron, rescaler are user-supplied"
    );
}

fn finish_header(out: &mut String, meta: &NetlistMeta) {
    for comment in &meta.comments {
        let _ = writeln!(out, "* {comment}");
    }
}

fn write_sources(out: &mut String, n_inputs: usize, any_bias: bool, v_read: f64) {
    if any_bias {
        let _ = writeln!(out, "* vread drives the always-on bias column");
        let _ = writeln!(out, "Vvread vread 0 {v_read}");
    }
    let _ = writeln!(out, "* input sources start at 0 V; set the stimulus before simulating");
    for c in 0..n_inputs {
        let _ = writeln!(out, "Vin{c} in{c} 0 0");
    }
}

/// Write one layer's elements and return the nodes it feeds forward.
fn write_layer(
    out: &mut String,
    array: &CrossbarArray,
    layer: usize,
    input_nodes: &[String],
    rescale_outputs: bool,
) -> Result<Vec<String>, NetlistError> {
    debug_assert_eq!(input_nodes.len(), array.n_inputs());
    let mut forward_nodes = Vec::with_capacity(array.m_rows());
    for r in 0..array.m_rows() {
        let sp = format!("l{layer}_r{r}_sp");
        let sm = format!("l{layer}_r{r}_sm");
        for (c, input_node) in input_nodes.iter().enumerate() {
            let synapse = array.synapse(r, c);
            if !synapse.is_programmed() {
                return Err(NetlistError::Unprogrammed);
            }
            let _ = writeln!(
                out,
                "Rl{layer}_r{r}_c{c}_p {input_node} {sp} {}",
                synapse.mram_plus.resistance(0.0)
            );
            let _ = writeln!(
                out,
                "Rl{layer}_r{r}_c{c}_m {input_node} {sm} {}",
                synapse.mram_minus.resistance(0.0)
            );
        }
        if let Some(bias) = array.bias_cell(r) {
            if !bias.is_programmed() {
                return Err(NetlistError::Unprogrammed);
            }
            let _ = writeln!(out, "Rl{layer}_r{r}_b_p vread {sp} {}", bias.mram_plus.resistance(0.0));
            let _ = writeln!(out, "Rl{layer}_r{r}_b_m vread {sm} {}", bias.mram_minus.resistance(0.0));
        }
        let y = format!("l{layer}_y{r}");
        let o = format!("l{layer}_o{r}");
        let _ = writeln!(out, "Xl{layer}_amp{r} {sp} {sm} {y} diffamp");
        let _ = writeln!(out, "Xl{layer}_neuron{r} {y} {o} neuron");
        if rescale_outputs {
            let x = format!("l{layer}_x{r}");
            let _ = writeln!(out, "Xl{layer}_rescale{r} {o} {x} rescaler");
            forward_nodes.push(x);
        } else {
            forward_nodes.push(o);
        }
    }
    Ok(forward_nodes)
}

/// One resistor line, with the position decoded from its name.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResistor {
    pub name: String,
    pub node_plus: String,
    pub node_minus: String,
    pub ohms: f64,
    pub layer: usize,
    pub row: usize,
    /// `None` marks a bias-column leg.
    pub column: Option<usize>,
    /// True for the `_p` leg of the differential pair.
    pub plus_leg: bool,
}

/// One voltage source line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSource {
    pub name: String,
    pub node_plus: String,
    pub volts: f64,
}

/// One subcircuit instance line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstance {
    pub name: String,
    pub pins: Vec<String>,
    pub model: String,
}

/// Minimal reader for netlists produced by this module. It exists to prove
/// round trips: every resistor value and the full weight matrix must be
/// recoverable from the text exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedNetlist {
    pub resistors: Vec<ParsedResistor>,
    pub sources: Vec<ParsedSource>,
    pub instances: Vec<ParsedInstance>,
}

impl ParsedNetlist {
    pub fn parse(text: &str) -> Result<Self, NetlistError> {
        let mut parsed = ParsedNetlist::default();
        for (index, raw) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('*') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match line.as_bytes()[0] {
                b'R' => parsed.resistors.push(parse_resistor(&tokens, line_no)?),
                b'V' => parsed.sources.push(parse_source(&tokens, line_no)?),
                b'X' => parsed.instances.push(parse_instance(&tokens, line_no)?),
                _ => {
                    return Err(NetlistError::Parse {
                        line: line_no,
                        message: format!("unknown element: {}", tokens[0]),
                    })
                }
            }
        }
        Ok(parsed)
    }

    /// Number of distinct layers seen among resistor lines.
    pub fn num_layers(&self) -> usize {
        self.resistors.iter().map(|r| r.layer + 1).max().unwrap_or(0)
    }

    /// Exact resistance of one leg, if present.
    pub fn resistance(
        &self,
        layer: usize,
        row: usize,
        column: Option<usize>,
        plus_leg: bool,
    ) -> Option<f64> {
        self.resistors
            .iter()
            .find(|r| {
                r.layer == layer && r.row == row && r.column == column && r.plus_leg == plus_leg
            })
            .map(|r| r.ohms)
    }

    /// Recover one layer's signed weight matrix, bias entry last in each
    /// row, by comparing the two leg resistances of every synapse: the leg
    /// pair (low, high) encodes +1 and (high, low) encodes -1.
    pub fn weight_matrix(&self, layer: usize) -> Result<Vec<Vec<i8>>, NetlistError> {
        let rows = self
            .resistors
            .iter()
            .filter(|r| r.layer == layer)
            .map(|r| r.row + 1)
            .max()
            .unwrap_or(0);
        let cols = self
            .resistors
            .iter()
            .filter(|r| r.layer == layer)
            .filter_map(|r| r.column)
            .map(|c| c + 1)
            .max()
            .unwrap_or(0);
        let has_bias = self
            .resistors
            .iter()
            .any(|r| r.layer == layer && r.column.is_none());
        let mut matrix = Vec::with_capacity(rows);
        for row in 0..rows {
            let mut weights = Vec::with_capacity(cols + usize::from(has_bias));
            for col in 0..cols {
                weights.push(self.recover_weight(layer, row, Some(col))?);
            }
            if has_bias {
                weights.push(self.recover_weight(layer, row, None)?);
            }
            matrix.push(weights);
        }
        Ok(matrix)
    }

    fn recover_weight(
        &self,
        layer: usize,
        row: usize,
        column: Option<usize>,
    ) -> Result<i8, NetlistError> {
        let missing = NetlistError::MissingResistor { layer, row, column };
        let r_plus = self.resistance(layer, row, column, true).ok_or(missing.clone())?;
        let r_minus = self.resistance(layer, row, column, false).ok_or(missing)?;
        if r_plus < r_minus {
            Ok(1)
        } else if r_plus > r_minus {
            Ok(-1)
        } else {
            Err(NetlistError::AmbiguousWeight { layer, row, column })
        }
    }
}

fn parse_resistor(tokens: &[&str], line: usize) -> Result<ParsedResistor, NetlistError> {
    if tokens.len() != 4 {
        return Err(NetlistError::Parse {
            line,
            message: format!("resistor line needs 4 fields, got {}", tokens.len()),
        });
    }
    let ohms = parse_value(tokens[3], line)?;
    let name = tokens[0][1..].to_string();
    let (layer, row, column, plus_leg) = decode_resistor_name(&name, line)?;
    Ok(ParsedResistor {
        name,
        node_plus: tokens[1].to_string(),
        node_minus: tokens[2].to_string(),
        ohms,
        layer,
        row,
        column,
        plus_leg,
    })
}

/// Resistor names look like `l<layer>_r<row>_c<col>_<p|m>` with `b` in
/// place of the `c<col>` token for the bias column.
fn decode_resistor_name(
    name: &str,
    line: usize,
) -> Result<(usize, usize, Option<usize>, bool), NetlistError> {
    let bad = |message: String| NetlistError::Parse { line, message };
    let parts: Vec<&str> = name.split('_').collect();
    if parts.len() != 4 {
        return Err(bad(format!("unrecognized resistor name: {name}")));
    }
    let layer = parse_indexed(parts[0], 'l')
        .ok_or_else(|| bad(format!("bad layer token in resistor name: {name}")))?;
    let row = parse_indexed(parts[1], 'r')
        .ok_or_else(|| bad(format!("bad row token in resistor name: {name}")))?;
    let column = if parts[2] == "b" {
        None
    } else {
        Some(
            parse_indexed(parts[2], 'c')
                .ok_or_else(|| bad(format!("bad column token in resistor name: {name}")))?,
        )
    };
    let plus_leg = match parts[3] {
        "p" => true,
        "m" => false,
        other => return Err(bad(format!("bad leg token '{other}' in resistor name: {name}"))),
    };
    Ok((layer, row, column, plus_leg))
}

fn parse_indexed(token: &str, prefix: char) -> Option<usize> {
    token.strip_prefix(prefix)?.parse::<usize>().ok()
}

fn parse_source(tokens: &[&str], line: usize) -> Result<ParsedSource, NetlistError> {
    if tokens.len() != 4 || tokens[2] != "0" {
        return Err(NetlistError::Parse {
            line,
            message: String::from("source line must be 'V<name> <node+> 0 <volts>'"),
        });
    }
    Ok(ParsedSource {
        name: tokens[0][1..].to_string(),
        node_plus: tokens[1].to_string(),
        volts: parse_value(tokens[3], line)?,
    })
}

fn parse_instance(tokens: &[&str], line: usize) -> Result<ParsedInstance, NetlistError> {
    if tokens.len() < 3 {
        return Err(NetlistError::Parse {
            line,
            message: String::from("instance line must be 'X<name> <pins...> <model>'"),
        });
    }
    Ok(ParsedInstance {
        name: tokens[0][1..].to_string(),
        pins: tokens[1..tokens.len() - 1].iter().map(|t| t.to_string()).collect(),
        model: tokens[tokens.len() - 1].to_string(),
    })
}

fn parse_value(token: &str, line: usize) -> Result<f64, NetlistError> {
    token.parse::<f64>().map_err(|_| NetlistError::Parse {
        line,
        message: format!("bad numeric value: {token}"),
    })
}
