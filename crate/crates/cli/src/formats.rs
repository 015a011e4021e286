use std::fmt::Write as _;
use std::path::Path;

use sotmlp_core::network::{BinarizedModel, MlpTopology};
use sotmlp_core::trainer::{RealLayer, TeacherNetwork, TrainConfig};

use crate::error::{usage, CliError};

/// First line of every checkpoint file.
pub const CHECKPOINT_MAGIC: &str = "sotmlp-checkpoint v1";

/// A saved teacher network plus the hyperparameters that produced it.
///
/// The file is plain text. Parameters are written with the shortest
/// decimal representation that parses back to the identical f64, so a
/// save/load cycle is bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub topology: Vec<usize>,
    pub epochs_completed: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub rng_seed: u64,
    pub delta_b: f64,
    pub layers: Vec<RealLayer>,
}

impl Checkpoint {
    /// Snapshot a trained teacher together with its training settings.
    pub fn from_teacher(
        teacher: &TeacherNetwork,
        config: &TrainConfig,
        epochs_completed: usize,
    ) -> Checkpoint {
        Checkpoint {
            topology: teacher.topology().layer_sizes().to_vec(),
            epochs_completed,
            learning_rate: config.learning_rate,
            batch_size: config.batch_size,
            rng_seed: config.rng_seed,
            delta_b: config.delta_b,
            layers: teacher.layers().to_vec(),
        }
    }

    /// Serialize to the checkpoint text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
        let _ = write!(out, "topology");
        for size in &self.topology {
            let _ = write!(out, " {size}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "epochs_completed {}", self.epochs_completed);
        let _ = writeln!(out, "learning_rate {}", self.learning_rate);
        let _ = writeln!(out, "batch_size {}", self.batch_size);
        let _ = writeln!(out, "rng_seed {}", self.rng_seed);
        let _ = writeln!(out, "delta_b {}", self.delta_b);
        for (l, layer) in self.layers.iter().enumerate() {
            let rows = self.topology[l + 1];
            let cols = self.topology[l];
            let _ = writeln!(out, "layer {l} rows {rows} cols {cols}");
            for r in 0..rows {
                let row = &layer.weights[r * cols..(r + 1) * cols];
                let mut first = true;
                for w in row {
                    if !first {
                        out.push(' ');
                    }
                    let _ = write!(out, "{w}");
                    first = false;
                }
                out.push('\n');
            }
            let _ = write!(out, "biases");
            for b in &layer.biases {
                let _ = write!(out, " {b}");
            }
            out.push('\n');
        }
        out
    }

    /// Parse checkpoint text, validating the layout as it goes.
    pub fn parse(text: &str) -> Result<Checkpoint, CliError> {
        let mut lines = text.lines().enumerate();
        let magic = next_line(&mut lines)?;
        if magic.1 != CHECKPOINT_MAGIC {
            return Err(usage(format!(
                "checkpoint line 1: expected \"{CHECKPOINT_MAGIC}\", found \"{}\"",
                magic.1
            )));
        }
        let topology = parse_keyed_list::<usize>(next_line(&mut lines)?, "topology")?;
        if topology.len() < 2 {
            return Err(usage("checkpoint topology needs at least two layer sizes"));
        }
        let epochs_completed = parse_keyed(next_line(&mut lines)?, "epochs_completed")?;
        let learning_rate = parse_keyed(next_line(&mut lines)?, "learning_rate")?;
        let batch_size = parse_keyed(next_line(&mut lines)?, "batch_size")?;
        let rng_seed = parse_keyed(next_line(&mut lines)?, "rng_seed")?;
        let delta_b = parse_keyed(next_line(&mut lines)?, "delta_b")?;

        let mut layers = Vec::with_capacity(topology.len() - 1);
        for l in 0..topology.len() - 1 {
            let (rows, cols) = (topology[l + 1], topology[l]);
            let header = next_line(&mut lines)?;
            let expected = format!("layer {l} rows {rows} cols {cols}");
            if header.1 != expected {
                return Err(usage(format!(
                    "checkpoint line {}: expected \"{expected}\", found \"{}\"",
                    header.0 + 1,
                    header.1
                )));
            }
            let mut weights = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let row = next_line(&mut lines)?;
                let values = parse_floats(row, cols)?;
                weights.extend_from_slice(&values);
            }
            let biases = parse_keyed_list::<f64>(next_line(&mut lines)?, "biases")?;
            if biases.len() != rows {
                return Err(usage(format!(
                    "checkpoint layer {l}: expected {rows} biases, found {}",
                    biases.len()
                )));
            }
            layers.push(RealLayer { weights, biases });
        }
        if let Some((i, extra)) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(usage(format!(
                    "checkpoint line {}: unexpected trailing content",
                    i + 1
                )));
            }
        }
        Ok(Checkpoint {
            topology,
            epochs_completed,
            learning_rate,
            batch_size,
            rng_seed,
            delta_b,
            layers,
        })
    }

    /// Rebuild the real-valued teacher network.
    pub fn teacher(&self) -> Result<TeacherNetwork, CliError> {
        let topology = MlpTopology::new(self.topology.clone())
            .map_err(|e| usage(format!("checkpoint: {e}")))?;
        TeacherNetwork::from_parts(topology, self.layers.clone())
            .map_err(|e| usage(format!("checkpoint: {e}")))
    }

    /// Rebuild the teacher and binarize it at the given threshold.
    pub fn student(&self, delta_b: f64) -> Result<BinarizedModel, CliError> {
        self.teacher()?
            .extract_student(delta_b)
            .map_err(|e| usage(format!("checkpoint: {e}")))
    }

    /// The binarization threshold to use for this checkpoint, preferring
    /// an explicitly configured value over the recorded one.
    pub fn resolve_delta_b(&self, explicit: Option<f64>) -> f64 {
        explicit.unwrap_or(self.delta_b)
    }
}

/// Load and parse a checkpoint file.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read checkpoint {}: {e}", path.display())))?;
    Checkpoint::parse(&text)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

type NumberedLine<'a> = (usize, &'a str);

fn next_line<'a>(
    lines: &mut impl Iterator<Item = NumberedLine<'a>>,
) -> Result<NumberedLine<'a>, CliError> {
    lines.next().ok_or_else(|| usage("checkpoint is truncated"))
}

fn parse_keyed<T: std::str::FromStr>(line: NumberedLine<'_>, key: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    let (i, text) = line;
    let rest = text
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| usage(format!("checkpoint line {}: expected \"{key} <value>\"", i + 1)))?;
    rest.trim()
        .parse()
        .map_err(|e| usage(format!("checkpoint line {}: {key}: {e}", i + 1)))
}

fn parse_keyed_list<T: std::str::FromStr>(
    line: NumberedLine<'_>,
    key: &str,
) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    let (i, text) = line;
    let rest = text
        .strip_prefix(key)
        .ok_or_else(|| usage(format!("checkpoint line {}: expected \"{key} ...\"", i + 1)))?;
    rest.split_whitespace()
        .map(|token| {
            token
                .parse()
                .map_err(|e| usage(format!("checkpoint line {}: {key}: {e}", i + 1)))
        })
        .collect()
}

fn parse_floats(line: NumberedLine<'_>, expected: usize) -> Result<Vec<f64>, CliError> {
    let (i, text) = line;
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|token| {
            token
                .parse()
                .map_err(|e| usage(format!("checkpoint line {}: {e}", i + 1)))
        })
        .collect::<Result<_, CliError>>()?;
    if values.len() != expected {
        return Err(usage(format!(
            "checkpoint line {}: expected {expected} values, found {}",
            i + 1,
            values.len()
        )));
    }
    Ok(values)
}

/// One line of the training metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLine {
    pub epoch: u64,
    pub train_loss: f64,
    pub test_accuracy: Option<f64>,
}

impl MetricsLine {
    /// Format as a metrics log line.
    pub fn to_line(&self) -> String {
        match self.test_accuracy {
            Some(acc) => {
                format!("epoch {} train_loss {} test_accuracy {}", self.epoch, self.train_loss, acc)
            }
            None => format!("epoch {} train_loss {}", self.epoch, self.train_loss),
        }
    }

    /// Parse a metrics log line.
    pub fn parse(line: &str) -> Result<MetricsLine, CliError> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let bad = || usage(format!("malformed metrics line: \"{line}\""));
        if tokens.len() != 4 && tokens.len() != 6 {
            return Err(bad());
        }
        if tokens[0] != "epoch" || tokens[2] != "train_loss" {
            return Err(bad());
        }
        let epoch = tokens[1].parse().map_err(|_| bad())?;
        let train_loss = tokens[3].parse().map_err(|_| bad())?;
        let test_accuracy = if tokens.len() == 6 {
            if tokens[4] != "test_accuracy" {
                return Err(bad());
            }
            Some(tokens[5].parse().map_err(|_| bad())?)
        } else {
            None
        };
        Ok(MetricsLine { epoch, train_loss, test_accuracy })
    }
}
