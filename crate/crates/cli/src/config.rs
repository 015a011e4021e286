use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use sotmlp_core::crossbar::CalibrationTarget;
use sotmlp_core::device::{DeviceGeometry, MaterialParams};
use sotmlp_core::network::MlpTopology;
use sotmlp_core::trainer::TrainConfig;

use crate::error::{usage, CliError};

/// Config file schema. Every key is optional; missing keys fall back to
/// the built-in defaults and unknown keys are rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub topology: TopologySection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub layers: Option<Vec<usize>>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub rng_seed: Option<u64>,
    pub delta_b: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub mtj_length_nm: Option<f64>,
    pub mtj_width_nm: Option<f64>,
    pub hm_length_nm: Option<f64>,
    pub hm_width_nm: Option<f64>,
    pub hm_thickness_nm: Option<f64>,
    pub ra_product: Option<f64>,
    pub tmr0: Option<f64>,
    pub v0: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub v_read: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub output_dir: Option<PathBuf>,
    pub variation_sigma: Option<f64>,
    pub variation_seed: Option<u64>,
}

impl FileConfig {
    /// Parse a config file's text, rejecting unknown sections and keys.
    pub fn parse(text: &str) -> Result<FileConfig, CliError> {
        toml::from_str(text).map_err(|e| usage(format!("config error: {e}")))
    }

    /// Read and parse a config file.
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        FileConfig::parse(&text)
    }
}

/// Command-line overrides. Every config key has a flag of the same name;
/// a flag that is given wins over both the config file and the defaults.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// Config file with [section] key = value lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Training images in IDX format, optionally gzip-compressed.
    #[arg(long, global = true, value_name = "FILE")]
    pub train_images: Option<PathBuf>,
    /// Training labels in IDX format, optionally gzip-compressed.
    #[arg(long, global = true, value_name = "FILE")]
    pub train_labels: Option<PathBuf>,
    /// Test images in IDX format, optionally gzip-compressed.
    #[arg(long, global = true, value_name = "FILE")]
    pub test_images: Option<PathBuf>,
    /// Test labels in IDX format, optionally gzip-compressed.
    #[arg(long, global = true, value_name = "FILE")]
    pub test_labels: Option<PathBuf>,
    /// Layer sizes from input to output, comma-separated, e.g. 784,16,10.
    #[arg(long, global = true, value_delimiter = ',', value_name = "SIZES")]
    pub layers: Option<Vec<usize>>,
    /// SGD learning rate.
    #[arg(long, global = true, value_name = "LR")]
    pub learning_rate: Option<f64>,
    /// Number of training epochs.
    #[arg(long, global = true, value_name = "N")]
    pub epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long, global = true, value_name = "N")]
    pub batch_size: Option<usize>,
    /// Seed for parameter init and epoch shuffles.
    #[arg(long, global = true, value_name = "SEED")]
    pub rng_seed: Option<u64>,
    /// Binarization threshold for the student weights.
    #[arg(long, global = true, value_name = "DELTA")]
    pub delta_b: Option<f64>,
    /// MTJ ellipse length in nanometers.
    #[arg(long, global = true, value_name = "NM")]
    pub mtj_length_nm: Option<f64>,
    /// MTJ ellipse width in nanometers.
    #[arg(long, global = true, value_name = "NM")]
    pub mtj_width_nm: Option<f64>,
    /// Heavy-metal track length in nanometers.
    #[arg(long, global = true, value_name = "NM")]
    pub hm_length_nm: Option<f64>,
    /// Heavy-metal track width in nanometers.
    #[arg(long, global = true, value_name = "NM")]
    pub hm_width_nm: Option<f64>,
    /// Heavy-metal track thickness in nanometers.
    #[arg(long, global = true, value_name = "NM")]
    pub hm_thickness_nm: Option<f64>,
    /// Resistance-area product in ohm square micrometers.
    #[arg(long, global = true, value_name = "RA")]
    pub ra_product: Option<f64>,
    /// Zero-bias TMR in percent.
    #[arg(long, global = true, value_name = "PCT")]
    pub tmr0: Option<f64>,
    /// TMR bias-rolloff voltage in volts.
    #[arg(long, global = true, value_name = "V")]
    pub v0: Option<f64>,
    /// Read voltage representing a full-scale input, in volts.
    #[arg(long, global = true, value_name = "V")]
    pub v_read: Option<f64>,
    /// Directory that receives checkpoints, logs, and reports.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Relative sigma of the per-device conductance perturbation.
    #[arg(long, global = true, value_name = "SIGMA")]
    pub variation_sigma: Option<f64>,
    /// Seed for the device variation draw.
    #[arg(long, global = true, value_name = "SEED")]
    pub variation_seed: Option<u64>,
}

/// Fully resolved run configuration: defaults, overlaid by the config
/// file, overlaid by command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub layers: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    /// Threshold given in the config or flags, if any. Training treats a
    /// missing value as 0.0; evaluation of a checkpoint falls back to the
    /// threshold recorded in the checkpoint itself.
    pub explicit_delta_b: Option<f64>,
    pub mtj_length_nm: f64,
    pub mtj_width_nm: f64,
    pub hm_length_nm: f64,
    pub hm_width_nm: f64,
    pub hm_thickness_nm: f64,
    pub ra_product: f64,
    pub tmr0: f64,
    pub v0: f64,
    pub v_read: f64,
    pub output_dir: PathBuf,
    pub variation_sigma: f64,
    pub variation_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        RunConfig {
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            layers: vec![784, 16, 10],
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            batch_size: train.batch_size,
            rng_seed: train.rng_seed,
            explicit_delta_b: None,
            mtj_length_nm: 50.0,
            mtj_width_nm: 30.0,
            hm_length_nm: 100.0,
            hm_width_nm: 50.0,
            hm_thickness_nm: 3.0,
            ra_product: 10.0,
            tmr0: 100.0,
            v0: 0.65,
            v_read: 0.1,
            output_dir: PathBuf::from("out"),
            variation_sigma: 0.0,
            variation_seed: 0,
        }
    }
}

fn overlay<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn overlay_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl RunConfig {
    /// Merge the three layers. The config file named by `flags.config` is
    /// loaded here so flag values can still win over it.
    pub fn resolve(flags: &Overrides) -> Result<RunConfig, CliError> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Ok(Self::merge(file, flags.clone()))
    }

    fn merge(file: FileConfig, flags: Overrides) -> RunConfig {
        let mut cfg = RunConfig::default();
        overlay_opt(&mut cfg.train_images, file.dataset.train_images);
        overlay_opt(&mut cfg.train_labels, file.dataset.train_labels);
        overlay_opt(&mut cfg.test_images, file.dataset.test_images);
        overlay_opt(&mut cfg.test_labels, file.dataset.test_labels);
        overlay(&mut cfg.layers, file.topology.layers);
        overlay(&mut cfg.learning_rate, file.training.learning_rate);
        overlay(&mut cfg.epochs, file.training.epochs);
        overlay(&mut cfg.batch_size, file.training.batch_size);
        overlay(&mut cfg.rng_seed, file.training.rng_seed);
        overlay_opt(&mut cfg.explicit_delta_b, file.training.delta_b);
        overlay(&mut cfg.mtj_length_nm, file.device.mtj_length_nm);
        overlay(&mut cfg.mtj_width_nm, file.device.mtj_width_nm);
        overlay(&mut cfg.hm_length_nm, file.device.hm_length_nm);
        overlay(&mut cfg.hm_width_nm, file.device.hm_width_nm);
        overlay(&mut cfg.hm_thickness_nm, file.device.hm_thickness_nm);
        overlay(&mut cfg.ra_product, file.device.ra_product);
        overlay(&mut cfg.tmr0, file.device.tmr0);
        overlay(&mut cfg.v0, file.device.v0);
        overlay(&mut cfg.v_read, file.calibration.v_read);
        overlay(&mut cfg.output_dir, file.run.output_dir);
        overlay(&mut cfg.variation_sigma, file.run.variation_sigma);
        overlay(&mut cfg.variation_seed, file.run.variation_seed);

        overlay_opt(&mut cfg.train_images, flags.train_images);
        overlay_opt(&mut cfg.train_labels, flags.train_labels);
        overlay_opt(&mut cfg.test_images, flags.test_images);
        overlay_opt(&mut cfg.test_labels, flags.test_labels);
        overlay(&mut cfg.layers, flags.layers);
        overlay(&mut cfg.learning_rate, flags.learning_rate);
        overlay(&mut cfg.epochs, flags.epochs);
        overlay(&mut cfg.batch_size, flags.batch_size);
        overlay(&mut cfg.rng_seed, flags.rng_seed);
        overlay_opt(&mut cfg.explicit_delta_b, flags.delta_b);
        overlay(&mut cfg.mtj_length_nm, flags.mtj_length_nm);
        overlay(&mut cfg.mtj_width_nm, flags.mtj_width_nm);
        overlay(&mut cfg.hm_length_nm, flags.hm_length_nm);
        overlay(&mut cfg.hm_width_nm, flags.hm_width_nm);
        overlay(&mut cfg.hm_thickness_nm, flags.hm_thickness_nm);
        overlay(&mut cfg.ra_product, flags.ra_product);
        overlay(&mut cfg.tmr0, flags.tmr0);
        overlay(&mut cfg.v0, flags.v0);
        overlay(&mut cfg.v_read, flags.v_read);
        overlay(&mut cfg.output_dir, flags.output_dir);
        overlay(&mut cfg.variation_sigma, flags.variation_sigma);
        overlay(&mut cfg.variation_seed, flags.variation_seed);
        cfg
    }

    /// The configured network shape.
    pub fn topology(&self) -> Result<MlpTopology, CliError> {
        MlpTopology::new(self.layers.clone()).map_err(usage)
    }

    /// Training hyperparameters with the threshold defaulted to 0.0.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            rng_seed: self.rng_seed,
            delta_b: self.explicit_delta_b.unwrap_or(0.0),
        }
    }

    /// The configured device geometry.
    pub fn geometry(&self) -> Result<DeviceGeometry, CliError> {
        DeviceGeometry::from_nanometers(
            self.mtj_length_nm,
            self.mtj_width_nm,
            self.hm_length_nm,
            self.hm_width_nm,
            self.hm_thickness_nm,
        )
        .map_err(usage)
    }

    /// The configured junction material parameters.
    pub fn materials(&self) -> Result<MaterialParams, CliError> {
        MaterialParams::new(self.ra_product, self.tmr0, self.v0).map_err(usage)
    }

    /// The configured calibration target.
    pub fn calibration_target(&self) -> Result<CalibrationTarget, CliError> {
        if !(self.v_read > 0.0 && self.v_read.is_finite()) {
            return Err(usage(format!("v_read must be positive and finite, got {}", self.v_read)));
        }
        Ok(CalibrationTarget { v_read: self.v_read })
    }

    /// Check every derived piece at once, before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.topology()?;
        self.train_config().validate().map_err(usage)?;
        self.geometry()?;
        self.materials()?;
        self.calibration_target()?;
        if !(self.variation_sigma >= 0.0 && self.variation_sigma.is_finite()) {
            return Err(usage(format!(
                "variation_sigma must be non-negative and finite, got {}",
                self.variation_sigma
            )));
        }
        Ok(())
    }

    /// Training set paths, required for the train command.
    pub fn train_paths(&self) -> Result<(&Path, &Path), CliError> {
        match (&self.train_images, &self.train_labels) {
            (Some(i), Some(l)) => Ok((i, l)),
            _ => Err(CliError::Usage(String::from(
                "training data not configured: set train_images and train_labels",
            ))),
        }
    }

    /// Test set paths, required for eval and for infer --index.
    pub fn test_paths(&self) -> Result<(&Path, &Path), CliError> {
        match (&self.test_images, &self.test_labels) {
            (Some(i), Some(l)) => Ok((i, l)),
            _ => Err(CliError::Usage(String::from(
                "test data not configured: set test_images and test_labels",
            ))),
        }
    }

    /// Test set paths when both are present.
    pub fn test_paths_opt(&self) -> Option<(&Path, &Path)> {
        match (&self.test_images, &self.test_labels) {
            (Some(i), Some(l)) => Some((i.as_path(), l.as_path())),
            _ => None,
        }
    }
}
