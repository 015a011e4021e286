use std::path::{Path, PathBuf};

use clap::ValueEnum;
use sotmlp_core::analysis::{
    reference_latency_specs, reference_power_area_ratios, ComparisonTable, LatencyReport,
};
use sotmlp_core::dataset::{to_voltages, LabeledImage};
use sotmlp_core::netlist::{emit_mlp, NetlistMeta};
use sotmlp_core::network::{
    classify, ideal_outputs, AnalogMlp, BinLayer, BinarizedModel, MlpTopology,
};
use sotmlp_core::trainer::{evaluate_model, TeacherNetwork};

use crate::config::RunConfig;
use crate::data::{load_labeled_set, load_pixel_file};
use crate::error::{internal, usage, CliError};
use crate::formats::{load_checkpoint, Checkpoint, MetricsLine};

/// Supply rails shared by every bitcell in the design.
pub const VDD: f64 = 0.8;
pub const VSS: f64 = 0.0;

/// Which forward path evaluation and inference run through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Exact arithmetic on the binarized weights.
    Ideal,
    /// The calibrated crossbar simulation.
    Analog,
}

/// Result surface of the train command, also used by tests.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub metrics: Vec<MetricsLine>,
    pub checkpoint_path: PathBuf,
    pub metrics_path: PathBuf,
}

/// Result surface of the eval command.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
}

/// Train a teacher network on the configured dataset, then write the
/// checkpoint and metrics log under the output directory.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome, CliError> {
    cfg.validate()?;
    let topology = cfg.topology()?;
    let train_config = cfg.train_config();
    let (images, labels) = cfg.train_paths()?;
    let train_data = load_labeled_set(images, labels)?;
    check_input_size(&train_data, topology.input_size())?;
    let test_data = match cfg.test_paths_opt() {
        Some((i, l)) => {
            let data = load_labeled_set(i, l)?;
            check_input_size(&data, topology.input_size())?;
            Some(data)
        }
        None => None,
    };

    let mut teacher = TeacherNetwork::init(topology, train_config.rng_seed);
    let mut metrics = Vec::with_capacity(train_config.epochs);
    for epoch in 0..train_config.epochs {
        let epoch_metrics = teacher
            .train_epoch(&train_data, &train_config, epoch as u64)
            .map_err(internal)?;
        let test_accuracy = match &test_data {
            Some(data) => {
                let student =
                    teacher.extract_student(train_config.delta_b).map_err(internal)?;
                Some(evaluate_model(&student, data).map_err(internal)?)
            }
            None => None,
        };
        let line = MetricsLine {
            epoch: epoch_metrics.epoch,
            train_loss: epoch_metrics.train_loss,
            test_accuracy,
        };
        println!("{}", line.to_line());
        metrics.push(line);
    }

    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| internal(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    let checkpoint_path = cfg.output_dir.join("checkpoint.txt");
    let checkpoint = Checkpoint::from_teacher(&teacher, &train_config, train_config.epochs);
    write_artifact(&checkpoint_path, &checkpoint.to_text())?;
    let metrics_path = cfg.output_dir.join("metrics.log");
    let metrics_text: String =
        metrics.iter().map(|m| m.to_line() + "\n").collect();
    write_artifact(&metrics_path, &metrics_text)?;
    println!("checkpoint written to {}", checkpoint_path.display());
    println!("metrics written to {}", metrics_path.display());
    Ok(TrainOutcome { metrics, checkpoint_path, metrics_path })
}

/// Evaluate a checkpoint on the configured test set and print the
/// accuracy. Optionally writes the per-image predicted labels.
pub fn eval(
    cfg: &RunConfig,
    checkpoint: &Path,
    mode: Mode,
    limit: Option<usize>,
    predictions: Option<&Path>,
) -> Result<EvalOutcome, CliError> {
    cfg.validate()?;
    let ck = load_checkpoint(checkpoint)?;
    let student = ck.student(ck.resolve_delta_b(cfg.explicit_delta_b))?;
    let (images, labels) = cfg.test_paths()?;
    let mut data = load_labeled_set(images, labels)?;
    if let Some(n) = limit {
        if n == 0 {
            return Err(usage("limit must be at least 1"));
        }
        data.truncate(n);
    }
    check_input_size(&data, student.topology().input_size())?;

    let preds = predict(cfg, &student, &data, mode)?;
    let correct = preds
        .iter()
        .zip(&data)
        .filter(|(p, img)| **p == usize::from(img.label))
        .count();
    let total = data.len();
    let accuracy = correct as f64 / total as f64;
    println!("accuracy {accuracy} ({correct}/{total})");

    if let Some(path) = predictions {
        let text: String = preds.iter().map(|p| format!("{p}\n")).collect();
        write_artifact(path, &text)?;
        println!("predictions written to {}", path.display());
    }
    Ok(EvalOutcome { accuracy, correct, total })
}

/// Run one image through a checkpoint and print the layer outputs and the
/// predicted class.
pub fn infer(
    cfg: &RunConfig,
    checkpoint: &Path,
    image: Option<&Path>,
    index: Option<usize>,
    mode: Mode,
) -> Result<usize, CliError> {
    cfg.validate()?;
    let ck = load_checkpoint(checkpoint)?;
    let student = ck.student(ck.resolve_delta_b(cfg.explicit_delta_b))?;
    let n_in = student.topology().input_size();

    let (sample, label) = match (image, index) {
        (Some(path), None) => {
            let pixels = load_pixel_file(path, n_in)?;
            (LabeledImage { pixels, label: 0 }, None)
        }
        (None, Some(i)) => {
            let (images, labels) = cfg.test_paths()?;
            let data = load_labeled_set(images, labels)?;
            check_input_size(&data, n_in)?;
            if i >= data.len() {
                return Err(usage(format!(
                    "index {i} is out of range for a test set of {} images",
                    data.len()
                )));
            }
            let img = data[i].clone();
            let label = img.label;
            (img, Some(label))
        }
        _ => return Err(usage("give exactly one of --image or --index")),
    };

    let outputs = match mode {
        Mode::Ideal => ideal_outputs(&student, &pixels_f64(&sample)),
        Mode::Analog => {
            let mlp = build_programmed_mlp(cfg, &student)?;
            let (outputs, _) =
                mlp.forward(&to_voltages(&sample, cfg.v_read)).map_err(internal)?;
            outputs
        }
    };
    let class = classify(&outputs);
    let rendered: Vec<String> = outputs.iter().map(|v| v.to_string()).collect();
    println!("outputs: {}", rendered.join(" "));
    println!("class {class}");
    if let Some(l) = label {
        println!("label {l}");
    }
    Ok(class)
}

/// Program a checkpoint into crossbar arrays and write the SPICE netlist.
pub fn export_netlist(
    cfg: &RunConfig,
    checkpoint: &Path,
    out: Option<&Path>,
) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let ck = load_checkpoint(checkpoint)?;
    let student = ck.student(ck.resolve_delta_b(cfg.explicit_delta_b))?;
    let mlp = build_programmed_mlp(cfg, &student)?;
    let text = emit_mlp(&mlp, &NetlistMeta::default()).map_err(internal)?;
    let out_path = match out {
        Some(p) => p.to_path_buf(),
        None => cfg.output_dir.join("network.sp"),
    };
    write_artifact(&out_path, &text)?;
    println!("netlist written to {}", out_path.display());
    Ok(out_path)
}

/// Print the power-area comparison and the latency report, and write them
/// under the output directory.
pub fn report(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<(), CliError> {
    cfg.validate()?;
    let model = match checkpoint {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            ck.student(ck.resolve_delta_b(cfg.explicit_delta_b))?
        }
        None => all_ones_model(&cfg.topology()?),
    };
    let mlp = build_programmed_mlp(cfg, &model)?;
    let comparison =
        ComparisonTable::from_ratios(&reference_power_area_ratios()).map_err(internal)?;
    let latency = LatencyReport::build(&mlp, &reference_latency_specs()).map_err(internal)?;

    let text = format!("{}\n{}", comparison.to_text(), latency.to_text());
    print!("{text}");
    write_artifact(&cfg.output_dir.join("report.txt"), &text)?;
    write_artifact(&cfg.output_dir.join("power_area.csv"), &comparison.to_csv())?;
    write_artifact(&cfg.output_dir.join("latency.csv"), &latency.to_csv())?;
    println!("reports written to {}", cfg.output_dir.display());
    Ok(())
}

/// Build the analog network for a model under the configured device stack:
/// allocate, program, calibrate, and optionally perturb it.
pub fn build_programmed_mlp(
    cfg: &RunConfig,
    model: &BinarizedModel,
) -> Result<AnalogMlp, CliError> {
    let mut mlp = AnalogMlp::build(
        model.topology().clone(),
        cfg.geometry()?,
        cfg.materials()?,
        VDD,
        VSS,
    )
    .map_err(internal)?;
    mlp.map_model(model).map_err(internal)?;
    mlp.calibrate(&cfg.calibration_target()?).map_err(internal)?;
    if cfg.variation_sigma > 0.0 {
        mlp.apply_variation(cfg.variation_sigma, cfg.variation_seed).map_err(internal)?;
    }
    Ok(mlp)
}

fn predict(
    cfg: &RunConfig,
    student: &BinarizedModel,
    data: &[LabeledImage],
    mode: Mode,
) -> Result<Vec<usize>, CliError> {
    match mode {
        Mode::Ideal => Ok(data
            .iter()
            .map(|img| classify(&ideal_outputs(student, &pixels_f64(img))))
            .collect()),
        Mode::Analog => {
            let mlp = build_programmed_mlp(cfg, student)?;
            data.iter()
                .map(|img| {
                    let (outputs, _) =
                        mlp.forward(&to_voltages(img, cfg.v_read)).map_err(internal)?;
                    Ok(classify(&outputs))
                })
                .collect()
        }
    }
}

fn pixels_f64(image: &LabeledImage) -> Vec<f64> {
    image.pixels.iter().map(|p| f64::from(*p)).collect()
}

fn check_input_size(data: &[LabeledImage], expected: usize) -> Result<(), CliError> {
    match data.first() {
        Some(img) if img.pixels.len() != expected => Err(usage(format!(
            "network expects {expected} inputs but the images have {} pixels",
            img.pixels.len()
        ))),
        _ => Ok(()),
    }
}

/// Deterministic stand-in model when no checkpoint is given: every weight
/// and bias at +1. Cost reports depend only on the shape.
fn all_ones_model(topology: &MlpTopology) -> BinarizedModel {
    let sizes = topology.layer_sizes();
    let layers = sizes
        .windows(2)
        .map(|pair| BinLayer { weights: vec![1; pair[1] * pair[0]], biases: vec![1; pair[1]] })
        .collect();
    BinarizedModel::new(topology.clone(), layers)
        .expect("all-ones model is valid for any topology")
}

fn write_artifact(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| internal(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| internal(format!("cannot write {}: {e}", path.display())))
}
