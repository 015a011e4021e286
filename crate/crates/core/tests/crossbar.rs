use proptest::prelude::*;
use sotmlp_core::crossbar::{
    ideal_row_forward, seeded_weight_matrix, signals_for_inference, signals_for_write,
    validate_signals, CalibrationTarget, ControlSignals, CrossbarArray, CrossbarError, LineState,
    Phase,
};

fn programmed_array(n: usize, m: usize, seed: u64) -> (CrossbarArray, Vec<Vec<i8>>) {
    let mut array = CrossbarArray::with_defaults(n, m).unwrap();
    let weights = seeded_weight_matrix(m, n, seed);
    array.set_phase(Phase::Training);
    array.program_array(&weights).unwrap();
    array.set_phase(Phase::Idle);
    (array, weights)
}

#[test]
fn construction_and_accessors() {
    let array = CrossbarArray::with_defaults(4, 3).unwrap();
    assert_eq!(array.n_inputs(), 4);
    assert_eq!(array.m_rows(), 3);
    assert!(array.has_bias_column());
    assert_eq!(array.terms_per_row(), 5);
    assert_eq!(array.weights_per_row(), 5);
    assert_eq!(array.phase(), Phase::Idle);
    assert_eq!(array.cycle_count(), 0);
    assert_eq!(array.vdd(), 0.8);
    assert_eq!(array.vss(), 0.0);
    assert!(!array.is_programmed());
    assert!(array.calibration().is_none());

    let bare = CrossbarArray::without_bias(
        4,
        3,
        *array.geometry(),
        *array.material_params(),
        0.8,
        0.0,
    )
    .unwrap();
    assert!(!bare.has_bias_column());
    assert_eq!(bare.terms_per_row(), 4);

    assert!(CrossbarArray::with_defaults(0, 3).is_err());
    assert!(CrossbarArray::with_defaults(4, 0).is_err());
}

#[test]
fn programming_requires_training_phase() {
    let mut array = CrossbarArray::with_defaults(2, 2).unwrap();
    let err = array.program_row(0, &[1, 1, 1]).unwrap_err();
    assert!(matches!(
        err,
        CrossbarError::WrongPhase { expected: Phase::Training, found: Phase::Idle }
    ));
}

#[test]
fn programming_validates_rows_and_weights() {
    let mut array = CrossbarArray::with_defaults(2, 2).unwrap();
    array.set_phase(Phase::Training);
    assert!(matches!(
        array.program_row(5, &[1, 1, 1]),
        Err(CrossbarError::RowOutOfRange { row: 5, m_rows: 2 })
    ));
    assert!(matches!(
        array.program_row(0, &[1, 1]),
        Err(CrossbarError::WeightLength { expected: 3, found: 2 })
    ));
    assert!(matches!(
        array.program_row(0, &[1, 0, 1]),
        Err(CrossbarError::InvalidWeight { row: 0, col: 1, value: 0 })
    ));
    assert!(matches!(
        array.program_array(&[vec![1, 1, 1]]),
        Err(CrossbarError::DimensionMismatch { expected_rows: 2, found_rows: 1 })
    ));
}

#[test]
fn row_serial_programming_costs_one_cycle_per_row() {
    let (array, _) = programmed_array(4, 3, 11);
    assert_eq!(array.cycle_count(), 3);
    assert!(array.is_programmed());
}

#[test]
fn programmed_weights_read_back_with_bias_last() {
    let (array, weights) = programmed_array(3, 4, 5);
    assert_eq!(array.extract_weights().unwrap(), weights);
    // Spot-check the device states behind one entry.
    let w00 = weights[0][0];
    let syn = array.synapse(0, 0);
    assert_eq!(syn.weight().unwrap(), w00);
    let bias = array.bias_cell(0).unwrap();
    assert_eq!(bias.weight().unwrap(), weights[0][3]);
}

#[test]
fn reprogramming_overwrites_previous_weights() {
    let mut array = CrossbarArray::with_defaults(2, 1).unwrap();
    array.set_phase(Phase::Training);
    array.program_row(0, &[1, 1, 1]).unwrap();
    array.program_row(0, &[-1, 1, -1]).unwrap();
    assert_eq!(array.extract_weights().unwrap(), vec![vec![-1, 1, -1]]);
    assert_eq!(array.cycle_count(), 2);
}

#[test]
fn write_signals_follow_the_signaling_table() {
    let s = signals_for_write(4, 3, 2, 1);
    assert_eq!(s.wwl, vec![LineState::Gnd, LineState::Gnd, LineState::Vdd, LineState::Gnd]);
    assert_eq!(s.rwl, LineState::Gnd);
    assert_eq!(s.bl, LineState::Vdd);
    assert_eq!(s.sl, LineState::Gnd);
    assert_eq!(s.inputs, vec![LineState::HiZ; 3]);
    assert!(validate_signals(&s, Phase::Training, 0.8).is_empty());

    let s = signals_for_write(4, 3, 0, -1);
    assert_eq!(s.bl, LineState::Gnd);
    assert_eq!(s.sl, LineState::Vdd);
    assert!(validate_signals(&s, Phase::Training, 0.8).is_empty());
}

#[test]
fn inference_signals_follow_the_signaling_table() {
    let s = signals_for_inference(3, &[0.0, 0.05, 0.1]);
    assert_eq!(s.wwl, vec![LineState::Gnd; 3]);
    assert_eq!(s.rwl, LineState::Vdd);
    assert_eq!(s.bl, LineState::HiZ);
    assert_eq!(s.sl, LineState::HiZ);
    assert_eq!(s.inputs[1], LineState::Vin(0.05));
    assert!(validate_signals(&s, Phase::Inference, 0.8).is_empty());
}

#[test]
fn validator_names_each_offending_line() {
    let mut s = signals_for_write(3, 2, 1, 1);
    s.wwl[0] = LineState::Vdd;
    let violations = validate_signals(&s, Phase::Training, 0.8);
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].line, "WWL");
    assert_eq!(violations[0].expected, "VDD on exactly one row");

    let mut s = signals_for_write(3, 2, 1, 1);
    s.rwl = LineState::Vdd;
    let violations = validate_signals(&s, Phase::Training, 0.8);
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].line, "RWL");

    let mut s = signals_for_write(3, 2, 1, 1);
    s.sl = LineState::Vdd;
    let violations = validate_signals(&s, Phase::Training, 0.8);
    assert_eq!(violations[0].line, "SL");

    let mut s = signals_for_write(3, 2, 1, 1);
    s.bl = LineState::HiZ;
    let violations = validate_signals(&s, Phase::Training, 0.8);
    assert_eq!(violations[0].line, "BL");

    let mut s = signals_for_write(3, 2, 1, 1);
    s.inputs[1] = LineState::Vin(0.2);
    let violations = validate_signals(&s, Phase::Training, 0.8);
    assert_eq!(violations[0].line, "IN[1]");

    let mut s = signals_for_inference(3, &[0.05, 0.05]);
    s.wwl[2] = LineState::Vdd;
    let violations = validate_signals(&s, Phase::Inference, 0.8);
    assert_eq!(violations[0].line, "WWL[2]");
    assert_eq!(violations[0].expected, "GND");

    let s = signals_for_inference(2, &[0.05, 0.9]);
    let violations = validate_signals(&s, Phase::Inference, 0.8);
    assert_eq!(violations[0].line, "IN[1]");

    let s = signals_for_inference(2, &[-0.01, 0.05]);
    let violations = validate_signals(&s, Phase::Inference, 0.8);
    assert_eq!(violations[0].line, "IN[0]");

    let mut s = signals_for_inference(2, &[0.05, 0.05]);
    s.rwl = LineState::Gnd;
    s.bl = LineState::Vdd;
    let violations = validate_signals(&s, Phase::Inference, 0.8);
    let lines: Vec<&str> = violations.iter().map(|v| v.line.as_str()).collect();
    assert_eq!(lines, vec!["RWL", "BL"]);

    let idle = ControlSignals {
        wwl: vec![LineState::Gnd],
        rwl: LineState::Gnd,
        bl: LineState::HiZ,
        sl: LineState::HiZ,
        inputs: vec![LineState::HiZ],
    };
    let violations = validate_signals(&idle, Phase::Idle, 0.8);
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].line, "PHASE");
}

#[test]
fn calibration_sets_amp_gain_and_neuron_slope() {
    let (mut array, _) = programmed_array(2, 3, 21);
    let params = array.calibrate(&CalibrationTarget::default()).unwrap();
    assert_eq!(params.v_read, 0.1);
    assert_eq!(params.unit_conductance_delta, 5.8215916497442436e-5);
    assert_eq!(params.pre_activation_scale, 0.13333333333333333);
    assert_eq!(array.calibration(), Some(&params));

    let amp = array.amp(0);
    assert!((amp.transimpedance_gain - 22903.243881626597).abs() < 1e-9);
    assert_eq!(amp.v_clamp_low, -0.4);
    assert_eq!(amp.v_clamp_high, 0.4);
    assert_eq!(array.neuron(0).gain_k().unwrap(), 7.5);

    // One algorithmic unit maps to one logistic unit.
    let unit = amp.transimpedance_gain * params.v_read * params.unit_conductance_delta;
    assert!((unit * array.neuron(0).gain_k().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn calibration_requires_a_programmed_array() {
    let mut array = CrossbarArray::with_defaults(2, 2).unwrap();
    assert!(matches!(
        array.calibrate(&CalibrationTarget::default()),
        Err(CrossbarError::NotProgrammed)
    ));
}

#[test]
fn calibration_rejects_bad_read_voltage() {
    let (mut array, _) = programmed_array(2, 2, 3);
    for v in [0.0, -0.1, 0.9, f64::NAN] {
        let target = CalibrationTarget { v_read: v };
        assert!(matches!(
            array.calibrate(&target),
            Err(CrossbarError::InvalidCalibrationTarget { .. })
        ));
    }
}

#[test]
fn analog_evaluation_matches_the_ideal_forward() {
    let (mut array, weights) = programmed_array(4, 3, 7);
    array.calibrate(&CalibrationTarget::default()).unwrap();
    let xs = [
        vec![0.0, 0.0, 0.0, 0.0],
        vec![1.0, 1.0, 1.0, 1.0],
        vec![0.25, 0.5, 0.75, 1.0],
        vec![0.9, 0.1, 0.3, 0.6],
    ];
    for x in &xs {
        let volts: Vec<f64> = x.iter().map(|v| v * 0.1).collect();
        let analog = array.evaluate(&volts).unwrap();
        let ideal = ideal_row_forward(&weights, x);
        for (a, i) in analog.iter().zip(ideal.iter()) {
            let expected = 0.8 * i;
            assert!(
                (a - expected).abs() <= 1e-6 * 0.8,
                "analog {a} vs ideal {expected}"
            );
        }
    }
}

#[test]
fn evaluate_validates_inputs() {
    let (mut array, _) = programmed_array(2, 2, 3);
    array.calibrate(&CalibrationTarget::default()).unwrap();
    assert!(matches!(
        array.evaluate(&[0.05]),
        Err(CrossbarError::InputLength { expected: 2, found: 1 })
    ));
    assert!(matches!(
        array.evaluate(&[0.05, 0.2]),
        Err(CrossbarError::InputOutOfRange { index: 1, .. })
    ));
    assert!(matches!(
        array.evaluate(&[-0.01, 0.05]),
        Err(CrossbarError::InputOutOfRange { index: 0, .. })
    ));
    assert!(array.evaluate(&[f64::NAN, 0.05]).is_err());
}

#[test]
fn evaluate_requires_calibration() {
    let (array, _) = programmed_array(2, 2, 3);
    assert!(matches!(array.evaluate(&[0.05, 0.05]), Err(CrossbarError::NotCalibrated)));
}

#[test]
fn inference_charges_one_cycle_and_checks_phase() {
    let (mut array, _) = programmed_array(3, 2, 13);
    let params = array.calibrate(&CalibrationTarget::default()).unwrap();
    let cycles_after_programming = array.cycle_count();

    let err = array.infer(&[0.05, 0.05, 0.05], &params).unwrap_err();
    assert!(matches!(err, CrossbarError::WrongPhase { expected: Phase::Inference, .. }));

    array.set_phase(Phase::Inference);
    let (outputs, cost) = array.infer(&[0.05, 0.05, 0.05], &params).unwrap();
    assert_eq!(cost, 1);
    assert_eq!(outputs.len(), 2);
    assert_eq!(array.cycle_count(), cycles_after_programming + 1);

    let evaluated = array.evaluate(&[0.05, 0.05, 0.05]).unwrap();
    assert_eq!(outputs, evaluated);

    let mut doctored = params;
    doctored.pre_activation_scale *= 1.5;
    assert!(matches!(
        array.infer(&[0.05, 0.05, 0.05], &doctored),
        Err(CrossbarError::CalibrationMismatch)
    ));
}

#[test]
fn inference_before_calibration_fails() {
    let (mut array, _) = programmed_array(2, 2, 3);
    let other = CrossbarArray::with_defaults(2, 2).unwrap();
    let params = other
        .calibration_params_for_terms(&CalibrationTarget::default(), 3)
        .unwrap();
    array.set_phase(Phase::Inference);
    assert!(matches!(
        array.infer(&[0.05, 0.05], &params),
        Err(CrossbarError::NotCalibrated)
    ));
}

#[test]
fn zero_variation_is_a_no_op() {
    let (mut array, _) = programmed_array(3, 3, 17);
    let before = array.snapshot();
    array.apply_variation(0.0, 123).unwrap();
    assert_eq!(array.snapshot(), before);
}

#[test]
fn variation_is_deterministic_per_seed() {
    let (reference, _) = programmed_array(3, 3, 17);
    let mut a = reference.clone();
    let mut b = reference.clone();
    a.apply_variation(0.1, 42).unwrap();
    b.apply_variation(0.1, 42).unwrap();
    assert_eq!(a, b);

    let mut c = reference.clone();
    c.apply_variation(0.1, 43).unwrap();
    assert_ne!(a, c);
    assert!(matches!(
        c.apply_variation(-0.5, 1),
        Err(CrossbarError::InvalidVariation { .. })
    ));
    assert!(c.apply_variation(f64::NAN, 1).is_err());
}

#[test]
fn variation_shifts_the_analog_output() {
    let (mut array, _) = programmed_array(3, 3, 17);
    array.calibrate(&CalibrationTarget::default()).unwrap();
    let clean = array.evaluate(&[0.03, 0.06, 0.09]).unwrap();
    array.apply_variation(0.2, 99).unwrap();
    let varied = array.evaluate(&[0.03, 0.06, 0.09]).unwrap();
    assert_ne!(clean, varied);
}

#[test]
fn snapshot_is_deterministic_and_tracks_state() {
    let mut array = CrossbarArray::with_defaults(2, 2).unwrap();
    let fresh = array.snapshot();
    assert!(fresh.starts_with("crossbar-snapshot v1\n"));
    assert!(fresh.contains("dims 2 2 1"));
    assert!(fresh.contains("phase Idle"));
    assert!(fresh.contains("cycles 0"));
    assert!(fresh.contains("synapse 0 0 - -"));
    assert_eq!(fresh, array.snapshot());

    array.set_phase(Phase::Training);
    array.program_array(&[vec![1, -1, 1], vec![-1, 1, -1]]).unwrap();
    let programmed = array.snapshot();
    assert_ne!(programmed, fresh);
    assert!(programmed.contains("synapse 0 0 P AP"));
    assert!(programmed.contains("synapse 0 1 AP P"));
    assert!(programmed.contains("bias 0 P AP"));
    assert!(programmed.contains("neuron 0 P AP"));
    assert!(programmed.contains("cycles 2"));
    assert!(programmed.contains("phase Training"));
}

#[test]
fn ideal_row_forward_known_case() {
    let weights = vec![vec![1i8, -1, 1]];
    let out = ideal_row_forward(&weights, &[0.3, 0.6]);
    assert_eq!(out.len(), 1);
    assert!((out[0] - 0.3318122278318339).abs() < 1e-15);
}

#[test]
fn seeded_weight_matrix_is_deterministic() {
    let a = seeded_weight_matrix(3, 4, 9);
    let b = seeded_weight_matrix(3, 4, 9);
    assert_eq!(a, b);
    assert_eq!(a.len(), 3);
    assert!(a.iter().all(|row| row.len() == 5));
    assert!(a.iter().flatten().all(|w| *w == 1 || *w == -1));
    assert_ne!(seeded_weight_matrix(3, 4, 10), a);
}

#[test]
fn without_bias_array_round_trips_weights() {
    let mut array = CrossbarArray::without_bias(
        2,
        2,
        sotmlp_core::device::DeviceGeometry::default(),
        sotmlp_core::device::MaterialParams::default(),
        0.8,
        0.0,
    )
    .unwrap();
    array.set_phase(Phase::Training);
    array.program_array(&[vec![1, -1], vec![-1, 1]]).unwrap();
    assert_eq!(array.extract_weights().unwrap(), vec![vec![1, -1], vec![-1, 1]]);
    assert_eq!(array.cycle_count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn programming_cost_equals_row_count(n in 1usize..12, m in 1usize..12, seed in 0u64..500) {
        let mut array = CrossbarArray::with_defaults(n, m).unwrap();
        let weights = seeded_weight_matrix(m, n, seed);
        array.set_phase(Phase::Training);
        array.program_array(&weights).unwrap();
        prop_assert_eq!(array.cycle_count(), m as u64);
        prop_assert!(array.is_programmed());
    }

    #[test]
    fn inference_cost_is_one_cycle_regardless_of_size(n in 1usize..10, m in 1usize..10) {
        let mut array = CrossbarArray::with_defaults(n, m).unwrap();
        let weights = seeded_weight_matrix(m, n, 1);
        array.set_phase(Phase::Training);
        array.program_array(&weights).unwrap();
        let params = array.calibrate(&CalibrationTarget::default()).unwrap();
        array.set_phase(Phase::Inference);
        let before = array.cycle_count();
        let (_, cost) = array.infer(&vec![0.05; n], &params).unwrap();
        prop_assert_eq!(cost, 1);
        prop_assert_eq!(array.cycle_count(), before + 1);
    }

    #[test]
    fn generated_signals_always_validate(
        m in 1usize..20,
        n in 1usize..20,
        row in 0usize..20,
        w in prop_oneof![Just(1i8), Just(-1i8)],
    ) {
        let row = row % m;
        let write = signals_for_write(m, n, row, w);
        prop_assert!(validate_signals(&write, Phase::Training, 0.8).is_empty());
        let volts: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64) / (n as f64)).collect();
        let infer = signals_for_inference(m, &volts);
        prop_assert!(validate_signals(&infer, Phase::Inference, 0.8).is_empty());
    }

    #[test]
    fn analog_output_stays_within_rails(
        seed in 0u64..200,
        x0 in 0.0f64..1.0,
        x1 in 0.0f64..1.0,
    ) {
        let (mut array, _) = programmed_array(2, 3, seed);
        array.calibrate(&CalibrationTarget::default()).unwrap();
        let out = array.evaluate(&[x0 * 0.1, x1 * 0.1]).unwrap();
        prop_assert!(out.iter().all(|o| (0.0..=0.8).contains(o)));
    }

    #[test]
    fn analog_tracks_ideal_over_random_instances(
        seed in 0u64..200,
        xs in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let (mut array, weights) = programmed_array(3, 2, seed);
        array.calibrate(&CalibrationTarget::default()).unwrap();
        let volts: Vec<f64> = xs.iter().map(|v| v * 0.1).collect();
        let analog = array.evaluate(&volts).unwrap();
        let ideal = ideal_row_forward(&weights, &xs);
        for (a, i) in analog.iter().zip(ideal.iter()) {
            prop_assert!((a - 0.8 * i).abs() <= 1e-6 * 0.8);
        }
    }
}
