use proptest::prelude::*;
use sotmlp_core::bitcells::{
    parse_vtc_table, states_to_weight, weight_to_states, BitcellError, DiffAmp, NeuronBitcell,
    SynapseBitcell, VtcModel,
};
use sotmlp_core::device::{DeviceGeometry, MagState, MaterialParams};

fn defaults() -> (DeviceGeometry, MaterialParams) {
    (DeviceGeometry::default(), MaterialParams::default())
}

fn default_neuron(gain_k: f64) -> NeuronBitcell {
    let (g, p) = defaults();
    NeuronBitcell::new(g, p, 0.8, 0.0, gain_k).unwrap()
}

#[test]
fn weight_state_mapping() {
    assert_eq!(
        weight_to_states(1).unwrap(),
        (MagState::Parallel, MagState::AntiParallel)
    );
    assert_eq!(
        weight_to_states(-1).unwrap(),
        (MagState::AntiParallel, MagState::Parallel)
    );
    for bad in [0i8, 2, -2, 127, -128] {
        assert!(matches!(weight_to_states(bad), Err(BitcellError::InvalidWeight(_))));
    }
    assert_eq!(states_to_weight(MagState::Parallel, MagState::AntiParallel).unwrap(), 1);
    assert_eq!(states_to_weight(MagState::AntiParallel, MagState::Parallel).unwrap(), -1);
    assert!(matches!(
        states_to_weight(MagState::Parallel, MagState::Parallel),
        Err(BitcellError::EqualStates(MagState::Parallel))
    ));
}

#[test]
fn synapse_program_and_read_back() {
    let (g, p) = defaults();
    let mut syn = SynapseBitcell::new(g, p);
    assert!(!syn.is_programmed());
    assert!(matches!(syn.weight(), Err(BitcellError::UnprogrammedSynapse)));

    syn.program(1).unwrap();
    assert!(syn.is_programmed());
    assert_eq!(syn.weight().unwrap(), 1);
    assert_eq!(syn.mram_plus.state, MagState::Parallel);
    assert_eq!(syn.mram_minus.state, MagState::AntiParallel);

    syn.program(-1).unwrap();
    assert_eq!(syn.weight().unwrap(), -1);

    // Reprogramming the same value is a no-op on the states.
    syn.program(-1).unwrap();
    assert_eq!(syn.weight().unwrap(), -1);

    assert!(matches!(syn.program(0), Err(BitcellError::InvalidWeight(0))));
}

#[test]
fn synapse_read_currents_at_read_voltage() {
    let (g, p) = defaults();
    let mut syn = SynapseBitcell::new(g, p);
    syn.program(1).unwrap();
    let (i_plus, i_minus) = syn.currents(0.1);
    assert_eq!(i_plus, 1.1780972450961721e-5);
    assert_eq!(i_minus, 5.9593808012174784e-6);

    syn.program(-1).unwrap();
    let (i_plus_neg, i_minus_neg) = syn.currents(0.1);
    assert_eq!(i_plus_neg, i_minus);
    assert_eq!(i_minus_neg, i_plus);
}

#[test]
fn synapse_fixed_bias_keeps_currents_linear_in_input() {
    let (g, p) = defaults();
    let mut syn = SynapseBitcell::new(g, p);
    syn.program(1).unwrap();
    let (gp, gm) = syn.currents_at_bias(1.0, 0.1);
    for v in [0.0, 0.025, 0.05, 0.1] {
        let (ip, im) = syn.currents_at_bias(v, 0.1);
        assert_eq!(ip, v * gp);
        assert_eq!(im, v * gm);
    }
}

#[test]
fn neuron_transfer_midpoint_and_slope() {
    let neuron = default_neuron(10.0);
    let b = neuron.bias_point();
    assert_eq!(b, 0.4);
    // At the bias point the sigmoid argument is zero: output is mid-rail.
    assert_eq!(neuron.transfer(b), 0.4);
    // One slope-unit below the bias point: vdd * sigmoid(1).
    let out = neuron.transfer(b - 1.0 / 10.0);
    assert!((out - 0.5848468629040039).abs() < 1e-15);
    // Falling curve: larger input, smaller output.
    assert!(neuron.transfer(0.6) < neuron.transfer(0.2));
}

#[test]
fn neuron_gain_accessors() {
    let mut neuron = default_neuron(5.0);
    assert_eq!(neuron.gain_k().unwrap(), 5.0);
    neuron.set_gain_k(7.5).unwrap();
    assert_eq!(neuron.gain_k().unwrap(), 7.5);

    let table = VtcModel::tabulated(vec![(0.0, 0.8), (0.8, 0.0)]).unwrap();
    neuron.attach_vtc(table).unwrap();
    assert!(matches!(neuron.gain_k(), Err(BitcellError::VtcNotParametric)));
    assert!(matches!(neuron.set_gain_k(1.0), Err(BitcellError::VtcNotParametric)));
}

#[test]
fn neuron_devices_start_programmed() {
    let neuron = default_neuron(1.0);
    assert!(neuron.is_programmed());
    assert_eq!(neuron.mram1.state, MagState::Parallel);
    assert_eq!(neuron.mram2.state, MagState::AntiParallel);
}

#[test]
fn neuron_rejects_bad_rails() {
    let (g, p) = defaults();
    assert!(matches!(
        NeuronBitcell::new(g, p, 0.0, 0.0, 1.0),
        Err(BitcellError::InvalidRails { .. })
    ));
    assert!(NeuronBitcell::new(g, p, -0.1, 0.8, 1.0).is_err());
    assert!(NeuronBitcell::new(g, p, f64::NAN, 0.0, 1.0).is_err());
}

#[test]
fn tabulated_vtc_interpolates_and_clamps() {
    let mut neuron = default_neuron(1.0);
    let table = VtcModel::tabulated(vec![(0.0, 0.8), (0.4, 0.4), (0.8, 0.0)]).unwrap();
    neuron.attach_vtc(table).unwrap();
    // Sample inputs reproduce their outputs exactly; points between
    // samples interpolate in floating point.
    assert_eq!(neuron.transfer(0.0), 0.8);
    assert_eq!(neuron.transfer(0.4), 0.4);
    assert_eq!(neuron.transfer(0.8), 0.0);
    assert_eq!(neuron.transfer(0.2), 0.6);
    assert_eq!(neuron.transfer(0.6), 0.20000000000000007);
    // Outside the table the endpoint outputs hold.
    assert_eq!(neuron.transfer(-1.0), 0.8);
    assert_eq!(neuron.transfer(2.0), 0.0);
}

#[test]
fn tabulated_vtc_validation() {
    assert!(matches!(
        VtcModel::tabulated(vec![(0.0, 0.8)]),
        Err(BitcellError::VtcTooFewSamples(1))
    ));
    assert!(matches!(
        VtcModel::tabulated(vec![(0.0, 0.8), (0.0, 0.4)]),
        Err(BitcellError::VtcInputNotIncreasing { index: 1 })
    ));
    assert!(matches!(
        VtcModel::tabulated(vec![(0.0, 0.4), (0.4, 0.8)]),
        Err(BitcellError::VtcOutputIncreasing { index: 1 })
    ));
    assert!(matches!(
        VtcModel::tabulated(vec![(0.0, f64::NAN), (0.4, 0.2)]),
        Err(BitcellError::VtcNotFinite { index: 0 })
    ));
}

#[test]
fn attach_vtc_checks_output_window() {
    let mut neuron = default_neuron(1.0);
    let too_high = VtcModel::tabulated(vec![(0.0, 0.9), (0.8, 0.0)]).unwrap();
    assert!(matches!(
        neuron.attach_vtc(too_high),
        Err(BitcellError::VtcOutputOutOfRange { index: 0, .. })
    ));
    let below = VtcModel::tabulated(vec![(0.0, 0.8), (0.8, -0.1)]).unwrap();
    assert!(neuron.attach_vtc(below).is_err());
}

#[test]
fn vtc_table_parsing() {
    let text = "# measured inverter curve\n\n0.0 0.8\n 0.4\t0.4 \n0.8 0.0\n";
    let vtc = parse_vtc_table(text).unwrap();
    match vtc {
        VtcModel::Tabulated { samples } => {
            assert_eq!(samples, vec![(0.0, 0.8), (0.4, 0.4), (0.8, 0.0)]);
        }
        VtcModel::Parametric { .. } => panic!("expected a tabulated model"),
    }

    let err = parse_vtc_table("0.0 0.8\n0.4 oops\n").unwrap_err();
    assert!(matches!(err, BitcellError::VtcParse { line: 2, .. }));
    let err = parse_vtc_table("0.0 0.8 1.0\n").unwrap_err();
    assert!(matches!(err, BitcellError::VtcParse { line: 1, .. }));
    let err = parse_vtc_table("0.0\n").unwrap_err();
    assert!(matches!(err, BitcellError::VtcParse { line: 1, .. }));
    let err = parse_vtc_table("# nothing\n").unwrap_err();
    assert!(matches!(err, BitcellError::VtcTooFewSamples(0)));
}

#[test]
fn amp_output_and_clamps() {
    let amp = DiffAmp::new(1000.0, -0.4, 0.4).unwrap();
    let out = amp.output(3e-4, 1e-4);
    assert_eq!(out, 1000.0 * (3e-4 - 1e-4));
    assert_eq!(amp.output(1e-2, 0.0), 0.4);
    assert_eq!(amp.output(0.0, 1e-2), -0.4);
    assert_eq!(amp.output(2e-4, 2e-4), 0.0);
}

#[test]
fn amp_rejects_bad_parameters() {
    assert!(DiffAmp::new(0.0, -0.4, 0.4).is_err());
    assert!(DiffAmp::new(-5.0, -0.4, 0.4).is_err());
    assert!(DiffAmp::new(f64::NAN, -0.4, 0.4).is_err());
    assert!(DiffAmp::new(1000.0, 0.4, -0.4).is_err());
    assert!(DiffAmp::new(1000.0, 0.4, 0.4).is_err());
    assert!(DiffAmp::new(1000.0, f64::NAN, 0.4).is_err());
}

proptest! {
    #[test]
    fn weight_round_trips_through_states(w in prop_oneof![Just(1i8), Just(-1i8)]) {
        let (s1, s2) = weight_to_states(w).unwrap();
        prop_assert_eq!(states_to_weight(s1, s2).unwrap(), w);
    }

    #[test]
    fn synapse_plus_current_dominates_for_positive_weight(v in 1e-3f64..0.1) {
        let (g, p) = defaults();
        let mut syn = SynapseBitcell::new(g, p);
        syn.program(1).unwrap();
        let (ip, im) = syn.currents(v);
        prop_assert!(ip > im);
        syn.program(-1).unwrap();
        let (ip, im) = syn.currents(v);
        prop_assert!(ip < im);
    }

    #[test]
    fn neuron_transfer_stays_inside_rails(v in -2.0f64..2.0, k in 0.1f64..100.0) {
        let neuron = default_neuron(k);
        let out = neuron.transfer(v);
        prop_assert!((0.0..=0.8).contains(&out));
    }

    #[test]
    fn neuron_transfer_is_falling(a in 0.0f64..0.8, b in 0.0f64..0.8, k in 0.1f64..100.0) {
        let neuron = default_neuron(k);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(neuron.transfer(lo) >= neuron.transfer(hi));
    }

    #[test]
    fn amp_output_never_leaves_clamp_window(
        ip in -1e-2f64..1e-2,
        im in -1e-2f64..1e-2,
        gain in 1.0f64..1e6,
    ) {
        let amp = DiffAmp::new(gain, -0.4, 0.4).unwrap();
        let out = amp.output(ip, im);
        prop_assert!((-0.4..=0.4).contains(&out));
    }
}
