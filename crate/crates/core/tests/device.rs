use core::f64::consts::PI;

use proptest::prelude::*;
use sotmlp_core::device::{
    DeviceError, DeviceGeometry, MagState, MaterialParams, SotMramCell, WritePolarity,
};

fn default_cell(state: MagState) -> SotMramCell {
    SotMramCell::new(DeviceGeometry::default(), MaterialParams::default(), state)
}

#[test]
fn default_geometry_and_material() {
    let g = DeviceGeometry::default();
    assert_eq!(g.mtj_length, 50e-9);
    assert_eq!(g.mtj_width, 30e-9);
    assert_eq!(g.hm_length, 100e-9);
    assert_eq!(g.hm_width, 50e-9);
    assert_eq!(g.hm_thickness, 3e-9);
    let p = MaterialParams::default();
    assert_eq!(p.ra_product, 10.0);
    assert_eq!(p.tmr0, 100.0);
    assert_eq!(p.v0, 0.65);
    assert_eq!(
        DeviceGeometry::from_nanometers(50.0, 30.0, 100.0, 50.0, 3.0).unwrap(),
        g
    );
}

#[test]
fn elliptical_area() {
    let g = DeviceGeometry::default();
    assert_eq!(g.mtj_area(), 1.1780972450961723e-15);
    assert_eq!(g.mtj_area(), g.mtj_length * g.mtj_width * PI / 4.0);
}

#[test]
fn parallel_resistance_value() {
    let cell = default_cell(MagState::Parallel);
    let r_p = cell.r_mtj();
    assert_eq!(r_p, 8488.263631567754);
    assert!((r_p - 8488.3).abs() / 8488.3 < 1e-3);
    assert_eq!(cell.resistance(0.0), r_p);
}

#[test]
fn parallel_resistance_is_bias_independent() {
    let cell = default_cell(MagState::Parallel);
    let r0 = cell.resistance(0.0);
    for v in [0.05, 0.1, 0.4, 0.65, 0.8] {
        assert_eq!(cell.resistance(v), r0);
    }
}

#[test]
fn antiparallel_is_exactly_double_at_zero_bias() {
    let cell = default_cell(MagState::AntiParallel);
    let r_p = cell.r_mtj();
    assert_eq!(cell.resistance(0.0), 2.0 * r_p);
    assert_eq!(cell.resistance(0.0), 16976.527263135507);
}

#[test]
fn tmr_halves_exactly_at_v0() {
    let p = MaterialParams::default();
    assert_eq!(p.tmr(0.0), 1.0);
    assert_eq!(p.tmr(p.v0), 0.5);
    assert_eq!(p.tmr(-p.v0), 0.5);
    assert_eq!(p.tmr(0.1), 0.9768786127167631);
}

#[test]
fn antiparallel_resistance_rolls_off_with_bias() {
    let cell = default_cell(MagState::AntiParallel);
    assert_eq!(cell.resistance(0.1), 16780.266832347817);
    assert!(cell.resistance(0.4) < cell.resistance(0.1));
    let r_v0 = cell.resistance(0.65);
    assert_eq!(r_v0, cell.r_mtj() * 1.5);
}

#[test]
fn intermediate_angle_resistance() {
    let cell = default_cell(MagState::Parallel);
    let r_mid = cell.resistance_at_angle(PI / 2.0, 0.0);
    assert!((r_mid - 11317.684842090339).abs() < 1e-9);
    assert!((r_mid - cell.r_mtj() * 4.0 / 3.0).abs() < 1e-9);
}

#[test]
fn angle_endpoints_match_state_dispatch() {
    let p_cell = default_cell(MagState::Parallel);
    let ap_cell = default_cell(MagState::AntiParallel);
    for v in [0.0, 0.1, 0.3, 0.65] {
        assert_eq!(p_cell.resistance_at_angle(0.0, v), p_cell.resistance(v));
        assert_eq!(ap_cell.resistance_at_angle(PI, v), ap_cell.resistance(v));
    }
}

#[test]
fn conductance_values_at_read_bias() {
    let p_cell = default_cell(MagState::Parallel);
    let ap_cell = default_cell(MagState::AntiParallel);
    assert_eq!(p_cell.conductance(0.1), 1.1780972450961721e-4);
    assert_eq!(ap_cell.conductance(0.1), 5.959380801217478e-5);
}

#[test]
fn writes_are_idempotent_and_last_wins() {
    let mut cell = default_cell(MagState::Parallel);
    cell.apply_write(WritePolarity::NegativeX);
    assert_eq!(cell.state, MagState::AntiParallel);
    cell.apply_write(WritePolarity::NegativeX);
    assert_eq!(cell.state, MagState::AntiParallel);
    cell.apply_write(WritePolarity::PositiveX);
    assert_eq!(cell.state, MagState::Parallel);
    cell.apply_write(WritePolarity::PositiveX);
    assert_eq!(cell.state, MagState::Parallel);
}

#[test]
fn state_tokens() {
    assert_eq!(MagState::Parallel.token(), "P");
    assert_eq!(MagState::AntiParallel.token(), "AP");
}

#[test]
fn geometry_rejects_bad_dimensions() {
    for bad in [0.0, -1e-9, f64::NAN, f64::INFINITY] {
        let err = DeviceGeometry::new(bad, 30e-9, 100e-9, 50e-9, 3e-9).unwrap_err();
        assert!(matches!(err, DeviceError::InvalidParam { name: "mtj_length", .. }));
    }
    assert!(DeviceGeometry::new(50e-9, 30e-9, 100e-9, 50e-9, -3e-9).is_err());
}

#[test]
fn material_rejects_bad_parameters() {
    assert!(MaterialParams::new(0.0, 100.0, 0.65).is_err());
    assert!(MaterialParams::new(-1.0, 100.0, 0.65).is_err());
    assert!(MaterialParams::new(10.0, -5.0, 0.65).is_err());
    assert!(MaterialParams::new(10.0, 100.0, 0.0).is_err());
    assert!(MaterialParams::new(10.0, f64::NAN, 0.65).is_err());
    // Zero TMR is legal: the device degenerates to a fixed resistor.
    let p = MaterialParams::new(10.0, 0.0, 0.65).unwrap();
    assert_eq!(p.tmr(0.3), 0.0);
}

#[test]
fn variation_factor_scales_resistance() {
    let mut cell = default_cell(MagState::Parallel);
    let base = cell.resistance(0.0);
    cell.resistance_factor = 1.25;
    assert_eq!(cell.resistance(0.0), base * 1.25);
}

proptest! {
    #[test]
    fn resistance_monotone_in_angle(
        a in 0.0f64..PI,
        b in 0.0f64..PI,
        v in 0.0f64..0.8,
    ) {
        let cell = default_cell(MagState::Parallel);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(cell.resistance_at_angle(lo, v) <= cell.resistance_at_angle(hi, v));
    }

    #[test]
    fn resistance_bounded_by_endpoint_states(theta in 0.0f64..=PI, v in 0.0f64..0.8) {
        let cell = default_cell(MagState::Parallel);
        let r = cell.resistance_at_angle(theta, v);
        let r_p = cell.resistance_at_angle(0.0, v);
        let r_ap = cell.resistance_at_angle(PI, v);
        prop_assert!(r >= r_p && r <= r_ap);
    }

    #[test]
    fn tmr_decreases_with_bias_magnitude(a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let p = MaterialParams::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(p.tmr(hi) <= p.tmr(lo));
        prop_assert!(p.tmr(-a) == p.tmr(a));
    }

    #[test]
    fn r_mtj_matches_ra_over_area(
        l_nm in 5.0f64..500.0,
        w_nm in 5.0f64..500.0,
        ra in 0.5f64..100.0,
    ) {
        let g = DeviceGeometry::from_nanometers(l_nm, w_nm, 100.0, 50.0, 3.0).unwrap();
        let p = MaterialParams::new(ra, 100.0, 0.65).unwrap();
        let cell = SotMramCell::new(g, p, MagState::Parallel);
        let expected = ra / (g.mtj_area() * 1e12);
        prop_assert_eq!(cell.r_mtj(), expected);
    }

    #[test]
    fn conductance_is_reciprocal_resistance(v in 0.0f64..0.8) {
        let cell = default_cell(MagState::AntiParallel);
        prop_assert_eq!(cell.conductance(v), 1.0 / cell.resistance(v));
    }
}
