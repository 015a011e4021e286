//! Compact model of a single SOT-MRAM device.
//!
//! The device is a magnetic tunnel junction (MTJ) sitting on a heavy-metal
//! strip. The read path sees the MTJ as a two-terminal resistor whose value
//! depends on the relative magnetization angle of its layers and on the
//! applied bias voltage. The write path switches the free layer through the
//! spin Hall effect, so the stored state is set purely by the polarity of a
//! write current along the strip; write dynamics (critical current, pulse
//! width) are not modeled and a write always succeeds within its clock cycle.
//!
//! Resistance model:
//!   R(theta, Vb) = 2 R_MTJ (1 + TMR) / (2 + TMR (1 + cos theta))
//!   TMR(Vb)      = (tmr0 / 100) / (1 + (Vb / v0)^2)
//!   R_MTJ        = ra_product / mtj_area
//! with theta = 0 the parallel (P, low-resistance) state and theta = pi the
//! antiparallel (AP, high-resistance) state.

use core::f64::consts::PI;
use core::fmt;

/// Errors from constructing device parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceError {
    /// A parameter violated its documented range.
    InvalidParam { name: &'static str, value: f64 },
}

impl fmt::Display for DeviceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceError::InvalidParam { name, value } => {
                write!(f, "device parameter {name} out of range: {value}")
            }
        }
    }
}

/// Magnetization state of the free layer relative to the pinned layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MagState {
    /// theta = 0, low resistance.
    Parallel,
    /// theta = pi, high resistance.
    AntiParallel,
}

impl MagState {
    /// Short token used by snapshots and netlist comments.
    pub fn token(self) -> &'static str {
        match self {
            MagState::Parallel => "P",
            MagState::AntiParallel => "AP",
        }
    }
}

impl fmt::Display for MagState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Direction of the write current through the heavy-metal strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WritePolarity {
    /// Current along +x writes the parallel state.
    PositiveX,
    /// Current along -x writes the antiparallel state.
    NegativeX,
}

/// Physical dimensions of one device, in meters.
///
/// The MTJ pillar is elliptical (length x width x pi/4 cross-section). The
/// heavy-metal dimensions are carried for completeness and netlist metadata;
/// no equation in the read model consumes them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceGeometry {
    pub mtj_length: f64,
    pub mtj_width: f64,
    pub hm_length: f64,
    pub hm_width: f64,
    pub hm_thickness: f64,
}

impl DeviceGeometry {
    pub fn new(
        mtj_length: f64,
        mtj_width: f64,
        hm_length: f64,
        hm_width: f64,
        hm_thickness: f64,
    ) -> Result<Self, DeviceError> {
        let g = DeviceGeometry { mtj_length, mtj_width, hm_length, hm_width, hm_thickness };
        for (name, value) in [
            ("mtj_length", g.mtj_length),
            ("mtj_width", g.mtj_width),
            ("hm_length", g.hm_length),
            ("hm_width", g.hm_width),
            ("hm_thickness", g.hm_thickness),
        ] {
            if value <= 0.0 || !value.is_finite() {
                return Err(DeviceError::InvalidParam { name, value });
            }
        }
        Ok(g)
    }

    /// Convenience constructor taking nanometers.
    pub fn from_nanometers(
        mtj_length: f64,
        mtj_width: f64,
        hm_length: f64,
        hm_width: f64,
        hm_thickness: f64,
    ) -> Result<Self, DeviceError> {
        // Dividing by the exactly representable 1e9 keeps the stored meters
        // correctly rounded, matching literal values like 50e-9.
        Self::new(
            mtj_length / 1e9,
            mtj_width / 1e9,
            hm_length / 1e9,
            hm_width / 1e9,
            hm_thickness / 1e9,
        )
    }

    /// Elliptical MTJ cross-section area in m^2.
    pub fn mtj_area(&self) -> f64 {
        self.mtj_length * self.mtj_width * (PI / 4.0)
    }
}

impl Default for DeviceGeometry {
    /// 50 nm x 30 nm MTJ on a 100 nm x 50 nm x 3 nm heavy-metal strip.
    fn default() -> Self {
        DeviceGeometry {
            mtj_length: 50e-9,
            mtj_width: 30e-9,
            hm_length: 100e-9,
            hm_width: 50e-9,
            hm_thickness: 3e-9,
        }
    }
}

/// Electrical material parameters of the tunnel junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Resistance-area product in ohm * um^2.
    pub ra_product: f64,
    /// Zero-bias TMR in percent (100 doubles the AP resistance).
    pub tmr0: f64,
    /// Bias-rolloff fitting voltage in volts.
    pub v0: f64,
}

impl MaterialParams {
    pub fn new(ra_product: f64, tmr0: f64, v0: f64) -> Result<Self, DeviceError> {
        if ra_product <= 0.0 || !ra_product.is_finite() {
            return Err(DeviceError::InvalidParam { name: "ra_product", value: ra_product });
        }
        if tmr0 < 0.0 || !tmr0.is_finite() {
            return Err(DeviceError::InvalidParam { name: "tmr0", value: tmr0 });
        }
        if v0 <= 0.0 || !v0.is_finite() {
            return Err(DeviceError::InvalidParam { name: "v0", value: v0 });
        }
        Ok(MaterialParams { ra_product, tmr0, v0 })
    }

    /// Bias-dependent tunneling magnetoresistance as a dimensionless
    /// fraction: (tmr0/100) / (1 + (v_bias/v0)^2). Even in v_bias.
    pub fn tmr(&self, v_bias: f64) -> f64 {
        let r = v_bias / self.v0;
        (self.tmr0 / 100.0) / (1.0 + r * r)
    }
}

impl Default for MaterialParams {
    /// RA = 10 ohm um^2, TMR0 = 100 %, V0 = 0.65 V.
    fn default() -> Self {
        MaterialParams { ra_product: 10.0, tmr0: 100.0, v0: 0.65 }
    }
}

/// One SOT-MRAM device: geometry, material, stored state, and an optional
/// multiplicative resistance perturbation used by device-variation studies
/// (exactly 1.0 unless variation is applied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SotMramCell {
    pub geometry: DeviceGeometry,
    pub params: MaterialParams,
    pub state: MagState,
    pub resistance_factor: f64,
}

impl SotMramCell {
    pub fn new(geometry: DeviceGeometry, params: MaterialParams, state: MagState) -> Self {
        SotMramCell { geometry, params, state, resistance_factor: 1.0 }
    }

    /// Nominal MTJ resistance ra_product / area, in ohms (the parallel-state
    /// value before any variation factor).
    pub fn r_mtj(&self) -> f64 {
        let area_um2 = self.geometry.mtj_area() * 1e12;
        self.params.ra_product / area_um2
    }

    /// Resistance at an arbitrary magnetization angle in [0, pi].
    ///
    /// The endpoint angles return the closed forms so the parallel value is
    /// exact and bias-independent to the last bit, and the antiparallel
    /// value is exactly R_P * (1 + TMR).
    pub fn resistance_at_angle(&self, theta: f64, v_bias: f64) -> f64 {
        debug_assert!((0.0..=PI).contains(&theta), "theta outside [0, pi]: {theta}");
        let r_p = self.resistance_factor * self.r_mtj();
        if theta == 0.0 {
            return r_p;
        }
        let tmr = self.params.tmr(v_bias);
        if theta == PI {
            return r_p * (1.0 + tmr);
        }
        2.0 * r_p * (1.0 + tmr) / (2.0 + tmr * (1.0 + libm::cos(theta)))
    }

    /// Resistance of the stored state at the given bias voltage, dispatching
    /// to `resistance_at_angle` with theta = 0 (P) or pi (AP).
    pub fn resistance(&self, v_bias: f64) -> f64 {
        match self.state {
            MagState::Parallel => self.resistance_at_angle(0.0, v_bias),
            MagState::AntiParallel => self.resistance_at_angle(PI, v_bias),
        }
    }

    /// Conductance of the stored state at the given bias voltage.
    pub fn conductance(&self, v_bias: f64) -> f64 {
        1.0 / self.resistance(v_bias)
    }

    /// Switch the free layer by write-current polarity. Idempotent per
    /// polarity; the last write wins.
    pub fn apply_write(&mut self, polarity: WritePolarity) {
        self.state = match polarity {
            WritePolarity::PositiveX => MagState::Parallel,
            WritePolarity::NegativeX => MagState::AntiParallel,
        };
    }
}
