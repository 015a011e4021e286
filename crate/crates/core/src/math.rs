//! Shared numeric helpers.
//!
//! Every sigmoid and dot product in the crate routes through these functions
//! so that the trainer, the ideal-math oracle, and the circuit model produce
//! bit-identical values where their contracts require exact agreement.

/// Logistic function 1 / (1 + e^-x), evaluated through `libm` so results are
/// identical across platforms and in `no_std` builds.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Dot product accumulated in index order. Callers that must agree bitwise
/// (trainer forward, ideal oracle) all sum in this order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// Clamp to a closed interval.
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Index of the largest value, lowest index on ties. Panics on an empty
/// slice; every caller guarantees at least one element.
pub fn argmax(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
