use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::linear_fit;

/// Values below this are excluded from decay fits.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFitResult {
    /// Fitted exponent `C̄` in `‖f(t)‖ ≈ e^{intercept − C̄ t}`.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFit {
    Decay(DecayFitResult),
    /// Flat, growing or noisy series (`R² < 0.5` or non-positive rate).
    NoDecay(DecayFitResult),
}

impl DecayFit {
    pub fn result(&self) -> &DecayFitResult {
        match self {
            DecayFit::Decay(r) | DecayFit::NoDecay(r) => r,
        }
    }

    pub fn is_decay(&self) -> bool {
        matches!(self, DecayFit::Decay(_))
    }
}

/// Log-linear least-squares fit of a norm series, skipping the first
/// `transient` fraction of the samples (default choice: 0.1).
pub fn decay_fit(t: &[f64], norms: &[f64], transient: f64) -> Result<DecayFit> {
    if t.len() != norms.len() {
        return Err(Error::ShapeMismatch {
            expected: t.len(),
            got: norms.len(),
        });
    }
    if !(0.0..1.0).contains(&transient) {
        return Err(Error::InvalidParameter {
            name: "transient",
            value: transient,
            reason: "transient fraction must lie in [0, 1)",
        });
    }
    let above = norms.iter().filter(|v| **v > NOISE_FLOOR).count();
    if above < 20 {
        return Err(Error::InsufficientData {
            needed: 20,
            got: above,
        });
    }
    let skip = (transient * t.len() as f64).ceil() as usize;
    let (ts, logs): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(norms)
        .skip(skip)
        .filter(|(_, v)| **v > NOISE_FLOOR)
        .map(|(t, v)| (*t, v.ln()))
        .unzip();
    let fit = linear_fit(&ts, &logs).ok_or(Error::InsufficientData {
        needed: 2,
        got: ts.len(),
    })?;
    let result = DecayFitResult {
        rate: -fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        window: (ts[0], ts[ts.len() - 1]),
    };
    // a constant series fits a flat line perfectly; only a real negative
    // slope counts as decay
    let flat = result.rate <= 1e-12 * (1.0 + result.intercept.abs());
    Ok(if flat || result.r_squared < 0.5 {
        DecayFit::NoDecay(result)
    } else {
        DecayFit::Decay(result)
    })
}

/// True when `values[start..]` never increases.
pub fn is_non_increasing(values: &[f64], start: usize) -> bool {
    values
        .get(start..)
        .is_some_and(|v| v.windows(2).all(|w| w[1] <= w[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * 0.1).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = times(50);
        let v: Vec<f64> = t.iter().map(|t| (-0.5 * t).exp()).collect();
        let fit = decay_fit(&t, &v, 0.1).unwrap();
        assert!(fit.is_decay());
        let r = fit.result();
        assert!((r.rate - 0.5).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        assert!((r.window.0 - 0.5).abs() < 1e-12);
        assert!(is_non_increasing(&v, 0));
    }

    #[test]
    fn constant_series_is_no_decay() {
        let t = times(30);
        let fit = decay_fit(&t, &[2.0; 30], 0.1).unwrap();
        assert!(!fit.is_decay());
    }

    #[test]
    fn needs_samples_above_floor() {
        let t = times(30);
        let mut v = alloc::vec![1e-13; 30];
        v[0] = 1.0;
        assert!(matches!(
            decay_fit(&t, &v, 0.1),
            Err(Error::InsufficientData { .. })
        ));
    }
}
