//! Weighted-likelihood estimation of a normal mean from the planner's own
//! signal `s_0` and advisors' signals `s_1..s_n`.

use crate::error::{Error, Result};
use crate::simplex::check_weights;

/// `Σ_i w_i s_i` with explicit weights summing to one, or the James–Stein
/// preset weights when `weights` is `None`.
pub fn james_stein_wle(signals: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if signals.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("signals must be finite".into()));
    }
    let w = match weights {
        Some(w) => {
            if w.len() != signals.len() {
                return Err(Error::DimensionMismatch { expected: signals.len(), got: w.len() });
            }
            check_weights(w)?;
            w.to_vec()
        }
        None => james_stein_weights(signals)?,
    };
    Ok(w.iter().zip(signals).map(|(w, s)| w * s).sum())
}

/// Shrinkage factor `B = (n - 3) / Σ_{i≥1} (s_i - s̄)²` and mean
/// `s̄ = (1/n) Σ_{i=0}^{n} s_i`, where `n` counts the advisors.
fn shrinkage(signals: &[f64]) -> Result<(f64, f64)> {
    let n = signals.len().saturating_sub(1);
    if n < 3 {
        return Err(Error::TooFewSignals(n));
    }
    let mean = signals.iter().sum::<f64>() / n as f64;
    let spread: f64 = signals[1..].iter().map(|s| (s - mean).powi(2)).sum();
    if spread == 0.0 {
        return Err(Error::Degenerate("advisors' signals have no spread around the mean".into()));
    }
    Ok(((n as f64 - 3.0) / spread, mean))
}

/// Preset weights `φ_0 = 1 - ((n-1)/n) B` and `φ_i = B / n`. They do not sum
/// to one; the estimate still equals the James–Stein form.
pub fn james_stein_weights(signals: &[f64]) -> Result<Vec<f64>> {
    let (b, _) = shrinkage(signals)?;
    let n = (signals.len() - 1) as f64;
    let mut w = vec![b / n; signals.len()];
    w[0] = 1.0 - (n - 1.0) / n * b;
    Ok(w)
}

/// `s̄ + (1 - B)(s_0 - s̄)`.
pub fn james_stein_closed_form(signals: &[f64]) -> Result<f64> {
    let (b, mean) = shrinkage(signals)?;
    Ok(mean + (1.0 - b) * (signals[0] - mean))
}
