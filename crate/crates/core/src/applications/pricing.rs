//! Asset pricing with an announcement-adjusted stochastic discount factor,
//! and exponential tilts that price a given payoff.

use crate::error::{Error, Result};
use crate::scalar::{find_root, Limits};
use crate::simplex::{check_len, expectation, Dist, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct AsdfResult {
    pub tilt: Dist,
    pub pre_price: f64,
    pub post_prices: StateVector,
    pub premium: f64,
}

/// `tilt ∝ q0 · exp(-ψ u0(C1) / λ)`, post-announcement prices
/// `ratio · payoff`, pre-announcement price `E_tilt[post]` and the premium
/// `E_q0[post] - pre`.
pub fn asdf(
    q0: &Dist,
    u0_next: &StateVector,
    lambda: f64,
    psi: f64,
    payoff: &StateVector,
    marginal_ratio: &StateVector,
) -> Result<AsdfResult> {
    if !(lambda > 0.0) || !(psi > 0.0) {
        return Err(Error::DomainError("lambda and psi must be positive".into()));
    }
    for v in [u0_next, payoff, marginal_ratio] {
        check_len(q0.len(), v.len())?;
    }
    let tilt = tilted(q0, u0_next, psi / lambda);
    let post: Vec<f64> = payoff.as_slice().iter().zip(marginal_ratio.as_slice()).map(|(p, r)| p * r).collect();
    let post_prices = StateVector::new(post)?;
    let pre_price = expectation(&tilt, &post_prices)?;
    let premium = expectation(q0, &post_prices)? - pre_price;
    Ok(AsdfResult { tilt, pre_price, post_prices, premium })
}

/// `q0 · exp(-κ v)` normalized, with `v` shifted to keep exponents bounded.
fn tilted(q0: &Dist, v: &StateVector, kappa: f64) -> Dist {
    if v.is_constant() || kappa == 0.0 {
        return q0.clone();
    }
    let shift = if kappa >= 0.0 { v.min() } else { v.max() };
    let raw: Vec<f64> = q0.iter().zip(v.as_slice()).map(|(q, x)| q * (-(kappa * (x - shift))).exp()).collect();
    let total: f64 = raw.iter().sum();
    Dist::from_solver(raw.into_iter().map(|r| r / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdfProjection {
    pub tilt: Dist,
    /// Tilt parameter `ℓ` in `q0 · exp(-v/ℓ)`; infinite when no tilt is needed
    /// and negative when the target lies above the `q0` mean.
    pub ell: f64,
}

/// Finds `ℓ` such that `E[v]` under `q0 · exp(-v/ℓ)` equals `target`.
pub fn sdf_project(q0: &Dist, payoff: &StateVector, target: f64) -> Result<SdfProjection> {
    check_len(q0.len(), payoff.len())?;
    let support: Vec<f64> = q0.iter().zip(payoff.as_slice()).filter(|(q, _)| **q > 0.0).map(|(_, v)| *v).collect();
    let (min, max) = support.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(target > min && target < max) {
        return Err(Error::TargetOutOfRange { target, min, max });
    }
    let mean = |kappa: f64| expectation(&tilted(q0, payoff, kappa), payoff).unwrap_or(f64::NAN) - target;
    if mean(0.0) == 0.0 {
        return Ok(SdfProjection { tilt: q0.clone(), ell: f64::INFINITY });
    }
    let scale = 1.0 / (max - min);
    let kappa = find_root(mean, -scale, scale, Limits::UNBOUNDED, 1e-15 * scale)?;
    let ell = if kappa == 0.0 { f64::INFINITY } else { 1.0 / kappa };
    Ok(SdfProjection { tilt: tilted(q0, payoff, kappa), ell })
}
