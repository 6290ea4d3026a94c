//! Recovering curvature, taste weights and the robustness parameter from
//! certainty equivalents of Ellsberg-style bets.
//!
//! Individual `i` has utility `(ω_i + x)^{1-φ_i}` over money. The planner
//! uses `u0 = β_1 u_1 + (1 - β_1) u_2` and the multiplier criterion with a
//! 50/50 social belief on the ambiguous urn.

use crate::criteria::{multiplier_value, Lambda};
use crate::error::{Error, Result};
use crate::scalar::{bisect, find_root, Limits};
use crate::simplex::{Dist, StateVector};

/// Observed certainty equivalents.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationInput {
    pub wealth: Vec<f64>,
    /// Each individual's certainty equivalent of the 50/50 lottery.
    pub ce_lottery: Vec<f64>,
    /// The planner's certainty equivalent of the 50/50 lottery.
    pub ce_social_lottery: f64,
    /// The planner's certainty equivalent of the ambiguous bet.
    pub ce_ambiguous: f64,
    pub stake: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrueParameters {
    pub phi: Vec<f64>,
    pub beta1: f64,
    pub lambda: Lambda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub phi: Vec<f64>,
    pub beta: Vec<f64>,
    /// `Infinite` when the upper end of the search range is reached.
    pub lambda: Lambda,
}

/// Search range for λ.
const LAMBDA_RANGE: (f64, f64) = (1e-4, 1e4);

fn crra(wealth: f64, phi: f64, x: f64) -> f64 {
    (wealth + x).powf(1.0 - phi)
}

/// Certainty equivalent of the 50/50 lottery over `{0, stake}`.
fn lottery_ce(wealth: f64, phi: f64, stake: f64) -> f64 {
    let e = 1.0 - phi;
    let mean = 0.5 * crra(wealth, phi, stake) + 0.5 * crra(wealth, phi, 0.0);
    mean.powf(1.0 / e) - wealth
}

struct Social<'a> {
    wealth: &'a [f64],
    phi: &'a [f64],
    beta: [f64; 2],
}

impl Social<'_> {
    fn utility(&self, x: f64) -> f64 {
        (0..2).map(|i| self.beta[i] * crra(self.wealth[i], self.phi[i], x)).sum()
    }

    /// Money amount whose utility is `target`, by bisection on `[0, stake]`.
    fn inverse(&self, target: f64, stake: f64) -> Result<f64> {
        bisect(|x| self.utility(x) - target, 0.0, stake, 1e-13)
    }

    /// Multiplier value of the ambiguous bet under the 50/50 belief.
    fn ambiguous_value(&self, stake: f64, lambda: Lambda) -> Result<f64> {
        let u = StateVector::new(vec![self.utility(stake), self.utility(0.0)])?;
        match lambda {
            Lambda::Finite(l) => multiplier_value(&u, &Dist::uniform(2), l),
            Lambda::Infinite => Ok(0.5 * (u[0] + u[1])),
        }
    }
}

fn validate(input: &EstimationInput) -> Result<()> {
    if input.wealth.len() != 2 || input.ce_lottery.len() != 2 {
        return Err(Error::InvalidInput("the estimator is defined for exactly two individuals".into()));
    }
    if !(input.stake > 0.0) {
        return Err(Error::InvalidInput("stake must be positive".into()));
    }
    for (w, c) in input.wealth.iter().zip(&input.ce_lottery) {
        if !(*w > 0.0) {
            return Err(Error::InvalidInput(format!("wealth must be positive, got {w}")));
        }
        if !(*c > 0.0 && *c < input.stake) {
            return Err(Error::InvalidInput(format!("certainty equivalent {c} outside (0, stake)")));
        }
    }
    for c in [input.ce_social_lottery, input.ce_ambiguous] {
        if !(c > 0.0 && c < input.stake) {
            return Err(Error::InvalidInput(format!("certainty equivalent {c} outside (0, stake)")));
        }
    }
    Ok(())
}

/// Curvature `φ` whose 50/50-lottery certainty equivalent is `ce`. The
/// certainty equivalent falls in `φ`, and `φ < 1` keeps utility increasing.
pub fn estimate_curvature(wealth: f64, ce: f64, stake: f64) -> Result<f64> {
    find_root(|p| lottery_ce(wealth, p, stake) - ce, 0.0, 0.5, Limits { floor: f64::NEG_INFINITY, ceil: 1.0 }, 1e-14)
}

/// Inverts the three certainty-equivalent equations in turn: each `φ_i`
/// from `c_i`, then `β_1` from `c_0`, then `λ` from `τ`.
pub fn estimate_parameters(input: &EstimationInput) -> Result<Estimates> {
    validate(input)?;
    let stake = input.stake;
    let phi = input
        .wealth
        .iter()
        .zip(&input.ce_lottery)
        .map(|(&w, &c)| estimate_curvature(w, c, stake))
        .collect::<Result<Vec<f64>>>()?;

    let gap = |i: usize| {
        let w = input.wealth[i];
        crra(w, phi[i], input.ce_social_lottery) - 0.5 * crra(w, phi[i], stake) - 0.5 * crra(w, phi[i], 0.0)
    };
    let (g1, g2) = (gap(0), gap(1));
    if g1 == g2 {
        return Err(Error::InconsistentInputs("taste weights are not identified".into()));
    }
    let beta1 = bisect(|b| b * g1 + (1.0 - b) * g2, 0.0, 1.0, 1e-15).map_err(|_| {
        Error::InconsistentInputs("no taste weight in [0, 1] matches the social certainty equivalent".into())
    })?;
    let social = Social { wealth: &input.wealth, phi: &phi, beta: [beta1, 1.0 - beta1] };

    let target = social.utility(input.ce_ambiguous);
    let excess = |log_l: f64| social.ambiguous_value(stake, Lambda::Finite(log_l.exp())).map(|v| v - target);
    let (lo, hi) = (LAMBDA_RANGE.0.ln(), LAMBDA_RANGE.1.ln());
    let lambda = if excess(hi)? <= 0.0 {
        Lambda::Infinite
    } else if excess(lo)? > 0.0 {
        return Err(Error::NoRoot);
    } else {
        let mut failure = None;
        let root = bisect(
            |x| {
                excess(x).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    f64::NAN
                })
            },
            lo,
            hi,
            1e-15,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Lambda::Finite(root.exp())
    };
    Ok(Estimates { phi, beta: vec![beta1, 1.0 - beta1], lambda })
}

/// Certainty equivalents implied by known parameters.
pub fn forward_model(truth: &TrueParameters, wealth: &[f64], stake: f64) -> Result<EstimationInput> {
    if wealth.len() != 2 || truth.phi.len() != 2 {
        return Err(Error::InvalidInput("the forward model is defined for exactly two individuals".into()));
    }
    if !(0.0..=1.0).contains(&truth.beta1) || truth.phi.iter().any(|p| !(*p < 1.0)) {
        return Err(Error::DomainError("need beta1 in [0, 1] and phi < 1".into()));
    }
    let ce_lottery: Vec<f64> = wealth.iter().zip(&truth.phi).map(|(&w, &p)| lottery_ce(w, p, stake)).collect();
    let social = Social { wealth, phi: &truth.phi, beta: [truth.beta1, 1.0 - truth.beta1] };
    let mean = 0.5 * social.utility(stake) + 0.5 * social.utility(0.0);
    let ce_social_lottery = social.inverse(mean, stake)?;
    let ce_ambiguous = social.inverse(social.ambiguous_value(stake, truth.lambda)?, stake)?;
    Ok(EstimationInput { wealth: wealth.to_vec(), ce_lottery, ce_social_lottery, ce_ambiguous, stake })
}
