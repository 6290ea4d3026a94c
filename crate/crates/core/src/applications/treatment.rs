//! Choosing the share of a population assigned to a new treatment when two
//! experts disagree about its effectiveness.

use crate::aggregation::{optimal_policy_weighted, ActFamily};
use crate::criteria::Lambda;
use crate::error::{Error, Result};
use crate::simplex::{Dist, StateVector};

/// Social welfare of the known treatment (`known`) and the new treatment
/// (`new`) in the two response states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareTable {
    pub known: [f64; 2],
    pub new: [f64; 2],
}

/// The two-state table with a safe treatment worth 2 in both states and a
/// new treatment worth 1 or 4.
pub const BASELINE_WELFARE: WelfareTable = WelfareTable { known: [2.0, 2.0], new: [1.0, 4.0] };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreatmentResult {
    /// Share assigned to the new treatment.
    pub beta_hat: f64,
    pub value: f64,
    pub interior: bool,
}

impl WelfareTable {
    /// State utilities when a share `beta` receives the new treatment.
    pub fn utilities(&self, beta: f64) -> StateVector {
        let u = |s: usize| beta * self.new[s] + (1.0 - beta) * self.known[s];
        StateVector::new(vec![u(0), u(1)]).expect("finite table entries")
    }

    fn slope(&self) -> StateVector {
        StateVector::new(vec![self.new[0] - self.known[0], self.new[1] - self.known[1]]).expect("finite table entries")
    }
}

/// Maximizes the multiplier value of the allocation over `β ∈ [0, 1]` when
/// the planner puts probability `mu` on the first state.
pub fn treatment_solve(table: &WelfareTable, lambda: Lambda, mu: f64) -> Result<TreatmentResult> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::DomainError(format!("mu must lie in (0, 1), got {mu}")));
    }
    if table.known.iter().chain(&table.new).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("welfare table entries must be finite".into()));
    }
    let family = ActFamily {
        lo: 0.0,
        hi: 1.0,
        utilities: Box::new(|b| vec![table.utilities(b)]),
        derivatives: Some(Box::new(|_| vec![table.slope()])),
    };
    let q0 = Dist::new(vec![mu, 1.0 - mu])?;
    let r = optimal_policy_weighted(&[1.0], 0.0, &family, &q0, lambda)?;
    Ok(TreatmentResult { beta_hat: r.t_opt, value: r.value, interior: r.interior })
}

/// Root of the first-order condition `-μ e^{-(2-β)/λ} + 2(1-μ) e^{-(2+2β)/λ} = 0`
/// for the standard table: `β = (λ/3) log(2(1-μ)/μ)`, before clipping to
/// `[0, 1]`.
pub fn treatment_foc_root(lambda: f64, mu: f64) -> f64 {
    lambda / 3.0 * (2.0 * (1.0 - mu) / mu).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::multiplier_value;

    fn grid_oracle(lambda: f64, mu: f64) -> f64 {
        let q = Dist::new(vec![mu, 1.0 - mu]).unwrap();
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..=100_000 {
            let b = k as f64 / 100_000.0;
            let v = multiplier_value(&BASELINE_WELFARE.utilities(b), &q, lambda).unwrap();
            if v > best.1 {
                best = (b, v);
            }
        }
        best.0
    }

    #[test]
    fn matches_first_order_root_and_grid() {
        for (lambda, mu) in [(1.0, 0.2), (0.5, 0.2), (0.8, 0.4), (0.3, 0.1)] {
            let r = treatment_solve(&BASELINE_WELFARE, Lambda::Finite(lambda), mu).unwrap();
            assert!((r.beta_hat - treatment_foc_root(lambda, mu)).abs() < 1e-6, "{lambda} {mu}");
            assert!((r.beta_hat - grid_oracle(lambda, mu)).abs() < 2e-5);
            assert!(r.interior);
        }
    }

    #[test]
    fn half_lambda_example() {
        let r = treatment_solve(&BASELINE_WELFARE, Lambda::Finite(0.5), 0.2).unwrap();
        assert!((r.beta_hat - 0.5 / 3.0 * 8f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn first_order_condition_vanishes_at_root() {
        let (lambda, mu) = (0.7, 0.25);
        let b = treatment_foc_root(lambda, mu);
        let foc = -mu * (-(2.0 - b) / lambda).exp() + 2.0 * (1.0 - mu) * (-(2.0 + 2.0 * b) / lambda).exp();
        assert!(foc.abs() < 1e-14);
    }

    #[test]
    fn linear_planner_picks_a_corner() {
        for mu in [0.1, 0.5, 0.9] {
            let r = treatment_solve(&BASELINE_WELFARE, Lambda::Infinite, mu).unwrap();
            assert!(r.beta_hat == 0.0 || r.beta_hat == 1.0);
        }
        assert_eq!(treatment_solve(&BASELINE_WELFARE, Lambda::Infinite, 0.2).unwrap().beta_hat, 1.0);
        assert_eq!(treatment_solve(&BASELINE_WELFARE, Lambda::Infinite, 0.9).unwrap().beta_hat, 0.0);
    }

    #[test]
    fn comparative_statics() {
        let mus = [0.1, 0.15, 0.2, 0.25, 0.3];
        let lambdas = [0.1, 0.2, 0.3, 0.4, 0.5];
        for &mu in &mus {
            let betas: Vec<f64> = lambdas
                .iter()
                .map(|l| treatment_solve(&BASELINE_WELFARE, Lambda::Finite(*l), mu).unwrap().beta_hat)
                .collect();
            assert!(betas.windows(2).all(|w| w[1] > w[0]));
        }
        for &l in &lambdas {
            let betas: Vec<f64> = mus
                .iter()
                .map(|mu| treatment_solve(&BASELINE_WELFARE, Lambda::Finite(l), *mu).unwrap().beta_hat)
                .collect();
            assert!(betas.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn rejects_bad_mu() {
        assert!(treatment_solve(&BASELINE_WELFARE, Lambda::Finite(1.0), 0.0).is_err());
        assert!(treatment_solve(&BASELINE_WELFARE, Lambda::Finite(1.0), 1.0).is_err());
    }
}
