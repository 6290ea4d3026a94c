//! Welfare criteria over structured belief sets.
//!
//! Values are expressed in certainty-equivalent utility units throughout:
//! the multiplier criterion `-λ log E_q[exp(-u/λ)]`, its minimum over a
//! structured set (the entropic criterion), maxmin expected utility as the
//! `λ = ∞` limit, φ-penalised criteria through their scalar dual, and
//! α-mixtures of min and max expected utility.

use crate::balls::{classify, Ball, Feasibility};
use crate::divergence::PhiSpec;
use crate::error::{Error, Result};
use crate::scalar::golden_max;
use crate::simplex::{check_len, expectation, Dist, StateVector};
use crate::solver::{self, ConvexFn, Linear, Options, Problem};

use nalgebra::DVector;

/// Concern for misspecification: `λ ∈ (0, ∞]`. Smaller means more concern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

impl Lambda {
    /// Accepts any positive value; `f64::INFINITY` maps to [`Lambda::Infinite`].
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            Ok(Lambda::Infinite)
        } else if value > 0.0 && value.is_finite() {
            Ok(Lambda::Finite(value))
        } else {
            Err(Error::DomainError(format!("lambda must be positive, got {value}")))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Lambda::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Lambda::Finite(v) => v,
            Lambda::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Penalty {
    Kl,
    Phi(PhiSpec),
}

/// The planner's set of explicitly motivated beliefs.
#[derive(Debug, Clone)]
pub enum StructuredSet {
    Singleton(Dist),
    FiniteSet(Vec<Dist>),
    HullOfFinite(Vec<Dist>),
    BallIntersection(Vec<Ball>),
}

impl StructuredSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            StructuredSet::Singleton(_) => Ok(()),
            StructuredSet::FiniteSet(ds) | StructuredSet::HullOfFinite(ds) => {
                let first = ds.first().ok_or(Error::EmptyList)?;
                ds.iter().try_for_each(|d| check_len(first.len(), d.len()))
            }
            StructuredSet::BallIntersection(balls) => {
                let first = balls.first().ok_or(Error::EmptyList)?;
                balls.iter().try_for_each(|b| check_len(first.center().len(), b.center().len()))
            }
        }
    }

    /// Number of states.
    pub fn dim(&self) -> usize {
        match self {
            StructuredSet::Singleton(d) => d.len(),
            StructuredSet::FiniteSet(ds) | StructuredSet::HullOfFinite(ds) => ds.first().map_or(0, Dist::len),
            StructuredSet::BallIntersection(bs) => bs.first().map_or(0, |b| b.center().len()),
        }
    }

    /// Generators of a finite or hull set.
    fn generators(&self) -> Option<&[Dist]> {
        match self {
            StructuredSet::Singleton(d) => Some(std::slice::from_ref(d)),
            StructuredSet::FiniteSet(ds) | StructuredSet::HullOfFinite(ds) => Some(ds),
            StructuredSet::BallIntersection(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planner {
    lambda: Lambda,
    penalty: Penalty,
    structured: StructuredSet,
}

impl Planner {
    pub fn new(lambda: Lambda, penalty: Penalty, structured: StructuredSet) -> Result<Self> {
        if let Lambda::Finite(v) = lambda {
            Lambda::new(v)?;
        }
        structured.validate()?;
        Ok(Self { lambda, penalty, structured })
    }

    pub fn entropic(lambda: Lambda, structured: StructuredSet) -> Result<Self> {
        Self::new(lambda, Penalty::Kl, structured)
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn structured(&self) -> &StructuredSet {
        &self.structured
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("lambda must be positive and finite, got {lambda}")))
    }
}

/// `E_q[exp(-(u - min u)/λ)] - 1`, kept as an offset from one so that large
/// `λ` retains precision.
fn shifted_mgf_m1(u0: &StateVector, q: &Dist, lambda: f64) -> f64 {
    let m = u0.min();
    q.iter().zip(u0.as_slice()).map(|(p, u)| p * (-(u - m) / lambda).exp_m1()).sum()
}

/// `-λ log E_q[exp(-u0/λ)]`, computed after shifting by `min u0`.
pub fn multiplier_value(u0: &StateVector, q: &Dist, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_len(q.len(), u0.len())?;
    Ok(u0.min() - lambda * shifted_mgf_m1(u0, q, lambda).ln_1p())
}

/// The exponential tilt `∝ q · exp(-u0/λ)`, which attains
/// `min_p E_p[u0] + λ KL(p‖q)`.
pub fn worst_case_tilt(u0: &StateVector, q: &Dist, lambda: f64) -> Result<Dist> {
    check_lambda(lambda)?;
    check_len(q.len(), u0.len())?;
    if u0.is_constant() {
        return Ok(q.clone());
    }
    let m = u0.min();
    let raw: Vec<f64> = q.iter().zip(u0.as_slice()).map(|(p, u)| p * (-(u - m) / lambda).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(Dist::from_solver(raw.into_iter().map(|v| v / total).collect()))
}

/// Optimum of a linear functional over an intersection of balls.
#[derive(Debug, Clone)]
pub(crate) struct BallOptimum {
    pub belief: Dist,
    /// Per-ball multipliers and the equality multiplier, when the interior
    /// solver ran.
    pub duals: Option<(Vec<f64>, f64)>,
    /// Hull weights when the intersection collapsed to a single point.
    pub singleton_weights: Option<Vec<f64>>,
}

/// Minimizes `c·q` over the intersection of the given balls.
pub(crate) fn minimize_linear_over_balls(c: &[f64], balls: &[&Ball]) -> Result<BallOptimum> {
    match classify(balls)? {
        Feasibility::Singleton { point, weights } => {
            Ok(BallOptimum { belief: point, duals: None, singleton_weights: Some(weights) })
        }
        Feasibility::Interior { start } => {
            let n = start.len();
            let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let objective = Linear { c: c.iter().map(|v| if scale > 0.0 { v / scale } else { 0.0 }).collect() };
            let constraints: Vec<Box<dyn ConvexFn>> = balls.iter().map(|b| b.constraint()).collect::<Result<_>>()?;
            let problem = Problem {
                objective: &objective,
                constraints: constraints.iter().map(|b| b.as_ref()).collect(),
                positive: (0..n).collect(),
                equality: Some(DVector::from_element(n, 1.0)),
            };
            let sol = solver::minimize(&problem, start, &Options::default())?;
            let duals = if scale > 0.0 {
                (sol.multipliers.iter().map(|l| l * scale).collect(), sol.equality * scale)
            } else {
                (sol.multipliers, sol.equality)
            };
            Ok(BallOptimum { belief: Dist::from_solver(sol.x), duals: Some(duals), singleton_weights: None })
        }
    }
}

fn check_set_dim(u0: &StateVector, set: &StructuredSet) -> Result<()> {
    set.validate()?;
    check_len(set.dim(), u0.len())
}

fn ball_refs(balls: &[Ball]) -> Vec<&Ball> {
    balls.iter().collect()
}

/// `min_{q ∈ Q} E_q[u0]`.
pub fn meu_value(u0: &StateVector, set: &StructuredSet) -> Result<f64> {
    Ok(meu_minimizer(u0, set)?.0)
}

fn meu_minimizer(u0: &StateVector, set: &StructuredSet) -> Result<(f64, Dist)> {
    check_set_dim(u0, set)?;
    match set.generators() {
        Some(gens) => best_of(gens, |q| expectation(q, u0), false),
        None => {
            let StructuredSet::BallIntersection(balls) = set else { unreachable!() };
            let m = u0.min();
            let c: Vec<f64> = u0.as_slice().iter().map(|u| u - m).collect();
            let opt = minimize_linear_over_balls(&c, &ball_refs(balls))?;
            Ok((expectation(&opt.belief, u0)?, opt.belief))
        }
    }
}

/// `max_{q ∈ Q} E_q[u0]`.
pub fn max_expected_value(u0: &StateVector, set: &StructuredSet) -> Result<f64> {
    check_set_dim(u0, set)?;
    match set.generators() {
        Some(gens) => Ok(best_of(gens, |q| expectation(q, u0), true)?.0),
        None => {
            let StructuredSet::BallIntersection(balls) = set else { unreachable!() };
            let m = u0.max();
            let c: Vec<f64> = u0.as_slice().iter().map(|u| m - u).collect();
            let opt = minimize_linear_over_balls(&c, &ball_refs(balls))?;
            expectation(&opt.belief, u0)
        }
    }
}

/// Extremum of `f` over candidates. Ties keep the earliest candidate.
fn best_of(cands: &[Dist], f: impl Fn(&Dist) -> Result<f64>, maximize: bool) -> Result<(f64, Dist)> {
    let mut best: Option<(f64, &Dist)> = None;
    for q in cands {
        let v = f(q)?;
        let better = match best {
            None => true,
            Some((b, _)) => {
                if maximize {
                    v > b
                } else {
                    v < b
                }
            }
        };
        if better {
            best = Some((v, q));
        }
    }
    let (v, q) = best.ok_or(Error::EmptyList)?;
    Ok((v, q.clone()))
}

/// The entropic criterion `min_{q ∈ Q} -λ log E_q[exp(-u0/λ)]`; the maxmin
/// criterion when `λ = ∞`.
pub fn entropic_value(u0: &StateVector, planner: &Planner) -> Result<f64> {
    Ok(entropic_minimizer(u0, planner)?.0)
}

/// Entropic value together with the structured belief attaining it.
pub fn entropic_minimizer(u0: &StateVector, planner: &Planner) -> Result<(f64, Dist)> {
    if !matches!(planner.penalty, Penalty::Kl) {
        return Err(Error::InvalidInput("entropic criterion requires the KL penalty".into()));
    }
    let set = &planner.structured;
    let lambda = match planner.lambda {
        Lambda::Infinite => return meu_minimizer(u0, set),
        Lambda::Finite(l) => l,
    };
    check_set_dim(u0, set)?;
    match set.generators() {
        Some(gens) => best_of(gens, |q| multiplier_value(u0, q, lambda), false),
        None => {
            let StructuredSet::BallIntersection(balls) = set else { unreachable!() };
            let opt = entropic_over_balls(u0, &ball_refs(balls), lambda)?;
            Ok((multiplier_value(u0, &opt.belief, lambda)?, opt.belief))
        }
    }
}

/// `exp(-(u0 - min u0)/λ)`, the integrand maximized by the structured
/// belief of the entropic criterion.
pub(crate) fn tilt_weights(u0: &StateVector, lambda: f64) -> Vec<f64> {
    let m = u0.min();
    u0.as_slice().iter().map(|u| (-(u - m) / lambda).exp()).collect()
}

/// Structured belief of the entropic criterion over a ball intersection:
/// the maximizer of `E_q[exp(-u0/λ)]`.
pub(crate) fn entropic_over_balls(u0: &StateVector, balls: &[&Ball], lambda: f64) -> Result<BallOptimum> {
    let c: Vec<f64> = tilt_weights(u0, lambda).into_iter().map(|e| -e).collect();
    minimize_linear_over_balls(&c, balls)
}

/// The least-favourable belief: the exponential tilt of the minimizing
/// structured belief (the structured belief itself when `λ = ∞`).
pub fn worst_case_belief(u0: &StateVector, planner: &Planner) -> Result<Dist> {
    let (_, q) = entropic_minimizer(u0, planner)?;
    match planner.lambda {
        Lambda::Infinite => Ok(q),
        Lambda::Finite(l) => worst_case_tilt(u0, &q, l),
    }
}

/// Half-width added on each side of `[min u/λ, max u/λ]` for the ψ search.
const PSI_MARGIN: f64 = 10.0;

/// `sup_ψ { ψ - E_q[φ*(ψ - u0/λ)] }` by golden-section search, widening the
/// bracket while the maximizer sits on its edge.
fn phi_dual_inner(spec: &PhiSpec, u0: &StateVector, q: &Dist, lambda: f64) -> Result<f64> {
    let scaled: Vec<f64> = u0.as_slice().iter().map(|u| u / lambda).collect();
    let objective = |psi: f64| -> f64 {
        psi - q.iter().zip(&scaled).map(|(p, s)| if *p > 0.0 { p * spec.conjugate(psi - s) } else { 0.0 }).sum::<f64>()
    };
    let lo0 = scaled.iter().copied().fold(f64::INFINITY, f64::min) - PSI_MARGIN;
    let hi0 = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max) + PSI_MARGIN;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..=crate::scalar::MAX_EXPANSIONS {
        let width = hi - lo;
        let (x, fx) = golden_max(objective, lo, hi, 1e-12 * width.max(1.0));
        if !fx.is_finite() {
            return Err(Error::BracketFailure);
        }
        let edge = 1e-6 * width;
        if x - lo > edge && hi - x > edge {
            return Ok(fx);
        }
        lo -= width / 2.0;
        hi += width / 2.0;
    }
    Err(Error::BracketFailure)
}

/// `λ min_{q ∈ Q} sup_ψ { ψ - E_q[φ*(ψ - u0/λ)] }`, the φ-divergence
/// penalised criterion in its scalar dual form. The structured set must be
/// a singleton or a finite set.
pub fn variational_phi_value(u0: &StateVector, planner: &Planner) -> Result<f64> {
    let spec = match &planner.penalty {
        Penalty::Phi(spec) => spec.clone(),
        Penalty::Kl => PhiSpec::kl(),
    };
    let set = &planner.structured;
    let cands = match set {
        StructuredSet::Singleton(_) | StructuredSet::FiniteSet(_) => set.generators().unwrap_or(&[]),
        _ => {
            return Err(Error::Unsupported(
                "the phi-penalised criterion is evaluated over singletons and finite sets".into(),
            ))
        }
    };
    let lambda = match planner.lambda {
        Lambda::Infinite => return meu_value(u0, set),
        Lambda::Finite(l) => l,
    };
    check_set_dim(u0, set)?;
    Ok(best_of(cands, |q| Ok(lambda * phi_dual_inner(&spec, u0, q, lambda)?), false)?.0)
}

/// `α min_{p ∈ P} E_p[u0] + (1 - α) max_{p ∈ P} E_p[u0]`.
pub fn mba_value(u0: &StateVector, set: &StructuredSet, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::DomainError(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let lo = meu_value(u0, set)?;
    let hi = max_expected_value(u0, set)?;
    Ok(alpha * lo + (1.0 - alpha) * hi)
}

/// The exponential transform `φ_λ(u) = -exp(-u/λ)` and its inverse; both
/// are the identity at `λ = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialCe {
    lambda: Lambda,
}

impl ExponentialCe {
    pub fn new(lambda: Lambda) -> Self {
        Self { lambda }
    }

    pub fn phi(&self, u: f64) -> f64 {
        match self.lambda {
            Lambda::Finite(l) => -(-u / l).exp(),
            Lambda::Infinite => u,
        }
    }

    pub fn phi_inv(&self, v: f64) -> Result<f64> {
        match self.lambda {
            Lambda::Finite(l) => {
                if v >= 0.0 {
                    return Err(Error::DomainError(format!("exponential inverse needs a negative argument, got {v}")));
                }
                Ok(-l * (-v).ln())
            }
            Lambda::Infinite => Ok(v),
        }
    }
}

/// Criterion values are already certainty equivalents, so this is the
/// identity; see [`ExponentialCe`] for the transform pair itself.
pub fn certainty_equivalent_exponential(value: f64, _lambda: Lambda) -> f64 {
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balls::chernoff_point;
    use crate::divergence::{kl, phi_divergence, NegativeEntropy};
    use crate::simplex::{convex_combine, normalize};
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Dist {
        Dist::new(v.to_vec()).unwrap()
    }

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    /// `min_p E_p[u] + λ D(p‖q)` over a fine grid on the two-state simplex.
    fn penalised_grid(u: &StateVector, q: &Dist, lambda: f64, div: impl Fn(&Dist, &Dist) -> f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=100_000 {
            let a = k as f64 / 100_000.0;
            let p = d(&[a, 1.0 - a]);
            let v = expectation(&p, u).unwrap() + lambda * div(&p, q);
            if v < best.0 {
                best = (v, a);
            }
        }
        best
    }

    #[test]
    fn multiplier_examples() {
        let q = d(&[0.3, 0.7]);
        for lambda in [0.01, 1.0, 100.0] {
            assert!((multiplier_value(&sv(&[2.5, 2.5]), &q, lambda).unwrap() - 2.5).abs() < 1e-14);
        }
        let u = sv(&[0.0, 1.0]);
        let half = d(&[0.5, 0.5]);
        let v = multiplier_value(&u, &half, 1.0).unwrap();
        let closed = -((1.0 + (-1f64).exp()) / 2.0).ln();
        assert!((v - closed).abs() < 1e-15);
        assert!((v - 0.3799).abs() < 1e-4);
        let (grid, _) = penalised_grid(&u, &half, 1.0, |p, q| kl(p, q).unwrap().to_f64());
        assert!((v - grid).abs() < 1e-8);
        let big = multiplier_value(&u, &half, 1e6).unwrap();
        assert!((big - 0.5).abs() < 1e-3);
        assert!(multiplier_value(&u, &half, 0.0).is_err());
    }

    #[test]
    fn multiplier_is_overflow_safe() {
        let u = sv(&[0.0, 10.0, -10.0]);
        let v = multiplier_value(&u, &d(&[0.2, 0.3, 0.5]), 1e-3).unwrap();
        assert!(v.is_finite());
        assert!((v - (-10.0 - 1e-3 * 0.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn tilt_examples() {
        let q = d(&[0.4, 0.6]);
        assert!(worst_case_tilt(&sv(&[3.0, 3.0]), &q, 0.5).unwrap().sup_distance(&q) < 1e-15);
        let t = worst_case_tilt(&sv(&[0.0, 1.0]), &d(&[0.5, 0.5]), 1.0).unwrap();
        let e = (-1f64).exp();
        assert!(t.sup_distance(&d(&[1.0 / (1.0 + e), e / (1.0 + e)])) < 1e-15);
        assert!((t[0] - 0.7311).abs() < 1e-4);
        let (_, a) = penalised_grid(&sv(&[0.0, 1.0]), &d(&[0.5, 0.5]), 1.0, |p, q| kl(p, q).unwrap().to_f64());
        assert!((t[0] - a).abs() < 2e-5);
        let far = worst_case_tilt(&sv(&[0.0, 1.0]), &q, 1e6).unwrap();
        assert!(far.sup_distance(&q) < 1e-4);
    }

    #[test]
    fn meu_examples() {
        let u = sv(&[1.0, 4.0]);
        let q = d(&[0.3, 0.7]);
        assert_eq!(meu_value(&u, &StructuredSet::Singleton(q.clone())).unwrap(), expectation(&q, &u).unwrap());
        let set = StructuredSet::FiniteSet(vec![d(&[1.0, 0.0]), d(&[0.0, 1.0])]);
        assert_eq!(meu_value(&u, &set).unwrap(), 1.0);
        assert!(meu_value(&u, &StructuredSet::FiniteSet(vec![])).is_err());
    }

    #[test]
    fn mba_examples() {
        let u = sv(&[1.0, 4.0]);
        let set = StructuredSet::FiniteSet(vec![d(&[1.0, 0.0]), d(&[0.0, 1.0])]);
        assert_eq!(mba_value(&u, &set, 1.0).unwrap(), meu_value(&u, &set).unwrap());
        assert_eq!(mba_value(&u, &set, 0.0).unwrap(), 4.0);
        assert_eq!(mba_value(&u, &set, 0.5).unwrap(), 2.5);
        assert!(mba_value(&u, &set, 1.5).is_err());
    }

    #[test]
    fn mba_over_balls_brackets_the_center() {
        let ball = Ball::kl(d(&[0.5, 0.5]), 0.1).unwrap();
        let set = StructuredSet::BallIntersection(vec![ball]);
        let u = sv(&[0.0, 1.0]);
        let lo = mba_value(&u, &set, 1.0).unwrap();
        let hi = mba_value(&u, &set, 0.0).unwrap();
        let edge = 0.5 * (1.0 - (1.0 - (-0.2f64).exp()).sqrt());
        assert!((lo - edge).abs() < 1e-8, "{lo} vs {edge}");
        assert!((hi - (1.0 - edge)).abs() < 1e-8);
    }

    #[test]
    fn exponential_pair_round_trips() {
        for lambda in [Lambda::Finite(0.3), Lambda::Finite(7.0)] {
            let ce = ExponentialCe::new(lambda);
            assert!((ce.phi_inv(ce.phi(0.5)).unwrap() - 0.5).abs() < 1e-12);
            assert_eq!(ce.phi(0.0), -1.0);
            assert!(ce.phi_inv(0.0).is_err());
        }
        let id = ExponentialCe::new(Lambda::Infinite);
        assert_eq!(id.phi(0.7), 0.7);
        assert_eq!(id.phi_inv(-0.7).unwrap(), -0.7);
        assert_eq!(certainty_equivalent_exponential(1.25, Lambda::Finite(2.0)), 1.25);
    }

    #[test]
    fn lambda_parsing() {
        assert_eq!(Lambda::new(f64::INFINITY).unwrap(), Lambda::Infinite);
        assert!(Lambda::new(0.0).is_err());
        assert!(Lambda::new(-1.0).is_err());
        assert!(Lambda::new(f64::NAN).is_err());
    }

    #[test]
    fn entropic_dispatch() {
        let u = sv(&[0.0, 1.0, 3.0]);
        let q = d(&[0.2, 0.3, 0.5]);
        let single = Planner::entropic(Lambda::Finite(0.7), StructuredSet::Singleton(q.clone())).unwrap();
        assert_eq!(entropic_value(&u, &single).unwrap(), multiplier_value(&u, &q, 0.7).unwrap());
        let inf = Planner::entropic(Lambda::Infinite, StructuredSet::Singleton(q.clone())).unwrap();
        assert_eq!(entropic_value(&u, &inf).unwrap(), expectation(&q, &u).unwrap());
        let phi = Planner::new(Lambda::Finite(1.0), Penalty::Phi(PhiSpec::chi_squared()), StructuredSet::Singleton(q))
            .unwrap();
        assert!(entropic_value(&u, &phi).is_err());
    }

    #[test]
    fn entropic_at_singleton_intersection_is_multiplier_at_chernoff_point() {
        let centers = [d(&[0.7, 0.2, 0.1]), d(&[0.1, 0.3, 0.6])];
        let ch = chernoff_point(&centers, &NegativeEntropy).unwrap();
        let balls = centers.iter().map(|c| Ball::kl(c.clone(), ch.radius).unwrap()).collect();
        let planner = Planner::entropic(Lambda::Finite(0.8), StructuredSet::BallIntersection(balls)).unwrap();
        let u = sv(&[1.0, -0.5, 2.0]);
        let v = entropic_value(&u, &planner).unwrap();
        assert!((v - multiplier_value(&u, &ch.point, 0.8).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn entropic_over_one_ball_matches_two_state_grid() {
        let ball = Ball::kl(d(&[0.6, 0.4]), 0.05).unwrap();
        let planner =
            Planner::entropic(Lambda::Finite(0.5), StructuredSet::BallIntersection(vec![ball.clone()])).unwrap();
        let u = sv(&[2.0, -1.0]);
        let v = entropic_value(&u, &planner).unwrap();
        let mut grid = f64::INFINITY;
        for k in 1..1_000_000 {
            let q = d(&[k as f64 / 1e6, 1.0 - k as f64 / 1e6]);
            if ball.divergence_to(&q).unwrap() <= 0.05 {
                grid = grid.min(multiplier_value(&u, &q, 0.5).unwrap());
            }
        }
        assert!((v - grid).abs() < 1e-6, "{v} vs {grid}");
    }

    #[test]
    fn empty_intersection_is_reported() {
        let balls = vec![Ball::kl(d(&[0.95, 0.05]), 0.01).unwrap(), Ball::kl(d(&[0.05, 0.95]), 0.01).unwrap()];
        let planner = Planner::entropic(Lambda::Finite(1.0), StructuredSet::BallIntersection(balls)).unwrap();
        assert!(matches!(entropic_value(&sv(&[0.0, 1.0]), &planner), Err(Error::EmptyIntersection { .. })));
    }

    #[test]
    fn worst_case_belief_is_tilted_minimizer() {
        let set = StructuredSet::FiniteSet(vec![d(&[0.8, 0.2]), d(&[0.3, 0.7])]);
        let planner = Planner::entropic(Lambda::Finite(1.0), set).unwrap();
        let u = sv(&[0.0, 1.0]);
        let w = worst_case_belief(&u, &planner).unwrap();
        assert!(w.sup_distance(&worst_case_tilt(&u, &d(&[0.8, 0.2]), 1.0).unwrap()) < 1e-15);
    }

    #[test]
    fn phi_dual_examples() {
        let q = d(&[0.5, 0.5]);
        let kl_planner =
            Planner::new(Lambda::Finite(1.0), Penalty::Phi(PhiSpec::kl()), StructuredSet::Singleton(q.clone()))
                .unwrap();
        let u = sv(&[0.0, 1.0]);
        let v = variational_phi_value(&u, &kl_planner).unwrap();
        assert!((v - multiplier_value(&u, &q, 1.0).unwrap()).abs() < 1e-6);

        let chi = Planner::new(
            Lambda::Finite(1.0),
            Penalty::Phi(PhiSpec::chi_squared()),
            StructuredSet::Singleton(q.clone()),
        )
        .unwrap();
        let v = variational_phi_value(&u, &chi).unwrap();
        let (grid, _) =
            penalised_grid(&u, &q, 1.0, |p, q| phi_divergence(&PhiSpec::chi_squared(), p, q).unwrap().to_f64());
        assert!((v - grid).abs() < 1e-8, "{v} vs {grid}");
        assert!((v - 0.375).abs() < 1e-8);

        for spec in [PhiSpec::kl(), PhiSpec::chi_squared()] {
            let p = Planner::new(Lambda::Finite(0.4), Penalty::Phi(spec), StructuredSet::Singleton(q.clone())).unwrap();
            assert!((variational_phi_value(&sv(&[1.5, 1.5]), &p).unwrap() - 1.5).abs() < 1e-9);
        }
        let hull = Planner::new(Lambda::Finite(1.0), Penalty::Phi(PhiSpec::kl()), StructuredSet::HullOfFinite(vec![q]))
            .unwrap();
        assert!(variational_phi_value(&u, &hull).is_err());
    }

    #[test]
    fn phi_dual_reports_bracket_failure() {
        // A linear conjugate makes the inner objective unbounded.
        let spec = PhiSpec::new("flat", |_| 0.0, |t| 0.5 * t).unwrap();
        let p =
            Planner::new(Lambda::Finite(1.0), Penalty::Phi(spec), StructuredSet::Singleton(d(&[0.5, 0.5]))).unwrap();
        assert_eq!(variational_phi_value(&sv(&[0.0, 1.0]), &p), Err(Error::BracketFailure));
    }

    fn full_support(n: usize) -> impl Strategy<Value = Dist> {
        prop::collection::vec(0.02f64..1.0, n).prop_map(|v| normalize(&v).unwrap())
    }

    fn utilities(n: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec(-3.0f64..3.0, n).prop_map(|v| StateVector::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn hull_min_equals_vertex_min(u in utilities(3), gens in prop::collection::vec(full_support(3), 1..4)) {
            let finite = meu_value(&u, &StructuredSet::FiniteSet(gens.clone())).unwrap();
            let hull = meu_value(&u, &StructuredSet::HullOfFinite(gens.clone())).unwrap();
            prop_assert_eq!(finite, hull);
            let brute = gens.iter().map(|g| expectation(g, &u).unwrap()).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(finite, brute);
        }

        #[test]
        fn multiplier_lies_between_min_and_mean(u in utilities(4), q in full_support(4), lambda in 0.05f64..20.0) {
            let v = multiplier_value(&u, &q, lambda).unwrap();
            let mean = expectation(&q, &u).unwrap();
            prop_assert!(v >= u.min() - 1e-12 && v <= mean + 1e-12);
            if !u.is_constant() && u.max() - u.min() > 1e-3 {
                prop_assert!(v > u.min() && v < mean);
            }
        }

        #[test]
        fn multiplier_is_nondecreasing_in_lambda(u in utilities(3), q in full_support(3), a in 0.05f64..10.0, b in 0.05f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(multiplier_value(&u, &q, lo).unwrap() <= multiplier_value(&u, &q, hi).unwrap() + 1e-12);
        }

        #[test]
        fn tilt_reproduces_the_multiplier_value(u in utilities(4), q in full_support(4), lambda in 0.1f64..10.0) {
            let t = worst_case_tilt(&u, &q, lambda).unwrap();
            let attained = expectation(&t, &u).unwrap() + lambda * kl(&t, &q).unwrap().to_f64();
            prop_assert!((attained - multiplier_value(&u, &q, lambda).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn tilt_beats_random_alternatives(u in utilities(3), q in full_support(3), lambda in 0.1f64..10.0,
                                          ps in prop::collection::vec(full_support(3), 50)) {
            let t = worst_case_tilt(&u, &q, lambda).unwrap();
            let obj = |p: &Dist| expectation(p, &u).unwrap() + lambda * kl(p, &q).unwrap().to_f64();
            let best = obj(&t);
            for p in &ps {
                prop_assert!(best <= obj(p) + 1e-12);
            }
        }

        #[test]
        fn adding_a_belief_never_raises_the_entropic_value(u in utilities(3), gens in prop::collection::vec(full_support(3), 1..4),
                                                           extra in full_support(3), lambda in 0.1f64..5.0) {
            let base = Planner::entropic(Lambda::Finite(lambda), StructuredSet::FiniteSet(gens.clone())).unwrap();
            let mut more = gens.clone();
            more.push(extra);
            let bigger = Planner::entropic(Lambda::Finite(lambda), StructuredSet::FiniteSet(more)).unwrap();
            prop_assert!(entropic_value(&u, &bigger).unwrap() <= entropic_value(&u, &base).unwrap());
        }

        #[test]
        fn hull_and_finite_entropic_values_agree(u in utilities(3), gens in prop::collection::vec(full_support(3), 1..4),
                                                 lambda in 0.1f64..5.0, w in prop::collection::vec(0.01f64..1.0, 3)) {
            let finite = Planner::entropic(Lambda::Finite(lambda), StructuredSet::FiniteSet(gens.clone())).unwrap();
            let hull = Planner::entropic(Lambda::Finite(lambda), StructuredSet::HullOfFinite(gens.clone())).unwrap();
            let vf = entropic_value(&u, &finite).unwrap();
            prop_assert!((vf - entropic_value(&u, &hull).unwrap()).abs() <= 1e-8);
            let w = normalize(&w[..gens.len()]).unwrap();
            let mixed = convex_combine(w.as_slice(), &gens).unwrap();
            prop_assert!(multiplier_value(&u, &mixed, lambda).unwrap() >= vf - 1e-12);
        }

        #[test]
        fn mixing_beliefs_never_helps(u in utilities(3), q1 in full_support(3), q2 in full_support(3),
                                      zeta in 0.0f64..1.0, lambda in 0.1f64..10.0) {
            let mixed = convex_combine(&[zeta, 1.0 - zeta], &[q1.clone(), q2.clone()]).unwrap();
            let lhs = zeta * multiplier_value(&u, &q1, lambda).unwrap() + (1.0 - zeta) * multiplier_value(&u, &q2, lambda).unwrap();
            prop_assert!(lhs >= multiplier_value(&u, &mixed, lambda).unwrap() - 1e-12);
        }
    }
}
