//! Robust aggregation of beliefs and tastes over finite state spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`simplex`]: probability vectors, expectations, entropy, first-order
//!   stochastic dominance.
//! - [`divergence`]: relative entropy, φ-divergences with Fenchel conjugates,
//!   the ρ-family and Bregman divergences from a pluggable generator.
//! - [`balls`]: divergence balls, their intersections, hull witnesses and
//!   the Chernoff point of a set of reference models.
//! - [`criteria`]: multiplier / entropic / maxmin / φ-penalised / α-maxmin
//!   welfare functionals and worst-case beliefs.
//! - [`aggregation`]: social utilities, act-dependent social beliefs,
//!   projections of the truth, barycenters, comparative statics and
//!   optimal policies.
//! - [`applications`]: treatment choice, Ellsberg urns, parameter
//!   estimation, announcement-adjusted pricing, weighted likelihood and
//!   the impossibility demonstrations.
//!
//! All logarithms are natural. Shared tolerances live in [`tol`].

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod applications;
pub mod balls;
pub mod criteria;
pub mod divergence;
mod error;
pub mod scalar;
pub mod simplex;
pub mod solver;

pub use aggregation::{
    barycenter, fit_gap, kl_project_to_intersection, optimal_policy, optimal_policy_weighted, pythagorean_gap,
    rho_aggregate, social_belief_for_act, social_utility, weight_sensitivity, welfare_dominant_belief,
    welfare_dominant_index, ActFamily, Agent, LevelWeights, PolicyResult, Profile, RhoAggregate, SocialBeliefResult,
    TruthProjection,
};
pub use balls::{
    ball_contains, chernoff_point, intersection_contains, intersection_witness, Ball, BallDivergence, ChernoffResult,
    Witness,
};
pub use criteria::{
    entropic_minimizer, entropic_value, mba_value, meu_value, multiplier_value, variational_phi_value,
    worst_case_belief, worst_case_tilt, ExponentialCe, Lambda, Penalty, Planner, StructuredSet,
};
pub use divergence::{
    bregman, kl, phi_divergence, rho_divergence, BregmanGenerator, ExtReal, HalfSquaredNorm, NegativeEntropy, PhiSpec,
};
pub use error::{Error, Result};
pub use simplex::{Dist, FosdOrder, StateSpace, StateVector};

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Slack allowed on `Σ p = 1` and on sign checks for probability vectors.
    pub const SIMPLEX: f64 = 1e-10;
    /// Default convergence tolerance for iterative solvers.
    pub const SOLVER: f64 = 1e-8;
    /// Step used by finite-difference probes.
    pub const FD_STEP: f64 = 1e-5;
    /// A hull witness counts as inside every ball when `max_i (D_i - r_i)`
    /// is at most this.
    pub const WITNESS: f64 = 1e-8;
    /// Absolute tolerance on the common radius found by bisection.
    pub const RADIUS: f64 = 1e-8;
}
