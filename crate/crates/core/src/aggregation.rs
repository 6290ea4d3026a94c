//! Aggregating individual tastes and beliefs into a social criterion.
//!
//! Tastes aggregate affinely, `u0 = Σ β_i u_i + γ`. Beliefs aggregate
//! through the intersection of the agents' relative-entropy balls: the
//! planner evaluates each act against the worst structured belief in that
//! intersection, which is a state-by-state mixture of the reference models
//! whose weights may depend on the act's outcome in that state.

use std::collections::BTreeMap;

use crate::balls::{
    classify, hull_dual, intersection_contains, intersection_witness, Ball, BallDivergence, Feasibility, Witness,
};
use crate::criteria::{entropic_over_balls, multiplier_value, tilt_weights, worst_case_tilt, Lambda};
use crate::divergence::{check_rho, kl, NegativeEntropy};
use crate::error::{Error, Result};
use crate::scalar::{bisect, golden_max};
use crate::simplex::{
    check_len, convex_combine, expectation, fosd_compare, shannon_entropy, Dist, FosdOrder, StateVector,
};
use crate::solver::{self, KlFrom, Options, Problem, RhoFrom};
use crate::tol;

use nalgebra::{DMatrix, DVector};

/// An individual: utilities over named outcomes, a reference model and the
/// radius of the relative-entropy ball around it.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    name: String,
    utility: BTreeMap<String, f64>,
    reference: Dist,
    radius: f64,
}

impl Agent {
    pub fn new(name: impl Into<String>, utility: BTreeMap<String, f64>, reference: Dist, radius: f64) -> Result<Self> {
        let name = name.into();
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("agent '{name}' has invalid radius {radius}")));
        }
        let mut values = utility.values();
        let first = values.next().copied();
        if first.is_none() || values.all(|v| Some(*v) == first) {
            return Err(Error::InvalidInput(format!("agent '{name}' has a constant utility")));
        }
        if utility.values().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("agent '{name}' has a non-finite utility")));
        }
        Ok(Self { name, utility, reference, radius })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn utility(&self) -> &BTreeMap<String, f64> {
        &self.utility
    }

    pub fn reference(&self) -> &Dist {
        &self.reference
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn ball(&self) -> Ball {
        Ball::kl(self.reference.clone(), self.radius).expect("radius validated at construction")
    }

    pub fn utility_of(&self, outcome: &str) -> Result<f64> {
        self.utility.get(outcome).copied().ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))
    }
}

/// Agents, acts (outcome per state) and the planner's taste weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    agents: Vec<Agent>,
    acts: BTreeMap<String, Vec<String>>,
    beta: Vec<f64>,
    gamma: f64,
}

impl Profile {
    pub fn new(agents: Vec<Agent>, acts: BTreeMap<String, Vec<String>>, beta: Vec<f64>, gamma: f64) -> Result<Self> {
        let first = agents.first().ok_or(Error::EmptyList)?;
        let states = first.reference.len();
        for a in &agents {
            check_len(states, a.reference.len())?;
        }
        check_len(agents.len(), beta.len())?;
        if let Some((index, &value)) = beta.iter().enumerate().find(|(_, b)| !(**b >= 0.0) || !b.is_finite()) {
            return Err(Error::NegativeMass { index, value });
        }
        if beta.iter().all(|b| *b == 0.0) {
            return Err(Error::InvalidInput("taste weights are all zero".into()));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidInput("gamma must be finite".into()));
        }
        for outcomes in acts.values() {
            check_len(states, outcomes.len())?;
            for o in outcomes {
                for a in &agents {
                    a.utility_of(o)?;
                }
            }
        }
        Ok(Self { agents, acts, beta, gamma })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn acts(&self) -> &BTreeMap<String, Vec<String>> {
        &self.acts
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn states(&self) -> usize {
        self.agents[0].reference.len()
    }

    pub fn references(&self) -> Vec<Dist> {
        self.agents.iter().map(|a| a.reference.clone()).collect()
    }

    pub fn balls(&self) -> Vec<Ball> {
        self.agents.iter().map(Agent::ball).collect()
    }

    pub fn act(&self, id: &str) -> Result<&[String]> {
        self.acts.get(id).map(Vec::as_slice).ok_or_else(|| Error::UnknownAct(id.to_string()))
    }

    /// States grouped by the act's outcome, in order of first appearance.
    pub fn act_levels(&self, id: &str) -> Result<Vec<Vec<usize>>> {
        let outcomes = self.act(id)?;
        let mut order: Vec<&String> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (s, o) in outcomes.iter().enumerate() {
            match order.iter().position(|x| *x == o) {
                Some(k) => groups[k].push(s),
                None => {
                    order.push(o);
                    groups.push(vec![s]);
                }
            }
        }
        Ok(groups)
    }
}

/// `u0(s) = Σ_i β_i u_i(act(s)) + γ`.
pub fn social_utility(profile: &Profile, act: &str) -> Result<StateVector> {
    let outcomes = profile.act(act)?;
    let values = outcomes
        .iter()
        .map(|o| {
            let mut total = profile.gamma;
            for (a, b) in profile.agents.iter().zip(&profile.beta) {
                total += b * a.utility_of(o)?;
            }
            Ok(total)
        })
        .collect::<Result<Vec<f64>>>()?;
    StateVector::new(values)
}

/// Agent weights shared by the states of one outcome level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelWeights {
    pub states: Vec<usize>,
    pub weights: Vec<f64>,
}

/// The act-dependent social belief and its mixture representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialBeliefResult {
    pub belief: Dist,
    /// One entry per outcome level of the act.
    pub weights_by_level: Vec<LevelWeights>,
    /// Largest violation of stationarity, complementary slackness or
    /// primal feasibility.
    pub kkt_residual: f64,
    /// `max_s |belief(s) - Σ_i μ_i(level(s)) p_i(s)|`.
    pub reconstruction_residual: f64,
    /// The intersection collapsed to one point, so the weights are constant.
    pub singleton: bool,
    /// `false` when some level's weight denominator was near zero.
    pub well_conditioned: bool,
    /// Rank of the matrix of active reference models; below the number of
    /// active agents the weights are not identified by the belief alone.
    pub reference_rank: usize,
}

fn check_levels(levels: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for s in levels.iter().flatten() {
        if *s >= n || seen[*s] {
            return Err(Error::InvalidInput("act levels must partition the states".into()));
        }
        seen[*s] = true;
    }
    if seen.iter().all(|x| *x) {
        Ok(())
    } else {
        Err(Error::InvalidInput("act levels must partition the states".into()))
    }
}

fn active_indices(beta: &[f64]) -> Vec<usize> {
    (0..beta.len()).filter(|&i| beta[i] > 0.0).collect()
}

fn expand(weights: &[f64], active: &[usize], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (w, &i) in weights.iter().zip(active) {
        out[i] = *w;
    }
    out
}

/// Solves `min_{q ∈ ⋂ balls} -λ log E_q[exp(-u0/λ)]` over the balls of
/// agents with positive taste weight, and expresses the minimizer as
/// `q(s) = Σ_i μ_i(level(s)) p_i(s)` with weights read off the Lagrange
/// multipliers. Agents with `β_i = 0` get weight zero.
pub fn social_belief_for_act(
    u0: &StateVector,
    act_levels: &[Vec<usize>],
    balls: &[Ball],
    beta: &[f64],
    lambda: f64,
) -> Result<SocialBeliefResult> {
    let n = balls.len();
    if n == 0 {
        return Err(Error::EmptyList);
    }
    check_len(n, beta.len())?;
    let states = balls[0].center().len();
    check_len(states, u0.len())?;
    check_levels(act_levels, states)?;
    if balls.iter().any(|b| !matches!(b.divergence(), BallDivergence::Kl)) {
        return Err(Error::InvalidInput("social beliefs are defined for relative-entropy balls".into()));
    }
    for level in act_levels {
        let u = u0[level[0]];
        if level.iter().any(|&s| u0[s] != u) {
            return Err(Error::InvalidInput("social utility varies within an outcome level".into()));
        }
    }
    let active = active_indices(beta);
    if active.is_empty() {
        return Err(Error::InvalidInput("taste weights are all zero".into()));
    }
    let chosen: Vec<&Ball> = active.iter().map(|&i| &balls[i]).collect();
    let reference_rank = DMatrix::from_fn(states, chosen.len(), |s, i| chosen[i].center()[s]).rank(1e-10);

    // Every feasible belief is optimal for a constant act; report the hull
    // point of the intersection so the weights are exact and act-free.
    if u0.is_constant() {
        let centers: Vec<Dist> = chosen.iter().map(|b| b.center().clone()).collect();
        let radii: Vec<f64> = chosen.iter().map(|b| b.radius()).collect();
        return match intersection_witness(&centers, &radii, &NegativeEntropy)? {
            Witness::Found { point, weights, .. } => {
                let rebuilt = convex_combine(&weights, &centers)?;
                let weights = expand(&weights, &active, n);
                Ok(SocialBeliefResult {
                    reconstruction_residual: rebuilt.sup_distance(&point),
                    weights_by_level: act_levels
                        .iter()
                        .map(|l| LevelWeights { states: l.clone(), weights: weights.clone() })
                        .collect(),
                    belief: point,
                    kkt_residual: 0.0,
                    singleton: false,
                    well_conditioned: true,
                    reference_rank,
                })
            }
            Witness::Empty { min_excess } => Err(Error::EmptyIntersection { min_excess }),
        };
    }

    let opt = entropic_over_balls(u0, &chosen, lambda)?;
    let belief = opt.belief;

    if let Some(w) = opt.singleton_weights {
        let weights = expand(&w, &active, n);
        let rebuilt = convex_combine(&w, &chosen.iter().map(|b| b.center().clone()).collect::<Vec<_>>())?;
        return Ok(SocialBeliefResult {
            reconstruction_residual: rebuilt.sup_distance(&belief),
            weights_by_level: act_levels
                .iter()
                .map(|l| LevelWeights { states: l.clone(), weights: weights.clone() })
                .collect(),
            belief,
            kkt_residual: 0.0,
            singleton: true,
            well_conditioned: true,
            reference_rank,
        });
    }

    let (mults, nu) = opt.duals.ok_or_else(|| Error::SolverDiverged("missing dual estimates".into()))?;
    let e = tilt_weights(u0, lambda);
    let mut well_conditioned = true;
    let weights_by_level: Vec<LevelWeights> = act_levels
        .iter()
        .map(|level| {
            let denom = nu - e[level[0]];
            if !(denom > 1e-12 * nu.abs().max(1.0)) {
                well_conditioned = false;
            }
            let w: Vec<f64> = mults.iter().map(|l| if denom > 0.0 { (l / denom).max(0.0) } else { 0.0 }).collect();
            LevelWeights { states: level.clone(), weights: expand(&w, &active, n) }
        })
        .collect();

    let mut reconstruction: f64 = 0.0;
    let mut kkt: f64 = 0.0;
    for level in &weights_by_level {
        for &s in &level.states {
            let rebuilt: f64 = level.weights.iter().zip(balls).map(|(w, b)| w * b.center()[s]).sum();
            reconstruction = reconstruction.max((rebuilt - belief[s]).abs());
            let weighted: f64 = active.iter().zip(&mults).map(|(&i, l)| l * balls[i].center()[s]).sum();
            kkt = kkt.max((belief[s] * (nu - e[s]) - weighted).abs());
        }
    }
    for (&i, l) in active.iter().zip(&mults) {
        let slack = balls[i].radius() - balls[i].divergence_to(&belief)?;
        kkt = kkt.max((-slack).max(0.0)).max((l * slack).abs());
    }
    Ok(SocialBeliefResult {
        belief,
        weights_by_level,
        kkt_residual: kkt,
        reconstruction_residual: reconstruction,
        singleton: false,
        well_conditioned,
        reference_rank,
    })
}

/// Relative-entropy projection of a reference truth onto the intersection,
/// decomposed as `σ p* + (1 - σ) Σ_i μ_i p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthProjection {
    pub sigma: f64,
    pub projected: Dist,
    /// Mixture weights over all agents (zero for `β_i = 0`, and all zero
    /// when `σ = 1`).
    pub mixture_weights: Vec<f64>,
    /// `KL(p*‖projected)`.
    pub divergence: f64,
}

/// `argmin_{q ∈ ⋂ balls} KL(p*‖q)` over the balls of agents with `β_i > 0`.
pub fn kl_project_to_intersection(p_star: &Dist, balls: &[Ball], beta: &[f64]) -> Result<TruthProjection> {
    let n = balls.len();
    if n == 0 {
        return Err(Error::EmptyList);
    }
    check_len(n, beta.len())?;
    check_len(balls[0].center().len(), p_star.len())?;
    let active = active_indices(beta);
    if active.is_empty() {
        return Err(Error::InvalidInput("taste weights are all zero".into()));
    }
    let chosen: Vec<Ball> = active.iter().map(|&i| balls[i].clone()).collect();
    let refs: Vec<&Ball> = chosen.iter().collect();
    let feasibility = classify(&refs)?;
    if intersection_contains(&chosen, p_star)? {
        return Ok(TruthProjection {
            sigma: 1.0,
            projected: p_star.clone(),
            mixture_weights: vec![0.0; n],
            divergence: 0.0,
        });
    }
    match feasibility {
        Feasibility::Singleton { point, weights } => {
            let divergence = kl(p_star, &point)?.finite().ok_or(Error::AbsoluteContinuityFailure)?;
            Ok(TruthProjection {
                sigma: 0.0,
                projected: point,
                mixture_weights: expand(&weights, &active, n),
                divergence,
            })
        }
        Feasibility::Interior { start } => {
            let dim = start.len();
            let objective = KlFrom { p: p_star.as_slice().to_vec(), offset: 0.0 };
            let constraints: Vec<KlFrom> =
                chosen.iter().map(|b| KlFrom { p: b.center().as_slice().to_vec(), offset: b.radius() }).collect();
            let problem = Problem {
                objective: &objective,
                constraints: constraints.iter().map(|c| c as &dyn solver::ConvexFn).collect(),
                positive: (0..dim).collect(),
                equality: Some(DVector::from_element(dim, 1.0)),
            };
            let sol = solver::minimize(&problem, start, &Options::default())?;
            let projected = Dist::from_solver(sol.x);
            let total: f64 = sol.multipliers.iter().sum();
            let sigma = 1.0 / (1.0 + total);
            let mu: Vec<f64> = sol.multipliers.iter().map(|l| if total > 0.0 { l / total } else { 0.0 }).collect();
            let divergence = kl(p_star, &projected)?.to_f64();
            Ok(TruthProjection { sigma, projected, mixture_weights: expand(&mu, &active, n), divergence })
        }
    }
}

/// `KL(p*‖q) - KL(p*‖q0)`, nonnegative on the intersection when `q0` is the
/// projection of `p*` onto it.
pub fn pythagorean_gap(p_star: &Dist, q: &Dist, q0: &Dist) -> Result<f64> {
    let a = kl(p_star, q)?.finite().ok_or(Error::AbsoluteContinuityFailure)?;
    let b = kl(p_star, q0)?.finite().ok_or(Error::AbsoluteContinuityFailure)?;
    Ok(a - b)
}

/// `Σ_i μ_i p_i`, the minimizer of `q ↦ Σ_i μ_i KL(p_i‖q)`.
pub fn barycenter(weights: &[f64], points: &[Dist]) -> Result<Dist> {
    convex_combine(weights, points)
}

/// Goodness of fit of the barycenter: `(Σ_i μ_i KL(p_i‖q0), H(q0) - Σ_i μ_i H(p_i))`.
/// The two coincide.
pub fn fit_gap(weights: &[f64], points: &[Dist]) -> Result<(f64, f64)> {
    let q0 = barycenter(weights, points)?;
    let mut objective = 0.0;
    let mut mean_entropy = 0.0;
    for (w, p) in weights.iter().zip(points) {
        if *w > 0.0 {
            objective += w * kl(p, &q0)?.to_f64();
        }
        mean_entropy += w * shannon_entropy(p);
    }
    Ok((objective, shannon_entropy(&q0) - mean_entropy))
}

fn dual_weights(centers: &[&Dist], radii: &[f64]) -> Result<Vec<f64>> {
    Ok(hull_dual(centers, radii, &NegativeEntropy)?.weights)
}

/// Finite-difference response of the constant social weights to agent
/// `agent`'s radius: `(∂μ_i/∂η_i, Σ_{j≠i} ∂μ_j/∂η_i)`.
///
/// The weights are the hull weights of the witness for the intersection
/// (the Chernoff-type point solving the dual of the smallest-excess
/// problem), which coincide with the constant social weights when the
/// intersection is a single point and vary smoothly with the radii around
/// it. Central differences are used unless the radius is below `step`.
pub fn weight_sensitivity(balls: &[Ball], beta: &[f64], agent: usize, step: f64) -> Result<(f64, f64)> {
    check_len(balls.len(), beta.len())?;
    if agent >= balls.len() || !(beta[agent] > 0.0) {
        return Err(Error::InvalidInput(format!("agent {agent} is not an active agent")));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let active = active_indices(beta);
    let pos = active.iter().position(|&i| i == agent).unwrap_or(0);
    let centers: Vec<&Dist> = active.iter().map(|&i| balls[i].center()).collect();
    let radii: Vec<f64> = active.iter().map(|&i| balls[i].radius()).collect();
    let at = |delta: f64| -> Result<Vec<f64>> {
        let mut r = radii.clone();
        r[pos] += delta;
        dual_weights(&centers, &r)
    };
    let (lo, hi, width) =
        if radii[pos] >= step { (at(-step)?, at(step)?, 2.0 * step) } else { (at(0.0)?, at(step)?, step) };
    let own = (hi[pos] - lo[pos]) / width;
    let others: f64 = (0..active.len()).filter(|&j| j != pos).map(|j| (hi[j] - lo[j]) / width).sum();
    Ok((own, others))
}

/// Index of the candidate that first-order stochastically dominates all
/// others. Ties keep the earliest.
pub fn welfare_dominant_index(candidates: &[Dist]) -> Result<usize> {
    let first = candidates.first().ok_or(Error::EmptyList)?;
    for c in candidates {
        check_len(first.len(), c.len())?;
    }
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if fosd_compare(&candidates[i], &candidates[j])? == FosdOrder::Incomparable {
                return Err(Error::NoFosdOrder(i, j));
            }
        }
    }
    let mut best = 0;
    for i in 1..candidates.len() {
        if fosd_compare(&candidates[i], &candidates[best])? == FosdOrder::PDominates {
            best = i;
        }
    }
    Ok(best)
}

/// The first-order-stochastically greatest candidate; under a common
/// monotone taste its singleton set is welfare-dominant for every λ.
pub fn welfare_dominant_belief(candidates: &[Dist]) -> Result<Dist> {
    Ok(candidates[welfare_dominant_index(candidates)?].clone())
}

/// ρ-divergence projection of a reference truth onto an intersection of
/// ρ-balls, with its power-mean coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoAggregate {
    pub aggregate: Dist,
    /// `σ_1..σ_n` for the points and, last, the coefficient on `p*`, with
    /// `aggregate^{1-ρ} = Σ σ_i p_i^{1-ρ} + σ_{n+1} p*^{1-ρ}`.
    pub sigmas: Vec<f64>,
}

/// `argmin_{q : D_ρ(p_i‖q) ≤ τ_i ∀i} D_ρ(p*‖q)`.
pub fn rho_aggregate(p_star: &Dist, points: &[Dist], radii: &[f64], rho: f64) -> Result<RhoAggregate> {
    check_rho(rho)?;
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyList);
    }
    check_len(n, radii.len())?;
    for p in points {
        check_len(p_star.len(), p.len())?;
        if !p.has_full_support() {
            return Err(Error::InvalidInput("rho aggregation needs full-support points".into()));
        }
    }
    let balls: Vec<Ball> = points
        .iter()
        .zip(radii)
        .map(|(p, r)| Ball::new(p.clone(), *r, BallDivergence::Rho(rho)))
        .collect::<Result<_>>()?;
    if intersection_contains(&balls, p_star)? {
        let mut sigmas = vec![0.0; n + 1];
        sigmas[n] = 1.0;
        return Ok(RhoAggregate { aggregate: p_star.clone(), sigmas });
    }
    // A zero radius pins the intersection to that center.
    if let Some(k) = radii.iter().position(|r| *r <= tol::RADIUS) {
        if !intersection_contains(&balls, &points[k])? {
            let min_excess = balls.iter().map(|b| b.divergence_to(&points[k])).collect::<Result<Vec<f64>>>()?;
            let min_excess = min_excess.iter().zip(radii).map(|(d, r)| d - r).fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::EmptyIntersection { min_excess });
        }
        let mut sigmas = vec![0.0; n + 1];
        sigmas[k] = 1.0;
        return Ok(RhoAggregate { aggregate: points[k].clone(), sigmas });
    }
    let refs: Vec<&Ball> = balls.iter().collect();
    let Feasibility::Interior { start } = classify(&refs)? else {
        return Err(Error::SolverDiverged("unexpected singleton classification".into()));
    };
    let dim = start.len();
    let objective = RhoFrom { p: p_star.as_slice().to_vec(), rho, offset: 0.0 };
    let constraints: Vec<RhoFrom> =
        points.iter().zip(radii).map(|(p, r)| RhoFrom { p: p.as_slice().to_vec(), rho, offset: *r }).collect();
    let problem = Problem {
        objective: &objective,
        constraints: constraints.iter().map(|c| c as &dyn solver::ConvexFn).collect(),
        positive: (0..dim).collect(),
        equality: Some(DVector::from_element(dim, 1.0)),
    };
    let sol = solver::minimize(&problem, start, &Options::default())?;
    let scale = 1.0 / ((1.0 - rho) * sol.equality);
    let mut sigmas: Vec<f64> = sol.multipliers.iter().map(|l| l * scale).collect();
    sigmas.push(scale);
    Ok(RhoAggregate { aggregate: Dist::from_solver(sol.x), sigmas })
}

/// A one-parameter family of acts, described by each agent's state
/// utilities at parameter `t ∈ [lo, hi]`.
pub struct ActFamily<'a> {
    pub lo: f64,
    pub hi: f64,
    pub utilities: Box<dyn Fn(f64) -> Vec<StateVector> + 'a>,
    /// Derivatives of the utilities in `t`, used to polish the optimum and
    /// report the first-order residual.
    pub derivatives: Option<Box<dyn Fn(f64) -> Vec<StateVector> + 'a>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    pub t_opt: f64,
    pub value: f64,
    /// `|E_tilt[Σ_i β_i u_i'(t_opt)]|` at an interior optimum when
    /// derivatives are available.
    pub foc_residual: Option<f64>,
    pub interior: bool,
}

/// Points of the pre-scan used to detect several local maxima.
const PRESCAN: usize = 101;

fn combine(beta: &[f64], gamma: f64, per_agent: &[StateVector]) -> Result<StateVector> {
    check_len(beta.len(), per_agent.len())?;
    let n = per_agent.first().ok_or(Error::EmptyList)?.len();
    let mut out = vec![gamma; n];
    for (b, u) in beta.iter().zip(per_agent) {
        check_len(n, u.len())?;
        for (o, v) in out.iter_mut().zip(u.as_slice()) {
            *o += b * v;
        }
    }
    StateVector::new(out)
}

/// Maximizes the multiplier value (the expected value at `λ = ∞`) of
/// `Σ β_i u_i(t) + γ` under `q0` over the family, using the profile's
/// taste weights.
pub fn optimal_policy(profile: &Profile, family: &ActFamily<'_>, q0: &Dist, lambda: Lambda) -> Result<PolicyResult> {
    optimal_policy_weighted(profile.beta(), profile.gamma(), family, q0, lambda)
}

/// [`optimal_policy`] with explicit taste weights.
pub fn optimal_policy_weighted(
    beta: &[f64],
    gamma: f64,
    family: &ActFamily<'_>,
    q0: &Dist,
    lambda: Lambda,
) -> Result<PolicyResult> {
    if !(family.lo < family.hi) {
        return Err(Error::InvalidInput("empty parameter interval".into()));
    }
    let value_at = |t: f64| -> Result<f64> {
        let u = combine(beta, gamma, &(family.utilities)(t))?;
        match lambda {
            Lambda::Finite(l) => multiplier_value(&u, q0, l),
            Lambda::Infinite => expectation(q0, &u),
        }
    };
    let slope_at = |t: f64| -> Option<Result<f64>> {
        let d = family.derivatives.as_ref()?;
        Some((|| {
            let u = combine(beta, gamma, &(family.utilities)(t))?;
            let du = combine(beta, 0.0, &d(t))?;
            let weights = match lambda {
                Lambda::Finite(l) => worst_case_tilt(&u, q0, l)?,
                Lambda::Infinite => q0.clone(),
            };
            expectation(&weights, &du)
        })())
    };

    let grid: Vec<f64> =
        (0..PRESCAN).map(|k| family.lo + (family.hi - family.lo) * k as f64 / (PRESCAN - 1) as f64).collect();
    let values = grid.iter().map(|&t| value_at(t)).collect::<Result<Vec<f64>>>()?;
    let peaks = (1..PRESCAN - 1).filter(|&k| values[k] > values[k - 1] && values[k] >= values[k + 1]).count();
    if peaks >= 2 {
        return Err(Error::NonConcaveDetected);
    }
    let mut k = 0;
    for i in 1..PRESCAN {
        if values[i] > values[k] {
            k = i;
        }
    }
    let (a, b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(PRESCAN - 1)]);
    let mut failure = None;
    let (mut t, _) = golden_max(
        |t| match value_at(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        a,
        b,
        1e-12,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if slope_at(a).is_some() {
        let slope = |t: f64| slope_at(t).map(|r| r.unwrap_or(f64::NAN)).unwrap_or(f64::NAN);
        if slope(a) > 0.0 && slope(b) < 0.0 {
            if let Ok(root) = bisect(slope, a, b, 1e-15) {
                t = root;
            }
        }
    }
    let mut best = (t, value_at(t)?);
    for edge in [family.lo, family.hi] {
        let v = value_at(edge)?;
        if v >= best.1 {
            best = (edge, v);
        }
    }
    let interior = best.0 > family.lo && best.0 < family.hi;
    let foc_residual = if interior { slope_at(best.0).transpose()?.map(f64::abs) } else { None };
    Ok(PolicyResult { t_opt: best.0, value: best.1, foc_residual, interior })
}
