//! Divergence balls around reference models and the geometry of their
//! intersections.
//!
//! Balls are primal: `q` belongs to the ball around `p` when the divergence
//! *from* `p` *to* `q` is at most the radius.
//!
//! Nonemptiness of an intersection of Bregman balls is decided through the
//! concave dual of `Φ(q) = max_i (D_G(p_i‖q) - r_i)` restricted to the hull of
//! the centers,
//!
//! ```text
//! Φ* = max_{ν ∈ Δ}  Σ_i ν_i G(p_i) - G(Σ_i ν_i p_i) - ν·r,
//! ```
//!
//! whose maximizer yields the hull witness `q = Σ_i ν_i p_i`. With a common
//! radius the maximizer does not depend on the radius, so the smallest
//! radius with a nonempty intersection is the maximal Jensen gap and the
//! witness at that radius is the Chernoff point.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::divergence::{
    active_coords, bregman, bregman_raw, check_rho, kl_slices, restrict, rho_slices, BregmanGenerator, NegativeEntropy,
};
use crate::error::{Error, Result};
use crate::simplex::{check_len, convex_combine, mix, Dist};
use crate::solver::{self, ConvexFn, KlFrom, Options, Problem, RhoFrom};
use crate::tol;

/// The divergence a ball is measured in.
#[derive(Clone)]
pub enum BallDivergence {
    Kl,
    Bregman(Arc<dyn BregmanGenerator>),
    Rho(f64),
}

impl fmt::Debug for BallDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BallDivergence::Kl => f.write_str("Kl"),
            BallDivergence::Bregman(g) => write!(f, "Bregman({})", g.name()),
            BallDivergence::Rho(r) => write!(f, "Rho({r})"),
        }
    }
}

impl BallDivergence {
    fn same_family(&self, other: &BallDivergence) -> bool {
        match (self, other) {
            (BallDivergence::Kl, BallDivergence::Kl) => true,
            (BallDivergence::Rho(a), BallDivergence::Rho(b)) => a == b,
            (BallDivergence::Bregman(a), BallDivergence::Bregman(b)) => a.name() == b.name(),
            _ => false,
        }
    }
}

/// `{ q : D(center‖q) ≤ radius }`.
#[derive(Debug, Clone)]
pub struct Ball {
    center: Dist,
    radius: f64,
    divergence: BallDivergence,
}

impl Ball {
    pub fn new(center: Dist, radius: f64, divergence: BallDivergence) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius must be finite and nonnegative, got {radius}")));
        }
        if let BallDivergence::Rho(rho) = divergence {
            check_rho(rho)?;
        }
        Ok(Self { center, radius, divergence })
    }

    /// Relative-entropy ball.
    pub fn kl(center: Dist, radius: f64) -> Result<Self> {
        Self::new(center, radius, BallDivergence::Kl)
    }

    pub fn center(&self) -> &Dist {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn divergence(&self) -> &BallDivergence {
        &self.divergence
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.center.clone(), radius, self.divergence.clone())
    }

    /// `D(center‖q)`, `+∞` when undefined.
    pub fn divergence_to(&self, q: &Dist) -> Result<f64> {
        check_len(self.center.len(), q.len())?;
        Ok(match &self.divergence {
            BallDivergence::Kl => kl_slices(self.center.as_slice(), q.as_slice()).to_f64(),
            BallDivergence::Rho(rho) => rho_slices(*rho, self.center.as_slice(), q.as_slice()),
            BallDivergence::Bregman(g) => match bregman(g.as_ref(), &self.center, q) {
                Ok(v) => v,
                Err(Error::DomainError(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            },
        })
    }

    /// The ball's constraint `D(center‖·) - radius` for the q-space solver.
    pub(crate) fn constraint(&self) -> Result<Box<dyn ConvexFn>> {
        let p = self.center.as_slice().to_vec();
        match &self.divergence {
            BallDivergence::Kl => Ok(Box::new(KlFrom { p, offset: self.radius })),
            BallDivergence::Rho(rho) => Ok(Box::new(RhoFrom { p, rho: *rho, offset: self.radius })),
            BallDivergence::Bregman(g) => {
                Err(Error::Unsupported(format!("optimization over intersections of {} balls", g.name())))
            }
        }
    }
}

/// Membership with a slack of `1e-10`.
pub fn ball_contains(ball: &Ball, q: &Dist) -> Result<bool> {
    Ok(ball.divergence_to(q)? <= ball.radius + tol::SIMPLEX)
}

fn check_balls(balls: &[Ball]) -> Result<()> {
    let first = balls.first().ok_or(Error::EmptyList)?;
    for b in &balls[1..] {
        check_len(first.center.len(), b.center.len())?;
        if !first.divergence.same_family(&b.divergence) {
            return Err(Error::InvalidInput("balls mix divergence families".into()));
        }
    }
    Ok(())
}

pub fn intersection_contains(balls: &[Ball], q: &Dist) -> Result<bool> {
    check_balls(balls)?;
    for b in balls {
        if !ball_contains(b, q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of the hull-witness search.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A hull point inside every ball, with its convex weights and
    /// `max_i (D_i - r_i)` there.
    Found { point: Dist, weights: Vec<f64>, excess: f64 },
    /// No hull point is within tolerance; `min_excess` is the smallest
    /// `max_i (D_i - r_i)` found.
    Empty { min_excess: f64 },
}

impl Witness {
    pub fn point(&self) -> Option<&Dist> {
        match self {
            Witness::Found { point, .. } => Some(point),
            Witness::Empty { .. } => None,
        }
    }
}

/// Solution of the hull dual.
#[derive(Debug, Clone)]
pub(crate) struct HullDual {
    pub weights: Vec<f64>,
    /// `Φ*`, a lower bound on `min_q Φ(q)` that is tight for convex balls.
    pub value: f64,
    pub point: Dist,
}

/// Negated dual objective `G(Pν) - Σ ν_i G(p_i) + ν·r` over the
/// coordinates the generator sees.
struct DualObjective<'a> {
    g: &'a dyn BregmanGenerator,
    /// Columns are the restricted centers.
    centers: DMatrix<f64>,
    center_values: Vec<f64>,
    radii: &'a [f64],
}

impl DualObjective<'_> {
    fn point(&self, nu: &[f64]) -> Vec<f64> {
        (&self.centers * DVector::from_column_slice(nu)).as_slice().to_vec()
    }
}

impl ConvexFn for DualObjective<'_> {
    fn value(&self, nu: &[f64]) -> f64 {
        let q = self.point(nu);
        if !self.g.in_domain(&q) {
            return f64::INFINITY;
        }
        let lin: f64 = nu.iter().zip(self.center_values.iter().zip(self.radii)).map(|(w, (g, r))| w * (r - g)).sum();
        self.g.value(&q) + lin
    }

    fn gradient(&self, nu: &[f64]) -> DVector<f64> {
        let q = self.point(nu);
        let grad = DVector::from_vec(self.g.gradient(&q));
        let proj = self.centers.transpose() * grad;
        DVector::from_iterator(nu.len(), (0..nu.len()).map(|i| proj[i] - self.center_values[i] + self.radii[i]))
    }

    fn hessian(&self, nu: &[f64]) -> DMatrix<f64> {
        let q = self.point(nu);
        let h = self.g.hessian(&q);
        self.centers.transpose() * h * &self.centers
    }
}

pub(crate) fn hull_dual(centers: &[&Dist], radii: &[f64], g: &dyn BregmanGenerator) -> Result<HullDual> {
    let n = centers.len();
    if n == 0 {
        return Err(Error::EmptyList);
    }
    check_len(n, radii.len())?;
    let dim = centers[0].len();
    for c in centers {
        check_len(dim, c.len())?;
    }
    if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidInput("radii must be finite and nonnegative".into()));
    }
    if n == 1 {
        return Ok(HullDual { weights: vec![1.0], value: -radii[0], point: centers[0].clone() });
    }
    let slices: Vec<&[f64]> = centers.iter().map(|c| c.as_slice()).collect();
    let coords = active_coords(g, &slices);
    let restricted: Vec<Vec<f64>> = slices.iter().map(|c| restrict(c, &coords)).collect();
    let matrix = DMatrix::from_fn(coords.len(), n, |s, i| restricted[i][s]);
    let objective =
        DualObjective { g, center_values: restricted.iter().map(|c| g.value(c)).collect(), centers: matrix, radii };
    let problem = Problem {
        objective: &objective,
        constraints: vec![],
        positive: (0..n).collect(),
        equality: Some(DVector::from_element(n, 1.0)),
    };
    let start = vec![1.0 / n as f64; n];
    if !objective.value(&start).is_finite() {
        return Err(Error::DomainError(format!("barycenter of the centers is outside the {} domain", g.name())));
    }
    let sol = solver::minimize(&problem, start, &Options::default())?;
    let mut weights = sol.x;
    if weights.iter().any(|w| *w < -tol::SIMPLEX) {
        return Err(Error::SolverDiverged("dual weights left the simplex".into()));
    }
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    weights.iter_mut().for_each(|w| *w = w.max(0.0) / total);
    let dists: Vec<Dist> = centers.iter().map(|c| (*c).clone()).collect();
    let point = Dist::from_solver(mix(&weights, &dists));
    Ok(HullDual { value: -sol.objective, weights, point })
}

/// `max_i (D_G(p_i‖q) - r_i)`.
pub(crate) fn max_excess(centers: &[&Dist], radii: &[f64], g: &dyn BregmanGenerator, q: &Dist) -> f64 {
    centers
        .iter()
        .zip(radii)
        .map(|(p, r)| {
            let coords = active_coords(g, &[p.as_slice(), q.as_slice()]);
            let (pr, qr) = (restrict(p.as_slice(), &coords), restrict(q.as_slice(), &coords));
            let d = if g.in_domain(&qr) { bregman_raw(g, &pr, &qr).max(0.0) } else { f64::INFINITY };
            d - r
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Searches the convex hull of the centers for a point inside every
/// Bregman ball `B_G(p_i, r_i)`.
pub fn intersection_witness(centers: &[Dist], radii: &[f64], g: &dyn BregmanGenerator) -> Result<Witness> {
    let refs: Vec<&Dist> = centers.iter().collect();
    let dual = hull_dual(&refs, radii, g)?;
    let excess = max_excess(&refs, radii, g, &dual.point);
    if excess <= tol::WITNESS {
        Ok(Witness::Found { point: dual.point, weights: dual.weights, excess })
    } else {
        Ok(Witness::Empty { min_excess: excess })
    }
}

/// The Chernoff point of a set of reference models.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernoffResult {
    pub point: Dist,
    /// Smallest common radius at which the balls intersect.
    pub radius: f64,
    /// Convex coordinates of `point` over the centers.
    pub weights: Vec<f64>,
    /// `‖point - Σ w_i p_i‖∞`.
    pub residual: f64,
}

/// Smallest common radius `r*` such that the balls `B_G(p_i, r*)` meet, and
/// the single point where they do.
pub fn chernoff_point(centers: &[Dist], g: &dyn BregmanGenerator) -> Result<ChernoffResult> {
    if centers.len() < 2 {
        return Err(Error::InvalidInput("the Chernoff point needs at least two centers".into()));
    }
    for c in &centers[1..] {
        check_len(centers[0].len(), c.len())?;
    }
    if centers.iter().all(|c| c.sup_distance(&centers[0]) == 0.0) {
        let mut weights = vec![0.0; centers.len()];
        weights[0] = 1.0;
        return Ok(ChernoffResult { point: centers[0].clone(), radius: 0.0, weights, residual: 0.0 });
    }
    let refs: Vec<&Dist> = centers.iter().collect();
    let zeros = vec![0.0; centers.len()];
    let dual = hull_dual(&refs, &zeros, g)?;
    let radius = dual.value.max(0.0);
    let recombined = convex_combine(&dual.weights, centers)?;
    let residual = recombined.sup_distance(&dual.point);
    Ok(ChernoffResult { point: dual.point, radius, weights: dual.weights, residual })
}

/// How a KL-ball intersection presents itself to the q-space solvers.
#[derive(Debug, Clone)]
pub(crate) enum Feasibility {
    /// The intersection is within tolerance of a single hull point.
    Singleton { point: Dist, weights: Vec<f64> },
    /// A strictly feasible starting point for the barrier method.
    Interior { start: Vec<f64> },
}

/// Classifies an intersection of balls, failing with
/// [`Error::EmptyIntersection`] when it is empty.
pub(crate) fn classify(balls: &[&Ball]) -> Result<Feasibility> {
    let first = balls.first().ok_or(Error::EmptyList)?;
    let dim = first.center.len();
    match first.divergence {
        BallDivergence::Kl => {
            let centers: Vec<&Dist> = balls.iter().map(|b| &b.center).collect();
            let radii: Vec<f64> = balls.iter().map(|b| b.radius).collect();
            let dual = hull_dual(&centers, &radii, &NegativeEntropy)?;
            if dual.value > tol::WITNESS {
                return Err(Error::EmptyIntersection { min_excess: dual.value });
            }
            if dual.value >= -tol::WITNESS {
                return Ok(Feasibility::Singleton { point: dual.point, weights: dual.weights });
            }
            let uniform = 1.0 / dim as f64;
            let mut eps = 0.5;
            for _ in 0..80 {
                let start: Vec<f64> = dual.point.iter().map(|v| (1.0 - eps) * v + eps * uniform).collect();
                let ok = balls.iter().all(|b| kl_slices(b.center.as_slice(), &start).to_f64() < b.radius);
                if ok {
                    return Ok(Feasibility::Interior { start });
                }
                eps *= 0.5;
            }
            Err(Error::SolverDiverged("no strictly feasible point near the hull witness".into()))
        }
        BallDivergence::Rho(_) => {
            let constraints: Vec<Box<dyn ConvexFn>> = balls.iter().map(|b| b.constraint()).collect::<Result<_>>()?;
            let refs: Vec<&dyn ConvexFn> = constraints.iter().map(|c| c.as_ref()).collect();
            let dists: Vec<Dist> = balls.iter().map(|b| b.center.clone()).collect();
            let w = vec![1.0 / dists.len() as f64; dists.len()];
            let mut start = mix(&w, &dists);
            let uniform = 1.0 / dim as f64;
            start.iter_mut().for_each(|v| *v = 0.99 * *v + 0.01 * uniform);
            let positive: Vec<usize> = (0..dim).collect();
            let eq = DVector::from_element(dim, 1.0);
            let start = solver::find_strictly_feasible(&refs, &positive, Some(&eq), &start)?;
            Ok(Feasibility::Interior { start })
        }
        BallDivergence::Bregman(ref g) => {
            Err(Error::Unsupported(format!("optimization over intersections of {} balls", g.name())))
        }
    }
}
