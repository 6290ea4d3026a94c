//! A log-barrier interior-point method for small smooth convex programs
//!
//! ```text
//! minimize f0(x)  subject to  f_j(x) ≤ 0,  x_s ≥ 0 (s in a mask),  a·x = a·x_start
//! ```
//!
//! Each centering step is a feasible, damped Newton iteration; the equality
//! is eliminated through a Schur complement on a Cholesky factor. Dual
//! estimates for every constraint are returned with the primal point, which
//! is how callers recover Lagrange multipliers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A smooth convex function. `value` may return `+∞` or NaN outside its
/// domain; the solver treats that as infeasible.
pub trait ConvexFn {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> DVector<f64>;

    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;

    /// `f(y) - f(x)`; override when a cancellation-free form exists.
    fn delta(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value(y) - self.value(x)
    }
}

pub struct Problem<'a> {
    pub objective: &'a dyn ConvexFn,
    pub constraints: Vec<&'a dyn ConvexFn>,
    /// Coordinates carrying a positivity barrier.
    pub positive: Vec<usize>,
    /// Normal of the single linear equality, if any.
    pub equality: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct Options {
    /// Target duality gap `m / t`.
    pub gap: f64,
    /// Factor by which the barrier weight grows between centerings.
    pub growth: f64,
    pub t0: f64,
    /// Centering stops when half the squared Newton decrement is below this.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Stop as soon as a centered point has objective below this value.
    pub stop_below: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Self { gap: 1e-11, growth: 10.0, t0: 1.0, newton_tol: 1e-12, max_newton: 200, stop_below: None }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual estimate for each inequality constraint: least-squares
    /// multipliers at `x` when the active system is well posed, otherwise
    /// read off a centered point with gap near `1e-9`.
    pub multipliers: Vec<f64>,
    /// Dual estimate for each positivity constraint, in mask order.
    pub positivity: Vec<f64>,
    /// Multiplier of the equality: `∇f0 + Σ λ_j ∇f_j - Σ κ_s e_s + ν a ≈ 0`.
    pub equality: f64,
    /// Duality gap bound at termination.
    pub gap: f64,
    pub newton_steps: usize,
}

/// Gap above which a stalled run is reported as a failure.
const STALL_GAP: f64 = 1e-7;

/// Dual estimates `1/(-t f_j)` lose relative precision once slacks approach
/// rounding level, so they are taken from the last centered point whose
/// gap is still at least this large.
const DUAL_GAP_FLOOR: f64 = 1e-9;

impl Problem<'_> {
    fn strictly_feasible(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
            && self.positive.iter().all(|&s| x[s] > 0.0)
            && self.constraints.iter().all(|c| c.value(x) < 0.0)
            && self.objective.value(x).is_finite()
    }

    fn barrier_derivatives(&self, x: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let mut g = self.objective.gradient(x) * t;
        let mut h = self.objective.hessian(x) * t;
        for c in &self.constraints {
            let slack = -c.value(x);
            let cg = c.gradient(x);
            g += &cg / slack;
            h += c.hessian(x) / slack;
            h += (&cg * cg.transpose()) / (slack * slack);
        }
        for &s in &self.positive {
            g[s] -= 1.0 / x[s];
            h[(s, s)] += 1.0 / (x[s] * x[s]);
        }
        (g, h)
    }

    /// Barrier value at `y` minus barrier value at `x`.
    fn barrier_delta(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        let mut d = t * self.objective.delta(x, y);
        for c in &self.constraints {
            d -= (c.delta(x, y) / c.value(x)).ln_1p();
        }
        for &s in &self.positive {
            d -= ((y[s] - x[s]) / x[s]).ln_1p();
        }
        d
    }
}

/// Solves `H v = rhs` for symmetric positive (semi)definite `H`, with
/// diagonal scaling and escalating jitter when the factorization fails.
struct Factor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    scale: DVector<f64>,
}

impl Factor {
    fn new(h: &DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        let scale = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let d = h[(i, i)];
                if d > 0.0 && d.is_finite() {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            }),
        );
        let scaled = DMatrix::from_fn(n, n, |i, j| h[(i, j)] * scale[i] * scale[j]);
        let mut jitter = 0.0;
        loop {
            let mut m = scaled.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = m.cholesky() {
                return Ok(Self { chol, scale });
            }
            jitter = if jitter == 0.0 { 1e-14 } else { jitter * 100.0 };
            if jitter > 1e-2 {
                return Err(Error::SolverDiverged("Newton system is not positive definite".into()));
            }
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let scaled = rhs.component_mul(&self.scale);
        self.chol.solve(&scaled).component_mul(&self.scale)
    }
}

/// Newton step `(dx, w)` with `H dx + a w = -g`, `a·dx = 0`.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>, a: Option<&DVector<f64>>) -> Result<(DVector<f64>, f64)> {
    let factor = Factor::new(h)?;
    let u = factor.solve(g);
    match a {
        None => Ok((-u, 0.0)),
        Some(a) => {
            let v = factor.solve(a);
            let w = -a.dot(&u) / a.dot(&v);
            Ok((-(u + v * w), w))
        }
    }
}

/// Runs the barrier method from a strictly feasible `start`.
pub fn minimize(problem: &Problem<'_>, start: Vec<f64>, opts: &Options) -> Result<Solution> {
    if !problem.strictly_feasible(&start) {
        return Err(Error::InvalidInput("start point is not strictly feasible".into()));
    }
    let m = (problem.constraints.len() + problem.positive.len()) as f64;
    let mut x = start;
    let mut t = opts.t0;
    let mut steps = 0;
    let mut dual: Option<Dual> = None;
    loop {
        let (converged, w, used) = center(problem, &mut x, t, opts)?;
        steps += used;
        let gap = m / t;
        if converged && w.is_finite() && (dual.is_none() || gap >= DUAL_GAP_FLOOR) {
            dual = Some(Dual::at(problem, &x, t, w));
        }
        if let Some(thr) = opts.stop_below {
            if problem.objective.value(&x) < thr {
                break;
            }
        }
        if !converged {
            if gap > STALL_GAP {
                return Err(Error::NoConvergence { iterations: steps });
            }
            break;
        }
        if gap <= opts.gap || m == 0.0 {
            break;
        }
        t *= opts.growth;
    }
    let dual = dual.unwrap_or_else(|| Dual::at(problem, &x, t, 0.0));
    let dual = Dual::polished(problem, &x).unwrap_or(dual);
    Ok(Solution {
        objective: problem.objective.value(&x),
        x,
        multipliers: dual.multipliers,
        positivity: dual.positivity,
        equality: dual.equality,
        gap: m / t,
        newton_steps: steps,
    })
}

/// Dual estimates read off a centered point.
struct Dual {
    multipliers: Vec<f64>,
    positivity: Vec<f64>,
    equality: f64,
}

impl Dual {
    fn at(problem: &Problem<'_>, x: &[f64], t: f64, w: f64) -> Self {
        Self {
            multipliers: problem.constraints.iter().map(|c| 1.0 / (-t * c.value(x))).collect(),
            positivity: problem.positive.iter().map(|&s| 1.0 / (t * x[s])).collect(),
            equality: w / t,
        }
    }

    /// Least-squares multipliers for the constraints active at `x`, solving
    /// stationarity on the coordinates away from the positivity bound.
    /// Returns `None` when that system is underdetermined, rank deficient
    /// or yields a negative multiplier.
    fn polished(problem: &Problem<'_>, x: &[f64]) -> Option<Self> {
        let active: Vec<usize> =
            (0..problem.constraints.len()).filter(|&j| -problem.constraints[j].value(x) <= ACTIVE_SLACK).collect();
        let free: Vec<usize> = (0..x.len()).filter(|s| !problem.positive.contains(s) || x[*s] > ACTIVE_SLACK).collect();
        let grads: Vec<DVector<f64>> = active.iter().map(|&j| problem.constraints[j].gradient(x)).collect();
        let unknowns = active.len() + usize::from(problem.equality.is_some());
        if free.len() < unknowns {
            return None;
        }
        let g0 = problem.objective.gradient(x);
        let column = |k: usize, s: usize| match grads.get(k) {
            Some(g) => g[s],
            None => problem.equality.as_ref().map_or(0.0, |a| a[s]),
        };
        let system = DMatrix::from_fn(free.len(), unknowns, |r, k| column(k, free[r]));
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&s| -g0[s]));
        let svd = system.svd(true, true);
        let top = svd.singular_values.max();
        if unknowns > 0 && !(svd.singular_values.min() > 1e-10 * top) {
            return None;
        }
        let sol = svd.solve(&rhs, 0.0).ok()?;
        if sol.iter().take(active.len()).any(|l| *l < 0.0 || !l.is_finite()) {
            return None;
        }
        let mut multipliers = vec![0.0; problem.constraints.len()];
        for (k, &j) in active.iter().enumerate() {
            multipliers[j] = sol[k];
        }
        let equality = if problem.equality.is_some() { sol[active.len()] } else { 0.0 };
        let positivity = problem
            .positive
            .iter()
            .map(|&s| {
                if free.contains(&s) {
                    return 0.0;
                }
                let r = g0[s] + (0..unknowns).map(|k| sol[k] * column(k, s)).sum::<f64>();
                r.max(0.0)
            })
            .collect();
        Some(Self { multipliers, positivity, equality })
    }
}

/// Slack below which a constraint counts as active when polishing duals.
const ACTIVE_SLACK: f64 = 1e-7;

/// Newton iterations for the barrier at weight `t`. Returns whether the
/// decrement test was met, the last equality multiplier and the step count.
fn center(problem: &Problem<'_>, x: &mut Vec<f64>, t: f64, opts: &Options) -> Result<(bool, f64, usize)> {
    let mut w = f64::NAN;
    for it in 0..opts.max_newton {
        let (g, h) = problem.barrier_derivatives(x, t);
        let (dx, w_new) = newton_direction(&h, &g, problem.equality.as_ref())?;
        w = w_new;
        // dxᵀ H dx equals -g·dx in exact arithmetic but does not pick up the
        // rounding of g along the equality normal.
        let decrement = dx.dot(&(&h * &dx));
        let slope = -decrement;
        if !decrement.is_finite() {
            return Err(Error::SolverDiverged("non-finite Newton decrement".into()));
        }
        if decrement / 2.0 <= opts.newton_tol {
            return Ok((true, w, it));
        }
        let mut s = 1.0;
        let mut trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + s * d).collect();
        let mut halvings = 0;
        while !problem.strictly_feasible(&trial) {
            s *= 0.5;
            halvings += 1;
            if halvings > 100 {
                return Ok((false, w, it));
            }
            trial = x.iter().zip(dx.iter()).map(|(a, d)| a + s * d).collect();
        }
        if decrement >= 0.25 {
            while problem.barrier_delta(x, &trial, t) > 0.01 * s * slope {
                s *= 0.5;
                halvings += 1;
                if halvings > 160 {
                    return Ok((false, w, it));
                }
                trial = x.iter().zip(dx.iter()).map(|(a, d)| a + s * d).collect();
            }
        }
        if trial == *x {
            return Ok((decrement < 1e-6, w, it));
        }
        *x = trial;
    }
    Ok((false, w, opts.max_newton))
}

/// `c·x`.
pub struct Linear {
    pub c: Vec<f64>,
}

impl ConvexFn for Linear {
    fn value(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(a, b)| a * b).sum()
    }
    fn gradient(&self, _x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(&self.c)
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
    fn delta(&self, x: &[f64], y: &[f64]) -> f64 {
        self.c.iter().zip(x.iter().zip(y)).map(|(c, (a, b))| c * (b - a)).sum()
    }
}

/// `Σ_s p(s) log(p(s)/x(s)) - offset` over the support of `p`; with
/// `offset = 0` this is relative entropy from `p` to `x` up to the mass of
/// `x` (and equals it on the simplex).
pub struct KlFrom {
    pub p: Vec<f64>,
    pub offset: f64,
}

impl ConvexFn for KlFrom {
    fn value(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&a, &b) in self.p.iter().zip(x) {
            if a > 0.0 {
                if b <= 0.0 {
                    return f64::INFINITY;
                }
                acc += a * (a / b).ln();
            }
        }
        acc - self.offset
    }
    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(x.len(), self.p.iter().zip(x).map(|(a, b)| if *a > 0.0 { -a / b } else { 0.0 }))
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.p.iter().zip(x).map(|(a, b)| if *a > 0.0 { a / (b * b) } else { 0.0 });
        DMatrix::from_diagonal(&DVector::from_iterator(x.len(), d))
    }
    fn delta(&self, x: &[f64], y: &[f64]) -> f64 {
        self.p
            .iter()
            .zip(x.iter().zip(y))
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, (u, v))| -a * ((v - u) / u).ln_1p())
            .sum()
    }
}

/// `D_ρ(p‖x) - offset`, the ρ-divergence from a fixed `p`.
pub struct RhoFrom {
    pub p: Vec<f64>,
    pub rho: f64,
    pub offset: f64,
}

impl ConvexFn for RhoFrom {
    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| *v < 0.0) {
            return f64::INFINITY;
        }
        crate::divergence::rho_slices(self.rho, &self.p, x) - self.offset
    }
    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let k = 1.0 / (1.0 - self.rho);
        DVector::from_iterator(
            x.len(),
            self.p.iter().zip(x).map(
                |(a, b)| {
                    if *a > 0.0 {
                        -k * a.powf(1.0 - self.rho) * b.powf(self.rho - 1.0)
                    } else {
                        0.0
                    }
                },
            ),
        )
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.p.iter().zip(x).map(
            |(a, b)| {
                if *a > 0.0 {
                    a.powf(1.0 - self.rho) * b.powf(self.rho - 2.0)
                } else {
                    0.0
                }
            },
        );
        DMatrix::from_diagonal(&DVector::from_iterator(x.len(), d))
    }
    fn delta(&self, x: &[f64], y: &[f64]) -> f64 {
        // Σ p [(x/p)^ρ - (y/p)^ρ] / (ρ(1-ρ)), written via expm1 of log ratios.
        let scale = self.rho * (1.0 - self.rho);
        self.p
            .iter()
            .zip(x.iter().zip(y))
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, (u, v))| {
                let base = a * (u / a).powf(self.rho);
                -base * (self.rho * ((v - u) / u).ln_1p()).exp_m1() / scale
            })
            .sum()
    }
}

/// `f(x[..n]) - x[n]`: lifts a constraint into the epigraph form used to
/// search for a strictly feasible point.
struct Epigraph<'a> {
    inner: &'a dyn ConvexFn,
    n: usize,
}

impl ConvexFn for Epigraph<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&x[..self.n]) - x[self.n]
    }
    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let g = self.inner.gradient(&x[..self.n]);
        DVector::from_iterator(self.n + 1, g.iter().copied().chain(std::iter::once(-1.0)))
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let h = self.inner.hessian(&x[..self.n]);
        let mut out = DMatrix::zeros(self.n + 1, self.n + 1);
        out.view_mut((0, 0), (self.n, self.n)).copy_from(&h);
        out
    }
    fn delta(&self, x: &[f64], y: &[f64]) -> f64 {
        self.inner.delta(&x[..self.n], &y[..self.n]) - (y[self.n] - x[self.n])
    }
}

/// Finds a point with every constraint strictly negative by minimizing the
/// largest constraint value. `start` must be strictly positive on the mask
/// and inside every constraint's domain. Fails with
/// [`Error::EmptyIntersection`] when the smallest achievable maximum is
/// nonnegative.
pub fn find_strictly_feasible(
    constraints: &[&dyn ConvexFn],
    positive: &[usize],
    equality: Option<&DVector<f64>>,
    start: &[f64],
) -> Result<Vec<f64>> {
    if constraints.iter().all(|c| c.value(start) < 0.0) {
        return Ok(start.to_vec());
    }
    let n = start.len();
    let worst = constraints.iter().map(|c| c.value(start)).fold(f64::NEG_INFINITY, f64::max);
    if !worst.is_finite() {
        return Err(Error::InvalidInput("start point outside constraint domain".into()));
    }
    let lifted: Vec<Epigraph<'_>> = constraints.iter().map(|&inner| Epigraph { inner, n }).collect();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let objective = Linear { c };
    let problem = Problem {
        objective: &objective,
        constraints: lifted.iter().map(|e| e as &dyn ConvexFn).collect(),
        positive: positive.to_vec(),
        equality: equality.map(|a| DVector::from_iterator(n + 1, a.iter().copied().chain(std::iter::once(0.0)))),
    };
    let mut x0 = start.to_vec();
    x0.push(worst + 1.0);
    let opts = Options { stop_below: Some(0.0), ..Options::default() };
    let sol = minimize(&problem, x0, &opts)?;
    let mut x = sol.x;
    let level = x.pop().unwrap_or(f64::INFINITY);
    if constraints.iter().all(|c| c.value(&x) < 0.0) {
        Ok(x)
    } else {
        Err(Error::EmptyIntersection { min_excess: level.max(0.0) })
    }
}
