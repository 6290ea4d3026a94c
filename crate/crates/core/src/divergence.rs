//! Divergences between probability vectors.
//!
//! Relative entropy and φ-divergences may be infinite when absolute
//! continuity fails; they return [`ExtReal`] instead of a sentinel float.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::simplex::{check_len, normalize, Dist};
use crate::tol;

/// A nonnegative extended real: a finite value or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    /// Lossy conversion, mapping `Infinite` to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

/// Relative entropy `Σ p log(p/q)`.
pub fn kl(p: &Dist, q: &Dist) -> Result<ExtReal> {
    check_len(p.len(), q.len())?;
    Ok(kl_slices(p.as_slice(), q.as_slice()))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> ExtReal {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return ExtReal::Infinite;
            }
            acc += a * (a / b).ln();
        }
    }
    // Rounding can push a true zero slightly negative.
    ExtReal::Finite(acc.max(0.0))
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex function `φ` with `φ(1) = 0` together with its Fenchel
/// conjugate `φ*(t) = sup_{x ≥ 0} (t x - φ(x))`.
#[derive(Clone)]
pub struct PhiSpec {
    name: String,
    phi: ScalarFn,
    conjugate: ScalarFn,
}

impl fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiSpec").field("name", &self.name).finish_non_exhaustive()
    }
}

impl PhiSpec {
    /// Builds a user-supplied spec after checking `φ(1) = 0` and midpoint
    /// convexity on a 100-point grid over `[0, 10]`.
    pub fn new(
        name: impl Into<String>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        conjugate: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self { name: name.into(), phi: Arc::new(phi), conjugate: Arc::new(conjugate) };
        let at_one = spec.phi(1.0);
        if at_one.abs() > 1e-12 {
            return Err(Error::DomainError(format!("phi(1) = {at_one}, expected 0")));
        }
        let grid: Vec<f64> = (0..100).map(|k| 10.0 * k as f64 / 99.0).collect();
        for w in grid.windows(3) {
            let mid = spec.phi(w[1]);
            let chord = 0.5 * (spec.phi(w[0]) + spec.phi(w[2]));
            if !(mid <= chord + 1e-12) {
                return Err(Error::DomainError(format!("phi is not convex near {}", w[1])));
            }
        }
        Ok(spec)
    }

    /// `φ(t) = t log t - t + 1`, giving relative entropy.
    pub fn kl() -> Self {
        Self {
            name: "kl".into(),
            phi: Arc::new(|t: f64| if t > 0.0 { t * t.ln() - t + 1.0 } else { 1.0 }),
            conjugate: Arc::new(|t: f64| t.exp_m1()),
        }
    }

    /// `φ(t) = (t - 1)² / 2`.
    pub fn chi_squared() -> Self {
        Self {
            name: "chi2".into(),
            phi: Arc::new(|t: f64| 0.5 * (t - 1.0) * (t - 1.0)),
            conjugate: Arc::new(|t: f64| if t >= -1.0 { t + 0.5 * t * t } else { -0.5 }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    pub fn conjugate(&self, t: f64) -> f64 {
        (self.conjugate)(t)
    }
}

/// `Σ_s q(s) φ(p(s)/q(s))`; infinite when `p(s) > 0 = q(s)` for some `s`.
pub fn phi_divergence(spec: &PhiSpec, p: &Dist, q: &Dist) -> Result<ExtReal> {
    check_len(p.len(), q.len())?;
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q.iter()) {
        if b <= 0.0 {
            if a > 0.0 {
                return Ok(ExtReal::Infinite);
            }
            continue;
        }
        acc += b * spec.phi(a / b);
    }
    Ok(ExtReal::Finite(acc.max(0.0)))
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::RhoOutOfRange(rho))
    }
}

/// `(1/(ρ(1-ρ))) Σ_s p(s) [1 - (q(s)/p(s))^ρ]`, skipping states with
/// `p(s) = 0`.
pub fn rho_divergence(rho: f64, p: &Dist, q: &Dist) -> Result<f64> {
    check_rho(rho)?;
    check_len(p.len(), q.len())?;
    Ok(rho_slices(rho, p.as_slice(), q.as_slice()))
}

/// Uses `expm1` so that small `ρ` keeps full relative precision.
pub(crate) fn rho_slices(rho: f64, p: &[f64], q: &[f64]) -> f64 {
    let scale = rho * (1.0 - rho);
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        acc += if b <= 0.0 { a } else { -a * (rho * (b / a).ln()).exp_m1() };
    }
    (acc / scale).max(0.0)
}

/// A convex generator `G` of Legendre type on (a subset of) the positive
/// orthant.
pub trait BregmanGenerator: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Defaults to central differences of the gradient.
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let h = tol::FD_STEP;
        let mut out = DMatrix::zeros(n, n);
        let mut probe = x.to_vec();
        for j in 0..n {
            probe[j] = x[j] + h;
            let up = self.gradient(&probe);
            probe[j] = x[j] - h;
            let down = self.gradient(&probe);
            probe[j] = x[j];
            for i in 0..n {
                out[(i, j)] = (up[i] - down[i]) / (2.0 * h);
            }
        }
        0.5 * (&out + out.transpose())
    }

    /// Whether `∇G` is defined at `x`.
    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }

    /// `G(x) = Σ g(x_s)` for a scalar `g`. Separable generators allow
    /// coordinates where both arguments vanish to be dropped.
    fn separable(&self) -> bool {
        false
    }
}

/// `G(z) = Σ (z log z - z)`; its Bregman divergence on the simplex is
/// relative entropy.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegativeEntropy;

impl BregmanGenerator for NegativeEntropy {
    fn name(&self) -> &str {
        "negative-entropy"
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&z| if z > 0.0 { z * z.ln() - z } else { 0.0 }).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|z| z.ln()).collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(x.len(), x.iter().map(|z| 1.0 / z)))
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|&z| z > 0.0 && z.is_finite())
    }

    fn separable(&self) -> bool {
        true
    }
}

/// `G(z) = ½‖z‖²`; its Bregman divergence is half the squared distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfSquaredNorm;

impl BregmanGenerator for HalfSquaredNorm {
    fn name(&self) -> &str {
        "half-squared-norm"
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|z| z * z).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(x.len(), x.len())
    }

    fn separable(&self) -> bool {
        true
    }
}

/// Coordinates kept when evaluating a generator on a set of points: all of
/// them, or for separable generators those where some point has mass.
pub(crate) fn active_coords(g: &dyn BregmanGenerator, points: &[&[f64]]) -> Vec<usize> {
    let n = points[0].len();
    if !g.separable() {
        return (0..n).collect();
    }
    (0..n).filter(|&s| points.iter().any(|p| p[s] > 0.0)).collect()
}

pub(crate) fn restrict(x: &[f64], coords: &[usize]) -> Vec<f64> {
    coords.iter().map(|&s| x[s]).collect()
}

/// Raw Bregman divergence on already-restricted coordinates.
pub(crate) fn bregman_raw(g: &dyn BregmanGenerator, x: &[f64], y: &[f64]) -> f64 {
    let grad = g.gradient(y);
    let inner: f64 = grad.iter().zip(x.iter().zip(y)).map(|(d, (a, b))| d * (a - b)).sum();
    g.value(x) - g.value(y) - inner
}

/// `G(x) - G(y) - ⟨∇G(y), x - y⟩`.
pub fn bregman(g: &dyn BregmanGenerator, x: &Dist, y: &Dist) -> Result<f64> {
    check_len(x.len(), y.len())?;
    let coords = active_coords(g, &[x.as_slice(), y.as_slice()]);
    let (xr, yr) = (restrict(x.as_slice(), &coords), restrict(y.as_slice(), &coords));
    if !g.in_domain(&yr) {
        return Err(Error::DomainError(format!("second argument lies on the boundary of the {} domain", g.name())));
    }
    Ok(bregman_raw(g, &xr, &yr).max(0.0))
}

/// Spot-checks strict convexity of a generator: `D_G(x‖y) > 0` on 100
/// random pairs of full-support points of dimension `dim`.
pub fn check_generator(g: &dyn BregmanGenerator, dim: usize) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..100 {
        let x = normalize(&(0..dim).map(|_| rng.random_range(0.05..1.0)).collect::<Vec<_>>())?;
        let y = normalize(&(0..dim).map(|_| rng.random_range(0.05..1.0)).collect::<Vec<_>>())?;
        if x.sup_distance(&y) < 1e-6 {
            continue;
        }
        let d = bregman(g, &x, &y)?;
        if !(d > 0.0) {
            return Err(Error::DomainError(format!("{} is not strictly convex", g.name())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Dist {
        Dist::new(v.to_vec()).unwrap()
    }

    fn full_support(n: usize) -> impl Strategy<Value = Dist> {
        prop::collection::vec(0.02f64..1.0, n).prop_map(|v| normalize(&v).unwrap())
    }

    fn brute_force_kl(p: &[f64], q: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..p.len() {
            if p[i] != 0.0 {
                total += p[i] * p[i].ln() - p[i] * q[i].ln();
            }
        }
        total
    }

    #[test]
    fn kl_examples() {
        let p = d(&[0.3, 0.7]);
        assert_eq!(kl(&p, &p).unwrap(), ExtReal::Finite(0.0));
        let v = kl(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap().finite().unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap(), ExtReal::Infinite);
        assert!(kl(&d(&[1.0]), &p).is_err());
    }

    #[test]
    fn ext_real_orders_infinity_last() {
        assert!(ExtReal::Finite(1e300) < ExtReal::Infinite);
        assert_eq!(ExtReal::Infinite.to_string(), "inf");
    }

    #[test]
    fn chi_squared_two_state_value() {
        // Likelihood ratios 1.2 and 0.8 each contribute 0.5 * 0.04 / 2.
        let spec = PhiSpec::chi_squared();
        let v = phi_divergence(&spec, &d(&[0.6, 0.4]), &d(&[0.5, 0.5])).unwrap().to_f64();
        let brute: f64 =
            [(0.6, 0.5), (0.4, 0.5)].iter().map(|&(a, b): &(f64, f64)| b * (a / b - 1.0).powi(2) / 2.0).sum();
        assert!((v - brute).abs() < 1e-15);
        assert!((v - 0.02).abs() < 1e-15);
    }

    #[test]
    fn phi_divergence_zero_on_identity_and_infinite_off_support() {
        for spec in [PhiSpec::kl(), PhiSpec::chi_squared()] {
            let p = d(&[0.2, 0.5, 0.3]);
            assert_eq!(phi_divergence(&spec, &p, &p).unwrap(), ExtReal::Finite(0.0));
            assert_eq!(phi_divergence(&spec, &d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap(), ExtReal::Infinite);
        }
    }

    #[test]
    fn user_phi_spec_is_validated() {
        assert!(PhiSpec::new("shifted", |t| t * t, |t| t * t / 4.0).is_err());
        assert!(PhiSpec::new("concave", |t: f64| -(t - 1.0).powi(2), |t| t).is_err());
        let tv = PhiSpec::new("tv", |t: f64| 0.5 * (t - 1.0).abs(), |t: f64| t.max(-0.5)).unwrap();
        assert_eq!(tv.name(), "tv");
    }

    #[test]
    fn rho_divergence_examples() {
        let p = d(&[0.5, 0.5]);
        assert_eq!(rho_divergence(0.3, &p, &p).unwrap(), 0.0);
        let q = d(&[0.8, 0.2]);
        let hellinger = 4.0 * (1.0 - (0.4f64.sqrt() + 0.1f64.sqrt()));
        assert!((rho_divergence(0.5, &p, &q).unwrap() - hellinger).abs() < 1e-14);
        assert!(matches!(rho_divergence(0.0, &p, &q), Err(Error::RhoOutOfRange(_))));
        assert!(matches!(rho_divergence(1.0, &p, &q), Err(Error::RhoOutOfRange(_))));
        // A zero of p contributes nothing; a zero of q contributes p(s).
        let v = rho_divergence(0.5, &d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
    }

    #[test]
    fn bregman_examples() {
        let x = d(&[0.2, 0.8]);
        assert_eq!(bregman(&NegativeEntropy, &x, &x).unwrap(), 0.0);
        let v = bregman(&HalfSquaredNorm, &d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(matches!(bregman(&NegativeEntropy, &d(&[0.5, 0.5]), &d(&[1.0, 0.0])), Err(Error::DomainError(_))));
        // Shared zeros are dropped for separable generators.
        let v = bregman(&NegativeEntropy, &d(&[1.0, 0.0]), &d(&[1.0, 0.0])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn built_in_generators_are_strictly_convex() {
        check_generator(&NegativeEntropy, 4).unwrap();
        check_generator(&HalfSquaredNorm, 4).unwrap();
    }

    #[derive(Debug)]
    struct Linear;
    impl BregmanGenerator for Linear {
        fn name(&self) -> &str {
            "linear"
        }
        fn value(&self, x: &[f64]) -> f64 {
            x.iter().sum()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![1.0; x.len()]
        }
    }

    #[test]
    fn linear_generator_fails_the_convexity_check() {
        assert!(check_generator(&Linear, 3).is_err());
    }

    #[test]
    fn default_hessian_matches_analytic() {
        #[derive(Debug)]
        struct Fd;
        impl BregmanGenerator for Fd {
            fn name(&self) -> &str {
                "fd"
            }
            fn value(&self, x: &[f64]) -> f64 {
                NegativeEntropy.value(x)
            }
            fn gradient(&self, x: &[f64]) -> Vec<f64> {
                NegativeEntropy.gradient(x)
            }
        }
        let x = [0.2, 0.3, 0.5];
        let diff = Fd.hessian(&x) - NegativeEntropy.hessian(&x);
        assert!(diff.abs().max() < 1e-6);
    }

    fn grid_conjugate(spec: &PhiSpec, t: f64) -> f64 {
        (0..=300_000).map(|k| k as f64 * 1e-4).map(|x| t * x - spec.phi(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn conjugates_match_numeric_supremum() {
        for spec in [PhiSpec::kl(), PhiSpec::chi_squared()] {
            for k in 0..20 {
                let t = -3.0 + 6.0 * k as f64 / 19.0;
                let err = (spec.conjugate(t) - grid_conjugate(&spec, t)).abs();
                assert!(err < 1e-6, "{} at t = {t}: {err}", spec.name());
            }
        }
    }

    proptest! {
        #[test]
        fn kl_matches_brute_force_and_phi_form(p in full_support(4), q in full_support(4)) {
            let v = kl(&p, &q).unwrap().to_f64();
            prop_assert!((v - brute_force_kl(p.as_slice(), q.as_slice())).abs() < 1e-12);
            let via_phi = phi_divergence(&PhiSpec::kl(), &p, &q).unwrap().to_f64();
            prop_assert!((v - via_phi).abs() < 1e-12);
        }

        #[test]
        fn negative_entropy_bregman_is_kl(p in full_support(5), q in full_support(5)) {
            let a = bregman(&NegativeEntropy, &p, &q).unwrap();
            prop_assert!((a - kl(&p, &q).unwrap().to_f64()).abs() < 1e-10);
        }

        #[test]
        fn half_squared_norm_bregman_is_half_distance(p in full_support(3), q in full_support(3)) {
            let a = bregman(&HalfSquaredNorm, &p, &q).unwrap();
            let direct: f64 = p.iter().zip(q.iter()).map(|(x, y)| 0.5 * (x - y) * (x - y)).sum();
            prop_assert!((a - direct).abs() < 1e-14);
        }

        #[test]
        fn divergences_are_nonnegative_and_separate(p in full_support(4), q in full_support(4)) {
            let vals = [
                kl(&p, &q).unwrap().to_f64(),
                phi_divergence(&PhiSpec::chi_squared(), &p, &q).unwrap().to_f64(),
                rho_divergence(0.4, &p, &q).unwrap(),
                bregman(&HalfSquaredNorm, &p, &q).unwrap(),
            ];
            for v in vals {
                prop_assert!(v >= 0.0);
                if p.sup_distance(&q) > 1e-3 {
                    prop_assert!(v > 1e-10);
                }
            }
            prop_assert!(kl(&p, &p).unwrap().to_f64() <= 1e-10);
            prop_assert!(rho_divergence(0.4, &q, &q).unwrap() <= 1e-10);
        }

        #[test]
        fn kl_is_jointly_convex(
            p1 in full_support(3), p2 in full_support(3),
            q1 in full_support(3), q2 in full_support(3),
        ) {
            let pm = crate::simplex::convex_combine(&[0.5, 0.5], &[p1.clone(), p2.clone()]).unwrap();
            let qm = crate::simplex::convex_combine(&[0.5, 0.5], &[q1.clone(), q2.clone()]).unwrap();
            let lhs = kl(&pm, &qm).unwrap().to_f64();
            let rhs = 0.5 * kl(&p1, &q1).unwrap().to_f64() + 0.5 * kl(&p2, &q2).unwrap().to_f64();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn kl_is_convex_in_second_argument(p in full_support(3), q1 in full_support(3), q2 in full_support(3)) {
            let qm = crate::simplex::convex_combine(&[0.5, 0.5], &[q1.clone(), q2.clone()]).unwrap();
            let lhs = kl(&p, &qm).unwrap().to_f64();
            let rhs = 0.5 * kl(&p, &q1).unwrap().to_f64() + 0.5 * kl(&p, &q2).unwrap().to_f64();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn small_rho_approaches_kl(p in full_support(4), q in full_support(4)) {
            let r = rho_divergence(1e-4, &p, &q).unwrap();
            prop_assert!((r - kl(&p, &q).unwrap().to_f64()).abs() <= 1e-3);
        }
    }
}
