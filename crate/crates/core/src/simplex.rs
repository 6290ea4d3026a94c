//! Finite state spaces and probability vectors over them.
//!
//! The declaration order of a [`StateSpace`] doubles as the common order on
//! states used by first-order stochastic dominance: later states are
//! "higher".

use std::ops::Index;

use crate::error::{Error, Result};
use crate::tol;

/// An ordered, nonempty list of distinct state labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyList);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidInput(format!("duplicate state label '{l}'")));
            }
        }
        Ok(Self { labels })
    }

    /// States labelled `s1..sn`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("s{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn dist(&self, values: Vec<f64>) -> Result<Dist> {
        check_len(self.len(), values.len())?;
        Dist::new(values)
    }

    pub fn vector(&self, values: Vec<f64>) -> Result<StateVector> {
        check_len(self.len(), values.len())?;
        StateVector::new(values)
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// A probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist(Vec<f64>);

impl Dist {
    /// Validates without renormalizing. Entries in `[-1e-10, 0)` are clamped
    /// to zero; anything more negative is rejected.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyList);
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidDist(format!("non-finite entry at {i}")));
            }
            if *v < 0.0 {
                if *v < -tol::SIMPLEX {
                    return Err(Error::NegativeMass { index: i, value: *v });
                }
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tol::SIMPLEX {
            return Err(Error::InvalidDist(format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Builds a distribution from a vector that is known to lie on the
    /// simplex up to rounding; renormalizes and clamps tiny negatives.
    pub(crate) fn from_solver(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        values.iter_mut().for_each(|v| *v /= sum);
        Self(values)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }

    /// `true` when every entry is strictly positive.
    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    pub fn sup_distance(&self, other: &Dist) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Index<usize> for Dist {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A real number per state: utilities, payoffs, marginal-utility ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyList);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry at {i}")));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.max() - self.min() == 0.0
    }

    /// Nondecreasing along the state order.
    pub fn is_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&x| f(x)).collect())
    }
}

impl Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Divides nonnegative masses by their total.
pub fn normalize(raw: &[f64]) -> Result<Dist> {
    if raw.is_empty() {
        return Err(Error::EmptyList);
    }
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| **v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeMass { index, value });
    }
    let sum: f64 = raw.iter().sum();
    if sum == 0.0 {
        return Err(Error::AllZero);
    }
    if !sum.is_finite() {
        return Err(Error::InvalidInput("masses sum to infinity".into()));
    }
    Ok(Dist(raw.iter().map(|v| v / sum).collect()))
}

pub fn expectation(p: &Dist, x: &StateVector) -> Result<f64> {
    check_len(p.len(), x.len())?;
    Ok(p.0.iter().zip(&x.0).map(|(a, b)| a * b).sum())
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn shannon_entropy(q: &Dist) -> f64 {
    -q.0.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FosdOrder {
    PDominates,
    QDominates,
    Equal,
    Incomparable,
}

/// Compares upper-tail masses `Σ_{s ≥ t}` at every threshold `t`.
pub fn fosd_compare(p: &Dist, q: &Dist) -> Result<FosdOrder> {
    check_len(p.len(), q.len())?;
    const EPS: f64 = 1e-12;
    let (mut tp, mut tq) = (0.0, 0.0);
    let (mut p_above, mut q_above) = (false, false);
    for s in (0..p.len()).rev() {
        tp += p[s];
        tq += q[s];
        if tp > tq + EPS {
            p_above = true;
        } else if tq > tp + EPS {
            q_above = true;
        }
    }
    Ok(match (p_above, q_above) {
        (false, false) => FosdOrder::Equal,
        (true, false) => FosdOrder::PDominates,
        (false, true) => FosdOrder::QDominates,
        (true, true) => FosdOrder::Incomparable,
    })
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
        return Err(Error::NegativeMass { index, value });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > tol::SIMPLEX {
        return Err(Error::WeightSumError { sum });
    }
    Ok(())
}

/// Pointwise mixture `Σ w_i d_i`.
pub fn convex_combine(weights: &[f64], dists: &[Dist]) -> Result<Dist> {
    if dists.is_empty() {
        return Err(Error::EmptyList);
    }
    check_len(dists.len(), weights.len())?;
    check_weights(weights)?;
    let n = dists[0].len();
    for d in dists {
        check_len(n, d.len())?;
    }
    Ok(Dist::from_solver(mix(weights, dists)))
}

/// Unchecked mixture used by solvers that already maintain the invariants.
pub(crate) fn mix(weights: &[f64], dists: &[Dist]) -> Vec<f64> {
    let n = dists[0].len();
    let mut out = vec![0.0; n];
    for (w, d) in weights.iter().zip(dists) {
        for (o, v) in out.iter_mut().zip(d.iter()) {
            *o += w * v;
        }
    }
    out
}
