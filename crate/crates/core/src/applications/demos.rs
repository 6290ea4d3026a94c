//! Numerical demonstrations of the two impossibility results: convex
//! combinations of beliefs never help an entropic planner, and a welfare-
//! dominant belief must belong to a single individual.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::aggregation::welfare_dominant_index;
use crate::criteria::{multiplier_value, Lambda};
use crate::error::{Error, Result};
use crate::simplex::{check_len, convex_combine, expectation, Dist, StateVector};

/// Sampled hull values within this of the smallest generator value count
/// as attaining it.
const TIE: f64 = 1e-12;

fn value(u: &StateVector, q: &Dist, lambda: Lambda) -> Result<f64> {
    match lambda {
        Lambda::Finite(l) => multiplier_value(u, q, l),
        Lambda::Infinite => expectation(q, u),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    /// Entropic value over the generators alone.
    pub finite_value: f64,
    /// Smallest value over the generators and the sampled hull points.
    pub hull_value: f64,
    /// `finite_value - hull_value`, never negative.
    pub max_gap: f64,
    /// Generator attaining the finite value.
    pub minimizer: usize,
    /// Whether the overall minimizer found was a generator (up to ties).
    pub minimizer_is_generator: bool,
    pub samples: usize,
}

/// Compares the entropic value over a finite set of beliefs with the value
/// over its convex hull, sampled uniformly (flat Dirichlet).
pub fn demo_invariance<R: Rng + ?Sized>(
    u0: &StateVector,
    beliefs: &[Dist],
    lambda: Lambda,
    samples: usize,
    rng: &mut R,
) -> Result<InvarianceReport> {
    if beliefs.is_empty() {
        return Err(Error::EmptyList);
    }
    for b in beliefs {
        check_len(u0.len(), b.len())?;
    }
    let values = beliefs.iter().map(|b| value(u0, b, lambda)).collect::<Result<Vec<f64>>>()?;
    let mut minimizer = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[minimizer] {
            minimizer = i;
        }
    }
    let finite_value = values[minimizer];
    let mut hull_value = finite_value;
    let mut sampled_best = f64::INFINITY;
    for _ in 0..samples {
        let raw: Vec<f64> = (0..beliefs.len()).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let q = convex_combine(&w, beliefs)?;
        let v = value(u0, &q, lambda)?;
        sampled_best = sampled_best.min(v);
        hull_value = hull_value.min(v);
    }
    Ok(InvarianceReport {
        finite_value,
        hull_value,
        max_gap: (finite_value - hull_value).max(0.0),
        minimizer,
        minimizer_is_generator: sampled_best >= finite_value - TIE,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictatorReport {
    /// Index of the selected candidate, the probability dictator.
    pub selected: usize,
    /// `table[c][a]`: value of act `a` under candidate `c`.
    pub table: Vec<Vec<f64>>,
    /// `min_{c, a} table[selected][a] - table[c][a]`; nonnegative when the
    /// selected belief weakly dominates.
    pub dominance_margin: f64,
}

/// Selects the FOSD-greatest candidate and tabulates the value of each
/// monotone act under every candidate.
pub fn demo_dictator(candidates: &[Dist], acts: &[StateVector], lambda: Lambda) -> Result<DictatorReport> {
    let selected = welfare_dominant_index(candidates)?;
    for a in acts {
        check_len(candidates[0].len(), a.len())?;
        if !a.is_monotone() {
            return Err(Error::InvalidInput("dictator panels need acts nondecreasing in the state order".into()));
        }
    }
    let table = candidates
        .iter()
        .map(|c| acts.iter().map(|a| value(a, c, lambda)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut margin = f64::INFINITY;
    for row in &table {
        for (a, v) in row.iter().enumerate() {
            margin = margin.min(table[selected][a] - v);
        }
    }
    Ok(DictatorReport { selected, table, dominance_margin: margin })
}

/// Random acts nondecreasing in the state order, with increments drawn
/// uniformly from `[0, 1)`.
pub fn monotone_acts<R: Rng + ?Sized>(states: usize, count: usize, rng: &mut R) -> Vec<StateVector> {
    (0..count)
        .map(|_| {
            let mut level = rng.random_range(-1.0..1.0);
            let v: Vec<f64> = (0..states)
                .map(|_| {
                    level += rng.random::<f64>();
                    level
                })
                .collect();
            StateVector::new(v).expect("finite increments")
        })
        .collect()
}
