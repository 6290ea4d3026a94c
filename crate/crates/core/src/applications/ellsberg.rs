//! Betting on an ambiguous urn (Urn I, unknown composition) versus a risky
//! urn (Urn II, known 50/50) on behalf of two individuals.

use crate::criteria::{multiplier_value, Lambda};
use crate::error::{Error, Result};
use crate::simplex::{expectation, Dist, StateVector};

/// Values differing by less than this are reported as indifferent.
const INDIFFERENCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EllsbergReport {
    /// Probability of red under the social belief `μ p1 + (1 - μ) p2`.
    pub red_probability: f64,
    /// `(name, value)` for `fR`, `fB`, `πR`, `πB`, in that order.
    pub values: Vec<(&'static str, f64)>,
    /// Indifference classes, best first.
    pub ranking: Vec<Vec<&'static str>>,
}

impl EllsbergReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    /// `πR ∼ πB ≻ fR ∼ fB`.
    pub fn is_ambiguity_averse(&self) -> bool {
        self.ranking == vec![vec!["piR", "piB"], vec!["fR", "fB"]]
    }

    pub fn is_indifferent(&self) -> bool {
        self.ranking.len() == 1
    }

    /// Human-readable ranking such as `piR ~ piB > fR ~ fB`.
    pub fn ranking_string(&self) -> String {
        self.ranking.iter().map(|c| c.join(" ~ ")).collect::<Vec<_>>().join(" > ")
    }
}

/// Evaluates the four bets with `u0(x) = x / 100`: `fR = (100, 0)` and
/// `fB = (0, 100)` on Urn I, and the 50/50 lottery for either color on
/// Urn II, which pays its expected utility in every state.
pub fn ellsberg_run(lambda: Lambda, p1: f64, p2: f64, mu: f64) -> Result<EllsbergReport> {
    for (name, v) in [("p1", p1), ("p2", p2), ("mu", mu)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::DomainError(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let red = mu * p1 + (1.0 - mu) * p2;
    let q = Dist::new(vec![red, 1.0 - red])?;
    let eval = |u: &StateVector| match lambda {
        Lambda::Finite(l) => multiplier_value(u, &q, l),
        Lambda::Infinite => expectation(&q, u),
    };
    let lottery = 0.5 * 1.0 + 0.5 * 0.0;
    let values = vec![
        ("fR", eval(&StateVector::new(vec![1.0, 0.0])?)?),
        ("fB", eval(&StateVector::new(vec![0.0, 1.0])?)?),
        ("piR", eval(&StateVector::constant(2, lottery))?),
        ("piB", eval(&StateVector::constant(2, lottery))?),
    ];
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].1.total_cmp(&values[a].1).then(a.cmp(&b)));
    let mut ranking: Vec<Vec<&'static str>> = Vec::new();
    let mut anchor = f64::NAN;
    for k in order {
        let (name, v) = values[k];
        match ranking.last_mut() {
            Some(class) if (anchor - v).abs() <= INDIFFERENCE => class.push(name),
            _ => {
                ranking.push(vec![name]);
                anchor = v;
            }
        }
    }
    for class in &mut ranking {
        class.sort_by_key(|n| ["piR", "piB", "fR", "fB"].iter().position(|x| x == n));
    }
    Ok(EllsbergReport { red_probability: red, values, ranking })
}
