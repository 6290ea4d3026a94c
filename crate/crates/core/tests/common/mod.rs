//! Independent numerical oracles shared by the integration suites. None of
//! them call into the crate's solvers.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use robagg_core::{Dist, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the simplex, mixed with `floor` times the uniform
/// distribution to keep every state away from zero.
pub fn random_dist(rng: &mut impl Rng, n: usize, floor: f64) -> Dist {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    Dist::new(raw.iter().map(|r| (1.0 - floor) * r / total + floor / n as f64).collect()).unwrap()
}

pub fn random_utility(rng: &mut impl Rng, n: usize, spread: f64) -> StateVector {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        let u = StateVector::new(v).unwrap();
        if u.max() - u.min() > 1e-2 * spread {
            return u;
        }
    }
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            if *a == 0.0 {
                0.0
            } else if *b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

pub fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Golden-section minimization of a unimodal function.
pub fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for x in [lo, hi] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Boundary of `{x : g(x) ≤ 0}` between an inside point and an outside point.
fn boundary(g: &impl Fn(f64) -> f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if g(mid) <= 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// `{x ∈ [lo, hi] : g(x) ≤ 0}` for convex `g`, or `None` when empty.
pub fn sublevel_interval(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let (x0, g0) = golden_min(&g, lo, hi, 1e-13);
    if g0 > 0.0 {
        return None;
    }
    let left = if g(lo) <= 0.0 { lo } else { boundary(&g, x0, lo) };
    let right = if g(hi) <= 0.0 { hi } else { boundary(&g, x0, hi) };
    Some((left, right))
}

/// Minimizes a convex `f(q)` over `{q ∈ Δ_2 : excess(q) ≤ 0}` with convex
/// `excess`, parametrized by `q = (x, 1 - x)`.
pub fn min_on_segment(f: impl Fn(&[f64]) -> f64, excess: impl Fn(&[f64]) -> f64) -> Option<Vec<f64>> {
    let (a, b) = sublevel_interval(|x| excess(&[x, 1.0 - x]), 0.0, 1.0)?;
    let (x, _) = golden_min(|x| f(&[x, 1.0 - x]), a, b, 1e-14);
    Some(vec![x, 1.0 - x])
}

/// Minimizes a convex `f(q)` over `{q ∈ Δ_3 : excess(q) ≤ 0}` by nested
/// golden-section searches: over the first coordinate outside, and over
/// the feasible slice of the second coordinate inside. Partial
/// minimization of a jointly convex function keeps the outer problem
/// convex.
pub fn min_on_triangle(f: impl Fn(&[f64]) -> f64, excess: impl Fn(&[f64]) -> f64) -> Option<Vec<f64>> {
    let slice = |x: f64| {
        let top = (1.0 - x).max(0.0);
        sublevel_interval(|y| excess(&[x, y, (1.0 - x - y).max(0.0)]), 0.0, top)
    };
    let slice_excess = |x: f64| {
        let top = (1.0 - x).max(0.0);
        golden_min(|y| excess(&[x, y, (1.0 - x - y).max(0.0)]), 0.0, top, 1e-13).1
    };
    let (a, b) = sublevel_interval(slice_excess, 0.0, 1.0)?;
    let inner = |x: f64| match slice(x) {
        Some((lo, hi)) => golden_min(|y| f(&[x, y, (1.0 - x - y).max(0.0)]), lo, hi, 1e-13),
        None => (f64::NAN, f64::INFINITY),
    };
    let (x, _) = golden_min(|x| inner(x).1, a, b, 1e-12);
    let (y, _) = inner(x);
    Some(vec![x, y, (1.0 - x - y).max(0.0)])
}

/// Best feasible point of a regular grid over the simplex (2 or 3 states).
pub fn grid_min(
    n: usize,
    step: f64,
    f: impl Fn(&[f64]) -> f64,
    excess: impl Fn(&[f64]) -> f64,
) -> Option<(Vec<f64>, f64)> {
    let m = (1.0 / step).round() as usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |q: Vec<f64>| {
        if excess(&q) <= 0.0 {
            let v = f(&q);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((q, v));
            }
        }
    };
    match n {
        2 => (0..=m).for_each(|i| {
            let x = i as f64 / m as f64;
            consider(vec![x, 1.0 - x]);
        }),
        3 => (0..=m).for_each(|i| {
            (0..=m - i).for_each(|j| {
                let (x, y) = (i as f64 / m as f64, j as f64 / m as f64);
                consider(vec![x, y, (1.0 - x - y).max(0.0)]);
            })
        }),
        _ => panic!("grid oracle supports two or three states"),
    }
    best
}

/// Nelder–Mead minimization with adaptive restarts.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64, tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut best = (start.to_vec(), f(start));
    for restart in 0..8 {
        let scale = step * 0.1f64.powi(restart.min(4));
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![best.clone()];
        for k in 0..dim {
            let mut x = best.0.clone();
            x[k] += scale;
            let v = f(&x);
            simplex.push((x, v));
        }
        for _ in 0..max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if (simplex[dim].1 - simplex[0].1).abs() <= tol * (1.0 + simplex[0].1.abs()) {
                break;
            }
            let centroid: Vec<f64> =
                (0..dim).map(|k| simplex[..dim].iter().map(|p| p.0[k]).sum::<f64>() / dim as f64).collect();
            let towards = |t: f64| -> Vec<f64> {
                (0..dim).map(|k| centroid[k] + t * (simplex[dim].0[k] - centroid[k])).collect()
            };
            let xr = towards(-1.0);
            let fr = f(&xr);
            if fr < simplex[0].1 {
                let xe = towards(-2.0);
                let fe = f(&xe);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
            } else {
                let xc = if fr < simplex[dim].1 { towards(-0.5) } else { towards(0.5) };
                let fc = f(&xc);
                if fc < simplex[dim].1.min(fr) {
                    simplex[dim] = (xc, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for p in simplex.iter_mut().skip(1) {
                        p.0 = (0..dim).map(|k| anchor[k] + 0.5 * (p.0[k] - anchor[k])).collect();
                        p.1 = f(&p.0);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best.1 {
            best = simplex[0].clone();
        }
    }
    best
}

/// Softmax map from `R^{n-1}` to the interior of the simplex, with the
/// first logit pinned at zero.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = std::iter::once(0.0).chain(z.iter().copied()).collect();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let t: f64 = e.iter().sum();
    e.iter().map(|v| v / t).collect()
}

pub fn logits(p: &[f64]) -> Vec<f64> {
    p[1..].iter().map(|v| (v / p[0]).ln()).collect()
}

/// A chain of distributions, each first-order stochastically dominating the
/// previous, built by moving mass one state up at a time.
pub fn fosd_chain(rng: &mut impl Rng, states: usize, len: usize) -> Vec<Dist> {
    let mut current = random_dist(rng, states, 0.3).into_vec();
    let mut chain = vec![Dist::new(current.clone()).unwrap()];
    while chain.len() < len {
        let s = rng.random_range(0..states - 1);
        let moved = current[s] * rng.random_range(0.2..0.8);
        current[s] -= moved;
        current[s + 1] += moved;
        chain.push(Dist::new(current.clone()).unwrap());
    }
    chain
}

/// Minimizes `f` over the simplex by repeatedly moving mass between pairs of
/// states with an exact line search on each pair.
pub fn pairwise_descent(f: impl Fn(&[f64]) -> f64, start: &[f64], sweeps: usize) -> Vec<f64> {
    let n = start.len();
    let mut p = start.to_vec();
    let mut current = f(&p);
    for _ in 0..sweeps {
        let before = current;
        for i in 0..n {
            for j in i + 1..n {
                let mass = p[i] + p[j];
                if mass <= 0.0 {
                    continue;
                }
                let at = |t: f64| {
                    let mut trial = p.clone();
                    trial[i] = t;
                    trial[j] = mass - t;
                    f(&trial)
                };
                let (t, value) = golden_min(at, 0.0, mass, 1e-15);
                if value < current {
                    p[i] = t;
                    p[j] = mass - t;
                    current = value;
                }
            }
        }
        if before - current <= 1e-16 * (1.0 + current.abs()) {
            break;
        }
    }
    p
}
