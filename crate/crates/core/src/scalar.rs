//! One-dimensional root finding and maximization.
//!
//! Root searches use bisection only; brackets grow geometrically, at most 60
//! times, before giving up with [`Error::NoRoot`].

use crate::error::{Error, Result};

/// Maximum number of bracket expansions.
pub const MAX_EXPANSIONS: usize = 60;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Hard limits a bracket may approach but never cross.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub floor: f64,
    pub ceil: f64,
}

impl Limits {
    pub const UNBOUNDED: Limits = Limits { floor: f64::NEG_INFINITY, ceil: f64::INFINITY };
}

fn differ(a: f64, b: f64) -> bool {
    a == 0.0 || b == 0.0 || (a < 0.0) != (b < 0.0)
}

/// Widens `[lo, hi]` until `f` changes sign across it. Each expansion doubles
/// the width on unbounded sides and halves the remaining gap to a finite
/// limit otherwise.
pub fn expand_bracket(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, limits: Limits) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("empty bracket [{lo}, {hi}]")));
    }
    let (mut flo, mut fhi) = (f(lo), f(hi));
    for _ in 0..=MAX_EXPANSIONS {
        if flo.is_nan() || fhi.is_nan() {
            return Err(Error::NoRoot);
        }
        if differ(flo, fhi) {
            return Ok((lo, hi));
        }
        let width = hi - lo;
        lo = if limits.floor.is_finite() { limits.floor + 0.5 * (lo - limits.floor) } else { lo - width };
        hi = if limits.ceil.is_finite() { limits.ceil - 0.5 * (limits.ceil - hi) } else { hi + width };
        flo = f(lo);
        fhi = f(hi);
    }
    Err(Error::NoRoot)
}

/// Bisection on a bracket with a sign change, stopping when the bracket is
/// narrower than `xtol` or a zero is hit exactly.
pub fn bisect(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !differ(flo, fhi) || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoRoot);
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if differ(flo, fm) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expands the bracket as needed, then bisects.
pub fn find_root(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, limits: Limits, xtol: f64) -> Result<f64> {
    let (lo, hi) = expand_bracket(&mut f, lo, hi, limits)?;
    bisect(f, lo, hi, xtol)
}

/// Golden-section search for the maximum of a unimodal function on
/// `[lo, hi]`. Returns the maximizer and the value there.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)].into_iter().fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_square_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert_eq!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10), Err(Error::NoRoot));
    }

    #[test]
    fn expansion_reaches_distant_root() {
        let r = find_root(|x| x - 1e6, 0.0, 1.0, Limits::UNBOUNDED, 1e-9).unwrap();
        assert!((r - 1e6).abs() < 1e-6);
    }

    #[test]
    fn expansion_respects_limits() {
        let limits = Limits { floor: 0.0, ceil: 1.0 };
        let r = find_root(|x| x - 0.999_999, 0.1, 0.2, limits, 1e-13).unwrap();
        assert!((r - 0.999_999).abs() < 1e-12);
        assert_eq!(find_root(|x| x - 2.0, 0.1, 0.2, limits, 1e-12), Err(Error::NoRoot));
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 1.0, -2.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_section_handles_monotone_functions() {
        let (x, _) = golden_max(|x| x, 0.0, 1.0, 1e-12);
        assert!((x - 1.0).abs() < 1e-10);
    }
}
