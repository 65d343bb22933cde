//! Sign-change scanning and bisection.

use crate::scalar::Scalar;

/// `n` points spaced evenly in log scale over `[lo, hi]`, endpoints included.
pub fn log_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && lo > T::zero() && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::from_usize(n - 1).unwrap();
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (llo + step * T::from_usize(i).unwrap()).exp(),
        })
        .collect()
}

/// `n` evenly spaced points over `[lo, hi]`, endpoints included.
pub fn linear_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2);
    let step = (hi - lo) / T::from_usize(n - 1).unwrap();
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * T::from_usize(i).unwrap() }).collect()
}

/// A bracket `[lo, hi]` on which the scanned function changes sign (or `lo == hi`
/// when a grid point is an exact zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    pub lo: T,
    pub hi: T,
    pub f_lo: T,
    pub f_hi: T,
}

/// Scans `f` on `grid` and returns every bracket with a strict sign change
/// plus every exact zero. Points where `f` is not finite are skipped.
pub fn sign_changes<T: Scalar, F: Fn(T) -> Option<T>>(f: F, grid: &[T]) -> Vec<Bracket<T>> {
    let mut out = Vec::new();
    let mut prev: Option<(T, T)> = None;
    for &x in grid {
        let Some(fx) = f(x).filter(|v| v.is_finite()) else {
            prev = None;
            continue;
        };
        if fx == T::zero() {
            out.push(Bracket { lo: x, hi: x, f_lo: fx, f_hi: fx });
        } else if let Some((xp, fp)) = prev {
            if fp != T::zero() && (fp < T::zero()) != (fx < T::zero()) {
                out.push(Bracket { lo: xp, hi: x, f_lo: fp, f_hi: fx });
            }
        }
        prev = Some((x, fx));
    }
    out
}

/// Bisects a sign-change bracket until its width is at most `tol` (or the
/// interval cannot shrink further) and returns the final midpoint.
///
/// Midpoints where `f` fails are nudged towards the lower end.
pub fn bisect<T: Scalar, F: Fn(T) -> Option<T>>(f: F, bracket: Bracket<T>, tol: T) -> T {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    if lo == hi {
        return lo;
    }
    let lo_negative = bracket.f_lo < T::zero();
    let half = T::lit(0.5);
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mut mid = lo + half * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let mut fm = f(mid);
        if fm.is_none() {
            mid = lo + T::lit(0.499_999) * (hi - lo);
            fm = f(mid);
        }
        let Some(fm) = fm else { break };
        if fm == T::zero() {
            return mid;
        }
        if (fm < T::zero()) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + half * (hi - lo)
}

/// Golden-section maximisation of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<T: Scalar, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, tol: T) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}
