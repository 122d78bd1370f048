//! Largest real root of a cubic, for the density proximal step.

use crate::error::{Error, Result};

/// Largest real solution of a x^3 + b x^2 + c x + d = 0.
///
/// Closed form (Cardano / trigonometric) seeded, then Newton-polished; the
/// result is accurate to well below 1e-12 absolute on the solver's coefficient
/// family (a = 1, c = 0, d <= 0). Rejects a = 0.
pub fn root_plus(a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::DegenerateCubic);
    }
    Ok(root_plus_monic(b / a, c / a, d / a))
}

/// Largest real root of x^3 + b x^2 + c x + d.
#[inline]
pub(crate) fn root_plus_monic(b: f64, c: f64, d: f64) -> f64 {
    // depressed form y^3 + p y + q with x = y - b/3
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let y = if disc > 0.0 {
        // one real root
        let s = disc.sqrt();
        (-0.5 * q + s).cbrt() + (-0.5 * q - s).cbrt()
    } else if p == 0.0 {
        // triple root (p = q = 0 when disc <= 0 and p = 0)
        (-q).cbrt()
    } else {
        // three real roots; the largest is the cos(theta/3) branch
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        2.0 * r * (arg.acos() / 3.0).cos()
    };
    let mut x = y - shift;
    // one round of Newton polishing
    for _ in 0..3 {
        let f = ((x + b) * x + c) * x + d;
        let fp = (3.0 * x + 2.0 * b) * x + c;
        if fp == 0.0 || !f.is_finite() {
            break;
        }
        let step = f / fp;
        x -= step;
        if step.abs() <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Proximal root for the density update: largest real root of
/// x^3 + b x^2 + d with d <= 0. It is always >= 0 because the polynomial is
/// nonpositive at 0 and increasing beyond its last critical point.
///
/// On [max(0, -b), inf) the polynomial is increasing and convex and crosses
/// zero exactly once, and starting at max(0, -b) + cbrt(-d) it is already
/// nonnegative, so Newton descends monotonically onto the largest root. This
/// avoids the trigonometric branch in the per-cell hot loop.
#[inline]
pub(crate) fn root_plus_prox(b: f64, d: f64) -> f64 {
    debug_assert!(d <= 0.0);
    if d == 0.0 {
        // roots {0, 0, -b}
        return (-b).max(0.0);
    }
    let lo = (-b).max(0.0);
    let mut x = lo + (-d).cbrt();
    for _ in 0..32 {
        let f = (x + b) * x * x + d;
        let fp = (3.0 * x + 2.0 * b) * x;
        if fp <= 0.0 {
            break;
        }
        let step = f / fp;
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x) {
            break;
        }
    }
    x.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection oracle: largest real root via sign change on [lo, hi].
    pub(crate) fn bisect_largest(b: f64, c: f64, d: f64) -> f64 {
        let eval = |x: f64| ((x + b) * x + c) * x + d;
        // the largest root lies in [max(0, -b) - |d|^(1/3) - 1, max(0,-b) + |d|^(1/3) + 1]
        // for the solver family; scan downward from the upper Cauchy bound for a bracket
        let bound = 1.0 + b.abs().max(c.abs()).max(d.abs());
        let mut hi = bound;
        assert!(eval(hi) > 0.0);
        let steps = 4096;
        let mut lo = hi;
        for s in 1..=steps {
            let x = bound - 2.0 * bound * s as f64 / steps as f64;
            if eval(x) <= 0.0 {
                lo = x;
                break;
            }
            hi = x;
        }
        assert!(eval(lo) <= 0.0, "no bracket found");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn factored_cases() {
        assert_eq!(root_plus(1.0, -1.0, 0.0, 0.0).unwrap(), 1.0);
        assert!((root_plus(1.0, 0.0, 0.0, -8.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(root_plus(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn newton_polished_against_bisection() {
        let r = root_plus(1.0, -2.0, 0.0, -3.0).unwrap();
        let oracle = bisect_largest(-2.0, 0.0, -3.0);
        assert!((r - oracle).abs() < 1e-12, "{r} vs {oracle}");
        assert!((r - 2.486).abs() < 1e-3);
    }

    #[test]
    fn prox_root_is_positive_part_when_flux_vanishes() {
        // d = 0: largest root is max(0, -b) = positive part of the drifted density
        assert_eq!(root_plus_prox(-0.7, 0.0), 0.7);
        assert_eq!(root_plus_prox(0.3, 0.0), 0.0);
        assert_eq!(root_plus_prox(0.0, 0.0), 0.0);
    }

    #[test]
    fn prox_root_nonnegative_on_solver_family() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..2000 {
            let b = 20.0 * next() - 10.0;
            let d = -10.0 * next();
            let r = root_plus_prox(b, d);
            assert!(r >= 0.0);
            let f = ((r + b) * r) * r + d;
            assert!(f.abs() < 1e-9 * (1.0 + r.abs()).powi(3), "residual {f}");
        }
    }
}
