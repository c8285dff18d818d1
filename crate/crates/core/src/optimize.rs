//! Bracketed scalar root finding and 1D maximization.

use crate::math::{abs, sqrt};

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    /// Abscissa of the root.
    pub x: f64,
    /// Function value there.
    pub fx: f64,
    /// Iterations used.
    pub iterations: usize,
    /// Whether the bracket shrank below tolerance within the iteration budget.
    pub converged: bool,
}

/// Brent's method: inverse quadratic / secant steps safeguarded by bisection.
///
/// Requires `f(a)` and `f(b)` of opposite sign (or one of them zero); returns
/// `None` otherwise.
pub fn brent_root<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Option<Root>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(Root {
            x: a,
            fx: fa,
            iterations: 0,
            converged: true,
        });
    }
    if fb == 0.0 {
        return Some(Root {
            x: b,
            fx: fb,
            iterations: 0,
            converged: true,
        });
    }
    if !(fa.is_finite() && fb.is_finite()) || (fa > 0.0) == (fb > 0.0) {
        return None;
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for it in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if abs(fc) < abs(fb) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * abs(b) + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if abs(m) <= tol || fb == 0.0 {
            return Some(Root {
                x: b,
                fx: fb,
                iterations: it,
                converged: true,
            });
        }
        if abs(e) >= tol && abs(fa) > abs(fb) {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                // inverse quadratic interpolation
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - abs(tol * q)).min(abs(e * q)) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if abs(d) > tol {
            d
        } else if m > 0.0 {
            tol
        } else {
            -tol
        };
        fb = f(b);
    }
    Some(Root {
        x: b,
        fx: fb,
        iterations: max_iter,
        converged: false,
    })
}

/// Result of a 1D maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub fx: f64,
    pub converged: bool,
}

/// Golden-section search with parabolic steps (Brent) for a maximum of `f` on `[a, b]`.
///
/// `xtol` is an absolute tolerance on the abscissa.
pub fn brent_maximize<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    // minimize the negation
    let mut fx = -f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = sqrt(f64::EPSILON) * abs(x) * 1e-3 + 0.5 * xtol;
        let tol2 = 2.0 * tol1;
        if abs(x - m) <= tol2 - 0.5 * (b - a) {
            return Maximum {
                x,
                fx: -fx,
                converged: true,
            };
        }
        let mut golden = true;
        if abs(e) > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if abs(p) < abs(0.5 * q * e) && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if abs(d) >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = -f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Maximum {
        x,
        fx: -fx,
        converged: false,
    }
}

/// Index and abscissa of the largest sample of `f` on `n` evenly spaced points
/// covering `[lo, hi]` inclusive. NaN samples are ignored.
pub fn grid_argmax<F>(mut f: F, lo: f64, hi: f64, n: usize) -> (usize, f64, f64)
where
    F: FnMut(f64) -> f64,
{
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (0, lo, f64::NEG_INFINITY);
    for i in 0..n {
        let x = if i == n - 1 { hi } else { lo + step * i as f64 };
        let fx = f(x);
        if fx > best.2 {
            best = (i, x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_cubic() {
        let r = brent_root(|x| x * x * x - 2.0 * x - 5.0, 2.0, 3.0, 1e-15, 100).unwrap();
        assert!(r.converged);
        assert!((r.x - 2.094_551_481_542_326_5).abs() < 1e-14);
    }

    #[test]
    fn root_requires_sign_change() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
        let r = brent_root(|x| x, 0.0, 1.0, 1e-12, 100).unwrap();
        assert_eq!(r.x, 0.0);
    }

    #[test]
    fn root_with_steep_pole_side() {
        // 1/x - 3 has a pole outside the bracket
        let r = brent_root(|x| 1.0 / x - 3.0, 0.01, 1.0, 1e-15, 200).unwrap();
        assert!((r.x - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn maximum_of_smooth_function() {
        let m = brent_maximize(|x| (x - 0.3).cos() - 0.01 * x, -1.0, 2.0, 1e-10, 200);
        assert!(m.converged);
        // f'(x) = -sin(x - 0.3) - 0.01 = 0
        let expected = 0.3 - (0.01f64).asin();
        assert!((m.x - expected).abs() < 1e-7, "{} vs {}", m.x, expected);
    }

    #[test]
    fn maximum_of_quadratic_to_tight_tolerance() {
        let m = brent_maximize(
            |x| -(x - 1.234_567_89) * (x - 1.234_567_89),
            0.0,
            3.0,
            1e-12,
            200,
        );
        assert!((m.x - 1.234_567_89).abs() < 1e-9);
    }

    #[test]
    fn grid_argmax_includes_endpoints() {
        let (i, x, _) = grid_argmax(|x| x, 0.0, 1.0, 11);
        assert_eq!(i, 10);
        assert_eq!(x, 1.0);
        let (i, x, _) = grid_argmax(|x| -(x - 0.42) * (x - 0.42), 0.0, 1.0, 101);
        assert_eq!(i, 42);
        assert!((x - 0.42).abs() < 1e-12);
    }
}
