// Float math for no_std builds. libm gives the same results on every target,
// which the oracle's determinism contract relies on.

pub(crate) use core::f64::consts::{FRAC_PI_2, PI, TAU};
pub(crate) use libm::{acos, cos, exp, fabs as abs, log, sin, sqrt};

#[inline]
pub(crate) fn sq(x: f64) -> f64 {
    x * x
}

/// `sin(t)/t` with a series in the removable-singularity band.
#[inline]
pub(crate) fn sinc(t: f64) -> f64 {
    if abs(t) < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        sin(t) / t
    }
}

/// Reduce `x` to the interval `[-pi, pi]` around the nearest multiple of `2 pi`.
#[inline]
pub(crate) fn reduce_to_period(x: f64) -> f64 {
    x - TAU * libm::round(x / TAU)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_continuous_across_series_band() {
        for &t in &[0.99e-4, 1.01e-4, -0.99e-4, -1.01e-4] {
            let exact = sin(t) / t;
            assert!((sinc(t) - exact).abs() < 1e-15);
        }
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn period_reduction() {
        assert!(reduce_to_period(TAU + 0.1).abs() - 0.1 < 1e-12);
        assert!((reduce_to_period(-3.0 * TAU - 0.25) + 0.25).abs() < 1e-12);
    }
}
