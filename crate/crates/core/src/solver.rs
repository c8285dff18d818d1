//! Generalized Bragg condition for the emission angle.
//!
//! Maximizing the ellipsoid structure factor on the Ewald sphere gives the
//! stationarity condition
//!
//! ```text
//! zeta - 1 = zeta sin(beta_i)/sin(beta_s) + (cos(beta_i) - 2 k_dip/k_brg)/cos(beta_s)
//! ```
//!
//! with `zeta = dk_z^2 / dk_x^2`. For `zeta -> 0` the emission follows the
//! cosine-sum condition `cos(beta_s) = 2 k_dip/k_brg - cos(beta_i)`; for
//! `zeta -> inf` it is specular. Angles are magnitudes on opposite sides of
//! the lattice axis.

use crate::error::{ensure, Error, Result};
use crate::lattice::{ProbeConfig, ReciprocalWidths};
use crate::math::{abs, acos, cos, sin, FRAC_PI_2};
use crate::optimize::{brent_maximize, brent_root, grid_argmax};

/// Bracket widening around the two limit predictions (0.5 deg).
const BRACKET_MARGIN: f64 = 0.5 * core::f64::consts::PI / 180.0;
/// Keeps brackets away from the poles at `sin = 0` and `cos = 0`.
const POLE_GUARD: f64 = 1e-9;
const ROOT_XTOL: f64 = 1e-14;
const MAX_XTOL: f64 = 1e-10;
const MAX_GRID: usize = 513;
/// Root and maximization results further apart than this are different
/// stationary points.
const CROSS_CHECK_TOL: f64 = 1e-5;
/// Within this relative distance of 1 the aspect-ratio form is too badly
/// conditioned to meet the residual bound, so the solver maximizes instead.
const DEGENERATE_BAND: f64 = 1e-6;

/// `zeta = dk_z^2 / dk_x^2`. Small values describe a chain of point-like
/// scatterers, large values a stack of wide layers.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AspectRatio(f64);

impl AspectRatio {
    pub fn new(zeta: f64) -> Result<Self> {
        ensure(
            zeta > 0.0 && zeta.is_finite(),
            "zeta",
            zeta,
            "must be positive and finite",
        )?;
        Ok(Self(zeta))
    }

    pub fn from_widths(widths: &ReciprocalWidths) -> Self {
        Self(widths.aspect_ratio())
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// How an emission angle was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMethod {
    RootFind,
    Maximize,
    SmallAspectLimit,
    LargeAspectLimit,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::RootFind => "root_find",
            SolveMethod::Maximize => "maximize",
            SolveMethod::SmallAspectLimit => "small_aspect_limit",
            SolveMethod::LargeAspectLimit => "large_aspect_limit",
        }
    }
}

/// Emission angle of the Bragg-reflected beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionSolution {
    /// Emission angle magnitude from the lattice axis (rad).
    pub beta_s: f64,
    pub method: SolveMethod,
    /// Defect of the aspect-ratio form at `beta_s` (0 when not applicable).
    pub residual: f64,
    pub converged: bool,
}

impl EmissionSolution {
    /// Emission angle in the signed convention, where the emitted beam lies on
    /// the opposite side of the axis: specular reflection reads `-beta_i`.
    pub fn signed_beta_s(&self) -> f64 {
        -self.beta_s
    }
}

/// Left side minus right side of the stationarity condition, continuous in
/// `zeta` (no division by `zeta - 1`).
pub fn stationarity_defect(probe: &ProbeConfig, zeta: f64, beta_s: f64) -> f64 {
    let detune = cos(probe.beta_i()) - probe.grating_ratio();
    zeta * sin(probe.beta_i()) / sin(beta_s) + detune / cos(beta_s) - (zeta - 1.0)
}

/// Defect of the aspect-ratio form
/// `(zeta sin(beta_i)/sin(beta_s) + (cos(beta_i) - 2k_dip/k_brg)/cos(beta_s)) / (zeta - 1) - 1`.
pub fn aspect_form_defect(probe: &ProbeConfig, zeta: f64, beta_s: f64) -> f64 {
    let detune = cos(probe.beta_i()) - probe.grating_ratio();
    (zeta * sin(probe.beta_i()) / sin(beta_s) + detune / cos(beta_s)) / (zeta - 1.0) - 1.0
}

/// `ln(S/S0)` of the ellipsoid on the Ewald sphere, up to the positive factor
/// `k_brg^2 / (2 dk_z^2)`. Only its argmax matters for the emission angle.
pub fn scaled_log_profile(probe: &ProbeConfig, zeta: f64, beta_s: f64) -> f64 {
    let x = sin(beta_s) - sin(probe.beta_i());
    let z = cos(beta_s) + cos(probe.beta_i()) - probe.grating_ratio();
    -(zeta * x * x + z * z)
}

/// Cosine-sum (point-scatterer chain) limit `arccos(2 k_dip/k_brg - cos(beta_i))`.
pub fn small_aspect_angle(probe: &ProbeConfig) -> Result<f64> {
    let arg = probe.grating_ratio() - cos(probe.beta_i());
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::NoSolution {
            detail: "cosine-sum condition has no real angle",
        });
    }
    Ok(acos(arg))
}

/// Wide-layer limit: specular emission.
pub fn large_aspect_angle(probe: &ProbeConfig) -> f64 {
    probe.beta_i()
}

/// Residuals `(cos(beta_i) + cos(beta_s) - 2 lambda_brg/lambda_dip, beta_s - beta_i)`
/// of the two classical conditions.
pub fn classical_condition_defect(probe: &ProbeConfig, beta_s: f64) -> (f64, f64) {
    (
        cos(probe.beta_i()) + cos(beta_s) - probe.grating_ratio(),
        beta_s - probe.beta_i(),
    )
}

/// Emission angle by direct maximization of the ellipsoid on the Ewald sphere
/// over `(0, pi/2)`. Fails with [`Error::NoPeak`] when the maximum sits on
/// the domain boundary.
pub fn maximize_emission_angle(probe: &ProbeConfig, zeta: AspectRatio) -> Result<EmissionSolution> {
    let z = zeta.value();
    let f = |b: f64| scaled_log_profile(probe, z, b);
    let (lo, hi) = (POLE_GUARD, FRAC_PI_2 - POLE_GUARD);
    let (i, _, _) = grid_argmax(f, lo, hi, MAX_GRID);
    if i == 0 || i == MAX_GRID - 1 {
        return Err(Error::NoPeak);
    }
    let step = (hi - lo) / (MAX_GRID - 1) as f64;
    let a = lo + step * (i - 1) as f64;
    let b = lo + step * (i + 1) as f64;
    let m = brent_maximize(f, a, b, MAX_XTOL, 200);
    let residual = if z == 1.0 {
        0.0
    } else {
        aspect_form_defect(probe, z, m.x)
    };
    Ok(EmissionSolution {
        beta_s: m.x,
        method: SolveMethod::Maximize,
        residual,
        converged: m.converged,
    })
}

/// Emission angle as the root of the aspect-ratio form, bracketed between
/// the two limit predictions widened by 0.5 deg.
///
/// Falls back to a sign-change scan over `(0, pi/2)` when the limit bracket
/// holds no root, picking the root where the ellipsoid is largest.
pub fn root_find_emission_angle(
    probe: &ProbeConfig,
    zeta: AspectRatio,
) -> Result<EmissionSolution> {
    let z = zeta.value();
    if z == 1.0 {
        return Err(Error::Degenerate);
    }
    let small = small_aspect_clamped(probe);
    let large = large_aspect_angle(probe);
    let lo = (small.min(large) - BRACKET_MARGIN).max(POLE_GUARD);
    let hi = (small.max(large) + BRACKET_MARGIN).min(FRAC_PI_2 - POLE_GUARD);
    if let Some(sol) = root_in(probe, z, lo, hi) {
        return Ok(sol);
    }
    scan_for_root(probe, z)
}

/// Solve the generalized Bragg condition.
///
/// Root finding on the aspect-ratio form is cross-checked against a direct
/// maximization of the ellipsoid. When the two disagree the bracket held a
/// secondary stationary point, and the root is re-bracketed around the
/// maximizer. `zeta = 1` (and its immediate neighbourhood, where the form is
/// ill-conditioned) is solved by maximization alone.
pub fn solve_emission_angle(probe: &ProbeConfig, zeta: AspectRatio) -> Result<EmissionSolution> {
    let z = zeta.value();
    if abs(z - 1.0) <= DEGENERATE_BAND {
        return maximize_emission_angle(probe, zeta);
    }
    let rooted = root_find_emission_angle(probe, zeta);
    let maximized = maximize_emission_angle(probe, zeta);
    match (rooted, maximized) {
        (Ok(r), Ok(m)) if abs(r.beta_s - m.beta_s) <= CROSS_CHECK_TOL => Ok(r),
        (_, Ok(m)) => {
            let w = 1e-3;
            let lo = (m.beta_s - w).max(POLE_GUARD);
            let hi = (m.beta_s + w).min(FRAC_PI_2 - POLE_GUARD);
            Ok(root_in(probe, z, lo, hi).unwrap_or(m))
        }
        (Ok(r), Err(_)) => Ok(r),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Emission angle in one of the two limits, tagged accordingly.
pub fn limit_solution(probe: &ProbeConfig, method: SolveMethod) -> Result<EmissionSolution> {
    let beta_s = match method {
        SolveMethod::SmallAspectLimit => small_aspect_angle(probe)?,
        SolveMethod::LargeAspectLimit => large_aspect_angle(probe),
        SolveMethod::RootFind | SolveMethod::Maximize => {
            return Err(Error::InvalidParameter {
                name: "method",
                value: f64::NAN,
                reason: "only limit methods are accepted",
            })
        }
    };
    Ok(EmissionSolution {
        beta_s,
        method,
        residual: 0.0,
        converged: true,
    })
}

fn small_aspect_clamped(probe: &ProbeConfig) -> f64 {
    let arg = (probe.grating_ratio() - cos(probe.beta_i())).clamp(-1.0, 1.0);
    acos(arg)
}

fn root_in(probe: &ProbeConfig, z: f64, lo: f64, hi: f64) -> Option<EmissionSolution> {
    let root = brent_root(|b| stationarity_defect(probe, z, b), lo, hi, ROOT_XTOL, 200)?;
    Some(EmissionSolution {
        beta_s: root.x,
        method: SolveMethod::RootFind,
        residual: aspect_form_defect(probe, z, root.x),
        converged: root.converged,
    })
}

fn scan_for_root(probe: &ProbeConfig, z: f64) -> Result<EmissionSolution> {
    const CELLS: usize = 4096;
    let (lo, hi) = (POLE_GUARD, FRAC_PI_2 - POLE_GUARD);
    let step = (hi - lo) / CELLS as f64;
    let mut best: Option<(f64, EmissionSolution)> = None;
    let mut prev = (lo, stationarity_defect(probe, z, lo));
    for i in 1..=CELLS {
        let b = if i == CELLS { hi } else { lo + step * i as f64 };
        let fb = stationarity_defect(probe, z, b);
        if (prev.1 > 0.0) != (fb > 0.0) {
            if let Some(sol) = root_in(probe, z, prev.0, b) {
                let value = scaled_log_profile(probe, z, sol.beta_s);
                if best.is_none_or(|(v, _)| value > v) {
                    best = Some((value, sol));
                }
            }
        }
        prev = (b, fb);
    }
    best.map(|(_, s)| s).ok_or(Error::NoSolution {
        detail: "stationarity condition has no root",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const NM: f64 = 1e-9;

    fn resonant() -> ProbeConfig {
        ProbeConfig::at_resonance(780.0 * NM, 811.0 * NM).unwrap()
    }

    fn zeta(z: f64) -> AspectRatio {
        AspectRatio::new(z).unwrap()
    }

    // Independent oracle: dense sampling of the literal ellipsoid exponent,
    // written out in wavenumbers, followed by ternary refinement.
    fn brute_argmax(probe: &ProbeConfig, z: f64) -> f64 {
        let k = 2.0 * std::f64::consts::PI / probe.lambda_brg();
        let kdip = 2.0 * std::f64::consts::PI / probe.lambda_dip();
        let bi = probe.beta_i();
        let dkz2 = 1.0;
        let dkx2 = dkz2 / z;
        let s = |b: f64| {
            -(k * b.sin() - k * bi.sin()).powi(2) / (2.0 * dkx2)
                - (k * b.cos() - 2.0 * kdip + k * bi.cos()).powi(2) / (2.0 * dkz2)
        };
        let n = 200_000;
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 1..n {
            let b = i as f64 * h;
            let v = s(b);
            if v > best.1 {
                best = (b, v);
            }
        }
        let (mut a, mut c) = (best.0 - h, best.0 + h);
        for _ in 0..200 {
            let m1 = a + (c - a) / 3.0;
            let m2 = c - (c - a) / 3.0;
            if s(m1) < s(m2) {
                a = m1;
            } else {
                c = m2;
            }
        }
        0.5 * (a + c)
    }

    #[test]
    fn resonance_is_a_fixed_point() {
        let p = resonant();
        for z in [1e-8, 1e-3, 0.01, 0.5, 1.0, 2.0, 1e3, 1e8] {
            let s = solve_emission_angle(&p, zeta(z)).unwrap();
            assert!(
                (s.beta_s - p.beta_i()).abs() < 1e-9,
                "zeta {z}: {}",
                s.beta_s
            );
        }
        assert!((small_aspect_angle(&p).unwrap() - p.beta_i()).abs() < 1e-7);
    }

    #[test]
    fn small_aspect_examples() {
        let bi = 15.887f64.to_radians();
        let p = ProbeConfig::new(780.0 * NM, 811.0 * NM, bi).unwrap();
        assert!((small_aspect_angle(&p).unwrap().to_degrees() - 15.887).abs() < 0.02);
        let p812 = resonant().with_lambda_dip(812.0 * NM).unwrap();
        // arccos(2 * 780/812 - 780/811) = 16.381177 deg
        assert_relative_eq!(
            small_aspect_angle(&p812).unwrap().to_degrees(),
            16.381_176_636_593_5,
            epsilon = 1e-9
        );
        let p790 = resonant().with_lambda_dip(790.0 * NM).unwrap();
        let arg = 2.0 * 780.0 / 790.0 - 780.0 / 811.0;
        assert!(arg > 1.0);
        assert!(matches!(
            small_aspect_angle(&p790),
            Err(Error::NoSolution { .. })
        ));
    }

    #[test]
    fn limits_of_the_generalized_condition() {
        let p812 = resonant().with_lambda_dip(812.0 * NM).unwrap();
        let tiny = solve_emission_angle(&p812, zeta(1e-8)).unwrap();
        assert!((tiny.beta_s - small_aspect_angle(&p812).unwrap()).abs() < 1e-6);
        let huge = solve_emission_angle(&p812, zeta(1e8)).unwrap();
        assert!((huge.beta_s - p812.beta_i()).abs() < 1e-6);
        assert_eq!(tiny.method, SolveMethod::RootFind);
        assert!(tiny.residual.abs() < 1e-9 && huge.residual.abs() < 1e-9);
    }

    #[test]
    fn intermediate_aspect_ratio_matches_dense_maximization() {
        let p812 = resonant().with_lambda_dip(812.0 * NM).unwrap();
        let s = solve_emission_angle(&p812, zeta(0.01)).unwrap();
        let oracle = brute_argmax(&p812, 0.01);
        assert!(
            (s.beta_s - oracle).abs() < 1e-8,
            "{} vs {}",
            s.beta_s,
            oracle
        );
        // frozen from the dense scan
        assert!(
            (s.beta_s.to_degrees() - 16.330_24).abs() < 1e-4,
            "{}",
            s.beta_s.to_degrees()
        );
        let (lo, hi) = (p812.beta_i(), small_aspect_angle(&p812).unwrap());
        assert!(s.beta_s > lo && s.beta_s < hi);
    }

    #[test]
    fn classical_defects() {
        let p = resonant();
        let (sum, spec) = classical_condition_defect(&p, p.beta_i());
        assert!(sum.abs() < 1e-15 && spec == 0.0);

        let p812 = p.with_lambda_dip(812.0 * NM).unwrap();
        let bs = small_aspect_angle(&p812).unwrap();
        let (sum, spec) = classical_condition_defect(&p812, bs);
        assert!(sum.abs() < 1e-15);
        assert!(
            (spec.to_degrees() - 0.488_35).abs() < 1e-3,
            "{}",
            spec.to_degrees()
        );

        let (sum, spec) = classical_condition_defect(&p812, p812.beta_i());
        assert_relative_eq!(sum, 2.368_905_383_489_217e-3, max_relative = 1e-9);
        assert_eq!(spec, 0.0);
    }

    #[test]
    fn degenerate_zeta_uses_maximization() {
        let p812 = resonant().with_lambda_dip(812.0 * NM).unwrap();
        assert_eq!(
            root_find_emission_angle(&p812, zeta(1.0)),
            Err(Error::Degenerate)
        );
        let s = solve_emission_angle(&p812, zeta(1.0)).unwrap();
        assert_eq!(s.method, SolveMethod::Maximize);
        assert!((s.beta_s - brute_argmax(&p812, 1.0)).abs() < 1e-7);
    }

    #[test]
    fn far_detuning_without_small_limit_still_has_a_root() {
        let p = resonant().with_lambda_dip(790.0 * NM).unwrap();
        let s = solve_emission_angle(&p, zeta(0.01)).unwrap();
        assert!(s.beta_s > 0.0 && s.beta_s < p.beta_i());
        assert!((s.beta_s - brute_argmax(&p, 0.01)).abs() < 1e-6);
    }

    #[test]
    fn signed_convention_reads_specular_as_negative_incidence() {
        let p = resonant();
        let s = solve_emission_angle(&p, zeta(1e8)).unwrap();
        assert!((s.signed_beta_s() + p.beta_i()).abs() < 1e-9);
    }

    #[test]
    fn monotone_between_the_limits() {
        for ld in [810.0, 810.5, 811.4, 812.0, 813.0] {
            let p = resonant().with_lambda_dip(ld * NM).unwrap();
            let mut prev: Option<f64> = None;
            let small = small_aspect_angle(&p).unwrap();
            let increasing_to_specular = small < p.beta_i();
            for i in 0..=120 {
                let z = 10f64.powf(-6.0 + 0.1 * i as f64);
                let b = solve_emission_angle(&p, zeta(z)).unwrap().beta_s;
                if let Some(pb) = prev {
                    if increasing_to_specular {
                        assert!(b >= pb - 1e-12, "ld {ld} zeta {z}");
                    } else {
                        assert!(b <= pb + 1e-12, "ld {ld} zeta {z}");
                    }
                }
                prev = Some(b);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn root_and_maximization_agree(ld in 809.0f64..813.0, lz in -6.0f64..6.0) {
            let p = resonant().with_lambda_dip(ld * NM).unwrap();
            let z = zeta(10f64.powf(lz));
            let r = solve_emission_angle(&p, z).unwrap();
            let m = maximize_emission_angle(&p, z).unwrap();
            prop_assert!((r.beta_s - m.beta_s).abs() < 1e-5);
            if r.method == SolveMethod::RootFind {
                prop_assert!(r.residual.abs() < 1e-9, "residual {}", r.residual);
            }
        }
    }
}
