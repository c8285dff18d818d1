//! Aspect-ratio fits to emission-angle scans.
//!
//! A scan records the emission angle for several lattice wavelengths at a
//! fixed incidence angle. The fit runs in angle space through the forward
//! solver, minimizing the weighted squared angle residuals over
//! `log10(zeta)`: a coarse grid over `[-12, 12]` followed by golden-section
//! refinement with parabolic steps.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Error, Result};
use crate::lattice::{ProbeConfig, AIRY_HALF_WIDTH};
use crate::math::{log, sqrt, FRAC_PI_2};
use crate::optimize::brent_maximize;
use crate::solver::{small_aspect_angle, solve_emission_angle, AspectRatio};

const LOG10_ZETA_MIN: f64 = -12.0;
const LOG10_ZETA_MAX: f64 = 12.0;
const GRID_STEP: f64 = 0.25;
/// Step in `ln(zeta)` for the numerical Jacobian.
const JACOBIAN_STEP: f64 = 1e-4;
/// Minimum number of records for a fit.
pub const MIN_RECORDS: usize = 3;

/// One measured emission angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    /// Lattice-laser wavelength (m).
    pub lambda_dip: f64,
    /// Measured emission angle (rad).
    pub beta_s: f64,
    /// 1-sigma angle uncertainty (rad), if known.
    pub sigma: Option<f64>,
}

/// Emission angle versus lattice wavelength at fixed incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleScan {
    records: Vec<ScanRecord>,
    beta_i: f64,
    lambda_brg: f64,
}

impl AngleScan {
    /// Validates angles, uncertainties and distinct wavelengths. The record
    /// count is checked by the fit.
    pub fn new(records: Vec<ScanRecord>, beta_i: f64, lambda_brg: f64) -> Result<Self> {
        ensure(
            beta_i > 0.0 && beta_i < FRAC_PI_2,
            "beta_i",
            beta_i,
            "must lie in (0, pi/2)",
        )?;
        ensure(
            lambda_brg > 0.0 && lambda_brg.is_finite(),
            "lambda_brg",
            lambda_brg,
            "must be positive",
        )?;
        for (i, r) in records.iter().enumerate() {
            ensure(
                r.lambda_dip > 0.0 && r.lambda_dip.is_finite(),
                "lambda_dip",
                r.lambda_dip,
                "must be positive",
            )?;
            ensure(
                r.beta_s > 0.0 && r.beta_s < FRAC_PI_2,
                "beta_s",
                r.beta_s,
                "must lie in (0, pi/2)",
            )?;
            if let Some(s) = r.sigma {
                ensure(s > 0.0 && s.is_finite(), "sigma", s, "must be positive")?;
            }
            if records[..i].iter().any(|o| o.lambda_dip == r.lambda_dip) {
                return Err(Error::InvalidParameter {
                    name: "lambda_dip",
                    value: r.lambda_dip,
                    reason: "wavelengths in a scan must be distinct",
                });
            }
        }
        Ok(Self {
            records,
            beta_i,
            lambda_brg,
        })
    }

    pub fn records(&self) -> &[ScanRecord] {
        &self.records
    }

    pub fn beta_i(&self) -> f64 {
        self.beta_i
    }

    pub fn lambda_brg(&self) -> f64 {
        self.lambda_brg
    }

    pub fn probe_at(&self, lambda_dip: f64) -> Result<ProbeConfig> {
        ProbeConfig::new(self.lambda_brg, lambda_dip, self.beta_i)
    }

    /// Uncertainties are used only when every record carries one.
    fn weights(&self) -> Option<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.sigma.map(|s| 1.0 / (s * s)))
            .collect()
    }

    fn wavelength_range(&self) -> (f64, f64) {
        self.records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.lambda_dip), hi.max(r.lambda_dip))
            })
    }
}

/// Fit configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Also fit a constant offset added to every predicted angle.
    pub fit_angle_offset: bool,
    /// Samples in the returned model curve.
    pub curve_points: usize,
    /// `(sigma_r, d)` to convert the fitted aspect ratio into a lattice length.
    pub layer: Option<(f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fit_angle_offset: false,
            curve_points: 101,
            layer: None,
        }
    }
}

/// Lattice length and layer count implied by an aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeExtent {
    /// `N_s d` (m).
    pub lattice_length: f64,
    pub n_layers: u64,
    /// `2 sigma_r / (N_s d)`.
    pub width_to_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub zeta_hat: f64,
    /// 1-sigma uncertainty of `zeta_hat` from the curvature of the objective.
    pub zeta_stderr: f64,
    /// Fitted constant angle offset (rad); zero unless requested.
    pub angle_offset: f64,
    /// Unweighted rms of the angle residuals (rad).
    pub residual_rms: f64,
    /// Weighted sum of squared residuals at the optimum.
    pub chi_square: f64,
    pub extent: Option<LatticeExtent>,
    /// Model curve `(lambda_dip, beta_s)` across the scanned range.
    pub curve: Vec<(f64, f64)>,
}

/// Invert `zeta = dk_z^2 / dk_x^2` for the lattice length given the radial
/// rms width: `N_s d = 2.88 sigma_r / (sqrt(ln 2) sqrt(zeta))`.
pub fn derive_lattice_extent(zeta: AspectRatio, sigma_r: f64, d: f64) -> Result<LatticeExtent> {
    ensure(
        sigma_r > 0.0 && sigma_r.is_finite(),
        "sigma_r",
        sigma_r,
        "must be positive",
    )?;
    ensure(d > 0.0 && d.is_finite(), "d", d, "must be positive")?;
    let lattice_length = AIRY_HALF_WIDTH * sigma_r / (sqrt(log(2.0)) * sqrt(zeta.value()));
    Ok(LatticeExtent {
        lattice_length,
        n_layers: libm::round(lattice_length / d) as u64,
        width_to_length: 2.0 * sigma_r / lattice_length,
    })
}

struct Objective<'a> {
    scan: &'a AngleScan,
    probes: Vec<ProbeConfig>,
    weights: Vec<f64>,
    fit_offset: bool,
}

struct Evaluation {
    chi_square: f64,
    offset: f64,
    residuals: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(scan: &'a AngleScan, fit_offset: bool) -> Result<Self> {
        let probes = scan
            .records
            .iter()
            .map(|r| scan.probe_at(r.lambda_dip))
            .collect::<Result<Vec<_>>>()?;
        let weights = scan
            .weights()
            .unwrap_or_else(|| alloc::vec![1.0; scan.records.len()]);
        Ok(Self {
            scan,
            probes,
            weights,
            fit_offset,
        })
    }

    fn predictions(&self, zeta: f64) -> Option<Vec<f64>> {
        let z = AspectRatio::new(zeta).ok()?;
        self.probes
            .iter()
            .map(|p| solve_emission_angle(p, z).ok().map(|s| s.beta_s))
            .collect()
    }

    fn evaluate(&self, log10_zeta: f64) -> Option<Evaluation> {
        let pred = self.predictions(libm::pow(10.0, log10_zeta))?;
        let raw: Vec<f64> = self
            .scan
            .records
            .iter()
            .zip(&pred)
            .map(|(r, p)| r.beta_s - p)
            .collect();
        let offset = if self.fit_offset {
            let wsum: f64 = self.weights.iter().sum();
            raw.iter()
                .zip(&self.weights)
                .map(|(r, w)| r * w)
                .sum::<f64>()
                / wsum
        } else {
            0.0
        };
        let residuals: Vec<f64> = raw.iter().map(|r| r - offset).collect();
        let chi_square = residuals
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r * r)
            .sum();
        Some(Evaluation {
            chi_square,
            offset,
            residuals,
        })
    }

    fn chi_square(&self, log10_zeta: f64) -> f64 {
        self.evaluate(log10_zeta)
            .map_or(f64::INFINITY, |e| e.chi_square)
    }

    /// Variance of `ln(zeta)` from the Gauss-Newton curvature.
    fn ln_zeta_variance(&self, zeta: f64, chi_square: f64, absolute: bool) -> Option<f64> {
        let up = self.predictions(zeta * libm::exp(JACOBIAN_STEP))?;
        let down = self.predictions(zeta * libm::exp(-JACOBIAN_STEP))?;
        let jac: Vec<f64> = up
            .iter()
            .zip(&down)
            .map(|(u, d)| (u - d) / (2.0 * JACOBIAN_STEP))
            .collect();
        let (mut f00, mut f01, mut f11) = (0.0, 0.0, 0.0);
        for (j, w) in jac.iter().zip(&self.weights) {
            f00 += w * j * j;
            f01 += w * j;
            f11 += w;
        }
        let n = self.probes.len();
        let params = if self.fit_offset { 2 } else { 1 };
        let inv00 = if self.fit_offset {
            let det = f00 * f11 - f01 * f01;
            if det <= 0.0 {
                return None;
            }
            f11 / det
        } else {
            if f00 <= 0.0 {
                return None;
            }
            1.0 / f00
        };
        let scale = if absolute || n <= params {
            1.0
        } else {
            chi_square / (n - params) as f64
        };
        Some(inv00 * scale)
    }
}

/// Fit the aspect ratio to a scan.
///
/// Fails with [`Error::InsufficientData`] below three records and with
/// [`Error::FitDiverged`] when the best grid point of `log10(zeta)` lies on
/// the boundary of `[-12, 12]`.
pub fn fit_aspect_ratio(scan: &AngleScan, options: &FitOptions) -> Result<FitResult> {
    let n = scan.records.len();
    if n < MIN_RECORDS {
        return Err(Error::InsufficientData {
            got: n,
            need: MIN_RECORDS,
        });
    }
    let objective = Objective::new(scan, options.fit_angle_offset)?;

    let steps = ((LOG10_ZETA_MAX - LOG10_ZETA_MIN) / GRID_STEP) as usize;
    let grid = |i: usize| LOG10_ZETA_MIN + GRID_STEP * i as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..=steps {
        let c = objective.chi_square(grid(i));
        if c < best.1 {
            best = (i, c);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::NoSolution {
            detail: "no aspect ratio reproduces every scan point",
        });
    }
    if best.0 == 0 || best.0 == steps {
        return Err(Error::FitDiverged {
            log10_zeta: grid(best.0),
        });
    }
    let m = brent_maximize(
        |u| -objective.chi_square(u),
        grid(best.0 - 1),
        grid(best.0 + 1),
        1e-10,
        300,
    );
    let (log10_zeta, eval) = match objective.evaluate(m.x) {
        Some(e) if e.chi_square <= best.1 => (m.x, e),
        _ => {
            let u = grid(best.0);
            let e = objective.evaluate(u).ok_or(Error::NoSolution {
                detail: "objective undefined at the grid optimum",
            })?;
            (u, e)
        }
    };
    let zeta_hat = libm::pow(10.0, log10_zeta);
    let absolute = scan.weights().is_some();
    let zeta_stderr = objective
        .ln_zeta_variance(zeta_hat, eval.chi_square, absolute)
        .map_or(f64::INFINITY, |v| zeta_hat * sqrt(v));
    let residual_rms = sqrt(eval.residuals.iter().map(|r| r * r).sum::<f64>() / n as f64);

    let extent = match options.layer {
        Some((sigma_r, d)) => Some(derive_lattice_extent(
            AspectRatio::new(zeta_hat)?,
            sigma_r,
            d,
        )?),
        None => None,
    };

    let (lo, hi) = scan.wavelength_range();
    let zeta = AspectRatio::new(zeta_hat)?;
    let curve = linspace(lo, hi, options.curve_points)
        .filter_map(|l| {
            let p = scan.probe_at(l).ok()?;
            let s = solve_emission_angle(&p, zeta).ok()?;
            Some((l, s.beta_s + eval.offset))
        })
        .collect();

    Ok(FitResult {
        zeta_hat,
        zeta_stderr,
        angle_offset: eval.offset,
        residual_rms,
        chi_square: eval.chi_square,
        extent,
        curve,
    })
}

/// Synthetic scan: forward-solved emission angles plus Gaussian angle noise.
///
/// Wavelengths are evenly spaced over `lambda_range` (a single point uses the
/// lower end). One standard normal is drawn per point, in order, from the
/// generator named in [`crate::RNG_ALGORITHM`].
pub fn synth_scan(
    probe_base: &ProbeConfig,
    zeta: AspectRatio,
    lambda_range: (f64, f64),
    n_points: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<AngleScan> {
    let (lo, hi) = lambda_range;
    ensure(
        n_points >= 1,
        "n_points",
        n_points as f64,
        "must be at least 1",
    )?;
    ensure(
        lo > 0.0 && hi >= lo,
        "lambda_range",
        hi - lo,
        "needs 0 < min <= max",
    )?;
    ensure(
        noise_sigma >= 0.0 && noise_sigma.is_finite(),
        "noise_sigma",
        noise_sigma,
        "must be non-negative",
    )?;
    let resonance = probe_base.resonance_lambda_dip();
    let slack = 1e-9 * resonance;
    ensure(
        lo - slack <= resonance && resonance <= hi + slack,
        "lambda_range",
        resonance,
        "must contain the resonant lattice wavelength",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (noise_sigma > 0.0).then_some(noise_sigma);
    let records = linspace(lo, hi, n_points)
        .map(|l| {
            let p = probe_base.with_lambda_dip(l)?;
            let beta = solve_emission_angle(&p, zeta)?.beta_s;
            let g: f64 = rng.sample(StandardNormal);
            Ok(ScanRecord {
                lambda_dip: l,
                beta_s: beta + noise_sigma * g,
                sigma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AngleScan::new(records, probe_base.beta_i(), probe_base.lambda_brg())
}

/// One wavelength of the three reference curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub lambda_dip: f64,
    /// Specular emission (rad).
    pub specular: f64,
    /// Cosine-sum condition (rad); absent where it has no real angle.
    pub small_aspect: Option<f64>,
    /// Generalized condition at the requested aspect ratio (rad).
    pub generalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    pub zeta: f64,
    pub points: Vec<CurvePoint>,
}

/// Specular, cosine-sum and generalized emission angles over a wavelength grid.
pub fn curve_family(
    probe_base: &ProbeConfig,
    zeta: AspectRatio,
    lambda_grid: &[f64],
) -> Result<CurveFamily> {
    let points = lambda_grid
        .iter()
        .map(|&l| {
            let p = probe_base.with_lambda_dip(l)?;
            Ok(CurvePoint {
                lambda_dip: l,
                specular: p.beta_i(),
                small_aspect: small_aspect_angle(&p).ok(),
                generalized: solve_emission_angle(&p, zeta).ok().map(|s| s.beta_s),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveFamily {
        zeta: zeta.value(),
        points,
    })
}

/// `n` evenly spaced values over `[lo, hi]`; a single value is `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let last = n.saturating_sub(1).max(1) as f64;
    (0..n).map(move |i| {
        if n > 1 && i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / last
        }
    })
}
