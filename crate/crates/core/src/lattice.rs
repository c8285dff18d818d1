//! Lattice and probe geometry, trap-derived layer sizes and reciprocal-space
//! half-widths.
//!
//! Conventions: lengths in meters, angles in radians. The lattice axis is `z`.
//! Incidence and emission angles are positive magnitudes measured from the
//! lattice axis, on opposite sides of it, so specular reflection is
//! `beta_s == beta_i`.

use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::math::{acos, cos, log, sqrt, FRAC_PI_2, PI, TAU};

/// Half-width constant of the lattice (Airy) factor from its sixth-order
/// expansion: `sqrt(3 (5 - sqrt 5)) ~ 2.88`, so `dk_z = AIRY_HALF_WIDTH / (N_s d)`.
///
/// The exact half-width of `sinc^2` is 2.7831; this constant overestimates
/// it by about 3.5%.
pub const AIRY_HALF_WIDTH: f64 = 2.879_547_892_899_271;

/// Exact half width at half maximum of `(sin(N t/2)/sin(t/2))^2` in units of
/// `1/N`, in the large-`N` limit.
pub const SINC_SQ_HALF_WIDTH: f64 = 2.783_114_756_503_020_5;

/// Non-fatal conditions under which the model approximations get shaky.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// `sigma_z > d/4`: neighbouring layers start to overlap.
    LayersOverlap {
        /// Axial rms width (m).
        sigma_z: f64,
        /// Lattice constant (m).
        d: f64,
    },
    /// `k_B T / U_0 > 0.5`: harmonic approximation of the trap is doubtful.
    HotCloud {
        /// Thermal energy over trap depth.
        temperature_ratio: f64,
    },
    /// An emission half-opening angle exceeds 0.1 rad; small-angle formulas degrade.
    WideCone {
        /// Offending half-opening angle (rad).
        phi: f64,
    },
}

/// The scattering medium: `n_layers` Gaussian layers spaced by `d` along `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGeometry {
    d: f64,
    n_layers: u32,
    sigma_r: f64,
    sigma_z: f64,
    n0: f64,
}

impl LatticeGeometry {
    /// Validated geometry with unit peak density.
    ///
    /// Rejects `sigma_z >= d/2`; above `d/4` the geometry is accepted and
    /// reported by [`LatticeGeometry::warnings`].
    pub fn new(d: f64, n_layers: u32, sigma_r: f64, sigma_z: f64) -> Result<Self> {
        ensure(d > 0.0 && d.is_finite(), "d", d, "must be positive")?;
        ensure(
            n_layers >= 1,
            "n_layers",
            n_layers as f64,
            "must be at least 1",
        )?;
        ensure(
            sigma_r > 0.0 && sigma_r.is_finite(),
            "sigma_r",
            sigma_r,
            "must be positive",
        )?;
        ensure(sigma_z >= 0.0, "sigma_z", sigma_z, "must be non-negative")?;
        ensure(
            sigma_z < d / 2.0,
            "sigma_z",
            sigma_z,
            "layers merge for sigma_z >= d/2",
        )?;
        Ok(Self {
            d,
            n_layers,
            sigma_r,
            sigma_z,
            n0: 1.0,
        })
    }

    /// Geometry of a lattice formed by a standing wave at `lambda_dip` (`d = lambda_dip/2`).
    pub fn from_lattice_wavelength(
        lambda_dip: f64,
        n_layers: u32,
        sigma_r: f64,
        sigma_z: f64,
    ) -> Result<Self> {
        Self::new(lambda_dip / 2.0, n_layers, sigma_r, sigma_z)
    }

    /// Set the peak per-layer density. Only scales amplitudes.
    pub fn with_density(mut self, n0: f64) -> Result<Self> {
        ensure(n0 > 0.0 && n0.is_finite(), "n0", n0, "must be positive")?;
        self.n0 = n0;
        Ok(self)
    }

    /// Lattice constant (m).
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Number of layers `N_s`.
    pub fn n_layers(&self) -> u32 {
        self.n_layers
    }

    /// Radial rms width of one layer (m).
    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }

    /// Axial rms width of one layer (m).
    pub fn sigma_z(&self) -> f64 {
        self.sigma_z
    }

    /// Peak per-layer density.
    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// Lattice length `N_s d` (m).
    pub fn length(&self) -> f64 {
        self.n_layers as f64 * self.d
    }

    /// Primitive reciprocal-lattice vector magnitude `2 pi / d` (m^-1).
    pub fn reciprocal_vector(&self) -> f64 {
        TAU / self.d
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        if self.sigma_z > self.d / 4.0 {
            out.push(Warning::LayersOverlap {
                sigma_z: self.sigma_z,
                d: self.d,
            });
        }
        out
    }
}

/// Probe and lattice wavelengths plus the fixed incidence angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    lambda_brg: f64,
    lambda_dip: f64,
    beta_i: f64,
}

impl ProbeConfig {
    pub fn new(lambda_brg: f64, lambda_dip: f64, beta_i: f64) -> Result<Self> {
        ensure(
            lambda_brg > 0.0 && lambda_brg.is_finite(),
            "lambda_brg",
            lambda_brg,
            "must be positive",
        )?;
        ensure(
            lambda_dip > 0.0 && lambda_dip.is_finite(),
            "lambda_dip",
            lambda_dip,
            "must be positive",
        )?;
        ensure(
            beta_i > 0.0 && beta_i < FRAC_PI_2,
            "beta_i",
            beta_i,
            "must lie in (0, pi/2)",
        )?;
        Ok(Self {
            lambda_brg,
            lambda_dip,
            beta_i,
        })
    }

    /// Probe aligned to the classical Bragg angle of the given wavelengths.
    pub fn at_resonance(lambda_brg: f64, lambda_dip: f64) -> Result<Self> {
        let beta_i = classical_bragg_angle(lambda_brg, lambda_dip)?;
        Self::new(lambda_brg, lambda_dip, beta_i)
    }

    /// Same probe and incidence angle with another lattice wavelength.
    pub fn with_lambda_dip(&self, lambda_dip: f64) -> Result<Self> {
        Self::new(self.lambda_brg, lambda_dip, self.beta_i)
    }

    pub fn lambda_brg(&self) -> f64 {
        self.lambda_brg
    }

    pub fn lambda_dip(&self) -> f64 {
        self.lambda_dip
    }

    /// Incidence angle from the lattice axis (rad).
    pub fn beta_i(&self) -> f64 {
        self.beta_i
    }

    /// Probe wavenumber `2 pi / lambda_brg`.
    pub fn k_brg(&self) -> f64 {
        TAU / self.lambda_brg
    }

    /// Lattice-laser wavenumber `2 pi / lambda_dip`.
    pub fn k_dip(&self) -> f64 {
        TAU / self.lambda_dip
    }

    /// `2 k_dip / k_brg = 2 lambda_brg / lambda_dip`.
    pub fn grating_ratio(&self) -> f64 {
        2.0 * self.lambda_brg / self.lambda_dip
    }

    /// Lattice wavelength at which the fixed incidence angle is the classical Bragg angle.
    pub fn resonance_lambda_dip(&self) -> f64 {
        self.lambda_brg / cos(self.beta_i)
    }
}

/// Dipole-trap parameters that set the thermal size of each layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParameters {
    w_dip: f64,
    temperature_ratio: f64,
}

impl TrapParameters {
    pub fn new(w_dip: f64, temperature_ratio: f64) -> Result<Self> {
        ensure(
            w_dip > 0.0 && w_dip.is_finite(),
            "w_dip",
            w_dip,
            "must be positive",
        )?;
        ensure(
            temperature_ratio > 0.0 && temperature_ratio < 1.0,
            "temperature_ratio",
            temperature_ratio,
            "must lie in (0, 1)",
        )?;
        Ok(Self {
            w_dip,
            temperature_ratio,
        })
    }

    /// Trap beam waist (m).
    pub fn w_dip(&self) -> f64 {
        self.w_dip
    }

    /// `k_B T / U_0`.
    pub fn temperature_ratio(&self) -> f64 {
        self.temperature_ratio
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        if self.temperature_ratio > 0.5 {
            out.push(Warning::HotCloud {
                temperature_ratio: self.temperature_ratio,
            });
        }
        out
    }
}

/// Reciprocal-space half-widths of the structure factor around the Bragg peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalWidths {
    dk_x: f64,
    dk_y: f64,
    dk_z: f64,
}

impl ReciprocalWidths {
    pub fn new(dk_x: f64, dk_y: f64, dk_z: f64) -> Result<Self> {
        ensure(
            dk_x > 0.0 && dk_x.is_finite(),
            "dk_x",
            dk_x,
            "must be positive",
        )?;
        ensure(
            dk_y > 0.0 && dk_y.is_finite(),
            "dk_y",
            dk_y,
            "must be positive",
        )?;
        ensure(
            dk_z > 0.0 && dk_z.is_finite(),
            "dk_z",
            dk_z,
            "must be positive",
        )?;
        Ok(Self { dk_x, dk_y, dk_z })
    }

    pub fn dk_x(&self) -> f64 {
        self.dk_x
    }

    pub fn dk_y(&self) -> f64 {
        self.dk_y
    }

    pub fn dk_z(&self) -> f64 {
        self.dk_z
    }

    /// `zeta = dk_z^2 / dk_x^2`.
    pub fn aspect_ratio(&self) -> f64 {
        (self.dk_z / self.dk_x) * (self.dk_z / self.dk_x)
    }
}

/// Thermal rms layer widths `(sigma_z, sigma_r)` in the harmonic approximation.
///
/// `2 sigma_z = (lambda_dip/pi) sqrt(kT/2U_0)` and `2 sigma_r = w_dip sqrt(kT/U_0)`.
pub fn layer_sizes_from_trap(trap: &TrapParameters, lambda_dip: f64) -> Result<(f64, f64)> {
    ensure(
        lambda_dip > 0.0 && lambda_dip.is_finite(),
        "lambda_dip",
        lambda_dip,
        "must be positive",
    )?;
    let ratio = trap.temperature_ratio;
    let sigma_z = 0.5 * lambda_dip / PI * sqrt(ratio / 2.0);
    let sigma_r = 0.5 * trap.w_dip * sqrt(ratio);
    Ok((sigma_z, sigma_r))
}

/// Half-widths of the lattice factor (`dk_z`) and of the radial Gaussian
/// envelope (`dk_x = dk_y`). The axial Debye-Waller factor does not enter.
pub fn reciprocal_widths(geom: &LatticeGeometry) -> ReciprocalWidths {
    let radial = sqrt(log(2.0)) / geom.sigma_r;
    ReciprocalWidths {
        dk_x: radial,
        dk_y: radial,
        dk_z: AIRY_HALF_WIDTH / geom.length(),
    }
}

/// Classical Bragg angle `arccos(lambda_brg / lambda_dip)`.
pub fn classical_bragg_angle(lambda_brg: f64, lambda_dip: f64) -> Result<f64> {
    ensure(
        lambda_brg > 0.0 && lambda_brg.is_finite(),
        "lambda_brg",
        lambda_brg,
        "must be positive",
    )?;
    ensure(
        lambda_dip > 0.0 && lambda_dip.is_finite(),
        "lambda_dip",
        lambda_dip,
        "must be positive",
    )?;
    if lambda_brg > lambda_dip {
        return Err(Error::NoBraggAngle {
            lambda_brg,
            lambda_dip,
        });
    }
    Ok(acos(lambda_brg / lambda_dip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const NM: f64 = 1e-9;
    const UM: f64 = 1e-6;

    #[test]
    fn airy_constant_matches_closed_form() {
        let exact = (3.0 * (5.0 - 5f64.sqrt())).sqrt();
        assert_eq!(AIRY_HALF_WIDTH, exact);
        assert!((AIRY_HALF_WIDTH - 2.8795).abs() < 5e-5);
    }

    #[test]
    fn trap_sizes_of_the_experiment() {
        let trap = TrapParameters::new(220.0 * UM, 0.4).unwrap();
        let (sz, sr) = layer_sizes_from_trap(&trap, 811.0 * NM).unwrap();
        // quoted as ~115 nm and ~140 um for the full 2-sigma sizes
        assert!(
            (2.0 * sz / NM - 115.0).abs() < 1.0,
            "2 sigma_z = {}",
            2.0 * sz / NM
        );
        assert_relative_eq!(2.0 * sr / UM, 139.140_217, epsilon = 1e-5);
        assert!((2.0 * sr / UM - 140.0).abs() < 1.0);
    }

    #[test]
    fn trap_sizes_vanish_at_zero_temperature() {
        let trap = TrapParameters::new(220.0 * UM, 1e-14).unwrap();
        let (sz, sr) = layer_sizes_from_trap(&trap, 811.0 * NM).unwrap();
        assert!(sz < 1e-13 && sr < 1e-10);
        assert!(TrapParameters::new(220.0 * UM, 0.0).is_err());
        assert!(TrapParameters::new(220.0 * UM, 1.0).is_err());
        assert_eq!(TrapParameters::new(1e-4, 0.7).unwrap().warnings().len(), 1);
    }

    #[test]
    fn reciprocal_widths_examples() {
        let d = 405.5 * NM;
        let g = LatticeGeometry::new(d, 1, 70.0 * UM, 50.0 * NM).unwrap();
        let w = reciprocal_widths(&g);
        assert_relative_eq!(
            w.dk_x(),
            core::f64::consts::LN_2.sqrt() / 70e-6,
            max_relative = 1e-14
        );
        assert_relative_eq!(w.dk_x(), 1.189e4, max_relative = 1e-3);
        assert_eq!(w.dk_x(), w.dk_y());
        // single layer: width set by a one-layer lattice length
        assert_relative_eq!(w.dk_z(), AIRY_HALF_WIDTH / d, max_relative = 1e-14);

        let long = LatticeGeometry::new(4.8e-3 / 12000.0, 12000, 70.0 * UM, 50.0 * NM).unwrap();
        let w = reciprocal_widths(&long);
        assert!((w.dk_z() - 600.0).abs() < 0.1, "dk_z = {}", w.dk_z());
    }

    #[test]
    fn classical_angle_examples() {
        let b = classical_bragg_angle(780.0 * NM, 811.0 * NM).unwrap();
        assert!((b.to_degrees() - 15.9).abs() < 0.05);
        assert_eq!(classical_bragg_angle(811.0 * NM, 811.0 * NM).unwrap(), 0.0);
        assert!(matches!(
            classical_bragg_angle(811.0 * NM, 780.0 * NM),
            Err(Error::NoBraggAngle { .. })
        ));
    }

    #[test]
    fn geometry_invariants() {
        let d = 400.0 * NM;
        assert!(LatticeGeometry::new(0.0, 1, 1e-5, 0.0).is_err());
        assert!(LatticeGeometry::new(d, 0, 1e-5, 0.0).is_err());
        assert!(LatticeGeometry::new(d, 1, 0.0, 0.0).is_err());
        assert!(LatticeGeometry::new(d, 1, 1e-5, -1e-9).is_err());
        assert!(LatticeGeometry::new(d, 1, 1e-5, d / 2.0).is_err());
        let overlapping = LatticeGeometry::new(d, 1, 1e-5, 0.3 * d).unwrap();
        assert_eq!(overlapping.warnings().len(), 1);
        assert!(LatticeGeometry::new(d, 1, 1e-5, 0.2 * d)
            .unwrap()
            .warnings()
            .is_empty());
        assert!(ProbeConfig::new(780.0 * NM, 811.0 * NM, 0.0).is_err());
        assert!(ProbeConfig::new(780.0 * NM, 811.0 * NM, FRAC_PI_2).is_err());
    }

    proptest! {
        #[test]
        fn trap_sizes_scale_linearly_and_as_sqrt(
            w in 1e-5f64..1e-3, ratio in 1e-3f64..0.99, lambda in 500e-9f64..1100e-9, s in 0.1f64..10.0
        ) {
            let base = TrapParameters::new(w, ratio).unwrap();
            let (sz, sr) = layer_sizes_from_trap(&base, lambda).unwrap();
            let (sz2, _) = layer_sizes_from_trap(&base, s * lambda).unwrap();
            prop_assert!((sz2 / sz - s).abs() < 1e-12 * s);
            let (_, sr2) = layer_sizes_from_trap(&TrapParameters::new(s * w, ratio).unwrap(), lambda).unwrap();
            prop_assert!((sr2 / sr - s).abs() < 1e-12 * s);
            let r2 = ratio * 0.25;
            let (sz3, sr3) = layer_sizes_from_trap(&TrapParameters::new(w, r2).unwrap(), lambda).unwrap();
            prop_assert!((sz3 / sz - 0.5).abs() < 1e-12);
            prop_assert!((sr3 / sr - 0.5).abs() < 1e-12);
        }

        #[test]
        fn dk_z_times_length_is_constant(n in 1u32..100_000, d in 1e-7f64..1e-6, sr in 1e-6f64..1e-3) {
            let g = LatticeGeometry::new(d, n, sr, 0.0).unwrap();
            let product = reciprocal_widths(&g).dk_z() * g.length();
            prop_assert!((product - 2.8795).abs() < 5e-5);
        }

        #[test]
        fn classical_angle_satisfies_condition(lb in 300e-9f64..1000e-9, ratio in 1.0f64..3.0) {
            let ld = lb * ratio;
            let b = classical_bragg_angle(lb, ld).unwrap();
            prop_assert!((ld * b.cos() - lb).abs() <= 4.0 * f64::EPSILON * lb);
        }
    }
}
