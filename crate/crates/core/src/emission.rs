//! Solid angle and divergence of the Bragg-reflected beam.
//!
//! The half-widths `dk_x, dk_z` are projected onto the plane orthogonal to the
//! emission direction; the larger projection sets the in-plane half-opening
//! `phi2`. Out of plane, `phi1 = dk_y / k_brg`. Small-angle approximations
//! are kept (`Omega = pi phi1 phi2`).

use alloc::vec::Vec;

use crate::lattice::{reciprocal_widths, LatticeGeometry, ProbeConfig, Warning};
use crate::math::{cos, sin, PI};

const WIDE_CONE: f64 = 0.1;

/// Which projection sets the in-plane opening angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `dk_x cos(beta_s)` wins: the lattice acts like a chain of point scatterers.
    RadialLimited,
    /// `dk_z sin(beta_s)` wins: the finite lattice length dominates.
    AxialLimited,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::RadialLimited => "radial_limited",
            Regime::AxialLimited => "axial_limited",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionCone {
    /// Half-opening out of the scattering plane (rad).
    pub phi1: f64,
    /// Half-opening in the scattering plane (rad).
    pub phi2: f64,
    /// Solid angle `pi phi1 phi2` (sr).
    pub omega: f64,
    pub regime: Regime,
}

impl EmissionCone {
    pub fn warnings(&self) -> Vec<Warning> {
        [self.phi1, self.phi2]
            .into_iter()
            .filter(|&phi| phi > WIDE_CONE)
            .map(|phi| Warning::WideCone { phi })
            .collect()
    }
}

pub fn emission_cone(geom: &LatticeGeometry, probe: &ProbeConfig, beta_s: f64) -> EmissionCone {
    let w = reciprocal_widths(geom);
    let k = probe.k_brg();
    let radial = w.dk_x() / k * cos(beta_s);
    let axial = w.dk_z() / k * sin(beta_s);
    let (phi2, regime) = if radial >= axial {
        (radial, Regime::RadialLimited)
    } else {
        (axial, Regime::AxialLimited)
    };
    let phi1 = w.dk_y() / k;
    EmissionCone {
        phi1,
        phi2,
        omega: PI * phi1 * phi2,
        regime,
    }
}

/// Full divergence `2 dk_x / k_brg` of a radially limited beam, without the
/// `cos(beta_s)` projection factor (rad).
pub fn unprojected_divergence(geom: &LatticeGeometry, probe: &ProbeConfig) -> f64 {
    2.0 * reciprocal_widths(geom).dk_x() / probe.k_brg()
}
