//! Analytic structure factor of the layered Gaussian density.
//!
//! The exact model is the lattice (Airy) factor times the three Gaussian
//! layer integrals. The ellipsoid model replaces both by a single Gaussian
//! ellipsoid around the reciprocal-lattice point `G = 2 k_dip e_z`, with the
//! half-widths of [`ReciprocalWidths`]; it drops the `y` envelope.

use crate::error::{ensure, Result};
use crate::lattice::{reciprocal_widths, LatticeGeometry, ProbeConfig, ReciprocalWidths};
use crate::math::{cos, exp, reduce_to_period, sin, sinc, sq, TAU};

/// Scattering vector `q = k_s - k_i`, `z` along the lattice axis (m^-1).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScatteringVector {
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
}

impl ScatteringVector {
    pub const fn new(qx: f64, qy: f64, qz: f64) -> Self {
        Self { qx, qy, qz }
    }

    /// Elastic scattering in the `x-z` plane with `|k_i| = |k_s| = k`.
    ///
    /// The incident wave travels towards `-z` at `beta_i` from the axis and the
    /// emitted wave towards `+z` at `beta_s`, both with positive `x` component,
    /// so `beta_s == beta_i` is specular.
    pub fn on_ewald_sphere(k: f64, beta_i: f64, beta_s: f64) -> Self {
        Self {
            qx: k * (sin(beta_s) - sin(beta_i)),
            qy: 0.0,
            qz: k * (cos(beta_s) + cos(beta_i)),
        }
    }

    /// Scattering vector of `probe` for emission at `beta_s`.
    pub fn for_probe(probe: &ProbeConfig, beta_s: f64) -> Self {
        Self::on_ewald_sphere(probe.k_brg(), probe.beta_i(), beta_s)
    }

    /// First-order Bragg point `(0, 0, 2 pi / d)`.
    pub fn bragg_peak(geom: &LatticeGeometry) -> Self {
        Self::new(0.0, 0.0, geom.reciprocal_vector())
    }

    pub fn is_finite(&self) -> bool {
        self.qx.is_finite() && self.qy.is_finite() && self.qz.is_finite()
    }
}

/// Lattice factor `|sum_{m=1..N} exp(i m qz d)|^2 = (1 - cos N qz d) / (1 - cos qz d)`.
///
/// Evaluated as `N^2 sinc^2(N delta/2) / sinc^2(delta/2)` with `delta` the
/// distance of `qz d` from the nearest multiple of `2 pi`, so the removable
/// singularity returns exactly `N^2`.
pub fn airy_intensity(qz: f64, geom: &LatticeGeometry) -> f64 {
    let n = geom.n_layers() as f64;
    let delta = reduce_to_period(qz * geom.d());
    let ratio = sinc(0.5 * n * delta) / sinc(0.5 * delta);
    n * n * ratio * ratio
}

/// `|B(q)|^2 = 2 pi sigma^2 exp(-q^2 sigma^2)` for one Gaussian direction.
pub fn gaussian_factor(q: f64, sigma: f64) -> f64 {
    TAU * sigma * sigma * exp(-sq(q * sigma))
}

/// Debye-Waller attenuation `exp(-qz^2 sigma_z^2)`.
pub fn debye_waller(qz: f64, sigma_z: f64) -> f64 {
    exp(-sq(qz * sigma_z))
}

/// Product of the three Gaussian layer integrals `|B(qx)|^2 |B(qy)|^2 |B(qz)|^2`.
pub fn gaussian_envelope(q: &ScatteringVector, geom: &LatticeGeometry) -> f64 {
    gaussian_factor(q.qx, geom.sigma_r())
        * gaussian_factor(q.qy, geom.sigma_r())
        * gaussian_factor(q.qz, geom.sigma_z())
}

/// Full analytic `|S(q)|^2`, without the `n0^2` prefactor.
pub fn structure_factor_sq(q: &ScatteringVector, geom: &LatticeGeometry) -> f64 {
    airy_intensity(q.qz, geom) * gaussian_envelope(q, geom)
}

/// `|S(q)|^2 / |S(0)|^2`, in `[0, 1]`.
///
/// This equals `|<exp(i q.r)>|^2` for one atom drawn from the layered
/// density, and stays defined for `sigma_z = 0`.
pub fn normalized_structure_factor_sq(q: &ScatteringVector, geom: &LatticeGeometry) -> f64 {
    let n = geom.n_layers() as f64;
    let radial = sq(q.qx * geom.sigma_r()) + sq(q.qy * geom.sigma_r());
    airy_intensity(q.qz, geom) / (n * n) * exp(-radial - sq(q.qz * geom.sigma_z()))
}

/// Gaussian-ellipsoid approximation of the structure factor around `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureFactorModel {
    widths: ReciprocalWidths,
    q_peak_z: f64,
    s0: f64,
}

impl StructureFactorModel {
    pub fn new(widths: ReciprocalWidths, q_peak_z: f64, s0: f64) -> Result<Self> {
        ensure(
            q_peak_z > 0.0 && q_peak_z.is_finite(),
            "q_peak_z",
            q_peak_z,
            "must be positive",
        )?;
        ensure(s0 > 0.0 && s0.is_finite(), "s0", s0, "must be positive")?;
        Ok(Self {
            widths,
            q_peak_z,
            s0,
        })
    }

    /// Ellipsoid of a lattice, peak at `2 pi / d`, unit amplitude.
    pub fn from_geometry(geom: &LatticeGeometry) -> Self {
        Self {
            widths: reciprocal_widths(geom),
            q_peak_z: geom.reciprocal_vector(),
            s0: 1.0,
        }
    }

    /// Same ellipsoid with peak amplitude `s0`.
    pub fn with_amplitude(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }

    pub fn widths(&self) -> &ReciprocalWidths {
        &self.widths
    }

    pub fn q_peak_z(&self) -> f64 {
        self.q_peak_z
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Natural log of `S / S0`.
    pub fn log_profile(&self, q: &ScatteringVector) -> f64 {
        -sq(q.qx / self.widths.dk_x()) / 2.0 - sq((q.qz - self.q_peak_z) / self.widths.dk_z()) / 2.0
    }

    /// Model value on the elastic Ewald sphere of `probe` at emission angle `beta_s`.
    pub fn on_ewald_sphere(&self, probe: &ProbeConfig, beta_s: f64) -> f64 {
        ellipsoid_model(&ScatteringVector::for_probe(probe, beta_s), self)
    }
}

/// `S0 exp(-qx^2 / 2 dk_x^2 - (qz - G)^2 / 2 dk_z^2)`. `qy` is ignored.
pub fn ellipsoid_model(q: &ScatteringVector, model: &StructureFactorModel) -> f64 {
    model.s0 * exp(model.log_profile(q))
}
