//! Bragg scattering from a finite one-dimensional optical lattice.
//!
//! The lattice is a stack of `N_s` Gaussian atomic layers spaced by the
//! lattice constant `d`. This crate computes its structure factor, solves the
//! generalized Bragg condition for the emission angle (valid anywhere between
//! a chain of point scatterers and a stack of infinitely wide layers),
//! estimates the solid angle of the reflected beam and fits the lattice
//! aspect ratio from emission-angle scans.
//!
//! Properties:
//! - `no_std`, with `alloc` for sample clouds, scans and fitted curves.
//! - SI units throughout (meters, radians, inverse meters). Conversion to nm
//!   and degrees happens at the IO boundary, in the `bragg` crate.
//! - Everything is a pure function over value types.
#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod emission;
mod error;
pub mod fitting;
pub mod lattice;
pub(crate) mod math;
pub mod optimize;
pub mod oracle;
pub mod solver;
pub mod structure;

pub use emission::{emission_cone, unprojected_divergence, EmissionCone, Regime};
pub use error::{Error, Result};
pub use fitting::{
    curve_family, derive_lattice_extent, fit_aspect_ratio, synth_scan, AngleScan, CurveFamily,
    CurvePoint, FitOptions, FitResult, LatticeExtent, ScanRecord,
};
pub use lattice::{
    classical_bragg_angle, layer_sizes_from_trap, reciprocal_widths, LatticeGeometry, ProbeConfig,
    ReciprocalWidths, TrapParameters, Warning, AIRY_HALF_WIDTH,
};
pub use oracle::{
    oracle_intensity, oracle_peak_angle, sample_cloud, AtomCloudSample, EnsembleStats,
    RNG_ALGORITHM,
};
pub use solver::{
    classical_condition_defect, maximize_emission_angle, root_find_emission_angle,
    small_aspect_angle, solve_emission_angle, AspectRatio, EmissionSolution, SolveMethod,
};
pub use structure::{
    airy_intensity, ellipsoid_model, gaussian_envelope, structure_factor_sq, ScatteringVector,
    StructureFactorModel,
};
