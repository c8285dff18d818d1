//! Brute-force reference for the structure factor.
//!
//! Two tiers, both independent of the closed forms in [`crate::structure`]:
//!
//! - Monte-Carlo: discrete atoms drawn from the layered Gaussian density,
//!   intensity `|sum_j exp(i q.r_j)|^2 / n^2`. Its ensemble mean is
//!   `1/n + (1 - 1/n) |S(q)|^2/|S(0)|^2`; the `1/n` term is the incoherent
//!   pedestal.
//! - Semi-analytic: the lattice sum evaluated term by term, times the
//!   per-layer Gaussian integrals evaluated by quadrature. No sampling noise.
//!
//! Samples are reproducible from `(geometry, n_atoms, seed)` with the
//! generator named in [`RNG_ALGORITHM`]. Draw order per atom: layer index
//! (uniform in `1..=N_s`), then standard normals for `x`, `y`, `z`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Error, Result};
use crate::lattice::{LatticeGeometry, ProbeConfig};
use crate::math::{abs, cos, exp, log, sin, sq, sqrt, FRAC_PI_2};
use crate::optimize::brent_maximize;
use crate::structure::ScatteringVector;

/// Identifier of the sampling generator, recorded next to every seed.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9/seed_from_u64";

/// Atom positions drawn from the layered density.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCloudSample {
    positions: Vec<[f64; 3]>,
    seed: u64,
    geom: LatticeGeometry,
}

impl AtomCloudSample {
    /// Positions `(x, y, z)` in meters.
    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geom
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub fn sample_cloud(geom: &LatticeGeometry, n_atoms: usize, seed: u64) -> Result<AtomCloudSample> {
    ensure(
        n_atoms >= 1,
        "n_atoms",
        n_atoms as f64,
        "must be at least 1",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_layers = geom.n_layers();
    let positions = (0..n_atoms)
        .map(|_| {
            let layer = rng.random_range(1..=n_layers);
            let gx: f64 = rng.sample(StandardNormal);
            let gy: f64 = rng.sample(StandardNormal);
            let gz: f64 = rng.sample(StandardNormal);
            [
                geom.sigma_r() * gx,
                geom.sigma_r() * gy,
                layer as f64 * geom.d() + geom.sigma_z() * gz,
            ]
        })
        .collect();
    Ok(AtomCloudSample {
        positions,
        seed,
        geom: *geom,
    })
}

/// `sum_j exp(i q.r_j)` as `(re, im)`, summed in sample order.
pub fn coherent_amplitude(sample: &AtomCloudSample, q: &ScatteringVector) -> (f64, f64) {
    sample.positions.iter().fold((0.0, 0.0), |(re, im), r| {
        let phase = q.qx * r[0] + q.qy * r[1] + q.qz * r[2];
        (re + cos(phase), im + sin(phase))
    })
}

/// `|sum_j exp(i q.r_j)|^2 / n_atoms^2`. The coherent peak is O(1) and the
/// incoherent pedestal sits at `1/n_atoms`.
pub fn oracle_intensity(sample: &AtomCloudSample, q: &ScatteringVector) -> f64 {
    let (re, im) = coherent_amplitude(sample, q);
    let n = sample.len() as f64;
    (re * re + im * im) / (n * n)
}

/// Expected [`oracle_intensity`] for a normalized structure factor `s_norm`.
pub fn expected_oracle_intensity(s_norm: f64, n_atoms: usize) -> f64 {
    let inv = 1.0 / n_atoms as f64;
    inv + (1.0 - inv) * s_norm
}

/// Remove the incoherent pedestal from a mean oracle intensity.
pub fn pedestal_corrected(mean: f64, n_atoms: usize) -> f64 {
    if n_atoms <= 1 {
        return mean;
    }
    let inv = 1.0 / n_atoms as f64;
    (mean - inv) / (1.0 - inv)
}

/// Mean and standard error over independent seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl EnsembleStats {
    /// Two-pass mean and standard error, reduced in slice order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n_samples: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|v| sq(v - mean)).sum::<f64>() / (n - 1) as f64;
            sqrt(var / n as f64)
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            n_samples: n,
        }
    }

    /// `(mean - expected) / stderr`; zero when both the spread and the
    /// difference vanish.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = self.mean - expected;
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if abs(diff) <= 1e-12 * abs(expected).max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Oracle intensities of one seed's sample at every `q`.
pub fn per_seed_intensities(
    geom: &LatticeGeometry,
    n_atoms: usize,
    seed: u64,
    qs: &[ScatteringVector],
) -> Result<Vec<f64>> {
    let sample = sample_cloud(geom, n_atoms, seed)?;
    Ok(qs.iter().map(|q| oracle_intensity(&sample, q)).collect())
}

/// Reduce per-seed rows (one row per seed, one column per `q`) into per-`q`
/// statistics. Order of rows fixes the reduction order.
pub fn reduce_ensemble(rows: &[Vec<f64>], n_q: usize) -> Vec<EnsembleStats> {
    let mut column = Vec::with_capacity(rows.len());
    (0..n_q)
        .map(|j| {
            column.clear();
            column.extend(rows.iter().map(|r| r[j]));
            EnsembleStats::from_samples(&column)
        })
        .collect()
}

/// Sequential ensemble over seeds `base_seed, base_seed + 1, ...`.
pub fn ensemble_intensity(
    geom: &LatticeGeometry,
    n_atoms: usize,
    base_seed: u64,
    n_seeds: usize,
    qs: &[ScatteringVector],
) -> Result<Vec<EnsembleStats>> {
    let rows = (0..n_seeds as u64)
        .map(|i| per_seed_intensities(geom, n_atoms, base_seed.wrapping_add(i), qs))
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce_ensemble(&rows, qs.len()))
}

/// `|sum_{m=1..n} exp(i m x)|^2` by direct summation. Phasors are advanced by
/// complex rotation and re-anchored every 64 terms.
pub fn lattice_sum_direct(x: f64, n: u32) -> f64 {
    const ANCHOR: u32 = 64;
    let (rc, rs) = (cos(x), sin(x));
    let (mut re, mut im) = (0.0, 0.0);
    let (mut c, mut s) = (0.0, 0.0);
    for m in 1..=n {
        if (m - 1) % ANCHOR == 0 {
            let phase = m as f64 * x;
            c = cos(phase);
            s = sin(phase);
        } else {
            let nc = c * rc - s * rs;
            s = s * rc + c * rs;
            c = nc;
        }
        re += c;
        im += s;
    }
    re * re + im * im
}

/// `|int exp(i q u) exp(-u^2 / 2 sigma^2) du|^2` by trapezoidal quadrature on
/// `[-12 sigma, 12 sigma]` with step `sigma / 8`.
pub fn layer_integral_quadrature(q: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let (re, im) = layer_integral_parts(q, sigma);
    re * re + im * im
}

fn layer_integral_parts(q: f64, sigma: f64) -> (f64, f64) {
    const HALF_NODES: i32 = 96;
    let h = sigma / 8.0;
    let mut re = 0.0;
    let mut im = 0.0;
    for j in -HALF_NODES..=HALF_NODES {
        let u = j as f64 * h;
        let g = exp(-0.5 * sq(u / sigma));
        re += g * cos(q * u);
        im += g * sin(q * u);
    }
    (re * h, im * h)
}

/// Quadrature layer integral normalized to its value at `q = 0`; a layer of
/// zero width scatters like a point (value 1).
pub fn layer_integral_normalized(q: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    layer_integral_quadrature(q, sigma) / layer_integral_quadrature(0.0, sigma)
}

/// Semi-analytic `|S(q)|^2` (no `n0^2`), comparable to
/// [`crate::structure::structure_factor_sq`].
pub fn semi_analytic_intensity(geom: &LatticeGeometry, q: &ScatteringVector) -> f64 {
    lattice_sum_direct(q.qz * geom.d(), geom.n_layers())
        * layer_integral_quadrature(q.qx, geom.sigma_r())
        * layer_integral_quadrature(q.qy, geom.sigma_r())
        * layer_integral_quadrature(q.qz, geom.sigma_z())
}

/// Semi-analytic `|S(q)|^2 / |S(0)|^2`.
pub fn semi_analytic_normalized(geom: &LatticeGeometry, q: &ScatteringVector) -> f64 {
    let n = geom.n_layers() as f64;
    lattice_sum_direct(q.qz * geom.d(), geom.n_layers()) / (n * n)
        * layer_integral_normalized(q.qx, geom.sigma_r())
        * layer_integral_normalized(q.qy, geom.sigma_r())
        * layer_integral_normalized(q.qz, geom.sigma_z())
}

/// Emission angle where the exact intensity peaks on the Ewald sphere.
///
/// The intensity is the term-by-term lattice sum times the closed-form
/// Gaussian layer integrals, compared in log space so that points ten or more
/// radial half-widths off specular (where the chain-like lattices peak) stay
/// resolvable. The scan covers `beta_s` in `(0, pi/2)` with a step of a
/// quarter of the smallest angular width of the structure factor, then
/// refines with golden-section search. Grid points are visited in decreasing
/// order of the Gaussian envelope, which bounds the intensity from above, and
/// the scan stops once the bound falls below the best value found.
pub fn oracle_peak_angle(geom: &LatticeGeometry, probe: &ProbeConfig) -> Result<f64> {
    const EDGE: f64 = 1e-6;
    const MAX_POINTS: usize = 4_000_000;
    let k = probe.k_brg();
    let (lo, hi) = (EDGE, FRAC_PI_2 - EDGE);
    let widths = [
        1.0 / (k * geom.sigma_r()),
        1.0 / (k * geom.length()),
        (hi - lo) / 1024.0,
    ];
    let scale = widths.iter().copied().fold(f64::INFINITY, f64::min);
    let n = (((hi - lo) / (0.25 * scale)) as usize + 1).clamp(3, MAX_POINTS);
    let step = (hi - lo) / (n - 1) as f64;
    let at = |i: usize| if i == n - 1 { hi } else { lo + step * i as f64 };
    let n_sq = sq(geom.n_layers() as f64);

    let log_envelope = |beta: f64| {
        let q = ScatteringVector::for_probe(probe, beta);
        -sq(q.qx * geom.sigma_r()) - sq(q.qz * geom.sigma_z())
    };
    let log_value = |beta: f64| {
        let q = ScatteringVector::for_probe(probe, beta);
        log(lattice_sum_direct(q.qz * geom.d(), geom.n_layers()) / n_sq) + log_envelope(beta)
    };

    let mut order: Vec<(f64, usize)> = (0..n).map(|i| (log_envelope(at(i)), i)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for &(upper, i) in &order {
        // normalized lattice factor is at most 1
        if upper + 1e-9 <= best.1 {
            break;
        }
        let v = log_value(at(i));
        if v > best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    if i == usize::MAX || i == 0 || i == n - 1 || !best.1.is_finite() {
        return Err(Error::NoPeak);
    }
    let m = brent_maximize(log_value, at(i - 1), at(i + 1), 1e-9 * scale.min(1.0), 300);
    Ok(m.x)
}
