//! Subcommand bodies. Each takes a validated config and returns the report
//! text; writing it out is left to the caller.

use bragg_core::emission::unprojected_divergence;
use bragg_core::fitting::linspace;
use bragg_core::oracle::{
    expected_oracle_intensity, pedestal_corrected, per_seed_intensities, reduce_ensemble,
    semi_analytic_normalized,
};
use bragg_core::solver::{large_aspect_angle, stationarity_defect};
use bragg_core::structure::normalized_structure_factor_sq;
use bragg_core::{
    classical_bragg_angle, curve_family, derive_lattice_extent, ellipsoid_model, emission_cone,
    fit_aspect_ratio, reciprocal_widths, sample_cloud, small_aspect_angle, solve_emission_angle,
    synth_scan, AngleScan, AspectRatio, FitOptions, ScatteringVector, StructureFactorModel,
    RNG_ALGORITHM,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::io::{cloud_table, read_scan, scan_table, to_json, to_nm, Cell, Table};

const NM: f64 = 1e-9;

/// Largest |z| accepted by oracle validation.
pub const Z_LIMIT: f64 = 5.0;

fn single_row<T: Serialize>(report: &T, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => {
            let value = serde_json::to_value(report).expect("reports serialize");
            let obj = value.as_object().expect("reports are objects");
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(obj.keys()).expect("in-memory write");
            w.write_record(obj.values().map(|v| match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            }))
            .expect("in-memory write");
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
        }
    }
}

#[derive(Serialize)]
struct BraggAngleReport {
    lambda_brg_nm: f64,
    lambda_dip_nm: f64,
    beta_bragg_deg: f64,
}

pub fn bragg_angle(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let p = &cfg.probe;
    let beta = classical_bragg_angle(p.lambda_brg_nm * NM, p.lambda_dip_nm * NM)?;
    Ok(single_row(
        &BraggAngleReport {
            lambda_brg_nm: p.lambda_brg_nm,
            lambda_dip_nm: p.lambda_dip_nm,
            beta_bragg_deg: beta.to_degrees(),
        },
        format,
    ))
}

/// Emission angles `[min, max]` in degrees and sample count.
#[derive(Debug, Clone, Copy)]
pub struct AngleGrid {
    pub min_deg: f64,
    pub max_deg: f64,
    pub n: usize,
}

impl AngleGrid {
    fn angles(&self) -> Result<Vec<f64>, CliError> {
        if !(self.min_deg > 0.0
            && self.max_deg < 90.0
            && self.min_deg <= self.max_deg
            && self.n >= 1)
        {
            return Err(CliError::Usage(
                "angle grid needs 0 < min <= max < 90 deg and at least one point".into(),
            ));
        }
        Ok(linspace(self.min_deg.to_radians(), self.max_deg.to_radians(), self.n).collect())
    }
}

pub fn structure_factor(
    cfg: &RunConfig,
    grid: AngleGrid,
    format: Format,
) -> Result<String, CliError> {
    let probe = cfg.probe()?;
    let geom = cfg.geometry()?;
    let model = StructureFactorModel::from_geometry(&geom);
    let mut t = Table::new(vec![
        "beta_s_deg",
        "qx_per_m",
        "qz_per_m",
        "s_norm",
        "s_ellipsoid_norm",
    ]);
    for beta in grid.angles()? {
        let q = ScatteringVector::for_probe(&probe, beta);
        t.push(vec![
            beta.to_degrees().into(),
            q.qx.into(),
            q.qz.into(),
            normalized_structure_factor_sq(&q, &geom).into(),
            ellipsoid_model(&q, &model).into(),
        ]);
    }
    Ok(t.render(format))
}

#[derive(Serialize)]
struct SolveReport {
    lambda_brg_nm: f64,
    lambda_dip_nm: f64,
    beta_i_deg: f64,
    zeta: f64,
    beta_s_deg: f64,
    beta_s_signed_deg: f64,
    method: &'static str,
    residual: f64,
    converged: bool,
    specular_deg: f64,
    small_aspect_deg: Option<f64>,
}

pub fn solve_angle(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let probe = cfg.probe()?;
    let zeta = cfg.zeta()?;
    let s = solve_emission_angle(&probe, zeta)?;
    Ok(single_row(
        &SolveReport {
            lambda_brg_nm: probe.lambda_brg() / NM,
            lambda_dip_nm: probe.lambda_dip() / NM,
            beta_i_deg: probe.beta_i().to_degrees(),
            zeta: zeta.value(),
            beta_s_deg: s.beta_s.to_degrees(),
            beta_s_signed_deg: s.signed_beta_s().to_degrees(),
            method: s.method.as_str(),
            residual: s.residual,
            converged: s.converged,
            specular_deg: large_aspect_angle(&probe).to_degrees(),
            small_aspect_deg: small_aspect_angle(&probe).ok().map(f64::to_degrees),
        },
        format,
    ))
}

fn wavelength_grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let s = &cfg.scan;
    if !(s.lambda_min_nm > 0.0 && s.lambda_min_nm <= s.lambda_max_nm && s.n_points >= 1) {
        return Err(CliError::Usage(
            "scan range needs 0 < lambda_min_nm <= lambda_max_nm and n_points >= 1".into(),
        ));
    }
    Ok(linspace(s.lambda_min_nm * NM, s.lambda_max_nm * NM, s.n_points).collect())
}

/// Specular, cosine-sum and generalized emission angles over the scan grid.
/// Angles without a solution are left empty.
pub fn scan(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let probe = cfg.probe()?;
    let zeta = cfg.zeta()?;
    let family = curve_family(&probe, zeta, &wavelength_grid(cfg)?)?;
    let mut t = Table::new(vec![
        "lambda_dip_nm",
        "specular_deg",
        "small_aspect_deg",
        "generalized_deg",
    ]);
    for p in &family.points {
        t.push(vec![
            to_nm(p.lambda_dip).into(),
            p.specular.to_degrees().into(),
            p.small_aspect.map(f64::to_degrees).into(),
            p.generalized.map(f64::to_degrees).into(),
        ]);
    }
    Ok(t.render(format))
}

/// Synthetic scan in the fit input format.
pub fn synth(cfg: &RunConfig, seed: u64, format: Format) -> Result<String, CliError> {
    let probe = cfg.probe()?;
    let s = &cfg.scan;
    let scan = synth_scan(
        &probe,
        cfg.zeta()?,
        (s.lambda_min_nm * NM, s.lambda_max_nm * NM),
        s.n_points,
        s.noise_deg.to_radians(),
        seed,
    )?;
    Ok(scan_table(&scan).render(format))
}

#[derive(Serialize)]
struct FitReport {
    zeta_hat: f64,
    zeta_stderr: f64,
    lattice_length_m: f64,
    n_layers_hat: u64,
    width_to_length: f64,
    /// Same inversion with the configured radial width read as a full
    /// width `2 sigma_r`.
    lattice_length_2sigma_reading_m: f64,
    n_layers_hat_2sigma_reading: u64,
    width_to_length_2sigma_reading: f64,
    residual_rms_deg: f64,
    angle_offset_deg: f64,
    chi_square: f64,
    n_records: usize,
    curve: Vec<[f64; 2]>,
}

pub struct FitArgs<'a> {
    pub scan_text: &'a str,
    pub fit_angle_offset: bool,
    pub curve_points: usize,
}

pub fn fit(cfg: &RunConfig, args: &FitArgs<'_>, format: Format) -> Result<String, CliError> {
    let probe = cfg.probe()?;
    let geom = cfg.geometry()?;
    let scan: AngleScan = read_scan(args.scan_text, probe.beta_i(), probe.lambda_brg())?;
    let options = FitOptions {
        fit_angle_offset: args.fit_angle_offset,
        curve_points: args.curve_points,
        layer: Some((geom.sigma_r(), geom.d())),
    };
    let r = fit_aspect_ratio(&scan, &options)?;
    let extent = r.extent.expect("layer given");
    let doubled = derive_lattice_extent(
        AspectRatio::new(r.zeta_hat)?,
        2.0 * geom.sigma_r(),
        geom.d(),
    )?;
    match format {
        Format::Json => Ok(to_json(&FitReport {
            zeta_hat: r.zeta_hat,
            zeta_stderr: r.zeta_stderr,
            lattice_length_m: extent.lattice_length,
            n_layers_hat: extent.n_layers,
            width_to_length: extent.width_to_length,
            lattice_length_2sigma_reading_m: doubled.lattice_length,
            n_layers_hat_2sigma_reading: doubled.n_layers,
            width_to_length_2sigma_reading: doubled.width_to_length,
            residual_rms_deg: r.residual_rms.to_degrees(),
            angle_offset_deg: r.angle_offset.to_degrees(),
            chi_square: r.chi_square,
            n_records: scan.records().len(),
            curve: r
                .curve
                .iter()
                .map(|&(l, b)| [to_nm(l), b.to_degrees()])
                .collect(),
        })),
        Format::Csv => {
            let mut t = Table::new(vec!["lambda_dip_nm", "beta_s_deg"]);
            for &(l, b) in &r.curve {
                t.push(vec![to_nm(l).into(), b.to_degrees().into()]);
            }
            Ok(t.to_csv())
        }
    }
}

pub struct OracleArgs {
    pub grid: AngleGrid,
    pub validate: bool,
}

#[derive(Serialize)]
struct OracleReport {
    rng_algorithm: &'static str,
    seed: u64,
    n_atoms: usize,
    n_seeds: usize,
    max_abs_z: f64,
    rows: serde_json::Value,
}

/// Monte-Carlo and semi-analytic references next to the closed form along
/// the Ewald sphere. Seeds `seed .. seed + n_seeds` run in parallel; their
/// rows are reduced in seed order.
///
/// Returns the report and, when `validate` is set and some point exceeds
/// `|z| = 5`, the validation error to raise after writing it.
pub fn oracle(
    cfg: &RunConfig,
    args: &OracleArgs,
    format: Format,
) -> Result<(String, Option<CliError>), CliError> {
    let probe = cfg.probe()?;
    let geom = cfg.geometry()?;
    let o = &cfg.oracle;
    if o.n_seeds < 2 {
        return Err(CliError::Usage(
            "oracle needs at least 2 seeds for a standard error".into(),
        ));
    }
    let angles = args.grid.angles()?;
    let qs: Vec<ScatteringVector> = angles
        .iter()
        .map(|&b| ScatteringVector::for_probe(&probe, b))
        .collect();
    let rows = (0..o.n_seeds as u64)
        .into_par_iter()
        .map(|i| per_seed_intensities(&geom, o.n_atoms, o.seed.wrapping_add(i), &qs))
        .collect::<Result<Vec<_>, _>>()?;
    let stats = reduce_ensemble(&rows, qs.len());

    let corr = |v: f64| {
        if o.n_atoms > 1 {
            v / (1.0 - 1.0 / o.n_atoms as f64)
        } else {
            v
        }
    };
    let mut t = Table::new(vec![
        "beta_s_deg",
        "s_norm",
        "semi_analytic_norm",
        "oracle_mean",
        "oracle_corrected",
        "oracle_corrected_stderr",
        "z_score",
    ]);
    let mut max_abs_z: f64 = 0.0;
    let mut failures = 0;
    for ((beta, q), st) in angles.iter().zip(&qs).zip(&stats) {
        let s = normalized_structure_factor_sq(q, &geom);
        let z = st.z_score(expected_oracle_intensity(s, o.n_atoms));
        max_abs_z = max_abs_z.max(z.abs());
        if z.is_nan() || z.abs() > Z_LIMIT {
            failures += 1;
        }
        t.push(vec![
            beta.to_degrees().into(),
            s.into(),
            semi_analytic_normalized(&geom, q).into(),
            st.mean.into(),
            pedestal_corrected(st.mean, o.n_atoms).into(),
            corr(st.stderr).into(),
            z.into(),
        ]);
    }
    let text = match format {
        Format::Json => to_json(&OracleReport {
            rng_algorithm: RNG_ALGORITHM,
            seed: o.seed,
            n_atoms: o.n_atoms,
            n_seeds: o.n_seeds,
            max_abs_z,
            rows: t.to_json_rows(),
        }),
        Format::Csv => t.to_csv(),
    };
    let failure = (args.validate && failures > 0).then_some(CliError::Validation {
        count: failures,
        total: angles.len(),
        limit: Z_LIMIT,
        max_z: max_abs_z,
    });
    Ok((text, failure))
}

/// One sample cloud of the configured geometry as `x_m,y_m,z_m` CSV.
pub fn cloud_csv(cfg: &RunConfig, seed: u64) -> Result<String, CliError> {
    let sample = sample_cloud(&cfg.geometry()?, cfg.oracle.n_atoms, seed)?;
    Ok(cloud_table(&sample).to_csv())
}

#[derive(Serialize)]
struct DivergenceReport {
    beta_s_deg: f64,
    omega_sr: f64,
    two_phi1_deg: f64,
    two_phi2_deg: f64,
    two_phi2_unprojected_deg: f64,
    regime: &'static str,
    dk_x_per_m: f64,
    dk_z_per_m: f64,
    zeta_geometry: f64,
    lattice_length_m: f64,
    warnings: Vec<String>,
}

pub fn divergence(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let probe = cfg.probe()?;
    let geom = cfg.geometry()?;
    let beta_s = cfg
        .emission
        .beta_s_deg
        .map_or(probe.beta_i(), f64::to_radians);
    let cone = emission_cone(&geom, &probe, beta_s);
    let w = reciprocal_widths(&geom);
    let warnings = cone
        .warnings()
        .into_iter()
        .chain(geom.warnings())
        .map(|w| format!("{w:?}"))
        .collect();
    let report = DivergenceReport {
        beta_s_deg: beta_s.to_degrees(),
        omega_sr: cone.omega,
        two_phi1_deg: (2.0 * cone.phi1).to_degrees(),
        two_phi2_deg: (2.0 * cone.phi2).to_degrees(),
        two_phi2_unprojected_deg: unprojected_divergence(&geom, &probe).to_degrees(),
        regime: cone.regime.as_str(),
        dk_x_per_m: w.dk_x(),
        dk_z_per_m: w.dk_z(),
        zeta_geometry: w.aspect_ratio(),
        lattice_length_m: geom.length(),
        warnings,
    };
    match format {
        Format::Json => Ok(to_json(&report)),
        Format::Csv => {
            let mut t = Table::new(vec![
                "beta_s_deg",
                "omega_sr",
                "two_phi1_deg",
                "two_phi2_deg",
                "two_phi2_unprojected_deg",
                "regime",
            ]);
            t.push(vec![
                report.beta_s_deg.into(),
                report.omega_sr.into(),
                report.two_phi1_deg.into(),
                report.two_phi2_deg.into(),
                report.two_phi2_unprojected_deg.into(),
                Cell::Text(report.regime.into()),
            ]);
            Ok(t.to_csv())
        }
    }
}

/// Residual of the stationarity condition, for diagnostics in tests.
pub fn defect_at(cfg: &RunConfig, beta_s_deg: f64) -> Result<f64, CliError> {
    Ok(stationarity_defect(
        &cfg.probe()?,
        cfg.zeta()?.value(),
        beta_s_deg.to_radians(),
    ))
}
