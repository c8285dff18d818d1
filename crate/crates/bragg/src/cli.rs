//! Argument parsing and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, AngleGrid, FitArgs, OracleArgs};
use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Bragg scattering from finite one-dimensional optical lattices.
#[derive(Debug, Parser)]
#[command(name = "bragg", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Commented JSON config; defaults to the built-in experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the report here instead of the config path or stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for the oracle and synthetic scans.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub lambda_brg_nm: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_dip_nm: Option<f64>,
    #[arg(long, global = true)]
    pub beta_i_deg: Option<f64>,
    #[arg(long, global = true)]
    pub beta_s_deg: Option<f64>,
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    #[arg(long, global = true)]
    pub n_layers: Option<u32>,
    #[arg(long, global = true)]
    pub sigma_r_um: Option<f64>,
    #[arg(long, global = true)]
    pub sigma_z_nm: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_min_nm: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_max_nm: Option<f64>,
    #[arg(long, global = true)]
    pub n_points: Option<usize>,
    #[arg(long, global = true)]
    pub noise_deg: Option<f64>,
    #[arg(long, global = true)]
    pub n_atoms: Option<usize>,
    #[arg(long, global = true)]
    pub n_seeds: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a commented config template.
    Init,
    /// Classical Bragg angle arccos(lambda_brg / lambda_dip).
    BraggAngle,
    /// Structure factor along the Ewald sphere.
    StructureFactor(GridArgs),
    /// Emission angle from the generalized Bragg condition.
    SolveAngle,
    /// Specular, cosine-sum and generalized emission angles over the scan range.
    Scan,
    /// Fit the aspect ratio to a scan CSV.
    Fit {
        /// CSV with header lambda_dip_nm,beta_s_deg[,sigma_deg].
        scan: PathBuf,
        /// Also fit a constant angle offset.
        #[arg(long)]
        fit_offset: bool,
        #[arg(long, default_value_t = 101)]
        curve_points: usize,
    },
    /// Monte-Carlo and semi-analytic references against the closed form.
    Oracle {
        #[command(flatten)]
        grid: GridArgs,
        /// Exit with status 5 when any |z| exceeds 5.
        #[arg(long)]
        validate: bool,
        /// Also export the first sample cloud as x_m,y_m,z_m CSV.
        #[arg(long, value_name = "PATH")]
        cloud_out: Option<PathBuf>,
    },
    /// Solid angle and divergence of the reflected beam.
    Divergence,
    /// Synthetic scan (CSV unless --format json).
    Synth,
}

/// Emission-angle grid; defaults to beta_i -1 deg .. +1 deg.
#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub beta_min_deg: Option<f64>,
    #[arg(long)]
    pub beta_max_deg: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub n_angles: usize,
}

impl GridArgs {
    fn resolve(&self, cfg: &RunConfig) -> Result<AngleGrid, CliError> {
        let b = cfg.probe()?.beta_i().to_degrees();
        Ok(AngleGrid {
            min_deg: self.beta_min_deg.unwrap_or(b - 1.0),
            max_deg: self.beta_max_deg.unwrap_or(b + 1.0),
            n: self.n_angles,
        })
    }
}

impl GlobalArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        macro_rules! set {
            ($flag:ident => $($target:tt)+) => {
                if let Some(v) = self.$flag {
                    $($target)+ = v.into();
                }
            };
        }
        set!(lambda_brg_nm => cfg.probe.lambda_brg_nm);
        set!(lambda_dip_nm => cfg.probe.lambda_dip_nm);
        set!(beta_i_deg => cfg.probe.beta_i_deg);
        set!(beta_s_deg => cfg.emission.beta_s_deg);
        set!(zeta => cfg.zeta);
        set!(n_layers => cfg.geometry.n_layers);
        set!(sigma_r_um => cfg.geometry.sigma_r_um);
        set!(sigma_z_nm => cfg.geometry.sigma_z_nm);
        set!(lambda_min_nm => cfg.scan.lambda_min_nm);
        set!(lambda_max_nm => cfg.scan.lambda_max_nm);
        set!(n_points => cfg.scan.n_points);
        set!(noise_deg => cfg.scan.noise_deg);
        set!(n_atoms => cfg.oracle.n_atoms);
        set!(n_seeds => cfg.oracle.n_seeds);
        set!(seed => cfg.oracle.seed);
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if self.sigma_r_um.is_some() || self.sigma_z_nm.is_some() {
            cfg.trap = None;
        }
        cfg.validate()
    }
}

fn write_to(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Report text and the destination it should go to (`None`: stdout).
pub struct Outcome {
    pub text: String,
    pub path: Option<PathBuf>,
    /// Error to report after the text has been written.
    pub deferred: Option<CliError>,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    g.apply(&mut cfg)?;
    let format = cfg.output.format;
    let path = g
        .out
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let mut deferred = None;
    let text = match &cli.command {
        Command::Init => cfg.render(),
        Command::BraggAngle => commands::bragg_angle(&cfg, format)?,
        Command::StructureFactor(grid) => {
            commands::structure_factor(&cfg, grid.resolve(&cfg)?, format)?
        }
        Command::SolveAngle => commands::solve_angle(&cfg, format)?,
        Command::Scan => commands::scan(&cfg, format)?,
        Command::Fit {
            scan,
            fit_offset,
            curve_points,
        } => {
            let scan_text = std::fs::read_to_string(scan).map_err(|e| CliError::io(scan, e))?;
            let args = FitArgs {
                scan_text: &scan_text,
                fit_angle_offset: *fit_offset,
                curve_points: *curve_points,
            };
            commands::fit(&cfg, &args, format)?
        }
        Command::Oracle {
            grid,
            validate,
            cloud_out,
        } => {
            if let Some(p) = cloud_out {
                write_to(p, &commands::cloud_csv(&cfg, cfg.oracle.seed)?)?;
            }
            let args = OracleArgs {
                grid: grid.resolve(&cfg)?,
                validate: *validate,
            };
            let (text, failure) = commands::oracle(&cfg, &args, format)?;
            deferred = failure;
            text
        }
        Command::Divergence => commands::divergence(&cfg, format)?,
        Command::Synth => {
            let format = g.format.unwrap_or(Format::Csv);
            commands::synth(&cfg, cfg.oracle.seed, format)?
        }
    };
    Ok(Outcome {
        text,
        path,
        deferred,
    })
}

/// Thread count from `BRAGG_NUM_THREADS`; unset, empty or 0 means automatic.
pub fn configure_threads() -> Result<(), CliError> {
    let n = match std::env::var("BRAGG_NUM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("BRAGG_NUM_THREADS: not a count: {v:?}")))?,
        _ => 0,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| {
        let outcome = run(&cli)?;
        match &outcome.path {
            Some(p) => write_to(p, &outcome.text)?,
            None => print!("{}", outcome.text),
        }
        outcome.deferred.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bragg: {e}");
            e.exit_code()
        }
    }
}
