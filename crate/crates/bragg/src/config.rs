//! Run configuration: commented JSON in lab units (nm, um, deg).

use std::fmt::Write as _;

use bragg_core::{
    layer_sizes_from_trap, reciprocal_widths, AspectRatio, LatticeGeometry, ProbeConfig,
    TrapParameters,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const NM: f64 = 1e-9;
const UM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub probe: ProbeSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub trap: Option<TrapSection>,
    /// `None` derives the aspect ratio from the geometry.
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub emission: EmissionSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub lambda_brg_nm: f64,
    pub lambda_dip_nm: f64,
    /// `None` selects the resonant incidence `arccos(lambda_brg / lambda_dip)`.
    #[serde(default)]
    pub beta_i_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub n_layers: u32,
    #[serde(default)]
    pub sigma_r_um: Option<f64>,
    #[serde(default)]
    pub sigma_z_nm: Option<f64>,
    /// `None` uses `lambda_dip / 2`.
    #[serde(default)]
    pub d_nm: Option<f64>,
    #[serde(default = "default_density")]
    pub n0_per_m3: f64,
}

fn default_density() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub w_dip_um: f64,
    pub temperature_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionSection {
    /// `None` uses the incidence angle.
    #[serde(default)]
    pub beta_s_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub n_points: usize,
    pub noise_deg: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            lambda_min_nm: 810.0,
            lambda_max_nm: 813.0,
            n_points: 31,
            noise_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_atoms: usize,
    pub n_seeds: usize,
    pub seed: u64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            n_atoms: 2000,
            n_seeds: 100,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub path: Option<String>,
}

impl Default for RunConfig {
    /// The experiment: 780 nm probe on an 811 nm lattice, 4.8 mm long, with
    /// 70 um rms radial and 57.5 nm rms axial layer widths.
    fn default() -> Self {
        Self {
            probe: ProbeSection {
                lambda_brg_nm: 780.0,
                lambda_dip_nm: 811.0,
                beta_i_deg: None,
            },
            geometry: GeometrySection {
                n_layers: 11837,
                sigma_r_um: Some(70.0),
                sigma_z_nm: Some(57.5),
                d_nm: None,
                n0_per_m3: 1.0,
            },
            trap: None,
            zeta: Some(0.01),
            emission: EmissionSection::default(),
            scan: ScanSection::default(),
            oracle: OracleSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Blank out `//` and `/* */` comments outside string literals, keeping
/// newlines so parser positions still match the input.
pub fn strip_comments(text: &str) -> String {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Code,
        Str,
        Escape,
        Line,
        Block,
    }
    let mut out = String::with_capacity(text.len());
    let mut state = State::Code;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        state = match (state, c) {
            (State::Code, '"') => {
                out.push(c);
                State::Str
            }
            (State::Code, '/') if chars.peek() == Some(&'/') => {
                chars.next();
                out.push_str("  ");
                State::Line
            }
            (State::Code, '/') if chars.peek() == Some(&'*') => {
                chars.next();
                out.push_str("  ");
                State::Block
            }
            (State::Str, '\\') => {
                out.push(c);
                State::Escape
            }
            (State::Str, '"') => {
                out.push(c);
                State::Code
            }
            (State::Escape, _) => {
                out.push(c);
                State::Str
            }
            (State::Line, '\n') => {
                out.push(c);
                State::Code
            }
            (State::Block, '*') if chars.peek() == Some(&'/') => {
                chars.next();
                out.push_str("  ");
                State::Code
            }
            (State::Block, '\n') => {
                out.push(c);
                state
            }
            (State::Line | State::Block, _) => {
                out.push(' ');
                state
            }
            (s, c) => {
                out.push(c);
                s
            }
        };
    }
    out
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain values serialize")
}

impl RunConfig {
    /// Parse commented JSON. Comments are blanked in place, so reported line
    /// numbers refer to the original text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(&strip_comments(text)).map_err(|e| CliError::Parse {
                what: "config".into(),
                line: e.line() as u64,
                detail: e.to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Exactly one source of layer sizes: both sigmas, or a trap.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.geometry;
        match (&self.trap, g.sigma_r_um, g.sigma_z_nm) {
            (None, Some(_), Some(_)) | (Some(_), None, None) => Ok(()),
            (None, _, _) => Err(CliError::Config(
                "geometry needs sigma_r_um and sigma_z_nm unless a trap section is given".into(),
            )),
            (Some(_), _, _) => Err(CliError::Config(
                "give either geometry sigmas or a trap section, not both".into(),
            )),
        }
    }

    pub fn probe(&self) -> Result<ProbeConfig, CliError> {
        let p = &self.probe;
        let probe = match p.beta_i_deg {
            Some(b) => {
                ProbeConfig::new(p.lambda_brg_nm * NM, p.lambda_dip_nm * NM, b.to_radians())?
            }
            None => ProbeConfig::at_resonance(p.lambda_brg_nm * NM, p.lambda_dip_nm * NM)?,
        };
        Ok(probe)
    }

    /// `(sigma_r, sigma_z)` in meters, from the trap when present.
    pub fn layer_sizes(&self) -> Result<(f64, f64), CliError> {
        match &self.trap {
            Some(t) => {
                let trap = TrapParameters::new(t.w_dip_um * UM, t.temperature_ratio)?;
                let (sz, sr) = layer_sizes_from_trap(&trap, self.probe.lambda_dip_nm * NM)?;
                Ok((sr, sz))
            }
            None => {
                self.validate()?;
                let g = &self.geometry;
                Ok((
                    g.sigma_r_um.unwrap_or_default() * UM,
                    g.sigma_z_nm.unwrap_or_default() * NM,
                ))
            }
        }
    }

    pub fn geometry(&self) -> Result<LatticeGeometry, CliError> {
        let (sigma_r, sigma_z) = self.layer_sizes()?;
        let d = self
            .geometry
            .d_nm
            .map_or(0.5 * self.probe.lambda_dip_nm * NM, |d| d * NM);
        Ok(
            LatticeGeometry::new(d, self.geometry.n_layers, sigma_r, sigma_z)?
                .with_density(self.geometry.n0_per_m3)?,
        )
    }

    /// Configured aspect ratio, or the one implied by the geometry.
    pub fn zeta(&self) -> Result<AspectRatio, CliError> {
        match self.zeta {
            Some(z) => Ok(AspectRatio::new(z)?),
            None => Ok(AspectRatio::from_widths(&reciprocal_widths(
                &self.geometry()?,
            ))),
        }
    }

    /// Commented JSON. `parse(render(c)) == c` and rendering is a pure
    /// function of the config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let p = &self.probe;
        let g = &self.geometry;
        let o = &self.oracle;
        let sc = &self.scan;
        // writing to a String cannot fail
        let _ = write!(
            s,
            r#"{{
  // Probe beam (lambda_brg) and lattice laser (lambda_dip).
  "probe": {{
    "lambda_brg_nm": {},
    "lambda_dip_nm": {},
    // Incidence angle to the lattice axis; null picks the resonant angle
    // arccos(lambda_brg / lambda_dip).
    "beta_i_deg": {}
  }},
  // Layers: count, rms radial and axial widths, spacing (null: lambda_dip / 2).
  // Leave both sigmas null when the trap section is used instead.
  "geometry": {{
    "n_layers": {},
    "sigma_r_um": {},
    "sigma_z_nm": {},
    "d_nm": {},
    "n0_per_m3": {}
  }},
  // Optional: derive the widths from the trap waist and k_B T / U_0,
  // e.g. {{"w_dip_um": 220.0, "temperature_ratio": 0.4}}.
  "trap": {},
  // Aspect ratio dk_z^2 / dk_x^2; null derives it from the geometry.
  "zeta": {},
  // Emission angle for the divergence report; null uses beta_i.
  "emission": {{
    "beta_s_deg": {}
  }},
  // Lattice wavelength sweep for scan and synth.
  "scan": {{
    "lambda_min_nm": {},
    "lambda_max_nm": {},
    "n_points": {},
    "noise_deg": {}
  }},
  // Monte-Carlo reference: atoms per cloud, clouds, first seed.
  "oracle": {{
    "n_atoms": {},
    "n_seeds": {},
    "seed": {}
  }},
  // "json" or "csv"; null path writes to stdout.
  "output": {{
    "format": {},
    "path": {}
  }}
}}
"#,
            json(&p.lambda_brg_nm),
            json(&p.lambda_dip_nm),
            json(&p.beta_i_deg),
            json(&g.n_layers),
            json(&g.sigma_r_um),
            json(&g.sigma_z_nm),
            json(&g.d_nm),
            json(&g.n0_per_m3),
            json(&self.trap),
            json(&self.zeta),
            json(&self.emission.beta_s_deg),
            json(&sc.lambda_min_nm),
            json(&sc.lambda_max_nm),
            json(&sc.n_points),
            json(&sc.noise_deg),
            json(&o.n_atoms),
            json(&o.n_seeds),
            json(&o.seed),
            json(&self.output.format),
            json(&self.output.path),
        );
        s
    }
}
