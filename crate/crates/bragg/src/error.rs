use std::path::Path;

/// Failure classes of the command-line tool, each with a fixed exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bragg_core::Error),
    #[error("{what}: line {line}: {detail}")]
    Parse {
        what: String,
        line: u64,
        detail: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("oracle validation failed: {count} of {total} points with |z| > {limit} (max |z| = {max_z:.3})")]
    Validation {
        count: usize,
        total: usize,
        limit: f64,
        max_z: f64,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2: no Bragg angle, 3: fit diverged, 4: parse failure,
    /// 5: oracle validation, 1: anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(bragg_core::Error::NoBraggAngle { .. }) => 2,
            CliError::Core(bragg_core::Error::FitDiverged { .. }) => 3,
            CliError::Parse { .. } => 4,
            CliError::Validation { .. } => 5,
            _ => 1,
        }
    }
}
