use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{CliError, ReportFormat};

/// Environment variable naming a TOML file with default settings.
pub const CONFIG_ENV: &str = "QCR_CONFIG";

/// Settings file contents; every field is optional and command-line flags win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub tol: Option<f64>,
    pub cap: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub report: Option<ReportFormat>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn from_env() -> Result<Self, CliError> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }
}

/// Effective settings for one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Verification tolerance; `None` means the command's own default.
    pub tol: Option<f64>,
    pub cap: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub report: ReportFormat,
}

impl RunConfig {
    pub fn merge(file: FileConfig, flags: &crate::GlobalArgs) -> Result<Self, CliError> {
        let tol = flags.tol.or(file.tol);
        if let Some(t) = tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage(format!(
                    "tolerance must be positive, got {t}"
                )));
            }
        }
        let cap = flags
            .cap
            .or(file.cap)
            .unwrap_or(qcr_core::tensor::DEFAULT_DIM_CAP);
        if cap == 0 {
            return Err(CliError::Usage("dimension cap must be positive".into()));
        }
        Ok(Self {
            tol,
            cap,
            seed: flags.seed.or(file.seed),
            out: flags.out.clone().or(file.out),
            report: flags.report.or(file.report).unwrap_or(ReportFormat::Text),
        })
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn require_seed(&self, what: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Usage(format!(
                "{what} is randomized; pass --seed or set `seed` in the config"
            ))
        })
    }

    pub fn check_dim(&self, dim: Option<usize>) -> Result<(), CliError> {
        match dim {
            Some(d) if d <= self.cap => Ok(()),
            Some(d) => Err(CliError::Usage(format!(
                "dimension {d} exceeds cap {}",
                self.cap
            ))),
            None => Err(CliError::Usage(format!(
                "dimension overflows; cap is {}",
                self.cap
            ))),
        }
    }
}
