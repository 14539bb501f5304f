//! Parameter defaults, config files and flag overrides.

use std::path::Path;

use clap::Args;
use qbm_pair::covariance::Backend;
use qbm_pair::SystemParams;
use serde::Deserialize;

use crate::CliError;

/// Parameter flags. Names mirror the `SystemParams` fields.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamFlags {
    /// Oscillator mass
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// Bare oscillator frequency
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Damping rate from the field coupling
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Direct coupling between the oscillators
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    /// Separation (light travel time)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ell: Option<f64>,
    /// High-frequency cutoff
    #[arg(long = "lambda-cut", visible_alias = "cutoff", global = true, allow_hyphen_values = true)]
    pub lambda_cut: Option<f64>,
    /// Inverse temperature; `inf` for zero temperature
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Covariance backend: closed-form, quadrature or quadrature-first-order
    #[arg(long, global = true, value_parser = parse_backend)]
    pub backend: Option<Backend>,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: qbm_pair::Error| e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum BetaValue {
    Number(f64),
    Text(String),
}

/// Contents of a `--config` file: TOML, so plain `key = value` lines work.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    m: Option<f64>,
    omega: Option<f64>,
    gamma: Option<f64>,
    sigma: Option<f64>,
    ell: Option<f64>,
    lambda_cut: Option<f64>,
    beta: Option<BetaValue>,
    backend: Option<String>,
}

pub const DEFAULTS: SystemParams =
    SystemParams { m: 1.0, omega: 1.0, gamma: 0.05, sigma: 0.0, ell: 1.0, lambda_cut: 1000.0, beta: None };

fn beta_from(v: f64) -> Option<f64> {
    if v.is_infinite() && v > 0.0 {
        None
    } else {
        Some(v)
    }
}

pub fn resolve(config: Option<&Path>, flags: &ParamFlags) -> Result<(SystemParams, Backend), CliError> {
    let file = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str::<ConfigFile>(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))?
        }
        None => ConfigFile::default(),
    };
    let mut p = DEFAULTS;
    let pick = |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
    p.m = pick(flags.m, file.m, p.m);
    p.omega = pick(flags.omega, file.omega, p.omega);
    p.gamma = pick(flags.gamma, file.gamma, p.gamma);
    p.sigma = pick(flags.sigma, file.sigma, p.sigma);
    p.ell = pick(flags.ell, file.ell, p.ell);
    p.lambda_cut = pick(flags.lambda_cut, file.lambda_cut, p.lambda_cut);
    let file_beta = match file.beta {
        None => None,
        Some(BetaValue::Number(v)) => Some(v),
        Some(BetaValue::Text(t)) => Some(
            t.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("config: beta must be a number or \"inf\", got {t:?}")))?,
        ),
    };
    p.beta = flags.beta.or(file_beta).and_then(beta_from);
    let backend = match (flags.backend, file.backend) {
        (Some(b), _) => b,
        (None, Some(text)) => text.parse().map_err(|e: qbm_pair::Error| CliError::Usage(format!("config: {e}")))?,
        (None, None) => Backend::ClosedForm,
    };
    Ok((p, backend))
}
