//! Grid sweeps over system parameters with per-point sentinels.

use serde::{Deserialize, Serialize};

use super::{critical_separation_numeric, default_bracket, eta_sq_of_ell, gamma_upper_bound, par_map, SeparationKind};
use crate::covariance::Backend;
use crate::entanglement::{negativity, EtaBranch};
use crate::error::{Error, Result};
use crate::model::{classify_regime, stability_check, Regime, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    M,
    Omega,
    Gamma,
    Sigma,
    Ell,
    LambdaCut,
    Beta,
}

impl ParamName {
    pub const ALL: [ParamName; 7] = [
        ParamName::M,
        ParamName::Omega,
        ParamName::Gamma,
        ParamName::Sigma,
        ParamName::Ell,
        ParamName::LambdaCut,
        ParamName::Beta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::M => "m",
            ParamName::Omega => "omega",
            ParamName::Gamma => "gamma",
            ParamName::Sigma => "sigma",
            ParamName::Ell => "ell",
            ParamName::LambdaCut => "lambda_cut",
            ParamName::Beta => "beta",
        }
    }

    /// Value of this parameter; zero temperature reads as +inf.
    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            ParamName::M => p.m,
            ParamName::Omega => p.omega,
            ParamName::Gamma => p.gamma,
            ParamName::Sigma => p.sigma,
            ParamName::Ell => p.ell,
            ParamName::LambdaCut => p.lambda_cut,
            ParamName::Beta => p.beta.unwrap_or(f64::INFINITY),
        }
    }

    pub fn set(self, p: &mut SystemParams, v: f64) {
        match self {
            ParamName::M => p.m = v,
            ParamName::Omega => p.omega = v,
            ParamName::Gamma => p.gamma = v,
            ParamName::Sigma => p.sigma = v,
            ParamName::Ell => p.ell = v,
            ParamName::LambdaCut => p.lambda_cut = v,
            ParamName::Beta => p.beta = if v.is_infinite() { None } else { Some(v) },
        }
    }
}

impl std::str::FromStr for ParamName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown parameter '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub name: ParamName,
    pub values: Vec<f64>,
}

impl ParamAxis {
    /// Parse `name=start:stop:n` (linear), `name=start:stop:n:log`, or `name=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidParams(format!("grid axis '{text}': {why}"));
        let (name, rhs) = text.split_once('=').ok_or_else(|| bad("expected name=values"))?;
        let name: ParamName = name.trim().parse()?;
        let num = |s: &str| -> Result<f64> {
            match s.trim() {
                "inf" => Ok(f64::INFINITY),
                t => t.parse::<f64>().map_err(|_| bad(&format!("'{t}' is not a number"))),
            }
        };
        let parts: Vec<&str> = rhs.split(':').collect();
        let values = match parts.as_slice() {
            [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
            [a, b, n] | [a, b, n, _] => {
                let (a, b) = (num(a)?, num(b)?);
                let n: usize = n.trim().parse().map_err(|_| bad("point count must be an integer"))?;
                if n == 0 {
                    return Err(bad("point count must be positive"));
                }
                let log = match parts.get(3).map(|s| s.trim()) {
                    None | Some("lin") => false,
                    Some("log") => true,
                    Some(other) => return Err(bad(&format!("unknown spacing '{other}'"))),
                };
                if log && !(a > 0.0 && b > 0.0) {
                    return Err(bad("log spacing needs positive endpoints"));
                }
                (0..n)
                    .map(|i| {
                        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                        if log {
                            a * (b / a).powf(t)
                        } else {
                            a + (b - a) * t
                        }
                    })
                    .collect()
            }
            _ => return Err(bad("expected start:stop:n[:log] or a comma list")),
        };
        if values.iter().any(|v| v.is_nan()) {
            return Err(bad("NaN value"));
        }
        Ok(Self { name, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SystemParams,
    /// Outer axis first; the last axis varies fastest.
    pub axes: Vec<ParamAxis>,
    #[serde(default)]
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub params: SystemParams,
    pub eta_sq: Option<f64>,
    pub eta_gt_sq: Option<f64>,
    pub negativity: Option<f64>,
    pub log_negativity: Option<f64>,
    pub branch: Option<EtaBranch>,
    pub stable_plus: bool,
    pub stable_minus: bool,
    pub varsigma: Option<f64>,
    pub regime: Option<Regime>,
    /// Diagnostic for points without values.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<ParamAxis>,
    pub shape: Vec<usize>,
    pub points: Vec<SweepPoint>,
}

fn evaluate(params: SystemParams, backend: Backend) -> SweepPoint {
    let (stable_plus, stable_minus) = stability_check(&params);
    let regime = classify_regime(&params).ok();
    let mut point = SweepPoint {
        params,
        eta_sq: None,
        eta_gt_sq: None,
        negativity: None,
        log_negativity: None,
        branch: None,
        stable_plus,
        stable_minus,
        varsigma: regime.map(|r| r.varsigma),
        regime: regime.map(|r| r.regime),
        error: None,
    };
    let outcome =
        eta_sq_of_ell(&params, params.ell, backend).and_then(|e| negativity(e.eta_lt_sq.sqrt()).map(|n| (e, n)));
    match outcome {
        Ok((e, (n, ln))) => {
            point.eta_sq = Some(e.eta_lt_sq);
            point.eta_gt_sq = Some(e.eta_gt_sq);
            point.negativity = Some(n);
            point.log_negativity = Some(ln);
            point.branch = Some(e.branch);
        }
        Err(err) => point.error = Some(err.to_string()),
    }
    point
}

fn expand_grid(spec: &SweepSpec) -> Result<(Vec<usize>, Vec<SystemParams>)> {
    let mut seen = Vec::new();
    for axis in &spec.axes {
        if seen.contains(&axis.name) {
            return Err(Error::InvalidParams(format!("axis '{}' given twice", axis.name.as_str())));
        }
        if axis.values.is_empty() {
            return Err(Error::InvalidParams(format!("axis '{}' is empty", axis.name.as_str())));
        }
        seen.push(axis.name);
    }
    let shape: Vec<usize> = spec.axes.iter().map(|a| a.values.len()).collect();
    let total: usize = shape.iter().product();
    let grid: Vec<SystemParams> = (0..total)
        .map(|mut idx| {
            let mut p = spec.base;
            for axis in spec.axes.iter().rev() {
                let n = axis.values.len();
                axis.name.set(&mut p, axis.values[idx % n]);
                idx /= n;
            }
            p
        })
        .collect();
    Ok((shape, grid))
}

/// Evaluate every grid point; bad points carry sentinels instead of aborting the sweep.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let (shape, grid) = expand_grid(spec)?;
    let points = par_map(&grid, |p| evaluate(*p, spec.backend));
    Ok(SweepResult { axes: spec.axes.clone(), shape, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub params: SystemParams,
    /// Smallest separation where entanglement is lost going outward.
    pub ell_lt: Option<f64>,
    /// Largest separation beyond which entanglement returns.
    pub ell_gt: Option<f64>,
    /// Far-apart damping bound for these omega, sigma, lambda_cut.
    pub gamma_max: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSurface {
    pub axes: Vec<ParamAxis>,
    pub shape: Vec<usize>,
    pub points: Vec<SurfacePoint>,
}

fn surface_point(params: SystemParams, backend: Backend) -> SurfacePoint {
    let mut point = SurfacePoint { params, ell_lt: None, ell_gt: None, gamma_max: None, error: None };
    point.gamma_max = gamma_upper_bound(params.omega, params.sigma, params.lambda_cut).ok().map(|b| b.exact);
    match critical_separation_numeric(&params, default_bracket(&params), backend) {
        Ok(roots) => {
            point.ell_lt = roots.iter().find(|c| c.kind == SeparationKind::EllLt).map(|c| c.value);
            point.ell_gt = roots.iter().rev().find(|c| c.kind == SeparationKind::EllGt).map(|c| c.value);
        }
        Err(e) => point.error = Some(e.to_string()),
    }
    point
}

/// Critical separations over a grid without an ell axis.
pub fn critical_surface(spec: &SweepSpec) -> Result<CriticalSurface> {
    if spec.axes.iter().any(|a| a.name == ParamName::Ell) {
        return Err(Error::InvalidParams("a critical-separation surface scans ell itself; drop the ell axis".into()));
    }
    let (shape, grid) = expand_grid(spec)?;
    // roots are scanned in parallel inside each point
    let points = grid.iter().map(|p| surface_point(*p, spec.backend)).collect();
    Ok(CriticalSurface { axes: spec.axes.clone(), shape, points })
}

fn param_cells(p: &SystemParams, skip_ell: bool) -> Vec<String> {
    ParamName::ALL
        .iter()
        .filter(|n| !(skip_ell && **n == ParamName::Ell))
        .map(|n| if *n == ParamName::Beta { fmt_opt(p.beta) } else { fmt_f64(n.get(p)) })
        .collect()
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let io = |e: csv::Error| Error::InvalidParams(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParams(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidParams(format!("csv: {e}")))
}

impl CriticalSurface {
    pub const CSV_COLUMNS: [&'static str; 10] =
        ["m", "omega", "gamma", "sigma", "lambda_cut", "beta", "ell_lt", "ell_gt", "gamma_max", "error"];

    pub fn to_csv(&self) -> Result<String> {
        csv_string(
            &Self::CSV_COLUMNS,
            self.points.iter().map(|p| {
                let mut row = param_cells(&p.params, true);
                row.extend([
                    fmt_opt(p.ell_lt),
                    fmt_opt(p.ell_gt),
                    fmt_opt(p.gamma_max),
                    p.error.clone().unwrap_or_default(),
                ]);
                row
            }),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParams(format!("json: {e}")))
    }
}

/// 17 significant digits.
fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl SweepResult {
    pub const CSV_COLUMNS: [&'static str; 17] = [
        "m",
        "omega",
        "gamma",
        "sigma",
        "ell",
        "lambda_cut",
        "beta",
        "eta_sq",
        "eta_gt_sq",
        "negativity",
        "log_negativity",
        "branch",
        "stable_plus",
        "stable_minus",
        "varsigma",
        "regime",
        "error",
    ];

    pub fn eta_sq(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.eta_sq).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        csv_string(
            &Self::CSV_COLUMNS,
            self.points.iter().map(|p| {
                let mut row = param_cells(&p.params, false);
                row.extend([
                    fmt_opt(p.eta_sq),
                    fmt_opt(p.eta_gt_sq),
                    fmt_opt(p.negativity),
                    fmt_opt(p.log_negativity),
                    p.branch.map(|b| b.to_string()).unwrap_or_default(),
                    p.stable_plus.to_string(),
                    p.stable_minus.to_string(),
                    fmt_opt(p.varsigma),
                    p.regime.map(|r| r.to_string()).unwrap_or_default(),
                    p.error.clone().unwrap_or_default(),
                ]);
                row
            }),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParams(format!("json: {e}")))
    }
}
