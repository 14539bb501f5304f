//! Subcommand bodies. Each returns the text to emit.

use std::fmt::Write as _;

use num_complex::Complex64;
use qbm_pair::analysis::{
    critical_separation_numeric, critical_surface, default_bracket, ell_gt_large_sep, ell_gt_small_sep,
    ell_lt_iterated, ell_lt_weak_coupling, gamma_upper_bound, sweep, CriticalSeparation, ParamAxis, ParamName,
    SweepSpec,
};
use qbm_pair::covariance::{covariance_matrix_late, Backend};
use qbm_pair::dynamics::{
    asymptotic_pole_ladder, count_unstable_poles, dominant_pole, dominant_pole_perturbative, effective_parameters,
    simulate_transient, strong_damping_root,
};
use qbm_pair::entanglement::{entanglement_report, eta_reduced, partial_transpose, symplectic_eigenvalues};
use qbm_pair::model::{classify_regime, mode_view, stability_check, Branch};
use qbm_pair::specfun::{exp_integral_ei, lambert_w};
use qbm_pair::SystemParams;
use serde::Serialize;

use crate::{CliError, Format};

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Usage(format!("json: {e}")))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct NegativityOut {
    params: SystemParams,
    eta_lt: f64,
    eta_gt: f64,
    negativity: f64,
    log_negativity: f64,
    branch: String,
    entangled: bool,
    varsigma: Option<f64>,
    regime: Option<String>,
}

pub fn negativity(p: &SystemParams, backend: Backend, format: Format) -> Result<String, CliError> {
    let v = covariance_matrix_late(p, backend)?;
    let r = entanglement_report(&v)?;
    let regime = classify_regime(p).ok();
    let out = NegativityOut {
        params: *p,
        eta_lt: r.eta_lt,
        eta_gt: r.eta_gt,
        negativity: r.negativity,
        log_negativity: r.log_negativity,
        branch: r.branch.to_string(),
        entangled: r.entangled,
        varsigma: regime.map(|x| x.varsigma),
        regime: regime.map(|x| x.regime.to_string()),
    };
    match format {
        Format::Json => json(&out),
        Format::Csv => Err(CliError::Usage("negativity prints text or json".into())),
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "eta_lt         {}", num(out.eta_lt)).unwrap();
            writeln!(s, "eta_gt         {}", num(out.eta_gt)).unwrap();
            writeln!(s, "negativity     {}", num(out.negativity)).unwrap();
            writeln!(s, "log_negativity {}", num(out.log_negativity)).unwrap();
            writeln!(s, "branch         {}", out.branch).unwrap();
            writeln!(s, "entangled      {}", out.entangled).unwrap();
            match (out.varsigma, &out.regime) {
                (Some(vs), Some(reg)) => writeln!(s, "regime         {reg} (varsigma = {vs:.6})").unwrap(),
                _ => writeln!(s, "regime         undefined (gamma = 0)").unwrap(),
            }
            Ok(s)
        }
    }
}

/// Split `a=1:2:3,b=4,5` into axes: a token with '=' starts a new axis, others extend a value list.
pub fn parse_grid(text: &str) -> Result<Vec<ParamAxis>, CliError> {
    let mut pieces: Vec<String> = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match (token.contains('='), pieces.last_mut()) {
            (true, _) => pieces.push(token.to_string()),
            (false, Some(last)) => {
                last.push(',');
                last.push_str(token);
            }
            (false, None) => return Err(CliError::Usage(format!("grid must start with name=..., got '{token}'"))),
        }
    }
    if pieces.is_empty() {
        return Err(CliError::Usage("empty --grid".into()));
    }
    pieces.iter().map(|p| ParamAxis::parse(p).map_err(|e| CliError::Usage(e.to_string()))).collect()
}

pub fn sweep_cmd(p: &SystemParams, backend: Backend, grid: &str, format: Format) -> Result<String, CliError> {
    let axes = parse_grid(grid)?;
    let spec = SweepSpec { base: *p, axes, backend };
    // an explicit ell axis gives eta on the grid; otherwise the critical-separation surface
    let has_ell = spec.axes.iter().any(|a| a.name == ParamName::Ell);
    let usage = |e: qbm_pair::Error| CliError::Usage(e.to_string());
    match (has_ell, format) {
        (true, Format::Json) => sweep(&spec).map_err(usage)?.to_json().map_err(usage),
        (true, _) => sweep(&spec).map_err(usage)?.to_csv().map_err(usage),
        (false, Format::Json) => critical_surface(&spec).map_err(usage)?.to_json().map_err(usage),
        (false, _) => critical_surface(&spec).map_err(usage)?.to_csv().map_err(usage),
    }
}

#[derive(Serialize)]
struct Estimate {
    method: &'static str,
    value: Option<f64>,
    valid: bool,
    notes: Vec<String>,
}

impl Estimate {
    fn from(method: &'static str, r: qbm_pair::Result<CriticalSeparation>) -> Self {
        match r {
            Ok(c) => Estimate { method, value: Some(c.value), valid: c.valid, notes: c.notes },
            Err(e) => Estimate { method, value: None, valid: false, notes: vec![e.to_string()] },
        }
    }
}

#[derive(Serialize)]
struct CriticalOut {
    params: SystemParams,
    bracket: (f64, f64),
    numeric: Vec<CriticalSeparation>,
    estimates: Vec<Estimate>,
    gamma_max: Option<f64>,
}

pub fn critical_sep(
    p: &SystemParams,
    backend: Backend,
    bracket: Option<(f64, f64)>,
    format: Format,
) -> Result<String, CliError> {
    let bracket = bracket.unwrap_or_else(|| default_bracket(p));
    let numeric = critical_separation_numeric(p, bracket, backend)?;
    let mut estimates = vec![
        Estimate::from("ell_gt_large_sep", ell_gt_large_sep(p)),
        Estimate::from("ell_gt_small_sep", ell_gt_small_sep(p)),
        Estimate::from("ell_lt_iterated", ell_lt_iterated(p, 200)),
    ];
    let mut weak =
        Estimate::from("ell_lt_weak_coupling", ell_lt_weak_coupling(p.omega, p.lambda_cut).map(|w| w.lambert));
    // sigma -> 0 limit: only meaningful deep in the field-induced regime
    if let Some(v) = weak.value {
        let vs = p.sigma.abs() * v / (2.0 * p.gamma);
        if !(vs < 0.1) {
            weak.valid = false;
            weak.notes.push(format!("sigma -> 0 limit, but varsigma = {vs} at this separation"));
        }
    }
    estimates.push(weak);
    let gamma_max = gamma_upper_bound(p.omega, p.sigma, p.lambda_cut).ok().map(|b| b.exact);
    let out = CriticalOut { params: *p, bracket, numeric, estimates, gamma_max };
    match format {
        Format::Json => json(&out),
        Format::Csv => Err(CliError::Usage("critical-sep prints text or json".into())),
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "bracket [{}, {}]", num(bracket.0), num(bracket.1)).unwrap();
            if out.numeric.is_empty() {
                writeln!(s, "no root of eta_lt^2 = 1/4 in the bracket").unwrap();
            }
            for c in &out.numeric {
                writeln!(s, "numeric {:?} {}", c.kind, num(c.value)).unwrap();
            }
            for e in &out.estimates {
                let value = e.value.map(num).unwrap_or_else(|| "-".into());
                let flag = if e.valid { "valid" } else { "outside validity" };
                writeln!(s, "{} {} ({flag}){}", e.method, value, notes_suffix(&e.notes)).unwrap();
            }
            if let Some(g) = gamma_max {
                writeln!(s, "gamma_max {}", num(g)).unwrap();
            }
            Ok(s)
        }
    }
}

fn notes_suffix(notes: &[String]) -> String {
    if notes.is_empty() {
        String::new()
    } else {
        format!(": {}", notes.join("; "))
    }
}

#[derive(Serialize)]
struct ModePoles {
    branch: Branch,
    stable: bool,
    unstable_poles: Option<u32>,
    dominant: Option<[f64; 2]>,
    perturbative: Option<[f64; 2]>,
    gamma_eff: Option<f64>,
    w_eff: Option<f64>,
    strong_damping: Option<[f64; 2]>,
    ladder: Vec<(u32, [f64; 2])>,
}

pub fn poles(p: &SystemParams, ladder: Option<(u32, u32)>, format: Format) -> Result<String, CliError> {
    p.validate()?;
    let (sp, sm) = stability_check(p);
    let mut modes = Vec::new();
    for b in Branch::BOTH {
        let m = mode_view(p, b)?;
        let dominant = dominant_pole(&m, p).ok().and_then(|s| s.dominant).map(|d| pair(d[0]));
        let perturbative = dominant_pole_perturbative(&m, p).ok().and_then(|s| s.dominant).map(|d| pair(d[0]));
        let eff = effective_parameters(&m, p).ok();
        let strong = strong_damping_root(&m, p).ok().map(|r| pair(r.s));
        let ladder = match ladder {
            Some((lo, hi)) => asymptotic_pole_ladder(&m, p, lo, hi)?
                .ladder
                .into_iter()
                .filter_map(|l| l.pole.map(|s| (l.n, pair(s))))
                .collect(),
            None => Vec::new(),
        };
        modes.push(ModePoles {
            branch: b,
            stable: if b == Branch::Plus { sp } else { sm },
            unstable_poles: count_unstable_poles(&m, p).ok(),
            dominant,
            perturbative,
            gamma_eff: eff.map(|e| e.gamma_eff),
            w_eff: eff.map(|e| e.w_eff),
            strong_damping: strong,
            ladder,
        });
    }
    match format {
        Format::Json => json(&modes),
        Format::Csv => Err(CliError::Usage("poles prints text or json".into())),
        Format::Text => {
            let mut s = String::new();
            let show =
                |v: Option<[f64; 2]>| v.map(|[a, b]| format!("{} {:+.16e}i", num(a), b)).unwrap_or_else(|| "-".into());
            for m in &modes {
                writeln!(s, "[{}] stable {}", m.branch, m.stable).unwrap();
                if let Some(n) = m.unstable_poles {
                    writeln!(s, "  right-half-plane poles {n}").unwrap();
                }
                writeln!(s, "  dominant       {}", show(m.dominant)).unwrap();
                writeln!(s, "  perturbative   {}", show(m.perturbative)).unwrap();
                if let (Some(g), Some(w)) = (m.gamma_eff, m.w_eff) {
                    writeln!(s, "  gamma_eff {}  w_eff {}", num(g), num(w)).unwrap();
                }
                writeln!(s, "  strong damping {}", show(m.strong_damping)).unwrap();
                for (n, z) in &m.ladder {
                    writeln!(s, "  ladder n={n:<3} {}", show(Some(*z))).unwrap();
                }
            }
            Ok(s)
        }
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub struct TransientArgs {
    pub branch: Branch,
    pub chi0: f64,
    pub v0: f64,
    pub t_max: f64,
    pub dt: Option<f64>,
}

pub fn transient(p: &SystemParams, a: &TransientArgs, format: Format) -> Result<String, CliError> {
    p.validate_basic()?;
    let m = mode_view(p, a.branch)?;
    let dt = a.dt.unwrap_or_else(|| (p.ell / 50.0).min(2.0 * std::f64::consts::PI / (50.0 * m.omega_mode)));
    let tr = simulate_transient(p, &m, a.chi0, a.v0, a.t_max, dt)?;
    match format {
        Format::Json => json(&tr),
        Format::Text | Format::Csv => {
            let mut s = String::from("t,chi,chi_dot\n");
            for ((t, x), v) in tr.times.iter().zip(&tr.chi).zip(&tr.chi_dot) {
                writeln!(s, "{},{},{}", num(*t), num(*x), num(*v)).unwrap();
            }
            Ok(s)
        }
    }
}

/// Built-in invariant suite on a fixed grid. Returns the report and whether everything passed.
pub fn check() -> (String, bool) {
    let mut s = String::new();
    let mut all = true;
    let mut line = |name: &str, ok: bool, detail: String| {
        all &= ok;
        writeln!(s, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }).unwrap();
    };

    let ei = exp_integral_ei(Complex64::new(1.0, 0.0)).map(|z| (z.re - 1.895_117_816_355_936_8).abs());
    line("Ei(1) reference", matches!(ei, Ok(e) if e < 1e-14), format!("{ei:?}"));
    let mut worst_w: f64 = 0.0;
    for z in
        [Complex64::new(-0.2, 0.0), Complex64::new(3.0, 4.0), Complex64::new(-10.0, 0.5), Complex64::new(1e4, -1.0)]
    {
        for branch in [0, -1] {
            if let Ok(w) = lambert_w(branch, z) {
                worst_w = worst_w.max((w * w.exp() - z).norm() / z.norm());
            } else {
                worst_w = f64::INFINITY;
            }
        }
    }
    line("Lambert W residual", worst_w <= 1e-12, format!("worst {worst_w:.1e}"));

    let grid = [
        SystemParams::new(1.0, 0.01, 0.3, 2.0, 2e3),
        SystemParams::new(1.0, 0.05, -0.2, 5.0, 5e3),
        SystemParams::new(5.0, 0.05, 5.0, 0.4, 1e4),
        SystemParams::new(2.0, 0.1, 1.0, 1.0, 4e3),
        SystemParams::new(0.5, 0.002, 0.05, 20.0, 1e3),
    ];
    let mut worst_dual: f64 = 0.0;
    let mut worst_eta: f64 = 0.0;
    let mut failures = 0;
    for p in &grid {
        let (Ok(a), Ok(b)) =
            (covariance_matrix_late(p, Backend::ClosedForm), covariance_matrix_late(p, Backend::QuadratureFirstOrder))
        else {
            failures += 1;
            continue;
        };
        for (x, y) in a.modes.unwrap().iter().zip(b.modes.unwrap().iter()) {
            let rel = ((x.chi_sq - y.chi_sq) / x.chi_sq).abs().max(((x.p_sq - y.p_sq) / x.p_sq).abs());
            worst_dual = worst_dual.max(rel);
        }
        let [plus, minus] = a.modes.unwrap();
        let (lt_sq, _, _) = eta_reduced(plus.chi_sq, minus.chi_sq, plus.p_sq, minus.p_sq);
        match symplectic_eigenvalues(&partial_transpose(&a)) {
            Ok((_, lt)) => worst_eta = worst_eta.max(((lt * lt - lt_sq) / lt_sq).abs()),
            Err(_) => failures += 1,
        }
    }
    line(
        "closed form vs quadrature",
        failures == 0 && worst_dual <= 1e-6,
        format!("{} points, worst rel {worst_dual:.1e}", grid.len()),
    );
    line("reduced vs full symplectic", failures == 0 && worst_eta <= 1e-10, format!("worst rel {worst_eta:.1e}"));
    (s, all)
}
