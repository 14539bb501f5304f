//! Critical separations, the damping bound, far-apart asymptotes and parameter sweeps.

mod sweep;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::{covariance_matrix_late, Backend, ModeMoments};
use crate::entanglement::{eta_reduced, EtaBranch};
use crate::error::{Error, Result};
use crate::model::{Branch, SystemParams, CROSSOVER_MARGIN};
use crate::specfun::{lambert_w_real, EULER_GAMMA};

pub use sweep::{
    critical_surface, sweep, CriticalSurface, ParamAxis, ParamName, SurfacePoint, SweepPoint, SweepResult, SweepSpec,
};

/// Log-spaced scan density used before bisection.
pub const SAMPLES_PER_DECADE: usize = 400;
/// Root refinement target on |eta_lt^2 - 1/4|.
pub const ROOT_RESIDUAL: f64 = 1e-10;
/// Calibrated validity limits of the analytic critical separations.
pub const LARGE_SEP_MIN_OMEGA_ELL: f64 = 2.0;
pub const SMALL_SEP_MAX_CORRECTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaPoint {
    pub ell: f64,
    pub eta_lt_sq: f64,
    pub eta_gt_sq: f64,
    pub branch: EtaBranch,
    pub plus: ModeMoments,
    pub minus: ModeMoments,
}

impl EtaPoint {
    /// <chi_+^2><p_-^2> - <chi_-^2><p_+^2>, zero at the branch switch.
    pub fn branch_gap(&self) -> f64 {
        self.plus.chi_sq * self.minus.p_sq - self.minus.chi_sq * self.plus.p_sq
    }
}

/// eta_lt^2 at separation `ell` (the ell stored in `params` is ignored).
pub fn eta_sq_of_ell(params: &SystemParams, ell: f64, backend: Backend) -> Result<EtaPoint> {
    let p = params.with_ell(ell);
    let v = covariance_matrix_late(&p, backend)?;
    let [plus, minus] = v.modes.expect("late covariance carries its modes");
    let (lt, gt, branch) = eta_reduced(plus.chi_sq, minus.chi_sq, plus.p_sq, minus.p_sq);
    Ok(EtaPoint { ell, eta_lt_sq: lt, eta_gt_sq: gt, branch, plus, minus })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationKind {
    /// Entangled above, separable just below.
    EllGt,
    /// Entangled below, separable just above.
    EllLt,
    /// Switch between the two reduced products.
    EllCross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMethod {
    NumericRoot,
    LargeSepFormula,
    SmallSepFormula,
    Iterated,
    LambertClosed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSeparation {
    pub value: f64,
    pub kind: SeparationKind,
    pub method: SeparationMethod,
    /// |eta_lt^2(value) - 1/4| through the closed-form path, when it can be evaluated.
    pub eta_residual: Option<f64>,
    /// False when the value lies outside the declared validity regime of its method.
    pub valid: bool,
    pub notes: Vec<String>,
}

impl CriticalSeparation {
    fn new(value: f64, kind: SeparationKind, method: SeparationMethod) -> Self {
        Self { value, kind, method, eta_residual: None, valid: true, notes: Vec::new() }
    }

    fn flag(&mut self, cond: bool, note: impl Into<String>) {
        if !cond {
            self.valid = false;
            self.notes.push(note.into());
        }
    }

    fn with_residual(mut self, params: &SystemParams) -> Self {
        self.eta_residual =
            eta_sq_of_ell(params, self.value, Backend::ClosedForm).ok().map(|e| (e.eta_lt_sq - 0.25).abs());
        self
    }
}

fn omegas(params: &SystemParams) -> (f64, f64) {
    (params.omega_sq(Branch::Plus).sqrt(), params.omega_sq(Branch::Minus).sqrt())
}

/// Smallest separation allowed by the stability rule of both modes.
pub fn stability_floor(params: &SystemParams) -> f64 {
    2.0 * params.gamma / params.omega_sq(Branch::Minus).min(params.omega_sq(Branch::Plus))
}

/// Scan bracket [1.01 x stability floor, 10^3 / omega].
pub fn default_bracket(params: &SystemParams) -> (f64, f64) {
    let lo = (1.01 * stability_floor(params)).max(1e-6 / params.omega);
    (lo, 1e3 / params.omega)
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

fn check_bracket(params: &SystemParams, bracket: (f64, f64)) -> Result<()> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParams(format!("bad bracket ({lo}, {hi})")));
    }
    if lo <= stability_floor(params) {
        return Err(Error::InvalidParams(format!(
            "bracket starts at {lo}, inside the unstable region ell <= {}",
            stability_floor(params)
        )));
    }
    Ok(())
}

/// Relative bracket width at which bisection stops.
const ROOT_XTOL: f64 = 1e-13;

/// Bisect f on [a, b] (f(a), f(b) of opposite sign) until the bracket collapses or f hits zero.
/// Shallow crossings need the width test: a residual target alone leaves the root loose.
fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<(f64, f64)> {
    let mut best = (a, fa);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() < best.1.abs() {
            best = (m, fm);
        }
        if fm == 0.0 || b - a <= ROOT_XTOL * m || !(m > a && m < b) {
            return Ok((m, fm));
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(best)
}

/// All roots of eta_lt^2(ell) = 1/4 in the bracket, found on a log-spaced scan and refined by bisection.
pub fn critical_separation_numeric(
    params: &SystemParams,
    bracket: (f64, f64),
    backend: Backend,
) -> Result<Vec<CriticalSeparation>> {
    critical_separation_numeric_with(params, bracket, backend, SAMPLES_PER_DECADE)
}

pub fn critical_separation_numeric_with(
    params: &SystemParams,
    bracket: (f64, f64),
    backend: Backend,
    samples_per_decade: usize,
) -> Result<Vec<CriticalSeparation>> {
    params.with_ell(bracket.1).validate()?;
    check_bracket(params, bracket)?;
    let grid = log_grid(bracket.0, bracket.1, samples_per_decade);
    let values = par_map(&grid, |&l| eta_sq_of_ell(params, l, backend).map(|e| e.eta_lt_sq - 0.25).ok());
    let f = |l: f64| eta_sq_of_ell(params, l, backend).map(|e| e.eta_lt_sq - 0.25);
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else { continue };
        if fa == 0.0 {
            roots.push((grid[i], 0.0, fb < 0.0));
            continue;
        }
        if fb == 0.0 || (fa < 0.0) == (fb < 0.0) {
            continue;
        }
        let (root, res) = bisect(f, grid[i], grid[i + 1], fa)?;
        roots.push((root, res, fa > 0.0));
    }
    Ok(roots
        .into_iter()
        .map(|(value, res, descending)| {
            let kind = if descending { SeparationKind::EllGt } else { SeparationKind::EllLt };
            let mut c = CriticalSeparation::new(value, kind, SeparationMethod::NumericRoot);
            c.eta_residual = Some(res.abs());
            c.flag(res.abs() <= ROOT_RESIDUAL, format!("residual {res:e} above target"));
            c
        })
        .collect())
}

/// Separations where the two reduced products exchange roles.
pub fn branch_switch_points(
    params: &SystemParams,
    bracket: (f64, f64),
    backend: Backend,
) -> Result<Vec<CriticalSeparation>> {
    check_bracket(params, bracket)?;
    let grid = log_grid(bracket.0, bracket.1, SAMPLES_PER_DECADE);
    let gap = |l: f64| -> Result<f64> {
        let e = eta_sq_of_ell(params, l, backend)?;
        // relative gap keeps the bisection scale-free
        Ok(e.branch_gap() / (e.eta_lt_sq + e.eta_gt_sq))
    };
    let values = par_map(&grid, |&l| gap(l).ok());
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else { continue };
        if (fa < 0.0) == (fb < 0.0) {
            continue;
        }
        let (root, _) = bisect(gap, grid[i], grid[i + 1], fa)?;
        let e = eta_sq_of_ell(params, root, backend)?;
        let mut c = CriticalSeparation::new(root, SeparationKind::EllCross, SeparationMethod::NumericRoot);
        c.eta_residual = Some((e.eta_lt_sq - 0.25).abs());
        out.push(c);
    }
    Ok(out)
}

/// (alpha_c, beta_c) of the large-separation expansion eta_lt^2 ~ alpha_c + beta_c / ell^2.
pub fn large_sep_coefficients(params: &SystemParams) -> (f64, f64) {
    let (wp, wm) = omegas(params);
    let g = params.gamma;
    let l = (params.lambda_cut.powi(2) / (wm * wm)).ln() - 1.0;
    let alpha_c = wm / (4.0 * wp) + (-wm + wp * l) / (2.0 * PI * wp * wp) * g
        - (PI * PI * (3.0 * wp * wp - wm * wm) + 8.0 * wp * wm * l) / (8.0 * PI * PI * wp.powi(3) * wm) * g * g;
    let beta_c = wm / (PI * wp.powi(4)) * g + 2.0 * l / (PI * PI * wp.powi(4)) * g * g;
    (alpha_c, beta_c)
}

fn varsigma_at(params: &SystemParams, ell: f64) -> f64 {
    params.sigma * ell / (2.0 * params.gamma)
}

fn require_damping(params: &SystemParams) -> Result<()> {
    params.validate_basic()?;
    if params.gamma <= 0.0 {
        return Err(Error::Domain("critical separations need gamma > 0".into()));
    }
    Ok(())
}

/// Large-separation critical separation from alpha_c and beta_c.
pub fn ell_gt_large_sep(params: &SystemParams) -> Result<CriticalSeparation> {
    require_damping(params)?;
    let (alpha_c, beta_c) = large_sep_coefficients(params);
    let radicand_den = 1.0 - 4.0 * alpha_c;
    if radicand_den <= 0.0 {
        return Err(Error::OutOfValidity(format!(
            "1 - 4 alpha_c = {radicand_den} <= 0: eta_lt^2 stays above 1/4 at large separation, no ell_gt"
        )));
    }
    let value = (4.0 * beta_c / radicand_den).sqrt();
    let mut c = CriticalSeparation::new(value, SeparationKind::EllGt, SeparationMethod::LargeSepFormula);
    let (_, wm) = omegas(params);
    let om_minus = (wm * wm - params.gamma * params.gamma).max(0.0).sqrt();
    c.flag(
        om_minus * value >= LARGE_SEP_MIN_OMEGA_ELL,
        format!("Omega_- ell = {} below {LARGE_SEP_MIN_OMEGA_ELL}", om_minus * value),
    );
    c.flag(
        varsigma_at(params, value) > 1.0 + CROSSOVER_MARGIN,
        format!("varsigma = {} not above the crossover band", varsigma_at(params, value)),
    );
    c.flag(value > stability_floor(params), "inside the unstable region");
    Ok(c.with_residual(params))
}

/// Leading small-separation estimate.
pub fn ell_gt_small_sep_leading(params: &SystemParams) -> Result<f64> {
    let (wp, wm) = omegas(params);
    let (p2, m2) = (wp * wp, wm * wm);
    let den = -(p2 + m2) + ((p2 - m2).powi(2) + 4.0 * wp.powi(3) * wm).sqrt();
    if !(den > 0.0) {
        return Err(Error::OutOfValidity(format!("leading small-separation denominator {den} <= 0")));
    }
    Ok(2.0 * params.gamma / den)
}

/// Small-separation critical separation with its first correction in gamma/omega_+.
pub fn ell_gt_small_sep(params: &SystemParams) -> Result<CriticalSeparation> {
    require_damping(params)?;
    let (wp, wm) = omegas(params);
    let g = params.gamma;
    let l0 = ell_gt_small_sep_leading(params)?;
    let log_term = EULER_GAMMA + (params.lambda_cut * l0).ln();
    let a0 = wm.powi(3) / (4.0 * wp.powi(3));
    let b0 = (wp * wp + wm * wm) * wm / (4.0 * wp.powi(3));
    let a1 = -(wp + wm) * wm * wm / (PI * wp.powi(3));
    let b1 = -((wp + wm) * (wp * wp + wm * wm) - wp * wm * wm * log_term) / (PI * wp.powi(3));
    let c1 = -((wp + wm) - wp * log_term) / (PI * wp);
    let x = wm * wm * l0 / g;
    let rel = (a1 + b1 * x + c1 * x * x) / (2.0 * a0 + b0 * x) * g / wp;
    let value = l0 * (1.0 + rel);
    if !(value > 0.0) {
        return Err(Error::OutOfValidity(format!("corrected small-separation value {value} <= 0")));
    }
    let mut c = CriticalSeparation::new(value, SeparationKind::EllGt, SeparationMethod::SmallSepFormula);
    c.flag(wp * value < 1.0, format!("omega_+ ell = {} not below 1", wp * value));
    c.flag(
        varsigma_at(params, value) > 1.0 + CROSSOVER_MARGIN,
        format!("varsigma = {} not above the crossover band", varsigma_at(params, value)),
    );
    c.flag(rel.abs() <= SMALL_SEP_MAX_CORRECTION, format!("first-order correction {rel} too large"));
    c.flag(value > stability_floor(params), "inside the unstable region");
    Ok(c.with_residual(params))
}

/// One application of the small-separation fixed-point map for ell_lt.
pub fn ell_lt_map(params: &SystemParams, ell: f64) -> Result<f64> {
    let (wp, wm) = omegas(params);
    let g = params.gamma;
    let log_term = EULER_GAMMA + (wp * wp * ell / params.lambda_cut).ln();
    let num = ((wp * wp + wm * wm) / (4.0 * wp * wm)
        - ((wp.powi(3) + wm.powi(3)) + wp * wp * wm * log_term) / (PI * wp * wm * wm) * g / wp)
        * g
        / (wm * wm);
    let den = (wp - wm) / (4.0 * wm) - wp * log_term / (PI * wm) * g / wp;
    let next = num / den;
    if !(next > 0.0 && next.is_finite()) {
        return Err(Error::Domain(format!("ell_lt iteration left the positive axis at ell = {ell} (got {next})")));
    }
    Ok(next)
}

/// Fixed-point iteration for ell_lt, started at 1.5 x 2 gamma / omega_-^2.
pub fn ell_lt_iterated(params: &SystemParams, n_iter: usize) -> Result<CriticalSeparation> {
    require_damping(params)?;
    let mut ell = 1.5 * 2.0 * params.gamma / params.omega_sq(Branch::Minus);
    let mut converged = false;
    for _ in 0..n_iter {
        let next = ell_lt_map(params, ell)?;
        let done = (next - ell).abs() <= 1e-10 * next;
        ell = next;
        if done {
            converged = true;
            break;
        }
    }
    let mut c = CriticalSeparation::new(ell, SeparationKind::EllLt, SeparationMethod::Iterated);
    c.flag(converged, format!("not converged after {n_iter} iterations; last iterate returned"));
    c.flag(
        varsigma_at(params, ell) < 1.0 - CROSSOVER_MARGIN,
        format!("varsigma = {} not below the crossover band", varsigma_at(params, ell)),
    );
    c.flag(params.sigma < 0.5 * params.omega * params.omega, "needs sigma < omega^2 / 2");
    c.flag(ell > stability_floor(params), "inside the unstable region");
    Ok(c.with_residual(params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakCouplingSeparation {
    pub first_iteration: CriticalSeparation,
    pub lambert: CriticalSeparation,
}

/// Residual of pi / (2 omega ell) + ln ell - (ln(lambda/omega^2) - gamma_E) for the weak-coupling ell_lt.
pub fn weak_coupling_residual(omega: f64, lambda_cut: f64, ell: f64) -> f64 {
    let c2 = -PI / (2.0 * omega);
    let c1 = -1.0;
    let c0 = (lambda_cut / (omega * omega)).ln() - EULER_GAMMA;
    c2 / ell + c1 * ell.ln() + c0
}

/// Weak-coupling ell_lt: first iteration and the branch -1 Lambert closed form.
pub fn ell_lt_weak_coupling(omega: f64, lambda_cut: f64) -> Result<WeakCouplingSeparation> {
    if !(omega > 0.0 && lambda_cut > omega) {
        return Err(Error::InvalidParams("need omega > 0 and lambda_cut > omega".into()));
    }
    let first = PI / (2.0 * omega * ((2.0 * lambda_cut / (PI * omega)).ln() - EULER_GAMMA));
    let arg = -PI * omega * EULER_GAMMA.exp() / (2.0 * lambda_cut);
    if arg <= -1.0 / std::f64::consts::E {
        return Err(Error::Domain(format!("Lambert argument {arg} below -1/e: cutoff too small")));
    }
    let w = lambert_w_real(-1, arg)?;
    let lambert = -PI / (2.0 * omega) / w;
    let mut a = CriticalSeparation::new(first, SeparationKind::EllLt, SeparationMethod::Iterated);
    a.notes.push("single iteration with ell = pi/(2 omega) inside the logarithm".into());
    let b = CriticalSeparation::new(lambert, SeparationKind::EllLt, SeparationMethod::LambertClosed);
    Ok(WeakCouplingSeparation { first_iteration: a, lambert: b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaBound {
    pub exact: f64,
    pub small_sigma: f64,
}

/// Largest damping for which far-apart detectors can stay entangled.
pub fn gamma_upper_bound(omega: f64, sigma: f64, lambda_cut: f64) -> Result<GammaBound> {
    if !(omega > 0.0 && sigma.abs() < omega * omega && lambda_cut > omega) {
        return Err(Error::InvalidParams("need omega > 0, |sigma| < omega^2, lambda_cut > omega".into()));
    }
    let (p2, m2) = (omega * omega + sigma, omega * omega - sigma);
    let num = 0.25 * (1.0 - (m2 / p2).sqrt());
    let den = p2.sqrt() / (2.0 * PI * p2) * ((lambda_cut * lambda_cut / m2).ln() - 1.0) - m2.sqrt() / (2.0 * PI * p2);
    let small = omega * PI / (4.0 * ((lambda_cut / omega).ln() - 1.0)) * sigma / (omega * omega);
    Ok(GammaBound { exact: num / den, small_sigma: small })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    /// 1/4 sqrt((omega^2 - sigma)/(omega^2 + sigma)).
    pub leading: f64,
    /// Leading value plus the first-order damping correction.
    pub first_order: f64,
}

/// Far-apart limit of eta_lt^2.
pub fn asymptote(params: &SystemParams) -> Asymptote {
    let (p2, m2) = (params.omega_sq(Branch::Plus), params.omega_sq(Branch::Minus));
    let leading = 0.25 * (m2 / p2).sqrt();
    let slope =
        -m2.sqrt() / (2.0 * PI * p2) + p2.sqrt() / (2.0 * PI * p2) * ((params.lambda_cut.powi(2) / m2).ln() - 1.0);
    Asymptote { leading, first_order: leading + params.gamma * slope }
}
