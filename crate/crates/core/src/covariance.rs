//! Late-time second moments of the normal modes and the assembled 4x4
//! covariance matrix in the (chi_1, p_1, chi_2, p_2) basis.
//!
//! Two independent routes are provided: adaptive quadrature of the real
//! spectral integrals (any temperature) and the zero-temperature closed forms
//! built from I1, I2, J1, J2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{d2_bar, d2_markov};
use crate::error::{Error, Result};
use crate::model::{branch_stable, mode_view, Branch, ModeView, SystemParams};
use crate::quad::{integrate_with_breakpoints, QuadOptions};
use crate::specfun::{arccot, exp_integral_e1_scaled};

/// Relative tolerance of the moment quadratures.
pub const QUAD_REL_TOL: f64 = 1e-12;
/// The position tail is extended until the last doubling contributes less than this.
pub const TAIL_REL_TOL: f64 = 1e-13;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    Quadrature,
    ClosedForm,
}

/// Which propagator the quadrature integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// Full 1/g(-i kappa).
    #[default]
    Exact,
    /// Expansion to first order in the delay term, the same order as the closed forms.
    FirstOrder,
}

/// How the mode moments feeding a covariance matrix are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    ClosedForm,
    Quadrature,
    QuadratureFirstOrder,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" | "closed-form" => Ok(Backend::ClosedForm),
            "quadrature" => Ok(Backend::Quadrature),
            "quadrature_first_order" | "quadrature-first-order" => Ok(Backend::QuadratureFirstOrder),
            _ => Err(Error::InvalidParams(format!("unknown backend '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMoments {
    pub branch: Branch,
    pub chi_sq: f64,
    pub p_sq: f64,
    pub method: MomentMethod,
    pub cutoff_used: f64,
}

/// coth(beta kappa / 2) times kappa, finite at kappa = 0; zero temperature gives |kappa|.
fn kappa_coth(kappa: f64, beta: Option<f64>) -> f64 {
    match beta {
        None => kappa.abs(),
        Some(b) => {
            let x = 0.5 * b * kappa;
            if x == 0.0 {
                2.0 / b
            } else {
                2.0 / b * x / x.tanh()
            }
        }
    }
}

/// Spatial part of the symmetric field correlator in frequency space:
/// sin(kappa R)/(4 pi R) coth(beta kappa/2), with the R = 0 and kappa = 0 limits taken analytically.
pub fn hadamard_kernel(r: f64, kappa: f64, beta: Option<f64>) -> f64 {
    let kc = kappa_coth(kappa, beta);
    if r == 0.0 || kappa == 0.0 {
        return kc / (4.0 * PI);
    }
    // sin(kR)/(kR) keeps the kappa = 0 limit and the parity of kappa coth
    let x = kappa * r;
    x.sin() / x * kc / (4.0 * PI)
}

/// Imaginary part of the retarded kernel in frequency space, sin(kappa R)/(4 pi R).
pub fn retarded_kernel_im(r: f64, kappa: f64) -> f64 {
    if r == 0.0 {
        kappa / (4.0 * PI)
    } else {
        (kappa * r).sin() / (4.0 * PI * r)
    }
}

/// 1 -+ sin(x)/x without cancellation near x = 0.
fn one_pm_sinc(sign: f64, x: f64) -> f64 {
    if sign > 0.0 {
        return 1.0 + if x == 0.0 { 1.0 } else { x.sin() / x };
    }
    if x.abs() < 0.1 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        1.0 - x.sin() / x
    }
}

/// G_H(0, kappa) +- G_H(ell, kappa), the force-correlation kernel of one mode.
pub fn mode_kernel(branch: Branch, kappa: f64, ell: f64, beta: Option<f64>) -> f64 {
    one_pm_sinc(branch.sign(), kappa * ell) * kappa_coth(kappa, beta) / (4.0 * PI)
}

fn breakpoints(mode: &ModeView, params: &SystemParams, upper: f64) -> Vec<f64> {
    let g = params.gamma;
    let w = mode.omega_mode;
    let mut pts = vec![0.0];
    for centre in [Some(w), mode.resonance].into_iter().flatten() {
        for d in [0.0, 1.0, 4.0, 16.0] {
            pts.push(centre - d * g);
            pts.push(centre + d * g);
        }
    }
    // zeros of sin(kappa ell), capped in number
    let k_osc = upper.min((20.0 * w).max(40.0 * PI / params.ell));
    let spacing = PI / params.ell;
    let n_zeros = (k_osc / spacing).floor();
    let stride = (n_zeros / 20_000.0).ceil().max(1.0);
    let mut n = stride;
    while n * spacing < k_osc {
        pts.push(n * spacing);
        n += stride;
    }
    pts.push(k_osc);
    let mut k = k_osc;
    while upper.is_finite() && 2.0 * k < upper {
        k *= 2.0;
        pts.push(k);
    }
    pts.retain(|&p| p >= 0.0 && p <= upper && p.is_finite());
    if upper.is_finite() {
        pts.push(upper);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    pts
}

fn integrate_spectrum<F: Fn(f64) -> f64>(f: &F, pts: &[f64], infinite_tail: bool) -> Result<f64> {
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: QUAD_REL_TOL, max_intervals: 400_000 };
    let mut total = integrate_with_breakpoints(f, pts, opts)?.value;
    if !infinite_tail {
        return Ok(total);
    }
    let mut k = *pts.last().expect("at least two breakpoints");
    for _ in 0..200 {
        let seg_opts = QuadOptions { abs_tol: 1e-3 * TAIL_REL_TOL * total.abs(), ..opts };
        let seg = integrate_with_breakpoints(f, &[k, 2.0 * k], seg_opts)?.value;
        total += seg;
        k *= 2.0;
        if seg.abs() < TAIL_REL_TOL * total.abs() {
            return Ok(total);
        }
    }
    Err(Error::Quadrature("position tail did not converge".into()))
}

fn check_moments(m: ModeMoments) -> Result<ModeMoments> {
    if !(m.chi_sq > 0.0 && m.p_sq > 0.0 && m.chi_sq.is_finite() && m.p_sq.is_finite()) {
        return Err(Error::Unstable(format!(
            "{} mode moments not positive: chi_sq = {}, p_sq = {}",
            m.branch, m.chi_sq, m.p_sq
        )));
    }
    Ok(m)
}

fn require_mode_stable(mode: &ModeView, params: &SystemParams) -> Result<()> {
    if branch_stable(params, mode.branch) {
        Ok(())
    } else {
        Err(Error::Unstable(format!(
            "{} mode violates 2 gamma < omega_pm^2 ell (2 gamma = {}, omega_pm^2 ell = {})",
            mode.branch,
            2.0 * params.gamma,
            mode.omega_sq() * params.ell
        )))
    }
}

/// Late-time moments by quadrature of the exact propagator.
pub fn mode_moments_quadrature(mode: &ModeView, params: &SystemParams) -> Result<ModeMoments> {
    mode_moments_quadrature_with(mode, params, Propagator::Exact)
}

/// Late-time moments by quadrature, with a choice of propagator.
///
/// Momentum integrals stop sharply at the cutoff; position integrals run to infinity.
pub fn mode_moments_quadrature_with(
    mode: &ModeView,
    params: &SystemParams,
    propagator: Propagator,
) -> Result<ModeMoments> {
    params.validate_basic()?;
    require_mode_stable(mode, params)?;
    let (g, ell, beta, m) = (params.gamma, params.ell, params.beta, params.m);
    let c = mode.weight;
    let sign = mode.branch.sign();

    // both variants return Im(dbar) coth(beta kappa / 2) / kappa
    let spectral = |kappa: f64| -> f64 {
        if kappa == 0.0 {
            return 0.0;
        }
        match propagator {
            Propagator::Exact => match d2_bar(mode, kappa, params) {
                Ok(d) => 2.0 * g * d.norm_sqr() * 4.0 * PI * mode_kernel(mode.branch, kappa, ell, beta) / kappa,
                Err(_) => f64::NAN,
            },
            Propagator::FirstOrder => {
                let base = d2_markov(mode, kappa, params);
                let delay = Complex64::from_polar(2.0 * g / ell, kappa * ell) * base * base * sign;
                (base + delay).im * kappa_coth(kappa, beta) / (kappa * kappa)
            }
        }
    };

    let chi_pts = breakpoints(mode, params, f64::INFINITY);
    let chi_int = integrate_spectrum(&|k: f64| spectral(k) * k, &chi_pts, true)?;
    let p_pts = breakpoints(mode, params, params.lambda_cut);
    let p_int = integrate_spectrum(&|k: f64| spectral(k) * k * k * k, &p_pts, false)?;
    check_moments(ModeMoments {
        branch: mode.branch,
        chi_sq: c / (PI * m) * chi_int,
        p_sq: c * m / PI * p_int,
        method: MomentMethod::Quadrature,
        cutoff_used: params.lambda_cut,
    })
}

fn closed_form_preconditions(mode: &ModeView, params: &SystemParams) -> Result<f64> {
    params.validate_basic()?;
    if params.beta.is_some() {
        return Err(Error::Domain("closed forms hold at zero temperature only (beta = None)".into()));
    }
    if params.gamma >= mode.omega_mode {
        return Err(Error::Domain(format!(
            "closed forms need gamma < omega_pm (gamma = {}, omega_{} = {})",
            params.gamma, mode.branch, mode.omega_mode
        )));
    }
    mode.resonance()
}

/// e^{i(Om - i g) ell} (pi - i Ei[-i(Om - i g) ell]) and e^{-i(Om + i g) ell} (pi + i Ei[i(Om + i g) ell]),
/// evaluated through e^w E1(w) with w = (g +- i Om) ell.
fn delay_factors(omega_r: f64, g: f64, ell: f64) -> Result<(Complex64, Complex64)> {
    let up = exp_integral_e1_scaled(Complex64::new(g * ell, omega_r * ell))?;
    let down = exp_integral_e1_scaled(Complex64::new(g * ell, -omega_r * ell))?;
    Ok((I * up, -I * down))
}

/// (I1, I2) for one mode at zero temperature.
pub fn position_integrals_closed(mode: &ModeView, params: &SystemParams) -> Result<(Complex64, Complex64)> {
    let om = closed_form_preconditions(mode, params)?;
    let (g, ell, w2) = (params.gamma, params.ell, mode.omega_sq());
    let i1 = I / om * arccot(g / om);
    let (f_up, f_down) = delay_factors(om, g, ell)?;
    let pref = g / (2.0 * om.powi(3) * ell);
    let i2 = -I * (g * g / (om * om * w2 * ell))
        + I * Complex64::new(1.0, -om * ell) * pref * f_up
        + I * Complex64::new(1.0, om * ell) * pref * f_down;
    Ok((i1, i2))
}

/// (J1, J2) for one mode at zero temperature, J1 regularized by the sharp cutoff.
pub fn momentum_integrals_closed(mode: &ModeView, params: &SystemParams) -> Result<(Complex64, Complex64)> {
    let om = closed_form_preconditions(mode, params)?;
    let (g, ell, w2, lam) = (params.gamma, params.ell, mode.omega_sq(), params.lambda_cut);
    let k_up = Complex64::new(om, -g);
    let k_down = Complex64::new(om, g);
    let bracket =
        -PI * k_up * k_up + 2.0 * (om * om - g * g) * (g / om).atan() + 2.0 * om * g * (w2 / (lam * lam)).ln();
    let j1 = -lam - I / (2.0 * om) * bracket;
    let (f_up, f_down) = delay_factors(om, g, ell)?;
    let pref = g / (2.0 * om.powi(3) * ell);
    let j2 = I * (g * g / (om * om * ell)) - pref * (I * w2 - k_up * k_up * (om * ell)) * f_up
        + pref * (-I * w2 - k_down * k_down * (om * ell)) * f_down;
    Ok((j1, j2))
}

/// Late-time moments from the closed forms.
pub fn mode_moments_closed(mode: &ModeView, params: &SystemParams) -> Result<ModeMoments> {
    require_mode_stable(mode, params)?;
    let (i1, i2) = position_integrals_closed(mode, params)?;
    let (j1, j2) = momentum_integrals_closed(mode, params)?;
    let sign = mode.branch.sign();
    let (c, m) = (mode.weight, params.m);
    check_moments(ModeMoments {
        branch: mode.branch,
        chi_sq: c / (PI * m) * (i1 + i2 * sign).im,
        p_sq: c * m / PI * (j1 + j2 * sign).im,
        method: MomentMethod::ClosedForm,
        cutoff_used: params.lambda_cut,
    })
}

pub fn mode_moments(mode: &ModeView, params: &SystemParams, backend: Backend) -> Result<ModeMoments> {
    match backend {
        Backend::ClosedForm => mode_moments_closed(mode, params),
        Backend::Quadrature => mode_moments_quadrature_with(mode, params, Propagator::Exact),
        Backend::QuadratureFirstOrder => mode_moments_quadrature_with(mode, params, Propagator::FirstOrder),
    }
}

/// Symmetric 4x4 covariance matrix over (chi_1, p_1, chi_2, p_2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub entries: [[f64; 4]; 4],
    /// Mode moments the matrix was assembled from, when known.
    pub modes: Option<[ModeMoments; 2]>,
}

impl CovarianceMatrix {
    pub fn from_entries(entries: [[f64; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = (entries[i][j], entries[j][i]);
                if !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                    return Err(Error::InvalidParams(format!("entries not finite and symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { entries, modes: None })
    }

    /// Assemble from plus and minus mode moments.
    pub fn from_modes(plus: ModeMoments, minus: ModeMoments) -> Self {
        let mut v = [[0.0; 4]; 4];
        v[0][0] = plus.chi_sq + 0.25 * minus.chi_sq;
        v[2][2] = v[0][0];
        v[0][2] = plus.chi_sq - 0.25 * minus.chi_sq;
        v[2][0] = v[0][2];
        v[1][1] = plus.p_sq + 0.25 * minus.p_sq;
        v[3][3] = v[1][1];
        v[1][3] = plus.p_sq - 0.25 * minus.p_sq;
        v[3][1] = v[1][3];
        Self { entries: v, modes: Some([plus, minus]) }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    /// 2x2 block between detector a and detector b (0 or 1).
    pub fn block(&self, a: usize, b: usize) -> [[f64; 2]; 2] {
        let (r, c) = (2 * a, 2 * b);
        [[self.entries[r][c], self.entries[r][c + 1]], [self.entries[r + 1][c], self.entries[r + 1][c + 1]]]
    }

    /// Recover (chi_plus^2, chi_minus^2, p_plus^2, p_minus^2) from the entries.
    pub fn mode_products(&self) -> (f64, f64, f64, f64) {
        let v = &self.entries;
        (0.5 * (v[0][0] + v[0][2]), 2.0 * (v[0][0] - v[0][2]), 0.5 * (v[1][1] + v[1][3]), 2.0 * (v[1][1] - v[1][3]))
    }
}

pub fn covariance_matrix_late(params: &SystemParams, backend: Backend) -> Result<CovarianceMatrix> {
    params.validate()?;
    let plus = mode_moments(&mode_view(params, Branch::Plus)?, params, backend)?;
    let minus = mode_moments(&mode_view(params, Branch::Minus)?, params, backend)?;
    Ok(CovarianceMatrix::from_modes(plus, minus))
}
