//! Normal-mode delay dynamics: characteristic function, propagators, poles,
//! effective parameters and the method-of-steps transient solver.

mod poles;
mod transient;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModeView, SystemParams};

pub use poles::{
    asymptotic_pole_ladder, count_unstable_poles, dominant_pole, dominant_pole_perturbative, find_poles_numeric,
    reduced_equation_root, strong_damping_root, LadderPole, PoleMethod, PoleSet, StrongDampingRoot,
};
pub use transient::{envelope_decay_rate, simulate_transient, simulate_transient_with, Trajectory, BLOWUP_FACTOR};

/// g(s) = s^2 + 2 gamma s + omega_pm^2 -+ (2 gamma / ell) e^{-s ell}.
pub fn g_tilde(mode: &ModeView, s: Complex64, params: &SystemParams) -> Complex64 {
    let g = params.gamma;
    let delay = (-s * params.ell).exp() * (2.0 * g / params.ell);
    s * s + s * (2.0 * g) + mode.omega_sq() - delay * mode.branch.sign()
}

/// dg/ds = 2 s + 2 gamma +- 2 gamma e^{-s ell}.
pub fn g_tilde_prime(mode: &ModeView, s: Complex64, params: &SystemParams) -> Complex64 {
    let g = params.gamma;
    s * 2.0 + 2.0 * g + (-s * params.ell).exp() * (2.0 * g * mode.branch.sign())
}

/// Frequency-domain propagator 1/g(-i kappa).
pub fn d2_bar(mode: &ModeView, kappa: f64, params: &SystemParams) -> Result<Complex64> {
    let g = g_tilde(mode, Complex64::new(0.0, -kappa), params);
    if g.norm() < 1e-14 {
        return Err(Error::PoleOnAxis(g.norm()));
    }
    Ok(g.inv())
}

/// Propagator without the delay term: 1/(omega_pm^2 - kappa^2 - 2 i gamma kappa).
pub fn d2_markov(mode: &ModeView, kappa: f64, params: &SystemParams) -> Complex64 {
    Complex64::new(mode.omega_sq() - kappa * kappa, -2.0 * params.gamma * kappa).inv()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    /// Magnitude of the geometric ratio between successive terms.
    pub ratio: f64,
    /// Set when successive terms grow.
    pub diverging: bool,
}

/// Partial sum of the expansion of 1/g in powers of the delay term, up to `order`.
pub fn d2_series(mode: &ModeView, kappa: f64, order: usize, params: &SystemParams) -> Result<SeriesValue> {
    let coupling = 2.0 * params.gamma / (mode.omega_sq() * params.ell);
    if coupling >= 1.0 {
        return Err(Error::OutOfValidity(format!("series needs 2 gamma / (omega_pm^2 ell) < 1 (got {coupling})")));
    }
    let base = d2_markov(mode, kappa, params);
    let q = Complex64::from_polar(2.0 * params.gamma / params.ell, kappa * params.ell) * base * mode.branch.sign();
    let mut term = base;
    let mut sum = base;
    for _ in 0..order {
        term *= q;
        sum += term;
    }
    Ok(SeriesValue { value: sum, ratio: q.norm(), diverging: q.norm() > 1.0 })
}

/// Late-time effective damping and frequency of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveParams {
    pub gamma_eff: f64,
    pub w_eff: f64,
    /// omega^2 +- sigma -+ 2 gamma / ell, free of the oscillating cosine term.
    pub w_sq_smooth: f64,
}

pub fn effective_parameters(mode: &ModeView, params: &SystemParams) -> Result<EffectiveParams> {
    let sign = mode.branch.sign();
    let w = mode.omega_mode;
    let x = w * params.ell;
    let w_sq_smooth = mode.omega_sq() - sign * 2.0 * params.gamma / params.ell;
    if w_sq_smooth <= 0.0 {
        return Err(Error::Unstable(format!("{} mode smoothed frequency squared {w_sq_smooth} <= 0", mode.branch)));
    }
    Ok(EffectiveParams {
        gamma_eff: params.gamma * (1.0 + sign * x.sin() / x),
        w_eff: w * (1.0 - sign * (params.gamma / w) * x.cos() / x),
        w_sq_smooth,
    })
}
