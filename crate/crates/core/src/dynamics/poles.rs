use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{effective_parameters, g_tilde, g_tilde_prime};
use crate::error::{Error, Result};
use crate::model::{Branch, ModeView, SystemParams};
use crate::specfun::{lambert_w, lambert_w0_of_exp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleMethod {
    Perturbative,
    Numeric,
    Lambert,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderPole {
    pub n: u32,
    pub seed: Complex64,
    /// Newton-refined pole, `None` when refinement failed for this n.
    pub pole: Option<Complex64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleSet {
    /// Conjugate pair (upper, lower), absent for a pure ladder.
    pub dominant: Option<[Complex64; 2]>,
    pub ladder: Vec<LadderPole>,
    pub method: PoleMethod,
    /// Largest |g(s*)| over the reported poles.
    pub residual_norm: f64,
}

/// Perturbative dominant pair s = -Gamma +- i W.
pub fn dominant_pole_perturbative(mode: &ModeView, params: &SystemParams) -> Result<PoleSet> {
    if 2.0 * params.gamma >= mode.omega_sq() * params.ell {
        return Err(Error::OutOfValidity(format!("perturbative poles need 2 gamma < omega_{}^2 ell", mode.branch)));
    }
    let eff = effective_parameters(mode, params)?;
    let s = Complex64::new(-eff.gamma_eff, eff.w_eff);
    let residual = g_tilde(mode, s, params).norm();
    Ok(PoleSet {
        dominant: Some([s, s.conj()]),
        ladder: Vec::new(),
        method: PoleMethod::Perturbative,
        residual_norm: residual,
    })
}

const NEWTON_MAX_ITER: usize = 100;

/// Newton refinement of a zero of g from `seed`.
pub fn find_poles_numeric(mode: &ModeView, params: &SystemParams, seed: Complex64) -> Result<Complex64> {
    let mut s = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let g = g_tilde(mode, s, params);
        let tol = 1e-12 * mode.omega_sq().max(s.norm_sqr());
        if g.norm() <= tol {
            return Ok(s);
        }
        let dg = g_tilde_prime(mode, s, params);
        if dg.norm() == 0.0 {
            break;
        }
        let mut step = g / dg;
        let cap = 10.0 * (1.0 + s.norm());
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        s -= step;
        if !(s.re.is_finite() && s.im.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence(format!("Newton pole search for the {} mode from seed {seed}", mode.branch)))
}

/// Dominant pole located numerically. For the plus mode beyond the stability
/// boundary the real runaway root is returned; otherwise the upper member of
/// the oscillating pair.
pub fn dominant_pole(mode: &ModeView, params: &SystemParams) -> Result<PoleSet> {
    let mut candidates = Vec::new();
    if mode.branch == Branch::Plus {
        candidates.push(largest_real_root_plus(mode, params));
    }
    let seed = match dominant_pole_perturbative(mode, params) {
        Ok(set) => set.dominant.map(|d| d[0]),
        Err(_) => None,
    }
    .unwrap_or_else(|| Complex64::new(-params.gamma, mode.omega_mode));
    if let Ok(s) = find_poles_numeric(mode, params, seed) {
        candidates.push(if s.im < 0.0 { s.conj() } else { s });
    }
    let best = candidates
        .into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::NoConvergence(format!("dominant pole of the {} mode", mode.branch)))?;
    Ok(PoleSet {
        dominant: Some([best, best.conj()]),
        ladder: Vec::new(),
        method: PoleMethod::Numeric,
        residual_norm: g_tilde(mode, best, params).norm(),
    })
}

/// The plus mode always has a real root: g -> -inf as s -> -inf. On the real
/// axis g is increasing for s >= 0, so when g(0) <= 0 the root is non-negative.
fn largest_real_root_plus(mode: &ModeView, params: &SystemParams) -> Complex64 {
    let g = |s: f64| g_tilde(mode, Complex64::new(s, 0.0), params).re;
    let (mut lo, mut hi) = if g(0.0) <= 0.0 {
        let mut hi = 1.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        (0.0, hi)
    } else {
        let mut step = 0.05 * (1.0 / params.ell).min(mode.omega_mode);
        let mut s = 0.0;
        loop {
            let next = s - step;
            if g(next) <= 0.0 {
                break (next, s);
            }
            s = next;
            step *= 1.2;
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Complex64::new(0.5 * (lo + hi), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongDampingRoot {
    /// y = s ell
    pub y: Complex64,
    pub s: Complex64,
    /// False for the minus mode, whose reduced equation has no real solution.
    pub real: bool,
}

/// Root of the reduced equation 2 gamma ell y + omega_pm^2 ell^2 -+ 2 gamma ell e^{-y} = 0,
/// valid when damping dominates the inertial term.
pub fn strong_damping_root(mode: &ModeView, params: &SystemParams) -> Result<StrongDampingRoot> {
    if params.gamma <= 0.0 {
        return Err(Error::Domain("strong-damping root needs gamma > 0".into()));
    }
    let a = mode.omega_sq() * params.ell / (2.0 * params.gamma);
    let (w, real) = match mode.branch {
        Branch::Plus => (Complex64::new(lambert_w0_of_exp(a)?, 0.0), true),
        Branch::Minus => {
            let w = if a < 700.0 {
                lambert_w(0, Complex64::new(-a.exp(), 0.0))?
            } else {
                log_form_principal(Complex64::new(a, PI))?
            };
            (w, false)
        }
    };
    let y = w - a;
    Ok(StrongDampingRoot { y, s: y / params.ell, real })
}

/// Newton solve of the reduced equation in y = s ell from an arbitrary seed,
/// independent of the Lambert-W route.
pub fn reduced_equation_root(mode: &ModeView, params: &SystemParams, seed: Complex64) -> Result<Complex64> {
    let k = 2.0 * params.gamma * params.ell;
    let c = mode.omega_sq() * params.ell * params.ell;
    let sign = mode.branch.sign();
    let mut y = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let e = (-y).exp();
        let f = y * k + c - e * (sign * k);
        let df = k + e * (sign * k);
        let step = f / df;
        y -= step;
        if !(y.re.is_finite() && y.im.is_finite()) {
            break;
        }
        if step.norm() <= 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence(format!("reduced-equation Newton for the {} mode from {seed}", mode.branch)))
}

/// Solves w + ln w = c for the principal branch when e^c overflows.
fn log_form_principal(c: Complex64) -> Result<Complex64> {
    let mut w = c - c.ln();
    for _ in 0..NEWTON_MAX_ITER {
        let f = w + w.ln() - c;
        let dw = f / (w.inv() + 1.0);
        w -= dw;
        if dw.norm() <= 4.0 * f64::EPSILON * w.norm() {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence(format!("log-form Lambert solve at {c}")))
}

/// Large-n poles y_n = u_n + i v_n, seeded from the asymptotic formula and refined.
pub fn asymptotic_pole_ladder(mode: &ModeView, params: &SystemParams, n_min: u32, n_max: u32) -> Result<PoleSet> {
    if n_min < 5 || n_max < n_min {
        return Err(Error::InvalidParams(format!("ladder needs 5 <= n_min <= n_max (got {n_min}..{n_max})")));
    }
    if params.gamma <= 0.0 {
        return Err(Error::Domain("no delay-induced pole ladder when gamma = 0".into()));
    }
    let ell = params.ell;
    let mut ladder = Vec::new();
    let mut worst: f64 = 0.0;
    for n in n_min..=n_max {
        let nf = n as f64;
        let v = match mode.branch {
            Branch::Plus => PI * (2.0 * nf - 1.0),
            Branch::Minus => PI * 2.0 * nf,
        };
        let u = (2.0 * params.gamma * ell).ln() - 2.0 * v.ln();
        let seed = Complex64::new(u, v) / ell;
        let refined = find_poles_numeric(mode, params, seed).ok();
        let residual = refined.map_or(f64::INFINITY, |s| g_tilde(mode, s, params).norm());
        if refined.is_some() {
            worst = worst.max(residual);
        }
        ladder.push(LadderPole { n, seed, pole: refined, residual });
    }
    Ok(PoleSet { dominant: None, ladder, method: PoleMethod::Asymptotic, residual_norm: worst })
}

/// Number of zeros of g in the open right half plane, by the argument principle
/// along the imaginary axis closed by a large arc where g ~ s^2.
pub fn count_unstable_poles(mode: &ModeView, params: &SystemParams) -> Result<u32> {
    let g = params.gamma;
    let big = 2.0 * g + mode.omega_mode + (2.0 * g / params.ell).sqrt();
    let radius = 20.0 * big.max(1.0);
    let eval = |k: f64| g_tilde(mode, Complex64::new(0.0, k), params);
    let scale = mode.omega_sq().max(1.0);
    let mut k = 0.0;
    let mut prev = eval(0.0);
    if prev.norm() < 1e-13 * scale {
        return Err(Error::PoleOnAxis(prev.norm()));
    }
    let mut phase = 0.0;
    let mut h = 0.1 * (PI / params.ell).min(big) / 8.0;
    while k < radius {
        let step = h.min(radius - k);
        let next = eval(k + step);
        let d = (next / prev).arg();
        if d.abs() > 0.3 && step > 1e-12 {
            h = step * 0.5;
            continue;
        }
        if next.norm() < 1e-13 * scale {
            return Err(Error::PoleOnAxis(next.norm()));
        }
        phase += d;
        prev = next;
        k += step;
        if d.abs() < 0.05 {
            h = (h * 1.5).min(0.1 * (PI / params.ell).min(big));
        }
    }
    // closing arc contributes -2 pi (g ~ s^2 swept clockwise through the right half plane)
    let total = 2.0 * phase;
    let z = (2.0 * PI - total) / (2.0 * PI);
    let rounded = z.round();
    if (z - rounded).abs() > 0.1 || rounded < 0.0 {
        return Err(Error::NoConvergence(format!("argument-principle count not integral: {z}")));
    }
    Ok(rounded as u32)
}
