//! Method-of-steps integration of the homogeneous delay equation
//! chi'' + 2 gamma chi' + omega_pm^2 chi -+ (2 gamma / ell) chi(t - ell) = 0,
//! with zero history before t = 0.
//!
//! Each step uses the exact damped-oscillator propagator; the delayed forcing
//! is integrated by 3-point Gauss-Legendre quadrature on a cubic Hermite
//! interpolant of the stored history. The step divides ell exactly, so the
//! delayed window always coincides with one earlier step and the first
//! interval (no delayed input) is reproduced exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Branch, ModeView, SystemParams};

/// Amplitude growth beyond this factor is reported as an instability.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub chi: Vec<f64>,
    pub chi_dot: Vec<f64>,
    pub mode: Branch,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Exact propagator of x' = A x, A = [[0, 1], [-w2, -2 gamma]], over a step h.
#[derive(Debug, Clone, Copy)]
struct Propagator {
    gamma: f64,
    w2: f64,
}

impl Propagator {
    /// (c, s) with exp(A t) = e^{-gamma t} [c I + s (A + gamma I)].
    fn cs(&self, t: f64) -> (f64, f64) {
        let disc = self.w2 - self.gamma * self.gamma;
        if disc > 0.0 {
            let w = disc.sqrt();
            ((w * t).cos(), (w * t).sin() / w)
        } else if disc < 0.0 {
            let mu = (-disc).sqrt();
            ((mu * t).cosh(), (mu * t).sinh() / mu)
        } else {
            (1.0, t)
        }
    }

    fn matrix(&self, t: f64) -> [[f64; 2]; 2] {
        let (c, s) = self.cs(t);
        let e = (-self.gamma * t).exp();
        [[e * (c + s * self.gamma), e * s], [-e * s * self.w2, e * (c - s * self.gamma)]]
    }

    /// exp(A t) applied to (0, 1).
    fn impulse(&self, t: f64) -> (f64, f64) {
        let (c, s) = self.cs(t);
        let e = (-self.gamma * t).exp();
        (e * s, e * (c - s * self.gamma))
    }
}

const GL_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, theta: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Integrate one normal mode from (chi0, v0) up to t_max with the delay term.
pub fn simulate_transient(
    params: &SystemParams,
    mode: &ModeView,
    chi0: f64,
    v0: f64,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory> {
    simulate_transient_with(params, mode, chi0, v0, t_max, dt, true)
}

/// As [`simulate_transient`], optionally with the delay term switched off.
pub fn simulate_transient_with(
    params: &SystemParams,
    mode: &ModeView,
    chi0: f64,
    v0: f64,
    t_max: f64,
    dt: f64,
    include_delay: bool,
) -> Result<Trajectory> {
    let ell = params.ell;
    let w2 = mode.omega_sq();
    if !(dt > 0.0 && t_max > 0.0 && chi0.is_finite() && v0.is_finite()) {
        return Err(Error::InvalidParams("need dt > 0, t_max > 0 and finite initial data".into()));
    }
    if dt > ell / 50.0 || dt > 2.0 * std::f64::consts::PI / (50.0 * mode.omega_mode) {
        return Err(Error::InvalidParams(format!("dt = {dt} must be <= ell/50 and <= 2 pi/(50 omega_pm)")));
    }
    // steps per delay interval, so that the delayed window aligns with a stored step
    let per_delay = (ell / dt).ceil() as usize;
    let h = ell / per_delay as f64;
    let n_steps = (t_max / h).ceil() as usize;

    let prop = Propagator { gamma: params.gamma, w2 };
    let m = prop.matrix(h);
    let kernel: Vec<(f64, f64, f64)> = GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&x, w)| {
            let theta = 0.5 * (1.0 + x);
            let (a, b) = prop.impulse(h * (1.0 - theta));
            (theta, 0.5 * h * w * a, 0.5 * h * w * b)
        })
        .collect();
    let coupling = mode.branch.sign() * 2.0 * params.gamma / ell;

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut chi = Vec::with_capacity(n_steps + 1);
    let mut chi_dot = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    chi.push(chi0);
    chi_dot.push(v0);

    let amp0 = (chi0 * chi0 + v0 * v0 / w2).sqrt();
    let limit = BLOWUP_FACTOR * amp0;

    for k in 0..n_steps {
        let (x, v) = (chi[k], chi_dot[k]);
        let mut nx = m[0][0] * x + m[0][1] * v;
        let mut nv = m[1][0] * x + m[1][1] * v;
        if include_delay && k >= per_delay {
            let j = k - per_delay;
            let (y0, d0, y1, d1) = (chi[j], chi_dot[j], chi[j + 1], chi_dot[j + 1]);
            for &(theta, kx, kv) in &kernel {
                let f = coupling * hermite(y0, d0, y1, d1, h, theta);
                nx += kx * f;
                nv += kv * f;
            }
        }
        let t = (k + 1) as f64 * h;
        if !(nx.is_finite() && nv.is_finite()) || (amp0 > 0.0 && (nx * nx + nv * nv / w2).sqrt() > limit) {
            return Err(Error::Unstable(format!(
                "{} mode amplitude exceeded {BLOWUP_FACTOR:e} x initial at t = {t}",
                mode.branch
            )));
        }
        times.push(t);
        chi.push(nx);
        chi_dot.push(nv);
    }
    Ok(Trajectory { times, chi, chi_dot, mode: mode.branch })
}

/// Decay rate of the oscillation envelope: minus the least-squares slope of
/// ln|chi| at its local maxima for t >= t_from.
pub fn envelope_decay_rate(traj: &Trajectory, t_from: f64) -> Result<f64> {
    let mut pts = Vec::new();
    let a: Vec<f64> = traj.chi.iter().map(|c| c.abs()).collect();
    for i in 1..a.len().saturating_sub(1) {
        if traj.times[i] < t_from || !(a[i] >= a[i - 1] && a[i] > a[i + 1]) {
            continue;
        }
        // parabolic refinement of the peak
        let (l, c, r) = (a[i - 1], a[i], a[i + 1]);
        let denom = l - 2.0 * c + r;
        let off = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
        let h = traj.times[i + 1] - traj.times[i];
        let peak = c - 0.25 * (l - r) * off;
        if peak > 0.0 {
            pts.push((traj.times[i] + off * h, peak.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::Domain(format!("only {} envelope peaks after t = {t_from}", pts.len())));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(-sxy / sxx)
}
