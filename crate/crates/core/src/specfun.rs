//! Complex special functions: exponential integral, Lambert W, arccot.

use std::f64::consts::{E, FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex number used throughout the crate.
pub type ComplexValue = Complex64;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const EPS: f64 = 1e-16;
const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 30.0;
const POSITIVE_SECTOR: f64 = PI / 6.0;

fn sign_im(z: Complex64) -> f64 {
    if z.im > 0.0 {
        1.0
    } else if z.im < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Exponential integral Ei(z), cut along the negative real axis.
///
/// On the cut itself (real negative z) the principal value is returned,
/// which is the average of the two sides.
pub fn exp_integral_ei(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("Ei argument not finite: {z}")));
    }
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Domain("Ei has a logarithmic singularity at z = 0".into()));
    }
    let near_positive_axis = z.re > 0.0 && z.arg().abs() <= POSITIVE_SECTOR;
    let value = if r <= SERIES_RADIUS || (near_positive_axis && r <= ASYMPTOTIC_RADIUS) {
        ei_series(z)
    } else if near_positive_axis {
        ei_asymptotic(z)
    } else {
        let scaled = e1_scaled_continued_fraction(-z)?;
        -scaled * z.exp() + Complex64::new(0.0, PI * sign_im(z))
    };
    Ok(value)
}

fn ei_series(z: Complex64) -> Complex64 {
    let log = if z.im == 0.0 { Complex64::new(z.re.abs().ln(), 0.0) } else { z.ln() };
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..400 {
        let nf = n as f64;
        term *= z / nf;
        let contrib = term / nf;
        sum += contrib;
        if contrib.norm() <= EPS * sum.norm() {
            break;
        }
    }
    log + EULER_GAMMA + sum
}

fn ei_asymptotic(z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let next = term * (k as f64) / z;
        let size = next.norm();
        if size >= last || size <= EPS * sum.norm() {
            break;
        }
        term = next;
        sum += term;
        last = size;
    }
    z.exp() / z * sum + Complex64::new(0.0, PI * sign_im(z))
}

/// e^w E1(w) for |arg w| < pi.
///
/// E1(w) = -Ei(-w) - i pi sgn(Im w); evaluating the product directly avoids
/// the cancellation the Ei form suffers once Re w is large.
pub fn exp_integral_e1_scaled(w: Complex64) -> Result<Complex64> {
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::Domain(format!("E1 argument not finite: {w}")));
    }
    if w.norm() == 0.0 {
        return Err(Error::Domain("E1 has a logarithmic singularity at w = 0".into()));
    }
    if w.im == 0.0 && w.re < 0.0 {
        return Err(Error::Domain(format!("E1 evaluated on its branch cut at w = {w}")));
    }
    if w.norm() <= SERIES_RADIUS {
        // E1(w) = -gamma - ln w - sum (-w)^n / (n n!)
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 1..400 {
            let nf = n as f64;
            term *= -w / nf;
            let contrib = term / nf;
            sum += contrib;
            if contrib.norm() <= EPS * sum.norm() {
                break;
            }
        }
        return Ok((-sum - w.ln() - EULER_GAMMA) * w.exp());
    }
    e1_scaled_continued_fraction(w)
}

/// e^w E1(w) by modified Lentz evaluation of the continued fraction of E1.
fn e1_scaled_continued_fraction(w: Complex64) -> Result<Complex64> {
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 20_000;
    let one = Complex64::new(1.0, 0.0);
    let mut b = w + 1.0;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = one / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        let mut den = d * an + b;
        if den.norm() < TINY {
            den = Complex64::new(TINY, 0.0);
        }
        d = one / den;
        c = b + c.inv() * an;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence(format!("E1 continued fraction at w = {w}")))
}

/// Inverse cotangent with range (0, pi).
pub fn arccot(x: f64) -> f64 {
    FRAC_PI_2 - x.atan()
}

const LAMBERT_MAX_ITER: usize = 80;
const LAMBERT_RESIDUAL: f64 = 1e-12;

fn halley(z: Complex64, seed: Complex64) -> Option<Complex64> {
    let mut w = seed;
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        if f.norm() == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1.norm() == 0.0 {
            return None;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (wp1 * 2.0);
        let dw = f / denom;
        if !(dw.re.is_finite() && dw.im.is_finite()) {
            return None;
        }
        w -= dw;
        if dw.norm() <= 4.0 * f64::EPSILON * (1.0 + w.norm()) {
            break;
        }
    }
    let res = (w * w.exp() - z).norm();
    (res <= LAMBERT_RESIDUAL * z.norm().max(f64::MIN_POSITIVE)).then_some(w)
}

fn in_principal_range(w: Complex64) -> bool {
    let eta = w.im;
    if eta.abs() >= PI {
        return false;
    }
    if eta == 0.0 {
        return w.re >= -1.0;
    }
    // images of the negative real axis sit on the boundary curve itself
    w.re > -eta / eta.tan() - 1e-9 * (1.0 + w.norm())
}

fn branch_point_series(z: Complex64, sign: f64) -> Complex64 {
    let p = ((z * E + 1.0) * 2.0).sqrt() * sign;
    p * p * p * (11.0 / 72.0) - p * p / 3.0 + p - 1.0
}

/// Lambert W on branch 0 (principal) or -1, solving w e^w = z.
pub fn lambert_w(branch: i32, z: Complex64) -> Result<Complex64> {
    if branch != 0 && branch != -1 {
        return Err(Error::Domain(format!("Lambert W branch {branch} not supported (0 or -1)")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("Lambert W argument not finite: {z}")));
    }
    if z.im == 0.0 {
        let x = z.re;
        let real_ok = if branch == 0 { x >= -1.0 / E } else { (-1.0 / E..0.0).contains(&x) };
        if real_ok {
            return lambert_w_real(branch, x).map(|w| Complex64::new(w, 0.0));
        }
    }
    if z.norm() == 0.0 {
        // branch 0 handled above; branch -1 diverges at the origin
        return Err(Error::Domain("Lambert W branch -1 is singular at z = 0".into()));
    }

    let near_branch_point = (z * E + 1.0).norm() < 0.3;
    let mut seeds = Vec::with_capacity(4);
    if branch == 0 {
        if near_branch_point {
            seeds.push(branch_point_series(z, 1.0));
        }
        let l1 = (z + 1.0).ln();
        if l1.norm().is_finite() && (l1 + 2.0).norm() > 0.0 {
            seeds.push(l1 * (Complex64::new(1.0, 0.0) - (l1 + 1.0).ln() / (l1 + 2.0)));
        }
        let lz = z.ln();
        seeds.push(lz - lz.ln());
        seeds.push(z);
    } else {
        if near_branch_point && z.im >= 0.0 {
            seeds.push(branch_point_series(z, -1.0));
        }
        if z.im >= 0.0 && z.re < 0.0 && z.norm() <= 1.0 / E {
            let lm = (-z).ln();
            seeds.push(lm - (-lm).ln());
        }
        let l1 = z.ln() - Complex64::new(0.0, 2.0 * PI);
        seeds.push(l1 - l1.ln());
    }

    for seed in seeds {
        if let Some(w) = halley(z, seed) {
            if branch == 0 && !in_principal_range(w) {
                continue;
            }
            // on the cut take the value continuous from above
            if z.im == 0.0 && branch == 0 && w.im < 0.0 {
                return Ok(w.conj());
            }
            return Ok(w);
        }
    }
    Err(Error::NoConvergence(format!("Lambert W branch {branch} at z = {z}")))
}

/// Real-valued Lambert W. Branch 0 needs x >= -1/e; branch -1 needs x in [-1/e, 0).
pub fn lambert_w_real(branch: i32, x: f64) -> Result<f64> {
    let lower = -1.0 / E;
    match branch {
        0 if x >= lower && x.is_finite() => {}
        -1 if x >= lower && x < 0.0 => {}
        0 | -1 => return Err(Error::Domain(format!("real Lambert W branch {branch} undefined at x = {x}"))),
        _ => return Err(Error::Domain(format!("Lambert W branch {branch} not supported (0 or -1)"))),
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let q = 2.0 * (E * x + 1.0);
    let p = q.max(0.0).sqrt();
    if p < 1e-6 {
        let s = if branch == 0 { p } else { -p };
        return Ok(-1.0 + s - s * s / 3.0);
    }
    let seed = if p < 0.6 {
        let s = if branch == 0 { p } else { -p };
        -1.0 + s - s * s / 3.0 + 11.0 / 72.0 * s * s * s
    } else if branch == -1 {
        let l = (-x).ln();
        l - (-l).ln()
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    } else {
        let l = x.ln();
        l - l.ln()
    };
    let mut w = seed;
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if f == 0.0 || wp1 == 0.0 {
            break;
        }
        let dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    let res = (w * w.exp() - x).abs();
    if res <= LAMBERT_RESIDUAL * x.abs() || res <= 1e-15 {
        Ok(w)
    } else {
        Err(Error::NoConvergence(format!("real Lambert W branch {branch} at x = {x}")))
    }
}

/// Principal real solution of w e^w = e^a, i.e. w + ln w = a, usable for large a.
pub fn lambert_w0_of_exp(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::Domain(format!("exponent not finite: {a}")));
    }
    if a < 50.0 {
        return lambert_w_real(0, a.exp());
    }
    let mut w = a - a.ln();
    for _ in 0..LAMBERT_MAX_ITER {
        let f = w + w.ln() - a;
        let dw = f / (1.0 + 1.0 / w);
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    Ok(w)
}
