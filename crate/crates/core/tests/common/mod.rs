#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use qbm_pair::quad::{integrate, integrate_with_breakpoints, QuadOptions};
use qbm_pair::specfun::EULER_GAMMA;

fn tight() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-14, max_intervals: 100_000 }
}

/// e^w E1(w) = int_0^inf e^{-t} / (w + t) dt along the horizontal ray.
fn scaled_e1_by_quadrature(w: Complex64) -> Complex64 {
    let t0 = (-w.re).max(0.0);
    let width = w.im.abs().max(1e-3);
    let mut pts = vec![0.0];
    for k in [-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0] {
        let t = t0 + k * width;
        if t > pts.last().unwrap() + 1e-9 {
            pts.push(t);
        }
    }
    pts.push(pts.last().unwrap() + 80.0);
    let part = |re: bool| {
        let f = |t: f64| {
            let v = (-t).exp() / (w + t);
            if re {
                v.re
            } else {
                v.im
            }
        };
        integrate_with_breakpoints(&f, &pts, tight()).unwrap_or_else(|e| panic!("{e} at w = {w}, {pts:?}")).value
    };
    Complex64::new(part(true), part(false))
}

/// Ei(z) from direct quadrature, independent of the library's series and fractions.
pub fn ei_by_quadrature(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re > 0.0 {
        // Ei(x) = gamma_E + ln x + int_0^x (e^t - 1)/t dt
        let f = |t: f64| if t == 0.0 { 1.0 } else { t.exp_m1() / t };
        let v = integrate(&f, 0.0, z.re, tight()).unwrap().value;
        return Complex64::new(EULER_GAMMA + z.re.ln() + v, 0.0);
    }
    let w = -z;
    let e1 = scaled_e1_by_quadrature(w) * (-w).exp();
    let jump = if z.im > 0.0 {
        PI
    } else if z.im < 0.0 {
        -PI
    } else {
        0.0
    };
    -e1 + Complex64::new(0.0, jump)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn log_uniform(rng: &mut impl rand::Rng, a: f64, b: f64) -> f64 {
    rng.gen_range(a.ln()..b.ln()).exp()
}
