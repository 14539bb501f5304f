//! Browser demo. The page calls the `extern "C"` exports below; each fills a
//! shared f64 buffer and returns how many values it wrote. `buffer_ptr` tells
//! JavaScript where to read them from linear memory.
//!
//! The safe functions in [`demo`] do the work and are what the tests exercise.

use std::cell::RefCell;

pub mod demo {
    use qbm_pair::analysis::{critical_separation_numeric_with, default_bracket, eta_sq_of_ell, SeparationKind};
    use qbm_pair::covariance::{covariance_matrix_late, Backend};
    use qbm_pair::entanglement::entanglement_report;
    use qbm_pair::model::varsigma;
    use qbm_pair::SystemParams;

    /// Scan density for the surface: coarser than the library default to stay interactive.
    pub const SURFACE_SAMPLES_PER_DECADE: usize = 60;

    /// (ell, eta_lt^2) on a log grid; NaN where the configuration is unstable.
    pub fn eta_curve(
        omega: f64,
        gamma: f64,
        sigma: f64,
        lambda_cut: f64,
        ell_min: f64,
        ell_max: f64,
        n: usize,
    ) -> Vec<(f64, f64)> {
        let p = SystemParams::new(omega, gamma, sigma, ell_min, lambda_cut);
        (0..n)
            .map(|i| {
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let ell = ell_min * (ell_max / ell_min).powf(t);
                let v = eta_sq_of_ell(&p, ell, Backend::ClosedForm).map(|e| e.eta_lt_sq).unwrap_or(f64::NAN);
                (ell, v)
            })
            .collect()
    }

    /// [eta_lt, eta_gt, negativity, log_negativity, entangled (0/1), varsigma], or None when unstable.
    pub fn negativity_at(omega: f64, gamma: f64, sigma: f64, ell: f64, lambda_cut: f64) -> Option<[f64; 6]> {
        let p = SystemParams::new(omega, gamma, sigma, ell, lambda_cut);
        let v = covariance_matrix_late(&p, Backend::ClosedForm).ok()?;
        let r = entanglement_report(&v).ok()?;
        let vs = varsigma(&p).unwrap_or(f64::NAN);
        Some([r.eta_lt, r.eta_gt, r.negativity, r.log_negativity, if r.entangled { 1.0 } else { 0.0 }, vs])
    }

    /// Row-major (gamma outer, sigma inner) grid of (ell_lt, ell_gt); NaN where absent.
    pub fn critical_surface(omega: f64, lambda_cut: f64, gammas: &[f64], sigmas: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(gammas.len() * sigmas.len());
        for &g in gammas {
            for &s in sigmas {
                let p = SystemParams::new(omega, g, s, 1.0, lambda_cut);
                let roots = critical_separation_numeric_with(
                    &p,
                    default_bracket(&p),
                    Backend::ClosedForm,
                    SURFACE_SAMPLES_PER_DECADE,
                )
                .unwrap_or_default();
                let lt = roots.iter().find(|c| c.kind == SeparationKind::EllLt).map_or(f64::NAN, |c| c.value);
                let gt = roots.iter().rev().find(|c| c.kind == SeparationKind::EllGt).map_or(f64::NAN, |c| c.value);
                out.push((lt, gt));
            }
        }
        out
    }

    pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| if n > 1 { a + (b - a) * i as f64 / (n - 1) as f64 } else { a }).collect()
    }
}

thread_local! {
    static BUFFER: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

fn publish(values: impl IntoIterator<Item = f64>) -> u32 {
    BUFFER.with(|b| {
        let mut b = b.borrow_mut();
        b.clear();
        b.extend(values);
        b.len() as u32
    })
}

/// Address of the output buffer in linear memory; valid until the next export call.
#[no_mangle]
pub extern "C" fn buffer_ptr() -> *const f64 {
    BUFFER.with(|b| b.borrow().as_ptr())
}

/// Writes ell_0, eta_0, ell_1, eta_1, ...
#[no_mangle]
pub extern "C" fn eta_curve(
    omega: f64,
    gamma: f64,
    sigma: f64,
    lambda_cut: f64,
    ell_min: f64,
    ell_max: f64,
    n: u32,
) -> u32 {
    let pts = demo::eta_curve(omega, gamma, sigma, lambda_cut, ell_min, ell_max, n as usize);
    publish(pts.into_iter().flat_map(|(l, e)| [l, e]))
}

/// Writes the six values of [`demo::negativity_at`]; returns 0 when unstable.
#[no_mangle]
pub extern "C" fn negativity_at(omega: f64, gamma: f64, sigma: f64, ell: f64, lambda_cut: f64) -> u32 {
    match demo::negativity_at(omega, gamma, sigma, ell, lambda_cut) {
        Some(v) => publish(v),
        None => publish([]),
    }
}

/// Writes ell_lt, ell_gt per grid point, gamma outer.
#[no_mangle]
pub extern "C" fn critical_surface(
    omega: f64,
    lambda_cut: f64,
    g0: f64,
    g1: f64,
    ng: u32,
    s0: f64,
    s1: f64,
    ns: u32,
) -> u32 {
    let gammas = demo::linspace(g0, g1, ng as usize);
    let sigmas = demo::linspace(s0, s1, ns as usize);
    let pts = demo::critical_surface(omega, lambda_cut, &gammas, &sigmas);
    publish(pts.into_iter().flat_map(|(a, b)| [a, b]))
}
