mod common;

use common::rel_err;
use proptest::prelude::*;
use qbm_pair::covariance::{covariance_matrix_late, Backend, CovarianceMatrix};
use qbm_pair::entanglement::*;
use qbm_pair::model::{require_stable, SystemParams};

fn stable_params() -> impl Strategy<Value = SystemParams> {
    (0.3f64..5.0, 1e-3f64..0.08, -0.6f64..0.6, 0.3f64..30.0).prop_filter_map("stable", |(w, g, s, l)| {
        let p = SystemParams::new(w, g * w, s * w * w, l / w, 1e3 * w);
        require_stable(&p).ok().map(|_| p)
    })
}

/// Relative tolerance for the invariant (quadratic-formula) path against the spectral one.
/// Rounding noise in sigma^2 - 4 det V is about eps |V|^4; near a double root it moves
/// eta^2 by sqrt(noise), elsewhere by noise / gap.
fn block_path_tol(v: &CovarianceMatrix, gt_sq: f64, lt_sq: f64) -> f64 {
    let frob_sq: f64 = v.entries.iter().flatten().map(|x| x * x).sum();
    let noise = f64::EPSILON * frob_sq * frob_sq;
    let gap = gt_sq - lt_sq;
    let shift = if gap > noise.sqrt() { noise / gap } else { noise.sqrt() };
    1e-10 + 4.0 * shift / lt_sq
}

fn check_all_paths(v: &CovarianceMatrix) -> Result<(), TestCaseError> {
    let [plus, minus] = v.modes.unwrap();
    let (lt_sq, gt_sq, branch) = eta_reduced(plus.chi_sq, minus.chi_sq, plus.p_sq, minus.p_sq);
    let pt = partial_transpose(v);
    let (gt, lt) = symplectic_eigenvalues(&pt).unwrap();
    let (gt_s, lt_s) = symplectic_eigenvalues_spectral(&pt).unwrap();
    prop_assert!(rel_err(lt * lt, lt_sq) < 1e-10, "block path {} vs reduced {}", lt * lt, lt_sq);
    prop_assert!(rel_err(gt * gt, gt_sq) < 1e-10);
    prop_assert!(rel_err(lt_s * lt_s, lt_sq) < 1e-10, "spectral {} vs reduced {}", lt_s * lt_s, lt_sq);
    prop_assert!(rel_err(gt_s * gt_s, gt_sq) < 1e-10);
    prop_assert_eq!(branch_from_entries(v), branch);
    let r = entanglement_report(v).unwrap();
    prop_assert!(r.eta_lt > 0.0 && r.eta_lt <= r.eta_gt);
    prop_assert_eq!(r.entangled, r.eta_lt < 0.5);
    prop_assert_eq!(r.negativity > 0.0, r.entangled);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_form_matches_full_spectrum(p in stable_params()) {
        let v = covariance_matrix_late(&p, Backend::ClosedForm).unwrap();
        check_all_paths(&v)?;
    }

    #[test]
    fn negativity_decreasing(a in 1e-3f64..0.5, step in 1e-6f64..0.5) {
        let b = (a + step).min(0.5);
        prop_assume!(a < b);
        let (na, la) = negativity(a).unwrap();
        let (nb, lb) = negativity(b).unwrap();
        prop_assert!(na > nb && la > lb);
        prop_assert!(na > 0.0 && la > 0.0);
    }

    #[test]
    fn negativity_continuous(x in 1e-2f64..0.6) {
        let h = 1e-9;
        let (n0, l0) = negativity(x).unwrap();
        let (n1, l1) = negativity(x + h).unwrap();
        prop_assert!((n0 - n1).abs() < 1e-5 && (l0 - l1).abs() < 1e-6);
    }

    #[test]
    fn random_physical_matrices(a in 0.3f64..3.0, b in 0.3f64..3.0, r in -1.2f64..1.2, c in -0.9f64..0.9, d in -0.9f64..0.9) {
        // two-mode squeezed thermal-like state: V = S diag S^T with local rotations
        let (ch, sh) = (r.cosh(), r.sinh());
        let mut e = [[0.0; 4]; 4];
        let (n1, n2) = (0.5 * a.max(1.0), 0.5 * b.max(1.0));
        e[0][0] = n1 * ch * ch + n2 * sh * sh;
        e[1][1] = e[0][0];
        e[2][2] = n2 * ch * ch + n1 * sh * sh;
        e[3][3] = e[2][2];
        e[0][2] = (n1 + n2) * ch * sh;
        e[1][3] = -(n1 + n2) * ch * sh;
        e[2][0] = e[0][2];
        e[3][1] = e[1][3];
        // local squeezing on mode 1 keeps the state physical
        let (s1, s2) = ((c).exp(), (d).exp());
        for k in 0..4 {
            e[0][k] *= s1;
            e[k][0] *= s1;
            e[1][k] /= s1;
            e[k][1] /= s1;
            e[2][k] *= s2;
            e[k][2] *= s2;
            e[3][k] /= s2;
            e[k][3] /= s2;
        }
        let v = CovarianceMatrix::from_entries(e).unwrap();
        // a = b < 1 gives a pure state with degenerate eigenvalues
        let (gt, lt) = symplectic_eigenvalues(&v).unwrap();
        let (gt_s, lt_s) = symplectic_eigenvalues_spectral(&v).unwrap();
        let tol = block_path_tol(&v, gt_s * gt_s, lt_s * lt_s);
        prop_assert!(rel_err(gt, gt_s) < tol && rel_err(lt, lt_s) < tol, "{} {} / {} {} tol {:e}", gt, lt, gt_s, lt_s, tol);
        prop_assert!(lt_s >= 0.5 * (1.0 - 1e-10));
        let pt = partial_transpose(&v);
        let (gt, lt) = symplectic_eigenvalues(&pt).unwrap();
        let (gt_s, lt_s) = symplectic_eigenvalues_spectral(&pt).unwrap();
        let tol = block_path_tol(&pt, gt_s * gt_s, lt_s * lt_s);
        prop_assert!(rel_err(gt, gt_s) < tol && rel_err(lt, lt_s) < tol, "{} {} / {} {} tol {:e}", gt, lt, gt_s, lt_s, tol);
        // at most one partially transposed eigenvalue drops below 1/2
        prop_assert!(gt_s >= 0.5 * (1.0 - 1e-10));
    }
}

#[test]
fn separability_product_across_crossover() {
    // the scan crosses varsigma = 1 at ell = 2 gamma / sigma ~ 0.0133
    let base = SystemParams::new(5.0, 0.05, 7.5, 1.0, 1e4);
    let mut seen = (false, false);
    for i in 0..300 {
        let ell = 0.004 * (250.0f64).powf(i as f64 / 299.0);
        let p = base.with_ell(ell);
        let Ok(v) = covariance_matrix_late(&p, Backend::ClosedForm) else { continue };
        let r = entanglement_report(&v).unwrap();
        let product = (r.eta_gt.powi(2) - 0.25) * (r.eta_lt.powi(2) - 0.25);
        assert_eq!(product >= 0.0, !r.entangled, "ell = {ell}: {r:?}");
        assert!(r.eta_gt >= 0.5);
        if r.entangled {
            seen.0 = true;
        } else {
            seen.1 = true;
        }
    }
    assert!(seen.0 && seen.1, "scan should visit both entangled and separable states");
}

#[test]
fn vacuum_and_threshold_values() {
    assert_eq!(negativity(0.5).unwrap(), (0.0, 0.0));
    let (n, e) = negativity(0.25).unwrap();
    assert_eq!(n, 1.0);
    assert!((e - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(negativity(0.6).unwrap(), (0.0, 0.0));
    // symmetric undamped inputs are degenerate
    let (lt, gt, b) = eta_reduced(0.5, 2.0, 0.5, 2.0);
    assert_eq!((lt, gt, b), (1.0, 1.0, EtaBranch::Degenerate));
}

#[test]
fn decoupled_vacua_are_pure() {
    let p = SystemParams::new(1.0, 1e-9, 0.0, 1e3, 1e2);
    let v = covariance_matrix_late(&p, Backend::ClosedForm).unwrap();
    let (gt, lt) = symplectic_eigenvalues(&v).unwrap();
    assert!((gt - 0.5).abs() < 1e-6 && (lt - 0.5).abs() < 1e-6, "{gt} {lt}");
}

#[test]
fn spectral_path_on_decoupled_quadratures() {
    // x and p quadratures decouple; signed zeros from the partial transpose once broke the spectral path
    let e = [
        [6.310885985845799, 0.0, -2.668611883117175, -0.0],
        [0.0, 0.2672164310575155, 0.0, -0.14534943881013715],
        [-2.668611883117175, 0.0, 5.180252580608974, -0.0],
        [-0.0, -0.14534943881013715, -0.0, 0.36293930072010905],
    ];
    let v = CovarianceMatrix::from_entries(e).unwrap();
    // independent reference: |eig(i J V)| from numpy
    let (gt_ref, lt_ref) = (1.9587460711016742, 0.7110316359195357);
    let (gt, lt) = symplectic_eigenvalues_spectral(&v).unwrap();
    assert!(rel_err(gt, gt_ref) < 1e-12 && rel_err(lt, lt_ref) < 1e-12, "{gt} {lt}");
    let (gt, lt) = symplectic_eigenvalues(&v).unwrap();
    assert!(rel_err(gt, gt_ref) < 1e-12 && rel_err(lt, lt_ref) < 1e-12, "{gt} {lt}");
}
