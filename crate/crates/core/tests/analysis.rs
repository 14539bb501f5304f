use proptest::prelude::*;
use qbm_pair::analysis::*;
use qbm_pair::covariance::Backend;
use qbm_pair::model::SystemParams;

fn eta(p: &SystemParams, ell: f64) -> f64 {
    eta_sq_of_ell(p, ell, Backend::ClosedForm).unwrap().eta_lt_sq
}

#[test]
fn numeric_roots_straddle_quarter() {
    let p = SystemParams::new(5.0, 0.05, 7.5, 1.0, 1e4);
    let roots = critical_separation_numeric(&p, default_bracket(&p), Backend::ClosedForm).unwrap();
    assert_eq!(roots.len(), 2, "{roots:?}");
    assert_eq!(roots[0].kind, SeparationKind::EllLt);
    assert_eq!(roots[1].kind, SeparationKind::EllGt);
    for r in &roots {
        assert!(r.valid && r.eta_residual.unwrap() <= ROOT_RESIDUAL);
        let (below, above) = (eta(&p, r.value * (1.0 - 1e-4)), eta(&p, r.value * (1.0 + 1e-4)));
        match r.kind {
            SeparationKind::EllLt => assert!(below < 0.25 && above > 0.25),
            _ => assert!(below > 0.25 && above < 0.25),
        }
    }
}

#[test]
fn bracket_inside_unstable_region_rejected() {
    let p = SystemParams::new(1.0, 0.1, 0.2, 1.0, 100.0);
    assert!(critical_separation_numeric(&p, (0.5 * stability_floor(&p), 10.0), Backend::ClosedForm).is_err());
    assert!(critical_separation_numeric(&p, (2.0, 1.0), Backend::ClosedForm).is_err());
}

#[test]
fn weak_coupling_closed_forms() {
    let w = ell_lt_weak_coupling(1.0, 1e4).unwrap();
    assert!((w.first_iteration.value - 0.19198).abs() < 1e-4);
    assert!(weak_coupling_residual(1.0, 1e4, w.lambert.value).abs() < 1e-10);
    // the Lambert form is the converged root; compare with the numeric one at vanishing sigma
    let mut numeric = Vec::new();
    for g in [1e-3, 1e-4] {
        let p = SystemParams::new(1.0, g, 1e-6, 1.0, 1e4);
        let r = critical_separation_numeric(&p, default_bracket(&p), Backend::ClosedForm).unwrap();
        assert_eq!(r.len(), 1);
        numeric.push(r[0].value);
    }
    assert!((numeric[0] - numeric[1]).abs() < 0.01 * numeric[1], "{numeric:?}");
    assert!((numeric[1] - w.lambert.value).abs() < 0.02 * w.lambert.value);
    // the rescaled value depends on omega only through omega ell
    let w5 = ell_lt_weak_coupling(5.0, 5e4).unwrap();
    assert!((5.0 * w5.lambert.value - w.lambert.value).abs() < 1e-12);
}

#[test]
fn gamma_bound_separates_far_apart_behaviour() {
    let b = gamma_upper_bound(1.0, 0.1, 100.0).unwrap();
    assert!((b.small_sigma - 0.021_79).abs() < 1e-4);
    let far = |g: f64| eta(&SystemParams::new(1.0, g, 0.1, 1e4, 100.0), 1e4);
    assert!(far(0.9 * b.exact) < 0.25);
    assert!(far(1.1 * b.exact) > 0.25);
    assert!(gamma_upper_bound(1.0, 1.5, 100.0).is_err());
}

#[test]
fn asymptote_reached_far_apart() {
    for s in [0.2, 0.5, 0.8] {
        let p = SystemParams::new(1.0, 1e-3, s, 100.0, 10.0);
        let a = asymptote(&p);
        let e = eta(&p, 100.0);
        assert!((e - a.leading).abs() < 0.01 * a.leading, "sigma {s}: {e} vs {}", a.leading);
        assert!((e - a.first_order).abs() < 1e-4 * a.first_order);
    }
}

#[test]
fn lt_iteration_is_fixed_point() {
    let p = SystemParams::new(5.0, 0.1, 1.25, 1.0, 1e4);
    let c = ell_lt_iterated(&p, 200).unwrap();
    assert!(c.notes.iter().all(|n| !n.contains("not converged")), "{:?}", c.notes);
    let again = ell_lt_map(&p, c.value).unwrap();
    assert!((again - c.value).abs() <= 1e-9 * c.value);
}

#[test]
fn large_sep_coefficients_reduce_to_asymptote() {
    let p = SystemParams::new(1.0, 0.0, 0.3, 1.0, 100.0);
    let (alpha_c, beta_c) = large_sep_coefficients(&p);
    assert!((alpha_c - asymptote(&p).leading).abs() < 1e-15);
    assert_eq!(beta_c, 0.0);
    assert!(ell_gt_large_sep(&p).is_err());
}

#[test]
fn backend_invariance_of_roots() {
    // the closed forms drop cutoff corrections, so 1e-8 needs lambda / omega >= 1e5
    let cases = [
        (SystemParams::new(1.0, 1e-3, 1e-6, 1.0, 1e5), (0.05, 0.3)),
        (SystemParams::new(1.0, 0.01, 0.3, 1.0, 1e5), (0.03, 0.3)),
    ];
    for (p, br) in cases {
        let a = critical_separation_numeric_with(&p, br, Backend::ClosedForm, 40).unwrap();
        let b = critical_separation_numeric_with(&p, br, Backend::QuadratureFirstOrder, 40).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.kind, y.kind);
            assert!((x.value - y.value).abs() <= 1e-8 * x.value, "{} vs {}", x.value, y.value);
        }
    }
}

#[test]
fn shallow_crossings_amplify_backend_differences() {
    // eta_lt^2 barely dips below 1/4 here, so ~5e-8 moment differences move the roots by ~1e-6
    let p = SystemParams::new(5.0, 0.05, 7.5, 1.0, 1e4);
    let a = critical_separation_numeric_with(&p, (0.011, 0.02), Backend::ClosedForm, 40).unwrap();
    let b = critical_separation_numeric_with(&p, (0.011, 0.02), Backend::QuadratureFirstOrder, 40).unwrap();
    assert_eq!(a.len(), 2);
    for (x, y) in a.iter().zip(&b) {
        assert!((x.value - y.value).abs() <= 1e-5 * x.value, "{} vs {}", x.value, y.value);
    }
}

#[test]
fn single_point_sweep_equals_direct_call() {
    let base = SystemParams::new(5.0, 0.05, 7.5, 0.3, 1e4);
    let spec = SweepSpec { base, axes: vec![], backend: Backend::ClosedForm };
    let r = sweep(&spec).unwrap();
    assert_eq!(r.points.len(), 1);
    assert_eq!(r.points[0].eta_sq, Some(eta(&base, 0.3)));
}

#[test]
fn sweep_is_deterministic_and_serialises() {
    let spec = SweepSpec {
        base: SystemParams::new(1.0, 0.05, 0.3, 1.0, 100.0),
        axes: vec![ParamAxis::parse("gamma=0.01,0.05,0.5").unwrap(), ParamAxis::parse("ell=0.05:20:6:log").unwrap()],
        backend: Backend::ClosedForm,
    };
    let (a, b) = (sweep(&spec).unwrap(), sweep(&spec).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.points.len(), 18);
    // unstable points keep their slot with a diagnostic
    let bad: Vec<_> = a.points.iter().filter(|p| p.eta_sq.is_none()).collect();
    assert!(!bad.is_empty() && bad.iter().all(|p| p.error.is_some()));
    let csv = a.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 19);
    assert!(csv.starts_with(&SweepResult::CSV_COLUMNS.join(",")));
    let back: SweepResult = serde_json::from_str(&a.to_json().unwrap()).unwrap();
    assert_eq!(back.eta_sq(), a.eta_sq());
}

#[test]
fn duplicate_or_empty_axes_rejected() {
    let base = SystemParams::new(1.0, 0.05, 0.3, 1.0, 100.0);
    let axis = ParamAxis::parse("ell=1,2").unwrap();
    let spec = SweepSpec { base, axes: vec![axis.clone(), axis], backend: Backend::ClosedForm };
    assert!(sweep(&spec).is_err());
    let empty = ParamAxis { name: ParamName::Ell, values: vec![] };
    assert!(sweep(&SweepSpec { base, axes: vec![empty], backend: Backend::ClosedForm }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lt_grows_with_gamma_and_shrinks_with_sigma(g in 0.02f64..0.2, s in 0.5f64..6.0, dg in 1.05f64..1.5, ds in 1.05f64..1.5) {
        let base = SystemParams::new(5.0, g, s, 1.0, 1e4);
        let root = |p: &SystemParams| -> Option<f64> {
            critical_separation_numeric_with(p, default_bracket(p), Backend::ClosedForm, 100)
                .ok()?
                .into_iter()
                .find(|c| c.kind == SeparationKind::EllLt)
                .map(|c| c.value)
        };
        let Some(l0) = root(&base) else { return Ok(()) };
        if let Some(l1) = root(&base.with_gamma(g * dg)) {
            prop_assert!(l1 > l0, "gamma up: {} -> {}", l0, l1);
        }
        if let Some(l2) = root(&SystemParams { sigma: s * ds, ..base }) {
            prop_assert!(l2 < l0, "sigma up: {} -> {}", l0, l2);
        }
    }
}
