use num_complex::Complex64;
use proptest::prelude::*;
use qbm_pair::dynamics::*;
use qbm_pair::model::{mode_view, Branch, SystemParams};
use qbm_pair::Error;

fn damped(gamma: f64, w2: f64, x0: f64, v0: f64, t: f64) -> f64 {
    let om = (w2 - gamma * gamma).sqrt();
    (-gamma * t).exp() * (x0 * (om * t).cos() + (v0 + gamma * x0) / om * (om * t).sin())
}

#[test]
fn d2_bar_examples() {
    let p = SystemParams::new(1.0, 0.1, 0.3, 2.0, 100.0);
    for b in Branch::BOTH {
        let m = mode_view(&p, b).unwrap();
        let d0 = d2_bar(&m, 0.0, &p).unwrap();
        assert!((d0.re - 1.0 / (m.omega_sq() - b.sign() * 0.1)).abs() < 1e-15 && d0.im == 0.0);
        let (a, c) = (d2_bar(&m, 1.7, &p).unwrap(), d2_bar(&m, -1.7, &p).unwrap());
        assert!((a.norm_sqr() - c.norm_sqr()).abs() < 1e-15 * a.norm_sqr());
    }
}

#[test]
fn perturbative_pole_limits() {
    // short separation that still keeps both modes stable
    let p = SystemParams::new(1.0, 1e-4, 0.3, 1e-3, 100.0);
    for (b, want) in [(Branch::Plus, 2e-4), (Branch::Minus, 0.0)] {
        let m = mode_view(&p, b).unwrap();
        let e = effective_parameters(&m, &p).unwrap();
        assert!((e.gamma_eff - want).abs() < 1e-10, "{b}: {}", e.gamma_eff);
    }
    let p0 = p.with_gamma(0.0).with_ell(2.0);
    let m = mode_view(&p0, Branch::Plus).unwrap();
    let s = dominant_pole_perturbative(&m, &p0).unwrap().dominant.unwrap();
    assert_eq!(s[0], Complex64::new(0.0, m.omega_mode));
    assert_eq!(s[1], s[0].conj());
}

#[test]
fn perturbative_pole_residual_example() {
    let p = SystemParams::new(1.0, 0.05, 0.0, 3.0, 100.0);
    for b in Branch::BOTH {
        let m = mode_view(&p, b).unwrap();
        let set = dominant_pole_perturbative(&m, &p).unwrap();
        let seed = set.dominant.unwrap()[0];
        let root = find_poles_numeric(&m, &p, seed).unwrap();
        // second order in gamma; includes the -gamma^2/(2 omega) shift of a plain damped oscillator
        let scale = p.gamma * p.gamma;
        assert!(set.residual_norm <= 5.0 * scale, "{b}: residual {}", set.residual_norm);
        assert!((root - seed).norm() <= 5.0 * scale / m.omega_mode, "{b}: shift {}", (root - seed).norm());
        assert!(g_tilde(&m, root, &p).norm() <= 1e-12 * m.omega_sq().max(root.norm_sqr()));
    }
}

#[test]
fn runaway_root_when_unstable() {
    let p = SystemParams::new(1.0, 0.6, 0.0, 1.0, 100.0);
    let m = mode_view(&p, Branch::Plus).unwrap();
    let root = find_poles_numeric(&m, &p, Complex64::new(0.5, 0.0)).unwrap();
    assert!(root.re > 0.0 && root.im.abs() < 1e-12);
    let sd = strong_damping_root(&m, &p).unwrap();
    assert!(sd.real && sd.y.re > 0.0);
}

#[test]
fn strong_damping_matches_reduced_newton() {
    for (gamma, ell) in [(0.9, 3.0), (2.0, 4.0), (5.0, 1.0), (0.6, 0.5)] {
        let p = SystemParams::new(1.0, gamma, 0.2, ell, 100.0);
        for b in Branch::BOTH {
            let m = mode_view(&p, b).unwrap();
            let sd = strong_damping_root(&m, &p).unwrap();
            let a = m.omega_sq() * ell / (2.0 * gamma);
            let seed = match b {
                Branch::Plus => Complex64::new(0.0, 0.0),
                Branch::Minus => {
                    let c = Complex64::new(a, std::f64::consts::PI);
                    Complex64::new(0.0, std::f64::consts::PI) - c.ln()
                }
            };
            let y = reduced_equation_root(&m, &p, seed).unwrap();
            assert!((y - sd.y).norm() <= 1e-10 * sd.y.norm().max(1.0), "{b} {gamma} {ell}: {y} vs {}", sd.y);
            assert_eq!(sd.real, b == Branch::Plus);
            if b == Branch::Plus {
                assert_eq!(sd.y.re > 0.0, 2.0 * gamma > m.omega_sq() * ell);
            }
        }
    }
}

#[test]
fn pole_ladder_example() {
    let p = SystemParams::new(1.0, 0.05, 0.0, 2.0, 100.0);
    for b in Branch::BOTH {
        let m = mode_view(&p, b).unwrap();
        let set = asymptotic_pole_ladder(&m, &p, 5, 15).unwrap();
        assert_eq!(set.ladder.len(), 11);
        let mut prev_v: Option<f64> = None;
        let mut gaps = Vec::new();
        for lp in &set.ladder {
            let s = lp.pole.expect("refined");
            assert!(lp.residual <= 1e-10 * s.norm_sqr().max(1.0), "n={} residual {}", lp.n, lp.residual);
            // gamma ell < 1 keeps the ladder in the left half plane
            assert!(s.re < 0.0);
            if let Some(v) = prev_v {
                gaps.push(((s.im - v) * p.ell - 2.0 * std::f64::consts::PI).abs());
            }
            prev_v = Some(s.im);
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(*gaps.last().unwrap() < 0.2 * gaps[0]);
    }
    let m = mode_view(&p, Branch::Plus).unwrap();
    assert!(asymptotic_pole_ladder(&m, &p, 2, 10).is_err());
}

#[test]
fn series_examples() {
    let p = SystemParams::new(1.0, 0.05, 0.2, 2.0, 100.0);
    for b in Branch::BOTH {
        let m = mode_view(&p, b).unwrap();
        let k = 0.5 * m.omega_mode;
        let exact = d2_bar(&m, k, &p).unwrap();
        let s8 = d2_series(&m, k, 8, &p).unwrap();
        let q = s8.ratio;
        let rel = (s8.value - exact).norm() / exact.norm();
        assert!(rel <= q.powi(9) / (1.0 - q) * 1.0001, "{b}: {rel:e} vs bound {:e}", q.powi(9) / (1.0 - q));
        assert!(!s8.diverging);
    }
    let p = SystemParams::new(1.0, 0.6, 0.0, 1.0, 100.0);
    let m = mode_view(&p, Branch::Plus).unwrap();
    assert!(matches!(d2_series(&m, 0.3, 4, &p), Err(Error::OutOfValidity(_))));
}

#[test]
fn series_tail_shrinks_monotonically() {
    let p = SystemParams::new(1.0, 0.05, 0.1, 1.0, 100.0);
    for b in Branch::BOTH {
        let m = mode_view(&p, b).unwrap();
        assert!(2.0 * p.gamma / (m.omega_sq() * p.ell) <= 0.5);
        for k in [0.0, 0.2, 0.7, 1.5, 3.0, 10.0] {
            let exact = d2_bar(&m, k, &p).unwrap();
            let errs: Vec<f64> = (0..12).map(|n| (d2_series(&m, k, n, &p).unwrap().value - exact).norm()).collect();
            assert!(errs.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-15), "{b} kappa={k}: {errs:?}");
        }
    }
}

#[test]
fn first_interval_is_exact_damped_oscillator() {
    let p = SystemParams::new(1.0, 0.05, 0.3, 3.0, 100.0);
    for b in Branch::BOTH {
        let m = mode_view(&p, b).unwrap();
        let (x0, v0) = (0.8, -0.3);
        let tr = simulate_transient(&p, &m, x0, v0, 10.0, 0.01).unwrap();
        assert_eq!((tr.times[0], tr.chi[0], tr.chi_dot[0]), (0.0, x0, v0));
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        let worst = tr
            .times
            .iter()
            .zip(&tr.chi)
            .filter(|(t, _)| **t <= p.ell)
            .map(|(&t, &x)| (x - damped(p.gamma, m.omega_sq(), x0, v0, t)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8 * x0, "{b}: {worst:e}");
    }
}

#[test]
fn transient_without_delay_is_private_oscillator() {
    let p = SystemParams::new(2.0, 0.1, 0.5, 0.7, 100.0);
    let m = mode_view(&p, Branch::Minus).unwrap();
    let tr = simulate_transient_with(&p, &m, 1.0, 0.5, 40.0, 0.005, false).unwrap();
    for (&t, &x) in tr.times.iter().zip(&tr.chi) {
        assert!((x - damped(p.gamma, m.omega_sq(), 1.0, 0.5, t)).abs() <= 1e-10);
    }
}

#[test]
fn envelope_decay_tracks_effective_damping() {
    let p = SystemParams::new(1.0, 0.05, 0.0, 3.0, 100.0);
    for b in Branch::BOTH {
        let m = mode_view(&p, b).unwrap();
        let tr = simulate_transient(&p, &m, 1.0, 0.0, 200.0, 0.01).unwrap();
        let rate = envelope_decay_rate(&tr, 30.0).unwrap();
        let want = effective_parameters(&m, &p).unwrap().gamma_eff;
        assert!((rate - want).abs() <= 0.1 * want, "{b}: fitted {rate}, effective {want}");
    }
}

#[test]
fn unstable_transient_is_reported() {
    let p = SystemParams::new(1.0, 0.6, 0.0, 1.0, 100.0);
    let m = mode_view(&p, Branch::Plus).unwrap();
    let r = simulate_transient(&p, &m, 1.0, 0.0, 500.0, 0.01);
    assert!(matches!(r, Err(Error::Unstable(_))));
}

proptest! {
    #[test]
    fn propagator_modulus_even(k in 0.0f64..10.0, g in 0.001f64..0.2, s in -0.5f64..0.5, l in 0.5f64..20.0) {
        let p = SystemParams::new(1.0, g, s, l, 100.0);
        for b in Branch::BOTH {
            let m = mode_view(&p, b).unwrap();
            if let (Ok(a), Ok(c)) = (d2_bar(&m, k, &p), d2_bar(&m, -k, &p)) {
                prop_assert!((a.norm_sqr() - c.norm_sqr()).abs() <= 1e-12 * a.norm_sqr());
            }
        }
    }

    #[test]
    fn stable_dominant_pole_in_left_half_plane(g in 0.001f64..0.3, s in -0.5f64..0.5, l in 0.1f64..20.0) {
        let p = SystemParams::new(1.0, g, s, l, 100.0);
        for b in Branch::BOTH {
            let m = mode_view(&p, b).unwrap();
            prop_assume!(2.0 * g < m.omega_sq() * l * 0.95);
            let d = dominant_pole(&m, &p).unwrap().dominant.unwrap();
            prop_assert!(d[0].re < 0.0, "{} {:?}", b, d);
            prop_assert_eq!(d[1], d[0].conj());
        }
    }

    #[test]
    fn effective_damping_nonnegative(g in 0.0f64..0.3, s in -0.5f64..0.5, l in 0.01f64..50.0) {
        let p = SystemParams::new(1.0, g, s, l, 100.0);
        for b in Branch::BOTH {
            let m = mode_view(&p, b).unwrap();
            if let Ok(e) = effective_parameters(&m, &p) {
                prop_assert!(e.gamma_eff >= 0.0);
                let smooth = m.omega_sq() - b.sign() * 2.0 * g / l;
                prop_assert!((e.w_sq_smooth - smooth).abs() <= 1e-15 * smooth.abs().max(1.0));
            }
        }
    }
}
