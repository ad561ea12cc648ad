use bipcp::phase::{Strategy as Label, *};
use proptest::prelude::*;
use proptest::strategy::Strategy;

fn supercritical() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01f64..0.99, 0.01f64..0.99, 0.01f64..10.0)
        .prop_filter("in S", |(g1, g2, _)| g1 + g2 > 1.0 + 1e-6)
}

fn brute_argmin(vals: [f64; 3]) -> (f64, f64) {
    let mut v = vals;
    v.sort_by(f64::total_cmp);
    (v[0], v[1] - v[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn classify_matches_direct_minimum((g1, g2, a) in supercritical()) {
        let c = classify(g1, g2, a).unwrap();
        let direct = a_star(g1, g2, a).unwrap();
        prop_assert!((c.a_star_value - direct).abs() <= 1e-12, "{} vs {}", c.a_star_value, direct);
    }

    #[test]
    fn target_labels_match_argmin((g1, g2, a) in supercritical()) {
        let e = strategy_exponents(g1, g2, a).unwrap();
        let t = target_minimizers(g1, g2, a).unwrap();
        let (mu_min, mu_gap) = brute_argmin([e.mu_s, e.mu_b, e.mu_d]);
        let (nu_min, nu_gap) = brute_argmin([e.nu_s, e.nu_b, e.nu_d]);
        if mu_gap > 1e-9 {
            prop_assert_eq!(t.mu_label, e.mu_label);
        }
        if nu_gap > 1e-9 {
            prop_assert_eq!(t.nu_label, e.nu_label);
        }
        prop_assert!((t.mu_star - mu_min).abs() <= 1e-9);
        prop_assert!((t.nu_star - nu_min).abs() <= 1e-9);
    }

    #[test]
    fn fixed_point_identities((g1, g2, a) in supercritical()) {
        let e = strategy_exponents(g1, g2, a).unwrap();
        let m = transmission_maps(g1, g2, a).unwrap();
        let tol = 1e-12 * (1.0 + e.mu_d.abs() + e.nu_d.abs()).max(1.0);
        prop_assert!((m.phi.eval(e.mu_d) - e.nu_d).abs() <= tol * 100.0);
        prop_assert!((m.psi.eval(e.nu_d) - e.mu_d).abs() <= tol * 100.0);
        prop_assert!((m.phi_inv.eval(e.nu_s) - e.mu_b).abs() <= tol);
        prop_assert!((m.psi_inv.eval(e.mu_s) - e.nu_b).abs() <= tol);
    }

    #[test]
    fn relabelling_symmetry((g1, g2, a) in supercritical()) {
        let e = strategy_exponents(g1, g2, a).unwrap();
        let s = strategy_exponents(g2, g1, 1.0 / a).unwrap();
        for st in Label::ALL {
            let rhs = a * s.mu(st);
            prop_assert!((e.nu(st) - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn positivity_and_redundancy((g1, g2, a) in supercritical()) {
        let e = strategy_exponents(g1, g2, a).unwrap();
        prop_assert!(big_phi(g1, g2, e.mu_star, e.nu_star) >= -1e-12);
        prop_assert!(big_psi(g1, g2, a, e.mu_star, e.nu_star) >= -1e-12);
        let c = a_star_candidates(g1, g2, a).unwrap();
        prop_assert!(c[2] >= c[0].min(c[1]) - 1e-12);
    }

    #[test]
    fn scale_inequalities_hold((g1, g2, a) in supercritical()) {
        let r = verify_scale_inequalities(g1, g2, a, default_b(g1, g2)).unwrap();
        prop_assert!(r.all_pass(), "{:?}", r);
    }

    #[test]
    fn scale_order_is_total(p in proptest::array::uniform3((-5f64..5.0, -50f64..50.0))) {
        let [x, y, z] = p.map(|(p, q)| AsymptoticScale::new(p, q));
        use std::cmp::Ordering::*;
        let xy = scale_compare(x, y);
        prop_assert_eq!(xy, scale_compare(y, x).reverse());
        if xy != Greater && scale_compare(y, z) != Greater {
            prop_assert!(scale_compare(x, z) != Greater);
        }
        prop_assert_eq!(x * y, y * x);
        let l = (x * y) * z;
        let r = x * (y * z);
        prop_assert!((l.p - r.p).abs() < 1e-12 && (l.q - r.q).abs() < 1e-12);
    }
}

/// Evaluate both neighbouring strategies' formulas at the boundary point itself.
fn assert_continuous(g1: f64, g2: f64, a: f64, minus: (f64, f64, f64), plus: (f64, f64, f64)) {
    let e = strategy_exponents(g1, g2, a).unwrap();
    let sm = classify(minus.0, minus.1, minus.2)
        .unwrap()
        .dominant_strategy;
    let sp = classify(plus.0, plus.1, plus.2).unwrap().dominant_strategy;
    let (vm, vp) = (sm.exponent(&e, g2), sp.exponent(&e, g2));
    assert!(
        (vm - vp).abs() <= 1e-9,
        "({g1},{g2},{a}): {sm:?}={vm} vs {sp:?}={vp}"
    );
    assert!((vm - a_star(g1, g2, a).unwrap()).abs() <= 1e-9);
    assert!(
        classify(g1, g2, a).unwrap().tie,
        "({g1},{g2},{a}) not flagged"
    );
}

#[test]
fn a_star_continuous_across_boundaries() {
    let eps = 1e-7;
    let n = 200;
    for i in 1..n {
        let s = i as f64 / n as f64;
        // Inside Ib: split at (γ1−γ2)/(γ2−γ1+γ1γ2).
        let g1 = 0.5 + 0.5 * s;
        let lo = g1 / (1.0 + g1);
        let g2 = lo + (0.5 - lo) * 0.5;
        let t = threshold_ib(g1, g2);
        if g1 + g2 > 1.0 + 1e-3 && t.is_finite() && t > eps {
            assert_continuous(g1, g2, t, (g1, g2, t - eps), (g1, g2, t + eps));
        }
        // γ2 = 1/2 and γ1 = 1/2 lines, a sweeping (0, 10).
        let a = 10.0 * s;
        let g1 = 0.55 + 0.4 * s;
        assert_continuous(g1, 0.5, a, (g1, 0.5 - eps, a), (g1, 0.5 + eps, a));
        let g2 = 0.55 + 0.4 * s;
        assert_continuous(0.5, g2, a, (0.5 - eps, g2, a), (0.5 + eps, g2, a));
        // κ curve between III and IV.
        let g1 = 0.5 + 0.5 * s;
        let k = kappa(g1);
        if k > 0.5 + 1e-3 && k < 1.0 - 1e-3 {
            assert_continuous(g1, k, a, (g1, k - eps, a), (g1, k + eps, a));
        }
        // a-splits inside III and IV.
        let g1 = 0.52 + 0.46 * s;
        let g2 = 0.51 + 0.02 * s;
        if 1.0 / g1 + 1.0 / g2 > 3.0 {
            let t = threshold_d1_over_bar_g1(g1);
            assert_continuous(g1, g2, t, (g1, g2, t - eps), (g1, g2, t + eps));
        }
        let g1 = 0.7 + 0.29 * s;
        let g2 = 0.7 + 0.29 * (1.0 - s);
        for t in [a1_star(g1, g2), a2_star(g1, g2)] {
            if t > eps {
                assert_continuous(g1, g2, t, (g1, g2, t - eps), (g1, g2, t + eps));
            }
        }
    }
}
