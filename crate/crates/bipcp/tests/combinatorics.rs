use bipcp::combinatorics::*;
use bipcp::hypergraph::{Hypergraph, RootSpec, Window};
use bipcp::phase::{AsymptoticScale, ModelParams};
use bipcp::stats::mean_se;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn enumeration_dominated_by_count_bound() {
    for len in 1..=10 {
        let all = enumerate_paths(len, None).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for k in 1..=len + 1 {
            let n = enumerate_paths(len, Some(k)).unwrap().len() as u128;
            assert!(n <= count_bound(len, k).unwrap(), "ℓ={len} k={k}");
        }
        for w in all.windows(2) {
            assert!(w[0] < w[1], "not strictly lexicographic");
        }
        for p in &all {
            assert!(seen.insert(p.clone()));
            assert_eq!(&CombinatorialPath::new(p.entries().to_vec()).unwrap(), p);
        }
    }
}

#[test]
fn round_trip_and_tree_shape() {
    for len in 1..=10 {
        for p in enumerate_paths(len, None).unwrap() {
            // Canonical embedding: label i ↦ vertex 100 + 7i.
            let g: Vec<usize> = p.entries().iter().map(|&i| 100 + 7 * i).collect();
            assert_eq!(to_combinatorial(&g).unwrap(), p);
            let t = discovery_tree(&p);
            let k = p.distinct();
            assert_eq!(t.len(), k);
            assert_eq!(t.edges().len(), k - 1);
            assert_eq!(t.distances().len(), k);
        }
    }
}

#[test]
fn all_distinct_path_is_its_own_tree() {
    let p = CombinatorialPath::new((0..6).collect()).unwrap();
    let t = discovery_tree(&p);
    assert_eq!(t.edges(), [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
    assert_eq!(t.m_star, Some(5));
}

fn random_tree(rng: &mut ChaCha8Rng, k: usize) -> Tree {
    let mut ids: Vec<usize> = (0..k).collect();
    ids.shuffle(rng);
    let edges: Vec<(usize, usize)> = (1..k).map(|i| (ids[rng.gen_range(0..i)], ids[i])).collect();
    let t = Tree::from_edges(ids[0], &edges).unwrap();
    let leaves: Vec<usize> = t.vertices().filter(|&v| t.is_leaf(v)).collect();
    let m = *leaves.choose(rng).unwrap();
    t.with_distinguished(m).unwrap()
}

fn sample_params(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    loop {
        let g1: f64 = rng.gen_range(0.05..0.99);
        let g2: f64 = rng.gen_range(0.05..0.99);
        if g1 + g2 > 1.02 {
            return (g1, g2, rng.gen_range(0.05..5.0));
        }
    }
}

#[test]
fn reductions_terminate_with_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let k = rng.gen_range(2..=20);
        let t = random_tree(&mut rng, k);
        let (g1, g2, a) = sample_params(&mut rng);
        let th = Thresholds::explicit(g1, g2, a, 0.05, 0.2, 0.3).unwrap();
        let m = t.m_star.unwrap();
        let parity = t.distances()[&m] % 2;
        let (fin, log) = reduce_to_segment(&t).unwrap();
        assert!(fin.is_final_segment());
        assert_eq!(fin.len() - 1, if parity == 1 { 1 } else { 2 });
        assert!(
            log.len() as i64 >= (k as i64 - 3).div_euclid(2),
            "k={k} ops={}",
            log.len()
        );

        let conv = WeightConvention::RootExact;
        let mut cur = t.clone();
        let mut f_inc = tree_weight_f(&cur, &th, conv, WeightMode::Numeric)
            .unwrap()
            .ln_value;
        for &op in &log {
            let before = tree_weight_f(&cur, &th, conv, WeightMode::Asymptotic).unwrap();
            let ratio_s = reduction_ratio_scale(&cur, op, &th).unwrap();
            f_inc -= reduction_ratio_ln(&cur, op, &th).unwrap();
            cur = apply_reduction(&cur, op).unwrap();
            let after = tree_weight_f(&cur, &th, conv, WeightMode::Asymptotic).unwrap();
            let f_new = tree_weight_f(&cur, &th, conv, WeightMode::Numeric)
                .unwrap()
                .ln_value;
            assert!(
                ((f_inc - f_new) / f_new.abs().max(1.0)).abs() < 1e-9,
                "{op:?}: {f_inc} vs {f_new}"
            );
            let d = before.scale / after.scale;
            assert!((d.p - ratio_s.p).abs() < 1e-9 && (d.q - ratio_s.q).abs() < 1e-9);
            let lhs = before.upper_scale();
            let rhs = after.scale * AsymptoticScale::log_pow(-16.0);
            assert!(
                lhs.eventually_le(rhs),
                "({g1},{g2},{a}) {op:?}: {lhs} vs {rhs}"
            );
            f_inc = f_new;
        }
        let total = tree_weight_f(&t, &th, conv, WeightMode::Asymptotic).unwrap();
        assert!(total.scale.eventually_le(f_bound_scale(k, &th)));
    }
}

#[test]
fn seven_vertex_tree_reduces_in_a_few_ops() {
    // o=0 with spare leaf 1 and a branch 2 – {3, 4}, where 4 – 5 – 6 = m*.
    let t = Tree::from_edges(0, &[(0, 1), (0, 2), (2, 3), (2, 4), (4, 5), (5, 6)])
        .unwrap()
        .with_distinguished(6)
        .unwrap();
    let (fin, log) = reduce_to_segment(&t).unwrap();
    assert!((2..=3).contains(&log.len()), "{log:?}");
    assert!(fin.is_final_segment());
}

#[test]
fn root_exponent_as_written_loses_the_gain() {
    // Spare leaf at a root of degree 2: under the displayed exponent the root's factor
    // does not change, so the ratio misses a power of λ.
    let (g1, g2, a) = (0.8, 0.8, 1.0);
    let th = Thresholds::explicit(g1, g2, a, 0.01, 0.5, 0.5).unwrap();
    let t = Tree::from_edges(0, &[(0, 1), (0, 2), (2, 3)])
        .unwrap()
        .with_distinguished(3)
        .unwrap();
    let op = Reduction::Op1 { x: 0, y: 1 };
    let t2 = apply_reduction(&t, op).unwrap();
    let check = |conv| {
        let f = tree_weight_f(&t, &th, conv, WeightMode::Asymptotic).unwrap();
        let f2 = tree_weight_f(&t2, &th, conv, WeightMode::Asymptotic).unwrap();
        f.upper_scale()
            .eventually_le(f2.scale * AsymptoticScale::log_pow(-16.0))
    };
    assert!(!check(WeightConvention::AsWritten));
    assert!(check(WeightConvention::RootExact));
}

#[test]
fn mecke_oracle_matches_sampled_counts() {
    // γ's near 1/2 keep the window truncation of the red integrals well under 1%.
    let (g1, g2) = (0.55, 0.55);
    let th = Thresholds::explicit(g1, g2, 1.0, 0.1, 0.3, 0.4).unwrap();
    let params = ModelParams::new(g1, g2, 1.0, 0.1);
    let window = Window::new(2000.0).unwrap();
    let graphs: Vec<Hypergraph> = (0..500u64)
        .into_par_iter()
        .map(|s| {
            Hypergraph::sample(&params, window, s, RootSpec::UniformMark { vtype: 1 }).unwrap()
        })
        .collect();
    for (path, c) in [
        (vec![0, 1], Colouring::AllBlue),
        (vec![0, 1, 2], Colouring::AllBlue),
        (vec![0, 1, 0], Colouring::AllBlue),
        (vec![0, 1], Colouring::RedLast),
        (vec![0, 1, 2], Colouring::RedLast),
    ] {
        let p = CombinatorialPath::new(path).unwrap();
        let xs: Vec<f64> = graphs
            .iter()
            .map(|g| count_realized_paths(g, g.root().unwrap(), &p, c, &th).unwrap() as f64)
            .collect();
        let (m, se) = mean_se(&xs);
        let want = mecke_expected_count(&p, c, &th).unwrap();
        assert!(
            (m - want).abs() < 3.0 * se,
            "{p} {c:?}: {m} ± {se} vs {want}"
        );
    }
    let p = CombinatorialPath::new(vec![0, 1, 0]).unwrap();
    assert!(mecke_expected_count(&p, Colouring::RedLast, &th).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn count_bound_formula(len in 0usize..20, kf in 0.0f64..1.0) {
        let k = 1 + ((len + 1) as f64 * kf) as usize;
        let k = k.min(len + 1);
        let mut b: u128 = 1;
        for i in 0..k { b = b * (len + 1 - i) as u128 / (i + 1) as u128; }
        prop_assert_eq!(count_bound(len, k).unwrap(), b * (k as u128).pow((len + 1 - k) as u32));
    }

    #[test]
    fn integral_matches_quadrature(g in 0.05f64..0.99, n in 1usize..6, u in 0.01f64..0.99) {
        let exact = mark_integral(g, n, u).unwrap();
        // Substitution x = e^s makes the integrand smooth.
        let (a, b) = (u.ln(), 0.0);
        let m = 4000;
        let h = (b - a) / m as f64;
        let f = |s: f64| (s * (1.0 - g * n as f64)).exp();
        let mut q = f(a) + f(b);
        for i in 1..m { q += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }; }
        q *= h / 3.0;
        prop_assert!(((q - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn m_factor_scale_consistent(k in 2usize..12, extra in 0usize..30, a in 0.1f64..4.0, lam in 1e-6f64..0.5) {
        let len = k - 1 + extra;
        let m = m_factor(lam, a, k, len).unwrap();
        prop_assert!((m.ln_value - (m.ln_constant + m.scale.ln_eval(lam))).abs() < 1e-9);
        if let Ok(c) = count_bound(len, k) {
            let want = (c as f64).ln() + (len.saturating_sub(2 * k) as f64) * 2f64.ln();
            prop_assert!((m.ln_constant - want).abs() < 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn sum_bound_holds_in_regime(k in 3usize..8, e in 3.0f64..8.0, a in 0.5f64..3.0) {
        let lam = 10f64.powf(-e);
        let c = sum_bound_check(k, lam, a).unwrap();
        prop_assume!(c.ratio_limit < 0.05);
        prop_assert!(c.pass, "{:?}", c);
    }
}
