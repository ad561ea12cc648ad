use bipcp::contact::*;
use bipcp::hypergraph::{Hypergraph, RootSpec, Window};
use bipcp::phase::ModelParams;
use bipcp::stats::{ks_two_sample, mean_se, proportion_se};
use rayon::prelude::*;

fn frac(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, proportion_se(p, n))
}

#[test]
fn isolated_vertex_survives_like_exponential() {
    let g = AdjGraph::new(vec![1], &[]);
    let r = Rates::new(0.1, 0.1).unwrap();
    let n = 100_000;
    let hits = (0..n as u64)
        .into_par_iter()
        .filter(|&s| {
            run(
                &g,
                r,
                &[0],
                &SimConfig {
                    seed: s,
                    t_max: 1.0,
                    ..Default::default()
                },
            )
            .unwrap()
            .survived
        })
        .count();
    let (p, se) = frac(hits, n);
    let exact = (-1.0f64).exp();
    assert!((p - exact).abs() < 3.0 * se, "{p} vs {exact}");
}

#[test]
fn star_first_event_race() {
    let g = AdjGraph::star(100);
    let r = Rates::new(0.5, 0.5).unwrap();
    let n = 20_000;
    let hits = (0..n as u64)
        .into_par_iter()
        .filter(|&s| {
            let c = SimConfig {
                seed: s,
                max_events: 1,
                ..Default::default()
            };
            run(&g, r, &[0], &c).unwrap().total_transmissions == 1
        })
        .count();
    let (p, se) = frac(hits, n);
    let exact = 50.0 / 51.0;
    assert!((p - exact).abs() < 3.0 * se.max(1e-3), "{p} vs {exact}");
}

#[test]
fn tiny_rates_die_in_one_event() {
    let g = AdjGraph::star(2);
    let r = Rates::new(1e-4, 1e-4).unwrap();
    let n = 10_000;
    let one = (0..n as u64)
        .filter(|&s| {
            let o = run(
                &g,
                r,
                &[0],
                &SimConfig {
                    seed: s,
                    ..Default::default()
                },
            )
            .unwrap();
            !o.survived && o.events_processed == 1
        })
        .count();
    assert!(one as f64 / n as f64 >= 0.999, "{one}");
}

#[test]
fn deterministic_given_seed() {
    let g = AdjGraph::star(30);
    let r = Rates::new(0.4, 0.4).unwrap();
    let c = SimConfig {
        seed: 9,
        record_trace: true,
        ..Default::default()
    };
    assert_eq!(run(&g, r, &[0], &c).unwrap(), run(&g, r, &[0], &c).unwrap());
}

fn star_sample(n: usize, r: Rates, trials: u64, special: bool) -> Vec<f64> {
    let g = AdjGraph::star(n);
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let c = SimConfig {
                t_max: 1e6,
                ..Default::default()
            };
            let mut rng = trial_rng(if special { 11 } else { 12 }, i);
            let o = if special {
                run_star_with_rng(n, r, StarInit::CentreOnly, &c, &mut rng).unwrap()
            } else {
                run_with_rng(&g, r, &[0], &c, &mut rng).unwrap()
            };
            o.extinction_time
        })
        .collect()
}

#[test]
fn star_engine_matches_general_engine() {
    for (n, l1, l2) in [(10, 0.3, 0.3), (100, 0.1, 0.2), (1000, 0.05, 0.05)] {
        let r = Rates::new(l1, l2).unwrap();
        let a = star_sample(n, r, 10_000, true);
        let b = star_sample(n, r, 10_000, false);
        let (d, p) = ks_two_sample(&a, &b);
        assert!(p > 0.01, "n={n}: D={d} p={p}");
    }
}

#[test]
fn star_single_leaf_mean_extinction() {
    let r = Rates::new(0.1, 0.1).unwrap();
    let (exact, _) = star_extinction_means(1, r);
    assert!(exact < 10.0);
    let xs = star_sample(1, r, 40_000, false);
    let (m, se) = mean_se(&xs);
    assert!((m - exact).abs() < 3.0 * se, "{m} vs {exact}");
    let ys = star_sample(1, r, 40_000, true);
    let (m2, se2) = mean_se(&ys);
    assert!((m2 - exact).abs() < 3.0 * se2, "{m2} vs {exact}");
}

#[test]
fn star_solver_matches_monte_carlo() {
    for (n, l1, l2) in [(5, 0.4, 0.3), (40, 0.2, 0.25)] {
        let r = Rates::new(l1, l2).unwrap();
        let (exact, _) = star_extinction_means(n, r);
        let xs = star_sample(n, r, 40_000, true);
        let (m, se) = mean_se(&xs);
        assert!((m - exact).abs() < 3.0 * se, "n={n}: {m} vs {exact}");
    }
}

#[test]
fn star_full_start_exceeds_centre_start() {
    let r = Rates::new(0.1, 0.1).unwrap();
    let (c, f) = star_extinction_means(50, r);
    assert!(f > c && c > 1.0);
}

#[test]
fn star_takeoff_from_centre() {
    // Reaching λ1 n/(8e) infected from the centre alone.
    let n = 100_000;
    let r = Rates::new(0.02, 0.02).unwrap();
    let thr = (0.02 * n as f64 / (8.0 * std::f64::consts::E)).ceil() as usize;
    let trials = 2000;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&i| {
            let c = SimConfig {
                stop_at_count: Some(thr),
                ..Default::default()
            };
            let o =
                run_star_with_rng(n, r, StarInit::CentreOnly, &c, &mut trial_rng(3, i)).unwrap();
            o.peak_infected >= thr
        })
        .count();
    let (p, se) = frac(hits, trials);
    assert!(p >= 1.0 - 3.0 / 40f64.sqrt() - 3.0 * se, "{p}");
}

#[test]
fn star_many_leaves_at_time_one() {
    let n = 100_000;
    let r = Rates::new(0.02, 0.02).unwrap();
    let thr = 0.02 * n as f64 / (8.0 * std::f64::consts::E);
    let trials = 1000;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&i| {
            let c = SimConfig {
                t_max: 1.0,
                ..Default::default()
            };
            let o =
                run_star_with_rng(n, r, StarInit::Leaves(500), &c, &mut trial_rng(4, i)).unwrap();
            o.final_infected as f64 >= thr
        })
        .count();
    assert!(hits as f64 / trials as f64 >= 0.9, "{hits}");
}

#[test]
fn two_vertex_trace() {
    let g = AdjGraph::path(2, 1);
    let r = Rates::new(0.1, 0.1).unwrap();
    let e = trace_probability(&g, &Trace(vec![0, 1]), r, 100_000, 5).unwrap();
    let exact = 0.1 / 1.1;
    assert!(
        (e.p_hat - exact).abs() < 3.0 * e.se,
        "{} vs {exact}",
        e.p_hat
    );
    assert!(exact <= e.bound.unwrap());
}

#[test]
fn three_vertex_trace_below_bound() {
    let g = AdjGraph::path(3, 1);
    let r = Rates::new(0.1, 0.1).unwrap();
    let e = trace_probability(&g, &Trace(vec![0, 1, 2]), r, 100_000, 6).unwrap();
    assert!((e.bound.unwrap() - 0.04).abs() < 1e-12);
    assert!(e.p_hat <= 0.04 + 3.0 * e.se);
}

#[test]
fn trace_detection_matches_full_simulation() {
    // On a path, "the infection ever reaches the far end" is the trace event for the
    // straight trace, so the restricted construction must agree with the full engine.
    let g = AdjGraph::path(3, 1);
    let r = Rates::new(0.6, 0.4).unwrap();
    let e = trace_probability(&g, &Trace(vec![0, 1, 2]), r, 40_000, 7).unwrap();
    let n = 40_000;
    let hits = (0..n as u64)
        .into_par_iter()
        .filter(|&i| {
            let c = SimConfig {
                survival_proxy: SurvivalProxy::TargetHit { u1: 0.5, u2: 0.5 },
                ..Default::default()
            };
            let mut g2 = g.clone();
            g2.marks = vec![1.0, 1.0, 0.1];
            run_with_rng(&g2, r, &[0], &c, &mut trial_rng(8, i))
                .unwrap()
                .target_hit
                == Some(2)
        })
        .count();
    let (p, se) = frac(hits, n);
    assert!(
        (p - e.p_hat).abs() < 3.0 * (se * se + e.se * e.se).sqrt(),
        "{p} vs {}",
        e.p_hat
    );
}

#[test]
fn monotone_coupling_never_violated() {
    let params = ModelParams::new(0.6, 0.55, 1.2, 0.3);
    for seed in 0..40u64 {
        let g = Hypergraph::sample(
            &params,
            Window::new(100.0).unwrap(),
            seed,
            RootSpec::UniformMark { vtype: 1 },
        )
        .unwrap();
        let lo = Rates::from_lambda(0.2, 1.2);
        let hi = Rates::from_lambda(0.35, 1.2);
        let o = run_coupled(
            &g,
            lo,
            hi,
            &[g.root().unwrap()],
            50.0,
            200_000,
            &mut trial_rng(seed, 0),
        )
        .unwrap();
        assert_eq!(o.violations, 0);
        assert!(o.hi_peak >= o.lo_peak);
        assert!(!o.lo_alive || o.hi_alive);
    }
}

#[test]
fn coupling_marginals_are_exact() {
    // The low copy in the coupling has the same law as a direct run at the low rates.
    let g = AdjGraph::star(10);
    let lo = Rates::new(0.2, 0.3).unwrap();
    let hi = Rates::new(0.5, 0.6).unwrap();
    let n = 20_000;
    let t = 2.0;
    let coupled = (0..n as u64)
        .into_par_iter()
        .filter(|&i| {
            run_coupled(&g, lo, hi, &[0], t, u64::MAX, &mut trial_rng(20, i))
                .unwrap()
                .lo_alive
        })
        .count();
    let direct = (0..n as u64)
        .into_par_iter()
        .filter(|&i| {
            let c = SimConfig {
                t_max: t,
                ..Default::default()
            };
            run_with_rng(&g, lo, &[0], &c, &mut trial_rng(21, i))
                .unwrap()
                .alive_at_end
        })
        .count();
    let (p1, s1) = frac(coupled, n);
    let (p2, s2) = frac(direct, n);
    assert!(
        (p1 - p2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(),
        "{p1} vs {p2}"
    );
}

fn theta(params: ModelParams, root: RootSpec, trials: usize, seed: u64) -> ThetaEstimate {
    let c = SimConfig {
        t_max: 30.0,
        ..Default::default()
    };
    estimate_theta(&params, Window::new(150.0).unwrap(), root, trials, &c, seed)
        .unwrap()
        .0
}

#[test]
fn no_root_means_zero() {
    let e = theta(ModelParams::new(0.6, 0.6, 1.0, 0.3), RootSpec::None, 50, 0);
    assert_eq!(e.theta_hat, 0.0);
    assert_eq!(e.trials, 50);
}

#[test]
fn relabelling_symmetry() {
    let (g1, g2, a, lam) = (0.65, 0.55, 1.5, 0.5);
    let e1 = theta(
        ModelParams::new(g1, g2, a, lam),
        RootSpec::UniformMark { vtype: 1 },
        3000,
        1,
    );
    let e2 = theta(
        ModelParams::new(g2, g1, 1.0 / a, lam.powf(a)),
        RootSpec::UniformMark { vtype: 2 },
        3000,
        2,
    );
    let s1 = proportion_se(e1.theta_hat, e1.trials);
    let s2 = proportion_se(e2.theta_hat, e2.trials);
    assert!(e1.theta_hat > 0.05, "{}", e1.theta_hat);
    assert!(
        (e1.theta_hat - e2.theta_hat).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(),
        "{} vs {}",
        e1.theta_hat,
        e2.theta_hat
    );
}

#[test]
fn ci_half_width_scales_with_root_n() {
    let p = ModelParams::new(0.65, 0.55, 1.0, 0.4);
    let r = RootSpec::UniformMark { vtype: 1 };
    let small = theta(p, r, 500, 3);
    let big = theta(p, r, 2000, 3);
    let ratio = (small.ci_hi - small.ci_lo) / (big.ci_hi - big.ci_lo);
    assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
}

#[test]
fn estimate_is_thread_count_independent() {
    let p = ModelParams::new(0.65, 0.55, 1.0, 0.4);
    let r = RootSpec::UniformMark { vtype: 1 };
    let a = theta(p, r, 200, 4);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = pool.install(|| theta(p, r, 200, 4));
    assert_eq!(a, b);
}

#[test]
fn martingale_bound_on_test_graph() {
    // Bipartite 8-vertex graph: types 1 on {0,1,2,3}, 2 on {4,5,6,7}.
    let types = vec![1, 1, 1, 1, 2, 2, 2, 2];
    let edges = [
        (0, 4),
        (0, 5),
        (1, 4),
        (1, 6),
        (2, 5),
        (2, 6),
        (2, 7),
        (3, 7),
        (0, 7),
    ];
    let g = AdjGraph::new(types, &edges);
    let r = Rates::new(0.1, 0.1).unwrap();
    let mut traces = Vec::new();
    for start in [0usize, 4] {
        let mut frontier = vec![vec![start]];
        for _ in 0..4 {
            let mut next = Vec::new();
            for t in &frontier {
                for &w in &g.adj[*t.last().unwrap()] {
                    let mut u = t.clone();
                    u.push(w);
                    next.push(u);
                }
            }
            traces.extend(next.iter().cloned());
            frontier = next;
        }
    }
    for (k, t) in traces.iter().enumerate() {
        let e = trace_probability(&g, &Trace(t.clone()), r, 4000, k as u64).unwrap();
        assert!(
            e.p_hat <= e.bound.unwrap() + 3.0 * e.se.max(1.0 / 4000.0),
            "{t:?}: {} > {:?}",
            e.p_hat,
            e.bound
        );
    }
}
