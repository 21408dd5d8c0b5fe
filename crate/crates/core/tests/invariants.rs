use proptest::prelude::*;
use stickyquake::analytics::{gr_survival, mean_tau_ell, resolvent_exact, survival_probability};
use stickyquake::boundary::{scale_transform, simulate_edge, EdgeProcessParams};
use stickyquake::graph::{build_k_ary_network, simulate_q, GraphPosition, QOptions, Region};
use stickyquake::quake::{simulate_quake, InitialLevel, QuakeOptions, Terminal};
use stickyquake::rdbm::{simulate_path, Discretization, RdbmParams};
use stickyquake::rng::path_rng;
use stickyquake::subordinators::{sample_h, HoldingSymbol, TemperedSymbol};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gr_survival_decreases_in_n(
        regions in prop::collection::vec((0.1f64..5.0, 0.1f64..5.0), 1..6),
        h in 0.0f64..3.0,
    ) {
        let mut prev = 1.0;
        for n in 0..=regions.len() {
            let s = gr_survival(n, &regions, h).unwrap();
            prop_assert!(s <= prev + 1e-15 && s > 0.0);
            prev = s;
        }
    }

    #[test]
    fn symbol_is_concave_increasing(mu in 0.0f64..4.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let sym = TemperedSymbol::new(mu).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mid = 0.5 * (lo + hi);
        let (fl, fm, fh) = (sym.eval(lo).unwrap(), sym.eval(mid).unwrap(), sym.eval(hi).unwrap());
        prop_assert!(fl <= fm + 1e-12 && fm <= fh + 1e-12);
        prop_assert!(fm + 1e-12 >= 0.5 * (fl + fh));
        prop_assert_eq!(sym.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn reflected_paths_stay_nonnegative(seed in any::<u64>(), mu in -2.0f64..2.0, c in 0.0f64..2.0, x0 in 0.0f64..2.0) {
        let p = RdbmParams::new(mu, c, 1e-2, 2.0);
        let path = simulate_path(&p, x0, None, &mut path_rng(seed, 0, 0)).unwrap();
        prop_assert!(path.values.iter().all(|&x| x >= 0.0));
        prop_assert!(path.local_time.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(path.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scale_transform_reverses_order(seed in any::<u64>(), h in 0.1f64..5.0, k in 0.1f64..3.0) {
        let p = RdbmParams::new(0.5, 0.0, 1e-2, 1.0);
        let path = simulate_path(&p, 0.5, None, &mut path_rng(seed, 1, 0)).unwrap();
        let s = scale_transform(&path, h, k);
        for i in 0..path.len() {
            for j in 0..path.len() {
                if path.values[i] < path.values[j] {
                    prop_assert!(s.values[i] >= s.values[j]);
                }
            }
            prop_assert!(s.values[i] > 0.0 && s.values[i] <= h);
        }
    }

    #[test]
    fn subordinator_draws_are_positive(seed in any::<u64>(), mu in 0.0f64..3.0, level in 0.01f64..5.0) {
        let sym = TemperedSymbol::new(mu).unwrap();
        let h = sample_h(&sym, level, &mut path_rng(seed, 2, 0)).unwrap();
        prop_assert!(h > 0.0 && h.is_finite());
    }

    #[test]
    fn edge_time_splits_into_diffusion_and_holding(seed in any::<u64>(), eta in 0.0f64..2.0) {
        let params = EdgeProcessParams { v: 1.0, ell: 1.0, eta_eps: eta, phi: HoldingSymbol::Identity, c: 0.0 };
        let run = simulate_edge(&params, 0.0, 50.0, Discretization::new(1e-2), &mut path_rng(seed, 3, 0)).unwrap();
        let s = &run.stats;
        prop_assert!((s.end_time - s.diffusive_time - s.holding_time).abs() < 1e-9);
        prop_assert!((s.holdings.iter().sum::<f64>() - s.holding_time).abs() < 1e-9);
        prop_assert!(run.path.path.values.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn q_stays_on_its_edges(seed in any::<u64>()) {
        let net = build_k_ary_network(3, 2, Region::new(0, 1.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        let traj = simulate_q(&net, GraphPosition::vertex(0), 5.0, &QOptions::default(), Discretization::new(1e-2), &mut path_rng(seed, 4, 0)).unwrap();
        for (t, pos) in &traj.points {
            prop_assert!(*t <= 5.0 + 1e-9);
            match pos.edge {
                None => prop_assert_eq!(pos.radial, 0.0),
                Some(e) => {
                    let len = net.star(pos.star).unwrap().edge(e).unwrap().length;
                    prop_assert!(pos.radial >= 0.0 && pos.radial <= len + 1e-12);
                }
            }
        }
    }

    #[test]
    fn catalogs_are_ordered(seed in any::<u64>(), h_star in 0.0f64..1.0) {
        let net = build_k_ary_network(5, 1, Region::new(0, 1.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        let opts = QuakeOptions { h_star, disc: Discretization::new(1e-2), ..QuakeOptions::default() };
        let cat = simulate_quake(&net, InitialLevel::Random, 20.0, &opts, &mut path_rng(seed, 5, 0)).unwrap();
        prop_assert!(cat.events.windows(2).all(|w| w[1].cumulative_t >= w[0].cumulative_t));
        for e in &cat.events {
            prop_assert!(e.region <= 5);
            prop_assert!(e.tau_e >= 0.0 && e.tau_w >= 0.0);
            if e.terminal == Terminal::Absorbed {
                prop_assert!(e.jump_level < h_star);
            }
        }
    }

    #[test]
    fn survival_lies_in_unit_interval(t in 0.01f64..5.0, x in 0.0f64..3.0, mu in -2.0f64..2.0, c in 0.0f64..2.0) {
        prop_assume!(c + mu / 2.0 >= 0.0);
        let s = survival_probability(t, x, mu, c).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&s));
    }
}

#[test]
fn resolvent_limit_matches_exit_mean() {
    for mu in [-1.0, 0.5, 1.0, 2.0] {
        let u = resolvent_exact(0.0, 0.0, 1.0, mu, 0.0).unwrap();
        let m = mean_tau_ell(0.0, 1.0, mu).unwrap();
        assert!(((u - m) / m).abs() < 1e-8, "mu={mu}: {u} vs {m}");
    }
}
