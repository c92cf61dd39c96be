use mmblock_core::applications::{
    average_path_loss_at, cell_edge_mean_rate, path_loss_states, CellConfig, LinkTemplate,
    RadioConfig,
};
use mmblock_core::conditional::{conditional_curve, ConditionalOptions};
use mmblock_core::renewal::{ModelOptions, RenewalModel};
use mmblock_core::residence::{distance_cdf_s1, distance_cdf_s2, residence};
use mmblock_core::simulator::{simulate, SimulationMode};
use mmblock_core::{
    build_zone, zone_length, DistributionTable, LinkGeometry, ScenarioConfig, ScenarioKind,
};
use proptest::prelude::*;

fn link() -> impl Strategy<Value = LinkGeometry> {
    (
        2.5f64..12.0,
        1.0f64..1.5,
        0.0f64..0.5,
        0.3f64..0.8,
        2.0f64..10.0,
        0.0f64..1.45,
    )
        .prop_map(|(h_t, h_r, dh, d_m, r_0, alpha)| LinkGeometry {
            h_t,
            h_r,
            h_b: (h_r + dh).min(h_t - 0.1),
            d_m,
            r_0,
            w_s: 0.0,
            alpha,
        })
}

/// Link with a sidewalk just wide enough to hold the zone plus `margin`.
/// Zones reaching above the Tx cannot fit any sidewalk and are dropped.
fn sidewalk_link(margin: f64) -> impl Strategy<Value = LinkGeometry> {
    link()
        .prop_filter("zone above Tx", |l| build_zone(l).unwrap().y_max() < 0.0)
        .prop_map(move |l| {
            let z = build_zone(&l).unwrap();
            LinkGeometry {
                w_s: -z.y_min() + margin,
                ..l
            }
        })
}

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        sidewalk_link(0.5),
        prop_oneof![
            Just(ScenarioKind::S1),
            Just(ScenarioKind::S2),
            Just(ScenarioKind::S3)
        ],
        0.1f64..3.0,
        0.5f64..2.0,
    )
        .prop_map(|(link, kind, lambda_i, v)| ScenarioConfig {
            kind,
            link,
            v,
            lambda_i,
            c: None,
        })
}

fn check_table(t: &DistributionTable) {
    let (g, f, fl) = (t.grid(), t.cdf(), t.cdf_left());
    assert!(g.windows(2).all(|w| w[0] < w[1]), "grid not increasing");
    assert!(
        f.iter().all(|v| (0.0..=1.0).contains(v)),
        "cdf outside [0, 1]"
    );
    assert!(f.windows(2).all(|w| w[0] <= w[1] + 1e-12), "cdf decreasing");
    assert!(fl.iter().zip(f).all(|(l, r)| *l <= *r + 1e-12));
    assert!((f[f.len() - 1] - 1.0).abs() < 1e-9, "cdf does not reach 1");
    for a in t.atoms() {
        assert!(a.mass > 0.0);
        let jump = t.eval(a.location) - t.eval_left(a.location);
        assert!((jump - a.mass).abs() < 1e-9, "atom {a:?} vs jump {jump}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zone_is_a_rectangle(l in link()) {
        let z = build_zone(&l).unwrap();
        let [a, b, c, d] = z.vertices();
        let ab = (b.x - a.x, b.y - a.y);
        let dc = (c.x - d.x, c.y - d.y);
        let ad = (d.x - a.x, d.y - a.y);
        let bc = (c.x - b.x, c.y - b.y);
        prop_assert!((ab.0 - dc.0).abs() < 1e-9 && (ab.1 - dc.1).abs() < 1e-9);
        prop_assert!((ad.0 - bc.0).abs() < 1e-9 && (ad.1 - bc.1).abs() < 1e-9);
        prop_assert!((ab.0 * ad.0 + ab.1 * ad.1).abs() < 1e-9);
        prop_assert!((a.dist(b) - l.d_m).abs() < 1e-9);
        prop_assert!((a.dist(d) - z.r).abs() < 1e-9);
        let w_e = l.d_m * l.alpha.sin() + z.r * l.alpha.cos();
        prop_assert!((z.y_max() - z.y_min() - w_e).abs() < 1e-9);
        prop_assert!((z.w_e - w_e).abs() < 1e-9);
    }

    #[test]
    fn zone_length_monotonicity(l in link(), bump in 0.01f64..1.0) {
        let r = zone_length(&l).unwrap();
        let longer = |m: LinkGeometry| zone_length(&m).unwrap() > r;
        let far = longer(LinkGeometry { r_0: l.r_0 + bump, ..l });
        let wide = longer(LinkGeometry { d_m: l.d_m + bump, ..l });
        let high_ap = zone_length(&LinkGeometry { h_t: l.h_t + bump, ..l }).unwrap();
        prop_assert!(far && wide && high_ap <= r);
        let h_b = (l.h_b + bump).min(l.h_t - 0.01);
        if h_b > l.h_b {
            let tall = longer(LinkGeometry { h_b, ..l });
            prop_assert!(tall);
        }
    }

    #[test]
    fn residence_tables_are_valid(cfg in scenario()) {
        let res = residence(&cfg, 600).unwrap();
        check_table(&res.distance);
        check_table(&res.time);
        let ratio = res.time.support_max() * cfg.v / res.distance.support_max();
        prop_assert!((ratio - 1.0).abs() < 1e-12);
        prop_assert!(res.lambda > 0.0);
    }

    #[test]
    fn s2_with_extreme_mode_is_s1(l in sidewalk_link(0.5)) {
        let z = build_zone(&l).unwrap();
        let s1 = distance_cdf_s1(&z, 300).unwrap();
        for c in [1e-7, l.w_s - 1e-7] {
            let s2 = distance_cdf_s2(&z, l.w_s, c, 300).unwrap();
            for (a, b) in s1.cdf().iter().zip(s2.cdf()) {
                prop_assert!((a - b).abs() < 1e-6, "c = {c}: {a} vs {b}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn busy_period_dominates_residence(cfg in scenario()) {
        let opts = ModelOptions { grid_intervals: 800, ..ModelOptions::default() };
        let m = RenewalModel::build(&cfg, &opts).unwrap();
        check_table(&m.f_eta);
        for &x in m.f_t.grid() {
            prop_assert!(m.f_eta.eval(x) <= m.f_t.eval(x) + 1e-9);
            prop_assert!(m.f_eta.eval_left(x) <= m.f_t.eval_left(x) + 1e-9);
        }
        prop_assert!((m.e_eta_numeric - m.e_eta).abs() / m.e_eta < 0.01);
    }

    #[test]
    fn blocked_mean_grows_with_intensity(cfg in scenario(), factor in 1.2f64..3.0) {
        let opts = ModelOptions { grid_intervals: 800, ..ModelOptions::default() };
        let lo = RenewalModel::build(&cfg, &opts).unwrap();
        let hi = RenewalModel::build(&ScenarioConfig { lambda_i: cfg.lambda_i * factor, ..cfg }, &opts).unwrap();
        prop_assert!(hi.e_eta_numeric > lo.e_eta_numeric);
        prop_assert!(hi.frac_nlos > lo.frac_nlos);
    }

    #[test]
    fn conditional_rows_are_stochastic(cfg in scenario(), lag in 0.0f64..12.0) {
        let opts = ModelOptions { grid_intervals: 800, ..ModelOptions::default() };
        let m = RenewalModel::build(&cfg, &opts).unwrap();
        let c = conditional_curve(&m, &[lag], &ConditionalOptions::default()).unwrap();
        prop_assert!((c.p00[0] + c.p01[0] - 1.0).abs() <= c.epsilon);
        prop_assert!((c.p10[0] + c.p11[0] - 1.0).abs() <= c.epsilon);
        prop_assert!((m.frac_los * c.p01[0] - m.frac_nlos * c.p10[0]).abs() < 0.02);
    }

    #[test]
    fn simulation_is_deterministic(cfg in scenario(), seed in any::<u64>(), exact in any::<bool>()) {
        let mode = if exact { SimulationMode::Exact } else { SimulationMode::Rectangle };
        let a = simulate(&cfg, 300.0, seed, mode).unwrap();
        let b = simulate(&cfg, 300.0, seed, mode).unwrap();
        prop_assert_eq!(&a.intervals, &b.intervals);
        prop_assert_eq!(a.blockers_spawned, b.blockers_spawned);
    }

    #[test]
    fn average_path_loss_is_bounded(h_t in 2.0f64..60.0, x in 1.0f64..300.0, lambda_s in 0.0f64..5.0) {
        let t = LinkTemplate::default();
        let (los, nlos) = path_loss_states((h_t - t.h_r).hypot(x));
        let l = average_path_loss_at(&t, h_t, x, lambda_s);
        prop_assert!(l >= los - 1e-9 && l <= nlos + 1e-9);
    }

    // Σ_{N≥1} Pois(N; m)/N peaks near m ≈ 1.5; the grid keeps m = λ_N π x_c² above 3.
    #[test]
    fn edge_rate_decreases(x_c in 10.0f64..150.0, lambda_n in 0.01f64..0.05, lambda_s in 0.01f64..1.0) {
        let radio = RadioConfig::default();
        let t = LinkTemplate::default();
        let base = CellConfig { x_c, lambda_n, lambda_s, ..CellConfig::default() };
        let rate = |c: CellConfig| cell_edge_mean_rate(&c, &radio, &t).unwrap();
        let r0 = rate(base);
        let farther = rate(CellConfig { x_c: x_c * 1.1, ..base });
        let crowded = rate(CellConfig { lambda_n: lambda_n * 1.5, ..base });
        let busier = rate(CellConfig { lambda_s: lambda_s * 1.5, ..base });
        prop_assert!(farther < r0 && crowded < r0 && busier < r0, "{r0} {farther} {crowded} {busier}");
    }
}
