//! Acceptance report: one PASS/FAIL line per criterion, with the measured
//! figures underneath. Set `MMBLOCK_ACCEPTANCE_STRICT=1` to exit non-zero
//! when any criterion fails.

use std::time::Instant;

use mmblock_core::applications::{
    cell_average_rate, cell_edge_mean_rate, optimal_ap_height, CellConfig, LinkTemplate,
    RadioConfig,
};
use mmblock_core::conditional::{conditional_curve, ConditionalOptions};
use mmblock_core::renewal::{
    blocked_cdf, mean_blocked, BlockedOptions, ModelOptions, RenewalModel,
};
use mmblock_core::residence::{distance_cdf_s1, distance_cdf_s2, residence};
use mmblock_core::simulator::{
    run_complexity_benchmark, simulate, summarize, BenchMethod, BenchOptions, FitAxis,
    SimulationMode,
};
use mmblock_core::table::ks_distance;
use mmblock_core::{build_zone, DistributionTable, LinkGeometry, ScenarioConfig, ScenarioKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

const KINDS: [ScenarioKind; 3] = [ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3];

struct Report {
    lines: Vec<String>,
    ok: bool,
}

impl Report {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            ok: true,
        }
    }

    /// Records a detail line and folds `pass` into the criterion result.
    fn check(&mut self, pass: bool, detail: String) {
        self.ok &= pass;
        self.lines.push(format!(
            "      {} {detail}",
            if pass { "ok  " } else { "FAIL" }
        ));
    }

    fn note(&mut self, detail: String) {
        self.lines.push(format!("      note {detail}"));
    }
}

fn criterion(id: u32, title: &str, body: impl FnOnce(&mut Report)) -> bool {
    let start = Instant::now();
    let mut r = Report::new();
    body(&mut r);
    println!(
        "{} [{id}] {title} ({:.1} s)",
        if r.ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    for l in &r.lines {
        println!("{l}");
    }
    r.ok
}

fn baseline(kind: ScenarioKind, lambda_i: f64) -> ScenarioConfig {
    ScenarioConfig {
        kind,
        lambda_i,
        ..ScenarioConfig::default()
    }
}

fn model(cfg: &ScenarioConfig) -> RenewalModel {
    RenewalModel::build(cfg, &ModelOptions::default()).expect("model")
}

fn busy_period_closed_form(r: &mut Report) {
    for kind in KINDS {
        let f_t = residence(&baseline(kind, 1.0), 4000).unwrap().time;
        for lambda in [0.05, 0.1, 0.28, 0.5, 1.0] {
            let sol = blocked_cdf(&f_t, lambda, &BlockedOptions::default()).unwrap();
            let exact = mean_blocked(lambda, f_t.mean());
            let rel = (sol.table.mean() - exact).abs() / exact;
            r.check(
                rel < 0.01,
                format!(
                    "{kind} λ={lambda}: E[η] {:.5} vs {exact:.5} (rel {rel:.1e}, tol 1e-2)",
                    sol.table.mean()
                ),
            );
        }
    }
}

fn s1_blocked_interval(r: &mut Report) {
    let m = model(&baseline(ScenarioKind::S1, 1.0));
    r.check(
        (m.e_eta - 0.5).abs() <= 0.075,
        format!("E[η] = {:.4} s (0.5 ± 15%)", m.e_eta),
    );
    let f = m.residual_blocked().unwrap().eval(0.5);
    r.check(
        (f - 0.9).abs() <= 0.05,
        format!("F_tη(0.5 s) = {f:.4} (0.9 ± 0.05)"),
    );
}

fn blocked_magnitude(r: &mut Report) {
    // S1/S2 at λ_I ∈ {1, 3}; S3 at the matching zone-entry rates.
    for (kind, set) in [
        (ScenarioKind::S1, [1.0, 3.0]),
        (ScenarioKind::S2, [1.0, 3.0]),
        (ScenarioKind::S3, [0.24, 0.71]),
    ] {
        for lambda_i in set {
            let m = model(&baseline(kind, lambda_i));
            let e = m.e_eta;
            r.check(
                (0.4..=1.0).contains(&e),
                format!("{kind} λ_I={lambda_i}: E[η] = {e:.4} s in [0.4, 1.0]"),
            );
        }
    }
}

fn simulation_agreement(r: &mut Report) {
    let panels = [
        ("r_0=4.6 α=30°", 4.6, 30f64),
        ("r_0=7.9 α=18.4°", 7.9, 18.4),
    ];
    for (name, r_0, alpha_deg) in panels {
        for lambda_i in [1.0, 3.0] {
            let cfg = ScenarioConfig {
                link: LinkGeometry {
                    r_0,
                    w_s: 10.0,
                    alpha: alpha_deg.to_radians(),
                    ..LinkGeometry::default()
                },
                ..baseline(ScenarioKind::S1, lambda_i)
            };
            let m = model(&cfg);
            let mut duration = 1.1e5 * m.cycle_mean();
            let s = loop {
                let s = summarize(
                    &simulate(&cfg, duration, 7, SimulationMode::Rectangle).unwrap(),
                    &[],
                )
                .unwrap();
                if s.n_busy_periods >= 100_000 {
                    break s;
                }
                duration *= 1.5;
            };
            let rel = (s.frac_nlos - m.frac_nlos).abs() / m.frac_nlos;
            let ks = ks_distance(&s.blocked_durations, &m.f_eta, 1e-9);
            let tag = format!("{name} λ_I={lambda_i} ({} busy periods)", s.n_busy_periods);
            r.check(
                rel < 0.05,
                format!(
                    "{tag}: frac_nlos {:.4} vs {:.4} (rel {rel:.4}, tol 0.05)",
                    s.frac_nlos, m.frac_nlos
                ),
            );
            r.check(ks < 0.02, format!("{tag}: KS(η) = {ks:.4} (< 0.02)"));
        }
    }
}

fn conditional_convergence(r: &mut Report) {
    let cfg = baseline(ScenarioKind::S1, 1.0);
    let m = model(&cfg);
    let opts = ConditionalOptions::default();
    let eps = opts.epsilon;
    let window: Vec<f64> = (0..=10).map(|k| 5.0 + 0.5 * k as f64).collect();
    let c = conditional_curve(&m, &window, &opts).unwrap();
    let (lo, hi) = (
        c.terms_used.iter().min().unwrap(),
        c.terms_used.iter().max().unwrap(),
    );
    r.check(
        *lo >= 6 && *hi <= 9,
        format!("terms_used over Δt ∈ [5, 10] s: {lo}..{hi} (in [6, 9]), ε = {eps:e}"),
    );

    let far = 20.0 * m.cycle_mean();
    let c = conditional_curve(&m, &[far], &opts).unwrap();
    let d00 = (c.p00[0] - m.frac_los).abs();
    let d10 = (c.p10[0] - m.frac_los).abs();
    r.check(
        d00 <= 2.0 * eps,
        format!("Δt = 20·E[ξ] = {far:.1} s: |p00 − frac_los| = {d00:.1e} (≤ 2ε)"),
    );
    r.check(
        d10 <= 2.0 * eps,
        format!("Δt = 20·E[ξ]: |p10 − frac_los| = {d10:.1e} (≤ 2ε)"),
    );

    let lags = [0.1, 0.5, 1.0, 2.0];
    let c = conditional_curve(&m, &lags, &opts).unwrap();
    let s = summarize(
        &simulate(&cfg, 2e5, 11, SimulationMode::Rectangle).unwrap(),
        &lags,
    )
    .unwrap();
    for (i, e) in s.conditional_estimates.iter().enumerate() {
        let z00 = (c.p00[i] - e.p00).abs() / e.se_p00;
        let z11 = (c.p11[i] - e.p11).abs() / e.se_p11;
        r.check(
            z00 < 3.0 && z11 < 3.0,
            format!(
                "Δt={}: p00 {:.4} vs {:.4} ({z00:.2} SE), p11 {:.4} vs {:.4} ({z11:.2} SE)",
                lags[i], c.p00[i], e.p00, c.p11[i], e.p11
            ),
        );
    }
}

fn paper_ratios(r: &mut Report) {
    let tpl = LinkTemplate::default();
    let radio = RadioConfig::default();
    let base = CellConfig::default();
    let cell = |x_c: f64, lambda_s: f64| CellConfig {
        x_c,
        lambda_s,
        ..base
    };
    let height = |c: CellConfig| optimal_ap_height(&c, &tpl).unwrap().h_t;
    let within = |v: f64, target: f64, rel: f64| (v - target).abs() <= rel * target;

    let (h10, h70) = (height(cell(10.0, 0.1)), height(cell(70.0, 0.1)));
    let q = h70 / h10;
    r.check(
        within(q, 6.0, 0.25),
        format!("optimal h_T, x_c 10→70 m at λ_S=0.1: {h10:.2}→{h70:.2} m, ×{q:.2} (6 ± 25%)"),
    );
    let (hl, hh) = (height(cell(30.0, 0.1)), height(cell(30.0, 1.0)));
    let q = hh / hl;
    r.check(
        within(q, 1.7, 0.25),
        format!("optimal h_T, λ_S 0.1→1 at x_c=30 m: {hl:.2}→{hh:.2} m, ×{q:.2} (1.7 ± 25%)"),
    );

    let edge = |c: CellConfig| cell_edge_mean_rate(&c, &radio, &tpl).unwrap();
    for (x_c, target) in [(30.0, 1.7), (100.0, 30.0)] {
        let q = edge(cell(x_c, 0.1)) / edge(cell(x_c, 1.0));
        r.check(
            within(q, target, 0.30),
            format!("edge rate, λ_S 0.1→1 at x_c={x_c} m: ÷{q:.3} ({target} ± 30%)"),
        );
    }

    let avg = |c: CellConfig| cell_average_rate(&c, &radio, &tpl).unwrap();
    for (x_c, target) in [(30.0, 1.05), (100.0, 1.3)] {
        let q = avg(cell(x_c, 0.01)) / avg(cell(x_c, 0.1));
        r.check(
            (q - target).abs() <= 0.1,
            format!("cell-average rate, λ_S 0.01→0.1 at x_c={x_c} m: ÷{q:.3} ({target} ± 0.1)"),
        );
        let alt = avg(cell(x_c, 0.1)) / avg(cell(x_c, 1.0));
        r.note(format!(
            "cell-average rate, λ_S 0.1→1 at x_c={x_c} m: ÷{alt:.3}"
        ));
    }
}

fn complexity_scaling(r: &mut Report) {
    // Reference setup: r_0 = 10 m, V = 1 m/s, default T_U and λ_I grids.
    let cfg = ScenarioConfig {
        link: LinkGeometry {
            r_0: 10.0,
            w_s: 10.0,
            ..LinkGeometry::default()
        },
        ..ScenarioConfig::default()
    };
    let opts = BenchOptions {
        repetitions: 7,
        ..BenchOptions::default()
    };
    let rep = run_complexity_benchmark(&cfg, &opts).unwrap();
    let n_tests = opts.update_intervals.len() as f64;
    for f in rep.fits_for(BenchMethod::Model, FitAxis::Intensity) {
        // Two-sided 5% test, Bonferroni-corrected over the T_U values.
        let df = f.fit.n as f64 - 2.0;
        let crit = StudentsT::new(0.0, 1.0, df)
            .unwrap()
            .inverse_cdf(1.0 - 0.025 / n_tests);
        let t = f.fit.t_stat.abs();
        r.check(
            t < crit,
            format!(
                "model vs λ_I at T_U={} s: slope {:.2e} s/(bl/s), |t| = {t:.2} (< {crit:.2})",
                f.fixed, f.fit.slope
            ),
        );
    }
    for f in rep.fits_for(BenchMethod::Direct, FitAxis::Intensity) {
        let (s, r2) = (f.mean_fit.slope, f.mean_fit.r_squared);
        r.check(
            s > 0.0 && r2 > 0.9,
            format!(
                "direct vs λ_I at T_U={} s: slope {s:.2e}, R² = {r2:.4} (> 0.9)",
                f.fixed
            ),
        );
    }
    for method in [BenchMethod::Direct, BenchMethod::Model] {
        for f in rep.fits_for(method, FitAxis::UpdateRate) {
            let (s, r2) = (f.mean_fit.slope, f.mean_fit.r_squared);
            r.check(
                s > 0.0 && r2 > 0.9,
                format!(
                    "{} vs 1/T_U at λ_I={}: slope {s:.2e}, R² = {r2:.4} (> 0.9)",
                    method.name(),
                    f.fixed
                ),
            );
        }
    }
}

/// Random link whose zone fits a sidewalk with `margin` to spare.
fn sidewalk_link(rng: &mut ChaCha8Rng, margin: f64) -> LinkGeometry {
    loop {
        let h_r = rng.random_range(1.0..1.5);
        let h_t = rng.random_range(2.5..12.0);
        let l = LinkGeometry {
            h_t,
            h_r,
            h_b: (h_r + rng.random_range(0.0..0.5)).min(h_t - 0.1),
            d_m: rng.random_range(0.3..0.8),
            r_0: rng.random_range(2.0..10.0),
            w_s: 0.0,
            alpha: rng.random_range(0.0..1.45),
        };
        let z = build_zone(&l).unwrap();
        if z.y_max() < 0.0 {
            return LinkGeometry {
                w_s: -z.y_min() + margin,
                ..l
            };
        }
    }
}

fn table_violation(t: &DistributionTable) -> Option<String> {
    let (f, fl) = (t.cdf(), t.cdf_left());
    if !t.grid().windows(2).all(|w| w[0] < w[1]) {
        return Some("grid not increasing".into());
    }
    if !f.iter().all(|v| (0.0..=1.0).contains(v)) || !f.windows(2).all(|w| w[0] <= w[1] + 1e-12) {
        return Some("cdf not a non-decreasing [0, 1] sequence".into());
    }
    if !fl.iter().zip(f).all(|(l, r)| *l <= *r + 1e-12) || (f[f.len() - 1] - 1.0).abs() > 1e-9 {
        return Some("left limits or terminal value wrong".into());
    }
    let mass: f64 = t.atoms().iter().map(|a| a.mass).sum();
    if t.atoms().iter().any(|a| !(a.mass > 0.0 && a.mass <= 1.0)) || mass > 1.0 + 1e-9 {
        return Some(format!("atom masses invalid (total {mass})"));
    }
    None
}

fn property_suites(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scenarios: Vec<ScenarioConfig> = (0..60)
        .map(|k| ScenarioConfig {
            kind: KINDS[k % 3],
            link: sidewalk_link(&mut rng, 0.5),
            v: rng.random_range(0.5..2.0),
            lambda_i: rng.random_range(0.1..3.0),
            c: None,
        })
        .collect();

    let mut bad = Vec::new();
    for cfg in &scenarios {
        let res = residence(cfg, 1000).unwrap();
        for t in [&res.distance, &res.time] {
            if let Some(e) = table_violation(t) {
                bad.push(format!("{cfg:?}: {e}"));
            }
        }
    }
    r.check(
        bad.is_empty(),
        format!(
            "table invariants on {} random scenarios: {} violations {:?}",
            scenarios.len(),
            bad.len(),
            bad.first()
        ),
    );

    let mut worst = 0.0f64;
    for _ in 0..40 {
        let l = sidewalk_link(&mut rng, 0.5);
        let z = build_zone(&l).unwrap();
        let s1 = distance_cdf_s1(&z, 500).unwrap();
        for c in [1e-7, l.w_s - 1e-7] {
            let s2 = distance_cdf_s2(&z, l.w_s, c, 500).unwrap();
            for (a, b) in s1.cdf().iter().zip(s2.cdf()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    r.check(
        worst < 1e-6,
        format!(
            "S2 with mode at the sidewalk edge vs S1, 40 links: max |ΔF| = {worst:.1e} (< 1e-6)"
        ),
    );

    let mut worst = f64::NEG_INFINITY;
    let mut bad_tables = 0;
    for cfg in scenarios.iter().take(30) {
        let m = RenewalModel::build(
            cfg,
            &ModelOptions {
                grid_intervals: 1000,
                ..ModelOptions::default()
            },
        )
        .unwrap();
        bad_tables += usize::from(table_violation(&m.f_eta).is_some());
        for &x in m.f_t.grid() {
            worst = worst.max(m.f_eta.eval(x) - m.f_t.eval(x));
            worst = worst.max(m.f_eta.eval_left(x) - m.f_t.eval_left(x));
        }
    }
    r.check(
        worst <= 1e-9 && bad_tables == 0,
        format!("F_η ≤ F_T on 30 random scenarios: max(F_η − F_T) = {worst:.1e}; invalid F_η tables: {bad_tables}"),
    );

    let mut worst = 0.0f64;
    for kind in KINDS {
        for lambda_i in [0.5, 1.0, 3.0] {
            let cfg = baseline(kind, lambda_i);
            let e = |n: usize| {
                RenewalModel::build(
                    &cfg,
                    &ModelOptions {
                        grid_intervals: n,
                        ..ModelOptions::default()
                    },
                )
                .unwrap()
                .e_eta_numeric
            };
            let (coarse, fine) = (e(2000), e(4000));
            worst = worst.max((fine - coarse).abs() / fine);
        }
    }
    r.check(worst < 2e-3, format!("grid refinement 2000→4000 intervals: max relative change of E[η] = {worst:.1e} (< 2e-3)"));

    let mut identical = true;
    for cfg in scenarios.iter().take(12) {
        for mode in [SimulationMode::Rectangle, SimulationMode::Exact] {
            let a = simulate(cfg, 500.0, 99, mode).unwrap();
            let b = simulate(cfg, 500.0, 99, mode).unwrap();
            identical &= a == b;
        }
    }
    r.check(
        identical,
        "simulate is bit-identical under a fixed seed (12 scenarios × 2 modes)".into(),
    );
}

fn main() {
    let results = [
        criterion(
            1,
            "busy-period mean matches the closed form",
            busy_period_closed_form,
        ),
        criterion(
            2,
            "S1 blocked interval: mean and residual CDF",
            s1_blocked_interval,
        ),
        criterion(
            3,
            "blocked-interval magnitude across scenarios",
            blocked_magnitude,
        ),
        criterion(
            4,
            "rectangle simulator vs analysis, w_S = 10 m",
            simulation_agreement,
        ),
        criterion(
            5,
            "conditional-probability series convergence",
            conditional_convergence,
        ),
        criterion(6, "AP height and rate ratios", paper_ratios),
        criterion(
            7,
            "complexity scaling of direct vs model-based tracking",
            complexity_scaling,
        ),
        criterion(8, "property suites", property_suites),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed < results.len() && std::env::var_os("MMBLOCK_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
