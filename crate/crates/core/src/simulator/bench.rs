//! Cost of tracking one link state in a time-stepped system-level
//! simulation: direct geometric re-evaluation over all active blockers
//! versus sampling interval lengths from the renewal model.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};
use crate::geometry::{build_zone, Point};
use crate::numerics::{linear_fit, LinearFit};
use crate::renewal::{ModelOptions, RenewalModel};
use crate::residence::{triangular_quantile, ScenarioConfig, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMethod {
    Direct,
    Model,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Direct => "direct",
            BenchMethod::Model => "model",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    /// Simulated time per run, seconds.
    pub duration: f64,
    pub update_intervals: Vec<f64>,
    pub intensities: Vec<f64>,
    pub repetitions: usize,
    /// Length of the blocker deployment strip, meters.
    pub strip_length: f64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            duration: 200.0,
            update_intervals: vec![0.1, 0.07, 0.05, 0.01, 0.001],
            intensities: vec![0.1, 0.3, 0.5, 0.7, 1.0],
            repetitions: 5,
            strip_length: 200.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub t_u: f64,
    pub lambda_i: f64,
    pub method: BenchMethod,
    /// Mean wall time per run, seconds.
    pub mean_time: f64,
    pub stdev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitAxis {
    /// Time against `λ_I` at fixed `T_U`.
    Intensity,
    /// Time against `1/T_U` at fixed `λ_I`.
    UpdateRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchFit {
    pub method: BenchMethod,
    pub axis: FitAxis,
    /// Value of the parameter held fixed.
    pub fixed: f64,
    /// Fit over every repetition; its slope error reflects run-to-run noise.
    pub fit: LinearFit,
    /// Fit over the per-cell mean times: the scaling curve.
    pub mean_fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub fits: Vec<BenchFit>,
}

impl BenchReport {
    pub fn fits_for(&self, method: BenchMethod, axis: FitAxis) -> impl Iterator<Item = &BenchFit> {
        self.fits
            .iter()
            .filter(move |f| f.method == method && f.axis == axis)
    }
}

/// Per-step link-budget work shared by both methods: what a system-level
/// simulator does with the state once it knows it.
#[inline]
fn link_budget(nlos: bool, k: usize) -> f64 {
    let loss = if nlos { 101.2 } else { 81.4 } + (k & 7) as f64 * 1e-3;
    (1.0 + 10f64.powf((114.0 - loss) / 10.0)).log2()
}

struct Walker {
    x: f64,
    y: f64,
}

fn run_direct(
    cfg: &ScenarioConfig,
    lambda_i: f64,
    t_u: f64,
    opts: &BenchOptions,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let zone = build_zone(&cfg.link)?;
    let centre_x = 0.5 * (zone.x_min() + zone.x_max());
    let x0 = centre_x - opts.strip_length / 2.0;
    let x1 = centre_x + opts.strip_length / 2.0;
    let w_s = cfg.link.w_s;
    let c = cfg.mode();
    let draw_y = |rng: &mut ChaCha8Rng| match cfg.kind {
        ScenarioKind::S2 => triangular_quantile(rng.random(), w_s, c),
        _ => rng.random::<f64>() * w_s,
    };
    // Stationary initial population.
    let mut walkers: Vec<Walker> = Vec::new();
    let initial = Poisson::new(lambda_i * opts.strip_length / cfg.v)
        .map_err(|e| BlockageError::param("lambda_I", e.to_string()))?
        .sample(rng) as usize;
    for _ in 0..initial {
        walkers.push(Walker {
            x: x0 + rng.random::<f64>() * opts.strip_length,
            y: draw_y(rng),
        });
    }
    let arrivals = Poisson::new(lambda_i * t_u)
        .map_err(|e| BlockageError::param("lambda_I", e.to_string()))?;
    let steps = (opts.duration / t_u).round() as usize;
    let dx = cfg.v * t_u;
    let start = Instant::now();
    let mut acc = 0.0;
    for k in 0..steps {
        for _ in 0..arrivals.sample(rng) as usize {
            walkers.push(Walker {
                x: x0,
                y: draw_y(rng),
            });
        }
        let mut nlos = false;
        let mut i = 0;
        while i < walkers.len() {
            let w = &mut walkers[i];
            w.x += dx;
            if w.x > x1 {
                walkers.swap_remove(i);
                continue;
            }
            nlos |= zone.contains(Point::new(w.x, w.y));
            i += 1;
        }
        acc += link_budget(nlos, k);
    }
    black_box(acc);
    Ok(start.elapsed().as_secs_f64())
}

fn run_model(model: &RenewalModel, t_u: f64, opts: &BenchOptions, rng: &mut ChaCha8Rng) -> f64 {
    let steps = (opts.duration / t_u).round() as usize;
    let lambda = model.lambda;
    let start = Instant::now();
    let mut nlos = false;
    let mut remaining = -rng.random::<f64>().ln() / lambda;
    let mut acc = 0.0;
    for k in 0..steps {
        remaining -= t_u;
        while remaining <= 0.0 {
            nlos = !nlos;
            remaining += if nlos {
                model.f_eta.quantile(rng.random())
            } else {
                -(1.0 - rng.random::<f64>()).ln() / lambda
            };
        }
        acc += link_budget(nlos, k);
    }
    black_box(acc);
    start.elapsed().as_secs_f64()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Fits over all samples and over the per-point means.
fn fit_pair<'a>(
    points: impl Iterator<Item = (f64, &'a Vec<f64>)>,
) -> Option<(LinearFit, LinearFit)> {
    let (mut x, mut y, mut mx, mut my) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (p, times) in points {
        x.extend(std::iter::repeat_n(p, times.len()));
        y.extend_from_slice(times);
        mx.push(p);
        my.push(mean_sd(times).0);
    }
    Some((linear_fit(&x, &y)?, linear_fit(&mx, &my)?))
}

/// Times both methods on the grid `update_intervals × intensities`.
///
/// Repetitions are interleaved across the grid so slow drifts of the
/// machine do not masquerade as a trend in either parameter.
pub fn run_complexity_benchmark(cfg: &ScenarioConfig, opts: &BenchOptions) -> Result<BenchReport> {
    cfg.validate()?;
    if opts.repetitions == 0 || opts.update_intervals.is_empty() || opts.intensities.is_empty() {
        return Err(BlockageError::param(
            "bench",
            "needs intervals, intensities and repetitions",
        ));
    }
    if opts.update_intervals.iter().any(|t| !(*t > 0.0)) {
        return Err(BlockageError::param(
            "bench.update_intervals",
            "must be > 0",
        ));
    }
    if opts.intensities.iter().any(|l| !(*l > 0.0)) {
        return Err(BlockageError::param("bench.intensities", "must be > 0"));
    }
    let models = opts
        .intensities
        .iter()
        .map(|&l| {
            RenewalModel::build(
                &ScenarioConfig {
                    lambda_i: l,
                    ..*cfg
                },
                &ModelOptions::default(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (nt, nl) = (opts.update_intervals.len(), opts.intensities.len());
    let mut samples = vec![vec![Vec::new(); 2]; nt * nl];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for rep in 0..opts.repetitions {
        for cell in 0..nt * nl {
            // Alternate the sweep direction between repetitions.
            let cell = if rep % 2 == 0 {
                cell
            } else {
                nt * nl - 1 - cell
            };
            let (ti, li) = (cell / nl, cell % nl);
            let t_u = opts.update_intervals[ti];
            let lambda_i = opts.intensities[li];
            let d = run_direct(cfg, lambda_i, t_u, opts, &mut rng)?;
            let m = run_model(&models[li], t_u, opts, &mut rng);
            samples[cell][0].push(d);
            samples[cell][1].push(m);
        }
    }
    let mut rows = Vec::new();
    for ti in 0..nt {
        for li in 0..nl {
            for (mi, method) in [BenchMethod::Direct, BenchMethod::Model]
                .into_iter()
                .enumerate()
            {
                let (mean_time, stdev) = mean_sd(&samples[ti * nl + li][mi]);
                rows.push(BenchRow {
                    t_u: opts.update_intervals[ti],
                    lambda_i: opts.intensities[li],
                    method,
                    mean_time,
                    stdev,
                });
            }
        }
    }
    let mut fits = Vec::new();
    for (mi, method) in [BenchMethod::Direct, BenchMethod::Model]
        .into_iter()
        .enumerate()
    {
        let cells = |ti: usize, li: usize| &samples[ti * nl + li][mi];
        for ti in 0..nt {
            let points = (0..nl).map(|li| (opts.intensities[li], cells(ti, li)));
            if let Some((fit, mean_fit)) = fit_pair(points) {
                fits.push(BenchFit {
                    method,
                    axis: FitAxis::Intensity,
                    fixed: opts.update_intervals[ti],
                    fit,
                    mean_fit,
                });
            }
        }
        for li in 0..nl {
            let points = (0..nt).map(|ti| (1.0 / opts.update_intervals[ti], cells(ti, li)));
            if let Some((fit, mean_fit)) = fit_pair(points) {
                fits.push(BenchFit {
                    method,
                    axis: FitAxis::UpdateRate,
                    fixed: opts.intensities[li],
                    fit,
                    mean_fit,
                });
            }
        }
    }
    Ok(BenchReport { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_benchmark_has_full_schema() {
        let opts = BenchOptions {
            duration: 5.0,
            update_intervals: vec![0.1, 0.05, 0.02],
            intensities: vec![0.5, 1.0, 2.0],
            repetitions: 2,
            ..BenchOptions::default()
        };
        let rep = run_complexity_benchmark(&ScenarioConfig::default(), &opts).unwrap();
        assert_eq!(rep.rows.len(), 3 * 3 * 2);
        assert!(rep
            .rows
            .iter()
            .all(|r| r.mean_time >= 0.0 && r.stdev >= 0.0));
        assert_eq!(
            rep.fits_for(BenchMethod::Model, FitAxis::Intensity).count(),
            3
        );
        assert_eq!(
            rep.fits_for(BenchMethod::Direct, FitAxis::UpdateRate)
                .count(),
            3
        );
    }
}
