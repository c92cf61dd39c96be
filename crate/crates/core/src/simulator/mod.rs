//! Monte Carlo blocker simulator.
//!
//! Event driven: every blocker's stay inside the blocking region is computed
//! in closed form from its straight trajectory, the stays are merged into
//! busy periods and the result is cut to the observation window. The first
//! `max(10 E[ξ], 10 s)` of each run are discarded as warm-up.

mod bench;

pub use bench::{
    run_complexity_benchmark, BenchFit, BenchMethod, BenchOptions, BenchReport, BenchRow, FitAxis,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};
use crate::geometry::{build_zone, BlockageZone, Point};
use crate::residence::{
    entry_intensity, residence, triangular_quantile, ScenarioConfig, ScenarioKind,
};
use crate::table::DistributionTable;

/// How a blocker is decided to occlude the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    /// Blocker centre inside the rectangle `ABCD`.
    Rectangle,
    /// Cylinder of diameter `d_m` and height `h_B` intersects the 3-D link.
    Exact,
}

impl fmt::Display for SimulationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimulationMode::Rectangle => "rectangle",
            SimulationMode::Exact => "exact",
        })
    }
}

impl FromStr for SimulationMode {
    type Err = BlockageError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangle" | "rect" => Ok(SimulationMode::Rectangle),
            "exact" => Ok(SimulationMode::Exact),
            other => Err(BlockageError::param(
                "mode",
                format!("unknown mode `{other}` (expected rectangle or exact)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
}

impl LinkState {
    pub fn flip(self) -> Self {
        match self {
            LinkState::Los => LinkState::Nlos,
            LinkState::Nlos => LinkState::Los,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateInterval {
    pub state: LinkState,
    pub start: f64,
    pub end: f64,
}

impl StateInterval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Alternating LOS/NLOS intervals tiling `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrace {
    pub intervals: Vec<StateInterval>,
    pub duration: f64,
    pub seed: u64,
    /// Blockers generated over the whole run, warm-up included.
    pub blockers_spawned: u64,
    /// Length of the simulated time, warm-up included.
    pub simulated_time: f64,
}

impl StateTrace {
    /// Builds a trace from sorted, disjoint blocked intervals already
    /// expressed in window time `[0, duration]`.
    pub fn from_blocked(blocked: &[(f64, f64)], duration: f64, seed: u64) -> Self {
        let mut intervals = Vec::with_capacity(2 * blocked.len() + 1);
        let mut t = 0.0;
        for &(s, e) in blocked {
            let (s, e) = (s.max(0.0), e.min(duration));
            if e <= s {
                continue;
            }
            if s > t {
                intervals.push(StateInterval {
                    state: LinkState::Los,
                    start: t,
                    end: s,
                });
            }
            match intervals.last_mut() {
                Some(last) if last.state == LinkState::Nlos && last.end >= s => last.end = e,
                _ => intervals.push(StateInterval {
                    state: LinkState::Nlos,
                    start: s.max(t),
                    end: e,
                }),
            }
            t = e;
        }
        if t < duration || intervals.is_empty() {
            intervals.push(StateInterval {
                state: LinkState::Los,
                start: t,
                end: duration,
            });
        }
        Self {
            intervals,
            duration,
            seed,
            blockers_spawned: 0,
            simulated_time: duration,
        }
    }

    pub fn time_in(&self, state: LinkState) -> f64 {
        self.intervals
            .iter()
            .filter(|i| i.state == state)
            .map(StateInterval::len)
            .fold(0.0, |a, b| a + b)
    }

    /// State at time `t` (intervals are closed on the left).
    pub fn state_at(&self, t: f64) -> LinkState {
        let k = self.intervals.partition_point(|i| i.end <= t);
        self.intervals
            .get(k.min(self.intervals.len() - 1))
            .map(|i| i.state)
            .unwrap_or(LinkState::Los)
    }
}

/// Parameter interval `[s1, s2]` of the line `p + s·dir` inside the
/// rectangle, in zone-local coordinates.
fn clip_slab(u0: f64, v0: f64, du: f64, dv: f64, u_max: f64, half: f64) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p, d, a, b) in [(u0, du, 0.0, u_max), (v0, dv, -half, half)] {
        if d.abs() < 1e-15 {
            if p < a || p > b {
                return None;
            }
        } else {
            let (t1, t2) = ((a - p) / d, (b - p) / d);
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
    }
    (hi > lo).then_some((lo, hi))
}

fn clip_disk(u0: f64, v0: f64, du: f64, dv: f64, cu: f64, radius: f64) -> Option<(f64, f64)> {
    // |(u0 - cu, v0) + s (du, dv)|² = radius², with |(du, dv)| = 1.
    let (pu, pv) = (u0 - cu, v0);
    let b = pu * du + pv * dv;
    let c = pu * pu + pv * pv - radius * radius;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    Some((-b - root, -b + root))
}

/// Interval of the line `p + s·dir` (unit `dir`) inside the blocking region.
pub fn clip_line(
    zone: &BlockageZone,
    mode: SimulationMode,
    p: Point,
    dir: Point,
) -> Option<(f64, f64)> {
    let (u0, v0) = zone.local(p);
    let ax = zone.axis();
    let ac = zone.across();
    let du = dir.x * ax.x + dir.y * ax.y;
    let dv = dir.x * ac.x + dir.y * ac.y;
    let half = zone.d_m / 2.0;
    match mode {
        SimulationMode::Rectangle => clip_slab(u0, v0, du, dv, zone.r, half),
        SimulationMode::Exact => {
            // Points within d_m/2 of the part of the link below the blocker
            // top, which ends d_m/2 before the far edge of the rectangle.
            let core = (zone.r - half).max(0.0);
            let parts = [
                clip_slab(u0, v0, du, dv, core, half),
                clip_disk(u0, v0, du, dv, 0.0, half),
                clip_disk(u0, v0, du, dv, core, half),
            ];
            parts
                .iter()
                .flatten()
                .fold(None, |acc: Option<(f64, f64)>, &(a, b)| {
                    Some(match acc {
                        None => (a, b),
                        Some((x, y)) => (x.min(a), y.max(b)),
                    })
                })
        }
    }
}

/// Samples one S3 chord: entry on `AD`, `CB` or `DC` with probability
/// proportional to side length, exit on one of the two remaining sides
/// with probability proportional to length, both points uniform.
/// Returns the entry point and the exit point in zone-local coordinates.
pub fn sample_s3_chord<R: Rng + ?Sized>(rng: &mut R, r: f64, d_m: f64) -> ((f64, f64), (f64, f64)) {
    let half = d_m / 2.0;
    let lengths = [r, r, d_m];
    let point = |side: usize, t: f64| match side {
        0 => (t * r, -half),
        1 => (t * r, half),
        _ => (r, -half + t * d_m),
    };
    let u = rng.random::<f64>() * (2.0 * r + d_m);
    let entry = if u < r {
        0
    } else if u < 2.0 * r {
        1
    } else {
        2
    };
    let others: Vec<usize> = (0..3).filter(|&s| s != entry).collect();
    let (a, b) = (others[0], others[1]);
    let exit = if rng.random::<f64>() * (lengths[a] + lengths[b]) < lengths[a] {
        a
    } else {
        b
    };
    (point(entry, rng.random()), point(exit, rng.random()))
}

/// Warm-up discarded before the observation window.
pub fn warmup_time(cfg: &ScenarioConfig) -> Result<f64> {
    let res = residence(cfg, 1000)?;
    if res.lambda <= 0.0 {
        return Ok(10.0);
    }
    let cycle = (res.lambda * res.mean_time).exp() / res.lambda;
    Ok((10.0 * cycle).max(10.0))
}

/// Blocked stays `(start, end)` of individual blockers over `[0, horizon]`,
/// unsorted, plus the number of blockers generated.
fn blocker_stays(
    cfg: &ScenarioConfig,
    zone: &BlockageZone,
    mode: SimulationMode,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<(f64, f64)>, u64) {
    let mut stays = Vec::new();
    let mut spawned = 0u64;
    if cfg.lambda_i <= 0.0 {
        return (stays, 0);
    }
    let gap = Exp::new(cfg.lambda_i).expect("positive intensity");
    let v = cfg.v;
    match cfg.kind {
        ScenarioKind::S1 | ScenarioKind::S2 => {
            let w_s = cfg.link.w_s;
            let c = cfg.mode();
            let margin = cfg.link.r_0 + 10.0 * cfg.link.d_m;
            let x_spawn = zone.x_min() - margin;
            let transit = (zone.x_max() + zone.d_m - x_spawn) / v;
            // Start early so the population is already stationary at t = 0.
            let mut t = -transit;
            loop {
                t += gap.sample(rng);
                if t > horizon {
                    break;
                }
                spawned += 1;
                let y = match cfg.kind {
                    ScenarioKind::S1 => rng.random::<f64>() * w_s,
                    _ => triangular_quantile(rng.random(), w_s, c),
                };
                let p = Point::new(x_spawn, y);
                if let Some((s1, s2)) = clip_line(zone, mode, p, Point::new(1.0, 0.0)) {
                    stays.push((t + s1 / v, t + s2 / v));
                }
            }
        }
        ScenarioKind::S3 => {
            let ax = zone.axis();
            let ac = zone.across();
            let to_world = |(u, w): (f64, f64)| {
                Point::new(
                    zone.rx.x + u * ax.x + w * ac.x,
                    zone.rx.y + u * ax.y + w * ac.y,
                )
            };
            let mut t = -zone.r.hypot(zone.d_m) / v - zone.d_m / v;
            loop {
                t += gap.sample(rng);
                if t > horizon {
                    break;
                }
                spawned += 1;
                let (entry, exit) = sample_s3_chord(rng, zone.r, zone.d_m);
                let (p1, p2) = (to_world(entry), to_world(exit));
                let len = p1.dist(p2);
                if len <= 0.0 {
                    continue;
                }
                match mode {
                    SimulationMode::Rectangle => stays.push((t, t + len / v)),
                    SimulationMode::Exact => {
                        let dir = Point::new((p2.x - p1.x) / len, (p2.y - p1.y) / len);
                        if let Some((s1, s2)) = clip_line(zone, mode, p1, dir) {
                            stays.push((t + s1 / v, t + s2 / v));
                        }
                    }
                }
            }
        }
    }
    (stays, spawned)
}

/// Merges stays into busy periods.
fn merge(mut stays: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    stays.retain(|(s, e)| e > s);
    stays.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(stays.len());
    for (s, e) in stays {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub duration: f64,
    pub seed: u64,
    pub mode: SimulationMode,
    /// Independent stream of the generator; replications differ only here.
    pub replication: u64,
    /// Overrides the default warm-up.
    pub warmup: Option<f64>,
}

impl SimulationOptions {
    pub fn new(duration: f64, seed: u64, mode: SimulationMode) -> Self {
        Self {
            duration,
            seed,
            mode,
            replication: 0,
            warmup: None,
        }
    }
}

/// Simulates one link for `duration` seconds after warm-up.
pub fn simulate(
    cfg: &ScenarioConfig,
    duration: f64,
    seed: u64,
    mode: SimulationMode,
) -> Result<StateTrace> {
    simulate_with(cfg, &SimulationOptions::new(duration, seed, mode))
}

pub fn simulate_with(cfg: &ScenarioConfig, opts: &SimulationOptions) -> Result<StateTrace> {
    cfg.validate()?;
    if !(opts.duration > 0.0 && opts.duration.is_finite()) {
        return Err(BlockageError::param("duration", "must be finite and > 0"));
    }
    let zone = build_zone(&cfg.link)?;
    // Rejects zones that stick out of the sidewalk.
    entry_intensity(cfg, &zone)?;
    let warmup = match opts.warmup {
        Some(w) if w >= 0.0 => w,
        Some(_) => return Err(BlockageError::param("warmup", "must be >= 0")),
        None => warmup_time(cfg)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(opts.replication);
    let horizon = warmup + opts.duration;
    let (stays, spawned) = blocker_stays(cfg, &zone, opts.mode, horizon, &mut rng);
    let busy: Vec<(f64, f64)> = merge(stays)
        .into_iter()
        .filter(|&(_, e)| e > warmup)
        .map(|(s, e)| (s - warmup, e - warmup))
        .take_while(|&(s, _)| s < opts.duration)
        .collect();
    let mut trace = StateTrace::from_blocked(&busy, opts.duration, opts.seed);
    trace.blockers_spawned = spawned;
    trace.simulated_time = horizon;
    Ok(trace)
}

/// Independent replications `0..count`, run in parallel.
pub fn simulate_replications(
    cfg: &ScenarioConfig,
    opts: &SimulationOptions,
    count: u64,
) -> Result<Vec<StateTrace>> {
    (0..count)
        .into_par_iter()
        .map(|rep| {
            simulate_with(
                cfg,
                &SimulationOptions {
                    replication: rep,
                    ..*opts
                },
            )
        })
        .collect()
}

/// Two-point estimate of the conditional state probabilities at one lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEstimate {
    pub lag: f64,
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    /// Batch-means standard error of `p00` (and of `p01`).
    pub se_p00: f64,
    /// Batch-means standard error of `p11` (and of `p10`).
    pub se_p11: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub frac_nlos: f64,
    pub blocked_durations: Vec<f64>,
    pub nonblocked_durations: Vec<f64>,
    pub blocked_interval_ecdf: Option<DistributionTable>,
    pub nonblocked_interval_ecdf: Option<DistributionTable>,
    pub n_busy_periods: usize,
    pub conditional_estimates: Vec<ConditionalEstimate>,
}

/// Number of batches for the batch-means standard errors.
const BATCHES: usize = 50;

/// Summarizes a trace. The first and last intervals are truncated by the
/// window and left out of the interval statistics.
pub fn summarize(trace: &StateTrace, conditional_lags: &[f64]) -> Result<SimulationSummary> {
    let step = (trace.duration / 1e7).max(0.01);
    summarize_with_step(trace, conditional_lags, step)
}

pub fn summarize_with_step(
    trace: &StateTrace,
    conditional_lags: &[f64],
    sample_step: f64,
) -> Result<SimulationSummary> {
    if !(sample_step > 0.0) {
        return Err(BlockageError::param("sample_step", "must be > 0"));
    }
    let frac_nlos = trace.time_in(LinkState::Nlos) / trace.duration;
    let inner = if trace.intervals.len() > 2 {
        &trace.intervals[1..trace.intervals.len() - 1]
    } else {
        &[][..]
    };
    let collect = |state: LinkState| -> Vec<f64> {
        inner
            .iter()
            .filter(|i| i.state == state)
            .map(StateInterval::len)
            .collect()
    };
    let blocked = collect(LinkState::Nlos);
    let nonblocked = collect(LinkState::Los);
    let ecdf = |v: &[f64]| {
        if v.is_empty() {
            Ok(None)
        } else {
            DistributionTable::empirical(v).map(Some)
        }
    };
    let conditional_estimates = conditional_lags
        .iter()
        .map(|&lag| two_point_estimate(trace, lag, sample_step))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationSummary {
        frac_nlos,
        n_busy_periods: blocked.len(),
        blocked_interval_ecdf: ecdf(&blocked)?,
        nonblocked_interval_ecdf: ecdf(&nonblocked)?,
        blocked_durations: blocked,
        nonblocked_durations: nonblocked,
        conditional_estimates,
    })
}

fn two_point_estimate(trace: &StateTrace, lag: f64, step: f64) -> Result<ConditionalEstimate> {
    if !(lag >= 0.0) || lag >= trace.duration {
        return Err(BlockageError::param("lag", "must lie in [0, duration)"));
    }
    let n = ((trace.duration - lag) / step).floor() as usize;
    if n < BATCHES {
        return Err(BlockageError::param("lag", "window too short for the lag"));
    }
    let per_batch = n / BATCHES;
    // Per batch: [n0, n00, n1, n11].
    let mut counts = vec![[0u64; 4]; BATCHES];
    let ivs = &trace.intervals;
    let (mut a, mut b) = (0usize, 0usize);
    for k in 0..per_batch * BATCHES {
        let t0 = k as f64 * step;
        let t1 = t0 + lag;
        while a + 1 < ivs.len() && ivs[a].end <= t0 {
            a += 1;
        }
        while b + 1 < ivs.len() && ivs[b].end <= t1 {
            b += 1;
        }
        let c = &mut counts[k / per_batch];
        match (ivs[a].state, ivs[b].state) {
            (LinkState::Los, s) => {
                c[0] += 1;
                c[1] += (s == LinkState::Los) as u64;
            }
            (LinkState::Nlos, s) => {
                c[2] += 1;
                c[3] += (s == LinkState::Nlos) as u64;
            }
        }
    }
    let total = counts.iter().fold([0u64; 4], |mut acc, c| {
        for i in 0..4 {
            acc[i] += c[i];
        }
        acc
    });
    let ratio = |num: u64, den: u64| {
        if den > 0 {
            num as f64 / den as f64
        } else {
            f64::NAN
        }
    };
    let p00 = ratio(total[1], total[0]);
    let p11 = ratio(total[3], total[2]);
    let se = |num: usize, den: usize, mean: f64| {
        let vals: Vec<f64> = counts
            .iter()
            .filter(|c| c[den] > 0)
            .map(|c| c[num] as f64 / c[den] as f64)
            .collect();
        if vals.len() < 2 || !mean.is_finite() {
            return f64::NAN;
        }
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        (var / vals.len() as f64).sqrt()
    };
    Ok(ConditionalEstimate {
        lag,
        p00,
        p01: 1.0 - p00,
        p10: 1.0 - p11,
        p11,
        se_p00: se(1, 0, p00),
        se_p11: se(3, 2, p11),
        samples: per_batch * BATCHES,
    })
}
