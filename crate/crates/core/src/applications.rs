//! Dimensioning with the blockage model (street-crossing scenario S3):
//! state-averaged path loss, AP height that minimises it at the cell edge,
//! cell-edge and cell-average mean rates, and the largest cell radius
//! meeting a rate target.

use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};
use crate::numerics::{adaptive_simpson, golden_section_min};
use crate::residence::distance_cdf_s3;
use crate::simulator::LinkState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Rates in bits/s.
    Two,
    /// Rates in nats/s.
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Modulation-and-coding imperfection factor.
    pub c: f64,
    pub log_base: LogBase,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 28.0,
            bandwidth_hz: 1e9,
            tx_power_dbm: 30.0,
            noise_dbm: -84.0,
            c: 1.0,
            log_base: LogBase::Two,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(BlockageError::param("bandwidth", "must be > 0"));
        }
        if !(self.c > 0.0) {
            return Err(BlockageError::param("c", "must be > 0"));
        }
        for (name, v) in [
            ("carrier", self.carrier_ghz),
            ("tx_power", self.tx_power_dbm),
            ("noise", self.noise_dbm),
        ] {
            if !v.is_finite() {
                return Err(BlockageError::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    fn log1p_snr(&self, snr_db: f64) -> f64 {
        let lin = 10f64.powf(snr_db / 10.0);
        match self.log_base {
            LogBase::Two => lin.ln_1p() / std::f64::consts::LN_2,
            LogBase::E => lin.ln_1p(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    /// Blocker crossings per unit area per second.
    pub lambda_s: f64,
    /// User density, 1/m².
    pub lambda_n: f64,
    /// Cell radius, m.
    pub x_c: f64,
    /// AP height used by the rate computations, m.
    pub h_t: f64,
    pub h_t_min: f64,
    pub h_t_max: f64,
    /// Search range for the cell radius, m.
    pub radius_min: f64,
    pub radius_max: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            lambda_s: 0.1,
            lambda_n: 0.01,
            x_c: 30.0,
            h_t: 10.0,
            h_t_min: 2.0,
            h_t_max: 60.0,
            radius_min: 1.0,
            radius_max: 1000.0,
        }
    }
}

impl CellConfig {
    pub fn validate(&self, template: &LinkTemplate) -> Result<()> {
        if !(self.lambda_s >= 0.0) {
            return Err(BlockageError::param("lambda_S", "must be >= 0"));
        }
        if !(self.lambda_n >= 0.0) {
            return Err(BlockageError::param("lambda_N", "must be >= 0"));
        }
        if !(self.x_c > 0.0) {
            return Err(BlockageError::param("x_c", "must be > 0"));
        }
        if !(self.h_t > template.h_b) {
            return Err(BlockageError::param(
                "h_T",
                "must exceed the blocker height",
            ));
        }
        if !(self.h_t_min > template.h_b && self.h_t_max > self.h_t_min) {
            return Err(BlockageError::param(
                "h_T_range",
                "needs h_B < h_T_min < h_T_max",
            ));
        }
        if !(self.radius_min > 0.0 && self.radius_max > self.radius_min) {
            return Err(BlockageError::param(
                "radius_range",
                "needs 0 < radius_min < radius_max",
            ));
        }
        Ok(())
    }
}

/// Receiver and blocker parameters shared by every link in the cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTemplate {
    pub h_r: f64,
    pub h_b: f64,
    pub d_m: f64,
    pub v: f64,
    /// Grid intervals for the chord-length table.
    pub grid_intervals: usize,
}

impl Default for LinkTemplate {
    fn default() -> Self {
        Self {
            h_r: 1.3,
            h_b: 1.7,
            d_m: 0.5,
            v: 1.0,
            grid_intervals: 2000,
        }
    }
}

impl LinkTemplate {
    fn zone_length(&self, h_t: f64, x: f64) -> f64 {
        x * (self.h_b - self.h_r) / (h_t - self.h_r) + self.d_m / 2.0
    }

    fn distance_3d(&self, h_t: f64, x: f64) -> f64 {
        (h_t - self.h_r).hypot(x)
    }

    /// Mean residence time in a zone of length `r`.
    fn mean_residence(&self, r: f64) -> f64 {
        distance_cdf_s3(self.d_m, r, self.grid_intervals)
            .map(|t| t.mean() / self.v)
            .unwrap_or(0.0)
    }

    /// Fraction of time in LoS for a user at 2-D distance `x`:
    /// `exp(−λ E[T])` with `λ = λ_S r d_m`.
    pub fn los_fraction(&self, h_t: f64, x: f64, lambda_s: f64) -> f64 {
        if lambda_s <= 0.0 {
            return 1.0;
        }
        let r = self.zone_length(h_t, x);
        let lambda = lambda_s * r * self.d_m;
        (-lambda * self.mean_residence(r)).exp()
    }
}

/// `(L_LoS, L_nLoS)` in dB at 3-D distance `d3` meters.
pub fn path_loss_states(d3: f64) -> (f64, f64) {
    let lg = d3.log10();
    (61.4 + 20.0 * lg, 72.0 + 29.2 * lg)
}

/// State-averaged path loss for a given LoS time fraction.
pub fn average_path_loss(d3: f64, frac_los: f64) -> f64 {
    let (los, nlos) = path_loss_states(d3);
    frac_los * los + (1.0 - frac_los) * nlos
}

/// Average path loss seen by a user at 2-D distance `x` from an AP at `h_t`.
pub fn average_path_loss_at(template: &LinkTemplate, h_t: f64, x: f64, lambda_s: f64) -> f64 {
    average_path_loss(
        template.distance_3d(h_t, x),
        template.los_fraction(h_t, x, lambda_s),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightOptimum {
    pub h_t: f64,
    pub loss_db: f64,
    /// The minimiser sits on an end of the search range.
    pub at_boundary: bool,
}

/// Scan step of the AP-height search, m.
const HEIGHT_SCAN_STEP: f64 = 0.05;

/// AP height minimising the average path loss at the cell edge.
pub fn optimal_ap_height(cell: &CellConfig, template: &LinkTemplate) -> Result<HeightOptimum> {
    cell.validate(template)?;
    let objective = |h: f64| average_path_loss_at(template, h, cell.x_c, cell.lambda_s);
    let (lo, hi) = (cell.h_t_min, cell.h_t_max);
    let n = ((hi - lo) / HEIGHT_SCAN_STEP).round() as usize;
    let mut best = (lo, objective(lo));
    for k in 1..=n {
        let h = (lo + k as f64 * HEIGHT_SCAN_STEP).min(hi);
        let v = objective(h);
        if v < best.1 {
            best = (h, v);
        }
    }
    let a = (best.0 - HEIGHT_SCAN_STEP).max(lo);
    let b = (best.0 + HEIGHT_SCAN_STEP).min(hi);
    let (h, v) = golden_section_min(&objective, a, b, 1e-4);
    if v < best.1 {
        best = (h, v);
    }
    let at_boundary = best.0 - lo < HEIGHT_SCAN_STEP || hi - best.0 < HEIGHT_SCAN_STEP;
    Ok(HeightOptimum {
        h_t: best.0,
        loss_db: best.1,
        at_boundary,
    })
}

/// Received SNR in dB for a link state.
pub fn snr_db(d3: f64, radio: &RadioConfig, state: LinkState) -> f64 {
    let (los, nlos) = path_loss_states(d3);
    let loss = match state {
        LinkState::Los => los,
        LinkState::Nlos => nlos,
    };
    radio.tx_power_dbm - loss - radio.noise_dbm
}

/// Default Poisson tail left out of the user-count sum.
pub const POISSON_TAIL: f64 = 1e-9;

/// `Σ_{N≥1} Pois(N; m) B/N`: mean bandwidth of a user under equal sharing.
/// With `m = 0` the user is alone and gets `B`.
pub fn user_share(m: f64, bandwidth: f64, tail: f64) -> f64 {
    if m <= 0.0 {
        return bandwidth;
    }
    let ln_m = m.ln();
    let target = -(-m).exp_m1();
    let mut ln_p = -m;
    let mut cum = 0.0;
    let mut acc = 0.0;
    let mut n = 0u64;
    loop {
        n += 1;
        ln_p += ln_m - (n as f64).ln();
        let p = ln_p.exp();
        cum += p;
        acc += p / n as f64;
        if n as f64 > m && target - cum < tail {
            break;
        }
        if n > 10_000_000 {
            break;
        }
    }
    bandwidth * acc
}

fn spectral_efficiency(
    radio: &RadioConfig,
    template: &LinkTemplate,
    h_t: f64,
    x: f64,
    lambda_s: f64,
) -> f64 {
    let d3 = template.distance_3d(h_t, x);
    let p = template.los_fraction(h_t, x, lambda_s);
    p * radio.log1p_snr(snr_db(d3, radio, LinkState::Los))
        + (1.0 - p) * radio.log1p_snr(snr_db(d3, radio, LinkState::Nlos))
}

fn mean_users(cell: &CellConfig, x_c: f64) -> f64 {
    cell.lambda_n * std::f64::consts::PI * x_c * x_c
}

/// Mean rate of a user at the cell edge.
pub fn cell_edge_mean_rate(
    cell: &CellConfig,
    radio: &RadioConfig,
    template: &LinkTemplate,
) -> Result<f64> {
    cell.validate(template)?;
    radio.validate()?;
    Ok(edge_rate_at(cell, radio, template, cell.x_c, POISSON_TAIL))
}

fn edge_rate_at(
    cell: &CellConfig,
    radio: &RadioConfig,
    template: &LinkTemplate,
    x_c: f64,
    tail: f64,
) -> f64 {
    let share = user_share(mean_users(cell, x_c), radio.bandwidth_hz, tail);
    share * radio.c * spectral_efficiency(radio, template, cell.h_t, x_c, cell.lambda_s)
}

/// Edge rate with an explicit Poisson tail cutoff.
pub fn cell_edge_mean_rate_with_tail(
    cell: &CellConfig,
    radio: &RadioConfig,
    template: &LinkTemplate,
    tail: f64,
) -> Result<f64> {
    cell.validate(template)?;
    radio.validate()?;
    Ok(edge_rate_at(cell, radio, template, cell.x_c, tail))
}

/// Mean rate of a user placed uniformly in the cell.
pub fn cell_average_rate(
    cell: &CellConfig,
    radio: &RadioConfig,
    template: &LinkTemplate,
) -> Result<f64> {
    cell.validate(template)?;
    radio.validate()?;
    let x_c = cell.x_c;
    let share = user_share(mean_users(cell, x_c), radio.bandwidth_hz, POISSON_TAIL);
    let integrand = |x: f64| {
        spectral_efficiency(radio, template, cell.h_t, x, cell.lambda_s) * 2.0 * x / (x_c * x_c)
    };
    let mean_eff = adaptive_simpson(&integrand, 0.0, x_c, 1e-4);
    Ok(share * radio.c * mean_eff)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusResult {
    pub radius: f64,
    /// The target is met over the whole range; `radius` is the range maximum.
    pub saturated: bool,
}

/// Radii scanned for the last crossing before bisection.
const RADIUS_SCAN: usize = 400;

/// Largest cell radius whose edge rate still meets `target` b/s.
///
/// The edge rate is not monotone at small radii (with few users the
/// `N ≥ 1` share grows with the cell), so the last crossing is located on
/// a geometric scan and then bisected to 0.1 m.
pub fn max_cell_radius(
    target: f64,
    cell: &CellConfig,
    radio: &RadioConfig,
    template: &LinkTemplate,
) -> Result<RadiusResult> {
    cell.validate(template)?;
    radio.validate()?;
    let rate = |x: f64| edge_rate_at(cell, radio, template, x, POISSON_TAIL);
    let (min, max) = (cell.radius_min, cell.radius_max);
    if target <= 0.0 || rate(max) >= target {
        return Ok(RadiusResult {
            radius: max,
            saturated: true,
        });
    }
    let ratio = (max / min).powf(1.0 / RADIUS_SCAN as f64);
    let scan: Vec<(f64, f64)> = (0..=RADIUS_SCAN)
        .map(|k| {
            let x = if k == RADIUS_SCAN {
                max
            } else {
                min * ratio.powi(k as i32)
            };
            (x, rate(x))
        })
        .collect();
    let Some(k) = scan.iter().rposition(|&(_, r)| r >= target) else {
        let best = scan
            .iter()
            .fold(scan[0], |b, &p| if p.1 > b.1 { p } else { b });
        return Err(BlockageError::Infeasible {
            target,
            radius: best.0,
        });
    };
    let ((mut lo, mut r_lo), (mut hi, mut r_hi)) = (scan[k], scan[k + 1]);
    while hi - lo > 0.1 {
        let mid = 0.5 * (lo + hi);
        let r = rate(mid);
        if r >= target {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
    }
    let t = if r_lo > r_hi {
        (r_lo - target) / (r_lo - r_hi)
    } else {
        0.0
    };
    Ok(RadiusResult {
        radius: lo + t.clamp(0.0, 1.0) * (hi - lo),
        saturated: false,
    })
}
