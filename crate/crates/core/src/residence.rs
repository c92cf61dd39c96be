//! Distance travelled inside the blockage zone and the residence time
//! `T = L / V`, per scenario, plus the zone-entry intensity.
//!
//! * S1: blockers cross the sidewalk along X with Y uniform on `[0, w_S]`.
//! * S2: as S1 with Y triangular on `[0, w_S]` with mode `c`.
//! * S3: blockers cross the zone itself along random chords.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};
use crate::geometry::{build_zone, BlockageZone, LinkGeometry};
use crate::table::{Atom, DistributionTable};

/// Default number of grid intervals over the support of `L`.
pub const DEFAULT_GRID_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    S1,
    S2,
    S3,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3];

    /// Whether the scenario has a sidewalk of width `w_S`.
    pub fn has_sidewalk(self) -> bool {
        !matches!(self, ScenarioKind::S3)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioKind::S1 => "S1",
            ScenarioKind::S2 => "S2",
            ScenarioKind::S3 => "S3",
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioKind {
    type Err = BlockageError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" | "1" => Ok(ScenarioKind::S1),
            "S2" | "2" => Ok(ScenarioKind::S2),
            "S3" | "3" => Ok(ScenarioKind::S3),
            other => Err(BlockageError::param(
                "kind",
                format!("unknown scenario `{other}` (expected S1, S2 or S3)"),
            )),
        }
    }
}

/// One link plus its blocker population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub link: LinkGeometry,
    /// Blocker speed, m/s.
    pub v: f64,
    /// Blocker arrival intensity, 1/s.
    pub lambda_i: f64,
    /// Mode of the triangular Y distribution (S2); defaults to `w_S / 2`.
    pub c: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::S1,
            link: LinkGeometry::default(),
            v: 1.0,
            lambda_i: 1.0,
            c: None,
        }
    }
}

impl ScenarioConfig {
    pub fn with_kind(kind: ScenarioKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    /// Triangular mode actually used for S2.
    pub fn mode(&self) -> f64 {
        self.c.unwrap_or(self.link.w_s / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate(self.kind.has_sidewalk())?;
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(BlockageError::param("V", "must be finite and > 0"));
        }
        if !(self.lambda_i >= 0.0 && self.lambda_i.is_finite()) {
            return Err(BlockageError::param("lambda_I", "must be finite and >= 0"));
        }
        if self.kind == ScenarioKind::S2 {
            let c = self.mode();
            if !(c > 0.0 && c < self.link.w_s) {
                return Err(BlockageError::param("c", "must satisfy 0 < c < w_S"));
            }
        }
        Ok(())
    }
}

/// CDF of the symmetric-or-skewed triangular distribution on `[0, w]` with mode `c`.
pub fn triangular_cdf(x: f64, w: f64, c: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= c {
        x * x / (w * c)
    } else if x < w {
        1.0 - (w - x) * (w - x) / (w * (w - c))
    } else {
        1.0
    }
}

/// Inverse of [`triangular_cdf`].
pub fn triangular_quantile(p: f64, w: f64, c: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    if p <= c / w {
        (p * w * c).sqrt()
    } else {
        w - ((1.0 - p) * w * (w - c)).sqrt()
    }
}

fn check_inside_sidewalk(zone: &BlockageZone, w_s: f64) -> Result<()> {
    let tol = 1e-12 * w_s.max(1.0);
    if zone.y_min() < -tol || zone.y_max() > w_s + tol {
        return Err(BlockageError::Domain(format!(
            "blockage zone spans y in [{:.4}, {:.4}], outside the sidewalk [0, {w_s}]",
            zone.y_min(),
            zone.y_max()
        )));
    }
    Ok(())
}

/// Distance CDF for horizontal crossings with entry ordinate distributed by
/// `entry_cdf`, truncated to the zone.
fn truncated_entry_table(
    zone: &BlockageZone,
    entry_cdf: impl Fn(f64) -> f64,
    n: usize,
) -> Result<DistributionTable> {
    let x_min = zone.horizontal_chord_max();
    let (s, c) = zone.alpha.sin_cos();
    let cs = s * c;
    let y_a = zone.y_min();
    let y_c = zone.y_max();
    let mass = entry_cdf(y_c) - entry_cdf(y_a);
    if !(mass > 0.0) {
        return Err(BlockageError::Domain(
            "no blocker path crosses the blockage zone".into(),
        ));
    }
    let continuous = |x: f64| {
        let t = x * cs;
        (entry_cdf(y_a + t) - entry_cdf(y_a) + entry_cdf(y_c) - entry_cdf(y_c - t)) / mass
    };
    let below = continuous(x_min).clamp(0.0, 1.0);
    let atom_mass = 1.0 - below;
    let atoms = if atom_mass > 1e-15 {
        vec![Atom {
            location: x_min,
            mass: atom_mass,
        }]
    } else {
        Vec::new()
    };
    DistributionTable::from_uniform_fn(x_min, n, atoms, |x| {
        if x >= x_min {
            1.0
        } else {
            continuous(x)
        }
    })
}

/// S1: `F_L(x) = x sin 2α / (y_C − y_A)` below `x_min`, atom at `x_min`.
pub fn distance_cdf_s1(zone: &BlockageZone, n: usize) -> Result<DistributionTable> {
    let slope = (2.0 * zone.alpha).sin() / zone.w_e;
    let x_min = zone.horizontal_chord_max();
    let below = (slope * x_min).clamp(0.0, 1.0);
    let atoms = if below < 1.0 {
        vec![Atom {
            location: x_min,
            mass: 1.0 - below,
        }]
    } else {
        Vec::new()
    };
    DistributionTable::from_uniform_fn(
        x_min,
        n,
        atoms,
        |x| {
            if x >= x_min {
                1.0
            } else {
                slope * x
            }
        },
    )
}

/// Which closed form applies for a given triangular mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S2Case {
    /// `c ≥ y_C`: entry density increasing over the zone.
    ModeAbove,
    /// `y_C − y_min ≤ c < y_C`.
    ModeNearTop,
    /// `y_A + y_min ≤ c < y_C − y_min`.
    ModeInside,
    /// `y_A ≤ c < y_A + y_min`.
    ModeNearBottom,
    /// `c < y_A`: entry density decreasing over the zone.
    ModeBelow,
}

impl S2Case {
    /// Conventional case number, 1 (mode above the zone) to 5 (mode below).
    pub fn number(self) -> u8 {
        match self {
            S2Case::ModeAbove => 1,
            S2Case::ModeNearTop => 2,
            S2Case::ModeInside => 3,
            S2Case::ModeNearBottom => 4,
            S2Case::ModeBelow => 5,
        }
    }
}

pub fn s2_case(zone: &BlockageZone, c: f64) -> S2Case {
    let (s, co) = zone.alpha.sin_cos();
    let y_min = zone.horizontal_chord_max() * s * co;
    let y_a = zone.y_min();
    let y_c = zone.y_max();
    if c >= y_c {
        S2Case::ModeAbove
    } else if c >= y_c - y_min {
        S2Case::ModeNearTop
    } else if c >= y_a + y_min {
        S2Case::ModeInside
    } else if c >= y_a {
        S2Case::ModeNearBottom
    } else {
        S2Case::ModeBelow
    }
}

/// S2 distance CDF. All five mode placements share one truncated-entry
/// expression; [`s2_case`] reports which one applies.
pub fn distance_cdf_s2(
    zone: &BlockageZone,
    w_s: f64,
    c: f64,
    n: usize,
) -> Result<DistributionTable> {
    if !(c > 0.0 && c < w_s) {
        return Err(BlockageError::param("c", "must satisfy 0 < c < w_S"));
    }
    check_inside_sidewalk(zone, w_s)?;
    truncated_entry_table(zone, |y| triangular_cdf(y, w_s, c), n)
}

/// Chord-length CDF when entering from a side adjacent to the exit side.
fn f_adjacent(x: f64, r: f64, d: f64) -> f64 {
    let (m, big) = if r < d { (r, d) } else { (d, r) };
    let diag = r.hypot(d);
    if x <= 0.0 {
        0.0
    } else if x <= m {
        std::f64::consts::PI * x * x / (4.0 * r * d)
    } else if x <= big {
        (m * (x * x - m * m).sqrt() + x * x * (m / x).asin()) / (2.0 * r * d)
    } else if x < diag {
        let v = m * (big * big - m * m).sqrt()
            + d * ((x * x - d * d).sqrt() - (big * big - d * d).sqrt())
            + r * ((x * x - r * r).sqrt() - (big * big - r * r).sqrt())
            + big * big * ((r / big).acos() + (m / big).asin() - (d / big).asin())
            + x * x * ((d / x).asin() - (r / x).acos());
        v / (2.0 * r * d)
    } else {
        1.0
    }
}

/// Chord-length CDF between the two opposite long sides.
fn f_opposite(x: f64, r: f64, d: f64) -> f64 {
    let diag = r.hypot(d);
    if x <= d {
        0.0
    } else if x < diag {
        (d * d - x * x + 2.0 * r * (x * x - d * d).sqrt()) / (r * r)
    } else {
        1.0
    }
}

/// Mixture weights `(w_1, w_2)` of the S3 chord law.
pub fn s3_weights(d_m: f64, r: f64) -> (f64, f64) {
    let den = d_m * d_m + 3.0 * d_m * r + 2.0 * r * r;
    ((d_m * d_m + 3.0 * d_m * r) / den, 2.0 * r * r / den)
}

/// Closed-form S3 distance CDF.
pub fn s3_cdf(x: f64, d_m: f64, r: f64) -> f64 {
    let (w1, w2) = s3_weights(d_m, r);
    (w1 * f_adjacent(x, r, d_m) + w2 * f_opposite(x, r, d_m)).clamp(0.0, 1.0)
}

/// S3 distance CDF on `[0, √(d_m² + r²)]`; continuous, no atoms.
pub fn distance_cdf_s3(d_m: f64, r: f64, n: usize) -> Result<DistributionTable> {
    if !(d_m > 0.0 && r > 0.0) {
        return Err(BlockageError::param("d_m", "d_m and r must be > 0"));
    }
    let diag = d_m.hypot(r);
    DistributionTable::from_uniform_fn(diag, n, Vec::new(), |x| s3_cdf(x, d_m, r))
}

/// `F_T(t) = F_L(tV)`.
pub fn residence_time_cdf(distance: &DistributionTable, v: f64) -> Result<DistributionTable> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(BlockageError::param("V", "must be finite and > 0"));
    }
    Ok(distance.scaled(1.0 / v))
}

/// Rate at which blockers enter the zone, 1/s.
pub fn entry_intensity(cfg: &ScenarioConfig, zone: &BlockageZone) -> Result<f64> {
    let w_s = cfg.link.w_s;
    match cfg.kind {
        ScenarioKind::S1 => {
            check_inside_sidewalk(zone, w_s)?;
            Ok(cfg.lambda_i * zone.w_e / w_s)
        }
        ScenarioKind::S2 => {
            check_inside_sidewalk(zone, w_s)?;
            let c = cfg.mode();
            Ok(cfg.lambda_i
                * (triangular_cdf(zone.y_max(), w_s, c) - triangular_cdf(zone.y_min(), w_s, c)))
        }
        ScenarioKind::S3 => Ok(cfg.lambda_i),
    }
}

pub fn distance_cdf(
    cfg: &ScenarioConfig,
    zone: &BlockageZone,
    n: usize,
) -> Result<DistributionTable> {
    match cfg.kind {
        ScenarioKind::S1 => {
            check_inside_sidewalk(zone, cfg.link.w_s)?;
            distance_cdf_s1(zone, n)
        }
        ScenarioKind::S2 => distance_cdf_s2(zone, cfg.link.w_s, cfg.mode(), n),
        ScenarioKind::S3 => distance_cdf_s3(zone.d_m, zone.r, n),
    }
}

/// Everything the renewal layer needs from one scenario.
#[derive(Debug, Clone)]
pub struct Residence {
    pub zone: BlockageZone,
    pub distance: DistributionTable,
    pub time: DistributionTable,
    pub lambda: f64,
    pub mean_time: f64,
}

pub fn residence(cfg: &ScenarioConfig, n: usize) -> Result<Residence> {
    cfg.validate()?;
    let zone = build_zone(&cfg.link)?;
    let distance = distance_cdf(cfg, &zone, n)?;
    let time = residence_time_cdf(&distance, cfg.v)?;
    let lambda = entry_intensity(cfg, &zone)?;
    let mean_time = time.mean();
    Ok(Residence {
        zone,
        distance,
        time,
        lambda,
        mean_time,
    })
}
