//! LoS blockage zone geometry.
//!
//! Coordinates: the sidewalk (or street) runs along X, the Tx sits at
//! `P = (0, w_S)` and the Rx at `O = (r_0 sin α, w_S − r_0 cos α)`. The zone
//! is the rectangle `ABCD` with `AB` (length `d_m`) centred on `O` and the
//! long sides (length `r`) pointing from the Rx towards the Tx.

use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};

/// Tolerance for the rectangle property checks.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Tx/Rx/blocker parameters. Lengths in meters, `alpha` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub h_t: f64,
    pub h_r: f64,
    pub h_b: f64,
    pub d_m: f64,
    pub r_0: f64,
    pub w_s: f64,
    pub alpha: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            h_t: 3.0,
            h_r: 1.3,
            h_b: 1.7,
            d_m: 0.5,
            r_0: 4.6,
            w_s: 5.0,
            alpha: std::f64::consts::FRAC_PI_6,
        }
    }
}

impl LinkGeometry {
    /// Checks the parameter invariants; `sidewalk` additionally requires `w_s > 0`.
    pub fn validate(&self, sidewalk: bool) -> Result<()> {
        let finite = [
            ("h_T", self.h_t),
            ("h_R", self.h_r),
            ("h_B", self.h_b),
            ("d_m", self.d_m),
            ("r_0", self.r_0),
            ("w_S", self.w_s),
            ("alpha", self.alpha),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(BlockageError::param(name, "must be finite"));
            }
        }
        if self.h_t <= self.h_r {
            return Err(BlockageError::DegenerateGeometry(format!(
                "h_T = {} must exceed h_R = {}",
                self.h_t, self.h_r
            )));
        }
        if self.h_r <= 0.0 {
            return Err(BlockageError::param("h_R", "must be > 0"));
        }
        if !(self.h_b >= self.h_r && self.h_b < self.h_t) {
            return Err(BlockageError::param("h_B", "must satisfy h_R <= h_B < h_T"));
        }
        if self.d_m <= 0.0 {
            return Err(BlockageError::param("d_m", "must be > 0"));
        }
        if self.r_0 <= 0.0 {
            return Err(BlockageError::param("r_0", "must be > 0"));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.alpha) {
            return Err(BlockageError::param("alpha", "must lie in [0, pi/2)"));
        }
        if sidewalk && self.w_s <= 0.0 {
            return Err(BlockageError::param("w_S", "must be > 0"));
        }
        Ok(())
    }

    /// 3-D Tx–Rx distance.
    pub fn distance_3d(&self) -> f64 {
        (self.h_t - self.h_r).hypot(self.r_0)
    }
}

/// Length of the blockage zone: `r_0 (h_B − h_R)/(h_T − h_R) + d_m/2`.
pub fn zone_length(link: &LinkGeometry) -> Result<f64> {
    let gap = link.h_t - link.h_r;
    if !(gap > 0.0) {
        return Err(BlockageError::DegenerateGeometry(format!(
            "h_T = {} must exceed h_R = {}",
            link.h_t, link.h_r
        )));
    }
    Ok(link.r_0 * (link.h_b - link.h_r) / gap + link.d_m / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockageZone {
    pub r: f64,
    pub d_m: f64,
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub d: Point,
    /// Extent of the zone along Y.
    pub w_e: f64,
    pub alpha: f64,
    pub tx: Point,
    pub rx: Point,
}

impl BlockageZone {
    pub fn vertices(&self) -> [Point; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn y_min(&self) -> f64 {
        self.vertices()
            .iter()
            .map(|p| p.y)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn y_max(&self) -> f64 {
        self.vertices()
            .iter()
            .map(|p| p.y)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn x_min(&self) -> f64 {
        self.vertices()
            .iter()
            .map(|p| p.x)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn x_max(&self) -> f64 {
        self.vertices()
            .iter()
            .map(|p| p.x)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Unit vector from the Rx towards the Tx (along the long sides).
    pub fn axis(&self) -> Point {
        Point::new(-self.alpha.sin(), self.alpha.cos())
    }

    /// Unit vector along `AB`.
    pub fn across(&self) -> Point {
        Point::new(self.alpha.cos(), self.alpha.sin())
    }

    /// Whether `p` lies inside the closed rectangle.
    pub fn contains(&self, p: Point) -> bool {
        let (u, v) = self.local(p);
        (-GEOMETRY_TOL..=self.r + GEOMETRY_TOL).contains(&u)
            && v.abs() <= self.d_m / 2.0 + GEOMETRY_TOL
    }

    /// Coordinates of `p` in the zone frame: `u` along the axis from `O`,
    /// `v` across it.
    pub fn local(&self, p: Point) -> (f64, f64) {
        let dx = p.x - self.rx.x;
        let dy = p.y - self.rx.y;
        let ax = self.axis();
        let ac = self.across();
        (dx * ax.x + dy * ax.y, dx * ac.x + dy * ac.y)
    }

    /// Length of the longest chord a horizontal path can cut through the zone.
    pub fn horizontal_chord_max(&self) -> f64 {
        let (s, c) = self.alpha.sin_cos();
        if s <= 0.0 {
            return self.d_m;
        }
        (self.d_m / c).min(self.r / s)
    }
}

/// Builds the rectangle `ABCD` for a validated link.
pub fn build_zone(link: &LinkGeometry) -> Result<BlockageZone> {
    link.validate(false)?;
    let r = zone_length(link)?;
    let (s, c) = link.alpha.sin_cos();
    let tx = Point::new(0.0, link.w_s);
    let rx = Point::new(link.r_0 * s, link.w_s - link.r_0 * c);
    let half = link.d_m / 2.0;
    let a = Point::new(rx.x - half * c, rx.y - half * s);
    let b = Point::new(rx.x + half * c, rx.y + half * s);
    let c_pt = Point::new(b.x - r * s, b.y + r * c);
    let d = Point::new(a.x - r * s, a.y + r * c);
    let w_e = [a.y, b.y, c_pt.y, d.y]
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - [a.y, b.y, c_pt.y, d.y]
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(*v));
    Ok(BlockageZone {
        r,
        d_m: link.d_m,
        a,
        b,
        c: c_pt,
        d,
        w_e,
        alpha: link.alpha,
        tx,
        rx,
    })
}
