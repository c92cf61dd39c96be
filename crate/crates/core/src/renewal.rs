//! Alternating renewal description of a link: exponential non-blocked
//! intervals and blocked intervals distributed as the busy period of an
//! M/GI/∞ system whose service time is the zone residence time.
//!
//! The busy-period survival `G = 1 − F_η` solves
//!
//! ```text
//! G(x) = 1 − F(x) + λ F(x) ∫₀ˣ G(x−z) E(z) dz − λ ∫₀ˣ G(x−z) E(z) F(z) dz,
//! E(z) = exp(−λ ∫₀ᶻ (1 − F(y)) dy),
//! ```
//!
//! with `F = F_T`. On a uniform grid with the trapezoid rule this is a
//! discrete Volterra system: the value at node `i` depends on earlier nodes
//! and, linearly, on `G(x_i⁻)` itself. The default solver marches through
//! the grid once, accumulating the history sums by divide-and-conquer FFT
//! convolution (`O(n log² n)`). Successive substitution from `G = 1 − F_T`
//! solves the same system and is kept as an alternative; it slows down
//! badly in heavy traffic, where a busy period spans many service times.
//! Atoms of `F_T` are carried as separate left/right limits at their grid
//! nodes so the jump of `F_η` is reproduced exactly.

use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};
use crate::numerics::convolve;
use crate::residence::{residence, ScenarioConfig, DEFAULT_GRID_INTERVALS};
use crate::table::{Atom, DistributionTable, SampledCdf};

/// Survival mass left beyond the end of the exponential tables.
const EXP_TAIL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BusyPeriodSolver {
    /// Single pass over the grid.
    #[default]
    Marching,
    /// Successive substitution until the sup-norm change drops below the tolerance.
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockedOptions {
    pub solver: BusyPeriodSolver,
    /// Sup-norm change that ends the fixed-point iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Survival mass allowed beyond the horizon.
    pub tail: f64,
    /// Grid step in seconds; defaults to the step of `F_T`.
    pub step: Option<f64>,
}

impl Default for BlockedOptions {
    fn default() -> Self {
        Self {
            solver: BusyPeriodSolver::default(),
            tolerance: 1e-6,
            max_iterations: 500,
            tail: 1e-5,
            step: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockedSolution {
    pub table: DistributionTable,
    /// Passes over the grid (1 per horizon for the marching solver).
    pub iterations: usize,
    pub horizon: f64,
    /// Sup-norm of `T(G) − G` for the returned solution.
    pub last_change: f64,
}

/// `F_ω(x) = 1 − e^{−λx}` on `n` intervals up to the `1 − 1e-6` quantile.
pub fn nonblocked_cdf(lambda: f64, n: usize) -> Result<DistributionTable> {
    if lambda == 0.0 {
        return Err(BlockageError::NeverBlocked);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BlockageError::param("lambda", "must be finite and > 0"));
    }
    let q = -EXP_TAIL.ln() / lambda;
    let atoms = vec![Atom {
        location: q,
        mass: EXP_TAIL,
    }];
    DistributionTable::from_uniform_fn(q, n, atoms, |x| {
        if x >= q {
            1.0
        } else {
            -(-lambda * x).exp_m1()
        }
    })
}

/// [`nonblocked_cdf`] on the lattice `x_i = i * step`, ending at the first
/// node past the `1 − 1e-6` quantile.
pub fn nonblocked_cdf_with_step(lambda: f64, step: f64) -> Result<DistributionTable> {
    if lambda == 0.0 {
        return Err(BlockageError::NeverBlocked);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BlockageError::param("lambda", "must be finite and > 0"));
    }
    if !(step > 0.0) {
        return Err(BlockageError::param("step", "must be > 0"));
    }
    let n = ((-EXP_TAIL.ln() / lambda / step).ceil() as usize).max(1);
    let end = n as f64 * step;
    let atoms = vec![Atom {
        location: end,
        mass: (-lambda * end).exp(),
    }];
    DistributionTable::from_uniform_fn(end, n, atoms, |x| {
        if x >= end {
            1.0
        } else {
            -(-lambda * x).exp_m1()
        }
    })
}

/// Residual non-blocked time; identical to [`nonblocked_cdf`] by memorylessness.
pub fn residual_nonblocked_cdf(lambda: f64, n: usize) -> Result<DistributionTable> {
    nonblocked_cdf(lambda, n)
}

/// `(e^{λE[T]} − 1) / λ`.
pub fn mean_blocked(lambda: f64, e_t: f64) -> f64 {
    if lambda * e_t < 1e-8 {
        return e_t * (1.0 + 0.5 * lambda * e_t);
    }
    (lambda * e_t).exp_m1() / lambda
}

/// `E[ξ] = e^{λE[T]} / λ = E[ω] + E[η]`.
pub fn renewal_cycle_mean(lambda: f64, e_t: f64) -> f64 {
    (lambda * e_t).exp() / lambda
}

/// `(frac_los, frac_nlos)` from the interval means.
pub fn time_fractions(e_omega: f64, e_eta: f64) -> (f64, f64) {
    let los = e_omega / (e_omega + e_eta);
    (los, 1.0 - los)
}

/// Solves for the busy-period CDF `F_η`.
pub fn blocked_cdf(
    f_t: &DistributionTable,
    lambda: f64,
    opts: &BlockedOptions,
) -> Result<BlockedSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BlockageError::param("lambda", "must be finite and > 0"));
    }
    let t_max = f_t.support_max();
    if !(t_max > 0.0) {
        return Err(BlockageError::param("F_T", "support must be positive"));
    }
    let native = opts.step.is_none().then(|| f_t.uniform_step()).flatten();
    let step = opts
        .step
        .or(native)
        .unwrap_or(t_max / DEFAULT_GRID_INTERVALS as f64);
    let prefix: &[f64] = if native.is_some() { f_t.grid() } else { &[] };
    let e_t = f_t.mean();
    let e_eta = mean_blocked(lambda, e_t);
    let mut horizon = (2.0 * t_max).max(15.0 * e_eta);
    let mut total_iterations = 0;
    loop {
        let n = (horizon / step).ceil() as usize + 1;
        let kernel = Kernel::new(f_t, lambda, step, n);
        let (g_right, g_left, iterations, change) = match opts.solver {
            BusyPeriodSolver::Marching => kernel.march(),
            BusyPeriodSolver::FixedPoint => kernel.iterate(opts)?,
        };
        total_iterations += iterations;
        let tail = g_right[n - 1];
        if tail < opts.tail || n > 1 << 24 {
            let sampled = SampledCdf {
                step,
                right: g_right.iter().map(|g| 1.0 - g).collect(),
                left: g_left.iter().map(|g| 1.0 - g).collect(),
            };
            return Ok(BlockedSolution {
                table: sampled.into_table_aligned(prefix)?,
                iterations: total_iterations,
                horizon: (n - 1) as f64 * step,
                last_change: change,
            });
        }
        horizon *= 2.0;
    }
}

type GridSolution = (Vec<f64>, Vec<f64>, usize, f64);

/// Leaf size below which history sums are accumulated directly.
const MARCH_LEAF: usize = 64;

/// Grid data of the busy-period equation.
struct Kernel {
    lambda: f64,
    h: f64,
    n: usize,
    /// `F(x⁺)`, `F(x⁻)`.
    fp: Vec<f64>,
    fm: Vec<f64>,
    /// `E(z)` and `E(z)·F̄(z)` with `F̄` the mid-jump value.
    e: Vec<f64>,
    ef: Vec<f64>,
}

impl Kernel {
    fn new(f_t: &DistributionTable, lambda: f64, h: f64, n: usize) -> Self {
        let f = SampledCdf::from_table(f_t, h, n);
        let (fp, fm) = (f.right, f.left);
        let mut e = vec![1.0; n];
        let mut integral = 0.0;
        for i in 1..n {
            integral += h * (1.0 - 0.5 * (fp[i - 1] + fm[i]));
            e[i] = (-lambda * integral).exp();
        }
        let ef = e
            .iter()
            .zip(fp.iter().zip(&fm))
            .map(|(a, (p, m))| a * 0.5 * (p + m))
            .collect();
        Self {
            lambda,
            h,
            n,
            fp,
            fm,
            e,
            ef,
        }
    }

    /// Node value from the history sums `Σ_{k=1}^{i−1} Ḡ_k E_{i−k}` (and
    /// with `EF`), solving the implicit `G(x_i⁻)` endpoint term.
    ///
    /// Trapezoid rule with the correct one-sided limits at both ends:
    /// z → 0⁺ sees G(x⁻), z → x⁻ sees G(0⁺) and F(x⁻).
    fn node(&self, i: usize, s1: f64, s2: f64, g0p: f64, gm: Option<f64>) -> (f64, f64) {
        let (h, lambda) = (self.h, self.lambda);
        let (fp, fm) = (self.fp[i], self.fm[i]);
        let a1 = h * (s1 + 0.5 * g0p * self.e[i]);
        let a2 = h * (s2 + 0.5 * g0p * self.e[i] * fm);
        let b1 = 0.5 * h * self.e[0];
        let b2 = 0.5 * h * self.e[0] * self.fp[0];
        let gm = gm.unwrap_or_else(|| {
            (1.0 - fm + lambda * (fm * a1 - a2)) / (1.0 - lambda * (fm * b1 - b2))
        });
        let (c1, c2) = (a1 + b1 * gm, a2 + b2 * gm);
        let next_p = (1.0 - fp + lambda * (fp * c1 - c2)).clamp(0.0, 1.0);
        let next_m = (1.0 - fm + lambda * (fm * c1 - c2)).clamp(0.0, 1.0);
        (next_p, next_m)
    }

    /// One application of the right-hand side to `(G(x⁺), G(x⁻))`.
    fn apply(&self, gp: &[f64], gm: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut gbar: Vec<f64> = gp.iter().zip(gm).map(|(a, b)| 0.5 * (a + b)).collect();
        gbar[0] = 0.0;
        let s1 = convolve(&gbar, &self.e, n);
        let s2 = convolve(&gbar, &self.ef, n);
        let mut next_p = vec![0.0; n];
        let mut next_m = vec![0.0; n];
        next_p[0] = 1.0 - self.fp[0];
        next_m[0] = 1.0 - self.fm[0];
        for i in 1..n {
            // The k = i term of the sums is the implicit endpoint, handled in `node`.
            let (s1i, s2i) = (s1[i] - gbar[i] * self.e[0], s2[i] - gbar[i] * self.ef[0]);
            (next_p[i], next_m[i]) = self.node(i, s1i, s2i, gp[0], Some(gm[i]));
        }
        (next_p, next_m)
    }

    fn sup_change(&self, gp: &[f64], gm: &[f64]) -> f64 {
        let (tp, tm) = self.apply(gp, gm);
        tp.iter()
            .zip(gp)
            .chain(tm.iter().zip(gm))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn march(&self) -> GridSolution {
        let n = self.n;
        let mut st = March {
            gp: vec![0.0; n],
            gm: vec![0.0; n],
            gbar: vec![0.0; n],
            s1: vec![0.0; n],
            s2: vec![0.0; n],
        };
        st.gp[0] = 1.0 - self.fp[0];
        st.gm[0] = 1.0 - self.fm[0];
        // Ḡ_0 only enters through the endpoint term.
        st.gbar[0] = 0.0;
        if n > 1 {
            self.march_range(&mut st, 1, n);
        }
        let change = self.sup_change(&st.gp, &st.gm);
        (st.gp, st.gm, 1, change)
    }

    /// Fills nodes `[lo, hi)`; history from nodes below `lo` is already in
    /// `s1`, `s2`.
    fn march_range(&self, st: &mut March, lo: usize, hi: usize) {
        if hi - lo <= MARCH_LEAF {
            for i in lo..hi {
                for k in lo..i {
                    st.s1[i] += st.gbar[k] * self.e[i - k];
                    st.s2[i] += st.gbar[k] * self.ef[i - k];
                }
                let (p, m) = self.node(i, st.s1[i], st.s2[i], st.gp[0], None);
                st.gp[i] = p;
                st.gm[i] = m;
                st.gbar[i] = 0.5 * (p + m);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.march_range(st, lo, mid);
        // Left half → right half: index (k − lo) + (i − k) = i − lo.
        let len = hi - lo;
        let c1 = convolve(&st.gbar[lo..mid], &self.e[..len], len);
        let c2 = convolve(&st.gbar[lo..mid], &self.ef[..len], len);
        for i in mid..hi {
            st.s1[i] += c1[i - lo];
            st.s2[i] += c2[i - lo];
        }
        self.march_range(st, mid, hi);
    }

    fn iterate(&self, opts: &BlockedOptions) -> Result<GridSolution> {
        let mut gp: Vec<f64> = self.fp.iter().map(|v| 1.0 - v).collect();
        let mut gm: Vec<f64> = self.fm.iter().map(|v| 1.0 - v).collect();
        let mut change = f64::INFINITY;
        for iteration in 1..=opts.max_iterations {
            let (next_p, next_m) = self.apply(&gp, &gm);
            change = next_p
                .iter()
                .zip(&gp)
                .chain(next_m.iter().zip(&gm))
                .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
            gp = next_p;
            gm = next_m;
            if change < opts.tolerance {
                return Ok((gp, gm, iteration, change));
            }
        }
        Err(BlockageError::NumericalFailure {
            stage: "blocked-interval fixed point",
            iterations: opts.max_iterations,
            last_change: change,
        })
    }
}

struct March {
    gp: Vec<f64>,
    gm: Vec<f64>,
    gbar: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

/// `F_{t_η}(t) = (1/E[η]) ∫₀ᵗ (1 − F_η(y)) dy` on the grid of `F_η`.
pub fn residual_blocked_cdf(f_eta: &DistributionTable, e_eta: f64) -> Result<DistributionTable> {
    if !(e_eta > 0.0) {
        return Err(BlockageError::param("E_eta", "must be > 0"));
    }
    let g = f_eta.grid();
    let (right, left) = (f_eta.cdf(), f_eta.cdf_left());
    let mut grid = Vec::with_capacity(g.len() + 1);
    let mut cdf = Vec::with_capacity(g.len() + 1);
    if g[0] > 0.0 {
        grid.push(0.0);
        cdf.push(0.0);
    }
    let mut acc = g[0].max(0.0) * (1.0 - left[0]);
    grid.push(g[0]);
    cdf.push((acc / e_eta).min(1.0));
    for i in 1..g.len() {
        acc += (g[i] - g[i - 1]) * (1.0 - 0.5 * (right[i - 1] + left[i]));
        grid.push(g[i]);
        cdf.push((acc / e_eta).min(1.0));
    }
    let last = *grid.last().unwrap();
    let missing = 1.0 - *cdf.last().unwrap();
    let mut atoms = Vec::new();
    if missing > 1e-12 {
        atoms.push(Atom {
            location: last,
            mass: missing,
        });
    }
    *cdf.last_mut().unwrap() = 1.0;
    DistributionTable::new(grid, cdf, atoms)
}

/// Renewal density `λ F_T(x) exp(−λ ∫₀ˣ (1 − F_T))` at the points `xs`.
pub fn renewal_density(lambda: f64, f_t: &DistributionTable, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| lambda * f_t.eval(x) * (-lambda * f_t.survival_integral(x)).exp())
        .collect()
}

/// Numerical settings shared by model construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Grid intervals over the support of the residence time.
    pub grid_intervals: usize,
    pub blocked: BlockedOptions,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            grid_intervals: DEFAULT_GRID_INTERVALS,
            blocked: BlockedOptions::default(),
        }
    }
}

/// Fitted alternating-renewal description of one link.
#[derive(Debug, Clone)]
pub struct RenewalModel {
    pub lambda: f64,
    pub f_t: DistributionTable,
    pub e_t: f64,
    pub f_eta: DistributionTable,
    /// Closed-form mean blocked interval.
    pub e_eta: f64,
    /// Mean of the tabulated `F_η`.
    pub e_eta_numeric: f64,
    pub e_omega: f64,
    pub frac_los: f64,
    pub frac_nlos: f64,
    pub iterations: usize,
}

impl RenewalModel {
    /// Builds the model for a scenario. Fails with
    /// [`BlockageError::NeverBlocked`] when the entry intensity is zero.
    pub fn build(cfg: &ScenarioConfig, opts: &ModelOptions) -> Result<Self> {
        let res = residence(cfg, opts.grid_intervals)?;
        Self::from_residence_time(res.time, res.lambda, &opts.blocked)
    }

    pub fn from_residence_time(
        f_t: DistributionTable,
        lambda: f64,
        opts: &BlockedOptions,
    ) -> Result<Self> {
        if lambda == 0.0 {
            return Err(BlockageError::NeverBlocked);
        }
        let solution = blocked_cdf(&f_t, lambda, opts)?;
        let e_t = f_t.mean();
        let e_eta = mean_blocked(lambda, e_t);
        let e_omega = 1.0 / lambda;
        let (frac_los, frac_nlos) = time_fractions(e_omega, e_eta);
        Ok(Self {
            lambda,
            e_t,
            e_eta_numeric: solution.table.mean(),
            f_eta: solution.table,
            f_t,
            e_eta,
            e_omega,
            frac_los,
            frac_nlos,
            iterations: solution.iterations,
        })
    }

    pub fn cycle_mean(&self) -> f64 {
        self.e_omega + self.e_eta
    }

    /// Uniform grid step shared by the model tables.
    pub fn step(&self) -> f64 {
        self.f_eta
            .uniform_step()
            .unwrap_or(self.f_t.support_max() / DEFAULT_GRID_INTERVALS as f64)
    }

    pub fn nonblocked(&self) -> Result<DistributionTable> {
        nonblocked_cdf_with_step(self.lambda, self.step())
    }

    pub fn residual_blocked(&self) -> Result<DistributionTable> {
        residual_blocked_cdf(&self.f_eta, self.e_eta_numeric)
    }

    pub fn residual_nonblocked(&self) -> Result<DistributionTable> {
        self.nonblocked()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residence::ScenarioKind;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_table_median_and_mean() {
        let t = nonblocked_cdf(1.0, 20_000).unwrap();
        assert_abs_diff_eq!(t.eval(std::f64::consts::LN_2), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(t.mean(), 1.0, epsilon = 1e-3);
        let t = nonblocked_cdf(0.28, 20_000).unwrap();
        assert_abs_diff_eq!(t.eval(1.0), 0.2442, epsilon = 1e-4);
        assert!(matches!(
            nonblocked_cdf(0.0, 10),
            Err(BlockageError::NeverBlocked)
        ));
    }

    #[test]
    fn closed_form_means() {
        assert_abs_diff_eq!(
            mean_blocked(1.0, 1.0),
            std::f64::consts::E - 1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(mean_blocked(0.28, 0.474), 0.5068, epsilon = 1e-4);
        assert_abs_diff_eq!(mean_blocked(1e-12, 0.3), 0.3, epsilon = 1e-12);
        let xi = renewal_cycle_mean(0.28, 0.474);
        assert_abs_diff_eq!(xi, 1.0 / 0.28 + mean_blocked(0.28, 0.474), epsilon = 1e-12);
        let (los, nlos) = time_fractions(1.0 / 0.28, mean_blocked(0.28, 0.474));
        assert_abs_diff_eq!(los, 0.876, epsilon = 1e-3);
        assert_abs_diff_eq!(los + nlos, 1.0, epsilon = 1e-15);
        assert_eq!(time_fractions(2.0, 0.0), (1.0, 0.0));
    }

    #[test]
    fn deterministic_service_busy_period_mean() {
        for (lambda, tau) in [(0.5, 1.0), (1.0, 1.0), (0.28, 0.5)] {
            let f_t = DistributionTable::from_uniform_fn(
                tau,
                400,
                vec![Atom {
                    location: tau,
                    mass: 1.0,
                }],
                |x| if x >= tau { 1.0 } else { 0.0 },
            )
            .unwrap();
            let sol = blocked_cdf(&f_t, lambda, &BlockedOptions::default()).unwrap();
            let exact = mean_blocked(lambda, tau);
            assert!(
                (sol.table.mean() - exact).abs() / exact < 0.01,
                "lambda={lambda} tau={tau}: {} vs {exact}",
                sol.table.mean()
            );
            // A busy period lasts at least one service time.
            assert!(
                sol.table.eval_left(tau) < 1e-12,
                "{}",
                sol.table.eval_left(tau)
            );
        }
    }

    #[test]
    fn tiny_intensity_busy_period_is_one_service() {
        let f_t = DistributionTable::from_uniform_fn(1.0, 500, vec![], |x| x).unwrap();
        let sol = blocked_cdf(&f_t, 1e-6, &BlockedOptions::default()).unwrap();
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            assert!((sol.table.eval(x) - f_t.eval(x)).abs() < 1e-3);
        }
    }

    #[test]
    fn marching_matches_fixed_point() {
        let m = RenewalModel::build(&ScenarioConfig::default(), &ModelOptions::default()).unwrap();
        let march = blocked_cdf(&m.f_t, m.lambda, &BlockedOptions::default()).unwrap();
        let fixed = blocked_cdf(
            &m.f_t,
            m.lambda,
            &BlockedOptions {
                solver: BusyPeriodSolver::FixedPoint,
                tolerance: 1e-12,
                ..BlockedOptions::default()
            },
        )
        .unwrap();
        assert_eq!(march.iterations, 1);
        assert!(march.last_change < 1e-12, "{}", march.last_change);
        assert!(fixed.iterations > 1);
        assert_eq!(march.table.grid(), fixed.table.grid());
        for (a, b) in march.table.cdf().iter().zip(fixed.table.cdf()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        for (a, b) in march.table.cdf_left().iter().zip(fixed.table.cdf_left()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn s1_baseline_model() {
        let m = RenewalModel::build(&ScenarioConfig::default(), &ModelOptions::default()).unwrap();
        assert_abs_diff_eq!(m.lambda, 0.2808, epsilon = 1e-3);
        assert_abs_diff_eq!(m.e_t, 0.4745, epsilon = 1e-3);
        assert!((m.e_eta_numeric - m.e_eta).abs() / m.e_eta < 1e-2);
        assert!((m.e_eta - 0.51).abs() / 0.51 < 0.1);
        assert_abs_diff_eq!(m.frac_los + m.frac_nlos, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.frac_los, (-m.lambda * m.e_t).exp(), epsilon = 1e-12);
        let res = m.residual_blocked().unwrap();
        assert_eq!(res.eval(0.0), 0.0);
        assert_abs_diff_eq!(res.eval(res.support_max()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn busy_period_dominates_service() {
        let m = RenewalModel::build(
            &ScenarioConfig::with_kind(ScenarioKind::S3),
            &ModelOptions::default(),
        )
        .unwrap();
        for &x in m.f_eta.grid().iter().step_by(97) {
            assert!(m.f_eta.eval(x) <= m.f_t.eval(x) + 1e-9);
        }
    }

    #[test]
    fn residual_of_exponential_is_itself() {
        let t = nonblocked_cdf(2.0, 20_000).unwrap();
        let r = residual_blocked_cdf(&t, t.mean()).unwrap();
        for x in [0.1, 0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(r.eval(x), t.eval(x), epsilon = 1e-4);
        }
    }

    #[test]
    fn renewal_density_limits() {
        let m = RenewalModel::build(&ScenarioConfig::default(), &ModelOptions::default()).unwrap();
        let f = renewal_density(m.lambda, &m.f_t, &[0.0, 2.0, 50.0]);
        let asymptote = 1.0 / m.cycle_mean();
        assert_eq!(f[0], 0.0);
        assert!((f[1] - asymptote).abs() / asymptote < 0.01);
        assert_abs_diff_eq!(f[2], asymptote, epsilon = 1e-3);
    }
}
