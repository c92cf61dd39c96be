//! Time-dependent conditional state probabilities.
//!
//! Starting in the non-blocked state at a random instant, the time until
//! the `i`-th subsequent change is a sum of the residual non-blocked time
//! and alternating blocked/non-blocked intervals. With `C₀ = F_{t_ω}`,
//! `Dᵢ = Cᵢ₋₁ ⊛ F_η` and `Cᵢ = Dᵢ ⊛ F_ω`:
//!
//! ```text
//! p₀₀(Δt) = 1 − C₀(Δt) + Σᵢ (Dᵢ(Δt) − Cᵢ(Δt))
//! p₀₁(Δt) = Σᵢ (Cᵢ₋₁(Δt) − Dᵢ(Δt))
//! ```
//!
//! and symmetrically from the blocked state with `F_{t_η}` as seed and the
//! roles of `ω`, `η` swapped. Each series is truncated at the first term
//! below `ε` once the partial-sum CDF that bounds all remaining terms is
//! also below `ε`.

use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};
use crate::numerics;
use crate::renewal::RenewalModel;
use crate::table::{DistributionTable, SampledCdf};

/// Mass below which a node is not treated as an atom.
const ATOM_EPS: f64 = 1e-15;

/// CDF of `X + Y` for CDFs sampled on the same lattice, first `n` nodes.
///
/// The continuous mass of `Y` in each cell is spread uniformly over the
/// cell; atoms of `Y` shift `X` exactly.
pub(crate) fn convolve_sampled(x: &SampledCdf, y: &SampledCdf, n: usize) -> SampledCdf {
    let mut h = vec![0.0; n];
    for (m, hm) in h.iter_mut().enumerate().skip(1) {
        *hm = 0.5 * (x.right_at(m - 1) + x.left_at(m));
    }
    let ny = y.len().min(n);
    let mut cell = vec![0.0; ny];
    let mut atoms = vec![0.0; ny];
    let mut any_atom = false;
    for j in 0..ny {
        if j + 1 < y.len() {
            cell[j] = (y.left[j + 1] - y.right[j]).max(0.0);
        }
        let jump = y.right[j] - y.left[j];
        if jump > ATOM_EPS {
            atoms[j] = jump;
            any_atom = true;
        }
    }
    let cont = numerics::convolve(&cell, &h, n);
    let (mut right, mut left) = (cont.clone(), cont);
    if any_atom {
        let xr: Vec<f64> = (0..n).map(|i| x.right_at(i)).collect();
        let xl: Vec<f64> = (0..n).map(|i| x.left_at(i)).collect();
        let ar = numerics::convolve(&atoms, &xr, n);
        let al = numerics::convolve(&atoms, &xl, n);
        for i in 0..n {
            right[i] += ar[i];
            left[i] += al[i];
        }
    }
    for i in 0..n {
        right[i] = right[i].clamp(0.0, 1.0);
        left[i] = left[i].clamp(0.0, right[i]);
    }
    SampledCdf {
        step: x.step,
        right,
        left,
    }
}

/// Common lattice step of two tables whose nodes all sit on multiples of
/// the finer of their steps.
fn common_step(a: &DistributionTable, b: &DistributionTable) -> Result<f64> {
    let sa = a.uniform_step();
    let sb = b.uniform_step();
    let step = match (sa, sb) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) if b.len() == 1 => x,
        (None, Some(y)) if a.len() == 1 => y,
        _ => {
            return Err(BlockageError::GridMismatch(
                "convolution needs uniform grids starting at 0".into(),
            ))
        }
    };
    for t in [a, b] {
        for &x in t.grid() {
            let k = x / step;
            if (k - k.round()).abs() > 1e-6 {
                return Err(BlockageError::GridMismatch(format!(
                    "node {x} is not on the lattice of step {step}"
                )));
            }
        }
    }
    Ok(step)
}

/// Distribution of the sum of two independent variables.
pub fn convolve(a: &DistributionTable, b: &DistributionTable) -> Result<DistributionTable> {
    let step = common_step(a, b)?;
    let na = (a.support_max() / step).round() as usize + 1;
    let nb = (b.support_max() / step).round() as usize + 1;
    let n = na + nb - 1;
    let sa = SampledCdf::from_table(a, step, na);
    let sb = SampledCdf::from_table(b, step, nb);
    convolve_sampled(&sa, &sb, n).into_table()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalOptions {
    pub epsilon: f64,
    /// Largest number of summands per series before giving up.
    pub max_terms: usize,
    /// Upper bound on lattice nodes; the model step is coarsened by an
    /// integer factor to respect it.
    pub max_nodes: usize,
}

impl Default for ConditionalOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_terms: 64,
            max_nodes: 1 << 18,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCurve {
    pub delta_t: Vec<f64>,
    pub p00: Vec<f64>,
    pub p01: Vec<f64>,
    pub p10: Vec<f64>,
    pub p11: Vec<f64>,
    pub epsilon: f64,
    /// Summands used for `p₀₀` at each point.
    pub terms_used: Vec<usize>,
    /// Summands used for `p₁₁` at each point.
    pub terms_used_nlos: Vec<usize>,
}

/// Linear interpolation of a sampled CDF at `t` (right-continuous).
fn value_at(s: &SampledCdf, t: f64) -> f64 {
    let pos = t / s.step;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if frac < 1e-9 {
        return s.right_at(k);
    }
    if frac > 1.0 - 1e-9 {
        return s.right_at(k + 1);
    }
    s.right_at(k) + frac * (s.left_at(k + 1) - s.right_at(k))
}

/// Running state of one truncated series at one `Δt`.
#[derive(Debug, Clone, Copy)]
struct Series {
    value: f64,
    terms: usize,
    open: bool,
}

impl Series {
    fn push(&mut self, summand: f64, tail_bound: f64, eps: f64) {
        if !self.open {
            return;
        }
        if summand < eps && tail_bound < eps {
            self.open = false;
        } else {
            self.value += summand;
            self.terms += 1;
        }
    }
}

/// Runs the chain seeded by `seed` and alternating `first`, `second`.
/// Returns (stay, leave) series per point.
fn run_chain(
    seed: &SampledCdf,
    first: &SampledCdf,
    second: &SampledCdf,
    delta_t: &[f64],
    n: usize,
    opts: &ConditionalOptions,
) -> Result<Vec<(Series, Series)>> {
    // Each row is the sum of two series truncated from below; half the
    // budget each keeps the row sums within ε of one.
    let eps = opts.epsilon / 2.0;
    let mut state: Vec<(Series, Series)> = delta_t
        .iter()
        .map(|&t| {
            (
                Series {
                    value: 1.0 - value_at(seed, t),
                    terms: 1,
                    open: true,
                },
                Series {
                    value: 0.0,
                    terms: 0,
                    open: true,
                },
            )
        })
        .collect();
    let mut prev = seed.clone();
    for _ in 1..=opts.max_terms {
        if state.iter().all(|(s, l)| !s.open && !l.open) {
            return Ok(state);
        }
        let d = convolve_sampled(&prev, first, n);
        let c = convolve_sampled(&d, second, n);
        for (k, &t) in delta_t.iter().enumerate() {
            let (cp, dv, cv) = (value_at(&prev, t), value_at(&d, t), value_at(&c, t));
            let (stay, leave) = &mut state[k];
            stay.push(dv - cv, dv, eps);
            leave.push(cp - dv, cp, eps);
        }
        prev = c;
    }
    if state.iter().all(|(s, l)| !s.open && !l.open) {
        return Ok(state);
    }
    Err(BlockageError::NumericalFailure {
        stage: "conditional series truncation",
        iterations: opts.max_terms,
        last_change: state.iter().map(|(s, _)| s.value).fold(0.0, f64::max),
    })
}

/// Conditional probabilities on a set of lags.
pub fn conditional_curve(
    model: &RenewalModel,
    delta_t: &[f64],
    opts: &ConditionalOptions,
) -> Result<ConditionalCurve> {
    if !(opts.epsilon > 0.0) {
        return Err(BlockageError::param("epsilon", "must be > 0"));
    }
    if delta_t.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(BlockageError::param(
            "delta_t",
            "lags must be finite and >= 0",
        ));
    }
    let t_max = delta_t.iter().cloned().fold(0.0, f64::max);
    let base = model.step();
    let needed = (t_max / base).ceil() as usize + 2;
    let factor = needed.div_ceil(opts.max_nodes.max(2)).max(1);
    let step = base * factor as f64;
    let n = (t_max / step).ceil() as usize + 2;

    let lambda = model.lambda;
    let omega = SampledCdf::from_fn(step, n, |x| -(-lambda * x).exp_m1());
    let eta = SampledCdf::from_table(&model.f_eta, step, n);
    let resid_eta = SampledCdf::from_table(&model.residual_blocked()?, step, n);

    let (from_los, from_nlos) = rayon::join(
        || run_chain(&omega, &eta, &omega, delta_t, n, opts),
        || run_chain(&resid_eta, &omega, &eta, delta_t, n, opts),
    );
    let (from_los, from_nlos) = (from_los?, from_nlos?);
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    Ok(ConditionalCurve {
        delta_t: delta_t.to_vec(),
        p00: from_los.iter().map(|(s, _)| clamp(s.value)).collect(),
        p01: from_los.iter().map(|(_, l)| clamp(l.value)).collect(),
        p11: from_nlos.iter().map(|(s, _)| clamp(s.value)).collect(),
        p10: from_nlos.iter().map(|(_, l)| clamp(l.value)).collect(),
        epsilon: opts.epsilon,
        terms_used: from_los.iter().map(|(s, _)| s.terms).collect(),
        terms_used_nlos: from_nlos.iter().map(|(s, _)| s.terms).collect(),
    })
}

/// `(p₀₀, p₀₁, terms)` at a single lag.
pub fn conditional_from_los(
    model: &RenewalModel,
    delta_t: f64,
    epsilon: f64,
) -> Result<(f64, f64, usize)> {
    let opts = ConditionalOptions {
        epsilon,
        ..ConditionalOptions::default()
    };
    let c = conditional_curve(model, &[delta_t], &opts)?;
    Ok((c.p00[0], c.p01[0], c.terms_used[0]))
}

/// `(p₁₀, p₁₁, terms)` at a single lag.
pub fn conditional_from_nlos(
    model: &RenewalModel,
    delta_t: f64,
    epsilon: f64,
) -> Result<(f64, f64, usize)> {
    let opts = ConditionalOptions {
        epsilon,
        ..ConditionalOptions::default()
    };
    let c = conditional_curve(model, &[delta_t], &opts)?;
    Ok((c.p10[0], c.p11[0], c.terms_used_nlos[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{nonblocked_cdf_with_step, ModelOptions};
    use crate::residence::ScenarioConfig;
    use approx::assert_abs_diff_eq;

    #[test]
    fn point_masses_add() {
        let a = DistributionTable::point_mass(1.0).unwrap();
        let b = DistributionTable::point_mass(2.0).unwrap();
        let c = convolve(&a, &b).unwrap();
        assert_abs_diff_eq!(c.eval_left(3.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.eval(3.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.mean(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn exponentials_add_to_erlang() {
        let lambda = 1.5;
        let e = nonblocked_cdf_with_step(lambda, 1e-3).unwrap();
        let c = convolve(&e, &e).unwrap();
        let mut worst: f64 = 0.0;
        for &x in c.grid().iter().step_by(37) {
            let erlang = 1.0 - (-lambda * x).exp() * (1.0 + lambda * x);
            worst = worst.max((c.eval(x) - erlang).abs());
        }
        assert!(worst < 1e-3, "sup error {worst}");
    }

    #[test]
    fn mismatched_lattices_are_rejected() {
        let a = DistributionTable::from_uniform_fn(1.0, 3, vec![], |x| x).unwrap();
        let b = DistributionTable::from_uniform_fn(1.0, 7, vec![], |x| x).unwrap();
        assert!(matches!(
            convolve(&a, &b),
            Err(BlockageError::GridMismatch(_))
        ));
    }

    #[test]
    fn convolution_preserves_means() {
        let m = RenewalModel::build(&ScenarioConfig::default(), &ModelOptions::default()).unwrap();
        let w = m.nonblocked().unwrap();
        let s = convolve(&m.f_eta, &w).unwrap();
        assert!((s.mean() - (m.f_eta.mean() + w.mean())).abs() < 1e-3);
    }

    #[test]
    fn zero_lag_is_identity() {
        let m = RenewalModel::build(&ScenarioConfig::default(), &ModelOptions::default()).unwrap();
        let c = conditional_curve(&m, &[0.0], &ConditionalOptions::default()).unwrap();
        assert_eq!(c.p00[0], 1.0);
        assert_eq!(c.p01[0], 0.0);
        assert_eq!(c.p11[0], 1.0);
        assert_eq!(c.p10[0], 0.0);
    }

    #[test]
    fn rows_are_stochastic_and_balanced() {
        let m = RenewalModel::build(&ScenarioConfig::default(), &ModelOptions::default()).unwrap();
        let lags = [0.05, 0.2, 0.5, 1.0, 2.0, 4.0];
        let c = conditional_curve(&m, &lags, &ConditionalOptions::default()).unwrap();
        for (k, lag) in lags.iter().enumerate() {
            assert!(
                (c.p00[k] + c.p01[k] - 1.0).abs() <= c.epsilon,
                "row 0 at {lag}"
            );
            assert!(
                (c.p10[k] + c.p11[k] - 1.0).abs() <= c.epsilon,
                "row 1 at {lag}"
            );
            let balance = m.frac_los * c.p01[k] - m.frac_nlos * c.p10[k];
            assert!(balance.abs() < 2e-3, "balance {balance} at {lag}");
        }
    }
}
