//! Tabulated one-dimensional distributions.
//!
//! A [`DistributionTable`] stores a right-continuous CDF on a strictly
//! increasing grid together with an explicit list of atoms. Every atom sits
//! on a grid node, so the left limit at each node is `cdf - atom mass` and
//! the table is linear between the right limit at one node and the left
//! limit at the next. This is the common currency between the residence,
//! renewal, conditional and simulator modules.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{BlockageError, Result};

/// Numerical slack accepted when validating a table.
const TABLE_TOL: f64 = 1e-9;

/// A point mass of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    grid: Vec<f64>,
    cdf: Vec<f64>,
    cdf_left: Vec<f64>,
    atoms: Vec<Atom>,
    support_max: f64,
}

impl DistributionTable {
    /// Builds a table from a grid, right-continuous CDF values and atoms.
    ///
    /// Atoms must coincide with grid nodes (relative tolerance 1e-9).
    pub fn new(grid: Vec<f64>, cdf: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        if grid.is_empty() || grid.len() != cdf.len() {
            return Err(BlockageError::InvalidTable(format!(
                "grid has {} nodes but cdf has {} values",
                grid.len(),
                cdf.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(BlockageError::InvalidTable(
                "grid must be finite and strictly increasing".into(),
            ));
        }
        let mut jumps = vec![0.0; grid.len()];
        let mut total = 0.0;
        for atom in &atoms {
            if !(atom.mass > 0.0 && atom.mass <= 1.0 + TABLE_TOL) {
                return Err(BlockageError::InvalidTable(format!(
                    "atom mass {} outside (0, 1]",
                    atom.mass
                )));
            }
            let idx = node_index(&grid, atom.location).ok_or_else(|| {
                BlockageError::InvalidTable(format!(
                    "atom at {} does not sit on a grid node",
                    atom.location
                ))
            })?;
            jumps[idx] += atom.mass;
            total += atom.mass;
        }
        if total > 1.0 + TABLE_TOL {
            return Err(BlockageError::InvalidTable(format!(
                "atom masses sum to {total}"
            )));
        }
        let last = *cdf.last().unwrap();
        if (last - 1.0).abs() > TABLE_TOL {
            return Err(BlockageError::InvalidTable(format!(
                "cdf ends at {last}, expected 1"
            )));
        }
        let cdf_left: Vec<f64> = cdf.iter().zip(&jumps).map(|(c, j)| c - j).collect();
        if cdf_left[0] < -TABLE_TOL {
            return Err(BlockageError::InvalidTable("negative cdf".into()));
        }
        for i in 0..grid.len() {
            if cdf_left[i] > cdf[i] + TABLE_TOL || cdf[i] > 1.0 + TABLE_TOL {
                return Err(BlockageError::InvalidTable(format!(
                    "cdf not a distribution at node {i}"
                )));
            }
            if i > 0 && cdf_left[i] + TABLE_TOL < cdf[i - 1] {
                return Err(BlockageError::InvalidTable(format!(
                    "cdf decreasing at node {i}"
                )));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let support_max = *grid.last().unwrap();
        Ok(Self {
            grid,
            cdf,
            cdf_left,
            atoms,
            support_max,
        })
    }

    /// A degenerate distribution concentrated at `location >= 0`.
    pub fn point_mass(location: f64) -> Result<Self> {
        if !(location >= 0.0) || !location.is_finite() {
            return Err(BlockageError::param("location", "must be finite and >= 0"));
        }
        let atom = vec![Atom {
            location,
            mass: 1.0,
        }];
        if location == 0.0 {
            Self::new(vec![0.0], vec![1.0], atom)
        } else {
            Self::new(vec![0.0, location], vec![0.0, 1.0], atom)
        }
    }

    /// Tabulates a right-continuous CDF on `n_intervals + 1` uniform nodes of
    /// `[0, support_max]`. Values are clamped to `[0, 1]` and made monotone
    /// to absorb round-off; the last node is forced to 1.
    pub(crate) fn from_uniform_fn(
        support_max: f64,
        n_intervals: usize,
        atoms: Vec<Atom>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let n = n_intervals.max(1);
        let h = support_max / n as f64;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let mut cdf: Vec<f64> = grid.iter().map(|&x| f(x).clamp(0.0, 1.0)).collect();
        cdf[n] = 1.0;
        let mut atoms = atoms;
        for a in &mut atoms {
            // Snap to the node; callers place atoms at nodes by construction.
            let idx = ((a.location / h).round() as usize).min(n);
            a.location = grid[idx];
        }
        Self::new(grid, cdf, atoms).map(|t| t.repaired())
    }

    /// Empirical distribution of a sample. Every distinct value is an atom.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(BlockageError::param("samples", "empty sample"));
        }
        let mut sorted: Vec<f64> = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut grid = Vec::new();
        let mut cdf = Vec::new();
        let mut atoms = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let v = sorted[i];
            let mut j = i;
            while j < sorted.len() && sorted[j] == v {
                j += 1;
            }
            grid.push(v);
            cdf.push(j as f64 / n);
            atoms.push(Atom {
                location: v,
                mass: (j - i) as f64 / n,
            });
            i = j;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Self::new(grid, cdf, atoms)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Right-continuous CDF values at the grid nodes.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Left limits of the CDF at the grid nodes.
    pub fn cdf_left(&self) -> &[f64] {
        &self.cdf_left
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn support_max(&self) -> f64 {
        self.support_max
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Step of the grid if it is uniform and starts at zero.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.grid[0] != 0.0 {
            return None;
        }
        if self.grid.len() == 1 {
            return None;
        }
        let h = self.support_max / (self.grid.len() - 1) as f64;
        let uniform = self
            .grid
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - i as f64 * h).abs() <= 1e-9 * self.support_max.max(1.0));
        uniform.then_some(h)
    }

    /// `F(x)`, right-continuous.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_inner(x, false)
    }

    /// `F(x-)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        self.eval_inner(x, true)
    }

    fn eval_inner(&self, x: f64, left: bool) -> f64 {
        let g = &self.grid;
        if x < g[0] {
            return self.cdf_left[0];
        }
        if x > self.support_max {
            return self.cdf[g.len() - 1];
        }
        // First node strictly greater than x.
        let k = g.partition_point(|&v| v <= x);
        let i = k - 1;
        if g[i] == x {
            return if left { self.cdf_left[i] } else { self.cdf[i] };
        }
        if k == g.len() {
            return self.cdf[i];
        }
        let t = (x - g[i]) / (g[k] - g[i]);
        self.cdf[i] + t * (self.cdf_left[k] - self.cdf[i])
    }

    /// Smallest `x` with `F(x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let g = &self.grid;
        if p <= self.cdf_left[0] {
            return g[0];
        }
        // First node whose right value reaches p.
        let k = self.cdf.partition_point(|&c| c < p);
        if k == 0 {
            return g[0];
        }
        if k >= g.len() {
            return self.support_max;
        }
        // Inside the cell (k-1, k) or at the jump at node k.
        if p >= self.cdf_left[k] {
            return g[k];
        }
        let lo = self.cdf[k - 1];
        let hi = self.cdf_left[k];
        if hi <= lo {
            return g[k - 1];
        }
        g[k - 1] + (p - lo) / (hi - lo) * (g[k] - g[k - 1])
    }

    /// Mean of a non-negative distribution: `grid[0] * (1 - F(grid[0]-))`
    /// plus the integral of the survival function, exact for the
    /// piecewise-linear-plus-atoms representation.
    pub fn mean(&self) -> f64 {
        let g = &self.grid;
        let mut acc = g[0].max(0.0) * (1.0 - self.cdf_left[0]);
        for i in 0..g.len() - 1 {
            let h = g[i + 1] - g[i];
            acc += h * (1.0 - 0.5 * (self.cdf[i] + self.cdf_left[i + 1]));
        }
        acc
    }

    /// `∫₀ˣ (1 − F(y)) dy` for a distribution supported on `[0, ∞)`.
    pub fn survival_integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        if x <= g[0] {
            return x * (1.0 - self.cdf_left[0]);
        }
        let mut acc = g[0].max(0.0) * (1.0 - self.cdf_left[0]);
        for i in 0..g.len() - 1 {
            if x >= g[i + 1] {
                acc += (g[i + 1] - g[i]) * (1.0 - 0.5 * (self.cdf[i] + self.cdf_left[i + 1]));
            } else {
                let fx = self.eval_left(x);
                acc += (x - g[i]) * (1.0 - 0.5 * (self.cdf[i] + fx));
                return acc;
            }
        }
        acc + (x - self.support_max) * (1.0 - self.cdf[g.len() - 1])
    }

    /// Same distribution with every abscissa multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let grid: Vec<f64> = self.grid.iter().map(|x| x * factor).collect();
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location * factor,
                mass: a.mass,
            })
            .collect();
        Self {
            support_max: self.support_max * factor,
            grid,
            cdf: self.cdf.clone(),
            cdf_left: self.cdf_left.clone(),
            atoms,
        }
    }

    /// Forces exact monotonicity and the `[0, 1]` range on the interleaved
    /// sequence of left/right limits.
    fn repaired(mut self) -> Self {
        let mut run = 0.0f64;
        for i in 0..self.grid.len() {
            let jump = self.cdf[i] - self.cdf_left[i];
            run = run.max(self.cdf_left[i].clamp(0.0, 1.0));
            self.cdf_left[i] = run;
            run = run
                .max((run + jump).min(1.0))
                .max(self.cdf[i].clamp(0.0, 1.0));
            self.cdf[i] = run;
        }
        self
    }

    /// Writes the table as CSV with columns `x,cdf`; atoms go in a leading
    /// comment line `# atoms: x:mass ...`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = out;
        write!(out, "# atoms:")?;
        for a in &self.atoms {
            write!(out, " {}:{}", a.location, a.mass)?;
        }
        writeln!(out)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "cdf"])?;
        for (x, c) in self.grid.iter().zip(&self.cdf) {
            w.write_record([x.to_string(), c.to_string()])?;
        }
        w.flush()
    }
}

/// Standard E[X] of a table, see [`DistributionTable::mean`].
pub fn mean_of(table: &DistributionTable) -> f64 {
    table.mean()
}

fn node_index(grid: &[f64], x: f64) -> Option<usize> {
    let tol = 1e-9 * x.abs().max(1.0);
    let k = grid.partition_point(|&v| v < x);
    // Nearest of the two neighbours, preferring an exact hit.
    [k, k.wrapping_sub(1)]
        .into_iter()
        .filter(|&i| i < grid.len())
        .min_by(|&a, &b| (grid[a] - x).abs().total_cmp(&(grid[b] - x).abs()))
        .filter(|&i| (grid[i] - x).abs() <= tol)
}

/// Kolmogorov-Smirnov distance between a sample and a tabulated CDF.
///
/// Samples within `snap` (relative) of an atom of `table` are treated as
/// equal to the atom location, which absorbs round-off in simulated
/// durations that should coincide with an atom.
pub fn ks_distance(samples: &[f64], table: &DistributionTable, snap: f64) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let mut xs: Vec<f64> = samples
        .iter()
        .map(|&x| {
            for a in table.atoms() {
                if (x - a.location).abs() <= snap * a.location.abs().max(1.0) {
                    return a.location;
                }
            }
            x
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d
            .max((upto - table.eval(v)).abs())
            .max((below - table.eval_left(v)).abs());
        i = j;
    }
    d
}

/// A CDF sampled on a uniform grid `x_i = i * step`, keeping both one-sided
/// limits at every node. Past the last node the CDF is held constant.
#[derive(Debug, Clone)]
pub(crate) struct SampledCdf {
    pub step: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl SampledCdf {
    /// Samples `table` on `n` nodes of step `step`; atoms are snapped to the
    /// nearest node.
    pub fn from_table(table: &DistributionTable, step: f64, n: usize) -> Self {
        let mut right = vec![0.0; n];
        let mut left = vec![0.0; n];
        let mut snapped = vec![0.0; n];
        for a in table.atoms() {
            let idx = (a.location / step).round();
            if idx >= 0.0 && (idx as usize) < n {
                snapped[idx as usize] += a.mass;
            }
        }
        // Continuous part evaluated from the table with its own atoms removed.
        let atom_cdf = |x: f64| -> f64 {
            table
                .atoms()
                .iter()
                .filter(|a| a.location <= x)
                .map(|a| a.mass)
                .sum()
        };
        let mut acc_snapped = 0.0;
        for i in 0..n {
            let x = i as f64 * step;
            let cont = table.eval(x) - atom_cdf(x);
            acc_snapped += snapped[i];
            right[i] = (cont + acc_snapped).clamp(0.0, 1.0);
            left[i] = (cont + acc_snapped - snapped[i]).clamp(0.0, 1.0);
        }
        Self { step, right, left }
    }

    pub fn from_fn(step: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let right: Vec<f64> = (0..n).map(|i| f(i as f64 * step)).collect();
        Self {
            step,
            left: right.clone(),
            right,
        }
    }

    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn right_at(&self, i: usize) -> f64 {
        self.right
            .get(i)
            .copied()
            .unwrap_or_else(|| *self.right.last().unwrap())
    }

    pub fn left_at(&self, i: usize) -> f64 {
        self.left
            .get(i)
            .copied()
            .unwrap_or_else(|| *self.right.last().unwrap())
    }

    /// Converts back to a table, closing any missing tail mass with an atom
    /// at the last node.
    pub fn into_table(self) -> Result<DistributionTable> {
        self.into_table_aligned(&[])
    }

    /// As [`Self::into_table`], taking the first nodes verbatim from `prefix`
    /// (a grid of the same step) so atoms land on bit-identical locations.
    pub fn into_table_aligned(self, prefix: &[f64]) -> Result<DistributionTable> {
        let n = self.len();
        let grid: Vec<f64> = (0..n)
            .map(|i| prefix.get(i).copied().unwrap_or(i as f64 * self.step))
            .collect();
        let mut right = self.right;
        let mut left = self.left;
        let mut run = 0.0f64;
        for i in 0..n {
            left[i] = run.max(left[i].clamp(0.0, 1.0));
            run = left[i].max(right[i].clamp(0.0, 1.0));
            right[i] = run;
        }
        right[n - 1] = 1.0;
        let mut atoms = Vec::new();
        for i in 0..n {
            let m = right[i] - left[i];
            if m > 1e-14 {
                atoms.push(Atom {
                    location: grid[i],
                    mass: m,
                });
            } else {
                left[i] = right[i];
            }
        }
        let cdf = right;
        let table = DistributionTable::new(grid, cdf, atoms)?;
        Ok(table)
    }
}
