//! Empirical tail copula and the H matrix built from it.
//!
//! Components are numbered from 0: component 0 is the variable of interest,
//! components 1..d are the related variables.

use crate::error::{param, Result};
use crate::estimators::TuningParams;
use crate::linalg::Matrix;
use crate::warning::Warning;

pub use crate::linalg::invert_matrix;

/// `⌊k·x⌋`, nudged so that products landing a few ulps below an integer
/// still floor to it.
fn scaled_count(k: usize, x: f64) -> f64 {
    (k as f64 * x * (1.0 + 4.0 * f64::EPSILON)).floor()
}

/// The j-th largest value of `values`, `1 ≤ j ≤ n`.
fn jth_largest(values: &[f64], j: usize) -> f64 {
    let mut scratch = values.to_vec();
    let idx = scratch.len() - j;
    *scratch.select_nth_unstable_by(idx, f64::total_cmp).1
}

fn joint_exceedances(xs: &[f64], ys: &[f64], x_threshold: f64, y_threshold: f64) -> usize {
    xs.iter()
        .zip(ys)
        .filter(|&(&x, &y)| x >= x_threshold && y >= y_threshold)
        .count()
}

/// Empirical tail copula
/// `R̂(x, y) = (1/k)·#{i : Xᵢ ≥ X_{n-⌊kx⌋+1,n}, Yᵢ ≥ Y_{n-⌊ky⌋+1,n}}`.
pub fn tail_copula(xs: &[f64], ys: &[f64], k: usize, x: f64, y: f64) -> Result<f64> {
    let n = xs.len();
    if ys.len() != n {
        return Err(param(format!("sample lengths differ: {n} vs {}", ys.len())));
    }
    if k == 0 {
        return Err(param("k must be at least 1"));
    }
    if !(x >= 0.0 && y >= 0.0) {
        return Err(param(format!(
            "evaluation point ({x}, {y}) must be nonnegative"
        )));
    }
    let (kx, ky) = (scaled_count(k, x), scaled_count(k, y));
    for (name, c) in [("x", kx), ("y", ky)] {
        if c < 1.0 || c > n as f64 {
            return Err(param(format!(
                "floor(k*{name}) = {c} outside 1..={n} (k = {k}, point = ({x}, {y}))"
            )));
        }
    }
    let x_thr = jth_largest(xs, kx as usize);
    let y_thr = jth_largest(ys, ky as usize);
    Ok(joint_exceedances(xs, ys, x_thr, y_thr) as f64 / k as f64)
}

/// Tail copula values for one pair of components.
///
/// The `β` points are `None` in matched mode, where they coincide with the
/// value at (1, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaPoints {
    pub at_one: f64,
    pub one_beta: Option<f64>,
    pub beta_one: Option<f64>,
}

impl CopulaPoints {
    /// Same value at every evaluation point.
    pub fn flat(r: f64) -> Self {
        Self {
            at_one: r,
            one_beta: None,
            beta_one: None,
        }
    }

    pub fn new(at_one: f64, one_beta: f64, beta_one: f64) -> Self {
        Self {
            at_one,
            one_beta: Some(one_beta),
            beta_one: Some(beta_one),
        }
    }
}

/// Pairwise tail copula values `R_ij` at (1,1), (1,β) and (β,1), together
/// with `ν²` and `β`. Used both for plug-in estimates and for exact
/// theoretical values.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCopulaTable {
    dim: usize,
    nu2: f64,
    beta: f64,
    pairs: Vec<CopulaPoints>,
}

impl TailCopulaTable {
    /// All pairs start at `R ≡ 0` (tail independence).
    pub fn new(dim: usize, nu2: f64, beta: f64) -> Result<Self> {
        if dim < 2 {
            return Err(param(format!("dimension must be >= 2, got {dim}")));
        }
        if !(nu2 > 0.0 && nu2.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(param(format!(
                "nu2 = {nu2} and beta = {beta} must be positive"
            )));
        }
        Ok(Self {
            dim,
            nu2,
            beta,
            pairs: vec![CopulaPoints::flat(0.0); dim * (dim - 1) / 2],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        assert!(
            i < j && j < self.dim,
            "pair ({i}, {j}) invalid for d = {}",
            self.dim
        );
        // row-major upper triangle without the diagonal
        i * (2 * self.dim - i - 1) / 2 + (j - i - 1)
    }

    /// Stores `R_ij`, `i < j`.
    pub fn set(&mut self, i: usize, j: usize, points: CopulaPoints) -> &mut Self {
        let s = self.slot(i, j);
        self.pairs[s] = points;
        self
    }

    pub fn points(&self, i: usize, j: usize) -> CopulaPoints {
        self.pairs[self.slot(i, j)]
    }

    /// Iterates `((i, j), points)` over all pairs `i < j`.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), CopulaPoints)> + '_ {
        let d = self.dim;
        (0..d)
            .flat_map(move |i| (i + 1..d).map(move |j| (i, j)))
            .map(|(i, j)| ((i, j), self.points(i, j)))
    }

    /// `R_ij(1, 1)` for `i ≠ j`.
    pub fn r11(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.points(a, b).at_one
    }

    /// `R_ij(1, β)` for `i ≠ j`; the argument order follows `(i, j)`.
    pub fn r1b(&self, i: usize, j: usize) -> f64 {
        if i < j {
            let p = self.points(i, j);
            p.one_beta.unwrap_or(p.at_one)
        } else {
            let p = self.points(j, i);
            p.beta_one.unwrap_or(p.at_one)
        }
    }

    /// `R_ij(β, 1)` for `i ≠ j`.
    pub fn rb1(&self, i: usize, j: usize) -> f64 {
        self.r1b(j, i)
    }

    /// Largest tail copula value stored across all pairs and points.
    pub fn max_value(&self) -> f64 {
        self.pairs
            .iter()
            .flat_map(|p| [Some(p.at_one), p.one_beta, p.beta_one])
            .flatten()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Plug-in tail copula estimates for the H matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TailDependenceSet {
    pub table: TailCopulaTable,
    pub matched: bool,
    pub warnings: Vec<Warning>,
}

/// Estimates every `R̂_ij` the H matrix needs from `columns` (component 0
/// first, each holding the n joint observations).
pub fn tail_dependence_set(
    columns: &[Vec<f64>],
    tuning: &TuningParams,
) -> Result<TailDependenceSet> {
    let d = columns.len();
    if d < 2 {
        return Err(param(format!("need at least 2 columns, got {d}")));
    }
    let n = columns[0].len();
    if let Some(bad) = columns.iter().position(|c| c.len() != n) {
        return Err(param(format!(
            "column {bad} has {} rows, expected {n}",
            columns[bad].len()
        )));
    }
    if tuning.n() != n {
        return Err(param(format!(
            "tuning was built for n = {} but data has n = {n}",
            tuning.n()
        )));
    }
    let k = tuning.k();
    if k > n {
        return Err(param(format!("k = {k} exceeds n = {n}")));
    }
    let matched = tuning.is_matched();
    let beta = tuning.beta_hat();
    let beta_count = tuning.beta_count();

    let mut warnings = Vec::new();
    if beta > 1.0 {
        warnings.push(Warning::BetaAboveOne(beta));
    }
    if !matched && (beta_count < 1 || beta_count > n) {
        return Err(param(format!(
            "floor(k*beta_hat) = {beta_count} outside 1..={n} for every pair (first offending pair: (1, 2))"
        )));
    }

    let thresholds: Vec<(f64, f64)> = columns
        .iter()
        .map(|c| {
            let at_k = jth_largest(c, k);
            let at_beta = if matched {
                at_k
            } else {
                jth_largest(c, beta_count)
            };
            (at_k, at_beta)
        })
        .collect();

    let mut table = TailCopulaTable::new(d, tuning.nu2(), beta)?;
    let kf = k as f64;
    for i in 0..d {
        for j in i + 1..d {
            let (xi, yj) = (&columns[i], &columns[j]);
            let (ti, tj) = (thresholds[i], thresholds[j]);
            let at_one = joint_exceedances(xi, yj, ti.0, tj.0) as f64 / kf;
            let points = if matched {
                CopulaPoints::flat(at_one)
            } else {
                CopulaPoints::new(
                    at_one,
                    joint_exceedances(xi, yj, ti.0, tj.1) as f64 / kf,
                    joint_exceedances(xi, yj, ti.1, tj.0) as f64 / kf,
                )
            };
            table.set(i, j, points);
        }
    }
    Ok(TailDependenceSet {
        table,
        matched,
        warnings,
    })
}

/// Assembles H: `H₁₁ = 1`, `Hᵢᵢ = 1 + ν² - 2ν²β`,
/// `H₁ᵢ = ν²R₁ᵢ(1,β) - R₁ᵢ(1,1)` and
/// `Hᵢⱼ = (1+ν²)Rᵢⱼ(1,1) - ν²(Rᵢⱼ(1,β) + Rᵢⱼ(β,1))`.
pub fn build_h(table: &TailCopulaTable) -> Matrix {
    let d = table.dim();
    let nu2 = table.nu2();
    let beta = table.beta();
    let mut h = Matrix::identity(d);
    let diag = 1.0 + nu2 - 2.0 * nu2 * beta;
    for i in 1..d {
        h[(i, i)] = diag;
    }
    for j in 1..d {
        let v = nu2 * table.r1b(0, j) - table.r11(0, j);
        h[(0, j)] = v;
        h[(j, 0)] = v;
    }
    for i in 1..d {
        for j in i + 1..d {
            let v = (1.0 + nu2) * table.r11(i, j) - nu2 * (table.r1b(i, j) + table.rb1(i, j));
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}
