use crate::error::{param, Result};
use crate::sampling::SampleMatrix;

/// n joint observations of `(X, Y₂, …, Y_d)` plus m further observations of
/// the related variables `(Y₂, …, Y_d)` alone.
///
/// Related variables are stored column-wise: `related[j]` holds the joint
/// observations of `Y_{j+2}` and `related_extra[j]` its extra observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    related: Vec<Vec<f64>>,
    related_extra: Vec<Vec<f64>>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, related: Vec<Vec<f64>>, related_extra: Vec<Vec<f64>>) -> Result<Self> {
        let n = x.len();
        if n < 3 {
            return Err(param(format!(
                "need at least 3 joint observations, got {n}"
            )));
        }
        if related.is_empty() {
            return Err(param("need at least one related variable"));
        }
        if related_extra.len() != related.len() {
            return Err(param(format!(
                "{} related columns but {} extra columns",
                related.len(),
                related_extra.len()
            )));
        }
        if let Some(j) = related.iter().position(|c| c.len() != n) {
            return Err(param(format!(
                "related column {} has {} joint rows, expected {n}",
                j + 2,
                related[j].len()
            )));
        }
        let m = related_extra[0].len();
        if let Some(j) = related_extra.iter().position(|c| c.len() != m) {
            return Err(param(format!(
                "extra column {} has {} rows, expected {m}",
                j + 2,
                related_extra[j].len()
            )));
        }
        let all_finite = x
            .iter()
            .chain(related.iter().flatten())
            .chain(related_extra.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(param("sample contains non-finite values"));
        }
        Ok(Self {
            x,
            related,
            related_extra,
        })
    }

    /// Splits simulated draws: `joint` rows are `(X, Y₂, …, Y_d)`; only the
    /// last d-1 components of the `extra` rows are kept.
    pub fn from_draws(joint: &SampleMatrix, extra: &SampleMatrix) -> Result<Self> {
        let d = joint.dim();
        if extra.dim() != d || d < 2 {
            return Err(param("joint and extra draws must share a dimension >= 2"));
        }
        let x = joint.column(0);
        let related = (1..d).map(|j| joint.column(j)).collect();
        let related_extra = (1..d).map(|j| extra.column(j)).collect();
        Self::new(x, related, related_extra)
    }

    /// Number of joint observations.
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Number of related-only observations.
    pub fn m(&self) -> usize {
        self.related_extra[0].len()
    }

    /// Total dimension d (variable of interest plus related variables).
    pub fn d(&self) -> usize {
        self.related.len() + 1
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Joint observations of related variable `j ∈ 0..d-1` (i.e. `Y_{j+2}`).
    pub fn related(&self, j: usize) -> &[f64] {
        &self.related[j]
    }

    pub fn related_extra(&self, j: usize) -> &[f64] {
        &self.related_extra[j]
    }

    /// All n + m observations of related variable `j`.
    pub fn related_all(&self, j: usize) -> Vec<f64> {
        let mut all = Vec::with_capacity(self.n() + self.m());
        all.extend_from_slice(&self.related[j]);
        all.extend_from_slice(&self.related_extra[j]);
        all
    }

    /// Joint columns `(X, Y₂, …, Y_d)`.
    pub fn joint_columns(&self) -> Vec<Vec<f64>> {
        std::iter::once(self.x.clone())
            .chain(self.related.iter().cloned())
            .collect()
    }

    /// Keeps the variable of interest and the listed related variables.
    pub fn select_related(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() || keep.iter().any(|&j| j >= self.related.len()) {
            return Err(param(format!(
                "invalid related-variable selection {keep:?}"
            )));
        }
        Self::new(
            self.x.clone(),
            keep.iter().map(|&j| self.related[j].clone()).collect(),
            keep.iter()
                .map(|&j| self.related_extra[j].clone())
                .collect(),
        )
    }

    /// Applies `f` to every related-variable value.
    pub fn map_related(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let map = |cols: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            cols.iter()
                .map(|c| c.iter().map(|&v| f(v)).collect())
                .collect()
        };
        Self::new(self.x.clone(), map(&self.related), map(&self.related_extra))
    }
}
