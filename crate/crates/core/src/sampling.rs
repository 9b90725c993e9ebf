//! Seeded samplers for the simulation distributions.
//!
//! Every sampler draws from a [`StreamSpec`]: a master seed plus a stream
//! index selecting one of the 2^64 independent ChaCha8 streams. A
//! replication owns one stream and consumes it sequentially, so results do
//! not depend on how replications are spread over worker threads.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{param, Result};
use crate::linalg::Matrix;

pub type StreamRng = ChaCha8Rng;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl StreamSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Row-major `rows × dim` matrix of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(j)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }
}

fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

// ---------------------------------------------------------------------------
// Pareto
// ---------------------------------------------------------------------------

/// Inverse-transform map `u ↦ u^(-γ)` of the exact Pareto law with tail
/// index `γ`.
pub fn pareto_quantile(gamma: f64, u: f64) -> f64 {
    u.powf(-gamma)
}

/// Exact Pareto(γ) draws `U^(-γ)`, `U` uniform on (0, 1).
pub fn pareto_draws<R: Rng + ?Sized>(rng: &mut R, gamma: f64, count: usize) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(param(format!(
            "Pareto tail index must be positive, got {gamma}"
        )));
    }
    if count == 0 {
        return Err(param("sample count must be at least 1"));
    }
    Ok((0..count)
        .map(|_| pareto_quantile(gamma, open_uniform(rng)))
        .collect())
}

pub fn sample_pareto(gamma: f64, count: usize, stream: &StreamSpec) -> Result<Vec<f64>> {
    pareto_draws(&mut stream.rng(), gamma, count)
}

// ---------------------------------------------------------------------------
// Orthant-restricted Cauchy
// ---------------------------------------------------------------------------

/// Unit-diagonal, symmetric, positive definite scale matrix of the
/// multivariate Cauchy law.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMatrix {
    matrix: Matrix,
    cholesky: Matrix,
}

impl ScaleMatrix {
    /// All off-diagonal entries equal to `s`.
    pub fn equicorrelated(dim: usize, s: f64) -> Result<Self> {
        if dim < 2 {
            return Err(param(format!(
                "scale matrix dimension must be >= 2, got {dim}"
            )));
        }
        let mut m = Matrix::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    m[(i, j)] = s;
                }
            }
        }
        Self::from_matrix(m)
    }

    /// Three-dimensional scale with `S₁₂ = S₁₃ = s` and `S₂₃ = r`.
    pub fn trivariate(s: f64, r: f64) -> Result<Self> {
        let mut m = Matrix::identity(3);
        for (i, j, v) in [(0, 1, s), (0, 2, s), (1, 2, r)] {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Self::from_matrix(m)
    }

    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if matrix.dim() < 2 {
            return Err(param("scale matrix dimension must be >= 2"));
        }
        if (0..matrix.dim()).any(|i| matrix[(i, i)] != 1.0) {
            return Err(param("scale matrix must have unit diagonal"));
        }
        let cholesky = matrix.cholesky().ok_or_else(|| {
            param(format!(
                "scale matrix {matrix:?} is not symmetric positive definite"
            ))
        })?;
        Ok(Self { matrix, cholesky })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

/// The d-variate Cauchy law (multivariate t with one degree of freedom)
/// conditioned on the open positive orthant, sampled by rejection.
#[derive(Debug, Clone)]
pub struct OrthantCauchy {
    scale: ScaleMatrix,
}

impl OrthantCauchy {
    /// Supports up to [`OrthantCauchy::MAX_DIM`] components.
    pub fn new(scale: ScaleMatrix) -> Result<Self> {
        if scale.dim() > Self::MAX_DIM {
            return Err(param(format!(
                "orthant Cauchy sampler supports at most {} dimensions",
                Self::MAX_DIM
            )));
        }
        Ok(Self { scale })
    }

    pub const MAX_DIM: usize = 16;

    pub fn dim(&self) -> usize {
        self.scale.dim()
    }

    /// Writes one accepted draw into `out` and returns the number of
    /// Gaussian proposals it took.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> u64 {
        let d = self.dim();
        let l = &self.scale.cholesky;
        let mut normals = [0.0f64; Self::MAX_DIM];
        let mut proposals = 0;
        loop {
            proposals += 1;
            for z in normals.iter_mut().take(d) {
                *z = rng.sample(StandardNormal);
            }
            let mut positive = true;
            for i in 0..d {
                let mut v = 0.0;
                for p in 0..=i {
                    v += l[(i, p)] * normals[p];
                }
                out[i] = v;
                positive &= v > 0.0;
            }
            if positive {
                break;
            }
        }
        // Dividing by sqrt(chi-square(1)) = |N| turns the Gaussian into a
        // Cauchy vector; the sign pattern is unaffected.
        let g: f64 = rng.sample(StandardNormal);
        let w = g.abs();
        for v in out.iter_mut().take(d) {
            *v /= w;
        }
        proposals
    }

    /// `count` draws plus the total number of proposals consumed.
    pub fn sample_counted<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
    ) -> (SampleMatrix, u64) {
        let d = self.dim();
        let mut out = SampleMatrix::with_capacity(d, count);
        let mut row = vec![0.0; d];
        let mut proposals = 0;
        for _ in 0..count {
            proposals += self.draw_into(rng, &mut row);
            out.push_row(&row);
        }
        (out, proposals)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> SampleMatrix {
        self.sample_counted(rng, count).0
    }
}

pub fn sample_orthant_cauchy(
    scale: &ScaleMatrix,
    count: usize,
    stream: &StreamSpec,
) -> Result<SampleMatrix> {
    if count == 0 {
        return Err(param("sample count must be at least 1"));
    }
    Ok(OrthantCauchy::new(scale.clone())?.sample(&mut stream.rng(), count))
}

// ---------------------------------------------------------------------------
// Positive stable and logistic
// ---------------------------------------------------------------------------

/// Positive stable law with Laplace transform `exp(-t^θ)`, `0 < θ < 1`.
///
/// Uses Kanter's representation `S = (A(U)/E)^((1-θ)/θ)` with `U` uniform on
/// (0, π) and `E` unit exponential.
#[derive(Debug, Clone, Copy)]
pub struct PositiveStable {
    theta: f64,
}

impl PositiveStable {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(param(format!(
                "stable exponent must lie in (0, 1), got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `(1-θ)·(ln A(U) - ln E)`, i.e. `θ·ln S`. Working on the log scale keeps
    /// small exponents from overflowing.
    fn theta_ln_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t = self.theta;
        let u = PI * open_uniform(rng);
        let e = unit_exponential(rng);
        let ln_a = (t / (1.0 - t)) * (t * u).sin().ln() + ((1.0 - t) * u).sin().ln()
            - (u.sin().ln()) / (1.0 - t);
        (1.0 - t) * (ln_a - e.ln())
    }

    pub fn ln_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.theta_ln_draw(rng) / self.theta
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.ln_draw(rng).exp()
    }
}

pub fn sample_positive_stable(theta: f64, count: usize, stream: &StreamSpec) -> Result<Vec<f64>> {
    let law = PositiveStable::new(theta)?;
    let mut rng = stream.rng();
    Ok((0..count).map(|_| law.draw(&mut rng)).collect())
}

/// Dependence parameter and dimension of the symmetric logistic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParam {
    theta: f64,
    dim: usize,
}

impl LogisticParam {
    /// `θ ∈ (0, 1]`: `θ = 1` is independence, `θ → 0` complete dependence.
    pub fn new(theta: f64, dim: usize) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(param(format!(
                "logistic theta must lie in (0, 1], got {theta}"
            )));
        }
        if dim < 2 {
            return Err(param(format!("logistic dimension must be >= 2, got {dim}")));
        }
        Ok(Self { theta, dim })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pairwise tail copula `R(x, y) = x + y - (x^(1/θ) + y^(1/θ))^θ`.
    pub fn tail_copula(&self, x: f64, y: f64) -> f64 {
        let t = self.theta;
        x + y - (x.powf(1.0 / t) + y.powf(1.0 / t)).powf(t)
    }
}

/// Logistic max-stable law with standard Fréchet marginals,
/// `F(x) = exp{-(Σ xᵢ^(-1/θ))^θ}`.
///
/// Draws are `Xᵢ = (S/Eᵢ)^θ` with one positive stable `S` shared across the
/// components and independent unit exponentials `Eᵢ`.
#[derive(Debug, Clone, Copy)]
pub struct Logistic {
    param: LogisticParam,
    stable: Option<PositiveStable>,
}

impl Logistic {
    pub fn new(param: LogisticParam) -> Self {
        let stable = if param.theta < 1.0 {
            Some(PositiveStable { theta: param.theta })
        } else {
            None
        };
        Self { param, stable }
    }

    pub fn dim(&self) -> usize {
        self.param.dim
    }

    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let theta = self.param.theta;
        match self.stable {
            Some(stable) => {
                let theta_ln_s = stable.theta_ln_draw(rng);
                for v in out.iter_mut().take(self.param.dim) {
                    *v = (theta_ln_s - theta * unit_exponential(rng).ln()).exp();
                }
            }
            None => {
                for v in out.iter_mut().take(self.param.dim) {
                    *v = 1.0 / unit_exponential(rng);
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> SampleMatrix {
        let d = self.dim();
        let mut out = SampleMatrix::with_capacity(d, count);
        let mut row = vec![0.0; d];
        for _ in 0..count {
            self.draw_into(rng, &mut row);
            out.push_row(&row);
        }
        out
    }
}

pub fn sample_logistic(
    logistic: LogisticParam,
    count: usize,
    stream: &StreamSpec,
) -> Result<SampleMatrix> {
    if count == 0 {
        return Err(param("sample count must be at least 1"));
    }
    Ok(Logistic::new(logistic).sample(&mut stream.rng(), count))
}
