//! Limiting covariance, variance, bias and variance-reduction formulas for
//! the Hill and adapted Hill estimators, evaluated at exact (theoretical)
//! parameter values.

use crate::error::{param, Error, Result};
use crate::linalg::{invert_matrix, Matrix};
use crate::tail_dependence::{build_h, TailCopulaTable};

/// Extreme value indices `γ₁..γ_d` with the tail copula values, `ν²` and
/// `β` of the limit theory.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    gammas: Vec<f64>,
    table: TailCopulaTable,
}

impl TheoryParams {
    /// Requires positive gammas, `ν² ∈ (0,1)`, `β ∈ (0,1]` and every tail
    /// copula value in `[0, min(arguments)]`. Joint coherence of the values
    /// as one tail copula family is not checked.
    pub fn new(gammas: Vec<f64>, table: TailCopulaTable) -> Result<Self> {
        if gammas.len() != table.dim() {
            return Err(param(format!(
                "{} gammas for a {}-dimensional table",
                gammas.len(),
                table.dim()
            )));
        }
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(param(format!(
                "extreme value indices must be positive, got {g}"
            )));
        }
        let (nu2, beta) = (table.nu2(), table.beta());
        if !(nu2 > 0.0 && nu2 < 1.0) {
            return Err(param(format!("nu^2 must lie in (0, 1), got {nu2}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(param(format!("beta must lie in (0, 1], got {beta}")));
        }
        for ((i, j), p) in table.iter() {
            let checks = [
                (p.at_one, 1.0, "(1,1)"),
                (p.one_beta.unwrap_or(p.at_one), beta, "(1,beta)"),
                (p.beta_one.unwrap_or(p.at_one), beta, "(beta,1)"),
            ];
            for (v, cap, at) in checks {
                if !(0.0..=cap).contains(&v) {
                    return Err(param(format!(
                        "R_{}{}{at} = {v} outside [0, {cap}]",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { gammas, table })
    }

    pub fn dim(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn table(&self) -> &TailCopulaTable {
        &self.table
    }

    pub fn nu2(&self) -> f64 {
        self.table.nu2()
    }

    pub fn beta(&self) -> f64 {
        self.table.beta()
    }

    /// Same parameters with `γ₁` replaced.
    pub fn with_gamma1(&self, gamma1: f64) -> Result<Self> {
        let mut gammas = self.gammas.clone();
        gammas[0] = gamma1;
        Self::new(gammas, self.table.clone())
    }

    fn h_inverse(&self) -> Result<Matrix> {
        invert_matrix(&build_h(&self.table))
    }
}

/// Second-order constants `λⱼ = lim √k·Aⱼ(n/k)` and indices `ρⱼ ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderParams {
    lambdas: Vec<f64>,
    rhos: Vec<f64>,
}

impl SecondOrderParams {
    pub fn new(lambdas: Vec<f64>, rhos: Vec<f64>) -> Result<Self> {
        if lambdas.len() != rhos.len() {
            return Err(param("lambdas and rhos must have equal length"));
        }
        if let Some(r) = rhos.iter().find(|r| !(**r <= 0.0)) {
            return Err(param(format!("second-order indices must be <= 0, got {r}")));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(param("lambdas must be finite"));
        }
        Ok(Self { lambdas, rhos })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rhos
    }
}

#[derive(Clone, Copy)]
enum Slot {
    /// Hill estimator of component p from the n joint observations.
    Joint(usize),
    /// Hill estimator of related component p from all n + m observations.
    Plus(usize),
}

fn slot(index: usize) -> Slot {
    if index == 0 {
        Slot::Joint(0)
    } else if index % 2 == 1 {
        Slot::Joint(index.div_ceil(2))
    } else {
        Slot::Plus(index / 2)
    }
}

/// Limiting covariance of
/// `(√k(γ̂₁-γ₁), √k(γ̂₂-γ₂), √k₊(γ̂₂₊-γ₂), …, √k(γ̂_d-γ_d), √k₊(γ̂_d₊-γ_d))`.
pub fn hill_covariance(params: &TheoryParams) -> Matrix {
    let d = params.dim();
    let t = params.table();
    let g = params.gammas();
    let nu = params.nu2().sqrt();
    let beta = params.beta();
    let size = 2 * d - 1;
    let mut out = Matrix::zeros(size);
    for a in 0..size {
        for b in 0..size {
            out[(a, b)] = match (slot(a), slot(b)) {
                (Slot::Joint(p), Slot::Joint(q)) | (Slot::Plus(p), Slot::Plus(q)) if p == q => {
                    g[p] * g[p]
                }
                (Slot::Joint(p), Slot::Plus(q)) | (Slot::Plus(q), Slot::Joint(p)) if p == q => {
                    nu * beta * g[p] * g[p]
                }
                (Slot::Joint(p), Slot::Joint(q)) | (Slot::Plus(p), Slot::Plus(q)) => {
                    t.r11(p, q) * g[p] * g[q]
                }
                (Slot::Joint(p), Slot::Plus(q)) | (Slot::Plus(q), Slot::Joint(p)) => {
                    nu * t.r1b(p, q) * g[p] * g[q]
                }
            };
        }
    }
    out
}

/// `Σ_d = ΓΓᵀ ∘ H`, the limiting covariance of
/// `(√k(γ̂₁-γ₁), √k(γ̂₂₊-γ̂₂), …, √k(γ̂_d₊-γ̂_d))`.
pub fn update_covariance(params: &TheoryParams) -> Matrix {
    let d = params.dim();
    let g = params.gammas();
    let mut outer = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            outer[(i, j)] = g[i] * g[j];
        }
    }
    outer
        .hadamard(&build_h(params.table()))
        .expect("dimensions agree")
}

/// `γ₁²[1 - (R(1,1) - ν²R(1,β))²/(1 + ν² - 2ν²β)]` for d = 2.
pub fn asymp_variance_bivariate(params: &TheoryParams) -> Result<f64> {
    if params.dim() != 2 {
        return Err(param(format!(
            "bivariate variance needs d = 2, got {}",
            params.dim()
        )));
    }
    let (nu2, beta) = (params.nu2(), params.beta());
    let denominator = 1.0 + nu2 - 2.0 * nu2 * beta;
    if !(denominator > 0.0) {
        return Err(param(format!(
            "1 + nu^2 - 2 nu^2 beta = {denominator} is not positive"
        )));
    }
    let t = params.table();
    let c = t.r11(0, 1) - nu2 * t.r1b(0, 1);
    let g1 = params.gammas()[0];
    Ok(g1 * g1 * (1.0 - c * c / denominator))
}

/// Limiting variance of the adapted estimator for general d, evaluated term
/// by term from the first row of `H⁻¹`:
///
/// `σ² = γ₁²(1 - [2u₁Σⱼuⱼ(R₁ⱼ(1,1) - ν²R₁ⱼ(1,β)) - hΣⱼuⱼ² - 2Σ_{i<j}hᵢⱼuᵢuⱼ]/u₁²)`
///
/// with `uⱼ = H⁻¹₁ⱼ`, `h = 1 + ν² - 2ν²β` and `hᵢⱼ` the H entries.
pub fn asymp_variance_multivariate(params: &TheoryParams) -> Result<f64> {
    let h_inv = params.h_inverse()?;
    let d = params.dim();
    let t = params.table();
    let (nu2, beta) = (params.nu2(), params.beta());
    let u = h_inv.row(0);
    let u1 = u[0];

    let cross: f64 = (1..d)
        .map(|j| u[j] * (t.r11(0, j) - nu2 * t.r1b(0, j)))
        .sum();
    let squares: f64 = (1..d).map(|j| u[j] * u[j]).sum();
    let mut pairs = 0.0;
    for i in 1..d {
        for j in i + 1..d {
            let hij = (1.0 + nu2) * t.r11(i, j) - nu2 * (t.r1b(i, j) + t.rb1(i, j));
            pairs += hij * u[i] * u[j];
        }
    }
    let bracket = 2.0 * u1 * cross - (1.0 + nu2 - 2.0 * nu2 * beta) * squares - 2.0 * pairs;
    let g1 = params.gammas()[0];
    Ok(g1 * g1 * (1.0 - bracket / (u1 * u1)))
}

/// Weights `a = (1, (γ₁/γⱼ)·H⁻¹₁ⱼ/H⁻¹₁₁)` of the adapted estimator's
/// limiting linear combination.
pub fn adapted_weights(params: &TheoryParams) -> Result<Vec<f64>> {
    let h_inv = params.h_inverse()?;
    let g = params.gammas();
    Ok((0..params.dim())
        .map(|j| {
            if j == 0 {
                1.0
            } else {
                (g[0] / g[j]) * h_inv[(0, j)] / h_inv[(0, 0)]
            }
        })
        .collect())
}

/// `aᵀ Σ_d a`: the adapted estimator's limiting variance through the
/// covariance of the Hill-estimate differences.
pub fn asymp_variance_quadratic_form(params: &TheoryParams) -> Result<f64> {
    let a = adapted_weights(params)?;
    Ok(update_covariance(params).quadratic_form(&a))
}

/// Limiting mean of `√k(γ̂_adapted - γ₁)`:
/// `λ₁/(1-ρ₁) + Σⱼ (γ₁/γⱼ)(H⁻¹₁ⱼ/H⁻¹₁₁)·λⱼ(β^(-ρⱼ) - 1)/(1-ρⱼ)`.
pub fn asymp_bias(params: &TheoryParams, second_order: &SecondOrderParams) -> Result<f64> {
    let d = params.dim();
    if second_order.lambdas.len() != d {
        return Err(param(format!(
            "{} second-order constants for d = {d}",
            second_order.lambdas.len()
        )));
    }
    let a = adapted_weights(params)?;
    let beta = params.beta();
    let (l, r) = (&second_order.lambdas, &second_order.rhos);
    let mut bias = l[0] / (1.0 - r[0]);
    for j in 1..d {
        bias += a[j] * l[j] * (beta.powf(-r[j]) - 1.0) / (1.0 - r[j]);
    }
    Ok(bias)
}

/// Hill estimator's limiting bias `λ₁/(1-ρ₁)`.
pub fn hill_bias(second_order: &SecondOrderParams) -> Result<f64> {
    match (second_order.lambdas.first(), second_order.rhos.first()) {
        (Some(l), Some(r)) => Ok(l / (1.0 - r)),
        _ => Err(Error::Parameter("no second-order constants given".into())),
    }
}

/// Relative variance reduction `1 - σ²/γ₁²` of the adapted estimator.
pub fn variance_reduction(params: &TheoryParams) -> Result<f64> {
    let g1 = params.gammas()[0];
    Ok(1.0 - asymp_variance_multivariate(params)? / (g1 * g1))
}

/// Matched (β = 1) bivariate reduction `(1-ν²)R²(1,1)`.
pub fn matched_reduction_bivariate(nu2: f64, r: f64) -> f64 {
    (1.0 - nu2) * r * r
}

/// Matched (β = 1) trivariate reduction
/// `(1-ν²)(R₁₂² + R₁₃² - 2R₁₂R₁₃R₂₃)/(1 - R₂₃²)`.
pub fn matched_reduction_trivariate(nu2: f64, r12: f64, r13: f64, r23: f64) -> f64 {
    (1.0 - nu2) * (r12 * r12 + r13 * r13 - 2.0 * r12 * r13 * r23) / (1.0 - r23 * r23)
}
