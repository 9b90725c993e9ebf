//! Adapted Hill estimators of the extreme value index of the variable of
//! interest, updated with the related variables' extra observations.
//!
//! Each estimator starts from the Hill estimate `γ̂₁` and adds
//! `Σⱼ cⱼ·(γ̂ⱼ₊ - γ̂ⱼ)`, where `γ̂ⱼ` and `γ̂ⱼ₊` are Hill estimates of related
//! variable j from the n joint observations (with k) and from all n + m
//! observations (with k₊). The coefficients come from the estimated
//! tail dependence.

use crate::data::PairedSample;
use crate::error::{param, Error, Result};
use crate::estimators::{hill, order_statistics, TuningParams};
use crate::linalg::invert_matrix;
use crate::tail_dependence::{build_h, tail_dependence_set, TailCopulaTable, TailDependenceSet};
use crate::warning::Warning;

/// `γ̂ⱼ₊` below this is treated as a vanishing denominator.
pub const MIN_GAMMA_PLUS: f64 = 1e-10;

/// `|1 - R̂₂₃²|` below this makes the matched trivariate form degenerate.
pub const MIN_TRIVARIATE_DENOMINATOR: f64 = 1e-10;

/// Hill estimates entering the adapted estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct HillComponents {
    /// `γ̂₁` from the n observations of the variable of interest.
    pub gamma1: f64,
    /// `(γ̂ⱼ, γ̂ⱼ₊)` per related variable.
    pub related: Vec<(f64, f64)>,
}

impl HillComponents {
    /// Computes every Hill estimate with the shared `k` and `k₊`.
    pub fn from_sample(data: &PairedSample, tuning: &TuningParams) -> Result<Self> {
        check_tuning(data, tuning)?;
        let gamma1 = hill(&order_statistics(data.x())?, tuning.k())?;
        let related = (0..data.d() - 1)
            .map(|j| {
                let g = hill(&order_statistics(data.related(j))?, tuning.k())?;
                let g_plus = hill(&order_statistics(&data.related_all(j))?, tuning.k_plus())?;
                Ok((g, g_plus))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { gamma1, related })
    }

    fn check_gamma_plus(&self) -> Result<()> {
        for (j, &(_, gp)) in self.related.iter().enumerate() {
            if !(gp >= MIN_GAMMA_PLUS) {
                return Err(Error::DegenerateDenominator(format!(
                    "Hill estimate of related variable {} over all observations is {gp}",
                    j + 2
                )));
            }
        }
        Ok(())
    }
}

/// One related variable's contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelatedEstimate {
    pub gamma: f64,
    pub gamma_plus: f64,
    /// `cⱼ = (γ̂₁/γ̂ⱼ₊)·(Ĥ⁻¹₁ⱼ/Ĥ⁻¹₁₁)`.
    pub coefficient: f64,
}

/// Result of an adapted estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub gamma1_hill: f64,
    pub gamma_adapted: f64,
    pub related: Vec<RelatedEstimate>,
    pub tuning: TuningParams,
    /// Plug-in relative variance reduction over the Hill estimator.
    pub reduction: f64,
    /// `γ̂_adapted·√(1 - reduction)/√k`.
    pub std_error: f64,
    pub tail_dependence: TailCopulaTable,
    pub warnings: Vec<Warning>,
}

impl EstimateReport {
    /// `γ̂₁ + Σⱼ cⱼ(γ̂ⱼ₊ - γ̂ⱼ)` from the stored parts.
    pub fn reconstruct(&self) -> f64 {
        reconstruct(self.gamma1_hill, &self.related)
    }
}

fn reconstruct(gamma1: f64, related: &[RelatedEstimate]) -> f64 {
    related.iter().fold(gamma1, |acc, r| {
        acc + r.coefficient * (r.gamma_plus - r.gamma)
    })
}

fn check_tuning(data: &PairedSample, tuning: &TuningParams) -> Result<()> {
    if tuning.n() != data.n() || tuning.m() != data.m() {
        return Err(param(format!(
            "tuning built for (n, m) = ({}, {}) but sample has ({}, {})",
            tuning.n(),
            tuning.m(),
            data.n(),
            data.m()
        )));
    }
    Ok(())
}

fn check_dims(
    components: &HillComponents,
    table: &TailCopulaTable,
    d: Option<usize>,
) -> Result<()> {
    let cd = components.related.len() + 1;
    if cd != table.dim() {
        return Err(param(format!(
            "{cd} components but tail dependence table of dimension {}",
            table.dim()
        )));
    }
    if let Some(d) = d {
        if cd != d {
            return Err(param(format!("this estimator needs d = {d}, got d = {cd}")));
        }
    }
    Ok(())
}

fn require_matched(tuning: &TuningParams) -> Result<()> {
    if !tuning.is_matched() {
        return Err(param(format!(
            "matched form needs k/k+ = n/(n+m); got k = {}, k+ = {}, n = {}, m = {}",
            tuning.k(),
            tuning.k_plus(),
            tuning.n(),
            tuning.m()
        )));
    }
    Ok(())
}

fn finish(
    components: &HillComponents,
    factors: Vec<f64>,
    reduction: f64,
    tuning: &TuningParams,
    table: &TailCopulaTable,
    mut warnings: Vec<Warning>,
) -> EstimateReport {
    let g1 = components.gamma1;
    let related: Vec<RelatedEstimate> = components
        .related
        .iter()
        .zip(factors)
        .map(|(&(gamma, gamma_plus), factor)| RelatedEstimate {
            gamma,
            gamma_plus,
            coefficient: (g1 / gamma_plus) * factor,
        })
        .collect();
    let gamma_adapted = reconstruct(g1, &related);
    if gamma_adapted < 0.0 {
        warnings.push(Warning::NegativeEstimate(gamma_adapted));
    }
    if !(0.0..=1.0).contains(&reduction) {
        warnings.push(Warning::ReductionOutOfRange(reduction));
    }
    let std_error = gamma_adapted * (1.0 - reduction).sqrt() / (tuning.k() as f64).sqrt();
    EstimateReport {
        gamma1_hill: g1,
        gamma_adapted,
        related,
        tuning: *tuning,
        reduction,
        std_error,
        tail_dependence: table.clone(),
        warnings,
    }
}

// ---------------------------------------------------------------------------
// Component-level forms
// ---------------------------------------------------------------------------

/// Bivariate form:
/// `γ̂₁ + (γ̂₁/γ̂₂₊)·[(R̂(1,1) - (k/k₊)R̂(1,β̂)) / (1 + k/k₊ - 2n/(n+m))]·(γ̂₂₊ - γ̂₂)`.
pub fn combine_bivariate(
    components: &HillComponents,
    table: &TailCopulaTable,
    tuning: &TuningParams,
) -> Result<EstimateReport> {
    check_dims(components, table, Some(2))?;
    components.check_gamma_plus()?;
    let nu2 = tuning.nu2();
    let share = tuning.n() as f64 / (tuning.n() + tuning.m()) as f64;
    let numerator = table.r11(0, 1) - nu2 * table.r1b(0, 1);
    let denominator = 1.0 + nu2 - 2.0 * share;
    if !(denominator.abs() > 0.0) {
        return Err(Error::DegenerateDenominator(format!(
            "1 + k/k+ - 2n/(n+m) = {denominator}"
        )));
    }
    let reduction = numerator * numerator / denominator;
    Ok(finish(
        components,
        vec![numerator / denominator],
        reduction,
        tuning,
        table,
        Vec::new(),
    ))
}

/// General form `γ̂₁ + Σⱼ (γ̂₁/γ̂ⱼ₊)·(Ĥ⁻¹₁ⱼ/Ĥ⁻¹₁₁)·(γ̂ⱼ₊ - γ̂ⱼ)`.
pub fn combine_multivariate(
    components: &HillComponents,
    table: &TailCopulaTable,
    tuning: &TuningParams,
) -> Result<EstimateReport> {
    check_dims(components, table, None)?;
    components.check_gamma_plus()?;
    let h_inv = invert_matrix(&build_h(table))?;
    let lead = h_inv[(0, 0)];
    let factors = (1..table.dim()).map(|j| h_inv[(0, j)] / lead).collect();
    Ok(finish(
        components,
        factors,
        1.0 - 1.0 / lead,
        tuning,
        table,
        Vec::new(),
    ))
}

/// Matched bivariate form `γ̂₁ + (γ̂₁/γ̂₂₊)·R̂(1,1)·(γ̂₂₊ - γ̂₂)`.
pub fn combine_matched_bivariate(
    components: &HillComponents,
    table: &TailCopulaTable,
    tuning: &TuningParams,
) -> Result<EstimateReport> {
    require_matched(tuning)?;
    check_dims(components, table, Some(2))?;
    components.check_gamma_plus()?;
    let r = table.r11(0, 1);
    let reduction = (1.0 - tuning.nu2()) * r * r;
    Ok(finish(
        components,
        vec![r],
        reduction,
        tuning,
        table,
        Vec::new(),
    ))
}

/// Matched trivariate form with factors
/// `(R̂₁₂ - R̂₁₃R̂₂₃)/(1 - R̂₂₃²)` and `(R̂₁₃ - R̂₁₂R̂₂₃)/(1 - R̂₂₃²)`.
pub fn combine_matched_trivariate(
    components: &HillComponents,
    table: &TailCopulaTable,
    tuning: &TuningParams,
) -> Result<EstimateReport> {
    require_matched(tuning)?;
    check_dims(components, table, Some(3))?;
    components.check_gamma_plus()?;
    let (r12, r13, r23) = (table.r11(0, 1), table.r11(0, 2), table.r11(1, 2));
    let denominator = 1.0 - r23 * r23;
    if denominator.abs() < MIN_TRIVARIATE_DENOMINATOR {
        return Err(Error::DegenerateDenominator(format!(
            "1 - R23^2 = {denominator} with R23 = {r23}"
        )));
    }
    let factors = vec![
        (r12 - r13 * r23) / denominator,
        (r13 - r12 * r23) / denominator,
    ];
    let reduction =
        (1.0 - tuning.nu2()) * (r12 * r12 + r13 * r13 - 2.0 * r12 * r13 * r23) / denominator;
    Ok(finish(
        components,
        factors,
        reduction,
        tuning,
        table,
        Vec::new(),
    ))
}

// ---------------------------------------------------------------------------
// Data-level estimators
// ---------------------------------------------------------------------------

type Combine = fn(&HillComponents, &TailCopulaTable, &TuningParams) -> Result<EstimateReport>;

fn estimate(
    data: &PairedSample,
    tuning: &TuningParams,
    combine: Combine,
) -> Result<EstimateReport> {
    let components = HillComponents::from_sample(data, tuning)?;
    let TailDependenceSet {
        table, warnings, ..
    } = tail_dependence_set(&data.joint_columns(), tuning)?;
    let mut report = combine(&components, &table, tuning)?;
    report.warnings.splice(0..0, warnings);
    Ok(report)
}

/// Bivariate adapted estimator; `data` must have exactly one related variable.
pub fn adapted_bivariate(data: &PairedSample, tuning: &TuningParams) -> Result<EstimateReport> {
    if data.d() != 2 {
        return Err(param(format!(
            "bivariate estimator needs d = 2, got {}",
            data.d()
        )));
    }
    estimate(data, tuning, combine_bivariate)
}

/// Adapted estimator for any number of related variables, through the
/// inverse of the estimated H matrix.
pub fn adapted_multivariate(data: &PairedSample, tuning: &TuningParams) -> Result<EstimateReport> {
    estimate(data, tuning, combine_multivariate)
}

pub fn adapted_matched_bivariate(
    data: &PairedSample,
    tuning: &TuningParams,
) -> Result<EstimateReport> {
    require_matched(tuning)?;
    if data.d() != 2 {
        return Err(param(format!(
            "bivariate estimator needs d = 2, got {}",
            data.d()
        )));
    }
    estimate(data, tuning, combine_matched_bivariate)
}

pub fn adapted_matched_trivariate(
    data: &PairedSample,
    tuning: &TuningParams,
) -> Result<EstimateReport> {
    require_matched(tuning)?;
    if data.d() != 3 {
        return Err(param(format!(
            "trivariate estimator needs d = 3, got {}",
            data.d()
        )));
    }
    estimate(data, tuning, combine_matched_trivariate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tail_dependence::CopulaPoints;

    fn matched_tuning() -> TuningParams {
        TuningParams::new(100, 200, 1000, 1000).unwrap()
    }

    fn table2(r: f64, nu2: f64) -> TailCopulaTable {
        let mut t = TailCopulaTable::new(2, nu2, 1.0).unwrap();
        t.set(0, 1, CopulaPoints::flat(r));
        t
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn matched_bivariate_hand_example() {
        let c = HillComponents {
            gamma1: 1.5,
            related: vec![(1.0, 1.2)],
        };
        let t = table2(0.8, 0.5);
        let tuning = matched_tuning();
        for f in [
            combine_matched_bivariate as Combine,
            combine_bivariate,
            combine_multivariate,
        ] {
            let r = f(&c, &t, &tuning).unwrap();
            assert!(close(r.gamma_adapted, 1.7, 1e-12), "{}", r.gamma_adapted);
            assert!(close(r.reduction, 0.32, 1e-12));
            assert_eq!(r.gamma_adapted, r.reconstruct());
        }
    }

    #[test]
    fn zero_dependence_or_zero_update_returns_hill() {
        let tuning = matched_tuning();
        let c = HillComponents {
            gamma1: 1.3,
            related: vec![(0.7, 1.1)],
        };
        let r = combine_bivariate(&c, &table2(0.0, 0.5), &tuning).unwrap();
        assert_eq!(r.gamma_adapted, 1.3);
        let c = HillComponents {
            gamma1: 1.3,
            related: vec![(1.1, 1.1)],
        };
        let r = combine_bivariate(&c, &table2(0.6, 0.5), &tuning).unwrap();
        assert_eq!(r.gamma_adapted, 1.3);

        let mut t = TailCopulaTable::new(4, 0.5, 1.0).unwrap();
        t.set(1, 2, CopulaPoints::flat(0.3));
        let c = HillComponents {
            gamma1: 0.9,
            related: vec![(1.0, 1.2), (0.4, 0.8), (2.0, 1.0)],
        };
        let r = combine_multivariate(&c, &t, &tuning).unwrap();
        assert_eq!(r.gamma_adapted, 0.9);
    }

    #[test]
    fn matched_trivariate_hand_example() {
        let mut t = TailCopulaTable::new(3, 0.5, 1.0).unwrap();
        t.set(0, 1, CopulaPoints::flat(0.8))
            .set(0, 2, CopulaPoints::flat(0.8))
            .set(1, 2, CopulaPoints::flat(0.4));
        let c = HillComponents {
            gamma1: 1.0,
            related: vec![(0.9, 1.0), (1.1, 1.0)],
        };
        let tuning = matched_tuning();
        let expected_factor = (0.8 - 0.8 * 0.4) / (1.0 - 0.16);
        for f in [combine_matched_trivariate as Combine, combine_multivariate] {
            let r = f(&c, &t, &tuning).unwrap();
            for rel in &r.related {
                assert!(close(rel.coefficient, expected_factor, 1e-12));
            }
            assert!(close(r.gamma_adapted, 1.0, 1e-12));
            assert!(close(r.reduction, 0.5 * 0.768 / 0.84, 1e-12));
        }
    }

    #[test]
    fn trivariate_special_cases() {
        let tuning = matched_tuning();
        let c = HillComponents {
            gamma1: 1.0,
            related: vec![(0.8, 1.0), (1.3, 1.2)],
        };
        let mut t = TailCopulaTable::new(3, 0.5, 1.0).unwrap();
        t.set(0, 1, CopulaPoints::flat(0.6))
            .set(0, 2, CopulaPoints::flat(0.3));
        let r = combine_matched_trivariate(&c, &t, &tuning).unwrap();
        assert!(close(r.related[0].coefficient, 0.6, 1e-15));
        assert!(close(r.related[1].coefficient, 0.3 / 1.2, 1e-15));

        // third variable tail independent of everything: bivariate form
        let mut t = TailCopulaTable::new(3, 0.5, 1.0).unwrap();
        t.set(0, 1, CopulaPoints::flat(0.6));
        let tri = combine_matched_trivariate(&c, &t, &tuning).unwrap();
        let bi = combine_matched_bivariate(
            &HillComponents {
                gamma1: 1.0,
                related: vec![(0.8, 1.0)],
            },
            &table2(0.6, 0.5),
            &tuning,
        )
        .unwrap();
        assert!(close(tri.gamma_adapted, bi.gamma_adapted, 1e-15));
    }

    #[test]
    fn degenerate_cases() {
        let tuning = matched_tuning();
        let c = HillComponents {
            gamma1: 1.0,
            related: vec![(0.8, 0.0)],
        };
        assert!(matches!(
            combine_bivariate(&c, &table2(0.5, 0.5), &tuning),
            Err(Error::DegenerateDenominator(_))
        ));
        let mut t = TailCopulaTable::new(3, 0.5, 1.0).unwrap();
        t.set(0, 1, CopulaPoints::flat(0.9))
            .set(0, 2, CopulaPoints::flat(0.9))
            .set(1, 2, CopulaPoints::flat(1.0));
        let c = HillComponents {
            gamma1: 1.0,
            related: vec![(0.8, 1.0), (0.9, 1.0)],
        };
        assert!(matches!(
            combine_matched_trivariate(&c, &t, &tuning),
            Err(Error::DegenerateDenominator(_))
        ));
        assert!(matches!(
            combine_multivariate(&c, &t, &tuning),
            Err(Error::SingularMatrix { .. })
        ));
        let unmatched = TuningParams::new(100, 150, 1000, 1000).unwrap();
        assert!(combine_matched_trivariate(&c, &t, &unmatched).is_err());
    }

    #[test]
    fn negative_estimate_is_reported_with_warning() {
        let c = HillComponents {
            gamma1: 0.1,
            related: vec![(3.0, 0.2)],
        };
        let r = combine_matched_bivariate(&c, &table2(0.9, 0.5), &matched_tuning()).unwrap();
        assert!(r.gamma_adapted < 0.0);
        assert!(r
            .warnings
            .iter()
            .any(|w| matches!(w, Warning::NegativeEstimate(_))));
    }

    #[test]
    fn data_level_estimators_agree_on_small_sample() {
        let n = 60;
        let m = 30;
        let x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 17) % n) as f64).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + ((i * 17 + 3) % n) as f64 * 1.5)
            .collect();
        let extra: Vec<f64> = (0..m).map(|i| 2.0 + i as f64 * 1.9).collect();
        let data = PairedSample::new(x, vec![y], vec![extra]).unwrap();
        let tuning = TuningParams::matched(10, n, m).unwrap();
        assert!(tuning.is_matched());
        let a = adapted_bivariate(&data, &tuning).unwrap();
        let b = adapted_multivariate(&data, &tuning).unwrap();
        let c = adapted_matched_bivariate(&data, &tuning).unwrap();
        assert!(close(a.gamma_adapted, b.gamma_adapted, 1e-12));
        assert!(close(c.gamma_adapted, b.gamma_adapted, 1e-12));
        assert!(adapted_matched_trivariate(&data, &tuning).is_err());

        let wrong = TuningParams::matched(10, n, m + 1).unwrap();
        assert!(adapted_multivariate(&data, &wrong).is_err());
    }
}
