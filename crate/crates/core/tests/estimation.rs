mod common;

use adapted_hill::adapted::{
    adapted_bivariate, adapted_matched_bivariate, adapted_matched_trivariate, adapted_multivariate,
    HillComponents,
};
use adapted_hill::asymptotics::{
    asymp_variance_bivariate, asymp_variance_multivariate, asymp_variance_quadratic_form,
    variance_reduction,
};
use adapted_hill::data::PairedSample;
use adapted_hill::estimators::TuningParams;
use adapted_hill::tail_dependence::tail_copula;
use common::{close, logistic_sample, random_matched_dataset, random_theory_params};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matched_specializations_agree_with_general_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut degenerate = 0;
    for case in 0..1000 {
        let dim = if case % 2 == 0 { 2 } else { 3 };
        let (data, tuning) = random_matched_dataset(&mut rng, dim);
        let general = adapted_multivariate(&data, &tuning);
        let special = if dim == 2 {
            adapted_matched_bivariate(&data, &tuning)
        } else {
            adapted_matched_trivariate(&data, &tuning)
        };
        match (general, special) {
            (Ok(g), Ok(s)) => assert!(
                close(g.gamma_adapted, s.gamma_adapted, 1e-12),
                "case {case}: {} vs {}",
                g.gamma_adapted,
                s.gamma_adapted
            ),
            // identical related-variable tails (R̂₂₃ = 1): both forms must refuse
            (Err(_), Err(_)) => degenerate += 1,
            (g, s) => panic!(
                "case {case}: general {:?} vs specialized {:?}",
                g.err(),
                s.err()
            ),
        }
    }
    assert!(degenerate < 20, "{degenerate} degenerate datasets");
}

#[test]
fn bivariate_display_agrees_with_general_form_unmatched() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..300 {
        let n = rng.random_range(100..400);
        let m = rng.random_range(1..400);
        let k = rng.random_range(10..n / 4);
        let k_plus = rng.random_range(k + 1..(n + m) / 3);
        let tuning = TuningParams::new(k, k_plus, n, m).unwrap();
        if tuning.beta_count() == 0 || tuning.beta_count() > n - 1 {
            continue;
        }
        let data = logistic_sample(rng.random_range(0.2..0.9), 2, n, m, case);
        let a = adapted_bivariate(&data, &tuning).unwrap();
        let b = adapted_multivariate(&data, &tuning).unwrap();
        assert!(
            close(a.gamma_adapted, b.gamma_adapted, 1e-12),
            "case {case}"
        );
    }
}

#[test]
fn literal_variance_equals_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..1000 {
        let dim = 2 + case % 3;
        let params = random_theory_params(&mut rng, dim);
        let literal = asymp_variance_multivariate(&params).unwrap();
        let quadratic = asymp_variance_quadratic_form(&params).unwrap();
        assert!(
            (literal - quadratic).abs() <= 1e-10 * literal.abs().max(1.0),
            "case {case}: {literal} vs {quadratic}"
        );
        if dim == 2 {
            let bivariate = asymp_variance_bivariate(&params).unwrap();
            assert!((literal - bivariate).abs() <= 1e-10 * literal.max(1.0));
            let red = variance_reduction(&params).unwrap();
            assert!((-1e-12..1.0).contains(&red), "case {case}: reduction {red}");
        }
    }
}

#[test]
fn update_direction_and_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (data, tuning) = random_matched_dataset(&mut rng, 3);
        let Ok(rep) = adapted_multivariate(&data, &tuning) else {
            continue;
        };
        assert_eq!(rep.gamma_adapted, rep.reconstruct());
        let update: f64 = rep
            .related
            .iter()
            .map(|r| r.coefficient * (r.gamma_plus - r.gamma))
            .sum();
        let diff = rep.gamma_adapted - rep.gamma1_hill;
        assert!(diff == 0.0 && update == 0.0 || diff.signum() == update.signum());
        let hill = HillComponents::from_sample(&data, &tuning).unwrap();
        assert_eq!(hill.gamma1, rep.gamma1_hill);
    }
}

#[test]
fn related_only_records_without_tail_dependence_leave_hill_nearly_unchanged() {
    // θ = 1 is tail independence: R̂ is O(k/n) and so is the correction.
    let data = logistic_sample(1.0, 2, 2000, 2000, 3);
    let tuning = TuningParams::matched(100, 2000, 2000).unwrap();
    let rep = adapted_multivariate(&data, &tuning).unwrap();
    assert!(rep.tail_dependence.r11(0, 1) < 0.15);
    assert!((rep.gamma_adapted - rep.gamma1_hill).abs() < 0.05);
}

fn scaled(data: &PairedSample, cx: f64, cy: f64) -> PairedSample {
    let x = data.x().iter().map(|v| v * cx).collect();
    let related = (0..data.d() - 1)
        .map(|j| data.related(j).iter().map(|v| v * cy).collect())
        .collect();
    let extra = (0..data.d() - 1)
        .map(|j| data.related_extra(j).iter().map(|v| v * cy).collect())
        .collect();
    PairedSample::new(x, related, extra).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adapted_estimate_is_scale_invariant(seed in 0u64..1000, cx in 0.01f64..100.0, cy in 0.01f64..100.0) {
        let data = logistic_sample(0.4, 3, 300, 200, seed);
        let tuning = TuningParams::matched(30, 300, 200).unwrap();
        let a = adapted_multivariate(&data, &tuning).unwrap();
        let b = adapted_multivariate(&scaled(&data, cx, cy), &tuning).unwrap();
        prop_assert!(close(a.gamma1_hill, b.gamma1_hill, 1e-12));
        prop_assert!(close(a.gamma_adapted, b.gamma_adapted, 1e-12));
        prop_assert_eq!(a.tail_dependence, b.tail_dependence);
    }

    #[test]
    fn tail_copula_is_rank_invariant(seed in 0u64..1000, k in 5usize..150, x in 0.2f64..2.0, y in 0.2f64..2.0) {
        let data = logistic_sample(0.5, 2, 300, 1, seed);
        let (xs, ys) = (data.x(), data.related(0));
        let base = tail_copula(xs, ys, k, x, y).unwrap();
        let tx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
        let ty: Vec<f64> = ys.iter().map(|v| v.powi(3) + 1.0).collect();
        prop_assert_eq!(base, tail_copula(&tx, &ty, k, x, y).unwrap());
    }

    #[test]
    fn tail_copula_limits(seed in 0u64..1000, k in 1usize..100) {
        let data = logistic_sample(0.5, 2, 200, 1, seed);
        let xs = data.x();
        let comonotone: Vec<f64> = xs.iter().map(|v| 2.0 * v).collect();
        let antithetic: Vec<f64> = xs.iter().map(|v| -v).collect();
        prop_assert_eq!(tail_copula(xs, &comonotone, k, 1.0, 1.0).unwrap(), 1.0);
        prop_assert_eq!(tail_copula(xs, &antithetic, k, 1.0, 1.0).unwrap(), 0.0);
    }
}
