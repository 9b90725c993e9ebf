#![allow(dead_code)]

use adapted_hill::asymptotics::TheoryParams;
use adapted_hill::data::PairedSample;
use adapted_hill::estimators::TuningParams;
use adapted_hill::montecarlo::{DistributionSpec, Scenario};
use adapted_hill::sampling::LogisticParam;
use adapted_hill::tail_dependence::{CopulaPoints, TailCopulaTable};
use rand::Rng;

/// One logistic sample with standard Fréchet marginals.
pub fn logistic_sample(theta: f64, dim: usize, n: usize, m: usize, seed: u64) -> PairedSample {
    Scenario::matched(DistributionSpec::Logistic { dim, theta }, n, m, 1)
        .with_seed(seed)
        .replication_sample(0)
        .unwrap()
}

pub fn cauchy_sample(dim: usize, s: f64, r: f64, n: usize, m: usize, seed: u64) -> PairedSample {
    Scenario::matched(DistributionSpec::OrthantCauchy { dim, s, r }, n, m, 1)
        .with_seed(seed)
        .replication_sample(0)
        .unwrap()
}

/// Random dataset together with a tuning for which `k/k₊ = n/(n+m)` holds
/// exactly.
pub fn random_matched_dataset<R: Rng>(rng: &mut R, dim: usize) -> (PairedSample, TuningParams) {
    loop {
        let n = rng.random_range(60..400);
        let m = rng.random_range(1..400);
        let k = rng.random_range(5..n / 4);
        let Ok(t) = TuningParams::matched(k, n, m) else {
            continue;
        };
        if !t.is_matched() {
            continue;
        }
        let seed = rng.random();
        let data = if rng.random_bool(0.5) {
            logistic_sample(rng.random_range(0.15..0.95), dim, n, m, seed)
        } else {
            let s: f64 = rng.random_range(0.0..0.85);
            // positive definite iff r > 2s² - 1
            let r = if dim == 3 {
                rng.random_range((2.0 * s * s - 1.0).max(0.0) + 0.05..0.9)
            } else {
                s
            };
            cauchy_sample(dim, s, r, n, m, seed)
        };
        return (data, t);
    }
}

/// Pairwise logistic tail copula `x + y - (x^{1/θ} + y^{1/θ})^θ`.
pub fn logistic_copula(theta: f64, x: f64, y: f64) -> f64 {
    LogisticParam::new(theta, 2).unwrap().tail_copula(x, y)
}

/// Theory parameters whose tail copula values come from pairwise logistic
/// models with random dependence.
pub fn random_theory_params<R: Rng>(rng: &mut R, dim: usize) -> TheoryParams {
    let nu2 = rng.random_range(0.05..0.95);
    let beta = rng.random_range(0.05..=1.0);
    let mut table = TailCopulaTable::new(dim, nu2, beta).unwrap();
    for i in 0..dim {
        for j in i + 1..dim {
            let theta = rng.random_range(0.2..=1.0);
            table.set(
                i,
                j,
                CopulaPoints::new(
                    logistic_copula(theta, 1.0, 1.0),
                    logistic_copula(theta, 1.0, beta),
                    logistic_copula(theta, beta, 1.0),
                ),
            );
        }
    }
    let gammas = (0..dim).map(|_| rng.random_range(0.2..3.0)).collect();
    TheoryParams::new(gammas, table).unwrap()
}

/// Pareto(1) quantiles at the plotting positions `i/(len+1)`, largest first.
pub fn pareto_plotting_positions(len: usize) -> Vec<f64> {
    (1..=len).map(|i| (len + 1) as f64 / i as f64).collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
