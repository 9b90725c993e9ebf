//! Order statistics, the Hill estimator, Weissman-type high quantiles and
//! averaging over a range of `k`.
//!
//! Indexing convention: `X_{i,n}` is the i-th smallest of n values, so
//! `X_{n-k,n}` (the Hill threshold) lives at 0-based offset `n - k - 1`.
//! All translations to 0-based offsets happen in [`SortedSample`].

use crate::error::{param, Error, Result};

/// Ascending order statistics of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Wraps values that are already in nondecreasing order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(param("sample is empty"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(param("sample contains NaN"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(param("values are not in nondecreasing order"));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `X_{i,n}`, 1-based from the smallest.
    pub fn order_stat(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// `X_{n-k,n}`: the (k+1)-th largest value.
    pub fn threshold(&self, k: usize) -> f64 {
        self.values[self.values.len() - k - 1]
    }

    /// `X_{n-j+1,n}`: the j-th largest value, `1 ≤ j ≤ n`.
    pub fn jth_largest(&self, j: usize) -> f64 {
        self.values[self.values.len() - j]
    }

    fn check_k(&self, k: usize) -> Result<()> {
        let n = self.values.len();
        if n < 2 || k == 0 || k >= n {
            return Err(param(format!(
                "k = {k} outside 1..={} for n = {n}",
                n.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

/// Stable ascending sort of `raw`; the input is left untouched.
pub fn order_statistics(raw: &[f64]) -> Result<SortedSample> {
    if raw.is_empty() {
        return Err(param("cannot sort an empty sample"));
    }
    if raw.iter().any(|v| v.is_nan()) {
        return Err(param("sample contains NaN"));
    }
    let mut values = raw.to_vec();
    values.sort_by(f64::total_cmp);
    Ok(SortedSample { values })
}

/// Hill estimator `(1/k)·Σ_{i<k} log X_{n-i,n} - log X_{n-k,n}`.
///
/// Ties are kept: the sum runs over positions, not distinct values.
pub fn hill(sample: &SortedSample, k: usize) -> Result<f64> {
    sample.check_k(k)?;
    let threshold = sample.threshold(k);
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!(
            "Hill threshold X(n-k,n) = {threshold} is not positive (k = {k})"
        )));
    }
    let log_threshold = threshold.ln();
    let n = sample.len();
    let sum: f64 = sample.values[n - k..]
        .iter()
        .map(|x| x.ln() - log_threshold)
        .sum();
    Ok(sum / k as f64)
}

/// High quantile `X_{n-k,n}·(k/(n·p))^γ̂`.
pub fn weissman_quantile(sample: &SortedSample, k: usize, p: f64, gamma_hat: f64) -> Result<f64> {
    sample.check_k(k)?;
    let n = sample.len() as f64;
    if !(p > 0.0 && p < 1.0) || !(n * p > 0.0) {
        return Err(param(format!(
            "tail probability p = {p} must lie in (0, 1)"
        )));
    }
    if !gamma_hat.is_finite() {
        return Err(param(format!(
            "extreme value index estimate {gamma_hat} is not finite"
        )));
    }
    let factor = k as f64 / (n * p);
    Ok(sample.threshold(k) * factor.powf(gamma_hat))
}

/// Arithmetic mean of `estimate(k)` over `k_lo..=k_hi`, requiring
/// `1 ≤ k_lo ≤ k_hi ≤ n-1`. The first per-k error aborts the average.
pub fn average_over_k_range<F>(n: usize, k_lo: usize, k_hi: usize, mut estimate: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<f64>,
{
    if k_lo == 0 || k_lo > k_hi || k_hi + 1 > n {
        return Err(param(format!(
            "k range {k_lo}..={k_hi} invalid for n = {n}"
        )));
    }
    let mut sum = 0.0;
    for k in k_lo..=k_hi {
        sum += estimate(k)?;
    }
    Ok(sum / (k_hi - k_lo + 1) as f64)
}

/// The pair `(k, k₊)` together with the sample sizes it was chosen for.
///
/// `k` is used for the n-sample Hill estimators, `k₊` for the Hill estimators
/// of the related variables over all n + m observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuningParams {
    k: usize,
    k_plus: usize,
    n: usize,
    m: usize,
}

impl TuningParams {
    /// Requires `1 ≤ k ≤ n-1` and `k < k₊ ≤ n+m-1`.
    pub fn new(k: usize, k_plus: usize, n: usize, m: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(param(format!(
                "k = {k} outside 1..={} for n = {n}",
                n.saturating_sub(1)
            )));
        }
        if k_plus <= k || k_plus + 1 > n + m {
            return Err(param(format!(
                "k+ = {k_plus} outside {}..={} for k = {k}, n + m = {}",
                k + 1,
                (n + m).saturating_sub(1),
                n + m
            )));
        }
        Ok(Self { k, k_plus, n, m })
    }

    /// Chooses `k₊` so that `k/k₊ ≈ n/(n+m)`: `k₊ = k(n+m)/n` rounded to the
    /// nearest integer, ties rounded up.
    pub fn matched(k: usize, n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(param("n must be positive"));
        }
        Self::new(k, matched_k_plus(k, n, m), n, m)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k_plus(&self) -> usize {
        self.k_plus
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `ν̂² = k/k₊`.
    pub fn nu2(&self) -> f64 {
        self.k as f64 / self.k_plus as f64
    }

    /// True when `k/k₊ = n/(n+m)` holds exactly.
    pub fn is_matched(&self) -> bool {
        self.k * (self.n + self.m) == self.k_plus * self.n
    }

    /// `β̂ = (n/(n+m))·(k₊/k)`; exactly 1 in matched mode.
    pub fn beta_hat(&self) -> f64 {
        if self.is_matched() {
            1.0
        } else {
            (self.n as f64 / (self.n + self.m) as f64) * (self.k_plus as f64 / self.k as f64)
        }
    }

    /// `⌊k·β̂⌋ = ⌊n·k₊/(n+m)⌋`, computed in integers.
    pub fn beta_count(&self) -> usize {
        self.n * self.k_plus / (self.n + self.m)
    }
}

/// Nearest-integer `k(n+m)/n`, ties up.
pub fn matched_k_plus(k: usize, n: usize, m: usize) -> usize {
    (2 * k * (n + m) + n) / (2 * n)
}
