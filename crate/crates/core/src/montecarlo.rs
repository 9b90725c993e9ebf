//! Replicated simulation comparing the Hill and adapted Hill estimators.
//!
//! Replication r draws its n joint observations and then its m extra
//! observations from stream r of the scenario's master seed. Results are
//! gathered by replication index and reduced sequentially, so a scenario's
//! result is bit-identical for any worker count.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::adapted::adapted_multivariate;
use crate::asymptotics::{matched_reduction_bivariate, matched_reduction_trivariate};
use crate::data::PairedSample;
use crate::error::{param, Error, Result};
use crate::estimators::TuningParams;
use crate::sampling::{
    Logistic, LogisticParam, OrthantCauchy, SampleMatrix, ScaleMatrix, StreamRng, StreamSpec,
};

/// Replication count the published grids were produced with.
pub const DEFAULT_REPLICATIONS: usize = 10_000;

/// Fraction of failed replications above which a scenario fails.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Simulation law of `(X, Y₂, …, Y_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    /// Cauchy restricted to the positive orthant; scale off-diagonals `s`
    /// except `S₂₃ = r` when d = 3.
    OrthantCauchy { dim: usize, s: f64, r: f64 },
    /// Symmetric logistic with standard Fréchet marginals.
    Logistic { dim: usize, theta: f64 },
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match *self {
            DistributionSpec::OrthantCauchy { dim, .. }
            | DistributionSpec::Logistic { dim, .. } => dim,
        }
    }

    /// Tail index of every marginal.
    pub fn marginal_gamma(&self) -> f64 {
        1.0
    }

    /// Leading-order finite-sample bias `A(n/k)/(1-ρ)` of the Hill estimator
    /// of the first marginal, when that marginal is known in closed form.
    ///
    /// Standard Fréchet: `U(t) = t(1 - t⁻¹/2 + …)`, so `ρ = -1`,
    /// `A(t) = 1/(2t)`. With an identity scale matrix the orthant Cauchy
    /// marginal is half-Cauchy: `U(t) = (2t/π)(1 - (π²/12)t⁻² + …)`, so
    /// `ρ = -2`, `A(t) = (π²/6)t⁻²`.
    pub fn hill_second_order_bias(&self, n: usize, k: usize) -> Option<f64> {
        let t = n as f64 / k as f64;
        match *self {
            DistributionSpec::Logistic { .. } => Some(0.5 / t / 2.0),
            DistributionSpec::OrthantCauchy { s, r, .. } if s == 0.0 && r == 0.0 => {
                Some(std::f64::consts::PI.powi(2) / 6.0 / (t * t) / 3.0)
            }
            DistributionSpec::OrthantCauchy { .. } => None,
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        match *self {
            DistributionSpec::OrthantCauchy { dim, s, r } => {
                let scale = if dim == 3 {
                    ScaleMatrix::trivariate(s, r)?
                } else {
                    if r != s {
                        return Err(param(format!(
                            "r = {r} differs from s = {s} but d = {dim} != 3"
                        )));
                    }
                    ScaleMatrix::equicorrelated(dim, s)?
                };
                Ok(Sampler::Cauchy(OrthantCauchy::new(scale)?))
            }
            DistributionSpec::Logistic { dim, theta } => Ok(Sampler::Logistic(Logistic::new(
                LogisticParam::new(theta, dim)?,
            ))),
        }
    }

    /// Limiting matched-mode variance reduction for the logistic model with
    /// d ≤ 3, where every pairwise `R(1,1) = 2 - 2^θ`. `None` otherwise.
    pub fn theoretical_matched_reduction(&self, nu2: f64) -> Option<f64> {
        match *self {
            DistributionSpec::Logistic { dim, theta } => {
                let r = 2.0 - 2f64.powf(theta);
                match dim {
                    2 => Some(matched_reduction_bivariate(nu2, r)),
                    3 => Some(matched_reduction_trivariate(nu2, r, r, r)),
                    _ => None,
                }
            }
            DistributionSpec::OrthantCauchy { .. } => None,
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::OrthantCauchy { dim: 3, s, r } => write!(f, "cauchy d=3 s={s} r={r}"),
            DistributionSpec::OrthantCauchy { dim, s, .. } => write!(f, "cauchy d={dim} s={s}"),
            DistributionSpec::Logistic { dim, theta } => {
                write!(f, "logistic d={dim} theta={theta}")
            }
        }
    }
}

enum Sampler {
    Cauchy(OrthantCauchy),
    Logistic(Logistic),
}

impl Sampler {
    fn sample(&self, rng: &mut StreamRng, count: usize) -> SampleMatrix {
        match self {
            Sampler::Cauchy(c) => c.sample(rng, count),
            Sampler::Logistic(l) => l.sample(rng, count),
        }
    }
}

/// How `k₊` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPlusRule {
    /// `k₊ = k(n+m)/n`, nearest integer with ties up.
    Matched,
    Explicit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub distribution: DistributionSpec,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub k_plus: KPlusRule,
    pub replications: usize,
    pub master_seed: u64,
}

impl Scenario {
    pub fn matched(distribution: DistributionSpec, n: usize, m: usize, k: usize) -> Self {
        Self {
            distribution,
            n,
            m,
            k,
            k_plus: KPlusRule::Matched,
            replications: DEFAULT_REPLICATIONS,
            master_seed: 0,
        }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn tuning(&self) -> Result<TuningParams> {
        match self.k_plus {
            KPlusRule::Matched => TuningParams::matched(self.k, self.n, self.m),
            KPlusRule::Explicit(k_plus) => TuningParams::new(self.k, k_plus, self.n, self.m),
        }
    }

    fn validate(&self) -> Result<TuningParams> {
        if self.replications < 2 {
            return Err(param(format!(
                "need at least 2 replications, got {}",
                self.replications
            )));
        }
        if self.distribution.dim() < 2 {
            return Err(param("distribution dimension must be >= 2"));
        }
        self.tuning()
    }

    /// Draws the sample of replication `index`.
    pub fn replication_sample(&self, index: u64) -> Result<PairedSample> {
        let sampler = self.distribution.sampler()?;
        self.draw(&sampler, index)
    }

    fn draw(&self, sampler: &Sampler, index: u64) -> Result<PairedSample> {
        let mut rng = StreamSpec::new(self.master_seed, index).rng();
        let joint = sampler.sample(&mut rng, self.n);
        let extra = sampler.sample(&mut rng, self.m);
        PairedSample::from_draws(&joint, &extra)
    }
}

/// Five-number summary with Tukey whiskers (1.5 IQR).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxplotSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers_low: usize,
    pub outliers_high: usize,
}

impl BoxplotSummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(param("cannot summarize an empty sample"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&sorted, 0.25);
        let q3 = quantile_sorted(&sorted, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let lower_whisker = *sorted
            .iter()
            .find(|&&v| v >= lo_fence)
            .unwrap_or(&sorted[0]);
        let upper_whisker = *sorted
            .iter()
            .rev()
            .find(|&&v| v <= hi_fence)
            .unwrap_or(&sorted[sorted.len() - 1]);
        Ok(Self {
            min: sorted[0],
            q1,
            median: quantile_sorted(&sorted, 0.5),
            q3,
            max: sorted[sorted.len() - 1],
            lower_whisker,
            upper_whisker,
            outliers_low: sorted.iter().filter(|&&v| v < lo_fence).count(),
            outliers_high: sorted.iter().filter(|&&v| v > hi_fence).count(),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn outliers(&self) -> usize {
        self.outliers_low + self.outliers_high
    }
}

/// Linear interpolation between order statistics (`(len-1)·p` positions).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Per-replication estimates of the replications that succeeded, in
/// replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationEstimates {
    pub hill: Vec<f64>,
    pub adapted: Vec<f64>,
    /// Failure counts keyed by error category.
    pub failures: BTreeMap<String, usize>,
    /// Replications whose estimate carried at least one warning.
    pub warned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub tuning: TuningParams,
    pub replications_used: usize,
    pub failures: BTreeMap<String, usize>,
    pub warned: usize,
    pub mean_hill: f64,
    pub mean_adapted: f64,
    /// Unbiased sample variances across replications.
    pub var_hill: f64,
    pub var_adapted: f64,
    /// `100·(1 - var_adapted/var_hill)`.
    pub reduction_pct: f64,
    pub boxplot_hill: BoxplotSummary,
    pub boxplot_adapted: BoxplotSummary,
}

impl ScenarioResult {
    pub fn failed_replications(&self) -> usize {
        self.failures.values().sum()
    }

    /// Monte Carlo standard error of the mean Hill estimate.
    pub fn hill_mean_std_error(&self) -> f64 {
        (self.var_hill / self.replications_used as f64).sqrt()
    }
}

fn failure_category(e: &Error) -> String {
    match e {
        Error::SingularMatrix { .. } => "singular H".into(),
        Error::DegenerateDenominator(_) => "degenerate denominator".into(),
        Error::Domain(_) => "domain".into(),
        Error::Parameter(_) => "parameter".into(),
        other => other.to_string(),
    }
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(param("worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Scenario(format!("cannot start worker pool: {e}")))
}

/// Runs every replication and returns the raw per-replication estimates.
pub fn run_replications(sc: &Scenario, workers: usize) -> Result<ReplicationEstimates> {
    let tuning = sc.validate()?;
    let sampler = sc.distribution.sampler()?;
    let pool = build_pool(workers)?;
    let outcomes: Vec<Result<(f64, f64, bool)>> = pool.install(|| {
        (0..sc.replications as u64)
            .into_par_iter()
            .map(|r| {
                let data = sc.draw(&sampler, r)?;
                let report = adapted_multivariate(&data, &tuning)?;
                Ok((
                    report.gamma1_hill,
                    report.gamma_adapted,
                    !report.warnings.is_empty(),
                ))
            })
            .collect()
    });

    let mut est = ReplicationEstimates {
        hill: Vec::with_capacity(sc.replications),
        adapted: Vec::with_capacity(sc.replications),
        failures: BTreeMap::new(),
        warned: 0,
    };
    for outcome in outcomes {
        match outcome {
            Ok((h, a, warned)) => {
                est.hill.push(h);
                est.adapted.push(a);
                est.warned += usize::from(warned);
            }
            Err(e) => *est.failures.entry(failure_category(&e)).or_default() += 1,
        }
    }
    Ok(est)
}

/// Runs a scenario and aggregates variances, reduction and boxplots.
pub fn run_scenario(sc: &Scenario, workers: usize) -> Result<ScenarioResult> {
    summarize(sc, &run_replications(sc, workers)?)
}

/// Aggregates the per-replication estimates of `sc`.
pub fn summarize(sc: &Scenario, est: &ReplicationEstimates) -> Result<ScenarioResult> {
    let tuning = sc.validate()?;
    let failed: usize = est.failures.values().sum();
    if failed as f64 > MAX_FAILURE_FRACTION * sc.replications as f64 || est.hill.len() < 2 {
        return Err(Error::Scenario(format!(
            "{}: {failed} of {} replications failed ({:?})",
            sc.distribution, sc.replications, est.failures
        )));
    }
    let (mean_hill, var_hill) = mean_and_variance(&est.hill);
    let (mean_adapted, var_adapted) = mean_and_variance(&est.adapted);
    Ok(ScenarioResult {
        scenario: sc.clone(),
        tuning,
        replications_used: est.hill.len(),
        failures: est.failures.clone(),
        warned: est.warned,
        mean_hill,
        mean_adapted,
        var_hill,
        var_adapted,
        reduction_pct: 100.0 * (1.0 - var_adapted / var_hill),
        boxplot_hill: BoxplotSummary::from_values(&est.hill)?,
        boxplot_adapted: BoxplotSummary::from_values(&est.adapted)?,
    })
}

/// Boxplot summaries `(hill, adapted)` of a scenario's estimates.
pub fn boxplot_summary(sc: &Scenario, workers: usize) -> Result<(BoxplotSummary, BoxplotSummary)> {
    let r = run_scenario(sc, workers)?;
    Ok((r.boxplot_hill, r.boxplot_adapted))
}

// ---------------------------------------------------------------------------
// Simulation tables
// ---------------------------------------------------------------------------

/// `(n, m, k)` settings of the simulation tables, one per row.
pub const TABLE_SETTINGS: [(usize, usize, usize); 3] =
    [(1000, 500, 100), (1000, 1000, 100), (500, 1000, 50)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    /// Orthant Cauchy grid, 8 columns.
    Cauchy,
    /// Logistic grid, 6 columns.
    Logistic,
}

impl Table {
    pub fn columns(&self) -> Vec<DistributionSpec> {
        match self {
            Table::Cauchy => {
                let mut cols: Vec<DistributionSpec> = [0.0, 0.5, 0.8]
                    .iter()
                    .map(|&s| DistributionSpec::OrthantCauchy { dim: 2, s, r: s })
                    .collect();
                cols.extend(
                    [(0.0, 0.0), (0.5, 0.5), (0.5, 0.0), (0.8, 0.8), (0.8, 0.3)]
                        .iter()
                        .map(|&(s, r)| DistributionSpec::OrthantCauchy { dim: 3, s, r }),
                );
                cols
            }
            Table::Logistic => [2, 3]
                .iter()
                .flat_map(|&dim| {
                    [0.1, 0.3, 0.5]
                        .iter()
                        .map(move |&theta| DistributionSpec::Logistic { dim, theta })
                })
                .collect(),
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            Table::Cauchy => "Empirical variance reduction for the orthant Cauchy distribution",
            Table::Logistic => "Empirical variance reduction for the logistic distribution",
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Table::Cauchy => "table-1",
            Table::Logistic => "table-2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSelection {
    Table1,
    Table2,
    Both,
}

impl TableSelection {
    pub fn tables(&self) -> Vec<Table> {
        match self {
            TableSelection::Table1 => vec![Table::Cauchy],
            TableSelection::Table2 => vec![Table::Logistic],
            TableSelection::Both => vec![Table::Cauchy, Table::Logistic],
        }
    }
}

impl std::str::FromStr for TableSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table-1" | "1" => Ok(TableSelection::Table1),
            "table-2" | "2" => Ok(TableSelection::Table2),
            "both" => Ok(TableSelection::Both),
            other => Err(param(format!(
                "unknown table `{other}` (table-1, table-2, both)"
            ))),
        }
    }
}

/// One cell of a reduction grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Done(Box<ScenarioResult>),
    Failed(String),
}

impl Cell {
    pub fn reduction_pct(&self) -> Option<f64> {
        match self {
            Cell::Done(r) => Some(r.reduction_pct),
            Cell::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableGrid {
    pub table: Table,
    pub columns: Vec<DistributionSpec>,
    pub rows: Vec<(usize, usize, usize)>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<Cell>>,
    pub replications: usize,
    /// Set when fewer replications than [`DEFAULT_REPLICATIONS`] were run,
    /// so cells carry more Monte Carlo noise than the reference grid.
    pub wide_tolerance: bool,
}

impl TableGrid {
    pub fn cell(&self, row: usize, column: usize) -> &Cell {
        &self.cells[row][column]
    }

    /// Plain-text grid: one line per `(n, m)` setting, reductions in percent
    /// with one decimal.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} ({}, {} replications{})",
            self.table.title(),
            self.table.id(),
            self.replications,
            if self.wide_tolerance {
                ", wide-tolerance smoke run"
            } else {
                ""
            }
        );
        let labels: Vec<String> = self.columns.iter().map(column_label).collect();
        let width = labels.iter().map(String::len).max().unwrap_or(0).max(7) + 2;
        let _ = write!(out, "{:<18}", "");
        for l in &labels {
            let _ = write!(out, "{l:>width$}");
        }
        out.push('\n');
        for (row, &(n, m, _)) in self.rows.iter().enumerate() {
            let _ = write!(out, "{:<18}", format!("n={n}, m={m}"));
            for cell in &self.cells[row] {
                let text = match cell.reduction_pct() {
                    Some(v) => format!("{v:.1}%"),
                    None => "FAILED".to_string(),
                };
                let _ = write!(out, "{text:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

fn column_label(spec: &DistributionSpec) -> String {
    match *spec {
        DistributionSpec::OrthantCauchy { dim: 3, s, r } => format!("d=3 s={s},r={r}"),
        DistributionSpec::OrthantCauchy { dim, s, .. } => format!("d={dim} s={s}"),
        DistributionSpec::Logistic { dim, theta } => format!("d={dim} th={theta}"),
    }
}

/// Runs every cell of the selected grid(s). Failed cells are marked, not
/// fatal.
pub fn reproduce_tables(
    which: TableSelection,
    replications: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<TableGrid>> {
    if replications < 100 {
        return Err(param(format!(
            "tables need at least 100 replications, got {replications}"
        )));
    }
    Ok(which
        .tables()
        .into_iter()
        .map(|table| run_table(table, replications, master_seed, workers))
        .collect())
}

/// Runs one grid.
pub fn run_table(table: Table, replications: usize, master_seed: u64, workers: usize) -> TableGrid {
    let columns = table.columns();
    let rows = TABLE_SETTINGS.to_vec();
    let cells = rows
        .iter()
        .map(|&(n, m, k)| {
            columns
                .iter()
                .map(|&dist| {
                    let sc = Scenario::matched(dist, n, m, k)
                        .with_replications(replications)
                        .with_seed(master_seed);
                    match run_scenario(&sc, workers) {
                        Ok(r) => Cell::Done(Box::new(r)),
                        Err(e) => Cell::Failed(e.to_string()),
                    }
                })
                .collect()
        })
        .collect();
    TableGrid {
        table,
        columns,
        rows,
        cells,
        replications,
        wide_tolerance: replications < DEFAULT_REPLICATIONS,
    }
}
