//! Subcommand implementations behind the `adapted-hill` binary.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::adapted::{adapted_multivariate, EstimateReport};
use crate::data::PairedSample;
use crate::error::{param, Error, Result};
use crate::estimators::{hill, order_statistics, weissman_quantile, SortedSample};
use crate::io::{
    format_number, format_optional, format_percent, magnitude_to_energy, DistributionKind, KRange,
    RunConfig,
};
use crate::montecarlo::{
    reproduce_tables, run_replications, summarize, BoxplotSummary, Cell, DistributionSpec,
    KPlusRule, Scenario, ScenarioResult, TableGrid, TableSelection, DEFAULT_REPLICATIONS,
};
use crate::warning::Warning;

/// Worker count when `--threads` is absent.
pub fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Applies the dataset-level options of `config` (magnitude transform).
pub fn prepare_dataset(config: &RunConfig, data: PairedSample) -> Result<PairedSample> {
    if config.magnitudes {
        data.map_related(magnitude_to_energy)
    } else {
        Ok(data)
    }
}

/// One `k` of an estimation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub k: usize,
    pub k_plus: Option<usize>,
    pub gamma_hill: Option<f64>,
    pub gamma_adapted: Option<f64>,
    pub std_error: Option<f64>,
    pub report: Option<EstimateReport>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRun {
    pub d: usize,
    pub rows: Vec<EstimateRow>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = values
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl EstimateRun {
    pub fn hill_average(&self) -> Option<f64> {
        mean_of(self.rows.iter().map(|r| r.gamma_hill))
    }

    pub fn adapted_average(&self) -> Option<f64> {
        mean_of(self.rows.iter().map(|r| r.gamma_adapted))
    }

    fn copula_header(&self) -> Vec<String> {
        let mut cols = Vec::new();
        for i in 0..self.d {
            for j in i + 1..self.d {
                let p = format!("r{}{}", i + 1, j + 1);
                cols.push(format!("{p}_11"));
                cols.push(format!("{p}_1b"));
                cols.push(format!("{p}_b1"));
            }
        }
        cols
    }

    fn copula_values(&self, row: &EstimateRow) -> Vec<String> {
        let mut vals = Vec::new();
        for i in 0..self.d {
            for j in i + 1..self.d {
                match &row.report {
                    Some(rep) => {
                        let t = &rep.tail_dependence;
                        vals.push(format_number(t.r11(i, j)));
                        vals.push(format_number(t.r1b(i, j)));
                        vals.push(format_number(t.rb1(i, j)));
                    }
                    None => vals.extend(std::iter::repeat_n(String::new(), 3)),
                }
            }
        }
        vals
    }

    /// Writes one delimited row per `k`.
    pub fn write(&self, out: &mut dyn Write, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(out);
        let mut header: Vec<String> = ["k", "k_plus", "gamma_hill", "gamma_adapted", "std_error"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.copula_header());
        header.push("warnings".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.k.to_string(),
                row.k_plus.map(|v| v.to_string()).unwrap_or_default(),
                format_optional(row.gamma_hill),
                format_optional(row.gamma_adapted),
                format_optional(row.std_error),
            ];
            rec.extend(self.copula_values(row));
            rec.push(join_warnings(&row.warnings));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn join_warnings(warnings: &[Warning]) -> String {
    warnings
        .iter()
        .map(Warning::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

fn estimate_at(
    config: &RunConfig,
    data: &PairedSample,
    sorted_x: &SortedSample,
    k: usize,
) -> EstimateRow {
    let mut row = EstimateRow {
        k,
        k_plus: None,
        gamma_hill: None,
        gamma_adapted: None,
        std_error: None,
        report: None,
        warnings: Vec::new(),
    };
    match hill(sorted_x, k) {
        Ok(g) => row.gamma_hill = Some(g),
        Err(e) => row.warnings.push(Warning::EstimationFailed {
            k,
            reason: e.to_string(),
        }),
    }
    if data.m() == 0 {
        row.warnings.push(Warning::NoExtraObservations);
        return row;
    }
    let outcome = config.tuning(k, data.n(), data.m()).and_then(|t| {
        row.k_plus = Some(t.k_plus());
        adapted_multivariate(data, &t)
    });
    match outcome {
        Ok(rep) => {
            row.gamma_adapted = Some(rep.gamma_adapted);
            row.std_error = Some(rep.std_error);
            row.warnings.extend(rep.warnings.iter().cloned());
            row.report = Some(rep);
        }
        Err(e) => row.warnings.push(Warning::EstimationFailed {
            k,
            reason: e.to_string(),
        }),
    }
    row
}

/// Hill and adapted estimates for every `k` of the configured sweep.
/// Per-`k` failures are recorded in that row.
pub fn estimate_sweep(config: &RunConfig, data: &PairedSample) -> Result<EstimateRun> {
    let ks = config.validate_for_sample(data.n(), data.m())?;
    let sorted_x = order_statistics(data.x())?;
    Ok(EstimateRun {
        d: data.d(),
        rows: ks
            .iter()
            .map(|k| estimate_at(config, data, &sorted_x, k))
            .collect(),
    })
}

fn range_label(ks: &KRange) -> String {
    if ks.lo == ks.hi {
        format!("k={}", ks.lo)
    } else {
        format!("k={}..{}", ks.lo, ks.hi)
    }
}

fn write_report(
    config: &RunConfig,
    console: &mut dyn Write,
    f: impl Fn(&mut dyn Write, u8) -> Result<()>,
) -> Result<()> {
    let delimiter = config.format().delimiter;
    match &config.out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            f(&mut file, delimiter)?;
            writeln!(console, "report written to {}", path.display())?;
        }
        None => f(console, delimiter)?,
    }
    Ok(())
}

/// `estimate`: writes the per-`k` report and prints the k-range averages.
pub fn cmd_estimate(
    config: &RunConfig,
    data: &PairedSample,
    console: &mut dyn Write,
) -> Result<EstimateRun> {
    let run = estimate_sweep(config, data)?;
    write_report(config, console, |w, d| run.write(w, d))?;
    let ks = config.k_values()?;
    writeln!(
        console,
        "{}: average Hill estimate {}, average adapted estimate {}",
        range_label(&ks),
        avg_text(run.hill_average()),
        avg_text(run.adapted_average()),
    )?;
    report_failures(console, run.rows.iter().map(|r| &r.warnings))?;
    Ok(run)
}

fn avg_text(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_else(|| "unavailable".into())
}

fn report_failures<'a>(
    console: &mut dyn Write,
    warnings: impl Iterator<Item = &'a Vec<Warning>>,
) -> Result<()> {
    let failed = warnings
        .filter(|w| {
            w.iter()
                .any(|x| matches!(x, Warning::EstimationFailed { .. }))
        })
        .count();
    if failed > 0 {
        writeln!(
            console,
            "estimation failed at {failed} k value(s); see the warnings column"
        )?;
    }
    Ok(())
}

/// One `k` of a quantile sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRow {
    pub estimate: EstimateRow,
    pub quantile_hill: Option<f64>,
    pub quantile_adapted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRun {
    pub p: f64,
    pub rows: Vec<QuantileRow>,
}

impl QuantileRun {
    pub fn hill_average(&self) -> Option<f64> {
        mean_of(self.rows.iter().map(|r| r.quantile_hill))
    }

    pub fn adapted_average(&self) -> Option<f64> {
        mean_of(self.rows.iter().map(|r| r.quantile_adapted))
    }

    pub fn write(&self, out: &mut dyn Write, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(out);
        w.write_record([
            "k",
            "k_plus",
            "p",
            "gamma_hill",
            "gamma_adapted",
            "quantile_hill",
            "quantile_adapted",
            "warnings",
        ])?;
        for row in &self.rows {
            let e = &row.estimate;
            w.write_record([
                e.k.to_string(),
                e.k_plus.map(|v| v.to_string()).unwrap_or_default(),
                format_number(self.p),
                format_optional(e.gamma_hill),
                format_optional(e.gamma_adapted),
                format_optional(row.quantile_hill),
                format_optional(row.quantile_adapted),
                join_warnings(&e.warnings),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Weissman quantiles at level `p` for every `k` of the sweep.
pub fn quantile_sweep(config: &RunConfig, data: &PairedSample) -> Result<QuantileRun> {
    let p = config
        .p
        .ok_or_else(|| param("no tail probability given (use --p)"))?;
    if !(p > 0.0 && p < 1.0) {
        return Err(param(format!("p = {p} must lie in (0, 1)")));
    }
    let run = estimate_sweep(config, data)?;
    let sorted_x = order_statistics(data.x())?;
    let rows = run
        .rows
        .into_iter()
        .map(|mut e| {
            let mut quantile = |g: Option<f64>| {
                g.and_then(|g| match weissman_quantile(&sorted_x, e.k, p, g) {
                    Ok(q) => Some(q),
                    Err(err) => {
                        e.warnings.push(Warning::EstimationFailed {
                            k: e.k,
                            reason: err.to_string(),
                        });
                        None
                    }
                })
            };
            let quantile_hill = quantile(e.gamma_hill);
            let quantile_adapted = quantile(e.gamma_adapted);
            QuantileRow {
                estimate: e,
                quantile_hill,
                quantile_adapted,
            }
        })
        .collect();
    Ok(QuantileRun { p, rows })
}

/// `quantile`: writes per-`k` quantiles and prints their k-range averages.
pub fn cmd_quantile(
    config: &RunConfig,
    data: &PairedSample,
    console: &mut dyn Write,
) -> Result<QuantileRun> {
    let run = quantile_sweep(config, data)?;
    write_report(config, console, |w, d| run.write(w, d))?;
    let ks = config.k_values()?;
    writeln!(
        console,
        "{}: average quantile at p={} with Hill {}, with adapted {}",
        range_label(&ks),
        format_number(run.p),
        avg_text(run.hill_average()),
        avg_text(run.adapted_average()),
    )?;
    report_failures(console, run.rows.iter().map(|r| &r.estimate.warnings))?;
    Ok(run)
}

/// Scenario described by the simulation settings of `config`.
pub fn scenario_from_config(config: &RunConfig) -> Result<Scenario> {
    let need =
        |v: Option<usize>, name: &str| v.ok_or_else(|| param(format!("simulate needs --{name}")));
    let d = config.d.unwrap_or(2);
    let distribution = match config.dist.ok_or_else(|| param("simulate needs --dist"))? {
        DistributionKind::Logistic => DistributionSpec::Logistic {
            dim: d,
            theta: config
                .theta
                .ok_or_else(|| param("logistic simulation needs --theta"))?,
        },
        DistributionKind::Cauchy => {
            let s = config.s.unwrap_or(0.0);
            DistributionSpec::OrthantCauchy {
                dim: d,
                s,
                r: config.r.unwrap_or(s),
            }
        }
    };
    if config.k_sweep.is_some() {
        return Err(param("simulate takes a single --k"));
    }
    if config.k_plus.is_some() && config.matched {
        return Err(param("--k-plus and --matched are mutually exclusive"));
    }
    Ok(Scenario {
        distribution,
        n: need(config.n, "n")?,
        m: need(config.m, "m")?,
        k: need(config.k, "k")?,
        k_plus: config
            .k_plus
            .map_or(KPlusRule::Matched, KPlusRule::Explicit),
        replications: config.reps.unwrap_or(DEFAULT_REPLICATIONS),
        master_seed: config.seed.unwrap_or(0),
    })
}

fn write_boxplots(
    path: &Path,
    delimiter: u8,
    rows: &[(String, &str, BoxplotSummary)],
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(path)?;
    w.write_record([
        "scenario",
        "estimator",
        "min",
        "lower_whisker",
        "q1",
        "median",
        "q3",
        "upper_whisker",
        "max",
        "outliers_low",
        "outliers_high",
    ])?;
    for (label, estimator, b) in rows {
        w.write_record([
            label.clone(),
            estimator.to_string(),
            format_number(b.min),
            format_number(b.lower_whisker),
            format_number(b.q1),
            format_number(b.median),
            format_number(b.q3),
            format_number(b.upper_whisker),
            format_number(b.max),
            b.outliers_low.to_string(),
            b.outliers_high.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const SUMMARY_HEADER: [&str; 14] = [
    "scenario",
    "n",
    "m",
    "k",
    "k_plus",
    "replications_used",
    "failed",
    "mean_hill",
    "mean_adapted",
    "var_hill",
    "var_adapted",
    "reduction_pct",
    "warned",
    "status",
];

fn summary_record(label: &str, r: &ScenarioResult) -> Vec<String> {
    vec![
        label.to_string(),
        r.scenario.n.to_string(),
        r.scenario.m.to_string(),
        r.scenario.k.to_string(),
        r.tuning.k_plus().to_string(),
        r.replications_used.to_string(),
        r.failed_replications().to_string(),
        format_number(r.mean_hill),
        format_number(r.mean_adapted),
        format_number(r.var_hill),
        format_number(r.var_adapted),
        format_percent(r.reduction_pct),
        r.warned.to_string(),
        "ok".into(),
    ]
}

/// `simulate`: runs one scenario, prints its summary and, with `--out DIR`,
/// writes `summary.csv`, `boxplot.csv` and the per-replication `estimates.csv`.
pub fn cmd_simulate(config: &RunConfig, console: &mut dyn Write) -> Result<ScenarioResult> {
    let sc = scenario_from_config(config)?;
    let threads = config.threads.unwrap_or_else(default_threads);
    let est = run_replications(&sc, threads)?;
    let result = summarize(&sc, &est)?;
    let label = sc.distribution.to_string();
    writeln!(
        console,
        "{label}, n={}, m={}, k={}, k_plus={}: reduction {}% over {} replications \
         (Hill mean {}, variance {}; adapted mean {}, variance {})",
        sc.n,
        sc.m,
        sc.k,
        result.tuning.k_plus(),
        format_percent(result.reduction_pct),
        result.replications_used,
        format_number(result.mean_hill),
        format_number(result.var_hill),
        format_number(result.mean_adapted),
        format_number(result.var_adapted),
    )?;
    if result.failed_replications() > 0 {
        writeln!(console, "excluded replications: {:?}", result.failures)?;
    }
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
        let delimiter = config.format().delimiter;
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_path(dir.join("summary.csv"))?;
        w.write_record(SUMMARY_HEADER)?;
        w.write_record(summary_record(&label, &result))?;
        w.flush()?;
        write_boxplots(
            &dir.join("boxplot.csv"),
            delimiter,
            &[
                (label.clone(), "hill", result.boxplot_hill),
                (label.clone(), "adapted", result.boxplot_adapted),
            ],
        )?;
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_path(dir.join("estimates.csv"))?;
        w.write_record(["hill", "adapted"])?;
        for (h, a) in est.hill.iter().zip(&est.adapted) {
            w.write_record([format_number(*h), format_number(*a)])?;
        }
        w.flush()?;
        writeln!(
            console,
            "summary, boxplot and estimates written to {}",
            dir.display()
        )?;
    }
    Ok(result)
}

fn write_grid(dir: &Path, delimiter: u8, grid: &TableGrid) -> Result<()> {
    let id = grid.table.id();
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(dir.join(format!("{id}.csv")))?;
    w.write_record(SUMMARY_HEADER)?;
    let mut boxes = Vec::new();
    for (row, &(n, m, k)) in grid.rows.iter().enumerate() {
        for (col, spec) in grid.columns.iter().enumerate() {
            let label = spec.to_string();
            match grid.cell(row, col) {
                Cell::Done(r) => {
                    w.write_record(summary_record(&label, r))?;
                    let tag = format!("{label} n={n} m={m}");
                    boxes.push((tag.clone(), "hill", r.boxplot_hill));
                    boxes.push((tag, "adapted", r.boxplot_adapted));
                }
                Cell::Failed(reason) => {
                    let mut rec = vec![label, n.to_string(), m.to_string(), k.to_string()];
                    rec.extend(std::iter::repeat_n(String::new(), SUMMARY_HEADER.len() - 5));
                    rec.push(format!("failed: {reason}"));
                    w.write_record(&rec)?;
                }
            }
        }
    }
    w.flush()?;
    write_boxplots(&dir.join(format!("{id}-boxplots.csv")), delimiter, &boxes)
}

/// `tables`: reproduces the selected variance-reduction grid(s), prints them
/// and, with `--out DIR`, writes per-cell summaries and boxplots.
pub fn cmd_tables(config: &RunConfig, console: &mut dyn Write) -> Result<Vec<TableGrid>> {
    let which = config.which.unwrap_or(TableSelection::Both);
    let reps = config.reps.unwrap_or(DEFAULT_REPLICATIONS);
    let threads = config.threads.unwrap_or_else(default_threads);
    let grids = reproduce_tables(which, reps, config.seed.unwrap_or(0), threads)?;
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
    }
    for grid in &grids {
        writeln!(console, "{}", grid.render())?;
        if let Some(dir) = &config.out {
            write_grid(dir, config.format().delimiter, grid)?;
        }
    }
    let failed = grids
        .iter()
        .flat_map(|g| g.cells.iter().flatten())
        .filter(|c| matches!(c, Cell::Failed(_)))
        .count();
    if failed > 0 {
        writeln!(console, "{failed} cell(s) failed")?;
    }
    Ok(grids)
}

/// Loads the dataset named on the command line, honoring `--extra`,
/// `--tab` and `--magnitudes`.
pub fn load_for_config(config: &RunConfig, path: &Path) -> Result<PairedSample> {
    let opts = config.format();
    let data = match &config.extra {
        Some(extra) => crate::io::load_dataset_with_extra(path, extra, &opts)?,
        None => crate::io::load_dataset(path, &opts)?,
    };
    prepare_dataset(config, data).map_err(|e: Error| Error::Input {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
