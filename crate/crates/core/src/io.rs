//! Delimited-text datasets, run configuration and output formatting.
//!
//! Dataset layout: a header `x,y2,…,yd`, one row per observation. Rows whose
//! `x` field is empty are related-variable-only observations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use crate::data::PairedSample;
use crate::error::{param, Error, Result};
use crate::estimators::TuningParams;
use crate::montecarlo::TableSelection;

/// Field delimiter of dataset and report files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatOptions {
    pub delimiter: u8,
}

impl Default for FormatOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

impl FormatOptions {
    pub fn tab() -> Self {
        Self { delimiter: b'\t' }
    }
}

fn input_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Input {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn reader(path: &Path, opts: &FormatOptions) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| input_err(path, e.to_string()))?;
    Ok(ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(file))
}

/// Positions of `y2..yd` in a header, plus that of `x` if present.
fn locate_columns(
    path: &Path,
    header: &StringRecord,
    require_x: bool,
) -> Result<(Option<usize>, Vec<usize>)> {
    if header.iter().all(str::is_empty) {
        return Err(input_err(path, "missing header"));
    }
    let names: Vec<&str> = header.iter().collect();
    let x = names.iter().position(|&h| h == "x");
    if require_x && x != Some(0) {
        return Err(input_err(
            path,
            format!("header must start with `x`, found `{}`", names.join(",")),
        ));
    }
    let mut ys = Vec::new();
    for (pos, &name) in names.iter().enumerate() {
        if Some(pos) == x {
            continue;
        }
        let expected = format!("y{}", ys.len() + 2);
        if name != expected {
            return Err(input_err(
                path,
                format!("unexpected column `{name}` (expected `{expected}`)"),
            ));
        }
        ys.push(pos);
    }
    if ys.is_empty() {
        return Err(input_err(path, "no related-variable columns (y2, …)"));
    }
    Ok((x, ys))
}

fn parse_field(
    path: &Path,
    record: &StringRecord,
    row: usize,
    pos: usize,
    name: &str,
) -> Result<Option<f64>> {
    let raw = record.get(pos).unwrap_or("");
    if raw.is_empty() {
        return Ok(None);
    }
    let ingestion = |reason: String| Error::Ingestion {
        path: path.to_path_buf(),
        row,
        column: name.to_string(),
        reason,
    };
    let v: f64 = raw
        .parse()
        .map_err(|_| ingestion(format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(ingestion(format!("`{raw}` is not finite")));
    }
    Ok(Some(v))
}

fn read_related(
    path: &Path,
    record: &StringRecord,
    row: usize,
    ys: &[usize],
    header: &StringRecord,
    dest: &mut [Vec<f64>],
) -> Result<()> {
    for (j, &pos) in ys.iter().enumerate() {
        let name = &header[pos];
        match parse_field(path, record, row, pos, name)? {
            Some(v) => dest[j].push(v),
            None => {
                return Err(Error::Ingestion {
                    path: path.to_path_buf(),
                    row,
                    column: name.to_string(),
                    reason: "missing value".into(),
                })
            }
        }
    }
    Ok(())
}

/// Loads a dataset. Row numbers in errors count data rows from 1.
pub fn load_dataset(path: impl AsRef<Path>, opts: &FormatOptions) -> Result<PairedSample> {
    let path = path.as_ref();
    let mut rdr = reader(path, opts)?;
    let header = rdr.headers()?.clone();
    let (_, ys) = locate_columns(path, &header, true)?;
    let mut x = Vec::new();
    let mut related = vec![Vec::new(); ys.len()];
    let mut extra = vec![Vec::new(); ys.len()];
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        match parse_field(path, &record, row, 0, "x")? {
            Some(v) => {
                x.push(v);
                read_related(path, &record, row, &ys, &header, &mut related)?;
            }
            None => read_related(path, &record, row, &ys, &header, &mut extra)?,
        }
    }
    if x.is_empty() {
        return Err(input_err(
            path,
            "no complete rows (every `x` field is empty)",
        ));
    }
    PairedSample::new(x, related, extra).map_err(|e| input_err(path, e.to_string()))
}

/// Loads a dataset and appends the related-only rows of a second file, whose
/// header is `y2,…,yd` (an `x` column, if present, is ignored).
pub fn load_dataset_with_extra(
    path: impl AsRef<Path>,
    extra_path: impl AsRef<Path>,
    opts: &FormatOptions,
) -> Result<PairedSample> {
    let path = path.as_ref();
    let base = load_dataset(path, opts)?;
    let extra_path = extra_path.as_ref();
    let mut rdr = reader(extra_path, opts)?;
    let header = rdr.headers()?.clone();
    let (_, ys) = locate_columns(extra_path, &header, false)?;
    if ys.len() != base.d() - 1 {
        return Err(input_err(
            extra_path,
            format!("{} related columns, dataset has {}", ys.len(), base.d() - 1),
        ));
    }
    let mut extra: Vec<Vec<f64>> = (0..ys.len())
        .map(|j| base.related_extra(j).to_vec())
        .collect();
    for (i, record) in rdr.records().enumerate() {
        read_related(extra_path, &record?, i + 1, &ys, &header, &mut extra)?;
    }
    let related = (0..ys.len()).map(|j| base.related(j).to_vec()).collect();
    PairedSample::new(base.x().to_vec(), related, extra)
}

/// Writes a dataset in the layout [`load_dataset`] reads. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_dataset(
    path: impl AsRef<Path>,
    data: &PairedSample,
    opts: &FormatOptions,
) -> Result<()> {
    let mut w = WriterBuilder::new()
        .delimiter(opts.delimiter)
        .from_path(path)?;
    let d = data.d();
    let mut header = vec!["x".to_string()];
    header.extend((2..=d).map(|j| format!("y{j}")));
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![data.x()[i].to_string()];
        rec.extend((0..d - 1).map(|j| data.related(j)[i].to_string()));
        w.write_record(&rec)?;
    }
    for i in 0..data.m() {
        let mut rec = vec![String::new()];
        rec.extend((0..d - 1).map(|j| data.related_extra(j)[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Energy in megajoules released by an earthquake of the given magnitude,
/// `2·10^(1.5(M-1))`.
pub fn magnitude_to_energy(magnitude: f64) -> f64 {
    2.0 * 10f64.powf(1.5 * (magnitude - 1.0))
}

/// Report number with 12 significant digits.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    rounded.to_string()
}

pub fn format_optional(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

/// Percentage with one decimal.
pub fn format_percent(v: f64) -> String {
    format!("{v:.1}")
}

/// Inclusive `k` range, written `LO..HI` (or `LO..=HI`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl KRange {
    pub fn single(k: usize) -> Self {
        Self { lo: k, hi: k }
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl FromStr for KRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once("..")
            .ok_or_else(|| param(format!("k range `{s}` is not of the form LO..HI")))?;
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| param(format!("k range `{s}`: `{t}` is not a nonnegative integer")))
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if lo == 0 || lo > hi {
            return Err(param(format!("k range `{s}` must satisfy 1 <= LO <= HI")));
        }
        Ok(Self { lo, hi })
    }
}

/// Simulation law selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    Logistic,
    Cauchy,
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(DistributionKind::Logistic),
            "cauchy" | "orthant-cauchy" => Ok(DistributionKind::Cauchy),
            other => Err(param(format!(
                "unknown distribution `{other}` (logistic, cauchy)"
            ))),
        }
    }
}

/// Settings shared by all subcommands. Every field is optional so that a
/// config file and command-line flags can be layered with [`RunConfig::overlay`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub k: Option<usize>,
    pub k_plus: Option<usize>,
    pub matched: bool,
    pub k_sweep: Option<KRange>,
    pub p: Option<f64>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub which: Option<TableSelection>,
    pub tab: bool,
    pub extra: Option<PathBuf>,
    /// Replace related-variable magnitudes by released energy before estimating.
    pub magnitudes: bool,
    pub dist: Option<DistributionKind>,
    pub d: Option<usize>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub theta: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| param(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(param(format!(
            "config key `{key}`: `{value}` is not a boolean"
        ))),
    }
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment. Keys may use `-` or `_`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .unwrap_or((line, ""));
            let key = key.replace('-', "_");
            if seen.insert(key.clone(), i + 1).is_some() {
                return Err(param(format!(
                    "config line {}: duplicate key `{key}`",
                    i + 1
                )));
            }
            cfg.set(&key, value)
                .map_err(|e| param(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| input_err(path, e.to_string()))?;
        Self::parse(&text).map_err(|e| input_err(path, e.to_string()))
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "k" => self.k = Some(parse_value(key, v)?),
            "k_plus" => self.k_plus = Some(parse_value(key, v)?),
            "matched" => self.matched = parse_bool(key, v)?,
            "k_sweep" => self.k_sweep = Some(v.parse()?),
            "p" => self.p = Some(parse_value(key, v)?),
            "seed" => self.seed = Some(parse_value(key, v)?),
            "reps" => self.reps = Some(parse_value(key, v)?),
            "threads" => self.threads = Some(parse_value(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "which" => self.which = Some(v.parse()?),
            "tab" => self.tab = parse_bool(key, v)?,
            "extra" => self.extra = Some(PathBuf::from(v)),
            "magnitudes" => self.magnitudes = parse_bool(key, v)?,
            "dist" => self.dist = Some(v.parse()?),
            "d" => self.d = Some(parse_value(key, v)?),
            "s" => self.s = Some(parse_value(key, v)?),
            "r" => self.r = Some(parse_value(key, v)?),
            "theta" => self.theta = Some(parse_value(key, v)?),
            "n" => self.n = Some(parse_value(key, v)?),
            "m" => self.m = Some(parse_value(key, v)?),
            other => return Err(param(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// `self` with every setting present in `top` replaced by `top`'s value.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        RunConfig {
            k: top.k.or(self.k),
            k_plus: top.k_plus.or(self.k_plus),
            matched: top.matched || self.matched,
            k_sweep: top.k_sweep.or(self.k_sweep),
            p: top.p.or(self.p),
            seed: top.seed.or(self.seed),
            reps: top.reps.or(self.reps),
            threads: top.threads.or(self.threads),
            out: top.out.or(self.out),
            which: top.which.or(self.which),
            tab: top.tab || self.tab,
            extra: top.extra.or(self.extra),
            magnitudes: top.magnitudes || self.magnitudes,
            dist: top.dist.or(self.dist),
            d: top.d.or(self.d),
            s: top.s.or(self.s),
            r: top.r.or(self.r),
            theta: top.theta.or(self.theta),
            n: top.n.or(self.n),
            m: top.m.or(self.m),
        }
    }

    pub fn format(&self) -> FormatOptions {
        if self.tab {
            FormatOptions::tab()
        } else {
            FormatOptions::default()
        }
    }

    /// The `k` values to estimate at: the sweep if given, else the single `k`.
    pub fn k_values(&self) -> Result<KRange> {
        match (self.k_sweep, self.k) {
            (Some(_), Some(_)) => Err(param("give either --k or --k-sweep, not both")),
            (Some(r), None) => Ok(r),
            (None, Some(k)) => Ok(KRange::single(k)),
            (None, None) => Err(param("no k given (use --k or --k-sweep)")),
        }
    }

    /// Checks the `k` settings against the sample sizes before any work is done.
    pub fn validate_for_sample(&self, n: usize, m: usize) -> Result<KRange> {
        let ks = self.k_values()?;
        if ks.hi + 1 > n {
            return Err(param(format!(
                "k = {} needs at least {} joint rows, sample has {n}",
                ks.hi,
                ks.hi + 1
            )));
        }
        if self.k_plus.is_some() && self.matched {
            return Err(param("--k-plus and --matched are mutually exclusive"));
        }
        if self.k_plus.is_some() && ks.len() > 1 {
            return Err(param(
                "--k-plus fixes a single k; use --matched with --k-sweep",
            ));
        }
        if m > 0 {
            for k in ks.iter() {
                self.tuning(k, n, m)?;
            }
        }
        Ok(ks)
    }

    /// Tuning at `k`: the explicit `k₊` if given, matched otherwise.
    pub fn tuning(&self, k: usize, n: usize, m: usize) -> Result<TuningParams> {
        match self.k_plus {
            Some(k_plus) => TuningParams::new(k, k_plus, n, m),
            None => TuningParams::matched(k, n, m),
        }
    }
}
