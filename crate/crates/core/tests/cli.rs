mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use adapted_hill::adapted::adapted_multivariate;
use adapted_hill::commands::{cmd_estimate, cmd_quantile, estimate_sweep, quantile_sweep};
use adapted_hill::data::PairedSample;
use adapted_hill::error::Error;
use adapted_hill::estimators::{hill, order_statistics, TuningParams};
use adapted_hill::io::{
    load_dataset, load_dataset_with_extra, write_dataset, FormatOptions, KRange, RunConfig,
};
use adapted_hill::warning::Warning;
use common::{logistic_sample, pareto_plotting_positions};

const BIN: &str = env!("CARGO_BIN_EXE_adapted-hill");

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn sweep(lo: usize, hi: usize) -> RunConfig {
    RunConfig {
        k_sweep: Some(KRange { lo, hi }),
        ..Default::default()
    }
}

#[test]
fn dataset_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let data = logistic_sample(0.3, 3, 200, 150, 1);
    for opts in [FormatOptions::default(), FormatOptions::tab()] {
        let path = dir.path().join("data.txt");
        write_dataset(&path, &data, &opts).unwrap();
        assert_eq!(load_dataset(&path, &opts).unwrap(), data);
    }
}

#[test]
fn empty_x_rows_become_extra_observations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write(&path, "x,y2\n1,2\n3,4\n5,6\n7,8\n9,10\n,11\n,12\n,13\n");
    let data = load_dataset(&path, &FormatOptions::default()).unwrap();
    assert_eq!((data.n(), data.m(), data.d()), (5, 3, 2));
    assert_eq!(data.related(0), &[2.0, 4.0, 6.0, 8.0, 10.0]);
    assert_eq!(data.related_extra(0), &[11.0, 12.0, 13.0]);

    write(&path, "x,y2\n1,2\n3,4\n5,6\n");
    assert_eq!(
        load_dataset(&path, &FormatOptions::default()).unwrap().m(),
        0
    );
}

#[test]
fn ingestion_errors_name_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let opts = FormatOptions::default();
    write(&path, "x,y2\n1,2\n2,3\n3,4\n4,5\n5,6\n6,7\n7,abc\n8,9\n");
    match load_dataset(&path, &opts) {
        Err(Error::Ingestion { row, column, .. }) => assert_eq!((row, column.as_str()), (7, "y2")),
        other => panic!("{other:?}"),
    }
    let msg = load_dataset(&path, &opts).unwrap_err().to_string();
    assert!(msg.contains("row 7"), "{msg}");

    write(&path, "x,y2\n1,2\n2,\n3,4\n");
    assert!(matches!(
        load_dataset(&path, &opts),
        Err(Error::Ingestion { row: 2, .. })
    ));
    write(&path, "");
    assert!(load_dataset(&path, &opts).is_err());
    write(&path, "a,b\n1,2\n");
    assert!(load_dataset(&path, &opts).is_err());
    write(&path, "x,y2\n,1\n,2\n");
    assert!(load_dataset(&path, &opts).is_err());
}

#[test]
fn extra_file_appends_related_rows() {
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("main.csv");
    let extra = dir.path().join("extra.csv");
    write(&main, "x,y2,y3\n1,2,3\n4,5,6\n7,8,9\n,10,11\n");
    write(&extra, "y2,y3\n12,13\n14,15\n");
    let data = load_dataset_with_extra(&main, &extra, &FormatOptions::default()).unwrap();
    assert_eq!((data.n(), data.m()), (3, 3));
    assert_eq!(data.related_extra(1), &[11.0, 13.0, 15.0]);
    write(&extra, "y2\n12\n");
    assert!(load_dataset_with_extra(&main, &extra, &FormatOptions::default()).is_err());
}

#[test]
fn k_sweep_gives_one_row_per_k() {
    let data = logistic_sample(0.3, 2, 1000, 1000, 4);
    let mut console = Vec::new();
    let run = cmd_estimate(&sweep(40, 60), &data, &mut console).unwrap();
    assert_eq!(run.rows.len(), 21);
    assert!(run
        .rows
        .iter()
        .all(|r| r.gamma_hill.is_some() && r.gamma_adapted.is_some()));
    let text = String::from_utf8(console).unwrap();
    let report: Vec<&str> = text.lines().collect();
    assert_eq!(report.len(), 1 + 21 + 1, "{text}");
    assert!(report[0].starts_with("k,k_plus,gamma_hill,gamma_adapted,std_error,r12_11"));
    assert!(
        report[22].contains("average Hill estimate")
            && report[22].contains("average adapted estimate")
    );
}

#[test]
fn single_k_reproduces_library_call() {
    let data = logistic_sample(0.5, 3, 500, 300, 6);
    let cfg = RunConfig {
        k: Some(50),
        ..Default::default()
    };
    let run = estimate_sweep(&cfg, &data).unwrap();
    let direct =
        adapted_multivariate(&data, &TuningParams::matched(50, 500, 300).unwrap()).unwrap();
    assert_eq!(run.rows.len(), 1);
    assert_eq!(run.rows[0].report.as_ref(), Some(&direct));
    assert_eq!(run.rows[0].gamma_adapted, Some(direct.gamma_adapted));
    assert_eq!(run.rows[0].gamma_hill, Some(direct.gamma1_hill));
}

#[test]
fn no_extra_rows_leaves_adapted_column_empty() {
    let full = logistic_sample(0.5, 2, 300, 1, 2);
    let data = PairedSample::new(
        full.x().to_vec(),
        vec![full.related(0).to_vec()],
        vec![vec![]],
    )
    .unwrap();
    let mut console = Vec::new();
    let run = cmd_estimate(&sweep(20, 22), &data, &mut console).unwrap();
    for row in &run.rows {
        assert!(row.gamma_hill.is_some());
        assert_eq!(row.gamma_adapted, None);
        assert!(row.warnings.contains(&Warning::NoExtraObservations));
    }
    let text = String::from_utf8(console).unwrap();
    let second = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = second.split(',').collect();
    assert!(!fields[2].is_empty() && fields[3].is_empty(), "{second}");
    assert!(text.contains("average adapted estimate unavailable"));
}

#[test]
fn per_k_failures_are_recorded_in_row() {
    // Identical related variables and m = n (matched at every k) make H singular.
    let x: Vec<f64> = (1..=50).map(|i| (i * 7 % 50 + 1) as f64).collect();
    let y: Vec<f64> = (1..=50).map(f64::from).collect();
    let extra: Vec<f64> = (51..=100).map(f64::from).collect();
    let data = PairedSample::new(x, vec![y.clone(), y], vec![extra.clone(), extra]).unwrap();
    let run = estimate_sweep(&sweep(5, 8), &data).unwrap();
    assert_eq!(run.rows.len(), 4);
    for row in &run.rows {
        assert!(row.gamma_hill.is_some());
        assert!(row
            .warnings
            .iter()
            .any(|w| matches!(w, Warning::EstimationFailed { .. })));
    }
}

/// Related record and variable of interest both at exact Pareto(1) quantiles.
fn pareto_dataset(n: usize, m: usize) -> PairedSample {
    let x = pareto_plotting_positions(n);
    let all = pareto_plotting_positions(n + m);
    let (joint, extra): (Vec<f64>, Vec<f64>) = (
        all.iter().step_by(2).take(n).copied().collect(),
        all.iter()
            .skip(1)
            .step_by(2)
            .chain(all.iter().step_by(2).skip(n))
            .copied()
            .collect(),
    );
    PairedSample::new(x, vec![joint], vec![extra]).unwrap()
}

#[test]
fn pareto_quantile_recovery() {
    let n = 10_000;
    let data = pareto_dataset(n, n);
    let cfg = RunConfig {
        p: Some(1.0 / n as f64),
        ..sweep(400, 600)
    };
    let run = quantile_sweep(&cfg, &data).unwrap();
    let truth = n as f64;
    for avg in [run.hill_average().unwrap(), run.adapted_average().unwrap()] {
        assert!((avg / truth - 1.0).abs() < 0.15, "average quantile {avg}");
    }
}

#[test]
fn quantile_at_p_equal_k_over_n_is_the_threshold() {
    let data = logistic_sample(0.5, 2, 400, 200, 8);
    let k = 40;
    let cfg = RunConfig {
        k: Some(k),
        p: Some(k as f64 / 400.0),
        ..Default::default()
    };
    let run = quantile_sweep(&cfg, &data).unwrap();
    let sorted = order_statistics(data.x()).unwrap();
    let threshold = sorted.threshold(k);
    let q = run.rows[0].quantile_hill.unwrap();
    assert!((q / threshold - 1.0).abs() < 1e-14);
    assert!((run.rows[0].quantile_adapted.unwrap() / threshold - 1.0).abs() < 1e-14);
}

#[test]
fn smaller_adapted_index_gives_smaller_quantile() {
    let data = logistic_sample(0.3, 2, 1000, 1000, 12);
    let cfg = RunConfig {
        p: Some(1e-4),
        ..sweep(40, 80)
    };
    let run = quantile_sweep(&cfg, &data).unwrap();
    for row in &run.rows {
        let (gh, ga) = (
            row.estimate.gamma_hill.unwrap(),
            row.estimate.gamma_adapted.unwrap(),
        );
        let (qh, qa) = (row.quantile_hill.unwrap(), row.quantile_adapted.unwrap());
        assert_eq!(ga < gh, qa < qh, "k={}", row.estimate.k);
    }
    assert!(quantile_sweep(
        &RunConfig {
            p: Some(1.5),
            ..sweep(40, 41)
        },
        &data
    )
    .is_err());
    assert!(quantile_sweep(&sweep(40, 41), &data).is_err());
}

#[test]
fn quantile_console_prints_averages() {
    let data = logistic_sample(0.3, 2, 500, 500, 2);
    let cfg = RunConfig {
        p: Some(0.001),
        ..sweep(30, 35)
    };
    let mut console = Vec::new();
    cmd_quantile(&cfg, &data, &mut console).unwrap();
    let text = String::from_utf8(console).unwrap();
    assert_eq!(text.lines().count(), 1 + 6 + 1);
    assert!(text
        .lines()
        .last()
        .unwrap()
        .contains("average quantile at p=0.001"));
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("data.csv");
    let data = logistic_sample(0.3, 2, 1000, 1000, 21);
    write_dataset(&data_path, &data, &FormatOptions::default()).unwrap();

    let report = dir.path().join("report.csv");
    let out = Command::new(BIN)
        .args([
            "estimate",
            data_path.to_str().unwrap(),
            "--k-sweep",
            "40..60",
            "--out",
        ])
        .arg(&report)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(fs::read_to_string(&report).unwrap().lines().count(), 22);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("k=40..60: average Hill estimate"));

    // config file supplies k; the command line overrides it
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "k = 30\nmatched = true\n");
    let out = Command::new(BIN)
        .args(["estimate", data_path.to_str().unwrap(), "--config"])
        .arg(&cfg)
        .args(["--k", "45"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.lines().nth(1).unwrap().starts_with("45,90,"),
        "{stdout}"
    );
    let sorted = order_statistics(data.x()).unwrap();
    let expected = adapted_hill::io::format_number(hill(&sorted, 45).unwrap());
    assert!(stdout.lines().nth(1).unwrap().contains(&expected));

    let out = Command::new(BIN)
        .args([
            "quantile",
            data_path.to_str().unwrap(),
            "--k",
            "50",
            "--p",
            "0.001",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());

    let sim = dir.path().join("sim");
    let out = Command::new(BIN)
        .args([
            "simulate", "--dist", "cauchy", "--d", "3", "--s", "0.5", "--r", "0.2",
        ])
        .args([
            "--n",
            "300",
            "--m",
            "150",
            "--k",
            "30",
            "--reps",
            "50",
            "--threads",
            "2",
            "--seed",
            "4",
            "--out",
        ])
        .arg(&sim)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        fs::read_to_string(sim.join("boxplot.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
    assert_eq!(
        fs::read_to_string(sim.join("estimates.csv"))
            .unwrap()
            .lines()
            .count(),
        51
    );
    assert_eq!(
        fs::read_to_string(sim.join("summary.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );

    let bad = dir.path().join("bad.csv");
    write(&bad, "x,y2\n1,2\n2,3\n3,4\n4,5\n5,6\n6,7\n7,oops\n");
    let out = Command::new(BIN)
        .args(["estimate", bad.to_str().unwrap(), "--k", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.contains("row 7"), "{stderr}");

    let out = Command::new(BIN)
        .args([
            "estimate",
            data_path.to_str().unwrap(),
            "--k",
            "10",
            "--k-plus",
            "15",
            "--matched",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn tables_smoke_run_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args([
            "tables",
            "--which",
            "table-2",
            "--reps",
            "100",
            "--threads",
            "2",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("wide-tolerance"));
    assert_eq!(
        fs::read_to_string(dir.path().join("table-2.csv"))
            .unwrap()
            .lines()
            .count(),
        19
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("table-2-boxplots.csv"))
            .unwrap()
            .lines()
            .count(),
        37
    );
}

#[test]
fn magnitudes_flag_converts_related_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quakes.csv");
    let mut text = String::from("x,y2\n");
    for i in 0..60 {
        text.push_str(&format!(
            "{},{}\n",
            10.0 + i as f64 * 3.0,
            4.0 + (i % 17) as f64 * 0.1
        ));
    }
    for i in 0..40 {
        text.push_str(&format!(",{}\n", 4.0 + (i % 13) as f64 * 0.15));
    }
    write(&path, &text);
    let cfg = RunConfig {
        magnitudes: true,
        k: Some(10),
        ..Default::default()
    };
    let data = adapted_hill::commands::load_for_config(&cfg, &path).unwrap();
    let raw = load_dataset(&path, &FormatOptions::default()).unwrap();
    assert_eq!(data.x(), raw.x());
    let expected: Vec<f64> = raw
        .related(0)
        .iter()
        .map(|&m| adapted_hill::io::magnitude_to_energy(m))
        .collect();
    assert_eq!(data.related(0), expected.as_slice());
}
