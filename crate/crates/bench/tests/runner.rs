use std::fs;

use afista::solvers::SolverId;
use afista_bench::config::{parse_config, ProblemKind};
use afista_bench::runner::{audit, csv_name, mask_time_column, run_benchmark, CSV_HEADER};
use afista_bench::BenchConfig;

fn small(dir: &std::path::Path, text: &str) -> BenchConfig {
    let mut cfg = parse_config(text).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn two_solvers_one_seed_write_two_csvs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "solvers = afista, fbs\nseeds = 4\nmax_iters = 20\nemit_plot_data = false\n");
    let out = run_benchmark(&cfg).unwrap();
    assert_eq!(out.len(), 2);
    let mut names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, vec!["afista_4.csv", "fbs_4.csv", "summary.csv"]);
    let csv = fs::read_to_string(dir.path().join("afista_4.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[3], "1");
    assert_eq!(csv.lines().count(), 22);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("solver,seed,iterations,status,final_objective,final_normalized_objective,sparsity"));
}

#[test]
fn normalized_column_is_objective_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "solver = mfista\nseeds = 1\nmax_iters = 50\n");
    run_benchmark(&cfg).unwrap();
    let csv = fs::read_to_string(dir.path().join(csv_name(SolverId::Mfista, 1))).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let f0 = rows[0][2];
    for r in &rows {
        assert!((r[3] - r[2] / f0).abs() <= 1e-15 * r[3].abs());
    }
}

#[test]
fn afista_not_worse_than_fbs_on_lasso() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "problem = lasso\nsolvers = afista,fbs\nseeds = 0..3\nmax_iters = 300\nemit_plot_data = false\n");
    assert_eq!(cfg.problem, ProblemKind::Lasso);
    let out = run_benchmark(&cfg).unwrap();
    for seed in 0..3 {
        let get = |id| out.iter().find(|o| o.solver == id && o.seed == seed).unwrap().run.final_objective();
        assert!(get(SolverId::Afista) <= get(SolverId::Fbs), "seed {seed}");
    }
    assert!(audit(&out).is_empty());
}

#[test]
fn plot_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "solvers = fbs, afista\nseeds = 2\nmax_iters = 1\nfigure_names = true\n");
    run_benchmark(&cfg).unwrap();
    let iter = fs::read_to_string(dir.path().join("SimpleSparseNet_conv_FBS_iter.dat")).unwrap();
    let rows: Vec<&str> = iter.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "0 1");
    assert!(dir.path().join("SimpleSparseNet_conv_aFISTA_time.dat").exists());

    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "solvers = afista, mfista, fbs\nseeds = 0\nmax_iters = 100\n");
    run_benchmark(&cfg).unwrap();
    for name in ["afista_0_iter.dat", "mfista_0_iter.dat", "fbs_0_iter.dat"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let vals: Vec<f64> = text.lines().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(vals.len(), 101);
        assert!(vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{name}");
    }
}

#[test]
fn repeated_runs_match_without_time() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = "solvers = mm_afista, ipiano\nseeds = 7\nmax_iters = 60\n";
    run_benchmark(&small(a.path(), text)).unwrap();
    run_benchmark(&small(b.path(), text)).unwrap();
    for name in ["mm_afista_7.csv", "ipiano_7.csv", "summary.csv"] {
        let x = fs::read_to_string(a.path().join(name)).unwrap();
        let y = fs::read_to_string(b.path().join(name)).unwrap();
        assert_eq!(mask_time_column(&x), mask_time_column(&y), "{name}");
    }
}

#[test]
fn accelerated_runs_need_convexity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "solver = adaptive_tseng\nseeds = 0\nmax_iters = 5\n");
    assert!(run_benchmark(&cfg).is_err());
    let cfg = small(dir.path(), "problem = lasso\nsolver = adaptive_tseng\nseeds = 0\nmax_iters = 5\n");
    assert!(run_benchmark(&cfg).is_ok());
}

#[test]
fn config_errors() {
    for (text, line) in [("alpha = -1\n", 1), ("\n\nfoo = 2\n", 3), ("seeds = 1\nproblem =\n", 2), ("max_iters = 1.5", 1)] {
        match parse_config(text) {
            Err(afista_bench::BenchError::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}
