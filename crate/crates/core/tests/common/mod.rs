#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

pub fn cli(workdir: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["actpred".to_string(), "--workdir".into(), workdir.to_str().unwrap().into()];
    full.extend(args.iter().map(|s| s.to_string()));
    actpred::cli::run(full)
}

pub fn cli_ok(workdir: &Path, args: &[&str]) {
    assert_eq!(cli(workdir, args), 0, "actpred {args:?} failed");
}

/// synth through eval on a fresh corpus in `workdir`.
pub fn run_pipeline(workdir: &Path, seed: u64, users: usize, clusters: usize, epochs: usize) {
    let seed = seed.to_string();
    let users = users.to_string();
    let clusters = clusters.to_string();
    let epochs = epochs.to_string();
    let s = seed.as_str();
    cli_ok(workdir, &["--seed", s, "synth", "--users", &users, "--clusters", &clusters]);
    cli_ok(workdir, &["--seed", s, "queries"]);
    cli_ok(workdir, &["--seed", s, "extract"]);
    cli_ok(workdir, &["--seed", s, "embed"]);
    cli_ok(workdir, &["--seed", s, "cluster", "sweep", "--n-min", "1", "--n-max", "4"]);
    cli_ok(workdir, &["--seed", s, "cluster", "fit", "--k", &clusters]);
    cli_ok(workdir, &["--seed", s, "values"]);
    cli_ok(workdir, &["--seed", s, "label"]);
    cli_ok(workdir, &["--seed", s, "values", "--cluster-scores"]);
    cli_ok(workdir, &["--seed", s, "train", "--epochs", &epochs]);
    cli_ok(workdir, &["--seed", s, "eval"]);
}

/// Every file in `dir` by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Parses report.csv into variant -> column -> value.
pub fn read_report(path: &Path) -> BTreeMap<String, BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            let row = header[1..]
                .iter()
                .zip(&cells[1..])
                .map(|(h, c)| (h.to_string(), c.parse().unwrap()))
                .collect();
            (cells[0].to_string(), row)
        })
        .collect()
}
