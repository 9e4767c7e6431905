//! Seed-aggregated plot series from per-seed metric CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use symmarl::marl::METRICS_HEADER;

use crate::error::CliError;

pub const SEED_PREFIX: &str = "seed_";
pub const METRICS_FILE: &str = "metrics.csv";

/// Columns of one metrics file.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable {
    pub episodes: Vec<usize>,
    /// `columns[c][row]` for every column after `episode`.
    pub columns: Vec<Vec<f64>>,
}

pub fn read_metrics(path: &Path) -> Result<MetricTable, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(CliError::Runtime(format!("{} does not start with the metrics header", path.display())));
    }
    let width = METRICS_HEADER.split(',').count();
    let mut t = MetricTable {
        episodes: Vec::new(),
        columns: vec![Vec::new(); width - 1],
    };
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || CliError::Runtime(format!("{} line {}: malformed row", path.display(), n + 2));
        if fields.len() != width {
            return Err(bad());
        }
        t.episodes.push(fields[0].parse().map_err(|_| bad())?);
        for (c, f) in fields[1..].iter().enumerate() {
            t.columns[c].push(f.parse().map_err(|_| bad())?);
        }
    }
    Ok(t)
}

/// Mean and population standard deviation, summed in sorted order so the
/// result does not depend on the order of the inputs.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / n).sqrt())
}

/// `seed_*` directories holding a metrics file, sorted by name.
pub fn seed_dirs(run: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(run).map_err(|e| CliError::Runtime(format!("cannot read run directory {}: {e}", run.display())))?;
    let mut dirs = Vec::new();
    for e in entries {
        let p = e?.path();
        let is_seed = p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(SEED_PREFIX));
        if is_seed && p.join(METRICS_FILE).is_file() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Writes `plots/learning_curve.csv` and `plots/invariancy.csv` under `run`;
/// returns the files written.
pub fn export_plots(run: &Path) -> Result<Vec<PathBuf>, CliError> {
    let dirs = seed_dirs(run)?;
    if dirs.is_empty() {
        return Err(CliError::Runtime(format!("{} contains no {SEED_PREFIX}*/{METRICS_FILE}", run.display())));
    }
    let tables = dirs.iter().map(|d| read_metrics(&d.join(METRICS_FILE))).collect::<Result<Vec<_>, _>>()?;
    let episodes = &tables[0].episodes;
    if let Some((d, _)) = dirs.iter().zip(&tables).find(|(_, t)| &t.episodes != episodes) {
        return Err(CliError::Runtime(format!("{} logs different episodes than {}", d.display(), dirs[0].display())));
    }
    let names: Vec<&str> = METRICS_HEADER.split(',').skip(1).collect();
    let series = |cols: &[&str]| -> String {
        let mut out = String::from("episode");
        for c in cols {
            let _ = write!(out, ",{c}_mean,{c}_std");
        }
        out.push_str(",seeds\n");
        for (row, ep) in episodes.iter().enumerate() {
            let _ = write!(out, "{ep}");
            for c in cols {
                let k = names.iter().position(|n| n == c).expect("known column");
                let vals: Vec<f64> = tables.iter().map(|t| t.columns[k][row]).collect();
                let (m, s) = mean_std(&vals);
                let _ = write!(out, ",{m},{s}");
            }
            let _ = writeln!(out, ",{}", tables.len());
        }
        out
    };
    let plots = run.join("plots");
    std::fs::create_dir_all(&plots)?;
    let files = [
        (plots.join("learning_curve.csv"), series(&["return", "critic_loss", "actor_loss"])),
        (plots.join("invariancy.csv"), series(&["rot_invariancy", "transl_invariancy"])),
    ];
    for (p, text) in &files {
        std::fs::write(p, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
