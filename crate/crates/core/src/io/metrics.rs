//! CSV metrics, one row per (method, parameter set, seed).
//!
//! Columns, in order: `method, n1, n2, n3, seed, b, q, tau, K, p, lambda, mu0,
//! multirank, tubal_rank, re, re_tubsv, iterations, converged, wall_time_s`.
//! Unused parameters are empty. `multirank` and `re_tubsv` are `;`-separated lists.
//! Wall time is always the last column, so stripping it leaves a reproducible table.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub const HEADER: [&str; 19] = [
    "method", "n1", "n2", "n3", "seed", "b", "q", "tau", "K", "p", "lambda", "mu0", "multirank", "tubal_rank", "re",
    "re_tubsv", "iterations", "converged", "wall_time_s",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub dims: (usize, usize, usize),
    pub seed: Option<u64>,
    pub b: Option<usize>,
    pub q: Option<usize>,
    pub tau: Option<f64>,
    pub k: Option<usize>,
    pub p: Option<usize>,
    pub lambda: Option<f64>,
    pub mu0: Option<f64>,
    pub multirank: Vec<usize>,
    pub re: f64,
    pub re_tubsv: Vec<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_time_s: f64,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

impl MetricsRow {
    pub fn new(method: impl Into<String>, dims: (usize, usize, usize)) -> Self {
        Self { method: method.into(), dims, ..Self::default() }
    }

    pub fn tubal_rank(&self) -> usize {
        self.multirank.iter().copied().max().unwrap_or(0)
    }

    pub fn fields(&self) -> [String; 19] {
        let (n1, n2, n3) = self.dims;
        [
            self.method.clone(),
            n1.to_string(),
            n2.to_string(),
            n3.to_string(),
            opt(self.seed),
            opt(self.b),
            opt(self.q),
            opt(self.tau),
            opt(self.k),
            opt(self.p),
            opt(self.lambda),
            opt(self.mu0),
            join(&self.multirank),
            self.tubal_rank().to_string(),
            self.re.to_string(),
            join(&self.re_tubsv),
            opt(self.iterations),
            opt(self.converged),
            format!("{:.6}", self.wall_time_s),
        ]
    }
}

/// Writes the header and `rows`.
pub fn write_metrics<W: Write>(w: W, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for row in rows {
        out.write_record(row.fields())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics_file(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    write_metrics(std::fs::File::create(path)?, rows)
}

/// Rows with the wall-time column removed.
pub fn read_metrics_without_time(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().take(rec.len().saturating_sub(1)).map(str::to_owned).collect());
    }
    Ok(rows)
}
