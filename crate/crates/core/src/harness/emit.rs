//! CSV and plot-data output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{group_by_epsilon, ExperimentResult, ResultRow};
use crate::error::{Error, Result};
use crate::strategies::StrategyId;

pub const CSV_HEADER: &str = "strategy,epsilon,seed,estimate,exact,abs_error,total_queries,modeled_gates";
const PLOT_HEADER: &str = "curve\tstrategy\tx\ty\tyerr";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Plotdata,
}

impl OutputFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "results.csv",
            OutputFormat::Plotdata => "plotdata.tsv",
        }
    }
}

/// Reals carry 17 significant digits, so parsing restores them exactly.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.strategy,
            real(r.epsilon),
            r.seed,
            real(r.estimate),
            real(r.exact),
            real(r.abs_error),
            r.total_queries,
            r.modeled_gates
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("csv header does not match".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |what: &str| Error::Parse(format!("csv line {}: bad {what}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad("field count"));
            }
            let real = |j: usize, what: &str| f[j].parse::<f64>().map_err(|_| bad(what));
            let int = |j: usize, what: &str| f[j].parse::<u64>().map_err(|_| bad(what));
            Ok(ResultRow {
                strategy: f[0].parse().map_err(|_| bad("strategy"))?,
                epsilon: real(1, "epsilon")?,
                seed: int(2, "seed")?,
                estimate: real(3, "estimate")?,
                exact: real(4, "exact")?,
                abs_error: real(5, "abs_error")?,
                total_queries: int(6, "total_queries")?,
                modeled_gates: int(7, "modeled_gates")?,
            })
        })
        .collect()
}

/// Two curves per strategy, one point per epsilon:
/// `error_vs_queries` (mean queries, RMSE, standard error of the RMSE) and
/// `queries_vs_epsilon` (epsilon, mean queries, standard error of the mean).
pub fn plotdata(result: &ExperimentResult) -> String {
    let mut strategies: Vec<StrategyId> = Vec::new();
    for r in &result.rows {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy);
        }
    }
    let mut s = String::from(PLOT_HEADER);
    s.push('\n');
    let mut queries_lines = String::new();
    for &strategy in &strategies {
        for (eps, rows) in group_by_epsilon(&result.rows, strategy) {
            let q: Vec<f64> = rows.iter().map(|r| r.total_queries as f64).collect();
            let e2: Vec<f64> = rows.iter().map(|r| r.abs_error * r.abs_error).collect();
            let (q_mean, q_sem) = mean_sem(&q);
            let (mse, mse_sem) = mean_sem(&e2);
            let rmse = mse.sqrt();
            // delta method: se(sqrt(m)) = se(m) / (2 sqrt(m))
            let rmse_err = if rmse > 0.0 { mse_sem / (2.0 * rmse) } else { 0.0 };
            let _ = writeln!(s, "error_vs_queries\t{strategy}\t{}\t{}\t{}", real(q_mean), real(rmse), real(rmse_err));
            let _ = writeln!(queries_lines, "queries_vs_epsilon\t{strategy}\t{}\t{}\t{}", real(eps), real(q_mean), real(q_sem));
        }
    }
    s.push_str(&queries_lines);
    s
}

fn mean_sem(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Writes `results.csv` or `plotdata.tsv` into `dir` and returns the path.
pub fn emit(result: &ExperimentResult, format: OutputFormat, dir: &Path) -> Result<PathBuf> {
    if result.rows.is_empty() {
        return Err(Error::invalid("nothing to emit"));
    }
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(format.file_name());
    let body = match format {
        OutputFormat::Csv => to_csv(&result.rows),
        OutputFormat::Plotdata => plotdata(result),
    };
    fs::write(&path, body).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}
