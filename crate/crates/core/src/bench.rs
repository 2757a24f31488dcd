//! Run manifests, result rows and the (α, β) grid runner behind the CLI.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::prox::ShrinkMode;
use crate::solvers::{solve, Problem, SolveReport, SolverOptions, Variant};

/// Header of `results.csv`.
pub const RESULTS_HEADER: &str =
    "alpha,beta,variant,obj,iter,cpu_seconds,infeas,sp_percent,sp1_percent,converged";

/// Environment variable capping the threads used inside the eigensolver.
pub const THREADS_ENV: &str = "LVG_THREADS";

/// Everything needed to rerun a command and get the same files back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Command-line arguments after the program name.
    pub args: Vec<String>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub solver: Option<SolverOptions>,
    pub inputs: Vec<String>,
    pub threads: Option<usize>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            parameters: BTreeMap::new(),
            seed: None,
            solver: None,
            inputs: Vec::new(),
            threads: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        let value = serde_json::to_value(value).expect("manifest parameters serialize");
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            location: "manifest".into(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_json() + "\n")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_file(path.as_ref())?)
    }
}

pub(crate) fn write_file(path: &Path, contents: String) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads [`THREADS_ENV`]. Unset or empty leaves the choice to the caller.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::invalid(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// One line of a benchmark table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub alpha: f64,
    pub beta: f64,
    pub variant: Variant,
    /// NaN when the solve failed.
    pub obj: f64,
    pub iter: usize,
    pub cpu_seconds: f64,
    pub infeas: f64,
    pub sp_percent: f64,
    pub sp1_percent: f64,
    pub converged: bool,
}

fn percent(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}

impl ResultRow {
    pub fn from_report(alpha: f64, beta: f64, variant: Variant, report: &SolveReport) -> Self {
        Self {
            alpha,
            beta,
            variant,
            obj: report.objective,
            iter: report.iterations,
            cpu_seconds: report.wall_seconds,
            infeas: report.infeas,
            sp_percent: percent(report.sp),
            sp1_percent: percent(report.sp1),
            converged: report.converged,
        }
    }

    pub fn failed(alpha: f64, beta: f64, variant: Variant) -> Self {
        Self {
            alpha,
            beta,
            variant,
            obj: f64::NAN,
            iter: 0,
            cpu_seconds: 0.0,
            infeas: f64::NAN,
            sp_percent: f64::NAN,
            sp1_percent: f64::NAN,
            converged: false,
        }
    }

    fn record(&self) -> [String; 10] {
        [
            fmt_field(self.alpha),
            fmt_field(self.beta),
            self.variant.name().to_string(),
            fmt_field(self.obj),
            self.iter.to_string(),
            fmt_field(self.cpu_seconds),
            fmt_field(self.infeas),
            fmt_field(self.sp_percent),
            fmt_field(self.sp1_percent),
            self.converged.to_string(),
        ]
    }
}

// Rust's float Display is the shortest string that parses back exactly.
fn fmt_field(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn parse_field(v: &str, line: usize, column: &str) -> Result<f64> {
    if v.is_empty() {
        return Ok(f64::NAN);
    }
    v.parse().map_err(|_| Error::Parse {
        location: format!("results line {line}, column {column}"),
        message: format!("not a number: {v:?}"),
    })
}

pub fn write_results(rows: &[ResultRow], out: impl io::Write) -> Result<()> {
    let to_err = |e: csv::Error| Error::NumericalFailure(format!("writing results: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER.split(',')).map_err(to_err)?;
    for row in rows {
        w.write_record(row.record()).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::NumericalFailure(format!("writing results: {e}")))
}

pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records.next().ok_or_else(|| Error::Parse {
        location: "results".into(),
        message: "missing header".into(),
    })?;
    let header = header.map_err(|e| Error::Parse {
        location: "results header".into(),
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != RESULTS_HEADER {
        return Err(Error::Parse {
            location: "results header".into(),
            message: format!("expected {RESULTS_HEADER:?}"),
        });
    }
    let mut rows = Vec::new();
    for (idx, rec) in records.enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| Error::Parse {
            location: format!("results line {line}"),
            message: e.to_string(),
        })?;
        let f: Vec<&str> = rec.iter().collect();
        if f.len() != 10 {
            return Err(Error::Parse {
                location: format!("results line {line}"),
                message: format!("expected 10 fields, found {}", f.len()),
            });
        }
        let bad = |column: &str, v: &str| Error::Parse {
            location: format!("results line {line}, column {column}"),
            message: format!("invalid value {v:?}"),
        };
        rows.push(ResultRow {
            alpha: parse_field(f[0], line, "alpha")?,
            beta: parse_field(f[1], line, "beta")?,
            variant: f[2].parse().map_err(|_| bad("variant", f[2]))?,
            obj: parse_field(f[3], line, "obj")?,
            iter: f[4].parse().map_err(|_| bad("iter", f[4]))?,
            cpu_seconds: parse_field(f[5], line, "cpu_seconds")?,
            infeas: parse_field(f[6], line, "infeas")?,
            sp_percent: parse_field(f[7], line, "sp_percent")?,
            sp1_percent: parse_field(f[8], line, "sp1_percent")?,
            converged: f[9].parse().map_err(|_| bad("converged", f[9]))?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// `(α, β)` pairs in output order.
    pub grid: Vec<(f64, f64)>,
    pub variants: Vec<Variant>,
    pub repetitions: usize,
    /// Template options; `variant` is overwritten per cell.
    pub options: SolverOptions,
    pub shrink_mode: ShrinkMode,
    /// Maximum number of cells solved at once.
    pub jobs: usize,
}

/// Solves every `(α, β, variant, rep)` cell. Rows come back in that nesting
/// order however the cells are scheduled. A failing cell yields
/// [`ResultRow::failed`] and a message in the second vector.
pub fn run_grid(
    sigma_hat: &SymmetricMatrix,
    config: &BenchConfig,
) -> Result<(Vec<ResultRow>, Vec<String>)> {
    if config.grid.is_empty() {
        return Err(Error::invalid("the (alpha, beta) grid is empty"));
    }
    if config.variants.is_empty() {
        return Err(Error::invalid("no variants selected"));
    }
    if config.repetitions == 0 || config.jobs == 0 {
        return Err(Error::invalid("repetitions and jobs must be at least 1"));
    }
    let mut cells = Vec::new();
    for &(alpha, beta) in &config.grid {
        for &variant in &config.variants {
            for _ in 0..config.repetitions {
                cells.push((alpha, beta, variant));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<std::result::Result<ResultRow, (ResultRow, String)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(alpha, beta, variant)| {
                let opts = SolverOptions {
                    variant,
                    ..config.options.clone()
                };
                Problem::new(sigma_hat.clone(), alpha, beta, config.shrink_mode)
                    .and_then(|problem| solve(&problem, &opts, None))
                    .map(|rep| ResultRow::from_report(alpha, beta, variant, &rep))
                    .map_err(|e| {
                        let msg = format!("alpha={alpha} beta={beta} variant={variant}: {e}");
                        (ResultRow::failed(alpha, beta, variant), msg)
                    })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err((row, msg)) => {
                rows.push(row);
                errors.push(msg);
            }
        }
    }
    Ok((rows, errors))
}

/// Fixed-width table with the usual benchmark columns.
pub fn format_table(rows: &[ResultRow]) -> String {
    let mut out = format!(
        "{:>8} {:>8} {:>10} {:>16} {:>6} {:>9} {:>10} {:>7} {:>7}\n",
        "alpha", "beta", "variant", "obj", "iter", "cpu", "infeas", "sp(%)", "sp1(%)"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>8} {:>8} {:>10} {:>16.8} {:>6} {:>9.3} {:>10.2e} {:>7.2} {:>7.2}{}\n",
            r.alpha,
            r.beta,
            r.variant.name(),
            r.obj,
            r.iter,
            r.cpu_seconds,
            r.infeas,
            r.sp_percent,
            r.sp1_percent,
            if r.converged { "" } else { "  *" }
        ));
    }
    out
}
