use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use lvglasso::bench::{self, BenchConfig, ResultRow, RunManifest};
use lvglasso::datagen::{self, JointMode, DEFAULT_DENSITY, SAMPLES_PER_VARIABLE};
use lvglasso::matrix::{read_csv, set_linear_algebra_threads, write_csv};
use lvglasso::solvers::{kkt_residuals, Continuation, SolverOptions};
use lvglasso::{solve, Problem, ShrinkMode, Variant};

#[derive(Parser)]
#[command(name = "lvglasso", version, about = "Sparse-minus-low-rank precision matrix estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Run an (alpha, beta) grid over one or more variants.
    Bench(BenchArgs),
    /// Build a covariance from the highest-variance columns of raw data.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Observed variables.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    p: u64,
    /// Hidden variables.
    #[arg(long, default_value_t = 1)]
    ph: usize,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of samples (default 5p).
    #[arg(long)]
    samples: Option<usize>,
    /// How the joint precision is formed from the sparse factor.
    #[arg(long, default_value = "verbatim", value_parser = parse_joint)]
    joint: JointMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    mu0: Option<f64>,
    /// Shrink mu by 1/4 every 10 iterations (default).
    #[arg(long, overrides_with = "no_continuation")]
    continuation: bool,
    /// Keep mu fixed.
    #[arg(long = "no-continuation")]
    no_continuation: bool,
    #[arg(long, default_value_t = 0.6)]
    tau: f64,
    /// Relative infeasibility tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Relative change in R also required before stopping.
    #[arg(long)]
    tol_step: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Penalize the full matrix or only off-diagonal entries.
    #[arg(long, default_value = "full", value_parser = parse_mode)]
    mode: ShrinkMode,
    /// Refuse step sizes outside the proven convergence range.
    #[arg(long)]
    strict: bool,
}

impl SolverArgs {
    fn options(&self, variant: Variant) -> anyhow::Result<SolverOptions> {
        let continuation = if self.no_continuation {
            Continuation::disabled()
        } else {
            Continuation::default()
        };
        let opts = SolverOptions {
            variant,
            mu0: self.mu0,
            continuation,
            tau: self.tau,
            tol_infeas: self.tol,
            tol_step: self.tol_step,
            max_iter: self.max_iter,
            record_history: false,
            strict: self.strict,
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Covariance CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value = "pgadm")]
    variant: Variant,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Covariance CSV.
    #[arg(long)]
    input: PathBuf,
    /// Alpha values, paired in order with --beta; a single value is reused.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "pgadm")]
    variant: Vec<Variant>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Grid cells solved concurrently (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Raw data CSV, one sample per row.
    #[arg(long)]
    input: PathBuf,
    /// Number of variables to keep.
    #[arg(long)]
    p: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<ShrinkMode, String> {
    match s {
        "full" => Ok(ShrinkMode::Full),
        "offdiag" => Ok(ShrinkMode::OffDiagonal),
        _ => Err(format!("expected full or offdiag, got {s:?}")),
    }
}

fn parse_joint(s: &str) -> Result<JointMode, String> {
    match s {
        "verbatim" => Ok(JointMode::Verbatim),
        "direct" => Ok(JointMode::Direct),
        _ => Err(format!("expected verbatim or direct, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let threads = bench::threads_from_env()?;
    set_linear_algebra_threads(threads);
    let args: Vec<String> = std::env::args().skip(1).collect();
    match cli.command {
        Command::Gen(a) => gen(a, args, threads),
        Command::Solve(a) => solve_cmd(a, args, threads),
        Command::Bench(a) => bench_cmd(a, args, threads),
        Command::Ingest(a) => ingest(a, args, threads),
    }
}

fn create_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn gen(a: GenArgs, args: Vec<String>, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let p = usize::try_from(a.p)?;
    let n = a.samples.unwrap_or(SAMPLES_PER_VARIABLE * p);
    let sample_seed = a.seed.wrapping_add(1);
    let truth = datagen::generate_ground_truth_with(p, a.ph, a.density, a.seed, a.joint)?;
    let data = datagen::sample_mvn(&truth.precision_x, n, sample_seed)?;

    create_out(&a.out)?;
    write_csv(&data.sigma_hat, a.out.join("sigma_hat.csv"))?;
    write_csv(&truth.s_true, a.out.join("s_true.csv"))?;
    write_csv(&truth.l_true, a.out.join("l_true.csv"))?;
    let mut manifest = RunManifest::new("gen", args)
        .param("p", p)
        .param("ph", a.ph)
        .param("density", a.density)
        .param("samples", n)
        .param("sample_seed", sample_seed)
        .param("joint", a.joint)
        .param("ridged", truth.ridged);
    manifest.seed = Some(a.seed);
    manifest.threads = threads;
    manifest.write(a.out.join("manifest.json"))?;
    println!("wrote p={p} instance ({n} samples) to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn solve_cmd(a: SolveArgs, args: Vec<String>, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let opts = a.solver.options(a.variant)?;
    let sigma_hat = read_csv(&a.input)?;
    let problem = Problem::new(sigma_hat, a.alpha, a.beta, a.solver.mode)?;
    let report = solve(&problem, &opts, None)?;
    let kkt = kkt_residuals(&problem, &report.iterate)?;
    let row = ResultRow::from_report(a.alpha, a.beta, a.variant, &report);

    create_out(&a.out)?;
    write_csv(&report.iterate.s, a.out.join("S.csv"))?;
    write_csv(&report.iterate.l, a.out.join("L.csv"))?;
    write_csv(&report.iterate.r, a.out.join("R.csv"))?;
    let mut manifest = RunManifest::new("solve", args)
        .param("alpha", a.alpha)
        .param("beta", a.beta)
        .param("mode", a.solver.mode);
    manifest.solver = Some(opts);
    manifest.inputs.push(a.input.display().to_string());
    manifest.threads = threads;
    let result = serde_json::json!({
        "row": row,
        "kkt": kkt,
        "sp": report.sp,
        "sp1": report.sp1,
        "objective_parts": report.parts,
        "constraint_gap": report.constraint_gap,
        "manifest": manifest,
    });
    fs::write(
        a.out.join("result.json"),
        serde_json::to_string_pretty(&result)? + "\n",
    )
    .with_context(|| format!("cannot write {}", a.out.join("result.json").display()))?;
    manifest.write(a.out.join("manifest.json"))?;
    print!("{}", bench::format_table(std::slice::from_ref(&row)));
    if report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("iteration cap reached (infeas {:.3e})", report.infeas);
        Ok(ExitCode::from(2))
    }
}

fn pair_grid(alpha: &[f64], beta: &[f64]) -> anyhow::Result<Vec<(f64, f64)>> {
    if alpha.is_empty() || beta.is_empty() {
        bail!("the (alpha, beta) grid is empty; pass --alpha and --beta");
    }
    let n = alpha.len().max(beta.len());
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if v.len() != 1 && v.len() != n {
            bail!("--{name} has {} values; expected 1 or {n}", v.len());
        }
    }
    let pick = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
    Ok((0..n).map(|i| (pick(alpha, i), pick(beta, i))).collect())
}

fn bench_cmd(a: BenchArgs, args: Vec<String>, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let grid = pair_grid(&a.alpha, &a.beta)?;
    let opts = a.solver.options(Variant::Pgadm)?;
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let sigma_hat = read_csv(&a.input)?;
    let config = BenchConfig {
        grid: grid.clone(),
        variants: a.variant.clone(),
        repetitions: a.reps,
        options: opts.clone(),
        shrink_mode: a.solver.mode,
        jobs,
    };
    let (rows, errors) = bench::run_grid(&sigma_hat, &config)?;
    for e in &errors {
        eprintln!("cell failed: {e}");
    }

    create_out(&a.out)?;
    let path = a.out.join("results.csv");
    fs::write(&path, bench::results_to_csv(&rows))
        .with_context(|| format!("cannot write {}", path.display()))?;
    let variants: Vec<&str> = a.variant.iter().map(|v| v.name()).collect();
    let mut manifest = RunManifest::new("bench", args)
        .param("grid", &grid)
        .param("variants", variants)
        .param("reps", a.reps)
        .param("jobs", jobs)
        .param("mode", a.solver.mode);
    manifest.solver = Some(opts);
    manifest.inputs.push(a.input.display().to_string());
    manifest.threads = threads;
    manifest.write(a.out.join("manifest.json"))?;
    print!("{}", bench::format_table(&rows));
    Ok(ExitCode::SUCCESS)
}

fn ingest(a: IngestArgs, args: Vec<String>, threads: Option<usize>) -> anyhow::Result<ExitCode> {
    let raw = datagen::read_raw_csv(&a.input)?;
    let (selected, cov) = datagen::top_variance_selection(&raw, a.p)
        .with_context(|| format!("ingesting {}", a.input.display()))?;
    create_out(&a.out)?;
    write_csv(&cov, a.out.join("sigma_hat.csv"))?;
    let mut manifest = RunManifest::new("ingest", args)
        .param("p", a.p)
        .param("samples", raw.nrows())
        .param("selected_columns", &selected);
    manifest.inputs.push(a.input.display().to_string());
    manifest.threads = threads;
    manifest.write(a.out.join("manifest.json"))?;
    println!(
        "selected {} of {} columns from {} samples",
        a.p,
        raw.ncols(),
        raw.nrows()
    );
    Ok(ExitCode::SUCCESS)
}
