//! Command-line front end: `fit`, `gen`, `bench` and `standardize`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure. Defaults for the
//! solver parameters can be overridden through `L1PCA_*` environment variables.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    emit_report_named, read_external_results, run_sweep, Algorithm, GroupBy, Instance,
    ReportOptions,
};
use crate::dataio::{
    partition_by_label, read_labeled, read_matrix, standardize, write_matrix, LabelColumn,
};
use crate::error::{Error, Result};
use crate::instance_gen::{generate, grid, standard_grid, SyntheticSpec};
use crate::irls::{self, IrlsConfig, Mode, Trigger};
use crate::linalg::l2pca;
use crate::weights::l1_objective;

#[derive(Debug, Parser)]
#[command(name = "l1pca", version, about = "L1-norm PCA by iteratively reweighted least squares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit principal components to a matrix file and write the loadings.
    Fit(FitArgs),
    /// Generate synthetic low-rank instances with outlier rows.
    Gen(GenArgs),
    /// Run an algorithm x instance x p sweep and write runs.csv / summary.csv.
    Bench(BenchArgs),
    /// Standardize a matrix, or partition and standardize a labeled table.
    Standardize(StandardizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Wpca,
    Awpca,
    L2pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TriggerArg {
    /// ‖w^t - w^{t-1}‖_1 > γ‖w^t‖_1
    Weights,
    /// ‖A_t - A_{t-1}‖_F^2 > γ‖A‖_F^2
    Delta,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Weight-convergence tolerance.
    #[arg(long, env = "L1PCA_EPSILON", default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Damping base in (0, 1).
    #[arg(long, env = "L1PCA_BETA", default_value_t = 0.99)]
    pub beta: f64,
    /// awPCA exact-step trigger threshold.
    #[arg(long, env = "L1PCA_GAMMA", default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, env = "L1PCA_MAX_ITERS", default_value_t = 200)]
    pub max_iters: usize,
    /// awPCA exact-step trigger.
    #[arg(long, env = "L1PCA_TRIGGER", value_enum, default_value_t = TriggerArg::Weights)]
    pub trigger: TriggerArg,
    /// Fail instead of falling back to an exact solve on a degenerate spectrum.
    #[arg(long, default_value_t = false)]
    pub no_fallback: bool,
    /// Use the data as given instead of standardizing columns.
    #[arg(long, default_value_t = false)]
    pub no_standardize: bool,
}

impl SolverArgs {
    fn config(&self, mode: Mode) -> IrlsConfig {
        IrlsConfig {
            epsilon: self.epsilon,
            beta: self.beta,
            gamma: self.gamma,
            max_iters: self.max_iters,
            mode,
            trigger: match self.trigger {
                TriggerArg::Weights => Trigger::Weights,
                TriggerArg::Delta => Trigger::Delta,
            },
            degenerate_fallback: !self.no_fallback,
            ..IrlsConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Matrix CSV (rows = observations).
    #[arg(long)]
    pub input: PathBuf,
    /// Number of principal components.
    #[arg(long)]
    pub p: usize,
    #[arg(long, env = "L1PCA_ALGO", value_enum, default_value_t = AlgoArg::Wpca)]
    pub algo: AlgoArg,
    /// Output file for the m x p loadings.
    #[arg(long, default_value = "loadings.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Target rank.
    #[arg(long, default_value_t = 10)]
    pub q: usize,
    /// Outlier row probability.
    #[arg(long, default_value_t = 0.1)]
    pub r: f64,
    /// Seed of the first instance; later instances use seed + 1, seed + 2, ...
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value = "instances")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Glob of instance files.
    #[arg(long, conflicts_with = "grid")]
    pub instances: Option<String>,
    /// Synthetic grid: `standard`, or `m=20,50;n=100,300;r=0,0.1;q=10;count=5;seed=1`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "wpca,awpca")]
    pub algos: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "8,9,10,11,12")]
    pub p_list: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// CSV of `instance_id,p,algorithm,objective,time` from other implementations.
    #[arg(long)]
    pub external_results: Option<PathBuf>,
    /// Summary grouping: none, mnp or mnrp.
    #[arg(long, default_value = "mnp")]
    pub group_by: String,
    /// Leave wall-time columns out of the reports.
    #[arg(long, default_value_t = false)]
    pub no_timing: bool,
    #[arg(long, default_value = "bench-out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StandardizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output file, or output directory with --labeled.
    #[arg(long, default_value = "standardized.csv")]
    pub out: PathBuf,
    /// Treat the input as a labeled table and write one standardized file per label.
    #[arg(long, default_value_t = false)]
    pub labeled: bool,
    /// Label column: `last`, a zero-based index, or a header name.
    #[arg(long, default_value = "last")]
    pub label_col: String,
    /// Number of largest label groups to keep.
    #[arg(long, default_value_t = 2)]
    pub top_k: usize,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Gen(a) => cmd_gen(a, out),
        Command::Bench(a) => cmd_bench(a, out, err),
        Command::Standardize(a) => cmd_standardize(a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let raw = read_matrix(&args.input)?;
    let (data, kept) = if args.solver.no_standardize {
        (raw, (0..0).collect::<Vec<_>>())
    } else {
        let s = standardize(&raw)?;
        (s.data, s.kept_columns)
    };
    if args.p < 1 || args.p > data.m() {
        return Err(Error::param(format!(
            "--p must lie in 1..={} (attributes after standardization), got {}",
            data.m(),
            args.p
        )));
    }
    let algo_name = args.algo.to_possible_value().map(|v| v.get_name().to_string());
    let algo_name = algo_name.unwrap_or_default();
    let (loadings, summary) = match args.algo {
        AlgoArg::L2pca => {
            let x = l2pca(&data, args.p)?;
            let f = l1_objective(&data, &x)?;
            let line = format!(
                "algo=l2pca p={} objective={f} iterations=1 termination=exact exact_steps=1 approx_steps=0",
                args.p
            );
            (x.into_loadings(), line)
        }
        AlgoArg::Wpca | AlgoArg::Awpca => {
            let mode = if args.algo == AlgoArg::Wpca { Mode::Exact } else { Mode::Approximate };
            let cfg = args.solver.config(mode);
            let res = irls::fit(&data, args.p, &cfg)?;
            let line = format!(
                "algo={algo_name} p={} objective={} iterations={} termination={} exact_steps={} approx_steps={}",
                args.p,
                res.best_objective,
                res.iterations_run,
                res.termination,
                res.exact_steps,
                res.approx_steps
            );
            (res.best_loadings.into_loadings(), line)
        }
    };
    let s = &args.solver;
    let mut meta = vec![
        format!("input={}", args.input.display()),
        format!(
            "algo={algo_name} p={} epsilon={} beta={} gamma={} max_iters={} trigger={:?} standardized={}",
            args.p, s.epsilon, s.beta, s.gamma, s.max_iters, s.trigger, !s.no_standardize
        ),
    ];
    if !s.no_standardize {
        let cols: Vec<String> = kept.iter().map(|j| j.to_string()).collect();
        meta.push(format!("kept_columns={}", cols.join(";")));
    }
    let names: Vec<String> = (1..=args.p).map(|k| format!("PC{k}")).collect();
    write_matrix(&args.out, &loadings, &meta, Some(&names))?;
    writeln!(out, "{summary}").map_err(|e| Error::io("<stdout>", e))?;
    Ok(())
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<()> {
    if args.count < 1 {
        return Err(Error::param("--count must be at least 1"));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    for k in 0..args.count {
        let spec = SyntheticSpec {
            m: args.m,
            n: args.n,
            q: args.q,
            r: args.r,
            seed: args.seed + k as u64,
        };
        let inst = generate(&spec)?;
        let path = args.out_dir.join(format!("{}.csv", crate::bench::synthetic_id(&spec)));
        write_matrix(&path, inst.data.values(), inst.data.metadata(), None)?;
        writeln!(out, "{}", path.display()).map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

/// Parses a `--grid` value into generator specs.
pub fn parse_grid(text: &str) -> Result<Vec<SyntheticSpec>> {
    if text.trim() == "standard" {
        return Ok(standard_grid(5, 1));
    }
    let mut ms = vec![20, 50];
    let mut ns = vec![100, 300];
    let mut rs = vec![0.0, 0.1, 0.2, 0.3];
    let mut q = 10;
    let mut count = 5;
    let mut seed = 1;
    fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::param(format!("bad value {s:?} for grid key {key}")))
            })
            .collect()
    }
    for part in text.split(';').filter(|s| !s.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::param(format!("grid entry {part:?} is not key=value")))?;
        match key.trim() {
            "m" => ms = list(key, value)?,
            "n" => ns = list(key, value)?,
            "r" => rs = list(key, value)?,
            "q" => q = list::<usize>(key, value)?[0],
            "count" => count = list::<usize>(key, value)?[0],
            "seed" => seed = list::<u64>(key, value)?[0],
            other => return Err(Error::param(format!("unknown grid key {other:?}"))),
        }
    }
    Ok(grid(&ms, &ns, &rs, q, count, seed))
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let standardized = !args.solver.no_standardize;
    let instances: Vec<Instance> = match (&args.instances, &args.grid) {
        (Some(pattern), _) => {
            let paths: Vec<PathBuf> = glob::glob(pattern)
                .map_err(|e| Error::param(format!("bad glob {pattern:?}: {e}")))?
                .filter_map(|p| p.ok())
                .collect();
            if paths.is_empty() {
                return Err(Error::param(format!("no files match {pattern:?}")));
            }
            paths
                .iter()
                .map(|p| Instance::from_file(p, standardized))
                .collect::<Result<_>>()?
        }
        (None, Some(g)) => parse_grid(g)?
            .iter()
            .map(|s| Instance::synthetic(s, standardized))
            .collect::<Result<_>>()?,
        (None, None) => return Err(Error::param("bench needs --instances or --grid")),
    };
    let algorithms: Vec<Algorithm> =
        args.algos.iter().map(|a| a.parse()).collect::<Result<_>>()?;
    let group_by: GroupBy = args.group_by.parse()?;
    let cfg = args.solver.config(Mode::Exact);
    let outcome = run_sweep(&instances, &algorithms, &args.p_list, &cfg, args.reps, args.workers)?;
    let mut records = outcome.records;
    if let Some(path) = &args.external_results {
        records.extend(read_external_results(path, &instances)?);
    }
    if records.is_empty() {
        return Err(Error::EmptyData("every benchmark cell was skipped".into()));
    }
    let opts = ReportOptions { group_by, timing: !args.no_timing };
    let files = emit_report_named(&records, &opts, &args.out_dir, "summary.csv")?;
    if group_by == GroupBy::MNP {
        let by_r = ReportOptions { group_by: GroupBy::MNRP, ..opts };
        emit_report_named(&records, &by_r, &args.out_dir, "summary_by_r.csv")?;
    }
    write_skipped(&args.out_dir.join("skipped.csv"), &outcome.skipped)?;
    for s in &outcome.skipped {
        let _ = writeln!(err, "skipped {} {} p={}: {}", s.instance_id, s.algorithm.name(), s.p, s.reason);
    }
    writeln!(
        out,
        "records={} skipped={} runs={} summary={}",
        records.len(),
        outcome.skipped.len(),
        files.runs.display(),
        files.summary.display()
    )
    .map_err(|e| Error::io("<stdout>", e))?;
    Ok(())
}

fn write_skipped(path: &Path, skipped: &[crate::bench::SkippedCell]) -> Result<()> {
    let mut text = String::from("instance_id,algorithm,p,reason\n");
    for s in skipped {
        let reason = s.reason.replace(['"', ','], " ");
        text.push_str(&format!("{},{},{},{}\n", s.instance_id, s.algorithm.name(), s.p, reason));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_standardize(args: &StandardizeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if !args.labeled {
        let s = standardize(&read_matrix(&args.input)?)?;
        write_matrix(&args.out, s.data.values(), s.data.metadata(), None)?;
        writeln!(out, "{} m={} n={}", args.out.display(), s.data.m(), s.data.n())
            .map_err(|e| Error::io("<stdout>", e))?;
        return Ok(());
    }
    let label: LabelColumn = args.label_col.parse().expect("infallible");
    let table = read_labeled(&args.input, &label)?;
    let groups = partition_by_label(&table, args.top_k)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let stem = args
        .input
        .file_stem()
        .map_or_else(|| "table".to_string(), |s| s.to_string_lossy().into_owned());
    for g in groups {
        let Some(s) = g.standardized else {
            let _ = writeln!(err, "label {:?}: {} rows cannot be standardized, skipped", g.label, g.rows.len());
            continue;
        };
        let safe: String = g
            .label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let path = args.out.join(format!("{stem}_{safe}.csv"));
        let names: Vec<String> = s.kept_columns.iter().map(|&j| table.attribute_names[j].clone()).collect();
        write_matrix(&path, s.data.values(), s.data.metadata(), Some(&names))?;
        writeln!(out, "{} m={} n={}", path.display(), s.data.m(), s.data.n())
            .map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}
