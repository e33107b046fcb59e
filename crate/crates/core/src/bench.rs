//! Benchmark harness: algorithm x instance x p sweeps, the capped gap metric and CSV reports.
//!
//! A *cell* is one `(instance, p)` pair. Within a cell every algorithm's objective is compared
//! against the best objective in the cell:
//!
//! ```text
//! gap_a = min(F_a / min_b F_b - 1, 1)
//! ```
//!
//! Reports: `runs.csv` (one line per fit) and `summary.csv` (gaps and times averaged over a
//! grouping of cells, plus the wPCA/awPCA `diff` and `ratio` columns when both are present).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataio::{read_matrix, standardize};
use crate::error::{Error, Result};
use crate::instance_gen::{generate, SyntheticSpec};
use crate::irls::{awpca, wpca, IrlsConfig, Mode};
use crate::linalg::{l2pca, DataMatrix};
use crate::weights::l1_objective;

/// Objectives at or below this count as a perfect fit in the gap metric.
pub const ZERO_OBJECTIVE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Wpca,
    Awpca,
    L2pca,
    /// Objectives injected from an external results file.
    External(String),
}

impl Algorithm {
    pub fn name(&self) -> &str {
        match self {
            Algorithm::Wpca => "wpca",
            Algorithm::Awpca => "awpca",
            Algorithm::L2pca => "l2pca",
            Algorithm::External(name) => name,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wpca" => Ok(Algorithm::Wpca),
            "awpca" => Ok(Algorithm::Awpca),
            "l2pca" => Ok(Algorithm::L2pca),
            other => Err(Error::param(format!(
                "unknown algorithm {other:?} (expected wpca, awpca or l2pca)"
            ))),
        }
    }
}

/// A benchmark instance, already standardized if requested.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub data: DataMatrix,
    /// Generator spec for synthetic instances.
    pub spec: Option<SyntheticSpec>,
}

impl Instance {
    pub fn synthetic(spec: &SyntheticSpec, standardized: bool) -> Result<Self> {
        let inst = generate(spec)?;
        let id = synthetic_id(spec);
        Self::build(id, inst.data, Some(*spec), standardized)
    }

    /// Loads a matrix file; the id is the file stem. Generator metadata, if present, is kept.
    pub fn from_file(path: impl AsRef<Path>, standardized: bool) -> Result<Self> {
        let path = path.as_ref();
        let data = read_matrix(path)?;
        let spec = SyntheticSpec::from_metadata(data.metadata());
        let id = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        Self::build(id, data, spec, standardized)
    }

    pub fn from_matrix(id: impl Into<String>, data: DataMatrix) -> Self {
        Instance { id: id.into(), data, spec: None }
    }

    fn build(
        id: String,
        data: DataMatrix,
        spec: Option<SyntheticSpec>,
        standardized: bool,
    ) -> Result<Self> {
        let data = if standardized { standardize(&data)?.data } else { data };
        Ok(Instance { id, data, spec })
    }
}

pub fn synthetic_id(spec: &SyntheticSpec) -> String {
    format!(
        "syn_m{}_n{}_q{}_r{}_s{}",
        spec.m, spec.n, spec.q, spec.r, spec.seed
    )
}

/// One fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance_id: String,
    pub m: usize,
    pub n: usize,
    /// Outlier fraction of synthetic instances.
    pub r: Option<f64>,
    pub algorithm: Algorithm,
    pub p: usize,
    pub repetition: usize,
    /// L1 reconstruction error on the (standardized) instance.
    pub objective: f64,
    pub wall_time_seconds: f64,
    pub iterations: usize,
    pub termination: String,
    pub exact_steps: usize,
    pub approx_steps: usize,
}

/// A cell that could not be run.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCell {
    pub instance_id: String,
    pub algorithm: Algorithm,
    pub p: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub skipped: Vec<SkippedCell>,
}

/// Capped relative gap of every algorithm to the best objective in one cell.
pub fn gap_metric(objectives: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if objectives.is_empty() {
        return Err(Error::param("gap metric needs at least one objective"));
    }
    if let Some((name, f)) = objectives.iter().find(|(_, f)| !(**f >= 0.0 && f.is_finite())) {
        return Err(Error::param(format!(
            "objective of {name} is {f}, objectives must be finite and non-negative"
        )));
    }
    let best = objectives.values().copied().fold(f64::INFINITY, f64::min);
    Ok(objectives
        .iter()
        .map(|(name, &f)| {
            let gap = if best <= ZERO_OBJECTIVE {
                if f <= ZERO_OBJECTIVE { 0.0 } else { 1.0 }
            } else {
                (f / best - 1.0).min(1.0)
            };
            (name.clone(), gap)
        })
        .collect())
}

/// Runs every `(instance, algorithm, p, repetition)` combination.
///
/// Cells with `p` larger than the instance's attribute count are reported in
/// [`SweepOutcome::skipped`], as are fits that fail. Records come back in a fixed order
/// regardless of `workers`.
pub fn run_sweep(
    instances: &[Instance],
    algorithms: &[Algorithm],
    p_values: &[usize],
    cfg: &IrlsConfig,
    repetitions: usize,
    workers: usize,
) -> Result<SweepOutcome> {
    if instances.is_empty() || algorithms.is_empty() || p_values.is_empty() {
        return Err(Error::param(
            "sweep needs at least one instance, algorithm and p value",
        ));
    }
    if repetitions < 1 {
        return Err(Error::param("repetitions must be at least 1"));
    }
    if algorithms.iter().any(|a| matches!(a, Algorithm::External(_))) {
        return Err(Error::param("external algorithms cannot be run, only imported"));
    }
    cfg.validate()?;

    let mut cells = Vec::new();
    for inst in instances {
        for algo in algorithms {
            for &p in p_values {
                for rep in 0..repetitions {
                    cells.push((inst, algo, p, rep));
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let results: Vec<std::result::Result<RunRecord, SkippedCell>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(inst, algo, p, rep)| run_cell(inst, algo, p, rep, cfg))
            .collect()
    });

    let mut outcome = SweepOutcome::default();
    for res in results {
        match res {
            Ok(rec) => outcome.records.push(rec),
            Err(skip) => {
                if !outcome.skipped.iter().any(|s| {
                    s.instance_id == skip.instance_id && s.algorithm == skip.algorithm && s.p == skip.p
                }) {
                    outcome.skipped.push(skip);
                }
            }
        }
    }
    Ok(outcome)
}

fn run_cell(
    inst: &Instance,
    algo: &Algorithm,
    p: usize,
    rep: usize,
    cfg: &IrlsConfig,
) -> std::result::Result<RunRecord, SkippedCell> {
    let skip = |reason: String| SkippedCell {
        instance_id: inst.id.clone(),
        algorithm: algo.clone(),
        p,
        reason,
    };
    if p > inst.data.m() {
        return Err(skip(format!("p = {p} exceeds m = {}", inst.data.m())));
    }
    let start = Instant::now();
    let fitted = match algo {
        Algorithm::Wpca => wpca(&inst.data, p, &IrlsConfig { mode: Mode::Exact, ..cfg.clone() })
            .map(|r| (r.best_objective, r.iterations_run, r.termination.to_string(), r.exact_steps, r.approx_steps)),
        Algorithm::Awpca => {
            awpca(&inst.data, p, &IrlsConfig { mode: Mode::Approximate, ..cfg.clone() })
                .map(|r| (r.best_objective, r.iterations_run, r.termination.to_string(), r.exact_steps, r.approx_steps))
        }
        Algorithm::L2pca => l2pca(&inst.data, p)
            .and_then(|x| l1_objective(&inst.data, &x))
            .map(|f| (f, 1, "exact".to_string(), 1, 0)),
        Algorithm::External(_) => unreachable!("rejected before scheduling"),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let (objective, iterations, termination, exact_steps, approx_steps) =
        fitted.map_err(|e| skip(e.to_string()))?;
    Ok(RunRecord {
        instance_id: inst.id.clone(),
        m: inst.data.m(),
        n: inst.data.n(),
        r: inst.spec.map(|s| s.r),
        algorithm: algo.clone(),
        p,
        repetition: rep,
        objective,
        wall_time_seconds: elapsed,
        iterations,
        termination,
        exact_steps,
        approx_steps,
    })
}

/// Reads `instance_id,p,algorithm,objective,time` rows (header required) and turns them into
/// records, taking `m`, `n` and `r` from the matching instance.
pub fn read_external_results(
    path: impl AsRef<Path>,
    instances: &[Instance],
) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| parse_error(path, 0, e.to_string()))?;
    let mut out = Vec::new();
    for (k, rec) in reader.deserialize::<(String, usize, String, f64, f64)>().enumerate() {
        let line = k + 2;
        let (instance_id, p, algorithm, objective, time) =
            rec.map_err(|e| parse_error(path, line, e.to_string()))?;
        let inst = instances
            .iter()
            .find(|i| i.id == instance_id)
            .ok_or_else(|| parse_error(path, line, format!("unknown instance {instance_id:?}")))?;
        let algorithm = algorithm
            .parse::<Algorithm>()
            .unwrap_or(Algorithm::External(algorithm));
        out.push(RunRecord {
            instance_id,
            m: inst.data.m(),
            n: inst.data.n(),
            r: inst.spec.map(|s| s.r),
            algorithm,
            p,
            repetition: 0,
            objective,
            wall_time_seconds: time,
            iterations: 0,
            termination: "external".into(),
            exact_steps: 0,
            approx_steps: 0,
        });
    }
    Ok(out)
}

fn parse_error(path: &Path, line: usize, message: String) -> Error {
    Error::Parse { path: path.to_path_buf(), line, column: 0, message }
}

/// How cells are averaged into summary rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    /// One row per `(instance, p)` cell.
    Cell,
    /// Average over `r` and seeds.
    MNP,
    /// Average over seeds only.
    MNRP,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "cell" => Ok(GroupBy::Cell),
            "mnp" | "m,n,p" => Ok(GroupBy::MNP),
            "mnrp" | "m,n,r,p" => Ok(GroupBy::MNRP),
            other => Err(Error::param(format!(
                "unknown grouping {other:?} (expected none, mnp or mnrp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportOptions {
    pub group_by: GroupBy,
    /// Include wall-time columns. Without them the reports are byte-for-byte reproducible.
    pub timing: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { group_by: GroupBy::MNP, timing: true }
    }
}

/// Per-algorithm aggregate of one cell.
#[derive(Debug, Clone, PartialEq)]
struct CellEntry {
    objective: f64,
    time_min: f64,
    time_mean: f64,
    gap: f64,
}

#[derive(Debug, Clone)]
struct Cell {
    instance_id: String,
    m: usize,
    n: usize,
    r: Option<f64>,
    p: usize,
    entries: BTreeMap<Algorithm, CellEntry>,
}

fn build_cells(records: &[RunRecord]) -> Result<Vec<Cell>> {
    let mut order: Vec<(String, usize)> = Vec::new();
    let mut cells: BTreeMap<(String, usize), Cell> = BTreeMap::new();
    let mut reps: BTreeMap<(String, usize, Algorithm), Vec<&RunRecord>> = BTreeMap::new();
    for rec in records {
        let key = (rec.instance_id.clone(), rec.p);
        if !cells.contains_key(&key) {
            order.push(key.clone());
            cells.insert(
                key.clone(),
                Cell {
                    instance_id: rec.instance_id.clone(),
                    m: rec.m,
                    n: rec.n,
                    r: rec.r,
                    p: rec.p,
                    entries: BTreeMap::new(),
                },
            );
        }
        reps.entry((rec.instance_id.clone(), rec.p, rec.algorithm.clone()))
            .or_default()
            .push(rec);
    }
    for ((id, p, algo), runs) in reps {
        let times: Vec<f64> = runs.iter().map(|r| r.wall_time_seconds).collect();
        let entry = CellEntry {
            objective: runs[0].objective,
            time_min: times.iter().copied().fold(f64::INFINITY, f64::min),
            time_mean: times.iter().sum::<f64>() / times.len() as f64,
            gap: 0.0,
        };
        cells.get_mut(&(id, p)).expect("cell exists").entries.insert(algo, entry);
    }
    for cell in cells.values_mut() {
        let objectives: BTreeMap<String, f64> = cell
            .entries
            .iter()
            .map(|(a, e)| (a.name().to_string(), e.objective))
            .collect();
        let gaps = gap_metric(&objectives)?;
        for (algo, entry) in cell.entries.iter_mut() {
            entry.gap = gaps[algo.name()];
        }
    }
    Ok(order.into_iter().map(|k| cells.remove(&k).expect("cell exists")).collect())
}

fn algorithms_in(records: &[RunRecord]) -> Vec<Algorithm> {
    let mut algos: Vec<Algorithm> = Vec::new();
    for rec in records {
        if !algos.contains(&rec.algorithm) {
            algos.push(rec.algorithm.clone());
        }
    }
    algos.sort();
    algos
}

/// Renders `runs.csv`.
pub fn render_runs(records: &[RunRecord], timing: bool) -> Result<String> {
    let cells = build_cells(records)?;
    let gap_of = |rec: &RunRecord| {
        cells
            .iter()
            .find(|c| c.instance_id == rec.instance_id && c.p == rec.p)
            .and_then(|c| c.entries.get(&rec.algorithm))
            .map_or(f64::NAN, |e| e.gap)
    };
    let mut out = String::new();
    out.push_str("instance_id,m,n,r,algorithm,p,repetition,objective,gap");
    if timing {
        out.push_str(",wall_time_seconds");
    }
    out.push_str(",iterations,termination,exact_steps,approx_steps\n");
    for rec in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            rec.instance_id,
            rec.m,
            rec.n,
            rec.r.map_or(String::new(), |r| r.to_string()),
            rec.algorithm.name(),
            rec.p,
            rec.repetition,
            rec.objective,
            gap_of(rec)
        );
        if timing {
            let _ = write!(out, ",{}", rec.wall_time_seconds);
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            rec.iterations, rec.termination, rec.exact_steps, rec.approx_steps
        );
    }
    Ok(out)
}

/// One summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Key values in column order (`instance_id,p`, `m,n,p` or `m,n,r,p`).
    pub key: Vec<String>,
    pub cells: usize,
    /// Mean gap per algorithm over the cells where it ran.
    pub gaps: BTreeMap<Algorithm, f64>,
    /// Mean over cells of the minimum repetition wall time.
    pub times: BTreeMap<Algorithm, f64>,
    /// Mean over cells of the mean repetition wall time.
    pub times_mean: BTreeMap<Algorithm, f64>,
    /// `gap_wpca - gap_awpca`.
    pub diff: Option<f64>,
    /// Mean over cells of `time_awpca / time_wpca`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub group_by: GroupBy,
    pub key_columns: Vec<&'static str>,
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<SummaryRow>,
}

pub fn summarize(records: &[RunRecord], group_by: GroupBy) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::param("no records to summarize"));
    }
    let algorithms = algorithms_in(records);
    let cells = build_cells(records)?;

    type SortKey = (String, usize, usize, Option<i64>, usize);
    let sort_key = |c: &Cell| -> SortKey {
        let r = c.r.map(|r| (r * 1e9).round() as i64);
        match group_by {
            GroupBy::Cell => (c.instance_id.clone(), 0, 0, None, c.p),
            GroupBy::MNP => (String::new(), c.m, c.n, None, c.p),
            GroupBy::MNRP => (String::new(), c.m, c.n, r, c.p),
        }
    };
    let mut groups: BTreeMap<SortKey, Vec<&Cell>> = BTreeMap::new();
    let mut cell_order: Vec<SortKey> = Vec::new();
    for cell in &cells {
        let key = sort_key(cell);
        if group_by == GroupBy::Cell && !groups.contains_key(&key) {
            cell_order.push(key.clone());
        }
        groups.entry(key).or_default().push(cell);
    }
    let ordered: Vec<(SortKey, Vec<&Cell>)> = if group_by == GroupBy::Cell {
        // keep the sweep order for per-cell rows
        cell_order
            .into_iter()
            .map(|k| {
                let v = groups.remove(&k).expect("group exists");
                (k, v)
            })
            .collect()
    } else {
        groups.into_iter().collect()
    };

    let key_columns = match group_by {
        GroupBy::Cell => vec!["instance_id", "p"],
        GroupBy::MNP => vec!["m", "n", "p"],
        GroupBy::MNRP => vec!["m", "n", "r", "p"],
    };

    let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    let rows = ordered
        .into_iter()
        .map(|(_, members)| {
            let first = members[0];
            let key = match group_by {
                GroupBy::Cell => vec![first.instance_id.clone(), first.p.to_string()],
                GroupBy::MNP => vec![first.m.to_string(), first.n.to_string(), first.p.to_string()],
                GroupBy::MNRP => vec![
                    first.m.to_string(),
                    first.n.to_string(),
                    first.r.map_or(String::new(), |r| r.to_string()),
                    first.p.to_string(),
                ],
            };
            let collect = |algo: &Algorithm, f: fn(&CellEntry) -> f64| -> Vec<f64> {
                members.iter().filter_map(|c| c.entries.get(algo).map(f)).collect()
            };
            let mut gaps = BTreeMap::new();
            let mut times = BTreeMap::new();
            let mut times_mean = BTreeMap::new();
            for algo in &algorithms {
                if let Some(g) = mean(&collect(algo, |e| e.gap)) {
                    gaps.insert(algo.clone(), g);
                }
                if let Some(t) = mean(&collect(algo, |e| e.time_min)) {
                    times.insert(algo.clone(), t);
                }
                if let Some(t) = mean(&collect(algo, |e| e.time_mean)) {
                    times_mean.insert(algo.clone(), t);
                }
            }
            let diff = match (gaps.get(&Algorithm::Wpca), gaps.get(&Algorithm::Awpca)) {
                (Some(w), Some(a)) => Some(w - a),
                _ => None,
            };
            let ratios: Vec<f64> = members
                .iter()
                .filter_map(|c| {
                    let w = c.entries.get(&Algorithm::Wpca)?;
                    let a = c.entries.get(&Algorithm::Awpca)?;
                    (w.time_min > 0.0).then(|| a.time_min / w.time_min)
                })
                .collect();
            SummaryRow {
                key,
                cells: members.len(),
                gaps,
                times,
                times_mean,
                diff,
                ratio: mean(&ratios),
            }
        })
        .collect();
    Ok(Summary { group_by, key_columns, algorithms, rows })
}

/// Renders `summary.csv`. Metadata and the column header are `#` lines, so files with numeric
/// keys parse with [`crate::dataio::read_matrix`].
pub fn render_summary(summary: &Summary, timing: bool) -> String {
    let has_pair = summary.algorithms.contains(&Algorithm::Wpca)
        && summary.algorithms.contains(&Algorithm::Awpca);
    let mut cols: Vec<String> = summary.key_columns.iter().map(|s| s.to_string()).collect();
    cols.push("cells".into());
    for algo in &summary.algorithms {
        cols.push(format!("gap_{}", algo.name()));
    }
    if timing {
        for algo in &summary.algorithms {
            cols.push(format!("time_{}", algo.name()));
        }
        for algo in &summary.algorithms {
            cols.push(format!("time_mean_{}", algo.name()));
        }
    }
    if has_pair {
        cols.push("diff".into());
        if timing {
            cols.push("ratio".into());
        }
    }

    let group = summary.key_columns.join(",");
    let algos: Vec<&str> = summary.algorithms.iter().map(Algorithm::name).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# l1pca summary group_by={group} algorithms={}", algos.join(";"));
    let _ = writeln!(out, "# {}", cols.join(","));
    let fmt = |v: Option<&f64>| v.map_or(String::new(), |x| x.to_string());
    for row in &summary.rows {
        let mut fields = row.key.clone();
        fields.push(row.cells.to_string());
        for algo in &summary.algorithms {
            fields.push(fmt(row.gaps.get(algo)));
        }
        if timing {
            for algo in &summary.algorithms {
                fields.push(fmt(row.times.get(algo)));
            }
            for algo in &summary.algorithms {
                fields.push(fmt(row.times_mean.get(algo)));
            }
        }
        if has_pair {
            fields.push(fmt(row.diff.as_ref()));
            if timing {
                fields.push(fmt(row.ratio.as_ref()));
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub runs: PathBuf,
    pub summary: PathBuf,
}

/// Writes `runs.csv` and `summary.csv` into `out_dir` (created if missing).
pub fn emit_report(
    records: &[RunRecord],
    opts: &ReportOptions,
    out_dir: impl AsRef<Path>,
) -> Result<ReportFiles> {
    emit_report_named(records, opts, out_dir, "summary.csv")
}

pub fn emit_report_named(
    records: &[RunRecord],
    opts: &ReportOptions,
    out_dir: impl AsRef<Path>,
    summary_name: &str,
) -> Result<ReportFiles> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let runs = dir.join("runs.csv");
    let summary = dir.join(summary_name);
    let runs_text = render_runs(records, opts.timing)?;
    let summary_text = render_summary(&summarize(records, opts.group_by)?, opts.timing);
    fs::write(&runs, runs_text).map_err(|e| Error::io(&runs, e))?;
    fs::write(&summary, summary_text).map_err(|e| Error::io(&summary, e))?;
    Ok(ReportFiles { runs, summary })
}
