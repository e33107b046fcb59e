//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits non-zero
//! if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use l1pca::bench::Instance;
use l1pca::instance_gen::{standard_grid, SyntheticSpec};
use l1pca::linalg::{l2_objective, l2pca};
use l1pca::perturbation::eigenpair_update;
use l1pca::weights::{l1_objective, raw_weights, weighted_matrix};
use l1pca::{awpca, wpca, DataMatrix, EigenpairSet, IrlsConfig, IrlsResult, PrincipalComponents, Termination};

use common::{jacobi_eigen, normal_matrix, random_orthonormal, rng};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// One synthetic-grid cell fitted with both solvers.
struct GridCell {
    p: usize,
    l2: f64,
    exact: IrlsResult,
    approx: IrlsResult,
}

fn recording(cfg: IrlsConfig) -> IrlsConfig {
    IrlsConfig { record_weights: true, ..cfg }
}

fn run_grid() -> Vec<GridCell> {
    let cells: Vec<(SyntheticSpec, usize)> = standard_grid(5, 1)
        .into_iter()
        .flat_map(|s| (8..=12).map(move |p| (s, p)))
        .collect();
    cells
        .into_par_iter()
        .map(|(spec, p)| {
            let inst = Instance::synthetic(&spec, true).unwrap();
            let l2 = l1_objective(&inst.data, &l2pca(&inst.data, p).unwrap()).unwrap();
            let exact = wpca(&inst.data, p, &recording(IrlsConfig::default())).unwrap();
            let approx = awpca(&inst.data, p, &recording(IrlsConfig::approximate())).unwrap();
            GridCell { p, l2, exact, approx }
        })
        .collect()
}

fn random_data(seed: u64) -> (DataMatrix, usize) {
    let mut r = rng(seed);
    let n = r.random_range(3..=30);
    let m = r.random_range(2..=8);
    let mut a = normal_matrix(&mut r, n, m);
    for i in 0..n {
        if r.random::<f64>() < 0.1 {
            let mut row = a.row_mut(i);
            row *= 20.0;
        }
    }
    let p = r.random_range(1..=m);
    (DataMatrix::new(a).unwrap(), p)
}

fn criterion_1(random: &[(DataMatrix, usize, f64, IrlsResult, IrlsResult)], grid: &[GridCell]) -> Verdict {
    let mut violations = 0;
    let mut checked = 0;
    for (_, _, l2, w, a) in random {
        checked += 2;
        violations += usize::from(w.best_objective > *l2) + usize::from(a.best_objective > *l2);
    }
    for c in grid {
        checked += 2;
        violations +=
            usize::from(c.exact.best_objective > c.l2) + usize::from(c.approx.best_objective > c.l2);
    }
    verdict(violations == 0, format!("{violations} violations in {checked} fits"))
}

fn criterion_2() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..1000 {
        let mut r = rng(20_000 + seed);
        let n = r.random_range(1..=20);
        let m = r.random_range(1..=10);
        let e = normal_matrix(&mut r, n, m);
        let u = raw_weights(&e, 0.0).u;
        let lhs: f64 = (0..n).map(|i| u[i] * e.row(i).norm_squared()).sum();
        let rhs: f64 = e.iter().map(|v| v.abs()).sum();
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    verdict(worst <= 1e-10, format!("max relative deviation {worst:.3e} over 1000 matrices"))
}

fn criterion_3() -> Verdict {
    let mut worst = 0.0f64;
    let (mut full_rank_worst, mut full_rank) = (0.0f64, 0);
    for seed in 0..200 {
        let mut r = rng(30_000 + seed);
        let n = r.random_range(2..=25);
        let m = r.random_range(2..=8);
        let p = r.random_range(1..=m);
        let a = normal_matrix(&mut r, n, m);
        let w = DVector::from_fn(n, |_, _| (2.0 * r.random::<f64>() - 1.0).exp());
        let x = random_orthonormal(&mut r, m, p);
        let proj = &x * x.transpose();
        let mut lhs = 0.0;
        for i in 0..n {
            let row = a.row(i);
            let rec = row * &proj;
            lhs += w[i] * (row - rec).norm_squared();
        }
        let data = DataMatrix::new(a).unwrap();
        let pcs = PrincipalComponents::new(x).unwrap();
        let rhs = l2_objective(&weighted_matrix(&data, &w).unwrap(), &pcs).unwrap();
        if p == m {
            // the objective vanishes identically; compare against the data scale instead
            let energy: f64 = (0..n).map(|i| w[i] * data.values().row(i).norm_squared()).sum();
            full_rank_worst = full_rank_worst.max(lhs.abs().max(rhs.abs()) / energy);
            full_rank += 1;
        } else {
            worst = worst.max((lhs - rhs).abs() / lhs);
        }
    }
    verdict(
        worst <= 1e-8 && full_rank_worst <= 1e-8,
        format!(
            "max relative deviation {worst:.3e} over {} triples; p=m triples: both sides within {full_rank_worst:.1e} of zero ({full_rank})",
            200 - full_rank
        ),
    )
}

/// Counts band violations in the recorded weight history of `res`.
fn band_violations(res: &IrlsResult, beta: f64) -> (usize, usize) {
    let hist = res.weight_history.as_ref().expect("weights recorded");
    let (mut checked, mut bad) = (0, 0);
    for (k, pair) in hist.windows(2).enumerate() {
        let t = (k + 1) as i32;
        let step = beta.powi(t);
        for (&prev, &next) in pair[0].iter().zip(pair[1].iter()) {
            let ratio = next / prev;
            checked += 1;
            if ratio < (1.0 - step) * (1.0 - 1e-12) || ratio > (1.0 + step) * (1.0 + 1e-12) {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

fn criterion_4<'a>(fits: impl Iterator<Item = &'a IrlsResult>) -> Verdict {
    let beta = IrlsConfig::default().beta;
    let (mut checked, mut bad, mut runs) = (0, 0, 0);
    for res in fits {
        let (c, b) = band_violations(res, beta);
        checked += c;
        bad += b;
        runs += 1;
    }
    verdict(bad == 0, format!("{bad} violations in {checked} weight ratios over {runs} fits"))
}

fn criterion_5(grid: &[GridCell]) -> Verdict {
    let eps = IrlsConfig::default().epsilon;
    let total = grid.len();
    let converged = grid.iter().filter(|c| c.exact.termination == Termination::Converged).count();
    let zero = grid.iter().filter(|c| c.exact.termination == Termination::ZeroResidual).count();
    let success = converged + zero;
    let mut drift = 0.0f64;
    for c in grid.iter().filter(|c| c.exact.termination != Termination::MaxIters) {
        let tr = &c.exact.eigenvalue_trace;
        let start = tr.len().saturating_sub(6);
        for pair in tr[start..].windows(2) {
            drift = drift.max((&pair[1] - &pair[0]).amax());
        }
    }
    let mut by_p = String::new();
    for p in 8..=12 {
        let cells: Vec<_> = grid.iter().filter(|c| c.p == p).collect();
        let ok = cells.iter().filter(|c| c.exact.termination.is_success()).count();
        by_p.push_str(&format!(" p{p}={ok}/{}", cells.len()));
    }
    let rate = success as f64 / total as f64;
    verdict(
        rate >= 0.95 && drift <= 10.0 * eps,
        format!(
            "{success}/{total} cells stopped before the cap ({converged} converged, {zero} zero residual;{by_p}), \
             final eigenvalue drift {drift:.3e}"
        ),
    )
}

fn relative_diff(approx: f64, exact: f64) -> f64 {
    if exact <= l1pca::bench::ZERO_OBJECTIVE {
        if approx <= l1pca::bench::ZERO_OBJECTIVE { 0.0 } else { 1.0 }
    } else {
        (approx - exact).abs() / exact
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}

fn criterion_7(grid: &[GridCell]) -> Verdict {
    let diffs: Vec<f64> =
        grid.iter().map(|c| relative_diff(c.approx.best_objective, c.exact.best_objective)).collect();
    let nontrivial: Vec<f64> = grid
        .iter()
        .filter(|c| c.exact.best_objective > l1pca::bench::ZERO_OBJECTIVE)
        .map(|c| relative_diff(c.approx.best_objective, c.exact.best_objective))
        .collect();
    let max = diffs.iter().copied().fold(0.0, f64::max);
    let approx_steps: usize = grid.iter().map(|c| c.approx.approx_steps).sum();
    let med = median(diffs);
    verdict(
        med <= 0.05,
        format!(
            "median diff {med:.4} over {} cells (median {:.4} over {} cells with F>0, max {max:.4}, {approx_steps} approximate steps)",
            grid.len(),
            median(nontrivial.clone()),
            nontrivial.len()
        ),
    )
}

fn criterion_6() -> Verdict {
    let zetas = [1e-2, 5e-3, 2.5e-3];
    let mut worst_ratio = f64::INFINITY;
    for seed in 0..50 {
        let mut r = rng(60_000 + seed);
        let m = r.random_range(3..=8);
        let mut lambda = Vec::with_capacity(m);
        let mut cur = 10.0 * r.random::<f64>();
        for _ in 0..m {
            lambda.push(cur);
            cur -= 0.5 + 2.0 * r.random::<f64>();
        }
        let q = random_orthonormal(&mut r, m, m);
        let b = &q * DMatrix::from_diagonal(&DVector::from_vec(lambda)) * q.transpose();
        let b = (&b + b.transpose()) * 0.5;
        let s = normal_matrix(&mut r, m, m);
        let s = (&s + s.transpose()) * 0.5;
        let s = &s / s.norm();

        let (values, vectors) = jacobi_eigen(&b);
        let prev = EigenpairSet::from_pairs(values, vectors).unwrap();
        let errors: Vec<f64> = zetas
            .iter()
            .map(|&z| {
                let delta = &s * z;
                let approx = eigenpair_update(&prev, &delta).unwrap();
                let (_, exact) = jacobi_eigen(&(&b + &delta));
                (0..m)
                    .map(|k| {
                        let va = approx.vectors().column(k);
                        let ve = exact.column(k);
                        let sign = if va.dot(&ve) < 0.0 { -1.0 } else { 1.0 };
                        (va - ve * sign).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for pair in errors.windows(2) {
            worst_ratio = worst_ratio.min(pair[0] / pair[1]);
        }
    }
    verdict(worst_ratio >= 3.5, format!("smallest error ratio per halving {worst_ratio:.3} over 50 matrices"))
}

fn criterion_8() -> Verdict {
    let spec = SyntheticSpec { m: 10, n: 12_332, q: 10, r: 0.1, seed: 1 };
    let p = 5;
    let inst = Instance::synthetic(&spec, true).unwrap();
    let time = |f: &dyn Fn() -> IrlsResult| -> (Duration, IrlsResult) {
        let mut runs: Vec<(Duration, IrlsResult)> = (0..3)
            .map(|_| {
                let t0 = Instant::now();
                let res = f();
                (t0.elapsed(), res)
            })
            .collect();
        runs.sort_by_key(|r| r.0);
        runs.swap_remove(1)
    };
    let (tw, w) = time(&|| wpca(&inst.data, p, &IrlsConfig::default()).unwrap());
    let (ta, a) = time(&|| awpca(&inst.data, p, &IrlsConfig::approximate()).unwrap());
    verdict(
        ta < tw && a.approx_steps >= 1,
        format!(
            "n={} m={} p={p}: wpca {:.1} ms ({} it), awpca {:.1} ms ({} it, {} approximate), ratio {:.2}",
            spec.n,
            spec.m,
            tw.as_secs_f64() * 1e3,
            w.iterations_run,
            ta.as_secs_f64() * 1e3,
            a.iterations_run,
            a.approx_steps,
            ta.as_secs_f64() / tw.as_secs_f64()
        ),
    )
}

fn criterion_9(fits: &[(usize, f64, IrlsResult)]) -> Verdict {
    let worst = fits
        .iter()
        .map(|(_, fmin, res)| res.best_objective / fmin)
        .fold(0.0, f64::max);
    verdict(
        worst <= 1.01,
        format!("worst objective / grid minimum {worst:.6} over {} instances", fits.len()),
    )
}

fn l1pca_cmd(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_l1pca")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "l1pca {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    for name in ["inst_a", "inst_b"] {
        l1pca_cmd(&[
            "gen", "--m", "20", "--n", "100", "--q", "10", "--r", "0.2", "--seed", "42", "--count", "3",
            "--out-dir", &s(&root.join(name)),
        ]);
    }
    let mut gen_identical = true;
    for entry in std::fs::read_dir(root.join("inst_a")).unwrap() {
        let path = entry.unwrap().path();
        let other = root.join("inst_b").join(path.file_name().unwrap());
        gen_identical &= std::fs::read(&path).unwrap() == std::fs::read(other).unwrap();
    }
    let pattern = s(&root.join("inst_a").join("*.csv"));
    let mut summaries = Vec::new();
    for (k, workers) in ["1", "1", "4"].iter().enumerate() {
        let out = root.join(format!("bench_{k}"));
        l1pca_cmd(&[
            "bench", "--instances", &pattern, "--no-timing", "--workers", workers, "--out-dir", &s(&out),
        ]);
        summaries.push(std::fs::read(out.join("summary.csv")).unwrap());
    }
    let identical = summaries.windows(2).all(|w| w[0] == w[1]);
    verdict(
        gen_identical && identical && !summaries[0].is_empty(),
        format!(
            "gen repeat identical: {gen_identical}; summary.csv identical over runs and workers 1,1,4: {identical} ({} bytes)",
            summaries[0].len()
        ),
    )
}

fn main() {
    let started = Instant::now();
    let random: Vec<(DataMatrix, usize, f64, IrlsResult, IrlsResult)> = (0..100)
        .map(|seed| {
            let (a, p) = random_data(10_000 + seed);
            let l2 = l1_objective(&a, &l2pca(&a, p).unwrap()).unwrap();
            let w = wpca(&a, p, &recording(IrlsConfig::default())).unwrap();
            let ap = awpca(&a, p, &recording(IrlsConfig::approximate())).unwrap();
            (a, p, l2, w, ap)
        })
        .collect();
    let oracle: Vec<(usize, f64, IrlsResult)> = common::p1_oracle()
        .into_iter()
        .map(|(k, data, fmin)| {
            let a = DataMatrix::new(data).unwrap();
            (k, fmin, wpca(&a, 1, &recording(IrlsConfig::default())).unwrap())
        })
        .collect();
    let grid = run_grid();

    let all_fits = random
        .iter()
        .flat_map(|(_, _, _, w, a)| [w, a])
        .chain(grid.iter().flat_map(|c| [&c.exact, &c.approx]))
        .chain(oracle.iter().map(|(_, _, r)| r));

    let results = [
        ("1 incumbent dominance", criterion_1(&random, &grid)),
        ("2 weighted error identity", criterion_2()),
        ("3 weighted objective equivalence", criterion_3()),
        ("4 damping band", criterion_4(all_fits)),
        ("5 convergence on the synthetic grid", criterion_5(&grid)),
        ("6 eigenpair update order", criterion_6()),
        ("7 awpca matches wpca quality", criterion_7(&grid)),
        ("8 awpca faster than wpca", criterion_8()),
        ("9 p=1 brute-force oracle", criterion_9(&oracle)),
        ("10 reproducible gen + bench", criterion_10()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!("criterion {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
