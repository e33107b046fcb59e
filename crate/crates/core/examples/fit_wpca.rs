//! Fit L1-PCA to a contaminated synthetic instance and compare with ordinary PCA.
//!
//!     cargo run --example fit_wpca -- [p]

use l1pca::instance_gen::{generate, SyntheticSpec};
use l1pca::dataio::standardize;
use l1pca::linalg::l2pca;
use l1pca::weights::l1_objective;
use l1pca::{wpca, IrlsConfig};

fn main() -> l1pca::Result<()> {
    let p: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let spec = SyntheticSpec { m: 20, n: 300, q: 10, r: 0.2, seed: 7 };
    let inst = generate(&spec)?;
    let outliers = inst.outlier_rows.iter().filter(|&&o| o).count();
    let data = standardize(&inst.data)?.data;
    println!("instance m={} n={} outlier rows={outliers}", data.m(), data.n());

    let l2 = l1_objective(&data, &l2pca(&data, p)?)?;
    let res = wpca(&data, p, &IrlsConfig::default())?;
    println!("p={p}");
    println!("  l2pca  L1 error {l2:.4}");
    println!(
        "  wpca   L1 error {:.4}  (best at iteration {} of {}, {})",
        res.best_objective, res.best_iteration, res.iterations_run, res.termination
    );
    println!("  improvement {:.2}%", 100.0 * (1.0 - res.best_objective / l2));

    let x = res.best_loadings.loadings();
    println!("first loading vector:");
    for v in x.column(0).iter() {
        print!(" {v:+.3}");
    }
    println!();
    Ok(())
}
