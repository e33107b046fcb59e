//! Small benchmark sweep with a summary table, the library side of `l1pca bench`.

use l1pca::bench::{render_summary, run_sweep, summarize, Algorithm, GroupBy, Instance};
use l1pca::instance_gen::grid;
use l1pca::IrlsConfig;

fn main() -> l1pca::Result<()> {
    let instances: Vec<Instance> = grid(&[20], &[100], &[0.1, 0.3], 10, 3, 1)
        .iter()
        .map(|s| Instance::synthetic(s, true))
        .collect::<l1pca::Result<_>>()?;
    let algos = [Algorithm::Wpca, Algorithm::Awpca, Algorithm::L2pca];
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let outcome = run_sweep(&instances, &algos, &[6, 8], &IrlsConfig::default(), 1, workers)?;

    for group_by in [GroupBy::MNP, GroupBy::MNRP] {
        let summary = summarize(&outcome.records, group_by)?;
        print!("{}", render_summary(&summary, false));
        println!();
    }
    Ok(())
}
