//! wPCA against awPCA on one larger instance: objective, step mix and wall time.

use std::time::Instant;

use l1pca::bench::Instance;
use l1pca::instance_gen::SyntheticSpec;
use l1pca::{awpca, wpca, IrlsConfig, Trigger};

fn main() -> l1pca::Result<()> {
    let spec = SyntheticSpec { m: 10, n: 12_332, q: 10, r: 0.1, seed: 1 };
    let inst = Instance::synthetic(&spec, true)?;
    let p = 5;

    let t0 = Instant::now();
    let exact = wpca(&inst.data, p, &IrlsConfig::default())?;
    let t_exact = t0.elapsed();
    println!(
        "wpca   F={:.3} iterations={} time={:?}",
        exact.best_objective, exact.iterations_run, t_exact
    );

    for trigger in [Trigger::Weights, Trigger::Delta] {
        let cfg = IrlsConfig { trigger, ..IrlsConfig::approximate() };
        let t0 = Instant::now();
        let approx = awpca(&inst.data, p, &cfg)?;
        let t = t0.elapsed();
        println!(
            "awpca  F={:.3} iterations={} exact={} approximate={} fallbacks={} time={:?} trigger={:?}",
            approx.best_objective,
            approx.iterations_run,
            approx.exact_steps,
            approx.approx_steps,
            approx.degenerate_fallbacks,
            t,
            trigger
        );
        println!(
            "       diff {:+.4}%  ratio {:.2}",
            100.0 * (approx.best_objective - exact.best_objective) / exact.best_objective,
            t.as_secs_f64() / t_exact.as_secs_f64()
        );
    }
    Ok(())
}
