//! First-order eigenpair tracking: error against a fresh decomposition as the
//! perturbation shrinks.

use nalgebra::DMatrix;

use l1pca::linalg::evd_full;
use l1pca::perturbation::eigenpair_update;

fn main() -> l1pca::Result<()> {
    let b = DMatrix::from_row_slice(4, 4, &[
        6.0, 1.0, 0.5, 0.0,
        1.0, 4.0, 0.3, 0.2,
        0.5, 0.3, 2.0, 0.1,
        0.0, 0.2, 0.1, 0.5,
    ]);
    let s = DMatrix::from_row_slice(4, 4, &[
        1.0, -0.4, 0.2, 0.7,
        -0.4, -1.0, 0.9, 0.1,
        0.2, 0.9, 0.3, -0.6,
        0.7, 0.1, -0.6, 0.8,
    ]);
    let s = &s / s.norm();
    let base = evd_full(&b)?;
    println!("eigenvalues {:.4?}", base.values().as_slice());

    let mut last: Option<f64> = None;
    for k in 0..6 {
        let zeta = 0.1 / f64::powi(2.0, k);
        let delta = &s * zeta;
        let approx = eigenpair_update(&base, &delta)?;
        let exact = evd_full(&(&b + &delta))?;
        let err = (approx.vectors() - exact.vectors()).amax();
        let order = last.map_or(String::new(), |l| format!("  ratio {:.2}", l / err));
        println!("zeta {zeta:.5}  vector error {err:.3e}{order}");
        last = Some(err);
    }
    Ok(())
}
