//! Eliminating the pseudomode gives a frequency-dependent self-energy. At any
//! eigenvalue of the full drift matrix the shifted effective 2x2 block is singular.

use eprenorm::charpoly::{schur_effective_block, self_energy};
use eprenorm::model::{drift_nonmarkovian, DriveParams, SystemParams};
use eprenorm::spectral::eigensystem;

fn main() -> eprenorm::Result<()> {
    let p = SystemParams::representative();
    let d = DriveParams::new(-p.omega_m(), 0.25 * p.kappa())?;
    for mode in eigensystem(&drift_nonmarkovian(&p, &d)) {
        let l = mode.lambda;
        match self_energy(&p, l) {
            Ok(sigma) => {
                let det = schur_effective_block(&p, &d, l)?.shifted(l).determinant();
                println!("lambda = {l:.4}  Sigma = {sigma:.4}  relative det = {:.1e}", det.norm() / l.norm_sqr());
            }
            Err(e) => println!("lambda = {l:.4}: {e}"),
        }
    }
    Ok(())
}
