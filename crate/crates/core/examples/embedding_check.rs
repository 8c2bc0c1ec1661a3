//! Integrates the three-mode pseudomode model and the two-mode memory model
//! side by side and reports how their difference scales with the step.

use eprenorm::embedcheck::{convergence_order, kernel_fourier_check, max_step};
use eprenorm::epsolver::solve_exact_ep;
use eprenorm::model::SystemParams;
use num_complex::Complex64;

fn main() -> eprenorm::Result<()> {
    let p = SystemParams::representative();
    let d = solve_exact_ep(&p)?.drive();
    let one = Complex64::new(1.0, 0.0);
    let t_final = 20.0 / p.kappa();
    let dt = 1.0 / (100.0 * p.omega_m());
    println!("step ceiling {:.3e} s, using {:.3e} s", max_step(&p), dt);
    let c = convergence_order(&p, &d, [one, one], t_final, dt)?;
    println!("max rel err {:.3e}, at dt/2 {:.3e}, observed order {:.2}", c.err_dt, c.err_half, c.order);
    let k = kernel_fourier_check(&p)?;
    println!("kernel vs Fourier transform of J: rel err {:.2e} at t = {:.3e} s", k.rel_err, k.t);
    Ok(())
}
