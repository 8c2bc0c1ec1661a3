//! Eigenvalue branches across the coupling window at the memoryless EP
//! detuning. The pseudomode-like root stays near -Omega_c while the two
//! optomechanical branches show an avoided crossing.

use eprenorm::model::{hz_to_rad, rad_to_hz, SystemParams};
use eprenorm::spectral::{hybrid_gap, sweep_eigs, Grid};

fn main() -> eprenorm::Result<()> {
    let p = SystemParams::representative();
    let grid = Grid::linspace(hz_to_rad(40e3), hz_to_rad(60e3), 21)?;
    let rows = sweep_eigs(&p, -p.omega_m(), &grid, true)?;
    println!("{:>8} {:>12} {:>12} {:>12}  {:>10}", "G [kHz]", "Re l1", "Re l2", "Re l3", "gap [kHz]");
    for r in &rows {
        let re: Vec<f64> = r.lambdas.iter().map(|l| rad_to_hz(l.re) / 1e3).collect();
        println!(
            "{:8.2} {:12.4} {:12.4} {:12.4}  {:10.4}",
            rad_to_hz(r.coord) / 1e3,
            re[0],
            re[1],
            re[2],
            rad_to_hz(hybrid_gap(r)) / 1e3
        );
    }
    Ok(())
}
