//! Reflection dip with and without bath memory, each curve at its own EP.

use eprenorm::epsolver::{markovian_ep, solve_exact_ep};
use eprenorm::model::{hz_to_rad, rad_to_hz, SystemParams};
use eprenorm::response::{cooperativity, dip_metrics, spectrum, Bath};
use eprenorm::spectral::Grid;

fn main() -> eprenorm::Result<()> {
    let p = SystemParams::representative();
    let dm = markovian_ep(&p)?.drive();
    let de = solve_exact_ep(&p)?.drive();
    let grid = Grid::linspace(hz_to_rad(990e3), hz_to_rad(1010e3), 21)?;
    let a = spectrum(&p, &dm, grid.points(), Bath::Markovian)?;
    let b = spectrum(&p, &de, grid.points(), Bath::Structured)?;
    println!("{:>10} {:>10} {:>10}", "w [kHz]", "markov", "memory");
    for ((w, x), y) in grid.points().iter().zip(&a).zip(&b) {
        let x = x.as_ref().map_or(f64::NAN, |s| s.r_sq);
        let y = y.as_ref().map_or(f64::NAN, |s| s.r_sq);
        println!("{:10.2} {:10.6} {:10.6}", rad_to_hz(*w) / 1e3, x, y);
    }
    let m = dip_metrics(&p, &dm, Bath::Markovian);
    let s = dip_metrics(&p, &de, Bath::Structured);
    println!("dip depth: {:.5} vs {:.5}", m.r_sq_min, s.r_sq_min);
    let c = cooperativity(&p, &de)?;
    println!("C = {:.4}, C_eff = {:.4}", c.c, c.c_eff);
    Ok(())
}
