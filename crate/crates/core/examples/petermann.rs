//! Petermann factors at both calibrations. At the memoryless coordinates the
//! optomechanical pair stays finite; at the exact EP it blows up.

use eprenorm::epsolver::{markovian_ep, solve_exact_ep};
use eprenorm::spectral::petermann_at;
use eprenorm::model::SystemParams;

fn main() -> eprenorm::Result<()> {
    let p = SystemParams::representative();
    for (name, ep) in [("markovian", markovian_ep(&p)?), ("exact", solve_exact_ep(&p)?)] {
        let k = petermann_at(&p, &ep.drive());
        let shown: Vec<String> = k
            .iter()
            .map(|k| format!("{:.6e}{}", k.value, if k.divergent { "*" } else { "" }))
            .collect();
        println!("{name:>10}: K = [{}]", shown.join(", "));
    }
    println!("(* flagged as divergent)");
    Ok(())
}
