//! Memoryless, leading-order and exact exceptional points for the
//! representative parameter set, plus the order-two certificate.

use eprenorm::epsolver::{certify_order_two, markovian_ep, perturbative_ep, perturbative_shifts, solve_exact_ep};
use eprenorm::model::{rad_to_hz, rad_to_hz_c, SystemParams};

fn khz(x: f64) -> f64 {
    rad_to_hz(x) / 1e3
}

fn main() -> eprenorm::Result<()> {
    let p = SystemParams::representative();
    for (name, ep) in [
        ("markovian", markovian_ep(&p)?),
        ("perturbative", perturbative_ep(&p)?),
        ("exact", solve_exact_ep(&p)?),
    ] {
        let l = rad_to_hz_c(ep.lambda_ep) / 1e3;
        println!(
            "{name:>12}: Delta/2pi = {:.6} kHz  G/2pi = {:.6} kHz  lambda/2pi = {:.4} {:+.4}i kHz",
            khz(ep.delta_ep),
            khz(ep.g_ep),
            l.re,
            l.im
        );
    }
    let (dd, dg) = perturbative_shifts(&p);
    println!("leading-order shifts: {:.4} kHz, {:.4} kHz", khz(dd), khz(dg));

    let exact = solve_exact_ep(&p)?;
    let cert = certify_order_two(&p, &exact)?;
    println!("|p| = {:.3e}  |p'| = {:.3e}  |p''| = {:.3e}", cert.p, cert.dp, cert.ddp);
    Ok(())
}
