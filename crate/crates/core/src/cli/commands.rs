use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::args::{DeltaMode, EigsArgs, EmbedArgs, EpArgs, GSweep, PetermannArgs, SpectrumArgs};
use super::config::Config;
use super::output::{emit, fmt12, fmt_sig, RunManifest, Table};
use super::CliError;
use crate::embedcheck::{compare_embeddings, convergence_order, kernel_fourier_check, transient_decay_rate};
use crate::epsolver::{
    certify_order_two, exact_ep_candidates, markovian_ep, perturbative_ep, perturbative_shifts, solve_exact_ep,
    EpSolution, ExactEpOptions,
};
use crate::error::Error;
use crate::model::{hz_to_rad, rad_to_hz, DriveParams, SystemParams};
use crate::response::{cooperativity, dip_metrics, spectrum, Bath};
use crate::spectral::{hybrid_gap, sweep_eigs, sweep_point, Grid, SweepRow};

/// Largest embedding error accepted by `embedcheck`.
pub const EMBED_TOLERANCE: f64 = 1e-5;

pub struct Ctx<'a> {
    pub cfg: Config,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub quiet: bool,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

fn khz(rad: f64) -> f64 {
    rad_to_hz(rad) * 1e-3
}

fn from_khz(k: f64) -> f64 {
    hz_to_rad(k * 1e3)
}

fn khz_c(z: Complex64) -> Complex64 {
    Complex64::new(khz(z.re), khz(z.im))
}

fn fmt_c(z: Complex64, digits: usize) -> String {
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{} {sign} {}i", fmt_sig(z.re, digits), fmt_sig(z.im.abs(), digits))
}

/// Report commands print their summary on stdout; data tables go to `--out`.
fn finish_report(ctx: &mut Ctx, table: &Table, data: &Value, mut manifest: RunManifest, human: &str) -> Result<(), CliError> {
    match (&ctx.out, ctx.json) {
        (Some(path), _) => {
            emit(table, data, &mut manifest, Some(path), ctx.json, ctx.stdout)?;
            if !ctx.quiet {
                ctx.stdout.write_all(human.as_bytes())?;
            }
        }
        (None, true) => emit(table, data, &mut manifest, None, true, ctx.stdout)?,
        (None, false) if ctx.quiet => emit(table, data, &mut manifest, None, false, ctx.stdout)?,
        (None, false) => ctx.stdout.write_all(human.as_bytes())?,
    }
    Ok(())
}

/// Sweep commands stream data on stdout unless `--out` is given; the summary
/// then moves to stderr.
fn finish_sweep(ctx: &mut Ctx, table: &Table, data: &Value, mut manifest: RunManifest, human: &str) -> Result<(), CliError> {
    emit(table, data, &mut manifest, ctx.out.as_deref(), ctx.json, ctx.stdout)?;
    if !ctx.quiet {
        if ctx.out.is_some() {
            ctx.stdout.write_all(human.as_bytes())?;
        } else {
            ctx.stderr.write_all(human.as_bytes())?;
        }
    }
    Ok(())
}

fn ep_json(s: &EpSolution) -> Value {
    let l = khz_c(s.lambda_ep);
    let l3 = khz_c(s.lambda_3);
    json!({
        "delta_khz": khz(s.delta_ep),
        "g_khz": khz(s.g_ep),
        "lambda_khz": [l.re, l.im],
        "lambda3_khz": [l3.re, l3.im],
        "residual_p": s.residual_p,
        "residual_dp": s.residual_dp,
        "second_derivative": s.second_deriv_mag,
    })
}

fn ep_row(kind: &str, s: &EpSolution) -> Vec<String> {
    let l = khz_c(s.lambda_ep);
    let l3 = khz_c(s.lambda_3);
    vec![
        kind.to_string(),
        fmt12(khz(s.delta_ep)),
        fmt12(khz(s.g_ep)),
        fmt12(l.re),
        fmt12(l.im),
        fmt12(l3.re),
        fmt12(l3.im),
        fmt12(s.residual_p),
        fmt12(s.residual_dp),
    ]
}

pub fn cmd_ep(ctx: &mut Ctx, args: &EpArgs) -> Result<(), CliError> {
    let p = ctx.cfg.system;
    let markov = markovian_ep(&p)?;
    let pert = perturbative_ep(&p)?;
    let exact = solve_exact_ep(&p)?;
    let cert = certify_order_two(&p, &exact);
    let (dd, dg) = perturbative_shifts(&p);

    let mut table = Table::new(&[
        "kind", "delta_khz", "g_khz", "re_lambda_khz", "im_lambda_khz", "re_lambda3_khz", "im_lambda3_khz", "residual_p",
        "residual_dp",
    ]);
    table.push(ep_row("markovian", &markov));
    table.push(ep_row("perturbative", &pert));
    table.push(ep_row("exact", &exact));
    let candidates = if args.candidates {
        let all = exact_ep_candidates(&p, &ExactEpOptions::default())?;
        for c in &all {
            table.push(ep_row("candidate", c));
        }
        Some(all)
    } else {
        None
    };
    table.footer.push(format!("leading_order_shift_khz: delta = {}, g = {}", fmt12(khz(dd)), fmt12(khz(dg))));
    table.footer.push(format!(
        "exact_shift_khz: delta = {}, g = {}",
        fmt12(khz(exact.delta_ep - markov.delta_ep)),
        fmt12(khz(exact.g_ep - markov.g_ep))
    ));
    let (cert_vals, passed) = match &cert {
        Ok(c) => ((c.p, c.dp, c.ddp), true),
        Err(Error::OrderCheckFailed { p, dp, ddp }) => ((*p, *dp, *ddp), false),
        Err(e) => return Err(e.clone().into()),
    };
    table.footer.push(format!(
        "order_two_certificate: p = {}, dp = {}, ddp = {}, {}",
        fmt12(cert_vals.0),
        fmt12(cert_vals.1),
        fmt12(cert_vals.2),
        if passed { "pass" } else { "fail" }
    ));

    let data = json!({
        "markovian": ep_json(&markov),
        "perturbative": ep_json(&pert),
        "exact": ep_json(&exact),
        "leading_order_shift_khz": {"delta": khz(dd), "g": khz(dg)},
        "exact_shift_khz": {"delta": khz(exact.delta_ep - markov.delta_ep), "g": khz(exact.g_ep - markov.g_ep)},
        "order_two_certificate": {"p": cert_vals.0, "dp": cert_vals.1, "ddp": cert_vals.2, "passed": passed},
        "candidates": candidates.as_ref().map(|c| c.iter().map(ep_json).collect::<Vec<_>>()),
    });

    let mut h = String::new();
    let d10 = |x: f64| fmt_sig(x, 10);
    writeln!(h, "{:<14}{:>20}{:>18}   lambda_EP/2pi [kHz]", "", "Delta_EP/2pi [kHz]", "G_EP/2pi [kHz]").ok();
    for (name, s) in [("markovian", &markov), ("perturbative", &pert), ("exact", &exact)] {
        writeln!(h, "{name:<14}{:>20}{:>18}   {}", d10(khz(s.delta_ep)), d10(khz(s.g_ep)), fmt_c(khz_c(s.lambda_ep), 10)).ok();
    }
    writeln!(h, "leading-order shifts: dDelta/2pi = {} kHz, dG/2pi = {} kHz", d10(khz(dd)), d10(khz(dg))).ok();
    writeln!(
        h,
        "exact shifts:         dDelta/2pi = {} kHz, dG/2pi = {} kHz",
        d10(khz(exact.delta_ep - markov.delta_ep)),
        d10(khz(exact.g_ep - markov.g_ep))
    )
    .ok();
    writeln!(h, "third root lambda_3/2pi = {} kHz", fmt_c(khz_c(exact.lambda_3), 10)).ok();
    writeln!(
        h,
        "order-two certificate: |p| = {:.3e}, |p'| = {:.3e}, |p''| = {:.3e}  {}",
        cert_vals.0,
        cert_vals.1,
        cert_vals.2,
        if passed { "PASS" } else { "FAIL" }
    )
    .ok();
    if let Some(all) = &candidates {
        writeln!(h, "physical roots from the restart schedule: {}", all.len()).ok();
        for c in all {
            writeln!(h, "  Delta = {} kHz, G = {} kHz", d10(khz(c.delta_ep)), d10(khz(c.g_ep))).ok();
        }
    }

    let manifest = RunManifest::new("ep", &ctx.cfg);
    finish_report(ctx, &table, &data, manifest, &h)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Check("order-two certificate failed at the exact exceptional point".into()))
    }
}

/// Detuning (rad/s) and a label for the manifest.
fn resolve_delta(mode: DeltaMode, p: &SystemParams) -> Result<(f64, String), CliError> {
    Ok(match mode {
        DeltaMode::Markovian => (-p.omega_m(), "markovian".into()),
        DeltaMode::Exact => (solve_exact_ep(p)?.delta_ep, "exact".into()),
        DeltaMode::Value(k) => (from_khz(k), format!("value:{}", fmt12(k))),
    })
}

fn default_delta(mode: Option<DeltaMode>, cfg: &Config) -> Result<(f64, String), CliError> {
    match (mode, cfg.detuning_hz) {
        (Some(m), _) => resolve_delta(m, &cfg.system),
        (None, Some(hz)) => Ok((hz_to_rad(hz), "config".into())),
        (None, None) => resolve_delta(DeltaMode::Markovian, &cfg.system),
    }
}

fn g_grid(s: &GSweep) -> Result<Grid, CliError> {
    if s.g_min < 0.0 {
        return Err(Error::InvalidGrid("coupling must be non-negative").into());
    }
    Ok(Grid::linspace(from_khz(s.g_min), from_khz(s.g_max), s.g_points)?)
}

fn grid_label(name: &str, min: f64, max: f64, n: usize) -> String {
    format!("{name} {} .. {} ({n} points)", fmt12(min), fmt12(max))
}

pub fn cmd_eigs(ctx: &mut Ctx, args: &EigsArgs) -> Result<(), CliError> {
    let p = ctx.cfg.system;
    let (delta, label) = default_delta(args.delta_mode, &ctx.cfg)?;
    let grid = g_grid(&args.sweep)?;
    let rows = sweep_eigs(&p, delta, &grid, args.markovian_ref)?;

    let mut header = vec!["g_khz", "re_l1", "re_l2", "re_l3", "im_l1", "im_l2", "im_l3", "pseudomode_branch"];
    if args.markovian_ref {
        header.extend(["re_m1", "re_m2", "im_m1", "im_m2"]);
    }
    let mut table = Table::new(&header);
    let mut json_rows = Vec::with_capacity(rows.len());
    for r in &rows {
        let l = r.lambdas.map(khz_c);
        let mut cells = vec![fmt12(khz(r.coord))];
        cells.extend(l.iter().map(|z| fmt12(z.re)));
        cells.extend(l.iter().map(|z| fmt12(z.im)));
        cells.push((r.pseudomode + 1).to_string());
        let mut jr = json!({
            "g_khz": khz(r.coord),
            "lambda_khz": l.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "pseudomode_branch": r.pseudomode + 1,
        });
        if let Some(m) = r.markovian {
            let m = m.map(khz_c);
            cells.extend(m.iter().map(|z| fmt12(z.re)));
            cells.extend(m.iter().map(|z| fmt12(z.im)));
            jr["markovian_khz"] = json!(m.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
        }
        table.push(cells);
        json_rows.push(jr);
    }
    let best = rows
        .iter()
        .min_by(|a, b| hybrid_gap(a).total_cmp(&hybrid_gap(b)))
        .expect("grid has points");
    let gap = khz(hybrid_gap(best));
    table.footer.push(format!("min_hybrid_gap_khz = {} at g_khz = {}", fmt12(gap), fmt12(khz(best.coord))));

    let mut manifest = RunManifest::new("eigs", &ctx.cfg);
    manifest.set("delta_mode", &label);
    manifest.set("delta_khz", fmt12(khz(delta)));
    manifest.set("grid", grid_label("g_khz", args.sweep.g_min, args.sweep.g_max, args.sweep.g_points));
    let data = json!({
        "delta_khz": khz(delta),
        "rows": json_rows,
        "min_hybrid_gap_khz": gap,
        "min_gap_g_khz": khz(best.coord),
    });
    let h = format!(
        "eigs: Delta/2pi = {} kHz ({label}), {} points; smallest optomechanical gap {} kHz at G/2pi = {} kHz\n",
        fmt_sig(khz(delta), 10),
        rows.len(),
        fmt_sig(gap, 6),
        fmt_sig(khz(best.coord), 10)
    );
    finish_sweep(ctx, &table, &data, manifest, &h)
}

struct Calibration {
    label: String,
    delta: f64,
    g_ep: Option<f64>,
}

fn petermann_calibrations(mode: Option<DeltaMode>, cfg: &Config) -> Result<Vec<Calibration>, CliError> {
    let p = &cfg.system;
    let markov = || -> Result<Calibration, CliError> {
        let ep = markovian_ep(p);
        Ok(Calibration {
            label: "markovian".into(),
            delta: -p.omega_m(),
            g_ep: ep.ok().map(|e| e.g_ep),
        })
    };
    let exact = || -> Result<Calibration, CliError> {
        let ep = solve_exact_ep(p)?;
        Ok(Calibration {
            label: "exact".into(),
            delta: ep.delta_ep,
            g_ep: Some(ep.g_ep),
        })
    };
    Ok(match (mode, cfg.detuning_hz) {
        (Some(DeltaMode::Markovian), _) => vec![markov()?],
        (Some(DeltaMode::Exact), _) => vec![exact()?],
        (Some(DeltaMode::Value(k)), _) => vec![Calibration {
            label: format!("value:{}", fmt12(k)),
            delta: from_khz(k),
            g_ep: None,
        }],
        (None, Some(hz)) => vec![Calibration {
            label: "config".into(),
            delta: hz_to_rad(hz),
            g_ep: None,
        }],
        (None, None) => vec![markov()?, exact()?],
    })
}

/// Indices `(plus, minus)` of the optomechanical branches: `plus` has the
/// larger imaginary part at the reference row.
fn hybrid_labels(reference: &SweepRow) -> (usize, usize) {
    let idx: Vec<usize> = (0..3).filter(|&i| i != reference.pseudomode).collect();
    if reference.lambdas[idx[0]].im >= reference.lambdas[idx[1]].im {
        (idx[0], idx[1])
    } else {
        (idx[1], idx[0])
    }
}

pub fn cmd_petermann(ctx: &mut Ctx, args: &PetermannArgs) -> Result<(), CliError> {
    let p = ctx.cfg.system;
    let cals = petermann_calibrations(args.delta_mode, &ctx.cfg)?;
    let mut table = Table::new(&[
        "calibration", "delta_khz", "g_khz", "k_plus", "k_minus", "k_3", "div_plus", "div_minus", "div_3",
    ]);
    let mut manifest = RunManifest::new("petermann", &ctx.cfg);
    let mut json_cals = Vec::new();
    let mut h = String::new();
    for cal in &cals {
        let rows: Vec<SweepRow> = if let Some(g) = args.at {
            if g < 0.0 {
                return Err(Error::InvalidGrid("coupling must be non-negative").into());
            }
            vec![sweep_point(&p, &DriveParams::new(cal.delta, from_khz(g))?, from_khz(g), false)]
        } else if args.at_ep {
            let g = cal.g_ep.ok_or_else(|| {
                CliError::Usage(format!("--at-ep needs an exceptional point for calibration `{}`", cal.label))
            })?;
            vec![sweep_point(&p, &DriveParams::new(cal.delta, g)?, g, false)]
        } else {
            sweep_eigs(&p, cal.delta, &g_grid(&args.sweep)?, false)?
        };
        let (plus, minus) = hybrid_labels(&rows[0]);
        let mut json_rows = Vec::with_capacity(rows.len());
        let (mut kmax, mut g_at) = (0.0f64, rows[0].coord);
        for r in &rows {
            let (lp, lm) = if r.pseudomode == rows[0].pseudomode { (plus, minus) } else { hybrid_labels(r) };
            let k = [r.petermann[lp], r.petermann[lm], r.petermann[r.pseudomode]];
            for kk in &k[..2] {
                if kk.value > kmax {
                    kmax = kk.value;
                    g_at = r.coord;
                }
            }
            let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
            table.push(vec![
                cal.label.clone(),
                fmt12(khz(cal.delta)),
                fmt12(khz(r.coord)),
                fmt12(k[0].value),
                fmt12(k[1].value),
                fmt12(k[2].value),
                flag(k[0].divergent),
                flag(k[1].divergent),
                flag(k[2].divergent),
            ]);
            json_rows.push(json!({
                "g_khz": khz(r.coord),
                "k_plus": k[0], "k_minus": k[1], "k_3": k[2],
            }));
        }
        table.footer.push(format!(
            "{}: max_k_hybrid = {} at g_khz = {}",
            cal.label,
            fmt12(kmax),
            fmt12(khz(g_at))
        ));
        manifest.set(&format!("calibration {}", cal.label), format!("delta_khz = {}", fmt12(khz(cal.delta))));
        json_cals.push(json!({
            "calibration": cal.label,
            "delta_khz": khz(cal.delta),
            "rows": json_rows,
            "max_k_hybrid": kmax,
            "max_k_g_khz": khz(g_at),
        }));
        if rows.len() == 1 {
            let r = &rows[0];
            let show = |k: crate::spectral::Petermann| {
                format!("{}{}", fmt_sig(k.value, 8), if k.divergent { " (divergent)" } else { "" })
            };
            writeln!(
                h,
                "{}: Delta/2pi = {} kHz, G/2pi = {} kHz: K+ = {}, K- = {}, K3 = {}",
                cal.label,
                fmt_sig(khz(cal.delta), 10),
                fmt_sig(khz(r.coord), 10),
                show(r.petermann[plus]),
                show(r.petermann[minus]),
                show(r.petermann[r.pseudomode])
            )
            .ok();
        } else {
            writeln!(
                h,
                "{}: Delta/2pi = {} kHz, max K+- = {} at G/2pi = {} kHz",
                cal.label,
                fmt_sig(khz(cal.delta), 10),
                fmt_sig(kmax, 6),
                fmt_sig(khz(g_at), 10)
            )
            .ok();
        }
    }
    if let Some(g) = args.at {
        manifest.set("point", format!("g_khz = {}", fmt12(g)));
    } else if args.at_ep {
        manifest.set("point", "exceptional point of each calibration");
    } else {
        manifest.set("grid", grid_label("g_khz", args.sweep.g_min, args.sweep.g_max, args.sweep.g_points));
    }
    let data = json!({ "calibrations": json_cals });
    finish_sweep(ctx, &table, &data, manifest, &h)
}

fn spectrum_drives(ctx: &Ctx, args: &SpectrumArgs) -> Result<(DriveParams, DriveParams, String), CliError> {
    let p = &ctx.cfg.system;
    let cfg_drive = match (ctx.cfg.detuning_hz, ctx.cfg.coupling_hz) {
        (Some(dl), Some(g)) => Some(DriveParams::from_hz(dl, g)?),
        (None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "config drive section needs both detuning_hz and coupling_hz for spectrum".into(),
            ))
        }
    };
    Ok(match (args.delta_mode, cfg_drive) {
        (Some(DeltaMode::Markovian), _) => {
            let d = markovian_ep(p)?.drive();
            (d, d, "both at markovian EP".into())
        }
        (Some(DeltaMode::Exact), _) => {
            let d = solve_exact_ep(p)?.drive();
            (d, d, "both at exact EP".into())
        }
        (Some(DeltaMode::Value(k)), _) => {
            let g = ctx
                .cfg
                .coupling_hz
                .ok_or_else(|| CliError::Usage("--delta-mode value:<kHz> needs drive.coupling_hz in the config".into()))?;
            let d = DriveParams::new(from_khz(k), hz_to_rad(g))?;
            (d, d, format!("both at delta_khz = {}", fmt12(k)))
        }
        (None, Some(d)) => (d, d, "both at config drive".into()),
        (None, None) => {
            let m = markovian_ep(p)?.drive();
            let e = solve_exact_ep(p)?.drive();
            (m, e, "each at its own EP".into())
        }
    })
}

pub fn cmd_spectrum(ctx: &mut Ctx, args: &SpectrumArgs) -> Result<(), CliError> {
    let p = ctx.cfg.system;
    let (dm, de, how) = spectrum_drives(ctx, args)?;
    let s = &args.sweep;
    let grid = Grid::linspace(from_khz(s.omega_min), from_khz(s.omega_max), s.omega_points)?;
    let omegas = grid.points();
    let curves: Vec<(&str, Bath, DriveParams)> = if args.markovian_only {
        vec![("markovian", Bath::Markovian, dm)]
    } else {
        vec![("markovian", Bath::Markovian, dm), ("nonmarkovian", Bath::Structured, de)]
    };
    let values: Vec<Vec<f64>> = curves
        .iter()
        .map(|(_, bath, d)| {
            spectrum(&p, d, omegas, *bath).map(|pts| pts.into_iter().map(|r| r.map_or(f64::NAN, |x| x.r_sq)).collect())
        })
        .collect::<Result<_, _>>()?;

    let mut header = vec!["omega_khz".to_string()];
    header.extend(curves.iter().map(|(n, ..)| format!("r_sq_{n}")));
    let mut table = Table::new(&header);
    for (k, w) in omegas.iter().enumerate() {
        let mut row = vec![fmt12(khz(*w))];
        row.extend(values.iter().map(|v| fmt12(v[k])));
        table.push(row);
    }
    let mut h = String::new();
    let mut dips = serde_json::Map::new();
    for (name, bath, d) in &curves {
        let m = dip_metrics(&p, d, *bath);
        table.footer.push(format!(
            "dip {name}: omega_min_khz = {}, r_sq_min = {}, r_sq_at_omega_m = {}",
            fmt12(khz(m.omega_min)),
            fmt12(m.r_sq_min),
            fmt12(m.r_sq_resonance)
        ));
        writeln!(
            h,
            "{name:<13} Delta/2pi = {} kHz, G/2pi = {} kHz: |r|^2 min = {} at {} kHz, |r(omega_m)|^2 = {}",
            fmt_sig(khz(d.delta()), 10),
            fmt_sig(khz(d.g()), 10),
            fmt_sig(m.r_sq_min, 6),
            fmt_sig(khz(m.omega_min), 10),
            fmt_sig(m.r_sq_resonance, 6)
        )
        .ok();
        dips.insert(
            (*name).to_string(),
            json!({
                "delta_khz": khz(d.delta()), "g_khz": khz(d.g()),
                "omega_min_khz": khz(m.omega_min), "r_sq_min": m.r_sq_min, "r_sq_at_omega_m": m.r_sq_resonance,
            }),
        );
    }
    let coop_drive = curves.last().expect("at least one curve").2;
    let coop = match cooperativity(&p, &coop_drive) {
        Ok(c) => {
            table.footer.push(format!(
                "cooperativity: c = {}, c_eff = {}, ratio = {}",
                fmt12(c.c),
                fmt12(c.c_eff),
                fmt12(c.c_eff / c.c)
            ));
            writeln!(h, "cooperativity C = {}, C_eff = {} (ratio {})", fmt_sig(c.c, 6), fmt_sig(c.c_eff, 6), fmt_sig(c.c_eff / c.c, 8)).ok();
            json!({"c": c.c, "c_eff": c.c_eff})
        }
        Err(_) => {
            table.footer.push("cooperativity: undefined without mechanical damping".into());
            Value::Null
        }
    };

    let mut manifest = RunManifest::new("spectrum", &ctx.cfg);
    manifest.set("calibration", &how);
    manifest.set("grid", grid_label("omega_khz", s.omega_min, s.omega_max, s.omega_points));
    let data = json!({
        "omega_khz": omegas.iter().map(|w| khz(*w)).collect::<Vec<_>>(),
        "r_sq": curves.iter().zip(&values).map(|((n, ..), v)| ((*n).to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "dips": dips,
        "cooperativity": coop,
    });
    finish_sweep(ctx, &table, &data, manifest, &h)
}

pub fn cmd_embedcheck(ctx: &mut Ctx, args: &EmbedArgs) -> Result<(), CliError> {
    let p = ctx.cfg.system;
    let (d, how) = match (ctx.cfg.detuning_hz, ctx.cfg.coupling_hz) {
        (Some(dl), Some(g)) => (DriveParams::from_hz(dl, g)?, "config drive"),
        (None, None) => (solve_exact_ep(&p)?.drive(), "exact EP"),
        _ => return Err(CliError::Usage("config drive section needs both detuning_hz and coupling_hz".into())),
    };
    let t_final = args.t_final.unwrap_or(20.0 / p.kappa());
    let dt = args.dt.unwrap_or(1.0 / (100.0 * p.omega_m()));
    let one = Complex64::new(1.0, 0.0);
    let init = [one, one];
    let max_rel_err = compare_embeddings(&p, &d, init, t_final, dt)?;
    let conv = convergence_order(&p, &d, init, t_final, dt)?;
    let kernel = kernel_fourier_check(&p).ok();
    let transient = transient_decay_rate(&p, &d, [one, one, one], 10.0 / p.omega_c(), dt).ok();
    let passed = max_rel_err <= EMBED_TOLERANCE;

    let mut table = Table::new(&["quantity", "value"]);
    let mut add = |k: &str, v: f64| table.push(vec![k.to_string(), fmt12(v)]);
    add("t_final_s", t_final);
    add("dt_s", dt);
    add("max_rel_err", max_rel_err);
    add("max_rel_err_half_dt", conv.err_half);
    add("halving_ratio", conv.ratio);
    add("convergence_order", conv.order);
    add("kernel_fourier_rel_err", kernel.map_or(f64::NAN, |k| k.rel_err));
    add("transient_rate_over_cutoff", transient.map_or(f64::NAN, |r| r / p.omega_c()));
    table.footer.push(format!("result: {}", if passed { "pass" } else { "fail" }));

    let data = json!({
        "drive": how,
        "t_final_s": t_final,
        "dt_s": dt,
        "max_rel_err": max_rel_err,
        "convergence": conv,
        "kernel_fourier": kernel,
        "transient_rate_over_cutoff": transient.map(|r| r / p.omega_c()),
        "tolerance": EMBED_TOLERANCE,
        "passed": passed,
    });
    let mut h = String::new();
    writeln!(h, "embedding check at {how}: t_final = {:.4e} s, dt = {:.4e} s", t_final, dt).ok();
    writeln!(h, "max relative deviation      {:.3e}", max_rel_err).ok();
    writeln!(h, "at dt/2                     {:.3e}  (ratio {:.2}, order {:.2})", conv.err_half, conv.ratio, conv.order).ok();
    if let Some(k) = kernel {
        writeln!(h, "kernel Fourier check        {:.3e}", k.rel_err).ok();
    }
    if let Some(r) = transient {
        writeln!(h, "transient rate / cutoff     {:.5}", r / p.omega_c()).ok();
    }
    writeln!(h, "{}", if passed { "PASS" } else { "FAIL" }).ok();

    let mut manifest = RunManifest::new("embedcheck", &ctx.cfg);
    manifest.set("drive", how);
    manifest.set("t_final_s", fmt12(t_final));
    manifest.set("dt_s", fmt12(dt));
    finish_report(ctx, &table, &data, manifest, &h)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "embedding deviation {max_rel_err:.3e} exceeds {EMBED_TOLERANCE:.0e}"
        )))
    }
}
