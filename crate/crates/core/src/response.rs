//! Probe response of the driven cavity: susceptibilities, reflection and
//! scattering coefficients, transparency-dip metrics, cooperativity.
//!
//! Probe frequencies are offsets from the control laser, in rad/s.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::epsolver::mech_renorm;
use crate::error::{Error, Result};
use crate::model::{DriveParams, SystemParams};

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Which mechanical response enters the cavity reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Bath {
    /// Memoryless damping: the bare `chi_b` is used.
    Markovian,
    /// Exponential-memory bath: the dressed `chi_b,eff` is used.
    Structured,
}

/// Inverse susceptibilities and the dressed determinant at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibilities {
    pub chi_a_inv: C,
    pub chi_b_inv: C,
    pub chi_b_eff_inv: C,
    pub chi_c_inv: C,
    pub d_denom: C,
    pub eta: C,
}

/// Susceptibilities at a complex frequency; the real axis is the physical one.
pub fn susceptibilities_at(p: &SystemParams, d: &DriveParams, omega: C) -> Susceptibilities {
    let chi_a_inv = 0.5 * p.kappa() - I * (omega + d.delta());
    let chi_b_inv = 0.5 * p.gamma() - I * (omega - p.omega_m());
    let chi_c_inv = p.omega_c() - I * omega;
    let chi_b_eff_inv = chi_b_inv - p.g_c_sq() / chi_c_inv;
    Susceptibilities {
        chi_a_inv,
        chi_b_inv,
        chi_b_eff_inv,
        chi_c_inv,
        d_denom: chi_a_inv * chi_b_eff_inv + d.g() * d.g(),
        eta: -p.gamma().sqrt() * I * omega / chi_c_inv,
    }
}

pub fn susceptibilities(p: &SystemParams, d: &DriveParams, omega: f64) -> Susceptibilities {
    susceptibilities_at(p, d, C::new(omega, 0.0))
}

/// `|eta|^2 = gamma w^2 / (w^2 + omega_c^2)`.
pub fn eta_sq(p: &SystemParams, omega: f64) -> f64 {
    p.gamma() * omega * omega / (omega * omega + p.omega_c() * p.omega_c())
}

/// Dressed determinant `D(omega)`; zeros sit at `omega = i lambda` for the
/// drift eigenvalues `lambda`.
pub fn dressed_denominator(p: &SystemParams, d: &DriveParams, omega: C) -> C {
    susceptibilities_at(p, d, omega).d_denom
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub r: C,
    pub r_sq: f64,
    pub s_aa: C,
    pub s_axi: C,
}

/// Mean-field reflection amplitude and scattering coefficients.
pub fn reflection(
    p: &SystemParams,
    d: &DriveParams,
    omega: f64,
    bath: Bath,
) -> Result<SpectrumPoint> {
    let s = susceptibilities(p, d, omega);
    let g2 = d.g() * d.g();
    let (chi_m_inv, eta) = match bath {
        Bath::Markovian => (s.chi_b_inv, C::new(0.0, 0.0)),
        Bath::Structured => (s.chi_b_eff_inv, s.eta),
    };
    let denom = s.chi_a_inv * chi_m_inv + g2;
    if denom.norm() < 1e-12 * p.kappa() * p.omega_m() {
        return Err(Error::SingularDenominator {
            omega,
            magnitude: denom.norm(),
        });
    }
    let s_aa = 1.0 - p.kappa() * chi_m_inv / denom;
    let r = if chi_m_inv.norm() > 0.0 {
        1.0 - p.kappa() / (s.chi_a_inv + g2 / chi_m_inv)
    } else {
        s_aa
    };
    Ok(SpectrumPoint {
        omega,
        r,
        r_sq: r.norm_sqr(),
        s_aa,
        s_axi: I * p.kappa().sqrt() * d.g() * eta / denom,
    })
}

/// Reflection over a frequency grid, in grid order; singular points come back
/// as per-point errors.
pub fn spectrum(
    p: &SystemParams,
    d: &DriveParams,
    omegas: &[f64],
    bath: Bath,
) -> Result<Vec<Result<SpectrumPoint>>> {
    if omegas.is_empty() {
        return Err(Error::InvalidGrid("frequency grid is empty"));
    }
    Ok(omegas
        .par_iter()
        .map(|&w| reflection(p, d, w, bath))
        .collect())
}

/// Half-width of the dip search window in units of `gamma`.
pub const DIP_WINDOW: f64 = 25.0;
const DIP_COARSE_POINTS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DipMetrics {
    /// Location of the smallest `|r|^2` in the window.
    pub omega_min: f64,
    pub r_sq_min: f64,
    /// `|r(omega_m)|^2`; NaN if the response is singular there.
    pub r_sq_resonance: f64,
}

fn r_sq_or_inf(p: &SystemParams, d: &DriveParams, w: f64, bath: Bath) -> f64 {
    reflection(p, d, w, bath).map_or(f64::INFINITY, |s| s.r_sq)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while (b - a).abs() > tol {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
    }
    0.5 * (a + b)
}

/// Transparency-dip depth in `omega_m +- 25 gamma`: a 4001-point scan, then
/// golden-section refinement to `1e-3 gamma`.
pub fn dip_metrics(p: &SystemParams, d: &DriveParams, bath: Bath) -> DipMetrics {
    let wm = p.omega_m();
    let resonance = reflection(p, d, wm, bath).map_or(f64::NAN, |s| s.r_sq);
    let half = DIP_WINDOW * p.gamma();
    if half == 0.0 {
        return DipMetrics {
            omega_min: wm,
            r_sq_min: resonance,
            r_sq_resonance: resonance,
        };
    }
    let step = 2.0 * half / (DIP_COARSE_POINTS - 1) as f64;
    let f = |w: f64| r_sq_or_inf(p, d, w, bath);
    let (k, _) = (0..DIP_COARSE_POINTS)
        .into_par_iter()
        .map(|k| (k, f(wm - half + step * k as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty scan");
    let lo = wm - half + step * k.saturating_sub(1) as f64;
    let hi = wm - half + step * (k + 1).min(DIP_COARSE_POINTS - 1) as f64;
    let w = golden_min(f, lo, hi, 1e-3 * p.gamma());
    let (w, r) = [
        (w, f(w)),
        (wm - half + step * k as f64, f(wm - half + step * k as f64)),
    ]
    .into_iter()
    .min_by(|a, b| a.1.total_cmp(&b.1))
    .expect("two candidates");
    DipMetrics {
        omega_min: w,
        r_sq_min: r,
        r_sq_resonance: resonance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Cooperativity {
    pub c: f64,
    pub c_eff: f64,
}

/// `C = 4G^2/(kappa gamma)` and its memory-renormalized counterpart.
pub fn cooperativity(p: &SystemParams, d: &DriveParams) -> Result<Cooperativity> {
    let gamma_eff = mech_renorm(p).gamma_eff;
    if gamma_eff <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: p.gamma(),
            reason: "cooperativity needs nonzero mechanical damping",
        });
    }
    let num = 4.0 * d.g() * d.g() / p.kappa();
    Ok(Cooperativity {
        c: num / p.gamma(),
        c_eff: num / gamma_eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charpoly::{char_cubic, cubic_roots};
    use crate::epsolver::{markovian_ep, solve_exact_ep};
    use crate::model::hz_to_rad;
    use proptest::prelude::*;

    fn reference() -> SystemParams {
        SystemParams::representative()
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn susceptibility_values() {
        let p = reference();
        let d = DriveParams::new(-p.omega_m(), hz_to_rad(40e3)).unwrap();
        assert_eq!(susceptibilities(&p, &d, 0.0).eta, C::new(0.0, 0.0));
        let s = susceptibilities(&p, &d, p.omega_m());
        let want = C::new(0.25 * p.gamma(), -0.25 * p.gamma());
        assert!(rel(s.chi_b_eff_inv, want) < 1e-12);
        let lossless = p.with_gamma(0.0).unwrap();
        let s = susceptibilities(&lossless, &d, 0.3 * p.omega_m());
        assert_eq!(s.chi_b_eff_inv, s.chi_b_inv);
        // eta written with the pseudomode coupling explicitly
        for w in [0.1, 1.0, 7.0].map(|k| k * p.omega_c()) {
            let s = susceptibilities(&p, &d, w);
            let composed = p.gamma().sqrt() - p.g_c() * (2.0 * p.omega_c()).sqrt() / s.chi_c_inv;
            assert!(rel(s.eta, composed) < 1e-12);
        }
    }

    #[test]
    fn bare_cavity_reflection() {
        let p = reference();
        let d = DriveParams::new(-p.omega_m(), 0.0).unwrap();
        let s = reflection(&p, &d, p.omega_m(), Bath::Structured).unwrap();
        assert!((s.r + 1.0).norm() < 1e-12);
        assert!((s.r_sq - 1.0).abs() < 1e-12);
        let grid: Vec<f64> = (0..201)
            .map(|k| p.omega_m() * (0.9 + 0.001 * k as f64))
            .collect();
        for pt in spectrum(&p, &d, &grid, Bath::Structured).unwrap() {
            assert!((pt.unwrap().r_sq - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn far_detuned_probe_reflects() {
        let p = reference();
        let d = markovian_ep(&p).unwrap().drive();
        let w = p.omega_m() + 50.0 * p.kappa();
        for bath in [Bath::Markovian, Bath::Structured] {
            assert!((reflection(&p, &d, w, bath).unwrap().r_sq - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn markovian_dip_closed_form() {
        let p = reference();
        let ep = markovian_ep(&p).unwrap();
        let g2 = ep.g_ep * ep.g_ep;
        let oracle = (1.0 - p.kappa() / (0.5 * p.kappa() + 2.0 * g2 / p.gamma())).powi(2);
        let got = reflection(&p, &ep.drive(), p.omega_m(), Bath::Markovian).unwrap();
        assert!((got.r_sq - oracle).abs() < 1e-12);
        assert!((got.r_sq - 0.6555).abs() < 1e-4);
    }

    #[test]
    fn dip_depths_at_each_ep() {
        let p = reference();
        let m = dip_metrics(&p, &markovian_ep(&p).unwrap().drive(), Bath::Markovian);
        assert!((m.r_sq_min - 0.65).abs() < 0.01);
        let e = dip_metrics(&p, &solve_exact_ep(&p).unwrap().drive(), Bath::Structured);
        assert!((e.r_sq_min - 0.81).abs() < 0.01);
        assert!((e.r_sq_resonance - 0.81).abs() < 0.01);
        assert!(e.r_sq_min <= e.r_sq_resonance);
        assert!(m.r_sq_min < e.r_sq_min);
        assert!((e.omega_min - p.omega_m()).abs() < DIP_WINDOW * p.gamma());
    }

    #[test]
    fn dip_refinement_beats_scan() {
        // golden-section result is never worse than a dense brute-force scan
        let p = reference();
        let d = solve_exact_ep(&p).unwrap().drive();
        let m = dip_metrics(&p, &d, Bath::Structured);
        let brute = (0..20001)
            .map(|k| p.omega_m() - 2.0 * p.gamma() + 4.0 * p.gamma() * k as f64 / 20000.0)
            .map(|w| reflection(&p, &d, w, Bath::Structured).unwrap().r_sq)
            .fold(f64::INFINITY, f64::min);
        // 1e-3 gamma frequency resolution on a dip of width ~gamma
        assert!(m.r_sq_min <= brute + 1e-6, "{} vs {brute}", m.r_sq_min);
    }

    #[test]
    fn vanishing_damping_window() {
        let p = reference().with_gamma(0.0).unwrap();
        let d = DriveParams::new(-p.omega_m(), hz_to_rad(40e3)).unwrap();
        let m = dip_metrics(&p, &d, Bath::Structured);
        assert_eq!(m.omega_min, p.omega_m());
        let tiny = reference().with_gamma(1e-9).unwrap();
        let m = dip_metrics(&tiny, &d, Bath::Structured);
        assert!(m.r_sq_min.is_finite() && m.r_sq_min >= 0.0);
    }

    #[test]
    fn cooperativity_values() {
        let p = reference();
        let ep = solve_exact_ep(&p).unwrap();
        let c = cooperativity(&p, &ep.drive()).unwrap();
        assert!((c.c - 9.75).abs() < 0.01);
        assert!((c.c_eff / c.c - 2.0).abs() < 1e-12);
        let slow = p.with_omega_c(1e-8 * p.omega_m()).unwrap();
        let c = cooperativity(&slow, &ep.drive()).unwrap();
        assert!((c.c_eff / c.c - 1.0).abs() < 1e-12);
        assert!(cooperativity(&p.with_gamma(0.0).unwrap(), &ep.drive()).is_err());
    }

    #[test]
    fn singular_denominator_is_reported() {
        // lossless, memoryless mechanics driven at G = 0: D vanishes at w = omega_m
        let p = SystemParams::new(1.0, 0.1, 0.0, 1.0).unwrap();
        let d = DriveParams::new(-1.0, 0.0).unwrap();
        assert!(matches!(
            reflection(&p, &d, 1.0, Bath::Markovian),
            Err(Error::SingularDenominator { .. })
        ));
        let pts = spectrum(&p, &d, &[0.5, 1.0], Bath::Markovian).unwrap();
        assert!(pts[0].is_ok() && pts[1].is_err());
        assert!(spectrum(&p, &d, &[], Bath::Markovian).is_err());
    }

    fn params() -> impl Strategy<Value = (SystemParams, DriveParams)> {
        (
            0.05f64..0.5,
            0.001f64..0.05,
            0.2f64..5.0,
            -1.5f64..-0.5,
            0.0f64..0.2,
        )
            .prop_map(|(k, g, oc, dl, gg)| {
                let w = hz_to_rad(1e6);
                (
                    SystemParams::new(w, k * w, g * w, oc * w).unwrap(),
                    DriveParams::new(dl * w, gg * w).unwrap(),
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn reflection_forms_agree((p, d) in params(), x in 0.5f64..1.5) {
            let w = x * p.omega_m();
            for bath in [Bath::Markovian, Bath::Structured] {
                if let Ok(pt) = reflection(&p, &d, w, bath) {
                    prop_assert!((pt.r - pt.s_aa).norm() <= 1e-12 * pt.s_aa.norm().max(1.0));
                    prop_assert!(pt.r_sq >= 0.0);
                }
            }
        }

        #[test]
        fn memoryless_paths_coincide((p, d) in params(), x in 0.5f64..1.5) {
            let q = p.with_gamma(0.0).unwrap();
            let w = x * p.omega_m();
            if let (Ok(a), Ok(b)) = (reflection(&q, &d, w, Bath::Markovian), reflection(&q, &d, w, Bath::Structured)) {
                prop_assert!((a.r - b.r).norm() <= 1e-12 * a.r.norm().max(1.0));
            }
        }

        #[test]
        fn eta_closed_form((p, _d) in params(), e in -3.0f64..3.0) {
            let w = p.omega_c() * 10f64.powf(e);
            let s = susceptibilities(&p, &DriveParams::new(0.0, 0.0).unwrap(), w);
            prop_assert!((s.eta.norm_sqr() / eta_sq(&p, w) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn poles_are_drift_eigenvalues((p, d) in params()) {
            for l in cubic_roots(&char_cubic(&p, &d)) {
                let dd = dressed_denominator(&p, &d, I * l);
                let scale = p.rate_scale().powi(2);
                prop_assert!(dd.norm() <= 1e-8 * scale, "|D| = {} at {}", dd.norm(), l);
            }
        }
    }
}
