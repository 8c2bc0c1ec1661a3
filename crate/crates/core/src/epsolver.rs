//! Exceptional-point location: the memoryless closed form, the leading-order
//! memory shift, and the exact double root of the extended cubic.
//!
//! The exact solver parametrizes the double-root conditions `p = p' = 0` by the
//! coalesced eigenvalue itself: for a trial `lambda` the coupling `G^2` and the
//! detuning follow in closed form ([`ep_candidates`]), and the physical point
//! is where both come out real. That leaves two real equations in the two real
//! unknowns `(Re lambda, Im lambda)`, solved by damped Newton.

use num_complex::Complex64;

use crate::charpoly::{char_cubic, factors, third_root_viete, FactorTriple};
use crate::error::{Error, Result};
use crate::model::{DriveParams, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

const POLISH_STEPS: usize = 4;

/// Default relative tolerance for [`certify_order_two`].
pub const CERTIFY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum EpKind {
    Markovian,
    Perturbative,
    Exact,
}

/// Location and diagnostics of a second-order exceptional point (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EpSolution {
    pub kind: EpKind,
    pub lambda_ep: Complex64,
    pub delta_ep: f64,
    pub g_ep: f64,
    /// Remaining simple root (the decoupled pseudomode pole for `Markovian`).
    pub lambda_3: Complex64,
    pub residual_p: f64,
    pub residual_dp: f64,
    pub second_deriv_mag: f64,
}

impl EpSolution {
    pub fn drive(&self) -> DriveParams {
        DriveParams::new(self.delta_ep, self.g_ep).expect("exceptional-point drive is valid")
    }
}

/// Memory-renormalized mechanical frequency and damping near the bare pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechRenorm {
    pub omega_eff: f64,
    pub gamma_eff: f64,
}

fn require_markovian_regime(p: &SystemParams) -> Result<()> {
    if p.kappa() <= p.gamma() {
        return Err(Error::NoMarkovianEp {
            kappa: p.kappa(),
            gamma: p.gamma(),
        });
    }
    Ok(())
}

/// Closed-form EP of the memoryless 2x2 drift.
pub fn markovian_ep(p: &SystemParams) -> Result<EpSolution> {
    require_markovian_regime(p)?;
    let delta = -p.omega_m();
    let g = 0.25 * (p.kappa() - p.gamma());
    let lambda = Complex64::new(-0.25 * (p.kappa() + p.gamma()), -p.omega_m());
    // 2x2 characteristic quadratic (l + a)(l + f) + G^2 and its derivatives
    let a = -I * delta + 0.5 * p.kappa();
    let f = I * p.omega_m() + 0.5 * p.gamma();
    let q = (lambda + a) * (lambda + f) + g * g;
    let dq = 2.0 * lambda + a + f;
    Ok(EpSolution {
        kind: EpKind::Markovian,
        lambda_ep: lambda,
        delta_ep: delta,
        g_ep: g,
        lambda_3: Complex64::new(-p.omega_c(), 0.0),
        residual_p: q.norm(),
        residual_dp: dq.norm(),
        second_deriv_mag: 2.0,
    })
}

pub fn mech_renorm(p: &SystemParams) -> MechRenorm {
    let (wm, oc, g) = (p.omega_m(), p.omega_c(), p.gamma());
    let denom = oc * oc + wm * wm;
    MechRenorm {
        omega_eff: wm * (1.0 - g * oc / (2.0 * denom)),
        // gamma [1 - oc^2/denom] without the cancellation
        gamma_eff: g * wm * wm / denom,
    }
}

/// Leading-order shifts `(delta Delta_EP, delta G_EP)` of the EP coordinates.
pub fn perturbative_shifts(p: &SystemParams) -> (f64, f64) {
    let (wm, oc, g) = (p.omega_m(), p.omega_c(), p.gamma());
    let denom = oc * oc + wm * wm;
    (wm * g * oc / (2.0 * denom), g * oc * oc / (4.0 * denom))
}

/// EP of the effective 2x2 problem with the self-energy frozen at `-i omega_m`.
pub fn perturbative_ep(p: &SystemParams) -> Result<EpSolution> {
    require_markovian_regime(p)?;
    let (dd, dg) = perturbative_shifts(p);
    let delta = -p.omega_m() + dd;
    let g = 0.25 * (p.kappa() - p.gamma()) + dg;
    let renorm = mech_renorm(p);
    let lambda = Complex64::new(-0.25 * (p.kappa() + renorm.gamma_eff), -renorm.omega_eff);
    Ok(populate(p, EpKind::Perturbative, lambda, delta, g))
}

fn populate(p: &SystemParams, kind: EpKind, lambda: Complex64, delta: f64, g: f64) -> EpSolution {
    let q = char_cubic(p, &DriveParams::new(delta, g).expect("finite drive"));
    EpSolution {
        kind,
        lambda_ep: lambda,
        delta_ep: delta,
        g_ep: g,
        lambda_3: third_root_viete(p, delta, lambda),
        residual_p: q.eval(lambda).norm(),
        residual_dp: q.derivative(lambda).norm(),
        second_deriv_mag: q.second_derivative(lambda).norm(),
    }
}

/// Coupling and detuning that make `lambda` a double root; complex in general.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpCandidate {
    pub g_sq: Complex64,
    pub delta: Complex64,
}

impl EpCandidate {
    /// Physical when both are real (within `rel_tol` of their magnitude)
    /// with `G^2 > 0` and `Delta < 0`.
    pub fn is_physical(&self, rel_tol: f64) -> bool {
        self.g_sq.re > 0.0
            && self.delta.re < 0.0
            && self.g_sq.im.abs() <= rel_tol * self.g_sq.norm()
            && self.delta.im.abs() <= rel_tol * self.delta.norm()
    }
}

pub fn ep_candidates(p: &SystemParams, lambda: Complex64) -> Result<EpCandidate> {
    let FactorTriple { g, h, .. } = factors(p, lambda);
    let gc2 = p.g_c_sq();
    let denom = g * g + gc2;
    if denom.norm() < 1e-12 * (g.norm_sqr() + gc2) || denom.norm() == 0.0 {
        return Err(Error::DegenerateDenominator { lambda });
    }
    Ok(EpCandidate {
        g_sq: h * h / denom,
        delta: -I * (lambda + 0.5 * p.kappa() + g * h / denom),
    })
}

/// Knobs of the damped Newton search in [`solve_exact_ep_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactEpOptions {
    /// Starting eigenvalue; defaults to the memoryless coalescence value.
    pub seed: Option<Complex64>,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Convergence when both residuals fall below this times `omega_m`.
    pub tolerance: f64,
    /// Finite-difference step relative to `max(|lambda|, omega_c)`.
    pub fd_step: f64,
    /// Relative seed perturbations tried on failure, each with both signs on
    /// each coordinate.
    pub restart_fractions: [f64; 3],
}

impl Default for ExactEpOptions {
    fn default() -> Self {
        Self {
            seed: None,
            max_iterations: 100,
            max_halvings: 30,
            tolerance: 1e-12,
            fd_step: 1e-6,
            restart_fractions: [0.01, 0.02, 0.05],
        }
    }
}

fn markovian_seed(p: &SystemParams) -> Complex64 {
    Complex64::new(-0.25 * (p.kappa() + p.gamma()), -p.omega_m())
}

/// The two reality conditions, both in rad/s.
fn reality_residual(p: &SystemParams, x: f64, y: f64) -> Option<[f64; 2]> {
    let lambda = Complex64::new(x, y);
    let FactorTriple { g, h, .. } = factors(p, lambda);
    let denom = g * g + p.g_c_sq();
    if denom.norm() == 0.0 {
        return None;
    }
    let g_sq = h * h / denom;
    let b = lambda + 0.5 * p.kappa() + g * h / denom;
    let r = [g_sq.im / p.omega_m(), b.re];
    (r[0].is_finite() && r[1].is_finite()).then_some(r)
}

fn norm2(r: [f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

enum NewtonOutcome {
    Converged(Complex64),
    Failed(f64),
}

fn newton(p: &SystemParams, seed: Complex64, opts: &ExactEpOptions) -> NewtonOutcome {
    let (mut x, mut y) = (seed.re, seed.im);
    let tol = opts.tolerance * p.omega_m();
    let Some(mut r) = reality_residual(p, x, y) else {
        return NewtonOutcome::Failed(f64::INFINITY);
    };
    // once inside the tolerance, keep stepping while the residual still
    // drops: the G^2 condition is loose in absolute terms
    let mut polish = POLISH_STEPS;
    for _ in 0..=opts.max_iterations + POLISH_STEPS {
        if r[0].abs() < tol && r[1].abs() < tol {
            if polish == 0 {
                return NewtonOutcome::Converged(Complex64::new(x, y));
            }
            polish -= 1;
        }
        let h = opts.fd_step * x.hypot(y).max(p.omega_c());
        let (Some(rxp), Some(rxm), Some(ryp), Some(rym)) = (
            reality_residual(p, x + h, y),
            reality_residual(p, x - h, y),
            reality_residual(p, x, y + h),
            reality_residual(p, x, y - h),
        ) else {
            return NewtonOutcome::Failed(norm2(r));
        };
        let j = [
            [(rxp[0] - rxm[0]) / (2.0 * h), (ryp[0] - rym[0]) / (2.0 * h)],
            [(rxp[1] - rxm[1]) / (2.0 * h), (ryp[1] - rym[1]) / (2.0 * h)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return NewtonOutcome::Failed(norm2(r));
        }
        let dx = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dy = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            if let Some(rn) = reality_residual(p, x + step * dx, y + step * dy) {
                if norm2(rn) < norm2(r) {
                    accepted = Some(rn);
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some(rn) => {
                x += step * dx;
                y += step * dy;
                r = rn;
            }
            // no descent left: either at the noise floor or stuck
            None if r[0].abs() < tol && r[1].abs() < tol => break,
            None => return NewtonOutcome::Failed(norm2(r)),
        }
    }
    if r[0].abs() < tol && r[1].abs() < tol {
        NewtonOutcome::Converged(Complex64::new(x, y))
    } else {
        NewtonOutcome::Failed(norm2(r))
    }
}

fn seeds(p: &SystemParams, opts: &ExactEpOptions) -> Vec<Complex64> {
    let base = opts.seed.unwrap_or_else(|| markovian_seed(p));
    let mut out = vec![base];
    for frac in opts.restart_fractions {
        for sign in [1.0, -1.0] {
            let k = 1.0 + sign * frac;
            out.push(Complex64::new(base.re * k, base.im));
            out.push(Complex64::new(base.re, base.im * k));
        }
    }
    out
}

/// Result of converging from one seed: the solution if physical.
fn exact_from(p: &SystemParams, lambda: Complex64) -> Result<Option<EpSolution>> {
    let cand = ep_candidates(p, lambda)?;
    if cand.g_sq.re <= 0.0 || cand.delta.re >= 0.0 {
        return Ok(None);
    }
    Ok(Some(populate(
        p,
        EpKind::Exact,
        lambda,
        cand.delta.re,
        cand.g_sq.re.sqrt(),
    )))
}

/// Numerically exact EP of the extended system from the default seed.
pub fn solve_exact_ep(p: &SystemParams) -> Result<EpSolution> {
    solve_exact_ep_with(p, &ExactEpOptions::default())
}

/// Runs the seed schedule: the primary seed first, then the perturbed
/// restarts. Returns the first physical root; if several restarts are needed
/// and more than one physical root appears, the largest real part wins.
pub fn solve_exact_ep_with(p: &SystemParams, opts: &ExactEpOptions) -> Result<EpSolution> {
    require_markovian_regime(p)?;
    let all = seeds(p, opts);
    let (primary, restarts) = all.split_first().expect("at least one seed");
    let mut best_residual = f64::INFINITY;
    let mut non_physical = 0usize;
    match newton(p, *primary, opts) {
        NewtonOutcome::Converged(l) => match exact_from(p, l)? {
            Some(sol) => return Ok(sol),
            None => non_physical += 1,
        },
        NewtonOutcome::Failed(r) => best_residual = best_residual.min(r),
    }
    let mut found: Vec<EpSolution> = Vec::new();
    for &seed in restarts {
        match newton(p, seed, opts) {
            NewtonOutcome::Converged(l) => match exact_from(p, l)? {
                Some(sol) => found.push(sol),
                None => non_physical += 1,
            },
            NewtonOutcome::Failed(r) => best_residual = best_residual.min(r),
        }
    }
    if let Some(best) = found
        .into_iter()
        .max_by(|a, b| a.lambda_ep.re.total_cmp(&b.lambda_ep.re))
    {
        return Ok(best);
    }
    if non_physical > 0 {
        Err(Error::NonPhysicalEp {
            found: non_physical,
        })
    } else {
        Err(Error::NoConvergence {
            restarts: restarts.len(),
            best_residual,
        })
    }
}

/// Every distinct physical root reachable from the full seed schedule,
/// sorted by descending real part.
pub fn exact_ep_candidates(p: &SystemParams, opts: &ExactEpOptions) -> Result<Vec<EpSolution>> {
    require_markovian_regime(p)?;
    let mut found: Vec<EpSolution> = Vec::new();
    for seed in seeds(p, opts) {
        if let NewtonOutcome::Converged(l) = newton(p, seed, opts) {
            if let Some(sol) = exact_from(p, l)? {
                let dup = found
                    .iter()
                    .any(|f| (f.lambda_ep - sol.lambda_ep).norm() < 1e-9 * p.rate_scale());
                if !dup {
                    found.push(sol);
                }
            }
        }
    }
    found.sort_by(|a, b| b.lambda_ep.re.total_cmp(&a.lambda_ep.re));
    Ok(found)
}

/// Magnitudes of the cubic and its first two derivatives at an EP.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OrderCertificate {
    pub p: f64,
    pub dp: f64,
    pub ddp: f64,
}

/// Checks that `lambda_ep` is a double (not triple) root of the cubic at the
/// solution's drive, using [`CERTIFY_TOLERANCE`].
pub fn certify_order_two(p: &SystemParams, sol: &EpSolution) -> Result<OrderCertificate> {
    certify_order_two_with(p, sol, CERTIFY_TOLERANCE)
}

/// Relative criteria with `s = p.rate_scale()`:
/// `|p| <= tol |p''| s^2`, `|p'| <= tol |p''| s`, `|p''| > tol s`.
pub fn certify_order_two_with(
    p: &SystemParams,
    sol: &EpSolution,
    tol: f64,
) -> Result<OrderCertificate> {
    let q = char_cubic(p, &DriveParams::new(sol.delta_ep, sol.g_ep)?);
    let l = sol.lambda_ep;
    let cert = OrderCertificate {
        p: q.eval(l).norm(),
        dp: q.derivative(l).norm(),
        ddp: q.second_derivative(l).norm(),
    };
    let s = p.rate_scale();
    let ok =
        cert.p <= tol * cert.ddp * s * s && cert.dp <= tol * cert.ddp * s && cert.ddp > tol * s;
    if ok {
        Ok(cert)
    } else {
        Err(Error::OrderCheckFailed {
            p: cert.p,
            dp: cert.dp,
            ddp: cert.ddp,
        })
    }
}
