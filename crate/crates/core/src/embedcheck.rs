//! Time-domain check that the pseudomode reproduces the exponential memory.
//!
//! Two routes integrate the same mean-field dynamics. The pseudomode route
//! steps the 3x3 drift `(a, b, c)` directly. The direct route keeps the
//! memory integral `u(t) = int_0^t exp(-omega_c (t - s)) b(s) ds` as an
//! accumulator with `du/dt = -omega_c u + b`, and feeds `(gamma omega_c / 2) u`
//! back into the mechanics. With `c(0) = 0` the two agree exactly.
//!
//! Both use fourth-order Runge-Kutta, but the direct route integrates the
//! accumulator in its interaction picture (`v = exp(omega_c s) u` within each
//! step). Plain RK4 on two linear systems related by a fixed change of
//! variables produces trajectories identical to roundoff, which would make
//! the comparison blind to step-size error.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    drift_nonmarkovian, memory_kernel_smooth, spectral_density, DriftMatrix, DriveParams,
    SystemParams,
};

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Sampled mean amplitudes on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `(a, b)` or `(a, b, c)` at each time.
    pub amplitudes: Vec<Vec<C>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn last(&self) -> &[C] {
        self.amplitudes.last().expect("non-empty trajectory")
    }
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest admissible step, `1 / (50 max(omega_m, omega_c))`.
pub fn max_step(p: &SystemParams) -> f64 {
    1.0 / (50.0 * p.omega_m().max(p.omega_c()))
}

/// Validates the step and returns `(n, h)` with `n h = t_final`, `h <= dt`.
fn schedule(p: &SystemParams, t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_final",
            value: t_final,
            reason: "must be positive and finite",
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be positive and finite",
        });
    }
    let max_dt = max_step(p);
    if dt > max_dt {
        return Err(Error::StepTooLarge { dt, max_dt });
    }
    let n = (t_final / dt).ceil().max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

fn axpy(x: &[C], k: &[C], s: f64) -> Vec<C> {
    x.iter().zip(k).map(|(a, b)| a + s * b).collect()
}

fn rk4_step(f: impl Fn(f64, &[C]) -> Vec<C>, x: &[C], h: f64) -> Vec<C> {
    let k1 = f(0.0, x);
    let k2 = f(0.5 * h, &axpy(x, &k1, 0.5 * h));
    let k3 = f(0.5 * h, &axpy(x, &k2, 0.5 * h));
    let k4 = f(h, &axpy(x, &k3, h));
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn integrate_linear(m: &DriftMatrix, init: &[C], n: usize, h: f64) -> Trajectory {
    let mut times = Vec::with_capacity(n + 1);
    let mut amplitudes = Vec::with_capacity(n + 1);
    let mut x = init.to_vec();
    times.push(0.0);
    amplitudes.push(x.clone());
    for k in 1..=n {
        x = rk4_step(|_, y| m.mul_vec(y), &x, h);
        times.push(h * k as f64);
        amplitudes.push(x.clone());
    }
    Trajectory { times, amplitudes }
}

/// RK4 on `dx/dt = M x` with the pseudomode drift; `init = (a, b, c)`.
pub fn integrate_pseudomode(
    p: &SystemParams,
    d: &DriveParams,
    init: [C; 3],
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    let (n, h) = schedule(p, t_final, dt)?;
    Ok(integrate_linear(&drift_nonmarkovian(p, d), &init, n, h))
}

/// States `(a, b, u)` of the memory-integral formulation.
fn direct_states(
    p: &SystemParams,
    d: &DriveParams,
    init_ab: [C; 2],
    n: usize,
    h: f64,
) -> Vec<[C; 3]> {
    let (oc, feedback) = (p.omega_c(), 0.5 * p.gamma() * p.omega_c());
    let cav = I * d.delta() - 0.5 * p.kappa();
    let mech = -(I * p.omega_m() + 0.5 * p.gamma());
    let coupling = -I * d.g();
    let mut out = Vec::with_capacity(n + 1);
    let mut x = [init_ab[0], init_ab[1], C::new(0.0, 0.0)];
    out.push(x);
    for _ in 0..n {
        // y = (a, b, v) with u = exp(-oc s) v inside the step
        let rhs = |s: f64, y: &[C]| {
            let u = (-oc * s).exp() * y[2];
            vec![
                cav * y[0] + coupling * y[1],
                coupling * y[0] + mech * y[1] + feedback * u,
                (oc * s).exp() * y[1],
            ]
        };
        let y = rk4_step(rhs, &x, h);
        x = [y[0], y[1], (-oc * h).exp() * y[2]];
        out.push(x);
    }
    out
}

/// Integrates the two-mode dynamics with the explicit exponential-memory
/// feedback; returns `(a, b)`.
pub fn integrate_nonmarkovian(
    p: &SystemParams,
    d: &DriveParams,
    init_ab: [C; 2],
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    let (n, h) = schedule(p, t_final, dt)?;
    let states = direct_states(p, d, init_ab, n, h);
    Ok(Trajectory {
        times: (0..=n).map(|k| h * k as f64).collect(),
        amplitudes: states.iter().map(|s| vec![s[0], s[1]]).collect(),
    })
}

/// `max_t |(a, b)_pseudo - (a, b)_direct| / max_t |(a, b)_direct|` with the
/// pseudomode started empty.
pub fn compare_embeddings(
    p: &SystemParams,
    d: &DriveParams,
    init_ab: [C; 2],
    t_final: f64,
    dt: f64,
) -> Result<f64> {
    let pseudo = integrate_pseudomode(
        p,
        d,
        [init_ab[0], init_ab[1], C::new(0.0, 0.0)],
        t_final,
        dt,
    )?;
    let direct = integrate_nonmarkovian(p, d, init_ab, t_final, dt)?;
    let scale = direct
        .amplitudes
        .iter()
        .map(|x| norm(x))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let worst = pseudo
        .amplitudes
        .iter()
        .zip(&direct.amplitudes)
        .map(|(x, y)| ((x[0] - y[0]).norm_sqr() + (x[1] - y[1]).norm_sqr()).sqrt())
        .fold(0.0, f64::max);
    Ok(worst / scale)
}

/// Embedding error at `dt` and `dt / 2` and the implied convergence order.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConvergenceEstimate {
    pub err_dt: f64,
    pub err_half: f64,
    pub ratio: f64,
    pub order: f64,
}

pub fn convergence_order(
    p: &SystemParams,
    d: &DriveParams,
    init_ab: [C; 2],
    t_final: f64,
    dt: f64,
) -> Result<ConvergenceEstimate> {
    let err_dt = compare_embeddings(p, d, init_ab, t_final, dt)?;
    let err_half = compare_embeddings(p, d, init_ab, t_final, 0.5 * dt)?;
    let ratio = err_dt / err_half;
    Ok(ConvergenceEstimate {
        err_dt,
        err_half,
        ratio,
        order: ratio.log2(),
    })
}

/// Decay rate of the initial-condition transient.
///
/// Starting the pseudomode at `c(0) != 0`, the memory formulation predicts
/// `c(t) = exp(-omega_c t) c(0) - g_c u(t)` with `u` the memory integral over
/// the pseudomode route's own `b`. The rate is a least-squares fit of
/// `log |c + g_c u|` over `[0, t_final]`.
pub fn transient_decay_rate(
    p: &SystemParams,
    d: &DriveParams,
    init: [C; 3],
    t_final: f64,
    dt: f64,
) -> Result<f64> {
    let (n, h) = schedule(p, t_final, dt)?;
    if init[2].norm() == 0.0 {
        return Err(Error::InvalidParameter {
            name: "c(0)",
            value: 0.0,
            reason: "the transient needs a nonzero initial pseudomode amplitude",
        });
    }
    let m = drift_nonmarkovian(p, d);
    let oc = p.omega_c();
    let mut x = vec![init[0], init[1], init[2], C::new(0.0, 0.0)];
    let floor = 1e-10 * init[2].norm();
    let mut samples = vec![(0.0, init[2].norm().ln())];
    for k in 1..=n {
        x = rk4_step(
            |_, y| {
                let mut dy = m.mul_vec(&y[..3]);
                dy.push(-oc * y[3] + y[1]);
                dy
            },
            &x,
            h,
        );
        let r = (x[2] + p.g_c() * x[3]).norm();
        if r > floor {
            samples.push((h * k as f64, r.ln()));
        }
    }
    if samples.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "t_final",
            value: t_final,
            reason: "too short to resolve the transient",
        });
    }
    let len = samples.len() as f64;
    let (mt, my) = samples
        .iter()
        .fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let (mt, my) = (mt / len, my / len);
    let (sxy, sxx) = samples.iter().fold((0.0, 0.0), |acc, s| {
        (acc.0 + (s.0 - mt) * (s.1 - my), acc.1 + (s.0 - mt).powi(2))
    });
    Ok(-sxy / sxx)
}

/// Numerical inverse Fourier transform of the non-local part of the bath
/// spectrum, compared with the closed-form kernel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelCheck {
    pub t: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

/// Trapezoid rule for `(1/2pi) int (J(w) - gamma) cos(w t) dw` over
/// `|w| <= 50 omega_c` at `t = 1/omega_c`, plus the leading asymptotic
/// correction for the truncated tails.
pub fn kernel_fourier_check(p: &SystemParams) -> Result<KernelCheck> {
    if p.gamma() == 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: 0.0,
            reason: "the memory kernel vanishes identically",
        });
    }
    let oc = p.omega_c();
    let t = 1.0 / oc;
    let x_max = 50.0 * oc;
    let n = 200_000usize;
    let h = 2.0 * x_max / n as f64;
    let f = |w: f64| (spectral_density(p, w) - p.gamma()) * (w * t).cos();
    let mut sum = 0.5 * (f(-x_max) + f(x_max));
    for k in 1..n {
        sum += f(-x_max + h * k as f64);
    }
    let body = sum * h / (2.0 * std::f64::consts::PI);
    // int_{|w| > X} -gamma oc^2 / w^2 cos(w t) dw / (2 pi), two terms of the
    // integration-by-parts series
    let (xt, g) = (x_max * t, p.gamma());
    let tail = -(g * oc * oc / std::f64::consts::PI)
        * (-(xt.sin()) / (t * x_max * x_max) + 2.0 * xt.cos() / (t * t * x_max.powi(3)));
    let numeric = body + tail;
    let closed_form = memory_kernel_smooth(p, t);
    Ok(KernelCheck {
        t,
        numeric,
        closed_form,
        rel_err: ((numeric - closed_form) / closed_form).abs(),
    })
}
