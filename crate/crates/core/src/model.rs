//! Physical parameters, the structured bath and the drift matrices.
//!
//! All quantities here are angular frequencies in rad/s. Conversion from the
//! ordinary-frequency (Hz) values used in configs and output files happens
//! through [`hz_to_rad`] / [`rad_to_hz`] at the boundary.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Converts an ordinary frequency (Hz) into an angular frequency (rad/s).
#[inline]
pub fn hz_to_rad(hz: f64) -> f64 {
    TAU * hz
}

/// Converts an angular frequency (rad/s) into an ordinary frequency (Hz).
#[inline]
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / TAU
}

/// Complex angular rate (rad/s) to complex ordinary frequency (Hz).
#[inline]
pub fn rad_to_hz_c(z: Complex64) -> Complex64 {
    z / TAU
}

/// Bare physical rates of the optomechanical system and its bath.
///
/// The pseudomode coupling `g_c = sqrt(gamma * omega_c / 2)` is derived on
/// every access and cannot be set independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    omega_m: f64,
    kappa: f64,
    gamma: f64,
    omega_c: f64,
}

/// A resolved-sideband condition that a parameter set violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SidebandViolation {
    /// `omega_m <= kappa`
    CavityLinewidth,
    /// `omega_m <= gamma`
    MechanicalLinewidth,
}

impl fmt::Display for SidebandViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CavityLinewidth => f.write_str("omega_m <= kappa (not resolved-sideband)"),
            Self::MechanicalLinewidth => f.write_str("omega_m <= gamma (overdamped mechanics)"),
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

impl SystemParams {
    /// Builds a parameter set from angular rates in rad/s.
    ///
    /// `gamma` may be zero (memoryless, lossless mechanics); every other rate
    /// must be strictly positive.
    pub fn new(omega_m: f64, kappa: f64, gamma: f64, omega_c: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self {
            omega_m: positive("omega_m", omega_m)?,
            kappa: positive("kappa", kappa)?,
            gamma,
            omega_c: positive("omega_c", omega_c)?,
        })
    }

    /// Builds a parameter set from ordinary frequencies in Hz.
    pub fn from_hz(freq_hz: f64, kappa_hz: f64, gamma_hz: f64, cutoff_hz: f64) -> Result<Self> {
        Self::new(
            hz_to_rad(freq_hz),
            hz_to_rad(kappa_hz),
            hz_to_rad(gamma_hz),
            hz_to_rad(cutoff_hz),
        )
    }

    /// The representative membrane parameters: 1 MHz mechanics, 0.2 MHz
    /// cavity linewidth, 5 kHz mechanical damping, 1 MHz bath crossover.
    pub fn representative() -> Self {
        Self::from_hz(1.0e6, 0.2e6, 5.0e3, 1.0e6).expect("representative parameters are valid")
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// Pseudomode coupling `sqrt(gamma * omega_c / 2)`.
    pub fn g_c(&self) -> f64 {
        self.g_c_sq().sqrt()
    }

    /// `g_c^2 = gamma * omega_c / 2`.
    pub fn g_c_sq(&self) -> f64 {
        0.5 * self.gamma * self.omega_c
    }

    /// Returns a copy with a different mechanical damping rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.omega_m, self.kappa, gamma, self.omega_c)
    }

    /// Returns a copy with a different bath crossover scale.
    pub fn with_omega_c(&self, omega_c: f64) -> Result<Self> {
        Self::new(self.omega_m, self.kappa, self.gamma, omega_c)
    }

    /// Largest rate of the problem; used to build scale-relative tolerances.
    pub fn rate_scale(&self) -> f64 {
        self.omega_m
            .max(self.omega_c)
            .max(self.kappa)
            .max(self.gamma)
    }

    /// Resolved-sideband sanity checks. Violations are reported, not rejected.
    pub fn sideband_violations(&self) -> Vec<SidebandViolation> {
        let mut out = Vec::new();
        if self.omega_m <= self.kappa {
            out.push(SidebandViolation::CavityLinewidth);
        }
        if self.omega_m <= self.gamma {
            out.push(SidebandViolation::MechanicalLinewidth);
        }
        out
    }
}

/// Control-laser detuning and linearized coupling, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    delta: f64,
    g: f64,
}

impl DriveParams {
    pub fn new(delta: f64, g: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "must be finite",
            });
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "g",
                value: g,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self { delta, g })
    }

    pub fn from_hz(detuning_hz: f64, coupling_hz: f64) -> Result<Self> {
        Self::new(hz_to_rad(detuning_hz), hz_to_rad(coupling_hz))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.delta, g)
    }
}

/// Bath spectral function `gamma * w^2 / (w^2 + omega_c^2)`, evenly extended.
pub fn spectral_density(p: &SystemParams, omega: f64) -> f64 {
    let w2 = omega * omega;
    p.gamma * w2 / (w2 + p.omega_c * p.omega_c)
}

/// Smooth part of the memory kernel, `-(gamma omega_c / 2) exp(-omega_c |t|)`.
///
/// The `gamma delta(t)` part is never sampled; it enters the drift as the
/// local `-gamma/2` damping.
pub fn memory_kernel_smooth(p: &SystemParams, t: f64) -> f64 {
    -0.5 * p.gamma * p.omega_c * (-p.omega_c * t.abs()).exp()
}

/// Dense complex drift matrix of dimension 2 (cavity, mechanics) or 3
/// (cavity, mechanics, pseudomode).
#[derive(Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    dim: usize,
    data: [Complex64; 9],
}

impl fmt::Debug for DriftMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<Complex64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)]).collect())
            .collect();
        f.debug_struct("DriftMatrix")
            .field("dim", &self.dim)
            .field("rows", &rows)
            .finish()
    }
}

impl Index<(usize, usize)> for DriftMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(
            i < self.dim && j < self.dim,
            "index ({i}, {j}) out of range"
        );
        &self.data[3 * i + j]
    }
}

impl IndexMut<(usize, usize)> for DriftMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(
            i < self.dim && j < self.dim,
            "index ({i}, {j}) out of range"
        );
        &mut self.data[3 * i + j]
    }
}

impl DriftMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self {
            dim,
            data: [Complex64::new(0.0, 0.0); 9],
        })
    }

    /// Builds a matrix from row slices; every row must have `rows.len()` entries.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self> {
        let mut m = Self::zeros(rows.len())?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m.dim {
                return Err(Error::UnsupportedDimension(row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn determinant(&self) -> Complex64 {
        let m = |i, j| self[(i, j)];
        match self.dim {
            2 => m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0),
            _ => {
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `M - shift * I`.
    pub fn shifted(&self, shift: Complex64) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out[(i, i)] -= shift;
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Upper-left 2x2 block (cavity and mechanics).
    pub fn optomechanical_block(&self) -> Self {
        let mut out = Self::zeros(2).expect("dim 2");
        for i in 0..2 {
            for j in 0..2 {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)]).collect())
            .collect()
    }
}

/// Memoryless 2x2 drift in the basis (a, b).
pub fn drift_markovian(p: &SystemParams, d: &DriveParams) -> DriftMatrix {
    let coupling = -I * d.g;
    DriftMatrix::from_rows(&[
        [I * d.delta - 0.5 * p.kappa, coupling],
        [coupling, -(I * p.omega_m + 0.5 * p.gamma)],
    ])
    .expect("2x2")
}

/// Pseudomode-extended 3x3 drift in the basis (a, b, c).
pub fn drift_nonmarkovian(p: &SystemParams, d: &DriveParams) -> DriftMatrix {
    let zero = Complex64::new(0.0, 0.0);
    let coupling = -I * d.g;
    let gc = Complex64::new(-p.g_c(), 0.0);
    DriftMatrix::from_rows(&[
        [I * d.delta - 0.5 * p.kappa, coupling, zero],
        [coupling, -(I * p.omega_m + 0.5 * p.gamma), gc],
        [zero, gc, Complex64::new(-p.omega_c, 0.0)],
    ])
    .expect("3x3")
}
