//! Characteristic-polynomial machinery for the pseudomode-extended drift.
//!
//! The cubic is written both in expanded monic form ([`char_cubic`]) and in the
//! compact factor form `(lambda - i Delta + kappa/2) h(lambda) + g(lambda) G^2`
//! ([`char_compact`]); the two are kept as separate code paths.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DriftMatrix, DriveParams, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative distance to `-omega_c` below which the pseudomode pole is hit.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Relative width within which imaginary parts count as tied when ordering roots.
pub const ROOT_TIE: f64 = 1e-12;

/// Monic cubic `c3 l^3 + c2 l^2 + c1 l + c0` with `c3 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPoly {
    pub c3: Complex64,
    pub c2: Complex64,
    pub c1: Complex64,
    pub c0: Complex64,
}

impl CubicPoly {
    pub fn monic(c2: Complex64, c1: Complex64, c0: Complex64) -> Self {
        Self {
            c3: Complex64::new(1.0, 0.0),
            c2,
            c1,
            c0,
        }
    }

    /// `(l - r0)(l - r1)(l - r2)`.
    pub fn from_roots(r: [Complex64; 3]) -> Self {
        Self::monic(
            -(r[0] + r[1] + r[2]),
            r[0] * r[1] + r[0] * r[2] + r[1] * r[2],
            -(r[0] * r[1] * r[2]),
        )
    }

    pub fn eval(&self, l: Complex64) -> Complex64 {
        ((self.c3 * l + self.c2) * l + self.c1) * l + self.c0
    }

    pub fn derivative(&self, l: Complex64) -> Complex64 {
        (3.0 * self.c3 * l + 2.0 * self.c2) * l + self.c1
    }

    pub fn second_derivative(&self, l: Complex64) -> Complex64 {
        6.0 * self.c3 * l + 2.0 * self.c2
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        [self.c3, self.c2, self.c1, self.c0]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// The factors `f = l + i omega_m + gamma/2`, `g = l + omega_c`, `h = g f - g_c^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorTriple {
    pub f: Complex64,
    pub g: Complex64,
    pub h: Complex64,
}

pub fn factors(p: &SystemParams, lambda: Complex64) -> FactorTriple {
    let f = lambda + I * p.omega_m() + 0.5 * p.gamma();
    let g = lambda + p.omega_c();
    FactorTriple {
        f,
        g,
        h: g * f - p.g_c_sq(),
    }
}

fn check_pole(p: &SystemParams, lambda: Complex64) -> Result<()> {
    let distance = (lambda + p.omega_c()).norm();
    if distance < POLE_TOLERANCE * p.omega_c() {
        return Err(Error::PolePseudomode { lambda, distance });
    }
    Ok(())
}

/// Mechanical self-energy `g_c^2 / (omega_c + lambda)` from eliminating the pseudomode.
pub fn self_energy(p: &SystemParams, lambda: Complex64) -> Result<Complex64> {
    check_pole(p, lambda)?;
    Ok(p.g_c_sq() / (lambda + p.omega_c()))
}

/// Expanded characteristic cubic `det(l I - M)` of the 3x3 drift.
pub fn char_cubic(p: &SystemParams, d: &DriveParams) -> CubicPoly {
    let f0 = I * p.omega_m() + 0.5 * p.gamma();
    let a0 = -I * d.delta() + 0.5 * p.kappa();
    let oc = p.omega_c();
    let g2 = d.g() * d.g();
    let gc2 = p.g_c_sq();
    CubicPoly::monic(
        f0 + a0 + oc,
        f0 * a0 + oc * (f0 + a0) + g2 - gc2,
        oc * f0 * a0 + g2 * oc - gc2 * a0,
    )
}

/// Compact form `(l - i Delta + kappa/2) h(l) + g(l) G^2` evaluated pointwise.
pub fn char_compact(p: &SystemParams, d: &DriveParams, lambda: Complex64) -> Complex64 {
    let FactorTriple { g, h, .. } = factors(p, lambda);
    (lambda - I * d.delta() + 0.5 * p.kappa()) * h + g * d.g() * d.g()
}

/// Characteristic cubic of an arbitrary 3x3 matrix from its invariants.
pub fn matrix_cubic(m: &DriftMatrix) -> Result<CubicPoly> {
    if m.dim() != 3 {
        return Err(Error::UnsupportedDimension(m.dim()));
    }
    let minor = |i: usize, j: usize| m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
    Ok(CubicPoly::monic(
        -m.trace(),
        minor(0, 1) + minor(0, 2) + minor(1, 2),
        -m.determinant(),
    ))
}

/// Root ordering: ascending imaginary part, then ascending real part.
/// Imaginary parts closer than `tie` are treated as equal.
pub fn root_order(a: &Complex64, b: &Complex64, tie: f64) -> Ordering {
    if (a.im - b.im).abs() <= tie {
        a.re.partial_cmp(&b.re).unwrap_or(Ordering::Equal)
    } else {
        a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal)
    }
}

/// Sorts roots in place by [`root_order`] with a tie width relative to the
/// largest root magnitude.
pub fn sort_roots(roots: &mut [Complex64]) {
    let tie = ROOT_TIE * roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 1..roots.len() {
        let mut j = i;
        while j > 0 && root_order(&roots[j - 1], &roots[j], tie) == Ordering::Greater {
            roots.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Roots of the monic quadratic `l^2 + b l + c`, in [`root_order`].
pub fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * c).sqrt();
    // pick the sign that avoids cancellation
    let s = if (b.conj() * disc).re >= 0.0 {
        disc
    } else {
        -disc
    };
    let q = -0.5 * (b + s);
    let mut r = if q.norm() == 0.0 {
        [Complex64::new(0.0, 0.0); 2]
    } else {
        [q, c / q]
    };
    sort_roots(&mut r);
    r
}

/// Roots of a monic cubic via the eigenvalues of its companion matrix,
/// followed by one guarded Newton step per root. Sorted by [`root_order`].
pub fn cubic_roots(q: &CubicPoly) -> [Complex64; 3] {
    let (c2, c1, c0) = (q.c2 / q.c3, q.c1 / q.c3, q.c0 / q.c3);
    let scale = c2.norm().max(c1.norm().sqrt()).max(c0.norm().cbrt());
    if scale == 0.0 {
        return [Complex64::new(0.0, 0.0); 3];
    }
    let (s2, s1, s0) = (
        c2 / scale,
        c1 / (scale * scale),
        c0 / (scale * scale * scale),
    );
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let companion = [[-s2, -s1, -s0], [one, zero, zero], [zero, one, zero]];
    let mut roots = hessenberg_eigenvalues(companion).map(|z| z * scale);
    for r in roots.iter_mut() {
        *r = newton_polish(q, *r);
    }
    sort_roots(&mut roots);
    roots
}

fn newton_polish(q: &CubicPoly, z: Complex64) -> Complex64 {
    let pz = q.eval(z);
    let dz = q.derivative(z);
    if dz.norm() == 0.0 {
        return z;
    }
    let cand = z - pz / dz;
    if cand.is_finite() && q.eval(cand).norm() < pz.norm() {
        cand
    } else {
        z
    }
}

type Mat3 = [[Complex64; 3]; 3];

/// Shifted QR iteration on a 3x3 upper-Hessenberg matrix.
fn hessenberg_eigenvalues(mut h: Mat3) -> [Complex64; 3] {
    let eps = f64::EPSILON;
    let mut eig = [Complex64::new(0.0, 0.0); 3];
    let mut hi = 2usize;
    let mut iter = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        if hi == 1 {
            let [r0, r1] = block_eigenvalues(&h, 0);
            eig[0] = r0;
            eig[1] = r1;
            break;
        }
        // hi == 2
        let small = |h: &Mat3, k: usize| {
            h[k][k - 1].norm() <= eps * (h[k][k].norm() + h[k - 1][k - 1].norm())
        };
        if small(&h, 2) {
            eig[2] = h[2][2];
            hi = 1;
            continue;
        }
        if small(&h, 1) {
            eig[0] = h[0][0];
            let [r1, r2] = block_eigenvalues(&h, 1);
            eig[1] = r1;
            eig[2] = r2;
            break;
        }
        iter += 1;
        if iter > 200 {
            // unreachable in practice; fall back to the current diagonal
            for (k, e) in eig.iter_mut().enumerate() {
                *e = h[k][k];
            }
            break;
        }
        let shift = if iter.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[2][2] + Complex64::new(0.75 * h[2][1].norm(), 0.0)
        } else {
            wilkinson_shift(&h)
        };
        qr_step(&mut h, shift);
    }
    eig
}

fn block_eigenvalues(h: &Mat3, k: usize) -> [Complex64; 2] {
    let (a, b, c, d) = (h[k][k], h[k][k + 1], h[k + 1][k], h[k + 1][k + 1]);
    quadratic_roots(-(a + d), a * d - b * c)
}

fn wilkinson_shift(h: &Mat3) -> Complex64 {
    let [r0, r1] = block_eigenvalues(h, 1);
    if (r0 - h[2][2]).norm() <= (r1 - h[2][2]).norm() {
        r0
    } else {
        r1
    }
}

#[allow(clippy::needless_range_loop)]
fn qr_step(h: &mut Mat3, shift: Complex64) {
    for (k, row) in h.iter_mut().enumerate() {
        row[k] -= shift;
    }
    let mut rots = [(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)); 2];
    for k in 0..2 {
        let (a, b) = (h[k][k], h[k + 1][k]);
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (a / r, b / r)
        };
        rots[k] = (c, s);
        for j in 0..3 {
            let (x, y) = (h[k][j], h[k + 1][j]);
            h[k][j] = c.conj() * x + s.conj() * y;
            h[k + 1][j] = -s * x + c * y;
        }
    }
    for (k, &(c, s)) in rots.iter().enumerate() {
        for row in h.iter_mut() {
            let (x, y) = (row[k], row[k + 1]);
            row[k] = x * c + y * s;
            row[k + 1] = -x * s.conj() + y * c.conj();
        }
    }
    for (k, row) in h.iter_mut().enumerate() {
        row[k] += shift;
    }
}

/// Effective 2x2 optomechanical block `M_eff(l)` with the self-energy on the
/// mechanical diagonal.
pub fn schur_effective_block(
    p: &SystemParams,
    d: &DriveParams,
    lambda: Complex64,
) -> Result<DriftMatrix> {
    let sigma = self_energy(p, lambda)?;
    let coupling = -I * d.g();
    DriftMatrix::from_rows(&[
        [I * d.delta() - 0.5 * p.kappa(), coupling],
        [coupling, -(I * p.omega_m() + 0.5 * p.gamma()) + sigma],
    ])
}

/// Third root of the cubic given a double root, from the root sum.
pub fn third_root_viete(p: &SystemParams, delta: f64, lambda_ep: Complex64) -> Complex64 {
    -(Complex64::new(
        p.omega_c() + 0.5 * p.gamma() + 0.5 * p.kappa(),
        p.omega_m() - delta,
    )) - 2.0 * lambda_ep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{drift_nonmarkovian, hz_to_rad};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> SystemParams {
        SystemParams::representative()
    }

    #[test]
    fn factor_poles() {
        let p = reference();
        let t = factors(&p, c(-p.omega_c(), 0.0));
        assert_eq!(t.g, c(0.0, 0.0));
        assert_eq!(t.h, c(-p.g_c_sq(), 0.0));
        let t = factors(&p, c(-p.gamma() / 2.0, -p.omega_m()));
        assert_eq!(t.f, c(0.0, 0.0));
        assert_eq!(t.h, c(-p.g_c_sq(), 0.0));
    }

    #[test]
    fn factor_self_energy_identity() {
        let p = reference();
        let l = c(0.0, -p.omega_m());
        let t = factors(&p, l);
        let direct = (l + p.omega_c()) * (p.gamma() / 2.0) - p.g_c_sq();
        assert!((t.h - direct).norm() < 1e-12 * direct.norm());
        let sigma = self_energy(&p, l).unwrap();
        assert!((t.h / t.g - (t.f - sigma)).norm() < 1e-12 * t.f.norm());
    }

    #[test]
    fn self_energy_values() {
        let p = reference();
        let memoryless = p.with_gamma(0.0).unwrap();
        assert_eq!(self_energy(&memoryless, c(3.0, -7.0)).unwrap(), c(0.0, 0.0));
        let s = self_energy(&p, c(0.0, -p.omega_m())).unwrap();
        let expect = p.g_c_sq() / c(p.omega_c(), -p.omega_m());
        assert!((s - expect).norm() < 1e-14 * expect.norm());
        let s0 = self_energy(&p, c(0.0, 0.0)).unwrap();
        assert!((s0.re - p.gamma() / 2.0).abs() < 1e-12 * p.gamma());
        assert!(matches!(
            self_energy(&p, c(-p.omega_c(), 0.0)),
            Err(Error::PolePseudomode { .. })
        ));
    }

    #[test]
    fn cubic_coefficient_sum() {
        let p = reference();
        let d = DriveParams::from_hz(-0.9987e6, 49.0e3).unwrap();
        let q = char_cubic(&p, &d);
        let expect = c(
            p.omega_c() + p.gamma() / 2.0 + p.kappa() / 2.0,
            p.omega_m() - d.delta(),
        );
        assert!((q.c2 - expect).norm() < 1e-12 * expect.norm());
        assert_eq!(q.c3, c(1.0, 0.0));
    }

    #[test]
    fn decoupled_roots() {
        let p = SystemParams::from_hz(1.0e6, 0.2e6, 0.0, 1.0e6).unwrap();
        let d = DriveParams::from_hz(-0.7e6, 0.0).unwrap();
        let roots = cubic_roots(&char_cubic(&p, &d));
        let mut expect = [
            c(-p.kappa() / 2.0, d.delta()),
            c(0.0, -p.omega_m()),
            c(-p.omega_c(), 0.0),
        ];
        sort_roots(&mut expect);
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).norm() < 1e-9 * p.omega_m(), "{r} vs {e}");
        }
    }

    #[test]
    fn simple_cubics() {
        let r = cubic_roots(&CubicPoly::from_roots([
            c(3.0, 0.0),
            c(1.0, 0.0),
            c(2.0, 0.0),
        ]));
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - c(want, 0.0)).norm() < 1e-12);
        }
        let q = CubicPoly::from_roots([c(0.0, -1.0), c(0.0, -1.0), c(5.0, 0.0)]);
        let r = cubic_roots(&q);
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-7);
        assert!((r[1] - c(0.0, -1.0)).norm() < 1e-7);
        assert!((r[2] - c(5.0, 0.0)).norm() < 1e-12);
        assert_eq!(
            cubic_roots(&CubicPoly::monic(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))),
            [c(0.0, 0.0); 3]
        );
    }

    #[test]
    fn roots_at_exact_ep_coordinates() {
        // full-precision exceptional-point coordinates
        let p = reference();
        let d = DriveParams::from_hz(-998.6850325947269e3, 49.37501085439698e3).unwrap();
        let r = cubic_roots(&char_cubic(&p, &d));
        let lep = c(hz_to_rad(-50.62e3), hz_to_rad(-998.72e3));
        let l3 = c(hz_to_rad(-1001.25e3), hz_to_rad(-1.25e3));
        // two closest to lambda_ep, the pseudomode one apart
        assert!((r[0] - lep).norm() < hz_to_rad(10.0));
        assert!((r[1] - lep).norm() < hz_to_rad(10.0));
        assert!((r[2] - l3).norm() < hz_to_rad(10.0));
        let viete = third_root_viete(&p, d.delta(), 0.5 * (r[0] + r[1]));
        assert!((viete - r[2]).norm() < hz_to_rad(10.0));
    }

    #[test]
    fn viete_trace_identity() {
        let p = reference();
        let delta = hz_to_rad(-0.99e6);
        let l3 = third_root_viete(&p, delta, c(0.0, 0.0));
        assert_eq!(
            l3,
            -c(
                p.omega_c() + p.gamma() / 2.0 + p.kappa() / 2.0,
                p.omega_m() - delta
            )
        );
    }

    #[test]
    fn schur_block_memoryless_matches_markovian() {
        let p = reference().with_gamma(0.0).unwrap();
        let d = DriveParams::from_hz(-1.0e6, 30.0e3).unwrap();
        let m2 = crate::model::drift_markovian(&p, &d);
        for l in [c(1.0, 2.0), c(-3e6, 4e6)] {
            assert_eq!(schur_effective_block(&p, &d, l).unwrap(), m2);
        }
    }

    #[test]
    fn schur_block_carries_self_energy() {
        let p = reference();
        let d = DriveParams::from_hz(-1.0e6, 30.0e3).unwrap();
        let l = c(-4e4, -6e6);
        let m = schur_effective_block(&p, &d, l).unwrap();
        let sigma = self_energy(&p, l).unwrap();
        assert_eq!(m[(1, 1)], -(I * p.omega_m() + p.gamma() / 2.0) + sigma);
        assert!(schur_effective_block(&p, &d, c(-p.omega_c(), 0.0)).is_err());
    }

    /// Direct cofactor expansion of det(l I - M), independent of the invariants.
    fn det_li_minus_m(m: &DriftMatrix, l: Complex64) -> Complex64 {
        let a = m.shifted(l);
        let sign = if m.dim().is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * a.determinant()
    }

    fn params() -> impl Strategy<Value = (SystemParams, DriveParams)> {
        (
            1e5f64..1e7,
            1e4f64..1e6,
            0.0f64..1e5,
            1e4f64..1e7,
            -1.2f64..-0.8,
            0.0f64..2e5,
        )
            .prop_map(|(wm, k, g, oc, dr, coupling)| {
                (
                    SystemParams::new(wm, k, g, oc).unwrap(),
                    DriveParams::new(dr * wm, coupling).unwrap(),
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn expanded_matches_compact_and_determinant(
            (p, d) in params(), lr in -2.0f64..2.0, li in -2.0f64..2.0,
        ) {
            let l = c(lr, li) * p.omega_m();
            let q = char_cubic(&p, &d);
            let expanded = q.eval(l);
            let compact = char_compact(&p, &d, l);
            let direct = det_li_minus_m(&drift_nonmarkovian(&p, &d), l);
            let scale = l.norm().powi(3).max(q.max_coeff());
            prop_assert!((expanded - compact).norm() <= 1e-10 * scale);
            prop_assert!((expanded - direct).norm() <= 1e-10 * scale);
        }

        #[test]
        fn schur_determinant_factorization(
            (p, d) in params(), lr in -2.0f64..2.0, li in -2.0f64..2.0,
        ) {
            let l = c(lr, li) * p.omega_m();
            prop_assume!((l + p.omega_c()).norm() > 1e-3 * p.omega_c());
            let m = drift_nonmarkovian(&p, &d);
            let lhs = det_li_minus_m(&m, l);
            let eff = schur_effective_block(&p, &d, l).unwrap();
            let rhs = (l + p.omega_c()) * det_li_minus_m(&eff, l);
            let scale = lhs.norm().max(l.norm().powi(3));
            prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
        }

        #[test]
        fn roots_satisfy_vieta((p, d) in params()) {
            let q = char_cubic(&p, &d);
            let r = cubic_roots(&q);
            let scale = q.c2.norm().max(1.0);
            prop_assert!((r[0] + r[1] + r[2] + q.c2).norm() <= 1e-9 * scale);
            prop_assert!((r[0] * r[1] + r[0] * r[2] + r[1] * r[2] - q.c1).norm() <= 1e-9 * scale.powi(2));
            prop_assert!((r[0] * r[1] * r[2] + q.c0).norm() <= 1e-9 * scale.powi(3));
            for z in r {
                prop_assert!(q.eval(z).norm() <= 1e-8 * scale.powi(3));
            }
            let tie = ROOT_TIE * r.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(root_order(&r[0], &r[1], tie) != Ordering::Greater);
            prop_assert!(root_order(&r[1], &r[2], tie) != Ordering::Greater);
        }

        #[test]
        fn matrix_invariants_match_parametric_cubic((p, d) in params()) {
            let q = char_cubic(&p, &d);
            let m = matrix_cubic(&drift_nonmarkovian(&p, &d)).unwrap();
            let s = q.c2.norm();
            prop_assert!((q.c2 - m.c2).norm() <= 1e-12 * s);
            prop_assert!((q.c1 - m.c1).norm() <= 1e-12 * s * s);
            prop_assert!((q.c0 - m.c0).norm() <= 1e-12 * s * s * s);
        }
    }
}
