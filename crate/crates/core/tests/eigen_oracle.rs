//! Eigenvalues checked against an independent dense Schur decomposition.

use eprenorm::charpoly::{char_cubic, cubic_roots};
use eprenorm::model::{drift_markovian, drift_nonmarkovian, DriftMatrix, DriveParams, SystemParams};
use eprenorm::spectral::eigensystem;
use nalgebra::{Matrix2, Matrix3, Schur};
use num_complex::Complex64;
use proptest::prelude::*;

fn dense3(m: &DriftMatrix) -> Matrix3<Complex64> {
    let r = m.rows();
    Matrix3::from_fn(|i, j| r[i][j])
}

fn dense2(m: &DriftMatrix) -> Matrix2<Complex64> {
    let r = m.rows();
    Matrix2::from_fn(|i, j| r[i][j])
}

/// Greedy set distance, normalized by `scale`.
fn set_distance(a: &[Complex64], b: &[Complex64], scale: f64) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst / scale
}

fn params() -> impl Strategy<Value = (SystemParams, DriveParams)> {
    (0.5e6..2e6f64, 0.05..0.4f64, 0.0..0.03f64, 0.3..3.0f64, -1.5..-0.5f64, 0.0..0.6f64).prop_map(
        |(f, kr, gr, cr, dr, gg)| {
            let om = 2.0 * std::f64::consts::PI * f;
            let kappa = kr * om;
            let p = SystemParams::new(om, kappa, gr * om, cr * om).unwrap();
            let d = DriveParams::new(dr * om, gg * kappa).unwrap();
            (p, d)
        },
    )
}

#[test]
fn representative_point_matches_schur() {
    let p = SystemParams::representative();
    let d = DriveParams::new(-p.omega_m(), 0.25 * p.kappa()).unwrap();
    let m = drift_nonmarkovian(&p, &d);
    let ours: Vec<Complex64> = eigensystem(&m).iter().map(|e| e.lambda).collect();
    let theirs = Schur::new(dense3(&m)).eigenvalues().unwrap();
    assert!(set_distance(&ours, theirs.as_slice(), m.norm()) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn three_mode_spectrum((p, d) in params()) {
        let m = drift_nonmarkovian(&p, &d);
        let reference = Schur::new(dense3(&m)).eigenvalues().unwrap();
        let ours: Vec<Complex64> = eigensystem(&m).iter().map(|e| e.lambda).collect();
        let roots = cubic_roots(&char_cubic(&p, &d));
        // near-coalescence loosens root accuracy to sqrt(eps)
        prop_assert!(set_distance(&ours, reference.as_slice(), m.norm()) < 1e-7);
        prop_assert!(set_distance(&roots, reference.as_slice(), m.norm()) < 1e-7);
    }

    #[test]
    fn two_mode_spectrum((p, d) in params()) {
        let m = drift_markovian(&p, &d);
        let reference = Schur::new(dense2(&m)).eigenvalues().unwrap();
        let ours: Vec<Complex64> = eigensystem(&m).iter().map(|e| e.lambda).collect();
        prop_assert!(set_distance(&ours, reference.as_slice(), m.norm()) < 1e-7);
    }
}
