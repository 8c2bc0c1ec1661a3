//! Eigendecomposition of the drift matrix with biorthogonal left/right
//! vectors, Petermann factors, and parameter sweeps.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::charpoly::{cubic_roots, matrix_cubic, quadratic_roots};
use crate::error::{Error, Result};
use crate::model::{drift_markovian, drift_nonmarkovian, DriftMatrix, DriveParams, SystemParams};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Pairing distance, relative to the eigenvalue's gap to its nearest
/// neighbour, above which a mode is flagged.
pub const PAIRING_TOLERANCE: f64 = 1e-3;

/// Eigenvalues closer than this times `||M||` count as coalesced.
pub const COALESCENCE_TOLERANCE: f64 = 1e-6;

/// `|<L|R>|^2` below this times `<L|L><R|R>` is reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-30;

/// A Petermann factor; divergent values keep the finite number computed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Petermann {
    pub value: f64,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode {
    pub lambda: C,
    /// Unit right eigenvector, `M r = lambda r`.
    pub right: Vec<C>,
    /// Unit left eigenvector, `M^dagger l = lambda^* l`.
    pub left: Vec<C>,
    /// Distance between `lambda` and the conjugated adjoint eigenvalue it was
    /// paired with.
    pub match_distance: f64,
    /// Set when the pairing is unreliable: the mode sits on (or numerically
    /// at) a degeneracy.
    pub defective: bool,
    pub petermann: Petermann,
}

fn dot(l: &[C], r: &[C]) -> C {
    l.iter().zip(r).map(|(a, b)| a.conj() * b).sum()
}

fn vnorm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalized(mut v: Vec<C>) -> Vec<C> {
    let n = vnorm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    v
}

/// `<L|L><R|R> / |<L|R>|^2`, independent of the vectors' normalization.
pub fn petermann_factor(left: &[C], right: &[C]) -> Petermann {
    let ll = dot(left, left).re;
    let rr = dot(right, right).re;
    let lr = dot(left, right).norm_sqr();
    let value = ll * rr / lr;
    Petermann {
        value,
        divergent: lr < DIVERGENCE_THRESHOLD * ll * rr || !value.is_finite(),
    }
}

/// Petermann factor of a paired mode; divergent also when the pairing itself
/// was flagged.
pub fn petermann(mode: &EigenMode) -> Petermann {
    let k = petermann_factor(&mode.left, &mode.right);
    Petermann {
        divergent: k.divergent || mode.defective,
        ..k
    }
}

fn eigenvalues(m: &DriftMatrix) -> Vec<C> {
    match m.dim() {
        2 => {
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            quadratic_roots(-m.trace(), det).to_vec()
        }
        _ => cubic_roots(&matrix_cubic(m).expect("dimension checked")).to_vec(),
    }
}

fn cross(a: &[C], b: &[C]) -> [C; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve(a: &DriftMatrix, b: &[C]) -> Option<Vec<C>> {
    let n = a.dim();
    let mut m: Vec<Vec<C>> = a.rows();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))?;
        if m[piv][k].norm() == 0.0 {
            return None;
        }
        m.swap(k, piv);
        x.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
            let t = x[k];
            x[i] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let s: C = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    x.iter().all(|z| z.is_finite()).then_some(x)
}

/// Null vector of `M - lambda I` by a few steps of shifted inverse iteration.
fn inverse_iteration(m: &DriftMatrix, lambda: C) -> Vec<C> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let shift = lambda + C::new(1e-10 * scale, 1e-10 * scale);
    let a = m.shifted(shift);
    let mut v: Vec<C> = (0..m.dim()).map(|k| C::new(1.0, 0.3 * k as f64)).collect();
    v = normalized(v);
    for _ in 0..3 {
        match solve(&a, &v) {
            Some(x) => v = normalized(x),
            None => break,
        }
    }
    v
}

/// Unit right null vector of `M - lambda I`.
pub fn null_vector(m: &DriftMatrix, lambda: C) -> Vec<C> {
    let a = m.shifted(lambda);
    let scale = m.norm();
    let candidate: Option<Vec<C>> = match m.dim() {
        2 => {
            let c0 = vec![a[(0, 1)], -a[(0, 0)]];
            let c1 = vec![a[(1, 1)], -a[(1, 0)]];
            let best = if vnorm(&c0) >= vnorm(&c1) { c0 } else { c1 };
            (vnorm(&best) >= 1e-12 * scale).then_some(best)
        }
        _ => {
            let rows = a.rows();
            let best = [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(i, j)| cross(&rows[i], &rows[j]).to_vec())
                .max_by(|x, y| vnorm(x).total_cmp(&vnorm(y)))
                .expect("three row pairs");
            (vnorm(&best) >= 1e-12 * scale * scale).then_some(best)
        }
    };
    match candidate {
        Some(v) => normalized(v),
        None => inverse_iteration(m, lambda),
    }
}

fn nearest_gap(lambdas: &[C], i: usize) -> f64 {
    lambdas
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, z)| (z - lambdas[i]).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues in root order with paired left/right eigenvectors.
///
/// Left vectors come from the adjoint's own spectrum, matched greedily to the
/// conjugated eigenvalues. A mode is flagged `defective` when that match is
/// off by more than [`PAIRING_TOLERANCE`] of its gap to the nearest other
/// eigenvalue, or when that gap is below [`COALESCENCE_TOLERANCE`] `||M||`.
pub fn eigensystem(m: &DriftMatrix) -> Vec<EigenMode> {
    let lambdas = eigenvalues(m);
    let adj = m.adjoint();
    let mut adj_lambdas: Vec<Option<C>> = eigenvalues(&adj).into_iter().map(Some).collect();
    let scale = m.norm();
    lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let (j, dist) = adj_lambdas
                .iter()
                .enumerate()
                .filter_map(|(j, mu)| mu.map(|mu| (j, (mu.conj() - lambda).norm())))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("as many adjoint eigenvalues as eigenvalues");
            let mu = adj_lambdas[j].take().expect("unused");
            let gap = nearest_gap(&lambdas, i);
            let defective = dist >= PAIRING_TOLERANCE * gap || gap <= COALESCENCE_TOLERANCE * scale;
            let right = null_vector(m, lambda);
            let left = null_vector(&adj, mu);
            let mut mode = EigenMode {
                lambda,
                right,
                left,
                match_distance: dist,
                defective,
                petermann: Petermann {
                    value: f64::NAN,
                    divergent: true,
                },
            };
            mode.petermann = petermann(&mode);
            mode
        })
        .collect()
}

/// `exp(M t) x0` through the biorthogonal expansion
/// `sum_i r_i <l_i|x0> / <l_i|r_i> exp(lambda_i t)`.
///
/// Ill-conditioned near an exceptional point, where the overlaps vanish.
pub fn propagate(m: &DriftMatrix, x0: &[C], t: f64) -> Vec<C> {
    let mut out = vec![ZERO; m.dim()];
    for mode in eigensystem(m) {
        let w = dot(&mode.left, x0) / dot(&mode.left, &mode.right) * (mode.lambda * t).exp();
        for (o, r) in out.iter_mut().zip(&mode.right) {
            *o += w * r;
        }
    }
    out
}

/// Index of the eigenvalue closest to the bare pseudomode pole `-omega_c`.
pub fn pseudomode_index(lambdas: &[C], omega_c: f64) -> usize {
    let pole = C::new(-omega_c, 0.0);
    (0..lambdas.len())
        .min_by(|&a, &b| {
            (lambdas[a] - pole)
                .norm()
                .total_cmp(&(lambdas[b] - pole).norm())
        })
        .expect("non-empty spectrum")
}

/// Petermann factors of the 3x3 drift, in eigenvalue root order.
pub fn petermann_at(p: &SystemParams, d: &DriveParams) -> [Petermann; 3] {
    let modes = eigensystem(&drift_nonmarkovian(p, d));
    [modes[0].petermann, modes[1].petermann, modes[2].petermann]
}

/// Evenly spaced sweep points including both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn linspace(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid("at least two points are required"));
        }
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite"));
        }
        if min >= max {
            return Err(Error::InvalidGrid("lower bound must be below upper bound"));
        }
        let step = (max - min) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|k| min + step * k as f64).collect();
        points[n - 1] = max;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One sweep point: coordinate (rad/s), three continuity-matched branches.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub coord: f64,
    pub lambdas: [C; 3],
    pub petermann: [Petermann; 3],
    /// Branch nearest the bare pseudomode pole at this point.
    pub pseudomode: usize,
    /// Eigenvalues of the memoryless 2x2 drift at the same drive.
    pub markovian: Option<[C; 2]>,
}

const PERMS3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Permutation `perm` minimizing `sum |prev[i] - next[perm[i]]|`.
fn best_perm3(prev: &[C; 3], next: &[C; 3]) -> [usize; 3] {
    let cost = |p: &[usize; 3]| (0..3).map(|i| (prev[i] - next[p[i]]).norm()).sum::<f64>();
    *PERMS3
        .iter()
        .min_by(|a, b| cost(a).total_cmp(&cost(b)))
        .expect("six permutations")
}

fn match_branches(rows: &mut [SweepRow]) {
    for k in 1..rows.len() {
        let prev = rows[k - 1].lambdas;
        let row = &mut rows[k];
        let perm = best_perm3(&prev, &row.lambdas);
        let (l, pk) = (row.lambdas, row.petermann);
        row.lambdas = perm.map(|j| l[j]);
        row.petermann = perm.map(|j| pk[j]);
        row.pseudomode = perm
            .iter()
            .position(|&j| j == row.pseudomode)
            .expect("permutation");
        if let (Some(prev_m), Some(m)) = (rows[k - 1].markovian, rows[k].markovian) {
            let direct = (prev_m[0] - m[0]).norm() + (prev_m[1] - m[1]).norm();
            let swapped = (prev_m[0] - m[1]).norm() + (prev_m[1] - m[0]).norm();
            if swapped < direct {
                rows[k].markovian = Some([m[1], m[0]]);
            }
        }
    }
}

/// One unmatched row at coupling `coord`.
pub fn sweep_point(p: &SystemParams, d: &DriveParams, coord: f64, with_markovian: bool) -> SweepRow {
    let modes = eigensystem(&drift_nonmarkovian(p, d));
    let lambdas = [modes[0].lambda, modes[1].lambda, modes[2].lambda];
    SweepRow {
        coord,
        lambdas,
        petermann: [modes[0].petermann, modes[1].petermann, modes[2].petermann],
        pseudomode: pseudomode_index(&lambdas, p.omega_c()),
        markovian: with_markovian.then(|| {
            let m = eigensystem(&drift_markovian(p, d));
            [m[0].lambda, m[1].lambda]
        }),
    }
}

fn check_coupling_grid(g: &Grid) -> Result<()> {
    if g.points()[0] < 0.0 {
        return Err(Error::InvalidGrid("coupling must be non-negative"));
    }
    Ok(())
}

/// Spectrum along a coupling sweep at fixed detuning (all in rad/s).
/// Rows come back in grid order regardless of evaluation order.
pub fn sweep_eigs(
    p: &SystemParams,
    delta: f64,
    g_grid: &Grid,
    with_markovian: bool,
) -> Result<Vec<SweepRow>> {
    check_coupling_grid(g_grid)?;
    let base = DriveParams::new(delta, 0.0)?;
    let mut rows: Vec<SweepRow> = g_grid
        .points()
        .par_iter()
        .map(|&g| {
            let d = base.with_g(g).expect("validated grid");
            sweep_point(p, &d, g, with_markovian)
        })
        .collect();
    match_branches(&mut rows);
    Ok(rows)
}

/// Spectrum along a detuning sweep at fixed coupling.
pub fn sweep_eigs_detuning(
    p: &SystemParams,
    g: f64,
    delta_grid: &Grid,
    with_markovian: bool,
) -> Result<Vec<SweepRow>> {
    DriveParams::new(0.0, g)?;
    let mut rows: Vec<SweepRow> = delta_grid
        .points()
        .par_iter()
        .map(|&delta| {
            let d = DriveParams::new(delta, g).expect("finite detuning");
            sweep_point(p, &d, delta, with_markovian)
        })
        .collect();
    match_branches(&mut rows);
    Ok(rows)
}

/// Petermann factors along a coupling sweep.
pub fn sweep_petermann(p: &SystemParams, delta: f64, g_grid: &Grid) -> Result<Vec<SweepRow>> {
    sweep_eigs(p, delta, g_grid, false)
}

/// Largest finite Petermann factor among the two optomechanical branches.
pub fn max_hybrid_petermann(rows: &[SweepRow]) -> f64 {
    rows.iter()
        .flat_map(|r| {
            (0..3)
                .filter(move |&i| i != r.pseudomode)
                .map(move |i| r.petermann[i].value)
        })
        .fold(0.0, f64::max)
}

/// Distance between the two optomechanical branches of a row.
pub fn hybrid_gap(row: &SweepRow) -> f64 {
    let idx: Vec<usize> = (0..3).filter(|&i| i != row.pseudomode).collect();
    (row.lambdas[idx[0]] - row.lambdas[idx[1]]).norm()
}
