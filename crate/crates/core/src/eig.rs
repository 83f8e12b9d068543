//! Dense complex eigensolver: Householder reduction to Hessenberg form,
//! shifted QR with Givens rotations, and eigenvectors by back-substitution
//! on the Schur factor.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{row_sum_norm, BasisTag, HamiltonianMatrix, C64};

/// Residual above which an eigenpair is flagged as defective.
pub const DEFECTIVE_RESIDUAL: f64 = 1e-9;
/// Default relative reality threshold for eigenvalues.
pub const DEFAULT_TOL_REAL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigError {
    #[error("QR iteration did not converge; {} of {dim} eigenvalues found", converged.len())]
    ConvergenceFailure { dim: usize, converged: Vec<C64> },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverMethod {
    Dense,
    Secular,
}

/// Eigenpairs of a Hamiltonian. Vectors are normalized so that their
/// largest-modulus component equals 1.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: Vec<DVector<C64>>,
    pub residuals: Vec<f64>,
    pub defective: Vec<bool>,
    pub method: SolverMethod,
    pub basis: BasisTag,
    /// Row-sum norm of the input matrix.
    pub norm: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Threshold on `|Im E|` below which an eigenvalue counts as real.
    pub fn reality_threshold(&self, tol_real: f64) -> f64 {
        reality_threshold(self.norm, tol_real)
    }

    pub fn count_complex(&self, tol_real: f64) -> usize {
        let thr = self.reality_threshold(tol_real);
        self.eigenvalues.iter().filter(|e| e.im.abs() > thr).count()
    }

    /// Index of the eigenvalue with the largest imaginary part.
    pub fn largest_imag(&self) -> Option<usize> {
        (0..self.len()).max_by(|&a, &b| self.eigenvalues[a].im.total_cmp(&self.eigenvalues[b].im))
    }
}

pub fn reality_threshold(norm: f64, tol_real: f64) -> f64 {
    tol_real * norm.max(1.0)
}

/// Diagonalizes `h` with the dense route.
pub fn eig(h: &HamiltonianMatrix) -> Result<Spectrum, EigError> {
    let (values, vectors) = eig_matrix(&h.entries)?;
    let norm = h.norm_inf();
    let residuals: Vec<f64> = values
        .iter()
        .zip(&vectors)
        .map(|(&l, v)| residual(&h.entries, l, v, norm))
        .collect();
    let defective = defective_flags(&values, &vectors, &residuals);
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        defective,
        method: SolverMethod::Dense,
        basis: h.basis,
        norm,
    })
}

/// `‖Hv − λv‖∞ / ‖H‖∞`, falling back to the absolute value for `H = 0`.
pub fn residual(h: &DMatrix<C64>, lambda: C64, v: &DVector<C64>, norm: f64) -> f64 {
    let r = h * v - v * lambda;
    let num = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let vn = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = if norm > 0.0 { norm } else { 1.0 };
    num / (scale * vn.max(f64::MIN_POSITIVE))
}

fn defective_flags(values: &[C64], vectors: &[DVector<C64>], residuals: &[f64]) -> Vec<bool> {
    let n = values.len();
    let mut flags: Vec<bool> = residuals.iter().map(|&r| r.is_nan() || r > DEFECTIVE_RESIDUAL).collect();
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for j in 0..n {
        for i in 0..j {
            if (values[i] - values[j]).norm() > 1e-6 * scale {
                continue;
            }
            let dot = vectors[i].dotc(&vectors[j]).norm();
            let c = dot / (vectors[i].norm() * vectors[j].norm());
            if c > 1.0 - 1e-6 {
                flags[i] = true;
                flags[j] = true;
            }
        }
    }
    flags
}

/// Eigenvalues and normalized right eigenvectors of a square matrix.
pub fn eig_matrix(a: &DMatrix<C64>) -> Result<(Vec<C64>, Vec<DVector<C64>>), EigError> {
    if a.nrows() != a.ncols() {
        return Err(EigError::NotSquare(a.nrows(), a.ncols()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EigError::NonFinite);
    }
    let n = a.nrows();
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let mut t = a.clone();
    let mut z = DMatrix::<C64>::identity(n, n);
    hessenberg(&mut t, &mut z);
    schur_qr(&mut t, &mut z)?;
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let tnorm = row_sum_norm(&t).max(f64::MIN_POSITIVE);
    let vectors = (0..n)
        .map(|k| {
            let x = triangular_eigvec(&t, k, tnorm);
            let mut v = &z * x;
            normalize_phase(&mut v);
            v
        })
        .collect();
    Ok((values, vectors))
}

/// Householder reduction `A -> Qᴴ A Q`; `q` accumulates `Q`.
fn hessenberg(a: &mut DMatrix<C64>, q: &mut DMatrix<C64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let alpha_norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::from(1.0) };
        let alpha = -phase * alpha_norm;
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        // left: rows k+1.. of A, all columns from k on
        for j in k..n {
            let s: C64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, j)] -= *vi * s * 2.0;
            }
        }
        // right: columns k+1.. of A and Q
        for m in [&mut *a, &mut *q] {
            for r in 0..n {
                let s: C64 = v.iter().enumerate().map(|(i, vi)| m[(r, k + 1 + i)] * vi).sum();
                for (i, vi) in v.iter().enumerate() {
                    m[(r, k + 1 + i)] -= s * vi.conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = C64::from(0.0);
        }
    }
}

/// Givens rotation `[[c, s], [-s̄, c]]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::from(0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    (an / r, (a / an) * b.conj() / r)
}

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (l1, l2) = (mid + disc, mid - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Reduces Hessenberg `h` to upper-triangular Schur form in place,
/// accumulating the unitary factor into `z`.
fn schur_qr(h: &mut DMatrix<C64>, z: &mut DMatrix<C64>) -> Result<(), EigError> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let hnorm = row_sum_norm(h).max(f64::MIN_POSITIVE);
    let budget = 30 * n.max(10);
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(n);
    while hi > 0 {
        // locate the top of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { hnorm } else { s };
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = C64::from(0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        if its > budget {
            let converged = (hi + 1..n).map(|k| h[(k, k)]).collect();
            return Err(EigError::ConvergenceFailure { dim: n, converged });
        }
        let shift = if its.is_multiple_of(11) {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        rots.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let (x, y) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = C64::from(0.0);
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = lo + idx;
            let rmax = (k + 2).min(hi + 1);
            for r in 0..rmax {
                let (x, y) = (h[(r, k)], h[(r, k + 1)]);
                h[(r, k)] = x * c + y * s.conj();
                h[(r, k + 1)] = -x * s + y * c;
            }
            for r in 0..n {
                let (x, y) = (z[(r, k)], z[(r, k + 1)]);
                z[(r, k)] = x * c + y * s.conj();
                z[(r, k + 1)] = -x * s + y * c;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(())
}

/// Solves `(T − t_kk) x = 0` with `x_k = 1`, `x_j = 0` for `j > k`.
fn triangular_eigvec(t: &DMatrix<C64>, k: usize, tnorm: f64) -> DVector<C64> {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e10);
    let mut x = DVector::<C64>::zeros(n);
    x[k] = C64::from(1.0);
    for i in (0..k).rev() {
        let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
        let mut d = t[(i, i)] - lambda;
        if d.norm() < smin {
            d = C64::from(smin);
        }
        x[i] = -s / d;
        let big = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if big > 1e100 {
            x /= C64::from(big);
        }
    }
    x
}

/// Scales `v` so that its first largest-modulus component is exactly 1.
pub fn normalize_phase(v: &mut DVector<C64>) {
    let mut best = 0;
    let mut bn = -1.0;
    for (i, z) in v.iter().enumerate() {
        // tiny slack so ties resolve to the first index deterministically
        if z.norm() > bn * (1.0 + 1e-12) {
            bn = z.norm();
            best = i;
        }
    }
    if bn > 0.0 {
        let p = v[best];
        *v /= p;
        v[best] = C64::from(1.0);
    }
}

/// Pairs each `a[i]` with a distinct nearest `b[j]` (greedy, in sorted
/// order) and returns the largest pairing distance.
pub fn match_spectra(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut sa = a.to_vec();
    sort_lex(&mut sa);
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in &sa {
        let mut best: Option<(usize, f64)> = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

pub fn sort_lex(v: &mut [C64]) {
    v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

/// Largest distance from each `E` to the nearest of `{−E, E*, −E*}` in
/// the same list, i.e. how far the spectrum is from closing into quartets.
pub fn quartet_closure(values: &[C64]) -> f64 {
    let nearest = |target: C64| values.iter().map(|y| (y - target).norm()).fold(f64::INFINITY, f64::min);
    values
        .iter()
        .map(|&e| nearest(-e).max(nearest(e.conj())).max(nearest(-e.conj())))
        .fold(0.0, f64::max)
}
