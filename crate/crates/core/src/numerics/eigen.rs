//! General complex eigenproblem: Householder reduction to upper Hessenberg
//! form, single-shift complex QR to Schur form, then eigenvectors by
//! back-substitution on the triangular factor.

use super::matrix::{norm2, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Relative residual bound every returned eigenpair satisfies:
/// `|A v - lambda v| <= RESIDUAL_TOL * |A|_F` with `|v| = 1`.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvalues closer than this (relative to `|A|_F`) are treated as one cluster.
pub const DEGENERACY_TOL: f64 = 1e-9;

const ITERATIONS_PER_EIGENVALUE: usize = 30;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    /// Unit 2-norm.
    pub vector: Vec<C64>,
}

impl EigenPair {
    pub fn residual(&self, a: &ComplexMatrix) -> f64 {
        let av = a.matvec(&self.vector);
        av.iter()
            .zip(&self.vector)
            .map(|(x, v)| (x - self.value * v).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// All eigenpairs of a square complex matrix, with multiplicity, unordered.
pub fn eig_general(a: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::Dimension(format!(
            "eigensolver needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Ok((0..n)
            .map(|k| {
                let mut v = vec![ZERO; n];
                v[k] = ONE;
                EigenPair {
                    value: ZERO,
                    vector: v,
                }
            })
            .collect());
    }

    let (mut h, mut z) = hessenberg(a);
    schur_qr(&mut h, &mut z)?;

    let cluster_tol = DEGENERACY_TOL * norm;
    let bound = RESIDUAL_TOL * norm;
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let x = triangular_eigenvector(&h, k, cluster_tol);
        let mut v = z.matvec(&x);
        let s = norm2(&v);
        v.iter_mut().for_each(|c| *c /= s);
        let pair = EigenPair {
            value: h[(k, k)],
            vector: v,
        };
        let residual = pair.residual(a);
        if !(residual <= bound) {
            return Err(Error::Residual { residual, bound });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Eigenvalues only (diagonal of the Schur form).
pub fn eigvals_general(a: &ComplexMatrix) -> Result<Vec<C64>> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::Dimension(format!(
            "eigensolver needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scaled = balance_tridiagonal(a).unwrap_or_else(|| balance(a));
    let (mut h, mut z) = hessenberg(&scaled);
    schur_qr(&mut h, &mut z)?;
    Ok(h.diagonal())
}

/// For a tridiagonal matrix with non-zero off-diagonals, the positive
/// diagonal similarity `D^-1 A D` with `|b_{i+1,i}| = |b_{i,i+1}|`. Graded
/// tridiagonals (e.g. biased random walks) have balanced row and column
/// norms yet exponentially ill-conditioned eigenvalues; this scaling removes
/// the grading exactly. `None` if `A` is not of that form.
fn balance_tridiagonal(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = a.rows();
    if n < 3 {
        return None;
    }
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && a[(i, j)] != ZERO {
                return None;
            }
        }
    }
    // log d_i, accumulated so that no large intermediate product is formed
    let mut log_d = vec![0.0; n];
    for i in 0..n - 1 {
        let (lo, up) = (a[(i + 1, i)].norm(), a[(i, i + 1)].norm());
        if lo == 0.0 || up == 0.0 {
            return None;
        }
        log_d[i + 1] = log_d[i] + 0.5 * (lo / up).ln();
    }
    let b = ComplexMatrix::from_fn(n, n, |i, j| a[(i, j)] * (log_d[j] - log_d[i]).exp());
    b.as_slice().iter().all(|c| c.re.is_finite() && c.im.is_finite()).then_some(b)
}

/// Diagonal similarity `D^-1 A D` with power-of-two entries equalizing the
/// off-diagonal row and column norms (Parlett-Reinsch). Exact in floating
/// point, and it removes the grading of strongly non-normal matrices whose
/// eigenvalues are otherwise ill-conditioned.
fn balance(a: &ComplexMatrix) -> ComplexMatrix {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut b = a.clone();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in (0..n).filter(|&j| j != i) {
                c += b[(j, i)].l1_norm();
                r += b[(i, j)].l1_norm();
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cs = c;
            while cs < r / RADIX {
                f *= RADIX;
                cs *= RADIX * RADIX;
            }
            while cs > r * RADIX {
                f /= RADIX;
                cs /= RADIX * RADIX;
            }
            if (c * f + r / f) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    b
}

/// Returns `(H, Q)` with `A = Q H Q^dagger`, `H` upper Hessenberg.
fn hessenberg(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vn = norm2(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|c| *c /= vn);

        // h <- P h, P = I - 2 v v^dagger on rows k+1..n
        for j in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h[(k + 1 + r, j)])
                .sum();
            let f = dot * 2.0;
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= vr * f;
            }
        }
        // h <- h P, q <- q P on columns k+1..n
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let dot: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(r, vr)| m[(i, k + 1 + r)] * vr)
                    .sum();
                let f = dot * 2.0;
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= f * vr.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with `G (a, b)^T = (r, 0)^T`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, b.conj() / b.norm());
    }
    let an = a.norm();
    let r = an.hypot(b.norm());
    (an / r, (a / an) * b.conj() / r)
}

/// Drives the Hessenberg matrix `h` to upper triangular Schur form in place,
/// accumulating the unitary transformations into `z`.
fn schur_qr(h: &mut ComplexMatrix, z: &mut ComplexMatrix) -> Result<()> {
    let n = h.rows();
    if n == 1 {
        return Ok(());
    }
    let hnorm = h.frobenius_norm();
    let max_total = ITERATIONS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut hi = n - 1;
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(n);

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = hnorm;
            }
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }

        iter += 1;
        total += 1;
        if total > max_total {
            return Err(Error::NotConverged { iterations: total });
        }

        let mu = if iter % 10 == 0 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        rots.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = l + idx;
            for i in 0..=(k + 1) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + s.conj() * y;
                h[(i, k + 1)] = -s * x + y * c;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + s.conj() * y;
                z[(i, k + 1)] = -s * x + y * c;
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(())
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvector of upper triangular `t` for the diagonal entry `k`.
///
/// Components belonging to other diagonal entries within `cluster_tol` of
/// `t[k][k]` are free in the semisimple case and are set to zero, which keeps
/// the vectors of a degenerate cluster linearly independent.
fn triangular_eigenvector(t: &ComplexMatrix, k: usize, cluster_tol: f64) -> Vec<C64> {
    let n = t.rows();
    let lambda = t[(k, k)];
    let mut x = vec![ZERO; n];
    x[k] = ONE;
    for j in (0..k).rev() {
        let denom = t[(j, j)] - lambda;
        if denom.norm() <= cluster_tol {
            continue;
        }
        let s: C64 = (j + 1..=k).map(|m| t[(j, m)] * x[m]).sum();
        x[j] = -s / denom;
    }
    x
}
