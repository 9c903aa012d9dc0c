//! Cyclic Jacobi eigensolver for complex Hermitian matrices.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Default tolerance on `max |A - A^dagger|` accepted by [`eig_hermitian`].
pub const HERMITICITY_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d: Vec<C64> = self.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        let vd = &self.vectors * &ComplexMatrix::from_diagonal(&d);
        &vd * &self.vectors.adjoint()
    }
}

pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    eig_hermitian_with_tol(a, HERMITICITY_TOL)
}

pub fn eig_hermitian_with_tol(a: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    check(a, tol)?;
    let (values, vectors) = jacobi(a, true)?;
    let vectors = vectors.expect("vectors requested");
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let n = values.len();
    let sorted_vectors = ComplexMatrix::from_fn(n, n, |i, k| vectors[(i, order[k])]);
    Ok(HermitianEigen {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: sorted_vectors,
    })
}

/// Eigenvalues only, ascending. Skips the eigenvector accumulation.
pub fn eigvals_hermitian(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check(a, HERMITICITY_TOL)?;
    let (mut values, _) = jacobi(a, false)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn check(a: &ComplexMatrix, tol: f64) -> Result<()> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::Dimension(format!(
            "eigensolver needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let defect = a.hermiticity_defect();
    if defect > tol * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { defect, tol });
    }
    Ok(())
}

fn jacobi(a: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = want_vectors.then(|| ComplexMatrix::identity(n));
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale {
            let values = (0..n).map(|i| m[(i, i)].re).collect();
            return Ok((values, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, v.as_mut(), p, q);
            }
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_SWEEPS,
    })
}

/// Annihilates `m[(p, q)]` with the unitary `G = Phi R` acting on rows and
/// columns `p, q`, where `Phi = diag(1, e^{-i phi})` makes the pivot real and
/// `R` is the classical real Jacobi rotation.
fn rotate(m: &mut ComplexMatrix, v: Option<&mut ComplexMatrix>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if g <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    let phase = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G columns: g_p = (c, -s e^{-i phi}), g_q = (s, c e^{-i phi}) in the (p, q) subspace.
    let ph = phase.conj();
    let gpp = C64::new(c, 0.0);
    let gqp = -ph * s;
    let gpq = C64::new(s, 0.0);
    let gqq = ph * c;

    let n = m.rows();
    // m <- m G
    for k in 0..n {
        let xp = m[(k, p)];
        let xq = m[(k, q)];
        m[(k, p)] = xp * gpp + xq * gqp;
        m[(k, q)] = xp * gpq + xq * gqq;
    }
    // m <- G^dagger m
    for k in 0..n {
        let xp = m[(p, k)];
        let xq = m[(q, k)];
        m[(p, k)] = gpp.conj() * xp + gqp.conj() * xq;
        m[(q, k)] = gpq.conj() * xp + gqq.conj() * xq;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);

    if let Some(v) = v {
        for k in 0..n {
            let xp = v[(k, p)];
            let xq = v[(k, q)];
            v[(k, p)] = xp * gpp + xq * gqp;
            v[(k, q)] = xp * gpq + xq * gqq;
        }
    }
}
