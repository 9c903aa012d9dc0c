//! Hamiltonian, jump operators and Lindblad generator of the chain in the
//! single-excitation sector.
//!
//! Density matrices are vectorized by stacking columns, so that
//! `vec(A X B) = (B^T ⊗ A) vec(X)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigvals_hermitian, ComplexMatrix, C64, ONE, ZERO};

/// Physical configuration of the chain. All rates are in units of the
/// coherent hopping `J` of the relaxation stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Number of sites.
    pub l: usize,
    /// Nearest-neighbour coherent hopping.
    pub j: f64,
    /// Coherent coupling between the two end sites.
    pub eps: f64,
    /// Rightward incoherent hopping rate.
    pub j_r: f64,
    /// Leftward incoherent hopping rate.
    pub j_l: f64,
}

impl ChainParams {
    pub fn new(l: usize, j: f64, eps: f64, j_r: f64, j_l: f64) -> Result<Self> {
        let p = Self { l, j, eps, j_r, j_l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 sites, got {}", self.l)));
        }
        let rates = [("J", self.j), ("eps", self.eps), ("J_R", self.j_r), ("J_L", self.j_l)];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if rates.iter().all(|&(_, v)| v == 0.0) {
            return Err(Error::InvalidParams("all rates are zero".into()));
        }
        Ok(())
    }

    /// Skin parameter `r = J_R / J_L`.
    pub fn skin_parameter(&self) -> Result<f64> {
        if self.j_l > 0.0 {
            Ok(self.j_r / self.j_l)
        } else {
            Err(Error::SkinParameterUndefined)
        }
    }

    /// Purely coherent end-to-end swap generator: `J = J_R = J_L = 0`, `eps = eps1`.
    pub fn preparatory(l: usize, eps1: f64) -> Result<Self> {
        Self::new(l, 0.0, eps1, 0.0, 0.0)
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }
}

/// Unit-trace Hermitian positive semidefinite `L x L` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validates the state invariants at the default tolerances.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, Self::HERMITIAN_TOL, Self::TRACE_TOL, Self::POSITIVITY_TOL)
    }

    pub fn with_tolerance(m: ComplexMatrix, herm_tol: f64, trace_tol: f64, pos_tol: f64) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::Dimension(format!("density matrix must be square, got {}x{}", m.rows(), m.cols())));
        }
        let defect = m.hermiticity_defect();
        if defect > herm_tol {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = eigvals_hermitian(&m.hermitian_part())?[0];
        if min < -pos_tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix produced by trusted dynamics after Hermitizing it.
    pub(crate) fn from_evolved(m: &ComplexMatrix) -> Self {
        Self(m.hermitian_part())
    }

    /// `|n><n|` with zero-based site index `n`.
    pub fn site(l: usize, n: usize) -> Result<Self> {
        if n >= l {
            return Err(Error::Dimension(format!("site {n} outside chain of {l} sites")));
        }
        let mut m = ComplexMatrix::zeros(l, l);
        m[(n, n)] = ONE;
        Ok(Self(m))
    }

    /// Excitation on the first site, `|1><1|`.
    pub fn first_site(l: usize) -> Self {
        Self::site(l, 0).expect("l >= 1")
    }

    /// Excitation on the last site, `|L><L|`.
    pub fn last_site(l: usize) -> Self {
        Self::site(l, l - 1).expect("l >= 1")
    }

    /// Diagonal state from a probability vector.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(p))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigvals_hermitian(&self.0)?[0])
    }
}

/// Matrix representation of a Lindblad generator acting on column-stacked
/// `L x L` density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    l: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(l: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != l * l || matrix.cols() != l * l {
            return Err(Error::Dimension(format!(
                "superoperator for L = {l} must be {0}x{0}",
                l * l
            )));
        }
        Ok(Self { l, matrix })
    }

    /// Site count `L` of the underlying chain.
    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.l || rho.cols() != self.l {
            return Err(Error::Dimension(format!(
                "state is {}x{}, generator expects {}x{}",
                rho.rows(),
                rho.cols(),
                self.l,
                self.l
            )));
        }
        ComplexMatrix::unvectorize(&self.matrix.matvec(&rho.vectorize()), self.l)
    }

    /// Largest `|Tr(unvec(L e_k))|` over basis inputs; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let l = self.l;
        (0..l * l)
            .map(|k| (0..l).map(|i| self.matrix[(i * l + i, k)]).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }
}

/// Dimension of the `n`-boson sector on `l` sites, `(n + l - 1)! / (n! (l - 1)!)`.
pub fn hilbert_dimension(l: u64, n: u64) -> Result<u64> {
    if l == 0 {
        return Err(Error::InvalidParams("need at least one site".into()));
    }
    let overflow = || Error::Overflow(format!("dimension for L = {l}, N = {n}"));
    // C(n + l - 1, k) with the smaller k; each partial product is itself a binomial.
    let top = n.checked_add(l - 1).ok_or_else(overflow)?;
    let k = n.min(l - 1);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc
            .checked_mul(top as u128 - k as u128 + i)
            .ok_or_else(overflow)?
            / i;
        if acc > u64::MAX as u128 {
            return Err(overflow());
        }
    }
    Ok(acc as u64)
}

pub fn build_hamiltonian(p: &ChainParams) -> ComplexMatrix {
    let l = p.l;
    let mut h = ComplexMatrix::zeros(l, l);
    for n in 0..l - 1 {
        h[(n, n + 1)] -= C64::new(p.j, 0.0);
        h[(n + 1, n)] -= C64::new(p.j, 0.0);
    }
    h[(0, l - 1)] -= C64::new(p.eps, 0.0);
    h[(l - 1, 0)] -= C64::new(p.eps, 0.0);
    h
}

/// The `2(L-1)` jump operators: rightward hops for bonds `1..L-1` first,
/// then leftward hops in the same bond order.
pub fn build_jump_operators(p: &ChainParams) -> Vec<ComplexMatrix> {
    let l = p.l;
    let (sr, sl) = (p.j_r.sqrt(), p.j_l.sqrt());
    let right = (0..l - 1).map(|n| {
        let mut o = ComplexMatrix::zeros(l, l);
        o[(n + 1, n)] = C64::new(sr, 0.0);
        o
    });
    let left = (0..l - 1).map(|n| {
        let mut o = ComplexMatrix::zeros(l, l);
        o[(n, n + 1)] = C64::new(sl, 0.0);
        o
    });
    right.chain(left).collect()
}

/// Superoperator of `-i[H, .] + sum_k D[O_k]` for arbitrary `H` and jump operators.
pub fn liouvillian_from_operators(h: &ComplexMatrix, jumps: &[ComplexMatrix]) -> Result<Superoperator> {
    let l = h.rows();
    if !h.is_square() || jumps.iter().any(|o| o.rows() != l || o.cols() != l) {
        return Err(Error::Dimension("operators must share one square shape".into()));
    }
    let id = ComplexMatrix::identity(l);
    let minus_i = C64::new(0.0, -1.0);
    let mut m = &id.kron(h) - &h.transpose().kron(&id);
    m = m.scale(minus_i);
    for o in jumps {
        if o.as_slice().iter().all(|&z| z == ZERO) {
            continue;
        }
        let odo = &o.adjoint() * o;
        m = &m + &o.conj().kron(o);
        m.axpy(C64::new(-0.5, 0.0), &id.kron(&odo));
        m.axpy(C64::new(-0.5, 0.0), &odo.transpose().kron(&id));
    }
    Superoperator::from_matrix(l, m)
}

pub fn build_liouvillian(p: &ChainParams) -> Superoperator {
    liouvillian_from_operators(&build_hamiltonian(p), &build_jump_operators(p))
        .expect("chain operators share one shape")
}

/// `d rho / dt` evaluated entry by entry from the single-excitation master
/// equation, without forming the superoperator.
pub fn liouvillian_action(p: &ChainParams, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let l = p.l;
    if rho.rows() != l || rho.cols() != l {
        return Err(Error::Dimension(format!(
            "state is {}x{}, chain has {l} sites",
            rho.rows(),
            rho.cols()
        )));
    }
    let h = build_hamiltonian(p);
    let i = C64::new(0.0, 1.0);
    let (jr, jl) = (p.j_r, p.j_l);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let last = l - 1;
    let out = ComplexMatrix::from_fn(l, l, |n, m| {
        let mut commutator = ZERO;
        for k in 0..l {
            commutator += rho[(n, k)] * h[(k, m)] - h[(n, k)] * rho[(k, m)];
        }
        let mut d = i * commutator;
        if n == m {
            if n > 0 {
                d += rho[(n - 1, n - 1)] * jr;
            }
            if n < last {
                d += rho[(n + 1, n + 1)] * jl;
            }
        }
        let damping = -(jr + jl)
            + 0.5 * jr * (delta(n, last) + delta(m, last))
            + 0.5 * jl * (delta(n, 0) + delta(m, 0));
        d + rho[(n, m)] * damping
    });
    Ok(out)
}
