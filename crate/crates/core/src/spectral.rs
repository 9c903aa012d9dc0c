//! Biorthogonal eigen-decomposition of a Liouvillian.
//!
//! Modes are indexed from zero: index 0 is the stationary mode (`lambda = 0`),
//! index 1 the slowest-decaying mode, and so on in order of decreasing real
//! part. Eigenvalues whose real parts agree to within the degeneracy
//! tolerance are ordered by ascending imaginary part, then by solver index.

use crate::error::{Error, Result};
use crate::model::{DensityMatrix, Superoperator};
use crate::numerics::{dot_conj, eig_general, norm2, solve, ComplexMatrix, C64, DEGENERACY_TOL, ONE};

/// Gram matrices of a degenerate cluster are inverted only if their pivots
/// stay above this fraction of the largest entry; eigenvalue condition
/// numbers beyond its inverse are reported as exceptional points.
const GRAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralData {
    l: usize,
    eigenvalues: Vec<C64>,
    right: Vec<Vec<C64>>,
    left: Vec<Vec<C64>>,
    stationary: ComplexMatrix,
    generator_norm: f64,
    degenerate_clusters: usize,
}

impl SpectralData {
    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, alpha: usize) -> C64 {
        self.eigenvalues[alpha]
    }

    /// Column-stacked right mode `vec(R_alpha)`.
    pub fn right_vec(&self, alpha: usize) -> &[C64] {
        &self.right[alpha]
    }

    /// Column-stacked left mode `vec(L_alpha)`.
    pub fn left_vec(&self, alpha: usize) -> &[C64] {
        &self.left[alpha]
    }

    pub fn right_mode(&self, alpha: usize) -> ComplexMatrix {
        ComplexMatrix::unvectorize(&self.right[alpha], self.l).expect("mode length is L^2")
    }

    pub fn left_mode(&self, alpha: usize) -> ComplexMatrix {
        ComplexMatrix::unvectorize(&self.left[alpha], self.l).expect("mode length is L^2")
    }

    /// Frobenius norm of the generator this decomposition came from.
    /// Stationary mode as an `L x L` matrix (unit trace, Hermitian).
    pub fn stationary_matrix(&self) -> &ComplexMatrix {
        &self.stationary
    }

    pub fn generator_norm(&self) -> f64 {
        self.generator_norm
    }

    /// Number of eigenvalue clusters with more than one member. These are
    /// semisimple (the decomposition rejects defective ones) and do not
    /// affect propagation.
    pub fn degenerate_clusters(&self) -> usize {
        self.degenerate_clusters
    }

    /// Slowest nonzero decay rate, `|Re lambda_2|`.
    pub fn gap(&self) -> f64 {
        self.eigenvalues.get(1).map_or(0.0, |z| -z.re)
    }

    /// `Tr(L_alpha^dagger R_beta)` for all pairs.
    pub fn biorthogonality_matrix(&self) -> ComplexMatrix {
        let n = self.len();
        ComplexMatrix::from_fn(n, n, |a, b| dot_conj(&self.left[a], &self.right[b]))
    }
}

/// Full biorthonormal decomposition of `superop`.
pub fn decompose(superop: &Superoperator) -> Result<SpectralData> {
    let l = superop.sites();
    let a = superop.matrix();
    let n = a.rows();
    let norm = superop.norm();
    let tol = DEGENERACY_TOL * norm;

    let right_pairs = eig_general(a)?;
    let left_pairs = eig_general(&a.adjoint())?;

    let values: Vec<C64> = right_pairs.iter().map(|p| p.value).collect();
    let zero_modes = values.iter().filter(|z| z.norm() <= tol).count();
    if zero_modes != 1 {
        return Err(Error::NonUniqueSteadyState { zero_modes });
    }
    if let Some(bad) = values.iter().find(|z| z.re > tol) {
        return Err(Error::Consistency(format!("eigenvalue {bad} has positive real part")));
    }

    let order = sort_spectrum(&values, tol);
    let values: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    let mut right: Vec<Vec<C64>> = order.iter().map(|&i| right_pairs[i].vector.clone()).collect();

    // stationary mode: unit trace and Hermitian; the rest: unit Hilbert-Schmidt norm
    let r1 = ComplexMatrix::unvectorize(&right[0], l)?;
    let tr = r1.trace();
    if tr.norm() <= f64::EPSILON * norm2(&right[0]) {
        return Err(Error::Consistency("stationary mode has zero trace".into()));
    }
    let stationary = r1.scale(ONE / tr).hermitian_part();
    right[0] = stationary.vectorize();
    for v in right.iter_mut().skip(1) {
        let s = norm2(v);
        v.iter_mut().for_each(|c| *c /= s);
    }

    let clusters = clusters(&values, tol);
    let mut left = vec![Vec::new(); n];
    let mut assigned = vec![Vec::new(); clusters.len()];
    let cluster_of: Vec<usize> = {
        let mut c = vec![0; n];
        for (k, members) in clusters.iter().enumerate() {
            for &m in members {
                c[m] = k;
            }
        }
        c
    };
    for (idx, p) in left_pairs.iter().enumerate() {
        let target = p.value.conj();
        let nearest = (0..n)
            .min_by(|&x, &y| (values[x] - target).norm().total_cmp(&(values[y] - target).norm()))
            .expect("non-empty spectrum");
        assigned[cluster_of[nearest]].push(idx);
    }

    let mut degenerate_clusters = 0;
    for (members, lefts) in clusters.iter().zip(&assigned) {
        if members.len() != lefts.len() {
            return Err(Error::ExceptionalPoint {
                eigenvalue: format!("{}", values[members[0]]),
                condition: f64::INFINITY,
            });
        }
        if members.len() > 1 {
            degenerate_clusters += 1;
        }
        biorthonormalize(members, lefts, &right, &left_pairs, &values, &mut left)?;
    }

    Ok(SpectralData {
        l,
        eigenvalues: values,
        right,
        left,
        stationary,
        generator_norm: norm,
        degenerate_clusters,
    })
}

/// Fills `left[m]` for every cluster member so that
/// `Tr(L_a^dagger R_b) = delta_ab` within the cluster.
fn biorthonormalize(
    members: &[usize],
    lefts: &[usize],
    right: &[Vec<C64>],
    left_pairs: &[crate::numerics::EigenPair],
    values: &[C64],
    left: &mut [Vec<C64>],
) -> Result<()> {
    let k = members.len();
    let dim = right[members[0]].len();
    // gram[a][b] = w_a^dagger v_b
    let gram = ComplexMatrix::from_fn(k, k, |a, b| dot_conj(&left_pairs[lefts[a]].vector, &right[members[b]]));
    let w_adj = ComplexMatrix::from_fn(k, dim, |a, j| left_pairs[lefts[a]].vector[j].conj());
    let ep = || Error::ExceptionalPoint {
        eigenvalue: format!("{}", values[members[0]]),
        condition: 1.0 / gram.max_abs().max(f64::MIN_POSITIVE),
    };
    if gram.max_abs() <= GRAM_TOL {
        return Err(ep());
    }
    // rows of X = G^{-1} W^dagger are the adjoints of the new left vectors
    let x = solve(&gram, &w_adj, GRAM_TOL).ok_or_else(ep)?;
    for (a, &m) in members.iter().enumerate() {
        left[m] = (0..dim).map(|j| x[(a, j)].conj()).collect();
    }
    Ok(())
}

/// Permutation putting eigenvalues in the canonical order: the value of
/// smallest modulus first, then descending real part, with real parts equal
/// to within `tol` ordered by ascending imaginary part and then index.
pub fn sort_spectrum(values: &[C64], tol: f64) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let zero = (0..n)
        .min_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm()))
        .expect("non-empty");
    let mut idx: Vec<usize> = (0..n).filter(|&i| i != zero).collect();
    idx.sort_by(|&a, &b| values[b].re.total_cmp(&values[a].re).then(a.cmp(&b)));

    let mut out = Vec::with_capacity(n);
    out.push(zero);
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && (values[idx[end - 1]].re - values[idx[end]].re).abs() <= tol {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im).then(a.cmp(&b)));
        out.extend(group);
        start = end;
    }
    out
}

/// Groups indices whose eigenvalues are connected by chains of gaps `<= tol`.
fn clusters(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// The stationary state `R_1`, validated for positivity.
pub fn stationary_state(sd: &SpectralData) -> Result<DensityMatrix> {
    let rho = sd.stationary.hermitian_part();
    let tr = rho.trace();
    let rho = rho.scale(ONE / tr);
    let min = crate::numerics::eigvals_hermitian(&rho)?[0];
    if min < -DensityMatrix::POSITIVITY_TOL {
        return Err(Error::Positivity { min_eigenvalue: min });
    }
    DensityMatrix::new(rho)
}

/// Stationary state from the kernel of the generator directly: solves
/// `L x = 0` with one equation replaced by `Tr x = 1`. Needs no
/// eigen-decomposition, so it also works where [`decompose`] refuses.
pub fn steady_state_kernel(superop: &Superoperator) -> Result<DensityMatrix> {
    let l = superop.sites();
    let n = l * l;
    let mut a = superop.matrix().clone();
    // row 0 is the (0,0) population equation; it is implied by the others
    // through trace preservation
    for k in 0..n {
        a[(0, k)] = if k % (l + 1) == 0 { ONE } else { C64::new(0.0, 0.0) };
    }
    let mut b = ComplexMatrix::zeros(n, 1);
    b[(0, 0)] = ONE;
    let x = solve(&a, &b, 1e-13).ok_or(Error::NonUniqueSteadyState { zero_modes: 2 })?;
    let rho = ComplexMatrix::unvectorize(&x.column(0), l)?.hermitian_part();
    let min = crate::numerics::eigvals_hermitian(&rho)?[0];
    if min < -DensityMatrix::POSITIVITY_TOL {
        return Err(Error::Positivity { min_eigenvalue: min });
    }
    DensityMatrix::new(rho)
}

/// Spectral amplitudes `c_alpha = Tr(L_alpha^dagger rho)`.
pub fn overlap_coefficients(sd: &SpectralData, rho: &DensityMatrix) -> Result<Vec<C64>> {
    if rho.dim() != sd.l {
        return Err(Error::Dimension(format!(
            "state has {} sites, decomposition has {}",
            rho.dim(),
            sd.l
        )));
    }
    let v = rho.matrix().vectorize();
    Ok(sd.left.iter().map(|l| dot_conj(l, &v)).collect())
}

/// `sum_alpha coeffs[alpha] R_alpha` as an `L x L` matrix.
pub fn reconstruct(sd: &SpectralData, coeffs: &[C64]) -> Result<ComplexMatrix> {
    if coeffs.len() != sd.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} modes",
            coeffs.len(),
            sd.len()
        )));
    }
    let mut acc = vec![C64::new(0.0, 0.0); sd.l * sd.l];
    for (c, r) in coeffs.iter().zip(&sd.right) {
        for (a, &x) in acc.iter_mut().zip(r) {
            *a += c * x;
        }
    }
    ComplexMatrix::unvectorize(&acc, sd.l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Fraction of `sum |M_nm|^2` carried by the block where both indices lie in
/// one half of the chain. The left half is sites `1..=ceil(L/2)`.
pub fn edge_weight(mode: &ComplexMatrix, side: Side) -> Result<f64> {
    if !mode.is_square() {
        return Err(Error::Dimension("mode must be square".into()));
    }
    let l = mode.rows();
    let total: f64 = mode.as_slice().iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::ZeroMode);
    }
    let half = l.div_ceil(2);
    let range = match side {
        Side::Left => 0..half,
        Side::Right => half..l,
    };
    let part: f64 = range
        .clone()
        .flat_map(|n| range.clone().map(move |m| (n, m)))
        .map(|(n, m)| mode[(n, m)].norm_sqr())
        .sum();
    Ok(part / total)
}
