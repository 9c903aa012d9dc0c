//! The `J = eps = 0` limit: a classical birth-death process on `L` sites with
//! reflecting ends, solved exactly. Used as an independent oracle for the
//! quantum code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, integrate_linear, ComplexMatrix, StepControl, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathModel {
    pub l: usize,
    pub j_r: f64,
    pub j_l: f64,
}

impl BirthDeathModel {
    pub fn new(l: usize, j_r: f64, j_l: f64) -> Result<Self> {
        let m = Self { l, j_r, j_l };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::InvalidParams(format!("need L >= 2, got {}", self.l)));
        }
        if !(self.j_l > 0.0 && self.j_l.is_finite()) || !(self.j_r >= 0.0 && self.j_r.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need J_L > 0 and J_R >= 0, got J_R = {}, J_L = {}",
                self.j_r, self.j_l
            )));
        }
        Ok(())
    }

    /// `r = J_R / J_L`.
    pub fn r(&self) -> f64 {
        self.j_r / self.j_l
    }
}

/// Generator `M` of `dP/dt = M P` (real entries): `J_R` below the diagonal,
/// `J_L` above, columns summing to zero.
pub fn build_generator(m: &BirthDeathModel) -> ComplexMatrix {
    let l = m.l;
    let mut g = ComplexMatrix::zeros(l, l);
    for n in 0..l - 1 {
        g[(n + 1, n)] = C64::new(m.j_r, 0.0);
        g[(n, n + 1)] = C64::new(m.j_l, 0.0);
        g[(n, n)] -= C64::new(m.j_r, 0.0);
        g[(n + 1, n + 1)] -= C64::new(m.j_l, 0.0);
    }
    g
}

/// `P_n = r^{n-1} / sum_k r^k`.
pub fn stationary_distribution(m: &BirthDeathModel) -> Vec<f64> {
    let r = m.r();
    // scale by the largest term so that r^{L-1} cannot overflow before normalizing
    let logs: Vec<f64> = (0..m.l).map(|n| n as f64 * r.ln()).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = if r == 0.0 {
        (0..m.l).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect()
    } else {
        logs.iter().map(|x| (x - top).exp()).collect()
    };
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `0` followed by `-J_L - J_R + 2 sqrt(J_L J_R) cos(pi (alpha - 1) / L)`,
/// `alpha = 2..L`, in descending order.
pub fn analytic_eigenvalues(m: &BirthDeathModel) -> Vec<f64> {
    let s = 2.0 * (m.j_l * m.j_r).sqrt();
    let mut v = vec![0.0];
    v.extend((1..m.l).map(|k| -m.j_l - m.j_r + s * (std::f64::consts::PI * k as f64 / m.l as f64).cos()));
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Biorthonormal eigenmodes of `M`: `M R_a = lambda_a R_a`,
/// `M^T L_a = lambda_a L_a`, `<L_a, R_b> = delta_ab`. Mode 0 is stationary
/// (`R_0` is the stationary distribution, `L_0` is all ones); the other right
/// modes have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModes {
    pub eigenvalues: Vec<f64>,
    pub right: Vec<Vec<f64>>,
    pub left: Vec<Vec<f64>>,
}

impl ClassicalModes {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Modes from the symmetrized generator `U = D^{-1/2} M D^{1/2}`,
/// `D = diag(r^{n-1})`: with `U V = lambda V` (orthonormal `V`),
/// `R = D^{1/2} V` and `L = D^{-1/2} V`.
pub fn biorthogonal_modes(m: &BirthDeathModel) -> Result<ClassicalModes> {
    m.validate()?;
    if m.j_r == 0.0 {
        return Err(Error::InvalidParams("need J_R > 0 for the symmetrizing similarity".into()));
    }
    let l = m.l;
    let gen = build_generator(m);
    let half_log_r = 0.5 * m.r().ln();
    // exponents applied as differences so that no r^{L} factor is ever formed
    let u = ComplexMatrix::from_fn(l, l, |i, j| gen[(i, j)] * ((j as f64 - i as f64) * half_log_r).exp());
    let defect = (&u - &u.transpose()).max_abs();
    if defect > SYMMETRY_TOL * u.max_abs().max(1.0) {
        return Err(Error::Consistency(format!("symmetrized generator not symmetric: defect {defect:e}")));
    }
    let eig = eig_hermitian(&u)?;

    let mut modes: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..l)
        .map(|k| {
            let v = eig.vectors.column(k);
            // remove the arbitrary phase: largest component real and positive
            let big = v.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("L >= 2");
            let phase = big.conj() / big.norm();
            let v: Vec<f64> = v.iter().map(|c| (c * phase).re).collect();
            let right = v.iter().enumerate().map(|(n, x)| x * (n as f64 * half_log_r).exp()).collect();
            let left = v.iter().enumerate().map(|(n, x)| x * (-(n as f64) * half_log_r).exp()).collect();
            (eig.values[k], right, left)
        })
        .collect();
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut out = ClassicalModes {
        eigenvalues: Vec::with_capacity(l),
        right: Vec::with_capacity(l),
        left: Vec::with_capacity(l),
    };
    for (k, (value, mut right, mut left)) in modes.into_iter().enumerate() {
        if k == 0 {
            let s: f64 = right.iter().sum();
            right.iter_mut().for_each(|x| *x /= s);
            left.iter_mut().for_each(|x| *x *= s);
        } else {
            let s = right.iter().map(|x| x * x).sum::<f64>().sqrt();
            right.iter_mut().for_each(|x| *x /= s);
        }
        let g: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
        left.iter_mut().for_each(|x| *x /= g);
        out.eigenvalues.push(if k == 0 { 0.0 } else { value });
        out.right.push(right);
        out.left.push(left);
    }
    Ok(out)
}

fn check_probability(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(x >= -1e-12)) || (sum - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// `c_a = <L_a, P0>`.
pub fn spectral_coefficients(modes: &ClassicalModes, p0: &[f64]) -> Result<Vec<f64>> {
    if p0.len() != modes.len() {
        return Err(Error::Dimension(format!(
            "distribution of length {} for {} modes",
            p0.len(),
            modes.len()
        )));
    }
    check_probability(p0)?;
    Ok(modes.left.iter().map(|l| l.iter().zip(p0).map(|(a, b)| a * b).sum()).collect())
}

/// `P(t) = sum_a c_a e^{lambda_a t} R_a`.
pub fn evolve(modes: &ClassicalModes, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    let c = spectral_coefficients(modes, p0)?;
    let mut p = vec![0.0; modes.len()];
    for ((ca, la), ra) in c.iter().zip(&modes.eigenvalues).zip(&modes.right) {
        let w = ca * (la * t).exp();
        p.iter_mut().zip(ra).for_each(|(x, r)| *x += w * r);
    }
    Ok(p)
}

/// `exp(M t) P0` by direct integration of the master equation, on `grid`.
pub fn evolve_numeric(m: &BirthDeathModel, p0: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if p0.len() != m.l {
        return Err(Error::Dimension(format!("distribution of length {} for L = {}", p0.len(), m.l)));
    }
    let y0: Vec<C64> = p0.iter().map(|&x| C64::new(x, 0.0)).collect();
    let out = integrate_linear(&build_generator(m), &y0, grid, &StepControl::with_tol(1e-13))?;
    Ok(out.into_iter().map(|y| y.iter().map(|c| c.re).collect()).collect())
}

/// `(1/2) sum |P - P_E|` and `sqrt(sum (P - P_E)^2)`.
pub fn diagonal_distances(p: &[f64], p_e: &[f64]) -> Result<(f64, f64)> {
    if p.len() != p_e.len() {
        return Err(Error::Dimension(format!("lengths {} and {}", p.len(), p_e.len())));
    }
    let d: Vec<f64> = p.iter().zip(p_e).map(|(a, b)| a - b).collect();
    Ok((
        0.5 * d.iter().map(|x| x.abs()).sum::<f64>(),
        d.iter().map(|x| x * x).sum::<f64>().sqrt(),
    ))
}

/// `|c_a / c'_a|` for the edge distributions `P0 = delta_{n,1}` and `delta_{n,L}`.
pub fn edge_coefficient_ratio(modes: &ClassicalModes, alpha: usize) -> f64 {
    let l = &modes.left[alpha];
    (l[0] / l[l.len() - 1]).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigvals_general;

    fn model(l: usize, j_r: f64, j_l: f64) -> BirthDeathModel {
        BirthDeathModel::new(l, j_r, j_l).unwrap()
    }

    #[test]
    fn validation() {
        assert!(BirthDeathModel::new(1, 1.0, 1.0).is_err());
        assert!(BirthDeathModel::new(3, 1.0, 0.0).is_err());
        assert!(BirthDeathModel::new(3, -1.0, 1.0).is_err());
        assert_eq!(model(3, 2.0, 0.5).r(), 4.0);
    }

    #[test]
    fn two_site_generator() {
        let g = build_generator(&model(2, 2.0, 0.5));
        let want = ComplexMatrix::from_real_rows(&[vec![-2.0, 0.5], vec![2.0, -0.5]]).unwrap();
        assert_eq!(g, want);
    }

    #[test]
    fn columns_sum_to_zero() {
        for l in 2..12 {
            let g = build_generator(&model(l, 1.3, 0.4));
            for j in 0..l {
                let s: C64 = g.column(j).iter().sum();
                assert!(s.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn stationary_examples() {
        let p = stationary_distribution(&model(7, 1.0, 1.0));
        assert!(p.iter().all(|x| (x - 1.0 / 7.0).abs() < 1e-15));
        let p = stationary_distribution(&model(3, 2.0, 1.0));
        for (a, b) in p.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let m = model(5, 0.5, 1.0);
        let p = stationary_distribution(&m);
        assert!(p.windows(2).all(|w| w[1] < w[0]));
        let y: Vec<C64> = p.iter().map(|&x| C64::new(x, 0.0)).collect();
        let res = build_generator(&m).matvec(&y);
        assert!(res.iter().all(|c| c.norm() < 1e-12));
        // no overflow for steep profiles
        let p = stationary_distribution(&model(60, 1e3, 1.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p[59] > 0.99);
    }

    #[test]
    fn analytic_eigenvalue_examples() {
        let e = analytic_eigenvalues(&model(3, 1.0, 1.0));
        for (a, b) in e.iter().zip([0.0, -1.0, -3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let e = analytic_eigenvalues(&model(2, 1.0, 1.0));
        assert!((e[1] + 2.0).abs() < 1e-15);
        let m = model(7, 1.0, 0.4);
        let mut num: Vec<f64> = eigvals_general(&build_generator(&m)).unwrap().iter().map(|c| c.re).collect();
        num.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in analytic_eigenvalues(&m).iter().zip(&num) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn two_site_modes_by_hand() {
        // M = [[-2, 1], [2, -1]]: lambda = -3, right (1, -1), left (2, -1)
        let modes = biorthogonal_modes(&model(2, 2.0, 1.0)).unwrap();
        assert!((modes.eigenvalues[1] + 3.0).abs() < 1e-14);
        let (r, l) = (&modes.right[1], &modes.left[1]);
        assert!((r[0] / r[1] + 1.0).abs() < 1e-12);
        assert!((l[0] / l[1] + 2.0).abs() < 1e-12);
        assert!((edge_coefficient_ratio(&modes, 1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn modes_are_biorthonormal_eigenvectors() {
        for &(l, r) in &[(2, 2.0), (5, 0.25), (11, 2.0), (20, 4.0)] {
            let m = model(l, r, 1.0);
            let g = build_generator(&m);
            let modes = biorthogonal_modes(&m).unwrap();
            for a in 0..l {
                for b in 0..l {
                    let s: f64 = modes.left[a].iter().zip(&modes.right[b]).map(|(x, y)| x * y).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-10, "L={l} r={r} ({a},{b}) {s}");
                }
                let ra: Vec<C64> = modes.right[a].iter().map(|&x| C64::new(x, 0.0)).collect();
                let mr = g.matvec(&ra);
                let scale = modes.right[a].iter().fold(0.0f64, |s, x| s.max(x.abs()));
                for (x, y) in mr.iter().zip(&modes.right[a]) {
                    assert!((x.re - modes.eigenvalues[a] * y).abs() < 1e-10 * scale.max(1.0));
                }
                if a > 0 {
                    assert!(modes.eigenvalues[a] < 0.0);
                }
            }
            for (x, y) in modes.right[0].iter().zip(stationary_distribution(&m)) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!(modes.left[0].iter().all(|x| (x - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn unbiased_modes_coincide() {
        let modes = biorthogonal_modes(&model(6, 1.0, 1.0)).unwrap();
        for a in 1..6 {
            for (x, y) in modes.left[a].iter().zip(&modes.right[a]) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn modes_squeeze_to_opposite_edges() {
        let modes = biorthogonal_modes(&model(11, 2.0, 1.0)).unwrap();
        for a in 1..11 {
            let (r, l) = (&modes.right[a], &modes.left[a]);
            assert!(r[10].abs() > r[0].abs());
            assert!(l[0].abs() > l[10].abs());
        }
    }

    #[test]
    fn coefficients_reconstruct() {
        let m = model(8, 1.5, 1.0);
        let modes = biorthogonal_modes(&m).unwrap();
        let p0 = [0.3, 0.0, 0.1, 0.2, 0.0, 0.25, 0.05, 0.1];
        let c = spectral_coefficients(&modes, &p0).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12);
        let back = evolve(&modes, &p0, 0.0).unwrap();
        for (a, b) in back.iter().zip(&p0) {
            assert!((a - b).abs() < 1e-10);
        }
        let c = spectral_coefficients(&modes, &stationary_distribution(&m)).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-10));
        assert!(spectral_coefficients(&modes, &[0.5; 8]).is_err());
        assert!(spectral_coefficients(&modes, &[1.0]).is_err());
    }

    #[test]
    fn spectral_evolution_matches_integration() {
        let m = model(6, 1.0, 0.5);
        let modes = biorthogonal_modes(&m).unwrap();
        let p0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let grid = [0.0, 0.5, 2.0, 7.0];
        let num = evolve_numeric(&m, &p0, &grid).unwrap();
        for (t, p) in grid.iter().zip(&num) {
            let q = evolve(&modes, &p0, *t).unwrap();
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(diagonal_distances(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), (0.0, 0.0));
        let (tr, hs) = diagonal_distances(&[1.0, 0.0], &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert!((tr - 2.0 / 3.0).abs() < 1e-15);
        assert!((hs - (8.0f64 / 9.0).sqrt()).abs() < 1e-15);
        assert!(diagonal_distances(&[1.0], &[0.5, 0.5]).is_err());
    }

    /// Exact ratio `r^{L/2}`: the symmetrized mode has `|V_1 / V_L| = sqrt(r)`.
    #[test]
    fn edge_coefficient_ratio_law() {
        for l in 2..=16 {
            for &r in &[0.5, 2.0, 3.0] {
                let modes = biorthogonal_modes(&model(l, r, 1.0)).unwrap();
                for a in 1..l.min(4) {
                    let got = edge_coefficient_ratio(&modes, a);
                    let want = r.powf(l as f64 / 2.0);
                    assert!((got / want - 1.0).abs() < 1e-8, "L={l} r={r} a={a}: {got} vs {want}");
                }
            }
        }
    }
}
