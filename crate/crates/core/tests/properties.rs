//! Randomized invariants of the generator, the distances and the classical model.

use num_complex::Complex64 as C64;
use pontus_core::classical::{build_generator, stationary_distribution, BirthDeathModel};
use pontus_core::dynamics::{hs_distance, trace_distance};
use pontus_core::model::{build_liouvillian, liouvillian_action};
use pontus_core::numerics::ComplexMatrix;
use pontus_core::{ChainParams, DensityMatrix};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ChainParams> {
    (2usize..9, 0.0..2.0f64, 0.0..1.5f64, 0.05..2.0f64, 0.05..2.0f64)
        .prop_map(|(l, j, eps, jr, jl)| ChainParams::new(l, j, eps, jr, jl).unwrap())
}

fn density(l: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), l * l).prop_map(move |v| {
        let g = ComplexMatrix::from_vec(l, l, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap();
        let m = &g * &g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(m.scale(C64::new(1.0, 0.0) / tr).hermitian_part()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_action_is_traceless_and_hermiticity_preserving(
        (p, rho) in params().prop_flat_map(|p| (Just(p), density(p.l)))
    ) {
        let out = liouvillian_action(&p, rho.matrix()).unwrap();
        prop_assert!(out.trace().norm() < 1e-12);
        prop_assert!(out.hermiticity_defect() < 1e-12);
        let via_superop = build_liouvillian(&p).apply(rho.matrix()).unwrap();
        prop_assert!(out.max_abs_diff(&via_superop) < 1e-12);
    }

    #[test]
    fn distances_are_metrics(
        (a, b) in (2usize..7).prop_flat_map(|l| (density(l), density(l)))
    ) {
        let tr = trace_distance(&a, &b).unwrap();
        let hs = hs_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tr));
        prop_assert!((tr - trace_distance(&b, &a).unwrap()).abs() < 1e-13);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-13);
        // |X|_F <= |X|_1 = 2 D_tr
        prop_assert!(hs <= 2.0 * tr + 1e-12);
    }

    #[test]
    fn classical_generator_conserves_probability(l in 2usize..30, jr in 0.01..5.0f64, jl in 0.01..5.0f64) {
        let m = BirthDeathModel::new(l, jr, jl).unwrap();
        let g = build_generator(&m);
        for j in 0..l {
            let s: C64 = g.column(j).iter().sum();
            prop_assert!(s.norm() < 1e-13);
        }
        let pe: Vec<C64> = stationary_distribution(&m).iter().map(|&x| C64::new(x, 0.0)).collect();
        let res = g.matvec(&pe).iter().fold(0.0f64, |s, c| s.max(c.norm()));
        prop_assert!(res < 1e-12);
    }
}
