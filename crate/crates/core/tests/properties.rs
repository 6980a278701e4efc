use mflab_core::linalg::{unitarity_defect, CMatrix, C64};
use mflab_core::quantum::{build_hamiltonian, evolve, evolve_state, propagator, ModelSpec};
use mflab_core::random::{
    random_density_matrix, random_hermitian, random_symbol, random_unit_vector, random_unitary, rng,
};
use mflab_core::symspace::{
    partial_trace, sym_power_matrix, sym_power_state, sym_power_unitary, trace_distance,
    OccupationBasis,
};
use mflab_core::wickcalc::{contract, poisson};
use proptest::prelude::*;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sector_dimension_is_binomial(n in 0usize..9, d in 1usize..5) {
        let basis = OccupationBasis::shared(n, d).unwrap();
        let expected: usize = (1..d).fold(1, |acc, j| acc * (n + j) / j);
        prop_assert_eq!(basis.dim(), expected);
        for (i, nu) in basis.states().iter().enumerate() {
            prop_assert_eq!(nu.iter().sum::<usize>(), n);
            prop_assert_eq!(basis.index_of(nu), Some(i));
        }
    }

    #[test]
    fn partial_trace_is_a_density_matrix(seed in any::<u64>(), n in 1usize..7, d in 1usize..4) {
        let mut r = rng(seed);
        let rho = random_density_matrix(&mut r, n, d, Some(2));
        for p in 1..=n {
            let red = partial_trace(&rho, p).unwrap();
            prop_assert!((red.matrix().trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
            let min = red.matrix().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(min > -1e-12);
        }
    }

    #[test]
    fn partial_traces_nest(seed in any::<u64>(), n in 3usize..7) {
        let mut r = rng(seed);
        let rho = random_density_matrix(&mut r, n, 2, None);
        let direct = partial_trace(&rho, 1).unwrap();
        let nested = partial_trace(&partial_trace(&rho, n - 1).unwrap(), 1).unwrap();
        prop_assert!(max_abs(&(direct.matrix() - nested.matrix())) < 1e-13);
    }

    #[test]
    fn trace_distance_is_a_bounded_symmetric_metric(seed in any::<u64>(), n in 1usize..5, d in 1usize..4) {
        let mut r = rng(seed);
        let a = random_density_matrix(&mut r, n, d, Some(1));
        let b = random_density_matrix(&mut r, n, d, None);
        let c = random_density_matrix(&mut r, n, d, Some(2));
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        let cb = trace_distance(&c, &b).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn poisson_bracket_is_antisymmetric(seed in any::<u64>(), d in 1usize..4, k in 1usize..3) {
        let mut r = rng(seed);
        let b1 = random_symbol(&mut r, d, 2, 2);
        let b2 = random_symbol(&mut r, d, 2, 1);
        let lhs = poisson(&b1, &b2, k).unwrap();
        let rhs = poisson(&b2, &b1, k).unwrap();
        prop_assert!(max_abs(&(lhs.kernel() + rhs.kernel())) < 1e-12 * lhs.kernel_norm().max(1.0));
    }

    #[test]
    fn zeroth_contraction_is_the_pointwise_product(seed in any::<u64>(), d in 1usize..4) {
        let mut r = rng(seed);
        let b1 = random_symbol(&mut r, d, 1, 2);
        let b2 = random_symbol(&mut r, d, 2, 1);
        let z = random_unit_vector(&mut r, d);
        let prod = contract(&b1, &b2, 0).unwrap().evaluate(&z).unwrap();
        let expected = b1.evaluate(&z).unwrap() * b2.evaluate(&z).unwrap();
        prop_assert!((prod - expected).norm() < 1e-12);
    }

    #[test]
    fn second_quantization_is_multiplicative(seed in any::<u64>(), n in 1usize..6, d in 1usize..4) {
        let mut r = rng(seed);
        let u = random_unitary(&mut r, d);
        let v = random_unitary(&mut r, d);
        let uv = sym_power_matrix(&(&u * &v), n).unwrap();
        let split = sym_power_matrix(&u, n).unwrap() * sym_power_matrix(&v, n).unwrap();
        prop_assert!(max_abs(&(uv - split)) < 1e-12);
        let gamma = sym_power_unitary(&u, n).unwrap();
        prop_assert!(unitarity_defect(gamma.matrix()) < 1e-12);
        let z = random_unit_vector(&mut r, d);
        let moved = sym_power_state(&(&u * &z), n).unwrap();
        let acted = gamma.matrix() * sym_power_state(&z, n).unwrap();
        prop_assert!((moved - acted).norm() < 1e-12);
    }

    #[test]
    fn evolution_round_trip_is_identity(seed in any::<u64>(), n in 1usize..40, t in -6.0f64..6.0) {
        let mut r = rng(seed);
        let model = ModelSpec::default_dimer();
        let h = build_hamiltonian(&model, n).unwrap();
        let rho = random_density_matrix(&mut r, n, 2, Some(2));
        let back = evolve(&evolve(&rho, &h, t).unwrap(), &h, -t).unwrap();
        prop_assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-10);
        prop_assert!(unitarity_defect(&propagator(&h, t).unwrap()) < 1e-10);
        let psi = random_unit_vector(&mut r, n + 1);
        let there = evolve_state(&psi, &h, t).unwrap();
        prop_assert!((there.norm() - 1.0).abs() < 1e-12);
        prop_assert!((evolve_state(&there, &h, -t).unwrap() - psi).norm() < 1e-10);
    }

    #[test]
    fn random_models_have_unitary_dynamics(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let dim2 = OccupationBasis::shared(2, 3).unwrap().dim();
        let model = ModelSpec::new(random_hermitian(&mut r, 3), random_hermitian(&mut r, dim2)).unwrap();
        let h = build_hamiltonian(&model, n).unwrap();
        prop_assert!(max_abs(&(h.matrix() - h.matrix().adjoint())) < 1e-12);
        prop_assert!(unitarity_defect(&propagator(&h, 1.3).unwrap()) < 1e-10);
    }
}
