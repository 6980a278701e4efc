//! Fast sector routines against the full-tensor oracle.

use mflab_core::linalg::{hermitian_exp, CMatrix, CVector, C64};
use mflab_core::oracle;
use mflab_core::quantum::{build_hamiltonian, ModelSpec};
use mflab_core::random::{
    random_density_matrix, random_hermitian, random_matrix, random_symbol, random_unit_vector,
    random_unitary, rng,
};
use mflab_core::symspace::{
    embed_one_body, embed_pair, partial_trace, sym_power_matrix, sym_power_state, OccupationBasis,
    SectorOperator,
};
use mflab_core::wickcalc::{
    commutator_symbols, compose_symbols, contract, wick_expectation, wick_restrict, PolySymbol,
    WickParameters,
};
use rand::Rng;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn close(a: &CMatrix, b: &CMatrix, tol: f64) {
    assert_eq!(a.shape(), b.shape());
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    let err = max_abs(&(a - b));
    assert!(err <= tol * scale, "deviation {err:e} (scale {scale:e})");
}

#[test]
fn symmetric_isometry_is_isometric() {
    for (n, d) in [(1, 3), (3, 2), (4, 3), (5, 2)] {
        let p = oracle::symmetric_isometry(n, d).unwrap();
        let dim = OccupationBasis::shared(n, d).unwrap().dim();
        close(&(p.adjoint() * &p), &CMatrix::identity(dim, dim), 1e-14);
    }
}

#[test]
fn coherent_amplitudes_match_tensor_power() {
    let mut r = rng(1);
    for (n, d) in [(1, 2), (3, 3), (6, 2), (4, 4)] {
        let z = random_unit_vector(&mut r, d);
        let fast = sym_power_state(&z, n).unwrap();
        let slow = oracle::symmetric_isometry(n, d).unwrap().adjoint()
            * oracle::tensor_power_vector(&z, n);
        close(
            &CMatrix::from_column_slice(fast.len(), 1, fast.as_slice()),
            &CMatrix::from_column_slice(slow.len(), 1, slow.as_slice()),
            1e-13,
        );
    }
}

#[test]
fn second_quantized_matrices_match_tensor_powers() {
    let mut r = rng(2);
    for (n, d) in [(2, 2), (3, 3), (5, 2)] {
        let m = random_matrix(&mut r, d, d);
        let p = oracle::symmetric_isometry(n, d).unwrap();
        let slow = p.adjoint() * oracle::kron_power(&m, n) * &p;
        close(&sym_power_matrix(&m, n).unwrap(), &slow, 1e-12);
    }
}

#[test]
fn one_body_embedding_matches_first_quantization() {
    let mut r = rng(3);
    for (n, d) in [(1, 2), (3, 3), (6, 2)] {
        let h = random_hermitian(&mut r, d);
        let eps = 1.0 / n as f64;
        let fast = embed_one_body(&h, n, eps).unwrap();
        let slow =
            oracle::restrict(&oracle::one_body_full(&h, n), n, d).unwrap() * C64::new(eps, 0.0);
        close(fast.matrix(), &slow, 1e-13);
    }
}

#[test]
fn pair_embedding_matches_first_quantization() {
    let mut r = rng(4);
    for (n, d) in [(2, 2), (4, 2), (3, 3)] {
        let basis = OccupationBasis::shared(2, d).unwrap();
        let pair = SectorOperator::hermitian(basis.clone(), random_hermitian(&mut r, basis.dim()))
            .unwrap();
        let fast = embed_pair(&pair, n, 0.7).unwrap();
        let v = oracle::full_kernel(&PolySymbol::from_operator(&pair)).unwrap();
        // the embedding carries the pair potential V = 2Q̃
        let slow = oracle::restrict(&oracle::pair_full(&v, n, d), n, d).unwrap()
            * C64::new(2.0 * 0.7, 0.0);
        close(fast.matrix(), &slow, 1e-13);
    }
}

#[test]
fn hamiltonian_matches_first_quantization() {
    let mut r = rng(5);
    let dim2 = OccupationBasis::shared(2, 3).unwrap().dim();
    let models = [
        (ModelSpec::default_dimer(), 8),
        (
            ModelSpec::onsite(random_hermitian(&mut r, 3), 1.7).unwrap(),
            4,
        ),
        (
            ModelSpec::new(random_hermitian(&mut r, 3), random_hermitian(&mut r, dim2)).unwrap(),
            4,
        ),
    ];
    for (model, nmax) in &models {
        for n in 1..=*nmax {
            let fast = build_hamiltonian(model, n).unwrap();
            let slow = oracle::hamiltonian_full(model, n).unwrap();
            close(fast.matrix(), &slow, 1e-13);
        }
    }
}

#[test]
fn wick_quantization_matches_definition() {
    let mut r = rng(6);
    for _ in 0..40 {
        let d = r.gen_range(1..=3);
        let p = r.gen_range(0..=3);
        let q = r.gen_range(0..=3);
        let n = r.gen_range(0..=5);
        let b = random_symbol(&mut r, d, p, q);
        let eps = r.gen_range(0.05..1.0);
        let fast = wick_restrict(&b, n, WickParameters::new(eps).unwrap()).unwrap();
        let slow = oracle::wick_full(&b, n, eps).unwrap();
        close(&fast.matrix, &slow, 1e-12);
    }
}

#[test]
fn symbol_evaluation_matches_tensor_contraction() {
    let mut r = rng(7);
    for _ in 0..40 {
        let d = r.gen_range(1..=3);
        let (p, q) = (r.gen_range(0..=3), r.gen_range(0..=3));
        let b = random_symbol(&mut r, d, p, q);
        let z = random_unit_vector(&mut r, d) * C64::new(r.gen_range(0.2..2.0), 0.0);
        let fast = b.evaluate(&z).unwrap();
        let slow = oracle::evaluate_full(&b, &z).unwrap();
        assert!((fast - slow).norm() <= 1e-12 * slow.norm().max(1.0));
    }
}

#[test]
fn contraction_matches_tensor_formula() {
    let mut r = rng(8);
    for _ in 0..60 {
        let d = r.gen_range(1..=3);
        let (p1, q1, p2, q2) = (
            r.gen_range(0..=3),
            r.gen_range(0..=2),
            r.gen_range(0..=2),
            r.gen_range(0..=3),
        );
        let b1 = random_symbol(&mut r, d, p1, q1);
        let b2 = random_symbol(&mut r, d, p2, q2);
        for k in 0..=p1.min(q2) {
            let fast = contract(&b1, &b2, k).unwrap();
            let slow = oracle::contraction_formula(&b1, &b2, k).unwrap();
            assert_eq!((fast.p(), fast.q()), (p1 + p2 - k, q1 + q2 - k));
            close(fast.kernel(), slow.kernel(), 1e-12);
        }
        assert!(contract(&b1, &b2, p1.min(q2) + 1).is_err());
    }
}

#[test]
fn contraction_matches_finite_differences() {
    let mut r = rng(9);
    for _ in 0..20 {
        let d = r.gen_range(1..=2);
        let (q1, p2) = (r.gen_range(0..=1), r.gen_range(0..=1));
        let b1 = random_symbol(&mut r, d, 2, q1);
        let b2 = random_symbol(&mut r, d, p2, 2);
        let z = random_unit_vector(&mut r, d);
        for k in 0..=2 {
            let exact = contract(&b1, &b2, k).unwrap().evaluate(&z).unwrap();
            let fd = oracle::contraction_fd(&b1, &b2, k, &z, 1e-4);
            assert!((exact - fd).norm() <= 1e-6 * exact.norm().max(1.0), "k={k}");
        }
    }
}

#[test]
fn quantized_products_follow_the_composition_rule() {
    let mut r = rng(10);
    for _ in 0..30 {
        let d = r.gen_range(1..=3);
        let degs: Vec<usize> = (0..4).map(|_| r.gen_range(0..=2)).collect();
        let b1 = random_symbol(&mut r, d, degs[0], degs[1]);
        let b2 = random_symbol(&mut r, d, degs[2], degs[3]);
        let n = r.gen_range(4..=6);
        let params = WickParameters::new(r.gen_range(0.1..1.0)).unwrap();
        let product = |a: &PolySymbol, b: &PolySymbol| {
            wick_restrict(a, n + b.q() - b.p(), params)
                .unwrap()
                .compose(&wick_restrict(b, n, params).unwrap())
                .unwrap()
                .matrix
        };
        let (ab, ba) = (product(&b1, &b2), product(&b2, &b1));
        let via = compose_symbols(&b1, &b2)
            .unwrap()
            .quantize(n, params)
            .unwrap()
            .unwrap();
        close(&ab, &via.matrix, 1e-11);

        let direct = &ab - &ba;
        let floor = max_abs(&ab).max(max_abs(&ba)).max(1.0);
        match commutator_symbols(&b1, &b2)
            .unwrap()
            .quantize(n, params)
            .unwrap()
        {
            Some(map) => assert!(max_abs(&(&direct - &map.matrix)) <= 1e-11 * floor),
            None => assert!(max_abs(&direct) <= 1e-12 * floor),
        }
    }
}

#[test]
fn free_precomposition_is_conjugation_by_free_dynamics() {
    let mut r = rng(11);
    for _ in 0..10 {
        let d = r.gen_range(1..=3);
        let u = random_unitary(&mut r, d);
        let p = r.gen_range(1..=3);
        let b = random_symbol(&mut r, d, p, p);
        let n = r.gen_range(p..=5);
        let params = WickParameters::mean_field(n).unwrap();
        let gamma = sym_power_matrix(&u, n).unwrap();
        let lhs = wick_restrict(&b.precompose(&u).unwrap(), n, params)
            .unwrap()
            .matrix;
        let rhs = gamma.adjoint() * wick_restrict(&b, n, params).unwrap().matrix * &gamma;
        close(&lhs, &rhs, 1e-12);
    }
    // one-body check with the model's free propagator
    let model = ModelSpec::default_dimer();
    let u = model.free_propagator(0.37);
    let expected = hermitian_exp(model.h0(), 0.37);
    close(&u, &expected, 1e-13);
}

#[test]
fn partial_trace_matches_tensor_partial_trace() {
    let mut r = rng(12);
    for (n, d) in [(2, 2), (4, 2), (3, 3)] {
        let rho = random_density_matrix(&mut r, n, d, None);
        for p in 1..=n {
            let fast = partial_trace(&rho, p).unwrap();
            let slow = oracle::reduced_density(rho.matrix(), n, p, d).unwrap();
            close(fast.matrix(), &slow, 1e-13);
        }
    }
}

#[test]
fn wick_expectation_matches_operator_trace() {
    let mut r = rng(13);
    for _ in 0..20 {
        let d = r.gen_range(1..=3);
        let n = r.gen_range(1..=5);
        let p = r.gen_range(0..=n.min(3));
        let rho = random_density_matrix(&mut r, n, d, Some(2));
        let b = random_symbol(&mut r, d, p, p);
        let params = WickParameters::mean_field(n).unwrap();
        let fast = wick_expectation(&rho, &b, params).unwrap();
        let slow = oracle::trace_of_product(
            rho.matrix(),
            &oracle::wick_full(&b, n, params.eps()).unwrap(),
        );
        assert!((fast - slow).norm() <= 1e-12 * slow.norm().max(1.0));
    }
}

#[test]
fn coherent_projector_is_rank_one() {
    let z = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
    let proj = oracle::coherent_projector(&z, 3).unwrap();
    close(&(&proj * &proj), &proj, 1e-14);
    assert!((proj.trace() - C64::new(1.0, 0.0)).norm() < 1e-14);
}
