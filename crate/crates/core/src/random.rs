//! Seeded random instances for randomized checks and the self-test suites.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::linalg::{hermitian_exp, CMatrix, CVector};
use crate::symspace::{DensityMatrix, OccupationBasis, SectorOperator};
use crate::wickcalc::PolySymbol;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry<R: Rng>(r: &mut R) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

pub fn random_vector<R: Rng>(r: &mut R, d: usize) -> CVector {
    DVector::from_fn(d, |_, _| entry(r))
}

pub fn random_unit_vector<R: Rng>(r: &mut R, d: usize) -> CVector {
    let v = random_vector(r, d);
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

pub fn random_matrix<R: Rng>(r: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| entry(r))
}

pub fn random_hermitian<R: Rng>(r: &mut R, dim: usize) -> CMatrix {
    let m = random_matrix(r, dim, dim);
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_unitary<R: Rng>(r: &mut R, dim: usize) -> CMatrix {
    hermitian_exp(&random_hermitian(r, dim), 1.3)
}

/// Random symbol of bidegree `(p, q)` on `ℂ^d`.
pub fn random_symbol<R: Rng>(r: &mut R, d: usize, p: usize, q: usize) -> PolySymbol {
    let rows = OccupationBasis::shared(q, d).expect("d ≥ 1").dim();
    let cols = OccupationBasis::shared(p, d).expect("d ≥ 1").dim();
    PolySymbol::new(d, p, q, random_matrix(r, rows, cols)).expect("shapes match")
}

/// Random Hermitian operator on `∨^n ℂ^d`.
pub fn random_sector_hermitian<R: Rng>(r: &mut R, n: usize, d: usize) -> SectorOperator {
    let basis = OccupationBasis::shared(n, d).expect("d ≥ 1");
    let m = random_hermitian(r, basis.dim());
    SectorOperator::hermitian(basis, m).expect("hermitian by construction")
}

/// Random density matrix `M M† / Tr` of the given rank (full rank if `None`).
pub fn random_density_matrix<R: Rng>(
    r: &mut R,
    n: usize,
    d: usize,
    rank: Option<usize>,
) -> DensityMatrix {
    let basis: Arc<OccupationBasis> = OccupationBasis::shared(n, d).expect("d ≥ 1");
    let dim = basis.dim();
    let m = random_matrix(r, dim, rank.unwrap_or(dim).clamp(1, dim));
    let mut rho = &m * m.adjoint();
    let tr = rho.trace();
    rho /= tr;
    DensityMatrix::new(SectorOperator::new(basis, rho).expect("square"))
        .expect("positive by construction")
}
