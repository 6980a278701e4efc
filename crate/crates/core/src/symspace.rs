//! Linear algebra on the symmetric (bosonic) sectors `∨^n ℂ^d`.
//!
//! Every sector is represented in its occupation-number basis. The basis
//! vector `|ν⟩` for an occupation `ν = (ν_1, …, ν_d)` with `Σ ν_i = n` is the
//! normalized symmetrization of `e_1^{⊗ν_1} ⊗ … ⊗ e_d^{⊗ν_d}`, and states are
//! listed in reverse-lexicographic order, so `(n,0,…)` always comes first.
//!
//! Operators built by symmetric embedding (one-body sums, pair sums, Wick
//! quantizations) are all computed through the same ladder identity: the
//! restriction of a full-tensor kernel `K` to `∨^n` equals
//! `Σ_{κ,μ} K_{κμ} √(q! p! / κ! μ!) a†^κ a^μ` with unit-normalized ladder
//! operators. No `d^n` tensors are ever formed here.

use std::collections::HashMap;
use std::io::{self, Write};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    binomial, falling_ratio, hermiticity_defect, hermitize, ln_factorial, unitarity_defect,
    CMatrix, CVector, ONE, ZERO,
};

/// Hermiticity tolerance used when tagging operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a density matrix.
pub const POSITIVITY_TOL: f64 = -1e-10;

/// Ordered occupation-number basis of the sector `∨^n ℂ^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationBasis {
    n: usize,
    d: usize,
    states: Vec<Vec<usize>>,
}

type BasisCache = HashMap<(usize, usize), Arc<OccupationBasis>>;

impl OccupationBasis {
    /// Shared, cached basis for `(n, d)`.
    pub fn shared(n: usize, d: usize) -> Result<Arc<OccupationBasis>> {
        static CACHE: OnceLock<Mutex<BasisCache>> = OnceLock::new();
        if d == 0 {
            return Err(Error::ZeroModes(d));
        }
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(&(n, d)) {
            return Ok(Arc::clone(b));
        }
        let basis = Arc::new(enumerate_basis(n, d)?);
        let mut guard = cache.lock().expect("basis cache poisoned");
        Ok(Arc::clone(guard.entry((n, d)).or_insert(basis)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[usize] {
        &self.states[i]
    }

    /// Position of an occupation vector, computed combinatorially.
    pub fn index_of(&self, nu: &[usize]) -> Option<usize> {
        if nu.len() != self.d || nu.iter().sum::<usize>() != self.n {
            return None;
        }
        let mut idx = 0;
        let mut rem = self.n;
        for (i, &c) in nu.iter().enumerate().take(self.d - 1) {
            let m = self.d - i;
            // vectors whose i-th entry exceeds c come first
            idx += binomial(rem - c + m - 2, m - 1);
            rem -= c;
        }
        Some(idx)
    }
}

/// Enumerate the occupation basis of `∨^n ℂ^d` in reverse-lexicographic order.
pub fn enumerate_basis(n: usize, d: usize) -> Result<OccupationBasis> {
    if d == 0 {
        return Err(Error::ZeroModes(d));
    }
    fn fill(rem: usize, modes: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if modes == 1 {
            prefix.push(rem);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=rem).rev() {
            prefix.push(c);
            fill(rem - c, modes - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut states = Vec::with_capacity(binomial(n + d - 1, d - 1));
    fill(n, d, &mut Vec::with_capacity(d), &mut states);
    Ok(OccupationBasis { n, d, states })
}

/// Cached eigendecomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

/// Dense operator on one symmetric sector.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    basis: Arc<OccupationBasis>,
    matrix: CMatrix,
    hermitian: bool,
    spectral: OnceLock<Arc<Spectral>>,
}

impl SectorOperator {
    /// Wrap a matrix. A matrix within [`HERMITIAN_TOL`] of its adjoint is
    /// symmetrized exactly and tagged Hermitian.
    pub fn new(basis: Arc<OccupationBasis>, mut matrix: CMatrix) -> Result<Self> {
        let dim = basis.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: if matrix.nrows() != dim {
                    matrix.nrows()
                } else {
                    matrix.ncols()
                },
                context: "sector operator side",
            });
        }
        let hermitian = hermiticity_defect(&matrix) <= HERMITIAN_TOL;
        if hermitian {
            hermitize(&mut matrix);
        }
        Ok(SectorOperator {
            basis,
            matrix,
            hermitian,
            spectral: OnceLock::new(),
        })
    }

    /// Like [`SectorOperator::new`] but fails unless the matrix is Hermitian.
    pub fn hermitian(basis: Arc<OccupationBasis>, matrix: CMatrix) -> Result<Self> {
        let defect = hermiticity_defect(&matrix);
        let op = Self::new(basis, matrix)?;
        if op.hermitian {
            Ok(op)
        } else {
            Err(Error::NotHermitian(defect))
        }
    }

    pub fn zeros(basis: Arc<OccupationBasis>) -> Self {
        let dim = basis.dim();
        SectorOperator {
            basis,
            matrix: CMatrix::zeros(dim, dim),
            hermitian: true,
            spectral: OnceLock::new(),
        }
    }

    pub fn identity(basis: Arc<OccupationBasis>) -> Self {
        let dim = basis.dim();
        SectorOperator {
            basis,
            matrix: CMatrix::identity(dim, dim),
            hermitian: true,
            spectral: OnceLock::new(),
        }
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigendecomposition, computed on first use and cached.
    pub fn spectral(&self) -> Result<Arc<Spectral>> {
        if !self.hermitian {
            return Err(Error::NotHermitian(hermiticity_defect(&self.matrix)));
        }
        let s = self.spectral.get_or_init(|| {
            let eig = SymmetricEigen::new(self.matrix.clone());
            Arc::new(Spectral {
                values: eig.eigenvalues,
                vectors: eig.eigenvectors,
            })
        });
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "eigendecomposition produced non-finite eigenvalues".into(),
            ));
        }
        Ok(Arc::clone(s))
    }

    fn same_sector(&self, other: &SectorOperator) -> Result<()> {
        if self.basis.n() != other.basis.n() || self.basis.d() != other.basis.d() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
                context: "operators on different sectors",
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &SectorOperator) -> Result<SectorOperator> {
        self.same_sector(other)?;
        SectorOperator::new(Arc::clone(&self.basis), &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &SectorOperator) -> Result<SectorOperator> {
        self.same_sector(other)?;
        SectorOperator::new(Arc::clone(&self.basis), &self.matrix - &other.matrix)
    }

    pub fn scale(&self, factor: f64) -> SectorOperator {
        SectorOperator {
            basis: Arc::clone(&self.basis),
            matrix: &self.matrix * C64::new(factor, 0.0),
            hermitian: self.hermitian,
            spectral: OnceLock::new(),
        }
    }

    /// Debug dump: one `i,j,re,im` row per entry in basis order.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.matrix[(i, j)];
                writeln!(w, "{i},{j},{:.16e},{:.16e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Validated density matrix on a symmetric sector.
#[derive(Debug, Clone)]
pub struct DensityMatrix(SectorOperator);

impl DensityMatrix {
    /// Validate Hermiticity, unit trace and positivity.
    pub fn new(op: SectorOperator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (defect {:e})",
                hermiticity_defect(op.matrix())
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min = op
            .matrix()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix(op))
    }

    /// Skips the eigenvalue check; for results of trace- and
    /// positivity-preserving maps applied to valid input.
    pub(crate) fn trusted(op: SectorOperator) -> Self {
        debug_assert!(op.is_hermitian());
        DensityMatrix(op)
    }

    /// Pure state `|ψ⟩⟨ψ|`.
    pub fn pure(basis: Arc<OccupationBasis>, psi: &CVector) -> Result<Self> {
        Self::ensemble(basis, &[(1.0, psi.clone())])
    }

    /// Mixture `Σ w_j |ψ_j⟩⟨ψ_j|` of unit vectors.
    pub fn ensemble(basis: Arc<OccupationBasis>, parts: &[(f64, CVector)]) -> Result<Self> {
        let dim = basis.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, psi) in parts {
            if psi.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: psi.len(),
                    context: "state vector",
                });
            }
            if *w < 0.0 {
                return Err(Error::InvalidDensityMatrix(format!("negative weight {w}")));
            }
            m += psi * psi.adjoint() * C64::new(*w, 0.0);
        }
        let op = SectorOperator::new(basis, m)?;
        if (op.trace() - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {} differs from 1",
                op.trace()
            )));
        }
        Ok(DensityMatrix::trusted(op))
    }

    pub fn operator(&self) -> &SectorOperator {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        self.0.basis()
    }

    pub fn n(&self) -> usize {
        self.0.basis().n()
    }

    pub fn into_operator(self) -> SectorOperator {
        self.0
    }
}

/// Amplitudes of `z^{⊗n}` in the occupation basis:
/// `√(n!/ν!) Π z_i^{ν_i}`. No normalization is assumed.
pub fn tensor_power_amplitudes(z: &CVector, basis: &OccupationBasis) -> Result<CVector> {
    if z.len() != basis.d() {
        return Err(Error::DimensionMismatch {
            expected: basis.d(),
            found: z.len(),
            context: "one-particle vector",
        });
    }
    let ln_n = ln_factorial(basis.n());
    let lnf: Vec<f64> = (0..=basis.n()).map(ln_factorial).collect();
    let amps = basis.states().iter().map(|nu| {
        let mut amp = C64::new(
            (0.5 * (ln_n - nu.iter().map(|&k| lnf[k]).sum::<f64>())).exp(),
            0.0,
        );
        for (zi, &k) in z.iter().zip(nu) {
            if k > 0 {
                amp *= zi.powu(k as u32);
            }
        }
        amp
    });
    Ok(CVector::from_iterator(basis.dim(), amps))
}

/// `φ^{⊗n}` for a unit vector `φ`.
pub fn sym_power_state(phi: &CVector, n: usize) -> Result<CVector> {
    let norm = phi.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(norm));
    }
    let basis = OccupationBasis::shared(n, phi.len())?;
    tensor_power_amplitudes(phi, &basis)
}

/// Restriction of `M^{⊗n}` to `∨^n` for an arbitrary `d×d` matrix.
pub fn sym_power_matrix(m: &CMatrix, n: usize) -> Result<CMatrix> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.ncols(),
            context: "one-particle matrix must be square",
        });
    }
    let bases: Vec<Arc<OccupationBasis>> = (0..=n)
        .map(|k| OccupationBasis::shared(k, d))
        .collect::<Result<_>>()?;
    let target = &bases[n];
    let lnf: Vec<f64> = (0..=n).map(ln_factorial).collect();
    let ln_occ = |nu: &[usize]| nu.iter().map(|&k| lnf[k]).sum::<f64>();
    let mut out = CMatrix::zeros(target.dim(), target.dim());
    for (col, nu) in target.states().iter().enumerate() {
        // expand Π_i (Σ_j m_{ji} x_j)^{ν_i} as a polynomial in creation operators
        let mut poly = vec![ONE];
        let mut degree = 0;
        for (i, &count) in nu.iter().enumerate() {
            for _ in 0..count {
                let next_basis = &bases[degree + 1];
                let mut next = vec![ZERO; next_basis.dim()];
                for (a, &c) in poly.iter().enumerate() {
                    if c == ZERO {
                        continue;
                    }
                    let mut alpha = bases[degree].state(a).to_vec();
                    for j in 0..d {
                        let mji = m[(j, i)];
                        if mji == ZERO {
                            continue;
                        }
                        alpha[j] += 1;
                        let idx = next_basis.index_of(&alpha).expect("occupation in range");
                        next[idx] += c * mji;
                        alpha[j] -= 1;
                    }
                }
                poly = next;
                degree += 1;
            }
        }
        let ln_src = ln_occ(nu);
        for (row, &c) in poly.iter().enumerate() {
            if c != ZERO {
                let scale = (0.5 * (ln_occ(target.state(row)) - ln_src)).exp();
                out[(row, col)] = c * scale;
            }
        }
    }
    Ok(out)
}

/// Restriction of `U^{⊗n}` to `∨^n` for a unitary `U`.
pub fn sym_power_unitary(u: &CMatrix, n: usize) -> Result<SectorOperator> {
    let defect = unitarity_defect(u);
    if defect > 1e-12 {
        return Err(Error::NotUnitary(defect));
    }
    let basis = OccupationBasis::shared(n, u.nrows())?;
    SectorOperator::new(basis, sym_power_matrix(u, n)?)
}

/// Matrix of `Σ_{κ,μ} K_{κμ} √(q!p!/κ!μ!) a†^κ a^μ` from sector `source`
/// to sector `source.n - p + q`, where `K` is indexed by the `q`-sector
/// (rows) and `p`-sector (columns) occupation bases.
pub(crate) fn ladder_matrix(
    kernel: &CMatrix,
    p_basis: &OccupationBasis,
    q_basis: &OccupationBasis,
    source: &OccupationBasis,
    target: &OccupationBasis,
) -> CMatrix {
    let mut out = CMatrix::zeros(target.dim(), source.dim());
    if source.n() < p_basis.n() {
        return out;
    }
    let p = p_basis.n();
    let q = q_basis.n();
    let lnf: Vec<f64> = (0..=p.max(q)).map(ln_factorial).collect();
    let norm_weight = |nu: &[usize], deg: usize| {
        (0.5 * (lnf[deg] - nu.iter().map(|&k| lnf[k]).sum::<f64>())).exp()
    };
    let p_weights: Vec<f64> = p_basis
        .states()
        .iter()
        .map(|mu| norm_weight(mu, p))
        .collect();
    let q_weights: Vec<f64> = q_basis
        .states()
        .iter()
        .map(|ka| norm_weight(ka, q))
        .collect();
    let d = source.d();
    let mut lambda = vec![0usize; d];
    let mut nu_out = vec![0usize; d];
    for (col, nu) in source.states().iter().enumerate() {
        for (mi, mu) in p_basis.states().iter().enumerate() {
            if mu.iter().zip(nu).any(|(m, v)| m > v) {
                continue;
            }
            for k in 0..d {
                lambda[k] = nu[k] - mu[k];
            }
            let w_in = (falling_ratio(nu, &lambda)).sqrt() * p_weights[mi];
            for (ki, kappa) in q_basis.states().iter().enumerate() {
                let coef = kernel[(ki, mi)];
                if coef == ZERO {
                    continue;
                }
                for k in 0..d {
                    nu_out[k] = lambda[k] + kappa[k];
                }
                let row = target
                    .index_of(&nu_out)
                    .expect("target occupation in range");
                let w = w_in * falling_ratio(&nu_out, &lambda).sqrt() * q_weights[ki];
                out[(row, col)] += coef * w;
            }
        }
    }
    out
}

/// `ε Σ_k 1^{⊗(k-1)} ⊗ h ⊗ 1^{⊗(n-k)}` restricted to `∨^n`.
pub fn embed_one_body(h: &CMatrix, n: usize, eps: f64) -> Result<SectorOperator> {
    let d = h.nrows();
    if h.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h.ncols(),
            context: "one-body operator must be square",
        });
    }
    if n == 0 {
        return Err(Error::InvalidParticleNumber(
            "one-body embedding needs n ≥ 1".into(),
        ));
    }
    let one = OccupationBasis::shared(1, d)?;
    let basis = OccupationBasis::shared(n, d)?;
    let m = ladder_matrix(h, &one, &one, &basis, &basis) * C64::new(eps, 0.0);
    SectorOperator::new(basis, m)
}

/// `coupling · Σ_{i<j} (2Q̃)_{ij}` restricted to `∨^n`, for a Hermitian
/// pair kernel `Q̃` on the two-particle sector.
pub fn embed_pair(pair: &SectorOperator, n: usize, coupling: f64) -> Result<SectorOperator> {
    if pair.basis().n() != 2 {
        return Err(Error::InvalidParticleNumber(format!(
            "pair kernel must act on the 2-particle sector, got n = {}",
            pair.basis().n()
        )));
    }
    if !pair.is_hermitian() {
        return Err(Error::NotHermitian(hermiticity_defect(pair.matrix())));
    }
    if n < 2 {
        return Err(Error::InvalidParticleNumber(format!(
            "pair embedding needs n ≥ 2, got {n}"
        )));
    }
    let d = pair.basis().d();
    let basis = OccupationBasis::shared(n, d)?;
    let m = ladder_matrix(pair.matrix(), pair.basis(), pair.basis(), &basis, &basis)
        * C64::new(coupling, 0.0);
    SectorOperator::new(basis, m)
}

/// Reduced `p`-particle density matrix, defined by
/// `Tr[ρ^{(p)} A] = Tr[ρ (A ⊗ 1^{⊗(n-p)})]` for all `A` on `∨^p`.
pub fn partial_trace(rho: &DensityMatrix, p: usize) -> Result<DensityMatrix> {
    let n = rho.n();
    if p == 0 || p > n {
        return Err(Error::InvalidParticleNumber(format!(
            "partial trace needs 1 ≤ p ≤ n, got p = {p}, n = {n}"
        )));
    }
    if p == n {
        return Ok(rho.clone());
    }
    let d = rho.basis().d();
    let full = rho.basis();
    let small = OccupationBasis::shared(p, d)?;
    let rest = OccupationBasis::shared(n - p, d)?;
    let lnf: Vec<f64> = (0..=n).map(ln_factorial).collect();
    let ln_occ = |nu: &[usize]| nu.iter().map(|&k| lnf[k]).sum::<f64>();
    // 1 / C(n, p)
    let ln_norm = lnf[p] + lnf[n - p] - lnf[n];

    let dim_p = small.dim();
    let mut index_sum = vec![vec![0usize; dim_p]; rest.dim()];
    let mut weight = vec![vec![0.0f64; dim_p]; rest.dim()];
    let mut buf = vec![0usize; d];
    for (li, lambda) in rest.states().iter().enumerate() {
        let ln_lambda = ln_occ(lambda);
        for (mi, mu) in small.states().iter().enumerate() {
            for k in 0..d {
                buf[k] = lambda[k] + mu[k];
            }
            index_sum[li][mi] = full.index_of(&buf).expect("occupation in range");
            // √((λ+μ)! / (λ! μ!))
            weight[li][mi] = 0.5 * (ln_occ(&buf) - ln_lambda - ln_occ(mu));
        }
    }
    let m = rho.matrix();
    let mut out = CMatrix::zeros(dim_p, dim_p);
    for mi in 0..dim_p {
        for ki in mi..dim_p {
            let mut acc = ZERO;
            for li in 0..rest.dim() {
                let w = (ln_norm + weight[li][mi] + weight[li][ki]).exp();
                acc += m[(index_sum[li][mi], index_sum[li][ki])] * w;
            }
            out[(mi, ki)] = acc;
            out[(ki, mi)] = acc.conj();
        }
    }
    DensityMatrix::new(SectorOperator::new(small, out)?)
}

/// Trace norm of a Hermitian operator: the sum of absolute eigenvalues.
pub fn trace_norm(delta: &SectorOperator) -> Result<f64> {
    if !delta.is_hermitian() {
        return Err(Error::NotHermitian(hermiticity_defect(delta.matrix())));
    }
    Ok(delta
        .matrix()
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.abs())
        .sum())
}

/// `‖ρ - σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    trace_norm(&rho.operator().sub(sigma.operator())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn two_modes_two_particles() {
        let b = enumerate_basis(2, 2).unwrap();
        assert_eq!(b.states(), &[vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn vacuum_sector() {
        let b = enumerate_basis(0, 4).unwrap();
        assert_eq!(b.states(), &[vec![0, 0, 0, 0]]);
    }

    #[test]
    fn dimension_law_and_ranking() {
        for d in 1..=4 {
            for n in 0..=7 {
                let b = enumerate_basis(n, d).unwrap();
                assert_eq!(b.dim(), binomial(n + d - 1, d - 1));
                for (i, s) in b.states().iter().enumerate() {
                    assert_eq!(s.iter().sum::<usize>(), n);
                    assert_eq!(b.index_of(s), Some(i));
                }
                for w in b.states().windows(2) {
                    assert!(w[0] > w[1], "strict reverse-lexicographic order");
                }
            }
        }
        assert_eq!(enumerate_basis(3, 3).unwrap().dim(), 10);
    }

    #[test]
    fn rejects_zero_modes() {
        assert_eq!(enumerate_basis(3, 0), Err(Error::ZeroModes(0)));
    }

    #[test]
    fn power_of_basis_vector() {
        let e1 = CVector::from_vec(vec![ONE, ZERO]);
        let psi = sym_power_state(&e1, 3).unwrap();
        assert_eq!(psi[0], ONE);
        assert!(psi.iter().skip(1).all(|z| *z == ZERO));
    }

    #[test]
    fn power_of_balanced_vector() {
        let s = 0.5_f64.sqrt();
        let phi = CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let psi = sym_power_state(&phi, 2).unwrap();
        let expected = [0.5, s, 0.5];
        for (a, e) in psi.iter().zip(expected) {
            assert!((a - c(e, 0.0)).norm() < 1e-15);
        }
        assert!((psi.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_one_is_identity() {
        let phi = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let psi = sym_power_state(&phi, 1).unwrap();
        assert!((psi - phi).norm() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized() {
        let phi = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            sym_power_state(&phi, 2),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn swap_unitary_on_two_particles() {
        let swap = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let u = sym_power_unitary(&swap, 2).unwrap();
        let expected =
            CMatrix::from_row_slice(3, 3, &[ZERO, ZERO, ONE, ZERO, ONE, ZERO, ONE, ZERO, ZERO]);
        assert!((u.matrix() - expected).norm() < 1e-15);
        let id = sym_power_unitary(&CMatrix::identity(3, 3), 4).unwrap();
        assert!((id.matrix() - CMatrix::identity(15, 15)).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(
            sym_power_unitary(&m, 2),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn one_body_examples() {
        let id = CMatrix::identity(3, 3);
        let op = embed_one_body(&id, 5, 0.2).unwrap();
        assert!((op.matrix() - CMatrix::identity(op.dim(), op.dim())).norm() < 1e-14);

        let h = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.3, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(-1.0, 0.0)],
        );
        assert!((embed_one_body(&h, 1, 1.0).unwrap().matrix() - &h).norm() < 1e-15);

        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let op = embed_one_body(&x, 2, 1.0).unwrap();
        assert!((op.matrix()[(0, 1)] - c(2f64.sqrt(), 0.0)).norm() < 1e-14);
        assert!(op.is_hermitian());
    }

    #[test]
    fn pair_examples() {
        let two = OccupationBasis::shared(2, 2).unwrap();
        let zero = SectorOperator::zeros(Arc::clone(&two));
        assert_eq!(embed_pair(&zero, 5, 1.0).unwrap().matrix().norm(), 0.0);

        // 2Q̃ = g · (projector onto same-mode pairs)
        let g = 0.7;
        let mut q = CMatrix::zeros(3, 3);
        q[(0, 0)] = c(g / 2.0, 0.0);
        q[(2, 2)] = c(g / 2.0, 0.0);
        let q = SectorOperator::hermitian(Arc::clone(&two), q).unwrap();
        let op = embed_pair(&q, 6, 1.0).unwrap();
        for (i, nu) in op.basis().states().iter().enumerate() {
            let pairs = binomial(nu[0], 2) + binomial(nu[1], 2);
            assert!((op.matrix()[(i, i)] - c(g * pairs as f64, 0.0)).norm() < 1e-13);
        }
        let n2 = embed_pair(&q, 2, 1.0).unwrap();
        assert!((n2.matrix() - q.matrix() * c(2.0, 0.0)).norm() < 1e-14);
        assert!(embed_pair(&q, 1, 1.0).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let phi = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]);
        let rho = DensityMatrix::pure(
            OccupationBasis::shared(5, 3).unwrap(),
            &sym_power_state(&phi, 5).unwrap(),
        )
        .unwrap();
        for p in 1..=5 {
            let red = partial_trace(&rho, p).unwrap();
            let v = sym_power_state(&phi, p).unwrap();
            let expected = &v * v.adjoint();
            assert!((red.matrix() - expected).norm() < 1e-13, "p = {p}");
        }
    }

    #[test]
    fn partial_trace_of_twin_pair() {
        let basis = OccupationBasis::shared(4, 2).unwrap();
        let mut psi = CVector::zeros(basis.dim());
        psi[basis.index_of(&[2, 2]).unwrap()] = ONE;
        let rho = DensityMatrix::pure(basis, &psi).unwrap();
        let red = partial_trace(&rho, 2).unwrap();
        let expected = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0];
        for (i, &diag) in expected.iter().enumerate() {
            for j in 0..3 {
                let e = if i == j { diag } else { 0.0 };
                assert!((red.matrix()[(i, j)] - c(e, 0.0)).norm() < 1e-15);
            }
        }
        assert!(partial_trace(&rho, 5).is_err());
        assert!(partial_trace(&rho, 0).is_err());
        let same = partial_trace(&rho, 4).unwrap();
        assert_eq!(same.matrix(), rho.matrix());
    }

    #[test]
    fn trace_norm_examples() {
        let b = OccupationBasis::shared(2, 2).unwrap();
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(-1.0 / 12.0, 0.0),
            c(1.0 / 6.0, 0.0),
            c(-1.0 / 12.0, 0.0),
        ]));
        let op = SectorOperator::new(Arc::clone(&b), diag).unwrap();
        assert!((trace_norm(&op).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            trace_norm(&SectorOperator::zeros(Arc::clone(&b))).unwrap(),
            0.0
        );

        let mut e0 = CVector::zeros(3);
        e0[0] = ONE;
        let mut e2 = CVector::zeros(3);
        e2[2] = ONE;
        let r0 = DensityMatrix::pure(Arc::clone(&b), &e0).unwrap();
        let r2 = DensityMatrix::pure(Arc::clone(&b), &e2).unwrap();
        assert!((trace_distance(&r0, &r2).unwrap() - 2.0).abs() < 1e-14);

        let skew =
            CMatrix::from_row_slice(3, 3, &[ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO]);
        let op = SectorOperator::new(b, skew).unwrap();
        assert!(matches!(trace_norm(&op), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn dump_format() {
        let b = OccupationBasis::shared(1, 2).unwrap();
        let op = SectorOperator::identity(b);
        let mut out = Vec::new();
        op.dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "0,0,1.0000000000000000e0,0.0000000000000000e0");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn sym_power_is_unitary() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.1, 0.0),
                c(0.2, 0.3),
                c(0.0, -0.4),
                c(0.2, -0.3),
                c(-0.5, 0.0),
                c(0.7, 0.0),
                c(0.0, 0.4),
                c(0.7, 0.0),
                c(0.9, 0.0),
            ],
        );
        let u = crate::linalg::hermitian_exp(&h, 0.8);
        let su = sym_power_unitary(&u, 4).unwrap();
        assert!(unitarity_defect(su.matrix()) < 1e-12);
        assert!((operator_norm(su.matrix()) - 1.0).abs() < 1e-12);
    }
}
