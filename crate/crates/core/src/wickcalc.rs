//! Symbol calculus for homogeneous polynomials and their Wick quantization.
//!
//! A symbol `b ∈ P_{p,q}` is stored through its kernel `b̃ : ∨^p → ∨^q`, so
//! that `b(z) = ⟨z^{⊗q}, b̃ z^{⊗p}⟩`. The derivative pairings
//! `∂_z^k b₁ · ∂_z̄^k b₂` are carried out on the monomial expansion
//! `b(z) = Σ c_{κμ} z̄^κ z^μ`, which is in bijection with the kernel through
//! `c_{κμ} = b̃_{κμ} √(q!/κ!) √(p!/μ!)`.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    factorial, falling_ratio, ln_factorial, operator_norm, trace_product, CMatrix, CVector, ZERO,
};
use crate::symspace::{
    ladder_matrix, partial_trace, sym_power_matrix, tensor_power_amplitudes, DensityMatrix,
    OccupationBasis, SectorOperator,
};

/// Homogeneous polynomial of bidegree `(p, q)` on `ℂ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySymbol {
    d: usize,
    p: usize,
    q: usize,
    kernel: CMatrix,
}

impl PolySymbol {
    /// `kernel` has `dim ∨^q` rows and `dim ∨^p` columns.
    pub fn new(d: usize, p: usize, q: usize, kernel: CMatrix) -> Result<Self> {
        let rows = OccupationBasis::shared(q, d)?.dim();
        let cols = OccupationBasis::shared(p, d)?.dim();
        if kernel.nrows() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: kernel.nrows(),
                context: "symbol kernel rows (output degree)",
            });
        }
        if kernel.ncols() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: kernel.ncols(),
                context: "symbol kernel columns (input degree)",
            });
        }
        if kernel
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Numerical("non-finite symbol kernel".into()));
        }
        Ok(PolySymbol { d, p, q, kernel })
    }

    pub fn zero(d: usize, p: usize, q: usize) -> Result<Self> {
        let rows = OccupationBasis::shared(q, d)?.dim();
        let cols = OccupationBasis::shared(p, d)?.dim();
        Self::new(d, p, q, CMatrix::zeros(rows, cols))
    }

    /// Symbol of a sector operator `A` on `∨^p`: `⟨z^{⊗p}, A z^{⊗p}⟩`.
    pub fn from_operator(op: &SectorOperator) -> Self {
        let b = op.basis();
        PolySymbol {
            d: b.d(),
            p: b.n(),
            q: b.n(),
            kernel: op.matrix().clone(),
        }
    }

    /// `‖z‖^{2p}`, whose kernel is the identity on `∨^p`.
    pub fn identity(d: usize, p: usize) -> Result<Self> {
        let dim = OccupationBasis::shared(p, d)?.dim();
        Self::new(d, p, p, CMatrix::identity(dim, dim))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kernel(&self) -> &CMatrix {
        &self.kernel
    }

    pub fn kernel_norm(&self) -> f64 {
        operator_norm(&self.kernel)
    }

    fn same_space(&self, other: &PolySymbol) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
                context: "symbols over different one-particle spaces",
            });
        }
        Ok(())
    }

    fn same_degrees(&self, other: &PolySymbol) -> Result<()> {
        self.same_space(other)?;
        if self.p != other.p || self.q != other.q {
            return Err(Error::InvalidParameter(format!(
                "cannot add symbols of bidegree ({},{}) and ({},{})",
                self.p, self.q, other.p, other.q
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &PolySymbol) -> Result<PolySymbol> {
        self.same_degrees(other)?;
        Ok(PolySymbol {
            kernel: &self.kernel + &other.kernel,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &PolySymbol) -> Result<PolySymbol> {
        self.same_degrees(other)?;
        Ok(PolySymbol {
            kernel: &self.kernel - &other.kernel,
            ..self.clone()
        })
    }

    pub fn scale(&self, factor: C64) -> PolySymbol {
        PolySymbol {
            kernel: &self.kernel * factor,
            ..self.clone()
        }
    }

    /// The symbol `z ↦ b(U z)` for a `d×d` matrix `U`.
    pub fn precompose(&self, u: &CMatrix) -> Result<PolySymbol> {
        if u.nrows() != self.d || u.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: u.nrows(),
                context: "linear map composed with a symbol",
            });
        }
        let left = sym_power_matrix(u, self.q)?.adjoint();
        let right = sym_power_matrix(u, self.p)?;
        Ok(PolySymbol {
            kernel: left * &self.kernel * right,
            ..self.clone()
        })
    }

    /// `b(z) = ⟨z^{⊗q}, b̃ z^{⊗p}⟩`.
    pub fn evaluate(&self, z: &CVector) -> Result<C64> {
        evaluate(self, z)
    }

    /// Monomial coefficients `c_{κμ}` of `z̄^κ z^μ`.
    fn coefficients(&self) -> CMatrix {
        let (wq, wp) = (
            degree_weights(self.q, self.d),
            degree_weights(self.p, self.d),
        );
        CMatrix::from_fn(self.kernel.nrows(), self.kernel.ncols(), |i, j| {
            self.kernel[(i, j)] * (wq[i] * wp[j])
        })
    }

    fn from_coefficients(d: usize, p: usize, q: usize, coef: CMatrix) -> Result<Self> {
        let (wq, wp) = (degree_weights(q, d), degree_weights(p, d));
        let kernel = CMatrix::from_fn(coef.nrows(), coef.ncols(), |i, j| {
            coef[(i, j)] / (wq[i] * wp[j])
        });
        Self::new(d, p, q, kernel)
    }
}

/// `√(n!/ν!)` for every occupation `ν` of `∨^n ℂ^d`.
fn degree_weights(n: usize, d: usize) -> Vec<f64> {
    let basis = OccupationBasis::shared(n, d).expect("d ≥ 1 checked at construction");
    let ln_n = ln_factorial(n);
    basis
        .states()
        .iter()
        .map(|nu| (0.5 * (ln_n - nu.iter().map(|&k| ln_factorial(k)).sum::<f64>())).exp())
        .collect()
}

/// Evaluate `b(z) = ⟨z^{⊗q}, b̃ z^{⊗p}⟩`.
pub fn evaluate(b: &PolySymbol, z: &CVector) -> Result<C64> {
    let zp = tensor_power_amplitudes(z, &*OccupationBasis::shared(b.p, b.d)?)?;
    let zq = tensor_power_amplitudes(z, &*OccupationBasis::shared(b.q, b.d)?)?;
    Ok(zq.dotc(&(&b.kernel * zp)))
}

/// The pairing `∂_z^k b₁ · ∂_z̄^k b₂ ∈ P_{p₁+p₂-k, q₁+q₂-k}`.
///
/// The holomorphic derivatives of `b₁` are paired with the antiholomorphic
/// derivatives of `b₂`, summed over all `k`-tuples of mode indices.
pub fn contract(b1: &PolySymbol, b2: &PolySymbol, k: usize) -> Result<PolySymbol> {
    b1.same_space(b2)?;
    let max = b1.p.min(b2.q);
    if k > max {
        return Err(Error::ContractionOrder { k, max });
    }
    let d = b1.d;
    let (p, q) = (b1.p + b2.p - k, b1.q + b2.q - k);
    let out_p = OccupationBasis::shared(p, d)?;
    let out_q = OccupationBasis::shared(q, d)?;
    let basis_p1 = OccupationBasis::shared(b1.p, d)?;
    let basis_q1 = OccupationBasis::shared(b1.q, d)?;
    let basis_p2 = OccupationBasis::shared(b2.p, d)?;
    let basis_q2 = OccupationBasis::shared(b2.q, d)?;
    let basis_k = OccupationBasis::shared(k, d)?;
    let c1 = b1.coefficients();
    let c2 = b2.coefficients();
    let k_fact = factorial(k);

    let mut out = CMatrix::zeros(out_q.dim(), out_p.dim());
    let mut mu_rest = vec![0usize; d];
    let mut kappa_rest = vec![0usize; d];
    let mut kappa = vec![0usize; d];
    let mut mu = vec![0usize; d];
    for (k1i, kappa1) in basis_q1.states().iter().enumerate() {
        for (m1i, mu1) in basis_p1.states().iter().enumerate() {
            let a = c1[(k1i, m1i)];
            if a == ZERO {
                continue;
            }
            for tau in basis_k.states() {
                if tau.iter().zip(mu1).any(|(t, m)| t > m) {
                    continue;
                }
                for i in 0..d {
                    mu_rest[i] = mu1[i] - tau[i];
                }
                // Σ over index tuples with occupation τ: k!/τ! of them
                let multiplicity = k_fact / tau.iter().map(|&t| factorial(t)).product::<f64>();
                let f1 = falling_ratio(mu1, &mu_rest) * multiplicity;
                for (k2i, kappa2) in basis_q2.states().iter().enumerate() {
                    if tau.iter().zip(kappa2).any(|(t, c)| t > c) {
                        continue;
                    }
                    for i in 0..d {
                        kappa_rest[i] = kappa2[i] - tau[i];
                        kappa[i] = kappa1[i] + kappa_rest[i];
                    }
                    let f = f1 * falling_ratio(kappa2, &kappa_rest);
                    let row = out_q.index_of(&kappa).expect("degree bookkeeping");
                    for (m2i, mu2) in basis_p2.states().iter().enumerate() {
                        let b = c2[(k2i, m2i)];
                        if b == ZERO {
                            continue;
                        }
                        for i in 0..d {
                            mu[i] = mu_rest[i] + mu2[i];
                        }
                        let col = out_p.index_of(&mu).expect("degree bookkeeping");
                        out[(row, col)] += a * b * f;
                    }
                }
            }
        }
    }
    PolySymbol::from_coefficients(d, p, q, out)
}

/// Multiple Poisson bracket
/// `{b₁,b₂}^{(k)} = ∂_z^k b₁·∂_z̄^k b₂ − ∂_z^k b₂·∂_z̄^k b₁`.
/// A contraction whose order exceeds the available degrees counts as zero.
pub fn poisson(b1: &PolySymbol, b2: &PolySymbol, k: usize) -> Result<PolySymbol> {
    b1.same_space(b2)?;
    let first_ok = k <= b1.p.min(b2.q);
    let second_ok = k <= b2.p.min(b1.q);
    if k == 0 || !(first_ok || second_ok) {
        return Err(Error::ContractionOrder {
            k,
            max: b1.p.min(b2.q).max(b2.p.min(b1.q)),
        });
    }
    let (p, q) = (b1.p + b2.p - k, b1.q + b2.q - k);
    let mut out = PolySymbol::zero(b1.d, p, q)?;
    if first_ok {
        out = out.add(&contract(b1, b2, k)?)?;
    }
    if second_ok {
        out = out.sub(&contract(b2, b1, k)?)?;
    }
    Ok(out)
}

/// Mean-field parameter `ε > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WickParameters {
    eps: f64,
}

impl WickParameters {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ε must be positive, got {eps}"
            )));
        }
        Ok(WickParameters { eps })
    }

    /// `ε = 1/n`.
    pub fn mean_field(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParticleNumber("ε = 1/n needs n ≥ 1".into()));
        }
        Self::new(1.0 / n as f64)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Dense linear map between two symmetric sectors.
#[derive(Debug, Clone)]
pub struct SectorMap {
    pub source: Arc<OccupationBasis>,
    pub target: Arc<OccupationBasis>,
    pub matrix: CMatrix,
}

impl SectorMap {
    /// View a sector-preserving map as a [`SectorOperator`].
    pub fn into_operator(self) -> Result<SectorOperator> {
        if self.source.n() != self.target.n() {
            return Err(Error::InvalidParticleNumber(format!(
                "map from sector {} to sector {} is not an operator on one sector",
                self.source.n(),
                self.target.n()
            )));
        }
        SectorOperator::new(self.source, self.matrix)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SectorMap) -> Result<SectorMap> {
        if other.target.n() != self.source.n() {
            return Err(Error::InvalidParticleNumber(format!(
                "cannot compose: inner map ends in sector {}, outer starts in {}",
                other.target.n(),
                self.source.n()
            )));
        }
        Ok(SectorMap {
            source: Arc::clone(&other.source),
            target: Arc::clone(&self.target),
            matrix: &self.matrix * &other.matrix,
        })
    }
}

/// Matrix of `b^{Wick}` from `∨^n` to `∨^{n-p+q}`:
/// `1_{[p,∞)}(n) √(n!(n+q-p)!)/(n-p)! ε^{(p+q)/2} S_{n-p+q}(b̃ ⊗ 1^{⊗(n-p)})`.
/// For `n < p` the map is zero.
pub fn wick_restrict(b: &PolySymbol, n: usize, params: WickParameters) -> Result<SectorMap> {
    let source = OccupationBasis::shared(n, b.d)?;
    let target = OccupationBasis::shared((n + b.q).saturating_sub(b.p), b.d)?;
    if n < b.p {
        let matrix = CMatrix::zeros(target.dim(), source.dim());
        return Ok(SectorMap {
            source,
            target,
            matrix,
        });
    }
    let p_basis = OccupationBasis::shared(b.p, b.d)?;
    let q_basis = OccupationBasis::shared(b.q, b.d)?;
    let scale = params.eps().powf((b.p + b.q) as f64 / 2.0);
    let matrix =
        ladder_matrix(&b.kernel, &p_basis, &q_basis, &source, &target) * C64::new(scale, 0.0);
    Ok(SectorMap {
        source,
        target,
        matrix,
    })
}

/// `Tr[ρ b^{Wick}]` for `b ∈ P_{p,p}`, through the reduced density matrix:
/// `ε^p n!/(n-p)! Tr[ρ^{(p)} b̃]`.
pub fn wick_expectation(
    rho: &DensityMatrix,
    b: &PolySymbol,
    params: WickParameters,
) -> Result<C64> {
    if b.p != b.q {
        return Ok(ZERO);
    }
    let n = rho.n();
    if b.p > n {
        return Ok(ZERO);
    }
    if b.p == 0 {
        return Ok(b.kernel[(0, 0)]);
    }
    let reduced = partial_trace(rho, b.p)?;
    Ok(trace_product(reduced.matrix(), &b.kernel) * wick_rdm_factor(n, b.p, params.eps()))
}

/// `ε^p n!/(n-p)!`.
pub fn wick_rdm_factor(n: usize, p: usize, eps: f64) -> f64 {
    (0..p).map(|j| (n - j) as f64 * eps).product()
}

/// Sum `Σ_k ε^k b_k` with the powers of ε kept symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSymbolSum {
    terms: Vec<(u32, PolySymbol)>,
}

impl GradedSymbolSum {
    pub fn new(terms: Vec<(u32, PolySymbol)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (k, _) in &terms {
            if !seen.insert(*k) {
                return Err(Error::InvalidParameter(format!("repeated ε-power {k}")));
            }
        }
        Ok(GradedSymbolSum { terms })
    }

    pub fn terms(&self) -> &[(u32, PolySymbol)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ_k ε^k b_k^{Wick}` restricted to `∨^n`.
    pub fn quantize(&self, n: usize, params: WickParameters) -> Result<Option<SectorMap>> {
        let mut acc: Option<SectorMap> = None;
        for (k, sym) in &self.terms {
            let mut m = wick_restrict(sym, n, params)?;
            m.matrix *= C64::new(params.eps().powi(*k as i32), 0.0);
            acc = Some(match acc {
                None => m,
                Some(mut a) => {
                    if a.target.n() != m.target.n() {
                        return Err(Error::InvalidParticleNumber(
                            "graded terms land in different sectors".into(),
                        ));
                    }
                    a.matrix += m.matrix;
                    a
                }
            });
        }
        Ok(acc)
    }
}

/// Symbol of `b₁^{Wick} ∘ b₂^{Wick}`: `Σ_k ε^k/k! ∂_z^k b₁·∂_z̄^k b₂`.
pub fn compose_symbols(b1: &PolySymbol, b2: &PolySymbol) -> Result<GradedSymbolSum> {
    let terms = (0..=b1.p.min(b2.q))
        .map(|k| {
            Ok((
                k as u32,
                contract(b1, b2, k)?.scale(C64::new(1.0 / factorial(k), 0.0)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    GradedSymbolSum::new(terms)
}

/// Symbol of `[b₁^{Wick}, b₂^{Wick}]`: `Σ_{k≥1} ε^k/k! {b₁,b₂}^{(k)}`.
pub fn commutator_symbols(b1: &PolySymbol, b2: &PolySymbol) -> Result<GradedSymbolSum> {
    b1.same_space(b2)?;
    let top = b1.p.min(b2.q).max(b2.p.min(b1.q));
    let terms = (1..=top)
        .map(|k| {
            Ok((
                k as u32,
                poisson(b1, b2, k)?.scale(C64::new(1.0 / factorial(k), 0.0)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    GradedSymbolSum::new(terms)
}
