//! Mean-field models, exact propagation on `∨^n ℂ^d` and prepared initial states.

use std::fmt;
use std::sync::Arc;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::hartree::{MeasureAtom, PhaseOrbit, WignerMeasureSpec};
use crate::linalg::{
    check_orthonormal, complete_unitary, hermiticity_defect, operator_norm, spectral_exp, CMatrix,
    CVector, C64, ONE, ZERO,
};
use crate::symspace::{
    embed_one_body, embed_pair, sym_power_state, sym_power_unitary, DensityMatrix, OccupationBasis,
    SectorOperator, Spectral, HERMITIAN_TOL,
};
use crate::wickcalc::PolySymbol;

const GENERATOR_TOL: f64 = 1e-12;

/// One-body Hamiltonian `h0` and two-body kernel `Q̃` on `∨^2 ℂ^d`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    d: usize,
    h0: CMatrix,
    h0_spectral: Arc<Spectral>,
    pair: SectorOperator,
    qnorm: f64,
    // ⟨e_a ⊗ e_b, S Q̃ S e_c ⊗ e_e⟩ flattened as ((a d + b) d + c) d + e
    pair_tensor: Vec<C64>,
}

impl ModelSpec {
    /// `pair_kernel` is a Hermitian matrix on `∨^2 ℂ^d` in occupation order.
    pub fn new(h0: CMatrix, pair_kernel: CMatrix) -> Result<Self> {
        let d = h0.nrows();
        if d == 0 {
            return Err(Error::ZeroModes(d));
        }
        if h0.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: h0.ncols(),
                context: "one-body Hamiltonian columns",
            });
        }
        let defect = hermiticity_defect(&h0);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let h0 = (&h0 + h0.adjoint()) * C64::new(0.5, 0.0);
        let two = OccupationBasis::shared(2, d)?;
        let pair = SectorOperator::hermitian(Arc::clone(&two), pair_kernel)?;
        let qnorm = operator_norm(pair.matrix());
        let eig = SymmetricEigen::new(h0.clone());
        let h0_spectral = Arc::new(Spectral {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        });
        let pair_tensor = full_pair_tensor(&pair, d);
        Ok(ModelSpec {
            d,
            h0,
            h0_spectral,
            pair,
            qnorm,
            pair_tensor,
        })
    }

    /// On-site interaction `Q(z) = (g/2) Σ_k |z_k|^4`.
    pub fn onsite(h0: CMatrix, g: f64) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coupling {g} is not finite"
            )));
        }
        let d = h0.nrows();
        let two = OccupationBasis::shared(2, d.max(1))?;
        let kernel = CMatrix::from_fn(two.dim(), two.dim(), |i, j| {
            if i == j && two.state(i).contains(&2) {
                C64::new(g / 2.0, 0.0)
            } else {
                ZERO
            }
        });
        Self::new(h0, kernel)
    }

    /// Two-mode model with `h0 = σ_x` and on-site coupling `g`.
    pub fn dimer(g: f64) -> Result<Self> {
        let h0 = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        Self::onsite(h0, g)
    }

    /// [`ModelSpec::dimer`] at `g = 1`, so `‖Q̃‖ = 1/2`.
    pub fn default_dimer() -> Self {
        Self::dimer(1.0).expect("fixed dimer parameters are valid")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn pair(&self) -> &SectorOperator {
        &self.pair
    }

    /// Operator norm of `Q̃`.
    pub fn qnorm(&self) -> f64 {
        self.qnorm
    }

    /// `e^{-i t h0}`.
    pub fn free_propagator(&self, t: f64) -> CMatrix {
        spectral_exp(&self.h0_spectral.values, &self.h0_spectral.vectors, t)
    }

    /// `Q` as a symbol in `P_{2,2}`.
    pub fn pair_symbol(&self) -> PolySymbol {
        PolySymbol::from_operator(&self.pair)
    }

    /// `Q_t(z) = Q(e^{-i t h0} z)`.
    pub fn pair_symbol_at(&self, t: f64) -> Result<PolySymbol> {
        self.pair_symbol().precompose(&self.free_propagator(t))
    }

    /// `Q(z) = ⟨z ⊗ z, Q̃ z ⊗ z⟩`.
    pub fn interaction(&self, z: &CVector) -> f64 {
        let d = self.d;
        let mut acc = ZERO;
        for a in 0..d {
            for b in 0..d {
                let zab = (z[a] * z[b]).conj();
                for c in 0..d {
                    for e in 0..d {
                        acc += zab * self.pair_tensor[((a * d + b) * d + c) * d + e] * z[c] * z[e];
                    }
                }
            }
        }
        acc.re
    }

    /// Classical energy `⟨z, h0 z⟩ + Q(z)`.
    pub fn energy(&self, z: &CVector) -> f64 {
        z.dotc(&(&self.h0 * z)).re + self.interaction(z)
    }

    /// `∂_{z̄} Q`.
    pub(crate) fn pair_gradient(&self, z: &CVector) -> CVector {
        let d = self.d;
        let mut out = CVector::zeros(d);
        for i in 0..d {
            let mut acc = ZERO;
            for b in 0..d {
                let zb = z[b].conj();
                for c in 0..d {
                    for e in 0..d {
                        acc += zb * self.pair_tensor[((i * d + b) * d + c) * d + e] * z[c] * z[e];
                    }
                }
            }
            out[i] = acc * 2.0;
        }
        out
    }
}

fn full_pair_tensor(pair: &SectorOperator, d: usize) -> Vec<C64> {
    let basis = pair.basis();
    let slot = |a: usize, b: usize| {
        let mut nu = vec![0; d];
        nu[a] += 1;
        nu[b] += 1;
        let idx = basis.index_of(&nu).expect("two-particle occupation");
        // S e_a ⊗ e_b = √(ν!/2) |ν⟩
        let w = if a == b { 1.0 } else { 0.5_f64.sqrt() };
        (idx, w)
    };
    let mut t = vec![ZERO; d * d * d * d];
    for a in 0..d {
        for b in 0..d {
            let (r, wr) = slot(a, b);
            for c in 0..d {
                for e in 0..d {
                    let (s, ws) = slot(c, e);
                    t[((a * d + b) * d + c) * d + e] = pair.matrix()[(r, s)] * (wr * ws);
                }
            }
        }
    }
    t
}

/// `H_n = Σ_k h0^{(k)} + (1/n) Σ_{i<j} V^{(ij)}` on `∨^n ℂ^d`, with pair
/// potential `V = 2 Q̃`. Equivalently `n (dΓ_ε(h0) + Q^{Wick})` at `ε = 1/n`.
pub fn build_hamiltonian(model: &ModelSpec, n: usize) -> Result<SectorOperator> {
    if n == 0 {
        return Err(Error::InvalidParticleNumber("n must be at least 1".into()));
    }
    let free = embed_one_body(&model.h0, n, 1.0)?;
    if n == 1 {
        return Ok(free);
    }
    let pair = embed_pair(&model.pair, n, 1.0 / n as f64)?;
    let h = free.add(&pair)?;
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(hermiticity_defect(h.matrix())));
    }
    Ok(h)
}

/// `e^{-i t H}` from the cached spectral decomposition of `H`.
pub fn propagator(h: &SectorOperator, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t} is not finite")));
    }
    let s = h.spectral()?;
    Ok(spectral_exp(&s.values, &s.vectors, t))
}

/// `ρ(t) = e^{-i t H} ρ e^{i t H}`.
pub fn evolve(rho: &DensityMatrix, h: &SectorOperator, t: f64) -> Result<DensityMatrix> {
    if rho.n() != h.basis().n() || rho.basis().d() != h.basis().d() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho.operator().dim(),
            context: "state and Hamiltonian sectors",
        });
    }
    let u = propagator(h, t)?;
    let m = &u * rho.matrix() * u.adjoint();
    let op = SectorOperator::new(Arc::clone(rho.basis()), m)?;
    if !op.is_hermitian() {
        return Err(Error::Numerical(format!(
            "propagated state lost Hermiticity (defect {:e})",
            hermiticity_defect(op.matrix())
        )));
    }
    Ok(DensityMatrix::trusted(op))
}

/// `ψ(t) = e^{-i t H} ψ`.
pub fn evolve_state(psi: &CVector, h: &SectorOperator, t: f64) -> Result<CVector> {
    if psi.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi.len(),
            context: "state vector",
        });
    }
    let s = h.spectral()?;
    let mut c = s.vectors.adjoint() * psi;
    for (j, &lambda) in s.values.iter().enumerate() {
        c[j] *= C64::from_polar(1.0, -lambda * t);
    }
    Ok(&s.vectors * c)
}

/// Interaction picture `e^{i t H0} ρ e^{-i t H0}` with `H0 = Σ_k h0^{(k)}`.
pub fn free_frame(rho: &DensityMatrix, t: f64, model: &ModelSpec) -> Result<DensityMatrix> {
    let h0 = embed_one_body(&model.h0, rho.n(), 1.0)?;
    evolve(rho, &h0, -t)
}

/// Named initial-state families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Product,
    W,
    Ghz,
    Twin,
    Mixture,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Product,
        Family::W,
        Family::Ghz,
        Family::Twin,
        Family::Mixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Product => "product",
            Family::W => "w",
            Family::Ghz => "ghz",
            Family::Twin => "twin",
            Family::Mixture => "mixture",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown state family `{s}`")))
    }

    /// Number of orthonormal generators the family takes.
    pub fn generator_count(self) -> usize {
        match self {
            Family::Product => 1,
            _ => 2,
        }
    }

    /// Sweeps require `n ≥ γ p`.
    pub fn gamma(self) -> usize {
        match self {
            Family::Twin => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated initial state with its pure components and limiting Wigner measure.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub n: usize,
    pub family: Family,
    pub rho: DensityMatrix,
    /// `ρ = Σ w_j |ψ_j⟩⟨ψ_j|`.
    pub components: Vec<(f64, CVector)>,
    pub measure: WignerMeasureSpec,
    /// Mixing parameter of the mixture family.
    pub alpha: Option<f64>,
}

fn check_unit(v: &CVector) -> Result<()> {
    let defect = (v.norm() - 1.0).abs();
    if defect > GENERATOR_TOL {
        Err(Error::NotNormalized(defect))
    } else {
        Ok(())
    }
}

fn check_n(n: usize, min: usize, family: Family) -> Result<()> {
    if n < min {
        Err(Error::InvalidParticleNumber(format!(
            "{family} states need n ≥ {min}, got {n}"
        )))
    } else {
        Ok(())
    }
}

fn from_components(
    n: usize,
    d: usize,
    family: Family,
    components: Vec<(f64, CVector)>,
    measure: WignerMeasureSpec,
    alpha: Option<f64>,
) -> Result<PreparedState> {
    let basis = OccupationBasis::shared(n, d)?;
    let rho = DensityMatrix::ensemble(basis, &components)?;
    Ok(PreparedState {
        n,
        family,
        rho,
        components,
        measure,
        alpha,
    })
}

/// Occupation-number state `|ν⟩` in the frame whose first columns are `generators`.
fn adapted_occupation(generators: &[CVector], occupation: &[usize], n: usize) -> Result<CVector> {
    let d = generators[0].len();
    let u = complete_unitary(generators, GENERATOR_TOL)?;
    let basis = OccupationBasis::shared(n, d)?;
    let mut nu = vec![0; d];
    nu[..occupation.len()].copy_from_slice(occupation);
    let idx = basis.index_of(&nu).ok_or_else(|| {
        Error::InvalidParticleNumber(format!("occupation {nu:?} is not in the n = {n} sector"))
    })?;
    let mut e = CVector::zeros(basis.dim());
    e[idx] = ONE;
    Ok(sym_power_unitary(&u, n)?.matrix() * e)
}

/// `φ^{⊗n}`, with Wigner measure `δ_φ`.
pub fn product_state(phi: &CVector, n: usize) -> Result<PreparedState> {
    check_n(n, 1, Family::Product)?;
    check_unit(phi)?;
    let psi = sym_power_state(phi, n)?;
    let measure = WignerMeasureSpec::circle(phi.clone())?;
    from_components(
        n,
        phi.len(),
        Family::Product,
        vec![(1.0, psi)],
        measure,
        None,
    )
}

/// `√n S(φ^{⊗(n-1)} ⊗ ψ)`, with Wigner measure `δ_φ`.
pub fn w_state(phi: &CVector, psi: &CVector, n: usize) -> Result<PreparedState> {
    check_n(n, 1, Family::W)?;
    check_orthonormal(&[phi.clone(), psi.clone()], GENERATOR_TOL)?;
    let v = adapted_occupation(&[phi.clone(), psi.clone()], &[n - 1, 1], n)?;
    let measure = WignerMeasureSpec::circle(phi.clone())?;
    from_components(n, phi.len(), Family::W, vec![(1.0, v)], measure, None)
}

/// `(φ^{⊗n} + ψ^{⊗n})/√2`, with Wigner measure `½δ_φ + ½δ_ψ`.
pub fn ghz_state(phi: &CVector, psi: &CVector, n: usize) -> Result<PreparedState> {
    check_n(n, 1, Family::Ghz)?;
    check_orthonormal(&[phi.clone(), psi.clone()], GENERATOR_TOL)?;
    let s = C64::new(0.5_f64.sqrt(), 0.0);
    let v = (sym_power_state(phi, n)? + sym_power_state(psi, n)?) * s;
    let measure = WignerMeasureSpec::new(vec![
        MeasureAtom {
            weight: 0.5,
            orbit: PhaseOrbit::Circle { point: phi.clone() },
        },
        MeasureAtom {
            weight: 0.5,
            orbit: PhaseOrbit::Circle { point: psi.clone() },
        },
    ])?;
    from_components(n, phi.len(), Family::Ghz, vec![(1.0, v)], measure, None)
}

/// `√(n!/((n/2)!)^2) S(φ1^{⊗n/2} ⊗ φ2^{⊗n/2})` for even `n`, with the torus
/// measure at amplitudes `1/√2`.
pub fn twin_state(phi1: &CVector, phi2: &CVector, n: usize) -> Result<PreparedState> {
    check_n(n, 2, Family::Twin)?;
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidParticleNumber(format!(
            "twin states need even n, got {n}"
        )));
    }
    check_orthonormal(&[phi1.clone(), phi2.clone()], GENERATOR_TOL)?;
    let v = adapted_occupation(&[phi1.clone(), phi2.clone()], &[n / 2, n / 2], n)?;
    let a = 0.5_f64.sqrt();
    let measure = WignerMeasureSpec::new(vec![MeasureAtom {
        weight: 1.0,
        orbit: PhaseOrbit::Torus {
            first: phi1.clone(),
            first_amp: a,
            second: phi2.clone(),
            second_amp: a,
        },
    }])?;
    from_components(n, phi1.len(), Family::Twin, vec![(1.0, v)], measure, None)
}

/// `(1 - 1/α)|e1^{⊗n}⟩⟨e1^{⊗n}| + (1/α)|e2^{⊗n}⟩⟨e2^{⊗n}|` for `α ≥ 1`.
///
/// The weight on `e2` vanishes in the limit, so the Wigner measure is `δ_{e1}`
/// and the `p`-particle distance at `t = 0` is exactly `2/α`.
pub fn mixture_state(e1: &CVector, e2: &CVector, alpha: f64, n: usize) -> Result<PreparedState> {
    check_n(n, 1, Family::Mixture)?;
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "mixture parameter α = {alpha} must be finite and at least 1"
        )));
    }
    check_orthonormal(&[e1.clone(), e2.clone()], GENERATOR_TOL)?;
    let mut components = vec![(1.0 - 1.0 / alpha, sym_power_state(e1, n)?)];
    components.push((1.0 / alpha, sym_power_state(e2, n)?));
    components.retain(|(w, _)| *w > 0.0);
    let measure = WignerMeasureSpec::circle(e1.clone())?;
    from_components(
        n,
        e1.len(),
        Family::Mixture,
        components,
        measure,
        Some(alpha),
    )
}
