//! Brute-force reference computations on the full tensor space `(ℂ^d)^{⊗n}`.
//!
//! Nothing here goes through the occupation-number ladder formulas, so the
//! results serve as independent checks of [`crate::symspace`] and
//! [`crate::wickcalc`]. Costs grow like `d^n`; keep `n` small.
//!
//! Tensor slots are ordered most-significant first: the flat index of
//! `e_{a_1} ⊗ … ⊗ e_{a_n}` is `Σ a_i d^{n-i}`.

use crate::error::{Error, Result};
use crate::linalg::{factorial, ln_factorial, CMatrix, CVector, C64, I, ONE, ZERO};
use crate::quantum::ModelSpec;
use crate::symspace::OccupationBasis;
use crate::wickcalc::PolySymbol;

fn full_dim(n: usize, d: usize) -> usize {
    d.pow(n as u32)
}

fn digits(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in (0..n).rev() {
        out[slot] = idx % d;
        idx /= d;
    }
    out
}

/// Isometry `∨^n ℂ^d → (ℂ^d)^{⊗n}` sending `|ν⟩` to the normalized sum of
/// all arrangements with occupation `ν`.
pub fn symmetric_isometry(n: usize, d: usize) -> Result<CMatrix> {
    let basis = OccupationBasis::shared(n, d)?;
    let rows = full_dim(n, d);
    let mut p = CMatrix::zeros(rows, basis.dim());
    let mut counts = vec![0usize; basis.dim()];
    let mut cols = Vec::with_capacity(rows);
    for idx in 0..rows {
        let mut nu = vec![0; d];
        for a in digits(idx, n, d) {
            nu[a] += 1;
        }
        let col = basis.index_of(&nu).expect("every tuple has an occupation");
        counts[col] += 1;
        cols.push(col);
    }
    for (idx, col) in cols.into_iter().enumerate() {
        p[(idx, col)] = C64::new(1.0 / (counts[col] as f64).sqrt(), 0.0);
    }
    Ok(p)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `m^{⊗n}`.
pub fn kron_power(m: &CMatrix, n: usize) -> CMatrix {
    (0..n).fold(CMatrix::identity(1, 1), |acc, _| kron(&acc, m))
}

/// `z^{⊗n}` as a full tensor.
pub fn tensor_power_vector(z: &CVector, n: usize) -> CVector {
    let col = CMatrix::from_column_slice(z.len(), 1, z.as_slice());
    let full = kron_power(&col, n);
    CVector::from_column_slice(full.as_slice())
}

/// Full-tensor form `P_q b̃ P_p†` of a symbol kernel.
pub fn full_kernel(b: &PolySymbol) -> Result<CMatrix> {
    let pq = symmetric_isometry(b.q(), b.d())?;
    let pp = symmetric_isometry(b.p(), b.d())?;
    Ok(pq * b.kernel() * pp.adjoint())
}

/// `b(z)` evaluated as `⟨z^{⊗q}, (P_q b̃ P_p†) z^{⊗p}⟩`.
pub fn evaluate_full(b: &PolySymbol, z: &CVector) -> Result<C64> {
    let k = full_kernel(b)?;
    let zp = tensor_power_vector(z, b.p());
    let zq = tensor_power_vector(z, b.q());
    Ok(zq.dotc(&(k * zp)))
}

/// `P_n† F P_n`.
pub fn restrict(full: &CMatrix, n: usize, d: usize) -> Result<CMatrix> {
    let p = symmetric_isometry(n, d)?;
    Ok(p.adjoint() * full * p)
}

/// `P_n ρ P_n†`.
pub fn lift(sym: &CMatrix, n: usize, d: usize) -> Result<CMatrix> {
    let p = symmetric_isometry(n, d)?;
    Ok(&p * sym * p.adjoint())
}

/// Trace over the last `n - p` slots.
pub fn full_partial_trace(rho: &CMatrix, n: usize, p: usize, d: usize) -> CMatrix {
    let keep = full_dim(p, d);
    let drop = full_dim(n - p, d);
    CMatrix::from_fn(keep, keep, |a, b| {
        (0..drop).map(|c| rho[(a * drop + c, b * drop + c)]).sum()
    })
}

/// `p`-particle reduced density matrix of a sector state, via the full tensor.
pub fn reduced_density(rho: &CMatrix, n: usize, p: usize, d: usize) -> Result<CMatrix> {
    let full = lift(rho, n, d)?;
    restrict(&full_partial_trace(&full, n, p, d), p, d)
}

/// `Σ_k 1 ⊗ … ⊗ h ⊗ … ⊗ 1`.
pub fn one_body_full(h: &CMatrix, n: usize) -> CMatrix {
    let d = h.nrows();
    let mut acc = CMatrix::zeros(full_dim(n, d), full_dim(n, d));
    for k in 0..n {
        let term = kron(
            &kron(&identity(full_dim(k, d)), h),
            &identity(full_dim(n - k - 1, d)),
        );
        acc += term;
    }
    acc
}

/// `Σ_{i<j} V^{(ij)}` for a two-slot operator `v` on `ℂ^d ⊗ ℂ^d`.
pub fn pair_full(v: &CMatrix, n: usize, d: usize) -> CMatrix {
    let dim = full_dim(n, d);
    let mut acc = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let src = digits(col, n, d);
        for i in 0..n {
            for j in (i + 1)..n {
                let vc = src[i] * d + src[j];
                for vr in 0..d * d {
                    let amp = v[(vr, vc)];
                    if amp == ZERO {
                        continue;
                    }
                    let mut dst = src.clone();
                    dst[i] = vr / d;
                    dst[j] = vr % d;
                    let row = dst.iter().fold(0, |acc, &a| acc * d + a);
                    acc[(row, col)] += amp;
                }
            }
        }
    }
    acc
}

/// First-quantized `H_n = Σ_k h0^{(k)} + (1/n) Σ_{i<j} (2 Q̃)^{(ij)}` restricted
/// to the symmetric sector.
pub fn hamiltonian_full(model: &ModelSpec, n: usize) -> Result<CMatrix> {
    let d = model.d();
    let q_full = full_kernel(&model.pair_symbol())?;
    let v = q_full * C64::new(2.0, 0.0);
    let h = one_body_full(model.h0(), n) + pair_full(&v, n, d) * C64::new(1.0 / n as f64, 0.0);
    restrict(&h, n, d)
}

/// Matrix of `b^{Wick}` from `∨^n` to `∨^{n-p+q}`, through the definition
/// `√(n!(n-p+q)!)/(n-p)! ε^{(p+q)/2} S (b̃ ⊗ 1^{⊗(n-p)})`.
pub fn wick_full(b: &PolySymbol, n: usize, eps: f64) -> Result<CMatrix> {
    let d = b.d();
    if n < b.p() {
        let rows = OccupationBasis::shared((n + b.q()).saturating_sub(b.p()), d)?.dim();
        let cols = OccupationBasis::shared(n, d)?.dim();
        return Ok(CMatrix::zeros(rows, cols));
    }
    let m = n - b.p() + b.q();
    let k = full_kernel(b)?;
    let op = kron(&k, &identity(full_dim(n - b.p(), d)));
    let ln_scale = 0.5 * (ln_factorial(n) + ln_factorial(m)) - ln_factorial(n - b.p());
    let scale = ln_scale.exp() * eps.powf((b.p() + b.q()) as f64 / 2.0);
    let pm = symmetric_isometry(m, d)?;
    let pn = symmetric_isometry(n, d)?;
    Ok(pm.adjoint() * op * pn * C64::new(scale, 0.0))
}

/// Contraction `∂_z^k b1 · ∂_{z̄}^k b2` from the tensor formula
/// `N_k S (b̃1 ⊗ 1^{⊗(q2-k)}) (1^{⊗(p1-k)} ⊗ b̃2) S` with
/// `N_k = p1!/(p1-k)! · q2!/(q2-k)!`.
pub fn contraction_formula(b1: &PolySymbol, b2: &PolySymbol, k: usize) -> Result<PolySymbol> {
    let d = b1.d();
    if b2.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b2.d(),
            context: "symbols in a contraction",
        });
    }
    if k > b1.p().min(b2.q()) {
        return Err(Error::ContractionOrder {
            k,
            max: b1.p().min(b2.q()),
        });
    }
    let (p1, q1, p2, q2) = (b1.p(), b1.q(), b2.p(), b2.q());
    let left = kron(&full_kernel(b1)?, &identity(full_dim(q2 - k, d)));
    let right = kron(&identity(full_dim(p1 - k, d)), &full_kernel(b2)?);
    let (p, q) = (p1 + p2 - k, q1 + q2 - k);
    let nk = factorial(p1) / factorial(p1 - k) * factorial(q2) / factorial(q2 - k);
    let kernel = symmetric_isometry(q, d)?.adjoint() * left * right * symmetric_isometry(p, d)?;
    PolySymbol::new(d, p, q, kernel * C64::new(nk, 0.0))
}

/// Nested central-difference Wirtinger derivative. Each entry of `ops` is
/// `(mode, conjugate)` and selects `∂_{z_j}` or `∂_{z̄_j}`.
pub fn wirtinger<F>(f: &F, z: &CVector, ops: &[(usize, bool)], h: f64) -> C64
where
    F: Fn(&CVector) -> C64,
{
    let Some((&(j, conj), rest)) = ops.split_first() else {
        return f(z);
    };
    let shifted = |delta: C64| {
        let mut w = z.clone();
        w[j] += delta;
        wirtinger(f, &w, rest, h)
    };
    let dx = (shifted(C64::new(h, 0.0)) - shifted(C64::new(-h, 0.0))) / (2.0 * h);
    let dy = (shifted(C64::new(0.0, h)) - shifted(C64::new(0.0, -h))) / (2.0 * h);
    if conj {
        (dx + I * dy) * 0.5
    } else {
        (dx - I * dy) * 0.5
    }
}

/// `Σ_{j_1…j_k} ∂_{z_{j_1}}…∂_{z_{j_k}} b1 · ∂_{z̄_{j_1}}…∂_{z̄_{j_k}} b2` at `z`
/// by finite differences with step `h`.
pub fn contraction_fd(b1: &PolySymbol, b2: &PolySymbol, k: usize, z: &CVector, h: f64) -> C64 {
    let d = b1.d();
    let f1 = |w: &CVector| b1.evaluate(w).expect("dimension checked by caller");
    let f2 = |w: &CVector| b2.evaluate(w).expect("dimension checked by caller");
    let mut acc = ZERO;
    for idx in 0..full_dim(k, d) {
        let js = digits(idx, k, d);
        let holo: Vec<(usize, bool)> = js.iter().map(|&j| (j, false)).collect();
        let anti: Vec<(usize, bool)> = js.iter().map(|&j| (j, true)).collect();
        acc += wirtinger(&f1, z, &holo, h) * wirtinger(&f2, z, &anti, h);
    }
    acc
}

/// `∂_{z̄} Q` of the model by finite differences.
pub fn pair_gradient_fd(model: &ModelSpec, z: &CVector, h: f64) -> CVector {
    let f = |w: &CVector| C64::new(model.interaction(w), 0.0);
    CVector::from_fn(z.len(), |j, _| wirtinger(&f, z, &[(j, true)], h))
}

/// `|z^{⊗p}⟩⟨z^{⊗p}|` on the full tensor, restricted to `∨^p`.
pub fn coherent_projector(z: &CVector, p: usize) -> Result<CMatrix> {
    let v = tensor_power_vector(z, p);
    restrict(&(&v * v.adjoint()), p, z.len())
}

/// `Tr[a b]` for the full-space check of `Σ_ν` identities.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    (a * b).trace()
}

/// Unit vector `e_k` in `ℂ^d`.
pub fn unit(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;

    #[test]
    fn isometry_columns_are_orthonormal() {
        let p = symmetric_isometry(3, 3).unwrap();
        let g = p.adjoint() * &p;
        assert!((g - CMatrix::identity(10, 10)).norm() < 1e-14);
    }

    #[test]
    fn kron_power_of_unitary_is_unitary() {
        let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let u = crate::linalg::hermitian_exp(&h, 0.4);
        assert!(unitarity_defect(&kron_power(&u, 3)) < 1e-13);
    }

    #[test]
    fn wirtinger_of_modulus_squared() {
        let f = |w: &CVector| C64::new(w[0].norm_sqr(), 0.0);
        let z = CVector::from_vec(vec![C64::new(0.3, -0.7)]);
        let dz = wirtinger(&f, &z, &[(0, false)], 1e-4);
        assert!((dz - z[0].conj()).norm() < 1e-10);
        let dzb = wirtinger(&f, &z, &[(0, true)], 1e-4);
        assert!((dzb - z[0]).norm() < 1e-10);
    }
}
