//! Small dense linear-algebra and combinatorics helpers shared by the modules.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Binomial coefficient as an exact integer.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// `n!` as a float. Exact up to 22!, overflows past 170!.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Natural log of `n!`.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

/// `Π_i hi_i! / lo_i!` for componentwise `lo ≤ hi`.
pub(crate) fn falling_ratio(hi: &[usize], lo: &[usize]) -> f64 {
    hi.iter()
        .zip(lo)
        .map(|(&h, &l)| ((l + 1)..=h).fold(1.0, |acc, j| acc * j as f64))
        .product()
}

/// Largest deviation `max |M - M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Replace `m` by `(m + m†)/2`.
pub(crate) fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Largest deviation `max |U†U - 1|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `exp(-i t H)` for Hermitian `H` via its eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, t: f64) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    spectral_exp(&eig.eigenvalues, &eig.eigenvectors, t)
}

/// `V diag(exp(-i t λ)) V†`.
pub(crate) fn spectral_exp(values: &DVector<f64>, vectors: &CMatrix, t: f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lambda * t);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Complete an orthonormal family of columns to a unitary matrix by
/// Gram-Schmidt against the standard basis.
pub fn complete_unitary(generators: &[CVector], tol: f64) -> Result<CMatrix> {
    let d = generators
        .first()
        .map(|g| g.len())
        .ok_or_else(|| Error::InvalidParameter("at least one generator is required".into()))?;
    check_orthonormal(generators, tol)?;
    if generators.len() > d {
        return Err(Error::InvalidParameter(format!(
            "{} generators cannot be orthonormal in dimension {d}",
            generators.len()
        )));
    }
    let mut columns: Vec<CVector> = generators.to_vec();
    for k in 0..d {
        if columns.len() == d {
            break;
        }
        let mut v = CVector::zeros(d);
        v[k] = ONE;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for c in &columns {
                let overlap = c.dotc(&v);
                v -= c * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            columns.push(v / C64::new(norm, 0.0));
        }
    }
    Ok(CMatrix::from_columns(&columns))
}

pub(crate) fn check_orthonormal(vectors: &[CVector], tol: f64) -> Result<()> {
    let mut worst = 0.0_f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.len(),
                    found: b.len(),
                    context: "generator vectors",
                });
            }
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((a.dotc(b) - target).norm());
        }
    }
    if worst > tol {
        Err(Error::NotOrthonormal(worst))
    } else {
        Ok(())
    }
}
