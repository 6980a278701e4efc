//! Randomized consistency suites comparing the fast routes with the
//! brute-force [`crate::oracle`] and with analytic identities.

use std::fmt;

use rand::Rng;

use crate::error::Result;
use crate::expansion::gauss_legendre;
use crate::hartree::{flow_path, FieldState, FlowConfig};
use crate::linalg::{frobenius, operator_norm, trace_product, CMatrix, CVector, C64, I};
use crate::oracle;
use crate::quantum::ModelSpec;
use crate::random::{
    random_density_matrix, random_hermitian, random_sector_hermitian, random_symbol,
    random_unit_vector, rng, TestRng,
};
use crate::symspace::{partial_trace, OccupationBasis};
use crate::wickcalc::{
    commutator_symbols, compose_symbols, contract, wick_rdm_factor, wick_restrict, PolySymbol,
    SectorMap, WickParameters,
};

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        SuiteReport {
            name,
            cases: 0,
            failures: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, error: f64) {
        self.cases += 1;
        if error.is_nan() || error > self.tolerance {
            self.failures += 1;
        }
        self.max_error = self
            .max_error
            .max(if error.is_nan() { f64::INFINITY } else { error });
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {} cases={} failures={} max_error={:.3e} tol={:.0e}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.cases,
            self.failures,
            self.max_error,
            self.tolerance
        )
    }
}

/// `‖a - b‖_F / max(‖a‖_F, ‖b‖_F)`, zero when both vanish.
pub fn relative_error(a: &CMatrix, b: &CMatrix) -> f64 {
    scaled_error(a, b, 0.0)
}

/// `‖a - b‖_F / max(‖a‖_F, ‖b‖_F, floor)`. A difference of two larger
/// matrices passes their size as `floor`, so cancellation to zero is judged
/// against the terms that cancelled.
pub fn scaled_error(a: &CMatrix, b: &CMatrix, floor: f64) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    let scale = frobenius(a).max(frobenius(b)).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        frobenius(&(a - b)) / scale
    }
}

fn map_error(lhs: &SectorMap, rhs: Option<SectorMap>, floor: f64) -> f64 {
    match rhs {
        Some(r) if r.matrix.shape() == lhs.matrix.shape() => {
            scaled_error(&lhs.matrix, &r.matrix, floor)
        }
        // below the vacuum both sides are zero maps with bookkeeping shapes
        Some(r) => frobenius(&lhs.matrix).max(frobenius(&r.matrix)),
        None => frobenius(&lhs.matrix),
    }
}

fn wick(b: &PolySymbol, n: usize, params: WickParameters) -> Result<SectorMap> {
    wick_restrict(b, n, params)
}

/// `b1^W b2^W` and `[b1^W, b2^W]` against their symbol expansions, and
/// contraction kernels against the full-tensor formula.
pub fn wick_composition(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut r = rng(seed);
    let mut report = SuiteReport::new("wick-composition", 1e-10);
    for _ in 0..cases {
        let d = r.gen_range(1..=3);
        let [p1, q1, p2, q2] = [0; 4].map(|_| r.gen_range(0..=3usize));
        let n = r.gen_range(1..=6);
        let params = WickParameters::new(r.gen_range(0.1..1.0))?;
        let b1 = random_symbol(&mut r, d, p1, q1);
        let b2 = random_symbol(&mut r, d, p2, q2);

        let w2 = wick(&b2, n, params)?;
        let prod12 = wick(&b1, w2.target.n(), params)?.compose(&w2)?;
        let mut err = map_error(
            &prod12,
            compose_symbols(&b1, &b2)?.quantize(n, params)?,
            0.0,
        );

        let w1 = wick(&b1, n, params)?;
        let prod21 = wick(&b2, w1.target.n(), params)?.compose(&w1)?;
        if prod12.matrix.shape() == prod21.matrix.shape() {
            let comm = SectorMap {
                matrix: &prod12.matrix - &prod21.matrix,
                ..prod12.clone()
            };
            let floor = frobenius(&prod12.matrix).max(frobenius(&prod21.matrix));
            let rhs = commutator_symbols(&b1, &b2)?.quantize(n, params)?;
            err = err.max(map_error(&comm, rhs, floor));
        }

        for k in 0..=p1.min(q2) {
            let fast = contract(&b1, &b2, k)?;
            let slow = oracle::contraction_formula(&b1, &b2, k)?;
            err = err.max(relative_error(fast.kernel(), slow.kernel()));
        }
        report.record(err);
    }
    Ok(report)
}

/// Contractions of order `k ≤ 2` against central finite differences
/// (step `1e-4`) of the evaluated symbols.
pub fn contraction_finite_differences(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut r = rng(seed);
    let mut report = SuiteReport::new("contraction-fd", 1e-6);
    for _ in 0..cases {
        let d = r.gen_range(1..=3);
        let [p1, q1, p2, q2] = [0; 4].map(|_| r.gen_range(0..=3usize));
        let b1 = random_symbol(&mut r, d, p1, q1);
        let b2 = random_symbol(&mut r, d, p2, q2);
        let z = random_unit_vector(&mut r, d) * C64::new(0.8, 0.0);
        let mut err = 0.0_f64;
        for k in 0..=p1.min(q2).min(2) {
            let exact = contract(&b1, &b2, k)?.evaluate(&z)?;
            let fd = oracle::contraction_fd(&b1, &b2, k, &z, 1e-4);
            err = err.max((exact - fd).norm() / exact.norm().max(1.0));
        }
        report.record(err);
    }
    Ok(report)
}

/// Sector partial traces against the full `d^n` tensor computation.
pub fn partial_trace_oracle(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut r = rng(seed);
    let mut report = SuiteReport::new("partial-trace-oracle", 1e-12);
    for _ in 0..cases {
        let n = r.gen_range(1..=4);
        let rank = r.gen_range(1..=n + 1);
        let rho = random_density_matrix(&mut r, n, 2, Some(rank));
        let mut err = 0.0_f64;
        for p in 1..=n {
            let fast = partial_trace(&rho, p)?;
            let slow = oracle::reduced_density(rho.matrix(), n, p, 2)?;
            err = err.max(
                (fast.matrix() - slow)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max),
            );
        }
        report.record(err);
    }
    Ok(report)
}

fn random_model(r: &mut TestRng) -> Result<ModelSpec> {
    if r.gen_bool(0.5) {
        return Ok(ModelSpec::default_dimer());
    }
    let d = r.gen_range(2..=3);
    let dim2 = OccupationBasis::shared(2, d)?.dim();
    ModelSpec::new(random_hermitian(r, d), random_hermitian(r, dim2))
}

const HARTREE_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Drift of `‖z_t‖` and of the energy over `t ∈ [0, 1]` at `dt = 1e-3`.
pub fn hartree_conservation(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut r = rng(seed);
    let cfg = FlowConfig::default();
    let mut report = SuiteReport::new("hartree-conservation", 1e-8);
    for _ in 0..cases {
        let model = random_model(&mut r)?;
        let z0 = FieldState::new(random_unit_vector(&mut r, model.d()))?;
        let e0 = model.energy(z0.as_vector());
        let path = flow_path(&z0, &HARTREE_GRID, &cfg, &model)?;
        let drift = path
            .iter()
            .map(|z| {
                (z.norm() - z0.norm())
                    .abs()
                    .max((model.energy(z.as_vector()) - e0).abs())
            })
            .fold(0.0, f64::max);
        report.record(drift);
    }
    Ok(report)
}

/// Residual of the integral form
/// `z_t = e^{-ith0} z_0 - i ∫_0^t e^{-i(t-s)h0} ∂_{z̄}Q(z_s) ds` at `t = 1`,
/// plus the vector field against finite differences of `Q`.
pub fn hartree_duhamel(seed: u64, cases: usize) -> Result<SuiteReport> {
    const PANELS: usize = 10;
    let mut r = rng(seed);
    let cfg = FlowConfig::default();
    let (x, w) = gauss_legendre(8)?;
    let t = 1.0;
    let h = t / PANELS as f64;
    let mut times = Vec::with_capacity(PANELS * x.len() + 1);
    let mut weights = Vec::with_capacity(PANELS * x.len());
    for j in 0..PANELS {
        let a = j as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            times.push(a + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    times.push(t);
    let mut report = SuiteReport::new("hartree-duhamel", 1e-6);
    for _ in 0..cases {
        let model = random_model(&mut r)?;
        let z0 = FieldState::new(random_unit_vector(&mut r, model.d()))?;
        let path = flow_path(&z0, &times, &cfg, &model)?;
        let zt = path.last().expect("t appended").as_vector();
        let mut integral = CVector::zeros(model.d());
        for ((s, ws), zs) in times.iter().zip(&weights).zip(&path) {
            integral += model.free_propagator(t - s)
                * model.pair_gradient(zs.as_vector())
                * C64::new(*ws, 0.0);
        }
        let rhs = model.free_propagator(t) * z0.as_vector() - integral * I;
        let mut err = (zt - rhs).norm();
        let grad_fd = oracle::pair_gradient_fd(&model, z0.as_vector(), 1e-4);
        err = err.max((grad_fd - model.pair_gradient(z0.as_vector())).norm());
        report.record(err);
    }
    Ok(report)
}

/// `Tr[ρ A^W] = n(n-1)…(n-p+1)/n^p · Tr[ρ^{(p)} A]` with the Wick side built
/// from the operator matrix, not through the reduced density matrix.
pub fn normalization_identity(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut r = rng(seed);
    let mut report = SuiteReport::new("normalization-identity", 1e-12);
    for _ in 0..cases {
        let (n, p, lhs, rdm, _) = normalization_instance(&mut r)?;
        let factor = wick_rdm_factor(n, p, 1.0 / n as f64);
        report.record((lhs - rdm * factor).norm() / lhs.norm().max(1.0));
    }
    Ok(report)
}

/// `|Tr[ρ A^W] - Tr[ρ^{(p)} A]| ≤ (p-1)²/n ‖A‖`; the recorded error is the
/// ratio of the gap to its bound, so the tolerance is `1`.
pub fn normalization_gap(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut r = rng(seed);
    let mut report = SuiteReport::new("normalization-gap", 1.0);
    for _ in 0..cases {
        let (n, p, lhs, rdm, anorm) = normalization_instance(&mut r)?;
        let bound = (p - 1).pow(2) as f64 / n as f64 * anorm;
        let gap = (lhs - rdm).norm();
        let ratio = if bound == 0.0 {
            if gap <= 1e-12 * anorm.max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            gap / (bound + 1e-12 * anorm.max(1.0))
        };
        report.record(ratio);
    }
    Ok(report)
}

fn normalization_instance(r: &mut TestRng) -> Result<(usize, usize, C64, C64, f64)> {
    let n = r.gen_range(1..=8);
    let p = r.gen_range(1..=n.min(4));
    let d = r.gen_range(1..=3);
    let rho = random_density_matrix(r, n, d, None);
    let a = random_sector_hermitian(r, p, d);
    let sym = PolySymbol::from_operator(&a);
    let w = wick_restrict(&sym, n, WickParameters::mean_field(n)?)?;
    let lhs = trace_product(rho.matrix(), &w.matrix);
    let rdm = trace_product(partial_trace(&rho, p)?.matrix(), a.matrix());
    Ok((n, p, lhs, rdm, operator_norm(a.matrix())))
}

/// Every suite at its default size.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        wick_composition(seed, 200)?,
        contraction_finite_differences(seed.wrapping_add(1), 50)?,
        partial_trace_oracle(seed.wrapping_add(2), 50)?,
        hartree_conservation(seed.wrapping_add(3), 10)?,
        hartree_duhamel(seed.wrapping_add(4), 5)?,
        normalization_identity(seed.wrapping_add(5), 50)?,
        normalization_gap(seed.wrapping_add(6), 50)?,
    ])
}
