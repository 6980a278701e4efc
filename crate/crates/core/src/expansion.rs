//! Small-time mean-field expansion of `Tr[ρ_n(t) A^{Wick}]`.
//!
//! The `k`-th term integrates the iterated bracket
//! `C^{(k)}(t_k,…,t_1,t) = {Q_{t_k}, … {Q_{t_1}, b_t}^{(1)} …}^{(1)}`
//! over the simplex `0 ≤ t_k ≤ … ≤ t_1 ≤ t`. Brackets are linear in the
//! symbol, so the simplex integral is taken on kernels first and the
//! quantum trace or classical average is evaluated once per order.

use crate::error::{Error, Result};
use crate::hartree::{quadrature_nodes, WignerMeasureSpec};
use crate::linalg::{ln_factorial, C64, I, ZERO};
use crate::quantum::{build_hamiltonian, evolve, free_frame, ModelSpec};
use crate::symspace::DensityMatrix;
use crate::wickcalc::{poisson, wick_expectation, PolySymbol, WickParameters};

/// Highest series order the module evaluates.
pub const MAX_ORDER: usize = 4;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(g: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if g == 0 {
        return Err(Error::InvalidParameter(
            "Gauss-Legendre rule needs at least one node".into(),
        ));
    }
    let mut nodes = vec![0.0; g];
    let mut weights = vec![0.0; g];
    let gf = g as f64;
    for i in 0..g.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (gf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=g {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = gf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[g - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[g - 1 - i] = w;
    }
    Ok((nodes, weights))
}

fn check_base(b: &PolySymbol, model: &ModelSpec) -> Result<()> {
    if b.d() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: b.d(),
            context: "observable symbol and model",
        });
    }
    if b.p() != b.q() || b.p() == 0 {
        return Err(Error::InvalidParameter(format!(
            "expansion needs an observable in P_{{p,p}} with p ≥ 1, got ({}, {})",
            b.p(),
            b.q()
        )));
    }
    Ok(())
}

/// `b_t(z) = b(e^{-i t h0} z)`, the symbol of `U_0(t)* b^{Wick} U_0(t)`.
pub fn free_symbol(b: &PolySymbol, t: f64, model: &ModelSpec) -> Result<PolySymbol> {
    b.precompose(&model.free_propagator(t))
}

/// Iterated bracket `C^{(k)}(t_k,…,t_1,t)` at explicit times; `inner[0]` is `t_1`.
pub fn c0_symbol(b: &PolySymbol, inner: &[f64], t: f64, model: &ModelSpec) -> Result<PolySymbol> {
    check_base(b, model)?;
    let mut cur = free_symbol(b, t, model)?;
    for &s in inner {
        cur = poisson(&model.pair_symbol_at(s)?, &cur, 1)?;
    }
    Ok(cur)
}

/// `∫_{simplex} C^{(k)}(t_k,…,t_1,t) dt_k…dt_1` for `k = 0..=kmax`, with a
/// `g`-point Gauss-Legendre rule in every variable.
pub fn integrated_brackets(
    b: &PolySymbol,
    t: f64,
    kmax: usize,
    g: usize,
    model: &ModelSpec,
) -> Result<Vec<PolySymbol>> {
    check_base(b, model)?;
    if kmax > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "series order {kmax} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    let (nodes, weights) = gauss_legendre(g)?;
    let bt = free_symbol(b, t, model)?;
    let p = b.p();
    let mut acc: Vec<PolySymbol> = (0..=kmax)
        .map(|k| PolySymbol::zero(b.d(), p + k, p + k))
        .collect::<Result<_>>()?;
    let rule = Rule {
        nodes: &nodes,
        weights: &weights,
        kmax,
        model,
    };
    rule.descend(0, t, &bt, 1.0, &mut acc)?;
    Ok(acc)
}

struct Rule<'a> {
    nodes: &'a [f64],
    weights: &'a [f64],
    kmax: usize,
    model: &'a ModelSpec,
}

impl Rule<'_> {
    fn descend(
        &self,
        level: usize,
        upper: f64,
        cur: &PolySymbol,
        weight: f64,
        acc: &mut [PolySymbol],
    ) -> Result<()> {
        acc[level] = acc[level].add(&cur.scale(C64::new(weight, 0.0)))?;
        if level == self.kmax {
            return Ok(());
        }
        let half = upper / 2.0;
        for (x, w) in self.nodes.iter().zip(self.weights) {
            let s = half * (x + 1.0);
            let next = poisson(&self.model.pair_symbol_at(s)?, cur, 1)?;
            self.descend(level + 1, s, &next, weight * half * w, acc)?;
        }
        Ok(())
    }
}

/// `i^k ∫ Tr[ρ_n C^{(k)}(…)^{Wick}]` at `ε = 1/n`.
pub fn quantum_series_term(
    k: usize,
    rho: &DensityMatrix,
    b: &PolySymbol,
    t: f64,
    g: usize,
    model: &ModelSpec,
) -> Result<C64> {
    let brackets = integrated_brackets(b, t, k, g, model)?;
    quantum_term_from(&brackets[k], k, rho)
}

fn quantum_term_from(bracket: &PolySymbol, k: usize, rho: &DensityMatrix) -> Result<C64> {
    let params = WickParameters::mean_field(rho.n())?;
    Ok(I.powu(k as u32) * wick_expectation(rho, bracket, params)?)
}

/// `i^k ∫ μ_0(C^{(k)}(…))` with torus atoms sampled at `nodes` phases.
pub fn classical_series_term(
    k: usize,
    mu: &WignerMeasureSpec,
    b: &PolySymbol,
    t: f64,
    g: usize,
    nodes: usize,
    model: &ModelSpec,
) -> Result<C64> {
    let brackets = integrated_brackets(b, t, k, g, model)?;
    classical_term_from(&brackets[k], k, mu, nodes)
}

fn classical_term_from(
    bracket: &PolySymbol,
    k: usize,
    mu: &WignerMeasureSpec,
    nodes: usize,
) -> Result<C64> {
    let mut acc = ZERO;
    for (w, z) in quadrature_nodes(mu, nodes)? {
        acc += bracket.evaluate(z.as_vector())? * w;
    }
    Ok(I.powu(k as u32) * acc)
}

/// Settings of [`prop3_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub kmax: usize,
    pub gauss_nodes: usize,
    /// Base `C > 2` of the `C^p` growth.
    pub c: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            kmax: MAX_ORDER,
            gauss_nodes: 8,
            c: 2.5,
        }
    }
}

/// `C_0(C) = max_{p ≥ 1} 2^p (3 + p²) / C^p`.
pub fn series_constant(c: f64) -> Result<f64> {
    if !c.is_finite() || c <= 2.0 {
        return Err(Error::InvalidParameter(format!("C = {c} must exceed 2")));
    }
    let ratio = 2.0 / c;
    let mut best = 0.0_f64;
    let mut p = 1;
    loop {
        let pf = p as f64;
        let v = ratio.powi(p) * (3.0 + pf * pf);
        best = best.max(v);
        // past the peak of p² r^p the sequence only decreases
        if pf > 2.0 / -ratio.ln() + 1.0 && v < best {
            break;
        }
        p += 1;
    }
    Ok(best)
}

/// `4^k (p+k-1)!/((p-1)! k!) (|t| ‖Q̃‖)^k ‖A‖`.
pub fn term_envelope(p: usize, k: usize, t: f64, qnorm: f64, anorm: f64) -> f64 {
    if p == 0 {
        return if k == 0 { anorm } else { 0.0 };
    }
    let ln_binom = ln_factorial(p + k - 1) - ln_factorial(p - 1) - ln_factorial(k);
    let x = 4.0 * t.abs() * qnorm;
    if x == 0.0 {
        return if k == 0 { anorm } else { 0.0 };
    }
    (ln_binom + k as f64 * x.ln()).exp() * anorm
}

/// `Σ_{k > kmax}` of [`term_envelope`].
pub fn truncation_envelope(p: usize, kmax: usize, t: f64, qnorm: f64, anorm: f64) -> f64 {
    let mut sum = 0.0;
    let mut k = kmax + 1;
    loop {
        let term = term_envelope(p, k, t, qnorm, anorm);
        sum += term;
        if term <= 1e-17 * sum.max(f64::MIN_POSITIVE) || k > kmax + 10_000 {
            break;
        }
        k += 1;
    }
    sum
}

/// Outcome of a series check at one `(n, p, t)`.
#[derive(Debug, Clone)]
pub struct SeriesReport {
    pub n: usize,
    pub p: usize,
    pub t: f64,
    /// Quantum terms `i^k ∫ Tr[ρ_n C^{(k)}]`, `k = 0..=kmax`.
    pub terms: Vec<C64>,
    pub partial_sums: Vec<C64>,
    /// `Tr[ρ_n(t) A^{Wick}]` from exact propagation.
    pub exact: C64,
    pub residual: f64,
    /// `C_0 C^p ‖A‖ / n`.
    pub bound: f64,
    /// Envelope of the omitted orders `k > kmax`.
    pub truncation: f64,
    pub term_envelopes: Vec<f64>,
    pub constant: f64,
}

impl SeriesReport {
    pub fn residual_ok(&self) -> bool {
        self.residual <= self.bound + self.truncation
    }

    pub fn terms_ok(&self) -> bool {
        self.terms
            .iter()
            .zip(&self.term_envelopes)
            .all(|(c, env)| c.norm() <= env * (1.0 + 1e-9) + 1e-14)
    }

    pub fn passed(&self) -> bool {
        self.residual_ok() && self.terms_ok()
    }
}

/// Compare the truncated series with exact propagation and the `C_0 C^p/n` bound.
pub fn prop3_check(
    rho: &DensityMatrix,
    a: &PolySymbol,
    t: f64,
    model: &ModelSpec,
    cfg: &SeriesConfig,
) -> Result<SeriesReport> {
    check_base(a, model)?;
    let qn = model.qnorm();
    if qn > 0.0 && t.abs() >= 1.0 / (16.0 * qn) {
        return Err(Error::OutsideConvergenceDisk {
            t,
            limit: 1.0 / (16.0 * qn),
        });
    }
    let n = rho.n();
    let p = a.p();
    if p > n {
        return Err(Error::InvalidParticleNumber(format!(
            "observable order {p} exceeds n = {n}"
        )));
    }
    let constant = series_constant(cfg.c)?;
    let brackets = integrated_brackets(a, t, cfg.kmax, cfg.gauss_nodes, model)?;
    let terms: Vec<C64> = brackets
        .iter()
        .enumerate()
        .map(|(k, br)| quantum_term_from(br, k, rho))
        .collect::<Result<_>>()?;
    let partial_sums: Vec<C64> = terms
        .iter()
        .scan(ZERO, |acc, c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let h = build_hamiltonian(model, n)?;
    let rho_t = evolve(rho, &h, t)?;
    let exact = wick_expectation(&rho_t, a, WickParameters::mean_field(n)?)?;
    let anorm = a.kernel_norm();
    let residual = (exact - partial_sums[cfg.kmax]).norm();
    Ok(SeriesReport {
        n,
        p,
        t,
        terms,
        partial_sums,
        exact,
        residual,
        bound: constant * cfg.c.powi(p as i32) * anorm / n as f64,
        truncation: truncation_envelope(p, cfg.kmax, t, qn, anorm),
        term_envelopes: (0..=cfg.kmax)
            .map(|k| term_envelope(p, k, t, qn, anorm))
            .collect(),
        constant,
    })
}

/// The three pieces of the first-order Duhamel identity
/// `Tr[ρ_n(t) A^W] = Tr[ρ_n A_t^W] + (iε/2) ∫ Tr[ρ̃(s) {Q_s, A_t}^{(2)W}] ds
///  + i ∫ Tr[ρ̃(s) C^{(1)}(s,t)^W] ds`, with `ρ̃(s)` the free-frame state.
#[derive(Debug, Clone, Copy)]
pub struct FirstOrderSplit {
    pub exact: C64,
    pub leading: C64,
    pub middle: C64,
    pub remainder: C64,
}

impl FirstOrderSplit {
    pub fn defect(&self) -> f64 {
        (self.exact - self.leading - self.middle - self.remainder).norm()
    }
}

pub fn first_order_split(
    rho: &DensityMatrix,
    a: &PolySymbol,
    t: f64,
    g: usize,
    model: &ModelSpec,
) -> Result<FirstOrderSplit> {
    check_base(a, model)?;
    let n = rho.n();
    let params = WickParameters::mean_field(n)?;
    let h = build_hamiltonian(model, n)?;
    let exact = wick_expectation(&evolve(rho, &h, t)?, a, params)?;
    let at = free_symbol(a, t, model)?;
    let leading = wick_expectation(rho, &at, params)?;
    let (nodes, weights) = gauss_legendre(g)?;
    let half = t / 2.0;
    let (mut middle, mut remainder) = (ZERO, ZERO);
    for (x, w) in nodes.iter().zip(&weights) {
        let s = half * (x + 1.0);
        let qs = model.pair_symbol_at(s)?;
        let tilde = free_frame(&evolve(rho, &h, s)?, s, model)?;
        let second = if at.p() >= 2 {
            poisson(&qs, &at, 2)?
        } else {
            PolySymbol::zero(at.d(), at.p(), at.q())?
        };
        let first = poisson(&qs, &at, 1)?;
        middle += wick_expectation(&tilde, &second, params)? * (half * w);
        remainder += wick_expectation(&tilde, &first, params)? * (half * w);
    }
    Ok(FirstOrderSplit {
        exact,
        leading,
        middle: middle * I * (0.5 * params.eps()),
        remainder: remainder * I,
    })
}

/// `Σ_k` of the classical terms `i^k ∫ μ_0(C^{(k)})`.
pub fn classical_partial_sum(
    mu: &WignerMeasureSpec,
    b: &PolySymbol,
    t: f64,
    kmax: usize,
    g: usize,
    nodes: usize,
    model: &ModelSpec,
) -> Result<C64> {
    let brackets = integrated_brackets(b, t, kmax, g, model)?;
    brackets.iter().enumerate().try_fold(ZERO, |acc, (k, br)| {
        Ok(acc + classical_term_from(br, k, mu, nodes)?)
    })
}
