//! Convergence-rate sweeps over `(n, p, t)` and slope fits.

use std::collections::BTreeMap;
use std::io::{self, Write};

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hartree::{limit_rdm_path, FlowConfig, WignerMeasureSpec};
use crate::linalg::CVector;
use crate::quantum::{
    build_hamiltonian, evolve_state, ghz_state, mixture_state, product_state, twin_state, w_state,
    Family, ModelSpec, PreparedState,
};
use crate::symspace::{partial_trace, trace_distance, DensityMatrix, OccupationBasis};

/// Distances below this are treated as exact agreement in slope fits.
pub const ZERO_DISTANCE: f64 = 1e-12;

/// Mixing parameter of the mixture family as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaRule {
    Fixed(f64),
    SqrtN,
    N,
}

impl AlphaRule {
    pub fn at(self, n: usize) -> f64 {
        match self {
            AlphaRule::Fixed(a) => a,
            AlphaRule::SqrtN => (n as f64).sqrt(),
            AlphaRule::N => n as f64,
        }
    }
}

/// A state family with its generators.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub generators: Vec<CVector>,
    pub alpha: Option<AlphaRule>,
}

impl FamilySpec {
    pub fn new(family: Family, generators: Vec<CVector>, alpha: Option<AlphaRule>) -> Result<Self> {
        if generators.len() != family.generator_count() {
            return Err(Error::InvalidParameter(format!(
                "{family} states take {} generator(s), got {}",
                family.generator_count(),
                generators.len()
            )));
        }
        if family == Family::Mixture && alpha.is_none() {
            return Err(Error::InvalidParameter(
                "mixture states need a mixing parameter α".into(),
            ));
        }
        Ok(FamilySpec {
            family,
            generators,
            alpha,
        })
    }

    /// Family on the standard basis vectors `e1` (and `e2`) of `ℂ^d`.
    pub fn standard(family: Family, d: usize, alpha: Option<AlphaRule>) -> Result<Self> {
        let gens = (0..family.generator_count())
            .map(|k| {
                if k >= d {
                    return Err(Error::InvalidParameter(format!(
                        "{family} states need d ≥ {}",
                        family.generator_count()
                    )));
                }
                let mut v = CVector::zeros(d);
                v[k] = crate::linalg::ONE;
                Ok(v)
            })
            .collect::<Result<_>>()?;
        Self::new(family, gens, alpha)
    }

    pub fn prepare(&self, n: usize) -> Result<PreparedState> {
        let g = &self.generators;
        match self.family {
            Family::Product => product_state(&g[0], n),
            Family::W => w_state(&g[0], &g[1], n),
            Family::Ghz => ghz_state(&g[0], &g[1], n),
            Family::Twin => twin_state(&g[0], &g[1], n),
            Family::Mixture => {
                let alpha = self.alpha.expect("checked at construction").at(n);
                mixture_state(&g[0], &g[1], alpha, n)
            }
        }
    }

    /// Limiting Wigner measure, independent of `n`.
    pub fn measure(&self) -> Result<WignerMeasureSpec> {
        let n = match self.family {
            Family::Twin => 2,
            _ => 1,
        };
        Ok(self.prepare(n)?.measure)
    }

    /// Rate `α(n)` against which distances are normalized.
    pub fn rate(&self, n: usize) -> f64 {
        match (self.family, self.alpha) {
            (Family::Mixture, Some(rule)) => rule.at(n),
            _ => n as f64,
        }
    }
}

/// A validated sweep over `(n, p, t)`.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub model: ModelSpec,
    pub family: FamilySpec,
    pub ns: Vec<usize>,
    pub ps: Vec<usize>,
    pub times: Vec<f64>,
    pub flow: FlowConfig,
    /// Phase nodes per torus atom.
    pub quad_nodes: usize,
}

impl SweepPlan {
    pub fn new(
        model: ModelSpec,
        family: FamilySpec,
        ns: Vec<usize>,
        ps: Vec<usize>,
        times: Vec<f64>,
        flow: FlowConfig,
        quad_nodes: usize,
    ) -> Result<Self> {
        if ns.is_empty() || ps.is_empty() || times.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one n, one p and one time".into(),
            ));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time {t} is not finite")));
        }
        if quad_nodes == 0 {
            return Err(Error::InvalidParameter(
                "torus quadrature needs at least one node".into(),
            ));
        }
        if ps.contains(&0) {
            return Err(Error::InvalidParameter("p must be at least 1".into()));
        }
        let gamma = family.family.gamma();
        for &n in &ns {
            for &p in &ps {
                if n < gamma * p {
                    return Err(Error::InvalidParticleNumber(format!(
                        "{} sweep needs n ≥ {gamma}·p, got n = {n}, p = {p}",
                        family.family
                    )));
                }
            }
        }
        if family.generators.iter().any(|g| g.len() != model.d()) {
            return Err(Error::DimensionMismatch {
                expected: model.d(),
                found: family.generators[0].len(),
                context: "generators and model",
            });
        }
        Ok(SweepPlan {
            model,
            family,
            ns,
            ps,
            times,
            flow,
            quad_nodes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRecord {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub t: f64,
    pub distance: f64,
}

/// A cell that could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub n: usize,
    pub t: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub records: Vec<RateRecord>,
    pub failures: Vec<CellFailure>,
}

fn sort_records(records: &mut [RateRecord]) {
    records.sort_by(|a, b| {
        (a.family, a.n, a.p)
            .cmp(&(b.family, b.n, b.p))
            .then(a.t.total_cmp(&b.t))
    });
}

/// Exact distances `‖ρ_n^{(p)}(t) - γ^{(p)}(t)‖₁` on every cell of the plan.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepOutcome> {
    let measure = plan.family.measure()?;
    let limits = limit_rdm_path(
        &measure,
        &plan.ps,
        &plan.times,
        plan.quad_nodes,
        &plan.flow,
        &plan.model,
    )?;
    let per_n: Vec<(Vec<RateRecord>, Vec<CellFailure>)> = plan
        .ns
        .par_iter()
        .map(|&n| sweep_one_n(plan, n, &limits))
        .collect();
    let mut out = SweepOutcome::default();
    for (records, failures) in per_n {
        out.records.extend(records);
        out.failures.extend(failures);
    }
    sort_records(&mut out.records);
    for f in &out.failures {
        warn!("sweep cell n = {} t = {:?} failed: {}", f.n, f.t, f.message);
    }
    Ok(out)
}

fn sweep_one_n(
    plan: &SweepPlan,
    n: usize,
    limits: &[Vec<DensityMatrix>],
) -> (Vec<RateRecord>, Vec<CellFailure>) {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let fail = |t: Option<f64>, e: Error| CellFailure {
        n,
        t,
        message: e.to_string(),
    };
    let setup = plan.family.prepare(n).and_then(|state| {
        let h = build_hamiltonian(&plan.model, n)?;
        h.spectral()?;
        let basis = OccupationBasis::shared(n, plan.model.d())?;
        Ok((state, h, basis))
    });
    let (state, h, basis) = match setup {
        Ok(s) => s,
        Err(e) => {
            failures.push(fail(None, e));
            return (records, failures);
        }
    };
    for (ti, &t) in plan.times.iter().enumerate() {
        let cell = || -> Result<Vec<RateRecord>> {
            let parts = state
                .components
                .iter()
                .map(|(w, psi)| Ok((*w, evolve_state(psi, &h, t)?)))
                .collect::<Result<Vec<_>>>()?;
            let rho_t = DensityMatrix::ensemble(basis.clone(), &parts)?;
            plan.ps
                .iter()
                .zip(&limits[ti])
                .map(|(&p, limit)| {
                    let distance = trace_distance(&partial_trace(&rho_t, p)?, limit)?;
                    Ok(RateRecord {
                        family: plan.family.family,
                        n,
                        p,
                        t,
                        distance,
                    })
                })
                .collect()
        };
        match cell() {
            Ok(r) => records.extend(r),
            Err(e) => failures.push(fail(Some(t), e)),
        }
    }
    (records, failures)
}

/// Least-squares fit of `log sup_t distance` against `log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub family: Family,
    pub p: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// `(n, sup_t distance)` points used.
    pub points: Vec<(usize, f64)>,
    /// Particle numbers dropped because every distance was below [`ZERO_DISTANCE`].
    pub excluded: Vec<usize>,
}

pub fn fit_slope(records: &[RateRecord], p: usize) -> Result<SlopeFit> {
    let selected: Vec<&RateRecord> = records.iter().filter(|r| r.p == p).collect();
    let family = selected
        .first()
        .map(|r| r.family)
        .ok_or_else(|| Error::InsufficientData(format!("no records with p = {p}")))?;
    let mut sup: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &selected {
        let e = sup.entry(r.n).or_insert(0.0);
        *e = e.max(r.distance);
    }
    let points: Vec<(usize, f64)> = sup
        .iter()
        .map(|(&n, &d)| (n, d))
        .filter(|&(_, d)| d > ZERO_DISTANCE)
        .collect();
    let excluded: Vec<usize> = sup
        .into_iter()
        .filter(|&(_, d)| d <= ZERO_DISTANCE)
        .map(|(n, _)| n)
        .collect();
    if !excluded.is_empty() {
        info!("{family} p = {p}: excluding zero-distance n = {excluded:?} from the slope fit");
    }
    if points.is_empty() {
        return Err(Error::ExactFamily);
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs at least 3 distinct n with positive distance, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, d)| d.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(SlopeFit {
        family,
        p,
        slope,
        intercept,
        residual,
        points,
        excluded,
    })
}

/// Closed-form bound check on one record, when the family has one there.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub record: RateRecord,
    /// Bound or exact value the record is compared with.
    pub reference: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub cells: Vec<BoundCheck>,
    /// `max distance · α(n) / C^p` over all records.
    pub envelope: f64,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.cells.iter().all(|c| c.holds)
    }
}

const BOUND_TOL: f64 = 1e-12;

/// Check every `t = 0` record against its family's closed form and measure
/// the empirical constant in `distance ≤ C_T C^p / α(n)`.
pub fn verify_bounds(records: &[RateRecord], family: &FamilySpec, c: f64) -> BoundReport {
    let mut envelope = 0.0_f64;
    let cells = records
        .iter()
        .map(|r| {
            envelope = envelope.max(r.distance * family.rate(r.n) / c.powi(r.p as i32));
            let (n, p) = (r.n as f64, r.p as f64);
            let (reference, holds) = if r.t != 0.0 {
                (None, true)
            } else {
                match family.family {
                    Family::Product => (Some(0.0), r.distance <= BOUND_TOL),
                    Family::Ghz if r.p < r.n => (Some(0.0), r.distance <= BOUND_TOL),
                    Family::Ghz => (None, true),
                    Family::W => {
                        let b = 2.0 * p / n;
                        (Some(b), r.distance <= b + BOUND_TOL)
                    }
                    Family::Twin if r.n > r.p => {
                        let b = 2f64.powi(r.p as i32) * p * p / (n - p);
                        (Some(b), r.distance <= b + BOUND_TOL)
                    }
                    Family::Twin => (None, true),
                    Family::Mixture => {
                        let exact = 2.0 / family.rate(r.n);
                        (Some(exact), (r.distance - exact).abs() <= BOUND_TOL)
                    }
                }
            };
            BoundCheck {
                record: *r,
                reference,
                holds,
            }
        })
        .collect();
    BoundReport { cells, envelope }
}

/// `family,n,p,t,distance` rows at 17 significant digits.
pub fn write_rates_csv<W: Write>(records: &[RateRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "family,n,p,t,distance")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e}",
            r.family, r.n, r.p, r.t, r.distance
        )?;
    }
    Ok(())
}

/// `family,p,slope,intercept,residual` rows.
pub fn write_slopes_csv<W: Write>(fits: &[SlopeFit], mut w: W) -> io::Result<()> {
    writeln!(w, "family,p,slope,intercept,residual")?;
    for f in fits {
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{:.16e}",
            f.family, f.p, f.slope, f.intercept, f.residual
        )?;
    }
    Ok(())
}

/// The default time grid `0.1, 0.2, …, 1.0`.
pub fn default_times() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

/// The default particle numbers `8, 16, …, 128`.
pub fn default_ns() -> Vec<usize> {
    vec![8, 16, 32, 64, 128]
}
