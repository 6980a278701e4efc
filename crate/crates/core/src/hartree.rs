//! Hartree field flow and propagation of Wigner measures.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{check_orthonormal, CMatrix, CVector, C64, I};
use crate::quantum::ModelSpec;
use crate::symspace::{tensor_power_amplitudes, DensityMatrix, OccupationBasis, SectorOperator};

const MEASURE_TOL: f64 = 1e-12;

/// A point of the classical phase space `ℂ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState(CVector);

impl FieldState {
    pub fn new(z: CVector) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::ZeroModes(0));
        }
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical("non-finite field component".into()));
        }
        Ok(FieldState(z))
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Support of one atom of a Wigner measure, before phase averaging.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseOrbit {
    /// Uniform measure on `{e^{iθ} z}`.
    Circle { point: CVector },
    /// Uniform measure on `{e^{iθ1} a1 v1 + e^{iθ2} a2 v2}` for orthonormal `v1, v2`.
    Torus {
        first: CVector,
        first_amp: f64,
        second: CVector,
        second_amp: f64,
    },
}

impl PhaseOrbit {
    fn dim(&self) -> usize {
        match self {
            PhaseOrbit::Circle { point } => point.len(),
            PhaseOrbit::Torus { first, .. } => first.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PhaseOrbit::Circle { point } => {
                let norm = point.norm();
                if norm > 1.0 + MEASURE_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "circle point has norm {norm} > 1"
                    )));
                }
            }
            PhaseOrbit::Torus {
                first,
                first_amp,
                second,
                second_amp,
            } => {
                check_orthonormal(&[first.clone(), second.clone()], MEASURE_TOL)?;
                if !(*first_amp >= 0.0 && *second_amp >= 0.0) {
                    return Err(Error::InvalidMeasure(
                        "torus amplitudes must be non-negative".into(),
                    ));
                }
                let r2 = first_amp * first_amp + second_amp * second_amp;
                if r2 > 1.0 + MEASURE_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "torus radius² {r2} exceeds 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureAtom {
    pub weight: f64,
    pub orbit: PhaseOrbit,
}

/// Finite combination of phase-averaged atoms: a probability measure on the
/// closed unit ball, invariant under the global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMeasureSpec {
    atoms: Vec<MeasureAtom>,
}

impl WignerMeasureSpec {
    pub fn new(atoms: Vec<MeasureAtom>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidMeasure("measure has no atoms".into()))?;
        let d = first.orbit.dim();
        if d == 0 {
            return Err(Error::ZeroModes(0));
        }
        let mut total = 0.0;
        for atom in &atoms {
            if !atom.weight.is_finite() || atom.weight <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight {} must be positive",
                    atom.weight
                )));
            }
            if atom.orbit.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: atom.orbit.dim(),
                    context: "measure atoms",
                });
            }
            atom.orbit.validate()?;
            total += atom.weight;
        }
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(WignerMeasureSpec { atoms })
    }

    /// Phase-averaged point mass at `z`.
    pub fn circle(z: CVector) -> Result<Self> {
        Self::new(vec![MeasureAtom {
            weight: 1.0,
            orbit: PhaseOrbit::Circle { point: z },
        }])
    }

    pub fn atoms(&self) -> &[MeasureAtom] {
        &self.atoms
    }

    pub fn d(&self) -> usize {
        self.atoms[0].orbit.dim()
    }
}

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub dt: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { dt: 1e-3 }
    }
}

impl FlowConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step {dt} must be positive"
            )));
        }
        Ok(FlowConfig { dt })
    }
}

fn check_dim(z: &CVector, model: &ModelSpec) -> Result<()> {
    if z.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: z.len(),
            context: "field state",
        });
    }
    Ok(())
}

fn field(z: &CVector, model: &ModelSpec) -> CVector {
    (model.h0() * z + model.pair_gradient(z)) * (-I)
}

/// `ż = -i (h0 z + ∂_{z̄} Q(z))`.
pub fn vector_field(z: &FieldState, model: &ModelSpec) -> Result<FieldState> {
    check_dim(&z.0, model)?;
    FieldState::new(field(&z.0, model))
}

fn rk4_step(z: &CVector, h: f64, model: &ModelSpec) -> CVector {
    let hc = C64::new(h, 0.0);
    let half = C64::new(h / 2.0, 0.0);
    let k1 = field(z, model);
    let k2 = field(&(z + &k1 * half), model);
    let k3 = field(&(z + &k2 * half), model);
    let k4 = field(&(z + &k3 * hc), model);
    let two = C64::new(2.0, 0.0);
    z + (k1 + k2 * two + k3 * two + k4) * (hc / 6.0)
}

/// `Φ_t(z0)` by RK4 with step `cfg.dt`; negative `t` integrates backwards.
pub fn flow(z0: &FieldState, t: f64, cfg: &FlowConfig, model: &ModelSpec) -> Result<FieldState> {
    check_dim(&z0.0, model)?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t} is not finite")));
    }
    let span = t.abs();
    let dir = t.signum();
    let steps = (span / cfg.dt).floor() as usize;
    let rest = span - steps as f64 * cfg.dt;
    let mut z = z0.0.clone();
    for k in 0..steps {
        z = rk4_step(&z, dir * cfg.dt, model);
        if k % 64 == 0 && z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical(format!(
                "Hartree flow diverged near t = {}",
                dir * (k + 1) as f64 * cfg.dt
            )));
        }
    }
    if rest > 1e-14 * span.max(1.0) {
        z = rk4_step(&z, dir * rest, model);
    }
    FieldState::new(z)
        .map_err(|_| Error::Numerical(format!("Hartree flow diverged before t = {t}")))
}

/// Flow values at each time of a grid, reusing earlier segments.
pub fn flow_path(
    z0: &FieldState,
    times: &[f64],
    cfg: &FlowConfig,
    model: &ModelSpec,
) -> Result<Vec<FieldState>> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut out = vec![z0.clone(); times.len()];
    // forward from 0 for t ≥ 0, backward for t < 0
    let (neg, pos): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| times[i] < 0.0);
    for (seq, sign) in [(pos, 1.0), (neg.into_iter().rev().collect(), -1.0)] {
        let mut cur = z0.clone();
        let mut now = 0.0;
        for i in seq {
            let target = times[i];
            debug_assert!(sign * target >= 0.0);
            cur = flow(&cur, target - now, cfg, model)?;
            now = target;
            out[i] = cur.clone();
        }
    }
    Ok(out)
}

/// Weighted quadrature nodes of `μ`. Circle atoms contribute a single node
/// (the phase cancels in `|z^{⊗p}⟩⟨z^{⊗p}|`), tori `k` equally spaced
/// relative phases.
pub fn quadrature_nodes(mu: &WignerMeasureSpec, k: usize) -> Result<Vec<(f64, FieldState)>> {
    if k < 1 {
        return Err(Error::InvalidParameter(
            "torus quadrature needs at least one node".into(),
        ));
    }
    let mut nodes = Vec::new();
    for atom in &mu.atoms {
        match &atom.orbit {
            PhaseOrbit::Circle { point } => {
                nodes.push((atom.weight, FieldState::new(point.clone())?));
            }
            PhaseOrbit::Torus {
                first,
                first_amp,
                second,
                second_amp,
            } => {
                let w = atom.weight / k as f64;
                for j in 0..k {
                    let phase = C64::from_polar(*second_amp, 2.0 * PI * j as f64 / k as f64);
                    let z = first * C64::new(*first_amp, 0.0) + second * phase;
                    nodes.push((w, FieldState::new(z)?));
                }
            }
        }
    }
    Ok(nodes)
}

fn mixed_power(nodes: &[(f64, FieldState)], p: usize, d: usize) -> Result<DensityMatrix> {
    let basis = OccupationBasis::shared(p, d)?;
    let dim = basis.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (w, z) in nodes {
        let v = tensor_power_amplitudes(&z.0, &basis)?;
        m += &v * v.adjoint() * C64::new(*w, 0.0);
    }
    let op = SectorOperator::new(Arc::clone(&basis), m)?;
    DensityMatrix::new(op).map_err(|e| {
        Error::InvalidMeasure(format!(
            "limit state is not a density matrix ({e}); is the measure supported on the unit sphere?"
        ))
    })
}

/// `γ^{(p)}(t) = ∫ |z^{⊗p}⟩⟨z^{⊗p}| dμ_t(z)` with `μ_t = (Φ_t)_* μ`.
pub fn limit_rdm(
    mu: &WignerMeasureSpec,
    p: usize,
    t: f64,
    k: usize,
    cfg: &FlowConfig,
    model: &ModelSpec,
) -> Result<DensityMatrix> {
    Ok(limit_rdm_path(mu, &[p], &[t], k, cfg, model)?
        .pop()
        .and_then(|mut row| row.pop())
        .expect("one time and one order requested"))
}

/// Limit states for every `(t, p)` of a grid, indexed `[time][order]`.
pub fn limit_rdm_path(
    mu: &WignerMeasureSpec,
    ps: &[usize],
    times: &[f64],
    k: usize,
    cfg: &FlowConfig,
    model: &ModelSpec,
) -> Result<Vec<Vec<DensityMatrix>>> {
    if mu.d() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: mu.d(),
            context: "measure and model mode counts",
        });
    }
    let nodes = quadrature_nodes(mu, k)?;
    let paths: Vec<Vec<FieldState>> = nodes
        .par_iter()
        .map(|(_, z)| flow_path(z, times, cfg, model))
        .collect::<Result<_>>()?;
    (0..times.len())
        .map(|ti| {
            let moved: Vec<(f64, FieldState)> = nodes
                .iter()
                .zip(&paths)
                .map(|((w, _), path)| (*w, path[ti].clone()))
                .collect();
            ps.iter()
                .map(|&p| mixed_power(&moved, p, model.d()))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn z0() -> FieldState {
        FieldState::new(CVector::from_vec(vec![
            C64::new(0.6, 0.2),
            C64::new(-0.1, 0.768_114_574_786_860_8),
        ]))
        .unwrap()
    }

    #[test]
    fn flow_conserves_norm_and_energy() {
        let m = ModelSpec::default_dimer();
        let z = z0();
        let zt = flow(&z, 1.0, &FlowConfig::default(), &m).unwrap();
        assert!((zt.norm() - z.norm()).abs() < 1e-10);
        assert!((m.energy(zt.as_vector()) - m.energy(z.as_vector())).abs() < 1e-10);
    }

    #[test]
    fn free_flow_matches_exponential() {
        let m = ModelSpec::dimer(0.0).unwrap();
        let z = z0();
        let zt = flow(&z, 0.73, &FlowConfig::default(), &m).unwrap();
        let exact = m.free_propagator(0.73) * z.as_vector();
        assert!((zt.as_vector() - exact).norm() < 1e-12);
    }

    #[test]
    fn backward_flow_inverts() {
        let m = ModelSpec::default_dimer();
        let cfg = FlowConfig::default();
        let zt = flow(&z0(), 0.5, &cfg, &m).unwrap();
        let back = flow(&zt, -0.5, &cfg, &m).unwrap();
        assert!((back.as_vector() - z0().as_vector()).norm() < 1e-11);
    }

    #[test]
    fn path_matches_direct_flow() {
        let m = ModelSpec::default_dimer();
        let cfg = FlowConfig::default();
        let times = [0.4, -0.3, 0.1, 0.0];
        let path = flow_path(&z0(), &times, &cfg, &m).unwrap();
        for (t, zt) in times.iter().zip(&path) {
            let direct = flow(&z0(), *t, &cfg, &m).unwrap();
            assert!((zt.as_vector() - direct.as_vector()).norm() < 1e-11);
        }
    }

    #[test]
    fn rejects_bad_measures() {
        let mut v = CVector::zeros(2);
        v[0] = C64::new(1.1, 0.0);
        assert!(WignerMeasureSpec::circle(v).is_err());
        let mut e = CVector::zeros(2);
        e[0] = ONE;
        let atom = |w| MeasureAtom {
            weight: w,
            orbit: PhaseOrbit::Circle { point: e.clone() },
        };
        assert!(WignerMeasureSpec::new(vec![atom(0.5), atom(0.4)]).is_err());
        assert!(WignerMeasureSpec::new(vec![atom(1.5), atom(-0.5)]).is_err());
        assert!(quadrature_nodes(&WignerMeasureSpec::circle(e.clone()).unwrap(), 0).is_err());
    }
}
