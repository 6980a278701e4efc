//! JSON run configuration.
//!
//! Complex numbers are `[re, im]` pairs; matrices are row-major lists of rows.
//! Every block is optional and defaults to the dimer model with a product
//! state on the default sweep grid.

use std::fmt;
use std::fs;
use std::path::Path;

use mflab_core::bench::{default_ns, default_times, AlphaRule, FamilySpec, SweepPlan};
use mflab_core::expansion::SeriesConfig;
use mflab_core::hartree::FlowConfig;
use mflab_core::linalg::{CMatrix, CVector, C64};
use mflab_core::quantum::{Family, ModelSpec};
use mflab_core::symspace::OccupationBasis;
use serde::{Deserialize, Serialize};

pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    /// One-body matrix `h̃0`, `d × d`.
    pub h0: Vec<Vec<ComplexPair>>,
    pub interaction: Interaction,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 2,
            h0: vec![vec![[0.0, 0.0], [1.0, 0.0]], vec![[1.0, 0.0], [0.0, 0.0]]],
            interaction: Interaction::Onsite { g: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Interaction {
    /// `2Q̃ = g` times the projector onto doubly occupied modes.
    Onsite { g: f64 },
    /// Explicit `Q̃` on the two-particle sector, in occupation-basis order.
    Kernel { entries: Vec<Vec<ComplexPair>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Product,
    W,
    Ghz,
    Twin,
    Mixture,
}

impl From<FamilyName> for Family {
    fn from(f: FamilyName) -> Family {
        match f {
            FamilyName::Product => Family::Product,
            FamilyName::W => Family::W,
            FamilyName::Ghz => Family::Ghz,
            FamilyName::Twin => Family::Twin,
            FamilyName::Mixture => Family::Mixture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaName {
    SqrtN,
    N,
}

/// `α` as a number or as a rule in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaConfig {
    Fixed(f64),
    Rule(AlphaName),
}

impl From<AlphaConfig> for AlphaRule {
    fn from(a: AlphaConfig) -> AlphaRule {
        match a {
            AlphaConfig::Fixed(x) => AlphaRule::Fixed(x),
            AlphaConfig::Rule(AlphaName::SqrtN) => AlphaRule::SqrtN,
            AlphaConfig::Rule(AlphaName::N) => AlphaRule::N,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub family: FamilyName,
    /// Orthonormal generators; the standard basis vectors when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaConfig>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            family: FamilyName::Product,
            generators: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub ps: Vec<usize>,
    pub times: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            ns: default_ns(),
            ps: vec![1, 2],
            times: default_times(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// RK4 step of the Hartree flow.
    pub dt: f64,
    /// Phase nodes per torus atom.
    pub quadrature: usize,
    /// Gauss-Legendre nodes per simplex variable.
    pub gauss_nodes: usize,
    pub kmax: usize,
    /// Base `C > 2` of the `C^p` growth in the series bound.
    pub series_c: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let s = SeriesConfig::default();
        NumericsConfig {
            dt: FlowConfig::default().dt,
            quadrature: 64,
            gauss_nodes: s.gauss_nodes,
            kmax: s.kmax,
            series_c: s.c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// File names, relative to `--out`.
    pub rates: String,
    pub slopes: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            rates: "rates.csv".into(),
            slopes: "slopes.csv".into(),
        }
    }
}

/// A configuration that failed to load or validate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, e: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{key}: {e}"))
}

impl RunConfig {
    /// Parse JSON text; errors name the offending key and position.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                ConfigError(inner.to_string())
            } else {
                ConfigError(format!("{path}: {inner}"))
            }
        })?;
        de.end().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// Validate every block and build the library objects.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let model = self.model.build()?;
        let family = self.state.build(model.d())?;
        let n = &self.numerics;
        let flow = FlowConfig::new(n.dt).map_err(|e| invalid("numerics.dt", e))?;
        if n.quadrature == 0 {
            return Err(invalid("numerics.quadrature", "must be at least 1"));
        }
        if n.gauss_nodes == 0 {
            return Err(invalid("numerics.gauss_nodes", "must be at least 1"));
        }
        if n.kmax > mflab_core::expansion::MAX_ORDER {
            return Err(invalid(
                "numerics.kmax",
                format!("at most {} is supported", mflab_core::expansion::MAX_ORDER),
            ));
        }
        if !(n.series_c > 2.0 && n.series_c.is_finite()) {
            return Err(invalid("numerics.series_c", "must be a finite number > 2"));
        }
        let series = SeriesConfig {
            kmax: n.kmax,
            gauss_nodes: n.gauss_nodes,
            c: n.series_c,
        };
        let plan = SweepPlan::new(
            model.clone(),
            family.clone(),
            self.sweep.ns.clone(),
            self.sweep.ps.clone(),
            self.sweep.times.clone(),
            flow,
            n.quadrature,
        )
        .map_err(|e| invalid("sweep", e))?;
        for (key, name) in [
            ("output.rates", &self.output.rates),
            ("output.slopes", &self.output.slopes),
        ] {
            if name.is_empty() {
                return Err(invalid(key, "file name is empty"));
            }
        }
        Ok(Resolved {
            model,
            family,
            plan,
            flow,
            series,
            quadrature: n.quadrature,
        })
    }
}

fn complex_matrix(
    key: &str,
    rows: &[Vec<ComplexPair>],
    dim: usize,
) -> Result<CMatrix, ConfigError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(invalid(key, format!("expected a {dim}×{dim} matrix")));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = rows[i][j];
        C64::new(re, im)
    }))
}

fn complex_vector(key: &str, entries: &[ComplexPair], dim: usize) -> Result<CVector, ConfigError> {
    if entries.len() != dim {
        return Err(invalid(
            key,
            format!("expected {dim} entries, got {}", entries.len()),
        ));
    }
    Ok(CVector::from_iterator(
        dim,
        entries.iter().map(|&[re, im]| C64::new(re, im)),
    ))
}

impl ModelConfig {
    fn build(&self) -> Result<ModelSpec, ConfigError> {
        if self.d == 0 {
            return Err(invalid("model.d", "at least one mode is required"));
        }
        let h0 = complex_matrix("model.h0", &self.h0, self.d)?;
        match &self.interaction {
            Interaction::Onsite { g } => ModelSpec::onsite(h0, *g).map_err(|e| invalid("model", e)),
            Interaction::Kernel { entries } => {
                let dim2 = OccupationBasis::shared(2, self.d)
                    .map_err(|e| invalid("model.d", e))?
                    .dim();
                let k = complex_matrix("model.interaction.kernel.entries", entries, dim2)?;
                ModelSpec::new(h0, k).map_err(|e| invalid("model", e))
            }
        }
    }
}

impl StateConfig {
    fn build(&self, d: usize) -> Result<FamilySpec, ConfigError> {
        let family = Family::from(self.family);
        let alpha = self.alpha.map(AlphaRule::from);
        if let Some(AlphaRule::Fixed(a)) = alpha {
            if !(a >= 1.0 && a.is_finite()) {
                return Err(invalid(
                    "state.alpha",
                    format!("α = {a} must be a finite number ≥ 1"),
                ));
            }
        }
        if alpha.is_some() && family != Family::Mixture {
            return Err(invalid("state.alpha", format!("{family} states take no α")));
        }
        let spec = match &self.generators {
            None => FamilySpec::standard(family, d, alpha),
            Some(gens) => {
                let vs = gens
                    .iter()
                    .enumerate()
                    .map(|(k, g)| complex_vector(&format!("state.generators[{k}]"), g, d))
                    .collect::<Result<Vec<_>, _>>()?;
                FamilySpec::new(family, vs, alpha)
            }
        }
        .map_err(|e| invalid("state", e))?;
        // a state at the smallest admissible n catches bad generators at load
        spec.prepare(family.gamma().max(1))
            .map_err(|e| invalid("state.generators", e))?;
        Ok(spec)
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: ModelSpec,
    pub family: FamilySpec,
    pub plan: SweepPlan,
    pub flow: FlowConfig,
    pub series: SeriesConfig,
    pub quadrature: usize,
}
