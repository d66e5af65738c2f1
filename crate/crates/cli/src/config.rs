//! Run configuration: a TOML file with `[medium]`, `[edge]`, `[solver]`, `[effective]` and
//! `[output]` sections. Every field has a default so a minimal file only names what differs.

use edgeflow_core::lattice::{make_rational_edge, Lattice2D, RationalEdge};
use edgeflow_core::media::{Deformation, DomainWall, MediumSpec};
use edgeflow_effedge::{EffEdgeOperator, Kind};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Bands,
    BulkGap,
    Chern,
    EffSpec,
    EdgeDiagram,
    Compare,
    Validate,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Bands => "bands",
            Experiment::BulkGap => "bulk-gap",
            Experiment::Chern => "chern",
            Experiment::EffSpec => "eff-spec",
            Experiment::EdgeDiagram => "edge-diagram",
            Experiment::Compare => "compare",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallConfig {
    /// tanh | sign | tanh-bump | multi-even | multi-odd | notch | constant
    pub kind: String,
    pub steepness: Option<f64>,
    pub height: Option<f64>,
    pub l: Option<f64>,
    pub value: Option<f64>,
}

impl WallConfig {
    pub fn tanh(steepness: f64) -> Self {
        Self { kind: "tanh".into(), steepness: Some(steepness), height: None, l: None, value: None }
    }

    pub fn build(&self, field: &str) -> Result<DomainWall, ConfigError> {
        let s = self.steepness.unwrap_or(1.0);
        if !(s.is_finite() && s > 0.0) {
            return Err(field_err(&format!("{field}.steepness"), "must be positive"));
        }
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| field_err(&format!("{field}.{name}"), format!("required for kind = {}", self.kind)));
        Ok(match self.kind.as_str() {
            "tanh" => DomainWall::Tanh { steepness: s },
            "sign" => DomainWall::Sign,
            "tanh-bump" => DomainWall::TanhBump { steepness: s, height: need(self.height, "height")? },
            "multi-even" => DomainWall::MultiEven { l: need(self.l, "l")? },
            "multi-odd" => DomainWall::MultiOdd { l: need(self.l, "l")? },
            "notch" => DomainWall::Notch { steepness: s },
            "constant" => DomainWall::Constant { value: need(self.value, "value")? },
            other => return Err(field_err(&format!("{field}.kind"), format!("unknown wall kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    /// Tilt angle of T(φ); 0 is the undeformed square lattice.
    pub phi: f64,
    pub delta: f64,
    pub wall: WallConfig,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self { phi: 0.0, delta: 0.1, wall: WallConfig::tanh(10.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeConfig {
    pub m1: i64,
    pub n1: i64,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self { m1: 0, n1: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Grid points per unit cell side.
    pub n: usize,
    /// Strip width in cells; absent uses the automatic width.
    pub width: Option<usize>,
    /// Effective-operator grid size and half length.
    pub m: usize,
    pub lx: Option<f64>,
    /// Chern grid size per axis and the number of bands below the gap.
    pub nk: usize,
    pub bands_below: usize,
    /// Quasimomentum samples per segment (bands) or along the slice (strip gaps).
    pub nq: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub kappa_points: usize,
    pub max_states: usize,
    /// κ values compared by `compare`.
    pub compare_kappas: Vec<f64>,
    /// Lowest bands reported by `bands`.
    pub bands: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            n: 20,
            width: None,
            m: 4096,
            lx: None,
            nk: 12,
            bands_below: 2,
            nq: 48,
            k_min: pi - 1.0,
            k_max: pi + 1.0,
            k_points: 17,
            kappa_min: -3.0,
            kappa_max: 3.0,
            kappa_points: 61,
            max_states: 16,
            compare_kappas: vec![-0.5, 0.0, 0.5],
            bands: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveConfig {
    /// schrodinger | dirac-plus | dirac-minus
    pub kind: String,
    pub alpha: [f64; 3],
    pub theta: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: f64,
    pub wall: WallConfig,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        Self { kind: "schrodinger".into(), alpha: [1.0, 1.0, 1.0], theta: 1.0, a: [0.3, 1.0, 1.0], b: [0.0, 0.0, 1.0], c: 0.5, wall: WallConfig::tanh(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Any of csv, json, svg.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub medium: MediumConfig,
    pub edge: EdgeConfig,
    pub solver: SolverConfig,
    pub effective: EffectiveConfig,
    pub output: OutputConfig,
}


pub const FORMATS: [&str; 3] = ["csv", "json", "svg"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.display().to_string(), source: e })?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.medium;
        if !(m.phi.is_finite() && m.phi.abs() < 0.25 * std::f64::consts::PI) {
            return Err(field_err("medium.phi", "must satisfy |φ| < π/4"));
        }
        if !(m.delta.is_finite() && (0.0..=1.0).contains(&m.delta)) {
            return Err(field_err("medium.delta", "must lie in [0, 1]"));
        }
        m.wall.build("medium.wall")?;
        self.edge()?;
        let s = &self.solver;
        if s.n < 8 || s.n % 2 == 1 {
            return Err(field_err("solver.n", "must be an even number ≥ 8"));
        }
        if let Some(w) = s.width {
            if w < 4 || w % 2 == 1 {
                return Err(field_err("solver.width", "must be an even number ≥ 4"));
            }
        }
        if s.m < 64 {
            return Err(field_err("solver.m", "must be ≥ 64"));
        }
        if let Some(lx) = s.lx {
            if !(lx.is_finite() && lx > 0.0) {
                return Err(field_err("solver.lx", "must be positive"));
            }
        }
        if s.nk < 4 {
            return Err(field_err("solver.nk", "must be ≥ 4"));
        }
        if s.bands_below == 0 {
            return Err(field_err("solver.bands_below", "must be ≥ 1"));
        }
        if s.nq < 4 {
            return Err(field_err("solver.nq", "must be ≥ 4"));
        }
        if s.bands == 0 {
            return Err(field_err("solver.bands", "must be ≥ 1"));
        }
        if !(s.k_max > s.k_min) || s.k_points < 2 {
            return Err(field_err("solver.k_points", "k grid needs k_max > k_min and at least two points"));
        }
        if !(s.kappa_max > s.kappa_min) || s.kappa_points < 2 {
            return Err(field_err("solver.kappa_points", "κ grid needs kappa_max > kappa_min and at least two points"));
        }
        if s.compare_kappas.is_empty() || s.compare_kappas.iter().any(|k| !k.is_finite()) {
            return Err(field_err("solver.compare_kappas", "needs at least one finite value"));
        }
        if s.max_states == 0 {
            return Err(field_err("solver.max_states", "must be ≥ 1"));
        }
        let e = &self.effective;
        if !["schrodinger", "dirac-plus", "dirac-minus"].contains(&e.kind.as_str()) {
            return Err(field_err("effective.kind", format!("unknown kind '{}'", e.kind)));
        }
        e.wall.build("effective.wall")?;
        for f in &self.output.formats {
            if !FORMATS.contains(&f.as_str()) {
                return Err(field_err("output.formats", format!("unknown format '{f}'")));
            }
        }
        Ok(())
    }

    pub fn medium(&self) -> Result<MediumSpec, ConfigError> {
        let d = Deformation::tilt(self.medium.phi).map_err(|e| field_err("medium.phi", e.to_string()))?;
        let mut m = MediumSpec::paper(d, self.medium.delta);
        m.wall = self.medium.wall.build("medium.wall")?;
        Ok(m)
    }

    pub fn edge(&self) -> Result<RationalEdge, ConfigError> {
        make_rational_edge(self.edge.m1, self.edge.n1, Lattice2D::square()).map_err(|e| field_err("edge", e.to_string()))
    }

    pub fn k_grid(&self) -> Vec<f64> {
        let s = &self.solver;
        (0..s.k_points).map(|i| s.k_min + (s.k_max - s.k_min) * i as f64 / (s.k_points - 1) as f64).collect()
    }

    pub fn kappa_grid(&self) -> Vec<f64> {
        let s = &self.solver;
        (0..s.kappa_points).map(|i| s.kappa_min + (s.kappa_max - s.kappa_min) * i as f64 / (s.kappa_points - 1) as f64).collect()
    }

    pub fn effective_operator(&self) -> Result<EffEdgeOperator, ConfigError> {
        let e = &self.effective;
        let wall = e.wall.build("effective.wall")?;
        let op = match e.kind.as_str() {
            "schrodinger" => EffEdgeOperator::schrodinger(e.alpha, e.theta, &self.edge()?, wall),
            "dirac-plus" => EffEdgeOperator::dirac(Kind::DiracPlus, e.a, e.b, e.c, wall),
            _ => EffEdgeOperator::dirac(Kind::DiracMinus, e.a, e.b, e.c, wall),
        };
        let lx = self.solver.lx.unwrap_or(op.lx);
        let op = op.with_domain(lx, self.solver.m);
        op.validate().map_err(|err| field_err("effective", err.to_string()))?;
        Ok(op)
    }
}
