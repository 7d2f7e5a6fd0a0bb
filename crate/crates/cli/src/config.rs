//! Experiment configuration: a single JSON document per run.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use locaudit_core::distributions::{Marginal, ProductDistribution};
use locaudit_core::geometry::exact;

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    AuditUpper,
    AuditLower,
    MomentCheck,
    WorldSeparation,
    SpheresScan,
    LocalitySweep,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::AuditUpper => "audit_upper",
            Kind::AuditLower => "audit_lower",
            Kind::MomentCheck => "moment_check",
            Kind::WorldSeparation => "world_separation",
            Kind::SpheresScan => "spheres_scan",
            Kind::LocalitySweep => "locality_sweep",
        }
    }
}

/// A float written either as a JSON number or as a decimal string. Always
/// serialized as the shortest round-trip string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&exact::to_string(self.0))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            F(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::F(v) => Ok(Num(v)),
            Raw::S(s) => exact::parse(&s).map(Num).map_err(serde::de::Error::custom),
        }
    }
}

/// Either `"auto"` or an explicit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AutoOr {
    #[default]
    Auto,
    Value(u64),
}

impl AutoOr {
    pub fn or_else(self, f: impl FnOnce() -> HarnessResult<u64>) -> HarnessResult<u64> {
        match self {
            AutoOr::Auto => f(),
            AutoOr::Value(v) => Ok(v),
        }
    }
}

impl Serialize for AutoOr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => s.serialize_u64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AutoOr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(AutoOr::Value(v)),
            Raw::S(s) if s == "auto" => Ok(AutoOr::Auto),
            Raw::S(s) => s
                .parse()
                .map(AutoOr::Value)
                .map_err(|_| serde::de::Error::custom(format!("expected \"auto\" or a count, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    UniformBox { lo: Vec<Num>, hi: Vec<Num> },
    Gaussian { mean: Vec<Num>, sd: Vec<Num> },
    Spheres { d: usize },
}

impl Default for DistSpec {
    fn default() -> Self {
        DistSpec::UniformBox { lo: vec![Num(0.0), Num(0.0)], hi: vec![Num(1.0), Num(1.0)] }
    }
}

impl DistSpec {
    pub fn product(&self) -> HarnessResult<ProductDistribution> {
        let bad = |g: String| HarnessError::invalid("distribution", g);
        let marginals = match self {
            DistSpec::UniformBox { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(bad("lo and hi of equal, nonzero length".into()));
                }
                lo.iter()
                    .zip(hi)
                    .map(|(a, b)| Marginal::uniform(a.0, b.0).map_err(|e| bad(e.to_string())))
                    .collect::<HarnessResult<Vec<_>>>()?
            }
            DistSpec::Gaussian { mean, sd } => {
                if mean.len() != sd.len() || mean.is_empty() {
                    return Err(bad("mean and sd of equal, nonzero length".into()));
                }
                mean.iter()
                    .zip(sd)
                    .map(|(m, s)| Marginal::gaussian(m.0, s.0).map_err(|e| bad(e.to_string())))
                    .collect::<HarnessResult<Vec<_>>>()?
            }
            DistSpec::Spheres { .. } => return Err(bad("a product distribution (uniform_box or gaussian)".into())),
        };
        ProductDistribution::new(marginals).map_err(|e| bad(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditorKind {
    Simple,
    /// Always answers `constant_estimate`.
    Constant,
    /// Reads the exact loss profile; a sanity baseline.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub distribution: DistSpec,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::eps")]
    pub eps1: f64,
    #[serde(default = "defaults::eps")]
    pub eps2: f64,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub k: AutoOr,
    #[serde(default)]
    pub n: AutoOr,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default = "defaults::delta_c")]
    pub delta_c: f64,

    /// audit_upper: number of equal slabs, and how many of them `f` labels -1.
    #[serde(default = "defaults::cells")]
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_cells: Option<usize>,

    /// audit_lower.
    #[serde(default = "defaults::auditors")]
    pub auditors: Vec<AuditorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_estimate: Option<f64>,

    /// moment_check: `[gamma, eps1, eps2]` triples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<[f64; 3]>>,

    /// spheres_scan. `trials` is the number of balls.
    #[serde(default = "defaults::n_points")]
    pub n_points: usize,
    #[serde(default = "defaults::restarts")]
    pub restarts: usize,
    #[serde(default = "defaults::slack")]
    pub slack: f64,

    /// locality_sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
}

mod defaults {
    use super::AuditorKind;

    pub fn gamma() -> f64 {
        0.02
    }
    pub fn eps() -> f64 {
        0.01
    }
    pub fn delta() -> f64 {
        0.1
    }
    pub fn trials() -> usize {
        100
    }
    pub fn delta_c() -> f64 {
        0.01
    }
    pub fn cells() -> usize {
        4
    }
    pub fn auditors() -> Vec<AuditorKind> {
        vec![AuditorKind::Simple, AuditorKind::Constant]
    }
    pub fn n_points() -> usize {
        4000
    }
    pub fn restarts() -> usize {
        3
    }
    pub fn slack() -> f64 {
        0.02
    }
}

/// Twenty `(gamma, eps1, eps2)` triples, all below 1/48.
pub fn admissible_grid() -> Vec<[f64; 3]> {
    let mut v = Vec::new();
    for g in [0.004, 0.008, 0.012, 0.016, 0.02] {
        for (e1, e2) in [(0.01, 0.01), (0.02, 0.02), (0.006, 0.015), (0.015, 0.008)] {
            v.push([g, e1, e2]);
        }
    }
    v
}

/// `1e-6 .. 1e-1`, four points per decade.
pub fn default_lambdas() -> Vec<f64> {
    (0..=20).map(|i| 10f64.powf(-6.0 + i as f64 / 4.0)).collect()
}

const CAP: f64 = 1.0 / 48.0;

fn open_unit(field: &str, sym: &str, v: f64) -> HarnessResult<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(HarnessError::invalid(field, format!("0 < {sym} < 1")))
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let unreadable = |reason: String| HarnessError::ConfigUnreadable { path: path.to_path_buf(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| unreadable(e.to_string()))?;
        Self::from_json(&text).map_err(|e| unreadable(e.to_string()))
    }

    /// Checks every gate the chosen kind depends on, before any work.
    pub fn validate(&self) -> HarnessResult<()> {
        open_unit("gamma", "γ", self.gamma)?;
        open_unit("eps1", "ε₁", self.eps1)?;
        open_unit("eps2", "ε₂", self.eps2)?;
        open_unit("delta", "δ", self.delta)?;
        if !(self.gamma * (1.0 + self.eps1) < 1.0) {
            return Err(HarnessError::invalid("gamma", "γ(1 + ε₁) < 1"));
        }
        if self.trials == 0 {
            return Err(HarnessError::invalid("trials", "trials ≥ 1"));
        }
        match self.kind {
            Kind::AuditUpper => self.validate_upper(),
            Kind::AuditLower | Kind::WorldSeparation => self.validate_lower(),
            Kind::MomentCheck => self.validate_grid(),
            Kind::SpheresScan => self.validate_spheres(),
            Kind::LocalitySweep => self.validate_sweep(),
        }
    }

    fn validate_upper(&self) -> HarnessResult<()> {
        if !matches!(self.distribution, DistSpec::UniformBox { .. }) {
            return Err(HarnessError::invalid("distribution", "kind = uniform_box"));
        }
        self.distribution.product()?;
        if self.cells == 0 {
            return Err(HarnessError::invalid("cells", "cells ≥ 1"));
        }
        if self.negative_cells.is_some_and(|c| c > self.cells) {
            return Err(HarnessError::invalid("negative_cells", "negative_cells ≤ cells"));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l <= 1.0 / self.cells as f64) {
                return Err(HarnessError::invalid("lambda", "0 < λ ≤ 1/cells"));
            }
        }
        Ok(())
    }

    fn validate_lower(&self) -> HarnessResult<()> {
        if !(self.eps1 < CAP) {
            return Err(HarnessError::invalid("eps1", "ε₁ < 1/48"));
        }
        if !(self.eps2 < CAP) {
            return Err(HarnessError::invalid("eps2", "ε₂ < 1/48"));
        }
        if !(self.gamma < CAP) {
            return Err(HarnessError::invalid("gamma", "γ < 1/48"));
        }
        let lambda = self.lambda.ok_or_else(|| HarnessError::invalid("lambda", "λ must be given"))?;
        if !(lambda > 0.0 && lambda < self.eps2 * self.eps2) {
            return Err(HarnessError::invalid("lambda", "0 < λ < ε₂²"));
        }
        if !(self.delta_c > 0.0 && self.delta_c < 1.0) {
            return Err(HarnessError::invalid("delta_c", "0 < δ_c < 1"));
        }
        if self.k == AutoOr::Value(0) {
            return Err(HarnessError::invalid("k", "K ≥ 1"));
        }
        if self.kind == Kind::AuditLower {
            if self.auditors.is_empty() {
                return Err(HarnessError::invalid("auditors", "at least one auditor"));
            }
            if self.constant_estimate.is_some_and(|c| !c.is_finite()) {
                return Err(HarnessError::invalid("constant_estimate", "a finite number"));
            }
        }
        self.distribution.product().map(|_| ())
    }

    fn validate_grid(&self) -> HarnessResult<()> {
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return Err(HarnessError::invalid("grid", "at least one triple"));
            }
            for (i, t) in grid.iter().enumerate() {
                if !t.iter().all(|&v| v > 0.0 && v < CAP) {
                    return Err(HarnessError::invalid(format!("grid[{i}]"), "0 < γ, ε₁, ε₂ < 1/48"));
                }
            }
        }
        Ok(())
    }

    fn validate_spheres(&self) -> HarnessResult<()> {
        match self.distribution {
            DistSpec::Spheres { d } if d >= 5 => {}
            DistSpec::Spheres { .. } => return Err(HarnessError::invalid("distribution.d", "d ≥ 5")),
            _ => return Err(HarnessError::invalid("distribution", "kind = spheres")),
        }
        if self.n_points < 2 {
            return Err(HarnessError::invalid("n_points", "n_points ≥ 2"));
        }
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return Err(HarnessError::invalid("slack", "slack ≥ 0"));
        }
        Ok(())
    }

    fn validate_sweep(&self) -> HarnessResult<()> {
        if let Some(ls) = &self.lambdas {
            if ls.is_empty() {
                return Err(HarnessError::invalid("lambdas", "at least one λ"));
            }
            if let Some(i) = ls.iter().position(|&l| !(l > 0.0 && l <= 1.0)) {
                return Err(HarnessError::invalid(format!("lambdas[{i}]"), "0 < λ ≤ 1"));
            }
        }
        Ok(())
    }
}
