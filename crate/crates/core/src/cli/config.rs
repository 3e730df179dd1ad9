//! Experiment configuration, read from TOML.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::LinearStatistic;
use crate::equilibrium::SolveOptions;
use crate::error::{Error, Result};
use crate::potential::Potential;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Full,
    Restricted,
    Decomposed,
    /// Zero-based cut index.
    Cut(usize),
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => f.write_str("full"),
            Self::Restricted => f.write_str("restricted"),
            Self::Decomposed => f.write_str("decomposed"),
            Self::Cut(i) => write!(f, "cut:{i}"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "restricted" => Ok(Self::Restricted),
            "decomposed" => Ok(Self::Decomposed),
            _ => s
                .strip_prefix("cut:")
                .and_then(|i| i.parse().ok())
                .map(Self::Cut)
                .ok_or_else(|| format!("unknown model kind `{s}`")),
        }
    }
}

impl Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Offset {
    Auto(Auto),
    Value(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// Ascending monomial coefficients.
    pub coefficients: Vec<f64>,
    #[serde(default = "auto_offset")]
    pub offset: Offset,
    #[serde(default)]
    pub label: String,
}

fn auto_offset() -> Offset {
    Offset::Auto(Auto::Auto)
}

impl PotentialConfig {
    pub fn build(&self) -> Result<Potential> {
        match self.offset {
            Offset::Auto(_) => Potential::with_auto_offset(self.coefficients.clone(), self.label.clone()),
            Offset::Value(v) => Potential::new(self.coefficients.clone(), v, self.label.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub samples: usize,
    pub burn_in: usize,
    pub thinning: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_cells() -> usize {
    400
}

fn default_tol() -> f64 {
    1e-7
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            cells: default_cells(),
            tol: default_tol(),
        }
    }
}

impl EquilibriumConfig {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            cells: self.cells,
            tol: self.tol,
            ..SolveOptions::default()
        }
    }
}

/// One diagnostic and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagnosticConfig {
    /// `alpha` defaults to `0.1·min R_i`.
    Rigidity { alpha: Option<f64> },
    Fluctuation { h: LinearStatistic, tau: f64 },
    /// Evaluation points as `[re, im]` pairs.
    StieltjesGap { z: Vec<[f64; 2]> },
    Loop { phi: LinearStatistic },
    Wasserstein {},
    Escape { delta: f64 },
    /// Mean of `ℋ_r − ℋ`; decomposed models only.
    DeltaH {},
}

impl DiagnosticConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Rigidity { .. } => "rigidity",
            Self::Fluctuation { .. } => "fluctuation",
            Self::StieltjesGap { .. } => "stieltjes_gap",
            Self::Loop { .. } => "loop",
            Self::Wasserstein {} => "wasserstein",
            Self::Escape { .. } => "escape",
            Self::DeltaH {} => "delta_h",
        }
    }

    pub fn z_points(z: &[[f64; 2]]) -> Vec<Complex64> {
        z.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub beta: f64,
    pub model: ModelKind,
    /// Block padding for decomposed and cut models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Domain padding for the restricted model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Field scale for cut models.
    #[serde(default = "one")]
    pub cut_scale: f64,
    pub n: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub potential: PotentialConfig,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub equilibrium: EquilibriumConfig,
    #[serde(default)]
    pub diagnostics: Vec<DiagnosticConfig>,
}

fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.n.is_empty() || self.n.contains(&0) || self.n.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n must be a non-empty, strictly ascending list of positive sizes".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.sampling.samples == 0 || self.sampling.thinning == 0 {
            return bad("sampling.samples and sampling.thinning must be positive".into());
        }
        if !(self.cut_scale > 0.0) {
            return bad("cut_scale must be positive".into());
        }
        if self.model == ModelKind::Restricted && self.delta.is_none() {
            return bad("restricted model needs `delta`".into());
        }
        for d in &self.diagnostics {
            match d {
                DiagnosticConfig::Fluctuation { h, .. } => h.validate().map_err(Error::Config)?,
                DiagnosticConfig::Loop { phi } => phi.validate().map_err(Error::Config)?,
                DiagnosticConfig::StieltjesGap { z } if z.is_empty() || z.iter().any(|p| p[1] == 0.0) => {
                    return bad("stieltjes_gap needs off-axis points".into());
                }
                DiagnosticConfig::Escape { delta } if !(*delta >= 0.0) => {
                    return bad("escape delta must be non-negative".into());
                }
                DiagnosticConfig::Rigidity { alpha: Some(a) } if !(*a > 0.0) => {
                    return bad("rigidity alpha must be positive".into());
                }
                DiagnosticConfig::DeltaH {} if self.model != ModelKind::Decomposed => {
                    return bad("delta_h needs the decomposed model".into());
                }
                _ => {}
            }
        }
        self.potential.build().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let text = serde_json::to_string(&c).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Diagnostic names, suffixed with `#k` when a kind occurs more than once.
    pub fn statistic_labels(&self) -> Vec<String> {
        let names: Vec<&str> = self.diagnostics.iter().map(|d| d.name()).collect();
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        names
            .iter()
            .map(|&name| {
                let k = seen.entry(name).or_insert(0);
                *k += 1;
                if names.iter().filter(|&&m| m == name).count() > 1 {
                    format!("{name}#{k}")
                } else {
                    name.to_string()
                }
            })
            .collect()
    }

    /// Whether the exact tridiagonal sampler applies: full model with `V = x²/2`.
    pub fn tridiagonal_eligible(&self) -> Result<bool> {
        let p = self.potential.build()?;
        Ok(self.model == ModelKind::Full && p.coefficients() == [0.0, 0.0, 0.5])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
schema_version = 1
beta = 2.0
model = "cut:1"
kappa = 0.05
n = [16, 32]
seeds = [1, 2]

[potential]
coefficients = [0.0, 0.0, -2.0, 0.0, 0.25]
offset = "auto"

[sampling]
samples = 10
burn_in = 20
thinning = 2

[[diagnostics]]
kind = "rigidity"

[[diagnostics]]
kind = "fluctuation"
tau = 0.1
h = { kind = "bump", centre = 2.0, radius = 0.5, amplitude = 1.0 }

[[diagnostics]]
kind = "stieltjes_gap"
z = [[0.0, 1.0], [2.0, 0.5]]

[[diagnostics]]
kind = "wasserstein"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::parse(EXAMPLE).unwrap();
        assert_eq!(cfg.model, ModelKind::Cut(1));
        assert_eq!(cfg.potential.offset, Offset::Auto(Auto::Auto));
        assert_eq!(cfg.diagnostics.len(), 4);
        let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        let numeric = EXAMPLE.replace("offset = \"auto\"", "offset = 3.5");
        assert_eq!(ExperimentConfig::parse(&numeric).unwrap().potential.offset, Offset::Value(3.5));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        for (from, to) in [
            ("beta = 2.0", "beta = 2.0\nbta = 1.0"),
            ("kind = \"wasserstein\"", "kind = \"wasserstein\"\nextra = 1"),
            ("kind = \"rigidity\"", "kind = \"rigidty\""),
            ("n = [16, 32]", "n = [32, 16]"),
            ("schema_version = 1", "schema_version = 2"),
            ("model = \"cut:1\"", "model = \"cut:x\""),
            ("offset = \"auto\"", "offset = \"automatic\""),
            ("samples = 10", "samples = 10\nseed = 3"),
        ] {
            let text = EXAMPLE.replace(from, to);
            assert!(matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))), "{to}");
        }
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut cfg = ExperimentConfig::parse(EXAMPLE).unwrap();
        let h = cfg.hash();
        cfg.output = Some("elsewhere".into());
        assert_eq!(cfg.hash(), h);
        cfg.beta = 1.0;
        assert_ne!(cfg.hash(), h);
    }

    #[test]
    fn model_kind_strings() {
        for k in [ModelKind::Full, ModelKind::Restricted, ModelKind::Decomposed, ModelKind::Cut(3)] {
            assert_eq!(k.to_string().parse::<ModelKind>().unwrap(), k);
        }
    }
}
