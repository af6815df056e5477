//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::StudyConfig;
use crate::borel_interp::{LaplaceKernel, Method};
use crate::heatsim::BcKind;
use crate::target::{AnalyticTarget, Setting, TargetSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Schema violation; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SchemaError {}

fn bad(msg: impl Into<String>) -> SchemaError {
    SchemaError(msg.into())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub synthesis: Option<SynthesisConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub study: Option<StudyConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySetting {
    /// Even state on [0, 1], ψ_x(0) = 0, control ψ_x(1) = h.
    Neumann,
    /// Odd state on [0, 1], ψ(0) = 0, control ψ(1) = k.
    Dirichlet,
    /// State on [−1, 1] with controls in Robin form at both ends.
    TwoSided,
}

impl BoundarySetting {
    pub fn domain(self) -> (f64, f64) {
        match self {
            BoundarySetting::TwoSided => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn reachability(self) -> Setting {
        match self {
            BoundarySetting::Neumann => Setting::OneSidedNeumann,
            BoundarySetting::Dirichlet => Setting::OneSidedDirichlet,
            BoundarySetting::TwoSided => Setting::TwoSided,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub setting: BoundarySetting,
    pub horizon: f64,
    /// Must match the setting's canonical interval when given.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    /// Robin pairs (α, β) at x = −1 and x = 1 for the two-sided setting.
    #[serde(default)]
    pub left: Option<[f64; 2]>,
    #[serde(default)]
    pub right: Option<[f64; 2]>,
}

impl ProblemConfig {
    pub fn domain(&self) -> (f64, f64) {
        self.setting.domain()
    }

    pub fn left_kind(&self) -> BcKind {
        match (self.setting, self.left) {
            (BoundarySetting::Neumann, _) => BcKind::Neumann,
            (BoundarySetting::Dirichlet, _) => BcKind::Dirichlet,
            (BoundarySetting::TwoSided, Some([alpha, beta])) => BcKind::Robin { alpha, beta },
            (BoundarySetting::TwoSided, None) => BcKind::Neumann,
        }
    }

    pub fn right_kind(&self) -> BcKind {
        match (self.setting, self.right) {
            (BoundarySetting::Neumann, _) => BcKind::Neumann,
            (BoundarySetting::Dirichlet, _) => BcKind::Dirichlet,
            (BoundarySetting::TwoSided, Some([alpha, beta])) => BcKind::Robin { alpha, beta },
            (BoundarySetting::TwoSided, None) => BcKind::Neumann,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub method: Method,
    /// Loss factor R' of the real-variable route.
    #[serde(default)]
    pub r_prime: Option<f64>,
    /// Target radius R; defaults to the nearest singularity (capped at 4).
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Fixed truncation order; otherwise chosen from `tol`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_bits")]
    pub precision_bits: u32,
    /// Kernel g of the complex-variable route; d_n = n! g^{(n−1)}(0).
    #[serde(default)]
    pub kernel: Option<LaplaceKernel>,
    /// θ_T(0) for the complex-variable route.
    #[serde(default = "default_d0")]
    pub d0: f64,
    /// Grid points used to measure M' of each flat output.
    #[serde(default = "default_certify_points")]
    pub certify_points: usize,
}

fn default_sigma() -> f64 {
    1.5
}
fn default_tol() -> f64 {
    1e-8
}
fn default_bits() -> u32 {
    256
}
fn default_d0() -> f64 {
    1.0
}
fn default_certify_points() -> usize {
    64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub nx: usize,
    pub nt: usize,
    /// Store every k-th time row of the field.
    #[serde(default)]
    pub store_every: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Binary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig { directory: None, formats: default_formats() }
    }
}

impl OutputsConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Bound on the relative L∞ terminal error.
    #[serde(default = "default_verify_tol")]
    pub tolerance: f64,
}

fn default_verify_tol() -> f64 {
    1e-3
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { tolerance: default_verify_tol() }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(format!("malformed JSON: {e}")))?;
        match v.get("schema_version").and_then(|s| s.as_u64()) {
            Some(s) if s == SCHEMA_VERSION as u64 => {}
            Some(s) => return Err(bad(format!("schema_version {s} is not supported (want {SCHEMA_VERSION})"))),
            None => return Err(bad("missing integer field schema_version")),
        }
        serde_json::from_value(v).map_err(|e| bad(format!("schema: {e}")))
    }

    pub fn problem(&self) -> Result<&ProblemConfig, SchemaError> {
        self.problem.as_ref().ok_or_else(|| bad("missing section: problem"))
    }

    pub fn synthesis(&self) -> Result<&SynthesisConfig, SchemaError> {
        self.synthesis.as_ref().ok_or_else(|| bad("missing section: synthesis"))
    }

    pub fn simulation(&self) -> Result<&SimulationConfig, SchemaError> {
        self.simulation.as_ref().ok_or_else(|| bad("missing section: simulation"))
    }

    pub fn analytic_target(&self) -> Result<AnalyticTarget, SchemaError> {
        let spec = self.target.clone().ok_or_else(|| bad("missing section: target"))?;
        AnalyticTarget::new(spec).map_err(|e| bad(format!("target: {e}")))
    }

    /// Cross-field checks for the steering pipeline.
    pub fn validate_pipeline(&self) -> Result<(), SchemaError> {
        let p = self.problem()?;
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(bad("problem.horizon must be positive"));
        }
        if let Some([a, b]) = p.domain {
            if (a, b) != p.domain() {
                return Err(bad(format!("problem.domain for {:?} must be {:?}", p.setting, p.domain())));
            }
        }
        if p.setting != BoundarySetting::TwoSided && (p.left.is_some() || p.right.is_some()) {
            return Err(bad("Robin pairs are only read in the two-sided setting"));
        }
        for pair in [p.left, p.right].into_iter().flatten() {
            if pair == [0.0, 0.0] || pair.iter().any(|v| !v.is_finite()) {
                return Err(bad(format!("invalid Robin pair {pair:?}")));
            }
        }
        let s = self.synthesis()?;
        if !(s.sigma > 1.0) {
            return Err(bad("synthesis.sigma must exceed 1"));
        }
        if !(s.tol > 0.0) {
            return Err(bad("synthesis.tol must be positive"));
        }
        if !(53..=4096).contains(&s.precision_bits) {
            return Err(bad("synthesis.precision_bits must lie in [53, 4096]"));
        }
        let r0 = crate::r0();
        match s.method {
            Method::Petzsche => {
                if s.kernel.is_some() {
                    return Err(bad("synthesis.kernel belongs to the laplace method"));
                }
                let f = self.analytic_target()?;
                let rp = s.r_prime.ok_or_else(|| bad("synthesis.r_prime is required for petzsche"))?;
                let r = target_radius(&f, s.r).ok_or_else(|| bad("synthesis.r is required for this target"))?;
                if !(rp > r0 && rp < r) {
                    return Err(bad(format!("synthesis.r_prime = {rp} must lie in (R0, R) = ({r0}, {r})")));
                }
            }
            Method::Laplace => {
                if s.kernel.is_none() {
                    return Err(bad("synthesis.kernel is required for laplace"));
                }
                if self.target.is_some() {
                    return Err(bad("the laplace method derives the target from its kernel; drop `target`"));
                }
                if p.setting != BoundarySetting::Neumann {
                    return Err(bad("the laplace method supports the neumann setting only"));
                }
                if let Some(r) = s.r {
                    if !(r > 1.0) {
                        return Err(bad("synthesis.r must exceed 1"));
                    }
                }
            }
        }
        if let Some(sim) = &self.simulation {
            if sim.nx < 16 || sim.nt < 16 {
                return Err(bad("simulation.nx and simulation.nt must be at least 16"));
            }
            if sim.store_every == Some(0) {
                return Err(bad("simulation.store_every must be positive"));
            }
        }
        if !(self.verify.tolerance > 0.0) {
            return Err(bad("verify.tolerance must be positive"));
        }
        Ok(())
    }
}

/// Radius R used to certify a target: explicit, else the nearest singularity
/// from 0, capped at 4 for entire targets.
pub fn target_radius(f: &AnalyticTarget, explicit: Option<f64>) -> Option<f64> {
    if explicit.is_some() {
        return explicit;
    }
    if let TargetSpec::Coeffs { radius, center, .. } = &f.spec {
        return Some(radius - center.abs());
    }
    let s = f.singularities()?;
    Some(s.iter().map(|p| p.norm()).fold(4.0, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NEUMANN: &str = r#"{
        "schema_version": 1,
        "problem": {"setting": "neumann", "horizon": 0.5},
        "target": {"kind": "builtin", "name": "inverse-quadratic", "a": 1.5},
        "synthesis": {"method": "petzsche", "r_prime": 1.21},
        "simulation": {"nx": 200, "nt": 400}
    }"#;

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::parse(NEUMANN).unwrap();
        c.validate_pipeline().unwrap();
        assert_eq!(c.synthesis().unwrap().tol, 1e-8);
        assert_eq!(target_radius(&c.analytic_target().unwrap(), None), Some(1.5));
    }

    #[test]
    fn rejects_schema_problems() {
        assert!(ExperimentConfig::parse("{").is_err());
        assert!(ExperimentConfig::parse(r#"{"schema_version": 2}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"schema_version": 1, "bogus": 3}"#).is_err());
        let c = ExperimentConfig::parse(&NEUMANN.replace("1.21", "1.6")).unwrap();
        assert!(c.validate_pipeline().is_err());
        let c = ExperimentConfig::parse(&NEUMANN.replace("0.5}", "-1}")).unwrap();
        assert!(c.validate_pipeline().is_err());
    }
}
