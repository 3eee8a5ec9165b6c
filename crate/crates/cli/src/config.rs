//! Scenario configuration files.
//!
//! A config is a JSON object `{"kind": ..., "parameters": {...}, "seed": n}`.
//! Complex numbers are written either as a bare number or as `[re, im]`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use holonomic_core::berry::ParameterPath;
use holonomic_core::lambda::SphericalAngles;
use holonomic_core::propagate::{AdiabaticRunConfig, Method, Ramp};
use holonomic_core::{CMatrix, CVector, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Effective,
    Berry,
    Full,
}

impl MethodName {
    pub fn method(self) -> Method {
        match self {
            MethodName::Effective => Method::Effective,
            MethodName::Berry => Method::Berry,
            MethodName::Full => Method::Full,
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.method().as_str())
    }
}

impl std::str::FromStr for MethodName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "effective" => Ok(MethodName::Effective),
            "berry" => Ok(MethodName::Berry),
            "full" => Ok(MethodName::Full),
            other => Err(format!("unknown method `{other}` (expected effective, berry or full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampName {
    Linear,
    Smooth,
}

impl RampName {
    pub fn ramp(self) -> Ramp {
        match self {
            RampName::Linear => Ramp::Linear,
            RampName::Smooth => Ramp::Smooth,
        }
    }
}

fn linear() -> RampName {
    RampName::Linear
}

fn smooth() -> RampName {
    RampName::Smooth
}

fn gate_methods() -> Vec<MethodName> {
    vec![MethodName::Effective]
}

fn loop_methods() -> Vec<MethodName> {
    vec![MethodName::Effective, MethodName::Berry]
}

/// Settings for the full Schrödinger integration, shared by all kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullDynamicsParams {
    #[serde(default = "FullDynamicsParams::default_omega_t")]
    pub omega_t: f64,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "smooth")]
    pub ramp: RampName,
}

impl FullDynamicsParams {
    fn default_omega_t() -> f64 {
        2000.0
    }

    pub fn run_config(&self, omega_t: f64) -> holonomic_core::Result<AdiabaticRunConfig> {
        let steps = self.steps.unwrap_or_else(|| AdiabaticRunConfig::default_steps(omega_t));
        AdiabaticRunConfig::new(omega_t, steps, self.ramp.ramp())
    }
}

impl Default for FullDynamicsParams {
    fn default() -> Self {
        Self { omega_t: Self::default_omega_t(), steps: None, ramp: RampName::Smooth }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateParams {
    pub n: usize,
    /// Components on levels `1..n` (or `1..n-1`, with level `n` implied 0).
    pub psi: Vec<ComplexValue>,
    pub phi: f64,
    #[serde(default = "gate_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default = "GateParams::default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub times: Option<[f64; 3]>,
    #[serde(default = "linear")]
    pub theta_ramp: RampName,
    #[serde(default = "linear")]
    pub phi_ramp: RampName,
    #[serde(default)]
    pub full: FullDynamicsParams,
}

impl GateParams {
    fn default_steps() -> usize {
        10_000
    }

    /// `psi` padded to length `n` and normalized.
    pub fn psi_vector(&self) -> Result<CVector, CliError> {
        let mut entries: Vec<Complex64> = self.psi.iter().map(|z| z.value()).collect();
        if entries.len() + 1 == self.n {
            entries.push(Complex64::new(0.0, 0.0));
        }
        if entries.len() != self.n {
            return Err(CliError::config(
                "parameters.psi",
                format!("expected {} or {} components, got {}", self.n - 1, self.n, self.psi.len()),
            ));
        }
        let v = CVector::from_vec(entries);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(CliError::config("parameters.psi", "psi must be a nonzero finite vector"));
        }
        Ok(v.unscale(norm))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n < 2 {
            return Err(CliError::config("parameters.n", format!("need n >= 2, got {}", self.n)));
        }
        self.psi_vector()?;
        if self.methods.contains(&MethodName::Berry) {
            return Err(CliError::config("parameters.methods", "the gate has no angle-path form; use effective or full"));
        }
        check_methods(&self.methods)?;
        if self.steps < 100 {
            return Err(CliError::config("parameters.steps", format!("need at least 100 steps, got {}", self.steps)));
        }
        if let Some([t1, t2, t3]) = self.times {
            if !(0.0 < t1 && t1 < t2 && t2 < t3 && t3.is_finite()) {
                return Err(CliError::config("parameters.times", "need 0 < t1 < t2 < t3"));
            }
        }
        if !self.phi.is_finite() {
            return Err(CliError::config("parameters.phi", "must be finite"));
        }
        check_full(&self.full, "parameters.full")
    }
}

/// Default polyline sample spacing. The midpoint holonomy is second order in
/// it, so this keeps general loops within 1e-6 of the converged value.
pub const POLYLINE_STEP: f64 = 1e-3;

/// A path through `(theta1, theta2, phi2, phi3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathParams {
    /// `0 -> (a,0) -> (a,b) -> (0,b) -> 0` in `(theta1, theta2)`.
    RectangleTheta { a: f64, b: f64 },
    /// `0 -> (b,0) -> (b,c) -> (0,c) -> 0` in `(theta2, phi3)`.
    RectangleTheta2Phi3 { b: f64, c: f64 },
    Polyline {
        corners: Vec<[f64; 4]>,
        #[serde(default)]
        closed: bool,
        #[serde(default)]
        max_step: Option<f64>,
    },
}

impl PathParams {
    pub fn build(&self) -> holonomic_core::Result<ParameterPath> {
        match self {
            PathParams::RectangleTheta { a, b } => ParameterPath::rectangle_theta(*a, *b),
            PathParams::RectangleTheta2Phi3 { b, c } => ParameterPath::rectangle_theta2_phi3(*b, *c),
            PathParams::Polyline { corners, closed, max_step } => {
                let corners: Vec<SphericalAngles> = corners.iter().map(|c| SphericalAngles::from_array(*c)).collect();
                ParameterPath::polyline(&corners, max_step.unwrap_or(POLYLINE_STEP), *closed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopParams {
    pub path: PathParams,
    #[serde(default = "loop_methods")]
    pub methods: Vec<MethodName>,
    /// Effective-Hamiltonian steps per path segment; 200 on rectangles, 4 on
    /// polylines unless set.
    #[serde(default)]
    pub steps_per_segment: Option<usize>,
    #[serde(default)]
    pub full: FullDynamicsParams,
}

impl LoopParams {
    pub fn steps_per_segment(&self) -> usize {
        self.steps_per_segment.unwrap_or(match self.path {
            PathParams::Polyline { .. } => 4,
            _ => 200,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.path.build().map_err(|e| CliError::numerical("parameters.path", e))?;
        check_methods(&self.methods)?;
        if self.steps_per_segment == Some(0) {
            return Err(CliError::config("parameters.steps_per_segment", "must be positive"));
        }
        check_full(&self.full, "parameters.full")
    }
}

/// What a comparison sweep runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "kebab-case")]
pub enum CompareTarget {
    Gate(GateParams),
    Loop(LoopParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareParams {
    pub target: CompareTarget,
    /// Full-dynamics durations `Omega T`; each one is an independent run.
    #[serde(default = "CompareParams::default_sweep")]
    pub omega_t: Vec<f64>,
}

impl CompareParams {
    fn default_sweep() -> Vec<f64> {
        vec![250.0, 1000.0, 2000.0, 4000.0]
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match &self.target {
            CompareTarget::Gate(g) => g.validate()?,
            CompareTarget::Loop(l) => l.validate()?,
        }
        if self.omega_t.is_empty() {
            return Err(CliError::config("parameters.omega_t", "need at least one duration"));
        }
        for (k, w) in self.omega_t.iter().enumerate() {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(CliError::config(format!("parameters.omega_t[{k}]"), format!("must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorrisShoreParams {
    /// Rows of `V` (ground index first).
    #[serde(default)]
    pub coupling: Option<Vec<Vec<ComplexValue>>>,
    /// `[r, m]` for a seeded complex Gaussian `V` instead of `coupling`.
    #[serde(default)]
    pub random: Option<[usize; 2]>,
    #[serde(default = "MorrisShoreParams::default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default)]
    pub detuning: f64,
}

impl MorrisShoreParams {
    fn default_rank_tol() -> f64 {
        holonomic_core::morris_shore::DEFAULT_RANK_TOL
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.coupling, &self.random) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(CliError::config("parameters", "give exactly one of `coupling` and `random`"));
            }
            (Some(rows), None) => {
                let width = rows.first().map(Vec::len).unwrap_or(0);
                if width == 0 {
                    return Err(CliError::config("parameters.coupling", "matrix must be non-empty"));
                }
                if let Some(k) = rows.iter().position(|r| r.len() != width) {
                    return Err(CliError::config(format!("parameters.coupling[{k}]"), "rows must have equal length"));
                }
            }
            (None, Some([r, m])) => {
                if *r == 0 || *m == 0 {
                    return Err(CliError::config("parameters.random", "dimensions must be positive"));
                }
            }
        }
        if !(0.0..1.0).contains(&self.rank_tol) {
            return Err(CliError::config("parameters.rank_tol", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn coupling_matrix(&self) -> Option<CMatrix> {
        self.coupling.as_ref().map(|rows| {
            CMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j].value())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirapParams {
    #[serde(default = "StirapParams::default_theta")]
    pub theta_end: f64,
    #[serde(default = "linear")]
    pub ramp: RampName,
    #[serde(default = "StirapParams::default_steps")]
    pub steps: usize,
}

impl StirapParams {
    fn default_theta() -> f64 {
        FRAC_PI_2
    }

    fn default_steps() -> usize {
        1000
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.theta_end.is_finite() {
            return Err(CliError::config("parameters.theta_end", "must be finite"));
        }
        if self.steps == 0 {
            return Err(CliError::config("parameters.steps", "must be positive"));
        }
        Ok(())
    }
}

impl Default for StirapParams {
    fn default() -> Self {
        Self { theta_end: Self::default_theta(), ramp: RampName::Linear, steps: Self::default_steps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "kebab-case")]
pub enum Scenario {
    Gate(GateParams),
    Loop(LoopParams),
    Compare(CompareParams),
    MorrisShore(MorrisShoreParams),
    Stirap(StirapParams),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Gate(_) => "gate",
            Scenario::Loop(_) => "loop",
            Scenario::Compare(_) => "compare",
            Scenario::MorrisShore(_) => "morris-shore",
            Scenario::Stirap(_) => "stirap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the default distance thresholds of every check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self { scenario, seed: 0, tolerance: None }
    }

    /// Parse and validate. Errors carry the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = at_path("", &mut serde_json::Deserializer::from_str(text))?;
        let params = if raw.parameters.is_null() { serde_json::Value::Object(Default::default()) } else { raw.parameters };
        let scenario = match raw.kind.as_str() {
            "gate" => Scenario::Gate(at_path("parameters", params)?),
            "loop" => Scenario::Loop(at_path("parameters", params)?),
            "compare" => Scenario::Compare(at_path("parameters", params)?),
            "morris-shore" => Scenario::MorrisShore(at_path("parameters", params)?),
            "stirap" => Scenario::Stirap(at_path("parameters", params)?),
            other => {
                return Err(CliError::config(
                    "kind",
                    format!("unknown kind `{other}` (expected gate, loop, compare, morris-shore or stirap)"),
                ))
            }
        };
        let config = Self { scenario, seed: raw.seed, tolerance: raw.tolerance };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::config("tolerance", format!("must be positive, got {t}")));
            }
        }
        match &self.scenario {
            Scenario::Gate(p) => p.validate(),
            Scenario::Loop(p) => p.validate(),
            Scenario::Compare(p) => p.validate(),
            Scenario::MorrisShore(p) => p.validate(),
            Scenario::Stirap(p) => p.validate(),
        }
    }

    /// The built-in scenario for each subcommand.
    pub fn default_for(kind: &str) -> Option<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let gate = GateParams {
            n: 3,
            psi: vec![ComplexValue::Real(s), ComplexValue::Real(s), ComplexValue::Real(0.0)],
            phi: std::f64::consts::FRAC_PI_3,
            methods: gate_methods(),
            steps: GateParams::default_steps(),
            times: None,
            theta_ramp: RampName::Linear,
            phi_ramp: RampName::Linear,
            full: FullDynamicsParams::default(),
        };
        let loop_ = LoopParams {
            path: PathParams::RectangleTheta { a: 1.0, b: 0.8 },
            methods: loop_methods(),
            steps_per_segment: None,
            full: FullDynamicsParams::default(),
        };
        let scenario = match kind {
            "gate" => Scenario::Gate(gate),
            "loop" => Scenario::Loop(loop_),
            "compare" => Scenario::Compare(CompareParams {
                target: CompareTarget::Gate(GateParams { methods: vec![MethodName::Effective, MethodName::Full], ..gate }),
                omega_t: CompareParams::default_sweep(),
            }),
            "morris-shore" => Scenario::MorrisShore(MorrisShoreParams {
                coupling: None,
                random: Some([5, 2]),
                rank_tol: MorrisShoreParams::default_rank_tol(),
                detuning: 0.0,
            }),
            "stirap" => Scenario::Stirap(StirapParams::default()),
            _ => return None,
        };
        Some(Self::new(scenario))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    #[serde(default)]
    parameters: serde_json::Value,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    tolerance: Option<f64>,
}

fn at_path<'de, T, D>(prefix: &str, de: D) -> Result<T, CliError>
where
    T: Deserialize<'de>,
    D: serde::Deserializer<'de>,
{
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            ("", ".") => "config".to_string(),
            ("", p) => p.to_string(),
            (p, ".") => p.to_string(),
            (p, q) => format!("{p}.{q}"),
        };
        CliError::config(path, e.into_inner().to_string())
    })
}

fn check_methods(methods: &[MethodName]) -> Result<(), CliError> {
    if methods.is_empty() {
        return Err(CliError::config("parameters.methods", "need at least one method"));
    }
    for (k, m) in methods.iter().enumerate() {
        if methods[..k].contains(m) {
            return Err(CliError::config(format!("parameters.methods[{k}]"), format!("`{m}` listed twice")));
        }
    }
    Ok(())
}

fn check_full(full: &FullDynamicsParams, path: &str) -> Result<(), CliError> {
    full.run_config(full.omega_t).map(|_| ()).map_err(|e| CliError::config(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_gate() {
        let c = ScenarioConfig::from_json(
            r#"{"kind": "gate", "parameters": {"n": 3, "psi": [0.7071, 0.7071, 0], "phi": 1.0471975512}}"#,
        )
        .unwrap();
        let Scenario::Gate(g) = &c.scenario else { panic!("wrong kind") };
        assert_eq!(g.steps, 10_000);
        assert!((g.psi_vector().unwrap().norm() - 1.0).abs() < 1e-15);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn complex_entries_and_short_psi() {
        let c = ScenarioConfig::from_json(r#"{"kind": "gate", "parameters": {"n": 3, "psi": [[0, 1], 1], "phi": 0.5}}"#)
            .unwrap();
        let Scenario::Gate(g) = &c.scenario else { panic!("wrong kind") };
        let psi = g.psi_vector().unwrap();
        assert_eq!(psi.len(), 3);
        assert!((psi[0] - Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn errors_name_the_field() {
        let err = ScenarioConfig::from_json(r#"{"kind": "gate", "parameters": {"n": 3, "psi": [1, "x"], "phi": 0.5}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("parameters.psi[1]"), "{err}");
        let err = ScenarioConfig::from_json(r#"{"kind": "stirap", "parameters": {"steps": 0}}"#).unwrap_err();
        assert!(err.to_string().contains("parameters.steps"), "{err}");
        let err = ScenarioConfig::from_json(r#"{"kind": "gate", "parameters": {"n": 3, "psi": [1, 0, 0], "phi": 0.5, "methods": ["berry"]}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("parameters.methods"), "{err}");
        assert!(ScenarioConfig::from_json(r#"{"kind": "teleport", "parameters": {}}"#).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        for kind in ["gate", "loop", "compare", "morris-shore", "stirap"] {
            let c = ScenarioConfig::default_for(kind).unwrap();
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(ScenarioConfig::from_json(&text).unwrap(), c, "{kind}");
        }
        assert!(ScenarioConfig::default_for("selftest").is_none());
    }
}
