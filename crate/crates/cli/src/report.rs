//! The JSON run report.

use holonomic_core::{CMatrix, CVector};
use serde::{Deserialize, Serialize};

use crate::config::{MethodName, ScenarioConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Row-major matrix of `[re, im]` pairs.
pub type ComplexMatrix = Vec<Vec<[f64; 2]>>;

pub fn encode_matrix(m: &CMatrix) -> ComplexMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn encode_vector(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn decode_matrix(m: &ComplexMatrix) -> CMatrix {
    let cols = m.first().map(Vec::len).unwrap_or(0);
    CMatrix::from_fn(m.len(), cols, |i, j| holonomic_core::Complex64::new(m[i][j][0], m[i][j][1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub unitarity_error: f64,
    pub leakage: f64,
    /// Against the report's reference dark block.
    pub dark_block_distance_exact: f64,
    pub dark_block_distance_phase: f64,
    pub steps: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: MethodName,
    /// Propagator on the full state space of the method.
    pub unitary: ComplexMatrix,
    pub dark_block: ComplexMatrix,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometric_phase: Option<f64>,
    /// Set for full-dynamics runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub name: String,
    pub dark_block: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub a: MethodName,
    pub b: MethodName,
    pub exact: f64,
    pub phase: f64,
}

/// `passed` iff `value < tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value < tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub g: f64,
    pub ground: Vec<[f64; 2]>,
    pub excited: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisShoreReport {
    /// Coupling matrix after orientation (`r >= m`).
    pub coupling: ComplexMatrix,
    pub r: usize,
    pub m: usize,
    pub swapped: bool,
    pub rank: usize,
    pub pairs: Vec<PairReport>,
    pub dark_states: Vec<Vec<[f64; 2]>>,
    pub reconstruction_error: f64,
    /// `max_d |V^dagger d|`
    pub dark_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirapReportSection {
    pub final_state: Vec<[f64; 2]>,
    pub populations: [f64; 2],
    pub dark_state_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega_t: f64,
    pub steps: usize,
    pub leakage: f64,
    pub dark_block_distance_exact: f64,
    pub dark_block_distance_phase: f64,
    pub unitarity_error: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    pub methods: Vec<MethodReport>,
    pub pairwise: Vec<PairDistance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morris_shore: Option<MorrisShoreReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stirap: Option<StirapReportSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepPoint>>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            version: VERSION.to_string(),
            scenario,
            reference: None,
            methods: Vec::new(),
            pairwise: Vec::new(),
            morris_shore: None,
            stirap: None,
            sweep: None,
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::config(e.path().to_string(), e.into_inner().to_string()))
    }

    /// Copy with every `wall_time_ms` zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for m in &mut r.methods {
            m.diagnostics.wall_time_ms = 0.0;
        }
        for p in r.sweep.iter_mut().flatten() {
            p.wall_time_ms = 0.0;
        }
        r
    }

    /// All diagnostics finite and non-negative.
    pub fn diagnostics_valid(&self) -> bool {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        self.methods.iter().all(|m| {
            let d = &m.diagnostics;
            ok(d.unitarity_error)
                && ok(d.leakage)
                && ok(d.dark_block_distance_exact)
                && ok(d.dark_block_distance_phase)
                && ok(d.wall_time_ms)
        }) && self.sweep.iter().flatten().all(|p| {
            ok(p.leakage) && ok(p.dark_block_distance_exact) && ok(p.dark_block_distance_phase) && ok(p.unitarity_error)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use holonomic_core::linalg::c;

    #[test]
    fn matrices_encode_row_major() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0)]);
        let e = encode_matrix(&m);
        assert_eq!(e[0][1], [3.0, 4.0]);
        assert_eq!(e[1][0], [5.0, 6.0]);
        assert_eq!(decode_matrix(&e), m);
    }

    #[test]
    fn checks_fold_into_passed() {
        let mut r = RunReport::new(ScenarioConfig::default_for("stirap").unwrap());
        r.check(Check::below("a", 1e-9, 1e-6));
        assert!(r.passed);
        r.check(Check::below("b", 1e-3, 1e-6));
        assert!(!r.passed);
        assert!(!Check::below("nan", f64::NAN, 1.0).passed);
    }
}
