//! Dispatch a scenario to the engine and assemble its report.

use std::sync::Arc;
use std::time::Instant;

use holonomic_core::berry::{self, angle_path_couplings, angle_path_schedule, end_frames, holonomy, ParameterPath};
use holonomic_core::effective::effective_schedule;
use holonomic_core::gates::{self, compose_gate, simulate_gate, simulate_gate_full, GateSpec, StirapTrajectory};
use holonomic_core::linalg::{self, basis_vector, embed, matrix_distance, projector_from_frame, random_gaussian_matrix};
use holonomic_core::morris_shore::{morris_shore_transform, TwoManifoldSystem};
use holonomic_core::propagate::{dark_block, evolve_full_adiabatic, leakage, propagate};
use holonomic_core::{CMatrix, CVector, PhaseMode};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{
    CompareParams, CompareTarget, FullDynamicsParams, GateParams, LoopParams, MethodName, MorrisShoreParams, PathParams,
    Scenario, ScenarioConfig, StirapParams,
};
use crate::error::{AtField, CliError};
use crate::report::{
    encode_matrix, encode_vector, Check, Diagnostics, MethodReport, MorrisShoreReport, PairDistance, PairReport,
    Reference, RunReport, StirapReportSection, SweepPoint,
};

/// Default bound on dark-block distances for the geometric routes.
pub const GEOMETRIC_TOL: f64 = 1e-6;
/// Default bound on distance and leakage for full dynamics.
pub const FULL_TOL: f64 = 1e-3;
pub const RECONSTRUCTION_TOL: f64 = 1e-12;
pub const DARK_RESIDUAL_TOL: f64 = 1e-10;
pub const STIRAP_TOL: f64 = 1e-6;

/// Command-line settings layered over a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub methods: Vec<MethodName>,
    pub tolerance: Option<f64>,
}

impl Overrides {
    /// `--steps` sets the primary step count of the scenario: gate steps,
    /// loop steps per segment, STIRAP steps.
    pub fn apply(&self, mut config: ScenarioConfig) -> Result<ScenarioConfig, CliError> {
        let kind = config.scenario.kind();
        let no_steps = || CliError::config("--steps", format!("`{kind}` has no step count"));
        let no_methods = || CliError::config("--method", format!("`{kind}` has no method choice"));
        let methods = (!self.methods.is_empty()).then(|| self.methods.clone());
        match &mut config.scenario {
            Scenario::Gate(p) | Scenario::Compare(CompareParams { target: CompareTarget::Gate(p), .. }) => {
                if let Some(s) = self.steps {
                    p.steps = s;
                }
                if let Some(m) = methods {
                    p.methods = m;
                }
            }
            Scenario::Loop(p) | Scenario::Compare(CompareParams { target: CompareTarget::Loop(p), .. }) => {
                if let Some(s) = self.steps {
                    p.steps_per_segment = Some(s);
                }
                if let Some(m) = methods {
                    p.methods = m;
                }
            }
            Scenario::MorrisShore(_) => {
                if self.steps.is_some() {
                    return Err(no_steps());
                }
                if methods.is_some() {
                    return Err(no_methods());
                }
            }
            Scenario::Stirap(p) => {
                if let Some(s) = self.steps {
                    p.steps = s;
                }
                if methods.is_some_and(|m| m != [MethodName::Effective]) {
                    return Err(no_methods());
                }
            }
        }
        if self.tolerance.is_some() {
            config.tolerance = self.tolerance;
        }
        config.validate()?;
        Ok(config)
    }
}

/// One method's propagator before it is compared with anything.
struct MethodRun {
    method: MethodName,
    unitary: CMatrix,
    dark_block: CMatrix,
    leakage: f64,
    unitarity_error: f64,
    steps: usize,
    wall_time_ms: f64,
    geometric_phase: Option<f64>,
    omega_t: Option<f64>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

struct Tolerances {
    geometric: f64,
    full: f64,
}

impl Tolerances {
    fn new(config: &ScenarioConfig) -> Self {
        match config.tolerance {
            Some(t) => Self { geometric: t, full: t },
            None => Self { geometric: GEOMETRIC_TOL, full: FULL_TOL },
        }
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport, CliError> {
    config.validate()?;
    let tol = Tolerances::new(config);
    let mut report = RunReport::new(config.clone());
    match &config.scenario {
        Scenario::Gate(p) => run_gate(p, &tol, &mut report)?,
        Scenario::Loop(p) => run_loop(p, &tol, &mut report)?,
        Scenario::Compare(p) => run_compare(p, &tol, &mut report)?,
        Scenario::MorrisShore(p) => run_morris_shore(p, config, &mut report)?,
        Scenario::Stirap(p) => run_stirap(p, config, &mut report)?,
    }
    Ok(report)
}

/// Distances against the reference, per-method checks and the pairwise table.
fn finish(runs: Vec<MethodRun>, reference: Reference, tol: &Tolerances, report: &mut RunReport) -> Result<(), CliError> {
    let target = crate::report::decode_matrix(&reference.dark_block);
    let distance = |a: &CMatrix, b: &CMatrix, mode| matrix_distance(a, b, mode).at("dark_block");
    for run in &runs {
        let exact = distance(&run.dark_block, &target, PhaseMode::Exact)?;
        let phase = distance(&run.dark_block, &target, PhaseMode::UpToGlobalPhase)?;
        let name = run.method.to_string();
        if run.method == MethodName::Full {
            report.check(Check::below(format!("{name}: dark block vs {} (up to phase)", reference.name), phase, tol.full));
            report.check(Check::below(format!("{name}: leakage"), run.leakage, tol.full));
        } else {
            report.check(Check::below(format!("{name}: dark block vs {}", reference.name), exact, tol.geometric));
        }
        report.methods.push(MethodReport {
            method: run.method,
            unitary: encode_matrix(&run.unitary),
            dark_block: encode_matrix(&run.dark_block),
            diagnostics: Diagnostics {
                unitarity_error: run.unitarity_error,
                leakage: run.leakage,
                dark_block_distance_exact: exact,
                dark_block_distance_phase: phase,
                steps: run.steps,
                wall_time_ms: run.wall_time_ms,
            },
            geometric_phase: run.geometric_phase,
            omega_t: run.omega_t,
        });
    }
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            let exact = distance(&a.dark_block, &b.dark_block, PhaseMode::Exact)?;
            let phase = distance(&a.dark_block, &b.dark_block, PhaseMode::UpToGlobalPhase)?;
            let name = format!("{} vs {}", a.method, b.method);
            if a.method == MethodName::Full || b.method == MethodName::Full {
                report.check(Check::below(format!("{name} (up to phase)"), phase, tol.full));
            } else {
                report.check(Check::below(name, exact, tol.geometric));
            }
            report.pairwise.push(PairDistance { a: a.method, b: b.method, exact, phase });
        }
    }
    report.reference = Some(reference);
    Ok(())
}

pub fn gate_spec(p: &GateParams) -> Result<GateSpec, CliError> {
    let mut spec = GateSpec::new(p.n, p.psi_vector()?, p.phi).at("parameters.psi")?;
    if let Some([t1, t2, t3]) = p.times {
        spec = spec.with_times(t1, t2, t3).at("parameters.times")?;
    }
    Ok(spec.with_ramps(p.theta_ramp.ramp(), p.phi_ramp.ramp()))
}

fn logical_block(spec: &GateSpec, u: &CMatrix) -> Result<CMatrix, CliError> {
    let basis = spec.logical_basis();
    dark_block(u, &basis, &basis).at("dark_block")
}

fn gate_effective(spec: &GateSpec, steps: usize) -> Result<MethodRun, CliError> {
    let start = Instant::now();
    let r = simulate_gate(spec, steps).at("parameters.steps")?;
    let u = r.simulated_unitary.into_matrix();
    let basis = spec.logical_basis();
    let p = projector_from_frame(&basis, spec.n).at("parameters.n")?;
    Ok(MethodRun {
        method: MethodName::Effective,
        dark_block: logical_block(spec, &u)?,
        leakage: leakage(&u, &basis, &p).at("dark_block")?,
        unitary: u,
        unitarity_error: r.unitarity_error,
        steps: r.steps,
        wall_time_ms: elapsed_ms(start),
        geometric_phase: Some(r.geometric_phase),
        omega_t: None,
    })
}

fn gate_full(spec: &GateSpec, full: &FullDynamicsParams, omega_t: f64) -> Result<MethodRun, CliError> {
    let start = Instant::now();
    let config = full.run_config(omega_t).at("parameters.full")?;
    let r = simulate_gate_full(spec, &config).at("parameters.full")?;
    let psi = embed(&spec.psi, spec.n + 1, 0);
    Ok(MethodRun {
        method: MethodName::Full,
        geometric_phase: gates::geometric_phase(r.unitary.matrix(), &psi).ok(),
        unitary: r.unitary.into_matrix(),
        dark_block: r.logical_block,
        leakage: r.leakage,
        unitarity_error: r.unitarity_error,
        steps: r.steps,
        wall_time_ms: elapsed_ms(start),
        omega_t: Some(omega_t),
    })
}

fn gate_reference(spec: &GateSpec) -> Result<Reference, CliError> {
    let analytic = compose_gate(spec).at("parameters")?;
    Ok(Reference { name: "analytic".into(), dark_block: encode_matrix(&logical_block(spec, analytic.matrix())?) })
}

fn run_gate(p: &GateParams, tol: &Tolerances, report: &mut RunReport) -> Result<(), CliError> {
    let spec = gate_spec(p)?;
    let mut runs = Vec::new();
    for m in &p.methods {
        runs.push(match m {
            MethodName::Effective => gate_effective(&spec, p.steps)?,
            MethodName::Full => gate_full(&spec, &p.full, p.full.omega_t)?,
            MethodName::Berry => return Err(CliError::config("parameters.methods", "berry does not apply to gates")),
        });
    }
    finish(runs, gate_reference(&spec)?, tol, report)
}

pub fn loop_path(p: &LoopParams) -> Result<ParameterPath, CliError> {
    let path = p.path.build().at("parameters.path")?;
    path.check_discretization().at("parameters.path")?;
    if path.segments() == 0 {
        return Err(CliError::config("parameters.path", "path has no segments"));
    }
    Ok(path)
}

fn loop_berry(path: &ParameterPath) -> Result<MethodRun, CliError> {
    let start = Instant::now();
    let u = holonomy(path).at("parameters.path")?;
    Ok(MethodRun {
        method: MethodName::Berry,
        unitarity_error: u.unitarity_error(),
        dark_block: u.matrix().clone(),
        unitary: u.into_matrix(),
        leakage: 0.0,
        steps: path.segments(),
        wall_time_ms: elapsed_ms(start),
        geometric_phase: None,
        omega_t: None,
    })
}

fn loop_effective(path: &ParameterPath, steps_per_segment: usize) -> Result<MethodRun, CliError> {
    let start = Instant::now();
    let r = propagate(&angle_path_schedule(path), steps_per_segment * path.segments()).at("parameters.path")?;
    let (d0, d1) = end_frames(path);
    let p_end = projector_from_frame(&d1, 3).at("parameters.path")?;
    let u = r.unitary.into_matrix();
    Ok(MethodRun {
        method: MethodName::Effective,
        dark_block: dark_block(&u, &d0, &d1).at("dark_block")?,
        leakage: leakage(&u, &d0, &p_end).at("dark_block")?,
        unitary: u,
        unitarity_error: r.unitarity_error,
        steps: r.steps,
        wall_time_ms: elapsed_ms(start),
        geometric_phase: None,
        omega_t: None,
    })
}

fn loop_full(path: &ParameterPath, full: &FullDynamicsParams, omega_t: f64) -> Result<MethodRun, CliError> {
    let start = Instant::now();
    let config = full.run_config(omega_t).at("parameters.full")?;
    let r = evolve_full_adiabatic(&angle_path_couplings(path, 1.0), &config).at("parameters.full")?;
    let (d0, d1) = end_frames(path);
    let d0: Vec<CVector> = d0.iter().map(|v| embed(v, 4, 0)).collect();
    let d1: Vec<CVector> = d1.iter().map(|v| embed(v, 4, 0)).collect();
    let p_end = projector_from_frame(&d1, 4).at("parameters.path")?;
    let u = r.unitary.into_matrix();
    Ok(MethodRun {
        method: MethodName::Full,
        dark_block: dark_block(&u, &d0, &d1).at("dark_block")?,
        leakage: leakage(&u, &d0, &p_end).at("dark_block")?,
        unitary: u,
        unitarity_error: r.unitarity_error,
        steps: r.steps,
        wall_time_ms: elapsed_ms(start),
        geometric_phase: None,
        omega_t: Some(omega_t),
    })
}

/// Closed forms for the rectangles, the Berry holonomy otherwise.
fn loop_reference(p: &LoopParams, path: &ParameterPath) -> Result<Reference, CliError> {
    let (name, u) = match p.path {
        PathParams::RectangleTheta { .. } => ("closed-form", berry::u_y_analytic(path)),
        PathParams::RectangleTheta2Phi3 { .. } => ("closed-form", berry::u_z_analytic(path)),
        PathParams::Polyline { .. } => ("berry", holonomy(path)),
    };
    let u = u.at("parameters.path")?;
    Ok(Reference { name: name.into(), dark_block: encode_matrix(u.matrix()) })
}

fn run_loop(p: &LoopParams, tol: &Tolerances, report: &mut RunReport) -> Result<(), CliError> {
    let path = loop_path(p)?;
    let mut runs = Vec::new();
    for m in &p.methods {
        runs.push(match m {
            MethodName::Effective => loop_effective(&path, p.steps_per_segment())?,
            MethodName::Berry => loop_berry(&path)?,
            MethodName::Full => loop_full(&path, &p.full, p.full.omega_t)?,
        });
    }
    finish(runs, loop_reference(p, &path)?, tol, report)
}

/// Runs the geometric methods of the target once, then full dynamics at every
/// `Omega T` of the sweep, in parallel.
fn run_compare(p: &CompareParams, tol: &Tolerances, report: &mut RunReport) -> Result<(), CliError> {
    let (runs, reference, full_run): (Vec<MethodRun>, Reference, Box<dyn Fn(f64) -> Result<MethodRun, CliError> + Sync>) =
        match &p.target {
            CompareTarget::Gate(g) => {
                let spec = gate_spec(g)?;
                let runs = match g.methods.contains(&MethodName::Effective) {
                    true => vec![gate_effective(&spec, g.steps)?],
                    false => vec![],
                };
                let reference = gate_reference(&spec)?;
                let full = g.full.clone();
                (runs, reference, Box::new(move |w| gate_full(&spec, &full, w)))
            }
            CompareTarget::Loop(l) => {
                let path = loop_path(l)?;
                let mut runs = Vec::new();
                for m in &l.methods {
                    match m {
                        MethodName::Effective => runs.push(loop_effective(&path, l.steps_per_segment())?),
                        MethodName::Berry => runs.push(loop_berry(&path)?),
                        MethodName::Full => {}
                    }
                }
                let reference = loop_reference(l, &path)?;
                let full = l.full.clone();
                (runs, reference, Box::new(move |w| loop_full(&path, &full, w)))
            }
        };
    let target = crate::report::decode_matrix(&reference.dark_block);
    let results: Vec<Result<MethodRun, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = p.omega_t.iter().map(|w| scope.spawn(|| full_run(*w))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut sweep = Vec::new();
    for r in results {
        let r = r?;
        sweep.push(SweepPoint {
            omega_t: r.omega_t.unwrap_or_default(),
            steps: r.steps,
            leakage: r.leakage,
            dark_block_distance_exact: matrix_distance(&r.dark_block, &target, PhaseMode::Exact).at("dark_block")?,
            dark_block_distance_phase: matrix_distance(&r.dark_block, &target, PhaseMode::UpToGlobalPhase)
                .at("dark_block")?,
            unitarity_error: r.unitarity_error,
            wall_time_ms: r.wall_time_ms,
        });
    }
    let slowest = sweep.iter().max_by(|a, b| a.omega_t.total_cmp(&b.omega_t)).cloned();
    finish(runs, reference, tol, report)?;
    if let Some(s) = slowest {
        report.check(Check::below(format!("full at omega_t {}: leakage", s.omega_t), s.leakage, tol.full));
        report.check(Check::below(
            format!("full at omega_t {}: dark block (up to phase)", s.omega_t),
            s.dark_block_distance_phase,
            tol.full,
        ));
    }
    report.sweep = Some(sweep);
    Ok(())
}

fn run_morris_shore(p: &MorrisShoreParams, config: &ScenarioConfig, report: &mut RunReport) -> Result<(), CliError> {
    let v = match (p.coupling_matrix(), p.random) {
        (Some(v), _) => v,
        (None, Some([r, m])) => random_gaussian_matrix(r, m, &mut ChaCha8Rng::seed_from_u64(config.seed)),
        (None, None) => return Err(CliError::config("parameters", "no coupling matrix")),
    };
    let sys = TwoManifoldSystem::with_detuning(v, p.detuning).at("parameters.detuning")?;
    let d = morris_shore_transform(&sys, p.rank_tol).at("parameters.coupling")?;
    let coupling = sys.coupling();
    let reconstruction_error = (d.reconstruct() - coupling).norm();
    let dark_residual = d.dark_ground.iter().map(|x| (coupling.adjoint() * x).norm()).fold(0.0, f64::max);
    let scale = coupling.norm().max(1.0);
    let (rec_tol, dark_tol) = match config.tolerance {
        Some(t) => (t, t),
        None => (RECONSTRUCTION_TOL * scale, DARK_RESIDUAL_TOL * scale),
    };
    report.check(Check::below("reconstruction error", reconstruction_error, rec_tol));
    report.check(Check::below("dark residual", dark_residual, dark_tol));
    report.morris_shore = Some(MorrisShoreReport {
        coupling: encode_matrix(coupling),
        r: sys.r(),
        m: sys.m(),
        swapped: sys.swapped(),
        rank: d.rank,
        pairs: d
            .pairs
            .iter()
            .map(|q| PairReport { g: q.g, ground: encode_vector(&q.ground), excited: encode_vector(&q.excited) })
            .collect(),
        dark_states: d.dark_ground.iter().map(encode_vector).collect(),
        reconstruction_error,
        dark_residual,
    });
    Ok(())
}

fn run_stirap(p: &StirapParams, config: &ScenarioConfig, report: &mut RunReport) -> Result<(), CliError> {
    let start = Instant::now();
    let trajectory = StirapTrajectory { theta_end: p.theta_end, ramp: p.ramp.ramp() };
    let r = propagate(&effective_schedule(Arc::new(trajectory)), p.steps).at("parameters.steps")?;
    let u = r.unitary.into_matrix();
    let final_state = &u * basis_vector(2, 0);
    let (d0, d1) = (trajectory.dark_state(0.0), trajectory.dark_state(1.0));
    let block = CMatrix::from_element(1, 1, linalg::inner(&d1, &final_state));
    let dark_state_error = (&final_state - &d1).norm();
    let p_end = projector_from_frame(std::slice::from_ref(&d1), 2).at("parameters.theta_end")?;
    let run = MethodRun {
        method: MethodName::Effective,
        leakage: leakage(&u, std::slice::from_ref(&d0), &p_end).at("dark_block")?,
        geometric_phase: gates::geometric_phase(&u, &basis_vector(2, 0)).ok(),
        unitary: u,
        dark_block: block,
        unitarity_error: r.unitarity_error,
        steps: r.steps,
        wall_time_ms: elapsed_ms(start),
        omega_t: None,
    };
    let tol = Tolerances::new(config);
    let tol = Tolerances { geometric: config.tolerance.unwrap_or(STIRAP_TOL), ..tol };
    report.stirap = Some(StirapReportSection {
        final_state: encode_vector(&final_state),
        populations: [final_state[0].norm_sqr(), final_state[1].norm_sqr()],
        dark_state_error,
    });
    let reference = Reference { name: "dark state".into(), dark_block: vec![vec![[1.0, 0.0]]] };
    finish(vec![run], reference, &tol, report)?;
    report.check(Check::below("final state vs dark state", dark_state_error, tol.geometric));
    Ok(())
}
