//! Per-step CSV traces: `t,leakage,pop_1..pop_N,phase_psi`.
//!
//! `leakage` is the population outside the instantaneous dark space of the
//! evolved `psi`, the populations are over every level of the propagated
//! space and `phase_psi = -arg <psi|U(t)|psi>` (0 once the overlap drops
//! below 1e-9). Full-dynamics rows are in physical time.

use std::path::Path;
use std::sync::Arc;

use holonomic_core::effective::{effective_schedule, BrightTrajectory};
use holonomic_core::gates::{stage_trajectory, StirapTrajectory};
use holonomic_core::linalg::{basis_vector, embed, inner};
use holonomic_core::propagate::{full_dynamics_plan, propagate_observed, CouplingSchedule, Schedule};
use holonomic_core::{CMatrix, CVector};

use crate::config::{MethodName, Scenario, ScenarioConfig};
use crate::error::{AtField, CliError};
use crate::scenario::gate_spec;

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub leakage: f64,
    pub populations: Vec<f64>,
    pub phase_psi: f64,
}

fn sample(t: f64, u: &CMatrix, psi: &CVector, bright: &CVector) -> Sample {
    let state = u * psi;
    let ground = state.rows(0, bright.len()).into_owned();
    let dark = ground.norm_squared() - inner(bright, &ground).norm_sqr();
    let amplitude = inner(psi, &state);
    Sample {
        t,
        leakage: (1.0 - dark).clamp(0.0, 1.0),
        populations: state.iter().map(|z| z.norm_sqr()).collect(),
        phase_psi: if amplitude.norm() < 1e-9 { 0.0 } else { -amplitude.arg() },
    }
}

/// Record `psi` along a schedule; `bright(t)` is the bright state at
/// schedule time `t`.
fn record(schedule: &Schedule, steps: usize, psi: &CVector, bright: &dyn Fn(f64) -> CVector) -> Result<Vec<Sample>, CliError> {
    let dim = schedule.dim();
    let t0 = schedule.span().0;
    let mut rows = vec![sample(t0, &CMatrix::identity(dim, dim), psi, &bright(t0))];
    propagate_observed(schedule, steps, &mut |t, u| rows.push(sample(t, u, psi, &bright(t)))).at("parameters.steps")?;
    Ok(rows)
}

/// Samples for gate and STIRAP scenarios. A gate is traced with the first
/// method in its list.
pub fn collect(config: &ScenarioConfig) -> Result<Vec<Sample>, CliError> {
    config.validate()?;
    match &config.scenario {
        Scenario::Gate(p) => {
            let spec = gate_spec(p)?;
            let trajectory: Arc<dyn BrightTrajectory> = Arc::new(stage_trajectory(&spec).at("parameters")?);
            match p.methods[0] {
                MethodName::Full => {
                    let run = p.full.run_config(p.full.omega_t).at("parameters.full")?;
                    let couplings = CouplingSchedule::from_trajectory(trajectory.clone(), 1.0).at("parameters")?;
                    let plan = full_dynamics_plan(&couplings, &run).at("parameters.full")?;
                    let psi = embed(&spec.psi, spec.n + 1, 0);
                    record(&plan.generator, run.steps, &psi, &|tau| trajectory.value(plan.schedule_time(tau))[0].clone())
                }
                _ => {
                    let schedule = effective_schedule(trajectory.clone());
                    record(&schedule, p.steps, &spec.psi, &|t| trajectory.value(t)[0].clone())
                }
            }
        }
        Scenario::Stirap(p) => {
            let trajectory = StirapTrajectory { theta_end: p.theta_end, ramp: p.ramp.ramp() };
            let schedule = effective_schedule(Arc::new(trajectory));
            record(&schedule, p.steps, &basis_vector(2, 0), &|t| trajectory.value(t)[0].clone())
        }
        other => Err(CliError::config(
            "kind",
            format!("time series need a gate or stirap scenario, not `{}`", other.kind()),
        )),
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[Sample], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let levels = rows.first().map(|r| r.populations.len()).unwrap_or(0);
    let mut header = vec!["t".to_string(), "leakage".to_string()];
    header.extend((1..=levels).map(|k| format!("pop_{k}")));
    header.push("phase_psi".into());
    w.write_record(&header)?;
    for r in rows {
        let mut record = vec![r.t.to_string(), r.leakage.to_string()];
        record.extend(r.populations.iter().map(f64::to_string));
        record.push(r.phase_psi.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| CliError::io("time series", e))?;
    Ok(())
}

/// Write the trace of `config` to `path`, returning the row count.
pub fn emit_timeseries(config: &ScenarioConfig, path: &Path) -> Result<usize, CliError> {
    let rows = collect(config)?;
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(&rows, std::io::BufWriter::new(file))?;
    Ok(rows.len())
}
