//! The three-stage holonomic gate and the open-path STIRAP transfer.
//!
//! Levels `1..n` are indices `0..n-1`; the bright state starts and ends on
//! `|n>` (index `n - 1`) and the logical space is spanned by the others.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::effective::{effective_schedule, BrightTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{
    self, basis_vector, c, cis, embed, matrix_distance, outer, CMatrix, CVector, PhaseMode, UnitaryOperator, I,
};
use crate::propagate::{
    dark_block, evolve_full_adiabatic, leakage, propagate, AdiabaticRunConfig, CouplingSchedule, Ramp,
};

/// Parameters of the three-stage gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub n: usize,
    pub psi: CVector,
    pub phi: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub theta_ramp: Ramp,
    pub phi_ramp: Ramp,
}

impl GateSpec {
    /// Stage boundaries `1, 2, 3` and linear ramps.
    pub fn new(n: usize, psi: CVector, phi: f64) -> Result<Self> {
        let spec = Self { n, psi, phi, t1: 1.0, t2: 2.0, t3: 3.0, theta_ramp: Ramp::Linear, phi_ramp: Ramp::Linear };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_times(mut self, t1: f64, t2: f64, t3: f64) -> Result<Self> {
        (self.t1, self.t2, self.t3) = (t1, t2, t3);
        self.validate()?;
        Ok(self)
    }

    pub fn with_ramps(mut self, theta: Ramp, phi: Ramp) -> Self {
        self.theta_ramp = theta;
        self.phi_ramp = phi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("the gate needs n >= 2 levels, got {}", self.n)));
        }
        if self.psi.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.psi.len() });
        }
        linalg::check_normalized(&self.psi)?;
        let last = self.psi[self.n - 1].norm();
        if last > 1e-12 {
            return Err(Error::InvalidArgument(format!("psi has weight {last:e} on level n")));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidArgument("phase must be finite".into()));
        }
        if !(0.0 < self.t1 && self.t1 < self.t2 && self.t2 < self.t3) || !self.t3.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "stage times must satisfy 0 < t1 < t2 < t3, got ({}, {}, {})",
                self.t1, self.t2, self.t3
            )));
        }
        Ok(())
    }

    fn top(&self) -> CVector {
        basis_vector(self.n, self.n - 1)
    }

    /// Standard basis of the logical space, levels `1..n-1`.
    pub fn logical_basis(&self) -> Vec<CVector> {
        (0..self.n - 1).map(|k| basis_vector(self.n, k)).collect()
    }
}

/// Bright-state path of the gate: down the meridian to `psi`, a phase
/// sweep, then back up with phase `e^{i Phi}`.
#[derive(Debug, Clone)]
pub struct GateTrajectory {
    spec: GateSpec,
    top: CVector,
}

impl GateTrajectory {
    fn stage(&self, t: f64) -> (usize, f64, f64) {
        let s = &self.spec;
        if t <= s.t1 {
            (1, t / s.t1, 1.0 / s.t1)
        } else if t <= s.t2 {
            (2, (t - s.t1) / (s.t2 - s.t1), 1.0 / (s.t2 - s.t1))
        } else {
            (3, ((t - s.t2) / (s.t3 - s.t2)).min(1.0), 1.0 / (s.t3 - s.t2))
        }
    }

    /// `(theta, theta', phase, phase')` at `t`.
    fn angles(&self, t: f64) -> (f64, f64, f64, f64) {
        let s = &self.spec;
        let (stage, x, dx) = self.stage(t);
        match stage {
            1 => (PI * s.theta_ramp.progress(x), PI * s.theta_ramp.rate(x) * dx, 0.0, 0.0),
            2 => (PI, 0.0, s.phi * s.phi_ramp.progress(x), s.phi * s.phi_ramp.rate(x) * dx),
            _ => (PI * (1.0 - s.theta_ramp.progress(x)), -PI * s.theta_ramp.rate(x) * dx, s.phi, 0.0),
        }
    }

    fn state(&self, theta: f64, phase: f64) -> CVector {
        let (sn, cs) = (0.5 * theta).sin_cos();
        &self.spec.psi * (cis(phase) * sn) + &self.top * c(cs, 0.0)
    }
}

impl BrightTrajectory for GateTrajectory {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn count(&self) -> usize {
        1
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.spec.t3)
    }

    fn value(&self, t: f64) -> Vec<CVector> {
        let (theta, _, phase, _) = self.angles(t);
        vec![self.state(theta, phase)]
    }

    fn derivative(&self, t: f64) -> Vec<CVector> {
        let (theta, dtheta, phase, dphase) = self.angles(t);
        let (sn, cs) = (0.5 * theta).sin_cos();
        let along_psi = cis(phase) * (0.5 * dtheta * cs) + I * cis(phase) * (dphase * sn);
        vec![&self.spec.psi * along_psi - &self.top * c(0.5 * dtheta * sn, 0.0)]
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.spec.t1, self.spec.t2]
    }
}

pub fn stage_trajectory(spec: &GateSpec) -> Result<GateTrajectory> {
    spec.validate()?;
    Ok(GateTrajectory { top: spec.top(), spec: spec.clone() })
}

/// Closed-form `(U1, U2, U3)` with the identity on the complement of
/// `span{psi, |n>}`.
pub fn analytic_stage_unitaries(spec: &GateSpec) -> Result<(UnitaryOperator, UnitaryOperator, UnitaryOperator)> {
    spec.validate()?;
    let (psi, top) = (&spec.psi, spec.top());
    let id = CMatrix::identity(spec.n, spec.n);
    let p_span = outer(psi, psi) + outer(&top, &top);
    let complement = &id - &p_span;
    let turn = outer(psi, &top) - outer(&top, psi);
    let flip = outer(psi, &top) + outer(&top, psi);
    let u1 = &complement + &turn;
    let u2 = &id + outer(psi, psi) * (cis(2.0 * spec.phi) - c(1.0, 0.0));
    let u3 = &complement - turn * c(spec.phi.cos(), 0.0) - flip * (I * spec.phi.sin());
    Ok((UnitaryOperator::new(u1)?, UnitaryOperator::new(u2)?, UnitaryOperator::new(u3)?))
}

/// `U3 U2 U1`
pub fn compose_gate(spec: &GateSpec) -> Result<UnitaryOperator> {
    let (u1, u2, u3) = analytic_stage_unitaries(spec)?;
    Ok(u3.then_after(&u2).then_after(&u1))
}

#[derive(Debug, Clone)]
pub struct GateReport {
    pub analytic_unitary: UnitaryOperator,
    pub simulated_unitary: UnitaryOperator,
    pub distance_exact: f64,
    pub distance_phase: f64,
    pub geometric_phase: f64,
    pub steps: usize,
    pub unitarity_error: f64,
}

/// `-arg <psi|U|psi>`, refusing blocks where the amplitude is below 1/2.
pub fn geometric_phase(u: &CMatrix, psi: &CVector) -> Result<f64> {
    let amplitude = linalg::inner(psi, &(u * psi));
    if amplitude.norm() <= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "psi amplitude {:.3} is too small to extract a phase",
            amplitude.norm()
        )));
    }
    Ok(-amplitude.arg())
}

fn logical_block(spec: &GateSpec, u: &CMatrix) -> Result<CMatrix> {
    let basis = spec.logical_basis();
    dark_block(u, &basis, &basis)
}

/// Propagate the effective Hamiltonian along the gate trajectory and
/// compare with [`compose_gate`] on the logical block.
pub fn simulate_gate(spec: &GateSpec, steps: usize) -> Result<GateReport> {
    if steps < 100 {
        return Err(Error::InvalidArgument(format!("simulate_gate needs at least 100 steps, got {steps}")));
    }
    let trajectory = Arc::new(stage_trajectory(spec)?);
    let result = propagate(&effective_schedule(trajectory), steps)?;
    let analytic = compose_gate(spec)?;
    let sim_block = logical_block(spec, result.unitary.matrix())?;
    let ana_block = logical_block(spec, analytic.matrix())?;
    Ok(GateReport {
        distance_exact: matrix_distance(&sim_block, &ana_block, PhaseMode::Exact)?,
        distance_phase: matrix_distance(&sim_block, &ana_block, PhaseMode::UpToGlobalPhase)?,
        geometric_phase: geometric_phase(result.unitary.matrix(), &spec.psi)?,
        steps: result.steps,
        unitarity_error: result.unitarity_error,
        analytic_unitary: analytic,
        simulated_unitary: result.unitary,
    })
}

#[derive(Debug, Clone)]
pub struct FullGateReport {
    /// Full `(n+1)`-level propagator.
    pub unitary: UnitaryOperator,
    /// `<k| U |l>` over logical levels `k, l`.
    pub logical_block: CMatrix,
    pub leakage: f64,
    pub distance_exact: f64,
    pub distance_phase: f64,
    pub steps: usize,
    pub unitarity_error: f64,
}

/// Run the gate through the full Lambda Hamiltonian (`Omega = 1`, so
/// `config.omega_t` is the total duration).
pub fn simulate_gate_full(spec: &GateSpec, config: &AdiabaticRunConfig) -> Result<FullGateReport> {
    let trajectory: Arc<dyn BrightTrajectory> = Arc::new(stage_trajectory(spec)?);
    let couplings = CouplingSchedule::from_trajectory(trajectory, 1.0)?;
    let result = evolve_full_adiabatic(&couplings, config)?;
    let dim = spec.n + 1;
    let logical: Vec<CVector> = spec.logical_basis().iter().map(|v| embed(v, dim, 0)).collect();
    let p_logical = linalg::projector_from_frame(&logical, dim)?;
    let block = dark_block(result.unitary.matrix(), &logical, &logical)?;
    let analytic = logical_block(spec, compose_gate(spec)?.matrix())?;
    Ok(FullGateReport {
        leakage: leakage(result.unitary.matrix(), &logical, &p_logical)?,
        distance_exact: matrix_distance(&block, &analytic, PhaseMode::Exact)?,
        distance_phase: matrix_distance(&block, &analytic, PhaseMode::UpToGlobalPhase)?,
        steps: result.steps,
        unitarity_error: result.unitarity_error,
        logical_block: block,
        unitary: result.unitary,
    })
}

/// Two-level bright state `sin(theta)|1> + cos(theta)|2>` with
/// `theta = theta_end p(t)` on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct StirapTrajectory {
    pub theta_end: f64,
    pub ramp: Ramp,
}

impl StirapTrajectory {
    /// The instantaneous dark state `cos(theta)|1> - sin(theta)|2>`.
    pub fn dark_state(&self, t: f64) -> CVector {
        let (s, co) = (self.theta_end * self.ramp.progress(t)).sin_cos();
        linalg::real_vector(&[co, -s])
    }
}

impl BrightTrajectory for StirapTrajectory {
    fn dim(&self) -> usize {
        2
    }

    fn count(&self) -> usize {
        1
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn value(&self, t: f64) -> Vec<CVector> {
        let (s, co) = (self.theta_end * self.ramp.progress(t)).sin_cos();
        vec![linalg::real_vector(&[s, co])]
    }

    fn derivative(&self, t: f64) -> Vec<CVector> {
        let (s, co) = (self.theta_end * self.ramp.progress(t)).sin_cos();
        let rate = self.theta_end * self.ramp.rate(t);
        vec![linalg::real_vector(&[co * rate, -s * rate])]
    }
}

#[derive(Debug, Clone)]
pub struct StirapReport {
    pub final_state: CVector,
    /// `|<1|final>|^2`, `|<2|final>|^2`
    pub populations: [f64; 2],
    /// Distance of the final state from the dark state at `theta_end`.
    pub dark_state_error: f64,
    pub steps: usize,
}

/// Start in `|1>` and follow the dark state while `theta` runs from 0 to
/// `theta_end`.
pub fn stirap_transfer(theta_end: f64, ramp: Ramp, steps: usize) -> Result<StirapReport> {
    if !theta_end.is_finite() {
        return Err(Error::InvalidArgument("theta_end must be finite".into()));
    }
    let trajectory = StirapTrajectory { theta_end, ramp };
    let result = propagate(&effective_schedule(Arc::new(trajectory)), steps)?;
    let final_state = result.unitary.apply(&basis_vector(2, 0));
    Ok(StirapReport {
        populations: [final_state[0].norm_sqr(), final_state[1].norm_sqr()],
        dark_state_error: (&final_state - trajectory.dark_state(1.0)).norm(),
        final_state,
        steps: result.steps,
    })
}
