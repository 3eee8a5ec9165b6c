//! Time-ordered propagation.
//!
//! All routes share one integrator, the exponential midpoint rule
//! `U = prod_m exp(-i H(t_m^mid) dt)`, which is unitary by construction and
//! second order in `dt`. Piecewise generators are split at their breakpoints
//! so no step straddles a jump.

use std::sync::Arc;

use crate::effective::BrightTrajectory;
use crate::error::{Error, Result};
use crate::lambda::{lambda_hamiltonian, CouplingSet};
use crate::linalg::{self, expm_hermitian_matrix, inner, CMatrix, CVector, HermitianOperator, UnitaryOperator};

pub type GeneratorFn = dyn Fn(f64) -> Result<CMatrix> + Send + Sync;

/// A time-dependent Hamiltonian on `[t0, t1]` with optional breakpoints.
#[derive(Clone)]
pub struct Schedule {
    dim: usize,
    span: (f64, f64),
    breakpoints: Vec<f64>,
    generator: Arc<GeneratorFn>,
}

impl Schedule {
    pub fn new<G>(dim: usize, span: (f64, f64), breakpoints: Vec<f64>, generator: G) -> Self
    where
        G: Fn(f64) -> Result<CMatrix> + Send + Sync + 'static,
    {
        Self::from_arc(dim, span, breakpoints, Arc::new(generator))
    }

    fn from_arc(dim: usize, span: (f64, f64), mut breakpoints: Vec<f64>, generator: Arc<GeneratorFn>) -> Self {
        breakpoints.retain(|b| *b > span.0 && *b < span.1);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self { dim, span, breakpoints, generator }
    }

    pub fn constant(h: HermitianOperator, span: (f64, f64)) -> Self {
        let dim = h.dim();
        let m = h.into_matrix();
        Self::new(dim, span, Vec::new(), move |_| Ok(m.clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn sample(&self, t: f64) -> Result<CMatrix> {
        (self.generator)(t)
    }

    /// Consecutive sub-intervals between breakpoints.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        let mut edges = vec![self.span.0];
        edges.extend_from_slice(&self.breakpoints);
        edges.push(self.span.1);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Same generator on a sub-interval.
    pub fn restricted(&self, span: (f64, f64)) -> Self {
        Self::from_arc(self.dim, span, self.breakpoints.clone(), self.generator.clone())
    }
}

/// Which route produced a unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Effective,
    Full,
    Berry,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Effective => "effective",
            Method::Full => "full",
            Method::Berry => "berry",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "effective" => Ok(Method::Effective),
            "full" => Ok(Method::Full),
            "berry" => Ok(Method::Berry),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub unitary: UnitaryOperator,
    pub steps: usize,
    pub unitarity_error: f64,
    pub method: Method,
}

fn checked_sample(h: &dyn Fn(f64) -> Result<CMatrix>, t: f64) -> Result<CMatrix> {
    let m = h(t)?;
    let defect = linalg::hermiticity_defect(&m);
    if defect >= linalg::HERMITIAN_TOL * m.norm().max(1.0) {
        return Err(Error::NonHermitianSample { t, defect });
    }
    Ok((&m + m.adjoint()).scale(0.5))
}

/// Exponential-midpoint product over `[t0, t1]` in `steps` equal steps.
/// `observer` sees the accumulated unitary after every step.
pub fn evolve_observed(
    h: &dyn Fn(f64) -> Result<CMatrix>,
    t0: f64,
    t1: f64,
    steps: usize,
    observer: &mut dyn FnMut(f64, &CMatrix),
) -> Result<CMatrix> {
    if steps == 0 {
        return Err(Error::InvalidArgument("propagation needs at least one step".into()));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("empty time interval [{t0}, {t1}]")));
    }
    let dt = (t1 - t0) / steps as f64;
    let first = checked_sample(h, t0 + 0.5 * dt)?;
    let dim = first.nrows();
    let mut u = CMatrix::identity(dim, dim);
    for m in 0..steps {
        let mid = t0 + (m as f64 + 0.5) * dt;
        let hm = if m == 0 { first.clone() } else { checked_sample(h, mid)? };
        if hm.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: hm.nrows() });
        }
        u = expm_hermitian_matrix(&hm, dt) * u;
        observer(t0 + (m + 1) as f64 * dt, &u);
    }
    Ok(u)
}

fn finish(u: CMatrix, steps: usize, method: Method) -> Result<PropagationResult> {
    let u = if linalg::unitarity_defect(&u) > 1e-13 { linalg::reunitarize(&u) } else { u };
    let unitarity_error = linalg::unitarity_defect(&u);
    Ok(PropagationResult { unitary: UnitaryOperator::new(u)?, steps, unitarity_error, method })
}

/// `T exp(-i int H dt)` by the exponential midpoint rule.
pub fn evolve_time_ordered(h: &dyn Fn(f64) -> Result<CMatrix>, t0: f64, t1: f64, steps: usize) -> Result<PropagationResult> {
    let u = evolve_observed(h, t0, t1, steps, &mut |_, _| {})?;
    finish(u, steps, Method::Effective)
}

/// Split `steps` over the pieces of `schedule` in proportion to their length.
pub fn allocate_steps(schedule: &Schedule, steps: usize) -> Vec<usize> {
    let (t0, t1) = schedule.span();
    schedule
        .pieces()
        .iter()
        .map(|(a, b)| ((steps as f64 * (b - a) / (t1 - t0)).round() as usize).max(1))
        .collect()
}

/// Propagate a whole schedule, piece by piece.
pub fn propagate_observed(schedule: &Schedule, steps: usize, observer: &mut dyn FnMut(f64, &CMatrix)) -> Result<PropagationResult> {
    let dim = schedule.dim();
    let mut total = CMatrix::identity(dim, dim);
    let mut used = 0;
    let generator = |t: f64| schedule.sample(t);
    for ((a, b), n) in schedule.pieces().into_iter().zip(allocate_steps(schedule, steps)) {
        let before = total.clone();
        let piece = evolve_observed(&generator, a, b, n, &mut |t, u| observer(t, &(u * &before)))?;
        total = piece * total;
        used += n;
    }
    finish(total, used, Method::Effective)
}

pub fn propagate(schedule: &Schedule, steps: usize) -> Result<PropagationResult> {
    propagate_observed(schedule, steps, &mut |_, _| {})
}

/// Shape of a ramp `p: [0, 1] -> [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ramp {
    #[default]
    Linear,
    /// `p(s) = sin^2(pi s / 2)`, with vanishing slope at both ends.
    Smooth,
}

impl Ramp {
    pub fn progress(self, s: f64) -> f64 {
        match self {
            Ramp::Linear => s,
            Ramp::Smooth => (0.5 * std::f64::consts::PI * s).sin().powi(2),
        }
    }

    pub fn rate(self, s: f64) -> f64 {
        match self {
            Ramp::Linear => 1.0,
            Ramp::Smooth => 0.5 * std::f64::consts::PI * (std::f64::consts::PI * s).sin(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ramp::Linear => "linear",
            Ramp::Smooth => "smooth",
        }
    }
}

impl std::str::FromStr for Ramp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Ramp::Linear),
            "smooth" => Ok(Ramp::Smooth),
            other => Err(Error::InvalidArgument(format!("unknown ramp `{other}`"))),
        }
    }
}

type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A differentiable map `f: [s0, s1] -> [t0, t1]` used to re-time a
/// schedule.
#[derive(Clone)]
pub struct TimeMap {
    domain: (f64, f64),
    map: Arc<RealFn>,
    rate: Arc<RealFn>,
}

impl TimeMap {
    pub fn new<F, D>(domain: (f64, f64), map: F, rate: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { domain, map: Arc::new(map), rate: Arc::new(rate) }
    }

    pub fn identity(span: (f64, f64)) -> Self {
        Self::new(span, |s| s, |_| 1.0)
    }

    /// `f(s) = t0 + (t1 - t0) p((s - t0) / (t1 - t0))` on the same interval.
    pub fn from_ramp(span: (f64, f64), ramp: Ramp) -> Self {
        let (t0, len) = (span.0, span.1 - span.0);
        Self::new(span, move |s| t0 + len * ramp.progress((s - t0) / len), move |s| ramp.rate((s - t0) / len))
    }

    /// `tau = t^2`, rescaled to map `span` onto itself.
    pub fn quadratic(span: (f64, f64)) -> Self {
        let (t0, len) = (span.0, span.1 - span.0);
        Self::new(
            span,
            move |s| {
                let x = (s - t0) / len;
                t0 + len * x * x
            },
            move |s| 2.0 * (s - t0) / len,
        )
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn apply(&self, s: f64) -> f64 {
        (self.map)(s)
    }

    pub fn rate(&self, s: f64) -> f64 {
        (self.rate)(s)
    }

    fn invert(&self, t: f64) -> f64 {
        let (mut lo, mut hi) = self.domain;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.apply(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Re-time a geometric generator: the new schedule on `f`'s domain is
/// `H(f(s)) f'(s)`, so both propagate to the same unitary.
pub fn reparametrize(schedule: &Schedule, f: &TimeMap) -> Result<Schedule> {
    const PROBES: usize = 1024;
    let (s0, s1) = f.domain();
    if !(s1 > s0) {
        return Err(Error::NonMonotoneMap { at: s0 });
    }
    let mut previous = f.apply(s0);
    for m in 1..=PROBES {
        let s = s0 + (s1 - s0) * m as f64 / PROBES as f64;
        let value = f.apply(s);
        if !(value > previous) || f.rate(s) < 0.0 {
            return Err(Error::NonMonotoneMap { at: s });
        }
        previous = value;
    }
    let (t0, t1) = schedule.span();
    let (f0, f1) = (f.apply(s0), f.apply(s1));
    let tol = 1e-12 * (t1 - t0).abs().max(1.0);
    if (f0 - t0).abs() > tol || (f1 - t1).abs() > tol {
        return Err(Error::TimeMapRange { s0, s1, f0, f1, t0, t1 });
    }
    let breaks = schedule.breakpoints().iter().map(|&b| f.invert(b)).collect();
    let inner_schedule = schedule.clone();
    let map = f.clone();
    Ok(Schedule::new(schedule.dim(), (s0, s1), breaks, move |s| {
        Ok(inner_schedule.sample(map.apply(s))? * linalg::c(map.rate(s), 0.0))
    }))
}

/// Settings for the brute-force adiabatic run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticRunConfig {
    pub omega_t: f64,
    pub steps: usize,
    pub ramp: Ramp,
}

impl AdiabaticRunConfig {
    pub fn new(omega_t: f64, steps: usize, ramp: Ramp) -> Result<Self> {
        if !(omega_t > 0.0 && omega_t.is_finite()) {
            return Err(Error::InvalidArgument(format!("omega_t must be positive, got {omega_t}")));
        }
        if steps < 10 {
            return Err(Error::InvalidArgument(format!("full dynamics needs at least 10 steps, got {steps}")));
        }
        Ok(Self { omega_t, steps, ramp })
    }

    /// 4096 steps below `omega_t = 1000`, 65536 from there on.
    pub fn default_steps(omega_t: f64) -> usize {
        if omega_t >= 1000.0 {
            65536
        } else {
            4096
        }
    }
}

type CouplingFn = dyn Fn(f64) -> Result<CouplingSet> + Send + Sync;

/// Lambda-system drive parameters as a function of schedule time.
#[derive(Clone)]
pub struct CouplingSchedule {
    n: usize,
    span: (f64, f64),
    breakpoints: Vec<f64>,
    couplings: Arc<CouplingFn>,
}

impl CouplingSchedule {
    pub fn new<F>(n: usize, span: (f64, f64), breakpoints: Vec<f64>, couplings: F) -> Self
    where
        F: Fn(f64) -> Result<CouplingSet> + Send + Sync + 'static,
    {
        Self { n, span, breakpoints, couplings: Arc::new(couplings) }
    }

    /// Drive whose bright state follows a single-state trajectory, at fixed
    /// mean Rabi frequency `omega`.
    pub fn from_trajectory(trajectory: Arc<dyn BrightTrajectory>, omega: f64) -> Result<Self> {
        if trajectory.count() != 1 {
            return Err(Error::InvalidArgument(format!(
                "a Lambda drive has exactly one bright state, trajectory has {}",
                trajectory.count()
            )));
        }
        let n = trajectory.dim();
        let span = trajectory.domain();
        let breaks = trajectory.breakpoints();
        Ok(Self::new(n, span, breaks, move |t| CouplingSet::from_bright_state(omega, &trajectory.value(t)[0])))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn couplings(&self, t: f64) -> Result<CouplingSet> {
        (self.couplings)(t)
    }
}

/// Full-dynamics generator in physical time plus the map back to schedule
/// time.
#[derive(Clone)]
pub struct FullDynamicsPlan {
    pub generator: Schedule,
    warp: Arc<RealFn>,
}

impl FullDynamicsPlan {
    /// Schedule time reached at physical time `tau`.
    pub fn schedule_time(&self, tau: f64) -> f64 {
        (self.warp)(tau)
    }
}

/// Lay a coupling schedule out in physical time: the total duration is
/// `omega_t / Omega(t0)`, each breakpoint piece keeps its share of it, and
/// the ramp shapes progress inside every piece.
pub fn full_dynamics_plan(couplings: &CouplingSchedule, config: &AdiabaticRunConfig) -> Result<FullDynamicsPlan> {
    let (t0, t1) = couplings.span;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument("coupling schedule has an empty domain".into()));
    }
    let omega_ref = couplings.couplings(t0)?.omega();
    let duration = config.omega_t / omega_ref;
    let mut edges = vec![t0];
    let mut interior: Vec<f64> = couplings.breakpoints.iter().copied().filter(|b| *b > t0 && *b < t1).collect();
    interior.sort_by(f64::total_cmp);
    edges.extend(interior);
    edges.push(t1);
    let physical: Vec<f64> = edges.iter().map(|t| duration * (t - t0) / (t1 - t0)).collect();

    let ramp = config.ramp;
    let (edges_w, physical_w) = (edges.clone(), physical.clone());
    let warp = move |tau: f64| -> f64 {
        let k = physical_w.partition_point(|p| *p <= tau).clamp(1, physical_w.len() - 1) - 1;
        let (p0, p1) = (physical_w[k], physical_w[k + 1]);
        let s = ((tau - p0) / (p1 - p0)).clamp(0.0, 1.0);
        edges_w[k] + (edges_w[k + 1] - edges_w[k]) * ramp.progress(s)
    };
    let warp: Arc<RealFn> = Arc::new(warp);
    let source = couplings.clone();
    let n = couplings.n;
    let w = warp.clone();
    let generator = Schedule::new(n + 1, (0.0, duration), physical[1..physical.len() - 1].to_vec(), move |tau| {
        let c = source.couplings(w(tau))?;
        if c.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: c.n() });
        }
        Ok(lambda_hamiltonian(&c).into_matrix())
    });
    Ok(FullDynamicsPlan { generator, warp })
}

/// Integrate the full `(n+1)`-level Schrödinger equation along a coupling
/// schedule. This is the reference the geometric routes are checked against.
pub fn evolve_full_adiabatic(couplings: &CouplingSchedule, config: &AdiabaticRunConfig) -> Result<PropagationResult> {
    let plan = full_dynamics_plan(couplings, config)?;
    let mut result = propagate(&plan.generator, config.steps)?;
    result.method = Method::Full;
    Ok(result)
}

/// `M_ab = <end_a| U |start_b>`
pub fn dark_block(u: &CMatrix, frame_start: &[CVector], frame_end: &[CVector]) -> Result<CMatrix> {
    linalg::check_orthonormal(frame_start, linalg::INPUT_ORTHO_TOL)?;
    linalg::check_orthonormal(frame_end, linalg::INPUT_ORTHO_TOL)?;
    if frame_start.len() != frame_end.len() {
        return Err(Error::DimensionMismatch { expected: frame_start.len(), found: frame_end.len() });
    }
    for v in frame_start.iter().chain(frame_end) {
        if v.len() != u.ncols() {
            return Err(Error::DimensionMismatch { expected: u.ncols(), found: v.len() });
        }
    }
    let images: Vec<CVector> = frame_start.iter().map(|d| u * d).collect();
    Ok(CMatrix::from_fn(frame_end.len(), frame_start.len(), |a, b| inner(&frame_end[a], &images[b])))
}

/// `max_d 1 - <U d| P_end |U d>` over the start basis.
pub fn leakage(u: &CMatrix, dark_start: &[CVector], p_dark_end: &HermitianOperator) -> Result<f64> {
    linalg::check_orthonormal(dark_start, linalg::INPUT_ORTHO_TOL)?;
    let mut worst = 0.0f64;
    for d in dark_start {
        if d.len() != u.ncols() || p_dark_end.dim() != u.nrows() {
            return Err(Error::DimensionMismatch { expected: u.ncols(), found: d.len() });
        }
        let image = u * d;
        worst = worst.max(1.0 - p_dark_end.expectation(&image));
    }
    Ok(worst.clamp(0.0, 1.0))
}
