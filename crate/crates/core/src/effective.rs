//! Effective Hamiltonians generated by moving bright states.
//!
//! For orthonormal bright states `B_i(t)` the dark subspace is transported by
//! `H_eff = sum_i i(|dB_i><B_i| - |B_i><dB_i|)`. No basis of the dark space
//! is ever formed.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lambda::CouplingSet;
use crate::linalg::{self, cis, frame_matrix, inner, outer, CMatrix, CVector, HermitianOperator, I};
use crate::propagate::Schedule;

/// Tolerance on `|Re<dB|B>|` for a derivative to be consistent with
/// normalization.
pub const DERIVATIVE_TOL: f64 = 1e-8;
/// Tolerance on `|sum_i r_i r_i'|`.
pub const RATE_DRIFT_TOL: f64 = 1e-8;

/// A time-dependent orthonormal set of `count()` bright states in a space of
/// dimension `dim()`, with first derivatives.
///
/// Implementations must be pure: the same `t` always yields the same frame.
pub trait BrightTrajectory: Send + Sync {
    fn dim(&self) -> usize;

    fn count(&self) -> usize;

    fn domain(&self) -> (f64, f64);

    fn value(&self, t: f64) -> Vec<CVector>;

    fn derivative(&self, t: f64) -> Vec<CVector>;

    /// Interior times where the derivative may jump (piecewise trajectories).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Check orthonormality and derivative consistency at `samples` evenly
    /// spaced times.
    ///
    /// The derivative is compared against difference quotients at
    /// `h = 1e-4` and `h = 1e-5`; the error must either be negligible or
    /// drop at second order. Samples within `1e-3` of a breakpoint only get
    /// the orthonormality check.
    fn validate(&self, samples: usize) -> Result<()> {
        let (t0, t1) = self.domain();
        let breaks = self.breakpoints();
        let samples = samples.max(2);
        for m in 0..samples {
            let t = t0 + (t1 - t0) * m as f64 / (samples - 1) as f64;
            linalg::check_orthonormal(&self.value(t), linalg::INPUT_ORTHO_TOL)?;
            if breaks.iter().any(|b| (b - t).abs() < 1e-3) {
                continue;
            }
            let exact = self.derivative(t);
            let err = |h: f64| {
                let approx = difference_quotient(|s| self.value(s), t, h, (t0, t1));
                approx.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
            };
            let (coarse, fine) = (err(1e-4), err(1e-5));
            if fine > 1e-7 && fine > coarse / 20.0 {
                return Err(Error::TrajectoryDerivative { t, error: fine });
            }
        }
        Ok(())
    }
}

/// Second-order difference quotient, one-sided where the central stencil
/// would leave `domain`.
fn difference_quotient<F>(value: F, t: f64, h: f64, domain: (f64, f64)) -> Vec<CVector>
where
    F: Fn(f64) -> Vec<CVector>,
{
    let combine = |terms: &[(f64, Vec<CVector>)]| -> Vec<CVector> {
        let k = terms[0].1.len();
        (0..k)
            .map(|i| {
                let mut acc = terms[0].1[i].scale(0.0);
                for (w, frame) in terms {
                    acc += frame[i].scale(*w);
                }
                acc.unscale(2.0 * h)
            })
            .collect()
    };
    let (t0, t1) = domain;
    if t - h < t0 {
        combine(&[(-3.0, value(t)), (4.0, value(t + h)), (-1.0, value(t + 2.0 * h))])
    } else if t + h > t1 {
        combine(&[(3.0, value(t)), (-4.0, value(t - h)), (1.0, value(t - 2.0 * h))])
    } else {
        combine(&[(1.0, value(t + h)), (-1.0, value(t - h))])
    }
}

/// Value-only trajectory with derivatives supplied by difference quotients.
pub struct FiniteDifferenceTrajectory<F> {
    value: F,
    domain: (f64, f64),
    step: Option<f64>,
    dim: usize,
    count: usize,
}

/// Wrap a value-only frame function. `step = None` uses
/// `h = 1e-6 * max(1, |t|)`.
///
/// The frame is probed for orthonormality at 65 evenly spaced times; values
/// are never re-orthonormalized.
pub fn finite_difference_adapter<F>(value: F, domain: (f64, f64), step: Option<f64>) -> Result<FiniteDifferenceTrajectory<F>>
where
    F: Fn(f64) -> Vec<CVector> + Send + Sync,
{
    if let Some(h) = step {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("difference step must be positive, got {h}")));
        }
    }
    if !(domain.1 > domain.0) {
        return Err(Error::InvalidArgument("trajectory domain must have positive length".into()));
    }
    let first = value(domain.0);
    let (dim, count) = (first.first().map_or(0, |v| v.len()), first.len());
    const PROBES: usize = 65;
    for m in 0..PROBES {
        let t = domain.0 + (domain.1 - domain.0) * m as f64 / (PROBES - 1) as f64;
        let frame = value(t);
        if frame.len() != count {
            return Err(Error::DimensionMismatch { expected: count, found: frame.len() });
        }
        linalg::check_orthonormal(&frame, linalg::INPUT_ORTHO_TOL)?;
    }
    Ok(FiniteDifferenceTrajectory { value, domain, step, dim, count })
}

impl<F> BrightTrajectory for FiniteDifferenceTrajectory<F>
where
    F: Fn(f64) -> Vec<CVector> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn count(&self) -> usize {
        self.count
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn value(&self, t: f64) -> Vec<CVector> {
        (self.value)(t)
    }

    fn derivative(&self, t: f64) -> Vec<CVector> {
        let h = self.step.unwrap_or(1e-6 * t.abs().max(1.0));
        difference_quotient(&self.value, t, h, self.domain)
    }
}

/// A frame that never moves.
#[derive(Debug, Clone)]
pub struct StaticFrame {
    frame: Vec<CVector>,
    domain: (f64, f64),
}

impl StaticFrame {
    pub fn new(frame: Vec<CVector>, domain: (f64, f64)) -> Result<Self> {
        if frame.is_empty() {
            return Err(Error::InvalidArgument("static frame needs at least one vector".into()));
        }
        linalg::check_orthonormal(&frame, linalg::INPUT_ORTHO_TOL)?;
        Ok(Self { frame, domain })
    }
}

impl BrightTrajectory for StaticFrame {
    fn dim(&self) -> usize {
        self.frame[0].len()
    }

    fn count(&self) -> usize {
        self.frame.len()
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn value(&self, _t: f64) -> Vec<CVector> {
        self.frame.clone()
    }

    fn derivative(&self, _t: f64) -> Vec<CVector> {
        self.frame.iter().map(|v| v.scale(0.0)).collect()
    }
}

fn single_term(b: &CVector, b_dot: &CVector) -> CMatrix {
    let k = outer(b_dot, b) - outer(b, b_dot);
    k * I
}

/// `H_eff = i(|dB><B| - |B><dB|)` for one normalized bright state.
pub fn h_eff_single(b: &CVector, b_dot: &CVector) -> Result<HermitianOperator> {
    linalg::check_normalized(b)?;
    if b.len() != b_dot.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), found: b_dot.len() });
    }
    let defect = inner(b_dot, b).re.abs();
    if defect > DERIVATIVE_TOL {
        return Err(Error::DerivativeInconsistent { defect });
    }
    HermitianOperator::new(single_term(b, b_dot))
}

/// Sum of single-state terms over an orthonormal bright set.
pub fn h_eff_multi(values: &[CVector], derivatives: &[CVector]) -> Result<HermitianOperator> {
    if values.len() != derivatives.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), found: derivatives.len() });
    }
    let Some(first) = values.first() else {
        return Err(Error::InvalidArgument("no bright states given".into()));
    };
    linalg::check_orthonormal(values, linalg::INPUT_ORTHO_TOL)?;
    let n = first.len();
    let mut h = CMatrix::zeros(n, n);
    for (b, b_dot) in values.iter().zip(derivatives) {
        if b_dot.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b_dot.len() });
        }
        let defect = inner(b_dot, b).re.abs();
        if defect > DERIVATIVE_TOL {
            return Err(Error::DerivativeInconsistent { defect });
        }
        h += single_term(b, b_dot);
    }
    HermitianOperator::new(h)
}

/// The effective Hamiltonian written directly in the drive parameters:
///
/// `H_ij = [-(phi_i' + phi_j') r_i r_j + i(r_i' r_j - r_i r_j')] e^{i(phi_i - phi_j)}`
///
/// The logarithmic-derivative form is never evaluated, so vanishing
/// amplitudes are harmless.
pub fn h_eff_couplings(couplings: &CouplingSet, r_dot: &[f64], phi_dot: &[f64]) -> Result<HermitianOperator> {
    let n = couplings.n();
    for len in [r_dot.len(), phi_dot.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let (r, phi) = (couplings.r(), couplings.phi());
    let drift: f64 = r.iter().zip(r_dot).map(|(a, b)| a * b).sum::<f64>().abs();
    if drift > RATE_DRIFT_TOL {
        return Err(Error::NormalizationDrift { drift });
    }
    let h = CMatrix::from_fn(n, n, |i, j| {
        let gauge = -(phi_dot[i] + phi_dot[j]) * r[i] * r[j];
        let stretch = r_dot[i] * r[j] - r[i] * r_dot[j];
        linalg::c(gauge, stretch) * cis(phi[i] - phi[j])
    });
    HermitianOperator::new(h)
}

/// Schedule of `h_eff_multi` along a trajectory.
pub fn effective_schedule(trajectory: Arc<dyn BrightTrajectory>) -> Schedule {
    let (t0, t1) = trajectory.domain();
    let dim = trajectory.dim();
    let breaks = trajectory.breakpoints();
    let generator = move |t: f64| -> Result<CMatrix> {
        let h = h_eff_multi(&trajectory.value(t), &trajectory.derivative(t))?;
        Ok(h.into_matrix())
    };
    Schedule::new(dim, (t0, t1), breaks, generator)
}

/// Time-dependent coupling matrix `g(t)` of a general bright Hamiltonian.
pub type CouplingMatrixFn = dyn Fn(f64) -> CMatrix + Send + Sync;

/// `H = sum_ij (g_ij |B_i><B_j| + g_ij^* |B_j><B_i|)` over a bright
/// trajectory.
///
/// Diagonal entries enter twice, as `2 Re(g_ii) |B_i><B_i|`; `g` is stored as
/// given.
#[derive(Clone)]
pub struct GeneralBrightHamiltonian {
    frames: Arc<dyn BrightTrajectory>,
    coupling: Arc<CouplingMatrixFn>,
}

impl GeneralBrightHamiltonian {
    pub fn new<G>(frames: Arc<dyn BrightTrajectory>, coupling: G) -> Self
    where
        G: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        Self { frames, coupling: Arc::new(coupling) }
    }

    pub fn frames(&self) -> &Arc<dyn BrightTrajectory> {
        &self.frames
    }

    pub fn coupling(&self, t: f64) -> CMatrix {
        (self.coupling)(t)
    }

    /// `g + g^dagger`, the Hamiltonian in the bright basis.
    pub fn bright_block(&self, t: f64) -> HermitianOperator {
        let g = self.coupling(t);
        HermitianOperator::symmetrized(&g + g.adjoint())
    }

    pub fn hamiltonian(&self, t: f64) -> HermitianOperator {
        let frame = frame_matrix(&self.frames.value(t), self.frames.dim());
        let block = self.bright_block(t);
        HermitianOperator::symmetrized(&frame * block.matrix() * frame.adjoint())
    }

    pub fn effective_hamiltonian(&self, t: f64) -> Result<HermitianOperator> {
        h_eff_multi(&self.frames.value(t), &self.frames.derivative(t))
    }

    /// Checks the frame and that no bright-block eigenvalue vanishes at
    /// `samples` evenly spaced times.
    pub fn validate(&self, samples: usize) -> Result<()> {
        self.frames.validate(samples)?;
        let (t0, t1) = self.frames.domain();
        let samples = samples.max(2);
        for m in 0..samples {
            let t = t0 + (t1 - t0) * m as f64 / (samples - 1) as f64;
            let g = self.coupling(t);
            if g.shape() != (self.frames.count(), self.frames.count()) {
                return Err(Error::DimensionMismatch { expected: self.frames.count(), found: g.nrows() });
            }
            let smallest = self.bright_block(t).eigenvalues().into_iter().map(f64::abs).fold(f64::INFINITY, f64::min);
            if smallest <= 1e-8 * g.norm() {
                return Err(Error::VanishingBrightEigenvalue { t, eigenvalue: smallest });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{bright_state, CouplingSet};
    use crate::linalg::{basis_vector, c, embed, real_vector};
    use proptest::prelude::*;

    fn rotating(t: f64) -> (CVector, CVector) {
        (real_vector(&[t.cos(), t.sin(), 0.0]), real_vector(&[-t.sin(), t.cos(), 0.0]))
    }

    fn rotation_generator(dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        m[(0, 1)] = c(0.0, -1.0);
        m[(1, 0)] = c(0.0, 1.0);
        m
    }

    #[test]
    fn single_examples() {
        let b = basis_vector(3, 0);
        let h = h_eff_single(&b, &CVector::zeros(3)).unwrap();
        assert_eq!(h.matrix(), &CMatrix::zeros(3, 3));

        for t in [0.0, 0.3, 2.1] {
            let (b, bd) = rotating(t);
            let h = h_eff_single(&b, &bd).unwrap();
            assert!((h.matrix() - rotation_generator(3)).norm() < 1e-15);
        }

        let v = real_vector(&[0.6, 0.0, 0.8]);
        let (omega, t) = (1.7, 0.4);
        let b = v.map(|z| z * cis(omega * t));
        let bd = b.map(|z| z * c(0.0, omega));
        let h = h_eff_single(&b, &bd).unwrap();
        let expected = outer(&v, &v).scale(-2.0 * omega);
        assert!((h.matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn single_rejects_bad_input() {
        let b = basis_vector(2, 0);
        assert!(matches!(
            h_eff_single(&real_vector(&[1.0, 1.0]), &CVector::zeros(2)),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            h_eff_single(&b, &real_vector(&[0.5, 0.0])),
            Err(Error::DerivativeInconsistent { .. })
        ));
    }

    #[test]
    fn coupling_form_examples() {
        let cs = CouplingSet::new(1.0, vec![0.6, 0.8], vec![0.2, -1.0]).unwrap();
        let h = h_eff_couplings(&cs, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(h.matrix(), &CMatrix::zeros(2, 2));

        let t = 0.7f64;
        let cs = CouplingSet::new(1.0, vec![t.cos(), t.sin()], vec![0.0, 0.0]).unwrap();
        let h = h_eff_couplings(&cs, &[-t.sin(), t.cos()], &[0.0, 0.0]).unwrap();
        assert!((h.matrix()[(0, 1)] - c(0.0, -1.0)).norm() < 1e-15);

        let cs = CouplingSet::new(1.0, vec![1.0], vec![0.4]).unwrap();
        let h = h_eff_couplings(&cs, &[0.0], &[0.9]).unwrap();
        assert!((h.matrix()[(0, 0)] - c(-1.8, 0.0)).norm() < 1e-15);

        let cs = CouplingSet::new(1.0, vec![0.6, 0.8], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            h_eff_couplings(&cs, &[1.0, 0.0], &[0.0, 0.0]),
            Err(Error::NormalizationDrift { .. })
        ));
    }

    #[test]
    fn multi_examples() {
        let values = vec![basis_vector(3, 0), basis_vector(3, 2)];
        let zeros = vec![CVector::zeros(3), CVector::zeros(3)];
        assert_eq!(h_eff_multi(&values, &zeros).unwrap().matrix(), &CMatrix::zeros(3, 3));

        let (b, bd) = rotating(0.9);
        let single = h_eff_single(&b, &bd).unwrap();
        let multi = h_eff_multi(&[b.clone()], &[bd.clone()]).unwrap();
        assert_eq!(single, multi);

        let values = vec![embed(&b, 4, 0), basis_vector(4, 2)];
        let derivs = vec![embed(&bd, 4, 0), CVector::zeros(4)];
        let h = h_eff_multi(&values, &derivs).unwrap();
        assert!((h.matrix() - rotation_generator(4)).norm() < 1e-15);

        let not_ortho = vec![basis_vector(3, 0), real_vector(&[0.6, 0.8, 0.0])];
        assert!(matches!(h_eff_multi(&not_ortho, &zeros), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn adapter_examples() {
        let constant = finite_difference_adapter(|_| vec![basis_vector(2, 1)], (0.0, 1.0), None).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert!(constant.derivative(t)[0].norm() < 1e-12);
        }

        let circle = finite_difference_adapter(|t: f64| vec![real_vector(&[t.cos(), t.sin()])], (0.0, 2.0), Some(1e-5))
            .unwrap();
        for t in [0.0f64, 0.3, 1.0, 2.0] {
            let exact = real_vector(&[-t.sin(), t.cos()]);
            assert!((&circle.derivative(t)[0] - exact).norm() < 1e-9, "t = {t}");
        }
        circle.validate(21).unwrap();

        let jump = finite_difference_adapter(
            |t: f64| vec![if t < 0.5 { basis_vector(2, 0) } else { basis_vector(2, 1) }],
            (0.0, 1.0),
            None,
        )
        .unwrap();
        assert!(matches!(jump.validate(101), Err(Error::TrajectoryDerivative { .. })));

        let drifting = finite_difference_adapter(|t: f64| vec![real_vector(&[1.0 + t, 0.0])], (0.0, 1.0), None);
        assert!(matches!(drifting, Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn general_hamiltonian_rebuild_and_validation() {
        let frame = StaticFrame::new(vec![basis_vector(3, 0), basis_vector(3, 2)], (0.0, 1.0)).unwrap();
        let mut g = CMatrix::zeros(2, 2);
        g[(0, 1)] = c(2.0, 0.0);
        let gh = GeneralBrightHamiltonian::new(Arc::new(frame), move |_| g.clone());
        gh.validate(5).unwrap();
        let h = gh.hamiltonian(0.3);
        assert_eq!(h.matrix()[(0, 2)], c(2.0, 0.0));
        assert_eq!(h.matrix()[(2, 0)], c(2.0, 0.0));
        assert_eq!(h.matrix()[(1, 1)], c(0.0, 0.0));

        let frame = StaticFrame::new(vec![basis_vector(3, 0), basis_vector(3, 2)], (0.0, 1.0)).unwrap();
        let degenerate = GeneralBrightHamiltonian::new(Arc::new(frame), |_| {
            CMatrix::from_diagonal(&real_vector(&[1.0, 0.0]))
        });
        assert!(matches!(degenerate.validate(3), Err(Error::VanishingBrightEigenvalue { .. })));
    }

    fn bright_path(theta: f64, phases: [f64; 3]) -> CouplingSet {
        CouplingSet::new(1.0, vec![theta.sin(), theta.cos() * 0.6, theta.cos() * 0.8], phases.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn coupling_form_equals_bright_state_form(
            theta in 0.0f64..1.5,
            theta_dot in -2.0f64..2.0,
            phases in prop::array::uniform3(-3.0f64..3.0),
            phase_rates in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let cs = bright_path(theta, phases);
            let r_dot = [theta.cos() * theta_dot, -theta.sin() * 0.6 * theta_dot, -theta.sin() * 0.8 * theta_dot];
            let h8 = h_eff_couplings(&cs, &r_dot, &phase_rates).unwrap();
            let b = bright_state(&cs);
            let bd = CVector::from_fn(3, |i, _| cis(phases[i]) * c(r_dot[i], cs.r()[i] * phase_rates[i]));
            let h7 = h_eff_single(&b, &bd).unwrap();
            prop_assert!((h8.matrix() - h7.matrix()).camax() < 1e-12);
            for i in 0..3 {
                let diag = h8.matrix()[(i, i)];
                prop_assert!((diag.re + 2.0 * cs.r()[i].powi(2) * phase_rates[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn real_bright_state_has_no_self_energy(theta in 0.0f64..1.5, theta_dot in -2.0f64..2.0) {
            let cs = bright_path(theta, [0.0; 3]);
            let r_dot = [theta.cos() * theta_dot, -theta.sin() * 0.6 * theta_dot, -theta.sin() * 0.8 * theta_dot];
            let b = bright_state(&cs);
            let bd = real_vector(&r_dot);
            let h = h_eff_single(&b, &bd).unwrap();
            prop_assert!(h.expectation(&b).abs() < 1e-14);
            // the direction orthogonal to both B and dB is untouched
            if let Ok(frame) = crate::linalg::gram_schmidt(&[b.clone(), bd.clone(), basis_vector(3, 1)]) {
                let dark = &frame[2];
                prop_assert!((h.matrix() * dark).norm() < 1e-12);
            }
        }
    }
}
