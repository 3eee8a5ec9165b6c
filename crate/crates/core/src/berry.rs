//! Non-Abelian Berry connection of the three-level dark pair and its
//! path-ordered holonomies.

use crate::effective::h_eff_couplings;
use crate::error::{Error, Result};
use crate::lambda::{coupling_rates_from_angles, couplings_from_angles, dark_basis_parametrized, SphericalAngles};
use crate::linalg::{c, expm_hermitian_matrix, CMatrix, UnitaryOperator, I};
use crate::propagate::{dark_block, propagate, CouplingSchedule, Schedule};

/// Largest allowed change of any angle between consecutive samples.
pub const MAX_SEGMENT: f64 = 0.1;
/// Step used by the polyline builders.
pub const DEFAULT_STEP: f64 = 0.05;
const CLOSURE_TOL: f64 = 1e-12;
const FIXED_TOL: f64 = 1e-12;

/// Polyline through angle space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPath {
    samples: Vec<SphericalAngles>,
    closed: bool,
}

impl ParameterPath {
    pub fn new(samples: Vec<SphericalAngles>, closed: bool) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("a path needs at least one sample".into()));
        }
        if samples.iter().any(|a| a.to_array().iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("path samples must be finite".into()));
        }
        if closed {
            let gap = samples[0].max_abs_difference(samples[samples.len() - 1]);
            if gap > CLOSURE_TOL {
                return Err(Error::PathNotClosed { gap });
            }
        }
        Ok(Self { samples, closed })
    }

    /// Straight legs between `corners`, each cut into pieces no longer than
    /// `max_step` in any coordinate.
    pub fn polyline(corners: &[SphericalAngles], max_step: f64, closed: bool) -> Result<Self> {
        if !(max_step > 0.0 && max_step < MAX_SEGMENT) {
            return Err(Error::InvalidArgument(format!("max_step must lie in (0, {MAX_SEGMENT}), got {max_step}")));
        }
        let Some(first) = corners.first() else {
            return Err(Error::InvalidArgument("a path needs at least one corner".into()));
        };
        let mut samples = vec![*first];
        for w in corners.windows(2) {
            let pieces = (w[0].max_abs_difference(w[1]) / max_step).ceil().max(1.0) as usize;
            for k in 1..=pieces {
                samples.push(w[0].lerp(w[1], k as f64 / pieces as f64));
            }
        }
        Self::new(samples, closed)
    }

    /// `0 -> (a, 0) -> (a, b) -> (0, b) -> 0` in `(theta1, theta2)`.
    pub fn rectangle_theta(a: f64, b: f64) -> Result<Self> {
        let p = |t1, t2| SphericalAngles::new(t1, t2, 0.0, 0.0);
        Self::polyline(&[p(0.0, 0.0), p(a, 0.0), p(a, b), p(0.0, b), p(0.0, 0.0)], DEFAULT_STEP, true)
    }

    /// `0 -> (b, 0) -> (b, c) -> (0, c) -> 0` in `(theta2, phi3)` at `theta1 = 0`.
    pub fn rectangle_theta2_phi3(b: f64, c: f64) -> Result<Self> {
        let p = |t2, p3| SphericalAngles::new(0.0, t2, 0.0, p3);
        Self::polyline(&[p(0.0, 0.0), p(b, 0.0), p(b, c), p(0.0, c), p(0.0, 0.0)], DEFAULT_STEP, true)
    }

    pub fn samples(&self) -> &[SphericalAngles] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn segments(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn start(&self) -> SphericalAngles {
        self.samples[0]
    }

    pub fn end(&self) -> SphericalAngles {
        self.samples[self.samples.len() - 1]
    }

    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self { samples, closed: self.closed }
    }

    /// `self` followed by `next`; the join must match.
    pub fn concat(&self, next: &Self) -> Result<Self> {
        let gap = self.end().max_abs_difference(next.start());
        if gap > CLOSURE_TOL {
            return Err(Error::PathNotClosed { gap });
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&next.samples[1..]);
        let closed = samples[0].max_abs_difference(samples[samples.len() - 1]) <= CLOSURE_TOL;
        Ok(Self { samples, closed })
    }

    pub fn check_discretization(&self) -> Result<()> {
        for (index, w) in self.samples.windows(2).enumerate() {
            let step = w[0].max_abs_difference(w[1]);
            if step >= MAX_SEGMENT {
                return Err(Error::SegmentTooCoarse { index, step, limit: MAX_SEGMENT });
            }
        }
        Ok(())
    }

    fn angles_at(&self, t: f64) -> (SphericalAngles, SphericalAngles) {
        let k = (t.floor().max(0.0) as usize).min(self.segments().saturating_sub(1));
        let (a, b) = (self.samples[k], self.samples[(k + 1).min(self.samples.len() - 1)]);
        let rate = SphericalAngles::from_array(std::array::from_fn(|i| b.to_array()[i] - a.to_array()[i]));
        (a.lerp(b, t - k as f64), rate)
    }
}

/// Connection components `A_k = <d_i| d/d lambda_k |d_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrices {
    pub theta1: CMatrix,
    pub theta2: CMatrix,
    pub phi2: CMatrix,
    pub phi3: CMatrix,
}

impl ConnectionMatrices {
    pub fn components(&self) -> [&CMatrix; 4] {
        [&self.theta1, &self.theta2, &self.phi2, &self.phi3]
    }

    /// `sum_k A_k v_k`
    pub fn contract(&self, v: SphericalAngles) -> CMatrix {
        let v = v.to_array();
        self.components().iter().zip(v).fold(CMatrix::zeros(2, 2), |acc, (a, x)| acc + *a * c(x, 0.0))
    }
}

pub fn connection_at(a: SphericalAngles) -> ConnectionMatrices {
    let (s1, _) = a.theta1.sin_cos();
    let (s2, c2) = a.theta2.sin_cos();
    let m = |entries: [f64; 4], factor| CMatrix::from_row_slice(2, 2, &entries.map(|x| factor * x));
    ConnectionMatrices {
        theta1: CMatrix::zeros(2, 2),
        theta2: m([0.0, s1, -s1, 0.0], c(1.0, 0.0)),
        phi2: m([s1 * s1 * s2 * s2, -s1 * s2 * c2, -s1 * s2 * c2, c2 * c2], I),
        phi3: m([s1 * s1 * c2 * c2, s1 * s2 * c2, s1 * s2 * c2, s2 * s2], I),
    }
}

/// `P exp(-sum A_k d lambda_k)` as a product of midpoint factors, later
/// segments on the left.
pub fn holonomy(path: &ParameterPath) -> Result<UnitaryOperator> {
    path.check_discretization()?;
    let mut u = CMatrix::identity(2, 2);
    for w in path.samples().windows(2) {
        let (a, b) = (w[0].to_array(), w[1].to_array());
        let mid = SphericalAngles::from_array(std::array::from_fn(|k| 0.5 * (a[k] + b[k])));
        let delta = SphericalAngles::from_array(std::array::from_fn(|k| b[k] - a[k]));
        let x = connection_at(mid).contract(delta);
        // exp(-X) = exp(-i H) with H = -iX Hermitian
        let generator = x * c(0.0, -1.0);
        u = expm_hermitian_matrix(&generator, 1.0) * u;
    }
    UnitaryOperator::new(u)
}

fn require_closed(path: &ParameterPath) -> Result<()> {
    let gap = path.start().max_abs_difference(path.end());
    if gap > CLOSURE_TOL {
        return Err(Error::PathNotClosed { gap });
    }
    Ok(())
}

fn require_fixed(path: &ParameterPath, index: usize, value: Option<f64>) -> Result<()> {
    let reference = value.unwrap_or(path.start().to_array()[index]);
    if path.samples().iter().any(|a| (a.to_array()[index] - reference).abs() > FIXED_TOL) {
        return Err(Error::PathVariesFixedCoordinates { coordinate: SphericalAngles::NAMES[index] });
    }
    Ok(())
}

fn trapezoid(path: &ParameterPath, weight: impl Fn(SphericalAngles) -> f64, along: usize) -> f64 {
    path.samples()
        .windows(2)
        .map(|w| 0.5 * (weight(w[0]) + weight(w[1])) * (w[1].to_array()[along] - w[0].to_array()[along]))
        .sum()
}

/// Loop integral `oint sin(theta1) d theta2` by the trapezoid rule.
pub fn theta_loop_integral(path: &ParameterPath) -> f64 {
    trapezoid(path, |a| a.theta1.sin(), 1)
}

/// Loop integral `oint sin^2(theta2) d phi3` by the trapezoid rule.
pub fn phi3_loop_integral(path: &ParameterPath) -> f64 {
    trapezoid(path, |a| a.theta2.sin().powi(2), 3)
}

/// `exp(-i sigma_y oint sin(theta1) d theta2)` for loops in `(theta1, theta2)`.
pub fn u_y_analytic(path: &ParameterPath) -> Result<UnitaryOperator> {
    require_fixed(path, 2, None)?;
    require_fixed(path, 3, None)?;
    require_closed(path)?;
    let g = theta_loop_integral(path);
    let (s, co) = g.sin_cos();
    UnitaryOperator::new(CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]))
}

/// `diag(1, exp(-i oint sin^2(theta2) d phi3))` for loops in `(theta2, phi3)`
/// at `theta1 = 0`.
pub fn u_z_analytic(path: &ParameterPath) -> Result<UnitaryOperator> {
    require_fixed(path, 0, Some(0.0))?;
    require_fixed(path, 2, None)?;
    require_closed(path)?;
    let g = phi3_loop_integral(path);
    UnitaryOperator::new(CMatrix::from_diagonal(&crate::linalg::CVector::from_vec(vec![
        c(1.0, 0.0),
        crate::linalg::cis(-g),
    ])))
}

/// Effective-Hamiltonian generator that drives the bright state of
/// `couplings_from_angles` along `path`, one unit of time per segment.
pub fn angle_path_schedule(path: &ParameterPath) -> Schedule {
    let span = (0.0, path.segments().max(1) as f64);
    let breaks = (1..path.segments()).map(|k| k as f64).collect();
    let path = path.clone();
    Schedule::new(3, span, breaks, move |t| {
        let (angles, rates) = path.angles_at(t);
        let couplings = couplings_from_angles(angles, 1.0)?;
        let (r_dot, phi_dot) = coupling_rates_from_angles(angles, rates);
        Ok(h_eff_couplings(&couplings, &r_dot, &phi_dot)?.into_matrix())
    })
}

/// Lambda drive with Rabi frequency `omega` along `path`, for full dynamics.
pub fn angle_path_couplings(path: &ParameterPath, omega: f64) -> CouplingSchedule {
    let span = (0.0, path.segments().max(1) as f64);
    let breaks = (1..path.segments()).map(|k| k as f64).collect();
    let path = path.clone();
    CouplingSchedule::new(3, span, breaks, move |t| couplings_from_angles(path.angles_at(t).0, omega))
}

/// Dark frame `{d1, d2}` at the ends of `path` as a pair of slices.
pub fn end_frames(path: &ParameterPath) -> (Vec<crate::linalg::CVector>, Vec<crate::linalg::CVector>) {
    let (a1, a2) = dark_basis_parametrized(path.start());
    let (b1, b2) = dark_basis_parametrized(path.end());
    (vec![a1, a2], vec![b1, b2])
}

/// Dark block of the effective-Hamiltonian evolution along `path`,
/// `M_ab = <d_a(end)| U |d_b(start)>`.
pub fn effective_dark_block(path: &ParameterPath, steps_per_segment: usize) -> Result<CMatrix> {
    path.check_discretization()?;
    if path.segments() == 0 {
        return Ok(CMatrix::identity(2, 2));
    }
    let schedule = angle_path_schedule(path);
    let result = propagate(&schedule, steps_per_segment.max(1) * path.segments())?;
    let (start, end) = end_frames(path);
    dark_block(result.unitary.matrix(), &start, &end)
}
