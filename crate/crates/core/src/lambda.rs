//! Generalized Lambda systems: `n` ground levels resonantly coupled to one
//! excited level `|e>`.
//!
//! Ground levels occupy indices `0..n`, the excited level is index `n`.

use crate::error::{Error, Result};
use crate::linalg::{self, c, cis, outer, CMatrix, CVector, HermitianOperator};

/// Drive parameters `Omega_i = omega * r_i * e^{i phi_i}` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    omega: f64,
    r: Vec<f64>,
    phi: Vec<f64>,
}

impl CouplingSet {
    pub fn new(omega: f64, r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidArgument("coupling set needs at least one ground level".into()));
        }
        if r.len() != phi.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len(),
                found: phi.len(),
            });
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("mean Rabi frequency must be positive, got {omega}")));
        }
        if let Some(bad) = r.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplitude {bad} is not a non-negative number")));
        }
        let drift = (r.iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
        if drift >= linalg::NORM_TOL {
            return Err(Error::NotNormalized { defect: drift });
        }
        Ok(Self { omega, r, phi })
    }

    /// Polar decomposition of a normalized bright state.
    pub fn from_bright_state(omega: f64, bright: &CVector) -> Result<Self> {
        linalg::check_normalized(bright)?;
        let r = bright.iter().map(|z| z.norm()).collect();
        let phi = bright.iter().map(|z| z.arg()).collect();
        Self::new(omega, r, phi)
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Complex Rabi frequencies `Omega_i`.
    pub fn rabi_frequencies(&self) -> Vec<num_complex::Complex64> {
        self.r
            .iter()
            .zip(&self.phi)
            .map(|(&r, &phi)| cis(phi) * (self.omega * r))
            .collect()
    }
}

/// `|B> = sum_i r_i e^{i phi_i} |i>`
pub fn bright_state(couplings: &CouplingSet) -> CVector {
    CVector::from_iterator(
        couplings.n(),
        couplings.r.iter().zip(&couplings.phi).map(|(&r, &phi)| cis(phi) * r),
    )
}

/// `H = Omega (|B><e| + |e><B|)` on the `n + 1` levels.
pub fn lambda_hamiltonian(couplings: &CouplingSet) -> HermitianOperator {
    let n = couplings.n();
    let mut h = CMatrix::zeros(n + 1, n + 1);
    for (i, omega_i) in couplings.rabi_frequencies().into_iter().enumerate() {
        h[(i, n)] = omega_i;
        h[(n, i)] = omega_i.conj();
    }
    HermitianOperator::symmetrized(h)
}

/// `1 - |B><B|` on the ground space.
pub fn dark_projector(bright: &CVector) -> Result<HermitianOperator> {
    linalg::check_normalized(bright)?;
    let n = bright.len();
    Ok(HermitianOperator::symmetrized(CMatrix::identity(n, n) - outer(bright, bright)))
}

/// Coordinates on the sphere of three-level couplings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SphericalAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl SphericalAngles {
    pub const NAMES: [&'static str; 4] = ["theta1", "theta2", "phi2", "phi3"];

    pub fn new(theta1: f64, theta2: f64, phi2: f64, phi3: f64) -> Self {
        Self { theta1, theta2, phi2, phi3 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta1, self.theta2, self.phi2, self.phi3]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn lerp(self, other: Self, s: f64) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array(std::array::from_fn(|k| a[k] + s * (b[k] - a[k])))
    }

    pub fn max_abs_difference(self, other: Self) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        (0..4).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
    }
}

fn signed_amplitudes(a: SphericalAngles) -> [f64; 3] {
    let (s1, c1) = a.theta1.sin_cos();
    let (s2, c2) = a.theta2.sin_cos();
    [s1, c1 * s2, c1 * c2]
}

fn signed_amplitude_rates(a: SphericalAngles, rates: SphericalAngles) -> [f64; 3] {
    let (s1, c1) = a.theta1.sin_cos();
    let (s2, c2) = a.theta2.sin_cos();
    let (d1, d2) = (rates.theta1, rates.theta2);
    [c1 * d1, -s1 * s2 * d1 + c1 * c2 * d2, -s1 * c2 * d1 - c1 * s2 * d2]
}

/// `r = (sin t1, cos t1 sin t2, cos t1 cos t2)`, `phi = (0, phi2, phi3)`.
///
/// Negative amplitudes are folded into the phase (`r -> -r`, `phi -> phi + pi`)
/// so the bright state is unchanged and every `r_i` stays non-negative.
pub fn couplings_from_angles(angles: SphericalAngles, omega: f64) -> Result<CouplingSet> {
    let signed = signed_amplitudes(angles);
    let phases = [0.0, angles.phi2, angles.phi3];
    let mut r = Vec::with_capacity(3);
    let mut phi = Vec::with_capacity(3);
    for (x, p) in signed.into_iter().zip(phases) {
        if x < 0.0 {
            r.push(-x);
            phi.push(p + std::f64::consts::PI);
        } else {
            r.push(x);
            phi.push(p);
        }
    }
    CouplingSet::new(omega, r, phi)
}

/// Time derivatives `(r', phi')` of [`couplings_from_angles`] along a path
/// moving with angular velocity `rates`, using the same sign folding.
pub fn coupling_rates_from_angles(angles: SphericalAngles, rates: SphericalAngles) -> (Vec<f64>, Vec<f64>) {
    let signed = signed_amplitudes(angles);
    let r_dot = signed_amplitude_rates(angles, rates)
        .into_iter()
        .zip(signed)
        .map(|(d, x)| if x < 0.0 { -d } else { d })
        .collect();
    (r_dot, vec![0.0, rates.phi2, rates.phi3])
}

/// The dark pair of the three-level system in the angle parametrization.
pub fn dark_basis_parametrized(angles: SphericalAngles) -> (CVector, CVector) {
    let (s1, c1) = angles.theta1.sin_cos();
    let (s2, c2) = angles.theta2.sin_cos();
    let e2 = cis(angles.phi2);
    let e3 = cis(angles.phi3);
    let d1 = CVector::from_vec(vec![c(c1, 0.0), -e2 * (s1 * s2), -e3 * (s1 * c2)]);
    let d2 = CVector::from_vec(vec![c(0.0, 0.0), e2 * c2, -e3 * s2]);
    (d1, d2)
}

/// Partial derivatives of the dark pair with respect to the four angles, in
/// the order `theta1, theta2, phi2, phi3`.
pub fn dark_basis_gradient(angles: SphericalAngles) -> [(CVector, CVector); 4] {
    let (s1, c1) = angles.theta1.sin_cos();
    let (s2, c2) = angles.theta2.sin_cos();
    let e2 = cis(angles.phi2);
    let e3 = cis(angles.phi3);
    let zero = c(0.0, 0.0);
    let i = linalg::I;
    let v = |a, b, c3| CVector::from_vec(vec![a, b, c3]);
    [
        (v(c(-s1, 0.0), -e2 * (c1 * s2), -e3 * (c1 * c2)), v(zero, zero, zero)),
        (v(zero, -e2 * (s1 * c2), e3 * (s1 * s2)), v(zero, -e2 * s2, -e3 * c2)),
        (v(zero, -i * e2 * (s1 * s2), zero), v(zero, i * e2 * c2, zero)),
        (v(zero, zero, -i * e3 * (s1 * c2)), v(zero, zero, -i * e3 * s2)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, inner, orthonormality_defect};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn coupling_strategy() -> impl Strategy<Value = CouplingSet> {
        (1usize..6)
            .prop_flat_map(|n| {
                (
                    0.1f64..10.0,
                    prop::collection::vec(0.0f64..1.0, n),
                    prop::collection::vec(-3.2f64..3.2, n),
                )
            })
            .prop_filter_map("zero amplitude vector", |(omega, raw, phi)| {
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                (norm > 1e-3).then(|| {
                    let r = raw.iter().map(|x| x / norm).collect();
                    CouplingSet::new(omega, r, phi).unwrap()
                })
            })
    }

    fn angles_strategy() -> impl Strategy<Value = SphericalAngles> {
        (-4.0f64..4.0, -4.0f64..4.0, -4.0f64..4.0, -4.0f64..4.0)
            .prop_map(|(a, b, p, q)| SphericalAngles::new(a, b, p, q))
    }

    #[test]
    fn coupling_set_validation() {
        assert!(CouplingSet::new(1.0, vec![0.6, 0.8], vec![0.0, 0.0]).is_ok());
        assert!(CouplingSet::new(1.0, vec![0.6, 0.7], vec![0.0, 0.0]).is_err());
        assert!(CouplingSet::new(0.0, vec![1.0], vec![0.0]).is_err());
        assert!(CouplingSet::new(1.0, vec![-1.0], vec![0.0]).is_err());
        assert!(CouplingSet::new(1.0, vec![1.0], vec![]).is_err());
    }

    #[test]
    fn bright_state_examples() {
        let cs = CouplingSet::new(1.0, vec![1.0, 0.0, 0.0], vec![0.0; 3]).unwrap();
        assert_eq!(bright_state(&cs), basis_vector(3, 0));

        let cs = CouplingSet::new(1.0, vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], vec![0.0, FRAC_PI_2]).unwrap();
        let b = bright_state(&cs);
        assert!((b[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((b[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);

        for theta2 in [0.0, 0.4, 2.0] {
            let cs = couplings_from_angles(SphericalAngles::new(FRAC_PI_2, theta2, 0.3, -0.2), 1.0).unwrap();
            assert!((bright_state(&cs) - basis_vector(3, 0)).norm() < 1e-15);
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let cs = CouplingSet::new(2.5, vec![1.0], vec![0.0]).unwrap();
        let h = lambda_hamiltonian(&cs);
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.5, 0.0), c(2.5, 0.0), c(0.0, 0.0)]);
        assert_eq!(h.matrix(), &expected);

        let cs = CouplingSet::new(1.5, vec![1.0, 0.0, 0.0], vec![0.0; 3]).unwrap();
        let h = lambda_hamiltonian(&cs);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (0, 3) || (i, j) == (3, 0) { 1.5 } else { 0.0 };
                assert_eq!(h.matrix()[(i, j)], c(expected, 0.0));
            }
        }
    }

    #[test]
    fn dark_projector_examples() {
        let p = dark_projector(&basis_vector(3, 0)).unwrap();
        assert_eq!(p.matrix(), &CMatrix::from_diagonal(&linalg::real_vector(&[0.0, 1.0, 1.0])));
        assert!(matches!(
            dark_projector(&linalg::real_vector(&[1.0, 1.0])),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn angle_couplings_examples() {
        let r = |t1, t2| couplings_from_angles(SphericalAngles::new(t1, t2, 0.0, 0.0), 1.0).unwrap().r;
        assert_eq!(r(0.0, 0.0), vec![0.0, 0.0, 1.0]);
        let v = r(FRAC_PI_2, 0.0);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && v[2].abs() < 1e-16);
        let v = r(0.0, FRAC_PI_2);
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15 && v[2].abs() < 1e-16);
    }

    #[test]
    fn dark_basis_examples() {
        let (d1, d2) = dark_basis_parametrized(SphericalAngles::default());
        assert_eq!(d1, basis_vector(3, 0));
        assert_eq!(d2, basis_vector(3, 1));

        let (d1, d2) = dark_basis_parametrized(SphericalAngles::new(FRAC_PI_2, 0.0, 0.0, 0.0));
        assert!((d1 + basis_vector(3, 2)).norm() < 1e-15);
        assert!((d2 - basis_vector(3, 1)).norm() < 1e-15);
    }

    #[test]
    fn dark_basis_gradient_matches_central_differences() {
        let a = SphericalAngles::new(0.7, -0.4, 1.3, 0.2);
        let h = 1e-6;
        for (k, (g1, g2)) in dark_basis_gradient(a).iter().enumerate() {
            let mut plus = a.to_array();
            let mut minus = a.to_array();
            plus[k] += h;
            minus[k] -= h;
            let (p1, p2) = dark_basis_parametrized(SphericalAngles::from_array(plus));
            let (m1, m2) = dark_basis_parametrized(SphericalAngles::from_array(minus));
            assert!(((p1 - m1) / c(2.0 * h, 0.0) - g1).norm() < 1e-8);
            assert!(((p2 - m2) / c(2.0 * h, 0.0) - g2).norm() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn spectrum_is_plus_minus_omega_and_zeros(cs in coupling_strategy()) {
            let n = cs.n();
            let eig = lambda_hamiltonian(&cs).eigenvalues();
            let tol = 1e-10 * cs.omega();
            prop_assert!((eig[0] + cs.omega()).abs() < tol);
            prop_assert!((eig[n] - cs.omega()).abs() < tol);
            for z in &eig[1..n] {
                prop_assert!(z.abs() < tol);
            }
        }

        #[test]
        fn dark_block_is_annihilated(cs in coupling_strategy()) {
            let n = cs.n();
            let b = bright_state(&cs);
            let p = dark_projector(&b).unwrap();
            let mut pd = CMatrix::zeros(n + 1, n + 1);
            pd.view_mut((0, 0), (n, n)).copy_from(p.matrix());
            let sandwiched = &pd * lambda_hamiltonian(&cs).matrix() * &pd;
            prop_assert!(sandwiched.norm() < 1e-12 * cs.omega());
            prop_assert!((p.matrix() * &b).norm() < 1e-12);
            let trace: f64 = (0..n).map(|i| p.matrix()[(i, i)].re).sum();
            prop_assert!((trace - (n as f64 - 1.0)).abs() < 1e-12);
        }

        #[test]
        fn angles_give_orthonormal_frame(a in angles_strategy(), omega in 0.1f64..5.0) {
            let cs = couplings_from_angles(a, omega).unwrap();
            let b = bright_state(&cs);
            let (d1, d2) = dark_basis_parametrized(a);
            prop_assert!(orthonormality_defect(&[b.clone(), d1.clone(), d2.clone()]) < 1e-12);
            prop_assert!(inner(&b, &d1).norm() < 1e-12);
            // H d = 0 for every dark vector
            let h = lambda_hamiltonian(&cs);
            for d in [d1, d2] {
                let lifted = linalg::embed(&d, 4, 0);
                prop_assert!((h.matrix() * lifted).norm() < 1e-12 * omega);
            }
        }
    }
}
