//! Dense complex linear algebra shared by every propagation route.
//!
//! Vectors and matrices are plain `nalgebra` containers over `Complex64`.
//! The two operator newtypes, [`HermitianOperator`] and [`UnitaryOperator`],
//! only exist once their structure has been checked, so downstream code can
//! rely on it without re-validating.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Orthonormality tolerance for frames handed in by callers.
pub const INPUT_ORTHO_TOL: f64 = 1e-8;
/// Orthonormality tolerance for frames this crate produces itself.
pub const OUTPUT_ORTHO_TOL: f64 = 1e-10;
/// Normalization tolerance for a single state vector.
pub const NORM_TOL: f64 = 1e-10;
/// Relative hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Absolute unitarity tolerance on `||U^dagger U - 1||_F`.
pub const UNITARY_TOL: f64 = 1e-9;

const INDEPENDENCE_TOL: f64 = 1e-10;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// `<a|b>`, antilinear in the first slot.
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// `|a><b|`
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = C64::new(1.0, 0.0);
    v
}

pub fn real_vector(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| C64::new(x, 0.0)))
}

/// Embed `v` into a larger space starting at `offset`.
pub fn embed(v: &CVector, dim: usize, offset: usize) -> CVector {
    let mut out = CVector::zeros(dim);
    out.rows_mut(offset, v.len()).copy_from(v);
    out
}

pub fn normalization_defect(v: &CVector) -> f64 {
    (v.norm_squared() - 1.0).abs()
}

pub fn check_normalized(v: &CVector) -> Result<()> {
    let defect = normalization_defect(v);
    if defect < NORM_TOL {
        Ok(())
    } else {
        Err(Error::NotNormalized { defect })
    }
}

/// Largest `|<v_i|v_j> - delta_ij|` over the frame.
pub fn orthonormality_defect(frame: &[CVector]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(a, b) - target).norm());
        }
    }
    worst
}

pub fn check_orthonormal(frame: &[CVector], tolerance: f64) -> Result<()> {
    check_common_dimension(frame)?;
    let defect = orthonormality_defect(frame);
    if defect < tolerance {
        Ok(())
    } else {
        Err(Error::NotOrthonormal { defect, tolerance })
    }
}

fn check_common_dimension(vectors: &[CVector]) -> Result<()> {
    if let Some(first) = vectors.first() {
        if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                found: bad.len(),
            });
        }
    }
    Ok(())
}

/// Columns of the returned matrix are the frame vectors.
pub fn frame_matrix(frame: &[CVector], dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, frame.len());
    for (j, v) in frame.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// `||U^dagger U - 1||_F`
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.ncols();
    (m.adjoint() * m - CMatrix::identity(n, n)).norm()
}

/// A square matrix equal to its adjoint within `HERMITIAN_TOL` (relative).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let defect = hermiticity_defect(&m);
        if defect < HERMITIAN_TOL * m.norm().max(1.0) {
            Ok(Self(m))
        } else {
            Err(Error::NotHermitian { defect })
        }
    }

    /// Wraps `(m + m^dagger) / 2`; always Hermitian.
    pub fn symmetrized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        Self(h)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.scale(factor))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// `<v|H|v>`, real for Hermitian `H`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        inner(v, &(&self.0 * v)).re
    }
}

impl std::ops::Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator(&self.0 + &rhs.0)
    }
}

/// A square matrix with `||U^dagger U - 1||_F < UNITARY_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator(CMatrix);

impl UnitaryOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let defect = unitarity_defect(&m);
        if defect < UNITARY_TOL {
            Ok(Self(m))
        } else {
            Err(Error::NotUnitary { defect })
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self * other`, i.e. `other` acts first.
    pub fn then_after(&self, other: &UnitaryOperator) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_defect(&self.0)
    }
}

/// Orthonormalize a linearly independent set, preserving the span and the
/// direction of the first vector.
pub fn gram_schmidt(vectors: &[CVector]) -> Result<Vec<CVector>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    check_common_dimension(vectors)?;
    let dim = vectors[0].len();
    if vectors.len() > dim {
        return Err(Error::LinearlyDependentInput { ratio: 0.0 });
    }
    let stacked = frame_matrix(vectors, dim);
    let singular = stacked.singular_values();
    let largest = singular.max();
    let smallest = singular.min();
    let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    if ratio <= INDEPENDENCE_TOL {
        return Err(Error::LinearlyDependentInput { ratio });
    }

    let mut out: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // Two projection passes keep the output orthogonal to ~1e-15 even
        // for badly conditioned input.
        for _ in 0..2 {
            for q in &out {
                let overlap = inner(q, &w);
                w -= q * overlap;
            }
        }
        let norm = w.norm();
        out.push(w.unscale(norm));
    }
    Ok(out)
}

/// `sum_i |v_i><v_i|` on a space of dimension `dim`.
pub fn projector_from_frame(frame: &[CVector], dim: usize) -> Result<HermitianOperator> {
    check_orthonormal(frame, INPUT_ORTHO_TOL)?;
    let mut p = CMatrix::zeros(dim, dim);
    for v in frame {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        p += outer(v, v);
    }
    Ok(HermitianOperator::symmetrized(p))
}

/// `exp(-i H t)` through the eigendecomposition of `H`.
pub fn expm_hermitian(h: &HermitianOperator, t: f64) -> UnitaryOperator {
    UnitaryOperator(expm_hermitian_matrix(h.matrix(), t))
}

/// Unchecked core of [`expm_hermitian`]; the caller guarantees hermiticity.
pub(crate) fn expm_hermitian_matrix(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    if h.iter().all(|z| *z == C64::new(0.0, 0.0)) || t == 0.0 {
        return CMatrix::identity(n, n);
    }
    let eig = h.clone().symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let mut scaled = vecs.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = cis(-lambda * t);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    scaled * vecs.adjoint()
}

/// How [`unitary_distance`] treats a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    Exact,
    UpToGlobalPhase,
}

/// Frobenius distance between two equally sized matrices, optionally
/// minimized over a global phase `e^{i gamma}` applied to `v`.
pub fn matrix_distance(u: &CMatrix, v: &CMatrix, mode: PhaseMode) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows() * u.ncols(),
            found: v.nrows() * v.ncols(),
        });
    }
    match mode {
        PhaseMode::Exact => Ok((u - v).norm()),
        PhaseMode::UpToGlobalPhase => {
            let overlap: C64 = v.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum();
            let phase = if overlap.norm() > 0.0 {
                overlap / overlap.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            Ok((u - v * phase).norm())
        }
    }
}

pub fn unitary_distance(u: &UnitaryOperator, v: &UnitaryOperator, mode: PhaseMode) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    matrix_distance(u.matrix(), v.matrix(), mode)
}

/// Project a nearly unitary matrix back onto the unitary group with one
/// Newton–Schulz step, `U (3 - U^dagger U) / 2`.
pub(crate) fn reunitarize(m: &CMatrix) -> CMatrix {
    let n = m.ncols();
    let gram = m.adjoint() * m;
    let correction = (CMatrix::identity(n, n).scale(3.0) - gram).scale(0.5);
    m * correction
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians.
pub fn random_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary from the QR decomposition of a Gaussian matrix,
/// with the phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOperator {
    let g = random_gaussian_matrix(dim, dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    UnitaryOperator(q)
}

/// Random Hermitian matrix `(G + G^dagger) / 2` with Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    HermitianOperator::symmetrized(random_gaussian_matrix(dim, dim, rng))
}

pub mod pauli {
    use super::{c, CMatrix};

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn gram_schmidt_trivial_cases() {
        let out = gram_schmidt(&[real_vector(&[1.0, 0.0]), real_vector(&[1.0, 1.0])]).unwrap();
        assert_abs_diff_eq!((&out[0] - real_vector(&[1.0, 0.0])).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((&out[1] - real_vector(&[0.0, 1.0])).norm(), 0.0, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(4, &mut rng);
        let frame: Vec<CVector> = (0..3).map(|j| u.matrix().column(j).into_owned()).collect();
        let again = gram_schmidt(&frame).unwrap();
        for (a, b) in frame.iter().zip(&again) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_rejects_dependent_input() {
        let err = gram_schmidt(&[real_vector(&[1.0, 0.0]), real_vector(&[2.0, 0.0])]).unwrap_err();
        assert!(matches!(err, Error::LinearlyDependentInput { .. }));
        let err = gram_schmidt(&[
            real_vector(&[1.0, 0.0]),
            real_vector(&[0.0, 1.0]),
            real_vector(&[1.0, 1.0]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::LinearlyDependentInput { .. }));
    }

    #[test]
    fn projector_examples() {
        let p = projector_from_frame(&[basis_vector(3, 0)], 3).unwrap();
        let mut expected = CMatrix::zeros(3, 3);
        expected[(0, 0)] = c(1.0, 0.0);
        assert_eq!(p.matrix(), &expected);

        let empty = projector_from_frame(&[], 4).unwrap();
        assert_eq!(empty.matrix(), &CMatrix::zeros(4, 4));

        let bad = projector_from_frame(&[real_vector(&[1.0, 0.0]), real_vector(&[1.0, 1.0])], 2);
        assert!(matches!(bad, Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn expm_examples() {
        let zero = HermitianOperator::zeros(3);
        assert_eq!(expm_hermitian(&zero, 2.5).matrix(), &CMatrix::identity(3, 3));

        let x = HermitianOperator::new(pauli::x()).unwrap();
        let u = expm_hermitian(&x, PI);
        assert!((u.matrix() + CMatrix::identity(2, 2)).norm() < 1e-14);

        let d = HermitianOperator::new(CMatrix::from_diagonal(&real_vector(&[1.0, 2.0]))).unwrap();
        let t = 0.37;
        let u = expm_hermitian(&d, t);
        assert!((u.matrix()[(0, 0)] - cis(-t)).norm() < 1e-15);
        assert!((u.matrix()[(1, 1)] - cis(-2.0 * t)).norm() < 1e-15);
        assert!(u.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_unitary(3, &mut rng);
        for mode in [PhaseMode::Exact, PhaseMode::UpToGlobalPhase] {
            assert_eq!(unitary_distance(&u, &u, mode).unwrap(), 0.0);
        }

        let gamma = 0.9;
        let shifted = UnitaryOperator::new(u.matrix() * cis(gamma)).unwrap();
        let phase = unitary_distance(&u, &shifted, PhaseMode::UpToGlobalPhase).unwrap();
        let exact = unitary_distance(&u, &shifted, PhaseMode::Exact).unwrap();
        assert!(phase < 1e-14);
        assert_abs_diff_eq!(exact, 2.0 * (gamma / 2.0).sin().abs() * 3f64.sqrt(), epsilon = 1e-13);

        let id = UnitaryOperator::identity(2);
        let x = UnitaryOperator::new(pauli::x()).unwrap();
        assert_abs_diff_eq!(unitary_distance(&id, &x, PhaseMode::Exact).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            unitary_distance(&id, &x, PhaseMode::UpToGlobalPhase).unwrap(),
            2.0,
            epsilon = 1e-15
        );

        let big = UnitaryOperator::identity(3);
        assert!(matches!(
            unitary_distance(&id, &big, PhaseMode::Exact),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn checked_constructors() {
        let mut m = pauli::x();
        m[(0, 1)] = c(2.0, 0.0);
        assert!(matches!(HermitianOperator::new(m.clone()), Err(Error::NotHermitian { .. })));
        assert!(matches!(UnitaryOperator::new(m), Err(Error::NotUnitary { .. })));
        assert!(check_normalized(&real_vector(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn reunitarize_pulls_back_to_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(4, &mut rng);
        let noisy = u.matrix() + random_gaussian_matrix(4, 4, &mut rng).scale(1e-7);
        assert!(unitarity_defect(&noisy) > 1e-8);
        assert!(unitarity_defect(&reunitarize(&noisy)) < 1e-12);
    }
}
