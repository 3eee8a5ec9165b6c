//! Reduction of a resonant two-manifold drive to independent bright pairs
//! and decoupled dark states.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::effective::{BrightTrajectory, GeneralBrightHamiltonian, StaticFrame};
use crate::error::{Error, Result};
use crate::lambda::CouplingSet;
use crate::linalg::{c, cis, embed, inner, CMatrix, CVector, HermitianOperator};

/// Default rank threshold, relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-10;

/// Ground manifold of `r` states coupled to an excited manifold of `m`
/// states through `V` (`r x m`, with `V_ga` coupling ground `g` to excited
/// `a`).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoManifoldSystem {
    v: CMatrix,
    swapped: bool,
}

impl TwoManifoldSystem {
    /// If `V` has fewer rows than columns the manifolds are swapped (`V` is
    /// replaced by its adjoint) and [`swapped`](Self::swapped) reports it.
    pub fn new(v: CMatrix) -> Result<Self> {
        if v.nrows() == 0 || v.ncols() == 0 {
            return Err(Error::InvalidArgument("coupling matrix must be non-empty".into()));
        }
        if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::InvalidArgument("coupling matrix must be finite".into()));
        }
        if v.nrows() < v.ncols() {
            Ok(Self { v: v.adjoint(), swapped: true })
        } else {
            Ok(Self { v, swapped: false })
        }
    }

    pub fn with_detuning(v: CMatrix, detuning: f64) -> Result<Self> {
        if detuning != 0.0 {
            return Err(Error::UnsupportedDetuning { detuning });
        }
        Self::new(v)
    }

    /// The Lambda system as a `n x 1` coupling.
    pub fn from_couplings(couplings: &CouplingSet) -> Self {
        let column: Vec<_> = couplings.rabi_frequencies();
        Self { v: CMatrix::from_column_slice(column.len(), 1, &column), swapped: false }
    }

    pub fn r(&self) -> usize {
        self.v.nrows()
    }

    pub fn m(&self) -> usize {
        self.v.ncols()
    }

    pub fn coupling(&self) -> &CMatrix {
        &self.v
    }

    pub fn swapped(&self) -> bool {
        self.swapped
    }
}

/// `sum_ga V_ga |g><a| + h.c.` on the `r + m` states, ground states first.
pub fn drive_hamiltonian(sys: &TwoManifoldSystem) -> HermitianOperator {
    let (r, m) = (sys.r(), sys.m());
    let mut h = CMatrix::zeros(r + m, r + m);
    h.view_mut((0, r), (r, m)).copy_from(&sys.v);
    h.view_mut((r, 0), (m, r)).copy_from(&sys.v.adjoint());
    HermitianOperator::symmetrized(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrightPair {
    pub ground: CVector,
    pub excited: CVector,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorrisShoreDecomposition {
    pub pairs: Vec<BrightPair>,
    pub dark_ground: Vec<CVector>,
    pub rank: usize,
    r: usize,
    m: usize,
}

impl MorrisShoreDecomposition {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `sum_a g_a |B_a^g><B_a^e|`
    pub fn reconstruct(&self) -> CMatrix {
        self.pairs.iter().fold(CMatrix::zeros(self.r, self.m), |acc, p| {
            acc + &p.ground * p.excited.adjoint() * c(p.g, 0.0)
        })
    }

    pub fn smallest_coupling(&self) -> f64 {
        self.pairs.iter().map(|p| p.g).fold(f64::INFINITY, f64::min)
    }
}

fn largest_entry_phase(v: &CVector) -> f64 {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if x.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = k;
        }
    }
    v[best].arg()
}

fn lexicographic(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Singular-value decomposition into bright pairs plus the dark ground
/// states.
///
/// Each ground vector is rotated so its largest entry is real positive (the
/// excited partner gets the same phase); pairs are sorted by decreasing
/// coupling, ties broken lexicographically.
pub fn morris_shore_transform(sys: &TwoManifoldSystem, rank_tol: f64) -> Result<MorrisShoreDecomposition> {
    if !(0.0..1.0).contains(&rank_tol) {
        return Err(Error::InvalidArgument(format!("rank_tol must lie in [0, 1), got {rank_tol}")));
    }
    let (r, m) = (sys.r(), sys.m());
    let svd = sys.v.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::InvalidArgument("singular value decomposition failed".into())),
    };
    let g_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if !(g_max > 0.0) {
        return Err(Error::ZeroCoupling);
    }
    let mut pairs: Vec<BrightPair> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > rank_tol * g_max)
        .map(|(j, s)| {
            let ground = u.column(j).into_owned();
            let excited = v_t.row(j).adjoint();
            let rotate = cis(-largest_entry_phase(&ground));
            BrightPair { ground: ground * rotate, excited: excited * rotate, g: *s }
        })
        .collect();
    pairs.sort_by(|a, b| {
        if (a.g - b.g).abs() <= DEGENERACY_TOL * g_max {
            lexicographic(&a.ground, &b.ground)
        } else {
            b.g.total_cmp(&a.g)
        }
    });
    let rank = pairs.len();
    let grounds: Vec<CVector> = pairs.iter().map(|p| p.ground.clone()).collect();
    let dark_ground = complement(&grounds, r);
    Ok(MorrisShoreDecomposition { pairs, dark_ground, rank, r, m })
}

/// Orthonormal basis of the complement of `span`, by pivoted Gram-Schmidt on
/// the standard basis.
fn complement(span: &[CVector], dim: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = span.to_vec();
    let mut out = Vec::new();
    let mut candidates: Vec<CVector> = (0..dim).map(|k| crate::linalg::basis_vector(dim, k)).collect();
    while basis.len() < dim {
        for v in candidates.iter_mut() {
            for _ in 0..2 {
                for b in &basis {
                    let overlap = inner(b, v);
                    *v -= b * overlap;
                }
            }
        }
        let (best, norm) = candidates
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 + 1e-14 { x } else { acc });
        if norm < 1e-8 {
            break;
        }
        let v = candidates.swap_remove(best).unscale(norm);
        let v = &v * cis(-largest_entry_phase(&v));
        basis.push(v.clone());
        out.push(v);
    }
    out
}

/// Bright frame `{B^g_a} u {B^e_a}` on the `r + m` states with the block
/// coupling `g[a, rank + a] = g_a`.
pub fn to_general_hamiltonian(d: &MorrisShoreDecomposition) -> Result<GeneralBrightHamiltonian> {
    if d.pairs.is_empty() {
        return Err(Error::ZeroCoupling);
    }
    let dim = d.r + d.m;
    let frame = bright_frame(d, dim);
    let coupling = pair_coupling(d);
    let frames = StaticFrame::new(frame, (0.0, 1.0))?;
    Ok(GeneralBrightHamiltonian::new(Arc::new(frames), move |_| coupling.clone()))
}

fn bright_frame(d: &MorrisShoreDecomposition, dim: usize) -> Vec<CVector> {
    let grounds = d.pairs.iter().map(|p| embed(&p.ground, dim, 0));
    let excited = d.pairs.iter().map(|p| embed(&p.excited, dim, d.r));
    grounds.chain(excited).collect()
}

fn pair_coupling(d: &MorrisShoreDecomposition) -> CMatrix {
    let k = d.rank;
    let mut g = CMatrix::zeros(2 * k, 2 * k);
    for (a, p) in d.pairs.iter().enumerate() {
        g[(a, k + a)] = c(p.g, 0.0);
    }
    g
}

/// Rephase each pair of `current` so its ground overlap with the matching
/// pair of `reference` is real and non-negative.
pub fn align_pairs(reference: &[BrightPair], current: &mut [BrightPair]) {
    for (p, q) in reference.iter().zip(current.iter_mut()) {
        let overlap = inner(&p.ground, &q.ground);
        if overlap.norm() > 0.0 {
            let rotate = cis(-overlap.arg());
            q.ground *= rotate;
            q.excited *= rotate;
        }
    }
}

type SystemFn = dyn Fn(f64) -> Result<TwoManifoldSystem> + Send + Sync;

/// Time-dependent Morris-Shore bright frame.
///
/// Each pair is rephased so its ground vector has a real positive overlap
/// with the same pair at the start of the domain, which keeps the frame
/// smooth wherever that overlap stays away from zero. Derivatives are
/// second-order difference quotients of that frame.
pub struct MorrisShoreTrajectory {
    system: Arc<SystemFn>,
    domain: (f64, f64),
    r: usize,
    m: usize,
    reference: Vec<BrightPair>,
    rank_tol: f64,
}

impl MorrisShoreTrajectory {
    pub fn new<F>(system: F, domain: (f64, f64), rank_tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<TwoManifoldSystem> + Send + Sync + 'static,
    {
        if !(domain.1 > domain.0) {
            return Err(Error::InvalidArgument(format!("empty domain [{}, {}]", domain.0, domain.1)));
        }
        let first = system(domain.0)?;
        let d = morris_shore_transform(&first, rank_tol)?;
        Ok(Self { system: Arc::new(system), domain, r: first.r(), m: first.m(), reference: d.pairs, rank_tol })
    }

    fn pairs(&self, t: f64) -> Vec<BrightPair> {
        let sys = (self.system)(t).expect("coupling schedule failed inside its domain");
        let d = morris_shore_transform(&sys, self.rank_tol).expect("coupling vanished inside the domain");
        assert_eq!(d.rank, self.reference.len(), "pair count changed at t = {t}");
        let mut pairs = d.pairs;
        align_pairs(&self.reference, &mut pairs);
        pairs
    }

    fn frame(&self, pairs: &[BrightPair]) -> Vec<CVector> {
        let dim = self.r + self.m;
        let grounds = pairs.iter().map(|p| embed(&p.ground, dim, 0));
        let excited = pairs.iter().map(|p| embed(&p.excited, dim, self.r));
        grounds.chain(excited).collect()
    }

    /// Couplings `g_a(t)` in pair order.
    pub fn couplings(&self, t: f64) -> Vec<f64> {
        self.pairs(t).iter().map(|p| p.g).collect()
    }

    /// Full drive at `t`.
    pub fn drive(&self, t: f64) -> Result<HermitianOperator> {
        Ok(drive_hamiltonian(&(self.system)(t)?))
    }
}

impl BrightTrajectory for MorrisShoreTrajectory {
    fn dim(&self) -> usize {
        self.r + self.m
    }

    fn count(&self) -> usize {
        2 * self.reference.len()
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn value(&self, t: f64) -> Vec<CVector> {
        self.frame(&self.pairs(t))
    }

    fn derivative(&self, t: f64) -> Vec<CVector> {
        let (t0, t1) = self.domain;
        let h = 1e-5 * (t1 - t0);
        let at = |s: f64| self.value(s);
        let stencil: Vec<(f64, Vec<CVector>)> = if t - h < t0 {
            vec![(-3.0, at(t)), (4.0, at(t + h)), (-1.0, at(t + 2.0 * h))]
        } else if t + h > t1 {
            vec![(3.0, at(t)), (-4.0, at(t - h)), (1.0, at(t - 2.0 * h))]
        } else {
            vec![(1.0, at(t + h)), (-1.0, at(t - h))]
        };
        (0..self.count())
            .map(|i| stencil.iter().fold(CVector::zeros(self.dim()), |acc, (w, f)| acc + f[i].scale(*w)).unscale(2.0 * h))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticityReport {
    /// Smallest retained coupling over all samples.
    pub g_min: f64,
    /// Largest `||dV/dt||_F / g_min(t)^2` over all samples.
    pub slowness_ratio: f64,
    pub pair_count_constant: bool,
}

/// Sample a coupling schedule and report how close it comes to violating
/// the adiabatic conditions. A sample where every coupling vanishes counts
/// as zero pairs with `g_min = 0`.
pub fn adiabaticity_report(
    schedule: &dyn Fn(f64) -> Result<TwoManifoldSystem>,
    span: (f64, f64),
    samples: usize,
    rank_tol: f64,
) -> Result<AdiabaticityReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let (t0, t1) = span;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("empty span [{t0}, {t1}]")));
    }
    let h = 1e-6 * (t1 - t0);
    let mut g_min = f64::INFINITY;
    let mut ratio = 0.0f64;
    let mut ranks = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = t0 + (t1 - t0) * k as f64 / (samples - 1) as f64;
        let sys = schedule(t)?;
        let (rank, g) = match morris_shore_transform(&sys, rank_tol) {
            Ok(d) => (d.rank, d.smallest_coupling()),
            Err(Error::ZeroCoupling) => (0, 0.0),
            Err(e) => return Err(e),
        };
        ranks.push(rank);
        g_min = g_min.min(g);
        let (lo, hi) = ((t - h).max(t0), (t + h).min(t1));
        let dv = (schedule(hi)?.coupling() - schedule(lo)?.coupling()).norm() / (hi - lo);
        ratio = ratio.max(if g > 0.0 { dv / (g * g) } else if dv > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(AdiabaticityReport {
        g_min,
        slowness_ratio: ratio,
        pair_count_constant: ranks.windows(2).all(|w| w[0] == w[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{bright_state, lambda_hamiltonian};
    use crate::linalg::{orthonormality_defect, random_gaussian_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lambda_couplings() -> CouplingSet {
        CouplingSet::new(2.5, vec![0.48, 0.6, 0.64], vec![0.0, 1.1, -2.0]).unwrap()
    }

    #[test]
    fn single_pair() {
        let sys = TwoManifoldSystem::new(CMatrix::from_element(1, 1, c(1.7, 0.0))).unwrap();
        let d = morris_shore_transform(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank, 1);
        assert!((d.pairs[0].g - 1.7).abs() < 1e-15);
        assert!(d.dark_ground.is_empty());
    }

    #[test]
    fn lambda_system_is_one_pair() {
        let cs = lambda_couplings();
        let sys = TwoManifoldSystem::from_couplings(&cs);
        let d = morris_shore_transform(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((d.rank, d.dark_ground.len()), (1, 2));
        assert!((d.pairs[0].g - 2.5).abs() < 1e-13);
        // first phase is zero and r_3 is the largest amplitude, so the
        // convention rotates by -phi_3
        let expected = bright_state(&cs) * cis(2.0);
        assert!((&d.pairs[0].ground - expected).norm() < 1e-13);

        let h = to_general_hamiltonian(&d).unwrap().hamiltonian(0.0);
        assert!((h.matrix() - lambda_hamiltonian(&cs).matrix()).norm() < 1e-13);
        assert!((drive_hamiltonian(&sys).matrix() - lambda_hamiltonian(&cs).matrix()).norm() < 1e-15);
    }

    #[test]
    fn random_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random_gaussian_matrix(5, 2, &mut rng);
        let sys = TwoManifoldSystem::new(v.clone()).unwrap();
        let d = morris_shore_transform(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((d.rank, d.dark_ground.len()), (2, 3));
        assert!((d.reconstruct() - &v).norm() < 1e-12 * v.norm());
        let grounds: Vec<_> = d.pairs.iter().map(|p| p.ground.clone()).chain(d.dark_ground.clone()).collect();
        assert!(orthonormality_defect(&grounds) < 1e-12);
        for dark in &d.dark_ground {
            assert!((v.adjoint() * dark).norm() < 1e-10 * v.norm());
        }
        assert!(d.pairs[0].g >= d.pairs[1].g);

        let rebuilt = to_general_hamiltonian(&d).unwrap().hamiltonian(0.0);
        assert!((rebuilt.matrix() - drive_hamiltonian(&sys).matrix()).norm() < 1e-12);
        let mut expected: Vec<f64> = d.pairs.iter().flat_map(|p| [p.g, -p.g]).chain([0.0; 3]).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in rebuilt.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_decomposition_is_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sys = TwoManifoldSystem::new(random_gaussian_matrix(4, 3, &mut rng)).unwrap();
        let a = morris_shore_transform(&sys, DEFAULT_RANK_TOL).unwrap();
        let b = morris_shore_transform(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(a, b);
        for p in &a.pairs {
            let phase = largest_entry_phase(&p.ground);
            assert!(phase.abs() < 1e-14);
        }
    }

    #[test]
    fn wide_matrix_swaps_manifolds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_gaussian_matrix(2, 4, &mut rng);
        let sys = TwoManifoldSystem::new(v.clone()).unwrap();
        assert!(sys.swapped());
        assert_eq!((sys.r(), sys.m()), (4, 2));
        assert_eq!(sys.coupling(), &v.adjoint());
    }

    #[test]
    fn rank_deficient_and_zero() {
        let u = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)]);
        let w = CVector::from_vec(vec![c(0.3, 0.0), c(-0.2, 0.4)]);
        let sys = TwoManifoldSystem::new(&u * w.adjoint()).unwrap();
        let d = morris_shore_transform(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((d.rank, d.dark_ground.len()), (1, 2));

        let zero = TwoManifoldSystem::new(CMatrix::zeros(3, 2)).unwrap();
        assert_eq!(morris_shore_transform(&zero, DEFAULT_RANK_TOL), Err(Error::ZeroCoupling));
        assert!(matches!(
            TwoManifoldSystem::with_detuning(CMatrix::identity(2, 2), 0.1),
            Err(Error::UnsupportedDetuning { .. })
        ));
    }

    #[test]
    fn degenerate_singular_values_are_ordered() {
        let sys = TwoManifoldSystem::new(CMatrix::identity(3, 2)).unwrap();
        let d = morris_shore_transform(&sys, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank, 2);
        assert_eq!(lexicographic(&d.pairs[0].ground, &d.pairs[1].ground), Ordering::Less);
        assert!((d.reconstruct() - CMatrix::identity(3, 2)).norm() < 1e-14);
    }

    #[test]
    fn adiabaticity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v = random_gaussian_matrix(4, 2, &mut rng);
        let fixed = move |_t: f64| TwoManifoldSystem::new(v.clone());
        let report = adiabaticity_report(&fixed, (0.0, 1.0), 11, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(report.slowness_ratio, 0.0);
        assert!(report.pair_count_constant);

        let crossing = |t: f64| {
            let mut v = CMatrix::zeros(3, 2);
            v[(0, 0)] = c(1.0, 0.0);
            v[(1, 1)] = c(t - 0.5, 0.0);
            TwoManifoldSystem::new(v)
        };
        let report = adiabaticity_report(&crossing, (0.0, 1.0), 11, DEFAULT_RANK_TOL).unwrap();
        assert!(!report.pair_count_constant);

        let omega = 3.0;
        let theta_rate = std::f64::consts::PI;
        let stage_one = move |t: f64| {
            let th = theta_rate * t;
            let psi = (th / 2.0).sin() / 2f64.sqrt();
            let r = vec![psi, psi, (th / 2.0).cos()];
            Ok(TwoManifoldSystem::from_couplings(&CouplingSet::new(omega, r, vec![0.0; 3])?))
        };
        let report = adiabaticity_report(&stage_one, (0.0, 1.0), 21, DEFAULT_RANK_TOL).unwrap();
        assert!((report.g_min - omega).abs() < 1e-12);
        assert!((report.slowness_ratio - theta_rate / (2.0 * omega)).abs() < 1e-6);
        assert!(adiabaticity_report(&stage_one, (0.0, 1.0), 1, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn alignment_removes_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = morris_shore_transform(&TwoManifoldSystem::new(random_gaussian_matrix(3, 2, &mut rng)).unwrap(), DEFAULT_RANK_TOL)
            .unwrap();
        let mut rotated = d.pairs.clone();
        for p in rotated.iter_mut() {
            p.ground *= cis(0.9);
            p.excited *= cis(0.9);
        }
        align_pairs(&d.pairs, &mut rotated);
        for (a, b) in d.pairs.iter().zip(&rotated) {
            assert!((&a.ground - &b.ground).norm() < 1e-14);
            assert!((&a.excited - &b.excited).norm() < 1e-14);
        }
    }

    #[test]
    fn trajectory_frame_is_valid() {
        let traj = MorrisShoreTrajectory::new(
            |t: f64| {
                let v = CMatrix::from_row_slice(
                    4,
                    2,
                    &[
                        c(1.0 + 0.3 * t, 0.0),
                        c(0.2, 0.1 * t),
                        c(0.0, t.sin()),
                        c(0.8, 0.0),
                        c(0.3, -0.2),
                        c(t.cos(), 0.0),
                        c(0.1, 0.0),
                        c(0.4 * t, 0.2),
                    ],
                );
                TwoManifoldSystem::new(v)
            },
            (0.0, 1.0),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert_eq!((traj.dim(), traj.count()), (6, 4));
        for t in [0.0, 0.37, 1.0] {
            let frame = traj.value(t);
            let derivs = traj.derivative(t);
            // the derivative of an orthonormal frame is anti-Hermitian in it
            for i in 0..4 {
                for j in 0..4 {
                    let s = inner(&frame[i], &derivs[j]) + inner(&derivs[i], &frame[j]);
                    assert!(s.norm() < 1e-6, "t={t} i={i} j={j} {s}");
                }
            }
        }
    }
}
