//! Fixed inputs shared by the propagation benchmarks.

use holonomic_core::berry::ParameterPath;
use holonomic_core::lambda::SphericalAngles;
use holonomic_core::linalg::{random_gaussian_matrix, random_hermitian};
use holonomic_core::{CMatrix, HermitianOperator};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 42;

pub fn hermitian(dim: usize) -> HermitianOperator {
    random_hermitian(dim, &mut ChaCha8Rng::seed_from_u64(SEED))
}

pub fn coupling(r: usize, m: usize) -> CMatrix {
    random_gaussian_matrix(r, m, &mut ChaCha8Rng::seed_from_u64(SEED))
}

/// A closed loop that moves all four angles.
pub fn general_loop(max_step: f64) -> ParameterPath {
    let corners = [
        SphericalAngles::default(),
        SphericalAngles::new(0.6, -0.4, 0.8, 0.3),
        SphericalAngles::new(-0.2, 0.5, 0.1, -0.7),
        SphericalAngles::default(),
    ];
    ParameterPath::polyline(&corners, max_step, true).expect("valid loop")
}
