//! Spectral decomposition of a degenerate Hermitian matrix.
//!
//!     cargo run --example eigendecomposition

use luders::matrix::{hermitian_eigendecompose, CMatrix, DEFAULT_CLUSTER_TOL};
use luders::quantum::builtins;
use luders::random::random_hermitian;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> luders::Result<()> {
    let a = CMatrix::from_real_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 0.0], &[0.0, 0.0, 3.0]])?;
    let spec = hermitian_eigendecompose(&a, DEFAULT_CLUSTER_TOL)?;
    println!("eigenvalues {:?}", spec.eigenvalues());
    for i in 0..spec.len() {
        println!("  rank of projector {i}: {}", spec.rank(i));
    }
    let err = spec.reconstruct().sub(&a)?.max_abs_norm();
    println!("reconstruction error {err:e}");

    let y = hermitian_eigendecompose(&builtins::pauli_y(), DEFAULT_CLUSTER_TOL)?;
    println!("pauli_y eigenvalues {:?}", y.eigenvalues());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = random_hermitian(&mut rng, 6);
    let spec = hermitian_eigendecompose(&h, DEFAULT_CLUSTER_TOL)?;
    let err = spec.reconstruct().sub(&h)?.max_abs_norm();
    println!("random 6x6: eigenvalues {:?}", spec.eigenvalues());
    println!("random 6x6: reconstruction error {err:e}");
    Ok(())
}
