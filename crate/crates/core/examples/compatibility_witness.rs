//! Compatibility tests, Bayes residuals and the maximal order witness.
//!
//!     cargo run --example compatibility_witness

use luders::compat::{bayes_residual, is_compatible, max_order_gap, DEFAULT_COMPAT_TOL};
use luders::matrix::CMatrix;
use luders::quantum::builtins::{sigma_x, sigma_z};
use luders::quantum::{Observable, State, Subset};

fn main() -> luders::Result<()> {
    let (z, x) = (sigma_z(), sigma_x());
    let z2 = Observable::new("pauli_z^2", CMatrix::identity(2))?;
    for (a, b) in [(&z, &x), (&z, &z2)] {
        let r = is_compatible(a, b, DEFAULT_COMPAT_TOL)?;
        println!(
            "({}, {}): {:?}, ||[A,B]|| = {}",
            a.name(),
            b.name(),
            r.verdict,
            r.commutator_norm
        );
    }

    let up = Subset::singleton(1);
    let r = bayes_residual(&State::basis(2, 0), &z, &up, &x, &up)?;
    println!("Bayes residual on |0>: {r}");

    let w = max_order_gap(&z, &x)?;
    println!(
        "max order gap {} (1/(2 sqrt 2) = {})",
        w.gap,
        1.0 / (2.0 * 2f64.sqrt())
    );
    println!("reproduced by sequential tables: {}", w.sequential_gap);
    println!("subsets {:?}", w.subset_values);
    println!("witness state\n{:?}", w.witness_state.matrix());
    Ok(())
}
