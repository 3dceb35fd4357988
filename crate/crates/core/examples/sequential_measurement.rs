//! Sequential tables for the qubit pair (σ_z, σ_x) in both orders.
//!
//!     cargo run --example sequential_measurement

use luders::quantum::builtins::{sigma_x, sigma_z};
use luders::quantum::{sequential_distribution, State, Subset};

fn main() -> luders::Result<()> {
    let (z, x) = (sigma_z(), sigma_x());
    let rho = State::basis(2, 0);
    let zx = sequential_distribution(&rho, &[&z, &x])?;
    let xz = sequential_distribution(&rho, &[&x, &z])?;
    println!("Z then X\n{zx}");
    println!("X then Z\n{xz}");

    let up = Subset::singleton(1);
    let p_zx = zx.prob_of(&[&up, &up]);
    let p_xz = xz.prob_of(&[&up, &up]);
    println!("P[Z=+1, X=+1] = {p_zx}");
    println!("P[X=+1, Z=+1] = {p_xz}");
    println!("order gap = {}", (p_zx - p_xz).abs());
    Ok(())
}
