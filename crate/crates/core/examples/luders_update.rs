//! Lüders updates: repeatability and the convex decomposition over points.
//!
//!     cargo run --example luders_update

use luders::matrix::CMatrix;
use luders::quantum::{luders_update, probability, Observable, Proposition, State, Subset};

fn main() -> luders::Result<()> {
    let a = Observable::new("A", CMatrix::from_real_diagonal(&[0.0, 1.0, 2.0]))?;
    let rho = State::maximally_mixed(3);
    let delta = Subset::new(vec![0, 1], 3)?;
    let prop = Proposition::new(&a, delta.clone())?;

    let p = probability(&rho, &prop)?;
    let t = luders_update(&rho, &prop)?;
    println!("P[A in {{0,1}}] = {p}");
    println!(
        "updated state diagonal {:?}",
        (0..3).map(|i| t.matrix()[(i, i)].re).collect::<Vec<_>>()
    );
    println!("repeat P = {}", probability(&t, &prop)?);

    // T_Δ(ρ) = Σ_{α∈Δ} P(α|Δ) T_α(ρ)
    let mut mix = CMatrix::zeros(3);
    for &i in delta.indices() {
        let single = Proposition::equals(&a, i)?;
        let q = probability(&rho, &single)?;
        let ti = luders_update(&rho, &single)?;
        mix = mix.add(&ti.matrix().scale_real(q / p))?;
    }
    println!(
        "convex decomposition residual {:e}",
        t.matrix().sub(&mix)?.max_abs_norm()
    );

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = State::pure(&[
        num_complex::Complex64::new(r, 0.0),
        num_complex::Complex64::new(r, 0.0),
    ])?;
    let z = luders::quantum::builtins::sigma_z();
    let up = luders_update(&plus, &Proposition::equals_value(&z, 1.0)?)?;
    println!("|+> after [Z = +1]:\n{:?}", up.matrix());
    Ok(())
}
