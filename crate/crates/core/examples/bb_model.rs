//! Pure-state ontic model for two decompositions of I/2.
//!
//!     cargo run --example bb_model

use luders::ontic::bb_model_demo;
use luders::quantum::builtins::{ket_minus, ket_plus, sigma_x, sigma_y, sigma_z};
use luders::quantum::State;
use num_complex::Complex64;

fn main() -> luders::Result<()> {
    let zero = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let one = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let computational = State::mixture(&[(0.5, zero), (0.5, one)])?;
    let diagonal = State::mixture(&[(0.5, ket_plus()), (0.5, ket_minus())])?;

    let r = bb_model_demo(
        &computational,
        &diagonal,
        &[sigma_x(), sigma_y(), sigma_z()],
    )?;
    println!(
        "Born reproduced: {} ({:e}, {:e})",
        r.born_reproduced, r.born_residual_a, r.born_residual_b
    );
    println!(
        "measures differ: {} (TV {})",
        r.measures_differ, r.measures_distance
    );
    if let Some(e) = &r.exhibited {
        println!("after [{} = {}]:", e.observable, e.outcome);
        println!(
            "  conditioned measure weights {:?} on {} points",
            e.conditioned.weights,
            e.conditioned.points.len()
        );
        let points: Vec<Vec<(f64, f64)>> = e
            .luders
            .points
            .iter()
            .map(|v| v.iter().map(|z| (z.re, z.im)).collect())
            .collect();
        println!(
            "  Lueders measure weights {:?} on {:?}",
            e.luders.weights, points
        );
        println!("  TV between them {}", e.tv_discrepancy);
        println!(
            "  P[{} = {}] under the conditioned measure: {}",
            e.observable, e.outcome, e.conditioned_repeatability
        );
    }
    println!(
        "conditional update matches Lueders: {}",
        r.update_matches_luders
    );
    Ok(())
}
