//! Seeded shot simulation against the analytic sequential table.
//!
//!     cargo run --release --example sampling

use luders::quantum::builtins::{sigma_x, sigma_y, sigma_z};
use luders::quantum::{sequential_distribution, State};
use luders::sampler::{compare_empirical, run_shots};

fn main() -> luders::Result<()> {
    let (z, x, y) = (sigma_z(), sigma_x(), sigma_y());
    let rho = State::basis(2, 0);
    let seq = [&z, &x, &y];
    let record = run_shots(&rho, &seq, 100_000, 17)?;
    let analytic = sequential_distribution(&rho, &seq)?;
    let cmp = compare_empirical(&record, &analytic)?;
    for t in &cmp.tuples {
        println!(
            "{:?}: {:>6} shots  empirical {:.5}  analytic {:.5}  {}",
            t.outcome,
            t.count,
            t.empirical,
            t.analytic,
            if t.flagged { "FLAG" } else { "" }
        );
    }
    println!(
        "max deviation {:.5}, flagged {}",
        cmp.max_deviation, cmp.flagged
    );
    let again = run_shots(&rho, &seq, 100_000, 17)?;
    println!("same seed reproduces counts: {}", again == record);
    Ok(())
}
