//! Conditioning as the closest supported measure in total variation.
//!
//!     cargo run --example variation_distance

use luders::ontic::{
    model_update, total_variation, variation_optimality, MarkovKernel, OnticMeasure,
};
use luders::quantum::Subset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> luders::Result<()> {
    let kernel = MarkovKernel::deterministic("A", vec![0.0, 1.0, 2.0, 3.0], &[0, 1, 2, 3])?;
    let mu = OnticMeasure::new(vec![0.1, 0.2, 0.3, 0.4])?;
    let upper = Subset::new(vec![2, 3], 4)?;

    let tau = model_update(&mu, &kernel, &upper)?;
    println!("tau(mu) = {:?}", tau.weights());
    println!("||tau(mu) - mu|| = {}", total_variation(&tau, &mu)?);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let r = variation_optimality(&mu, &kernel, &upper, 1000, &mut rng, 1e-9)?;
    println!("1 - mu(Omega) = {}", r.closed_form);
    println!(
        "closest of {} random supported measures: {:?}",
        r.trials, r.min_sampled_distance
    );
    println!("measures closer than conditioning: {}", r.violations);
    Ok(())
}
