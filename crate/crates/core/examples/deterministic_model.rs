//! Builds the deterministic model of a commuting scenario and runs the
//! verification suites; an incompatible scenario yields a witness instead.
//!
//!     cargo run --example deterministic_model

use luders::ontic::{build_deterministic_model, model_predict, verify_kolmogorov, verify_model};
use luders::quantum::builtins::{sigma_x, sigma_z};
use luders::quantum::{State, Subset};
use luders::scenario::ScenarioFile;
use luders::Error;

fn main() -> luders::Result<()> {
    let text = include_str!("scenarios/diag3.json");
    let scenario = ScenarioFile::from_json(text)?.resolve()?;
    let model = build_deterministic_model(&scenario.observables)?;
    println!("|Lambda| = {}", model.space().size());
    for (name, rho) in &scenario.states {
        let mu = model.state_map(rho)?;
        println!("mu_{name} = {:?}", mu.weights());
    }
    let third = State::maximally_mixed(3);
    println!(
        "P[A = 2 | I/3] = {}",
        model_predict(&model, &third, "A", &Subset::singleton(1))?
    );

    let mut report = verify_model(&model, &scenario.states, 1e-9)?;
    report.extend(verify_kolmogorov(&model, &scenario.states, 1e-9)?);
    for c in &report.checks {
        println!(
            "  {:<32} {:e} {}",
            c.name,
            c.residual,
            if c.pass { "ok" } else { "FAIL" }
        );
    }

    match build_deterministic_model(&[sigma_z(), sigma_x()]) {
        Err(Error::IncompatibleScenario(w)) => {
            println!("{{Z, X}} has no model: pair {:?}, gap {}", w.pair, w.gap)
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
