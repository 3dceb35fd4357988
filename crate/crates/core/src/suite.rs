//! Quantum-level verification suites that need no ontological model.

use crate::check::{Check, MaxResidual, VerificationReport};
use crate::compat::{bayes_residual, is_compatible, max_order_gap, OrderWitness};
use crate::error::Result;
use crate::matrix::CMatrix;
use crate::ontic::{subsets_for_checks, CONDITIONING_FLOOR};
use crate::quantum::{luders_update_with, probability, Observable, Proposition, State, Subset};

/// Witness gaps below this count as no witness.
pub const MIN_WITNESS_GAP: f64 = 1e-6;

/// Residuals of one update: repeatability `|1 − P_T(ρ)[A∈Δ]|`, the trace
/// defect of `T(ρ)`, and the distance between `T(ρ)` and the mixture
/// `Σ_i P(Δ_i | Δ) T_[A∈Δ_i](ρ)` over `parts`, a partition of `Δ`.
pub fn luders_residuals(
    rho: &State,
    obs: &Observable,
    subset: &Subset,
    parts: &[Subset],
    null_threshold: f64,
) -> Result<[f64; 3]> {
    let prop = Proposition::new(obs, subset.clone())?;
    let p = probability(rho, &prop)?;
    let updated = luders_update_with(rho, &prop, null_threshold)?;
    let repeat = (1.0 - probability(&updated, &prop)?).abs();
    let trace = (updated.matrix().trace().re - 1.0).abs();
    let mut mixture = CMatrix::zeros(rho.dim());
    for part in parts {
        let part_prop = Proposition::new(obs, part.clone())?;
        let q = probability(rho, &part_prop)?;
        if q <= null_threshold {
            continue;
        }
        let t = luders_update_with(rho, &part_prop, null_threshold)?;
        mixture.add_scaled_in_place(t.matrix(), q / p);
    }
    let convex = updated.matrix().sub(&mixture)?.max_abs_norm();
    Ok([repeat, trace, convex])
}

/// Splits a subset into consecutive blocks of size 1 and 2.
fn pairs_partition(subset: &Subset, n: usize) -> Vec<Subset> {
    subset
        .indices()
        .chunks(2)
        .map(|c| Subset::new(c.to_vec(), n).expect("nonempty chunk"))
        .collect()
}

/// Repeatability, normalisation and convex decomposition of every
/// non-negligible update on every state.
pub fn verify_updates(
    observables: &[Observable],
    states: &[(String, State)],
    tol: f64,
    null_threshold: f64,
) -> Result<VerificationReport> {
    let mut repeat = MaxResidual::default();
    let mut trace = MaxResidual::default();
    let mut points = MaxResidual::default();
    let mut blocks = MaxResidual::default();
    for (_, rho) in states {
        for obs in observables {
            let n = obs.outcome_count();
            for d in subsets_for_checks(n) {
                if probability(rho, &Proposition::new(obs, d.clone())?)? <= CONDITIONING_FLOOR {
                    continue;
                }
                let singles: Vec<Subset> =
                    d.indices().iter().map(|&i| Subset::singleton(i)).collect();
                let [r, t, c] = luders_residuals(rho, obs, &d, &singles, null_threshold)?;
                repeat.push(r);
                trace.push(t);
                points.push(c);
                let [_, _, c2] =
                    luders_residuals(rho, obs, &d, &pairs_partition(&d, n), null_threshold)?;
                blocks.push(c2);
            }
        }
    }
    Ok(VerificationReport {
        checks: vec![
            Check::new("update_repeatability", repeat.0, tol),
            Check::new("update_unit_trace", trace.0, tol),
            Check::new("update_convex_points", points.0, tol),
            Check::new("update_convex_partition", blocks.0, tol),
        ],
    })
}

/// Compatible pairs satisfy Bayes' rule on every state; incompatible pairs
/// have a witness whose gap the sequential tables reproduce. Returns the
/// witness of every incompatible pair.
pub fn verify_pairs(
    observables: &[Observable],
    states: &[(String, State)],
    tol: f64,
) -> Result<(VerificationReport, Vec<OrderWitness>)> {
    let mut bayes = MaxResidual::default();
    let mut reproduced = MaxResidual::default();
    let mut min_gap = f64::INFINITY;
    let mut witnesses = Vec::new();
    for (i, a) in observables.iter().enumerate() {
        for b in &observables[i + 1..] {
            if is_compatible(a, b, tol)?.is_compatible() {
                for (_, rho) in states {
                    for da in subsets_for_checks(a.outcome_count()) {
                        for db in subsets_for_checks(b.outcome_count()) {
                            bayes.push(bayes_residual(rho, a, &da, b, &db)?);
                        }
                    }
                }
            } else {
                let w = max_order_gap(a, b)?;
                reproduced.push((w.gap - w.sequential_gap).abs());
                min_gap = min_gap.min(w.gap);
                witnesses.push(w);
            }
        }
    }
    let mut checks = vec![Check::new("bayes_symmetry_compatible", bayes.0, tol)];
    if !witnesses.is_empty() {
        checks.push(Check::condition(
            "witness_gap_positive",
            min_gap >= MIN_WITNESS_GAP,
        ));
        checks.push(Check::new("witness_gap_reproduced", reproduced.0, tol));
    }
    Ok((VerificationReport { checks }, witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::builtins::*;

    #[test]
    fn qubit_suites() {
        let obs = [sigma_z(), sigma_x()];
        let states = vec![
            ("zero".to_string(), State::basis(2, 0)),
            ("mixed".to_string(), State::maximally_mixed(2)),
        ];
        let r = verify_updates(&obs, &states, 1e-9, 1e-12).unwrap();
        assert!(r.passed(), "{r:?}");
        let (r, w) = verify_pairs(&obs, &states, 1e-9).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(w.len(), 1);
    }
}
