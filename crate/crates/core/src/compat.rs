//! Compatibility of observables and order-dependence witnesses.
//!
//! Two observables are compatible when they commute, equivalently when all
//! their spectral projectors commute. For incompatible pairs the order in
//! which they are measured changes the sequential prediction; the largest
//! such change over all states is the spectral radius of
//!
//! ```text
//! D = Σ_{α∈Δ} Π_α Π(B∈Σ) Π_α − Σ_{β∈Σ} Π_β Π(A∈Δ) Π_β
//! ```
//!
//! since `P_w[A∈Δ, B∈Σ] − P_w[B∈Σ, A∈Δ] = tr(w D)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigendecompose, CMatrix, C64, DEFAULT_CLUSTER_TOL};
use crate::quantum::{sequential_distribution, Observable, State, Subset};

pub const DEFAULT_COMPAT_TOL: f64 = 1e-9;

/// Cap on the number of subset pairs `max_order_gap` may enumerate.
pub const SUBSET_PAIR_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Compatible,
    Incompatible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub pair: (String, String),
    pub commutator_norm: f64,
    pub projector_commutator_max: f64,
    pub commutator_tolerance: f64,
    pub projector_tolerance: f64,
    pub verdict: Verdict,
}

impl CompatibilityReport {
    pub fn is_compatible(&self) -> bool {
        self.verdict == Verdict::Compatible
    }
}

fn check_dims(a: &Observable, b: &Observable) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Compatible iff ‖[A,B]‖_max ≤ tol·(1+‖A‖_max)(1+‖B‖_max) and every pair
/// of spectral projectors passes the same relative test.
pub fn is_compatible(a: &Observable, b: &Observable, tol: f64) -> Result<CompatibilityReport> {
    check_dims(a, b)?;
    let commutator_norm = a.matrix().commutator(b.matrix())?.max_abs_norm();
    let commutator_tolerance =
        tol * (1.0 + a.matrix().max_abs_norm()) * (1.0 + b.matrix().max_abs_norm());
    let mut projector_commutator_max: f64 = 0.0;
    let mut projector_ok = true;
    for p in a.spectrum().projectors() {
        for q in b.spectrum().projectors() {
            let n = p.mul(q).zip_with(&q.mul(p), |x, y| x - y).max_abs_norm();
            let limit = tol * (1.0 + p.max_abs_norm()) * (1.0 + q.max_abs_norm());
            projector_ok &= n <= limit;
            projector_commutator_max = projector_commutator_max.max(n);
        }
    }
    // projectors have max-norm ≤ 1, so this bounds every per-pair limit
    let projector_tolerance = tol * 4.0;
    let verdict = if commutator_norm <= commutator_tolerance && projector_ok {
        Verdict::Compatible
    } else {
        Verdict::Incompatible
    };
    Ok(CompatibilityReport {
        pair: (a.name().to_string(), b.name().to_string()),
        commutator_norm,
        projector_commutator_max,
        commutator_tolerance,
        projector_tolerance,
        verdict,
    })
}

/// |P[A∈Δ]·P[B∈Σ | A∈Δ] − P[B∈Σ]·P[A∈Δ | B∈Σ]| from the two sequential tables.
pub fn bayes_residual(
    rho: &State,
    a: &Observable,
    da: &Subset,
    b: &Observable,
    db: &Subset,
) -> Result<f64> {
    check_dims(a, b)?;
    let ab = sequential_distribution(rho, &[a, b])?;
    let ba = sequential_distribution(rho, &[b, a])?;
    Ok((ab.prob_of(&[da, db]) - ba.prob_of(&[db, da])).abs())
}

/// |P[A∈Δ, B∈σ(B)] − P[A∈Δ]|
pub fn non_disturbance_residual(
    rho: &State,
    a: &Observable,
    da: &Subset,
    b: &Observable,
) -> Result<f64> {
    check_dims(a, b)?;
    let ab = sequential_distribution(rho, &[a, b])?;
    let full_b = b.full_subset();
    let joint = ab.prob_of(&[da, &full_b]);
    let marginal = crate::quantum::born_distribution(rho, a)?.prob_of(da);
    Ok((joint - marginal).abs())
}

/// A pure state maximising the order gap for a pair of propositions.
#[derive(Clone, Debug)]
pub struct OrderWitness {
    pub pair: (String, String),
    pub subsets: (Subset, Subset),
    pub subset_values: (Vec<f64>, Vec<f64>),
    pub witness_vector: Vec<C64>,
    pub witness_state: State,
    pub gap: f64,
    /// |P_w[A∈Δ, B∈Σ] − P_w[B∈Σ, A∈Δ]| recomputed from the sequential tables.
    pub sequential_gap: f64,
}

/// Σ_{α∈Δ} Π_α Π(B∈Σ) Π_α − Σ_{β∈Σ} Π_β Π(A∈Δ) Π_β
pub fn order_operator(a: &Observable, da: &Subset, b: &Observable, db: &Subset) -> CMatrix {
    let pb = b.projector_onto(db);
    let pa = a.projector_onto(da);
    let mut d = CMatrix::zeros(a.dim());
    for &i in da.indices() {
        d.add_scaled_in_place(&a.projector(i).sandwich(&pb), 1.0);
    }
    for &j in db.indices() {
        d.add_scaled_in_place(&b.projector(j).sandwich(&pa), -1.0);
    }
    d.hermitian_part()
}

pub fn order_witness(
    a: &Observable,
    da: &Subset,
    b: &Observable,
    db: &Subset,
) -> Result<OrderWitness> {
    check_dims(a, b)?;
    for (o, s) in [(a, da), (b, db)] {
        if s.indices().iter().any(|&i| i >= o.outcome_count()) {
            return Err(Error::InvalidSubset(format!(
                "subset out of range for '{}'",
                o.name()
            )));
        }
    }
    let d = order_operator(a, da, b, db);
    let (gap, vector) = spectral_radius_vector(&d)?;
    let witness_state = State::pure(&vector)?;
    let ab = sequential_distribution(&witness_state, &[a, b])?;
    let ba = sequential_distribution(&witness_state, &[b, a])?;
    let sequential_gap = (ab.prob_of(&[da, db]) - ba.prob_of(&[db, da])).abs();
    Ok(OrderWitness {
        pair: (a.name().to_string(), b.name().to_string()),
        subset_values: (da.values(a), db.values(b)),
        subsets: (da.clone(), db.clone()),
        witness_vector: vector,
        witness_state,
        gap,
        sequential_gap,
    })
}

/// Largest |eigenvalue| of a Hermitian matrix and a unit eigenvector for it.
fn spectral_radius_vector(d: &CMatrix) -> Result<(f64, Vec<C64>)> {
    let spec = hermitian_eigendecompose(d, DEFAULT_CLUSTER_TOL)?;
    let (idx, value) = spec
        .eigenvalues()
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .map(|(i, v)| (i, *v))
        .expect("nonempty spectrum");
    let vector = spec.basis(idx)[0].clone();
    Ok((value.abs(), vector))
}

/// Largest order gap over all nonempty proper subset pairs. A pair where
/// one spectrum has a single point has no proper subsets and returns the
/// full-spectrum witness.
pub fn max_order_gap(a: &Observable, b: &Observable) -> Result<OrderWitness> {
    check_dims(a, b)?;
    let (na, nb) = (a.outcome_count(), b.outcome_count());
    let pairs = (1u128 << na.min(127)) * (1u128 << nb.min(127));
    if na >= 63 || nb >= 63 || pairs > SUBSET_PAIR_CAP {
        return Err(Error::SpaceCapExceeded {
            size: pairs,
            cap: SUBSET_PAIR_CAP,
        });
    }
    let mut subsets_a: Vec<Subset> = Subset::all_proper(na).collect();
    let mut subsets_b: Vec<Subset> = Subset::all_proper(nb).collect();
    if subsets_a.is_empty() || subsets_b.is_empty() {
        subsets_a = vec![a.full_subset()];
        subsets_b = vec![b.full_subset()];
    }
    let mut best: Option<(f64, &Subset, &Subset)> = None;
    for da in &subsets_a {
        for db in &subsets_b {
            let d = order_operator(a, da, b, db);
            let spec = hermitian_eigendecompose(&d, DEFAULT_CLUSTER_TOL)?;
            let r = spec
                .eigenvalues()
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            if best.is_none_or(|(g, _, _)| r > g + 1e-15) {
                best = Some((r, da, db));
            }
        }
    }
    let (_, da, db) = best.expect("at least one subset pair");
    order_witness(a, da, b, db)
}
