//! States, observables, Born distributions and the Lüders update map.
//!
//! The update for a proposition `[A ∈ Δ]` is
//!
//! ```text
//! T(ρ) = Σ_{α∈Δ} Π(A=α) ρ Π(A=α) / P_ρ[A ∈ Δ]
//! ```
//!
//! and sequential distributions are products of Born probabilities taken
//! in successively updated states.

use std::fmt;

use crate::compat;
use crate::error::{Error, Result};
use crate::matrix::{
    c, hermitian_eigendecompose, jacobi_eigen, CMatrix, HermitianSpectrum, C64, DEFAULT_CLUSTER_TOL,
};

/// Probabilities at or below this value make a proposition null.
pub const DEFAULT_NULL_THRESHOLD: f64 = 1e-12;

/// Largest outcome table a sequential distribution may allocate.
pub const DEFAULT_SPACE_CAP: u128 = 1_000_000;

/// Validation tolerance for density operators.
pub const STATE_TOL: f64 = 1e-10;

/// A named Hermitian operator together with its grouped spectral
/// decomposition.
#[derive(Clone, Debug)]
pub struct Observable {
    name: String,
    matrix: CMatrix,
    spectrum: HermitianSpectrum,
}

impl Observable {
    pub fn new(name: impl Into<String>, matrix: CMatrix) -> Result<Self> {
        Self::with_cluster_tol(name, matrix, DEFAULT_CLUSTER_TOL)
    }

    pub fn with_cluster_tol(
        name: impl Into<String>,
        matrix: CMatrix,
        cluster_tol: f64,
    ) -> Result<Self> {
        let mut spectrum = hermitian_eigendecompose(&matrix, cluster_tol)?;
        spectrum.snap_integers();
        Ok(Observable {
            name: name.into(),
            matrix: matrix.hermitian_part(),
            spectrum,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &HermitianSpectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    pub fn outcome_count(&self) -> usize {
        self.spectrum.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn projector(&self, i: usize) -> &CMatrix {
        &self.spectrum.projectors()[i]
    }

    /// Π(A ∈ Δ)
    pub fn projector_onto(&self, subset: &Subset) -> CMatrix {
        let mut p = CMatrix::zeros(self.dim());
        for &i in subset.indices() {
            p.add_scaled_in_place(self.projector(i), 1.0);
        }
        p
    }

    /// Index of the eigenvalue closest to `value`, if within `1e-9·(1+|value|)`.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.eigenvalues()
            .iter()
            .position(|&a| (a - value).abs() <= 1e-9 * (1.0 + value.abs()))
    }

    pub fn full_subset(&self) -> Subset {
        Subset::full(self.outcome_count())
    }
}

/// A nonempty set of eigenvalue indices, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(Vec<usize>);

impl Subset {
    /// Fails on an empty set or an index outside `0..spectrum_len`.
    pub fn new(mut indices: Vec<usize>, spectrum_len: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= spectrum_len) {
            return Err(Error::InvalidSubset(format!(
                "index {bad} out of range for {spectrum_len} eigenvalues"
            )));
        }
        Ok(Subset(indices))
    }

    pub fn singleton(i: usize) -> Self {
        Subset(vec![i])
    }

    pub fn full(n: usize) -> Self {
        Subset((0..n).collect())
    }

    /// Subset from a bitmask over `0..n`; `None` when the mask is empty.
    pub fn from_mask(mask: u64, n: usize) -> Option<Self> {
        let v: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        (!v.is_empty()).then_some(Subset(v))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn intersection(&self, other: &Subset) -> Option<Subset> {
        let v: Vec<usize> = self
            .0
            .iter()
            .copied()
            .filter(|&i| other.contains(i))
            .collect();
        (!v.is_empty()).then_some(Subset(v))
    }

    pub fn is_full(&self, n: usize) -> bool {
        self.0.len() == n
    }

    /// Every nonempty subset of `0..n`, in bitmask order.
    pub fn all_nonempty(n: usize) -> impl Iterator<Item = Subset> {
        assert!(n < 64, "spectrum too large to enumerate subsets");
        (1u64..(1u64 << n)).filter_map(move |m| Subset::from_mask(m, n))
    }

    /// Every nonempty proper subset of `0..n`.
    pub fn all_proper(n: usize) -> impl Iterator<Item = Subset> {
        Subset::all_nonempty(n).filter(move |s| s.len() < n)
    }

    pub fn values(&self, obs: &Observable) -> Vec<f64> {
        self.0.iter().map(|&i| obs.eigenvalues()[i]).collect()
    }
}

/// The proposition `[A ∈ Δ]`.
#[derive(Clone, Debug)]
pub struct Proposition<'a> {
    observable: &'a Observable,
    subset: Subset,
}

impl<'a> Proposition<'a> {
    pub fn new(observable: &'a Observable, subset: Subset) -> Result<Self> {
        let n = observable.outcome_count();
        if subset.indices().iter().any(|&i| i >= n) {
            return Err(Error::InvalidSubset(format!(
                "subset {:?} out of range for '{}'",
                subset.indices(),
                observable.name()
            )));
        }
        Ok(Proposition { observable, subset })
    }

    /// `[A = α]` for the eigenvalue with index `i`.
    pub fn equals(observable: &'a Observable, i: usize) -> Result<Self> {
        Self::new(observable, Subset::singleton(i))
    }

    /// `[A = value]`, matching the eigenvalue numerically.
    pub fn equals_value(observable: &'a Observable, value: f64) -> Result<Self> {
        let i = observable.index_of(value).ok_or_else(|| {
            Error::InvalidSubset(format!(
                "{value} is not an eigenvalue of '{}'",
                observable.name()
            ))
        })?;
        Self::equals(observable, i)
    }

    pub fn observable(&self) -> &'a Observable {
        self.observable
    }

    pub fn subset(&self) -> &Subset {
        &self.subset
    }
}

/// A density operator, optionally annotated with the convex decomposition
/// it was prepared from.
#[derive(Clone, Debug)]
pub struct State {
    matrix: CMatrix,
    decomposition: Option<Vec<(f64, Vec<C64>)>>,
}

impl State {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues down to
    /// `−1e-10` are accepted as round-off).
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        let defect = matrix.hermitian_defect();
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let (eigs, _) = jacobi_eigen(&matrix)?;
        if let Some(&min) = eigs.first() {
            if min < -STATE_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(State {
            matrix: matrix.hermitian_part(),
            decomposition: None,
        })
    }

    /// |ψ⟩⟨ψ| for the normalised `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        Self::mixture(&[(1.0, psi.to_vec())])
    }

    /// Σ pᵢ|ψᵢ⟩⟨ψᵢ|; vectors are normalised, weights must already sum to 1.
    pub fn mixture(parts: &[(f64, Vec<C64>)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let dim = first.1.len();
        if dim == 0 {
            return Err(Error::InvalidState("zero-length vector".into()));
        }
        let mut total = 0.0;
        let mut matrix = CMatrix::zeros(dim);
        let mut decomposition = Vec::with_capacity(parts.len());
        for (w, v) in parts {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(v.len(), dim));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidState(format!(
                    "mixture weight {w} is negative or non-finite"
                )));
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 1e-12) {
                return Err(Error::InvalidState("mixture vector has zero norm".into()));
            }
            let unit: Vec<C64> = v.iter().map(|z| z / norm).collect();
            matrix.add_scaled_in_place(&CMatrix::outer(&unit), *w);
            total += w;
            decomposition.push((*w, unit));
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(State {
            matrix,
            decomposition: Some(decomposition),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        State {
            matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
            decomposition: None,
        }
    }

    /// Computational basis state |i⟩.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![c(0.0, 0.0); dim];
        v[i] = c(1.0, 0.0);
        Self::pure(&v).expect("basis vector")
    }

    /// Used for update outputs, which are valid states up to round-off.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        State {
            matrix: matrix.hermitian_part(),
            decomposition: None,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn decomposition(&self) -> Option<&[(f64, Vec<C64>)]> {
        self.decomposition.as_deref()
    }

    fn check_dim(&self, obs: &Observable) -> Result<()> {
        if self.dim() != obs.dim() {
            return Err(Error::DimensionMismatch(self.dim(), obs.dim()));
        }
        Ok(())
    }
}

/// Distribution of one observable: outcome values with probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub support: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn prob_of(&self, subset: &Subset) -> f64 {
        subset
            .indices()
            .iter()
            .map(|&i| self.probabilities[i])
            .sum()
    }
}

/// Probability table over the product of the spectra of a sequence of
/// observables, first axis varying slowest.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SequentialDistribution {
    axes: Vec<String>,
    supports: Vec<Vec<f64>>,
    table: Vec<f64>,
}

impl SequentialDistribution {
    pub(crate) fn from_parts(axes: Vec<String>, supports: Vec<Vec<f64>>, table: Vec<f64>) -> Self {
        debug_assert_eq!(
            table.len(),
            supports.iter().map(Vec::len).product::<usize>()
        );
        SequentialDistribution {
            axes,
            supports,
            table,
        }
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn supports(&self) -> &[Vec<f64>] {
        &self.supports
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn shape(&self) -> Vec<usize> {
        self.supports.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    pub fn flat_index(&self, tuple: &[usize]) -> usize {
        tuple
            .iter()
            .zip(&self.supports)
            .fold(0, |acc, (&i, s)| acc * s.len() + i)
    }

    pub fn tuple_of(&self, mut flat: usize) -> Vec<usize> {
        let mut t = vec![0; self.supports.len()];
        for (k, s) in self.supports.iter().enumerate().rev() {
            t[k] = flat % s.len();
            flat /= s.len();
        }
        t
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.table[self.flat_index(tuple)]
    }

    /// Outcome values of a tuple of indices.
    pub fn values_of(&self, tuple: &[usize]) -> Vec<f64> {
        tuple
            .iter()
            .zip(&self.supports)
            .map(|(&i, s)| s[i])
            .collect()
    }

    /// P[A₁ ∈ Δ₁, …, A_m ∈ Δ_m]
    pub fn prob_of(&self, subsets: &[&Subset]) -> f64 {
        (0..self.table.len())
            .filter(|&f| {
                self.tuple_of(f)
                    .iter()
                    .zip(subsets)
                    .all(|(&i, s)| s.contains(i))
            })
            .map(|f| self.table[f])
            .sum()
    }

    /// Marginal over the listed axes, in the listed order.
    pub fn marginal(&self, keep: &[usize]) -> SequentialDistribution {
        let supports: Vec<Vec<f64>> = keep.iter().map(|&k| self.supports[k].clone()).collect();
        let axes = keep.iter().map(|&k| self.axes[k].clone()).collect();
        let size: usize = supports.iter().map(Vec::len).product();
        let mut out = SequentialDistribution::from_parts(axes, supports, vec![0.0; size]);
        for f in 0..self.table.len() {
            let t = self.tuple_of(f);
            let sub: Vec<usize> = keep.iter().map(|&k| t[k]).collect();
            let idx = out.flat_index(&sub);
            out.table[idx] += self.table[f];
        }
        out
    }

    /// Largest entrywise difference against `other` after reordering
    /// `other`'s axes to match this table's axis names.
    pub fn max_abs_diff_aligned(&self, other: &SequentialDistribution) -> Option<f64> {
        if self.axes.len() != other.axes.len() {
            return None;
        }
        let mut used = vec![false; other.axes.len()];
        let mut perm = Vec::with_capacity(self.axes.len());
        for name in &self.axes {
            let j = (0..other.axes.len()).find(|&j| !used[j] && &other.axes[j] == name)?;
            used[j] = true;
            perm.push(j);
        }
        let mut worst: f64 = 0.0;
        for f in 0..self.table.len() {
            let t = self.tuple_of(f);
            let mut ot = vec![0; t.len()];
            for (k, &j) in perm.iter().enumerate() {
                ot[j] = t[k];
            }
            worst = worst.max((self.table[f] - other.get(&ot)).abs());
        }
        Some(worst)
    }
}

impl fmt::Display for SequentialDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "({})", self.axes.join(", "))?;
        for (i, p) in self.table.iter().enumerate() {
            let vals: Vec<String> = self
                .values_of(&self.tuple_of(i))
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            writeln!(f, "  ({}) {p}", vals.join(", "))?;
        }
        Ok(())
    }
}

fn born_prob(rho: &CMatrix, projector: &CMatrix) -> f64 {
    rho.trace_mul(projector).re
}

pub fn born_distribution(rho: &State, obs: &Observable) -> Result<OutcomeDistribution> {
    rho.check_dim(obs)?;
    let probabilities = obs
        .spectrum()
        .projectors()
        .iter()
        .map(|p| born_prob(rho.matrix(), p).max(0.0))
        .collect();
    Ok(OutcomeDistribution {
        support: obs.eigenvalues().to_vec(),
        probabilities,
    })
}

/// P_ρ[A ∈ Δ]
pub fn probability(rho: &State, prop: &Proposition<'_>) -> Result<f64> {
    let obs = prop.observable();
    rho.check_dim(obs)?;
    Ok(prop
        .subset()
        .indices()
        .iter()
        .map(|&i| born_prob(rho.matrix(), obs.projector(i)).max(0.0))
        .sum())
}

/// ⟨A⟩ = tr(ρA)
pub fn expectation(rho: &State, obs: &Observable) -> Result<f64> {
    rho.check_dim(obs)?;
    Ok(rho.matrix().trace_mul(obs.matrix()).re)
}

/// g(A) = Σ g(α)Π(A=α) for `g` given as one value per eigenvalue of `A`.
/// Eigenspaces whose values coincide are merged.
pub fn apply_function(
    obs: &Observable,
    table: &[f64],
    name: impl Into<String>,
) -> Result<Observable> {
    if table.len() != obs.outcome_count() {
        return Err(Error::UndefinedOnSpectrum {
            expected: obs.outcome_count(),
            got: table.len(),
        });
    }
    if table.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = table.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut spectrum = obs
        .spectrum()
        .regroup(table, DEFAULT_CLUSTER_TOL * (1.0 + scale));
    spectrum.snap_integers();
    Ok(Observable {
        name: name.into(),
        matrix: spectrum.reconstruct(),
        spectrum,
    })
}

/// Same as [`apply_function`] with the table produced by a closure.
pub fn map_observable(
    obs: &Observable,
    name: impl Into<String>,
    g: impl Fn(f64) -> f64,
) -> Result<Observable> {
    let table: Vec<f64> = obs.eigenvalues().iter().map(|&a| g(a)).collect();
    apply_function(obs, &table, name)
}

/// g⁻¹(Σ): the indices of `A`'s spectrum mapped into the eigenvalues of
/// `g(A)` listed by `target`.
pub fn preimage(
    obs: &Observable,
    table: &[f64],
    image: &Observable,
    target: &Subset,
) -> Option<Subset> {
    let wanted: Vec<f64> = target.values(image);
    let v: Vec<usize> = (0..obs.outcome_count())
        .filter(|&i| {
            wanted
                .iter()
                .any(|&w| (table[i] - w).abs() <= 1e-9 * (1.0 + w.abs()))
        })
        .collect();
    (!v.is_empty()).then_some(Subset(v))
}

pub fn luders_update(rho: &State, prop: &Proposition<'_>) -> Result<State> {
    luders_update_with(rho, prop, DEFAULT_NULL_THRESHOLD)
}

/// T_[A∈Δ](ρ) = Σ_{α∈Δ} Π ρ Π / P_ρ[A∈Δ]; null propositions are an error.
pub fn luders_update_with(
    rho: &State,
    prop: &Proposition<'_>,
    null_threshold: f64,
) -> Result<State> {
    let p = probability(rho, prop)?;
    if p <= null_threshold {
        return Err(Error::NullProposition(p));
    }
    let obs = prop.observable();
    let mut out = CMatrix::zeros(rho.dim());
    for &i in prop.subset().indices() {
        out.add_scaled_in_place(&obs.projector(i).sandwich(rho.matrix()), 1.0 / p);
    }
    Ok(State::from_trusted(out))
}

/// P^A_ρ(Δᵢ | Δ) = P_ρ[A ∈ Δᵢ ∩ Δ] / P_ρ[A ∈ Δ]
pub fn conditional_ratio(
    rho: &State,
    obs: &Observable,
    part: &Subset,
    whole: &Subset,
) -> Result<f64> {
    let denom = probability(rho, &Proposition::new(obs, whole.clone())?)?;
    if denom <= DEFAULT_NULL_THRESHOLD {
        return Err(Error::NullProposition(denom));
    }
    let num = match part.intersection(whole) {
        Some(s) => probability(rho, &Proposition::new(obs, s)?)?,
        None => 0.0,
    };
    Ok(num / denom)
}

pub(crate) fn table_size(obs: &[&Observable], cap: u128) -> Result<usize> {
    let size = obs
        .iter()
        .map(|o| o.outcome_count() as u128)
        .product::<u128>();
    if size > cap {
        return Err(Error::SpaceCapExceeded { size, cap });
    }
    Ok(size as usize)
}

pub fn sequential_distribution(rho: &State, seq: &[&Observable]) -> Result<SequentialDistribution> {
    sequential_distribution_with(rho, seq, DEFAULT_NULL_THRESHOLD, DEFAULT_SPACE_CAP)
}

/// Joint table of measuring `seq` in order, updating by Lüders' rule after
/// each outcome. Tuples whose prefix is null get probability 0.
pub fn sequential_distribution_with(
    rho: &State,
    seq: &[&Observable],
    null_threshold: f64,
    space_cap: u128,
) -> Result<SequentialDistribution> {
    for o in seq {
        rho.check_dim(o)?;
    }
    let size = table_size(seq, space_cap)?;
    let mut table = vec![0.0; size];

    fn descend(
        state: &CMatrix,
        seq: &[&Observable],
        depth: usize,
        prefix_prob: f64,
        base: usize,
        null_threshold: f64,
        table: &mut [f64],
    ) {
        let obs = seq[depth];
        let n = obs.outcome_count();
        for i in 0..n {
            let proj = obs.projector(i);
            let q = born_prob(state, proj);
            if q <= null_threshold {
                continue;
            }
            let idx = base * n + i;
            if depth + 1 == seq.len() {
                table[idx] = prefix_prob * q;
            } else {
                let next = proj.sandwich(state).scale_real(1.0 / q).hermitian_part();
                descend(
                    &next,
                    seq,
                    depth + 1,
                    prefix_prob * q,
                    idx,
                    null_threshold,
                    table,
                );
            }
        }
    }

    if !seq.is_empty() {
        descend(rho.matrix(), seq, 0, 1.0, 0, null_threshold, &mut table);
    }
    Ok(SequentialDistribution::from_parts(
        seq.iter().map(|o| o.name().to_string()).collect(),
        seq.iter().map(|o| o.eigenvalues().to_vec()).collect(),
        table,
    ))
}

/// Standard joint distribution ⟨Π Π(Aᵢ=αᵢ)⟩ of pairwise compatible
/// observables.
pub fn joint_distribution_compatible(
    rho: &State,
    obs: &[&Observable],
) -> Result<SequentialDistribution> {
    for o in obs {
        rho.check_dim(o)?;
    }
    for (i, a) in obs.iter().enumerate() {
        for b in &obs[i + 1..] {
            let report = compat::is_compatible(a, b, compat::DEFAULT_COMPAT_TOL)?;
            if !report.is_compatible() {
                return Err(Error::NotCompatible(a.name().into(), b.name().into()));
            }
        }
    }
    let size = table_size(obs, DEFAULT_SPACE_CAP)?;
    let mut table = vec![0.0; size];

    fn descend(
        rho: &CMatrix,
        prefix: &CMatrix,
        obs: &[&Observable],
        depth: usize,
        base: usize,
        table: &mut [f64],
    ) {
        let o = obs[depth];
        let n = o.outcome_count();
        for i in 0..n {
            let prod = prefix.mul(o.projector(i));
            let idx = base * n + i;
            if prod.max_abs_norm() <= 1e-14 {
                continue;
            }
            if depth + 1 == obs.len() {
                table[idx] = rho.trace_mul(&prod).re.max(0.0);
            } else {
                descend(rho, &prod, obs, depth + 1, idx, table);
            }
        }
    }

    if !obs.is_empty() {
        descend(
            rho.matrix(),
            &CMatrix::identity(rho.dim()),
            obs,
            0,
            0,
            &mut table,
        );
    }
    Ok(SequentialDistribution::from_parts(
        obs.iter().map(|o| o.name().to_string()).collect(),
        obs.iter().map(|o| o.eigenvalues().to_vec()).collect(),
        table,
    ))
}

/// Built-in operators.
pub mod builtins {
    use super::*;

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ])
        .unwrap()
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    /// Spin-1 operators in the S_z eigenbasis (+1, 0, −1), ħ = 1.
    pub fn spin1_x() -> CMatrix {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_real_rows(&[&[0.0, r, 0.0], &[r, 0.0, r], &[0.0, r, 0.0]]).unwrap()
    }

    pub fn spin1_y() -> CMatrix {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(0.0, -r), c(0.0, 0.0)],
            vec![c(0.0, r), c(0.0, 0.0), c(0.0, -r)],
            vec![c(0.0, 0.0), c(0.0, r), c(0.0, 0.0)],
        ])
        .unwrap()
    }

    pub fn spin1_z() -> CMatrix {
        CMatrix::from_real_diagonal(&[1.0, 0.0, -1.0])
    }

    pub fn ket_plus() -> Vec<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(r, 0.0), c(r, 0.0)]
    }

    pub fn ket_minus() -> Vec<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(r, 0.0), c(-r, 0.0)]
    }

    pub fn sigma_x() -> Observable {
        Observable::new("pauli_x", pauli_x()).unwrap()
    }

    pub fn sigma_y() -> Observable {
        Observable::new("pauli_y", pauli_y()).unwrap()
    }

    pub fn sigma_z() -> Observable {
        Observable::new("pauli_z", pauli_z()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::builtins::*;
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn mat_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = a.sub(b).unwrap().max_abs_norm();
        assert!(d <= tol, "matrices differ by {d}\n{a:?}\n{b:?}");
    }

    fn zero() -> State {
        State::basis(2, 0)
    }

    fn plus() -> State {
        State::pure(&ket_plus()).unwrap()
    }

    #[test]
    fn born_eigenstate_mixed_and_superposition() {
        let z = sigma_z();
        let d = born_distribution(&zero(), &z).unwrap();
        assert_eq!(d.support, vec![-1.0, 1.0]);
        assert_close(d.probabilities[1], 1.0, 1e-15);
        assert_close(d.probabilities[0], 0.0, 1e-15);

        let d = born_distribution(&State::maximally_mixed(2), &sigma_x()).unwrap();
        assert_close(d.probabilities[0], 0.5, 1e-14);
        assert_close(d.probabilities[1], 0.5, 1e-14);

        let d = born_distribution(&plus(), &z).unwrap();
        assert_close(d.probabilities[0], 0.5, 1e-14);
        assert_close(d.probabilities[1], 0.5, 1e-14);
    }

    #[test]
    fn born_dimension_mismatch() {
        assert!(matches!(
            born_distribution(&State::maximally_mixed(3), &sigma_z()),
            Err(Error::DimensionMismatch(3, 2))
        ));
    }

    #[test]
    fn expectations() {
        assert_close(expectation(&zero(), &sigma_z()).unwrap(), 1.0, 1e-15);
        assert_close(
            expectation(&State::maximally_mixed(2), &sigma_x()).unwrap(),
            0.0,
            1e-15,
        );
        assert_close(expectation(&plus(), &sigma_z()).unwrap(), 0.0, 1e-15);
    }

    #[test]
    fn function_of_observable() {
        let sq = map_observable(&sigma_z(), "z2", |a| a * a).unwrap();
        assert_eq!(sq.eigenvalues(), &[1.0]);
        mat_close(sq.matrix(), &CMatrix::identity(2), 1e-14);

        let a = Observable::new("a", CMatrix::from_real_diagonal(&[1.0, 2.0, 3.0])).unwrap();
        let g = map_observable(&a, "a mod 2", |x| x.rem_euclid(2.0)).unwrap();
        assert_eq!(g.eigenvalues(), &[0.0, 1.0]);
        mat_close(
            g.matrix(),
            &CMatrix::from_real_diagonal(&[1.0, 0.0, 1.0]),
            1e-14,
        );
        mat_close(
            g.projector(1),
            &CMatrix::from_real_diagonal(&[1.0, 0.0, 1.0]),
            1e-14,
        );

        let shifted = map_observable(&sigma_x(), "x+1", |x| x + 1.0).unwrap();
        mat_close(
            shifted.matrix(),
            &pauli_x().add(&CMatrix::identity(2)).unwrap(),
            1e-14,
        );
    }

    #[test]
    fn function_table_must_cover_spectrum() {
        let err = apply_function(&sigma_z(), &[1.0], "g").unwrap_err();
        assert!(matches!(
            err,
            Error::UndefinedOnSpectrum {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn luders_examples() {
        let z = sigma_z();
        let up = Proposition::equals_value(&z, 1.0).unwrap();
        let out = luders_update(&State::maximally_mixed(2), &up).unwrap();
        mat_close(out.matrix(), zero().matrix(), 1e-15);

        let x = sigma_x();
        let xp = Proposition::equals_value(&x, 1.0).unwrap();
        let out = luders_update(&zero(), &xp).unwrap();
        mat_close(out.matrix(), plus().matrix(), 1e-14);

        let down = Proposition::equals_value(&z, -1.0).unwrap();
        assert!(matches!(
            luders_update(&zero(), &down),
            Err(Error::NullProposition(_))
        ));
    }

    #[test]
    fn sequential_examples() {
        let (z, x) = (sigma_z(), sigma_x());
        let t = sequential_distribution(&zero(), &[&z, &x]).unwrap();
        // axes: z in {-1, +1}, x in {-1, +1}
        assert_close(t.get(&[1, 1]), 0.5, 1e-14);
        assert_close(t.get(&[1, 0]), 0.5, 1e-14);
        assert_eq!(t.get(&[0, 0]), 0.0);
        assert_eq!(t.get(&[0, 1]), 0.0);

        let t = sequential_distribution(&zero(), &[&x, &z]).unwrap();
        for p in t.table() {
            assert_close(*p, 0.25, 1e-14);
        }
    }

    #[test]
    fn repeated_measurement_is_diagonal() {
        let x = sigma_x();
        let rho = State::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let t = sequential_distribution(&rho, &[&x, &x]).unwrap();
        let born = born_distribution(&rho, &x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { born.probabilities[i] } else { 0.0 };
                assert_close(t.get(&[i, j]), expected, 1e-12);
            }
        }
    }

    #[test]
    fn space_cap_enforced() {
        let z = sigma_z();
        let seq = vec![&z; 21];
        let err = sequential_distribution(&zero(), &seq).unwrap_err();
        assert!(matches!(err, Error::SpaceCapExceeded { .. }));
    }

    #[test]
    fn joint_of_compatible_diagonals() {
        let a = Observable::new("A", CMatrix::from_real_diagonal(&[1.0, 2.0, 2.0])).unwrap();
        let b = Observable::new("B", CMatrix::from_real_diagonal(&[3.0, 4.0, 5.0])).unwrap();
        let rho = State::maximally_mixed(3);
        let j = joint_distribution_compatible(&rho, &[&a, &b]).unwrap();
        assert_close(j.get(&[1, 1]), 1.0 / 3.0, 1e-15);
        assert_close(j.get(&[0, 0]), 1.0 / 3.0, 1e-15);
        assert_eq!(j.get(&[0, 1]), 0.0);
        let s = sequential_distribution(&rho, &[&b, &a]).unwrap();
        assert!(j.max_abs_diff_aligned(&s).unwrap() < 1e-12);
    }

    #[test]
    fn joint_single_and_functional() {
        let rho = plus();
        let x = sigma_x();
        let j = joint_distribution_compatible(&rho, &[&x]).unwrap();
        let b = born_distribution(&rho, &x).unwrap();
        assert_eq!(j.table(), &b.probabilities[..]);

        let a = Observable::new("A", CMatrix::from_real_diagonal(&[1.0, 2.0, 3.0])).unwrap();
        let g = map_observable(&a, "g", |v| (v - 2.0).abs()).unwrap();
        let rho = State::maximally_mixed(3);
        let j = joint_distribution_compatible(&rho, &[&a, &g]).unwrap();
        for f in 0..j.len() {
            let vals = j.values_of(&j.tuple_of(f));
            if ((vals[0] - 2.0).abs() - vals[1]).abs() > 1e-12 {
                assert_eq!(j.table()[f], 0.0);
            }
        }
    }

    #[test]
    fn joint_rejects_incompatible() {
        let err = joint_distribution_compatible(&zero(), &[&sigma_z(), &sigma_x()]).unwrap_err();
        assert!(matches!(err, Error::NotCompatible(..)));
    }

    #[test]
    fn state_validation() {
        let bad = CMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(State::from_matrix(bad).is_err());
        let bad = CMatrix::from_real_diagonal(&[0.5, 0.6]);
        assert!(State::from_matrix(bad).is_err());
        assert!(State::mixture(&[(0.5, ket_plus()), (0.4, ket_minus())]).is_err());
        let ok = State::mixture(&[(0.5, ket_plus()), (0.5, ket_minus())]).unwrap();
        mat_close(ok.matrix(), State::maximally_mixed(2).matrix(), 1e-15);
    }

    #[test]
    fn subset_validation() {
        assert!(Subset::new(vec![], 2).is_err());
        assert!(Subset::new(vec![2], 2).is_err());
        assert_eq!(Subset::new(vec![1, 0, 1], 2).unwrap().indices(), &[0, 1]);
        assert_eq!(Subset::all_nonempty(3).count(), 7);
        assert_eq!(Subset::all_proper(3).count(), 6);
    }
}
