//! Finite ontological models.
//!
//! A deterministic model for a pairwise compatible scenario `A₁, …, A_m`
//! lives on the product `Λ = σ(A₁) × … × σ(A_m)`. Each observable is the
//! coordinate projection `f_Aᵢ(λ) = λᵢ`, and a state is mapped to the
//! measure `μ_ρ(λ) = tr(ρ Π(A₁=λ₁)⋯Π(A_m=λ_m))`, the unique measure whose
//! cylinder probabilities are the joint distributions of the scenario.
//! Measurement updates act on measures by conditioning:
//!
//! ```text
//! τ_[A∈Δ](μ)(λ) = μ(λ)·κ_λ[A∈Δ] / Σ_λ' μ(λ')·κ_λ'[A∈Δ]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::check::{Check, MaxResidual, VerificationReport};
use crate::compat::{is_compatible, max_order_gap, DEFAULT_COMPAT_TOL};
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, C64};
use crate::quantum::{
    apply_function, born_distribution, expectation, luders_update, probability,
    sequential_distribution, Observable, Proposition, SequentialDistribution, State, Subset,
    DEFAULT_NULL_THRESHOLD, DEFAULT_SPACE_CAP,
};

/// Conditioning checks skip propositions less likely than this; dividing
/// round-off by smaller probabilities swamps a 1e-9 tolerance.
pub const CONDITIONING_FLOOR: f64 = 1e-6;

const MAX_FULL_SUBSET_ENUMERATION: usize = 10;
const MAX_FULL_PERMUTATIONS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Λ = Π σ(Aᵢ), enumerated lexicographically with the first axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct OnticSpace {
    axes: Vec<Axis>,
    size: usize,
}

impl OnticSpace {
    pub fn new(axes: Vec<Axis>, space_cap: u128) -> Result<Self> {
        let size = axes
            .iter()
            .map(|a| a.values.len() as u128)
            .product::<u128>();
        if size > space_cap {
            return Err(Error::SpaceCapExceeded {
                size,
                cap: space_cap,
            });
        }
        Ok(OnticSpace {
            axes,
            size: size as usize,
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Coordinate indices of point `idx`.
    pub fn point(&self, mut idx: usize) -> Vec<usize> {
        let mut coords = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            coords[k] = idx % axis.values.len();
            idx /= axis.values.len();
        }
        coords
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.values.len() + i)
    }

    pub fn point_values(&self, idx: usize) -> Vec<f64> {
        self.point(idx)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.values[i])
            .collect()
    }
}

/// Probability weights on a finite ontic space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnticMeasure {
    weights: Vec<f64>,
}

impl OnticMeasure {
    /// Fails unless weights are nonnegative and sum to 1 within 1e-9.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidState("measure on an empty space".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidState(
                "measure weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!(
                "measure weights sum to {total}"
            )));
        }
        Ok(OnticMeasure { weights })
    }

    /// Clamps negatives to zero and rescales to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        weights.iter_mut().for_each(|w| *w = w.max(0.0));
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidState("measure has no mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(OnticMeasure { weights })
    }

    pub fn uniform(n: usize) -> Self {
        OnticMeasure {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        OnticMeasure { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// μ(Ω) for Ω given by a membership mask.
    pub fn mass(&self, omega: &[bool]) -> f64 {
        self.weights
            .iter()
            .zip(omega)
            .filter(|(_, &inside)| inside)
            .map(|(w, _)| w)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &OnticMeasure) -> Result<f64> {
        check_same_space(self, other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }
}

fn check_same_space(a: &OnticMeasure, b: &OnticMeasure) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SpaceMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// λ ↦ κ_λ[A = ·], one outcome distribution per ontic point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovKernel {
    observable: String,
    outcomes: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl MarkovKernel {
    pub fn new(
        observable: impl Into<String>,
        outcomes: Vec<f64>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != outcomes.len() {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has {} entries for {} outcomes",
                    row.len(),
                    outcomes.len()
                )));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidKernel(format!("row {i} sums to {s}")));
            }
        }
        Ok(MarkovKernel {
            observable: observable.into(),
            outcomes,
            rows,
        })
    }

    /// Kernel of the random variable sending point λ to outcome `assignment[λ]`.
    pub fn deterministic(
        observable: impl Into<String>,
        outcomes: Vec<f64>,
        assignment: &[usize],
    ) -> Result<Self> {
        let n = outcomes.len();
        let rows = assignment
            .iter()
            .map(|&k| {
                let mut row = vec![0.0; n];
                *row.get_mut(k).ok_or_else(|| {
                    Error::InvalidKernel(format!("outcome index {k} out of range"))
                })? = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(observable, outcomes, rows)
    }

    pub fn observable(&self) -> &str {
        &self.observable
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn points(&self) -> usize {
        self.rows.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .all(|&p| p.abs() <= 1e-12 || (p - 1.0).abs() <= 1e-12)
    }

    /// κ_λ[A ∈ Δ]
    pub fn prob(&self, point: usize, subset: &Subset) -> f64 {
        subset.indices().iter().map(|&i| self.rows[point][i]).sum()
    }

    /// f_A(λ) as an outcome index, for deterministic rows.
    pub fn outcome_of(&self, point: usize) -> Option<usize> {
        let row = &self.rows[point];
        let i = row.iter().position(|&p| (p - 1.0).abs() <= 1e-12)?;
        Some(i)
    }

    /// Ω(A ∈ Δ) = {λ : κ_λ[A∈Δ] = 1}, meaningful for deterministic kernels.
    pub fn preimage(&self, subset: &Subset) -> Vec<bool> {
        (0..self.rows.len())
            .map(|l| (self.prob(l, subset) - 1.0).abs() <= 1e-12)
            .collect()
    }
}

/// ∫ κ_λ[A ∈ Δ] μ(dλ)
pub fn integrate(measure: &OnticMeasure, kernel: &MarkovKernel, subset: &Subset) -> Result<f64> {
    if measure.len() != kernel.points() {
        return Err(Error::SpaceMismatch(measure.len(), kernel.points()));
    }
    Ok(measure
        .weights
        .iter()
        .enumerate()
        .map(|(l, w)| w * kernel.prob(l, subset))
        .sum())
}

pub fn model_update(
    measure: &OnticMeasure,
    kernel: &MarkovKernel,
    subset: &Subset,
) -> Result<OnticMeasure> {
    model_update_with(measure, kernel, subset, DEFAULT_NULL_THRESHOLD)
}

/// τ_[A∈Δ](μ): reweight each point by κ_λ[A∈Δ] and renormalise.
pub fn model_update_with(
    measure: &OnticMeasure,
    kernel: &MarkovKernel,
    subset: &Subset,
    null_threshold: f64,
) -> Result<OnticMeasure> {
    let p = integrate(measure, kernel, subset)?;
    if p <= null_threshold {
        return Err(Error::NullCondition(p));
    }
    Ok(OnticMeasure {
        weights: measure
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| w * kernel.prob(l, subset) / p)
            .collect(),
    })
}

/// ‖μ − ν‖ = sup_Ω |μ(Ω) − ν(Ω)| = ½ Σ_λ |μ(λ) − ν(λ)|
pub fn total_variation(mu: &OnticMeasure, nu: &OnticMeasure) -> Result<f64> {
    check_same_space(mu, nu)?;
    Ok(0.5
        * mu.weights
            .iter()
            .zip(&nu.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Subsets exercised by the verification suites: all of them for small
/// spectra, otherwise singletons, their complements and the full set.
pub fn subsets_for_checks(n: usize) -> Vec<Subset> {
    if n <= MAX_FULL_SUBSET_ENUMERATION {
        return Subset::all_nonempty(n).collect();
    }
    let mut out: Vec<Subset> = (0..n).map(Subset::singleton).collect();
    for i in 0..n {
        out.push(Subset::new((0..n).filter(|&j| j != i).collect(), n).expect("nonempty"));
    }
    out.push(Subset::full(n));
    out
}

/// All permutations of `0..m` for small `m`; otherwise the rotations of
/// the identity and of its reverse.
pub fn orderings(m: usize) -> Vec<Vec<usize>> {
    if m <= MAX_FULL_PERMUTATIONS {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..m).collect();
        permute(&mut current, 0, &mut out);
        return out;
    }
    let mut out = Vec::new();
    for r in 0..m {
        let fwd: Vec<usize> = (0..m).map(|i| (i + r) % m).collect();
        let mut rev = fwd.clone();
        rev.reverse();
        out.push(fwd);
        out.push(rev);
    }
    out
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

/// The deterministic model of a pairwise compatible scenario.
#[derive(Clone, Debug)]
pub struct DeterministicModel {
    space: OnticSpace,
    observables: Vec<Observable>,
    kernels: Vec<MarkovKernel>,
}

pub fn build_deterministic_model(scenario: &[Observable]) -> Result<DeterministicModel> {
    DeterministicModel::build(scenario, DEFAULT_COMPAT_TOL, DEFAULT_SPACE_CAP)
}

impl DeterministicModel {
    /// Checks compatibility of every pair first; the first incompatible
    /// pair aborts with its maximal order witness.
    pub fn build(scenario: &[Observable], tol: f64, space_cap: u128) -> Result<Self> {
        if scenario.len() < 2 {
            return Err(Error::ScenarioTooSmall(2));
        }
        let dim = scenario[0].dim();
        if let Some(o) = scenario.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, o.dim()));
        }
        for (i, a) in scenario.iter().enumerate() {
            for b in &scenario[i + 1..] {
                if !is_compatible(a, b, tol)?.is_compatible() {
                    return Err(Error::IncompatibleScenario(Box::new(max_order_gap(a, b)?)));
                }
            }
        }
        let axes: Vec<Axis> = scenario
            .iter()
            .map(|o| Axis {
                name: o.name().to_string(),
                values: o.eigenvalues().to_vec(),
            })
            .collect();
        let space = OnticSpace::new(axes, space_cap)?;
        let kernels = (0..scenario.len())
            .map(|k| {
                let assignment: Vec<usize> = (0..space.size()).map(|l| space.point(l)[k]).collect();
                MarkovKernel::deterministic(
                    scenario[k].name(),
                    scenario[k].eigenvalues().to_vec(),
                    &assignment,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DeterministicModel {
            space,
            observables: scenario.to_vec(),
            kernels,
        })
    }

    pub fn space(&self) -> &OnticSpace {
        &self.space
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn kernels(&self) -> &[MarkovKernel] {
        &self.kernels
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.observables
            .iter()
            .position(|o| o.name() == name)
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }

    pub fn kernel(&self, name: &str) -> Result<&MarkovKernel> {
        Ok(&self.kernels[self.axis_index(name)?])
    }

    /// μ_ρ(λ) = tr(ρ Π Π(Aᵢ = λᵢ)), negatives clamped and renormalised.
    pub fn state_map(&self, rho: &State) -> Result<OnticMeasure> {
        let dim = self.observables[0].dim();
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch(rho.dim(), dim));
        }
        let mut weights = vec![0.0; self.space.size()];

        fn descend(
            rho: &CMatrix,
            prefix: &CMatrix,
            obs: &[Observable],
            depth: usize,
            base: usize,
            weights: &mut [f64],
        ) {
            let o = &obs[depth];
            let n = o.outcome_count();
            for i in 0..n {
                let prod = prefix.mul(o.projector(i));
                if prod.max_abs_norm() <= 1e-14 {
                    continue;
                }
                let idx = base * n + i;
                if depth + 1 == obs.len() {
                    weights[idx] = rho.trace_mul(&prod).re;
                } else {
                    descend(rho, &prod, obs, depth + 1, idx, weights);
                }
            }
        }

        descend(
            rho.matrix(),
            &CMatrix::identity(dim),
            &self.observables,
            0,
            0,
            &mut weights,
        );
        OnticMeasure::normalized(weights)
    }

    /// The measure reshaped as a joint table over the scenario axes.
    pub fn joint(&self, measure: &OnticMeasure) -> SequentialDistribution {
        SequentialDistribution::from_parts(
            self.space.axes.iter().map(|a| a.name.clone()).collect(),
            self.space.axes.iter().map(|a| a.values.clone()).collect(),
            measure.weights.clone(),
        )
    }

    /// Serializable description: axes, kernel tables and per-state weights.
    pub fn document(&self, states: &[(String, State)]) -> Result<ModelDocument> {
        let weights = states
            .iter()
            .map(|(name, rho)| {
                Ok(StateWeights {
                    state: name.clone(),
                    weights: self.state_map(rho)?.weights,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelDocument {
            lambda_size: self.space.size(),
            axes: self.space.axes.clone(),
            weights,
            kernels: self
                .kernels
                .iter()
                .map(|k| KernelTable {
                    observable: k.observable.clone(),
                    outcome_index: (0..k.points())
                        .map(|l| k.outcome_of(l).unwrap_or(usize::MAX))
                        .collect(),
                })
                .collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateWeights {
    pub state: String,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub observable: String,
    /// f_A(λ) as an index into the axis values, one entry per point.
    pub outcome_index: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub lambda_size: usize,
    pub axes: Vec<Axis>,
    pub weights: Vec<StateWeights>,
    pub kernels: Vec<KernelTable>,
}

/// μ_ρ(f_A⁻¹(Δ))
pub fn model_predict(
    model: &DeterministicModel,
    rho: &State,
    observable: &str,
    subset: &Subset,
) -> Result<f64> {
    let kernel = model.kernel(observable)?;
    let mu = model.state_map(rho)?;
    integrate(&mu, kernel, subset)
}

/// Residuals of the conditional-probability identities for one measure and
/// one deterministic kernel: (a) conditional distribution, (b) composition
/// of updates, (c) summation over a partition into singletons.
pub fn lemma3_residuals(
    measure: &OnticMeasure,
    kernel: &MarkovKernel,
    subsets: &[Subset],
) -> Result<[f64; 3]> {
    let mut a = MaxResidual::default();
    let mut b = MaxResidual::default();
    let mut c = MaxResidual::default();
    let prob = |s: &Subset| integrate(measure, kernel, s);
    for d in subsets {
        let pd = prob(d)?;
        if pd <= CONDITIONING_FLOOR {
            continue;
        }
        let conditioned = model_update(measure, kernel, d)?;
        for d2 in subsets {
            let lhs = integrate(&conditioned, kernel, d2)?;
            let rhs = match d.intersection(d2) {
                Some(i) => prob(&i)? / pd,
                None => 0.0,
            };
            a.push((lhs - rhs).abs());

            if let Some(i) = d.intersection(d2) {
                if prob(&i)? > CONDITIONING_FLOOR {
                    let twice = model_update(&conditioned, kernel, d2)?;
                    let once = model_update(measure, kernel, &i)?;
                    b.push(twice.max_abs_diff(&once)?);
                }
            }
        }
        if d.len() >= 2 {
            let mut mixed = vec![0.0; measure.len()];
            for &alpha in d.indices() {
                let single = Subset::singleton(alpha);
                let pa = prob(&single)?;
                if pa <= DEFAULT_NULL_THRESHOLD {
                    continue;
                }
                let part = model_update(measure, kernel, &single)?;
                for (m, w) in mixed.iter_mut().zip(part.weights()) {
                    *m += pa / pd * w;
                }
            }
            let diff = conditioned
                .weights()
                .iter()
                .zip(&mixed)
                .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()));
            c.push(diff);
        }
    }
    Ok([a.0, b.0, c.0])
}

fn function_tables(obs: &Observable) -> Vec<(&'static str, Vec<f64>)> {
    let ev = obs.eigenvalues();
    vec![
        ("identity", ev.to_vec()),
        ("square", ev.iter().map(|a| a * a).collect()),
        (
            "fold",
            (0..ev.len()).map(|i| ((i * 7) % 3) as f64 - 1.0).collect(),
        ),
    ]
}

/// Runs every model-level identity over a corpus of states: Born agreement,
/// the update commutation square, expectation and joint integrals,
/// additivity/multiplicativity for pairs, conditioning identities and the
/// product rule of deterministic kernels.
pub fn verify_model(
    model: &DeterministicModel,
    states: &[(String, State)],
    tol: f64,
) -> Result<VerificationReport> {
    let mut born = MaxResidual::default();
    let mut square = MaxResidual::default();
    let mut expect = MaxResidual::default();
    let mut joint = MaxResidual::default();
    let mut sum_prod = MaxResidual::default();
    let mut l3 = [MaxResidual::default(); 3];
    let obs = model.observables();
    let perms = orderings(obs.len());

    for (_, rho) in states {
        let mu = model.state_map(rho)?;
        for (k, a) in obs.iter().enumerate() {
            let kernel = &model.kernels[k];
            let subsets = subsets_for_checks(a.outcome_count());
            for d in &subsets {
                let prop = Proposition::new(a, d.clone())?;
                let p = probability(rho, &prop)?;
                born.push((integrate(&mu, kernel, d)? - p).abs());
                if p > CONDITIONING_FLOOR {
                    let updated = model.state_map(&luders_update(rho, &prop)?)?;
                    let conditioned = model_update(&mu, kernel, d)?;
                    square.push(updated.max_abs_diff(&conditioned)?);
                }
            }
            for (label, table) in function_tables(a) {
                let g = apply_function(a, &table, format!("{label}({})", a.name()))?;
                let quantum = expectation(rho, &g)?;
                let integral: f64 = (0..mu.len())
                    .map(|l| {
                        let inner: f64 = table
                            .iter()
                            .enumerate()
                            .map(|(i, gv)| gv * kernel.rows[l][i])
                            .sum();
                        mu.weights[l] * inner
                    })
                    .sum();
                expect.push((quantum - integral).abs());
            }
            let r = lemma3_residuals(&mu, kernel, &subsets)?;
            for (slot, v) in l3.iter_mut().zip(r) {
                slot.push(v);
            }
        }

        let reference = model.joint(&mu);
        for perm in &perms {
            let seq: Vec<&Observable> = perm.iter().map(|&i| &obs[i]).collect();
            let table = sequential_distribution(rho, &seq)?;
            joint.push(
                reference
                    .max_abs_diff_aligned(&table)
                    .unwrap_or(f64::INFINITY),
            );
        }

        for i in 0..obs.len() {
            for j in (i + 1)..obs.len() {
                let (a, b) = (&obs[i], &obs[j]);
                let sum_q = rho.matrix().trace_mul(&a.matrix().add(b.matrix())?).re;
                let prod_q = rho.matrix().trace_mul(&a.matrix().mul(b.matrix())).re;
                let (mut sum_m, mut prod_m) = (0.0, 0.0);
                for l in 0..mu.len() {
                    let v = model.space.point_values(l);
                    sum_m += mu.weights[l] * (v[i] + v[j]);
                    prod_m += mu.weights[l] * v[i] * v[j];
                }
                sum_prod.push((sum_q - sum_m).abs().max((prod_q - prod_m).abs()));
            }
        }
    }

    let mut independent = true;
    for (k, a) in obs.iter().enumerate() {
        let kernel = &model.kernels[k];
        independent &= kernel.is_deterministic();
        let subsets = subsets_for_checks(a.outcome_count());
        for l in 0..kernel.points() {
            for d in &subsets {
                for d2 in &subsets {
                    let both = d.intersection(d2).map_or(0.0, |i| kernel.prob(l, &i));
                    independent &= both == kernel.prob(l, d) * kernel.prob(l, d2);
                }
            }
        }
    }

    Ok(VerificationReport {
        checks: vec![
            Check::new("born_agreement", born.0, tol),
            Check::new("update_commutation", square.0, tol),
            Check::new("expectation_integral", expect.0, tol),
            Check::new("joint_intersection_all_orders", joint.0, tol),
            Check::new("sum_and_product_expectations", sum_prod.0, tol),
            Check::new("conditional_distribution", l3[0].0, tol),
            Check::new("update_composition", l3[1].0, tol),
            Check::new("summation_formula", l3[2].0, tol),
            Check::condition("kernel_event_independence", independent),
        ],
    })
}

/// Permutation and marginalisation consistency of the joint family: every
/// ordering of the scenario yields the same sequential table, and every
/// marginal of the model joint is the joint of the retained observables.
pub fn verify_kolmogorov(
    model: &DeterministicModel,
    states: &[(String, State)],
    tol: f64,
) -> Result<VerificationReport> {
    let obs = model.observables();
    let m = obs.len();
    let mut perm_res = MaxResidual::default();
    let mut marg_res = MaxResidual::default();
    let subsequences: Vec<Vec<usize>> = if m <= 6 {
        (1u64..(1 << m) - 1)
            .map(|mask| (0..m).filter(|i| mask >> i & 1 == 1).collect())
            .collect()
    } else {
        (0..m)
            .map(|drop| (0..m).filter(|&i| i != drop).collect())
            .collect()
    };
    for (_, rho) in states {
        let all: Vec<&Observable> = obs.iter().collect();
        let base = sequential_distribution(rho, &all)?;
        for perm in orderings(m) {
            let seq: Vec<&Observable> = perm.iter().map(|&i| &obs[i]).collect();
            let table = sequential_distribution(rho, &seq)?;
            perm_res.push(base.max_abs_diff_aligned(&table).unwrap_or(f64::INFINITY));
        }
        let joint = model.joint(&model.state_map(rho)?);
        for keep in &subsequences {
            let marginal = joint.marginal(keep);
            let seq: Vec<&Observable> = keep.iter().map(|&i| &obs[i]).collect();
            let smaller = sequential_distribution(rho, &seq)?;
            marg_res.push(
                marginal
                    .max_abs_diff_aligned(&smaller)
                    .unwrap_or(f64::INFINITY),
            );
        }
    }
    Ok(VerificationReport {
        checks: vec![
            Check::new("kolmogorov_permutation", perm_res.0, tol),
            Check::new("kolmogorov_marginal", marg_res.0, tol),
        ],
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariationReport {
    pub omega_mass: f64,
    pub closed_form: f64,
    pub conditioned_distance: f64,
    pub trials: usize,
    pub min_sampled_distance: Option<f64>,
    pub violations: usize,
    pub checks: Vec<Check>,
}

/// Conditioning on Ω_Δ is the closest measure supported in Ω_Δ: checks
/// ‖τ(μ) − μ‖ = 1 − μ(Ω_Δ) and that `trials` random supported measures are
/// never closer.
pub fn variation_optimality<R: Rng + ?Sized>(
    mu: &OnticMeasure,
    kernel: &MarkovKernel,
    subset: &Subset,
    trials: usize,
    rng: &mut R,
    tol: f64,
) -> Result<VariationReport> {
    if !kernel.is_deterministic() {
        return Err(Error::InvalidKernel(
            "variation optimality needs a deterministic kernel".into(),
        ));
    }
    if mu.len() != kernel.points() {
        return Err(Error::SpaceMismatch(mu.len(), kernel.points()));
    }
    let omega = kernel.preimage(subset);
    let mass = mu.mass(&omega);
    let conditioned = model_update(mu, kernel, subset)?;
    let distance = total_variation(&conditioned, mu)?;
    let closed_form = 1.0 - mass;

    let support: Vec<usize> = (0..omega.len()).filter(|&l| omega[l]).collect();
    let mut min_sampled: Option<f64> = None;
    let mut violations = 0;
    for _ in 0..trials {
        let mut w = vec![0.0; mu.len()];
        for &l in &support {
            w[l] = rng.random::<f64>();
        }
        let nu = OnticMeasure::normalized(w)
            .unwrap_or_else(|_| OnticMeasure::point_mass(mu.len(), support[0]));
        let d = total_variation(&nu, mu)?;
        if d < closed_form - tol {
            violations += 1;
        }
        min_sampled = Some(min_sampled.map_or(d, |m: f64| m.min(d)));
    }
    let shortfall = min_sampled.map_or(0.0, |m| (closed_form - m).max(0.0));
    let mut checks = vec![Check::new(
        "variation_closed_form",
        (distance - closed_form).abs(),
        tol,
    )];
    if trials > 0 {
        checks.push(Check::new("variation_lower_bound", shortfall, tol));
    }
    Ok(VariationReport {
        omega_mass: mass,
        closed_form,
        conditioned_distance: distance,
        trials,
        min_sampled_distance: min_sampled,
        violations,
        checks,
    })
}

pub fn verify_variation_optimality(
    model: &DeterministicModel,
    mu: &OnticMeasure,
    observable: &str,
    subset: &Subset,
    trials: usize,
    seed: u64,
) -> Result<VariationReport> {
    let kernel = model.kernel(observable)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    variation_optimality(mu, kernel, subset, trials, &mut rng, 1e-9)
}

/// A finite-support measure over pure-state ontic points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PureStateMeasure {
    pub points: Vec<Vec<C64>>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BbUpdate {
    pub observable: String,
    pub outcome: f64,
    /// τ applied to the first measure.
    pub conditioned: PureStateMeasure,
    /// Measure of the Lüders-updated state, from the updated decomposition.
    pub luders: PureStateMeasure,
    pub tv_discrepancy: f64,
    /// P[A = outcome] under the conditioned measure (1 for the Lüders state).
    pub conditioned_repeatability: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BbReport {
    pub measure_a: PureStateMeasure,
    pub measure_b: PureStateMeasure,
    pub born_residual_a: f64,
    pub born_residual_b: f64,
    pub born_reproduced: bool,
    pub measures_distance: f64,
    pub measures_differ: bool,
    pub exhibited: Option<BbUpdate>,
    pub update_matches_luders: bool,
}

fn same_ray(a: &[C64], b: &[C64]) -> bool {
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    overlap.norm_sqr() >= 1.0 - 1e-9
}

fn intern(points: &mut Vec<Vec<C64>>, v: &[C64]) -> usize {
    match points.iter().position(|p| same_ray(p, v)) {
        Some(i) => i,
        None => {
            points.push(v.to_vec());
            points.len() - 1
        }
    }
}

fn embed(points: &mut Vec<Vec<C64>>, m: &PureStateMeasure) -> Vec<(usize, f64)> {
    m.points
        .iter()
        .zip(&m.weights)
        .map(|(p, &w)| (intern(points, p), w))
        .collect()
}

fn tv_between(a: &PureStateMeasure, b: &PureStateMeasure) -> f64 {
    let mut points = Vec::new();
    let ea = embed(&mut points, a);
    let eb = embed(&mut points, b);
    let mut wa = vec![0.0; points.len()];
    let mut wb = vec![0.0; points.len()];
    for (i, w) in ea {
        wa[i] += w;
    }
    for (i, w) in eb {
        wb[i] += w;
    }
    0.5 * wa.iter().zip(&wb).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn decomposition_measure(state: &State) -> Result<PureStateMeasure> {
    let parts = state
        .decomposition()
        .ok_or_else(|| Error::InvalidState("state carries no convex decomposition".into()))?;
    let mut points = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (w, v) in parts {
        let i = intern(&mut points, v);
        if i == weights.len() {
            weights.push(0.0);
        }
        weights[i] += w;
    }
    Ok(PureStateMeasure { points, weights })
}

/// κ_ψ[A = αᵢ] = ⟨ψ|Π(A=αᵢ)|ψ⟩
fn born_row(psi: &[C64], obs: &Observable) -> Vec<f64> {
    obs.spectrum()
        .projectors()
        .iter()
        .map(|p| {
            let pv = p.apply(psi);
            psi.iter()
                .zip(&pv)
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>()
                .re
                .max(0.0)
        })
        .collect()
}

fn born_kernel(measure: &PureStateMeasure, obs: &Observable) -> Result<MarkovKernel> {
    let rows = measure
        .points
        .iter()
        .map(|p| {
            let row = born_row(p, obs);
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();
    MarkovKernel::new(obs.name(), obs.eigenvalues().to_vec(), rows)
}

/// Born-rule model over pure-state ontic points for two decompositions of
/// one state: both reproduce the Born statistics, the measures generally
/// differ, and conditioning the measure does not give the measure of the
/// Lüders-updated state.
pub fn bb_model_demo(a: &State, b: &State, observables: &[Observable]) -> Result<BbReport> {
    let diff = a.matrix().sub(b.matrix())?.max_abs_norm();
    if diff > 1e-9 {
        return Err(Error::DecompositionMismatch(diff));
    }
    let measure_a = decomposition_measure(a)?;
    let measure_b = decomposition_measure(b)?;

    let mut born_residual_a: f64 = 0.0;
    let mut born_residual_b: f64 = 0.0;
    for obs in observables {
        let born = born_distribution(a, obs)?;
        for (measure, residual) in [
            (&measure_a, &mut born_residual_a),
            (&measure_b, &mut born_residual_b),
        ] {
            let kernel = born_kernel(measure, obs)?;
            let mu = OnticMeasure::new(measure.weights.clone())?;
            for i in 0..obs.outcome_count() {
                let p = integrate(&mu, &kernel, &Subset::singleton(i))?;
                *residual = residual.max((p - born.probabilities[i]).abs());
            }
        }
    }
    let measures_distance = tv_between(&measure_a, &measure_b);

    let mut exhibited: Option<BbUpdate> = None;
    let mu = OnticMeasure::new(measure_a.weights.clone())?;
    for obs in observables {
        let kernel = born_kernel(&measure_a, obs)?;
        // descending, so ties go to the larger eigenvalue
        for i in (0..obs.outcome_count()).rev() {
            let single = Subset::singleton(i);
            let p = integrate(&mu, &kernel, &single)?;
            if p <= CONDITIONING_FLOOR {
                continue;
            }
            let tau = model_update(&mu, &kernel, &single)?;
            let conditioned = PureStateMeasure {
                points: measure_a.points.clone(),
                weights: tau.weights().to_vec(),
            };
            let conditioned_repeatability = integrate(&tau, &kernel, &single)?;

            // Lüders update of each pure component, reweighted by pᵢ·P_ψᵢ/P_ρ.
            let mut points = Vec::new();
            let mut weights: Vec<f64> = Vec::new();
            for (l, (psi, w)) in measure_a.points.iter().zip(&measure_a.weights).enumerate() {
                let q = kernel.rows()[l][i];
                if w * q <= DEFAULT_NULL_THRESHOLD {
                    continue;
                }
                let projected = obs.projector(i).apply(psi);
                let norm = projected.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let unit: Vec<C64> = projected.iter().map(|z| z / norm).collect();
                let k = intern(&mut points, &unit);
                if k == weights.len() {
                    weights.push(0.0);
                }
                weights[k] += w * q / p;
            }
            let luders = PureStateMeasure { points, weights };
            let tv = tv_between(&conditioned, &luders);
            let better = exhibited
                .as_ref()
                .is_none_or(|e| tv > e.tv_discrepancy + 1e-12);
            if better {
                exhibited = Some(BbUpdate {
                    observable: obs.name().to_string(),
                    outcome: obs.eigenvalues()[i],
                    conditioned,
                    luders,
                    tv_discrepancy: tv,
                    conditioned_repeatability,
                });
            }
        }
    }
    let update_matches_luders = exhibited.as_ref().is_none_or(|e| e.tv_discrepancy <= 1e-9);
    Ok(BbReport {
        born_reproduced: born_residual_a <= 1e-9 && born_residual_b <= 1e-9,
        born_residual_a,
        born_residual_b,
        measures_differ: measures_distance > 1e-9,
        measures_distance,
        measure_a,
        measure_b,
        exhibited,
        update_matches_luders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;
    use crate::quantum::builtins::*;

    fn diag(name: &str, v: &[f64]) -> Observable {
        Observable::new(name, CMatrix::from_real_diagonal(v)).unwrap()
    }

    fn four_point_kernel() -> MarkovKernel {
        // f(λ) = λ for outcomes {0,1,2,3}
        MarkovKernel::deterministic("A", vec![0.0, 1.0, 2.0, 3.0], &[0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn pauli_z_with_identity() {
        let id = Observable::new("I", CMatrix::identity(2)).unwrap();
        let model = build_deterministic_model(&[sigma_z(), id]).unwrap();
        assert_eq!(model.space().size(), 2);
        let mu = model.state_map(&State::basis(2, 0)).unwrap();
        // axis pauli_z ascending: (-1, 1), (1, 1)
        assert_eq!(mu.weights(), &[0.0, 1.0]);
        let up = Subset::singleton(1);
        assert_eq!(
            model_predict(&model, &State::basis(2, 0), "pauli_z", &up).unwrap(),
            1.0
        );
    }

    #[test]
    fn incompatible_scenario_carries_witness() {
        match build_deterministic_model(&[sigma_z(), sigma_x()]) {
            Err(Error::IncompatibleScenario(w)) => {
                assert!((w.gap - 0.353_553_390_593_273_8).abs() < 1e-12)
            }
            other => panic!("expected IncompatibleScenario, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_three_level_model() {
        let model =
            build_deterministic_model(&[diag("A", &[1.0, 2.0, 2.0]), diag("B", &[3.0, 4.0, 5.0])])
                .unwrap();
        assert_eq!(model.space().size(), 6);
        let rho = State::maximally_mixed(3);
        let mu = model.state_map(&rho).unwrap();
        let at = model.space().index(&[1, 1]);
        assert!((mu.weights()[at] - 1.0 / 3.0).abs() < 1e-15);
        let nonzero = mu.weights().iter().filter(|w| **w > 0.0).count();
        assert_eq!(nonzero, 3);
        let p = model_predict(&model, &rho, "A", &Subset::singleton(1)).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        let p = model_predict(&model, &rho, "B", &Subset::full(3)).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(matches!(
            model_predict(&model, &rho, "C", &Subset::singleton(0)),
            Err(Error::UnknownObservable(_))
        ));
    }

    #[test]
    fn scenario_must_have_two_observables() {
        assert!(matches!(
            build_deterministic_model(&[sigma_z()]),
            Err(Error::ScenarioTooSmall(2))
        ));
    }

    #[test]
    fn model_update_examples() {
        let k = four_point_kernel();
        let lower = Subset::new(vec![0, 1], 4).unwrap();
        let out = model_update(&OnticMeasure::uniform(4), &k, &lower).unwrap();
        assert_eq!(out.weights(), &[0.5, 0.5, 0.0, 0.0]);

        let supported = OnticMeasure::new(vec![0.25, 0.75, 0.0, 0.0]).unwrap();
        assert_eq!(model_update(&supported, &k, &lower).unwrap(), supported);

        let mu = OnticMeasure::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let upper = Subset::new(vec![2, 3], 4).unwrap();
        let out = model_update(&mu, &k, &upper).unwrap();
        assert_eq!(out.weights()[0], 0.0);
        assert!((out.weights()[2] - 3.0 / 7.0).abs() < 1e-15);
        assert!((out.weights()[3] - 4.0 / 7.0).abs() < 1e-15);

        let empty = OnticMeasure::point_mass(4, 0);
        assert!(matches!(
            model_update(&empty, &k, &upper),
            Err(Error::NullCondition(_))
        ));
    }

    #[test]
    fn total_variation_examples() {
        let u = OnticMeasure::uniform(4);
        assert_eq!(total_variation(&u, &u).unwrap(), 0.0);
        assert_eq!(
            total_variation(
                &OnticMeasure::point_mass(4, 0),
                &OnticMeasure::point_mass(4, 3)
            )
            .unwrap(),
            1.0
        );
        let half = OnticMeasure::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(total_variation(&u, &half).unwrap(), 0.5);
        assert!(matches!(
            total_variation(&u, &OnticMeasure::uniform(3)),
            Err(Error::SpaceMismatch(4, 3))
        ));
    }

    #[test]
    fn lemma3_on_rational_toy_measure() {
        // weights are dyadic so conditioning is exact in floating point
        let mu = OnticMeasure::new(vec![0.125, 0.375, 0.25, 0.25]).unwrap();
        let k = four_point_kernel();
        let subsets: Vec<Subset> = Subset::all_nonempty(4).collect();
        let [a, b, c] = lemma3_residuals(&mu, &k, &subsets).unwrap();
        assert!(a < 1e-15, "{a}");
        assert!(b < 1e-15, "{b}");
        assert!(c < 1e-15, "{c}");
    }

    #[test]
    fn stochastic_kernel_update() {
        let k =
            MarkovKernel::new("A", vec![0.0, 1.0], vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(!k.is_deterministic());
        let out = model_update(&OnticMeasure::uniform(2), &k, &Subset::singleton(0)).unwrap();
        assert_eq!(out.weights(), &[1.0, 0.0]);
        let out = model_update(&OnticMeasure::uniform(2), &k, &Subset::singleton(1)).unwrap();
        assert!((out.weights()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(MarkovKernel::new("A", vec![0.0, 1.0], vec![vec![0.5, 0.6]]).is_err());
    }

    #[test]
    fn variation_examples() {
        let k = four_point_kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lower = Subset::new(vec![0, 1], 4).unwrap();
        let r = variation_optimality(&OnticMeasure::uniform(4), &k, &lower, 200, &mut rng, 1e-9)
            .unwrap();
        assert!((r.conditioned_distance - 0.5).abs() < 1e-15);
        assert!(r.min_sampled_distance.unwrap() >= 0.5 - 1e-12);
        assert_eq!(r.violations, 0);

        let supported = OnticMeasure::new(vec![0.25, 0.75, 0.0, 0.0]).unwrap();
        let r = variation_optimality(&supported, &k, &lower, 10, &mut rng, 1e-9).unwrap();
        assert_eq!(r.conditioned_distance, 0.0);

        let r = variation_optimality(
            &OnticMeasure::uniform(4),
            &k,
            &Subset::full(4),
            0,
            &mut rng,
            1e-9,
        )
        .unwrap();
        assert_eq!(r.conditioned_distance, 0.0);
        assert_eq!(r.checks.len(), 1);
    }

    #[test]
    fn verify_small_models() {
        let model =
            build_deterministic_model(&[diag("A", &[1.0, 2.0, 2.0]), diag("B", &[3.0, 4.0, 5.0])])
                .unwrap();
        let states = vec![
            ("mixed".to_string(), State::maximally_mixed(3)),
            (
                "psi".to_string(),
                State::pure(&[c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]).unwrap(),
            ),
        ];
        let report = verify_model(&model, &states, 1e-9).unwrap();
        assert!(report.passed(), "{report:?}");
        let k = verify_kolmogorov(&model, &states, 1e-9).unwrap();
        assert!(k.passed(), "{k:?}");
    }

    #[test]
    fn bb_two_decompositions_of_maximally_mixed() {
        let computational = State::mixture(&[
            (0.5, vec![c(1.0, 0.0), c(0.0, 0.0)]),
            (0.5, vec![c(0.0, 0.0), c(1.0, 0.0)]),
        ])
        .unwrap();
        let diagonal = State::mixture(&[(0.5, ket_plus()), (0.5, ket_minus())]).unwrap();
        let obs = [sigma_x(), sigma_y(), sigma_z()];
        let r = bb_model_demo(&computational, &diagonal, &obs).unwrap();
        assert!(r.born_reproduced);
        assert!(r.measures_differ);
        assert!((r.measures_distance - 1.0).abs() < 1e-12);
        assert!(!r.update_matches_luders);
        let e = r.exhibited.unwrap();
        assert_eq!(e.observable, "pauli_x");
        assert_eq!(e.outcome, 1.0);
        assert_eq!(e.conditioned.weights, vec![0.5, 0.5]);
        assert_eq!(e.luders.points.len(), 1);
        assert!((e.tv_discrepancy - 1.0).abs() < 1e-12);
        assert!((e.conditioned_repeatability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bb_pure_state_and_mismatch() {
        let p = State::pure(&ket_plus()).unwrap();
        let r = bb_model_demo(&p, &p, &[sigma_x(), sigma_z()]).unwrap();
        assert!(!r.measures_differ);
        assert_eq!(r.measure_a.points.len(), 1);

        let zero = State::basis(2, 0);
        assert!(matches!(
            bb_model_demo(&p, &zero, &[sigma_z()]),
            Err(Error::DecompositionMismatch(_))
        ));
    }

    #[test]
    fn orderings_cover_all_permutations() {
        assert_eq!(orderings(3).len(), 6);
        assert_eq!(orderings(5).len(), 120);
        assert_eq!(orderings(7).len(), 14);
    }
}
