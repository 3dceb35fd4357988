//! Property tests for the quantum layer. Oracles build spectral projectors
//! directly from the known eigenbasis of each generated observable.

use luders::compat::{bayes_residual, is_compatible, max_order_gap, DEFAULT_COMPAT_TOL};
use luders::matrix::{jacobi_eigen, CMatrix};
use luders::quantum::{
    apply_function, born_distribution, expectation, joint_distribution_compatible, luders_update,
    probability, sequential_distribution, Observable, Proposition, State, Subset,
};
use luders::random::{
    conjugate_diagonal, random_commuting_family, random_eigenvalues, random_rotated_pair,
    random_state, random_subset, random_unitary,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Observable with a known eigenbasis plus its oracle projectors, keyed by
/// ascending distinct eigenvalue.
fn known_observable(rng: &mut ChaCha8Rng, dim: usize) -> (Observable, Vec<CMatrix>) {
    let u = random_unitary(rng, dim);
    let values = random_eigenvalues(rng, dim);
    let obs = Observable::new("A", conjugate_diagonal(&u, &values)).unwrap();
    let mut distinct = values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let projectors = distinct
        .iter()
        .map(|v| {
            let mut p = CMatrix::zeros(dim);
            for (j, _) in values.iter().enumerate().filter(|(_, x)| *x == v) {
                let col: Vec<Complex64> = (0..dim).map(|i| u[(i, j)]).collect();
                p = p.add(&CMatrix::outer(&col)).unwrap();
            }
            p
        })
        .collect();
    (obs, projectors)
}

fn oracle_update(rho: &CMatrix, projectors: &[CMatrix], subset: &[usize]) -> CMatrix {
    let mut num = CMatrix::zeros(rho.dim());
    for &i in subset {
        let p = &projectors[i];
        num = num.add(&p.matmul(rho).unwrap().matmul(p).unwrap()).unwrap();
    }
    let tr = num.trace().re;
    num.scale_real(1.0 / tr)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn born_distribution_matches_oracle(seed in any::<u64>(), dim in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (obs, projectors) = known_observable(&mut rng, dim);
        let rho = random_state(&mut rng, dim);
        let dist = born_distribution(&rho, &obs).unwrap();
        prop_assert_eq!(dist.probabilities.len(), projectors.len());
        for (p, proj) in dist.probabilities.iter().zip(&projectors) {
            let oracle = rho.matrix().matmul(proj).unwrap().trace().re;
            prop_assert!((p - oracle).abs() < 1e-10);
        }
        prop_assert!((dist.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn luders_update_matches_oracle(seed in any::<u64>(), dim in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (obs, projectors) = known_observable(&mut rng, dim);
        let rho = random_state(&mut rng, dim);
        let subset = Subset::new(random_subset(&mut rng, obs.outcome_count()), obs.outcome_count()).unwrap();
        let prop = Proposition::new(&obs, subset.clone()).unwrap();
        prop_assume!(probability(&rho, &prop).unwrap() > 1e-6);
        let t = luders_update(&rho, &prop).unwrap();
        let oracle = oracle_update(rho.matrix(), &projectors, subset.indices());
        prop_assert!(t.matrix().sub(&oracle).unwrap().max_abs_norm() < 1e-9);
        prop_assert!((probability(&t, &prop).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((t.matrix().trace().re - 1.0).abs() < 1e-12);
        let (eigs, _) = jacobi_eigen(t.matrix()).unwrap();
        prop_assert!(eigs[0] > -1e-10);
        let again = luders_update(&t, &prop).unwrap();
        prop_assert!(again.matrix().sub(t.matrix()).unwrap().max_abs_norm() < 1e-9);
    }

    #[test]
    fn updates_compose_by_intersection(seed in any::<u64>(), dim in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (obs, _) = known_observable(&mut rng, dim);
        let n = obs.outcome_count();
        let rho = random_state(&mut rng, dim);
        let d1 = Subset::new(random_subset(&mut rng, n), n).unwrap();
        let d2 = Subset::new(random_subset(&mut rng, n), n).unwrap();
        let Some(both) = d1.intersection(&d2) else { return Ok(()) };
        let p_both = probability(&rho, &Proposition::new(&obs, both.clone()).unwrap()).unwrap();
        prop_assume!(p_both > 1e-6);
        let twice = luders_update(&luders_update(&rho, &Proposition::new(&obs, d1).unwrap()).unwrap(), &Proposition::new(&obs, d2).unwrap()).unwrap();
        let once = luders_update(&rho, &Proposition::new(&obs, both).unwrap()).unwrap();
        prop_assert!(twice.matrix().sub(once.matrix()).unwrap().max_abs_norm() < 1e-9);
    }

    #[test]
    fn function_expectation_is_weighted_sum(seed in any::<u64>(), dim in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (obs, _) = known_observable(&mut rng, dim);
        let rho = random_state(&mut rng, dim);
        let table: Vec<f64> = obs.eigenvalues().iter().map(|a| (a * a) - 2.0 * a).collect();
        let g = apply_function(&obs, &table, "g").unwrap();
        let dist = born_distribution(&rho, &obs).unwrap();
        let direct: f64 = table.iter().zip(&dist.probabilities).map(|(g, p)| g * p).sum();
        prop_assert!((expectation(&rho, &g).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn commuting_families_are_order_independent(seed in any::<u64>(), dim in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = random_commuting_family(&mut rng, dim, 3);
        let rho = random_state(&mut rng, dim);
        let refs: Vec<&Observable> = family.iter().collect();
        let joint = joint_distribution_compatible(&rho, &refs).unwrap();
        let forward = sequential_distribution(&rho, &refs).unwrap();
        let reversed: Vec<&Observable> = refs.iter().rev().copied().collect();
        let backward = sequential_distribution(&rho, &reversed).unwrap();
        prop_assert!(joint.max_abs_diff_aligned(&forward).unwrap() < 1e-9);
        prop_assert!(joint.max_abs_diff_aligned(&backward).unwrap() < 1e-9);
        let (a, b) = (&family[0], &family[1]);
        prop_assert!(is_compatible(a, b, DEFAULT_COMPAT_TOL).unwrap().is_compatible());
        for da in Subset::all_nonempty(a.outcome_count()) {
            for db in Subset::all_nonempty(b.outcome_count()) {
                prop_assert!(bayes_residual(&rho, a, &da, b, &db).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn rotated_pairs_have_reproducible_witnesses(seed in any::<u64>(), dim in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_rotated_pair(&mut rng, dim);
        prop_assume!(!is_compatible(&a, &b, DEFAULT_COMPAT_TOL).unwrap().is_compatible());
        let w = max_order_gap(&a, &b).unwrap();
        prop_assert!(w.gap >= 1e-6);
        prop_assert!((w.gap - w.sequential_gap).abs() < 1e-9);
    }
}

#[test]
fn mixture_state_keeps_its_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s = luders::random::random_mixed_state(&mut rng, 3, 4);
    let parts = s.decomposition().unwrap();
    assert_eq!(parts.len(), 4);
    let rebuilt = State::mixture(parts).unwrap();
    assert!(rebuilt.matrix().sub(s.matrix()).unwrap().max_abs_norm() < 1e-15);
}
