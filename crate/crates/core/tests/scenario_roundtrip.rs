use luders::random::{random_hermitian, random_vector};
use luders::scenario::{MixtureTerm, ObservableSpec, ScenarioFile, StateSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn file_for(seed: u64, dim: usize, n_obs: usize) -> ScenarioFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let observables = (0..n_obs)
        .map(|k| {
            let m = random_hermitian(&mut rng, dim);
            ObservableSpec {
                name: format!("O{k}"),
                matrix: Some(
                    m.rows()
                        .iter()
                        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                        .collect(),
                ),
                builtin: None,
            }
        })
        .collect();
    let vecs: Vec<_> = (0..2).map(|_| random_vector(&mut rng, dim)).collect();
    let mut states: Vec<StateSpec> = vecs
        .iter()
        .enumerate()
        .map(|(k, v)| StateSpec {
            name: format!("v{k}"),
            density: None,
            vector: Some(v.iter().map(|z| [z.re, z.im]).collect()),
            mixture: None,
        })
        .collect();
    states.push(StateSpec {
        name: "mix".into(),
        density: None,
        vector: None,
        mixture: Some(vec![
            MixtureTerm {
                weight: 0.375,
                state: "v0".into(),
            },
            MixtureTerm {
                weight: 0.625,
                state: "v1".into(),
            },
        ]),
    });
    ScenarioFile {
        dimension: dim,
        observables,
        states,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>(), dim in 1usize..=5, n_obs in 1usize..=4) {
        let file = file_for(seed, dim, n_obs);
        let back = ScenarioFile::from_json(&file.to_json()).unwrap();
        prop_assert_eq!(&back, &file);
        let a = file.resolve().unwrap();
        let b = back.resolve().unwrap();
        for (x, y) in a.observables.iter().zip(&b.observables) {
            prop_assert!(x.matrix().sub(y.matrix()).unwrap().max_abs_norm() <= 1e-15);
        }
        for ((_, x), (_, y)) in a.states.iter().zip(&b.states) {
            prop_assert!(x.matrix().sub(y.matrix()).unwrap().max_abs_norm() <= 1e-15);
        }
    }
}

#[test]
fn shipped_scenarios_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let file = ScenarioFile::load(&path).unwrap();
        file.resolve()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 5);
}
