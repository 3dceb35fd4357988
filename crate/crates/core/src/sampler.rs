//! Seeded Monte Carlo simulation of sequential measurements.
//!
//! Shot `k` draws from its own ChaCha8 stream (`seed`, stream `k`), so the
//! tally is independent of how shots are split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    born_distribution, luders_update_with, table_size, Observable, Proposition,
    SequentialDistribution, State, DEFAULT_NULL_THRESHOLD, DEFAULT_SPACE_CAP,
};

const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub seed: u64,
    pub shots: u64,
    pub sequence: Vec<String>,
    pub supports: Vec<Vec<f64>>,
    /// Tally per outcome tuple, in lexicographic tuple order.
    pub counts: Vec<u64>,
}

impl ShotRecord {
    pub fn shape(&self) -> Vec<usize> {
        self.supports.iter().map(Vec::len).collect()
    }

    pub fn tuple_of(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut t = vec![0; shape.len()];
        for k in (0..shape.len()).rev() {
            t[k] = flat % shape[k];
            flat /= shape[k];
        }
        t
    }

    pub fn frequency(&self, flat: usize) -> f64 {
        self.counts[flat] as f64 / self.shots as f64
    }
}

/// Conditional outcome CDFs for every reachable prefix of the sequence.
struct PrefixTree {
    shape: Vec<usize>,
    /// `levels[k][prefix]` is the CDF of step `k` given the flat prefix index.
    levels: Vec<Vec<Option<Vec<f64>>>>,
}

impl PrefixTree {
    fn build(rho: &State, seq: &[&Observable]) -> Result<Self> {
        let shape: Vec<usize> = seq.iter().map(|o| o.outcome_count()).collect();
        let mut levels: Vec<Vec<Option<Vec<f64>>>> = Vec::with_capacity(seq.len());
        let mut width = 1usize;
        for n in &shape {
            levels.push(vec![None; width]);
            width *= n;
        }
        Self::fill(rho, seq, 0, 0, &mut levels)?;
        Ok(PrefixTree { shape, levels })
    }

    fn fill(
        state: &State,
        seq: &[&Observable],
        depth: usize,
        prefix: usize,
        levels: &mut [Vec<Option<Vec<f64>>>],
    ) -> Result<()> {
        let obs = seq[depth];
        let probs = born_distribution(state, obs)?.probabilities;
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p.max(0.0);
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|x| *x /= acc);
        levels[depth][prefix] = Some(cdf);
        if depth + 1 < seq.len() {
            for (i, &p) in probs.iter().enumerate() {
                if p <= DEFAULT_NULL_THRESHOLD {
                    continue;
                }
                let next = luders_update_with(
                    state,
                    &Proposition::equals(obs, i)?,
                    DEFAULT_NULL_THRESHOLD,
                )?;
                Self::fill(&next, seq, depth + 1, prefix * probs.len() + i, levels)?;
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let mut flat = 0;
        for (k, n) in self.shape.iter().enumerate() {
            let cdf = self.levels[k][flat]
                .as_ref()
                .expect("sampled prefix is reachable");
            let u: f64 = rng.random();
            let i = cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
                // u landed above a CDF that rounded below 1; take the last live outcome
                (0..*n)
                    .rev()
                    .find(|&j| j == 0 || cdf[j] > cdf[j - 1])
                    .unwrap_or(0)
            });
            flat = flat * n + i;
        }
        flat
    }
}

fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Measures `seq` in order on `shots` fresh copies of `rho`, drawing each
/// outcome from the Born distribution of the state updated by the outcomes
/// so far.
pub fn run_shots(rho: &State, seq: &[&Observable], shots: u64, seed: u64) -> Result<ShotRecord> {
    let (tree, size) = prepare(rho, seq, shots)?;
    let chunks = shots.div_ceil(CHUNK as u64);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = vec![0u64; size];
            let end = ((c + 1) * CHUNK as u64).min(shots);
            for shot in c * CHUNK as u64..end {
                local[tree.sample(&mut shot_rng(seed, shot))] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; size],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(record(seq, shots, seed, counts))
}

/// Single-threaded reference for [`run_shots`]; produces identical counts.
pub fn run_shots_serial(
    rho: &State,
    seq: &[&Observable],
    shots: u64,
    seed: u64,
) -> Result<ShotRecord> {
    let (tree, size) = prepare(rho, seq, shots)?;
    let mut counts = vec![0u64; size];
    for shot in 0..shots {
        counts[tree.sample(&mut shot_rng(seed, shot))] += 1;
    }
    Ok(record(seq, shots, seed, counts))
}

fn prepare(rho: &State, seq: &[&Observable], shots: u64) -> Result<(PrefixTree, usize)> {
    if shots == 0 {
        return Err(Error::InvalidState("shots must be at least 1".into()));
    }
    if seq.is_empty() {
        return Err(Error::ScenarioTooSmall(1));
    }
    let size = table_size(seq, DEFAULT_SPACE_CAP)?;
    Ok((PrefixTree::build(rho, seq)?, size))
}

fn record(seq: &[&Observable], shots: u64, seed: u64, counts: Vec<u64>) -> ShotRecord {
    ShotRecord {
        seed,
        shots,
        sequence: seq.iter().map(|o| o.name().to_string()).collect(),
        supports: seq.iter().map(|o| o.eigenvalues().to_vec()).collect(),
        counts,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleDeviation {
    pub outcome: Vec<f64>,
    pub count: u64,
    pub empirical: f64,
    pub analytic: f64,
    pub deviation: f64,
    pub bound: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalComparison {
    pub shots: u64,
    pub tuples: Vec<TupleDeviation>,
    pub max_deviation: f64,
    pub flagged: usize,
}

impl EmpiricalComparison {
    pub fn flag_rate(&self) -> f64 {
        self.flagged as f64 / self.tuples.len() as f64
    }
}

/// 4·√(p(1−p)/shots) + 1/shots
pub fn deviation_bound(p: f64, shots: u64) -> f64 {
    let n = shots as f64;
    4.0 * (p * (1.0 - p) / n).max(0.0).sqrt() + 1.0 / n
}

/// Per-tuple deviation of observed frequencies from an analytic table.
pub fn compare_empirical(
    record: &ShotRecord,
    analytic: &SequentialDistribution,
) -> Result<EmpiricalComparison> {
    if record.sequence.as_slice() != analytic.axes()
        || record.supports.as_slice() != analytic.supports()
    {
        return Err(Error::AxisMismatch);
    }
    let mut tuples = Vec::with_capacity(record.counts.len());
    let mut max_deviation: f64 = 0.0;
    let mut flagged = 0;
    for (flat, (&count, &p)) in record.counts.iter().zip(analytic.table()).enumerate() {
        let empirical = record.frequency(flat);
        let deviation = (empirical - p).abs();
        let bound = deviation_bound(p, record.shots);
        let flag = deviation > bound;
        flagged += flag as usize;
        max_deviation = max_deviation.max(deviation);
        tuples.push(TupleDeviation {
            outcome: analytic.values_of(&record.tuple_of(flat)),
            count,
            empirical,
            analytic: p,
            deviation,
            bound,
            flagged: flag,
        });
    }
    Ok(EmpiricalComparison {
        shots: record.shots,
        tuples,
        max_deviation,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::builtins::*;
    use crate::quantum::sequential_distribution;

    #[test]
    fn eigenstate_is_deterministic() {
        let z = sigma_z();
        let r = run_shots(&State::basis(2, 0), &[&z], 1000, 3).unwrap();
        // ascending support (-1, +1)
        assert_eq!(r.counts, vec![0, 1000]);
    }

    #[test]
    fn z_then_x_frequency() {
        let (z, x) = (sigma_z(), sigma_x());
        let rho = State::basis(2, 0);
        let r = run_shots(&rho, &[&z, &x], 100_000, 11).unwrap();
        assert_eq!(r.counts.iter().sum::<u64>(), 100_000);
        let plus_plus = r.frequency(3);
        assert!((plus_plus - 0.5).abs() < 0.01, "{plus_plus}");
        let cmp =
            compare_empirical(&r, &sequential_distribution(&rho, &[&z, &x]).unwrap()).unwrap();
        assert_eq!(cmp.flagged, 0);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let (z, x, y) = (sigma_z(), sigma_x(), sigma_y());
        let rho = State::maximally_mixed(2);
        let a = run_shots(&rho, &[&x, &y, &z], 20_000, 42).unwrap();
        let b = run_shots(&rho, &[&x, &y, &z], 20_000, 42).unwrap();
        let s = run_shots_serial(&rho, &[&x, &y, &z], 20_000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, s);
        let c = run_shots(&rho, &[&x, &y, &z], 20_000, 43).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn comparison_edge_cases() {
        let z = sigma_z();
        let rho = State::basis(2, 0);
        let analytic = sequential_distribution(&rho, &[&z]).unwrap();
        let r = run_shots(&rho, &[&z], 1, 0).unwrap();
        let cmp = compare_empirical(&r, &analytic).unwrap();
        assert_eq!(cmp.max_deviation, 0.0);
        assert!(cmp.tuples.iter().all(|t| t.bound == 1.0));

        let x = sigma_x();
        let other = sequential_distribution(&rho, &[&x]).unwrap();
        assert!(matches!(
            compare_empirical(&r, &other),
            Err(Error::AxisMismatch)
        ));
        assert!(run_shots(&rho, &[&z], 0, 0).is_err());
    }

    #[test]
    fn uniform_bound_value() {
        let b = deviation_bound(0.25, 100_000);
        assert!((b - (4.0 * (0.1875f64 / 1e5).sqrt() + 1e-5)).abs() < 1e-15);
        assert!((b - 0.005_487).abs() < 1e-6);
    }
}
