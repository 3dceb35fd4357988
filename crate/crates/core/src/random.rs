//! Seeded generators for random Hermitian matrices, unitaries, states and
//! observables. Used by the verification suites, the examples and tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::{c, jacobi_eigen, CMatrix, C64};
use crate::quantum::{Observable, State};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// (X + X†)/2 with independent standard normal real and imaginary parts.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let mut x = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            x[(i, j)] = c(gaussian(rng), gaussian(rng));
        }
    }
    x.hermitian_part()
}

/// Eigenvector matrix of a random Hermitian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let h = random_hermitian(rng, dim);
    let (_, vecs) = jacobi_eigen(&h).expect("Jacobi converges on random Hermitian input");
    let mut u = CMatrix::zeros(dim);
    for (j, v) in vecs.iter().enumerate() {
        for (i, z) in v.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    u
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| c(gaussian(rng), gaussian(rng))).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> State {
    State::pure(&random_vector(rng, dim)).expect("unit vector")
}

/// Mixture of `terms` random pure states with uniform-then-normalised
/// weights; carries its decomposition.
pub fn random_mixed_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, terms: usize) -> State {
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let parts: Vec<(f64, Vec<C64>)> = weights
        .into_iter()
        .map(|w| (w, random_vector(rng, dim)))
        .collect();
    State::mixture(&parts).expect("valid mixture")
}

/// Random state: pure with probability ½, otherwise a mixture of up to
/// `dim + 1` pure states.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> State {
    if rng.random_bool(0.5) {
        random_pure_state(rng, dim)
    } else {
        let terms = rng.random_range(2..=dim + 1);
        random_mixed_state(rng, dim, terms)
    }
}

/// U·diag(values)·U†
pub fn conjugate_diagonal(u: &CMatrix, values: &[f64]) -> CMatrix {
    u.mul(&CMatrix::from_real_diagonal(values))
        .mul(&u.adjoint())
}

/// Random eigenvalue list drawn from a small integer alphabet so that
/// degenerate spectra appear regularly.
pub fn random_eigenvalues<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-3..=3) as f64).collect()
}

pub fn random_observable<R: Rng + ?Sized>(rng: &mut R, name: &str, dim: usize) -> Observable {
    Observable::new(name, random_hermitian(rng, dim)).expect("random Hermitian decomposes")
}

/// Observables sharing one random eigenbasis, hence pairwise compatible.
pub fn random_commuting_family<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    count: usize,
) -> Vec<Observable> {
    let u = random_unitary(rng, dim);
    (0..count)
        .map(|k| {
            let values = random_eigenvalues(rng, dim);
            Observable::new(format!("A{k}"), conjugate_diagonal(&u, &values))
                .expect("Hermitian by construction")
        })
        .collect()
}

/// A random observable and a unitarily rotated copy that is generically
/// incompatible with it. The caller should still confirm the verdict.
pub fn random_rotated_pair<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> (Observable, Observable) {
    let u = random_unitary(rng, dim);
    let w = random_unitary(rng, dim);
    let values: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
    let a = conjugate_diagonal(&u, &values);
    let b = w.mul(&a).mul(&w.adjoint());
    (
        Observable::new("A", a).expect("Hermitian"),
        Observable::new("B", b).expect("Hermitian"),
    )
}

/// Uniformly random nonempty subset of `0..n`, as sorted indices.
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}
