#![allow(dead_code)]

use lfic_core::geometry::Constraint;
use lfic_core::quantum::{CMat, CVec, QuantumRealization, C64};
use lfic_core::BellFunctional;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut h = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = if i == j { 0.0 } else { rng.random_range(-1.0..1.0) };
            h[(i, j)] = C64::new(re, im);
            h[(j, i)] = C64::new(re, -im);
        }
    }
    h
}

/// Orthonormal basis (columns) from the eigenvectors of a random Hermitian matrix.
pub fn random_basis(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    random_hermitian(d, rng).symmetric_eigen().eigenvectors
}

/// Projective measurement with `k` outcomes; basis vector `i` goes to outcome `i mod k`.
pub fn random_projective(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<CMat> {
    let u = random_basis(d, rng);
    (0..k)
        .map(|o| {
            let mut p = CMat::zeros(d, d);
            for i in (0..d).filter(|i| i % k == o) {
                let c = u.column(i);
                p += &c * c.adjoint();
            }
            p
        })
        .collect()
}

pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    let v = CVec::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Random pure-state realization with `ai` inputs and `ao` outcomes for Alice
/// on dimension `da`, likewise for Bob.
pub fn random_realization(
    (ai, ao, da): (usize, usize, usize),
    (bi, bo, db): (usize, usize, usize),
    rng: &mut ChaCha8Rng,
) -> QuantumRealization {
    let alice = (0..ai).map(|_| random_projective(da, ao, rng)).collect();
    let bob = (0..bi).map(|_| random_projective(db, bo, rng)).collect();
    let psi = random_state(da * db, rng);
    QuantumRealization::pure(&psi, alice, bob).expect("random realization is valid")
}

pub fn as_constraint(f: &BellFunctional) -> Constraint {
    let g = f.as_lower_bound();
    Constraint::new(g.coefficients().to_vec(), g.offset().clone())
}
