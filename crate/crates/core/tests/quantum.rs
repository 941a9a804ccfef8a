mod common;

use lfic_core::quantum::{behavior_from_realization, CMat, QuantumRealization, C64};
use lfic_core::{presets, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `⟨ψ|E ⊗ F|ψ⟩` through the reshaped amplitude matrix `Ψ`:
/// `(E ⊗ F)ψ ↔ E Ψ Fᵀ`.
fn reshaped_probability(psi: &CMat, e: &CMat, f: &CMat) -> f64 {
    let image = e * psi * f.transpose();
    psi.iter().zip(image.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

#[test]
fn born_rule_matches_the_reshaped_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let (da, db) = (3, 2);
        let alice: Vec<Vec<CMat>> = (0..3).map(|_| common::random_projective(da, 3, &mut rng)).collect();
        let bob: Vec<Vec<CMat>> = (0..2).map(|_| common::random_projective(db, 2, &mut rng)).collect();
        let v = common::random_state(da * db, &mut rng);
        let psi = CMat::from_fn(da, db, |i, j| v[i * db + j]);
        let r = QuantumRealization::pure(&v, alice.clone(), bob.clone()).unwrap();
        let p = behavior_from_realization(&r).to_f64_vec();
        let s = Scenario::main();
        for e in s.entries() {
            let direct = reshaped_probability(&psi, &alice[e.x][e.a], &bob[e.y][e.b]);
            assert!((p[s.index(e.a, e.b, e.x, e.y)] - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn realized_behaviors_are_no_signalling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = Scenario::main();
    for _ in 0..20 {
        let r = common::random_realization((3, 3, 3), (2, 2, 2), &mut rng);
        let p = behavior_from_realization(&r);
        let v = p.to_f64_vec();
        for x in 0..3 {
            for a in 0..3 {
                let m: Vec<f64> = (0..2).map(|y| (0..2).map(|b| v[s.index(a, b, x, y)]).sum()).collect();
                assert!((m[0] - m[1]).abs() < 1e-12);
            }
        }
        for y in 0..2 {
            for b in 0..2 {
                let m: Vec<f64> = (0..3).map(|x| (0..3).map(|a| v[s.index(a, b, x, y)]).sum()).collect();
                assert!((m[0] - m[1]).abs() < 1e-12 && (m[1] - m[2]).abs() < 1e-12);
            }
        }
        let r = p.validate();
        assert!(r.nonnegative && r.normalized && r.no_signaling);
    }
}

#[test]
fn invalid_measurements_are_rejected() {
    let mut e = vec![CMat::identity(2, 2), CMat::zeros(2, 2)];
    e[1][(0, 0)] = C64::new(0.5, 0.0);
    let bob = vec![vec![CMat::identity(2, 2), CMat::zeros(2, 2)]];
    let psi = common::random_state(4, &mut ChaCha8Rng::seed_from_u64(0));
    assert!(QuantumRealization::pure(&psi, vec![e], bob).is_err());
}

#[test]
fn reference_points_violate_their_facets_by_the_same_amount() {
    let z = (1.0 - 2f64.sqrt()) / 2.0;
    let q1 = behavior_from_realization(&presets::q1_realization());
    let q2 = behavior_from_realization(&presets::q2_realization());
    assert!((presets::z1().evaluate(&q1).unwrap().to_f64() - z).abs() < 1e-12);
    assert!((presets::z2().evaluate(&q2).unwrap().to_f64() - z).abs() < 1e-12);
    // the table and the realization agree
    let t = presets::tabulated("Q1").unwrap().to_f64_vec();
    let max = t.iter().zip(q1.to_f64_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(max < 1e-9, "{max}");
}
