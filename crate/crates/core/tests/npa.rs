mod common;

use lfic_core::npa::{self, Level, Relations, SeesawOptions};
use lfic_core::quantum::{behavior_from_realization, CMat, QuantumRealization, C64};
use lfic_core::{presets, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Operator `Σ c_{abxy} E_{x,a} ⊗ F_{y,b} + offset·1` of a functional.
fn bell_operator(f: &lfic_core::BellFunctional, alice: &[Vec<CMat>], bob: &[Vec<CMat>]) -> CMat {
    let s = f.scenario();
    let d = alice[0][0].nrows() * bob[0][0].nrows();
    let mut op = CMat::identity(d, d) * C64::new(lfic_core::rational::to_f64(f.offset()), 0.0);
    for e in s.entries() {
        let c = lfic_core::rational::to_f64(&f.coefficients()[s.index(e.a, e.b, e.x, e.y)]);
        if c != 0.0 {
            op += alice[e.x][e.a].kronecker(&bob[e.y][e.b]) * C64::new(c, 0.0);
        }
    }
    op
}

#[test]
fn chsh_bound_dominates_every_qubit_strategy() {
    let f = npa::chsh();
    let prog = npa::build_moment_program(f.scenario(), Some(&f), Level::One, Relations::Standard).unwrap();
    let bound = npa::sdp_solve(&prog).unwrap().bound;
    assert!((bound - 2f64.sqrt()).abs() < 1e-5, "{bound}");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut best: f64 = f64::NEG_INFINITY;
    for _ in 0..200 {
        let alice: Vec<Vec<CMat>> = (0..2).map(|_| common::random_projective(2, 2, &mut rng)).collect();
        let bob: Vec<Vec<CMat>> = (0..2).map(|_| common::random_projective(2, 2, &mut rng)).collect();
        let eig = bell_operator(&f, &alice, &bob).symmetric_eigen();
        let (i, top) = eig.eigenvalues.iter().enumerate().fold((0, f64::NEG_INFINITY), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
        // the top eigenvector realises the operator norm
        let psi = eig.eigenvectors.column(i).into_owned();
        let r = QuantumRealization::pure(&psi, alice, bob).unwrap();
        let value = f.evaluate(&behavior_from_realization(&r)).unwrap().to_f64();
        assert!((value - top).abs() < 1e-9);
        assert!(top <= bound + 1e-7);
        best = best.max(top);
    }
    assert!(best > 1.3, "random search reaches near the bound: {best}");
}

#[test]
fn bounds_tighten_with_the_level() {
    let s = Scenario::main();
    let z1 = presets::z1();
    let mut last = f64::NEG_INFINITY;
    for level in [Level::One, Level::OneAB, Level::Two] {
        let prog = npa::build_moment_program(&s, Some(&z1), level, Relations::QueryComplete).unwrap();
        let b = npa::sdp_solve(&prog).unwrap().bound;
        assert!(b >= last - 1e-6, "{level}: {b} < {last}");
        assert!(b <= (1.0 - 2f64.sqrt()) / 2.0 + 1e-8, "{level}: {b} above the attained value");
        last = b;
    }
    let no_bb = npa::build_moment_program(&s, Some(&z1), Level::TwoNoBB, Relations::QueryComplete).unwrap();
    assert!((npa::sdp_solve(&no_bb).unwrap().bound - last).abs() < 1e-5);
}

#[test]
fn realized_behaviors_are_feasible_at_level_two() {
    let s = Scenario::main();
    let prog = npa::build_moment_program(&s, None, Level::Two, Relations::Standard).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..4 {
        let r = common::random_realization((3, 3, 3), (2, 2, 2), &mut rng);
        assert!(npa::is_feasible(&prog, &behavior_from_realization(&r)).unwrap());
    }
    let qc = npa::build_moment_program(&s, None, Level::Two, Relations::QueryComplete).unwrap();
    let q1 = presets::q1_realization().with_white_noise(0.9).unwrap();
    assert!(npa::is_feasible(&qc, &behavior_from_realization(&q1)).unwrap());
}

#[test]
fn signalling_points_are_rejected() {
    let s = Scenario::main();
    let prog = npa::build_moment_program(&s, None, Level::One, Relations::Standard).unwrap();
    let mut v = vec![0.0; s.dim()];
    for x in 0..3 {
        for y in 0..2 {
            // Alice's output copies Bob's input
            v[s.index(y, 0, x, y)] = 1.0;
        }
    }
    let p = lfic_core::Behavior::float(s, v).unwrap();
    assert!(npa::is_feasible(&prog, &p).is_err() || !npa::is_feasible(&prog, &p).unwrap());
}

#[test]
fn seesaw_values_sit_above_the_relaxation() {
    let s = Scenario::main();
    for f in [presets::z1(), presets::z2()] {
        let prog = npa::build_moment_program(&s, Some(&f), Level::Two, Relations::QueryComplete).unwrap();
        let bound = npa::sdp_solve(&prog).unwrap().bound;
        let opts = SeesawOptions { relations: Relations::QueryComplete, restarts: 3, seed: 1, ..Default::default() };
        let r = npa::seesaw_lower_bound(&f, &opts).unwrap();
        assert!(r.value >= bound - 1e-4, "{} < {bound}", r.value);
        assert!(r.value <= (1.0 - 2f64.sqrt()) / 2.0 + 1e-4, "see-saw should find the optimum: {}", r.value);
        let direct = f.evaluate(&behavior_from_realization(&r.realization)).unwrap().to_f64();
        assert!((direct - r.value).abs() < 1e-9);
    }
}
