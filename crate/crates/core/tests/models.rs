mod common;

use lfic_core::geometry::{affine_hull_of, Constraint};
use lfic_core::models::{self, ModelKind, Verdict};
use lfic_core::quantum::behavior_from_realization;
use lfic_core::rational::{q, qi};
use lfic_core::{presets, symmetry, Behavior, Scenario, Q};
use num_traits::Zero;

fn vertices(k: ModelKind) -> Vec<Vec<Q>> {
    k.model().vertices(&Scenario::main()).unwrap().vertices.clone()
}

#[test]
fn hull_inclusions() {
    let s = Scenario::main();
    let lfic = ModelKind::Lfic.model().vertices(&s).unwrap();
    let ns = ModelKind::Ns.model().hrep(&s).unwrap();
    for v in vertices(ModelKind::Lf) {
        assert!(models::convex_decomposition(&lfic, &v).is_ok(), "LF vertex outside LFIC");
    }
    for v in &lfic.vertices {
        assert!(ns.contains(v), "LFIC vertex outside NS");
    }
    // LHV strategies may answer the query inconsistently with any c, so
    // LHV is not a subset of LFIC
    let lhv = vertices(ModelKind::Lhv);
    let outside = lhv.iter().filter(|v| models::convex_decomposition(&lfic, v).is_err()).count();
    assert!(outside > 0 && outside < lhv.len(), "{outside} of {} LHV vertices outside", lhv.len());
}

/// Block `c`: Bob uniform; Alice answers `a = c` on `x = c` and picks
/// uniformly among `a ≠ x` otherwise.
fn uniform_block(s: &Scenario, c: usize) -> Vec<Q> {
    let mut p = vec![Q::zero(); s.dim()];
    for x in 0..3 {
        for y in 0..2 {
            for b in 0..2 {
                for a in 0..3 {
                    let pa = if x == c {
                        if a == c { qi(1) } else { qi(0) }
                    } else if a != x {
                        q(1, 2)
                    } else {
                        qi(0)
                    };
                    p[s.index(a, b, x, y)] = pa * q(1, 2);
                }
            }
        }
    }
    p
}

#[test]
fn uniform_behavior_has_the_expected_decomposition() {
    let s = Scenario::main();
    let mut mix = vec![Q::zero(); s.dim()];
    for c in 0..3 {
        let block = uniform_block(&s, c);
        assert!(models::lfic_block_hrep(&s, c).unwrap().contains(&block), "block {c}");
        for (m, b) in mix.iter_mut().zip(&block) {
            *m += b * q(1, 3);
        }
    }
    assert_eq!(Behavior::exact(s, mix).unwrap(), Behavior::uniform(s));
    let r = models::membership(&Behavior::uniform(s), ModelKind::Lfic).unwrap();
    assert!(r.is_inside());
    assert!(models::verify_report(&r, &ModelKind::Lfic.model().vertices(&s).unwrap()));
}

#[test]
fn q1_is_separated_by_a_z1_equivalent_facet() {
    let s = Scenario::main();
    let q1 = behavior_from_realization(&presets::q1_realization());
    let r = models::membership(&q1, ModelKind::Lfic).unwrap();
    let lfic = ModelKind::Lfic.model().vertices(&s).unwrap();
    assert!(models::verify_report(&r, &lfic));
    let Verdict::Outside { functional, value } = &r.verdict else { panic!("Q1 inside LFIC") };
    assert!(*value < Q::zero());
    let chart = affine_hull_of(s.dim(), &lfic.vertices).unwrap();
    let cert = common::as_constraint(functional);
    let z1 = common::as_constraint(&presets::z1());
    let group = symmetry::stabilizer_group(&lfic, &s);
    let orbits = symmetry::classify_facets(&s, &[z1.clone()], &chart, &group);
    assert_eq!(symmetry::locate(&orbits, &chart, &cert), Some(0), "certificate not a relabelled Z1");
}

#[test]
fn memberships_of_the_reference_points() {
    let s = Scenario::main();
    let n0 = presets::n0();
    assert!(models::membership(&n0, ModelKind::Ns).unwrap().is_inside());
    for k in [ModelKind::Lfic, ModelKind::Lhv, ModelKind::Lf] {
        assert!(!models::membership(&n0, k).unwrap().is_inside(), "N0 in {k}");
    }
    // a deterministic LF strategy is in every model
    let v = vertices(ModelKind::Lf)[0].clone();
    let p = Behavior::exact(s, v).unwrap();
    for k in ModelKind::ALL {
        assert!(models::membership(&p, k).unwrap().is_inside(), "{k}");
    }
}

#[test]
fn z1_minimum_over_lfic_is_zero() {
    let s = Scenario::main();
    let h = ModelKind::Lfic.model().hrep(&s).unwrap();
    let z1: Constraint = common::as_constraint(&presets::z1());
    let min = lfic_core::geometry::lp_optimize(&z1.normal, &z1.offset, &h, lfic_core::geometry::Direction::Minimize)
        .unwrap()
        .optimum;
    assert_eq!(min, Q::zero());
}
