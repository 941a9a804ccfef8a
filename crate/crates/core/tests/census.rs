use lfic_core::geometry::Constraint;
use lfic_core::models::{self, ModelKind};
use lfic_core::{Scenario, Q};
use num_traits::{Signed, Zero};

fn vertex_minimum(vertices: &[Vec<Q>], c: &Constraint) -> Q {
    vertices.iter().map(|v| c.value(v)).min().expect("nonempty vertex set")
}

fn shifted(c: &Constraint, eqs: &[Constraint], lambda: &[Q]) -> Constraint {
    let mut out = c.clone();
    for (e, l) in eqs.iter().zip(lambda) {
        for (a, b) in out.normal.iter_mut().zip(&e.normal) {
            *a += l * b;
        }
        out.offset += l * &e.offset;
    }
    out
}

#[test]
fn ns_minima_agree_with_vertex_enumeration() {
    let s = Scenario::main();
    let ns = ModelKind::Ns.model().vertices(&s).unwrap();
    let census = models::facet_census(&s).unwrap();
    let eqs = &census.facets.equalities;
    for (i, c) in census.facets.inequalities.iter().enumerate() {
        let direct = vertex_minimum(&ns.vertices, c);
        assert_eq!(models::ns_minimum(&s, c).unwrap(), direct, "facet {i}");
        assert_eq!(census.ns_invalid.contains(&i), direct.is_negative(), "facet {i}");

        let (best, lambda) = models::best_ns_minimum(&s, c, eqs).unwrap();
        assert!(best >= direct, "facet {i}: λ = 0 is feasible");
        assert_eq!(vertex_minimum(&ns.vertices, &shifted(c, eqs, &lambda)), best, "facet {i}");
        assert_eq!(census.ns_invalid_every_form.contains(&i), best.is_negative(), "facet {i}");
    }
    assert!(census.ns_invalid_every_form.iter().all(|i| census.ns_invalid.contains(i)));
}

#[test]
fn facets_are_tight_on_lfic_vertices() {
    let s = Scenario::main();
    let v = ModelKind::Lfic.model().vertices(&s).unwrap();
    let h = ModelKind::Lfic.model().hrep(&s).unwrap();
    for c in &h.inequalities {
        assert!(v.vertices.iter().all(|w| !c.value(w).is_negative()));
        assert!(v.vertices.iter().any(|w| c.value(w).is_zero()));
    }
    for e in &h.equalities {
        assert!(v.vertices.iter().all(|w| e.value(w).is_zero()));
    }
}
