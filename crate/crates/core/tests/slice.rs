use lfic_core::models::ModelKind;
use lfic_core::npa::{self, Level, Relations};
use lfic_core::rational::{q, to_f64};
use lfic_core::slice::{self, SectionPlane, SectionShape};
use lfic_core::{presets, Behavior, Scenario, Q};
use num_traits::Zero;

fn cross(o: &(Q, Q), a: &(Q, Q), b: &(Q, Q)) -> Q {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

fn assert_convex_ccw(poly: &[(Q, Q)]) {
    let n = poly.len();
    assert!(n >= 3);
    for i in 0..n {
        let c = cross(&poly[i], &poly[(i + 1) % n], &poly[(i + 2) % n]);
        assert!(c > Q::zero(), "turn {i} is not strictly left");
    }
}

/// Every polygon vertex lifts to a point of the full model with at least two
/// tight, independent facets.
fn assert_vertices_on_model(plane: &SectionPlane, kind: ModelKind, poly: &[(Q, Q)]) {
    let h = kind.model().hrep(&plane.scenario).unwrap();
    for (u, v) in poly {
        let p = plane.embed(u, v);
        assert!(h.contains(&p), "{kind}: lifted vertex outside");
        let tight: Vec<Vec<Q>> = h
            .inequalities
            .iter()
            .filter(|c| c.value(&p).is_zero())
            .map(|c| {
                let r = plane.restrict(c);
                r.normal.clone()
            })
            .collect();
        assert!(lfic_core::geometry::linalg::rank(&tight) == 2, "{kind}: not a vertex of the section");
    }
}

#[test]
fn table_plane_sections() {
    let plane = slice::table_plane().unwrap();
    let ns = slice::polytope_section(&plane, ModelKind::Ns, 36).unwrap();
    let poly = ns.polygon().unwrap();
    assert_convex_ccw(poly);
    assert_vertices_on_model(&plane, ModelKind::Ns, poly);
    for (_, p) in &plane.markers {
        let (u, v) = plane.coordinates_exact(p);
        assert!(slice::section_contains(&ns, &u, &v));
    }
    // boundary points along rays satisfy every restricted constraint, one tightly
    let h = ns.restricted.as_ref().unwrap();
    for r in &ns.rays {
        let vals: Vec<f64> = h.inequalities.iter().map(|c| c.value_f64(&[r.x, r.y])).collect();
        assert!(vals.iter().all(|v| *v > -1e-9));
        assert!(vals.iter().any(|v| v.abs() < 1e-9));
    }
    for k in [ModelKind::Lfic, ModelKind::Lhv, ModelKind::Lf] {
        let s = slice::polytope_section(&plane, k, 36).unwrap();
        assert!(s.is_empty() && s.verify_certificate(), "{k}");
    }
}

#[test]
fn empty_lfic_section_agrees_with_pointwise_membership() {
    let plane = slice::table_plane().unwrap();
    let lfic = ModelKind::Lfic.model().hrep(&plane.scenario).unwrap();
    for i in -6..=6 {
        for j in -6..=6 {
            let p = plane.embed(&q(i, 5), &q(j, 5));
            assert!(!lfic.contains(&p));
        }
    }
}

/// Plane through the uniform point, an LFIC vertex and the exact Q1 table,
/// all inside the LFIC affine hull.
fn lfic_plane() -> SectionPlane {
    let s = Scenario::main();
    let v = ModelKind::Lfic.model().vertices(&s).unwrap();
    let a = Behavior::exact(s, v.vertices[0].clone()).unwrap();
    let q1 = presets::tabulated_exact("Q1", &presets::rational_alpha()).unwrap();
    slice::make_named_plane([("U", &Behavior::uniform(s)), ("V", &a), ("Q1", &q1)]).unwrap()
}

#[test]
fn planes_inside_the_lfic_hull_have_nested_sections() {
    let plane = lfic_plane();
    let lfic = slice::polytope_section(&plane, ModelKind::Lfic, 8).unwrap();
    let ns = slice::polytope_section(&plane, ModelKind::Ns, 8).unwrap();
    let (pl, pn) = (lfic.polygon().unwrap(), ns.polygon().unwrap());
    assert_convex_ccw(pl);
    assert_vertices_on_model(&plane, ModelKind::Lfic, pl);
    assert!(pl.iter().all(|(u, v)| slice::section_contains(&ns, u, v)));
    assert!(pn.iter().any(|(u, v)| !slice::section_contains(&lfic, u, v)), "NS section strictly larger");
    let (u, v) = plane.coordinates_exact(&plane.markers[2].1);
    assert!(slice::section_contains(&ns, &u, &v) && !slice::section_contains(&lfic, &u, &v));
}

#[test]
fn quantum_section_lies_between_lfic_and_ns() {
    let plane = lfic_plane();
    let rays = 12;
    let quantum = slice::quantum_section(&plane, Level::OneAB, Relations::Standard, rays).unwrap();
    let (ou, ov) = quantum.ray_origin.unwrap();
    let (qu, qv) = (
        lfic_core::rational::rationalize(ou, 1_000_000_000).unwrap(),
        lfic_core::rational::rationalize(ov, 1_000_000_000).unwrap(),
    );
    let lfic = slice::polytope_section(&plane, ModelKind::Lfic, 8).unwrap();
    let ns = slice::polytope_section(&plane, ModelKind::Ns, 8).unwrap();
    let dirs = slice::ray_directions(rays).unwrap();
    for (r, (_, c, s)) in quantum.rays.iter().zip(&dirs) {
        let t_ns = to_f64(&slice::ratio_test(ns.restricted.as_ref().unwrap(), &qu, &qv, c, s).unwrap());
        let t_lf = to_f64(&slice::ratio_test(lfic.restricted.as_ref().unwrap(), &qu, &qv, c, s).unwrap());
        assert!(r.t <= t_ns + 1e-6, "quantum beyond NS: {} > {t_ns}", r.t);
        assert!(r.t >= t_lf - npa::BISECTION_WIDTH, "quantum inside LFIC: {} < {t_lf}", r.t);
    }
    // Q1 is quantum, so some ray must leave the LFIC polygon
    assert!(quantum.rays.iter().zip(&dirs).any(|(r, (_, c, s))| {
        r.t > to_f64(&slice::ratio_test(lfic.restricted.as_ref().unwrap(), &qu, &qv, c, s).unwrap()) + 1e-3
    }));
}

#[test]
fn csv_round_trip_and_replot() {
    let plane = slice::table_plane().unwrap();
    let sections: Vec<_> = [ModelKind::Ns, ModelKind::Lhv]
        .into_iter()
        .map(|k| slice::polytope_section(&plane, k, 16).unwrap())
        .collect();
    let markers = plane.marker_coordinates();
    let (svg, csvs) = slice::render(&sections, &markers, &["rays: 16".into()]).unwrap();
    let curves = slice::parse_csv(&csvs[0].1).unwrap();
    assert_eq!(curves.len(), 1);
    assert_eq!(curves[0].points.len(), 16);
    for ((x, y), r) in curves[0].points.iter().zip(&sections[0].rays) {
        assert!((x - r.x).abs() < 1e-9 && (y - r.y).abs() < 1e-9);
    }
    let empty = slice::parse_csv(&csvs[1].1).unwrap();
    assert!(empty[0].empty);
    let mut all = curves;
    all.extend(empty);
    assert_eq!(slice::render_svg(&all, &markers), svg);
    assert!(svg.contains("(empty)"));
}

#[test]
fn degenerate_requests_fail() {
    assert!(slice::ray_directions(2).is_err());
    let s = Scenario::main();
    let u = Behavior::uniform(s);
    assert!(slice::make_plane(&u, &u, &u).is_err());
    assert!(matches!(slice::polytope_section(&slice::table_plane().unwrap(), ModelKind::Ns, 8).unwrap().shape, SectionShape::Polygon(_)));
}
