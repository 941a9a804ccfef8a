//! Two-dimensional sections of the correlation sets through three behaviours.
//!
//! The plane is `O + u·e1 + v·e2` with `O` the centroid of the three points
//! and `e1, e2` Gram-Schmidt directions, all rational so polytope sections are
//! exact. Polytope sections come from the H-representation restricted to the
//! plane: an exact polygon, plus exact ratio tests along rays. The quantum
//! section is sampled along rays by SDP bisection.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{check_feasible, facets_to_vertices, Constraint, FarkasCertificate, LinearProgram, PolytopeH};
use crate::models::ModelKind;
use crate::npa::{self, Level, MomentProgram, Relations};
use crate::rational::{dot, rationalize, to_f64, Q};
use crate::scenario::{Behavior, Scenario};

pub const DEFAULT_RAYS: usize = 720;
/// Level used for the quantum section unless overridden; each ray costs a
/// handful of SDP solves and level 2 is about thirty times slower per solve.
pub const DEFAULT_QUANTUM_LEVEL: Level = Level::OneAB;
/// Denominator cap for the rational chart scalings and ray directions.
const CHART_CAP: i64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct SectionPlane {
    pub scenario: Scenario,
    pub origin: Vec<Q>,
    pub e1: Vec<Q>,
    pub e2: Vec<Q>,
    /// Defining points with their names, in input order.
    pub markers: Vec<(String, Vec<Q>)>,
}

fn sub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[Q], k: &Q) -> Vec<Q> {
    a.iter().map(|x| x * k).collect()
}

fn exact_table(p: &Behavior) -> Result<Vec<Q>> {
    let v = match p.exact_entries() {
        Some(v) => v.to_vec(),
        None => p
            .to_f64_vec()
            .iter()
            .map(|&x| rationalize(x, crate::rational::RATIONALIZE_DENOMINATOR_CAP))
            .collect::<Result<_>>()?,
    };
    let ns = crate::models::ns_hrep(p.scenario());
    if ns.equalities.iter().any(|c| !c.value(&v).is_zero()) {
        return Err(Error::Invalid(
            "plane points must be exactly normalised and no-signalling; pass exact behaviours".into(),
        ));
    }
    Ok(v)
}

/// Plane through three behaviours, named `N0`, `Q1`, `Q2` for the markers.
pub fn make_plane(n0: &Behavior, q1: &Behavior, q2: &Behavior) -> Result<SectionPlane> {
    make_named_plane([("N0", n0), ("Q1", q1), ("Q2", q2)])
}

pub fn make_named_plane(points: [(&str, &Behavior); 3]) -> Result<SectionPlane> {
    let s = *points[0].1.scenario();
    if points.iter().any(|p| *p.1.scenario() != s) {
        return Err(Error::Shape("plane points use different scenarios".into()));
    }
    let v: Vec<Vec<Q>> = points.iter().map(|p| exact_table(p.1)).collect::<Result<_>>()?;
    let three = Q::from_integer(3.into());
    let origin: Vec<Q> = (0..s.dim()).map(|i| (&v[0][i] + &v[1][i] + &v[2][i]) / &three).collect();
    let d1 = sub(&v[1], &v[0]);
    let d2 = sub(&v[2], &v[0]);
    let n11 = dot(&d1, &d1);
    if n11.is_zero() {
        return Err(Error::Degenerate("the first two points coincide".into()));
    }
    let proj = dot(&d2, &d1) / &n11;
    let w2 = sub(&d2, &scale(&d1, &proj));
    let n22 = dot(&w2, &w2);
    if n22.is_zero() {
        return Err(Error::Degenerate("the three points are collinear".into()));
    }
    let unit = |n: &Q| rationalize(1.0 / to_f64(n).sqrt(), CHART_CAP);
    let e1 = scale(&d1, &unit(&n11)?);
    let e2 = scale(&w2, &unit(&n22)?);
    Ok(SectionPlane {
        scenario: s,
        origin,
        e1,
        e2,
        markers: points.iter().zip(v).map(|(p, t)| (p.0.to_string(), t)).collect(),
    })
}

/// Plane through the tabulated N0, Q1, Q2 with `α` rationalised.
pub fn table_plane() -> Result<SectionPlane> {
    let alpha = crate::presets::rational_alpha();
    let pts: Vec<Behavior> = ["N0", "Q1", "Q2"]
        .iter()
        .map(|n| crate::presets::tabulated_exact(n, &alpha))
        .collect::<Result<_>>()?;
    make_plane(&pts[0], &pts[1], &pts[2])
}

impl SectionPlane {
    pub fn embed(&self, u: &Q, v: &Q) -> Vec<Q> {
        (0..self.origin.len())
            .map(|i| &self.origin[i] + u * &self.e1[i] + v * &self.e2[i])
            .collect()
    }

    pub fn embed_f64(&self, u: f64, v: f64) -> Vec<f64> {
        (0..self.origin.len())
            .map(|i| to_f64(&self.origin[i]) + u * to_f64(&self.e1[i]) + v * to_f64(&self.e2[i]))
            .collect()
    }

    /// Chart coordinates of the orthogonal projection onto the plane.
    pub fn coordinates_exact(&self, p: &[Q]) -> (Q, Q) {
        let d = sub(p, &self.origin);
        (dot(&d, &self.e1) / dot(&self.e1, &self.e1), dot(&d, &self.e2) / dot(&self.e2, &self.e2))
    }

    pub fn coordinates(&self, p: &Behavior) -> (f64, f64) {
        let v = p.to_f64_vec();
        let d: Vec<f64> = v.iter().zip(&self.origin).map(|(x, o)| x - to_f64(o)).collect();
        let e1: Vec<f64> = self.e1.iter().map(to_f64).collect();
        let e2: Vec<f64> = self.e2.iter().map(to_f64).collect();
        let dd = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        (dd(&d, &e1) / dd(&e1, &e1), dd(&d, &e2) / dd(&e2, &e2))
    }

    pub fn marker_coordinates(&self) -> Vec<(String, f64, f64)> {
        self.markers
            .iter()
            .map(|(n, p)| {
                let (u, v) = self.coordinates_exact(p);
                (n.clone(), to_f64(&u), to_f64(&v))
            })
            .collect()
    }

    /// `c` restricted to the plane as a constraint on `(u, v)`.
    pub fn restrict(&self, c: &Constraint) -> Constraint {
        Constraint::new(
            vec![dot(&c.normal, &self.e1), dot(&c.normal, &self.e2)],
            c.value(&self.origin),
        )
    }

    pub fn restrict_h(&self, h: &PolytopeH) -> PolytopeH {
        PolytopeH {
            dim: 2,
            inequalities: h.inequalities.iter().map(|c| self.restrict(c)).collect(),
            equalities: h
                .equalities
                .iter()
                .map(|c| self.restrict(c))
                .filter(|c| !(c.normal.iter().all(Q::is_zero) && c.offset.is_zero()))
                .collect(),
        }
    }
}

/// Ray angles `2πk/n`, rationalised cosines and sines.
pub fn ray_directions(n: usize) -> Result<Vec<(f64, Q, Q)>> {
    if n < 3 {
        return Err(Error::Invalid(format!("angular resolution {n} is below 3 rays")));
    }
    (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Ok((th, rationalize(th.cos(), CHART_CAP)?, rationalize(th.sin(), CHART_CAP)?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayPoint {
    pub angle: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug)]
pub enum SectionShape {
    /// Exact polygon in chart coordinates, counter-clockwise.
    Polygon(Vec<(Q, Q)>),
    /// Sampled boundary only (quantum relaxation).
    Sampled,
    Empty(Box<FarkasCertificate>),
}

#[derive(Clone, Debug)]
pub struct Section {
    pub model: String,
    pub shape: SectionShape,
    /// Ray origin in chart coordinates, when rays were cast.
    pub ray_origin: Option<(f64, f64)>,
    pub rays: Vec<RayPoint>,
    /// Restricted constraint system, kept for certificate checks.
    pub restricted: Option<PolytopeH>,
}

impl Section {
    pub fn is_empty(&self) -> bool {
        matches!(self.shape, SectionShape::Empty(_))
    }

    pub fn polygon(&self) -> Option<&[(Q, Q)]> {
        match &self.shape {
            SectionShape::Polygon(p) => Some(p),
            _ => None,
        }
    }

    /// Checks the stored Farkas certificate against the restricted system.
    pub fn verify_certificate(&self) -> bool {
        match (&self.shape, &self.restricted) {
            (SectionShape::Empty(cert), Some(h)) => {
                LinearProgram::feasibility(2, h.equalities.clone(), h.inequalities.clone()).verify_farkas(cert)
            }
            _ => false,
        }
    }
}

fn ccw(points: Vec<Vec<Q>>) -> Vec<(Q, Q)> {
    let n = Q::from_integer((points.len() as i64).into());
    let cu = points.iter().fold(Q::zero(), |a, p| a + &p[0]) / &n;
    let cv = points.iter().fold(Q::zero(), |a, p| a + &p[1]) / &n;
    let mut pts: Vec<(f64, (Q, Q))> = points
        .into_iter()
        .map(|p| {
            let ang = to_f64(&(&p[1] - &cv)).atan2(to_f64(&(&p[0] - &cu)));
            (ang, (p[0].clone(), p[1].clone()))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().map(|p| p.1).collect()
}

/// Exact section of a polytope model with boundary points along `rays` rays
/// from the polygon's vertex centroid.
pub fn polytope_section(plane: &SectionPlane, kind: ModelKind, rays: usize) -> Result<Section> {
    let h = kind.model().hrep(&plane.scenario)?;
    let restricted = plane.restrict_h(&h);
    let name = kind.name().to_string();
    match check_feasible(&restricted) {
        Err(Error::Infeasible(cert)) => {
            return Ok(Section {
                model: name,
                shape: SectionShape::Empty(cert),
                ray_origin: None,
                rays: vec![],
                restricted: Some(restricted),
            })
        }
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    let verts = facets_to_vertices(&restricted)?;
    let polygon = ccw(verts.vertices);
    let mut section = Section {
        model: name,
        shape: SectionShape::Polygon(polygon.clone()),
        ray_origin: None,
        rays: vec![],
        restricted: Some(restricted.clone()),
    };
    if polygon.len() < 3 {
        return Ok(section);
    }
    let n = Q::from_integer((polygon.len() as i64).into());
    let ou = polygon.iter().fold(Q::zero(), |a, p| a + &p.0) / &n;
    let ov = polygon.iter().fold(Q::zero(), |a, p| a + &p.1) / &n;
    section.ray_origin = Some((to_f64(&ou), to_f64(&ov)));
    section.rays = ray_directions(rays)?
        .par_iter()
        .map(|(th, c, s)| {
            let t = ratio_test(&restricted, &ou, &ov, c, s)?;
            Ok(RayPoint {
                angle: *th,
                t: to_f64(&t),
                x: to_f64(&(&ou + &t * c)),
                y: to_f64(&(&ov + &t * s)),
            })
        })
        .collect::<Result<_>>()?;
    Ok(section)
}

/// Largest `t` with `(u0, v0) + t·(c, s)` satisfying `h`: the optimum of the
/// one-variable LP, computed exactly.
pub fn ratio_test(h: &PolytopeH, u0: &Q, v0: &Q, c: &Q, s: &Q) -> Result<Q> {
    let mut best: Option<Q> = None;
    for con in &h.inequalities {
        let g = &con.normal[0] * u0 + &con.normal[1] * v0 + &con.offset;
        let slope = &con.normal[0] * c + &con.normal[1] * s;
        if slope.is_negative() {
            let t = g / -slope;
            if best.as_ref().is_none_or(|b| t < *b) {
                best = Some(t);
            }
        }
    }
    best.ok_or_else(|| Error::Invalid("section is unbounded along a ray".into()))
}

/// Quantum-relaxation section, with rays cast from [`quantum_origin`].
pub fn quantum_section(plane: &SectionPlane, level: Level, relations: Relations, rays: usize) -> Result<Section> {
    let prog = npa::build_moment_program(&plane.scenario, None, level, relations)?;
    let dirs = ray_directions(rays)?;
    let (ou, ov) = quantum_origin(plane, &prog)?;
    let origin = Behavior::float(plane.scenario, plane.embed_f64(ou, ov))?;
    let e1: Vec<f64> = plane.e1.iter().map(to_f64).collect();
    let e2: Vec<f64> = plane.e2.iter().map(to_f64).collect();
    let points: Vec<RayPoint> = dirs
        .par_iter()
        .map(|(th, c, s)| {
            let (c, s) = (to_f64(c), to_f64(s));
            let d: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| c * a + s * b).collect();
            let t = npa::quantum_boundary_along_ray(&prog, &origin, &d)?
                .t()
                .ok_or_else(|| Error::Invalid("quantum section is unbounded".into()))?;
            Ok(RayPoint {
                angle: *th,
                t,
                x: ou + t * c,
                y: ov + t * s,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Section {
        model: format!("quantum-{}", level.name()),
        shape: SectionShape::Sampled,
        ray_origin: Some((ou, ov)),
        rays: points,
        restricted: None,
    })
}

/// Steps per triangle side for the ray-origin search.
const ORIGIN_GRID: usize = 10;

/// Ray origin for the quantum section: the mean of the feasible points of a
/// barycentric grid over the marker triangle, feasible by convexity. Moment
/// matrices on the plane may all be singular, so no strictly feasible point
/// is required.
pub fn quantum_origin(plane: &SectionPlane, prog: &MomentProgram) -> Result<(f64, f64)> {
    let marks = plane.marker_coordinates();
    let n = ORIGIN_GRID;
    let grid: Vec<(f64, f64)> = (0..=n)
        .flat_map(|i| (0..=n - i).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            let c = 1.0 - a - b;
            (
                a * marks[0].1 + b * marks[1].1 + c * marks[2].1,
                a * marks[0].2 + b * marks[1].2 + c * marks[2].2,
            )
        })
        .collect();
    let feasible: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&(u, v)| {
            let p = Behavior::float(plane.scenario, plane.embed_f64(u, v))?;
            Ok(npa::is_feasible(prog, &p)?.then_some((u, v)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if feasible.is_empty() {
        return Err(Error::Invalid("the relaxation misses the marker triangle on this plane".into()));
    }
    let k = feasible.len() as f64;
    Ok((feasible.iter().map(|p| p.0).sum::<f64>() / k, feasible.iter().map(|p| p.1).sum::<f64>() / k))
}

/// Whether the exact polygon contains a chart point (with its restricted
/// system).
pub fn section_contains(section: &Section, u: &Q, v: &Q) -> bool {
    match (&section.shape, &section.restricted) {
        (SectionShape::Polygon(_), Some(h)) => h.contains(&[u.clone(), v.clone()]),
        _ => false,
    }
}

const COLOURS: [(&str, &str); 5] = [
    ("ns", "#2ca02c"),
    ("lfic", "#9467bd"),
    ("lhv", "#ff7f0e"),
    ("lf", "#d62728"),
    ("quantum", "#1f77b4"),
];

fn colour(model: &str) -> &'static str {
    COLOURS
        .iter()
        .find(|(m, _)| model == *m || model.starts_with(&format!("{m}-")))
        .map_or("#7f7f7f", |c| c.1)
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.9}");
    if s == "-0.000000000" {
        "0.000000000".into()
    } else {
        s
    }
}

/// CSV for one section: `model,angle,boundary-x,boundary-y`. Polygons without
/// rays list their vertices with angle `vertex`; empty sections write a single
/// `empty` row.
pub fn section_csv(section: &Section, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let _ = writeln!(out, "model,angle,boundary-x,boundary-y");
    let m = &section.model;
    if section.is_empty() {
        let _ = writeln!(out, "{m},empty,,");
    } else if !section.rays.is_empty() {
        for r in &section.rays {
            let _ = writeln!(out, "{m},{},{},{}", fmt(r.angle), fmt(r.x), fmt(r.y));
        }
    } else if let Some(p) = section.polygon() {
        for (u, v) in p {
            let _ = writeln!(out, "{m},vertex,{},{}", fmt(to_f64(u)), fmt(to_f64(v)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub model: String,
    pub empty: bool,
    pub points: Vec<(f64, f64)>,
}

pub fn parse_csv(text: &str) -> Result<Vec<Curve>> {
    let mut curves: BTreeMap<String, Curve> = BTreeMap::new();
    let mut order = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != "model,angle,boundary-x,boundary-y" {
                return Err(Error::Parse {
                    line: i + 1,
                    column: 1,
                    message: "expected the header model,angle,boundary-x,boundary-y".into(),
                });
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                line: i + 1,
                column: 1,
                message: format!("expected 4 fields, found {}", f.len()),
            });
        }
        let model = f[0].to_string();
        let c = curves.entry(model.clone()).or_insert_with(|| {
            order.push(model.clone());
            Curve {
                model: model.clone(),
                empty: false,
                points: vec![],
            }
        });
        if f[1] == "empty" {
            c.empty = true;
            continue;
        }
        let num = |k: usize| {
            f[k].parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                column: k + 1,
                message: e.to_string(),
            })
        };
        c.points.push((num(2)?, num(3)?));
    }
    Ok(order.into_iter().map(|m| curves.remove(&m).expect("inserted")).collect())
}

/// Standalone SVG from parsed curves; identical curves give identical bytes.
pub fn render_svg(curves: &[Curve], markers: &[(String, f64, f64)]) -> String {
    let all: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter().copied())
        .chain(markers.iter().map(|m| (m.1, m.2)))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if all.is_empty() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let size = 600.0;
    let pad = 40.0;
    let k = (size - 2.0 * pad) / span;
    let px = |x: f64| pad + (x - x0) * k;
    let py = |y: f64| size - pad - (y - y0) * k;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{h}\" viewBox=\"0 0 {size} {h}\">",
        h = size + 20.0 * curves.len() as f64
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for c in curves.iter().filter(|c| !c.empty && !c.points.is_empty()) {
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y))).collect();
        let col = colour(&c.model);
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{col}\" fill-opacity=\"0.25\" stroke=\"{col}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
    }
    for (name, x, y) in markers {
        let _ = writeln!(out, "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"black\"/>", px(*x), py(*y));
        let _ = writeln!(
            out,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"14\">{name}</text>",
            px(*x) + 6.0,
            py(*y) - 6.0
        );
    }
    for (i, c) in curves.iter().enumerate() {
        let y = size + 15.0 * i as f64 + 5.0;
        let label = if c.empty { format!("{} (empty)", c.model) } else { c.model.clone() };
        let _ = writeln!(
            out,
            "<rect x=\"{pad}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>",
            y - 10.0,
            colour(&c.model)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>",
            pad + 18.0
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

/// CSV per section plus the SVG rendered from those CSVs.
pub fn render(sections: &[Section], markers: &[(String, f64, f64)], header: &[String]) -> Result<(String, Vec<(String, String)>)> {
    if sections.is_empty() {
        return Err(Error::Invalid("nothing to render".into()));
    }
    let csvs: Vec<(String, String)> = sections.iter().map(|s| (s.model.clone(), section_csv(s, header))).collect();
    let mut curves = Vec::new();
    for (_, text) in &csvs {
        curves.extend(parse_csv(text)?);
    }
    Ok((render_svg(&curves, markers), csvs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn collinear_points_are_rejected() {
        let n0 = presets::n0();
        assert!(matches!(make_plane(&n0, &n0, &n0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn markers_round_trip() {
        let plane = table_plane().unwrap();
        for (_, p) in &plane.markers {
            let (u, v) = plane.coordinates_exact(p);
            assert_eq!(&plane.embed(&u, &v), p);
        }
    }

    #[test]
    fn too_few_rays() {
        assert!(ray_directions(2).is_err());
    }
}
