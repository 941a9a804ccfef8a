//! Exact rational polytopes: V/H conversion by double description, affine
//! hulls, canonical constraint forms, linear programming with certificates and
//! a cdd-style text format.

pub mod dd;
pub mod format;
pub mod linalg;
pub mod lp;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

pub use format::{parse_h, parse_v, write_h, write_v};
pub use lp::{Direction, DualCertificate, FarkasCertificate, LinearProgram, LpOutcome, LpSolution, Ray};

use crate::error::{Error, Result};
use crate::rational::{primitive_integer, Q};

pub(crate) fn dot(a: &[Q], b: &[Q]) -> Q {
    crate::rational::dot(a, b)
}

/// `normal·v + offset ≥ 0` as an inequality, `= 0` as an equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub normal: Vec<Q>,
    pub offset: Q,
}

impl Constraint {
    pub fn new(normal: Vec<Q>, offset: Q) -> Self {
        Constraint { normal, offset }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn value(&self, v: &[Q]) -> Q {
        &self.offset + dot(&self.normal, v)
    }

    pub fn value_f64(&self, v: &[f64]) -> f64 {
        let mut s = crate::rational::to_f64(&self.offset);
        for (c, x) in self.normal.iter().zip(v) {
            if !c.is_zero() {
                s += crate::rational::to_f64(c) * x;
            }
        }
        s
    }

    /// `(normal, offset)` as one vector, offset last.
    fn stacked(&self) -> Vec<Q> {
        let mut v = self.normal.clone();
        v.push(self.offset.clone());
        v
    }

    fn from_stacked(v: &[Q]) -> Self {
        let d = v.len() - 1;
        Constraint {
            normal: v[..d].to_vec(),
            offset: v[d].clone(),
        }
    }

    /// Primitive integer form under positive scaling; preserves the sense
    /// of an inequality.
    pub fn canonical_inequality(&self) -> Constraint {
        let ints = primitive_integer(&self.stacked());
        Self::from_stacked(&ints.into_iter().map(Q::from_integer).collect::<Vec<_>>())
    }

    /// Primitive integer form with the first nonzero entry positive.
    pub fn canonical_equality(&self) -> Constraint {
        let c = self.canonical_inequality();
        let first_negative = c.stacked().iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
        if first_negative {
            c.negated()
        } else {
            c
        }
    }

    pub fn negated(&self) -> Constraint {
        Constraint {
            normal: self.normal.iter().map(|x| -x).collect(),
            offset: -self.offset.clone(),
        }
    }

    /// Integer key used for exact comparison of canonical forms.
    pub fn key(&self) -> Vec<BigInt> {
        primitive_integer(&self.stacked())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeV {
    pub dim: usize,
    pub vertices: Vec<Vec<Q>>,
    pub rays: Vec<Vec<Q>>,
}

impl PolytopeV {
    /// Builds a polytope from points, dropping exact duplicates (first
    /// occurrence kept).
    pub fn new(dim: usize, points: Vec<Vec<Q>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut vertices = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::Shape(format!("point of length {} in dimension {dim}", p.len())));
            }
            if seen.insert(p.clone()) {
                vertices.push(p);
            }
        }
        Ok(PolytopeV {
            dim,
            vertices,
            rays: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains_vertex(&self, v: &[Q]) -> bool {
        self.vertices.iter().any(|w| w.as_slice() == v)
    }

    /// Vertex list as a sorted set, for order-free comparison.
    pub fn sorted_vertices(&self) -> Vec<Vec<Q>> {
        let mut v = self.vertices.clone();
        v.sort();
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeH {
    pub dim: usize,
    pub inequalities: Vec<Constraint>,
    pub equalities: Vec<Constraint>,
}

impl PolytopeH {
    pub fn contains(&self, v: &[Q]) -> bool {
        self.equalities.iter().all(|c| c.value(v).is_zero())
            && self.inequalities.iter().all(|c| !c.value(v).is_negative())
    }

    /// Most violated constraint at `v` with its (negative, or nonzero for
    /// equalities) value; `None` when `v` satisfies everything.
    pub fn most_violated(&self, v: &[Q]) -> Option<(Constraint, Q)> {
        let mut worst: Option<(Constraint, Q)> = None;
        for c in &self.inequalities {
            let val = c.value(v);
            if val.is_negative() && worst.as_ref().is_none_or(|(_, w)| val < *w) {
                worst = Some((c.clone(), val));
            }
        }
        if worst.is_some() {
            return worst;
        }
        for c in &self.equalities {
            let val = c.value(v);
            if !val.is_zero() {
                let oriented = if val.is_positive() { c.negated() } else { c.clone() };
                return Some((oriented, -val.abs()));
            }
        }
        None
    }

    /// Canonical inequality keys, sorted.
    pub fn facet_keys(&self) -> Vec<Vec<BigInt>> {
        let mut k: Vec<_> = self.inequalities.iter().map(|c| c.key()).collect();
        k.sort();
        k
    }

    pub fn as_lp(&self, objective: Vec<Q>, offset: Q, direction: Direction) -> LinearProgram {
        LinearProgram {
            num_vars: self.dim,
            nonneg: vec![false; self.dim],
            equalities: self.equalities.clone(),
            inequalities: self.inequalities.clone(),
            objective,
            objective_offset: offset,
            direction,
        }
    }
}

/// Affine subspace in reduced row echelon form.
///
/// Each equality has coefficient one on its pivot coordinate and zero on all
/// other pivots, so the remaining `free` coordinates chart the subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineChart {
    pub dim: usize,
    pub equalities: Vec<Constraint>,
    pub pivots: Vec<usize>,
    pub free: Vec<usize>,
}

impl AffineChart {
    fn from_rows(dim: usize, rows: &[Constraint]) -> Result<Self> {
        let stacked: Vec<Vec<Q>> = rows.iter().map(|c| c.stacked()).collect();
        let (r, pivots) = linalg::rref(&stacked);
        if pivots.last() == Some(&dim) {
            return Err(Error::Degenerate("equalities are inconsistent".into()));
        }
        let equalities: Vec<Constraint> = r.iter().map(|row| Constraint::from_stacked(row)).collect();
        let free = (0..dim).filter(|j| !pivots.contains(j)).collect();
        Ok(AffineChart {
            dim,
            equalities,
            pivots,
            free,
        })
    }

    /// Dimension of the subspace.
    pub fn affine_dim(&self) -> usize {
        self.free.len()
    }

    /// Rewrites `c` so that it has no weight on pivot coordinates; the result
    /// agrees with `c` everywhere on the subspace.
    pub fn reduce(&self, c: &Constraint) -> Constraint {
        let mut out = c.clone();
        for (e, &p) in self.equalities.iter().zip(&self.pivots) {
            let f = out.normal[p].clone();
            if f.is_zero() {
                continue;
            }
            for (o, x) in out.normal.iter_mut().zip(&e.normal) {
                if !x.is_zero() {
                    *o -= &f * x;
                }
            }
            out.offset -= &f * &e.offset;
        }
        out
    }

    pub fn project(&self, v: &[Q]) -> Vec<Q> {
        self.free.iter().map(|&j| v[j].clone()).collect()
    }

    pub fn lift(&self, w: &[Q]) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim];
        for (&j, x) in self.free.iter().zip(w) {
            v[j] = x.clone();
        }
        for (e, &p) in self.equalities.iter().zip(&self.pivots) {
            let mut s = e.offset.clone();
            for &j in &self.free {
                if !e.normal[j].is_zero() {
                    s += &e.normal[j] * &v[j];
                }
            }
            v[p] = -s;
        }
        v
    }

    /// Lifts a direction (no offset contribution).
    pub fn lift_direction(&self, w: &[Q]) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim];
        for (&j, x) in self.free.iter().zip(w) {
            v[j] = x.clone();
        }
        for (e, &p) in self.equalities.iter().zip(&self.pivots) {
            let mut s = Q::zero();
            for &j in &self.free {
                if !e.normal[j].is_zero() {
                    s += &e.normal[j] * &v[j];
                }
            }
            v[p] = -s;
        }
        v
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.equalities.iter().all(|e| e.value(v).is_zero())
    }
}

/// Maximal independent set of equalities satisfied by every point, in reduced
/// echelon form.
pub fn affine_hull(v: &PolytopeV) -> Result<AffineChart> {
    affine_hull_of(v.dim, &v.vertices)
}

pub fn affine_hull_of(dim: usize, points: &[Vec<Q>]) -> Result<AffineChart> {
    if points.is_empty() {
        return Err(Error::Invalid("affine hull of an empty point set".into()));
    }
    let rows: Vec<Vec<Q>> = points
        .iter()
        .map(|p| {
            let mut r = p.clone();
            r.push(Q::from_integer(1.into()));
            r
        })
        .collect();
    let ns = linalg::nullspace(&rows, dim + 1);
    let eqs: Vec<Constraint> = ns.iter().map(|z| Constraint::from_stacked(z)).collect();
    AffineChart::from_rows(dim, &eqs)
}

/// Equalities of the affine hull in primitive integer form.
pub fn hull_equalities(chart: &AffineChart) -> Vec<Constraint> {
    chart.equalities.iter().map(|e| e.canonical_equality()).collect()
}

/// Facets and affine-hull equalities of `conv(v)`.
///
/// Inequalities are reported reduced against the affine hull (zero weight on
/// pivot coordinates) and in primitive integer form, sorted by that form.
pub fn vertices_to_facets(v: &PolytopeV) -> Result<PolytopeH> {
    if v.vertices.is_empty() {
        return Err(Error::Invalid("vertices_to_facets needs at least one vertex".into()));
    }
    let chart = affine_hull(v)?;
    let k = chart.affine_dim();
    let equalities = hull_equalities(&chart);
    if k == 0 {
        return Ok(PolytopeH {
            dim: v.dim,
            inequalities: Vec::new(),
            equalities,
        });
    }
    let rows: Vec<Vec<BigInt>> = v
        .vertices
        .iter()
        .map(|p| {
            let mut r = vec![Q::from_integer(1.into())];
            r.extend(chart.project(p));
            dd::integer_row(&r)
        })
        .collect();
    let rays = dd::extreme_rays(&rows)?;
    let mut inequalities: Vec<Constraint> = rays
        .into_iter()
        .map(|h| {
            let mut normal = vec![Q::zero(); v.dim];
            for (idx, &j) in chart.free.iter().enumerate() {
                normal[j] = Q::from_integer(h[idx + 1].clone());
            }
            Constraint::new(normal, Q::from_integer(h[0].clone())).canonical_inequality()
        })
        .collect();
    inequalities.sort_by_key(|a| a.key());
    Ok(PolytopeH {
        dim: v.dim,
        inequalities,
        equalities,
    })
}

/// Feasibility of an H-system, with a Farkas certificate when empty.
pub fn check_feasible(h: &PolytopeH) -> Result<Vec<Q>> {
    let lp = LinearProgram::feasibility(h.dim, h.equalities.clone(), h.inequalities.clone());
    match lp::solve(&lp) {
        LpOutcome::Optimal(s) => Ok(s.argument),
        LpOutcome::Infeasible(f) => Err(Error::Infeasible(Box::new(f))),
        LpOutcome::Unbounded(_) => unreachable!("zero objective cannot be unbounded"),
    }
}

/// Extreme points of a bounded H-polytope, sorted lexicographically.
pub fn facets_to_vertices(h: &PolytopeH) -> Result<PolytopeV> {
    check_feasible(h)?;
    let chart = AffineChart::from_rows(h.dim, &h.equalities)?;
    let k = chart.affine_dim();
    let reduced: Vec<Constraint> = h.inequalities.iter().map(|c| chart.reduce(c)).collect();
    let mut rows: Vec<Vec<Q>> = reduced
        .iter()
        .map(|c| {
            let mut r = vec![c.offset.clone()];
            r.extend(chart.project(&c.normal));
            r
        })
        .collect();
    let mut t_row = vec![Q::zero(); k + 1];
    t_row[0] = Q::from_integer(1.into());
    rows.push(t_row);

    let lineality = linalg::nullspace(&rows, k + 1);
    if let Some(z) = lineality.first() {
        return Err(Error::Unbounded(Box::new(Ray {
            direction: chart.lift_direction(&z[1..]),
        })));
    }
    let int_rows: Vec<Vec<BigInt>> = rows.iter().map(|r| dd::integer_row(r)).collect();
    let rays = dd::extreme_rays(&int_rows)?;
    let mut vertices = Vec::with_capacity(rays.len());
    for r in rays {
        if r[0].is_zero() {
            let w: Vec<Q> = r[1..].iter().map(|x| Q::from_integer(x.clone())).collect();
            return Err(Error::Unbounded(Box::new(Ray {
                direction: chart.lift_direction(&w),
            })));
        }
        let t = Q::from_integer(r[0].clone());
        let w: Vec<Q> = r[1..].iter().map(|x| Q::from_integer(x.clone()) / &t).collect();
        vertices.push(chart.lift(&w));
    }
    vertices.sort();
    for v in &vertices {
        debug_assert!(is_extreme(h, v));
    }
    Ok(PolytopeV {
        dim: h.dim,
        vertices,
        rays: Vec::new(),
    })
}

/// Rank test: `v` is feasible and its tight constraints (equalities plus
/// tight inequalities) have full rank.
pub fn is_extreme(h: &PolytopeH, v: &[Q]) -> bool {
    if !h.contains(v) {
        return false;
    }
    let mut rows: Vec<Vec<Q>> = h.equalities.iter().map(|c| c.normal.clone()).collect();
    rows.extend(h.inequalities.iter().filter(|c| c.value(v).is_zero()).map(|c| c.normal.clone()));
    linalg::rank(&rows) == h.dim
}

/// Optimises `objective·v + offset` over `h`.
pub fn lp_optimize(objective: &[Q], offset: &Q, h: &PolytopeH, direction: Direction) -> Result<LpSolution> {
    if objective.len() != h.dim {
        return Err(Error::Shape(format!(
            "objective of length {} over dimension {}",
            objective.len(),
            h.dim
        )));
    }
    match lp::solve(&h.as_lp(objective.to_vec(), offset.clone(), direction)) {
        LpOutcome::Optimal(s) => Ok(s),
        LpOutcome::Infeasible(f) => Err(Error::Infeasible(Box::new(f))),
        LpOutcome::Unbounded(r) => Err(Error::Unbounded(Box::new(r))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn pts(p: &[&[i64]]) -> Vec<Vec<Q>> {
        p.iter().map(|r| r.iter().map(|&v| qi(v)).collect()).collect()
    }

    #[test]
    fn unit_square() {
        let v = PolytopeV::new(2, pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])).unwrap();
        let h = vertices_to_facets(&v).unwrap();
        assert_eq!(h.inequalities.len(), 4);
        assert!(h.equalities.is_empty());
    }

    #[test]
    fn standard_simplex() {
        let v = PolytopeV::new(3, pts(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])).unwrap();
        let h = vertices_to_facets(&v).unwrap();
        assert_eq!(h.inequalities.len(), 3);
        assert_eq!(h.equalities.len(), 1);
        assert_eq!(h.equalities[0], Constraint::new(vec![qi(1), qi(1), qi(1)], qi(-1)));
    }

    #[test]
    fn cube_vertices() {
        let mut ineq = Vec::new();
        for i in 0..3 {
            let mut n = vec![qi(0); 3];
            n[i] = qi(1);
            ineq.push(Constraint::new(n.clone(), qi(0)));
            n[i] = qi(-1);
            ineq.push(Constraint::new(n, qi(1)));
        }
        let h = PolytopeH {
            dim: 3,
            inequalities: ineq,
            equalities: vec![],
        };
        let v = facets_to_vertices(&h).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.vertices.iter().all(|p| is_extreme(&h, p)));
    }

    #[test]
    fn infeasible_interval() {
        let h = PolytopeH {
            dim: 1,
            inequalities: vec![Constraint::new(vec![qi(1)], qi(-1)), Constraint::new(vec![qi(-1)], qi(0))],
            equalities: vec![],
        };
        match facets_to_vertices(&h) {
            Err(Error::Infeasible(f)) => {
                let lp = LinearProgram::feasibility(1, vec![], h.inequalities.clone());
                assert!(lp.verify_farkas(&f));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn half_line_is_unbounded() {
        let h = PolytopeH {
            dim: 1,
            inequalities: vec![Constraint::new(vec![qi(1)], qi(0))],
            equalities: vec![],
        };
        match facets_to_vertices(&h) {
            Err(Error::Unbounded(r)) => assert!(r.direction[0].is_positive()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_points_in_space() {
        let v = PolytopeV::new(3, pts(&[&[0, 0, 0], &[1, 2, 3]])).unwrap();
        assert_eq!(affine_hull(&v).unwrap().equalities.len(), 2);
    }
}
