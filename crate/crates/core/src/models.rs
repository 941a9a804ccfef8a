//! Correlation models (LFIC, no-signalling, local, LF) behind a common trait,
//! registered by name, plus exact membership with certificates.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    self, affine_hull_of, lp, AffineChart, Constraint, LinearProgram, LpOutcome, PolytopeH, PolytopeV,
};
use crate::rational::{qi, Q};
use crate::scenario::{Behavior, BellFunctional, Scenario, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Lfic,
    Ns,
    Lhv,
    Lf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lfic, ModelKind::Ns, ModelKind::Lhv, ModelKind::Lf];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lfic => "lfic",
            ModelKind::Ns => "ns",
            ModelKind::Lhv => "lhv",
            ModelKind::Lf => "lf",
        }
    }

    pub fn model(self) -> Arc<dyn CorrelationModel> {
        registry().get(self.name()).expect("built-in models are registered")
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::unknown("model", s, &["lfic", "ns", "lhv", "lf"]))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A polytope of behaviours over a scenario.
pub trait CorrelationModel: Send + Sync {
    fn kind(&self) -> ModelKind;

    fn description(&self) -> &'static str;

    /// Vertex set, possibly with points that are not extreme.
    fn vertices(&self, s: &Scenario) -> Result<Arc<PolytopeV>>;

    /// Facets and equalities.
    fn hrep(&self, s: &Scenario) -> Result<Arc<PolytopeH>>;
}

#[derive(Default)]
struct Cache {
    v: Mutex<HashMap<Scenario, Arc<PolytopeV>>>,
    h: Mutex<HashMap<Scenario, Arc<PolytopeH>>>,
}

impl Cache {
    fn v(&self, s: &Scenario, build: impl FnOnce() -> Result<PolytopeV>) -> Result<Arc<PolytopeV>> {
        if let Some(v) = self.v.lock().unwrap().get(s) {
            return Ok(v.clone());
        }
        let v = Arc::new(build()?);
        self.v.lock().unwrap().insert(*s, v.clone());
        Ok(v)
    }

    fn h(&self, s: &Scenario, build: impl FnOnce() -> Result<PolytopeH>) -> Result<Arc<PolytopeH>> {
        if let Some(h) = self.h.lock().unwrap().get(s) {
            return Ok(h.clone());
        }
        let h = Arc::new(build()?);
        self.h.lock().unwrap().insert(*s, h.clone());
        Ok(h)
    }
}

struct Lfic(Cache);
struct Ns(Cache);
struct Lhv(Cache);
struct Lf(Cache);

impl CorrelationModel for Lfic {
    fn kind(&self) -> ModelKind {
        ModelKind::Lfic
    }
    fn description(&self) -> &'static str {
        "mixtures over Charlie's outcome of no-signalling blocks consistent with Alice's query"
    }
    fn vertices(&self, s: &Scenario) -> Result<Arc<PolytopeV>> {
        self.0.v(s, || lfic_vertices(s))
    }
    fn hrep(&self, s: &Scenario) -> Result<Arc<PolytopeH>> {
        let v = self.vertices(s)?;
        self.0.h(s, || geometry::vertices_to_facets(&v))
    }
}

impl CorrelationModel for Ns {
    fn kind(&self) -> ModelKind {
        ModelKind::Ns
    }
    fn description(&self) -> &'static str {
        "no-signalling behaviours"
    }
    fn vertices(&self, s: &Scenario) -> Result<Arc<PolytopeV>> {
        let h = self.hrep(s)?;
        self.0.v(s, || geometry::facets_to_vertices(&h))
    }
    fn hrep(&self, s: &Scenario) -> Result<Arc<PolytopeH>> {
        self.0.h(s, || Ok(ns_hrep(s)))
    }
}

impl CorrelationModel for Lhv {
    fn kind(&self) -> ModelKind {
        ModelKind::Lhv
    }
    fn description(&self) -> &'static str {
        "local deterministic strategies and their mixtures"
    }
    fn vertices(&self, s: &Scenario) -> Result<Arc<PolytopeV>> {
        self.0.v(s, || Ok(lhv_vertices(s)))
    }
    fn hrep(&self, s: &Scenario) -> Result<Arc<PolytopeH>> {
        let v = self.vertices(s)?;
        self.0.h(s, || geometry::vertices_to_facets(&v))
    }
}

impl CorrelationModel for Lf {
    fn kind(&self) -> ModelKind {
        ModelKind::Lf
    }
    fn description(&self) -> &'static str {
        "Alice always reports Charlie's outcome"
    }
    fn vertices(&self, s: &Scenario) -> Result<Arc<PolytopeV>> {
        self.0.v(s, || lf_vertices(s))
    }
    fn hrep(&self, s: &Scenario) -> Result<Arc<PolytopeH>> {
        let v = self.vertices(s)?;
        self.0.h(s, || geometry::vertices_to_facets(&v))
    }
}

/// Models registered by CLI-facing name.
pub struct ModelRegistry {
    entries: Vec<(&'static str, Arc<dyn CorrelationModel>)>,
}

impl ModelRegistry {
    fn with_builtins() -> Self {
        let mut r = ModelRegistry { entries: Vec::new() };
        r.register("lfic", Arc::new(Lfic(Cache::default())));
        r.register("ns", Arc::new(Ns(Cache::default())));
        r.register("lhv", Arc::new(Lhv(Cache::default())));
        r.register("lf", Arc::new(Lf(Cache::default())));
        r
    }

    fn register(&mut self, name: &'static str, model: Arc<dyn CorrelationModel>) {
        self.entries.push((name, model));
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CorrelationModel>> {
        let lower = name.to_ascii_lowercase();
        self.entries
            .iter()
            .find(|(n, _)| *n == lower)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::unknown("model", name, &self.names()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }
}

pub fn registry() -> &'static ModelRegistry {
    static REGISTRY: OnceLock<ModelRegistry> = OnceLock::new();
    REGISTRY.get_or_init(ModelRegistry::with_builtins)
}

fn unit(s: &Scenario, i: usize) -> Vec<Q> {
    let mut n = vec![Q::zero(); s.dim()];
    n[i] = Q::one();
    n
}

/// Normalisation and both no-signalling families, as raw (dependent) rows.
fn ns_equality_rows(s: &Scenario) -> Vec<Constraint> {
    let mut rows = Vec::new();
    for x in 0..s.alice_inputs {
        for y in 0..s.bob_inputs {
            let mut n = vec![Q::zero(); s.dim()];
            for a in 0..s.alice_outputs {
                for b in 0..s.bob_outputs {
                    n[s.index(a, b, x, y)] = Q::one();
                }
            }
            rows.push(Constraint::new(n, qi(-1)));
        }
    }
    for x in 0..s.alice_inputs {
        for a in 0..s.alice_outputs {
            for y in 1..s.bob_inputs {
                let mut n = vec![Q::zero(); s.dim()];
                for b in 0..s.bob_outputs {
                    n[s.index(a, b, x, y)] += Q::one();
                    n[s.index(a, b, x, 0)] -= Q::one();
                }
                rows.push(Constraint::new(n, Q::zero()));
            }
        }
    }
    for y in 0..s.bob_inputs {
        for b in 0..s.bob_outputs {
            for x in 1..s.alice_inputs {
                let mut n = vec![Q::zero(); s.dim()];
                for a in 0..s.alice_outputs {
                    n[s.index(a, b, x, y)] += Q::one();
                    n[s.index(a, b, 0, y)] -= Q::one();
                }
                rows.push(Constraint::new(n, Q::zero()));
            }
        }
    }
    rows
}

/// Reduces a list of equalities to an independent canonical set.
fn independent(dim: usize, rows: &[Constraint]) -> Vec<Constraint> {
    let stacked: Vec<Vec<Q>> = rows
        .iter()
        .map(|c| {
            let mut r = c.normal.clone();
            r.push(c.offset.clone());
            r
        })
        .collect();
    let (r, _) = geometry::linalg::rref(&stacked);
    r.into_iter()
        .map(|row| Constraint::new(row[..dim].to_vec(), row[dim].clone()).canonical_equality())
        .collect()
}

fn nonnegativity(s: &Scenario) -> Vec<Constraint> {
    (0..s.dim()).map(|i| Constraint::new(unit(s, i), Q::zero())).collect()
}

/// Nonnegativity, normalisation and no-signalling.
pub fn ns_hrep(s: &Scenario) -> PolytopeH {
    PolytopeH {
        dim: s.dim(),
        inequalities: nonnegativity(s),
        equalities: independent(s.dim(), &ns_equality_rows(s)),
    }
}

/// The no-signalling block for Charlie outcome `c`: when asked about `c`
/// Alice answers `c`; when asked about `x ≠ c` she never answers `x`.
pub fn lfic_block_hrep(s: &Scenario, c: usize) -> Result<PolytopeH> {
    s.require_query_shaped()?;
    if c >= s.charlie_outputs {
        return Err(Error::Shape(format!("Charlie outcome {c} out of range")));
    }
    let mut eqs = ns_equality_rows(s);
    for x in 0..s.alice_inputs {
        for y in 0..s.bob_inputs {
            for b in 0..s.bob_outputs {
                if x == c {
                    for a in (0..s.alice_outputs).filter(|&a| a != c) {
                        eqs.push(Constraint::new(unit(s, s.index(a, b, x, y)), Q::zero()));
                    }
                } else {
                    eqs.push(Constraint::new(unit(s, s.index(x, b, x, y)), Q::zero()));
                }
            }
        }
    }
    Ok(PolytopeH {
        dim: s.dim(),
        inequalities: nonnegativity(s),
        equalities: independent(s.dim(), &eqs),
    })
}

/// Union over `c` of the block vertex sets, in `c` order with duplicates
/// removed.
pub fn lfic_vertices(s: &Scenario) -> Result<PolytopeV> {
    s.require_query_shaped()?;
    let blocks: Vec<Result<PolytopeV>> = (0..s.charlie_outputs)
        .into_par_iter()
        .map(|c| geometry::facets_to_vertices(&lfic_block_hrep(s, c)?))
        .collect();
    let mut all = Vec::new();
    for b in blocks {
        all.extend(b?.vertices);
    }
    PolytopeV::new(s.dim(), all)
}

fn strategies(inputs: usize, outputs: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..inputs {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..outputs).map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o);
                    p
                })
            })
            .collect();
    }
    out
}

fn deterministic(s: &Scenario, alice: &[usize], bob: &[usize]) -> Vec<Q> {
    let mut v = vec![Q::zero(); s.dim()];
    for x in 0..s.alice_inputs {
        for y in 0..s.bob_inputs {
            v[s.index(alice[x], bob[y], x, y)] = Q::one();
        }
    }
    v
}

/// Products of deterministic strategies `x → a` and `y → b`.
pub fn lhv_vertices(s: &Scenario) -> PolytopeV {
    let mut pts = Vec::new();
    for a in strategies(s.alice_inputs, s.alice_outputs) {
        for b in strategies(s.bob_inputs, s.bob_outputs) {
            pts.push(deterministic(s, &a, &b));
        }
    }
    PolytopeV::new(s.dim(), pts).expect("dimensions agree")
}

/// Alice outputs `c` for every input; Bob is deterministic.
pub fn lf_vertices(s: &Scenario) -> Result<PolytopeV> {
    if s.alice_outputs != s.charlie_outputs {
        return Err(Error::Shape("LF model needs alice_outputs = charlie_outputs".into()));
    }
    let mut pts = Vec::new();
    for c in 0..s.charlie_outputs {
        for b in strategies(s.bob_inputs, s.bob_outputs) {
            pts.push(deterministic(s, &vec![c; s.alice_inputs], &b));
        }
    }
    PolytopeV::new(s.dim(), pts)
}

/// Membership verdict with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// `point = Σ weight·vertex` with nonnegative weights summing to one.
    Inside { weights: Vec<(Vec<Q>, Q)> },
    /// `functional ≥ 0` on the model and negative at the point.
    Outside { functional: BellFunctional, value: Q },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport {
    pub model: ModelKind,
    /// The exact point that was tested.
    pub point: Vec<Q>,
    /// True when a float behaviour went through [`exact_point`].
    pub rounded: bool,
    pub verdict: Verdict,
}

impl MembershipReport {
    pub fn is_inside(&self) -> bool {
        matches!(self.verdict, Verdict::Inside { .. })
    }
}

/// Residual below which a rounded point is projected onto the model's affine
/// hull before testing.
pub const PROJECTION_TOLERANCE: f64 = 1e-9;
/// Contraction toward the vertex centroid applied to rounded points.
pub const CONTRACTION: (i64, i64) = (1, 1_000_000_000);

/// Rounding step for float behaviours: continued-fraction rationalisation
/// (denominator cap [`crate::rational::RATIONALIZE_DENOMINATOR_CAP`]), exact
/// projection onto the affine hull of the model when the residual is at most
/// [`PROJECTION_TOLERANCE`], then contraction toward the vertex centroid by
/// [`CONTRACTION`].
pub fn exact_point(p: &Behavior, vertices: &PolytopeV, chart: &AffineChart) -> Result<(Vec<Q>, bool)> {
    if p.is_exact() {
        return Ok((p.to_rational_vec()?, false));
    }
    let mut v = p.to_rational_vec()?;
    let residual = chart
        .equalities
        .iter()
        .map(|e| crate::rational::to_f64(&e.value(&v)).abs())
        .fold(0.0, f64::max);
    if residual <= PROJECTION_TOLERANCE {
        v = chart.lift(&chart.project(&v));
        let n = Q::from_integer((vertices.vertices.len() as i64).into());
        let mut centroid = vec![Q::zero(); vertices.dim];
        for w in &vertices.vertices {
            for (c, x) in centroid.iter_mut().zip(w) {
                *c += x;
            }
        }
        let eps = crate::rational::q(CONTRACTION.0, CONTRACTION.1);
        let keep = Q::one() - &eps;
        for (x, c) in v.iter_mut().zip(&centroid) {
            *x = &keep * &*x + &eps * c / &n;
        }
    }
    Ok((v, true))
}

/// Decides `p ∈ model` exactly.
pub fn membership(p: &Behavior, kind: ModelKind) -> Result<MembershipReport> {
    let model = kind.model();
    let s = p.scenario();
    let vertices = model.vertices(s)?;
    let chart = affine_hull_of(s.dim(), &vertices.vertices)?;
    let (point, rounded) = exact_point(p, &vertices, &chart)?;
    let verdict = match convex_decomposition(&vertices, &point) {
        Ok(weights) => Verdict::Inside { weights },
        Err(farkas_functional) => {
            // prefer a facet when the H-representation is cheap or cached
            let h = if matches!(kind, ModelKind::Lhv) { None } else { Some(model.hrep(s)?) };
            let (normal, offset) = match h.as_ref().and_then(|h| h.most_violated(&point)) {
                Some((c, _)) => (c.normal, c.offset),
                None => farkas_functional,
            };
            let f = BellFunctional::new(*s, normal, offset, Sense::LowerBound)?;
            let value = f.evaluate(&Behavior::exact(*s, point.clone())?)?.exact().cloned().expect("exact input");
            Verdict::Outside { functional: f, value }
        }
    };
    Ok(MembershipReport {
        model: kind,
        point,
        rounded,
        verdict,
    })
}

/// Convex weights reproducing `point`, or a separating `(normal, offset)`
/// that is nonnegative on every vertex and negative at `point`.
pub fn convex_decomposition(v: &PolytopeV, point: &[Q]) -> std::result::Result<Vec<(Vec<Q>, Q)>, (Vec<Q>, Q)> {
    let n = v.vertices.len();
    let mut equalities = Vec::with_capacity(v.dim + 1);
    for k in 0..v.dim {
        let normal: Vec<Q> = v.vertices.iter().map(|w| w[k].clone()).collect();
        equalities.push(Constraint::new(normal, -point[k].clone()));
    }
    equalities.push(Constraint::new(vec![Q::one(); n], -Q::one()));
    let lp = LinearProgram {
        num_vars: n,
        nonneg: vec![true; n],
        equalities,
        inequalities: vec![],
        objective: vec![Q::zero(); n],
        objective_offset: Q::zero(),
        direction: geometry::Direction::Minimize,
    };
    match lp::solve(&lp) {
        LpOutcome::Optimal(s) => Ok(s
            .argument
            .into_iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, w)| (v.vertices[i].clone(), w))
            .collect()),
        LpOutcome::Infeasible(f) => {
            // y·w_i + y0 ≤ 0 on vertices and y·p + y0 > 0 at the point, with
            // y on the coordinate rows and y0 on the normalisation row.
            let y = &f.equalities[..v.dim];
            let y0 = &f.equalities[v.dim];
            let normal: Vec<Q> = y.iter().map(|x| -x).collect();
            Err((normal, -y0.clone()))
        }
        LpOutcome::Unbounded(_) => unreachable!("zero objective"),
    }
}

/// Exact check of a membership report against the model's vertex set.
pub fn verify_report(r: &MembershipReport, vertices: &PolytopeV) -> bool {
    match &r.verdict {
        Verdict::Inside { weights } => {
            let mut sum = Q::zero();
            let mut acc = vec![Q::zero(); vertices.dim];
            for (w, l) in weights {
                if l.is_negative() || !vertices.contains_vertex(w) {
                    return false;
                }
                sum += l;
                for (a, x) in acc.iter_mut().zip(w) {
                    *a += l * x;
                }
            }
            sum.is_one() && acc == r.point
        }
        Verdict::Outside { functional, value } => {
            let c = Constraint::new(functional.coefficients().to_vec(), functional.offset().clone());
            value.is_negative()
                && c.value(&r.point) == *value
                && vertices.vertices.iter().all(|w| !c.value(w).is_negative())
        }
    }
}

/// LFIC facets with their status on the no-signalling polytope.
#[derive(Clone, Debug)]
pub struct FacetCensus {
    pub facets: Arc<PolytopeH>,
    /// Facets whose reported (hull-reduced) form is violated somewhere on NS.
    pub ns_invalid: Vec<usize>,
    /// Facets for which no representative modulo the hull equalities is
    /// valid on NS.
    pub ns_invalid_every_form: Vec<usize>,
}

/// Minimum of `c` over the NS polytope, exactly.
pub fn ns_minimum(s: &Scenario, c: &Constraint) -> Result<Q> {
    let h = ModelKind::Ns.model().hrep(s)?;
    Ok(geometry::lp_optimize(&c.normal, &c.offset, &h, geometry::Direction::Minimize)?.optimum)
}

/// `max_λ min_{p ∈ NS} (c + Σ λ_k e_k)(p)`: nonnegative iff some
/// representative of `c` modulo `equalities` is valid on NS. Returns the
/// optimum and the optimal `λ`.
///
/// Solved as the dual of the inner minimum over the NS H-representation
/// `E p + o_E = 0`, `G p + o_G ≥ 0`: maximise `t` subject to
/// `c + Σ λ e = Σ μ E + Σ ν G + t` as affine functions, `ν ≥ 0`.
pub fn best_ns_minimum(s: &Scenario, c: &Constraint, equalities: &[Constraint]) -> Result<(Q, Vec<Q>)> {
    let h = ModelKind::Ns.model().hrep(s)?;
    let (k, me, mi) = (equalities.len(), h.equalities.len(), h.inequalities.len());
    // variables (λ, μ, ν, t)
    let n = k + me + mi + 1;
    let column = |j: usize| -> (Vec<Q>, Q) {
        if j < k {
            (equalities[j].normal.clone(), equalities[j].offset.clone())
        } else if j < k + me {
            let e = &h.equalities[j - k];
            (e.normal.iter().map(|x| -x).collect(), -e.offset.clone())
        } else if j < n - 1 {
            let g = &h.inequalities[j - k - me];
            (g.normal.iter().map(|x| -x).collect(), -g.offset.clone())
        } else {
            (vec![Q::zero(); s.dim()], -Q::one())
        }
    };
    let cols: Vec<(Vec<Q>, Q)> = (0..n).map(column).collect();
    let mut rows: Vec<Constraint> = (0..s.dim())
        .map(|i| Constraint::new(cols.iter().map(|col| col.0[i].clone()).collect(), c.normal[i].clone()))
        .collect();
    rows.push(Constraint::new(cols.iter().map(|col| col.1.clone()).collect(), c.offset.clone()));
    let mut objective = vec![Q::zero(); n];
    objective[n - 1] = Q::one();
    let mut nonneg = vec![false; n];
    for x in nonneg.iter_mut().take(n - 1).skip(k + me) {
        *x = true;
    }
    let lp = LinearProgram {
        objective,
        direction: geometry::Direction::Maximize,
        nonneg,
        ..LinearProgram::feasibility(n, rows, vec![])
    };
    match lp::solve(&lp) {
        LpOutcome::Optimal(sol) => Ok((sol.optimum, sol.argument[..k].to_vec())),
        LpOutcome::Infeasible(f) => Err(Error::Infeasible(Box::new(f))),
        LpOutcome::Unbounded(r) => Err(Error::Unbounded(Box::new(r))),
    }
}

pub fn facet_census(s: &Scenario) -> Result<FacetCensus> {
    let facets = ModelKind::Lfic.model().hrep(s)?;
    let status: Vec<(bool, bool)> = facets
        .inequalities
        .par_iter()
        .map(|c| {
            let reported = ns_minimum(s, c)?.is_negative();
            let every = reported && best_ns_minimum(s, c, &facets.equalities)?.0.is_negative();
            Ok((reported, every))
        })
        .collect::<Result<_>>()?;
    Ok(FacetCensus {
        ns_invalid: (0..status.len()).filter(|&i| status[i].0).collect(),
        ns_invalid_every_form: (0..status.len()).filter(|&i| status[i].1).collect(),
        facets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_of_deterministic_models() {
        let s = Scenario::main();
        assert_eq!(lhv_vertices(&s).len(), 108);
        assert_eq!(lf_vertices(&s).unwrap().len(), 12);
        assert_eq!(lhv_vertices(&Scenario::bipartite(2, 2, 2, 2)).len(), 16);
    }

    #[test]
    fn lf_vertices_are_lhv_vertices() {
        let s = Scenario::main();
        let lhv = lhv_vertices(&s);
        assert!(lf_vertices(&s).unwrap().vertices.iter().all(|v| lhv.contains_vertex(v)));
    }

    #[test]
    fn single_query_scenario_is_bob_local() {
        let s = Scenario::query(1, 2, 2);
        let v = lfic_vertices(&s).unwrap();
        assert_eq!(v.sorted_vertices(), lhv_vertices(&s).sorted_vertices());
    }

    #[test]
    fn unknown_model_lists_names() {
        let e = "qm".parse::<ModelKind>().unwrap_err();
        assert!(e.to_string().contains("lfic, ns, lhv, lf"));
    }
}
