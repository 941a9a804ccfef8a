//! Moment-matrix relaxations of the quantum set for bipartite scenarios.
//!
//! Operators are projectors `A_{x,a}` (`a ≥ 1`) and `B_{y,b}` (`b ≥ 1`); the
//! outcome-0 projectors are eliminated through completeness. Moments are taken
//! real, so a word and its adjoint share a label.

pub mod sdp;
pub mod seesaw;

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::{Behavior, BellFunctional, Scenario, Sense};
use sdp::{Sdp, SdpOptions, SdpSolution, SparseSym};

pub use seesaw::{seesaw_lower_bound, SeesawOptions, SeesawResult};

/// Width of the bisection bracket in [`quantum_boundary_along_ray`].
pub const BISECTION_WIDTH: f64 = 1e-5;
/// A probe is feasible when the certified upper bound on the smallest
/// eigenvalue margin is at least `-FEASIBILITY_TOLERANCE`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-7;
const ELIMINATION_TOLERANCE: f64 = 1e-10;
const CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    One,
    OneAB,
    Two,
    /// Level 2 without the `B·B'` words.
    TwoNoBB,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::One, Level::OneAB, Level::Two, Level::TwoNoBB];

    pub fn name(self) -> &'static str {
        match self {
            Level::One => "1",
            Level::OneAB => "1+AB",
            Level::Two => "2",
            Level::TwoNoBB => "2-no-BB",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Level::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::unknown("level", s, &["1", "1+AB", "2", "2-no-BB"]))
    }
}

/// Extra operator identities imposed on top of the projector algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relations {
    /// Projector algebra only.
    Standard,
    /// The "yes" projectors `A_{x,x}` of the query scenario come from one
    /// measurement: they are mutually orthogonal and sum to the identity.
    QueryComplete,
}

impl Relations {
    pub fn name(self) -> &'static str {
        match self {
            Relations::Standard => "standard",
            Relations::QueryComplete => "query-complete",
        }
    }
}

impl FromStr for Relations {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Relations::Standard),
            "query-complete" => Ok(Relations::QueryComplete),
            _ => Err(Error::unknown("relation set", s, &["standard", "query-complete"])),
        }
    }
}

/// Letter `(input, output)` of one party.
pub type Letter = (usize, usize);

/// Operator word with Alice's letters followed by Bob's; the two parties
/// commute, so this split form is canonical once each half is reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub alice: Vec<Letter>,
    pub bob: Vec<Letter>,
}

fn reduce_party(letters: &[Letter]) -> Option<Vec<Letter>> {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        match out.last() {
            Some(&prev) if prev == l => {}
            Some(&prev) if prev.0 == l.0 => return None,
            _ => out.push(l),
        }
    }
    Some(out)
}

impl Word {
    pub fn identity() -> Self {
        Word {
            alice: vec![],
            bob: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.alice.len() + self.bob.len()
    }

    pub fn is_identity(&self) -> bool {
        self.len() == 0
    }

    pub fn adjoint(&self) -> Word {
        Word {
            alice: self.alice.iter().rev().copied().collect(),
            bob: self.bob.iter().rev().copied().collect(),
        }
    }

    /// Reduced product `self · other`, `None` when it vanishes.
    pub fn times(&self, other: &Word) -> Option<Word> {
        let alice = reduce_party(&[self.alice.as_slice(), other.alice.as_slice()].concat())?;
        let bob = reduce_party(&[self.bob.as_slice(), other.bob.as_slice()].concat())?;
        Some(Word { alice, bob })
    }

    /// Representative of `{w, w†}`.
    pub fn label(&self) -> Word {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .alice
            .iter()
            .map(|&(x, a)| format!("A{x}{a}"))
            .chain(self.bob.iter().map(|&(y, b)| format!("B{y}{b}")))
            .collect();
        f.write_str(&parts.join("*"))
    }
}

/// Linear combination of operator words.
type Poly = Vec<(f64, Word)>;

/// Linear form over moment labels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelForm {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

#[derive(Clone, Debug)]
pub struct MomentProgram {
    pub scenario: Scenario,
    pub level: Level,
    pub relations: Relations,
    pub basis: Vec<Word>,
    /// Basis positions entering the semidefinite constraint. The others are
    /// forced by the relations to be combinations of these, so their rows
    /// and columns follow from the linear constraints.
    pub kept: Vec<usize>,
    /// `labels[0]` is the identity.
    pub labels: Vec<Word>,
    /// Label of each moment-matrix entry, `None` for vanishing words.
    pub template: Vec<Vec<Option<usize>>>,
    /// Linear identities `Σ coef·moment = constant` among labels (the
    /// identity moment fixed to one comes first).
    pub constraints: Vec<LabelForm>,
    /// Each behaviour entry as a linear form over labels.
    pub entries: Vec<LabelForm>,
    /// Objective as a form over labels; minimised for lower-bound functionals
    /// and maximised for upper-bound ones.
    pub objective: LabelForm,
    pub sense: Sense,
}

fn alice_letters(s: &Scenario) -> Vec<Letter> {
    (0..s.alice_inputs)
        .flat_map(|x| (1..s.alice_outputs).map(move |a| (x, a)))
        .collect()
}

fn bob_letters(s: &Scenario) -> Vec<Letter> {
    (0..s.bob_inputs)
        .flat_map(|y| (1..s.bob_outputs).map(move |b| (y, b)))
        .collect()
}

pub fn monomial_basis(s: &Scenario, level: Level) -> Vec<Word> {
    let al = alice_letters(s);
    let bl = bob_letters(s);
    let mut basis = vec![Word::identity()];
    basis.extend(al.iter().map(|&l| Word {
        alice: vec![l],
        bob: vec![],
    }));
    basis.extend(bl.iter().map(|&l| Word {
        alice: vec![],
        bob: vec![l],
    }));
    if matches!(level, Level::Two | Level::TwoNoBB) {
        for &l in &al {
            for &m in &al {
                if l.0 != m.0 {
                    basis.push(Word {
                        alice: vec![l, m],
                        bob: vec![],
                    });
                }
            }
        }
    }
    if level != Level::One {
        for &l in &al {
            for &m in &bl {
                basis.push(Word {
                    alice: vec![l],
                    bob: vec![m],
                });
            }
        }
    }
    if level == Level::Two {
        for &l in &bl {
            for &m in &bl {
                if l.0 != m.0 {
                    basis.push(Word {
                        alice: vec![],
                        bob: vec![l, m],
                    });
                }
            }
        }
    }
    basis
}

/// `Â_{x,a}` with the outcome-0 projector expanded through completeness.
fn alice_poly(s: &Scenario, x: usize, a: usize) -> Poly {
    if a > 0 {
        return vec![(
            1.0,
            Word {
                alice: vec![(x, a)],
                bob: vec![],
            },
        )];
    }
    let mut p = vec![(1.0, Word::identity())];
    for a in 1..s.alice_outputs {
        p.push((
            -1.0,
            Word {
                alice: vec![(x, a)],
                bob: vec![],
            },
        ));
    }
    p
}

fn bob_poly(s: &Scenario, y: usize, b: usize) -> Poly {
    if b > 0 {
        return vec![(
            1.0,
            Word {
                alice: vec![],
                bob: vec![(y, b)],
            },
        )];
    }
    let mut p = vec![(1.0, Word::identity())];
    for b in 1..s.bob_outputs {
        p.push((
            -1.0,
            Word {
                alice: vec![],
                bob: vec![(y, b)],
            },
        ));
    }
    p
}

fn poly_mul(p: &Poly, q: &Poly) -> Poly {
    let mut out = Vec::new();
    for (c, u) in p {
        for (d, v) in q {
            if let Some(w) = u.times(v) {
                out.push((c * d, w));
            }
        }
    }
    out
}

fn query_relations(s: &Scenario) -> Vec<Poly> {
    let k = s.alice_inputs;
    let proj: Vec<Poly> = (0..k).map(|x| alice_poly(s, x, x)).collect();
    let mut sum: Poly = proj.iter().flatten().cloned().collect();
    sum.push((-1.0, Word::identity()));
    let mut out = vec![sum];
    for x in 0..k {
        for x2 in 0..k {
            if x != x2 {
                out.push(poly_mul(&proj[x], &proj[x2]));
            }
        }
    }
    out
}

/// Basis positions left after dropping words whose vectors `w|ψ⟩` the
/// relations force to be combinations of other basis vectors. The full moment
/// matrix is singular on every feasible point; the reduced one has an interior.
fn reduced_basis(basis: &[Word], rels: &[Poly]) -> Vec<usize> {
    let pos: HashMap<&Word, usize> = basis.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let n = basis.len();
    let mut kernel: Vec<Vec<f64>> = Vec::new();
    for r in rels {
        for u in basis {
            let up = vec![(1.0, u.clone())];
            for p in [poly_mul(r, &up), poly_mul(&up, r)] {
                let mut v = vec![0.0; n];
                let mut ok = true;
                for (c, w) in &p {
                    match pos.get(w) {
                        Some(&j) => v[j] += c,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && v.iter().any(|c| *c != 0.0) {
                    kernel.push(v);
                }
            }
        }
    }
    // Echelon form with pivots at the highest index, so longer words go first.
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for mut v in kernel {
        for (p, r) in &rows {
            let f = v[*p];
            if f != 0.0 {
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= f * y;
                }
            }
        }
        if let Some(p) = (0..n).rev().find(|&j| v[j].abs() > ELIMINATION_TOLERANCE) {
            let piv = v[p];
            for x in v.iter_mut() {
                *x /= piv;
            }
            for (_, r) in rows.iter_mut() {
                let f = r[p];
                if f != 0.0 {
                    for (x, y) in r.iter_mut().zip(&v) {
                        *x -= f * y;
                    }
                }
            }
            rows.push((p, v));
        }
    }
    let drop: std::collections::HashSet<usize> = rows.iter().map(|r| r.0).collect();
    (0..n).filter(|i| !drop.contains(i)).collect()
}

/// Incremental row echelon form over `f64`, rows stored dense in label space.
struct Echelon {
    width: usize,
    rows: Vec<(usize, Vec<f64>, f64)>,
}

impl Echelon {
    fn new(width: usize) -> Self {
        Echelon { width, rows: vec![] }
    }

    /// Reduces `row` against the stored pivots; returns the residual.
    fn reduce(&self, mut row: Vec<f64>, mut rhs: f64) -> (Vec<f64>, f64) {
        for (p, r, c) in &self.rows {
            let f = row[*p];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(r) {
                    *x -= f * y;
                }
                rhs -= f * c;
                row[*p] = 0.0;
            }
        }
        (row, rhs)
    }

    /// Adds a row; `Err(residual)` when it contradicts the stored ones.
    fn push(&mut self, row: Vec<f64>, rhs: f64) -> std::result::Result<bool, f64> {
        let (mut row, mut rhs) = self.reduce(row, rhs);
        let (p, &v) = match row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        {
            Some(x) => x,
            None => return Ok(false),
        };
        if v.abs() <= ELIMINATION_TOLERANCE {
            return if rhs.abs() <= CONSISTENCY_TOLERANCE { Ok(false) } else { Err(rhs) };
        }
        for x in row.iter_mut() {
            *x /= v;
            if x.abs() <= 1e-15 {
                *x = 0.0;
            }
        }
        rhs /= v;
        row[p] = 1.0;
        for (_, r, c) in self.rows.iter_mut() {
            let f = r[p];
            if f != 0.0 {
                for (x, y) in r.iter_mut().zip(&row) {
                    *x -= f * y;
                }
                *c -= f * rhs;
                r[p] = 0.0;
            }
        }
        self.rows.push((p, row, rhs));
        Ok(true)
    }

    /// Each label as `constant + Σ coef·free`, with free labels listed.
    fn parametrise(&self) -> (Vec<usize>, Vec<(f64, Vec<f64>)>) {
        let pivots: HashMap<usize, usize> = self.rows.iter().enumerate().map(|(i, r)| (r.0, i)).collect();
        let free: Vec<usize> = (0..self.width).filter(|l| !pivots.contains_key(l)).collect();
        let exprs = (0..self.width)
            .map(|l| match pivots.get(&l) {
                Some(&i) => {
                    let (_, r, c) = &self.rows[i];
                    (*c, free.iter().map(|&f| -r[f]).collect())
                }
                None => (0.0, free.iter().map(|&f| if f == l { 1.0 } else { 0.0 }).collect()),
            })
            .collect();
        (free, exprs)
    }
}

impl MomentProgram {
    /// Size of the semidefinite block.
    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    fn label_index(&self) -> HashMap<Word, usize> {
        self.labels.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect()
    }

    fn poly_form(&self, index: &HashMap<Word, usize>, p: &Poly) -> Option<LabelForm> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (c, w) in p {
            let l = *index.get(&w.label())?;
            *acc.entry(l).or_default() += c;
        }
        Some(LabelForm {
            terms: acc.into_iter().filter(|t| t.1 != 0.0).collect(),
            constant: 0.0,
        })
    }

    /// Linear form of `p(a,b|x,y)`.
    pub fn entry_form(&self, a: usize, b: usize, x: usize, y: usize) -> &LabelForm {
        &self.entries[self.scenario.index(a, b, x, y)]
    }

    /// Behaviour read off a moment assignment (indexed by label).
    pub fn behavior_from_moments(&self, moments: &[f64]) -> Behavior {
        let v = self
            .entries
            .iter()
            .map(|f| f.constant + f.terms.iter().map(|&(l, c)| c * moments[l]).sum::<f64>())
            .collect();
        Behavior::float(self.scenario, v).expect("shape follows the scenario")
    }

    /// Moments of the given matrix entries, averaged over positions.
    pub fn moments_from_matrix(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let mut sum = vec![0.0; self.labels.len()];
        let mut count = vec![0usize; self.labels.len()];
        for (i, row) in self.template.iter().enumerate() {
            for (j, l) in row.iter().enumerate() {
                if let Some(l) = l {
                    sum[*l] += g[(i, j)];
                    count[*l] += 1;
                }
            }
        }
        sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
    }

    /// Text dump: labels, matrix template, then constraint triplets
    /// `row label coefficient` with `row rhs value` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# moment program");
        let _ = writeln!(out, "# level {} relations {}", self.level, self.relations.name());
        let _ = writeln!(out, "# basis {} labels {}", self.basis.len(), self.labels.len());
        let _ = writeln!(out, "basis");
        for (i, w) in self.basis.iter().enumerate() {
            let _ = writeln!(out, "{i} {w}");
        }
        let _ = writeln!(out, "kept");
        let kept: Vec<String> = self.kept.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(out, "{}", kept.join(" "));
        let _ = writeln!(out, "labels");
        for (i, w) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{i} {w}");
        }
        let _ = writeln!(out, "template");
        for row in &self.template {
            let cells: Vec<String> = row
                .iter()
                .map(|l| l.map_or_else(|| "-".to_string(), |l| l.to_string()))
                .collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        let _ = writeln!(out, "constraints");
        for (r, c) in self.constraints.iter().enumerate() {
            for &(l, v) in &c.terms {
                let _ = writeln!(out, "{r} {l} {v:?}");
            }
            let _ = writeln!(out, "{r} rhs {:?}", c.constant);
        }
        let _ = writeln!(out, "objective");
        for &(l, v) in &self.objective.terms {
            let _ = writeln!(out, "{l} {v:?}");
        }
        let _ = writeln!(out, "constant {:?}", self.objective.constant);
        out
    }
}

/// Builds the moment relaxation for `f` (or the zero functional).
pub fn build_moment_program(
    s: &Scenario,
    f: Option<&BellFunctional>,
    level: Level,
    relations: Relations,
) -> Result<MomentProgram> {
    s.check()?;
    if relations == Relations::QueryComplete {
        s.require_query_shaped()?;
    }
    if let Some(f) = f {
        if f.scenario() != s {
            return Err(Error::Shape("functional scenario differs from the program scenario".into()));
        }
    }
    let basis = monomial_basis(s, level);
    let kept = match relations {
        Relations::Standard => (0..basis.len()).collect(),
        Relations::QueryComplete => reduced_basis(&basis, &query_relations(s)),
    };
    let mut labels = vec![Word::identity()];
    let mut index: HashMap<Word, usize> = HashMap::new();
    index.insert(Word::identity(), 0);
    let mut template = vec![vec![None; basis.len()]; basis.len()];
    for (i, u) in basis.iter().enumerate() {
        let ua = u.adjoint();
        for (j, v) in basis.iter().enumerate() {
            if let Some(w) = ua.times(v) {
                let l = w.label();
                let next = labels.len();
                let id = *index.entry(l.clone()).or_insert_with(|| {
                    labels.push(l);
                    next
                });
                template[i][j] = Some(id);
            }
        }
    }
    let mut prog = MomentProgram {
        scenario: *s,
        level,
        relations,
        basis,
        kept,
        labels,
        template,
        constraints: vec![LabelForm {
            terms: vec![(0, 1.0)],
            constant: 1.0,
        }],
        entries: vec![],
        objective: LabelForm::default(),
        sense: f.map_or(Sense::LowerBound, |f| f.sense()),
    };
    let index = prog.label_index();

    let mut entries = Vec::with_capacity(s.dim());
    for e in s.entries() {
        let p = poly_mul(&alice_poly(s, e.x, e.a), &bob_poly(s, e.y, e.b));
        let form = prog
            .poly_form(&index, &p)
            .ok_or_else(|| Error::Shape(format!("behaviour entry {e:?} is not a moment")))?;
        entries.push(form);
    }
    prog.entries = entries;

    if relations == Relations::QueryComplete {
        let rels = query_relations(s);
        let mut seen = std::collections::HashSet::new();
        let mut extra = Vec::new();
        for u in &prog.basis {
            let ua = vec![(1.0, u.adjoint())];
            for v in &prog.basis {
                let vp = vec![(1.0, v.clone())];
                for r in &rels {
                    let p = poly_mul(&poly_mul(&ua, r), &vp);
                    if let Some(form) = prog.poly_form(&index, &p) {
                        if form.terms.is_empty() {
                            continue;
                        }
                        let key: Vec<(usize, i64)> =
                            form.terms.iter().map(|&(l, c)| (l, (c * 1e6).round() as i64)).collect();
                        if seen.insert(key) {
                            extra.push(form);
                        }
                    }
                }
            }
        }
        prog.constraints.extend(extra);
    }

    if let Some(f) = f {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut constant = crate::rational::to_f64(f.offset());
        for (i, c) in f.coefficients().iter().enumerate() {
            let c = crate::rational::to_f64(c);
            if c == 0.0 {
                continue;
            }
            let form = &prog.entries[i];
            constant += c * form.constant;
            for &(l, v) in &form.terms {
                *acc.entry(l).or_default() += c * v;
            }
        }
        prog.objective = LabelForm {
            terms: acc.into_iter().filter(|t| t.1 != 0.0).collect(),
            constant,
        };
    }
    Ok(prog)
}

/// Affine parametrisation of the labels satisfying a set of constraints.
struct Parametrisation {
    /// `(constant, coefficients over free variables)` per label.
    exprs: Vec<(f64, Vec<f64>)>,
    nfree: usize,
}

fn parametrise(prog: &MomentProgram, extra: &[LabelForm]) -> Result<Parametrisation> {
    parametrise_with(prog, extra, 0)
}

/// As [`parametrise`], with `extra_cols` auxiliary variables after the labels.
fn parametrise_with(prog: &MomentProgram, extra: &[LabelForm], extra_cols: usize) -> Result<Parametrisation> {
    let width = prog.labels.len() + extra_cols;
    let mut ech = Echelon::new(width);
    for c in prog.constraints.iter().chain(extra) {
        let mut row = vec![0.0; width];
        for &(l, v) in &c.terms {
            row[l] += v;
        }
        if let Err(res) = ech.push(row, c.constant) {
            return Err(Error::Invalid(format!(
                "linear constraints on the moments are inconsistent (residual {res:e})"
            )));
        }
    }
    let (free, exprs) = ech.parametrise();
    Ok(Parametrisation {
        exprs,
        nfree: free.len(),
    })
}

/// LMI data `Γ(z) = F0 + Σ z_k F_k` for the parametrisation.
fn lmi(prog: &MomentProgram, par: &Parametrisation) -> (DMatrix<f64>, Vec<SparseSym>) {
    let n = prog.dim();
    let mut f0 = DMatrix::zeros(n, n);
    let mut fs = vec![SparseSym::default(); par.nfree];
    for (i, &bi) in prog.kept.iter().enumerate() {
        for (j, &bj) in prog.kept.iter().enumerate() {
            if let Some(l) = prog.template[bi][bj] {
                let (c, coefs) = &par.exprs[l];
                f0[(i, j)] = *c;
                for (k, &v) in coefs.iter().enumerate() {
                    if v != 0.0 {
                        fs[k].entries.push((i, j, v));
                    }
                }
            }
        }
    }
    (f0, fs)
}

fn form_in_free(par: &Parametrisation, form: &LabelForm) -> (f64, Vec<f64>) {
    let mut c = form.constant;
    let mut v = vec![0.0; par.nfree];
    for &(l, w) in &form.terms {
        let (c0, coefs) = &par.exprs[l];
        c += w * c0;
        for (k, x) in coefs.iter().enumerate() {
            v[k] += w * x;
        }
    }
    (c, v)
}

#[derive(Clone, Debug)]
pub struct NpaSolution {
    /// Certified lower bound on the minimum for lower-bound functionals and
    /// upper bound on the maximum for upper-bound functionals.
    pub bound: f64,
    /// Objective at the returned moment matrix (an interior point).
    pub attained: f64,
    pub moment_matrix: DMatrix<f64>,
    pub relative_gap: f64,
    pub iterations: usize,
}

/// Minimises `c0 + c·z` over `F0 + Σ z_k F_k ⪰ 0` and returns the safe
/// lower bound `c0 − ⟨F0,X⟩ − Σ_k |c_k − ⟨F_k,X⟩|`; the residual term assumes
/// `|z_k| ≤ 1`, which holds for moments of projector words.
fn minimise(
    f0: DMatrix<f64>,
    fs: Vec<SparseSym>,
    c0: f64,
    c: Vec<f64>,
    opts: &SdpOptions,
) -> Result<(f64, f64, DMatrix<f64>, SdpSolution)> {
    let n = f0.nrows();
    // Variables absent from the matrix are either irrelevant or make the
    // problem unbounded.
    let (fs, c): (Vec<SparseSym>, Vec<f64>) = {
        let mut keep_f = Vec::new();
        let mut keep_c = Vec::new();
        for (f, ck) in fs.into_iter().zip(c) {
            let active = f.entries.iter().any(|e| e.2.abs() > 1e-14);
            if active {
                keep_f.push(f);
                keep_c.push(ck);
            } else if ck.abs() > 1e-14 {
                return Err(Error::Solver {
                    message: "objective depends on a moment the relaxation leaves free".into(),
                    best_bound: f64::NEG_INFINITY,
                    gap: f64::INFINITY,
                });
            }
        }
        (keep_f, keep_c)
    };
    let a: Vec<SparseSym> = fs
        .iter()
        .map(|f| SparseSym {
            entries: f.entries.iter().map(|&(r, cc, v)| (r, cc, -v)).collect(),
        })
        .collect();
    let b: Vec<f64> = c.iter().map(|v| -v).collect();
    let prob = Sdp { n, c: f0.clone(), a, b };
    let sol = prob.solve(opts)?;
    let residual: f64 = prob
        .a
        .iter()
        .zip(&prob.b)
        .map(|(ak, bk)| (bk - ak.inner(&sol.x)).abs())
        .sum();
    let f0x: f64 = f0.iter().zip(sol.x.iter()).map(|(p, q)| p * q).sum();
    let bound = c0 - f0x - residual;
    let attained = c0 + c.iter().zip(sol.y.iter()).map(|(p, q)| p * q).sum::<f64>();
    let mut gamma = f0;
    for (f, &z) in fs.iter().zip(sol.y.iter()) {
        f.add_scaled_to(&mut gamma, z);
    }
    Ok((bound, attained, gamma, sol))
}

/// Solves the relaxation for the program's objective.
pub fn sdp_solve(prog: &MomentProgram) -> Result<NpaSolution> {
    sdp_solve_with(prog, &SdpOptions::default())
}

pub fn sdp_solve_with(prog: &MomentProgram, opts: &SdpOptions) -> Result<NpaSolution> {
    let par = parametrise(prog, &[])?;
    let (f0, fs) = lmi(prog, &par);
    let (c0, c) = form_in_free(&par, &prog.objective);
    let flip = if prog.sense == Sense::UpperBound { -1.0 } else { 1.0 };
    let (c0, c): (f64, Vec<f64>) = if flip < 0.0 {
        (-c0, c.iter().map(|v| -v).collect())
    } else {
        (c0, c)
    };
    let (bound, attained, gamma, sol) = minimise(f0, fs, c0, c, opts)?;
    Ok(NpaSolution {
        bound: flip * bound,
        attained: flip * attained,
        moment_matrix: gamma,
        relative_gap: sol.relative_gap,
        iterations: sol.iterations,
    })
}

/// Certified upper bound on `max λ` with `Γ − λ·1 ⪰ 0` over moment matrices
/// reproducing `p`. Positive margins mean `p` is strictly inside the
/// relaxation; a negative bound proves infeasibility.
pub fn feasibility_margin(prog: &MomentProgram, p: &Behavior) -> Result<f64> {
    let s = &prog.scenario;
    if p.scenario() != s {
        return Err(Error::Shape("behaviour scenario differs from the program scenario".into()));
    }
    let v = p.to_f64_vec();
    let fixes: Vec<LabelForm> = prog
        .entries
        .iter()
        .zip(&v)
        .map(|(f, &pv)| LabelForm {
            terms: f.terms.clone(),
            constant: pv - f.constant,
        })
        .collect();
    let par = parametrise(prog, &fixes).map_err(|_| {
        Error::Invalid("behaviour is not in the affine hull of the relaxation (signalling or unnormalised)".into())
    })?;
    let (f0, mut fs) = lmi(prog, &par);
    let n = f0.nrows();
    // λ enters as Γ − λ·1; the last variable is λ, minimised as −λ.
    fs.push(SparseSym {
        entries: (0..n).map(|i| (i, i, -1.0)).collect(),
    });
    let mut c = vec![0.0; par.nfree + 1];
    c[par.nfree] = -1.0;
    let (bound, _, _, _) = minimise(f0, fs, 0.0, c, &SdpOptions::default())?;
    Ok(-bound)
}

pub fn is_feasible(prog: &MomentProgram, p: &Behavior) -> Result<bool> {
    Ok(feasibility_margin(prog, p)? >= -FEASIBILITY_TOLERANCE)
}

#[derive(Clone, Debug, PartialEq)]
pub enum RayBoundary {
    /// Largest feasible step, bracketed to [`BISECTION_WIDTH`]; `upper` is
    /// the smallest probed infeasible step.
    Bounded { t: f64, upper: f64, probes: usize },
    Unbounded,
}

impl RayBoundary {
    pub fn t(&self) -> Option<f64> {
        match self {
            RayBoundary::Bounded { t, .. } => Some(*t),
            RayBoundary::Unbounded => None,
        }
    }
}

fn along(origin: &[f64], dir: &[f64], t: f64, s: Scenario) -> Behavior {
    Behavior::float(s, origin.iter().zip(dir).map(|(o, d)| o + t * d).collect()).expect("shape checked")
}

/// Largest `t` with `origin + t·direction` in the relaxation, by bisection.
pub fn quantum_boundary_along_ray(prog: &MomentProgram, origin: &Behavior, direction: &[f64]) -> Result<RayBoundary> {
    let s = prog.scenario;
    if direction.len() != s.dim() {
        return Err(Error::Shape(format!("direction has {} entries, expected {}", direction.len(), s.dim())));
    }
    if direction.iter().all(|d| *d == 0.0) {
        return Ok(RayBoundary::Unbounded);
    }
    check_direction(&s, direction)?;
    let o = origin.to_f64_vec();
    if !is_feasible(prog, origin)? {
        return Err(Error::Invalid("ray origin is outside the relaxation".into()));
    }
    let mut probes = 1;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut hi_known = false;
    // One direct solve proposes a bracket; bisection only trusts probes.
    if let Ok(est) = ray_estimate(prog, &o, direction) {
        if est.is_finite() && est > 2.0 * BISECTION_WIDTH {
            let (a, b) = (est - 0.5 * BISECTION_WIDTH, est + 0.5 * BISECTION_WIDTH);
            probes += 2;
            let fa = is_feasible(prog, &along(&o, direction, a, s))?;
            let fb = is_feasible(prog, &along(&o, direction, b, s))?;
            if fa && !fb {
                lo = a;
                hi = b;
                hi_known = true;
            } else if fa {
                lo = b;
                hi = 2.0 * b;
            } else {
                hi = a;
                hi_known = true;
            }
        }
    }
    while !hi_known {
        probes += 1;
        if !is_feasible(prog, &along(&o, direction, hi, s))? {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(RayBoundary::Unbounded);
        }
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        probes += 1;
        if is_feasible(prog, &along(&o, direction, mid, s))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RayBoundary::Bounded { t: lo, upper: hi, probes })
}

/// Largest `t` from a single solve of `max t` with the moments reproducing
/// `origin + t·direction`. Only used to seed the bisection bracket.
pub fn ray_estimate(prog: &MomentProgram, origin: &[f64], direction: &[f64]) -> Result<f64> {
    let tcol = prog.labels.len();
    let fixes: Vec<LabelForm> = prog
        .entries
        .iter()
        .zip(origin.iter().zip(direction))
        .map(|(f, (&o, &d))| {
            let mut terms = f.terms.clone();
            terms.push((tcol, -d));
            LabelForm {
                terms,
                constant: o - f.constant,
            }
        })
        .collect();
    let par = parametrise_with(prog, &fixes, 1)?;
    let (f0, fs) = lmi(prog, &par);
    let (c0, c) = form_in_free(
        &par,
        &LabelForm {
            terms: vec![(tcol, -1.0)],
            constant: 0.0,
        },
    );
    let (_, attained, _, _) = minimise(f0, fs, c0, c, &SdpOptions::default())?;
    Ok(-attained)
}

/// Rejects directions that change normalisation or signal.
pub fn check_direction(s: &Scenario, d: &[f64]) -> Result<()> {
    let tol = 1e-9;
    for x in 0..s.alice_inputs {
        for y in 0..s.bob_inputs {
            let mut sum = 0.0;
            for a in 0..s.alice_outputs {
                for b in 0..s.bob_outputs {
                    sum += d[s.index(a, b, x, y)];
                }
            }
            if sum.abs() > tol {
                return Err(Error::Invalid(format!("direction changes normalisation at x={x}, y={y}")));
            }
        }
    }
    let alice = |a: usize, x: usize, y: usize| (0..s.bob_outputs).map(|b| d[s.index(a, b, x, y)]).sum::<f64>();
    let bob = |b: usize, x: usize, y: usize| (0..s.alice_outputs).map(|a| d[s.index(a, b, x, y)]).sum::<f64>();
    for x in 0..s.alice_inputs {
        for a in 0..s.alice_outputs {
            for y in 1..s.bob_inputs {
                if (alice(a, x, y) - alice(a, x, 0)).abs() > tol {
                    return Err(Error::Invalid("direction leaves the no-signalling affine hull".into()));
                }
            }
        }
    }
    for y in 0..s.bob_inputs {
        for b in 0..s.bob_outputs {
            for x in 1..s.alice_inputs {
                if (bob(b, x, y) - bob(b, 0, y)).abs() > tol {
                    return Err(Error::Invalid("direction leaves the no-signalling affine hull".into()));
                }
            }
        }
    }
    Ok(())
}

/// Boundary along many rays from one origin, in input order.
pub fn boundary_fan(prog: &MomentProgram, origin: &Behavior, directions: &[Vec<f64>]) -> Result<Vec<RayBoundary>> {
    directions
        .par_iter()
        .map(|d| quantum_boundary_along_ray(prog, origin, d))
        .collect()
}

/// CHSH in the `(2,2;2,2)` scenario as `Σ_{xy} (−1)^{xy} P(a=b|x,y) − 1`,
/// i.e. the correlator expression divided by two: local maximum 1, quantum
/// maximum `√2` (upper-bound sense).
pub fn chsh() -> BellFunctional {
    use crate::rational::{q, qi};
    let s = Scenario::bipartite(2, 2, 2, 2);
    let mut c = vec![qi(0); s.dim()];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                let sign = if x * y == 1 { -1 } else { 1 };
                c[s.index(a, a, x, y)] = qi(sign);
            }
        }
    }
    BellFunctional::new(s, c, q(-1, 1), Sense::UpperBound).expect("shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn basis_sizes() {
        let s = Scenario::main();
        assert_eq!(monomial_basis(&s, Level::One).len(), 9);
        assert_eq!(monomial_basis(&s, Level::OneAB).len(), 21);
        assert_eq!(monomial_basis(&s, Level::Two).len(), 47);
        assert_eq!(monomial_basis(&s, Level::TwoNoBB).len(), 45);
    }

    #[test]
    fn orthogonal_letters_vanish() {
        let a1 = Word {
            alice: vec![(0, 1)],
            bob: vec![],
        };
        let a2 = Word {
            alice: vec![(0, 2)],
            bob: vec![],
        };
        assert!(a1.times(&a2).is_none());
        assert_eq!(a1.times(&a1), Some(a1.clone()));
    }

    #[test]
    fn template_is_symmetric() {
        let p = build_moment_program(&Scenario::main(), Some(&presets::z1()), Level::Two, Relations::Standard).unwrap();
        for i in 0..p.basis.len() {
            for j in 0..p.basis.len() {
                assert_eq!(p.template[i][j], p.template[j][i]);
            }
        }
        assert_eq!(p.template[0][0], Some(0));
    }

    #[test]
    fn constant_objective() {
        let s = Scenario::main();
        let one = BellFunctional::new(s, vec![crate::rational::qi(0); s.dim()], crate::rational::qi(1), Sense::UpperBound)
            .unwrap();
        let p = build_moment_program(&s, Some(&one), Level::One, Relations::Standard).unwrap();
        let sol = sdp_solve(&p).unwrap();
        assert!((sol.bound - 1.0).abs() < 1e-7);
    }
}
