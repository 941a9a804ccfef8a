//! Exact two-phase simplex with Bland's rule.
//!
//! Problems are stated over variables that are either free or nonnegative,
//! with affine equality rows `a·z + o = 0` and inequality rows `a·z + o ≥ 0`.
//! Every outcome carries a certificate that can be checked with rational
//! arithmetic alone: dual multipliers at an optimum, a Farkas combination when
//! infeasible, a recession ray when unbounded.

use num_traits::{Signed, Zero};

use super::Constraint;
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub nonneg: Vec<bool>,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
    pub objective: Vec<Q>,
    pub objective_offset: Q,
    pub direction: Direction,
}

/// Multipliers proving a bound on the objective.
///
/// With `c` the objective negated for maximisation, the certificate states
/// `c = Σ equalities·a_E + Σ inequalities·a_G + bounds` with `inequalities ≥ 0`
/// and `bounds ≥ 0` (zero on free variables). For every feasible `z` this gives
/// `c·z ≥ −Σ y·o`, so the optimum is `offset − Σ y·o` (minimisation) or
/// `offset + Σ y·o` (maximisation).
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub equalities: Vec<Q>,
    pub inequalities: Vec<Q>,
    pub bounds: Vec<Q>,
}

/// `Σ equalities·a_E + Σ inequalities·a_G + bounds = 0` with nonnegative
/// `inequalities`/`bounds` and `Σ equalities·o_E + Σ inequalities·o_G < 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FarkasCertificate {
    pub equalities: Vec<Q>,
    pub inequalities: Vec<Q>,
    pub bounds: Vec<Q>,
}

/// Recession direction of the feasible region. For an unbounded LP the
/// objective strictly improves along it.
#[derive(Clone, Debug, PartialEq)]
pub struct Ray {
    pub direction: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub optimum: Q,
    pub argument: Vec<Q>,
    pub certificate: DualCertificate,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
    Unbounded(Ray),
}

impl LinearProgram {
    /// Feasibility problem over free variables (zero objective).
    pub fn feasibility(num_vars: usize, equalities: Vec<Constraint>, inequalities: Vec<Constraint>) -> Self {
        LinearProgram {
            num_vars,
            nonneg: vec![false; num_vars],
            equalities,
            inequalities,
            objective: vec![Q::zero(); num_vars],
            objective_offset: Q::zero(),
            direction: Direction::Minimize,
        }
    }

    fn min_objective(&self) -> Vec<Q> {
        match self.direction {
            Direction::Minimize => self.objective.clone(),
            Direction::Maximize => self.objective.iter().map(|c| -c).collect(),
        }
    }

    pub fn is_feasible_point(&self, z: &[Q]) -> bool {
        z.len() == self.num_vars
            && self.nonneg.iter().zip(z).all(|(nn, v)| !nn || !v.is_negative())
            && self.equalities.iter().all(|c| c.value(z).is_zero())
            && self.inequalities.iter().all(|c| !c.value(z).is_negative())
    }

    pub fn objective_value(&self, z: &[Q]) -> Q {
        &self.objective_offset + super::dot(&self.objective, z)
    }

    fn combination(&self, ye: &[Q], yg: &[Q], mu: &[Q]) -> Option<Vec<Q>> {
        if ye.len() != self.equalities.len() || yg.len() != self.inequalities.len() || mu.len() != self.num_vars {
            return None;
        }
        let mut acc = mu.to_vec();
        for (y, c) in ye.iter().zip(&self.equalities).chain(yg.iter().zip(&self.inequalities)) {
            if y.is_zero() {
                continue;
            }
            for (a, n) in acc.iter_mut().zip(&c.normal) {
                *a += y * n;
            }
        }
        Some(acc)
    }

    fn offsets(&self, ye: &[Q], yg: &[Q]) -> Q {
        let mut s = Q::zero();
        for (y, c) in ye.iter().zip(&self.equalities).chain(yg.iter().zip(&self.inequalities)) {
            s += y * &c.offset;
        }
        s
    }

    fn signs_ok(&self, yg: &[Q], mu: &[Q]) -> bool {
        yg.iter().all(|v| !v.is_negative())
            && mu
                .iter()
                .zip(&self.nonneg)
                .all(|(m, nn)| if *nn { !m.is_negative() } else { m.is_zero() })
    }

    /// Checks primal feasibility, dual feasibility and equality of the primal
    /// and certified values, all exactly.
    pub fn verify_optimal(&self, s: &LpSolution) -> bool {
        let d = &s.certificate;
        if !self.is_feasible_point(&s.argument) || !self.signs_ok(&d.inequalities, &d.bounds) {
            return false;
        }
        let Some(comb) = self.combination(&d.equalities, &d.inequalities, &d.bounds) else {
            return false;
        };
        if comb != self.min_objective() {
            return false;
        }
        let y_o = self.offsets(&d.equalities, &d.inequalities);
        let certified = match self.direction {
            Direction::Minimize => &self.objective_offset - y_o,
            Direction::Maximize => &self.objective_offset + y_o,
        };
        certified == s.optimum && self.objective_value(&s.argument) == s.optimum
    }

    pub fn verify_farkas(&self, f: &FarkasCertificate) -> bool {
        if !self.signs_ok(&f.inequalities, &f.bounds) {
            return false;
        }
        match self.combination(&f.equalities, &f.inequalities, &f.bounds) {
            Some(comb) => comb.iter().all(Zero::is_zero) && self.offsets(&f.equalities, &f.inequalities).is_negative(),
            None => false,
        }
    }

    /// The ray keeps every constraint and strictly improves the objective.
    pub fn verify_ray(&self, r: &Ray) -> bool {
        let d = &r.direction;
        d.len() == self.num_vars
            && self.nonneg.iter().zip(d).all(|(nn, v)| !nn || !v.is_negative())
            && self.equalities.iter().all(|c| super::dot(&c.normal, d).is_zero())
            && self.inequalities.iter().all(|c| !super::dot(&c.normal, d).is_negative())
            && super::dot(&self.min_objective(), d).is_negative()
    }
}

struct StandardForm {
    /// Rows of `A` (after sign normalisation so that `b ≥ 0`).
    a: Vec<Vec<Q>>,
    b: Vec<Q>,
    cost: Vec<Q>,
    row_sign: Vec<bool>,
    plus: Vec<usize>,
    minus: Vec<Option<usize>>,
}

fn standard_form(lp: &LinearProgram) -> StandardForm {
    let n = lp.num_vars;
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    let mut col = 0;
    for j in 0..n {
        plus.push(col);
        col += 1;
        if lp.nonneg[j] {
            minus.push(None);
        } else {
            minus.push(Some(col));
            col += 1;
        }
    }
    let slack0 = col;
    let ncols = col + lp.inequalities.len();
    let c = lp.min_objective();
    let mut cost = vec![Q::zero(); ncols];
    for j in 0..n {
        cost[plus[j]] = c[j].clone();
        if let Some(m) = minus[j] {
            cost[m] = -c[j].clone();
        }
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row_sign = Vec::new();
    let rows = lp
        .equalities
        .iter()
        .map(|c| (c, None))
        .chain(lp.inequalities.iter().enumerate().map(|(k, c)| (c, Some(slack0 + k))));
    for (con, slack) in rows {
        let mut row = vec![Q::zero(); ncols];
        for j in 0..n {
            if con.normal[j].is_zero() {
                continue;
            }
            row[plus[j]] = con.normal[j].clone();
            if let Some(m) = minus[j] {
                row[m] = -con.normal[j].clone();
            }
        }
        if let Some(s) = slack {
            row[s] = Q::from_integer((-1).into());
        }
        let mut rhs = -con.offset.clone();
        let flip = rhs.is_negative();
        if flip {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            rhs = -rhs;
        }
        a.push(row);
        b.push(rhs);
        row_sign.push(flip);
    }
    StandardForm {
        a,
        b,
        cost,
        row_sign,
        plus,
        minus,
    }
}

/// Tableau holding `B⁻¹[A | I | b]`; the identity block tracks `B⁻¹`.
struct Tableau {
    t: Vec<Vec<Q>>,
    basis: Vec<usize>,
    n: usize,
    m: usize,
}

enum Phase {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let m = sf.a.len();
        let n = sf.cost.len();
        let mut t = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = sf.a[i].clone();
            row.extend((0..m).map(|k| if k == i { Q::from_integer(1.into()) } else { Q::zero() }));
            row.push(sf.b[i].clone());
            t.push(row);
        }
        Tableau {
            t,
            basis: (n..n + m).collect(),
            n,
            m,
        }
    }

    fn rhs(&self) -> usize {
        self.n + self.m
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Q]) {
        let inv = Q::from_integer(1.into()) / &self.t[r][c];
        for v in self.t[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let prow = self.t[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        let eliminate = |row: &mut [Q]| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &nz {
                let d = &f * &prow[j];
                row[j] -= d;
            }
        };
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(obj);
        self.basis[r] = c;
    }

    /// Reduced-cost row for the given column costs (artificials cost `art`).
    fn objective_row(&self, cost: &[Q], art: &Q) -> Vec<Q> {
        let width = self.rhs() + 1;
        let mut obj = vec![Q::zero(); width];
        for (j, c) in cost.iter().enumerate() {
            obj[j] = c.clone();
        }
        for k in 0..self.m {
            obj[self.n + k] = art.clone();
        }
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = obj_cost(cost, art, self.n, bj);
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.t[i].iter().enumerate() {
                if !v.is_zero() {
                    obj[j] -= &cb * v;
                }
            }
        }
        obj
    }

    /// Bland's rule over original columns only.
    fn run(&mut self, obj: &mut [Q]) -> Phase {
        let rhs = self.rhs();
        loop {
            let Some(c) = (0..self.n).find(|&j| obj[j].is_negative()) else {
                return Phase::Optimal;
            };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.m {
                if !self.t[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.t[i][rhs] / &self.t[i][c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Phase::Unbounded(c),
                Some((r, _)) => self.pivot(r, c, obj),
            }
        }
    }

    /// `y = c_Bᵀ B⁻¹`.
    fn duals(&self, cost: &[Q], art: &Q) -> Vec<Q> {
        let mut y = vec![Q::zero(); self.m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = obj_cost(cost, art, self.n, bj);
            if cb.is_zero() {
                continue;
            }
            for (k, yk) in y.iter_mut().enumerate() {
                let v = &self.t[i][self.n + k];
                if !v.is_zero() {
                    *yk += &cb * v;
                }
            }
        }
        y
    }
}

fn obj_cost(cost: &[Q], art: &Q, n: usize, j: usize) -> Q {
    if j < n {
        cost[j].clone()
    } else {
        art.clone()
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    assert_eq!(lp.nonneg.len(), lp.num_vars, "nonneg flags must cover every variable");
    assert_eq!(lp.objective.len(), lp.num_vars, "objective length must match variables");
    let sf = standard_form(lp);
    let mut tab = Tableau::new(&sf);
    let n = tab.n;
    let m = tab.m;
    let one = Q::from_integer(1.into());
    let zero_cost = vec![Q::zero(); n];

    // phase 1: minimise the sum of artificials
    let mut obj = tab.objective_row(&zero_cost, &one);
    let _ = tab.run(&mut obj);
    let w = -obj[tab.rhs()].clone();
    if w.is_positive() {
        // Phase-1 duals satisfy yᵀA ≤ 0 and yᵀb = w > 0, which is exactly a
        // Farkas certificate once mapped back to the original rows.
        let y = tab.duals(&zero_cost, &one);
        let (ye, yg, mu) = map_duals(lp, &sf, &y, &vec![Q::zero(); lp.num_vars]);
        return LpOutcome::Infeasible(FarkasCertificate {
            equalities: ye,
            inequalities: yg,
            bounds: mu,
        });
    }

    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] < n {
            continue;
        }
        if let Some(c) = (0..n).find(|&j| !tab.t[r][j].is_zero()) {
            tab.pivot(r, c, &mut obj);
        }
    }

    let zero = Q::zero();
    let mut obj = tab.objective_row(&sf.cost, &zero);
    match tab.run(&mut obj) {
        Phase::Unbounded(c) => {
            let mut d = vec![Q::zero(); n];
            d[c] = one.clone();
            for i in 0..m {
                let bj = tab.basis[i];
                if bj < n {
                    d[bj] = -tab.t[i][c].clone();
                }
            }
            LpOutcome::Unbounded(Ray {
                direction: recover(&sf, &d, lp.num_vars),
            })
        }
        Phase::Optimal => {
            let rhs = tab.rhs();
            let mut x = vec![Q::zero(); n];
            for i in 0..m {
                if tab.basis[i] < n {
                    x[tab.basis[i]] = tab.t[i][rhs].clone();
                }
            }
            let argument = recover(&sf, &x, lp.num_vars);
            let y = tab.duals(&sf.cost, &zero);
            let (ye, yg, mu) = map_duals(lp, &sf, &y, &lp.min_objective());
            let optimum = lp.objective_value(&argument);
            LpOutcome::Optimal(LpSolution {
                optimum,
                argument,
                certificate: DualCertificate {
                    equalities: ye,
                    inequalities: yg,
                    bounds: mu,
                },
            })
        }
    }
}

fn recover(sf: &StandardForm, x: &[Q], nv: usize) -> Vec<Q> {
    (0..nv)
        .map(|j| {
            let p = x[sf.plus[j]].clone();
            match sf.minus[j] {
                Some(m) => p - &x[m],
                None => p,
            }
        })
        .collect()
}

/// Maps standard-form row duals back to (equality, inequality, bound)
/// multipliers, with bounds `c − Σ y·a` on the original variables.
fn map_duals(lp: &LinearProgram, sf: &StandardForm, y: &[Q], c: &[Q]) -> (Vec<Q>, Vec<Q>, Vec<Q>) {
    let rows: Vec<Q> = y
        .iter()
        .zip(&sf.row_sign)
        .map(|(v, flip)| if *flip { -v.clone() } else { v.clone() })
        .collect();
    let ne = lp.equalities.len();
    let ye = rows[..ne].to_vec();
    let yg = rows[ne..].to_vec();
    let mut mu: Vec<Q> = c.to_vec();
    for (yr, con) in rows.iter().zip(lp.equalities.iter().chain(&lp.inequalities)) {
        if yr.is_zero() {
            continue;
        }
        for (m, a) in mu.iter_mut().zip(&con.normal) {
            *m -= yr * a;
        }
    }
    (ye, yg, mu)
}
