//! Relabelling symmetries of inputs and outputs, stabilisers of vertex sets
//! and facet orbits.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AffineChart, Constraint, PolytopeV};
use crate::rational::Q;
use crate::scenario::{Behavior, BellFunctional, Entry, Scenario, Table};

/// Entry `(a,b,x,y)` moves to `(a_perm[a], b_perms[y][b], x_perm[x], y_perm[y])`.
/// `b_perms` is indexed by Bob's input before relabelling.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relabeling {
    pub x_perm: Vec<usize>,
    pub a_perm: Vec<usize>,
    pub y_perm: Vec<usize>,
    pub b_perms: Vec<Vec<usize>>,
}

fn is_perm(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n && p.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut q = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        q[j] = i;
    }
    q
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

impl Relabeling {
    pub fn identity(s: &Scenario) -> Self {
        Relabeling {
            x_perm: (0..s.alice_inputs).collect(),
            a_perm: (0..s.alice_outputs).collect(),
            y_perm: (0..s.bob_inputs).collect(),
            b_perms: vec![(0..s.bob_outputs).collect(); s.bob_inputs],
        }
    }

    pub fn check(&self, s: &Scenario) -> Result<()> {
        let ok = is_perm(&self.x_perm, s.alice_inputs)
            && is_perm(&self.a_perm, s.alice_outputs)
            && is_perm(&self.y_perm, s.bob_inputs)
            && self.b_perms.len() == s.bob_inputs
            && self.b_perms.iter().all(|p| is_perm(p, s.bob_outputs));
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("relabelling does not match {s:?}")))
        }
    }

    pub fn map_entry(&self, e: Entry) -> Entry {
        Entry {
            a: self.a_perm[e.a],
            b: self.b_perms[e.y][e.b],
            x: self.x_perm[e.x],
            y: self.y_perm[e.y],
        }
    }

    /// Coordinate permutation: index `i` moves to `perm[i]`.
    pub fn index_map(&self, s: &Scenario) -> Vec<usize> {
        (0..s.dim())
            .map(|i| {
                let e = self.map_entry(s.entry(i));
                s.index(e.a, e.b, e.x, e.y)
            })
            .collect()
    }

    pub fn apply_vector<T: Clone>(&self, s: &Scenario, v: &[T]) -> Vec<T> {
        let map = self.index_map(s);
        let mut out = v.to_vec();
        for (i, x) in v.iter().enumerate() {
            out[map[i]] = x.clone();
        }
        out
    }

    pub fn apply_behavior(&self, p: &Behavior) -> Result<Behavior> {
        let s = *p.scenario();
        self.check(&s)?;
        match p.table() {
            Table::Exact(v) => Behavior::exact(s, self.apply_vector(&s, v)),
            Table::Float(v) => Behavior::float(s, self.apply_vector(&s, v)),
        }
    }

    /// Coefficients move with their entries, so
    /// `evaluate(apply(f), apply(p)) = evaluate(f, p)`.
    pub fn apply_functional(&self, f: &BellFunctional) -> Result<BellFunctional> {
        let s = *f.scenario();
        self.check(&s)?;
        BellFunctional::new(s, self.apply_vector(&s, f.coefficients()), f.offset().clone(), f.sense())
    }

    pub fn apply_constraint(&self, s: &Scenario, c: &Constraint) -> Constraint {
        Constraint::new(self.apply_vector(s, &c.normal), c.offset.clone())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Relabeling) -> Relabeling {
        Relabeling {
            x_perm: other.x_perm.iter().map(|&x| self.x_perm[x]).collect(),
            a_perm: other.a_perm.iter().map(|&a| self.a_perm[a]).collect(),
            y_perm: other.y_perm.iter().map(|&y| self.y_perm[y]).collect(),
            b_perms: (0..other.y_perm.len())
                .map(|y| {
                    let mid = other.y_perm[y];
                    other.b_perms[y].iter().map(|&b| self.b_perms[mid][b]).collect()
                })
                .collect(),
        }
    }

    pub fn inverse(&self) -> Relabeling {
        let y_inv = invert(&self.y_perm);
        Relabeling {
            x_perm: invert(&self.x_perm),
            a_perm: invert(&self.a_perm),
            b_perms: (0..self.y_perm.len()).map(|y2| invert(&self.b_perms[y_inv[y2]])).collect(),
            y_perm: y_inv,
        }
    }

    /// True when every Bob input is relabelled with the same output permutation.
    pub fn has_global_bob_outputs(&self) -> bool {
        self.b_perms.windows(2).all(|w| w[0] == w[1])
    }
}

/// All independent input/output relabellings of the scenario
/// (`3!·3!·2!·2·2 = 288` for the main scenario), in a fixed order.
pub fn candidates(s: &Scenario) -> Vec<Relabeling> {
    let xs = permutations(s.alice_inputs);
    let as_ = permutations(s.alice_outputs);
    let ys = permutations(s.bob_inputs);
    let bs = permutations(s.bob_outputs);
    let mut b_choices: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for _ in 0..s.bob_inputs {
        b_choices = b_choices
            .into_iter()
            .flat_map(|prefix| {
                bs.iter().map(move |p| {
                    let mut q = prefix.clone();
                    q.push(p.clone());
                    q
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for x in &xs {
        for a in &as_ {
            for y in &ys {
                for b in &b_choices {
                    out.push(Relabeling {
                        x_perm: x.clone(),
                        a_perm: a.clone(),
                        y_perm: y.clone(),
                        b_perms: b.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Candidates mapping the vertex set onto itself, in candidate order.
pub fn stabilizer_group(v: &PolytopeV, s: &Scenario) -> Vec<Relabeling> {
    let set: HashSet<&Vec<Q>> = v.vertices.iter().collect();
    candidates(s)
        .into_par_iter()
        .filter(|g| {
            let map = g.index_map(s);
            v.vertices.iter().all(|w| {
                let mut img = w.clone();
                for (i, x) in w.iter().enumerate() {
                    img[map[i]] = x.clone();
                }
                set.contains(&img)
            })
        })
        .collect()
}

/// Closure, identity and inverses, checked exhaustively.
pub fn is_group(elements: &[Relabeling], s: &Scenario) -> bool {
    let set: HashSet<&Relabeling> = elements.iter().collect();
    set.contains(&Relabeling::identity(s))
        && elements.iter().all(|g| set.contains(&g.inverse()))
        && elements.iter().all(|g| elements.iter().all(|h| set.contains(&g.compose(h))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    /// Lexicographically smallest canonical form in the orbit.
    pub representative: Constraint,
    /// Indices into the classified facet list.
    pub members: Vec<usize>,
    pub keys: Vec<Vec<BigInt>>,
}

impl Orbit {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains_key(&self, k: &[BigInt]) -> bool {
        self.keys.iter().any(|x| x.as_slice() == k)
    }
}

/// Canonical form of a constraint modulo the affine hull.
pub fn canonical(chart: &AffineChart, c: &Constraint) -> Constraint {
    chart.reduce(c).canonical_inequality()
}

/// Orbits of `facets` under `group`, sorted by representative.
///
/// Each image is reduced against `chart` before comparison, so facets that
/// differ only by hull equalities are identified.
pub fn classify_facets(
    s: &Scenario,
    facets: &[Constraint],
    chart: &AffineChart,
    group: &[Relabeling],
) -> Vec<Orbit> {
    let keys: Vec<Vec<BigInt>> = facets.iter().map(|f| canonical(chart, f).key()).collect();
    let index: BTreeSet<&Vec<BigInt>> = keys.iter().collect();
    let mut assigned = vec![false; facets.len()];
    let mut orbits = Vec::new();
    for i in 0..facets.len() {
        if assigned[i] {
            continue;
        }
        let images: Vec<Vec<BigInt>> = group
            .par_iter()
            .map(|g| canonical(chart, &g.apply_constraint(s, &facets[i])).key())
            .collect();
        let mut members: Vec<usize> = Vec::new();
        let mut orbit_keys: Vec<Vec<BigInt>> = Vec::new();
        for k in images {
            if orbit_keys.contains(&k) {
                continue;
            }
            if index.contains(&k) {
                for (m, km) in keys.iter().enumerate() {
                    if *km == k && !assigned[m] {
                        assigned[m] = true;
                        members.push(m);
                    }
                }
            }
            orbit_keys.push(k);
        }
        members.sort();
        orbit_keys.sort();
        let rep_key = orbit_keys[0].clone();
        let representative = Constraint::new(
            rep_key[..s.dim()].iter().map(|x| Q::from_integer(x.clone())).collect(),
            Q::from_integer(rep_key[s.dim()].clone()),
        );
        orbits.push(Orbit {
            representative,
            members,
            keys: orbit_keys,
        });
    }
    orbits.sort_by(|a, b| a.representative.key().cmp(&b.representative.key()));
    orbits
}

/// Index of the orbit containing the canonical form of `f`, if any.
pub fn locate(orbits: &[Orbit], chart: &AffineChart, f: &Constraint) -> Option<usize> {
    let k = canonical(chart, f).key();
    orbits.iter().position(|o| o.contains_key(&k))
}

/// Human-readable `p(A_x=a,B_y=b)` sum for a constraint.
pub fn describe(s: &Scenario, c: &Constraint) -> String {
    let mut out = String::new();
    for (i, coef) in c.normal.iter().enumerate() {
        if num_traits::Zero::is_zero(coef) {
            continue;
        }
        let e = s.entry(i);
        let neg = num_traits::Signed::is_negative(coef);
        let mag = num_traits::Signed::abs(coef);
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if !num_traits::One::is_one(&mag) {
            out.push_str(&crate::rational::format_q(&mag));
            out.push('*');
        }
        out.push_str(&format!("p(A{}={},B{}={})", e.x, e.a, e.y, e.b));
    }
    if !num_traits::Zero::is_zero(&c.offset) {
        let neg = num_traits::Signed::is_negative(&c.offset);
        out.push_str(if neg { " - " } else { " + " });
        out.push_str(&crate::rational::format_q(&num_traits::Signed::abs(&c.offset)));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_count() {
        assert_eq!(candidates(&Scenario::main()).len(), 288);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let s = Scenario::main();
        let c = candidates(&s);
        let (g, h) = (&c[37], &c[201]);
        let v: Vec<usize> = (0..s.dim()).collect();
        let seq = g.apply_vector(&s, &h.apply_vector(&s, &v));
        assert_eq!(g.compose(h).apply_vector(&s, &v), seq);
        assert_eq!(g.compose(&g.inverse()), Relabeling::identity(&s));
    }

    #[test]
    fn swapping_bob_inputs_moves_z1_term() {
        let s = Scenario::main();
        let mut g = Relabeling::identity(&s);
        g.y_perm = vec![1, 0];
        let z = crate::presets::z1();
        let img = g.apply_functional(&z).unwrap();
        assert_eq!(img.coefficients()[s.index(1, 0, 2, 1)], crate::rational::qi(-1));
        assert_eq!(img.coefficients()[s.index(1, 0, 2, 0)], crate::rational::qi(0));
    }
}
