//! Named behaviours, realizations and functionals for the three-outcome
//! scenario: the no-signalling point N0, the quantum points Q1 and Q2, the
//! inequalities Z1 and Z2, the four facet class representatives and the
//! three hull equalities.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::quantum::{ket, projector, CMat, CVec, QuantumRealization, C64};
use crate::rational::{q, qi, Q};
use crate::scenario::{Behavior, BellFunctional, Scenario};

/// `(√2−1)/(4√2)`.
pub fn alpha() -> f64 {
    (2.0 - 2f64.sqrt()) / 8.0
}

/// `(√2+1)/(4√2)`.
pub fn beta() -> f64 {
    (2.0 + 2f64.sqrt()) / 8.0
}

/// `(1−√2)/2`, the quantum minimum of Z1 and Z2.
pub fn quantum_minimum() -> f64 {
    (1.0 - 2f64.sqrt()) / 2.0
}

/// `(2/17)(3√2+1)`.
pub fn expected_noise_threshold() -> f64 {
    2.0 / 17.0 * (3.0 * 2f64.sqrt() + 1.0)
}

/// `Z1 = p(A0=0,B0=0) + p(A1=1,B1=0) − p(A2=1,B0=0) + p(A2=1,B1=1) ≥ 0`.
pub fn z1() -> BellFunctional {
    BellFunctional::from_terms(
        Scenario::main(),
        &[(0, 0, 0, 0, 1), (1, 0, 1, 1, 1), (1, 0, 2, 0, -1), (1, 1, 2, 1, 1)],
        qi(0),
    )
    .expect("static terms are in range")
}

/// `Z2 = p(A0=1,B0=0) + p(A0=2,B1=1) + p(A1=1,B0=1) − p(A1=1,B1=1) ≥ 0`.
pub fn z2() -> BellFunctional {
    BellFunctional::from_terms(
        Scenario::main(),
        &[(1, 0, 0, 0, 1), (2, 1, 0, 1, 1), (1, 1, 1, 0, 1), (1, 1, 1, 1, -1)],
        qi(0),
    )
    .expect("static terms are in range")
}

/// Representatives of the four facet classes; classes 1 and 2 are Z1 and Z2.
pub fn facet_class(k: usize) -> Result<BellFunctional> {
    let s = Scenario::main();
    match k {
        1 => Ok(z1()),
        2 => Ok(z2()),
        // p(A0=0,B0=1) + p(A1=1,B0=1) − p(A2=1,B0=1) ≥ 0
        3 => BellFunctional::from_terms(s, &[(0, 1, 0, 0, 1), (1, 1, 1, 0, 1), (1, 1, 2, 0, -1)], qi(0)),
        // p(A0=1,B0=1) + p(A0=2,B0=1) − p(A1=1,B0=1) ≥ 0
        4 => BellFunctional::from_terms(s, &[(1, 1, 0, 0, 1), (2, 1, 0, 0, 1), (1, 1, 1, 0, -1)], qi(0)),
        _ => Err(Error::Invalid(format!("facet class {k} (expected 1..=4)"))),
    }
}

/// Hull equalities: `k = 0` marginal form, `k = 1, 2` conditioned on
/// `B_0 = 1` and `B_1 = 1`:
/// `−p(A0≠0,·) + p(A1=1,·) + p(A2=2,·) = 0`.
pub fn hull_equality(k: usize) -> Result<BellFunctional> {
    let s = Scenario::main();
    let terms: Vec<(usize, usize, usize, usize, i64)> = match k {
        0 => {
            let mut f = BellFunctional::from_terms(s, &[], qi(0))?;
            f.add_alice_marginal(1, 0, &qi(-1));
            f.add_alice_marginal(2, 0, &qi(-1));
            f.add_alice_marginal(1, 1, &qi(1));
            f.add_alice_marginal(2, 2, &qi(1));
            return Ok(f);
        }
        1 | 2 => {
            let y = k - 1;
            vec![(1, 1, 0, y, -1), (2, 1, 0, y, -1), (1, 1, 1, y, 1), (2, 1, 2, y, 1)]
        }
        _ => return Err(Error::Invalid(format!("hull equality {k} (expected 0..=2)"))),
    };
    BellFunctional::from_terms(s, &terms, qi(0))
}

#[derive(Clone, Copy)]
enum Cell {
    Zero,
    Half,
    Alpha,
    Beta,
}

impl Cell {
    fn exact(self) -> Option<Q> {
        match self {
            Cell::Zero => Some(qi(0)),
            Cell::Half => Some(q(1, 2)),
            _ => None,
        }
    }

    fn float(self) -> f64 {
        match self {
            Cell::Zero => 0.0,
            Cell::Half => 0.5,
            Cell::Alpha => alpha(),
            Cell::Beta => beta(),
        }
    }
}

use Cell::{Alpha as A, Beta as B, Half as H, Zero as Z};

/// Collins–Gisin data: Alice marginals `p(A_x=a)` for `a = 1, 2`, Bob
/// marginals `p(B_y=1)` and joints `p(A_x=a, B_y=1)`, columns ordered
/// `(x=0,a=1), (x=0,a=2), (x=1,a=1), …`.
struct CgTable {
    alice: [Cell; 6],
    bob: [Cell; 2],
    joint: [[Cell; 6]; 2],
}

const N0: CgTable = CgTable {
    alice: [H, H, H, Z, H, H],
    bob: [H, H],
    joint: [[Z, H, Z, Z, Z, H], [Z, H, H, Z, Z, H]],
};

const Q1: CgTable = CgTable {
    alice: [H, Z, H, Z, H, Z],
    bob: [H, H],
    joint: [[A, Z, A, Z, A, Z], [B, Z, B, Z, A, Z]],
};

const Q2: CgTable = CgTable {
    alice: [H, H, H, Z, Z, H],
    bob: [H, H],
    joint: [[B, A, A, Z, Z, A], [B, A, B, Z, Z, A]],
};

/// Full table from Collins–Gisin data, with `value` mapping cells to scalars.
fn expand<T>(t: &CgTable, value: impl Fn(Cell) -> T) -> Vec<T>
where
    T: Clone + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let s = Scenario::main();
    let one = || value(Cell::Half) + value(Cell::Half);
    let mut v: Vec<Option<T>> = vec![None; s.dim()];
    for x in 0..3 {
        for y in 0..2 {
            let ma = |a: usize| value(t.alice[2 * x + a - 1]);
            let j = |a: usize| value(t.joint[y][2 * x + a - 1]);
            let pb = value(t.bob[y]);
            for a in 1..3 {
                v[s.index(a, 1, x, y)] = Some(j(a));
                v[s.index(a, 0, x, y)] = Some(ma(a) - j(a));
            }
            v[s.index(0, 1, x, y)] = Some(pb.clone() - j(1) - j(2));
            v[s.index(0, 0, x, y)] = Some(one() - ma(1) - ma(2) - pb + j(1) + j(2));
        }
    }
    v.into_iter().map(|e| e.expect("every cell filled")).collect()
}

/// N0 as an exact behaviour.
pub fn n0() -> Behavior {
    let v = expand(&N0, |c| c.exact().expect("N0 is rational"));
    Behavior::exact(Scenario::main(), v).expect("static shape")
}

/// The tabulated Q1 or Q2 behaviour (float, since α and β are irrational).
pub fn tabulated(name: &str) -> Result<Behavior> {
    let t = match name {
        "Q1" => &Q1,
        "Q2" => &Q2,
        "N0" => &N0,
        _ => return Err(Error::unknown("tabulated point", name, &["N0", "Q1", "Q2"])),
    };
    Behavior::float(Scenario::main(), expand(t, Cell::float))
}

/// Tabulated point with `α` replaced by the rational `alpha` and `β` by
/// `1/2 − alpha`. The result is exactly normalised and no-signalling, which
/// the exact plane construction relies on.
pub fn tabulated_exact(name: &str, alpha: &Q) -> Result<Behavior> {
    let t = match name {
        "Q1" => &Q1,
        "Q2" => &Q2,
        "N0" => &N0,
        _ => return Err(Error::unknown("tabulated point", name, &["N0", "Q1", "Q2"])),
    };
    let beta = q(1, 2) - alpha;
    let v = expand(t, |c| match c {
        Cell::Alpha => alpha.clone(),
        Cell::Beta => beta.clone(),
        other => other.exact().expect("rational cell"),
    });
    Behavior::exact(Scenario::main(), v)
}

/// `α` rounded to a rational with denominator at most the default cap.
pub fn rational_alpha() -> Q {
    crate::rational::rationalize(alpha(), crate::rational::RATIONALIZE_DENOMINATOR_CAP).expect("finite")
}

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

fn qutrit_plus_minus(d: usize, sign: f64) -> CVec {
    (ket(d, 0) + ket(d, 1) * c(sign)) * c(1.0 / 2f64.sqrt())
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// Effects `{(1+O)/2, (1−O)/2}` of `O = (sx·σx + sz·σz)/√2`; outcome 1 is the
/// eigenvalue −1.
fn bob_observable(sx: f64, sz: f64) -> Vec<CMat> {
    let o = (pauli_x() * c(sx) + pauli_z() * c(sz)) * c(1.0 / 2f64.sqrt());
    let id = CMat::identity(2, 2);
    vec![(&id + &o) * c(0.5), (&id - &o) * c(0.5)]
}

/// `(|00⟩+|11⟩)/√2` on `d ⊗ 2`.
pub fn entangled_state(d: usize) -> CVec {
    (ket(d, 0).kronecker(&ket(2, 0)) + ket(d, 1).kronecker(&ket(2, 1))) * c(1.0 / 2f64.sqrt())
}

fn effects(kets: Vec<CVec>) -> Vec<CMat> {
    kets.iter().map(projector).collect()
}

pub fn q1_realization() -> QuantumRealization {
    let d = 3;
    let comp = || effects(vec![ket(d, 0), ket(d, 1), ket(d, 2)]);
    let alice = vec![
        comp(),
        comp(),
        effects(vec![qutrit_plus_minus(d, 1.0), qutrit_plus_minus(d, -1.0), ket(d, 2)]),
    ];
    let bob = vec![bob_observable(-1.0, -1.0), bob_observable(-1.0, 1.0)];
    QuantumRealization::pure(&entangled_state(d), alice, bob).expect("static realization is valid")
}

pub fn q2_realization() -> QuantumRealization {
    let d = 3;
    let alice = vec![
        effects(vec![ket(d, 2), ket(d, 0), ket(d, 1)]),
        effects(vec![qutrit_plus_minus(d, -1.0), qutrit_plus_minus(d, 1.0), ket(d, 2)]),
        effects(vec![ket(d, 0), ket(d, 2), ket(d, 1)]),
    ];
    let bob = vec![bob_observable(1.0, -1.0), bob_observable(-1.0, -1.0)];
    QuantumRealization::pure(&entangled_state(d), alice, bob).expect("static realization is valid")
}

/// Four-outcome extension of Q1: inputs 2 and 3 both measure `{|+⟩, |−⟩}` on
/// the first two levels and answer their own label on `|2⟩`, `|3⟩`; inputs 0
/// and 1 use the computational basis.
pub fn q1_four_outcome() -> QuantumRealization {
    let d = 4;
    let comp = || effects((0..d).map(|i| ket(d, i)).collect());
    let pm = || effects(vec![qutrit_plus_minus(d, 1.0), qutrit_plus_minus(d, -1.0), ket(d, 2), ket(d, 3)]);
    let alice = vec![comp(), comp(), pm(), pm()];
    let bob = vec![bob_observable(-1.0, -1.0), bob_observable(-1.0, 1.0)];
    QuantumRealization::pure(&entangled_state(d), alice, bob).expect("static realization is valid")
}

#[derive(Clone, Debug)]
pub enum Preset {
    Behavior(Behavior),
    Realization(QuantumRealization),
    Functional(BellFunctional),
}

impl Preset {
    /// Behaviour of a point preset (realizations are evaluated).
    pub fn behavior(&self) -> Option<Behavior> {
        match self {
            Preset::Behavior(b) => Some(b.clone()),
            Preset::Realization(r) => Some(crate::quantum::behavior_from_realization(r)),
            Preset::Functional(_) => None,
        }
    }
}

struct Entry {
    name: &'static str,
    description: &'static str,
    build: fn() -> Preset,
}

const PRESETS: &[Entry] = &[
    Entry {
        name: "N0",
        description: "no-signalling point of the section plane (exact table)",
        build: || Preset::Behavior(n0()),
    },
    Entry {
        name: "Q1",
        description: "qutrit-qubit realization minimising Z1",
        build: || Preset::Realization(q1_realization()),
    },
    Entry {
        name: "Q2",
        description: "qutrit-qubit realization minimising Z2",
        build: || Preset::Realization(q2_realization()),
    },
    Entry {
        name: "Z1",
        description: "facet inequality of class 1",
        build: || Preset::Functional(z1()),
    },
    Entry {
        name: "Z2",
        description: "facet inequality of class 2",
        build: || Preset::Functional(z2()),
    },
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|e| e.name).collect()
}

pub fn describe() -> Vec<(&'static str, &'static str)> {
    PRESETS.iter().map(|e| (e.name, e.description)).collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    let key = if name.eq_ignore_ascii_case("N0-table") { "N0" } else { name };
    PRESETS
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(key))
        .map(|e| (e.build)())
        .ok_or_else(|| Error::unknown("preset", name, &names()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Value;

    #[test]
    fn z1_on_uniform_is_one_third() {
        assert_eq!(z1().evaluate(&Behavior::uniform(Scenario::main())).unwrap(), Value::Exact(q(1, 3)));
    }

    #[test]
    fn z1_on_n0_is_minus_half() {
        assert_eq!(z1().evaluate(&n0()).unwrap(), Value::Exact(q(-1, 2)));
        let r = n0().validate();
        assert!(r.nonnegative && r.normalized && r.no_signaling);
    }

    #[test]
    fn q1_x2_uses_plus_minus() {
        let r = q1_realization();
        let plus = qutrit_plus_minus(3, 1.0);
        assert!((&r.alice()[2][0] - projector(&plus)).norm() < 1e-15);
        let r2 = q2_realization();
        let minus = qutrit_plus_minus(3, -1.0);
        assert!((&r2.alice()[1][0] - projector(&minus)).norm() < 1e-15);
    }

    #[test]
    fn unknown_preset_lists_names() {
        let e = preset("Q3").unwrap_err().to_string();
        assert!(e.contains("N0, Q1, Q2, Z1, Z2"));
    }
}
