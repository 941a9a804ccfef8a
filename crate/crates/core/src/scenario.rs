//! Measurement scenarios, behaviour tables and linear functionals on them.
//!
//! Coordinates are joint probabilities `p(a,b|x,y)` laid out with `x` slowest,
//! then `y`, `a`, `b`. Everything here is an immutable value.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, qi, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub alice_inputs: usize,
    pub alice_outputs: usize,
    pub bob_inputs: usize,
    pub bob_outputs: usize,
    pub charlie_outputs: usize,
}

/// One coordinate of the behaviour table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub a: usize,
    pub b: usize,
    pub x: usize,
    pub y: usize,
}

impl Scenario {
    pub fn new(
        alice_inputs: usize,
        alice_outputs: usize,
        bob_inputs: usize,
        bob_outputs: usize,
        charlie_outputs: usize,
    ) -> Result<Self> {
        let s = Scenario {
            alice_inputs,
            alice_outputs,
            bob_inputs,
            bob_outputs,
            charlie_outputs,
        };
        s.check()?;
        Ok(s)
    }

    /// Query scenario with `k` inputs/outcomes for Alice and Charlie and a
    /// `bob_inputs × bob_outputs` Bob.
    pub fn query(k: usize, bob_inputs: usize, bob_outputs: usize) -> Self {
        Scenario {
            alice_inputs: k,
            alice_outputs: k,
            bob_inputs,
            bob_outputs,
            charlie_outputs: k,
        }
    }

    /// The three-outcome protocol with a two-setting qubit on Bob's side.
    pub fn main() -> Self {
        Self::query(3, 2, 2)
    }

    /// Plain bipartite scenario without a friend.
    pub fn bipartite(ai: usize, ao: usize, bi: usize, bo: usize) -> Self {
        Scenario {
            alice_inputs: ai,
            alice_outputs: ao,
            bob_inputs: bi,
            bob_outputs: bo,
            charlie_outputs: ao,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.alice_inputs == 0
            || self.alice_outputs == 0
            || self.bob_inputs == 0
            || self.bob_outputs == 0
            || self.charlie_outputs == 0
        {
            return Err(Error::Shape(format!("all counts must be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// True when Alice's query alphabet coincides with Charlie's outcomes.
    pub fn is_query_shaped(&self) -> bool {
        self.alice_inputs == self.alice_outputs && self.alice_outputs == self.charlie_outputs
    }

    pub fn require_query_shaped(&self) -> Result<()> {
        if self.is_query_shaped() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "query construction needs alice_inputs = alice_outputs = charlie_outputs, got {self:?}"
            )))
        }
    }

    pub fn dim(&self) -> usize {
        self.alice_inputs * self.bob_inputs * self.alice_outputs * self.bob_outputs
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        debug_assert!(a < self.alice_outputs && b < self.bob_outputs);
        debug_assert!(x < self.alice_inputs && y < self.bob_inputs);
        ((x * self.bob_inputs + y) * self.alice_outputs + a) * self.bob_outputs + b
    }

    pub fn entry(&self, index: usize) -> Entry {
        let b = index % self.bob_outputs;
        let r = index / self.bob_outputs;
        let a = r % self.alice_outputs;
        let r = r / self.alice_outputs;
        let y = r % self.bob_inputs;
        let x = r / self.bob_inputs;
        Entry { a, b, x, y }
    }

    pub fn entries(&self) -> impl Iterator<Item = Entry> + '_ {
        (0..self.dim()).map(move |i| self.entry(i))
    }

    pub fn checked_index(&self, a: usize, b: usize, x: usize, y: usize) -> Result<usize> {
        if a >= self.alice_outputs || b >= self.bob_outputs || x >= self.alice_inputs || y >= self.bob_inputs
        {
            return Err(Error::Schema(format!(
                "index (a={a}, b={b}, x={x}, y={y}) out of range for {self:?}"
            )));
        }
        Ok(self.index(a, b, x, y))
    }

    fn same(&self, other: &Scenario) -> Result<()> {
        if self != other {
            return Err(Error::Shape(format!("scenario mismatch: {self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Scalar that remembers whether it was computed exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Q),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => rational::to_f64(q),
            Value::Float(f) => *f,
        }
    }

    pub fn exact(&self) -> Option<&Q> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Float(_) => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{}", rational::format_q(q)),
            Value::Float(x) => write!(f, "{x:.12}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    Exact(Vec<Q>),
    Float(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    table: Table,
}

impl Behavior {
    pub fn exact(scenario: Scenario, entries: Vec<Q>) -> Result<Self> {
        Self::from_table(scenario, Table::Exact(entries))
    }

    pub fn float(scenario: Scenario, entries: Vec<f64>) -> Result<Self> {
        Self::from_table(scenario, Table::Float(entries))
    }

    fn from_table(scenario: Scenario, table: Table) -> Result<Self> {
        scenario.check()?;
        let len = match &table {
            Table::Exact(v) => v.len(),
            Table::Float(v) => v.len(),
        };
        if len != scenario.dim() {
            return Err(Error::Shape(format!(
                "table has {len} entries, scenario needs {}",
                scenario.dim()
            )));
        }
        Ok(Behavior { scenario, table })
    }

    /// `p(a,b|x,y) = 1/(|A||B|)` for every entry.
    pub fn uniform(scenario: Scenario) -> Self {
        let v = Q::new(1.into(), ((scenario.alice_outputs * scenario.bob_outputs) as i64).into());
        Behavior {
            scenario,
            table: Table::Exact(vec![v; scenario.dim()]),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.table, Table::Exact(_))
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> Value {
        let i = self.scenario.index(a, b, x, y);
        match &self.table {
            Table::Exact(v) => Value::Exact(v[i].clone()),
            Table::Float(v) => Value::Float(v[i]),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.table {
            Table::Exact(v) => v.iter().map(rational::to_f64).collect(),
            Table::Float(v) => v.clone(),
        }
    }

    pub fn exact_entries(&self) -> Option<&[Q]> {
        match &self.table {
            Table::Exact(v) => Some(v),
            Table::Float(_) => None,
        }
    }

    /// Exact entries, rationalizing float tables entry by entry.
    pub fn to_rational_vec(&self) -> Result<Vec<Q>> {
        match &self.table {
            Table::Exact(v) => Ok(v.clone()),
            Table::Float(v) => v
                .iter()
                .map(|x| rational::rationalize(*x, rational::RATIONALIZE_DENOMINATOR_CAP))
                .collect(),
        }
    }

    pub fn to_float(&self) -> Behavior {
        Behavior {
            scenario: self.scenario,
            table: Table::Float(self.to_f64_vec()),
        }
    }

    /// `λ·self + (1−λ)·other`; exact if both operands and `λ` are exact.
    pub fn mix(&self, other: &Behavior, lambda: &Value) -> Result<Behavior> {
        self.scenario.same(&other.scenario)?;
        match (&self.table, &other.table, lambda) {
            (Table::Exact(p), Table::Exact(r), Value::Exact(l)) => {
                let one_minus = qi(1) - l;
                let v = p.iter().zip(r).map(|(x, y)| l * x + &one_minus * y).collect();
                Behavior::exact(self.scenario, v)
            }
            _ => {
                let l = lambda.to_f64();
                let p = self.to_f64_vec();
                let r = other.to_f64_vec();
                let v = p.iter().zip(&r).map(|(x, y)| l * x + (1.0 - l) * y).collect();
                Behavior::float(self.scenario, v)
            }
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    /// `offset + Σ c·p ≥ 0` is the constraint.
    LowerBound,
    /// `offset + Σ c·p ≤ 0` is the constraint.
    UpperBound,
}

/// Affine functional `offset + Σ coefficients·p` with the direction of its bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BellFunctional {
    scenario: Scenario,
    coefficients: Vec<Q>,
    offset: Q,
    sense: Sense,
}

impl BellFunctional {
    pub fn new(scenario: Scenario, coefficients: Vec<Q>, offset: Q, sense: Sense) -> Result<Self> {
        scenario.check()?;
        if coefficients.len() != scenario.dim() {
            return Err(Error::Shape(format!(
                "functional has {} coefficients, scenario needs {}",
                coefficients.len(),
                scenario.dim()
            )));
        }
        Ok(BellFunctional {
            scenario,
            coefficients,
            offset,
            sense,
        })
    }

    /// Builds a lower-bound functional from `(a, b, x, y, coefficient)` terms.
    pub fn from_terms(
        scenario: Scenario,
        terms: &[(usize, usize, usize, usize, i64)],
        offset: Q,
    ) -> Result<Self> {
        let mut c = vec![Q::zero(); scenario.dim()];
        for &(a, b, x, y, k) in terms {
            let i = scenario.checked_index(a, b, x, y)?;
            c[i] += qi(k);
        }
        Self::new(scenario, c, offset, Sense::LowerBound)
    }

    /// Adds `k·p(A_x = a)` expanded over Bob's outcomes at `y = 0`.
    pub fn add_alice_marginal(&mut self, a: usize, x: usize, k: &Q) {
        for b in 0..self.scenario.bob_outputs {
            let i = self.scenario.index(a, b, x, 0);
            self.coefficients[i] += k;
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coefficients(&self) -> &[Q] {
        &self.coefficients
    }

    pub fn offset(&self) -> &Q {
        &self.offset
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Nonzero terms in coordinate order.
    pub fn terms(&self) -> Vec<(Entry, Q)> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.scenario.entry(i), c.clone()))
            .collect()
    }

    /// Same constraint written with `LowerBound` sense.
    pub fn as_lower_bound(&self) -> BellFunctional {
        match self.sense {
            Sense::LowerBound => self.clone(),
            Sense::UpperBound => BellFunctional {
                scenario: self.scenario,
                coefficients: self.coefficients.iter().map(|c| -c).collect(),
                offset: -&self.offset,
                sense: Sense::LowerBound,
            },
        }
    }

    pub fn evaluate(&self, p: &Behavior) -> Result<Value> {
        evaluate(self, p)
    }

    /// True when the bound holds at `p` (exactly for exact tables).
    pub fn is_satisfied(&self, p: &Behavior) -> Result<bool> {
        let v = self.evaluate(p)?;
        Ok(match (v, self.sense) {
            (Value::Exact(q), Sense::LowerBound) => !q.is_negative(),
            (Value::Exact(q), Sense::UpperBound) => !q.is_positive(),
            (Value::Float(f), Sense::LowerBound) => f >= 0.0,
            (Value::Float(f), Sense::UpperBound) => f <= 0.0,
        })
    }
}

pub fn evaluate(f: &BellFunctional, p: &Behavior) -> Result<Value> {
    f.scenario.same(&p.scenario)?;
    Ok(match &p.table {
        Table::Exact(v) => Value::Exact(&f.offset + rational::dot(&f.coefficients, v)),
        Table::Float(v) => {
            let mut acc = rational::to_f64(&f.offset);
            for (c, x) in f.coefficients.iter().zip(v) {
                if !c.is_zero() {
                    acc += rational::to_f64(c) * x;
                }
            }
            Value::Float(acc)
        }
    })
}

/// Outcome of [`validate`]. Residuals are exact zeros for exact tables that pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub nonnegative: bool,
    pub normalized: bool,
    pub no_signaling: bool,
    /// `Σ_{a,b} p(a,b|x,y) − 1` for each `(x, y)` in row-major order.
    pub normalization_residuals: Vec<f64>,
    pub min_entry: f64,
    pub max_signaling: f64,
}

/// Tolerance applied to float tables; exact tables are checked exactly.
pub const EPS_VALIDATE: f64 = 1e-12;

pub fn validate(p: &Behavior) -> ValidationReport {
    let s = p.scenario;
    match &p.table {
        Table::Exact(v) => {
            let nonnegative = v.iter().all(|x| !x.is_negative());
            let mut normalized = true;
            let mut residuals = Vec::new();
            for x in 0..s.alice_inputs {
                for y in 0..s.bob_inputs {
                    let mut sum = Q::zero();
                    for a in 0..s.alice_outputs {
                        for b in 0..s.bob_outputs {
                            sum += &v[s.index(a, b, x, y)];
                        }
                    }
                    let r = sum - qi(1);
                    normalized &= r.is_zero();
                    residuals.push(rational::to_f64(&r));
                }
            }
            let (sig_exact, sig) = signaling_exact(&s, v);
            ValidationReport {
                nonnegative,
                normalized,
                no_signaling: sig_exact,
                normalization_residuals: residuals,
                min_entry: v.iter().map(rational::to_f64).fold(f64::INFINITY, f64::min),
                max_signaling: sig,
            }
        }
        Table::Float(v) => {
            let min_entry = v.iter().copied().fold(f64::INFINITY, f64::min);
            let mut residuals = Vec::new();
            for x in 0..s.alice_inputs {
                for y in 0..s.bob_inputs {
                    let mut sum = 0.0;
                    for a in 0..s.alice_outputs {
                        for b in 0..s.bob_outputs {
                            sum += v[s.index(a, b, x, y)];
                        }
                    }
                    residuals.push(sum - 1.0);
                }
            }
            let sig = signaling_float(&s, v);
            ValidationReport {
                nonnegative: min_entry >= -EPS_VALIDATE,
                normalized: residuals.iter().all(|r| r.abs() <= EPS_VALIDATE),
                no_signaling: sig <= EPS_VALIDATE,
                normalization_residuals: residuals,
                min_entry,
                max_signaling: sig,
            }
        }
    }
}

fn alice_marginal<T: Clone + std::ops::AddAssign + Zero>(s: &Scenario, v: &[T], a: usize, x: usize, y: usize) -> T {
    let mut acc = T::zero();
    for b in 0..s.bob_outputs {
        acc += v[s.index(a, b, x, y)].clone();
    }
    acc
}

fn bob_marginal<T: Clone + std::ops::AddAssign + Zero>(s: &Scenario, v: &[T], b: usize, x: usize, y: usize) -> T {
    let mut acc = T::zero();
    for a in 0..s.alice_outputs {
        acc += v[s.index(a, b, x, y)].clone();
    }
    acc
}

fn signaling_exact(s: &Scenario, v: &[Q]) -> (bool, f64) {
    let mut worst = Q::zero();
    for x in 0..s.alice_inputs {
        for a in 0..s.alice_outputs {
            let base = alice_marginal(s, v, a, x, 0);
            for y in 1..s.bob_inputs {
                let d = (alice_marginal(s, v, a, x, y) - &base).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    for y in 0..s.bob_inputs {
        for b in 0..s.bob_outputs {
            let base = bob_marginal(s, v, b, 0, y);
            for x in 1..s.alice_inputs {
                let d = (bob_marginal(s, v, b, x, y) - &base).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    (worst.is_zero(), rational::to_f64(&worst))
}

fn signaling_float(s: &Scenario, v: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..s.alice_inputs {
        for a in 0..s.alice_outputs {
            let base = alice_marginal(s, v, a, x, 0);
            for y in 1..s.bob_inputs {
                worst = worst.max((alice_marginal(s, v, a, x, y) - base).abs());
            }
        }
    }
    for y in 0..s.bob_inputs {
        for b in 0..s.bob_outputs {
            let base = bob_marginal(s, v, b, 0, y);
            for x in 1..s.alice_inputs {
                worst = worst.max((bob_marginal(s, v, b, x, y) - base).abs());
            }
        }
    }
    worst
}
