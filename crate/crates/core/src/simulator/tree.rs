//! Exact branch probabilities of one run, computed once per input choice and
//! then sampled run by run.
//!
//! The state lives on `M ⊗ A ⊗ B`: Charlie's device register, Alice's system
//! and Bob's system. Charlie's computational-basis measurement is the copying
//! isometry `|0⟩_M|s⟩_A → |s⟩_M|s⟩_A`; a query "is c = x?" is the two-outcome
//! projective measurement `{|x⟩⟨x|_M, 1 − |x⟩⟨x|_M}`; on "no" Alice applies the
//! inverse isometry and completes her measurement on `A`.

use crate::error::{Error, Result};
use crate::quantum::ops::{embed, partial_trace, shift_unitary};
use crate::quantum::{CMat, QuantumRealization, C64};

/// Tolerance for the query-compatibility check `E_{x,x} = |x⟩⟨x|`.
pub const QUERY_TOLERANCE: f64 = 1e-9;

/// State update applied right after Charlie's measurement.
pub trait CollapsePolicy: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// `rho` on `M ⊗ A ⊗ B` with dimensions `dims`.
    fn after_measurement(&self, rho: &CMat, dims: &[usize; 3]) -> CMat;
}

struct Lueders;
struct VonNeumann;

impl CollapsePolicy for Lueders {
    fn name(&self) -> &'static str {
        "lueders"
    }
    fn description(&self) -> &'static str {
        "coherence inside the degenerate query subspaces is kept"
    }
    fn after_measurement(&self, rho: &CMat, _: &[usize; 3]) -> CMat {
        rho.clone()
    }
}

impl CollapsePolicy for VonNeumann {
    fn name(&self) -> &'static str {
        "von-neumann"
    }
    fn description(&self) -> &'static str {
        "the device register is fully dephased in its basis"
    }
    fn after_measurement(&self, rho: &CMat, dims: &[usize; 3]) -> CMat {
        let k = dims[0];
        let projectors: Vec<CMat> = (0..k).map(|m| basis_projector(k, &[m])).collect();
        crate::quantum::ops::dephase(rho, dims, 0, &projectors)
    }
}

static POLICIES: [&dyn CollapsePolicy; 2] = [&Lueders, &VonNeumann];

pub fn policy(name: &str) -> Result<&'static dyn CollapsePolicy> {
    POLICIES
        .iter()
        .copied()
        .find(|p| p.name() == name)
        .ok_or_else(|| Error::unknown("collapse policy", name, &policy_names()))
}

pub fn policy_names() -> Vec<&'static str> {
    POLICIES.iter().map(|p| p.name()).collect()
}

fn basis_projector(d: usize, states: &[usize]) -> CMat {
    let mut p = CMat::zeros(d, d);
    for &i in states {
        p[(i, i)] = C64::new(1.0, 0.0);
    }
    p
}

fn prob(rho: &CMat) -> f64 {
    rho.trace().re
}

/// Checks that Charlie can be modelled by the copying isometry: Alice's
/// system has one basis state per outcome and `E_{x,x} = |x⟩⟨x|`.
pub fn check_query_compatible(r: &QuantumRealization) -> Result<()> {
    let s = r.scenario();
    s.require_query_shaped()?;
    if r.dim_a() != s.alice_outputs {
        return Err(Error::InvalidRealization(format!(
            "the simulator needs Alice's dimension ({}) to equal the number of Charlie outcomes ({})",
            r.dim_a(),
            s.alice_outputs
        )));
    }
    for x in 0..s.alice_inputs {
        let dev = (&r.alice()[x][x] - basis_projector(r.dim_a(), &[x])).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > QUERY_TOLERANCE {
            return Err(Error::InvalidRealization(format!(
                "Alice's effect for a={x} at x={x} is not |{x}⟩⟨{x}| (deviation {dev:e}), so the answer to \
                 \"is c = {x}?\" cannot be her output"
            )));
        }
    }
    Ok(())
}

/// Branches of the query "is c = x?" on a (sub-normalised) state.
#[derive(Clone, Debug)]
pub struct QueryNode {
    /// Weight of the incoming state.
    pub weight: f64,
    pub p_yes: f64,
    /// Unnormalised `p(yes, b)`.
    pub yes_bob: Vec<f64>,
    /// Unnormalised `p(no, a, b)`, indexed `a * B + b`.
    pub no_ab: Vec<f64>,
    /// Unnormalised Bob marginal of the incoming state, used when a device
    /// answers without measuring.
    pub bob_marginal: Vec<f64>,
}

pub struct Engine<'a> {
    pub realization: &'a QuantumRealization,
    pub dims: [usize; 3],
}

impl<'a> Engine<'a> {
    pub fn new(realization: &'a QuantumRealization) -> Result<Self> {
        check_query_compatible(realization)?;
        let k = realization.scenario().charlie_outputs;
        Ok(Engine {
            realization,
            dims: [k, realization.dim_a(), realization.dim_b()],
        })
    }

    fn isometry(&self) -> CMat {
        let [k, da, db] = self.dims;
        shift_unitary(k, da).kronecker(&CMat::identity(db, db))
    }

    /// `M ⊗ A ⊗ B` state right after Charlie's measurement and the policy.
    pub fn after_charlie(&self, ab_state: &CMat, policy: &dyn CollapsePolicy) -> CMat {
        let [k, ..] = self.dims;
        let m0 = basis_projector(k, &[0]);
        let u = self.isometry();
        let rho = u.clone() * m0.kronecker(ab_state) * u.adjoint();
        policy.after_measurement(&rho, &self.dims)
    }

    /// Lüders projection of the register onto the listed outcomes (unnormalised).
    pub fn project_register(&self, rho: &CMat, outcomes: &[usize]) -> CMat {
        let p = embed(&basis_projector(self.dims[0], outcomes), &self.dims, 0);
        &p * rho * &p
    }

    fn bob_table(&self, rho_b: &CMat, y: usize) -> Vec<f64> {
        self.realization.bob()[y].iter().map(|f| prob(&(rho_b * f)).max(0.0)).collect()
    }

    pub fn query(&self, rho: &CMat, x: usize, y: usize) -> QueryNode {
        let [k, _, db] = self.dims;
        let rest: Vec<usize> = (0..k).filter(|&m| m != x).collect();
        let yes = self.project_register(rho, &[x]);
        let no = self.project_register(rho, &rest);
        let u = self.isometry();
        let undone = u.adjoint() * no * u;
        let ab = partial_trace(&undone, &self.dims, &[1, 2]);
        let alice = &self.realization.alice()[x];
        let bob = &self.realization.bob()[y];
        let mut no_ab = Vec::with_capacity(alice.len() * db);
        for e in alice {
            for f in bob {
                no_ab.push(prob(&(&ab * e.kronecker(f))).max(0.0));
            }
        }
        QueryNode {
            weight: prob(rho),
            p_yes: prob(&yes).max(0.0),
            yes_bob: self.bob_table(&partial_trace(&yes, &self.dims, &[2]), y),
            no_ab,
            bob_marginal: self.bob_table(&partial_trace(rho, &self.dims, &[2]), y),
        }
    }
}
