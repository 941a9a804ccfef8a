//! Small dense quantum states and measurements, and the behaviours they
//! produce.

pub mod ops;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scenario::{Behavior, BellFunctional, Scenario};

pub use ops::{
    dephase, embed, kron, ket, lueders_post_state, partial_trace, projector, shift_unitary, trace_distance,
};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const EPS_PSD: f64 = 1e-12;
pub const EPS_NS: f64 = 1e-12;

/// Shared state on `dim_a ⊗ dim_b` with projective or POVM effects per input.
#[derive(Clone, Debug)]
pub struct QuantumRealization {
    dim_a: usize,
    dim_b: usize,
    state: CMat,
    alice: Vec<Vec<CMat>>,
    bob: Vec<Vec<CMat>>,
}

fn is_hermitian(m: &CMat, tol: f64) -> bool {
    (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn check_psd(m: &CMat, what: &str) -> Result<()> {
    if !is_hermitian(m, EPS_PSD) {
        return Err(Error::InvalidRealization(format!("{what} is not Hermitian")));
    }
    let lo = min_eigenvalue(m);
    if lo < -EPS_PSD {
        return Err(Error::InvalidRealization(format!(
            "{what} is not positive semidefinite (eigenvalue {lo:e})"
        )));
    }
    Ok(())
}

fn check_measurement(effects: &[CMat], dim: usize, what: &str) -> Result<()> {
    if effects.is_empty() {
        return Err(Error::InvalidRealization(format!("{what} has no outcomes")));
    }
    let mut sum = CMat::zeros(dim, dim);
    for (k, e) in effects.iter().enumerate() {
        if e.nrows() != dim || e.ncols() != dim {
            return Err(Error::InvalidRealization(format!("{what} effect {k} has wrong dimension")));
        }
        check_psd(e, &format!("{what} effect {k}"))?;
        sum += e;
    }
    let dev = (sum - CMat::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > EPS_PSD {
        return Err(Error::InvalidRealization(format!(
            "{what} effects do not sum to identity (deviation {dev:e})"
        )));
    }
    Ok(())
}

impl QuantumRealization {
    pub fn new(state: CMat, alice: Vec<Vec<CMat>>, bob: Vec<Vec<CMat>>) -> Result<Self> {
        let dim_a = alice
            .first()
            .and_then(|m| m.first())
            .map(|e| e.nrows())
            .ok_or_else(|| Error::InvalidRealization("Alice has no measurements".into()))?;
        let dim_b = bob
            .first()
            .and_then(|m| m.first())
            .map(|e| e.nrows())
            .ok_or_else(|| Error::InvalidRealization("Bob has no measurements".into()))?;
        let n = dim_a * dim_b;
        if state.nrows() != n || state.ncols() != n {
            return Err(Error::InvalidRealization(format!("state must be {n}×{n}")));
        }
        check_psd(&state, "state")?;
        let tr = state.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > EPS_PSD {
            return Err(Error::InvalidRealization(format!("state trace is {tr}")));
        }
        let ao = alice[0].len();
        for (x, m) in alice.iter().enumerate() {
            if m.len() != ao {
                return Err(Error::InvalidRealization("Alice measurements differ in outcome count".into()));
            }
            check_measurement(m, dim_a, &format!("Alice measurement x={x}"))?;
        }
        let bo = bob[0].len();
        for (y, m) in bob.iter().enumerate() {
            if m.len() != bo {
                return Err(Error::InvalidRealization("Bob measurements differ in outcome count".into()));
            }
            check_measurement(m, dim_b, &format!("Bob measurement y={y}"))?;
        }
        Ok(QuantumRealization {
            dim_a,
            dim_b,
            state,
            alice,
            bob,
        })
    }

    /// Pure-state convenience constructor.
    pub fn pure(psi: &CVec, alice: Vec<Vec<CMat>>, bob: Vec<Vec<CMat>>) -> Result<Self> {
        Self::new(psi * psi.adjoint(), alice, bob)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn state(&self) -> &CMat {
        &self.state
    }

    pub fn alice(&self) -> &[Vec<CMat>] {
        &self.alice
    }

    pub fn bob(&self) -> &[Vec<CMat>] {
        &self.bob
    }

    pub fn scenario(&self) -> Scenario {
        let ao = self.alice[0].len();
        Scenario {
            alice_inputs: self.alice.len(),
            alice_outputs: ao,
            bob_inputs: self.bob.len(),
            bob_outputs: self.bob[0].len(),
            charlie_outputs: ao,
        }
    }

    /// Same measurements on a different state.
    pub fn with_state(&self, state: CMat) -> Result<Self> {
        Self::new(state, self.alice.clone(), self.bob.clone())
    }

    /// `p·ρ + (1−p)·1/d`.
    pub fn with_white_noise(&self, p: f64) -> Result<Self> {
        let n = self.dim_a * self.dim_b;
        let mixed = CMat::identity(n, n) * C64::new(1.0 / n as f64, 0.0);
        self.with_state(&self.state * C64::new(p, 0.0) + mixed * C64::new(1.0 - p, 0.0))
    }
}

/// `p(a,b|x,y) = tr(ρ · E_{x,a} ⊗ F_{y,b})`.
pub fn behavior_from_realization(r: &QuantumRealization) -> Behavior {
    let s = r.scenario();
    let mut v = vec![0.0; s.dim()];
    for x in 0..s.alice_inputs {
        for y in 0..s.bob_inputs {
            for a in 0..s.alice_outputs {
                for b in 0..s.bob_outputs {
                    let op = kron(&r.alice[x][a], &r.bob[y][b]);
                    v[s.index(a, b, x, y)] = (&r.state * op).trace().re;
                }
            }
        }
    }
    Behavior::float(s, v).expect("table shape follows the scenario")
}

/// Smallest white-noise visibility at which `f` is still violated.
///
/// The behaviour is affine in the visibility, so the root is
/// `v0 / (v0 − v1)` with `v1` the value at full visibility and `v0` the value
/// on the maximally mixed state.
pub fn noise_threshold(r: &QuantumRealization, f: &BellFunctional) -> Result<f64> {
    let v1 = f.as_lower_bound().evaluate(&behavior_from_realization(r))?.to_f64();
    if v1 >= 0.0 {
        return Err(Error::NoViolation(v1));
    }
    let v0 = f.as_lower_bound().evaluate(&behavior_from_realization(&r.with_white_noise(0.0)?))?.to_f64();
    Ok(v0 / (v0 - v1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_summing_effects() {
        let p0 = projector(&ket(2, 0));
        let alice = vec![vec![p0.clone(), p0.clone()]];
        let bob = vec![vec![p0.clone(), projector(&ket(2, 1))]];
        let psi = ket(2, 0).kronecker(&ket(2, 0));
        let e = QuantumRealization::pure(&psi, alice, bob).unwrap_err();
        assert!(e.to_string().contains("Alice measurement x=0"));
    }
}
