//! See-saw search for low functional values over explicit realizations.
//!
//! Alternates between the optimal state (smallest eigenvector of the Bell
//! operator), Bob's effects and Alice's effects. Every step is exactly
//! optimal given the others, or an optimal two-outcome re-split of a pair of
//! effects, so the value never increases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Relations;
use crate::error::{Error, Result};
use crate::quantum::{behavior_from_realization, embed, partial_trace, CMat, QuantumRealization, C64};
use crate::rational::to_f64;
use crate::scenario::{BellFunctional, Scenario};

#[derive(Clone, Debug)]
pub struct SeesawOptions {
    pub dim_a: usize,
    pub dim_b: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// With [`Relations::QueryComplete`], Alice's "yes" effect for input `x`
    /// is the projector onto the basis states assigned to Charlie outcome `x`;
    /// every assignment of basis states to outcomes is tried.
    pub relations: Relations,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            dim_a: 3,
            dim_b: 2,
            seed: 0,
            restarts: 8,
            max_iterations: 2000,
            tolerance: 1e-13,
            relations: Relations::Standard,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    /// Functional value (in the functional's own sign convention).
    pub value: f64,
    pub realization: QuantumRealization,
    pub seed: u64,
    /// Restart that produced the result.
    pub restart: usize,
    /// Minimised (lower-bound form) value after each sweep of that restart.
    pub history: Vec<f64>,
}

fn herm(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Square root of a positive semidefinite matrix, negative noise clipped.
fn psd_sqrt(m: &CMat) -> CMat {
    let e = herm(m).symmetric_eigen();
    let d = e.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
    &e.eigenvectors * CMat::from_diagonal(&d) * e.eigenvectors.adjoint()
}

fn negative_projector(h: &CMat) -> CMat {
    let e = herm(h).symmetric_eigen();
    let n = h.nrows();
    let mut p = CMat::zeros(n, n);
    for (i, &v) in e.eigenvalues.iter().enumerate() {
        if v < 0.0 {
            let col = e.eigenvectors.column(i);
            p += &col * col.adjoint();
        }
    }
    p
}

fn random_basis(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut h = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = if i == j { 0.0 } else { rng.random_range(-1.0..1.0) };
            h[(i, j)] = C64::new(re, im);
            h[(j, i)] = C64::new(re, -im);
        }
    }
    h.symmetric_eigen().eigenvectors
}

/// Random projective split of `M` into `k` effects (`M^{1/2} R_i M^{1/2}`).
fn random_split(m: &CMat, k: usize, rng: &mut ChaCha8Rng) -> Vec<CMat> {
    let d = m.nrows();
    let u = random_basis(d, rng);
    let root = psd_sqrt(m);
    (0..k)
        .map(|o| {
            let mut r = CMat::zeros(d, d);
            for i in (0..d).filter(|i| i % k == o) {
                let col = u.column(i);
                r += &col * col.adjoint();
            }
            herm(&(&root * r * &root))
        })
        .collect()
}

/// Re-splits `E_a + E_b` to minimise `tr(E_a K_a) + tr(E_b K_b)`.
fn improve_pair(effects: &mut [CMat], costs: &[CMat], a: usize, b: usize) {
    let m = &effects[a] + &effects[b];
    let root = psd_sqrt(&m);
    let p = negative_projector(&(&root * (&costs[a] - &costs[b]) * &root));
    let ea = herm(&(&root * p * &root));
    effects[b] = herm(&(m - &ea));
    effects[a] = ea;
}

struct Problem {
    s: Scenario,
    coef: Vec<f64>,
    offset: f64,
}

impl Problem {
    fn bell_operator(&self, alice: &[Vec<CMat>], bob: &[Vec<CMat>]) -> CMat {
        let s = &self.s;
        let da = alice[0][0].nrows();
        let db = bob[0][0].nrows();
        let mut w = CMat::zeros(da * db, da * db);
        for e in s.entries() {
            let c = self.coef[s.index(e.a, e.b, e.x, e.y)];
            if c != 0.0 {
                w += alice[e.x][e.a].kronecker(&bob[e.y][e.b]) * C64::new(c, 0.0);
            }
        }
        w
    }
}

/// Minimum of `f.as_lower_bound()` found from one random start.
fn run(
    prob: &Problem,
    opts: &SeesawOptions,
    assignment: Option<&[usize]>,
    rng: &mut ChaCha8Rng,
) -> (f64, CMat, Vec<Vec<CMat>>, Vec<Vec<CMat>>, Vec<f64>) {
    let s = &prob.s;
    let (da, db) = (opts.dim_a, opts.dim_b);
    let id_a = CMat::identity(da, da);
    let id_b = CMat::identity(db, db);
    let fixed = |x: usize| -> Option<CMat> {
        assignment.map(|asg| {
            let mut p = CMat::zeros(da, da);
            for (i, &c) in asg.iter().enumerate() {
                if c == x {
                    p[(i, i)] = C64::new(1.0, 0.0);
                }
            }
            p
        })
    };
    let mut alice: Vec<Vec<CMat>> = (0..s.alice_inputs)
        .map(|x| match fixed(x) {
            Some(px) => {
                let rest = random_split(&(&id_a - &px), s.alice_outputs - 1, rng);
                let mut it = rest.into_iter();
                (0..s.alice_outputs)
                    .map(|a| if a == x { px.clone() } else { it.next().expect("count") })
                    .collect()
            }
            None => random_split(&id_a, s.alice_outputs, rng),
        })
        .collect();
    let mut bob: Vec<Vec<CMat>> = (0..s.bob_inputs).map(|_| random_split(&id_b, s.bob_outputs, rng)).collect();
    let dims = [da, db];
    let mut history = Vec::new();
    let mut psi_rho = CMat::zeros(da * db, da * db);
    let mut last = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let w = prob.bell_operator(&alice, &bob);
        let e = herm(&w).symmetric_eigen();
        let (imin, _) = e
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let col = e.eigenvectors.column(imin).into_owned();
        psi_rho = &col * col.adjoint();

        for y in 0..s.bob_inputs {
            let costs: Vec<CMat> = (0..s.bob_outputs)
                .map(|b| {
                    let mut k = CMat::zeros(db, db);
                    for x in 0..s.alice_inputs {
                        for a in 0..s.alice_outputs {
                            let c = prob.coef[s.index(a, b, x, y)];
                            if c != 0.0 {
                                let local = &psi_rho * embed(&alice[x][a], &dims, 0);
                                k += partial_trace(&local, &dims, &[1]) * C64::new(c, 0.0);
                            }
                        }
                    }
                    herm(&k)
                })
                .collect();
            for b in 0..s.bob_outputs {
                for b2 in b + 1..s.bob_outputs {
                    improve_pair(&mut bob[y], &costs, b, b2);
                }
            }
        }

        for x in 0..s.alice_inputs {
            let costs: Vec<CMat> = (0..s.alice_outputs)
                .map(|a| {
                    let mut k = CMat::zeros(da, da);
                    for y in 0..s.bob_inputs {
                        for b in 0..s.bob_outputs {
                            let c = prob.coef[s.index(a, b, x, y)];
                            if c != 0.0 {
                                let local = &psi_rho * embed(&bob[y][b], &dims, 1);
                                k += partial_trace(&local, &dims, &[0]) * C64::new(c, 0.0);
                            }
                        }
                    }
                    herm(&k)
                })
                .collect();
            let free: Vec<usize> = (0..s.alice_outputs)
                .filter(|&a| assignment.is_none() || a != x)
                .collect();
            for (i, &a) in free.iter().enumerate() {
                for &a2 in &free[i + 1..] {
                    improve_pair(&mut alice[x], &costs, a, a2);
                }
            }
        }

        let value = (&psi_rho * prob.bell_operator(&alice, &bob)).trace().re + prob.offset;
        history.push(value);
        if last - value < opts.tolerance {
            break;
        }
        last = value;
    }
    let value = *history.last().unwrap_or(&f64::INFINITY);
    (value, psi_rho, alice, bob, history)
}

fn assignments(da: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..da {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..k).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

/// Best (smallest) value of `f` in lower-bound form over `restarts` random
/// starts; for [`Relations::QueryComplete`] each start runs for every
/// assignment of Alice's basis states to Charlie's outcomes.
pub fn seesaw_lower_bound(f: &BellFunctional, opts: &SeesawOptions) -> Result<SeesawResult> {
    let s = *f.scenario();
    if opts.dim_a == 0 || opts.dim_b == 0 || opts.restarts == 0 {
        return Err(Error::Invalid("see-saw needs positive dimensions and restarts".into()));
    }
    let g = f.as_lower_bound();
    let prob = Problem {
        s,
        coef: g.coefficients().iter().map(to_f64).collect(),
        offset: to_f64(g.offset()),
    };
    let asg: Vec<Option<Vec<usize>>> = match opts.relations {
        Relations::Standard => vec![None],
        Relations::QueryComplete => {
            s.require_query_shaped()?;
            if s.alice_inputs.pow(opts.dim_a as u32) > 4096 {
                return Err(Error::Invalid("too many outcome assignments for the query-complete see-saw".into()));
            }
            assignments(opts.dim_a, s.alice_inputs).into_iter().map(Some).collect()
        }
    };
    let jobs: Vec<(usize, Option<Vec<usize>>)> =
        (0..opts.restarts).flat_map(|r| asg.iter().cloned().map(move |a| (r, a))).collect();
    let runs: Vec<_> = jobs
        .par_iter()
        .enumerate()
        .map(|(j, (r, a))| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(j as u64);
            (*r, run(&prob, opts, a.as_deref(), &mut rng))
        })
        .collect();
    let (restart, (_, rho, alice, bob, history)) = runs
        .into_iter()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("at least one run");
    let realization = QuantumRealization::new(rho, alice, bob)?;
    let value = f.evaluate(&behavior_from_realization(&realization))?.to_f64();
    Ok(SeesawResult {
        value,
        realization,
        seed: opts.seed,
        restart,
        history,
    })
}
