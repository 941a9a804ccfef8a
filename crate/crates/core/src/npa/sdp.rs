//! Dense primal-dual interior point method for small semidefinite programs.
//!
//! Standard form, with `X, S` symmetric `n×n`:
//!
//! ```text
//! (P)  min ⟨C,X⟩  s.t. ⟨A_k,X⟩ = b_k,  X ⪰ 0
//! (D)  max b·y    s.t. Σ y_k A_k + S = C,  S ⪰ 0
//! ```
//!
//! Infeasible start, Nesterov-Todd scaling, Mehrotra-style centring from a
//! predictor step. Deterministic and single-threaded.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric constraint matrix stored as `(row, col, value)` over both
/// triangles, so `⟨A,X⟩ = Σ v·X[r,c]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn inner(&self, x: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(r, c, v)| v * x[(r, c)]).sum()
    }

    pub fn add_scaled_to(&self, out: &mut DMatrix<f64>, scale: f64) {
        for &(r, c, v) in &self.entries {
            out[(r, c)] += scale * v;
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        self.add_scaled_to(&mut m, 1.0);
        m
    }
}

#[derive(Clone, Debug)]
pub struct Sdp {
    pub n: usize,
    pub c: DMatrix<f64>,
    pub a: Vec<SparseSym>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    pub tolerance: f64,
    /// Accepted gap when progress stalls before `tolerance` is met.
    pub fallback_tolerance: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tolerance: 1e-9,
            fallback_tolerance: 1e-6,
            max_iterations: 150,
            step_fraction: 0.98,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub s: DMatrix<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest `α ≤ cap` keeping `M + α·D` positive definite, given `L Lᵀ = M`.
fn max_step(l: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let n = l.nrows();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .unwrap_or_else(|| DMatrix::identity(n, n));
    let t = sym(&(&linv * d * linv.transpose()));
    let lo = t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

impl Sdp {
    fn op_a(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|a| a.inner(x)))
    }

    fn op_at(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (a, &v) in self.a.iter().zip(y.iter()) {
            a.add_scaled_to(&mut out, v);
        }
        out
    }

    /// `M_ij = ⟨A_i, W A_j W⟩`.
    fn schur(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.a.len();
        let n = self.n;
        let mut out = DMatrix::zeros(m, m);
        let mut waw = DMatrix::zeros(n, n);
        for j in 0..m {
            waw.fill(0.0);
            for &(r, c, v) in &self.a[j].entries {
                // v · w_r w_cᵀ
                for q in 0..n {
                    let f = v * w[(c, q)];
                    if f != 0.0 {
                        for p in 0..n {
                            waw[(p, q)] += w[(p, r)] * f;
                        }
                    }
                }
            }
            for i in 0..m {
                out[(i, j)] = self.a[i].inner(&waw);
            }
        }
        sym(&out)
    }

    pub fn solve(&self, opts: &SdpOptions) -> Result<SdpSolution> {
        let n = self.n;
        let m = self.a.len();
        let b = DVector::from_column_slice(&self.b);
        let bnorm = 1.0 + b.norm();
        let cnorm = 1.0 + frob(&self.c);
        let scale = (1.0 + b.amax()).max(1.0 + self.c.amax()).sqrt() * 2.0;
        let mut x = DMatrix::<f64>::identity(n, n) * scale;
        let mut s = DMatrix::<f64>::identity(n, n) * scale;
        let mut y = DVector::<f64>::zeros(m);
        let mut best: Option<SdpSolution> = None;
        let mut stall = 0;

        for iter in 0..opts.max_iterations {
            let rp = &b - self.op_a(&x);
            let rd = &self.c - &s - self.op_at(&y);
            let pobj = inner(&self.c, &x);
            let dobj = b.dot(&y);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let pinf = rp.norm() / bnorm;
            let dinf = frob(&rd) / cnorm;
            let current = SdpSolution {
                x: x.clone(),
                y: y.clone(),
                s: s.clone(),
                primal_objective: pobj,
                dual_objective: dobj,
                relative_gap: gap,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                iterations: iter,
            };
            if gap <= opts.tolerance && pinf <= opts.tolerance && dinf <= opts.tolerance {
                return Ok(current);
            }
            let worst = gap.max(pinf).max(dinf);
            if best.as_ref().is_none_or(|bs| {
                bs.relative_gap.max(bs.primal_infeasibility).max(bs.dual_infeasibility) > worst
            }) {
                best = Some(current);
            }

            let lx = match x.clone().cholesky() {
                Some(c) => c.l(),
                None => break,
            };
            let ls = match s.clone().cholesky() {
                Some(c) => c.l(),
                None => break,
            };
            let svd = (ls.transpose() * &lx).svd(false, true);
            let v = svd.v_t.expect("requested").transpose();
            let dinv = DMatrix::from_diagonal(&svd.singular_values.map(|d| 1.0 / d.max(1e-300)));
            let g = &lx * &v;
            let w = sym(&(&g * dinv * g.transpose()));
            let mu = inner(&x, &s) / n as f64;
            let schur = self.schur(&w);
            // Redundant constraints make the Schur complement singular; a
            // growing diagonal shift restores a usable factorisation.
            let diag = schur.diagonal().amax().max(1e-300);
            let mut chol = schur.clone().cholesky();
            let mut shift = 1e-14 * diag;
            while chol.is_none() && shift < 1e-4 * diag {
                chol = (&schur + DMatrix::identity(m, m) * shift).cholesky();
                shift *= 100.0;
            }
            let Some(chol) = chol else { break };
            let s_inv = {
                let linv = ls
                    .clone()
                    .solve_lower_triangular(&DMatrix::identity(n, n))
                    .unwrap_or_else(|| DMatrix::identity(n, n));
                linv.transpose() * linv
            };
            let wrdw = &w * &rd * &w;
            let direction = |sigma: f64| {
                let rc = &s_inv * (sigma * mu) - &x;
                let rhs = &rp - self.op_a(&rc) + self.op_a(&wrdw);
                let dy = chol.solve(&rhs);
                let ds = &rd - self.op_at(&dy);
                let dx = sym(&(rc - &w * &ds * &w));
                (dx, dy, ds)
            };
            let (dx, _, ds) = direction(0.0);
            let ap = max_step(&lx, &dx).min(1.0);
            let ad = max_step(&ls, &ds).min(1.0);
            let trial = inner(&(&x + &dx * ap), &(&s + &ds * ad)) / n as f64;
            let sigma = (trial / mu).powi(3).clamp(0.0, 1.0);
            let (dx, dy, ds) = direction(sigma);
            let ap = (opts.step_fraction * max_step(&lx, &dx)).min(1.0);
            let ad = (opts.step_fraction * max_step(&ls, &ds)).min(1.0);
            if ap < 1e-10 && ad < 1e-10 {
                stall += 1;
                if stall > 3 {
                    break;
                }
            }
            x = sym(&(&x + dx * ap));
            y += dy * ad;
            s = sym(&(&s + ds * ad));
        }

        let best = best.expect("at least one iterate");
        let worst = best.relative_gap.max(best.primal_infeasibility).max(best.dual_infeasibility);
        if worst <= opts.fallback_tolerance {
            return Ok(best);
        }
        Err(Error::Solver {
            message: format!(
                "no convergence (primal infeasibility {:e}, dual infeasibility {:e})",
                best.primal_infeasibility, best.dual_infeasibility
            ),
            best_bound: best.primal_objective,
            gap: best.relative_gap,
        })
    }
}
