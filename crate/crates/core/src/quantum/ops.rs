//! Tensor products, partial traces and measurement updates on multipartite
//! density matrices. Factors are ordered left to right as in `dims`.

use super::{CMat, CVec, C64};
use crate::error::{Error, Result};

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Computational basis vector `|i⟩` in dimension `d`.
pub fn ket(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = C64::new(1.0, 0.0);
    v
}

pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `1 ⊗ … ⊗ op ⊗ … ⊗ 1` with `op` on factor `factor`.
pub fn embed(op: &CMat, dims: &[usize], factor: usize) -> CMat {
    let left: usize = dims[..factor].iter().product();
    let right: usize = dims[factor + 1..].iter().product();
    kron(&kron(&CMat::identity(left, left), op), &CMat::identity(right, right))
}

/// Traces out every factor not listed in `keep` (kept factors stay in order).
pub fn partial_trace(rho: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let n = dims.len();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let mut out = CMat::zeros(out_dim, out_dim);
    let total: usize = dims.iter().product();
    let digits = |mut i: usize| {
        let mut d = vec![0; n];
        for k in (0..n).rev() {
            d[k] = i % dims[k];
            i /= dims[k];
        }
        d
    };
    let kept_index = |d: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            if (0..n).any(|k| !keep.contains(&k) && di[k] != dj[k]) {
                continue;
            }
            out[(kept_index(&di), kept_index(&dj))] += rho[(i, j)];
        }
    }
    out
}

fn check_projective(projectors: &[CMat], tol: f64) -> Result<()> {
    let d = projectors.first().map_or(0, |p| p.nrows());
    let mut sum = CMat::zeros(d, d);
    for (i, p) in projectors.iter().enumerate() {
        for (j, q) in projectors.iter().enumerate() {
            let prod = p * q;
            let target = if i == j { p.clone() } else { CMat::zeros(d, d) };
            if (prod - target).iter().any(|z| z.norm() > tol) {
                return Err(Error::Invalid(format!("projectors {i} and {j} are not orthogonal projectors")));
            }
        }
        sum += p;
    }
    if (sum - CMat::identity(d, d)).iter().any(|z| z.norm() > tol) {
        return Err(Error::Invalid("projectors do not sum to the identity".into()));
    }
    Ok(())
}

/// Lüders update `Π ρ Π / tr(Π ρ Π)` for the projector `Π = Σ_{k ∈ observed} P_k`
/// acting on factor `factor`.
pub fn lueders_post_state(
    rho: &CMat,
    dims: &[usize],
    factor: usize,
    projectors: &[CMat],
    observed: &[usize],
) -> Result<CMat> {
    check_projective(projectors, 1e-10)?;
    let d = projectors[0].nrows();
    let mut pi = CMat::zeros(d, d);
    for &k in observed {
        pi += &projectors[k];
    }
    let big = embed(&pi, dims, factor);
    let post = &big * rho * &big;
    let p = post.trace().re;
    if p <= 1e-15 {
        return Err(Error::ZeroProbability);
    }
    Ok(post / C64::new(p, 0.0))
}

/// Full dephasing `Σ_k P_k ρ P_k` on factor `factor`.
pub fn dephase(rho: &CMat, dims: &[usize], factor: usize, projectors: &[CMat]) -> CMat {
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    for p in projectors {
        let big = embed(p, dims, factor);
        out += &big * rho * &big;
    }
    out
}

/// `|m⟩|s⟩ → |m + s mod k⟩|s⟩` on `k ⊗ d` with `s < k` copied; basis states with
/// `s ≥ k` pass through. Copies a system value into a register prepared in `|0⟩`.
pub fn shift_unitary(k: usize, d: usize) -> CMat {
    let n = k * d;
    let mut u = CMat::zeros(n, n);
    for m in 0..k {
        for s in 0..d {
            let target = if s < k { (m + s) % k } else { m };
            u[(target * d + s, m * d + s)] = C64::new(1.0, 0.0);
        }
    }
    u
}

/// `½‖ρ − σ‖₁` for Hermitian arguments.
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> f64 {
    let diff = rho - sigma;
    let h = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    0.5 * h.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_trace_of_product() {
        let a = projector(&ket(2, 1));
        let b = projector(&ket(3, 2));
        let rho = kron(&a, &b);
        assert!(trace_distance(&partial_trace(&rho, &[2, 3], &[1]), &b) < 1e-14);
        assert!(trace_distance(&partial_trace(&rho, &[2, 3], &[0]), &a) < 1e-14);
    }

    #[test]
    fn lueders_is_idempotent() {
        let plus = (ket(2, 0) + ket(2, 1)) / C64::new(2f64.sqrt(), 0.0);
        let psi = kron(&projector(&plus), &projector(&plus));
        let ps = [projector(&ket(2, 0)), projector(&ket(2, 1))];
        let once = lueders_post_state(&psi, &[2, 2], 0, &ps, &[1]).unwrap();
        let twice = lueders_post_state(&once, &[2, 2], 0, &ps, &[1]).unwrap();
        assert!(trace_distance(&once, &twice) < 1e-14);
        let expect = kron(&ps[1], &projector(&plus));
        assert!(trace_distance(&once, &expect) < 1e-14);
    }

    #[test]
    fn zero_probability_is_an_error() {
        let rho = projector(&ket(2, 0));
        let ps = [projector(&ket(2, 0)), projector(&ket(2, 1))];
        assert!(matches!(
            lueders_post_state(&rho, &[2], 0, &ps, &[1]),
            Err(Error::ZeroProbability)
        ));
    }

    #[test]
    fn shift_is_unitary_and_invertible() {
        let u = shift_unitary(3, 3);
        let id = &u.adjoint() * &u;
        assert!((id - CMat::identity(9, 9)).iter().all(|z| z.norm() < 1e-15));
    }
}
