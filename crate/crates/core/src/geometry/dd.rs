//! Double description for pointed polyhedral cones `{x : R x ≥ 0}`.
//!
//! Rows are inserted in index order. Two rays are combined only when they are
//! adjacent, which is decided combinatorially: the rows tight at both must be
//! at least `d − 2` in number and no third ray may be tight on all of them.
//! All arithmetic is on primitive integer vectors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use super::linalg;
use crate::error::{Error, Result};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    fn subset_of(&self, o: &Bits) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a & !b == 0)
    }
}

struct Ray {
    v: Vec<BigInt>,
    zeros: Bits,
}

pub(crate) fn primitive(v: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in v.iter() {
        g = g.gcd(x);
        if g.is_one() {
            return;
        }
    }
    if g.is_zero() || g.is_one() {
        return;
    }
    for x in v.iter_mut() {
        *x = &*x / &g;
    }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let mut s = BigInt::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

/// Scales a rational vector by a positive factor to a primitive integer vector.
pub(crate) fn integer_row(v: &[Q]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let mut out: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    primitive(&mut out);
    out
}

/// Extreme rays of `{x : rows·x ≥ 0}`, each a primitive integer vector,
/// sorted lexicographically.
///
/// The row matrix must have full column rank (the cone is pointed); otherwise
/// [`Error::Degenerate`] is returned.
pub fn extreme_rays(rows: &[Vec<BigInt>]) -> Result<Vec<Vec<BigInt>>> {
    let d = rows.first().map_or(0, |r| r.len());
    if d == 0 {
        return Ok(Vec::new());
    }
    let m = rows.len();

    // initial simplicial cone from the first independent rows
    let qrows: Vec<Vec<Q>> = rows
        .iter()
        .map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect())
        .collect();
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..m {
        let mut trial: Vec<Vec<Q>> = basis.iter().map(|&b| qrows[b].clone()).collect();
        trial.push(qrows[i].clone());
        if linalg::rank(&trial) == trial.len() {
            basis.push(i);
            if basis.len() == d {
                break;
            }
        }
    }
    if basis.len() < d {
        return Err(Error::Degenerate(format!(
            "cone has a lineality space: row rank {} < dimension {d}",
            basis.len()
        )));
    }
    let bmat: Vec<Vec<Q>> = basis.iter().map(|&b| qrows[b].clone()).collect();
    let inv = linalg::inverse(&bmat).expect("basis rows are independent");

    let mut rays: Vec<Ray> = (0..d)
        .map(|k| {
            let col: Vec<Q> = (0..d).map(|i| inv[i][k].clone()).collect();
            let v = integer_row(&col);
            let mut zeros = Bits::new(m);
            for (j, &b) in basis.iter().enumerate() {
                if j != k {
                    zeros.set(b);
                }
            }
            Ray { v, zeros }
        })
        .collect();

    let mut in_basis = vec![false; m];
    for &b in &basis {
        in_basis[b] = true;
    }
    let need = (d as u32).saturating_sub(2);

    for (i, row) in rows.iter().enumerate() {
        if in_basis[i] {
            continue;
        }
        let vals: Vec<BigInt> = rays.par_iter().map(|r| dot(row, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_negative()).collect();
        if neg.is_empty() {
            for (k, r) in rays.iter_mut().enumerate() {
                if vals[k].is_zero() {
                    r.zeros.set(i);
                }
            }
            continue;
        }

        let fresh: Vec<Ray> = pos
            .par_iter()
            .flat_map_iter(|&p| {
                let mut out = Vec::new();
                for &n in &neg {
                    let common = rays[p].zeros.and(&rays[n].zeros);
                    if common.count() < need {
                        continue;
                    }
                    let blocked = rays
                        .iter()
                        .enumerate()
                        .any(|(k, r)| k != p && k != n && common.subset_of(&r.zeros));
                    if blocked {
                        continue;
                    }
                    let sp = &vals[p];
                    let sn = -&vals[n];
                    let mut v: Vec<BigInt> = rays[p]
                        .v
                        .iter()
                        .zip(&rays[n].v)
                        .map(|(a, b)| &sn * a + sp * b)
                        .collect();
                    primitive(&mut v);
                    let mut zeros = common;
                    zeros.set(i);
                    out.push(Ray { v, zeros });
                }
                out
            })
            .collect();

        let mut next = Vec::with_capacity(rays.len() - neg.len() + fresh.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            if vals[k].is_negative() {
                continue;
            }
            if vals[k].is_zero() {
                r.zeros.set(i);
            }
            next.push(r);
        }
        next.extend(fresh);
        rays = next;
    }

    let mut out: Vec<Vec<BigInt>> = rays.into_iter().map(|r| r.v).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: &[&[i64]]) -> Vec<Vec<BigInt>> {
        r.iter().map(|x| x.iter().map(|&v| BigInt::from(v)).collect()).collect()
    }

    #[test]
    fn square_cone() {
        // homogenised unit square: t ≥ 0 rows x ≥ 0, y ≥ 0, t − x ≥ 0, t − y ≥ 0
        let r = rows(&[&[0, 1, 0], &[0, 0, 1], &[1, -1, 0], &[1, 0, -1]]);
        let rays = extreme_rays(&r).unwrap();
        assert_eq!(rays.len(), 4);
        for ray in &rays {
            assert!(ray[0] > BigInt::zero());
        }
    }

    #[test]
    fn lineality_rejected() {
        let r = rows(&[&[1, 0, 0], &[0, 1, 0]]);
        assert!(extreme_rays(&r).is_err());
    }
}
