//! Arbitrary-precision rationals and the float/rational bridges used across the crate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// Denominator cap used whenever a float is turned into an exact rational.
pub const RATIONALIZE_DENOMINATOR_CAP: i64 = 1_000_000_000_000;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale down first.
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Formats as `num/den`, or `num` when the denominator is one.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Schema(format!("malformed rational '{s}'"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Schema(format!("zero denominator in '{s}'")));
            }
            Ok(Q::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Q::from_integer(n))
        }
    }
}

/// Best rational approximation of `x` with denominator at most `cap`
/// (continued-fraction convergents and the final semiconvergent).
pub fn rationalize(x: f64, cap: i64) -> Result<Q> {
    if !x.is_finite() {
        return Err(Error::Invalid(format!("cannot rationalize {x}")));
    }
    let exact = Q::from_float(x).expect("finite float");
    let cap = BigInt::from(cap);
    if exact.denom() <= &cap {
        return Ok(exact);
    }
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact.clone();
    loop {
        let a = rest.floor().to_integer();
        let q2 = &a * &q1 + &q0;
        if q2 > cap {
            // semiconvergent with the largest admissible partial quotient
            let k = (&cap - &q0).div_floor(&q1);
            let ps = &k * &p1 + &p0;
            let qs = &k * &q1 + &q0;
            let conv = Q::new(p1.clone(), q1.clone());
            let semi = Q::new(ps, qs);
            let pick = if (&semi - &exact).abs() < (&conv - &exact).abs() {
                semi
            } else {
                conv
            };
            return Ok(pick);
        }
        let p2 = &a * &p1 + &p0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = &rest - Q::from_integer(a);
        if frac.is_zero() {
            return Ok(Q::new(p1, q1));
        }
        rest = frac.recip();
    }
}

/// Scales a rational vector by a positive factor so that it becomes a primitive
/// integer vector (gcd of entries equal to one). The zero vector is returned unchanged.
pub fn primitive_integer(v: &[Q]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * Q::from_integer(lcm.clone())).to_integer())
        .collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() || g.is_one() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| {
        if x.is_zero() || y.is_zero() {
            acc
        } else {
            acc + x * y
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.25, RATIONALIZE_DENOMINATOR_CAP).unwrap(), q(1, 4));
        assert_eq!(rationalize(1.0 / 3.0, RATIONALIZE_DENOMINATOR_CAP).unwrap(), q(1, 3));
        assert_eq!(rationalize(-2.0 / 7.0, 1000).unwrap(), q(-2, 7));
    }

    #[test]
    fn rationalize_respects_cap() {
        let r = rationalize(std::f64::consts::SQRT_2, 1000).unwrap();
        assert!(r.denom() <= &BigInt::from(1000));
        assert!((to_f64(&r) - std::f64::consts::SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("-3/6").unwrap(), q(-1, 2));
        assert_eq!(format_q(&q(4, 2)), "2");
        assert_eq!(format_q(&q(-1, 2)), "-1/2");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn primitive_vector() {
        let v = primitive_integer(&[q(1, 2), q(-3, 4), q(0, 1)]);
        assert_eq!(v, vec![BigInt::from(2), BigInt::from(-3), BigInt::from(0)]);
    }
}
