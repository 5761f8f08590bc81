//! Exact rational helpers.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational number used for every coordinate, length and bound.
pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"-p/q"` or an integer. Decimal notation is rejected so
/// that no value is ever routed through a float.
pub fn parse_q(text: &str) -> Result<Q> {
    let t = text.trim();
    let bad = || Error::InvalidParameter(format!("not an exact rational: {text:?}"));
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(num, den))
}

/// Canonical text form: `p/q` in lowest terms, or `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn min_q(a: &Q, b: &Q) -> Q {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max_q(a: &Q, b: &Q) -> Q {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn half(x: &Q) -> Q {
    x / qi(2)
}

pub fn two_pow_neg(n: u32) -> Q {
    Q::new(BigInt::one(), BigInt::from(2u8).pow(n))
}

fn sqrt_exact(x: &Q) -> Option<Q> {
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| Q::new(n, d))
}

/// Smallest convenient rational upper bound on `sqrt(x)` for `x >= 0`:
/// exact when `x` is a rational square, otherwise rounded up on a `2^-32` grid.
pub fn sqrt_upper(x: &Q) -> Q {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    if let Some(r) = sqrt_exact(x) {
        return r;
    }
    let scale = BigInt::one() << 32u32;
    let scaled = (x * Q::from_integer(&scale * &scale)).ceil().to_integer();
    let mut root = scaled.sqrt();
    if &root * &root < scaled {
        root += 1;
    }
    Q::new(root, scale)
}

/// Largest convenient rational lower bound on `sqrt(x)` for `x >= 0`.
pub fn sqrt_lower(x: &Q) -> Q {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    if let Some(r) = sqrt_exact(x) {
        return r;
    }
    let scale = BigInt::one() << 32u32;
    let scaled = (x * Q::from_integer(&scale * &scale)).floor().to_integer();
    Q::new(scaled.sqrt(), scale)
}
