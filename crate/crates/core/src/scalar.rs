//! Exact rational scalars and the integer-root machinery used by the
//! fractional-power inequality checks.
//!
//! Every weight, coefficient, cost, potential and solver threshold in this
//! crate is a [`Scalar`]: an arbitrary-precision rational kept in canonical
//! reduced form, so all comparisons are exact and solver runs are
//! deterministic. Floating point is never consulted for a decision.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number. `num_rational::BigRational` already stores values
/// reduced with a positive denominator, which is the canonical form we need.
pub type Scalar = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational `{0}`: expected INT or INT/INT")]
    Malformed(String),
    #[error("denominator must be positive in `{0}`")]
    NonPositiveDenominator(String),
}

/// Parses the instance-format rational grammar: `INT` or `INT/INT` with a
/// positive denominator. Whitespace is not allowed inside the literal.
pub fn parse_rational(text: &str) -> Result<Scalar, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let parse_int = |t: &str| -> Result<BigInt, RationalParseError> {
        if t.is_empty() {
            return Err(RationalParseError::Malformed(text.to_string()));
        }
        t.parse::<BigInt>()
            .map_err(|_| RationalParseError::Malformed(text.to_string()))
    };
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(s)?)),
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if den.sign() != Sign::Plus {
                return Err(RationalParseError::NonPositiveDenominator(text.to_string()));
            }
            Ok(BigRational::new(num, den))
        }
    }
}

/// Canonical exact rendering: `p` when the denominator is 1, else `p/q`.
pub fn rational_string(x: &Scalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Convenience constructors.
pub fn scalar_int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn scalar_ratio(num: i64, den: i64) -> Scalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `x^k` for a non-negative integer exponent.
pub fn pow_scalar(x: &Scalar, k: u32) -> Scalar {
    if k == 0 {
        return Scalar::one();
    }
    let mut acc = x.clone();
    for _ in 1..k {
        acc *= x;
    }
    acc
}

/// Factorial as a scalar.
pub fn factorial(n: u32) -> Scalar {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    BigRational::from_integer(acc)
}

/// Binomial coefficient C(n, k) as a scalar.
pub fn binomial(n: u32, k: u32) -> Scalar {
    if k > n {
        return Scalar::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    BigRational::from_integer(num / den)
}

fn pow10(exp: u32) -> BigUint {
    BigUint::from(10u32).pow(exp)
}

/// Floor of the k-th root of a non-negative rational, scaled so the result
/// carries `digits` decimal digits after the point. Returns `(lo, hi)` with
/// `lo <= x^(1/k) < hi` and `hi - lo = 10^-digits`.
///
/// Guaranteed enclosure: with `t = floor(numer * 10^(k*digits) / denom)` and
/// `r = floor(t^(1/k))`, we have `r^k <= t <= x * 10^(k*digits) < t + 1`
/// and `(r+1)^k >= t + 1`, so `r <= x^(1/k) * 10^digits < r + 1`.
pub fn kth_root_interval(x: &Scalar, k: u32, digits: u32) -> (Scalar, Scalar) {
    assert!(k >= 1, "root order must be at least 1");
    assert!(!x.is_negative(), "root of a negative scalar");
    let numer = x.numer().magnitude();
    let denom = x.denom().magnitude();
    let scaled = numer * pow10(k * digits);
    let t = scaled / denom;
    let r = num_integer::Roots::nth_root(&t, k);
    let scale = BigInt::from(pow10(digits));
    let lo = BigRational::new(BigInt::from(r.clone()), scale.clone());
    let hi = BigRational::new(BigInt::from(r + BigUint::one()), scale);
    (lo, hi)
}

/// Rational upper bound on sqrt(5), tight to within 10^-31. Over-approximating
/// keeps every stretch bound derived from it a valid upper bound.
pub fn sqrt5_upper() -> Scalar {
    const DIGITS: u32 = 31;
    let (_, hi) = kth_root_interval(&scalar_int(5), 2, DIGITS);
    hi
}

/// Decimal approximation with `sig` significant digits, for human-readable
/// report fields. The exact `p/q` string stays authoritative.
pub fn decimal_string(x: &Scalar, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let sig = sig.max(1) as i64;
    let neg = x.is_negative();
    let ax = x.abs();
    // magnitude = floor(log10(ax)), found by digit counts plus a correction.
    let nd = ax.numer().magnitude().to_string().len() as i64;
    let dd = ax.denom().magnitude().to_string().len() as i64;
    let mut mag = nd - dd;
    let p10 = |e: i64| -> Scalar {
        let b = BigRational::from_integer(BigInt::from(10));
        if e >= 0 {
            pow_scalar(&b, e as u32)
        } else {
            pow_scalar(&b, (-e) as u32).recip()
        }
    };
    if ax < p10(mag) {
        mag -= 1;
    } else if ax >= p10(mag + 1) {
        mag += 1;
    }
    // Round ax / 10^(mag+1-sig) to the nearest integer: sig leading digits.
    let shift = sig - 1 - mag;
    let scaled = &ax * p10(shift);
    let rounded = (scaled + scalar_ratio(1, 2)).floor().to_integer();
    let mut digits = rounded.magnitude().to_string();
    if digits.len() as i64 > sig {
        // Rounding carried over (e.g. 999.96 -> 1000); drop the extra digit.
        digits.truncate(sig as usize);
        mag += 1;
    }
    let body = if (-6..=29).contains(&mag) {
        if mag >= 0 {
            let int_len = (mag + 1) as usize;
            if int_len >= digits.len() {
                let zeros = int_len - digits.len();
                format!("{}{}", digits, "0".repeat(zeros))
            } else {
                let frac = digits.split_off(int_len);
                let frac = frac.trim_end_matches('0');
                if frac.is_empty() {
                    digits
                } else {
                    format!("{}.{}", digits, frac)
                }
            }
        } else {
            let zeros = (-mag - 1) as usize;
            let frac = format!("{}{}", "0".repeat(zeros), digits);
            let frac = frac.trim_end_matches('0');
            format!("0.{}", frac)
        }
    } else {
        let frac = digits.split_off(1);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            format!("{}e{}", digits, mag)
        } else {
            format!("{}.{}e{}", digits, frac, mag)
        }
    };
    if neg {
        format!("-{}", body)
    } else {
        body
    }
}

/// Comparison by cross-multiplication. The derived `Ord` on rationals
/// recurses once per continued-fraction term, which overflows the stack on
/// nearly-equal values with huge denominators (tight root intervals); this
/// stays iterative.
pub fn cmp_exact(a: &Scalar, b: &Scalar) -> std::cmp::Ordering {
    let left = a.numer() * b.denom();
    let right = b.numer() * a.denom();
    left.cmp(&right)
}

/// Smallest integer `m >= 0` with `ratio <= 2^m`. Used to size the phase
/// ladder from the exact cost envelope.
pub fn ceil_log2_ratio(ratio: &Scalar) -> u32 {
    assert!(ratio.is_positive(), "log of a non-positive ratio");
    let two = scalar_int(2);
    let mut m = 0u32;
    let mut power = Scalar::one();
    while power < *ratio {
        power *= &two;
        m += 1;
    }
    m
}
