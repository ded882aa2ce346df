//! Exact rational plumbing: parsing, formatting, and a few conversions used
//! across the crate. Prices and rents are `BigRational` end-to-end so that
//! identities like `sum(p) = R` hold exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Parse a rational from either `"p/q"` form or a plain decimal string
/// (`"12"`, `"-3.25"`, `"1e3"` is *not* accepted).
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".to_string());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let neg = int_part.trim_start().starts_with('-');
        let i: BigInt = if int_part.is_empty() || int_part == "-" {
            BigInt::zero()
        } else {
            int_part.parse().map_err(|_| format!("bad number {s:?}"))?
        };
        if !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad number {s:?}"));
        }
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let f: BigInt = if frac_part.is_empty() {
            BigInt::zero()
        } else {
            frac_part.parse().map_err(|_| format!("bad number {s:?}"))?
        };
        let magnitude = i.abs() * &scale + f;
        let signed = if neg { -magnitude } else { magnitude };
        return Ok(Rat::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(|_| format!("bad number {s:?}"))?;
    Ok(Rat::from_integer(n))
}

/// Canonical `"p/q"` form (`"p"` when the denominator is 1).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest f64, for display fields only.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}
