//! Conversions from exact big integers and rationals to `f64`.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// `num / den` rounded to `f64`, accurate to a couple of ulps for any
/// magnitudes (no intermediate overflow).
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "division by zero");
    if num.is_zero() {
        return 0.0;
    }
    // scale so the integer quotient carries ~64 significant bits
    let shift = num.bits() as i64 - den.bits() as i64 - 64;
    let q = if shift >= 0 {
        num / (den << shift as usize)
    } else {
        (num << (-shift) as usize) / den
    };
    let mantissa = q.to_f64().unwrap_or(f64::INFINITY);
    let s = shift.clamp(-4000, 4000) as i32;
    // two steps so subnormal results do not flush to zero
    mantissa * 2f64.powi(s / 2) * 2f64.powi(s - s / 2)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let sign = if r.numer().sign() == Sign::Minus { -1.0 } else { 1.0 };
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    sign * ratio_to_f64(num, den)
}

pub fn biguint_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

pub fn to_rational(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ratios_are_exact() {
        assert_eq!(ratio_to_f64(&BigUint::from(1u32), &BigUint::from(2u32)), 0.5);
        assert_eq!(ratio_to_f64(&BigUint::from(7u32), &BigUint::from(4u32)), 1.75);
        assert_eq!(ratio_to_f64(&BigUint::from(0u32), &BigUint::from(3u32)), 0.0);
    }

    #[test]
    fn huge_operands() {
        let big = BigUint::from(3u32).pow(2000);
        let r = ratio_to_f64(&big, &(BigUint::from(3u32).pow(1999) * 2u32));
        assert!((r - 1.5).abs() < 1e-15);
        let tiny = ratio_to_f64(&BigUint::from(1u32), &BigUint::from(2u32).pow(1070));
        assert_eq!(tiny, f64::from_bits(1 << 4)); // 2^-1070, subnormal
    }

    #[test]
    fn signed_rationals() {
        let r = BigRational::new(BigInt::from(-3), BigInt::from(8));
        assert_eq!(rational_to_f64(&r), -0.375);
    }
}
