use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::RealNumber;
use crate::error::Result;

/// Fractional bits of the fixed-point view of alpha.
pub const FX_ALPHA_BITS: u32 = 96;
const ONE: u128 = 1u128 << FX_ALPHA_BITS;
const MASK: u128 = ONE - 1;
const HALF: u128 = ONE >> 1;

/// `alpha mod 1` enclosed in `[lo, lo + width] * 2^-96`.
///
/// `||n alpha||` for `n < 2^31` then costs two multiplications and stays a
/// certified enclosure of width `n * width` ulps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedAlpha {
    lo: u128,
    width: u128,
}

impl FixedAlpha {
    pub const MAX_N: u64 = (1 << 31) - 1;

    pub fn new(alpha: &RealNumber) -> Result<Self> {
        let enc = alpha.enclosure(FX_ALPHA_BITS + 32)?;
        let f = enc.lo().floor();
        let scale = BigRational::from_integer(BigInt::from(ONE));
        let lo = ((enc.lo() - &f) * &scale).floor().to_integer();
        let hi = ((enc.hi() - &f) * &scale).ceil().to_integer();
        Ok(FixedAlpha {
            lo: lo.to_u128().unwrap(),
            width: (hi - &lo).to_u128().unwrap(),
        })
    }

    /// Enclosure of `||n alpha||` in units of `2^-96`.
    #[inline]
    pub fn norm(&self, n: u64) -> (u128, u128) {
        debug_assert!((1..=Self::MAX_N).contains(&n));
        let x = (n as u128 * self.lo) & MASK;
        let y = x + n as u128 * self.width;
        torus_norm_fx(x, y)
    }

    pub fn to_rational(v: u128) -> BigRational {
        BigRational::new(BigInt::from(v), BigInt::from(ONE))
    }

    pub const fn one() -> u128 {
        ONE
    }
}

/// `||t||` over `t in [x, y]` with `0 <= x < 1` and `y - x < 1`, fixed point.
#[inline]
fn torus_norm_fx(x: u128, y: u128) -> (u128, u128) {
    let d = |t: u128| {
        let r = t & MASK;
        r.min(ONE - r)
    };
    let (dx, dy) = (d(x), d(y));
    let contains_int = y >= ONE;
    let contains_half = (x <= HALF && HALF <= y) || y >= ONE + HALF;
    let lo = if contains_int { 0 } else { dx.min(dy) };
    let hi = if contains_half { HALF } else { dx.max(dy) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    #[test]
    fn fixed_norm_encloses_exact_dist() {
        for desc in ["golden", "sqrt:2", "cf:0;3,(1,4,1)", "random:9", "liouville:10:factorial"] {
            let a: RealNumber = desc.parse().unwrap();
            let fx = a.fixed().unwrap();
            let tight = BigRational::new(1.into(), BigInt::from(1u8) << 140usize);
            for n in (1..20_000u64).step_by(37).chain([1 << 30]) {
                let (lo, hi) = fx.norm(n);
                let exact = a.dist_u64(n, &tight).unwrap();
                assert!(FixedAlpha::to_rational(lo) <= exact.lower, "{desc} n={n}");
                assert!(exact.upper <= FixedAlpha::to_rational(hi), "{desc} n={n}");
                assert!(hi - lo <= 4 * n as u128 + 4);
            }
        }
    }

    #[test]
    fn rational_alpha_hits_zero() {
        let a = RealNumber::rational(rat(1, 4));
        let fx = a.fixed().unwrap();
        assert_eq!(fx.norm(4), (0, 0));
        assert_eq!(fx.norm(2), (ONE / 2, ONE / 2));
    }
}
