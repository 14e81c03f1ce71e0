use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{rat_from_uint, Interval};
use crate::real::RealNumber;
use crate::report::{ser_interval, ser_uint};

/// `gamma = a^b beta` where `beta` is `frac((a^i - a^j) alpha)` or, when `mirrored`,
/// `1 - frac(...)`, i.e. the same difference taken the other way round.
#[derive(Clone, Debug, Serialize)]
pub struct GammaWitness {
    pub i: u32,
    pub j: u32,
    pub b: u32,
    pub mirrored: bool,
    #[serde(serialize_with = "ser_uint")]
    pub t1: BigUint,
    #[serde(serialize_with = "ser_interval")]
    pub beta: Interval,
    #[serde(serialize_with = "ser_interval")]
    pub gamma: Interval,
}

/// Searches `i > j`, `i <= budget`, for `0 < beta < 1/(t1 a^2)` and scales it into
/// `[1/(t1 a^2), 1/(t1 a))`.
pub fn find_gamma(alpha: &RealNumber, a: u64, t1: &BigUint, budget: u32, cap_bits: u32) -> Result<GammaWitness> {
    if alpha.is_rational() {
        return Err(Error::validation("find_gamma needs an irrational alpha"));
    }
    if a < 2 || t1 == &BigUint::from(0u32) {
        return Err(Error::validation("find_gamma needs a >= 2 and t1 >= 1"));
    }
    let ab = BigUint::from(a);
    let lower = BigRational::new(BigInt::one(), BigInt::from(t1 * &ab * &ab));
    let upper = &lower * BigRational::from_integer(BigInt::from(a));
    // Fine enough to separate beta from the threshold in all but near-tie cases.
    let tol0 = &lower / BigRational::from_integer(BigInt::one() << 40usize);
    let one = BigRational::one();
    for i in 1..=budget {
        for j in 0..i {
            let m = ab.pow(i) - ab.pow(j);
            let f = alpha.frac_multiple(&m, &tol0, cap_bits)?;
            for mirrored in [false, true] {
                let beta = if mirrored {
                    Interval::new(&one - f.hi(), &one - f.lo())
                } else {
                    f.clone()
                };
                if !(beta.lo().is_positive() && beta.hi() < &lower) {
                    continue;
                }
                if let Some(w) = scale_into(alpha, &m, mirrored, beta, &ab, &lower, &upper, cap_bits)? {
                    return Ok(GammaWitness {
                        i,
                        j,
                        b: w.0,
                        mirrored,
                        t1: t1.clone(),
                        beta: w.1,
                        gamma: w.2,
                    });
                }
            }
        }
    }
    Err(Error::Budget(format!(
        "no gamma in [1/(t1 a^2), 1/(t1 a)) with exponents up to {budget}"
    )))
}

/// Smallest `b` with `a^b beta >= lower`, certifying `a^b beta < upper`; tightens `beta` if needed.
#[allow(clippy::too_many_arguments)]
fn scale_into(
    alpha: &RealNumber,
    m: &BigUint,
    mirrored: bool,
    mut beta: Interval,
    ab: &BigUint,
    lower: &BigRational,
    upper: &BigRational,
    cap_bits: u32,
) -> Result<Option<(u32, Interval, Interval)>> {
    let one = BigRational::one();
    loop {
        let mut b = 0u32;
        let mut scale = BigRational::one();
        while beta.lo() * &scale < *lower {
            b += 1;
            scale *= rat_from_uint(ab);
        }
        let gamma = beta.scale(&scale);
        if gamma.hi() < upper {
            return Ok(Some((b, beta, gamma)));
        }
        let tol = beta.width() / BigRational::from_integer(BigInt::one() << 32usize);
        if tol.is_positive() && tol.denom().bits() < cap_bits as u64 {
            let f = alpha.frac_multiple(m, &tol, cap_bits)?;
            beta = if mirrored { Interval::new(&one - f.hi(), &one - f.lo()) } else { f };
        } else {
            return Ok(None);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    #[test]
    fn golden_with_small_t1() {
        let g = RealNumber::golden();
        let w = find_gamma(&g, 2, &BigUint::from(3u32), 40, 4096).unwrap();
        assert!(w.i <= 40 && w.j < w.i);
        assert!(w.gamma.lo() >= &rat(1, 12) && w.gamma.hi() < &rat(1, 6));
        // Recompute gamma from the witness directly.
        let m = BigUint::from(2u32).pow(w.i) - BigUint::from(2u32).pow(w.j);
        let f = g.frac_multiple(&m, &rat(1, 1 << 50), 4096).unwrap();
        let beta = if w.mirrored { 1.0 - f.mid_f64() } else { f.mid_f64() };
        assert!((beta * 2f64.powi(w.b as i32) - w.gamma.mid_f64()).abs() < 1e-9);
    }

    #[test]
    fn rational_alpha_is_rejected() {
        let third = RealNumber::rational(rat(1, 3));
        assert!(matches!(find_gamma(&third, 2, &BigUint::from(3u32), 10, 256), Err(Error::Validation(_))));
    }

    #[test]
    fn budget_failure_is_reported() {
        let g = RealNumber::golden();
        let huge = BigUint::one() << 100usize;
        assert!(matches!(find_gamma(&g, 2, &huge, 12, 4096), Err(Error::Budget(_))));
    }
}
