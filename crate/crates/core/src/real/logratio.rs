use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logs;

/// `log m / log a = sigma + tau` with `sigma` an integer and `tau in [0, 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct FracLog {
    pub sigma: u64,
    #[serde(serialize_with = "crate::report::ser_interval")]
    pub tau: Interval,
    /// `m` is an exact power of `a`, so `tau = 0`.
    pub exact: bool,
}

/// Splits `log m / log a` into integer and fractional parts; `tau` is
/// enclosed to width `<= tol`, escalating precision up to `cap_bits`.
pub fn frac_log_ratio(m: &BigUint, a: u64, tol: &BigRational, cap_bits: u32) -> Result<FracLog> {
    if m.is_zero() {
        return Err(Error::validation("frac_log_ratio needs m >= 1"));
    }
    if a < 2 {
        return Err(Error::validation("base must be >= 2"));
    }
    let ab = BigUint::from(a);
    let mut sigma = 0u64;
    let mut pw = BigUint::one();
    while &pw * &ab <= *m {
        pw *= &ab;
        sigma += 1;
    }
    if pw == *m {
        return Ok(FracLog {
            sigma,
            tau: Interval::zero(),
            exact: true,
        });
    }
    let tol_bits = (tol.denom().bits() as i64 - tol.numer().bits() as i64).max(0) as u32;
    let mut bits = (tol_bits + 16).max(64).min(cap_bits);
    loop {
        let lm = logs::ln_uint(m, bits);
        let la = logs::ln_u64(a, bits);
        let ratio = lm.div(&la).expect("ln a > 0");
        let s = BigRational::from_integer(sigma.into());
        // a^sigma < m < a^(sigma+1) exactly, so tau lies in (0, 1).
        let lo = (ratio.lo() - &s).max(BigRational::zero());
        let hi = (ratio.hi() - &s).min(BigRational::one());
        let tau = Interval::new(lo, hi);
        if tau.width() <= *tol {
            return Ok(FracLog {
                sigma,
                tau,
                exact: false,
            });
        }
        if bits >= cap_bits {
            return Err(Error::undecidable(format!("frac(log {m} / log {a})"), cap_bits));
        }
        bits = (bits * 2).min(cap_bits);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;
    use num_bigint::BigInt;

    fn check(m: u64, a: u64, sigma: u64, tau: f64) {
        let r = frac_log_ratio(&BigUint::from(m), a, &rat(1, 1 << 40), 4096).unwrap();
        assert_eq!(r.sigma, sigma);
        assert!((r.tau.mid_f64() - tau).abs() < 1e-9, "{m} {a}: {}", r.tau.mid_f64());
    }

    #[test]
    fn examples() {
        check(3, 2, 1, 3f64.log2() - 1.0);
        check(30030, 2, 14, 30030f64.log2() - 14.0);
        let r = frac_log_ratio(&BigUint::from(8u32), 2, &rat(1, 100), 256).unwrap();
        assert!(r.exact && r.sigma == 3 && r.tau == Interval::zero());
        let r = frac_log_ratio(&BigUint::from(1u32), 7, &rat(1, 100), 256).unwrap();
        assert!(r.exact && r.sigma == 0);
    }

    #[test]
    fn cap_is_respected() {
        let err = frac_log_ratio(&BigUint::from(3u32), 2, &BigRational::new(1.into(), BigInt::from(1u8) << 200usize), 64);
        assert!(matches!(err, Err(Error::Undecidable { .. })));
    }
}
