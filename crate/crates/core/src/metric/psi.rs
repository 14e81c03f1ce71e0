use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fast::FInterval;
use crate::interval::{parse_rational, Interval};
use crate::logs;
use crate::psav::{PsavSequence, SmallChain};

/// `psi(n) = c / (n^p M(n)^m (ln n)^l (ln ln n)^e)`, held constant below `n_start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiFunction {
    pub c: BigRational,
    pub p: BigRational,
    pub m: BigRational,
    pub l: BigRational,
    pub e: BigRational,
}

fn small_ratio(x: &BigRational) -> Option<(u32, u32)> {
    Some((x.numer().to_u32()?, x.denom().to_u32()?))
}

impl PsiFunction {
    pub fn new(c: BigRational, p: BigRational, m: BigRational, l: BigRational, e: BigRational) -> Result<Self> {
        for (name, v) in [("c", &c), ("p", &p), ("m", &m), ("l", &l), ("e", &e)] {
            if v.is_negative() {
                return Err(Error::validation(format!("psi parameter {name} must be >= 0")));
            }
            if name != "c" && small_ratio(v).is_none() {
                return Err(Error::validation(format!("psi exponent {name} = {v} is too large")));
            }
        }
        Ok(PsiFunction { c, p, m, l, e })
    }

    /// `1 / (n M(n) ln n (ln ln n)^e)`.
    pub fn standard(e: i64) -> Self {
        let one = BigRational::one();
        PsiFunction {
            c: one.clone(),
            p: one.clone(),
            m: one.clone(),
            l: one,
            e: BigRational::from_integer(BigInt::from(e)),
        }
    }

    pub fn zero() -> Self {
        let z = BigRational::zero();
        PsiFunction {
            c: z.clone(),
            p: z.clone(),
            m: z.clone(),
            l: z.clone(),
            e: z,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_zero()
    }

    /// Values are rational exactly when no logarithm appears and the
    /// remaining exponents are integers.
    pub fn rational_valued(&self) -> bool {
        self.is_zero()
            || (self.l.is_zero() && self.e.is_zero() && self.p.is_integer() && self.m.is_integer())
    }

    /// First `n` from which every factor is defined, positive and nondecreasing.
    pub fn n_start(&self, n1: Option<u64>) -> u64 {
        let mut s = 1;
        if self.l.is_positive() {
            s = s.max(2);
        }
        if self.e.is_positive() {
            s = s.max(16);
        }
        if self.m.is_positive() {
            s = s.max(n1.unwrap_or(u64::MAX));
        }
        s
    }

    /// Exact value at `n >= n_start` with `M(n) = m_n`, when rational-valued.
    pub fn exact(&self, n: u64, m_n: usize) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if !self.rational_valued() {
            return None;
        }
        let p = self.p.to_integer().to_usize()?;
        let m = self.m.to_integer().to_usize()?;
        let den = num_traits::pow(BigInt::from(n), p) * num_traits::pow(BigInt::from(m_n), m);
        Some(&self.c / BigRational::from_integer(den))
    }

    /// Certified enclosure at `n >= n_start`.
    pub fn enclose(&self, n: u64, m_n: usize, bits: u32) -> Interval {
        if let Some(v) = self.exact(n, m_n) {
            return Interval::exact(v);
        }
        let bits = bits + 16;
        let mut den = logs::pow_rational(&Interval::from_int(n as i64), &self.p, bits);
        if !self.m.is_zero() {
            den = den.mul(&logs::pow_rational(&Interval::from_int(m_n as i64), &self.m, bits));
        }
        if !self.l.is_zero() || !self.e.is_zero() {
            let ln = logs::ln_u64(n, bits + 8);
            if !self.l.is_zero() {
                den = den.mul(&logs::pow_rational(&ln, &self.l, bits));
            }
            if !self.e.is_zero() {
                let lnln = logs::ln_interval(&ln, bits + 8);
                den = den.mul(&logs::pow_rational(&lnln, &self.e, bits));
            }
        }
        Interval::exact(self.c.clone()).div(&den).expect("denominator is positive")
    }

    /// Fast `f64` enclosure at `n >= n_start`.
    pub fn fast(&self, n: u64, m_n: usize) -> FInterval {
        if self.is_zero() {
            return FInterval::point(0.0);
        }
        let pw = |x: FInterval, r: &BigRational| -> FInterval {
            if r.is_zero() {
                return FInterval::point(1.0);
            }
            let (a, b) = small_ratio(r).unwrap();
            x.pow_ratio(a, b)
        };
        let mut den = pw(FInterval::from_u64(n), &self.p);
        if !self.m.is_zero() {
            den = den.mul(pw(FInterval::from_u64(m_n as u64), &self.m));
        }
        if !self.l.is_zero() || !self.e.is_zero() {
            let ln = FInterval::ln_u64(n);
            if !self.l.is_zero() {
                den = den.mul(pw(ln, &self.l));
            }
            if !self.e.is_zero() {
                den = den.mul(pw(ln.ln(), &self.e));
            }
        }
        FInterval::from_rational(&self.c).div(den)
    }
}

impl fmt::Display for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |x: &BigRational| {
            if x.is_integer() {
                x.numer().to_string()
            } else {
                format!("{}/{}", x.numer(), x.denom())
            }
        };
        write!(
            f,
            "psi:c={},p={},m={},l={},e={}",
            r(&self.c),
            r(&self.p),
            r(&self.m),
            r(&self.l),
            r(&self.e)
        )
    }
}

impl FromStr for PsiFunction {
    type Err = Error;

    /// `psi:c=<rat>,p=<rat>,m=<rat>,l=<rat>,e=<rat>`; missing keys are 0 (c defaults to 1).
    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix("psi:")
            .ok_or_else(|| Error::validation(format!("psi descriptor must start with psi: ({s:?})")))?;
        if body == "zero" {
            return Ok(PsiFunction::zero());
        }
        let mut c = BigRational::one();
        let mut exps = [BigRational::zero(), BigRational::zero(), BigRational::zero(), BigRational::zero()];
        for kv in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("bad psi entry {kv:?}")))?;
            let v = parse_rational(v).ok_or_else(|| Error::validation(format!("bad rational {v:?}")))?;
            match k.trim() {
                "c" => c = v,
                "p" => exps[0] = v,
                "m" => exps[1] = v,
                "l" => exps[2] = v,
                "e" => exps[3] = v,
                other => return Err(Error::validation(format!("unknown psi key {other:?}"))),
            }
        }
        let [p, m, l, e] = exps;
        PsiFunction::new(c, p, m, l, e)
    }
}

/// `psi` bound to a chain (for `M(n)`) over `n <= n_max`.
#[derive(Clone, Debug)]
pub struct PsiEval {
    pub psi: PsiFunction,
    chain: SmallChain,
    n_start: u64,
}

impl PsiEval {
    pub fn new(psi: &PsiFunction, d: &PsavSequence, n_max: u64) -> Result<Self> {
        let n1 = if d.is_finite() && d.materialized() < 2 {
            None
        } else {
            d.term(1)?.to_u64()
        };
        let n_start = psi.n_start(n1);
        if n_start == u64::MAX && !psi.is_zero() {
            return Err(Error::validation(
                "psi has a positive M(n) exponent but the chain never reaches M(n) >= 1",
            ));
        }
        let n_start = if psi.is_zero() { 1 } else { n_start };
        let chain = d.small_chain(n_max.max(n_start))?;
        Ok(PsiEval {
            psi: psi.clone(),
            chain,
            n_start,
        })
    }

    pub fn n_start(&self) -> u64 {
        self.n_start
    }

    pub fn chain(&self) -> &SmallChain {
        &self.chain
    }

    fn at(&self, n: u64) -> (u64, usize) {
        let k = n.max(self.n_start);
        (k, self.chain.counting(k))
    }

    pub fn exact(&self, n: u64) -> Option<BigRational> {
        let (k, m) = self.at(n);
        self.psi.exact(k, m)
    }

    pub fn enclose(&self, n: u64, bits: u32) -> Interval {
        let (k, m) = self.at(n);
        self.psi.enclose(k, m, bits)
    }

    #[inline]
    pub fn fast(&self, n: u64) -> FInterval {
        let (k, m) = self.at(n);
        self.psi.fast(k, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    #[test]
    fn parse_descriptor() {
        let p: PsiFunction = "psi:c=1,p=1,m=1,l=1,e=2".parse().unwrap();
        assert_eq!(p, PsiFunction::standard(2));
        assert_eq!(p.to_string(), "psi:c=1,p=1,m=1,l=1,e=2");
        let q: PsiFunction = "psi:c=1/8,p=1".parse().unwrap();
        assert!(q.rational_valued());
        assert_eq!(q.exact(2, 0), Some(rat(1, 16)));
        assert!("psi:c=-1".parse::<PsiFunction>().is_err());
        assert!("psi:q=1".parse::<PsiFunction>().is_err());
        assert!("psi:zero".parse::<PsiFunction>().unwrap().is_zero());
    }

    #[test]
    fn fast_and_precise_agree() {
        let d = PsavSequence::parse("geometric:2").unwrap();
        for psi in [PsiFunction::standard(1), PsiFunction::standard(2), "psi:c=3/2,p=3/2,m=1/2,l=1/3".parse().unwrap()] {
            let ev = PsiEval::new(&psi, &d, 100_000).unwrap();
            for n in [1u64, 2, 15, 16, 17, 1000, 65_536, 99_999] {
                let f = ev.fast(n).to_interval();
                let p = ev.enclose(n, 80);
                assert!(f.contains_interval(&p) || f.intersects(&p), "{psi} at {n}");
                assert!(f.lo() <= p.hi() && p.lo() <= f.hi());
                assert!(f.lo() <= p.lo() && p.hi() <= f.hi(), "{psi} at {n}: fast must enclose");
            }
        }
    }

    #[test]
    fn monotone_from_start() {
        let d = PsavSequence::parse("factorial").unwrap();
        let psi = PsiFunction::standard(1);
        let ev = PsiEval::new(&psi, &d, 5000).unwrap();
        assert_eq!(ev.n_start(), 16);
        let mut prev = ev.fast(1);
        for n in 2..5000 {
            let cur = ev.fast(n);
            assert!(cur.lo <= prev.hi, "psi increases at {n}");
            prev = cur;
        }
    }
}
