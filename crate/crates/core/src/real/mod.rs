//! Real numbers that can be enclosed to any requested precision: rationals,
//! continued fractions (quadratic irrationals, explicit streams), Liouville
//! sums and seeded uniform random digit streams.

mod cf;
mod fixed;
mod logratio;

use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use cf::{ContinuedFraction, Convergents};
pub use fixed::{FixedAlpha, FX_ALPHA_BITS};
pub use logratio::{frac_log_ratio, FracLog};

use crate::error::{Error, Result};
use crate::interval::{parse_rational, rat_from_uint, torus_norm, Interval};

/// Exponent schedule `e_1 < e_2 < ...` of a Liouville-type sum `sum base^(-e_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// `e_i = i!`
    Factorial,
    /// `e_i = k^i`
    Exp(u32),
}

impl Schedule {
    pub fn exponent(&self, i: u32) -> Option<u64> {
        assert!(i >= 1);
        match self {
            Schedule::Factorial => (1..=i as u64).try_fold(1u64, |acc, j| acc.checked_mul(j)),
            Schedule::Exp(k) => (*k as u64).checked_pow(i),
        }
    }

    /// Whether `2 e_i - e_{i+1} -> -infinity`, which makes the witnesses
    /// `n = base^(e_i)` drive `n ||n alpha||` to zero.
    pub fn witnesses_decay(&self) -> bool {
        match self {
            Schedule::Factorial => true,
            Schedule::Exp(k) => *k >= 3,
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Factorial => f.write_str("factorial"),
            Schedule::Exp(k) => write!(f, "exp{k}"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "factorial" {
            return Ok(Schedule::Factorial);
        }
        match s.strip_prefix("exp").and_then(|k| k.parse::<u32>().ok()) {
            Some(k) if k >= 2 => Ok(Schedule::Exp(k)),
            _ => Err(Error::validation(format!(
                "unknown schedule {s:?} (expected factorial or exp<k>, k >= 2)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealKind {
    Rational(BigRational),
    Golden,
    Sqrt(u64),
    Cf(ContinuedFraction),
    Liouville { base: u64, schedule: Schedule },
    Random { seed: u64 },
}

/// An enclosure of `||n alpha||`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistResult {
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub lower: BigRational,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub upper: BigRational,
}

impl DistResult {
    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lower.clone(), self.upper.clone())
    }
}

#[derive(Debug)]
struct DigitStream {
    rng: ChaCha8Rng,
    words: Vec<u64>,
}

/// A real number with certified enclosures.
#[derive(Debug)]
pub struct RealNumber {
    kind: RealKind,
    cf: Option<ContinuedFraction>,
    convergents: RwLock<Convergents>,
    digits: Option<RwLock<DigitStream>>,
    bad_bound: Option<BigRational>,
}

impl Clone for RealNumber {
    fn clone(&self) -> Self {
        let mut r = RealNumber::from_kind(self.kind.clone()).expect("kind was valid");
        r.bad_bound = self.bad_bound.clone();
        r
    }
}

/// Liouville witness: at `n = base^(e_i)`, `n ||n alpha|| <= bound`.
#[derive(Clone, Debug, Serialize)]
pub struct LiouvilleWitness {
    pub i: u32,
    pub n: String,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub bound: BigRational,
    /// Certified enclosure of `n ||n alpha||`.
    #[serde(serialize_with = "crate::report::ser_interval")]
    pub value: Interval,
}

impl RealNumber {
    pub fn from_kind(kind: RealKind) -> Result<Self> {
        let cf = match &kind {
            RealKind::Golden => Some(ContinuedFraction::golden()),
            RealKind::Sqrt(d) => Some(ContinuedFraction::sqrt(*d)?),
            RealKind::Cf(c) => {
                c.validate()?;
                Some(c.clone())
            }
            RealKind::Liouville { base, schedule } => {
                if *base < 2 {
                    return Err(Error::validation("Liouville base must be >= 2"));
                }
                schedule
                    .exponent(1)
                    .ok_or_else(|| Error::validation("schedule overflows"))?;
                None
            }
            _ => None,
        };
        let digits = match &kind {
            RealKind::Random { seed } => Some(RwLock::new(DigitStream {
                rng: ChaCha8Rng::seed_from_u64(*seed),
                words: Vec::new(),
            })),
            _ => None,
        };
        Ok(RealNumber {
            kind,
            cf,
            convergents: RwLock::new(Convergents::new()),
            digits,
            bad_bound: None,
        })
    }

    pub fn rational(q: BigRational) -> Self {
        Self::from_kind(RealKind::Rational(q)).unwrap()
    }

    pub fn golden() -> Self {
        Self::from_kind(RealKind::Golden).unwrap()
    }

    pub fn random(seed: u64) -> Self {
        Self::from_kind(RealKind::Random { seed }).unwrap()
    }

    pub fn kind(&self) -> &RealKind {
        &self.kind
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.kind, RealKind::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.kind {
            RealKind::Rational(q) => Some(q),
            _ => None,
        }
    }

    pub fn continued_fraction(&self) -> Option<&ContinuedFraction> {
        self.cf.as_ref()
    }

    /// Lower bound `c` with `n ||n alpha|| >= c` for all `n`, when known.
    pub fn bad_bound(&self) -> Option<&BigRational> {
        self.bad_bound.as_ref()
    }

    pub fn descriptor(&self) -> String {
        self.to_string()
    }

    /// Extends the convergent cache to at least `m + 1` entries.
    fn ensure_convergents(&self, m: usize) -> Result<()> {
        let cf = self.cf.as_ref().expect("continued fraction kind");
        if self.convergents.read().unwrap().len() > m {
            return Ok(());
        }
        let mut c = self.convergents.write().unwrap();
        while c.len() <= m {
            let a = cf
                .quotient(c.len())
                .ok_or(Error::InsufficientPartialQuotients {
                    available: cf.prefix.len(),
                })?;
            c.push(a);
        }
        Ok(())
    }

    /// `(p_m, q_m)`.
    pub fn convergent(&self, m: usize) -> Result<(BigInt, BigInt)> {
        if self.cf.is_none() {
            return Err(Error::validation(format!(
                "{self} has no continued fraction expansion"
            )));
        }
        self.ensure_convergents(m)?;
        let c = self.convergents.read().unwrap();
        Ok((c.p[m].clone(), c.q[m].clone()))
    }

    pub fn convergents_snapshot(&self, m: usize) -> Result<Convergents> {
        self.convergent(m)?;
        Ok(self.convergents.read().unwrap().clone())
    }

    /// Smallest `m` with `q_m q_{m+1} >= target`; alpha lies between the two convergents.
    fn convergent_enclosure(&self, target: &BigInt) -> Result<Interval> {
        let mut m = 0;
        loop {
            self.ensure_convergents(m + 1)?;
            let c = self.convergents.read().unwrap();
            if &c.q[m] * &c.q[m + 1] >= *target {
                return Ok(Interval::hull(
                    BigRational::new(c.p[m].clone(), c.q[m].clone()),
                    BigRational::new(c.p[m + 1].clone(), c.q[m + 1].clone()),
                ));
            }
            m += 1;
        }
    }

    fn random_words(&self, count: usize) -> Vec<u64> {
        let lock = self.digits.as_ref().unwrap();
        {
            let d = lock.read().unwrap();
            if d.words.len() >= count {
                return d.words[..count].to_vec();
            }
        }
        let mut d = lock.write().unwrap();
        while d.words.len() < count {
            let w = d.rng.next_u64();
            d.words.push(w);
        }
        d.words[..count].to_vec()
    }

    /// Enclosure of alpha of width at most `2^-bits` (exact for rationals).
    pub fn enclosure(&self, bits: u32) -> Result<Interval> {
        match &self.kind {
            RealKind::Rational(q) => Ok(Interval::exact(q.clone())),
            RealKind::Golden | RealKind::Sqrt(_) | RealKind::Cf(_) => {
                self.convergent_enclosure(&(BigInt::one() << bits as usize))
            }
            RealKind::Liouville { base, schedule } => {
                let b = BigInt::from(*base);
                let mut sum = BigRational::zero();
                let mut i = 1u32;
                loop {
                    let e = schedule.exponent(i).ok_or_else(|| {
                        Error::undecidable("Liouville exponent overflow", bits)
                    })?;
                    sum += BigRational::new(BigInt::one(), num_traits::pow(b.clone(), e as usize));
                    let next = schedule.exponent(i + 1).unwrap_or(u64::MAX);
                    if next > bits as u64 {
                        let next = next.min(bits as u64 + 1);
                        // Tail below 2 base^(-e_{i+1}) <= 2^(1 - e_{i+1}).
                        let tail = BigRational::new(BigInt::from(2), num_traits::pow(b.clone(), next as usize));
                        return Ok(Interval::new(sum.clone(), sum + tail));
                    }
                    i += 1;
                }
            }
            RealKind::Random { .. } => {
                let count = (bits as usize).div_ceil(64).max(1);
                let words = self.random_words(count);
                let mut x = BigInt::zero();
                for w in &words {
                    x = (x << 64usize) + BigInt::from(*w);
                }
                let den = BigInt::one() << (64 * count);
                Ok(Interval::new(
                    BigRational::new(x.clone(), den.clone()),
                    BigRational::new(x + 1, den),
                ))
            }
        }
    }

    /// Enclosure of `||n alpha||` of width at most `tol` (exact for rationals).
    /// Enclosure of `n * alpha` of width at most `tol` (exact for rationals).
    pub fn multiple(&self, n: &BigUint, tol: &BigRational) -> Result<Interval> {
        if !tol.is_positive() {
            return Err(Error::validation("tolerance must be positive"));
        }
        let nn = rat_from_uint(n);
        if nn.is_zero() {
            return Ok(Interval::zero());
        }
        Ok(match &self.kind {
            RealKind::Rational(q) => Interval::exact(q * &nn),
            RealKind::Golden | RealKind::Sqrt(_) | RealKind::Cf(_) => {
                // n / (q_m q_{m+1}) <= tol
                let target = (&nn / tol).ceil().to_integer();
                self.convergent_enclosure(&target)?.scale(&nn)
            }
            _ => {
                let ratio = (&nn / tol).ceil().to_integer();
                let bits = ratio.bits() as u32;
                self.enclosure(bits)?.scale(&nn)
            }
        })
    }

    /// Enclosure of `frac(n * alpha)` inside `[0, 1]`, tightening until the
    /// enclosure of `n * alpha` stops straddling an integer.
    pub fn frac_multiple(&self, n: &BigUint, tol: &BigRational, cap_bits: u32) -> Result<Interval> {
        let mut t = tol.clone();
        let floor_tol = BigRational::new(BigInt::one(), BigInt::one() << cap_bits as usize);
        loop {
            let enc = self.multiple(n, &t)?;
            let k = enc.lo().floor();
            if enc.hi() < &(&k + BigRational::one()) || enc.is_exact() {
                return Ok(Interval::new(enc.lo() - &k, enc.hi() - &k));
            }
            if t <= floor_tol {
                return Err(Error::undecidable(format!("frac({n} * {self})"), cap_bits));
            }
            t = &t / BigRational::from_integer(BigInt::from(1u64 << 32));
        }
    }

    pub fn dist(&self, n: &BigUint, tol: &BigRational) -> Result<DistResult> {
        if n.is_zero() {
            return Err(Error::validation("dist needs n >= 1"));
        }
        let enc = self.multiple(n, tol)?;
        let (lower, upper) = torus_norm(&enc).into_bounds();
        Ok(DistResult { lower, upper })
    }

    pub fn dist_u64(&self, n: u64, tol: &BigRational) -> Result<DistResult> {
        self.dist(&BigUint::from(n), tol)
    }

    /// Fixed-point view for fast scans over machine-word `n`.
    pub fn fixed(&self) -> Result<FixedAlpha> {
        FixedAlpha::new(self)
    }

    /// Witness `n = base^(e_i)` with `n ||n alpha|| <= 2 base^(2 e_i - e_{i+1})`.
    pub fn liouville_witness(&self, i: u32) -> Result<LiouvilleWitness> {
        let RealKind::Liouville { base, schedule } = &self.kind else {
            return Err(Error::validation("witnesses exist only for Liouville numbers"));
        };
        let (Some(e), Some(e_next)) = (schedule.exponent(i), schedule.exponent(i + 1)) else {
            return Err(Error::validation("schedule overflows at this index"));
        };
        let b = BigInt::from(*base);
        let n = num_traits::pow(b.clone(), e as usize);
        let two = BigInt::from(2);
        let bound = if 2 * e >= e_next {
            BigRational::from_integer(two * num_traits::pow(b, (2 * e - e_next) as usize))
        } else {
            BigRational::new(two, num_traits::pow(b, (e_next - 2 * e) as usize))
        };
        let nu = n.to_biguint().unwrap();
        let tol = BigRational::new(BigInt::one(), n.clone() * n.clone() * BigInt::from(1u64 << 20));
        let d = self.dist(&nu, &tol)?;
        let value = d.interval().scale_int(&n);
        Ok(LiouvilleWitness {
            i,
            n: n.to_string(),
            bound,
            value,
        })
    }

    pub fn provably_well_approximable(&self) -> bool {
        matches!(&self.kind, RealKind::Liouville { schedule, .. } if schedule.witnesses_decay())
    }
}

/// Badly approximable number from an eventually periodic continued fraction.
/// Records the classical bound `n ||n alpha|| >= 1/(K + 2)`, `K = max a_i (i >= 1)`.
pub fn make_bad(cf: ContinuedFraction) -> Result<RealNumber> {
    cf.validate()?;
    let k = cf.max_tail_quotient().ok_or_else(|| {
        Error::validation("a terminating continued fraction is rational, not badly approximable")
    })?;
    let golden = ContinuedFraction::golden();
    let kind = if cf == golden {
        RealKind::Golden
    } else {
        RealKind::Cf(cf)
    };
    let mut r = RealNumber::from_kind(kind)?;
    r.bad_bound = Some(BigRational::new(BigInt::one(), k + 2));
    Ok(r)
}

/// Liouville-type number `sum_{i >= 1} base^(-e_i)`.
pub fn make_well(base: u64, schedule: Schedule) -> Result<RealNumber> {
    RealNumber::from_kind(RealKind::Liouville { base, schedule })
}

impl fmt::Display for RealNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RealKind::Rational(q) => write!(f, "rational:{}/{}", q.numer(), q.denom()),
            RealKind::Golden => f.write_str("golden"),
            RealKind::Sqrt(d) => write!(f, "sqrt:{d}"),
            RealKind::Cf(c) => write!(f, "cf:{c}"),
            RealKind::Liouville { base, schedule } => write!(f, "liouville:{base}:{schedule}"),
            RealKind::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for RealNumber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::validation(format!("bad alpha descriptor {s:?}"));
        let kind = match head {
            "golden" => RealKind::Golden,
            "rational" => RealKind::Rational(parse_rational(rest).ok_or_else(bad)?),
            "sqrt" => {
                let d: u64 = rest.parse().map_err(|_| bad())?;
                let r = d.isqrt();
                if r * r == d {
                    RealKind::Rational(BigRational::from_integer(BigInt::from(r)))
                } else {
                    RealKind::Sqrt(d)
                }
            }
            "cf" => RealKind::Cf(ContinuedFraction::parse(rest)?),
            "liouville" => {
                let (b, sch) = rest.split_once(':').ok_or_else(bad)?;
                RealKind::Liouville {
                    base: b.parse().map_err(|_| bad())?,
                    schedule: sch.parse()?,
                }
            }
            "random" => RealKind::Random {
                seed: rest.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        let r = RealNumber::from_kind(kind)?;
        Ok(r)
    }
}

/// `n ||n alpha||` enclosure, a convenience for scans.
pub fn scaled_dist(alpha: &RealNumber, n: u64, tol: &BigRational) -> Result<Interval> {
    let d = alpha.dist_u64(n, tol)?;
    Ok(d.interval().scale_int(&BigInt::from(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;
    use num_traits::ToPrimitive;

    #[test]
    fn descriptors() {
        for s in ["golden", "sqrt:2", "rational:1/3", "cf:1;2,(1,3)", "liouville:10:factorial", "random:7"] {
            let a: RealNumber = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert!(matches!("sqrt:9".parse::<RealNumber>().unwrap().kind(), RealKind::Rational(_)));
        assert!("pi".parse::<RealNumber>().is_err());
    }

    #[test]
    fn dist_examples() {
        let third = RealNumber::rational(rat(1, 3));
        let d = third.dist_u64(2, &rat(1, 1000)).unwrap();
        assert_eq!((d.lower.clone(), d.upper.clone()), (rat(1, 3), rat(1, 3)));

        let s2: RealNumber = "sqrt:2".parse().unwrap();
        let d = s2.dist_u64(5, &rat(1, 1_000_000)).unwrap();
        assert!(d.width() <= rat(1, 1_000_000));
        let v = 5.0 * 2f64.sqrt() - 7.0;
        assert!(d.lower.to_f64().unwrap() <= v + 1e-12 && v - 1e-12 <= d.upper.to_f64().unwrap());
        assert!((d.lower.to_f64().unwrap() - 0.0710678).abs() < 1e-6);

        let g = RealNumber::golden();
        let f = g.frac_multiple(&BigUint::from(3u32), &rat(1, 1 << 30), 256).unwrap();
        assert!((f.mid_f64() - 0.854_101_966_249_684_5).abs() < 1e-9);
        assert_eq!(third.frac_multiple(&BigUint::from(3u32), &rat(1, 8), 64).unwrap(), Interval::zero());
    }

    #[test]
    fn convergent_denominators_approximate_well() {
        let g = RealNumber::golden();
        for m in 1..40 {
            let (_, q) = g.convergent(m).unwrap();
            let (_, q_next) = g.convergent(m + 1).unwrap();
            let qu = q.to_biguint().unwrap();
            let d = g.dist(&qu, &rat(1, 1 << 30)).unwrap();
            assert!(d.upper < BigRational::new(BigInt::one(), q_next.clone()));
            assert!(d.upper * BigRational::from_integer(q) < BigRational::one());
        }
    }

    #[test]
    fn tolerance_tightening_nests() {
        let a: RealNumber = "cf:0;1,(2,3)".parse().unwrap();
        let wide = a.dist_u64(1234, &rat(1, 1000)).unwrap();
        let narrow = a.dist_u64(1234, &rat(1, 1_000_000_000)).unwrap();
        assert!(narrow.width() <= wide.width());
        assert!(wide.interval().intersects(&narrow.interval()));
    }

    #[test]
    fn explicit_streams_run_out() {
        let a: RealNumber = "cf:3;7,15,1".parse().unwrap();
        assert!(a.dist_u64(7, &rat(1, 100)).is_ok());
        assert!(matches!(
            a.dist_u64(7, &rat(1, 1_000_000_000_000)),
            Err(Error::InsufficientPartialQuotients { .. })
        ));
    }

    #[test]
    fn make_bad_bounds() {
        let g = make_bad(ContinuedFraction::golden()).unwrap();
        assert_eq!(g.bad_bound().unwrap(), &rat(1, 3));
        let s = make_bad(ContinuedFraction::periodic(vec![1], vec![2])).unwrap();
        assert_eq!(s.bad_bound().unwrap(), &rat(1, 4));
        assert!(make_bad(ContinuedFraction::parse("0;3,2").unwrap()).is_err());
        assert!(make_bad(ContinuedFraction::periodic(vec![1], vec![0])).is_err());
    }

    #[test]
    fn liouville_witnesses() {
        let a = make_well(10, Schedule::Factorial).unwrap();
        assert!(a.provably_well_approximable());
        for i in 1..=3 {
            let w = a.liouville_witness(i).unwrap();
            assert!(w.value.hi() <= &w.bound, "i = {i}");
        }
        // e = 1, 2, 6: at n = 10, n ||n alpha|| = 10 * (0.01 + 1e-6 + ...) > 0.1
        let w = a.liouville_witness(1).unwrap();
        assert!(w.value.lo() > &rat(1, 10));
        let b = make_well(2, Schedule::Exp(2)).unwrap();
        assert!(!b.provably_well_approximable());
        let w = b.liouville_witness(2).unwrap();
        assert_eq!(w.bound, rat(2, 1));
    }

    #[test]
    fn random_streams_are_reproducible() {
        let a = RealNumber::random(42);
        let b = RealNumber::random(42);
        let x = a.enclosure(300).unwrap();
        assert_eq!(x, b.enclosure(300).unwrap());
        let coarse = a.enclosure(64).unwrap();
        assert!(coarse.contains_interval(&x));
    }
}
