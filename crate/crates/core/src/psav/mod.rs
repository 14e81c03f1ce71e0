//! Pseudo-absolute value sequences: divisibility chains `1 = n_0 | n_1 | ...`,
//! the valuation `|n|_D = 1/n_k` for the largest `n_k | n`, and the counting
//! function `M(N) = max{k : n_k <= N}`.

mod family;

use std::collections::BTreeMap;
use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use family::Family;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logs;
use crate::primes;

/// Largest `A_k = 2^(k^2)` the primorial family will sieve up to.
const PRIMORIAL_MAX_K: usize = 5;

/// Trial-division bound used to factor explicit chains.
pub const DEFAULT_FACTOR_BOUND: u64 = 1_000_000;

#[derive(Debug)]
struct Chain {
    terms: Vec<BigUint>,
    rng: Option<ChaCha8Rng>,
}

/// A lazily extended divisibility chain.
///
/// Readers share the materialized prefix; extension takes the write lock.
#[derive(Debug)]
pub struct PsavSequence {
    family: Family,
    finite: bool,
    chain: RwLock<Chain>,
    factor_bound: u64,
}

/// `|n|_D = 1/n_index` where `index` is maximal with `n_index | n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    pub index: usize,
    pub term: BigUint,
}

impl Valuation {
    pub fn value(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.term.clone()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub holds: bool,
    pub first_failure: Option<usize>,
    pub worst_k: usize,
    /// `ln n_k / k^delta` at `worst_k` (midpoint of the enclosure).
    pub worst_ratio: f64,
    pub bits_used: u32,
}

impl Clone for PsavSequence {
    fn clone(&self) -> Self {
        let chain = self.chain.read().unwrap();
        PsavSequence {
            family: self.family.clone(),
            finite: self.finite,
            chain: RwLock::new(Chain {
                terms: chain.terms.clone(),
                rng: chain.rng.clone(),
            }),
            factor_bound: self.factor_bound,
        }
    }
}

impl PsavSequence {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        let (terms, finite, rng) = match &family {
            Family::Explicit(list) => (family::validate_chain(list)?, true, None),
            Family::File(path) => {
                let list = family::read_chain_file(path)?;
                (family::validate_chain(&list)?, true, None)
            }
            Family::Trivial => (vec![BigUint::one()], true, None),
            Family::BoundedRatio { seed, .. } => (
                vec![BigUint::one()],
                false,
                Some(ChaCha8Rng::seed_from_u64(*seed)),
            ),
            _ => (vec![BigUint::one()], false, None),
        };
        Ok(PsavSequence {
            family,
            finite,
            chain: RwLock::new(Chain { terms, rng }),
            factor_bound: DEFAULT_FACTOR_BOUND,
        })
    }

    pub fn parse(descriptor: &str) -> Result<Self> {
        Self::new(descriptor.parse()?)
    }

    /// Builds the sequence and materializes `n_0..=n_k`.
    pub fn generate(family: Family, k: usize) -> Result<Self> {
        let s = Self::new(family)?;
        s.ensure_len(k + 1)?;
        Ok(s)
    }

    pub fn with_factor_bound(mut self, bound: u64) -> Self {
        self.factor_bound = bound;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn descriptor(&self) -> String {
        self.family.to_string()
    }

    /// Number of materialized terms.
    pub fn materialized(&self) -> usize {
        self.chain.read().unwrap().terms.len()
    }

    /// True when the chain is `{1}` or an explicit list (no generator).
    pub fn is_finite(&self) -> bool {
        self.finite
    }

    fn next_term(&self, chain: &mut Chain) -> Result<BigUint> {
        let k = chain.terms.len();
        let last = &chain.terms[k - 1];
        Ok(match &self.family {
            Family::Geometric(a) => last * BigUint::from(*a),
            Family::Factorial => last * BigUint::from(k as u64 + 1),
            Family::BoundedRatio { bound, .. } => {
                let d: u64 = chain.rng.as_mut().unwrap().gen_range(2..=*bound);
                last * BigUint::from(d)
            }
            Family::PrimorialMertens => {
                if k > PRIMORIAL_MAX_K {
                    return Err(Error::Budget(format!(
                        "primorial-mertens term n_{k} needs primes up to 2^{}",
                        k * k
                    )));
                }
                let lo = primorial_bound(k - 1);
                let hi = primorial_bound(k);
                let ps: Vec<u64> = primes::primes_up_to(hi)
                    .into_iter()
                    .filter(|&p| p > lo)
                    .collect();
                last * product_tree(&ps)
            }
            Family::Explicit(_) | Family::File(_) | Family::Trivial => unreachable!(),
        })
    }

    /// Materializes at least `len` terms.
    pub fn ensure_len(&self, len: usize) -> Result<()> {
        if self.materialized() >= len {
            return Ok(());
        }
        let mut chain = self.chain.write().unwrap();
        if chain.terms.len() < len && self.finite {
            return Err(Error::SequenceTooShort {
                last: chain.terms.last().unwrap().to_string(),
                needed: format!("index {}", len - 1),
            });
        }
        while chain.terms.len() < len {
            let t = self.next_term(&mut chain)?;
            chain.terms.push(t);
        }
        Ok(())
    }

    /// Materializes enough terms that every `n_k <= n` is known.
    ///
    /// Consecutive terms differ by a factor of at least 2, so `2 n_last > n` already
    /// rules out an unseen term `<= n`.
    pub fn ensure_exceeds(&self, n: &BigUint) -> Result<()> {
        {
            let chain = self.chain.read().unwrap();
            if chain.terms.last().unwrap() * 2u32 > *n {
                return Ok(());
            }
            if matches!(self.family, Family::Trivial) {
                return Ok(());
            }
            if self.finite {
                return Err(Error::SequenceTooShort {
                    last: chain.terms.last().unwrap().to_string(),
                    needed: n.to_string(),
                });
            }
        }
        let mut chain = self.chain.write().unwrap();
        while chain.terms.last().unwrap() * 2u32 <= *n {
            let t = self.next_term(&mut chain)?;
            chain.terms.push(t);
        }
        Ok(())
    }

    pub fn term(&self, k: usize) -> Result<BigUint> {
        self.ensure_len(k + 1)?;
        Ok(self.chain.read().unwrap().terms[k].clone())
    }

    /// `n_0..=n_k`.
    pub fn terms(&self, k: usize) -> Result<Vec<BigUint>> {
        self.ensure_len(k + 1)?;
        Ok(self.chain.read().unwrap().terms[..=k].to_vec())
    }

    /// `d_k = n_k / n_{k-1}` for `k >= 1`.
    pub fn ratio(&self, k: usize) -> Result<BigUint> {
        assert!(k >= 1);
        self.ensure_len(k + 1)?;
        let chain = self.chain.read().unwrap();
        Ok(&chain.terms[k] / &chain.terms[k - 1])
    }

    pub fn value(&self, n: &BigUint) -> Result<Valuation> {
        if n.is_zero() {
            return Err(Error::validation("valuation of 0 is undefined"));
        }
        self.ensure_exceeds(n)?;
        let chain = self.chain.read().unwrap();
        // Divisors of n form a prefix of the chain.
        let mut k = 0;
        while k + 1 < chain.terms.len() && n.is_multiple_of(&chain.terms[k + 1]) {
            k += 1;
        }
        Ok(Valuation {
            index: k,
            term: chain.terms[k].clone(),
        })
    }

    pub fn value_u64(&self, n: u64) -> Result<Valuation> {
        self.value(&BigUint::from(n))
    }

    /// `M(N)`.
    pub fn counting(&self, n: &BigUint) -> Result<usize> {
        if n.is_zero() {
            return Err(Error::validation("M(N) needs N >= 1"));
        }
        self.ensure_exceeds(n)?;
        let chain = self.chain.read().unwrap();
        Ok(chain.terms.partition_point(|t| t <= n) - 1)
    }

    pub fn counting_u64(&self, n: u64) -> Result<usize> {
        self.counting(&BigUint::from(n))
    }

    /// Machine-word view of the chain, valid for all `n <= n_max`.
    pub fn small_chain(&self, n_max: u64) -> Result<SmallChain> {
        self.ensure_exceeds(&BigUint::from(n_max))?;
        let chain = self.chain.read().unwrap();
        let terms = chain
            .terms
            .iter()
            .map_while(|t| t.to_u64())
            .collect::<Vec<_>>();
        Ok(SmallChain { terms, n_max })
    }

    /// Verifies `ln n_k <= k^delta` for `2 <= k <= k_max` with certified logarithms.
    pub fn check_growth_hypothesis(
        &self,
        delta: &BigRational,
        k_max: usize,
        cap_bits: u32,
    ) -> Result<GrowthReport> {
        if k_max < 2 {
            return Err(Error::validation("k_max must be at least 2"));
        }
        if *delta <= BigRational::zero() {
            return Err(Error::validation("delta must be positive"));
        }
        let terms = self.terms(k_max)?;
        let mut report = GrowthReport {
            holds: true,
            first_failure: None,
            worst_k: 2,
            worst_ratio: f64::NEG_INFINITY,
            bits_used: 64,
        };
        for (k, nk) in terms.iter().enumerate().skip(2) {
            let kk = Interval::from_int(k as i64);
            let mut bits = 64u32;
            let verdict = loop {
                let lhs = logs::ln_uint(nk, bits);
                let rhs = logs::pow_rational(&kk, delta, bits);
                if lhs.hi() <= rhs.lo() {
                    break (true, lhs, rhs);
                }
                if lhs.lo() > rhs.hi() {
                    break (false, lhs, rhs);
                }
                if bits >= cap_bits {
                    return Err(Error::undecidable(
                        format!("ln n_{k} against {k}^{delta}"),
                        cap_bits,
                    ));
                }
                bits = (bits * 2).min(cap_bits);
            };
            report.bits_used = report.bits_used.max(bits);
            let ratio = verdict.1.mid_f64() / verdict.2.mid_f64();
            if ratio > report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_k = k;
            }
            if !verdict.0 {
                report.holds = false;
                report.first_failure.get_or_insert(k);
            }
        }
        Ok(report)
    }

    /// `max_{1 <= k <= k_max} d_k`.
    pub fn check_bounded_ratios(&self, k_max: usize) -> Result<BigUint> {
        if k_max < 1 {
            return Err(Error::validation("k_max must be at least 1"));
        }
        let terms = self.terms(k_max)?;
        Ok(terms
            .windows(2)
            .map(|w| &w[1] / &w[0])
            .max()
            .unwrap())
    }

    /// Prime factorization of `d_k`.
    pub fn ratio_factors(&self, k: usize) -> Result<Vec<(u64, u32)>> {
        match &self.family {
            Family::Geometric(a) => Ok(primes::factor_u64(*a)),
            Family::Factorial => Ok(primes::factor_u64(k as u64 + 1)),
            Family::PrimorialMertens => {
                let lo = primorial_bound(k - 1);
                Ok(primes::primes_up_to(primorial_bound(k))
                    .into_iter()
                    .filter(|&p| p > lo)
                    .map(|p| (p, 1))
                    .collect())
            }
            _ => {
                let d = self.ratio(k)?;
                if let Some(d) = d.to_u64() {
                    return Ok(primes::factor_u64(d));
                }
                let (f, rest) = primes::trial_factor(&d, self.factor_bound);
                if !rest.is_one() {
                    return Err(Error::validation(format!(
                        "cannot factor chain term n_{k} = {} by trial division up to {}",
                        self.term(k)?,
                        self.factor_bound
                    )));
                }
                Ok(f)
            }
        }
    }

    /// Prime factorization of `n_k` as a map prime -> exponent.
    pub fn factorization(&self, k: usize) -> Result<BTreeMap<u64, u32>> {
        let mut out = BTreeMap::new();
        for j in 1..=k {
            for (p, e) in self.ratio_factors(j)? {
                *out.entry(p).or_insert(0) += e;
            }
        }
        Ok(out)
    }

    /// `phi(n_k)/n_k = prod (1 - 1/p)` over the primes dividing `n_k`.
    pub fn phi_ratio(&self, k: usize) -> Result<BigRational> {
        let f = self.factorization(k)?;
        let (num, den) = f.keys().fold((BigInt::one(), BigInt::one()), |(n, d), &p| {
            (n * BigInt::from(p - 1), d * BigInt::from(p))
        });
        Ok(BigRational::new(num, den))
    }

    /// The finite set of primes dividing every term, when the family has one.
    pub fn prime_support(&self) -> Option<Vec<u64>> {
        match &self.family {
            Family::Geometric(a) => Some(primes::factor_u64(*a).iter().map(|x| x.0).collect()),
            Family::BoundedRatio { bound, .. } => Some(primes::primes_up_to(*bound)),
            Family::Trivial => Some(Vec::new()),
            Family::Explicit(_) | Family::File(_) => {
                let k = self.materialized() - 1;
                self.factorization(k).ok().map(|f| f.keys().copied().collect())
            }
            Family::Factorial | Family::PrimorialMertens => None,
        }
    }

    /// `sum_{k <= M(N)} n_k`.
    pub fn tail_sum(&self, n: &BigUint) -> Result<BigUint> {
        let m = self.counting(n)?;
        Ok(self.terms(m)?.iter().sum())
    }
}

/// `A_k = 2^(k^2)` (with `A_0 = 1`).
fn primorial_bound(k: usize) -> u64 {
    if k == 0 {
        1
    } else {
        1u64 << (k * k)
    }
}

fn product_tree(xs: &[u64]) -> BigUint {
    match xs.len() {
        0 => BigUint::one(),
        1 => BigUint::from(xs[0]),
        n => product_tree(&xs[..n / 2]) * product_tree(&xs[n / 2..]),
    }
}

/// The chain restricted to machine words, for scans over `n <= n_max`.
#[derive(Clone, Debug)]
pub struct SmallChain {
    terms: Vec<u64>,
    n_max: u64,
}

impl SmallChain {
    pub fn terms(&self) -> &[u64] {
        &self.terms
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// Index of `|n|_D`.
    #[inline]
    pub fn index(&self, n: u64) -> usize {
        debug_assert!(n >= 1 && n <= self.n_max);
        let mut k = 0;
        while k + 1 < self.terms.len() && n.is_multiple_of(self.terms[k + 1]) {
            k += 1;
        }
        k
    }

    /// The term `n_k` with `|n|_D = 1/n_k`.
    #[inline]
    pub fn inverse_value(&self, n: u64) -> u64 {
        self.terms[self.index(n)]
    }

    #[inline]
    pub fn counting(&self, n: u64) -> usize {
        debug_assert!(n >= 1 && n <= self.n_max);
        self.terms.partition_point(|&t| t <= n) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> PsavSequence {
        PsavSequence::parse(s).unwrap()
    }

    #[test]
    fn valuations() {
        let v = seq("geometric:2").value_u64(12).unwrap();
        assert_eq!((v.index, v.value()), (2, BigRational::new(1.into(), 4.into())));
        // n_k = (k+1)!, so 6 = n_2 is the largest term dividing 12.
        let v = seq("factorial").value_u64(12).unwrap();
        assert_eq!((v.index, v.term), (2, BigUint::from(6u32)));
        for s in ["geometric:5", "factorial", "trivial", "primorial-mertens"] {
            assert_eq!(seq(s).value_u64(1).unwrap().index, 0);
        }
    }

    #[test]
    fn counting_function() {
        assert_eq!(seq("geometric:2").counting_u64(10).unwrap(), 3);
        assert_eq!(seq("factorial").counting_u64(1).unwrap(), 0);
        assert_eq!(seq("trivial").counting_u64(1_000_000).unwrap(), 0);
        let d = seq("geometric:7");
        for t in 0..30u32 {
            assert_eq!(d.counting(&BigUint::from(7u32).pow(t)).unwrap(), t as usize);
        }
    }

    #[test]
    fn generated_families() {
        let d = PsavSequence::generate(Family::PrimorialMertens, 2).unwrap();
        let t: Vec<u64> = d.terms(2).unwrap().iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(t, vec![1, 2, 30030]);
        assert_eq!(
            d.phi_ratio(2).unwrap(),
            BigRational::new(1152.into(), 6006.into())
        );
        let g = PsavSequence::generate(Family::Geometric(3), 3).unwrap();
        assert_eq!(g.terms(3).unwrap(), vec![1u32, 3, 9, 27].into_iter().map(BigUint::from).collect::<Vec<_>>());
        let n3 = d.term(3).unwrap();
        assert!(n3.bits() > 64);
        assert_eq!(d.factorization(3).unwrap().len(), primes::primes_up_to(512).len());
    }

    #[test]
    fn explicit_chains_run_out() {
        let d = seq("explicit:2,6");
        assert_eq!(d.value_u64(5).unwrap().index, 0);
        assert!(matches!(d.value_u64(12), Err(Error::SequenceTooShort { .. })));
        // Any later term is at least 12, so everything below 12 is decided.
        assert_eq!(d.counting_u64(11).unwrap(), 2);
        assert!(matches!(d.counting_u64(12), Err(Error::SequenceTooShort { .. })));
    }

    #[test]
    fn bounded_ratio_is_seeded() {
        let a = seq("bounded-ratio:5:1");
        let b = seq("bounded-ratio:5:1");
        assert_eq!(a.terms(40).unwrap(), b.terms(40).unwrap());
        assert!(a.check_bounded_ratios(40).unwrap() <= BigUint::from(5u32));
        assert_ne!(a.terms(40).unwrap(), seq("bounded-ratio:5:2").terms(40).unwrap());
    }

    #[test]
    fn ratio_checks() {
        assert_eq!(seq("geometric:3").check_bounded_ratios(10).unwrap(), BigUint::from(3u32));
        assert_eq!(seq("factorial").check_bounded_ratios(4).unwrap(), BigUint::from(5u32));
        assert_eq!(seq("primorial-mertens").check_bounded_ratios(2).unwrap(), BigUint::from(15015u32));
    }

    #[test]
    fn growth_hypothesis() {
        let two = BigRational::from_integer(2.into());
        let r = seq("geometric:2").check_growth_hypothesis(&two, 100, 4096).unwrap();
        assert!(r.holds);
        let r = seq("primorial-mertens").check_growth_hypothesis(&two, 4, 4096).unwrap();
        assert!(!r.holds);
        assert_eq!(r.first_failure, Some(2));
    }

    #[test]
    fn small_chain_matches() {
        let d = seq("factorial");
        let s = d.small_chain(5000).unwrap();
        for n in 1..=5000u64 {
            assert_eq!(s.index(n), d.value_u64(n).unwrap().index);
            assert_eq!(s.counting(n), d.counting_u64(n).unwrap());
        }
    }

    #[test]
    fn factorizations_follow_the_chain() {
        let d = seq("factorial");
        for k in 1..12 {
            let n: u64 = d.term(k).unwrap().try_into().unwrap();
            let f = d.factorization(k).unwrap();
            let back: u64 = f.iter().map(|(p, e)| p.pow(*e)).product();
            assert_eq!(back, n, "n_{k}");
        }
        assert_eq!(d.phi_ratio(3).unwrap(), crate::interval::rat(1, 3));
    }
}
