use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Signed};

use crate::error::{Error, Result};

/// A continued fraction `[a0; a1, a2, ..., (p1, ..., pr)]` whose tail repeats
/// the block `period` forever. An empty period means the stream is only known
/// up to `prefix.len()` quotients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub prefix: Vec<BigInt>,
    pub period: Vec<BigInt>,
}

impl ContinuedFraction {
    pub fn periodic(prefix: Vec<i64>, period: Vec<i64>) -> Self {
        ContinuedFraction {
            prefix: prefix.into_iter().map(BigInt::from).collect(),
            period: period.into_iter().map(BigInt::from).collect(),
        }
    }

    pub fn golden() -> Self {
        Self::periodic(vec![1], vec![1])
    }

    /// Continued fraction of `sqrt(d)` for a non-square `d`.
    pub fn sqrt(d: u64) -> Result<Self> {
        let a0 = d.sqrt();
        if a0 * a0 == d {
            return Err(Error::validation(format!("sqrt:{d} is rational")));
        }
        let (mut m, mut q, mut a) = (0u64, 1u64, a0);
        let mut period = Vec::new();
        loop {
            m = q * a - m;
            q = (d - m * m) / q;
            a = (a0 + m) / q;
            period.push(a as i64);
            if a == 2 * a0 {
                break;
            }
        }
        Ok(Self::periodic(vec![a0 as i64], period))
    }

    pub fn is_infinite(&self) -> bool {
        !self.period.is_empty()
    }

    pub fn quotient(&self, m: usize) -> Option<&BigInt> {
        if m < self.prefix.len() {
            Some(&self.prefix[m])
        } else if self.period.is_empty() {
            None
        } else {
            Some(&self.period[(m - self.prefix.len()) % self.period.len()])
        }
    }

    /// Largest partial quotient among `a_1, a_2, ...` (None for a finite stream).
    pub fn max_tail_quotient(&self) -> Option<BigInt> {
        if !self.is_infinite() {
            return None;
        }
        self.prefix
            .iter()
            .skip(1)
            .chain(self.period.iter())
            .max()
            .cloned()
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = self.prefix.iter().skip(1).chain(self.period.iter());
        if let Some(bad) = all.find(|a| !a.is_positive()) {
            return Err(Error::validation(format!(
                "partial quotients after a0 must be positive, got {bad}"
            )));
        }
        if self.prefix.is_empty() && self.period.is_empty() {
            return Err(Error::validation("empty continued fraction"));
        }
        Ok(())
    }

    /// Parses `<a0>;<a1>,<a2>,(<p1>,<p2>)`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("bad continued fraction {s:?}"));
        let (head, tail) = s.split_once(';').unwrap_or((s, ""));
        let mut prefix = vec![head.trim().parse::<BigInt>().map_err(|_| bad())?];
        let (body, period) = match tail.find('(') {
            Some(i) => {
                let block = tail[i + 1..].trim_end().strip_suffix(')').ok_or_else(bad)?;
                (&tail[..i], block)
            }
            None => (tail, ""),
        };
        let items = |t: &str| -> Result<Vec<BigInt>> {
            t.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<BigInt>().map_err(|_| bad()))
                .collect()
        };
        prefix.extend(items(body)?);
        let cf = ContinuedFraction {
            prefix,
            period: items(period)?,
        };
        cf.validate()?;
        Ok(cf)
    }
}

impl std::fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.prefix[0])?;
        let rest: Vec<String> = self.prefix[1..].iter().map(|x| x.to_string()).collect();
        let per: Vec<String> = self.period.iter().map(|x| x.to_string()).collect();
        if rest.is_empty() && per.is_empty() {
            return Ok(());
        }
        f.write_str(";")?;
        f.write_str(&rest.join(","))?;
        if !per.is_empty() {
            if !rest.is_empty() {
                f.write_str(",")?;
            }
            write!(f, "({})", per.join(","))?;
        }
        Ok(())
    }
}

/// Convergents `p_m/q_m` built incrementally.
#[derive(Clone, Debug)]
pub struct Convergents {
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
}

impl Convergents {
    pub fn new() -> Self {
        Convergents {
            p: Vec::new(),
            q: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn push(&mut self, a: &BigInt) {
        let m = self.p.len();
        let (p, q) = match m {
            0 => (a.clone(), BigInt::one()),
            1 => (a * &self.p[0] + BigInt::one(), a.clone()),
            _ => (
                a * &self.p[m - 1] + &self.p[m - 2],
                a * &self.q[m - 1] + &self.q[m - 2],
            ),
        };
        self.p.push(p);
        self.q.push(q);
    }

    /// `q_m p_{m-1} - p_m q_{m-1}`, which must be `+-1`.
    pub fn determinant(&self, m: usize) -> BigInt {
        assert!(m >= 1);
        &self.q[m] * &self.p[m - 1] - &self.p[m] * &self.q[m - 1]
    }
}

impl Default for Convergents {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_expansions() {
        assert_eq!(ContinuedFraction::sqrt(2).unwrap(), ContinuedFraction::periodic(vec![1], vec![2]));
        assert_eq!(
            ContinuedFraction::sqrt(7).unwrap(),
            ContinuedFraction::periodic(vec![2], vec![1, 1, 1, 4])
        );
        assert!(ContinuedFraction::sqrt(9).is_err());
    }

    #[test]
    fn parse_and_print() {
        let cf = ContinuedFraction::parse("1;2,(1,3)").unwrap();
        assert_eq!(cf, ContinuedFraction::periodic(vec![1, 2], vec![1, 3]));
        assert_eq!(cf.to_string(), "1;2,(1,3)");
        assert_eq!(ContinuedFraction::parse("0;(1)").unwrap().to_string(), "0;(1)");
        assert!(ContinuedFraction::parse("1;0,2").is_err());
        assert!(!ContinuedFraction::parse("3;7,15,1").unwrap().is_infinite());
    }

    #[test]
    fn convergents_of_golden() {
        let cf = ContinuedFraction::golden();
        let mut c = Convergents::new();
        for m in 0..30 {
            c.push(cf.quotient(m).unwrap());
        }
        assert_eq!(c.q[10], BigInt::from(89));
        for m in 1..30 {
            assert_eq!(c.determinant(m).abs(), BigInt::one());
        }
    }
}
