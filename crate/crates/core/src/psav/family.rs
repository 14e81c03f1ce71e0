use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Generator descriptor for a divisibility chain.
///
/// Text form: `geometric:<a>`, `factorial`, `primorial-mertens`,
/// `bounded-ratio:<B>:<seed>`, `explicit:<n1,n2,...>`, `file:<path>`, `trivial`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Geometric(u64),
    Factorial,
    PrimorialMertens,
    BoundedRatio { bound: u64, seed: u64 },
    Explicit(Vec<BigUint>),
    File(PathBuf),
    /// The chain `{1}`: every valuation is 1 and `M(N) = 0`.
    Trivial,
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Geometric(a) if *a <= 1 => {
                Err(Error::validation(format!("geometric base must be >= 2, got {a}")))
            }
            Family::BoundedRatio { bound, .. } if *bound <= 1 => Err(Error::validation(format!(
                "bounded-ratio bound must be >= 2, got {bound}"
            ))),
            Family::Explicit(list) => validate_chain(list).map(|_| ()),
            _ => Ok(()),
        }
    }
}

/// Checks an explicit chain and returns it with the leading 1 in place.
pub(crate) fn validate_chain(list: &[BigUint]) -> Result<Vec<BigUint>> {
    let mut terms = Vec::with_capacity(list.len() + 1);
    if list.first().is_none_or(|t| !t.is_one()) {
        terms.push(BigUint::one());
    }
    terms.extend(list.iter().cloned());
    for w in terms.windows(2) {
        if w[1].is_zero() || w[1] <= w[0] || !w[1].is_multiple_of(&w[0]) {
            return Err(Error::validation(format!(
                "explicit chain breaks at {} -> {}: terms must increase and divide each other",
                w[0], w[1]
            )));
        }
    }
    Ok(terms)
}

fn parse_uint_list(s: &str, sep: &[char]) -> Result<Vec<BigUint>> {
    s.split(sep)
        .map(str::trim)
        .filter(|t| !t.is_empty() && !t.starts_with('#'))
        .map(|t| {
            t.parse::<BigUint>()
                .map_err(|_| Error::validation(format!("not a positive integer: {t:?}")))
        })
        .collect()
}

pub(crate) fn read_chain_file(path: &PathBuf) -> Result<Vec<BigUint>> {
    let text = std::fs::read_to_string(path)?;
    parse_uint_list(&text, &['\n', '\r'])
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let num = |t: &str, what: &str| -> Result<u64> {
            t.trim()
                .parse()
                .map_err(|_| Error::validation(format!("bad {what} in family descriptor {s:?}")))
        };
        let fam = match head {
            "geometric" => Family::Geometric(num(rest, "base")?),
            "factorial" => Family::Factorial,
            "primorial-mertens" => Family::PrimorialMertens,
            "trivial" => Family::Trivial,
            "bounded-ratio" => {
                let (b, seed) = rest.split_once(':').ok_or_else(|| {
                    Error::validation("bounded-ratio needs bounded-ratio:<B>:<seed>")
                })?;
                Family::BoundedRatio {
                    bound: num(b, "bound")?,
                    seed: num(seed, "seed")?,
                }
            }
            "explicit" => Family::Explicit(parse_uint_list(rest, &[','])?),
            "file" if !rest.is_empty() => Family::File(PathBuf::from(rest)),
            _ => return Err(Error::validation(format!("unknown family descriptor {s:?}"))),
        };
        fam.validate()?;
        Ok(fam)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Geometric(a) => write!(f, "geometric:{a}"),
            Family::Factorial => f.write_str("factorial"),
            Family::PrimorialMertens => f.write_str("primorial-mertens"),
            Family::BoundedRatio { bound, seed } => write!(f, "bounded-ratio:{bound}:{seed}"),
            Family::Explicit(list) => {
                f.write_str("explicit:")?;
                for (i, t) in list.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            Family::File(p) => write!(f, "file:{}", p.display()),
            Family::Trivial => f.write_str("trivial"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_roundtrip() {
        for s in [
            "geometric:3",
            "factorial",
            "primorial-mertens",
            "bounded-ratio:5:1",
            "explicit:2,6,30",
            "trivial",
        ] {
            let f: Family = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!("geometric:1".parse::<Family>().is_err());
        assert!("bounded-ratio:1:7".parse::<Family>().is_err());
        assert!("explicit:2,5".parse::<Family>().is_err());
        assert!("explicit:4,2".parse::<Family>().is_err());
        assert!("cantor".parse::<Family>().is_err());
    }
}
