//! Mixed Littlewood products `n |n|_a |n|_D ||n alpha||` and their running infima.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::psav::{PsavSequence, SmallChain};
use crate::real::{FixedAlpha, RealNumber};
use crate::report::{self, Csv};

pub const DEFAULT_BLOCK: u64 = 1 << 16;

/// `a^j` with `j` maximal such that `a^j | n`.
#[inline]
fn a_part(n: u64, a: Option<u64>) -> u64 {
    let Some(a) = a else { return 1 };
    let mut g = 1;
    let mut m = n;
    while m.is_multiple_of(a) {
        m /= a;
        g *= a;
    }
    g
}

fn a_part_big(n: &BigUint, a: u64) -> BigUint {
    let ab = BigUint::from(a);
    let mut g = BigUint::one();
    let mut m = n.clone();
    while (&m % &ab).is_zero() {
        m /= &ab;
        g *= &ab;
    }
    g
}

/// Enclosure of `n |n|_a |n|_D ||n alpha||` (drop the `a` factor with `None`).
pub fn mixed_term(
    alpha: &RealNumber,
    a: Option<u64>,
    d: &PsavSequence,
    n: &BigUint,
    tol: &BigRational,
) -> Result<Interval> {
    if let Some(a) = a {
        if a < 2 {
            return Err(Error::validation("base a must be >= 2"));
        }
    }
    let g = a.map_or(BigUint::one(), |a| a_part_big(n, a)) * d.value(n)?.term;
    let dist = alpha.dist(n, tol)?;
    let factor = BigRational::new(BigInt::from(n.clone()), BigInt::from(g));
    Ok(dist.interval().scale(&factor))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrajectoryRecord {
    pub n: u64,
    #[serde(serialize_with = "report::ser_interval")]
    pub term: Interval,
    #[serde(serialize_with = "report::ser_interval")]
    pub running_min: Interval,
    pub argmin: u64,
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub n_max: u64,
    /// Fixed tolerance; `None` means `running_min / 2^10`.
    pub tol: Option<BigRational>,
    pub emit_every: Option<u64>,
    pub block: u64,
}

impl ScanOptions {
    pub fn new(n_max: u64) -> Self {
        ScanOptions {
            n_max,
            tol: None,
            emit_every: None,
            block: DEFAULT_BLOCK,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub records: Vec<TrajectoryRecord>,
    pub blocks: Vec<(u64, u64)>,
    #[serde(serialize_with = "report::ser_interval")]
    pub min: Interval,
    pub argmin: u64,
}

impl ScanResult {
    pub fn to_csv(&self) -> Csv {
        let mut csv = Csv::new(&["n", "term_lo", "term_hi", "runmin_lo", "runmin_hi", "argmin"]);
        for r in &self.records {
            csv.row(&[
                r.n.to_string(),
                report::lo_str(r.term.lo()),
                report::hi_str(r.term.hi()),
                report::lo_str(r.running_min.lo()),
                report::hi_str(r.running_min.hi()),
                r.argmin.to_string(),
            ]);
        }
        csv
    }
}

/// A term enclosure, kept in `2^-96` fixed point while possible.
#[derive(Clone, Debug)]
enum Term {
    Fx(u128, u128),
    Big(Interval),
}

impl Term {
    fn interval(&self) -> Interval {
        match self {
            Term::Fx(lo, hi) => Interval::new(FixedAlpha::to_rational(*lo), FixedAlpha::to_rational(*hi)),
            Term::Big(i) => i.clone(),
        }
    }

    fn hi_lt(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Fx(_, a), Term::Fx(_, b)) => a < b,
            _ => self.interval().hi() < other.interval().hi(),
        }
    }

    fn min_with(&self, other: &Term) -> Term {
        match (self, other) {
            (Term::Fx(a, b), Term::Fx(c, d)) => Term::Fx(*a.min(c), *b.min(d)),
            _ => Term::Big(self.interval().min_with(&other.interval())),
        }
    }

    /// `hi / 1024` in fixed units, the default tolerance.
    fn default_tol_fx(&self) -> u128 {
        match self {
            Term::Fx(_, hi) => hi >> 10,
            Term::Big(i) => {
                let one = BigRational::from_integer(BigInt::from(FixedAlpha::one()));
                (i.hi() * one / BigRational::from_integer(BigInt::from(1024)))
                    .floor()
                    .to_integer()
                    .to_u128()
                    .unwrap_or(u128::MAX)
            }
        }
    }
}

/// Per-`n` evaluator shared by the scan blocks.
struct TermEval<'a> {
    alpha: &'a RealNumber,
    fixed: Option<FixedAlpha>,
    a: Option<u64>,
    chain: SmallChain,
    tol: Option<BigRational>,
}

impl TermEval<'_> {
    /// Term at `n`; `prev` is the running minimum so far (drives the default tolerance).
    fn term(&self, n: u64, prev: Option<&Term>) -> Result<Term> {
        let g = a_part(n, self.a) as u128 * self.chain.inverse_value(n) as u128;
        let tol_fx = match (&self.tol, prev) {
            (Some(t), _) => {
                let one = BigRational::from_integer(BigInt::from(FixedAlpha::one()));
                (t * one).floor().to_integer().to_u128().unwrap_or(u128::MAX)
            }
            (None, Some(p)) => p.default_tol_fx(),
            (None, None) => FixedAlpha::one() >> 40,
        };
        if let Some(fx) = &self.fixed {
            let (lo, hi) = fx.norm(n);
            let tlo = (n as u128 * lo) / g;
            let thi = (n as u128 * hi).div_ceil(g);
            if thi - tlo <= tol_fx {
                return Ok(Term::Fx(tlo, thi));
            }
        }
        let tol = match (&self.tol, tol_fx) {
            (Some(t), _) => t.clone(),
            (None, 0) => BigRational::new(BigInt::one(), BigInt::one() << 128usize),
            (None, t) => FixedAlpha::to_rational(t),
        };
        let factor = BigRational::new(BigInt::from(n), BigInt::from(g));
        let inner_tol = tol / &factor;
        let dist = self.alpha.dist_u64(n, &inner_tol)?;
        Ok(Term::Big(dist.interval().scale(&factor)))
    }
}

struct Point {
    n: u64,
    term: Term,
    local_min: Term,
    local_arg: u64,
    local_drop: bool,
}

struct BlockOut {
    /// Points where the block-local running minimum drops, plus forced emits.
    points: Vec<Point>,
    min: Term,
    argmin: u64,
}

fn scan_block(eval: &TermEval, lo: u64, hi: u64, emit_every: Option<u64>) -> Result<BlockOut> {
    let mut points = Vec::new();
    let mut min: Option<Term> = None;
    let mut argmin = lo;
    for n in lo..=hi {
        let t = eval.term(n, min.as_ref()).map_err(|e| match e {
            Error::Undecidable { context, cap_bits } => Error::Undecidable {
                context: format!("{context} (n = {n})"),
                cap_bits,
            },
            other => other,
        })?;
        let drops = min.as_ref().is_none_or(|m| t.hi_lt(m));
        let new_min = match &min {
            None => t.clone(),
            Some(m) => m.min_with(&t),
        };
        if drops {
            argmin = n;
        }
        let forced = emit_every.is_some_and(|k| k > 0 && n % k == 0);
        if drops || forced {
            points.push(Point {
                n,
                term: t,
                local_min: new_min.clone(),
                local_arg: argmin,
                local_drop: drops,
            });
        }
        min = Some(new_min);
    }
    Ok(BlockOut {
        points,
        min: min.expect("non-empty block"),
        argmin,
    })
}

/// Scans `n = 1..=n_max`, recording where the running minimum drops.
pub fn infimum_scan(
    alpha: &RealNumber,
    a: Option<u64>,
    d: &PsavSequence,
    opts: &ScanOptions,
) -> Result<ScanResult> {
    if opts.n_max < 1 {
        return Err(Error::validation("N_max must be >= 1"));
    }
    if let Some(a) = a {
        if a < 2 {
            return Err(Error::validation("base a must be >= 2"));
        }
    }
    let fixed = if alpha.is_rational() || opts.n_max > FixedAlpha::MAX_N {
        None
    } else {
        Some(alpha.fixed()?)
    };
    let eval = TermEval {
        alpha,
        fixed,
        a,
        chain: d.small_chain(opts.n_max)?,
        tol: opts.tol.clone(),
    };
    let block = opts.block.max(1);
    let blocks: Vec<(u64, u64)> = (0..opts.n_max.div_ceil(block))
        .map(|i| (i * block + 1, ((i + 1) * block).min(opts.n_max)))
        .collect();
    let outs: Vec<BlockOut> = blocks
        .par_iter()
        .map(|&(lo, hi)| scan_block(&eval, lo, hi, opts.emit_every))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut global: Option<(Term, u64)> = None;
    for out in outs {
        for p in out.points {
            let (run, arg) = match &global {
                None => (p.local_min, p.local_arg),
                Some((g, garg)) => {
                    let arg = if p.local_min.hi_lt(g) { p.local_arg } else { *garg };
                    (g.min_with(&p.local_min), arg)
                }
            };
            let drops = p.local_drop && global.as_ref().is_none_or(|(g, _)| p.term.hi_lt(g));
            let forced = opts.emit_every.is_some_and(|k| k > 0 && p.n % k == 0);
            if p.n == 1 || drops || forced {
                records.push(TrajectoryRecord {
                    n: p.n,
                    term: p.term.interval(),
                    running_min: run.interval(),
                    argmin: arg,
                });
            }
        }
        global = Some(match global {
            None => (out.min, out.argmin),
            Some((g, garg)) => {
                let arg = if out.min.hi_lt(&g) { out.argmin } else { garg };
                (g.min_with(&out.min), arg)
            }
        });
    }
    let (min, argmin) = global.unwrap();
    Ok(ScanResult {
        records,
        blocks,
        min: min.interval(),
        argmin,
    })
}

/// First `n <= n_max` with `n ||n alpha|| <= c`, certified.
pub fn bad_c_test(
    alpha: &RealNumber,
    c: &BigRational,
    n_max: u64,
    tol: &BigRational,
    cap_bits: u32,
) -> Result<Option<u64>> {
    if !c.is_positive() {
        return Err(Error::validation("c must be positive"));
    }
    let fixed = if alpha.is_rational() || n_max > FixedAlpha::MAX_N {
        None
    } else {
        Some(alpha.fixed()?)
    };
    let one = BigRational::from_integer(BigInt::from(FixedAlpha::one()));
    let c_lo = (c * &one).floor().to_integer().to_u128().unwrap_or(u128::MAX);
    let c_hi = (c * &one).ceil().to_integer().to_u128().unwrap_or(u128::MAX);
    for n in 1..=n_max {
        if let Some(fx) = &fixed {
            let (lo, hi) = fx.norm(n);
            if n as u128 * hi <= c_lo {
                return Ok(Some(n));
            }
            if n as u128 * lo > c_hi {
                continue;
            }
        }
        let nn = BigInt::from(n);
        let mut t = tol / BigRational::from_integer(nn.clone());
        let cap = BigRational::new(BigInt::one(), BigInt::one() << cap_bits as usize);
        loop {
            let v = alpha.dist_u64(n, &t)?.interval().scale_int(&nn);
            if v.hi() <= c {
                return Ok(Some(n));
            }
            if v.lo() > c {
                break;
            }
            if t <= cap {
                return Err(Error::undecidable(format!("n ||n alpha|| against c at n = {n}"), cap_bits));
            }
            t = &t / BigRational::from_integer(BigInt::from(1u64 << 32));
        }
    }
    Ok(None)
}
