//! Chain construction from a valuation sequence, gaps between linear forms in
//! logarithms, and finite point sets on the circle.

mod bw;
mod construct;
mod gamma;
mod torus;

pub use bw::{
    bw_gap, dimension_bound, kappa_certified, multiplicatively_dependent, perfect_power_root, BwGap,
    DimensionBound, GapRow,
};
pub use construct::{
    construct_chain, gamma_step_check, m_bins, ConstructionParams, ConstructionResult, PairBound, SelectedTerm,
    TStep,
};
pub use gamma::{find_gamma, GammaWitness};
pub use torus::{
    box_dimension_estimate, cantor_points, cover_upper_bound, difference_set_check, entropy_count, full_grid,
    geometric_eps, separated_count, BoxDimension, BoxRow, DiffSetCheck, EntropyRow, SeparatedCount, TorusSet,
    FIXED_MODULUS,
};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::Result;
use crate::interval::Interval;
use crate::psav::PsavSequence;
use crate::real::RealNumber;

/// `{a^l n_k alpha mod 1 : l <= L, k <= K}`.
///
/// Rational `alpha` with a denominator below `2^64` gives an exact set. Otherwise each
/// point is enclosed to width `tol` and points closer than `tol` are merged.
pub fn orbit_points(
    alpha: &RealNumber,
    a: u64,
    d: &PsavSequence,
    l_max: u32,
    k_max: usize,
    tol: &BigRational,
    cap_bits: u32,
) -> Result<TorusSet> {
    let terms = d.terms(k_max)?;
    let ab = BigUint::from(a);
    let mults: Vec<BigUint> = terms
        .iter()
        .flat_map(|n| (0..=l_max).map(|l| n * ab.pow(l)).collect::<Vec<_>>())
        .collect();
    if let Some(q) = alpha.as_rational() {
        if let Some(den) = q.denom().to_u128().filter(|&x| x <= FIXED_MODULUS) {
            let num = q.numer().clone();
            let modulus = BigInt::from(den);
            let pts = mults.iter().map(|m| {
                let v = (&num * BigInt::from(m.clone())) % &modulus;
                let v = if v < BigInt::from(0) { v + &modulus } else { v };
                v.to_u128().unwrap()
            });
            return TorusSet::from_raw(den, pts, 0);
        }
    }
    let encl: Vec<Interval> = mults
        .iter()
        .map(|m| alpha.frac_multiple(m, tol, cap_bits))
        .collect::<Result<_>>()?;
    let raw = TorusSet::from_intervals(&encl)?;
    let tol_units = (tol * BigRational::from_integer(BigInt::from(FIXED_MODULUS)))
        .ceil()
        .to_integer()
        .to_u128()
        .unwrap_or(FIXED_MODULUS)
        .max(1);
    let mut kept: Vec<u128> = Vec::with_capacity(raw.len());
    for &x in raw.numerators() {
        if kept.last().is_none_or(|&y| x - y > tol_units) {
            kept.push(x);
        }
    }
    let radius = if kept.len() < raw.len() { raw.radius() + tol_units } else { raw.radius() };
    TorusSet::from_raw(FIXED_MODULUS, kept, radius)
}

/// `alpha` itself as a one-point set.
pub fn single_point(alpha: &RealNumber, tol: &BigRational, cap_bits: u32) -> Result<TorusSet> {
    let x = alpha.frac_multiple(&BigUint::one(), tol, cap_bits)?;
    TorusSet::from_intervals(&[x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    #[test]
    fn rational_orbits_are_exact() {
        let fifth = RealNumber::rational(rat(1, 5));
        let d = PsavSequence::parse("geometric:3").unwrap();
        let s = orbit_points(&fifth, 2, &d, 2, 2, &rat(1, 1 << 30), 256).unwrap();
        assert_eq!(s.modulus(), 5);
        assert!(s.is_exact());
        assert!(s.len() <= 5);
        // {1,2,4} x {1,3,9} mod 5 = {1,2,3,4}
        assert_eq!(s.numerators(), &[1, 2, 3, 4]);

        let third = RealNumber::rational(rat(1, 3));
        let t = orbit_points(&third, 2, &d, 1, 3, &rat(1, 1 << 30), 256).unwrap();
        assert!(t.numerators().contains(&0));

        let g = RealNumber::golden();
        let one = orbit_points(&g, 2, &d, 0, 0, &rat(1, 1 << 40), 256).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one.to_f64()[0] - 0.618_033_988_75).abs() < 1e-10);
        assert_eq!(one, single_point(&g, &rat(1, 1 << 40), 256).unwrap());
    }

    #[test]
    fn irrational_orbit_counts() {
        let g = RealNumber::golden();
        let d = PsavSequence::parse("geometric:3").unwrap();
        let s = orbit_points(&g, 2, &d, 6, 6, &rat(1, 1 << 40), 512).unwrap();
        assert_eq!(s.len(), 49);
        assert!(separated_count(&s, &rat(1, 100)).unwrap().count <= 49);
    }
}
