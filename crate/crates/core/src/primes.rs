//! Sieves and small factorizations.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// Primes `<= n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Euler's totient for `0..=n` by a linear sieve (`phi[0] = 0`).
pub fn phi_sieve(n: usize) -> Vec<u32> {
    let mut phi = vec![0u32; n + 1];
    if n >= 1 {
        phi[1] = 1;
    }
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if phi[i] == 0 {
            phi[i] = i as u32 - 1;
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if ip > n {
                break;
            }
            if i % p as usize == 0 {
                phi[ip] = phi[i] * p;
                break;
            }
            phi[ip] = phi[i] * (p - 1);
        }
    }
    phi
}

/// Factors `n` by trial division with primes up to `bound`.
///
/// Returns the prime-exponent pairs found and the unfactored cofactor
/// (1 when the factorization is complete).
pub fn trial_factor(n: &BigUint, bound: u64) -> (Vec<(u64, u32)>, BigUint) {
    let mut rest = n.clone();
    let mut out = Vec::new();
    if rest.is_zero() {
        return (out, rest);
    }
    for p in primes_up_to(bound) {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        if let Some(r) = rest.to_u64() {
            if r > 1 && p.saturating_mul(p) > r {
                out.push((r, 1));
                rest = BigUint::one();
                break;
            }
        }
    }
    (out, rest)
}

/// Factors a `u64` completely.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_small() {
        assert_eq!(primes_up_to(16), vec![2, 3, 5, 7, 11, 13]);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(1_000_000).len(), 78498);
    }

    #[test]
    fn phi_matches_factorization() {
        let phi = phi_sieve(5000);
        for n in 1..=5000u64 {
            let expect = factor_u64(n)
                .iter()
                .fold(n, |acc, &(p, _)| acc / p * (p - 1));
            assert_eq!(phi[n as usize] as u64, expect, "phi({n})");
        }
    }

    #[test]
    fn trial_division() {
        let (f, rest) = trial_factor(&BigUint::from(30030u32), 100);
        assert_eq!(f, vec![(2, 1), (3, 1), (5, 1), (7, 1), (11, 1), (13, 1)]);
        assert!(rest.is_one());
        let big = BigUint::from(1_000_003u64) * BigUint::from(1_000_033u64);
        let (f, rest) = trial_factor(&big, 100);
        assert!(f.is_empty());
        assert_eq!(rest, big);
    }
}
