//! Exact integer arithmetic: factorization, multiplicative functions,
//! divisor enumeration, prime sieving and primorial coprimality.
//!
//! Everything here is integer-only. Factorization uses trial division by
//! the primes below 10^6 and falls back to Pollard's rho with a
//! deterministic Miller-Rabin test for the cofactor.

use crate::error::{Error, Result};
use std::sync::OnceLock;

const TRIAL_LIMIT: u64 = 1_000_000;

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| sieve(TRIAL_LIMIT))
}

fn sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// All primes `<= floor(bound)`; a negative or sub-2 bound gives none.
pub fn primes_up_to(bound: f64) -> Vec<u64> {
    if !(bound >= 2.0) {
        return Vec::new();
    }
    let limit = bound.floor() as u64;
    if limit <= TRIAL_LIMIT {
        let table = small_primes();
        let end = table.partition_point(|&p| p <= limit);
        table[..end].to_vec()
    } else {
        sieve(limit)
    }
}

/// Primes in the half-open interval `(lo, hi]`.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= lo {
        return Vec::new();
    }
    primes_up_to(hi as f64)
        .into_iter()
        .filter(|&p| p > lo)
        .collect()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// gcd of a signed integer with a modulus, taken on the absolute value.
pub fn gcd_signed(a: i64, q: u64) -> u64 {
    gcd(a.unsigned_abs(), q)
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    split_large(d, out);
    split_large(n / d, out);
}

/// Prime-power decomposition of a positive integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn value(&self) -> u64 {
        self.value
    }

    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// The prime powers `p^e` exactly dividing the value.
    pub fn prime_powers(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, e)| p.pow(e))
    }

    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn tau(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn mobius(&self) -> i32 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// All divisors in ascending order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let current = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..current {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }

    /// Squarefree divisors `d` paired with `mu(d)`, ascending in `d`.
    pub fn squarefree_divisors(&self) -> Vec<(u64, i32)> {
        let mut divs = vec![(1u64, 1i32)];
        for &(p, _) in &self.factors {
            let current = divs.len();
            for i in 0..current {
                let (d, m) = divs[i];
                divs.push((d * p, -m));
            }
        }
        divs.sort_unstable();
        divs
    }
}

pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::ZeroArgument {
            op: "factorize",
            arg: "n",
        });
    }
    let mut rest = n;
    let mut factors = Vec::new();
    for &p in small_primes() {
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rest > 1 {
        if rest < TRIAL_LIMIT * TRIAL_LIMIT || is_prime(rest) {
            factors.push((rest, 1));
        } else {
            let mut big = Vec::new();
            split_large(rest, &mut big);
            big.sort_unstable();
            for p in big {
                match factors.last_mut() {
                    Some((q, e)) if *q == p => *e += 1,
                    _ => factors.push((p, 1)),
                }
            }
        }
    }
    Ok(Factorization { value: n, factors })
}

pub fn mobius(n: u64) -> Result<i32> {
    if n == 0 {
        return Err(Error::ZeroArgument {
            op: "mobius",
            arg: "n",
        });
    }
    Ok(factorize(n)?.mobius())
}

pub fn divisors(n: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::ZeroArgument {
            op: "divisors",
            arg: "n",
        });
    }
    Ok(factorize(n)?.divisors())
}

pub fn tau(n: u64) -> Result<u64> {
    Ok(factorize(n)?.tau())
}

pub fn omega(n: u64) -> Result<u32> {
    Ok(factorize(n)?.omega())
}

pub fn phi(n: u64) -> Result<u64> {
    Ok(factorize(n)?.phi())
}

/// Smallest-prime-factor table for bulk factorization of every `n <= limit`.
#[derive(Clone, Debug)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: u32) -> Self {
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Self { spf }
    }

    pub fn limit(&self) -> u32 {
        (self.spf.len() - 1) as u32
    }

    pub fn factorize(&self, n: u32) -> Factorization {
        assert!(n >= 1 && n <= self.limit());
        let mut rest = n;
        let mut factors: Vec<(u64, u32)> = Vec::new();
        while rest > 1 {
            let p = self.spf[rest as usize];
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p as u64, e));
        }
        Factorization {
            value: n as u64,
            factors,
        }
    }
}

/// The primorial of all primes up to `bound`, kept as its prime list.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimorialSpec {
    bound: f64,
    primes: Vec<u64>,
}

impl PrimorialSpec {
    pub fn new(bound: f64) -> Self {
        Self {
            bound,
            primes: primes_up_to(bound),
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }
}

/// True iff no prime `p <= spec.bound` divides both `x` and `h`.
pub fn coprime_to_primorial(x: u64, h: u64, spec: &PrimorialSpec) -> bool {
    let g = gcd(x, h);
    if g == 1 {
        return true;
    }
    let limit = spec.bound.floor();
    let mut rest = g;
    for &p in small_primes() {
        if p as f64 > limit || p * p > rest {
            break;
        }
        if rest % p == 0 {
            return false;
        }
        while rest % p == 0 {
            rest /= p;
        }
    }
    // `rest` is 1 or its smallest prime factor exceeds the loop bound
    if rest > 1 {
        let smallest = match factorize(rest) {
            Ok(f) => f.factors()[0].0,
            Err(_) => return true,
        };
        return smallest as f64 > limit;
    }
    true
}

/// A squarefree modulus given by its prime factors.
///
/// Stands for both a concrete squarefree `w` and the primorial of a bound;
/// the product itself is never formed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SquarefreeModulus {
    primes: Vec<u64>,
}

impl SquarefreeModulus {
    pub fn one() -> Self {
        Self { primes: Vec::new() }
    }

    pub fn new(w: u64) -> Result<Self> {
        let f = factorize(w)?;
        if !f.is_squarefree() {
            return Err(Error::NotSquarefree(w));
        }
        Ok(Self {
            primes: f.primes().collect(),
        })
    }

    pub fn primorial(spec: &PrimorialSpec) -> Self {
        Self {
            primes: spec.primes().to_vec(),
        }
    }

    pub fn from_primes(mut primes: Vec<u64>) -> Self {
        primes.sort_unstable();
        primes.dedup();
        Self { primes }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn divides_by(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// The product, when it fits in 64 bits.
    pub fn value(&self) -> Option<u64> {
        self.primes
            .iter()
            .try_fold(1u64, |acc, &p| acc.checked_mul(p))
    }

    /// Divisors `d <= limit` with `mu(d)`, ascending.
    pub fn divisors_up_to(&self, limit: u64) -> Vec<(u64, i32)> {
        let mut out = vec![(1u64, 1i32)];
        for &p in &self.primes {
            if p > limit {
                break;
            }
            let current = out.len();
            for i in 0..current {
                let (d, m) = out[i];
                if let Some(dp) = d.checked_mul(p) {
                    if dp <= limit {
                        out.push((dp, -m));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Removes primes above `limit`; they cannot divide any `h <= limit`.
    pub fn truncated(&self, limit: u64) -> Self {
        Self {
            primes: self.primes.iter().copied().filter(|&p| p <= limit).collect(),
        }
    }

    /// The part of the modulus sharing primes with `q`, and the rest.
    pub fn split_by(&self, q: u64) -> (Self, Self) {
        let (inside, outside): (Vec<u64>, Vec<u64>) =
            self.primes.iter().partition(|&&p| q % p == 0);
        (Self { primes: inside }, Self { primes: outside })
    }

    /// True iff no prime of the modulus divides both `x` and `h`.
    pub fn coprime_pair(&self, x: u64, h: u64) -> bool {
        let g = gcd(x, h);
        g == 1 || self.primes.iter().all(|&p| g % p != 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut p = 2;
        while p * p <= n {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
            p += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).unwrap().factors().is_empty());
        assert_eq!(factorize(12).unwrap().factors(), &[(2, 2), (3, 1)]);
        assert_eq!(factorize(97).unwrap().factors(), &[(97, 1)]);
        assert!(factorize(0).is_err());
    }

    #[test]
    fn factorize_agrees_with_trial_division() {
        for n in 1..5000u64 {
            assert_eq!(factorize(n).unwrap().factors(), trial_division(n).as_slice());
        }
    }

    #[test]
    fn factorize_large_semiprimes() {
        let p = 1_000_000_007u64;
        let q = 998_244_353u64;
        let f = factorize(p * q).unwrap();
        assert_eq!(f.factors(), &[(q, 1), (p, 1)]);
        let f = factorize(4_611_686_014_132_420_609).unwrap(); // (2^31 - 1)^2
        assert_eq!(f.factors(), &[(2_147_483_647, 2)]);
        let n = (1u64 << 61) - 1;
        assert_eq!(factorize(n).unwrap().factors(), &[(n, 1)]);
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius(1).unwrap(), 1);
        assert_eq!(mobius(6).unwrap(), 1);
        assert_eq!(mobius(12).unwrap(), 0);
        assert_eq!(mobius(30).unwrap(), -1);
        assert!(mobius(0).is_err());
    }

    #[test]
    fn divisor_examples() {
        let brute = |n: u64| (1..=n).filter(|d| n % d == 0).collect::<Vec<_>>();
        assert_eq!(divisors(1).unwrap(), vec![1]);
        assert_eq!(divisors(12).unwrap(), brute(12));
        assert_eq!(divisors(49).unwrap(), brute(49));
        for n in 1..300 {
            assert_eq!(divisors(n).unwrap(), brute(n));
        }
        assert!(divisors(0).is_err());
    }

    #[test]
    fn prime_examples() {
        assert!(primes_up_to(1.0).is_empty());
        assert!(primes_up_to(-3.0).is_empty());
        assert_eq!(primes_up_to(10.0), vec![2, 3, 5, 7]);
        assert_eq!(primes_up_to(30.5), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(primes_up_to(1e6).len(), 78_498);
        assert_eq!(primes_in(10, 30), vec![11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn coprime_to_primorial_examples() {
        assert!(!coprime_to_primorial(6, 10, &PrimorialSpec::new(5.0)));
        assert!(coprime_to_primorial(6, 35, &PrimorialSpec::new(5.0)));
        // gcd is 11, which exceeds the bound 7
        assert!(coprime_to_primorial(22, 33, &PrimorialSpec::new(7.0)));
        assert!(!coprime_to_primorial(22, 33, &PrimorialSpec::new(11.0)));
    }

    #[test]
    fn mobius_sum_over_divisors_is_delta() {
        let sieve = FactorSieve::new(100_000);
        for n in 1..=100_000u32 {
            let f = sieve.factorize(n);
            let s: i64 = f
                .squarefree_divisors()
                .iter()
                .map(|&(_, m)| m as i64)
                .sum();
            assert_eq!(s, (n == 1) as i64, "n = {n}");
        }
    }

    #[test]
    fn factor_sieve_matches_factorize() {
        let sieve = FactorSieve::new(20_000);
        for n in 1..=20_000u32 {
            assert_eq!(sieve.factorize(n), factorize(n as u64).unwrap());
        }
    }

    #[test]
    fn squarefree_modulus_divisors() {
        let w = SquarefreeModulus::new(30).unwrap();
        assert_eq!(
            w.divisors_up_to(10),
            vec![(1, 1), (2, -1), (3, -1), (5, -1), (6, 1), (10, 1)]
        );
        assert_eq!(w.value(), Some(30));
        assert!(SquarefreeModulus::new(12).is_err());
        let (inside, outside) = w.split_by(12);
        assert_eq!(inside.primes(), &[2, 3]);
        assert_eq!(outside.primes(), &[5]);
    }
}
