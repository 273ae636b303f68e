//! Complete exponential sums modulo `q`.
//!
//! * `S(q,a1,a2) = sum_{x<=q} e((a1 x + a2 x^2)/q)`, the quadratic Gauss sum;
//! * `U(q,a,b) = sum_{z<=q} e((a z^3 + b z)/q)`, Hua's cubic sum;
//! * `U*(r,b)`, the cubic sum restricted to units;
//! * `W(r,b)`, the paired sum over `(x,y,r) = 1`;
//! * `T(q,a,b)`, the twisted double sum that collapses to `|U|^2`.
//!
//! Each sum has a direct evaluation that walks the residues with integer
//! finite differences (no multiplications in the loop) and looks up roots
//! of unity in a table. Above [`FAST_PATH_MIN_MODULUS`] the default entry
//! points factor the modulus and multiply the prime-power pieces using
//! the Chinese-remainder twists.

use crate::error::{Error, Result};
use crate::ntheory::{factorize, gcd, gcd_signed, Factorization, PrimorialSpec, SquarefreeModulus};
use crate::numeric::{ComplexAccumulator, RootTable, SumValue};
use num_bigint::BigUint;
use num_complex::Complex64;

/// Moduli above this use the factorized evaluation by default.
pub const FAST_PATH_MIN_MODULUS: u64 = 10_000;

#[inline]
fn reduce(a: i64, q: u64) -> u64 {
    a.rem_euclid(q as i64) as u64
}

#[inline]
fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn require_modulus(op: &'static str, q: u64) -> Result<()> {
    if q == 0 {
        Err(Error::ZeroArgument { op, arg: "q" })
    } else {
        Ok(())
    }
}

/// Residue ring `Z/qZ` with a table of roots of unity; evaluates the
/// complete sums directly for one fixed modulus.
#[derive(Clone, Debug)]
pub struct ResidueSums {
    q: u64,
    roots: RootTable,
}

impl ResidueSums {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1, "modulus must be positive");
        Self {
            q,
            roots: RootTable::new(q),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Direct `S(q, a1, a2)`.
    pub fn gauss_quad(&self, a1: i64, a2: i64) -> SumValue {
        let q = self.q;
        let a1 = reduce(a1, q);
        let a2 = reduce(a2, q);
        // s(x) = a1 x + a2 x^2, stepping from x = 0 (equivalent to x = q)
        let mut acc = ComplexAccumulator::new();
        let mut s = 0u64;
        let mut delta = add_mod(a1, a2, q); // s(1) - s(0)
        let step = add_mod(a2, a2, q);
        for _ in 0..q {
            acc.push(self.roots.get_reduced(s));
            s = add_mod(s, delta, q);
            delta = add_mod(delta, step, q);
        }
        acc.finish()
    }

    /// Direct `U(q, a, b)`.
    pub fn hua(&self, a: i64, b: i64) -> SumValue {
        let q = self.q;
        let a = reduce(a, q);
        let b = reduce(b, q);
        // s(z) = a z^3 + b z with third-order differences from z = 0
        let mut acc = ComplexAccumulator::new();
        let mut s = 0u64;
        let mut d1 = add_mod(a, b, q); // s(1) - s(0)
        let mut d2 = mul_mod(6, a, q); // d1(1) - d1(0)
        let d3 = mul_mod(6, a, q);
        for _ in 0..q {
            acc.push(self.roots.get_reduced(s));
            s = add_mod(s, d1, q);
            d1 = add_mod(d1, d2, q);
            d2 = add_mod(d2, d3, q);
        }
        acc.finish()
    }

    /// Cubic sum over residues `x` with `(x, q) = 1`.
    pub fn restricted_cubic(&self, b: i64) -> SumValue {
        self.cubic_filtered(b, |x| gcd(x, self.q) == 1)
    }

    /// Cubic sum over residues divisible by `p`.
    pub fn cubic_divisible_by(&self, b: i64, p: u64) -> SumValue {
        self.cubic_filtered(b, |x| x % p == 0)
    }

    fn cubic_filtered(&self, b: i64, keep: impl Fn(u64) -> bool) -> SumValue {
        let q = self.q;
        let b = reduce(b, q);
        let mut acc = ComplexAccumulator::new();
        let mut s = 0u64;
        let mut d1 = b;
        let mut d2 = mul_mod(6, b, q);
        let d3 = mul_mod(6, b, q);
        for x in 0..q {
            let residue = if x == 0 { q } else { x };
            if keep(residue) {
                acc.push(self.roots.get_reduced(s));
            }
            s = add_mod(s, d1, q);
            d1 = add_mod(d1, d2, q);
            d2 = add_mod(d2, d3, q);
        }
        acc.finish()
    }

    /// `W(q, b)`: the double sum regrouped by `g = gcd(x, q)`, so that the
    /// constraint `(x, y, q) = 1` becomes `(y, g) = 1`.
    pub fn paired(&self, b: i64) -> SumValue {
        let q = self.q;
        let f = factorize(q).expect("positive modulus");
        let cubes = self.cube_phases(reduce(b, q));
        // (g, count of x with gcd(x, q) = g, sum of e(b x^3 / q) over them)
        let mut groups: Vec<(u64, u64, Complex64)> = f
            .divisors()
            .into_iter()
            .map(|g| (g, 0, Complex64::new(0.0, 0.0)))
            .collect();
        for x in 1..=q {
            let g = gcd(x, q);
            let slot = groups.binary_search_by_key(&g, |e| e.0).expect("divisor");
            groups[slot].1 += 1;
            groups[slot].2 += self.roots.get_reduced(cubes[(x % q) as usize]);
        }
        let mut acc = ComplexAccumulator::new();
        let mut pairs = 0u64;
        for &(g, count, a_g) in groups.iter().filter(|e| e.1 > 0) {
            let primes: Vec<u64> = f.primes().filter(|p| g % p == 0).collect();
            let mut b_g = ComplexAccumulator::new();
            for y in 1..=q {
                if primes.iter().all(|p| y % p != 0) {
                    let c = cubes[(y % q) as usize];
                    b_g.push(self.roots.get_reduced(if c == 0 { 0 } else { q - c }));
                }
            }
            let b_sum = b_g.finish();
            acc.push(a_g * b_sum.value);
            pairs += count * b_sum.terms;
        }
        let mut out = acc.finish();
        out.terms = pairs;
        out.err_budget = 4.0 * crate::numeric::EPS * (pairs.max(1) as f64) * (q as f64).max(1.0);
        out
    }

    /// Direct `T(q, a, b)`, the O(q^2) double sum.
    pub fn twisted(&self, a: i64, b: i64) -> SumValue {
        let q = self.q;
        let a = reduce(a, q);
        let b = reduce(b, q);
        let mut acc = ComplexAccumulator::new();
        for k in 1..=q {
            let k = k % q;
            let k2 = mul_mod(k, k, q);
            let k3 = mul_mod(k2, k, q);
            // phase(z) = a k^3 + b k + 3 a k^2 z + 3 a k z^2
            let base = add_mod(mul_mod(a, k3, q), mul_mod(b, k, q), q);
            let lin = mul_mod(mul_mod(3, a, q), k2, q);
            let quad = mul_mod(mul_mod(3, a, q), k, q);
            let mut s = base;
            let mut delta = add_mod(lin, quad, q);
            let step = add_mod(quad, quad, q);
            for _ in 0..q {
                acc.push(self.roots.get_reduced(s));
                s = add_mod(s, delta, q);
                delta = add_mod(delta, step, q);
            }
        }
        acc.finish()
    }

    fn cube_phases(&self, b: u64) -> Vec<u64> {
        let q = self.q;
        (0..q)
            .map(|x| mul_mod(b, mul_mod(mul_mod(x, x, q), x, q), q))
            .collect()
    }
}

fn crt_product(
    f: &Factorization,
    mut piece: impl FnMut(u64, u64) -> SumValue,
) -> SumValue {
    let q = f.value();
    let mut out = SumValue::exact(Complex64::new(1.0, 0.0), 1);
    for qi in f.prime_powers() {
        let cofactor = q / qi;
        out = out.mul(&piece(qi, cofactor));
    }
    out
}

fn use_fast_path(q: u64) -> bool {
    q > FAST_PATH_MIN_MODULUS
}

/// `S(q, a1, a2)`.
pub fn gauss_quad(q: u64, a1: i64, a2: i64) -> Result<SumValue> {
    require_modulus("gauss_quad", q)?;
    if use_fast_path(q) {
        gauss_quad_factored(q, a1, a2)
    } else {
        Ok(ResidueSums::new(q).gauss_quad(a1, a2))
    }
}

pub fn gauss_quad_direct(q: u64, a1: i64, a2: i64) -> Result<SumValue> {
    require_modulus("gauss_quad", q)?;
    Ok(ResidueSums::new(q).gauss_quad(a1, a2))
}

/// `S(q1 q2, a1, a2) = S(q1, a1, a2 q2) S(q2, a1, a2 q1)` over the prime powers.
pub fn gauss_quad_factored(q: u64, a1: i64, a2: i64) -> Result<SumValue> {
    require_modulus("gauss_quad", q)?;
    let f = factorize(q)?;
    Ok(crt_product(&f, |qi, m| {
        let a2i = mul_mod(reduce(a2, qi), m % qi, qi) as i64;
        ResidueSums::new(qi).gauss_quad(a1, a2i)
    }))
}

/// `U(q, a, b)`; `b = 0` gives the cubic Gauss sum `U(q, a)`.
pub fn hua_sum(q: u64, a: i64, b: i64) -> Result<SumValue> {
    require_modulus("hua_sum", q)?;
    if use_fast_path(q) {
        hua_sum_factored(q, a, b)
    } else {
        Ok(ResidueSums::new(q).hua(a, b))
    }
}

pub fn hua_sum_direct(q: u64, a: i64, b: i64) -> Result<SumValue> {
    require_modulus("hua_sum", q)?;
    Ok(ResidueSums::new(q).hua(a, b))
}

/// `U(q1 q2, c, b) = U(q1, c q2^2, b) U(q2, c q1^2, b)` over the prime powers.
pub fn hua_sum_factored(q: u64, a: i64, b: i64) -> Result<SumValue> {
    require_modulus("hua_sum", q)?;
    let f = factorize(q)?;
    Ok(crt_product(&f, |qi, m| {
        let m = m % qi;
        let ai = mul_mod(reduce(a, qi), mul_mod(m, m, qi), qi) as i64;
        ResidueSums::new(qi).hua(ai, b)
    }))
}

/// `U*(r, b)`, summing only over `x` coprime to `r`.
pub fn restricted_cubic_sum(r: u64, b: i64) -> Result<SumValue> {
    require_modulus("restricted_cubic_sum", r)?;
    if use_fast_path(r) {
        let f = factorize(r)?;
        return Ok(crt_product(&f, |ri, m| {
            let m = m % ri;
            let bi = mul_mod(reduce(b, ri), mul_mod(m, m, ri), ri) as i64;
            ResidueSums::new(ri).restricted_cubic(bi)
        }));
    }
    Ok(ResidueSums::new(r).restricted_cubic(b))
}

/// `sum_{x <= r, p | x} e(b x^3 / r)`.
pub fn cubic_sum_divisible(r: u64, p: u64, b: i64) -> Result<SumValue> {
    require_modulus("cubic_sum_divisible", r)?;
    if p == 0 {
        return Err(Error::ZeroArgument {
            op: "cubic_sum_divisible",
            arg: "p",
        });
    }
    Ok(ResidueSums::new(r).cubic_divisible_by(b, p))
}

/// `W(r, b)`.
pub fn paired_sum_w(r: u64, b: i64) -> Result<SumValue> {
    require_modulus("paired_sum_w", r)?;
    if use_fast_path(r) {
        paired_sum_w_factored(r, b)
    } else {
        Ok(ResidueSums::new(r).paired(b))
    }
}

pub fn paired_sum_w_direct(r: u64, b: i64) -> Result<SumValue> {
    require_modulus("paired_sum_w", r)?;
    Ok(ResidueSums::new(r).paired(b))
}

/// `W(r1 r2, b) = W(r1, r2^2 b) W(r2, r1^2 b)` over the prime powers.
pub fn paired_sum_w_factored(r: u64, b: i64) -> Result<SumValue> {
    require_modulus("paired_sum_w", r)?;
    let f = factorize(r)?;
    Ok(crt_product(&f, |ri, m| {
        let m = m % ri;
        let bi = mul_mod(reduce(b, ri), mul_mod(m, m, ri), ri) as i64;
        ResidueSums::new(ri).paired(bi)
    }))
}

/// `W(r, b)` through `sum_{d | r} mu(d) d^-2 |U(r, b d^3)|^2`.
pub fn paired_sum_w_mobius(r: u64, b: i64) -> Result<f64> {
    require_modulus("paired_sum_w", r)?;
    let f = factorize(r)?;
    let ring = ResidueSums::new(r);
    let mut total = crate::numeric::CompensatedSum::default();
    for (d, mu) in f.squarefree_divisors() {
        let d3 = mul_mod(mul_mod(d % r, d % r, r), d % r, r);
        let c = mul_mod(reduce(b, r), d3, r) as i64;
        let u = ring.hua(c, 0).norm();
        total.add(mu as f64 * u * u / (d * d) as f64);
    }
    Ok(total.value())
}

/// `T(q, a, b)`.
pub fn hua_t(q: u64, a: i64, b: i64) -> Result<SumValue> {
    require_modulus("hua_t", q)?;
    if use_fast_path(q) {
        let f = factorize(q)?;
        return Ok(crt_product(&f, |qi, m| {
            let m = m % qi;
            let ai = mul_mod(reduce(a, qi), mul_mod(m, m, qi), qi) as i64;
            ResidueSums::new(qi).twisted(ai, b)
        }));
    }
    Ok(ResidueSums::new(q).twisted(a, b))
}

/// Which modulus `w` the envelope function `kappa_w` refers to.
#[derive(Clone, Debug, PartialEq)]
pub enum KappaSpec {
    Squarefree(SquarefreeModulus),
    Primorial(PrimorialSpec),
}

impl KappaSpec {
    pub fn concrete(w: u64) -> Result<Self> {
        Ok(Self::Squarefree(SquarefreeModulus::new(w)?))
    }

    fn divides(&self, p: u64) -> bool {
        match self {
            Self::Squarefree(w) => w.divides_by(p),
            Self::Primorial(spec) => (p as f64) <= spec.bound().floor(),
        }
    }
}

/// `kappa_w(q)` held exactly as `2^two_pow / sqrt(prod p^k)`, or zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KappaValue {
    pub zero: bool,
    pub two_pow: u32,
    pub inv_sqrt: Vec<(u64, u32)>,
}

impl KappaValue {
    pub fn to_f64(&self) -> f64 {
        if self.zero {
            return 0.0;
        }
        let mut v = 2f64.powi(self.two_pow as i32);
        for &(p, k) in &self.inv_sqrt {
            v *= (p as f64).powf(-(k as f64) / 2.0);
        }
        v
    }

    /// Exact test of `kappa <= 2^18 q^{-1/3}`, i.e.
    /// `2^{6 two_pow} q^2 <= 2^108 prod p^{3k}`.
    pub fn within_cube_root_bound(&self, q: u64) -> bool {
        if self.zero {
            return true;
        }
        // decide in log2 unless the two sides are within float noise
        let log_rhs = 108.0
            + self
                .inv_sqrt
                .iter()
                .map(|&(p, k)| 3.0 * k as f64 * (p as f64).log2())
                .sum::<f64>();
        let log_lhs = 6.0 * self.two_pow as f64 + 2.0 * (q as f64).log2();
        if (log_lhs - log_rhs).abs() > 1e-6 * log_rhs.abs().max(1.0) {
            return log_lhs < log_rhs;
        }
        let lhs = (BigUint::from(1u32) << (6 * self.two_pow as usize)) * BigUint::from(q) * BigUint::from(q);
        let mut rhs = BigUint::from(1u32) << 108usize;
        for &(p, k) in &self.inv_sqrt {
            rhs *= BigUint::from(p).pow(3 * k);
        }
        lhs <= rhs
    }
}

fn kappa_prime_power(p: u64, l: u32, p_divides_w: bool) -> Option<(u32, u32)> {
    // returns (power of two, k) with kappa(p^l) = 2^two / p^{k/2}; None is zero
    if p_divides_w {
        if p == 3 {
            return match l {
                0 => Some((0, 0)),
                1 => Some((1, 0)),
                2 => Some((0, 0)),
                _ => None,
            };
        }
        return match l {
            0 => Some((0, 0)),
            1 => Some((1, 1)),
            _ => None,
        };
    }
    let m = l / 3;
    match l % 3 {
        0 => Some((0, 2 * m)),
        1 => Some((1, 2 * m + 1)),
        _ => Some((0, 2 * m + 2)),
    }
}

pub fn kappa_exact_from(f: &Factorization, spec: &KappaSpec) -> KappaValue {
    let mut value = KappaValue {
        zero: false,
        two_pow: 0,
        inv_sqrt: Vec::new(),
    };
    for &(p, l) in f.factors() {
        match kappa_prime_power(p, l, spec.divides(p)) {
            None => {
                value.zero = true;
                value.inv_sqrt.clear();
                value.two_pow = 0;
                return value;
            }
            Some((two, k)) => {
                value.two_pow += two;
                if k > 0 {
                    value.inv_sqrt.push((p, k));
                }
            }
        }
    }
    value
}

pub fn kappa_exact(q: u64, spec: &KappaSpec) -> Result<KappaValue> {
    require_modulus("kappa", q)?;
    Ok(kappa_exact_from(&factorize(q)?, spec))
}

/// `kappa_w(q)`.
pub fn kappa(q: u64, spec: &KappaSpec) -> Result<f64> {
    Ok(kappa_exact(q, spec)?.to_f64())
}

fn check_coprime(op: &'static str, a: i64, q: u64) -> Result<()> {
    require_modulus(op, q)?;
    let g = gcd_signed(a, q);
    if g != 1 {
        return Err(Error::NotCoprime { op, a, q, gcd: g });
    }
    Ok(())
}

fn cubic_gauss_norm_sq(ring: &ResidueSums, a: i64, d: u64) -> f64 {
    let q = ring.modulus();
    let d = d % q;
    let d3 = mul_mod(mul_mod(d, d, q), d, q);
    let c = mul_mod(reduce(a, q), d3, q) as i64;
    let u = ring.hua(c, 0).norm();
    u * u
}

/// The local factor `sum_{d | w} mu(d) / (q d)^2 |U(q, a d^3)|^2`.
///
/// Divisors coprime to `q` leave `U(q, a d^3)` unchanged, so their part
/// collapses to the Euler product `prod_{p | w, p !| q} (1 - p^-2)`.
pub fn local_series(a: i64, q: u64, w: &SquarefreeModulus) -> Result<f64> {
    check_coprime("local_series", a, q)?;
    let (w0, w1) = w.split_by(q);
    let ring = ResidueSums::new(q);
    let q2 = (q as f64) * (q as f64);
    let mut inner = crate::numeric::CompensatedSum::default();
    for (d, mu) in w0.divisors_up_to(u64::MAX) {
        inner.add(mu as f64 * cubic_gauss_norm_sq(&ring, a, d) / (q2 * (d as f64).powi(2)));
    }
    let euler: f64 = w1.primes().iter().map(|&p| 1.0 - 1.0 / (p as f64).powi(2)).product();
    Ok(inner.value() * euler)
}

/// The literal divisor sum over every `d | w`; the test oracle for
/// [`local_series`].
pub fn local_series_literal(a: i64, q: u64, w: u64) -> Result<f64> {
    check_coprime("local_series", a, q)?;
    let f = factorize(w)?;
    if !f.is_squarefree() {
        return Err(Error::NotSquarefree(w));
    }
    let ring = ResidueSums::new(q);
    let q2 = (q as f64) * (q as f64);
    let mut total = crate::numeric::CompensatedSum::default();
    for (d, mu) in f.squarefree_divisors() {
        total.add(mu as f64 * cubic_gauss_norm_sq(&ring, a, d) / (q2 * (d as f64).powi(2)));
    }
    Ok(total.value())
}

/// The truncated divisor set `{d | w : d <= H, d |beta| <= (48 P^2)^-1}`.
pub fn truncated_divisors(w: &SquarefreeModulus, beta: f64, p: f64) -> Vec<(u64, i32)> {
    let h = p.sqrt();
    let limit = h.floor() as u64;
    let cap = 1.0 / (48.0 * p * p);
    w.divisors_up_to(limit)
        .into_iter()
        .filter(|&(d, _)| d as f64 * beta.abs() <= cap)
        .collect()
}

/// The local factor restricted to the truncated divisor set.
pub fn local_series_d(a: i64, q: u64, beta: f64, p: f64, w: &SquarefreeModulus) -> Result<f64> {
    check_coprime("local_series_d", a, q)?;
    let ring = ResidueSums::new(q);
    let q2 = (q as f64) * (q as f64);
    let mut total = crate::numeric::CompensatedSum::default();
    for (d, mu) in truncated_divisors(w, beta, p) {
        total.add(mu as f64 * cubic_gauss_norm_sq(&ring, a, d) / (q2 * (d as f64).powi(2)));
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::e;
    use std::f64::consts::TAU;

    fn brute(q: u64, f: impl Fn(u64) -> u128) -> Complex64 {
        (1..=q)
            .map(|x| e((f(x) % q as u128) as f64 / q as f64))
            .sum()
    }

    #[test]
    fn gauss_quad_examples() {
        let s = gauss_quad(1, 0, 0).unwrap();
        assert!((s.value - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let s = gauss_quad(3, 0, 1).unwrap();
        assert!((s.value - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-14);
        let s = gauss_quad(4, 1, 2).unwrap();
        assert!(s.norm() < 1e-14);
        assert!(gauss_quad(0, 1, 1).is_err());
    }

    #[test]
    fn gauss_quad_matches_brute_force() {
        for q in 1..40u64 {
            for a1 in 0..q as i64 {
                for a2 in [0, 1, 2, 5, q as i64 - 1] {
                    let direct = gauss_quad(q, a1, a2).unwrap().value;
                    let oracle = brute(q, |x| {
                        let x = x as u128;
                        (a1.rem_euclid(q as i64) as u128) * x + (a2.rem_euclid(q as i64) as u128) * x * x
                    });
                    assert!((direct - oracle).norm() < 1e-12, "q={q} a1={a1} a2={a2}");
                }
            }
        }
    }

    #[test]
    fn hua_sum_examples() {
        assert!((hua_sum(1, 5, 7).unwrap().value - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let u7 = hua_sum(7, 1, 0).unwrap();
        assert!((u7.value - Complex64::new(1.0 + 6.0 * (TAU / 7.0).cos(), 0.0)).norm() < 1e-13);
        assert!((u7.re() - 4.7409).abs() < 1e-4);
        let u9 = hua_sum(9, 1, 0).unwrap();
        assert!((u9.re() - 3.0 * (1.0 + 2.0 * (TAU / 9.0).cos())).abs() < 1e-13);
        assert!((u9.re() - 7.5963).abs() < 1e-4);
    }

    #[test]
    fn hua_sum_matches_brute_force() {
        for q in 1..50u64 {
            for a in [0i64, 1, 2, 3, 7, -4] {
                for b in [0i64, 1, 3, -2] {
                    let direct = hua_sum(q, a, b).unwrap().value;
                    let (ar, br) = (a.rem_euclid(q as i64) as u128, b.rem_euclid(q as i64) as u128);
                    let oracle = brute(q, |z| {
                        let z = z as u128;
                        ar * z * z * z + br * z
                    });
                    assert!((direct - oracle).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn restricted_cubic_examples() {
        assert!((restricted_cubic_sum(1, 1).unwrap().value - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((restricted_cubic_sum(2, 1).unwrap().value - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let u9 = restricted_cubic_sum(9, 1).unwrap();
        let oracle: Complex64 = (1..=9u64)
            .filter(|x| x % 3 != 0)
            .map(|x| e(((x * x * x) % 9) as f64 / 9.0))
            .sum();
        assert!((u9.value - oracle).norm() < 1e-13);
        assert!(u9.norm() > 1.0);
    }

    fn w_brute(r: u64, b: i64) -> Complex64 {
        let br = b.rem_euclid(r as i64) as u128;
        let mut total = Complex64::new(0.0, 0.0);
        for x in 1..=r {
            for y in 1..=r {
                if gcd(gcd(x, y), r) != 1 {
                    continue;
                }
                let x3 = (x as u128).pow(3);
                let y3 = (y as u128).pow(3);
                let k = (br * (x3 % r as u128) + (r as u128 - br) * (y3 % r as u128)) % r as u128;
                total += e(k as f64 / r as f64);
            }
        }
        total
    }

    #[test]
    fn paired_sum_examples() {
        assert!((paired_sum_w(1, 1).unwrap().value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((paired_sum_w(5, 1).unwrap().value - Complex64::new(-1.0, 0.0)).norm() < 1e-13);
        let w7 = paired_sum_w(7, 1).unwrap();
        let u = 1.0 + 6.0 * (TAU / 7.0).cos();
        assert!((w7.re() - (u * u - 1.0)).abs() < 1e-12);
        assert!((w7.re() - 21.476).abs() < 1e-3);
        assert!(w7.im().abs() < 1e-12);
    }

    #[test]
    fn paired_sum_matches_double_loop_and_mobius() {
        for r in 1..60u64 {
            for b in [1i64, 2, 5, -3] {
                let w = paired_sum_w(r, b).unwrap().value;
                let oracle = w_brute(r, b);
                assert!((w - oracle).norm() < 1e-10, "r={r} b={b}: {w} vs {oracle}");
                let m = paired_sum_w_mobius(r, b).unwrap();
                assert!((w.re - m).abs() < 1e-10 && w.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn twisted_sum_examples() {
        assert!((hua_t(1, 1, 1).unwrap().value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let t7 = hua_t(7, 1, 0).unwrap();
        let u = hua_sum(7, 1, 0).unwrap().norm();
        assert!((t7.re() - u * u).abs() < 1e-12);
        assert!((t7.re() - 22.476).abs() < 1e-3);
        let t4 = hua_t(4, 1, 2).unwrap();
        let oracle: Complex64 = (1..=4u64)
            .flat_map(|k| (1..=4u64).map(move |z| (k, z)))
            .map(|(k, z)| {
                let v = k * k * k + 3 * z * k * k + 3 * z * z * k + 2 * k;
                e((v % 4) as f64 / 4.0)
            })
            .sum();
        assert!((t4.value - oracle).norm() < 1e-13);
        let u4 = hua_sum(4, 1, 2).unwrap().norm();
        assert!((t4.re() - u4 * u4).abs() < 1e-12);
    }

    #[test]
    fn factored_paths_agree_with_direct() {
        for q in [12u64, 60, 360, 1001, 2 * 27 * 25, 4096 * 3] {
            for (a, b) in [(1i64, 0i64), (5, 3), (-7, 11)] {
                let d = gauss_quad_direct(q, a, b).unwrap().value;
                let f = gauss_quad_factored(q, a, b).unwrap().value;
                assert!((d - f).norm() < 1e-8 * q as f64, "S q={q}");
                let d = hua_sum_direct(q, a, b).unwrap().value;
                let f = hua_sum_factored(q, a, b).unwrap().value;
                assert!((d - f).norm() < 1e-8 * q as f64, "U q={q}");
            }
        }
        for r in [12u64, 45, 100, 210] {
            let d = paired_sum_w_direct(r, 1).unwrap().value;
            let f = paired_sum_w_factored(r, 1).unwrap().value;
            assert!((d - f).norm() < 1e-8 * (r * r) as f64, "W r={r}");
        }
    }

    #[test]
    fn kappa_examples() {
        let one = KappaSpec::concrete(1).unwrap();
        assert!((kappa(8, &one).unwrap() - 0.5).abs() < 1e-15);
        assert!((kappa(12, &one).unwrap() - 3f64.powf(-0.5)).abs() < 1e-15);
        let three = KappaSpec::concrete(3).unwrap();
        assert_eq!(kappa(9, &three).unwrap(), 1.0);
        assert_eq!(kappa(3, &three).unwrap(), 2.0);
        assert_eq!(kappa(27, &three).unwrap(), 0.0);
        assert_eq!(kappa(1, &three).unwrap(), 1.0);
        let two = KappaSpec::concrete(2).unwrap();
        assert_eq!(kappa(4, &two).unwrap(), 0.0);
        assert!((kappa(2, &two).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        // p !| w: kappa(p^{l+3}) = kappa(p^l) / p
        for l in 0..4u32 {
            let a = kappa(5u64.pow(l + 3), &one).unwrap();
            let b = kappa(5u64.pow(l), &one).unwrap();
            assert!((a - b / 5.0).abs() < 1e-15);
        }
        let pm = KappaSpec::Primorial(PrimorialSpec::new(4.2));
        assert_eq!(kappa(27, &pm).unwrap(), 0.0);
        assert!((kappa(25, &pm).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn kappa_cube_root_bound_small() {
        let one = KappaSpec::concrete(1).unwrap();
        for q in 1..2000 {
            let k = kappa_exact(q, &one).unwrap();
            assert!(k.within_cube_root_bound(q));
            assert!(k.to_f64() <= 2f64.powi(18) * (q as f64).powf(-1.0 / 3.0));
        }
    }

    #[test]
    fn local_series_examples() {
        let one = SquarefreeModulus::one();
        assert!((local_series(1, 1, &one).unwrap() - 1.0).abs() < 1e-15);
        let u = hua_sum(7, 1, 0).unwrap().norm();
        let s = local_series(1, 7, &one).unwrap();
        assert!((s - u * u / 49.0).abs() < 1e-14);
        assert!((s - 0.4587).abs() < 1e-4);
        let seven = SquarefreeModulus::new(7).unwrap();
        // d = 7 contributes -|U(7, 343)|^2 / 7^4 = -7^2 / 7^4
        let expected = u * u / 49.0 - 49.0 / (49.0 * 49.0);
        assert!((local_series(1, 7, &seven).unwrap() - expected).abs() < 1e-14);
        assert!((local_series_literal(1, 7, 7).unwrap() - expected).abs() < 1e-14);
        assert!(local_series(7, 7, &one).is_err());
    }

    #[test]
    fn local_series_factorized_matches_literal() {
        for q in 1..80u64 {
            for w in [1u64, 2, 6, 30, 210, 2310] {
                let wm = SquarefreeModulus::new(w).unwrap();
                for a in (1..q.max(2) as i64).filter(|&a| gcd(a as u64, q) == 1).take(4) {
                    let fast = local_series(a, q, &wm).unwrap();
                    let slow = local_series_literal(a, q, w).unwrap();
                    assert!((fast - slow).abs() < 1e-12, "a={a} q={q} w={w}");
                }
            }
        }
    }
}
