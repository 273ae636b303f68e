//! Floating-point plumbing shared by the summation kernels.
//!
//! Phases are kept as double-double fractions of a turn so that products
//! `alpha * m` with `m` up to ~2^60 still reduce mod 1 with absolute error
//! far below 1e-12. Accumulation of complex terms is compensated
//! (Neumaier variant of Kahan summation) on each component.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::ops::{Add, Neg, Sub};

pub const EPS: f64 = f64::EPSILON;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (h, l) = fast_two_sum(hi, lo);
        Self { hi: h, lo: l }
    }

    /// `num / den` correctly rounded to about 106 bits; both must be below 2^53.
    pub fn from_ratio(num: i64, den: u64) -> Self {
        debug_assert!(den > 0);
        let n = num as f64;
        let d = den as f64;
        let q1 = n / d;
        let r = (-q1).mul_add(d, n);
        let q2 = r / d;
        Self::renorm(q1, q2)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Product with an integer-valued double (exact input, |m| < 2^53).
    #[inline]
    pub fn mul_f64(self, m: f64) -> Self {
        let (p, e) = two_prod(self.hi, m);
        let e = self.lo.mul_add(m, e);
        Self::renorm(p, e)
    }

    /// Product with an arbitrary `u64`, split so each factor is exact.
    pub fn mul_u64(self, m: u64) -> Self {
        if m < (1u64 << 53) {
            return self.mul_f64(m as f64);
        }
        let high = (m >> 32) as f64;
        let low = (m & 0xffff_ffff) as f64;
        let a = self.mul_f64(high).mul_f64(4_294_967_296.0);
        a + self.mul_f64(low)
    }

    /// Fractional part in `[0, 1)`, keeping double-double accuracy.
    ///
    /// A value just below 1 may come back as `hi == 1.0` with `lo < 0`.
    pub fn fract(self) -> Self {
        // `hi - floor(hi)` is inexact for negative `hi`; go through two_sum
        let mut r = self + Self::from_f64(-self.hi.floor());
        let f = r.hi.floor();
        if f != 0.0 {
            r = r + Self::from_f64(-f);
        }
        if r.hi < 0.0 || (r.hi == 0.0 && r.lo < 0.0) {
            r = r + Self::from_f64(1.0);
        }
        r
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let e = e + self.lo + rhs.lo;
        Self::renorm(s, e)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

/// A frequency reduced mod 1, stored in double-double.
///
/// Reduction on construction makes `Freq::new(a + 1)` bit-identical to
/// `Freq::new(a)` whenever both are exactly representable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Freq(DoubleDouble);

impl Freq {
    pub const ZERO: Self = Self(DoubleDouble::ZERO);

    pub fn new(x: DoubleDouble) -> Self {
        Self(x.fract())
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(DoubleDouble::from_f64(x))
    }

    /// `a/q + beta`, reduced mod 1.
    pub fn from_rational_offset(a: i64, q: u64, beta: f64) -> Self {
        Self::new(DoubleDouble::from_ratio(a, q) + DoubleDouble::from_f64(beta))
    }

    #[inline]
    pub fn dd(self) -> DoubleDouble {
        self.0
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.0.to_f64()
    }

    /// `(self * m) mod 1`.
    #[inline]
    pub fn times(self, m: u64) -> Self {
        Self::new(self.0.mul_u64(m))
    }

    /// `(self * m) mod 1` for signed `m`.
    pub fn times_signed(self, m: i64) -> Self {
        let t = self.times(m.unsigned_abs());
        if m < 0 {
            -t
        } else {
            t
        }
    }

    /// Phase of `self * m` as a fraction of a turn in `[0, 1)`.
    #[inline]
    pub fn phase_of(self, m: u64) -> f64 {
        self.0.mul_u64(m).fract().to_f64()
    }
}

impl Add for Freq {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.0 + rhs.0)
    }
}

impl Neg for Freq {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.0)
    }
}

/// `e(t) = exp(2 pi i t)` for a phase measured in turns.
#[inline]
pub fn e(t: f64) -> Complex64 {
    // Centre the argument so sin/cos see |x| <= pi.
    let t = t - t.round();
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// `e(k / q)` for integers.
#[inline]
pub fn e_ratio(k: i64, q: u64) -> Complex64 {
    let r = k.rem_euclid(q as i64) as f64;
    e(r / q as f64)
}

/// Table of the `q`-th roots of unity, `table[k] = e(k/q)`.
#[derive(Clone, Debug)]
pub struct RootTable {
    q: u64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1);
        let roots = (0..q).map(|k| e_ratio(k as i64, q)).collect();
        Self { q, roots }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn get(&self, k: u64) -> Complex64 {
        self.roots[(k % self.q) as usize]
    }

    /// Caller guarantees `k < q`.
    #[inline]
    pub fn get_reduced(&self, k: u64) -> Complex64 {
        self.roots[k as usize]
    }
}

/// Neumaier-compensated accumulator for real numbers.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex accumulator that also tracks an error budget.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexAccumulator {
    re: CompensatedSum,
    im: CompensatedSum,
    terms: u64,
    magnitude: f64,
    extra_err: f64,
}

impl ComplexAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
        self.terms += 1;
    }

    /// Adds a block that itself summarises `terms` unit-size summands.
    pub fn push_block(&mut self, block: &SumValue) {
        self.re.add(block.value.re);
        self.im.add(block.value.im);
        self.terms += block.terms;
        self.extra_err += block.err_budget;
        self.magnitude = self.magnitude.max(block.value.norm());
    }

    /// Records additional per-term error (e.g. rotor drift) in the budget.
    pub fn add_error(&mut self, err: f64) {
        self.extra_err += err;
    }

    pub fn finish(&self) -> SumValue {
        let value = Complex64::new(self.re.value(), self.im.value());
        let magnitude = self.magnitude.max(value.norm()).max(1.0);
        SumValue {
            value,
            terms: self.terms,
            err_budget: 4.0 * EPS * self.terms as f64 * magnitude + self.extra_err,
        }
    }
}

/// A complex sum together with its term count and rounding budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumValue {
    pub value: Complex64,
    pub terms: u64,
    pub err_budget: f64,
}

impl SumValue {
    pub fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            terms: 0,
            err_budget: 0.0,
        }
    }

    pub fn exact(value: Complex64, terms: u64) -> Self {
        Self {
            value,
            terms,
            err_budget: 4.0 * EPS * terms as f64 * value.norm().max(1.0),
        }
    }

    #[inline]
    pub fn re(&self) -> f64 {
        self.value.re
    }

    #[inline]
    pub fn im(&self) -> f64 {
        self.value.im
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    /// Product of two independent sums (CRT factors); term counts multiply.
    pub fn mul(&self, other: &SumValue) -> SumValue {
        let value = self.value * other.value;
        SumValue {
            value,
            terms: self.terms.saturating_mul(other.terms),
            err_budget: self.err_budget * other.norm().max(1.0)
                + other.err_budget * self.norm().max(1.0)
                + 4.0 * EPS * value.norm(),
        }
    }

    pub fn scale(&self, s: f64) -> SumValue {
        SumValue {
            value: self.value * s,
            terms: self.terms,
            err_budget: self.err_budget * s.abs(),
        }
    }
}

/// Fixed-order compensated reduction of per-block sums.
pub fn reduce_in_order<'a, I>(blocks: I) -> SumValue
where
    I: IntoIterator<Item = &'a SumValue>,
{
    let mut acc = ComplexAccumulator::new();
    for b in blocks {
        acc.push_block(b);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fract_is_in_unit_interval() {
        for x in [-3.75, -1.0, -0.0, 0.0, 0.25, 1.0, 7.5, 1e12 + 0.125] {
            let f = DoubleDouble::from_f64(x).fract();
            assert!(f.hi >= 0.0 && f.hi <= 1.0 && f.to_f64() <= 1.0, "{x} -> {f:?}");
        }
    }

    #[test]
    fn negation_is_exact() {
        for x in [0.1, 0.3, 1e-9, 0.7777777] {
            let sum = Freq::from_f64(x).dd() + Freq::from_f64(-x).dd();
            assert_eq!(sum.hi, 1.0);
            assert_eq!(sum.lo, 0.0);
        }
    }

    #[test]
    fn freq_reduction_is_exact_under_integer_shift() {
        for x in [0.3, 0.123456789, 0.999, 1e-9] {
            let a = Freq::from_f64(x);
            let b = Freq::new(DoubleDouble::from_f64(x) + DoubleDouble::from_f64(1.0));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ratio_times_denominator_is_integer() {
        let f = Freq::from_rational_offset(1, 7, 0.0);
        let p = f.phase_of(7);
        assert!(p < 1e-25 || 1.0 - p < 1e-15, "{p}");
        let f = Freq::from_rational_offset(3, 10, 0.0);
        // 0.3 * 10^12 is an integer, phase must vanish to DD accuracy
        let p = f.phase_of(1_000_000_000_000);
        assert!(p.min(1.0 - p) < 1e-12, "{p}");
    }

    #[test]
    fn large_products_keep_phase_accuracy() {
        // (1/3) * m mod 1 for m = 3k + 1 is 1/3
        let f = Freq::from_rational_offset(1, 3, 0.0);
        let m = 3 * 123_456_789_012_345u64 + 1;
        assert!((f.phase_of(m) - 1.0 / 3.0).abs() < 1e-13);
        let m = 3 * 5_000_000_000_000_000u64 + 2;
        assert!((f.phase_of(m) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn root_table_matches_direct() {
        let t = RootTable::new(12);
        for k in 0..12 {
            assert!((t.get(k) - e(k as f64 / 12.0)).norm() < 1e-15);
        }
        assert!((t.get(3) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }
}
