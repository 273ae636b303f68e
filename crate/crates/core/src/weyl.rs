//! Incomplete Weyl-type sums: the quadratic sums `f`, `g`, the differenced
//! cubic sum `G(alpha; X, Y)` and `F_w(alpha)`.
//!
//! All of them reduce to runs of a quadratic phase `theta(x) = c0 + c1 x +
//! c2 x^2` over consecutive integers. The kernel walks such a run with a
//! rotor (`z *= r; r *= e(2 c2)`) and re-anchors both `z` and `r` from the
//! exact double-double phase every [`ANCHOR_STRIDE`] steps.

use crate::error::{Error, Result};
use crate::ntheory::{gcd, SquarefreeModulus};
use crate::numeric::{e, ComplexAccumulator, Freq, SumValue, EPS};
use num_complex::Complex64;
use rayon::prelude::*;

pub const ANCHOR_STRIDE: u64 = 1024;

/// `theta(x) = c0 + c1 x + c2 x^2`, each coefficient reduced mod 1.
#[derive(Clone, Copy, Debug)]
pub struct QuadPhase {
    pub c0: Freq,
    pub c1: Freq,
    pub c2: Freq,
}

impl QuadPhase {
    pub fn new(c0: Freq, c1: Freq, c2: Freq) -> Self {
        Self { c0, c1, c2 }
    }

    /// The exact phase at `x`, reduced mod 1.
    #[inline]
    pub fn at(&self, x: u64) -> Freq {
        let x2 = (x as u128 * x as u128) as u64;
        debug_assert!((x as u128 * x as u128) < (1u128 << 64));
        self.c0 + self.c1.times(x) + self.c2.times(x2)
    }

    /// `theta(x + 1) - theta(x) = c1 + c2 (2x + 1)`.
    #[inline]
    fn step_at(&self, x: u64) -> Freq {
        self.c1 + self.c2.times(2 * x + 1)
    }
}

/// How each term's phase is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// Rotor recurrence with periodic re-anchoring.
    Rotor,
    /// Exact phase and a fresh `sin_cos` per term; the reference path.
    Exact,
}

/// `sum_{lo < x <= hi, keep(x)} e(theta(x))`.
pub fn phase_run(
    phase: &QuadPhase,
    lo: u64,
    hi: u64,
    kernel: Kernel,
    keep: Option<&dyn Fn(u64) -> bool>,
) -> SumValue {
    let mut acc = ComplexAccumulator::new();
    if hi <= lo {
        return acc.finish();
    }
    match kernel {
        Kernel::Exact => {
            for x in lo + 1..=hi {
                if keep.map_or(true, |k| k(x)) {
                    acc.push(e(phase.at(x).to_f64()));
                }
            }
        }
        Kernel::Rotor => {
            let curvature = e((phase.c2 + phase.c2).to_f64());
            let mut x = lo + 1;
            while x <= hi {
                let block_end = hi.min(x + ANCHOR_STRIDE - 1);
                let mut z = e(phase.at(x).to_f64());
                let mut r = e(phase.step_at(x).to_f64());
                loop {
                    if keep.map_or(true, |k| k(x)) {
                        acc.push(z);
                    }
                    if x == block_end {
                        break;
                    }
                    z *= r;
                    r *= curvature;
                    x += 1;
                }
                x = block_end + 1;
            }
            // each rotor step adds at most a few ulps of drift
            let n = hi - lo;
            acc.add_error(n as f64 * (ANCHOR_STRIDE as f64) * 4.0 * EPS);
        }
    }
    acc.finish()
}

/// `f(alpha1, alpha2) = sum_{x <= X} e(alpha1 x + alpha2 x^2)`.
pub fn quad_f(alpha1: f64, alpha2: f64, x: f64) -> SumValue {
    quad_f_freq(Freq::from_f64(alpha1), Freq::from_f64(alpha2), x)
}

pub fn quad_f_freq(alpha1: Freq, alpha2: Freq, x: f64) -> SumValue {
    let phase = QuadPhase::new(Freq::ZERO, alpha1, alpha2);
    phase_run(&phase, 0, floor_u64(x), Kernel::Rotor, None)
}

/// `g(alpha1, alpha2; X) = sum_{X < x <= 2X} e(alpha1 x + alpha2 x^2)`.
pub fn quad_g(alpha1: f64, alpha2: f64, x: f64) -> SumValue {
    quad_g_freq(Freq::from_f64(alpha1), Freq::from_f64(alpha2), x)
}

pub fn quad_g_freq(alpha1: Freq, alpha2: Freq, x: f64) -> SumValue {
    let phase = QuadPhase::new(Freq::ZERO, alpha1, alpha2);
    phase_run(&phase, floor_u64(x), floor_u64(2.0 * x), Kernel::Rotor, None)
}

fn floor_u64(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        x.floor() as u64
    }
}

/// `floor(m P / d)`, exact whenever `P` is an integer below `2^53`.
pub fn floor_scaled(p: f64, m: u64, d: u64) -> u64 {
    if p >= 0.0 && p.fract() == 0.0 && p < 9.0e15 {
        ((p as u128 * m as u128) / d as u128) as u64
    } else {
        floor_u64(m as f64 * p / d as f64)
    }
}

/// `floor(sqrt(P) / d)`, computed through `isqrt(floor(P))`.
pub fn floor_sqrt_over(p: f64, d: u64) -> u64 {
    isqrt(floor_u64(p)) / d
}

pub fn isqrt(n: u64) -> u64 {
    let n = n as u128;
    let mut r = (n as f64).sqrt() as u128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r as u64
}

/// The phase of the inner sum of `G` at fixed `h`:
/// `alpha h (3x^2 + 3xh + h^2) = alpha h^3 + 3 alpha h^2 x + 3 alpha h x^2`.
fn cubic_difference_phase(alpha: Freq, h: u64) -> QuadPhase {
    QuadPhase::new(
        alpha.times(h * h * h),
        alpha.times(3 * h * h),
        alpha.times(3 * h),
    )
}

/// `G` over explicit integer ranges `1 <= h <= h_max`, `x_lo < x <= x_hi`,
/// parallel over `h` with results reduced in `h` order.
fn cubic_g_ranges(alpha: Freq, h_max: u64, x_lo: u64, x_hi: u64, kernel: Kernel) -> SumValue {
    let rows: Vec<SumValue> = (1..=h_max)
        .into_par_iter()
        .map(|h| phase_run(&cubic_difference_phase(alpha, h), x_lo, x_hi, kernel, None))
        .collect();
    crate::numeric::reduce_in_order(&rows)
}

/// `G(alpha; X, Y) = sum_{h <= Y} sum_{X < x <= 2X} e(alpha h (3x^2 + 3xh + h^2))`.
pub fn cubic_g(alpha: f64, x: f64, y: f64) -> Result<SumValue> {
    cubic_g_freq(Freq::from_f64(alpha), x, y)
}

pub fn cubic_g_freq(alpha: Freq, x: f64, y: f64) -> Result<SumValue> {
    if !(1.0 <= y && y <= x) {
        return Err(Error::Precondition {
            op: "cubic_G",
            requirement: format!("1 <= Y <= X, got X = {x}, Y = {y}"),
        });
    }
    Ok(cubic_g_ranges(alpha, floor_u64(y), floor_u64(x), floor_u64(2.0 * x), Kernel::Rotor))
}

/// Parameters of `F_w`: the size `P`, `H = sqrt(P)` and the modulus `w`.
///
/// Primes of `w` above `H` cannot divide any `h <= H`, so they are dropped
/// on construction; `F_w` is unchanged by this.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylParams {
    p: f64,
    h: f64,
    w: SquarefreeModulus,
}

impl WeylParams {
    pub fn new(p: f64, w: SquarefreeModulus) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Precondition {
                op: "WeylParams",
                requirement: format!("P >= 1, got {p}"),
            });
        }
        let h_floor = floor_sqrt_over(p, 1);
        Ok(Self {
            p,
            h: p.sqrt(),
            w: w.truncated(h_floor),
        })
    }

    pub fn with_w(p: f64, w: u64) -> Result<Self> {
        Self::new(p, SquarefreeModulus::new(w)?)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn w(&self) -> &SquarefreeModulus {
        &self.w
    }

    /// `floor(H / d)`.
    pub fn h_max(&self, d: u64) -> u64 {
        floor_sqrt_over(self.p, d)
    }

    /// `(floor(P/d), floor(2P/d))`, the `x`-range of `G(.; P/d, H/d)`.
    pub fn x_range(&self, d: u64) -> (u64, u64) {
        (floor_scaled(self.p, 1, d), floor_scaled(self.p, 2, d))
    }

    /// Divisors `d | w` with `d <= H`, with `mu(d)`.
    pub fn divisors(&self) -> Vec<(u64, i32)> {
        self.w.divisors_up_to(self.h_max(1))
    }

    /// The trivial bound `H P` used to scale tolerances.
    pub fn trivial_bound(&self) -> f64 {
        self.h * self.p
    }
}

fn gcd_with_w(h: u64, w: &SquarefreeModulus) -> u64 {
    w.primes().iter().filter(|&&p| h % p == 0).product()
}

fn f_w_direct_with(alpha: Freq, params: &WeylParams, kernel: Kernel) -> SumValue {
    let (lo, hi) = params.x_range(1);
    let rows: Vec<SumValue> = (1..=params.h_max(1))
        .into_par_iter()
        .map(|h| {
            let phase = cubic_difference_phase(alpha, h);
            let g = gcd_with_w(h, params.w());
            if g == 1 {
                phase_run(&phase, lo, hi, kernel, None)
            } else {
                let keep = move |x: u64| gcd(x, g) == 1;
                phase_run(&phase, lo, hi, kernel, Some(&keep))
            }
        })
        .collect();
    crate::numeric::reduce_in_order(&rows)
}

/// `F_w(alpha) = sum_{h <= H} sum_{P < x <= 2P, (x,h,w) = 1} e(alpha((x+h)^3 - x^3))`.
pub fn f_w_direct(alpha: f64, params: &WeylParams) -> SumValue {
    f_w_direct_freq(Freq::from_f64(alpha), params)
}

pub fn f_w_direct_freq(alpha: Freq, params: &WeylParams) -> SumValue {
    f_w_direct_with(alpha, params, Kernel::Rotor)
}

/// [`f_w_direct`] with a fresh `sin_cos` per term.
pub fn f_w_direct_exact(alpha: Freq, params: &WeylParams) -> SumValue {
    f_w_direct_with(alpha, params, Kernel::Exact)
}

/// `F_w(alpha) = sum_{d | w} mu(d) G(alpha d^3; P/d, H/d)`; divisors above
/// `H` give empty sums and are skipped.
pub fn f_w_mobius(alpha: f64, params: &WeylParams) -> SumValue {
    f_w_mobius_freq(Freq::from_f64(alpha), params)
}

pub fn f_w_mobius_freq(alpha: Freq, params: &WeylParams) -> SumValue {
    let mut acc = ComplexAccumulator::new();
    for (d, mu) in params.divisors() {
        let (lo, hi) = params.x_range(d);
        let g = cubic_g_ranges(alpha.times(d * d * d), params.h_max(d), lo, hi, Kernel::Rotor);
        acc.push_block(&g.scale(mu as f64));
    }
    acc.finish()
}

/// `F_w` through the expansion in `h`:
/// `sum_{d | w} mu(d) sum_{h <= H/d} e(alpha d^3 h^3) g(3 alpha d^3 h^2, 3 alpha d^3 h; P/d)`.
pub fn f_w_h_expansion(alpha: Freq, params: &WeylParams) -> SumValue {
    let mut acc = ComplexAccumulator::new();
    for (d, mu) in params.divisors() {
        let ad3 = alpha.times(d * d * d);
        let (lo, hi) = params.x_range(d);
        let rows: Vec<SumValue> = (1..=params.h_max(d))
            .into_par_iter()
            .map(|h| {
                let twist = e(ad3.times(h * h * h).to_f64());
                let phase = QuadPhase::new(Freq::ZERO, ad3.times(3 * h * h), ad3.times(3 * h));
                let g = phase_run(&phase, lo, hi, Kernel::Rotor, None);
                SumValue {
                    value: g.value * twist,
                    ..g
                }
            })
            .collect();
        let block = crate::numeric::reduce_in_order(&rows);
        acc.push_block(&block.scale(mu as f64));
    }
    acc.finish()
}

/// `F_w(0)`, counted exactly.
pub fn f_w_at_zero(params: &WeylParams) -> u64 {
    let (lo, hi) = params.x_range(1);
    (1..=params.h_max(1))
        .map(|h| {
            let g = gcd_with_w(h, params.w());
            (lo + 1..=hi).filter(|&x| gcd(x, g) == 1).count() as u64
        })
        .sum()
}

pub fn conj(z: SumValue) -> SumValue {
    SumValue {
        value: Complex64::new(z.value.re, -z.value.im),
        ..z
    }
}
