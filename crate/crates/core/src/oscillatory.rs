//! Oscillatory integrals with a quadratic phase and the two-dimensional
//! integral `K(beta)`.
//!
//! Intervals are cut so that no panel carries more than one cycle of the
//! phase, with a forced cut at the stationary point; each panel is
//! integrated with 15-point Gauss–Legendre and compared against its two
//! halves.
//!
//! `K(beta) = int_0^H int_P^{2P} e(beta Psi(u, v)) du dv` with
//! `Psi(u, v) = (u + v)^3 - u^3` is evaluated by collapsing to the phase
//! variable `t = Psi(u, v)`: `K = int_0^{T} e(beta t) rho(t) dt` where
//! `rho(t) = int_{u_lo(t)}^{2P} (t + u^3)^{-2/3} / 3 du` is smooth and
//! non-oscillatory. The nested form `int_0^H e(beta v^3) J(3 beta v^2,
//! 3 beta v; P) dv` is kept as [`integral_k_nested`] for small sizes.

use crate::numeric::{e, CompensatedSum, EPS};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::OnceLock;

const GL_ORDER: usize = 15;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static TABLE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = [(0.0, 0.0); GL_ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_n and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

/// Gauss–Legendre on `[a, b]`.
fn gl<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for &(x, w) in gauss_legendre() {
        let v = f(c + r * x) * w;
        re.add(v.re);
        im.add(v.im);
    }
    Complex64::new(re.value(), im.value()) * r
}

fn gl_real<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut s = CompensatedSum::default();
    for &(x, w) in gauss_legendre() {
        s.add(f(c + r * x) * w);
    }
    s.value() * r
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub panels: usize,
}

impl QuadratureResult {
    fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            abs_error_estimate: 0.0,
            panels: 0,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            value: self.value.conj(),
            ..*self
        }
    }
}

/// Integrates `f` over the given panels; each panel is refined into
/// `2^refine` equal pieces before the half-panel comparison.
fn integrate_panels<F>(f: &F, cuts: &[f64], refine: u32, phase_scale: f64) -> QuadratureResult
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let pieces = 1usize << refine;
    let mut spans = Vec::with_capacity(cuts.len().saturating_sub(1) * pieces);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        for k in 0..pieces {
            let lo = a + (b - a) * k as f64 / pieces as f64;
            let hi = if k + 1 == pieces { b } else { a + (b - a) * (k + 1) as f64 / pieces as f64 };
            spans.push((lo, hi));
        }
    }
    let parts: Vec<(Complex64, f64)> = spans
        .par_iter()
        .map(|&(a, b)| {
            let whole = gl(f, a, b);
            let m = 0.5 * (a + b);
            let halves = gl(f, a, m) + gl(f, m, b);
            // rounding floor: summation plus the absolute error of the phase
            let floor = (b - a) * EPS * (32.0 + 8.0 * phase_scale);
            (halves, (whole - halves).norm() + floor)
        })
        .collect();
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    let mut err = 0.0;
    for (v, de) in &parts {
        re.add(v.re);
        im.add(v.im);
        err += de;
    }
    QuadratureResult {
        value: Complex64::new(re.value(), im.value()),
        abs_error_estimate: err,
        panels: spans.len().max(1),
    }
}

/// Cut points of `[a, b]` so that `phi(u) = b1 u + b2 u^2` moves by at most
/// one cycle per panel, with a cut at the stationary point when interior.
fn phase_cuts(b1: f64, b2: f64, a: f64, b: f64) -> Vec<f64> {
    let mut monotone = vec![a];
    if b2 != 0.0 {
        let s = -b1 / (2.0 * b2);
        if s > a && s < b {
            monotone.push(s);
        }
    }
    monotone.push(b);
    let phi = |u: f64| b1 * u + b2 * u * u;
    let mut cuts = vec![a];
    for w in monotone.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let total = phi(hi) - phi(lo);
        let n = total.abs().ceil().max(1.0);
        if n > 1.0 {
            let sigma = total.signum();
            let g = b1 + 2.0 * b2 * lo;
            let step = total / n;
            for k in 1..n as u64 {
                let dt = step * k as f64;
                // root of g s + b2 s^2 = dt in the cancellation-free form
                let disc = (g * g + 4.0 * b2 * dt).max(0.0);
                let s = 2.0 * dt / (g + sigma * disc.sqrt());
                let u = (lo + s).clamp(lo, hi);
                if u > *cuts.last().unwrap() {
                    cuts.push(u);
                }
            }
        }
        if hi > *cuts.last().unwrap() {
            cuts.push(hi);
        }
    }
    cuts
}

/// `int_a^b e(b1 u + b2 u^2) du`.
pub fn quadratic_phase_integral(b1: f64, b2: f64, a: f64, b: f64, refine: u32) -> QuadratureResult {
    if b <= a {
        return QuadratureResult::zero();
    }
    let cuts = phase_cuts(b1, b2, a, b);
    let scale = (b1 * b).abs() + (b2 * b * b).abs() + (b1 * a).abs() + (b2 * a * a).abs();
    let f = |u: f64| e(b1 * u + b2 * u * u);
    integrate_panels(&f, &cuts, refine, scale)
}

/// `I(beta1, beta2) = int_0^X e(beta1 u + beta2 u^2) du`.
pub fn integral_i(beta1: f64, beta2: f64, x: f64) -> QuadratureResult {
    quadratic_phase_integral(beta1, beta2, 0.0, x, 0)
}

/// `J(beta1, beta2; X) = int_X^{2X} e(beta1 u + beta2 u^2) du`.
pub fn integral_j(beta1: f64, beta2: f64, x: f64) -> QuadratureResult {
    quadratic_phase_integral(beta1, beta2, x, 2.0 * x, 0)
}

/// `Psi(u, v) = (u + v)^3 - u^3 = v^3 + 3 u v^2 + 3 u^2 v`.
pub fn psi(u: f64, v: f64) -> f64 {
    v * (v * v + 3.0 * u * v + 3.0 * u * u)
}

/// The smallest `u >= 0` with `Psi(u, h) >= t`, or 0 if `t <= h^3`.
fn u_min(t: f64, h: f64) -> f64 {
    let c = t - h * h * h;
    if c <= 0.0 {
        return 0.0;
    }
    2.0 * c / (3.0 * h * h + (9.0 * h.powi(4) + 12.0 * h * c).sqrt())
}

/// Density of `t = Psi(u, v)` over `[P, 2P] x [0, H]`.
pub fn phase_density(t: f64, h: f64, p: f64) -> f64 {
    let lo = u_min(t, h).max(p);
    let hi = 2.0 * p;
    if lo >= hi {
        return 0.0;
    }
    let f = |u: f64| (t + u * u * u).powf(-2.0 / 3.0) / 3.0;
    let m = 0.5 * (lo + hi);
    gl_real(&f, lo, m) + gl_real(&f, m, hi)
}

/// Chebyshev interpolant of a smooth function on `[a, b]`.
#[derive(Clone, Debug)]
struct ChebPiece {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl ChebPiece {
    fn fit(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let theta = |j: usize| std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
        let samples: Vec<f64> = (0..n).map(|j| f(c + r * theta(j).cos())).collect();
        let coeffs = (0..n)
            .map(|k| {
                let mut s = CompensatedSum::default();
                for (j, &y) in samples.iter().enumerate() {
                    s.add(y * (k as f64 * theta(j)).cos());
                }
                s.value() * 2.0 / n as f64
            })
            .collect();
        Self { a, b, coeffs }
    }

    fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + 0.5 * self.coeffs[0]
    }

    fn tail(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n - 1].abs() + self.coeffs[n - 2].abs()
    }
}

/// `K(beta)` for fixed `(H, P)`; the phase density is tabulated once as a
/// piecewise Chebyshev series on each side of its kink at `Psi(P, H)`.
#[derive(Clone, Debug)]
pub struct KIntegral {
    h: f64,
    p: f64,
    t_kink: f64,
    t_max: f64,
    pieces: Vec<ChebPiece>,
    fit_error: f64,
}

impl KIntegral {
    const PIECES_PER_SIDE: usize = 16;
    const DEGREE: usize = 24;

    pub fn new(h: f64, p: f64) -> Self {
        let t_kink = psi(p, h);
        let t_max = psi(2.0 * p, h);
        let rho = |t: f64| phase_density(t, h, p);
        let mut pieces = Vec::new();
        for (lo, hi) in [(0.0, t_kink), (t_kink, t_max)] {
            let m = Self::PIECES_PER_SIDE;
            for k in 0..m {
                let a = lo + (hi - lo) * k as f64 / m as f64;
                let b = if k + 1 == m { hi } else { lo + (hi - lo) * (k + 1) as f64 / m as f64 };
                pieces.push(ChebPiece::fit(&rho, a, b, Self::DEGREE));
            }
        }
        let fit_error = pieces.iter().map(ChebPiece::tail).fold(0.0, f64::max);
        Self {
            h,
            p,
            t_kink,
            t_max,
            pieces,
            fit_error,
        }
    }

    /// The tabulated density; zero outside `[0, T]`.
    pub fn density(&self, t: f64) -> f64 {
        if !(0.0..=self.t_max).contains(&t) {
            return 0.0;
        }
        let side = if t <= self.t_kink { 0 } else { 1 };
        let (lo, hi) = if side == 0 { (0.0, self.t_kink) } else { (self.t_kink, self.t_max) };
        let m = Self::PIECES_PER_SIDE;
        let k = (((t - lo) / (hi - lo)) * m as f64).floor().clamp(0.0, (m - 1) as f64) as usize;
        self.pieces[side * m + k].eval(t)
    }

    /// Largest trailing Chebyshev coefficient, a proxy for the fit error.
    pub fn fit_error(&self) -> f64 {
        self.fit_error
    }

    pub fn eval(&self, beta: f64) -> QuadratureResult {
        self.eval_refined(beta, 0)
    }

    pub fn eval_refined(&self, beta: f64, refine: u32) -> QuadratureResult {
        let per_cycle = if beta == 0.0 { f64::INFINITY } else { 1.0 / beta.abs() };
        let mut cuts = vec![0.0];
        for (lo, hi) in [(0.0, self.t_kink), (self.t_kink, self.t_max)] {
            let n = ((hi - lo) / per_cycle).ceil().max(1.0) as u64;
            for k in 1..=n {
                cuts.push(if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 });
            }
        }
        let f = |t: f64| e(beta * t) * self.density(t);
        let mut out = integrate_panels(&f, &cuts, refine, (beta * self.t_max).abs());
        out.abs_error_estimate += self.fit_error * self.t_max + 64.0 * EPS * self.h * self.p;
        out
    }
}

/// `K(beta)` through the phase density; `refine` subdivides every panel.
pub fn integral_k_refined(beta: f64, h: f64, p: f64, refine: u32) -> QuadratureResult {
    if h <= 0.0 || p <= 0.0 {
        return QuadratureResult::zero();
    }
    KIntegral::new(h, p).eval_refined(beta, refine)
}

/// `K(beta) = int_0^H int_P^{2P} e(beta (v^3 + 3 u v^2 + 3 u^2 v)) du dv`.
pub fn integral_k(beta: f64, h: f64, p: f64) -> QuadratureResult {
    integral_k_refined(beta, h, p, 0)
}

/// `K(beta)` as `int_0^H e(beta v^3) J(3 beta v^2, 3 beta v; P) dv`.
///
/// Cost grows like `(beta H P^2)^2`; meant as a cross-check at small sizes.
pub fn integral_k_nested(beta: f64, h: f64, p: f64) -> QuadratureResult {
    let cycles = (beta * psi(2.0 * p, h)).abs();
    let n = cycles.ceil().max(1.0) as usize * 2;
    let cuts: Vec<f64> = (0..=n).map(|k| h * k as f64 / n as f64).collect();
    let inner = |v: f64| e(beta * v * v * v) * integral_j(3.0 * beta * v * v, 3.0 * beta * v, p).value;
    integrate_panels(&inner, &cuts, 0, cycles)
}
