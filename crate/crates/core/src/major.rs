//! Major-arc approximation of `F_w`: the truncated expansion `F*_w`, the
//! main term `S_0(alpha, w) K(beta)` and its untruncated counterpart.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arcs::{classify, Alpha, ArcKind, RationalApproximant};
use crate::complete_sums::{local_series, local_series_d, truncated_divisors, KappaSpec, ResidueSums};
use crate::error::{Error, Result};
use crate::ntheory::{gcd, gcd_signed, PrimorialSpec, SquarefreeModulus};
use crate::numeric::{e, ComplexAccumulator, Freq, SumValue};
use crate::oscillatory::{integral_i, integral_j, KIntegral};
use crate::weyl::{f_w_mobius_freq, isqrt, quad_f_freq, WeylParams};

/// The weight `w`: a fixed squarefree integer, or the primorial of all
/// primes up to `P^{1/4}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WeightSpec {
    Fixed(u64),
    Primorial,
}

impl WeightSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "primorial" | "varpi" => Ok(Self::Primorial),
            t => t
                .parse::<u64>()
                .map(Self::Fixed)
                .map_err(|_| Error::Config(format!("w must be a positive integer or `primorial`, got `{t}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Fixed(w) => w.to_string(),
            Self::Primorial => "primorial".into(),
        }
    }

    pub fn modulus(&self, p: f64) -> Result<SquarefreeModulus> {
        match *self {
            Self::Fixed(w) => SquarefreeModulus::new(w),
            Self::Primorial => Ok(SquarefreeModulus::primorial(&primorial_spec(p))),
        }
    }

    pub fn kappa_spec(&self, p: f64) -> Result<KappaSpec> {
        match *self {
            Self::Fixed(w) => KappaSpec::concrete(w),
            Self::Primorial => Ok(KappaSpec::Primorial(primorial_spec(p))),
        }
    }
}

/// Primes `p` with `p^4 <= P`, decided in integers so that `P = 10^4`
/// includes 7 regardless of how `powf` rounds.
pub fn primorial_spec(p: f64) -> PrimorialSpec {
    let n = p.floor().max(1.0) as u64;
    let mut b = isqrt(isqrt(n));
    while (b + 1).pow(4) <= n {
        b += 1;
    }
    PrimorialSpec::new(b as f64)
}

/// Everything about one `(P, w)` that does not depend on `alpha`.
#[derive(Clone, Debug)]
pub struct MajorContext {
    weight: WeightSpec,
    params: WeylParams,
    w: SquarefreeModulus,
    kappa: KappaSpec,
    k: KIntegral,
}

#[derive(Clone, Debug, Serialize)]
pub struct MajorDecomposition {
    pub a: i64,
    pub q: u64,
    pub beta: f64,
    pub d_set: Vec<u64>,
    #[serde(serialize_with = "ser_complex")]
    pub f_star: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub main_term: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub singular_term: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub f_true: Complex64,
    /// `F_w - S_0 K`.
    #[serde(serialize_with = "ser_complex")]
    pub residual: Complex64,
    /// `F_w - S(a/q, w) K`, the composed approximation error.
    #[serde(serialize_with = "ser_complex")]
    pub composed_residual: Complex64,
}

pub fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl MajorContext {
    pub fn new(p: f64, weight: WeightSpec) -> Result<Self> {
        let w = weight.modulus(p)?;
        let params = WeylParams::new(p, w.clone())?;
        let kappa = weight.kappa_spec(p)?;
        let k = KIntegral::new(params.h(), p);
        Ok(Self {
            weight,
            params,
            w,
            kappa,
            k,
        })
    }

    pub fn weight(&self) -> WeightSpec {
        self.weight
    }

    pub fn params(&self) -> &WeylParams {
        &self.params
    }

    pub fn kappa_spec(&self) -> &KappaSpec {
        &self.kappa
    }

    pub fn p(&self) -> f64 {
        self.params.p()
    }

    pub fn h(&self) -> f64 {
        self.params.h()
    }

    pub fn k_integral(&self) -> &KIntegral {
        &self.k
    }

    /// The `M`-arc approximant of `alpha`, or an error off the major arcs.
    pub fn approximant(&self, alpha: &Alpha) -> Result<RationalApproximant> {
        let label = classify(alpha, self.p(), &self.kappa)?;
        match (label.kind, label.approximant) {
            (ArcKind::Minor, _) | (_, None) => Err(Error::MinorArc {
                op: "major",
                alpha: alpha.to_f64(),
            }),
            (_, Some(ap)) => Ok(ap),
        }
    }

    /// `F_w(alpha)` via the Möbius form.
    pub fn f_true(&self, alpha: &Alpha) -> SumValue {
        f_w_mobius_freq(alpha.to_freq(), &self.params)
    }

    /// `sum_{d in D} mu(d)/(qd) sum_{h <= H/d} e(alpha d^3 h^3)
    ///   S(q, 3ad^3h^2, 3ad^3h) J(3h^2d^2 beta, 3hd beta; P)`.
    pub fn f_star(&self, alpha: &Alpha) -> Result<SumValue> {
        let ap = self.approximant(alpha)?;
        Ok(self.f_star_at(alpha, &ap))
    }

    fn f_star_at(&self, alpha: &Alpha, ap: &RationalApproximant) -> SumValue {
        let (a, q, beta) = (ap.a, ap.q, ap.beta);
        let p = self.p();
        let ring = ResidueSums::new(q);
        let freq = alpha.to_freq();
        let mut acc = ComplexAccumulator::new();
        for (d, mu) in truncated_divisors(&self.w, beta, p) {
            let d3 = d * d * d;
            let ad3 = (a as i128 * d3 as i128).rem_euclid(q as i128) as i64;
            let scale = mu as f64 / (q as f64 * d as f64);
            for h in 1..=self.params.h_max(d) {
                let s = ring.gauss_quad(ad3 * 3 * ((h * h) % q) as i64 % q as i64, ad3 * 3 * (h % q) as i64 % q as i64);
                if s.value.norm() == 0.0 {
                    continue;
                }
                let hd = (h * d) as f64;
                let j = integral_j(3.0 * hd * hd * beta, 3.0 * hd * beta, p);
                let twist = e(freq.times(d3 * h * h * h).to_f64());
                acc.push(twist * s.value * j.value * scale);
                acc.add_error((s.err_budget * p + j.abs_error_estimate * q as f64) * scale.abs());
            }
        }
        acc.finish()
    }

    fn kernel(&self, beta: f64) -> (Complex64, f64) {
        let k = self.k.eval(beta);
        (k.value, k.abs_error_estimate)
    }

    /// `S_0(alpha, w) K(beta)`.
    pub fn main_term(&self, alpha: &Alpha) -> Result<Complex64> {
        let ap = self.approximant(alpha)?;
        let s0 = local_series_d(ap.a, ap.q, ap.beta, self.p(), &self.w)?;
        Ok(self.kernel(ap.beta).0 * s0)
    }

    /// `S(a/q, w) K(beta)`.
    pub fn singular_term(&self, alpha: &Alpha) -> Result<Complex64> {
        let ap = self.approximant(alpha)?;
        let s = local_series(ap.a, ap.q, &self.w)?;
        Ok(self.kernel(ap.beta).0 * s)
    }

    pub fn decompose(&self, alpha: &Alpha) -> Result<MajorDecomposition> {
        let ap = self.approximant(alpha)?;
        let d_set = truncated_divisors(&self.w, ap.beta, self.p())
            .into_iter()
            .map(|(d, _)| d)
            .collect();
        let (k, _) = self.kernel(ap.beta);
        let s0 = local_series_d(ap.a, ap.q, ap.beta, self.p(), &self.w)?;
        let s = local_series(ap.a, ap.q, &self.w)?;
        let f_true = self.f_true(alpha).value;
        let f_star = self.f_star_at(alpha, &ap).value;
        Ok(MajorDecomposition {
            a: ap.a,
            q: ap.q,
            beta: ap.beta,
            d_set,
            f_star,
            main_term: k * s0,
            singular_term: k * s,
            f_true,
            residual: f_true - k * s0,
            composed_residual: f_true - k * s,
        })
    }
}

/// `F*_w(alpha)` for an integer weight.
pub fn f_star(alpha: &Alpha, p: f64, w: u64) -> Result<SumValue> {
    MajorContext::new(p, WeightSpec::Fixed(w))?.f_star(alpha)
}

/// `S_0(alpha, w) K(beta)` for an integer weight.
pub fn main_term(alpha: &Alpha, p: f64, w: u64) -> Result<Complex64> {
    MajorContext::new(p, WeightSpec::Fixed(w))?.main_term(alpha)
}

/// `[(HP^2)^{-1} 10^{-2}, (6qHP)^{-1}]` split into `count` geometric steps.
pub fn beta_ladder(q: u64, p: f64, count: usize) -> Vec<f64> {
    let h = p.sqrt();
    let lo = 1e-2 / (h * p * p);
    let hi = 1.0 / (6.0 * q as f64 * h * p);
    if count == 1 {
        return vec![hi];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            // the top rung must land inside the closed arc
            (lo.ln() + t * (hi.ln() - lo.ln())).exp().min(hi * (1.0 - 1e-12))
        })
        .collect()
}

/// Points `a/q + beta` for every reduced `a/q` with `q <= q_max`, with
/// `beta` on `{0} ∪ ±beta_ladder`, wrapped into `[0, 1]`.
pub fn near_rational_grid(q_max: u64, p: f64, rungs: usize) -> Vec<Alpha> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        let ladder = beta_ladder(q, p, rungs);
        for a in 0..=q {
            if gcd(a, q) != 1 {
                continue;
            }
            out.push(Alpha::Rational {
                num: a as i64,
                den: q,
            });
            for &b in &ladder {
                if a < q {
                    out.push(Alpha::Offset { a: a as i64, q, beta: b });
                }
                if a > 0 {
                    out.push(Alpha::Offset { a: a as i64, q, beta: -b });
                }
            }
        }
    }
    out
}

/// How `alpha` is sampled for the envelope reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleSpec {
    /// Uniform draws retained only when they classify as minor.
    pub minor: usize,
    /// Cluster points `a/q + j (HP^2)^{-1}`.
    pub near_rational: usize,
    pub seed: u64,
}

const CLUSTER_STEPS: [i64; 11] = [0, 1, -1, 2, -2, 4, -4, 8, -8, 16, -16];

/// Deterministic sample set for `theorem12_report`.
pub fn sample_alphas(spec: &SampleSpec, p: f64, kappa: &KappaSpec) -> Result<Vec<Alpha>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.minor + spec.near_rational);
    let mut found = 0;
    let mut draws = 0usize;
    while found < spec.minor {
        draws += 1;
        if draws > 1000 * spec.minor.max(1) {
            return Err(Error::Precondition {
                op: "sample_alphas",
                requirement: format!("minor arcs non-empty at P = {p}"),
            });
        }
        let x: f64 = rng.gen();
        if classify(&Alpha::Float(x), p, kappa)?.kind == ArcKind::Minor {
            out.push(Alpha::Float(x));
            found += 1;
        }
    }
    let step = 1.0 / (p.sqrt() * p * p);
    let mut q = 1u64;
    let mut placed = 0;
    'outer: while placed < spec.near_rational {
        for a in 0..=q {
            if gcd(a, q) != 1 {
                continue;
            }
            for j in CLUSTER_STEPS {
                if placed == spec.near_rational {
                    break 'outer;
                }
                let beta = j as f64 * step;
                if (a == 0 && beta < 0.0) || (a == q && beta > 0.0) {
                    continue;
                }
                out.push(Alpha::Offset { a: a as i64, q, beta });
                placed += 1;
            }
        }
        q += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeRow {
    pub alpha: f64,
    pub kind: ArcKind,
    pub abs_f: f64,
    pub envelope: f64,
    pub ratio: f64,
}

/// Which envelope function weighs the peak term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PeakEnvelope {
    Upsilon,
    Xi,
}

/// `|F_w(alpha)| / (HP max(log P, 1) E(alpha) + P^{1+eps})` per sample, in
/// input order.
pub fn theorem12_report(
    ctx: &MajorContext,
    samples: &[Alpha],
    peak: PeakEnvelope,
    epsilon: f64,
) -> Result<Vec<EnvelopeRow>> {
    let p = ctx.p();
    let hp_log = ctx.h() * p * p.ln().max(1.0);
    let floor = p.powf(1.0 + epsilon);
    samples
        .par_iter()
        .map(|alpha| {
            let label = classify(alpha, p, ctx.kappa_spec())?;
            let weight = match peak {
                PeakEnvelope::Upsilon => label.upsilon,
                PeakEnvelope::Xi => label.xi,
            };
            let envelope = hp_log * weight + floor;
            let abs_f = ctx.f_true(alpha).norm();
            Ok(EnvelopeRow {
                alpha: alpha.to_f64(),
                kind: label.kind,
                abs_f,
                envelope,
                ratio: abs_f / envelope,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadWeylCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl QuadWeylCheck {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// `|f(alpha) - q^{-1} S(q, a1, a2) I(beta1, beta2)|` against
/// `(q, a2)^{1/2} (q + q X^2 |beta2|)^{1/2} max(log q, 1)`.
pub fn quadweyl_check(q: u64, a1: i64, a2: i64, beta1: f64, beta2: f64, x: f64) -> Result<QuadWeylCheck> {
    if q == 0 {
        return Err(Error::ZeroArgument {
            op: "quadweyl_check",
            arg: "q",
        });
    }
    if beta1.abs() > 1.0 / (2.0 * q as f64) {
        return Err(Error::Precondition {
            op: "quadweyl_check",
            requirement: format!("|beta1| <= 1/(2q), got {beta1}"),
        });
    }
    let f = quad_f_freq(
        Freq::from_rational_offset(a1, q, beta1),
        Freq::from_rational_offset(a2, q, beta2),
        x,
    );
    let s = crate::complete_sums::gauss_quad(q, a1, a2)?;
    let i = if s.value.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        integral_i(beta1, beta2, x).value
    };
    let lhs = (f.value - s.value * i / q as f64).norm();
    let g = gcd_signed(a2, q) as f64;
    let qf = q as f64;
    let rhs = g.sqrt() * (qf + qf * x * x * beta2.abs()).sqrt() * qf.ln().max(1.0);
    Ok(QuadWeylCheck { lhs, rhs })
}

/// Uniform draws `(q, a1, a2, beta1, beta2)` for the quadratic Weyl check at
/// scale `X`: `q <= q_max`, `|beta1| <= 1/(2q)`, `|beta2| <= 1/(qX)`.
pub fn quadweyl_samples(count: usize, q_max: u64, x: f64, seed: u64) -> Vec<(u64, i64, i64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q = rng.gen_range(1..=q_max);
            let a1 = rng.gen_range(0..q) as i64;
            let a2 = rng.gen_range(0..q) as i64;
            let b1 = rng.gen_range(-0.5..=0.5) / q as f64;
            let b2 = rng.gen_range(-1.0..=1.0) / (q as f64 * x);
            (q, a1, a2, b1, b2)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complete_sums::hua_sum;
    use crate::weyl::f_w_direct_freq;

    #[test]
    fn primorial_bound_is_integral() {
        assert_eq!(primorial_spec(1e4).primes(), &[2, 3, 5, 7]);
        assert_eq!(primorial_spec(2401.0).primes(), &[2, 3, 5, 7]);
        assert_eq!(primorial_spec(2400.0).primes(), &[2, 3, 5]);
        assert_eq!(primorial_spec(16.0).primes(), &[2]);
    }

    #[test]
    fn trivial_point() {
        let ctx = MajorContext::new(100.0, WeightSpec::Fixed(1)).unwrap();
        let zero = Alpha::Rational { num: 0, den: 1 };
        let fs = ctx.f_star(&zero).unwrap();
        assert!((fs.value - Complex64::new(1000.0, 0.0)).norm() < 1e-9);
        let mt = ctx.main_term(&zero).unwrap();
        assert!((mt - Complex64::new(1000.0, 0.0)).norm() < 1e-6, "{mt}");
    }

    #[test]
    fn main_term_at_one_seventh() {
        let ctx = MajorContext::new(400.0, WeightSpec::Fixed(1)).unwrap();
        let mt = ctx.main_term(&Alpha::Rational { num: 1, den: 7 }).unwrap();
        let u = hua_sum(7, 1, 0).unwrap().norm();
        let expected = u * u / 49.0 * 20.0 * 400.0;
        assert!((mt.re - expected).abs() < 1e-6 * expected && mt.im.abs() < 1e-6 * expected);
        assert!((expected / 8000.0 - 0.4587).abs() < 1e-3);
    }

    #[test]
    fn f_star_tracks_f_w() {
        // the literal double sum, against the direct sum and its envelope
        for (alpha, p, w) in [
            (Alpha::Rational { num: 1, den: 2 }, 400.0, 1),
            (Alpha::Offset { a: 1, q: 3, beta: 1e-8 }, 400.0, 6),
        ] {
            let ctx = MajorContext::new(p, WeightSpec::Fixed(w)).unwrap();
            let fs = ctx.f_star(&alpha).unwrap().value;
            let params = WeylParams::with_w(p, w).unwrap();
            let f = f_w_direct_freq(alpha.to_freq(), &params).value;
            assert!((f - fs).norm() <= p.powf(1.1), "{alpha:?}: {f} vs {fs}");
        }
    }

    #[test]
    fn rejects_minor_arcs() {
        let ctx = MajorContext::new(400.0, WeightSpec::Fixed(1)).unwrap();
        assert!(matches!(
            ctx.f_star(&Alpha::Float(0.618034)),
            Err(Error::MinorArc { .. })
        ));
    }

    #[test]
    fn quadweyl_examples() {
        let c = quadweyl_check(1, 0, 0, 0.0, 0.0, 1000.5).unwrap();
        assert!(c.lhs <= 1.0);
        // S(4, 1, 2) = 0 so the left side is |f| alone
        let c = quadweyl_check(4, 1, 2, 1e-4, 1e-7, 1000.0).unwrap();
        let f = quad_f_freq(
            Freq::from_rational_offset(1, 4, 1e-4),
            Freq::from_rational_offset(2, 4, 1e-7),
            1000.0,
        );
        assert!((c.lhs - f.norm()).abs() < 1e-9);
        assert!(quadweyl_check(5, 1, 2, 0.2, 0.0, 10.0).is_err());
    }

    #[test]
    fn ladder_stays_on_the_arc() {
        let p = 1000.0;
        for q in 1..=5 {
            for b in beta_ladder(q, p, 8) {
                let alpha = Alpha::Offset { a: (q > 1) as i64, q, beta: b };
                let ctx_spec = KappaSpec::concrete(1).unwrap();
                let label = classify(&alpha, p, &ctx_spec).unwrap();
                assert_ne!(label.kind, ArcKind::Minor, "q={q} beta={b}");
            }
        }
    }
}
