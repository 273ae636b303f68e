//! Rational approximation and the major/minor arc dissection.
//!
//! All arc membership tests run in exact rational arithmetic on the value
//! of `alpha` (for a double, its exact binary value). Since
//! `|q alpha - a| <= (6HP)^-1` with `q <= P` forces `|alpha - a/q| <
//! 1/(2q^2)`, any qualifying fraction is a continued-fraction convergent,
//! so only convergents are examined.

use crate::complete_sums::{kappa_exact, KappaSpec};
use crate::error::{Error, Result};
use crate::ntheory::{gcd, omega};
use crate::numeric::{DoubleDouble, Freq};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A frequency, either a double or an exact rational description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Float(f64),
    Rational { num: i64, den: u64 },
    /// `a/q + beta`, with `beta` taken at its exact binary value.
    Offset { a: i64, q: u64, beta: f64 },
}

fn big_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

impl Alpha {
    pub fn to_exact(&self) -> BigRational {
        match *self {
            Alpha::Float(x) => big_from_f64(x),
            Alpha::Rational { num, den } => BigRational::new(num.into(), den.into()),
            Alpha::Offset { a, q, beta } => BigRational::new(a.into(), q.into()) + big_from_f64(beta),
        }
    }

    pub fn to_freq(&self) -> Freq {
        match *self {
            Alpha::Float(x) => Freq::from_f64(x),
            Alpha::Rational { num, den } => Freq::new(DoubleDouble::from_ratio(num, den)),
            Alpha::Offset { a, q, beta } => Freq::from_rational_offset(a, q, beta),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            Alpha::Float(x) => x,
            Alpha::Rational { num, den } => DoubleDouble::from_ratio(num, den).to_f64(),
            Alpha::Offset { a, q, beta } => {
                (DoubleDouble::from_ratio(a, q) + DoubleDouble::from_f64(beta)).to_f64()
            }
        }
    }

    fn is_float(&self) -> bool {
        matches!(self, Alpha::Float(_))
    }
}

impl From<f64> for Alpha {
    fn from(x: f64) -> Self {
        Alpha::Float(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalApproximant {
    pub a: i64,
    pub q: u64,
    pub beta: f64,
}

impl RationalApproximant {
    pub fn alpha(&self) -> Alpha {
        Alpha::Offset {
            a: self.a,
            q: self.q,
            beta: self.beta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ArcKind {
    MajorM,
    MajorN,
    Minor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArcLabel {
    pub kind: ArcKind,
    pub approximant: Option<RationalApproximant>,
    pub upsilon: f64,
    pub xi: f64,
    /// Set when moving a double input by 4 ulps could change `kind`.
    pub boundary_ambiguous: bool,
}

/// Convergents `(p_k, q_k)` of a rational, in order, with `q_k <= q_limit`.
pub fn convergents(x: &BigRational, q_limit: u64) -> Vec<(BigInt, u64)> {
    let mut out = Vec::new();
    let (mut num, mut den) = (x.numer().clone(), x.denom().clone());
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::zero(), BigInt::one());
    while !den.is_zero() {
        let (a, r) = num.div_mod_floor(&den);
        let p2 = &a * &p0 + &p1;
        let q2 = &a * &q0 + &q1;
        match q2.to_u64() {
            Some(q) if q <= q_limit => out.push((p2.clone(), q)),
            _ => break,
        }
        p1 = p0;
        q1 = q0;
        p0 = p2;
        q0 = q2;
        num = den;
        den = r;
    }
    out
}

/// `|q alpha - a|` exactly.
fn distance(alpha: &BigRational, a: &BigInt, q: u64) -> BigRational {
    (alpha * BigRational::from_integer(q.into()) - BigRational::from_integer(a.clone())).abs()
}

/// `floor(q alpha)` and `floor(q alpha) + 1` when coprime to `q`, ascending.
fn nearest_numerators(alpha: &BigRational, q: u64) -> Vec<BigInt> {
    let x = alpha * BigRational::from_integer(q.into());
    let lo = x.floor().to_integer();
    let hi: BigInt = &lo + BigInt::one();
    [lo, hi]
        .into_iter()
        .filter(|a| {
            let a_mod = a.mod_floor(&BigInt::from(q)).to_u64().unwrap_or(0);
            gcd(a_mod, q) == 1
        })
        .collect()
}

fn approximant(alpha: &BigRational, a: &BigInt, q: u64) -> RationalApproximant {
    let beta = alpha - BigRational::new(a.clone(), q.into());
    RationalApproximant {
        a: a.to_i64().expect("numerator fits in i64"),
        q,
        beta: beta.to_f64().unwrap_or(0.0),
    }
}

/// Smallest `q <= Q` with `|q alpha - a| <= 1/floor(Q)`, `(a, q) = 1`; a tie
/// in `a` goes to the smaller numerator.
///
/// The minimal such `q` beats every smaller denominator, so it is a best
/// approximation and therefore a convergent.
pub fn dirichlet_approx(alpha: &Alpha, q_bound: f64) -> Result<RationalApproximant> {
    if !(q_bound >= 1.0) {
        return Err(Error::Precondition {
            op: "dirichlet_approx",
            requirement: format!("Q >= 1, got {q_bound}"),
        });
    }
    let n = q_bound.floor().min(u64::MAX as f64) as u64;
    let x = alpha.to_exact();
    let cap = BigRational::new(BigInt::one(), n.into());
    for (_, q) in convergents(&x, n) {
        for a in nearest_numerators(&x, q) {
            if distance(&x, &a, q) <= cap {
                return Ok(approximant(&x, &a, q));
            }
        }
    }
    unreachable!("Dirichlet's theorem guarantees a convergent with q <= Q")
}

fn exact(x: f64) -> BigRational {
    big_from_f64(x)
}

/// The arc thresholds at size `P`, all compared exactly.
struct Thresholds {
    p3: BigRational,
    p7: BigRational,
    q_major: u64,
}

impl Thresholds {
    fn new(p: f64) -> Self {
        let pr = exact(p);
        let p3 = &pr * &pr * &pr;
        let p7 = &p3 * &p3 * &pr;
        Self {
            p3,
            p7,
            q_major: p.floor() as u64,
        }
    }

    /// `|q alpha - a| <= (6 H P)^-1`, i.e. `36 x^2 P^3 <= 1`.
    fn in_m(&self, x: &BigRational) -> bool {
        BigRational::from_integer(36.into()) * x * x * &self.p3 <= BigRational::one()
    }

    /// `q <= P^{3/4}` and `|q alpha - a| <= P^{-7/4}`.
    fn in_n(&self, x: &BigRational, q: u64) -> bool {
        let qr = BigRational::from_integer(q.into());
        let q4 = &qr * &qr * &qr * &qr;
        let x2 = x * x;
        q4 <= self.p3 && &x2 * &x2 * &self.p7 <= BigRational::one()
    }
}

/// Classifies `alpha` into `M(q, a)`, `N(q, a)` or the minor arcs and fills
/// in the envelopes `Upsilon_w` and `Xi`.
pub fn classify(alpha: &Alpha, p: f64, w: &KappaSpec) -> Result<ArcLabel> {
    if !(p >= 2.0) {
        return Err(Error::Precondition {
            op: "classify",
            requirement: format!("P >= 2, got {p}"),
        });
    }
    let x = alpha.to_exact();
    if x.is_negative() || x > BigRational::one() {
        return Err(Error::AlphaOutOfRange(alpha.to_f64()));
    }
    let th = Thresholds::new(p);
    let h = p.sqrt();
    let m_cap = 1.0 / (6.0 * h * p);
    let n_cap = p.powf(-1.75);
    let ulp_slack = if alpha.is_float() {
        4.0 * f64::EPSILON * alpha.to_f64().abs().max(f64::MIN_POSITIVE)
    } else {
        0.0
    };
    let near = |dist: f64, cap: f64, q: u64| (dist - cap).abs() <= q as f64 * ulp_slack;

    let mut found: Option<(BigInt, u64, BigRational)> = None;
    let mut ambiguous = false;
    for (_, q) in convergents(&x, th.q_major) {
        for a in nearest_numerators(&x, q) {
            let d = distance(&x, &a, q);
            let df = d.to_f64().unwrap_or(f64::INFINITY);
            if ulp_slack > 0.0 && (near(df, m_cap, q) || near(df, n_cap, q)) {
                ambiguous = true;
            }
            if found.is_none() && th.in_m(&d) {
                found = Some((a, q, d));
            }
        }
    }
    let Some((a, q, d)) = found else {
        return Ok(ArcLabel {
            kind: ArcKind::Minor,
            approximant: None,
            upsilon: 0.0,
            xi: 0.0,
            boundary_ambiguous: ambiguous,
        });
    };
    let approx = approximant(&x, &a, q);
    let kappa = kappa_exact(q, w)?.to_f64();
    let dist = d.to_f64().unwrap_or(0.0);
    let hp2 = h * p * p;
    let upsilon = kappa * kappa / (1.0 + hp2 * approx.beta.abs());
    let (kind, xi) = if th.in_n(&d, q) {
        let xi = 4f64.powi(omega(q)? as i32) / (q as f64 + hp2 * dist);
        (ArcKind::MajorN, xi)
    } else {
        (ArcKind::MajorM, 0.0)
    };
    Ok(ArcLabel {
        kind,
        approximant: Some(approx),
        upsilon,
        xi,
        boundary_ambiguous: ambiguous,
    })
}

/// `Upsilon_w(alpha)`; zero on the minor arcs.
pub fn upsilon(alpha: &Alpha, p: f64, w: &KappaSpec) -> Result<f64> {
    Ok(classify(alpha, p, w)?.upsilon)
}

/// `Xi(alpha)`; zero off the arcs `N`.
pub fn xi(alpha: &Alpha, p: f64) -> Result<f64> {
    Ok(classify(alpha, p, &KappaSpec::concrete(1)?)?.xi)
}

/// Total length of `M` inside `[0, 1]`: arcs around `0/1` and `1/1` are
/// one-sided.
pub fn major_arc_measure(p: f64) -> f64 {
    let h = p.sqrt();
    let mut total = 0.0;
    for q in 1..=p.floor() as u64 {
        let phi = crate::ntheory::phi(q).unwrap_or(0) as f64;
        total += phi * 2.0 / (6.0 * h * p * q as f64);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan_dirichlet(alpha: f64, q_bound: u64) -> (i64, u64) {
        let x = exact(alpha);
        let cap = BigRational::new(BigInt::one(), q_bound.into());
        for q in 1..=q_bound {
            for a in 0..=q as i64 {
                if gcd(a as u64, q) != 1 {
                    continue;
                }
                if distance(&x, &BigInt::from(a), q) <= cap {
                    return (a, q);
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn dirichlet_examples() {
        // the bound is inclusive, so 1/3 already qualifies for 3/10 ...
        let r = dirichlet_approx(&Alpha::Rational { num: 3, den: 10 }, 10.0).unwrap();
        assert_eq!((r.a, r.q), (1, 3));
        // ... while the double 0.3 sits just below 3/10: |3x - 1| exceeds 1/10
        // by ~3e-17 and |7x - 2| undercuts it
        let r = dirichlet_approx(&Alpha::Float(0.3), 10.0).unwrap();
        assert_eq!((r.a, r.q), (2, 7));
        let r = dirichlet_approx(&Alpha::Rational { num: 3, den: 10 }, 11.0).unwrap();
        assert_eq!((r.a, r.q, r.beta), (3, 10, 0.0));
        let r = dirichlet_approx(&Alpha::Float(0.0), 50.0).unwrap();
        assert_eq!((r.a, r.q, r.beta), (0, 1, 0.0));
        let r = dirichlet_approx(&Alpha::Float(0.1415926535), 100.0).unwrap();
        assert_eq!((r.a, r.q), (1, 7));
        assert!((r.beta - (0.1415926535 - 1.0 / 7.0)).abs() < 1e-15);
        assert!((r.beta + 0.0012644893).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_matches_exhaustive_scan() {
        let mut state = 0x1234_5678_9abc_def0u64;
        for _ in 0..400 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let alpha = (state >> 11) as f64 / (1u64 << 53) as f64;
            for q_bound in [1u64, 7, 50, 300] {
                let r = dirichlet_approx(&Alpha::Float(alpha), q_bound as f64).unwrap();
                assert_eq!((r.a, r.q), scan_dirichlet(alpha, q_bound), "alpha={alpha} Q={q_bound}");
            }
        }
    }

    #[test]
    fn classify_examples() {
        let one = KappaSpec::concrete(1).unwrap();
        // |2 alpha - 1| = 2e-5 is also below P^{-7/4}, so the finer label applies
        let label = classify(&Alpha::Float(0.5 + 1e-5), 100.0, &one).unwrap();
        assert_eq!(label.kind, ArcKind::MajorN);
        let label = classify(&Alpha::Float(0.5 + 5e-4), 100.0, &one).unwrap();
        assert_eq!(label.kind, ArcKind::Minor);
        // at P = 1e4: |2 alpha - 1| = 1.2e-7 sits between P^{-7/4} and 1/(6HP)
        let label = classify(&Alpha::Float(0.5 + 6e-8), 1e4, &one).unwrap();
        assert_eq!(label.kind, ArcKind::MajorM);
        let label = classify(&Alpha::Float(0.5 + 1e-5), 100.0, &one).unwrap();
        let ap = label.approximant.unwrap();
        assert_eq!((ap.a, ap.q), (1, 2));
        let expected = 2.0 / (1.0 + 10.0 * 1e4 * ap.beta.abs());
        assert!((label.upsilon - expected).abs() < 1e-14);

        let label = classify(&Alpha::Float(0.618034), 100.0, &one).unwrap();
        assert_eq!(label.kind, ArcKind::Minor);
        assert_eq!((label.upsilon, label.xi), (0.0, 0.0));

        let label = classify(&Alpha::Rational { num: 1, den: 2 }, 100.0, &one).unwrap();
        assert_eq!(label.kind, ArcKind::MajorN);
        assert!((label.xi - 2.0).abs() < 1e-15);
        assert!((label.upsilon - 2.0).abs() < 1e-15);

        let label = classify(&Alpha::Rational { num: 1, den: 6 }, 100.0, &one).unwrap();
        assert!((label.xi - 16.0 / 6.0).abs() < 1e-15);

        assert!(classify(&Alpha::Float(1.5), 100.0, &one).is_err());
        let end = classify(&Alpha::Float(1.0), 100.0, &one).unwrap();
        assert_eq!(end.approximant.map(|a| (a.a, a.q)), Some((1, 1)));
        let start = classify(&Alpha::Float(0.0), 100.0, &one).unwrap();
        assert_eq!(start.approximant.map(|a| (a.a, a.q)), Some((0, 1)));
    }

    #[test]
    fn boundary_is_inclusive_and_exact() {
        // P = 4: H = 2, (6HP)^-1 = 1/48 exactly
        let one = KappaSpec::concrete(1).unwrap();
        let on = classify(&Alpha::Rational { num: 1, den: 48 }, 4.0, &one).unwrap();
        assert_ne!(on.kind, ArcKind::Minor);
        assert!(!on.boundary_ambiguous);
        let off = classify(&Alpha::Offset { a: 1, q: 48, beta: 1e-12 }, 4.0, &one).unwrap();
        assert_eq!(off.kind, ArcKind::Minor);
        assert!(classify(&Alpha::Float(1.0 / 48.0), 4.0, &one).unwrap().boundary_ambiguous);
        assert_eq!(upsilon(&Alpha::Offset { a: 1, q: 48, beta: 1e-12 }, 4.0, &one).unwrap(), 0.0);
    }

    #[test]
    fn measure_of_major_arcs_is_below_one() {
        for p in [4.0, 10.0, 100.0, 1000.0] {
            let m = major_arc_measure(p);
            assert!(m > 0.0 && m < 1.0, "P={p}: {m}");
        }
    }
}
