//! The sumset experiment: how many distinct values `x^3 + z` take, and the
//! moments of the representation function that bound it from below.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ntheory::primes_in;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegerSet {
    pub n: u64,
    pub elements: Vec<u64>,
    pub label: String,
}

impl IntegerSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    /// Elements not exceeding `m`.
    pub fn count_up_to(&self, m: u64) -> usize {
        self.elements.partition_point(|&x| x <= m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SetKind {
    KthPowers(u32),
    TwoCubes,
    RandomDensity { delta: f64, seed: u64 },
    Explicit(Vec<u64>),
}

impl SetKind {
    pub fn label(&self) -> String {
        match self {
            Self::KthPowers(k) => format!("kth_powers({k})"),
            Self::TwoCubes => "two_cubes".into(),
            Self::RandomDensity { delta, seed } => format!("random_density({delta}, {seed})"),
            Self::Explicit(v) => format!("explicit({})", v.len()),
        }
    }
}

/// Largest `x` with `x^k <= n`.
pub fn iroot(n: u64, k: u32) -> u64 {
    if k == 0 {
        return u64::MAX;
    }
    if n < 2 || k == 1 {
        return n;
    }
    let mut x = (n as f64).powf(1.0 / k as f64) as u64;
    let fits = |x: u64| (x as u128).checked_pow(k).is_some_and(|v| v <= n as u128);
    while x > 0 && !fits(x) {
        x -= 1;
    }
    while fits(x + 1) {
        x += 1;
    }
    x
}

pub fn generate_set(kind: &SetKind, n: u64) -> Result<IntegerSet> {
    if n < 2 {
        return Err(Error::Precondition {
            op: "generate_set",
            requirement: format!("N >= 2, got {n}"),
        });
    }
    let elements = match kind {
        SetKind::KthPowers(k) => {
            if *k == 0 {
                return Err(Error::Precondition {
                    op: "generate_set",
                    requirement: "k >= 1".into(),
                });
            }
            (1..=iroot(n, *k)).map(|x| x.pow(*k)).collect()
        }
        SetKind::TwoCubes => {
            let mut v = Vec::new();
            for x in 1..=iroot(n, 3) {
                let x3 = x * x * x;
                // y >= x suffices since the sum is symmetric
                for y in x..=iroot(n - x3, 3) {
                    v.push(x3 + y * y * y);
                }
            }
            v.sort_unstable();
            v.dedup();
            v
        }
        SetKind::RandomDensity { delta, seed } => {
            if !(*delta > 0.0 && *delta <= 1.0) {
                return Err(Error::InvalidDensity(*delta));
            }
            // P(m in A) = delta m^{delta-1}, so #A(N) ~ N^delta
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (1..=n)
                .filter(|&m| rng.gen::<f64>() < delta * (m as f64).powf(delta - 1.0))
                .collect()
        }
        SetKind::Explicit(list) => {
            if list.contains(&0) {
                return Err(Error::Precondition {
                    op: "generate_set",
                    requirement: "elements are positive integers".into(),
                });
            }
            let mut v: Vec<u64> = list.iter().copied().filter(|&x| x <= n).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    Ok(IntegerSet {
        n,
        elements,
        label: kind.label(),
    })
}

/// `floor(N^{2/5})`, computed in integers.
pub fn p_of(n: u64) -> u64 {
    let n2 = (n as u128) * (n as u128);
    let mut p = (n as f64).powf(0.4) as u128;
    while p > 0 && p.pow(5) > n2 {
        p -= 1;
    }
    while (p + 1).pow(5) <= n2 {
        p += 1;
    }
    p as u64
}

/// Sorted `(value, multiplicity)` pairs of `x^3 + z` over `x in xs, z in zs`.
pub fn cube_shift_histogram(xs: &[u64], zs: &[u64]) -> Vec<(u64, u64)> {
    let mut values: Vec<u64> = xs
        .par_iter()
        .flat_map_iter(|&x| {
            let x3 = x * x * x;
            zs.iter().map(move |&z| x3 + z)
        })
        .collect();
    values.par_sort_unstable();
    run_lengths(&values)
}

fn run_lengths(sorted: &[u64]) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// The primes in `(floor P, floor 2P]`.
pub fn prime_window(n: u64) -> Vec<u64> {
    let p = p_of(n);
    primes_in(p, 2 * p)
}

/// `rho(n, N)`: pairs `(p, z)` with `p^3 + z = n`, `p` prime in `(P, 2P]`.
pub fn rho_counts(z: &IntegerSet) -> Vec<(u64, u64)> {
    cube_shift_histogram(&prime_window(z.n), &z.elements)
}

/// `Theta(N)`: distinct values of `x^3 + z`, `P < x <= 2P`, `z in Z`.
pub fn theta(z: &IntegerSet) -> u64 {
    let p = p_of(z.n);
    let xs: Vec<u64> = (p + 1..=2 * p).collect();
    cube_shift_histogram(&xs, &z.elements).len() as u64
}

/// `#{(x1, x2, z1, z2) : x1^3 - x2^3 = z1 - z2}` counted equation by equation.
pub fn second_moment_by_equations(xs: &[u64], zs: &[u64]) -> u64 {
    let cubes: Vec<i128> = xs.iter().map(|&x| (x as i128).pow(3)).collect();
    cubes
        .par_iter()
        .map(|&c1| {
            cubes
                .iter()
                .map(|&c2| {
                    let diff = c1 - c2;
                    // z2 = z1 - diff must also lie in the set
                    zs.iter()
                        .filter(|&&z1| {
                            let z2 = z1 as i128 - diff;
                            z2 > 0 && zs.binary_search(&(z2 as u64)).is_ok()
                        })
                        .count() as u64
                })
                .sum::<u64>()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: u64,
    pub p: u64,
    pub z: u64,
    pub primes: u64,
    pub m1: u64,
    pub m2: u64,
    pub theta: u64,
    /// `M1^2 / M2` as `(numerator, denominator)`, reduced.
    pub cauchy_lb: (u128, u128),
}

impl MomentReport {
    pub fn cauchy_lb_f64(&self) -> f64 {
        self.cauchy_lb.0 as f64 / self.cauchy_lb.1 as f64
    }

    /// `Theta M2 >= M1^2`, in integers.
    pub fn cauchy_holds(&self) -> bool {
        (self.theta as u128) * (self.m2 as u128) >= (self.m1 as u128).pow(2)
    }
}

pub fn moment_report(z: &IntegerSet) -> MomentReport {
    let primes = prime_window(z.n);
    let rho = cube_shift_histogram(&primes, &z.elements);
    let m1: u64 = rho.iter().map(|r| r.1).sum();
    let m2: u64 = rho.iter().map(|r| r.1 * r.1).sum();
    let lb = if m2 == 0 {
        (0, 1)
    } else {
        let r = Ratio::new((m1 as u128).pow(2), m2 as u128);
        (*r.numer(), *r.denom())
    };
    MomentReport {
        n: z.n,
        p: p_of(z.n),
        z: z.len() as u64,
        primes: primes.len() as u64,
        m1,
        m2,
        theta: theta(z),
        cauchy_lb: lb,
    }
}

/// `r(n, N) = #{(a, x) : x^k + a = n, a in A, 1 <= x <= N^{1/k}}`.
pub fn r_counts(a: &IntegerSet, k: u32) -> Result<Vec<(u64, u64)>> {
    if k < 2 {
        return Err(Error::Precondition {
            op: "r_counts",
            requirement: format!("k >= 2, got {k}"),
        });
    }
    let mut values: Vec<u64> = (1..=iroot(a.n, k))
        .flat_map(|x| a.elements.iter().map(move |&m| x.pow(k) + m))
        .collect();
    values.par_sort_unstable();
    Ok(run_lengths(&values))
}

/// `(sum_n r(n)^2, the diagonal part x = y)`.
pub fn r_second_moment(a: &IntegerSet, k: u32) -> Result<(u64, u64)> {
    let total = r_counts(a, k)?.iter().map(|r| r.1 * r.1).sum();
    Ok((total, iroot(a.n, k) * a.len() as u64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    /// `log #B(N) / log N`, or `-inf` for an empty set.
    pub value: f64,
    pub count: u64,
    pub empty: bool,
}

pub fn density_estimate(b: &IntegerSet, n: u64) -> Result<DensityEstimate> {
    if n < 2 {
        return Err(Error::Precondition {
            op: "density_estimate",
            requirement: format!("N >= 2, got {n}"),
        });
    }
    let count = b.count_up_to(n) as u64;
    Ok(DensityEstimate {
        value: if count == 0 {
            f64::NEG_INFINITY
        } else {
            (count as f64).ln() / (n as f64).ln()
        },
        count,
        empty: count == 0,
    })
}

pub type Q = Ratio<i64>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub delta: (i64, i64),
    /// `(1/3)(1 + 4 delta / (1 + delta))`.
    pub davenport: (i64, i64),
    /// Set outside `1/3 <= delta < 1`, where that formula is not claimed.
    pub davenport_out_of_range: bool,
    /// `1/3 + 5 delta / 6`, capped at 1 from `delta = 4/5` on.
    pub new_bound: (i64, i64),
}

fn pair(r: Q) -> (i64, i64) {
    (*r.numer(), *r.denom())
}

pub fn bound_row(delta: Q) -> Result<BoundRow> {
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);
    if delta < zero || delta > one {
        return Err(Error::Precondition {
            op: "bound_table",
            requirement: format!("0 <= delta <= 1, got {delta}"),
        });
    }
    let third = Q::new(1, 3);
    let davenport = third * (one + Q::from_integer(4) * delta / (one + delta));
    let new_bound = if delta >= Q::new(4, 5) {
        one
    } else {
        third + Q::new(5, 6) * delta
    };
    Ok(BoundRow {
        delta: pair(delta),
        davenport: pair(davenport),
        davenport_out_of_range: delta < third || delta >= one,
        new_bound: pair(new_bound),
    })
}

pub fn bound_table(grid: &[Q]) -> Result<Vec<BoundRow>> {
    grid.iter().map(|&d| bound_row(d)).collect()
}

/// `start, start + step, ..., stop` in exact rationals.
pub fn rational_grid(start: Q, stop: Q, step: Q) -> Result<Vec<Q>> {
    if step <= Q::from_integer(0) {
        return Err(Error::Config(format!("grid step must be positive, got {step}")));
    }
    let mut out = Vec::new();
    let mut x = start;
    while x <= stop {
        out.push(x);
        x += step;
    }
    Ok(out)
}

/// Parses `0.05`, `-3`, `2/3` exactly.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Config(format!("not a rational number: `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac.len() > 15 {
        return Err(bad());
    }
    let den = 10i64.pow(frac.len() as u32);
    let digits = format!("{int}{frac}");
    let num: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let r = Q::new(num, den);
    Ok(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn generators() {
        let sq = generate_set(&SetKind::KthPowers(2), 100).unwrap();
        assert_eq!(sq.len(), 10);
        assert_eq!(sq.elements.last(), Some(&100));

        let c = generate_set(&SetKind::TwoCubes, 1729).unwrap();
        let mut oracle = HashSet::new();
        let mut hits = 0;
        for x in 1..=12u64 {
            for y in 1..=12u64 {
                let v = x.pow(3) + y.pow(3);
                if v <= 1729 {
                    oracle.insert(v);
                    hits += (v == 1729) as u32;
                }
            }
        }
        assert_eq!(hits, 4, "1729 has two unordered representations");
        let mut oracle: Vec<u64> = oracle.into_iter().collect();
        oracle.sort_unstable();
        assert_eq!(c.elements, oracle);
        assert_eq!(c.elements.iter().filter(|&&v| v == 1729).count(), 1);

        let r = generate_set(&SetKind::RandomDensity { delta: 0.5, seed: 7 }, 1_000_000).unwrap();
        assert!((500..=2000).contains(&r.len()), "{}", r.len());
        let again = generate_set(&SetKind::RandomDensity { delta: 0.5, seed: 7 }, 1_000_000).unwrap();
        assert_eq!(r, again);

        assert!(matches!(
            generate_set(&SetKind::RandomDensity { delta: 0.0, seed: 1 }, 10),
            Err(Error::InvalidDensity(_))
        ));
        assert!(generate_set(&SetKind::Explicit(vec![0, 1]), 10).is_err());
        let e = generate_set(&SetKind::Explicit(vec![5, 3, 5, 99]), 10).unwrap();
        assert_eq!(e.elements, vec![3, 5]);
    }

    #[test]
    fn integer_roots() {
        assert_eq!(p_of(100_000), 100);
        assert_eq!(p_of(1_000_000), 251);
        for n in [1u64, 7, 8, 9, 26, 27, 1 << 40, u64::MAX] {
            let r = iroot(n, 3);
            assert!((r as u128).pow(3) <= n as u128 && (r as u128 + 1).pow(3) > n as u128);
        }
    }

    fn brute_rho(z: &IntegerSet) -> HashMap<u64, u64> {
        let mut m = HashMap::new();
        for p in prime_window(z.n) {
            for &x in &z.elements {
                *m.entry(p * p * p + x).or_insert(0) += 1;
            }
        }
        m
    }

    #[test]
    fn moments_on_small_sets() {
        let one = generate_set(&SetKind::Explicit(vec![1]), 100_000).unwrap();
        let rep = moment_report(&one);
        assert_eq!(rep.m1, rep.primes);
        assert_eq!(rep.m2, rep.m1);
        assert_eq!(rep.theta, 2 * rep.p - rep.p);

        let z = generate_set(&SetKind::RandomDensity { delta: 0.5, seed: 3 }, 20_000).unwrap();
        let rho = rho_counts(&z);
        let oracle = brute_rho(&z);
        assert_eq!(rho.len(), oracle.len());
        for (n, c) in &rho {
            assert_eq!(oracle[n], *c);
        }
        let rep = moment_report(&z);
        assert_eq!(rep.m1, rep.z * rep.primes);
        assert_eq!(rep.m2, second_moment_by_equations(&prime_window(z.n), &z.elements));
        assert!(rep.cauchy_holds());
        let p = rep.p;
        let (lo, hi) = (p.pow(3), 8 * p.pow(3) + z.n);
        assert!(rho.iter().all(|&(n, _)| n > lo && n <= hi));
    }

    #[test]
    fn theta_with_collisions() {
        let z = generate_set(&SetKind::Explicit(vec![1, 2]), 100_000).unwrap();
        let p = p_of(z.n);
        let mut seen = HashSet::new();
        let mut collisions = 0;
        for x in p + 1..=2 * p {
            for zz in [1u64, 2] {
                if !seen.insert(x.pow(3) + zz) {
                    collisions += 1;
                }
            }
        }
        assert_eq!(theta(&z), 2 * (2 * p - p) - collisions);
    }

    #[test]
    fn r_counts_examples() {
        let a = generate_set(&SetKind::Explicit(vec![1]), 100).unwrap();
        let r = r_counts(&a, 2).unwrap();
        assert_eq!(r.len(), 10);
        assert!(r.iter().all(|x| x.1 == 1));

        let a = generate_set(&SetKind::Explicit(vec![1, 8]), 1000).unwrap();
        let r = r_counts(&a, 3).unwrap();
        let mut oracle: HashMap<u64, u64> = HashMap::new();
        for x in 1..=10u64 {
            for m in [1u64, 8] {
                *oracle.entry(x.pow(3) + m).or_insert(0) += 1;
            }
        }
        assert_eq!(r.len(), oracle.len());
        assert!(r.iter().all(|(n, c)| oracle[n] == *c));
        assert_eq!(r.iter().map(|x| x.1).sum::<u64>(), 20);
        assert!(r_counts(&a, 1).is_err());
    }

    #[test]
    fn densities() {
        let sq = generate_set(&SetKind::KthPowers(2), 1_000_000).unwrap();
        assert!((density_estimate(&sq, 1_000_000).unwrap().value - 0.5).abs() < 0.01);
        let all = generate_set(&SetKind::KthPowers(1), 1000).unwrap();
        assert!((density_estimate(&all, 1000).unwrap().value - 1.0).abs() < 1e-15);
        let empty = IntegerSet {
            n: 10,
            elements: vec![],
            label: "empty".into(),
        };
        let d = density_estimate(&empty, 10).unwrap();
        assert!(d.empty && d.value == f64::NEG_INFINITY);
    }

    #[test]
    fn bound_rows() {
        let r = bound_row(Q::new(2, 3)).unwrap();
        assert_eq!((r.davenport, r.new_bound), ((13, 15), (8, 9)));
        assert_eq!(bound_row(Q::new(4, 5)).unwrap().new_bound, (1, 1));
        let z = bound_row(Q::from_integer(0)).unwrap();
        assert!(z.davenport_out_of_range);
        assert_eq!(z.new_bound, (1, 3));
        let grid = rational_grid(Q::from_integer(0), Q::from_integer(1), parse_rational("0.05").unwrap()).unwrap();
        assert_eq!(grid.len(), 21);
        assert!(bound_row(Q::new(3, 2)).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("0.05").unwrap(), Q::new(1, 20));
        assert_eq!(parse_rational("2/3").unwrap(), Q::new(2, 3));
        assert_eq!(parse_rational("-1.5").unwrap(), Q::new(-3, 2));
        assert_eq!(parse_rational("4").unwrap(), Q::from_integer(4));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational(".").is_err());
    }
}
