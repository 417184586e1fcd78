//! Exact arithmetic functions: gcd, sieved Möbius / totient tables,
//! factorizations and divisor sums.
//!
//! Everything here is a pure function. [`ArithmeticTable`] is immutable once
//! built and can be shared across threads by reference.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Default sieve limit used by the harness and the CLI.
pub const DEFAULT_SIEVE_LIMIT: u64 = 10_000_000;

/// Hard ceiling on sieve size (memory is ~9 bytes per entry).
pub const MAX_SIEVE_LIMIT: u64 = 500_000_000;

/// Binary gcd on 128-bit unsigned integers.
///
/// `gcd(x, 0) = x`, so the function is total even though walk coordinates
/// are always positive.
pub fn gcd(x: u128, y: u128) -> u128 {
    if x <= u64::MAX as u128 && y <= u64::MAX as u128 {
        return gcd_u64(x as u64, y as u64) as u128;
    }
    if x == 0 {
        return y;
    }
    if y == 0 {
        return x;
    }
    let shift = (x | y).trailing_zeros();
    let mut a = x >> x.trailing_zeros();
    let mut b = y;
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

/// Binary gcd on 64-bit unsigned integers.
#[inline]
pub fn gcd_u64(x: u64, y: u64) -> u64 {
    if x == 0 {
        return y;
    }
    if y == 0 {
        return x;
    }
    let shift = (x | y).trailing_zeros();
    let mut a = x >> x.trailing_zeros();
    let mut b = y;
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

pub fn lcm_u64(x: u64, y: u64) -> u64 {
    if x == 0 || y == 0 {
        return 0;
    }
    x / gcd_u64(x, y) * y
}

/// Kronecker delta `δ_k(n)`.
#[inline]
pub fn kronecker(k: u64, n: u64) -> u64 {
    u64::from(k == n)
}

/// Deterministic Miller–Rabin for every `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in SMALL {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A complete prime factorization, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Builds a factorization from `(prime, multiplicity)` pairs, checking
    /// every invariant.
    pub fn new(factors: Vec<(u64, u32)>) -> Result<Self> {
        let mut value: u64 = 1;
        let mut prev = 1u64;
        for &(p, m) in &factors {
            if p <= prev || m == 0 || !is_prime(p) {
                return Err(Error::InvalidParameter(format!(
                    "not a canonical factorization: {factors:?}"
                )));
            }
            prev = p;
            for _ in 0..m {
                value = value.checked_mul(p).ok_or_else(|| {
                    Error::InvalidParameter("factorization overflows u64".into())
                })?;
            }
        }
        Ok(Self { value, factors })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Number of divisors, `Π (m + 1)`.
    pub fn tau(&self) -> u64 {
        self.factors.iter().map(|&(_, m)| u64::from(m) + 1).product()
    }

    /// Squarefree kernel `rad(n)`.
    pub fn radical(&self) -> u64 {
        self.primes().product()
    }

    pub fn mobius(&self) -> i8 {
        if self.factors.iter().any(|&(_, m)| m > 1) {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn totient(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, m)| (p - 1) * p.pow(m - 1))
            .product()
    }

    /// All divisors in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        for &(p, m) in &self.factors {
            let len = out.len();
            let mut pk = 1u64;
            for _ in 0..m {
                pk *= p;
                for i in 0..len {
                    out.push(out[i] * pk);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Squarefree divisors paired with their Möbius value.
    pub fn squarefree_divisors(&self) -> Vec<(u64, i8)> {
        let mut out = vec![(1u64, 1i8)];
        for p in self.primes() {
            let len = out.len();
            for i in 0..len {
                let (d, s) = out[i];
                out.push((d * p, -s));
            }
        }
        out
    }
}

fn trial_factor(mut n: u64, primes: &[u32]) -> Vec<(u64, u32)> {
    let mut factors = Vec::new();
    let mut push = |n: &mut u64, p: u64| {
        if (*n).is_multiple_of(p) {
            let mut m = 0;
            while (*n).is_multiple_of(p) {
                *n /= p;
                m += 1;
            }
            factors.push((p, m));
        }
    };
    for &p in primes {
        let p = u64::from(p);
        if p.saturating_mul(p) > n {
            break;
        }
        push(&mut n, p);
    }
    // Continue with a 6k±1 wheel past the supplied primes.
    let start = primes.last().map_or(2, |&p| u64::from(p) + 1);
    if start <= 3 {
        push(&mut n, 2);
        push(&mut n, 3);
    }
    let mut f = start.max(5);
    f += (6 - ((f + 1) % 6)) % 6; // align to 6k-1
    while f.saturating_mul(f) <= n {
        push(&mut n, f);
        push(&mut n, f + 2);
        f += 6;
    }
    if n > 1 {
        factors.push((n, 1));
    }
    factors
}

/// Factorizes by trial division (6k±1 wheel). Fast for `n ≤ 10^12`.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    Factorization {
        value: n,
        factors: trial_factor(n, &[]),
    }
}

/// Number of divisors of `n`.
pub fn tau(n: u64) -> u64 {
    factorize(n).tau()
}

/// `Σ_{d | m} μ(d) / d = φ(m) / m`, evaluated over the squarefree divisors.
pub fn mobius_over_d_divisor_sum(f: &Factorization) -> f64 {
    f.primes().map(|p| 1.0 - 1.0 / p as f64).product()
}

/// All primes `≤ n`, by an odd-only sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    // index i stands for 2i + 1
    let half = (n - 1) / 2 + 1;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2u64];
    out.extend((1..half).filter(|&i| !composite[i]).map(|i| (2 * i + 1) as u64));
    out
}

/// Sieved Möbius, totient and smallest-prime-factor tables on `1..=limit`.
#[derive(Debug, Clone)]
pub struct ArithmeticTable {
    limit: usize,
    spf: Vec<u32>,
    mobius: Vec<i8>,
    totient: Vec<u32>,
    primes: Vec<u32>,
}

/// Builds the tables with a linear sieve.
pub fn sieve(limit: u64) -> Result<ArithmeticTable> {
    if limit > MAX_SIEVE_LIMIT {
        return Err(Error::SieveLimit {
            requested: limit,
            max: MAX_SIEVE_LIMIT,
        });
    }
    let limit = limit.max(1) as usize;
    let mut spf = vec![0u32; limit + 1];
    let mut mobius = vec![0i8; limit + 1];
    let mut totient = vec![0u32; limit + 1];
    let mut primes = Vec::with_capacity(limit / 10 + 16);
    mobius[1] = 1;
    totient[1] = 1;
    for i in 2..=limit {
        if spf[i] == 0 {
            spf[i] = i as u32;
            mobius[i] = -1;
            totient[i] = (i - 1) as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if p > spf[i] || ip > limit {
                break;
            }
            spf[ip] = p;
            if p == spf[i] {
                mobius[ip] = 0;
                totient[ip] = totient[i] * p;
            } else {
                mobius[ip] = -mobius[i];
                totient[ip] = totient[i] * (p - 1);
            }
        }
    }
    Ok(ArithmeticTable {
        limit,
        spf,
        mobius,
        totient,
        primes,
    })
}

impl ArithmeticTable {
    pub fn limit(&self) -> u64 {
        self.limit as u64
    }

    fn check(&self, what: &'static str, n: u64) -> Result<usize> {
        if n == 0 || n > self.limit as u64 {
            return Err(Error::BeyondSieve {
                what,
                value: n,
                limit: self.limit as u64,
            });
        }
        Ok(n as usize)
    }

    /// `μ(n)`; panics outside `1..=limit`.
    #[inline]
    pub fn mobius(&self, n: u64) -> i8 {
        self.mobius[n as usize]
    }

    /// `φ(n)`; panics outside `1..=limit`.
    #[inline]
    pub fn totient(&self, n: u64) -> u64 {
        u64::from(self.totient[n as usize])
    }

    #[inline]
    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        u64::from(self.spf[n as usize])
    }

    pub fn try_mobius(&self, n: u64) -> Result<i8> {
        Ok(self.mobius[self.check("n", n)?])
    }

    pub fn try_totient(&self, n: u64) -> Result<u64> {
        Ok(u64::from(self.totient[self.check("n", n)?]))
    }

    pub fn mobius_slice(&self) -> &[i8] {
        &self.mobius
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Factorizes via the spf chain when `n ≤ limit`, else by trial division
    /// with the sieved primes.
    pub fn factorize(&self, n: u64) -> Factorization {
        assert!(n >= 1, "factorize requires n >= 1");
        if n as usize <= self.limit {
            let mut factors: Vec<(u64, u32)> = Vec::new();
            let mut x = n as usize;
            while x > 1 {
                let p = self.spf[x] as usize;
                let mut m = 0;
                while x.is_multiple_of(p) {
                    x /= p;
                    m += 1;
                }
                factors.push((p as u64, m));
            }
            Factorization { value: n, factors }
        } else {
            Factorization {
                value: n,
                factors: trial_factor(n, &self.primes),
            }
        }
    }

    pub fn tau(&self, n: u64) -> u64 {
        self.factorize(n).tau()
    }
}

/// Exact `Σ_{d ≤ n} (μ(d)/d)·⌊n/d⌋`.
///
/// Only squarefree `d` contribute, so the common denominator is the
/// primorial of `n`. Cost grows like `n²/log n` bit operations; use
/// [`weighted_mobius_deviation_scan`] for the floating scan up to 10⁶.
pub fn mertens_weighted_sum(table: &ArithmeticTable, n: u64) -> Result<BigRational> {
    table.check("n", n)?;
    let denom: BigInt = table
        .primes()
        .iter()
        .take_while(|&&p| u64::from(p) <= n)
        .fold(BigInt::one(), |acc, &p| acc * p);
    let mut numer = BigInt::zero();
    for d in 1..=n {
        let mu = table.mobius(d);
        if mu == 0 {
            continue;
        }
        let term = (&denom / d) * (n / d);
        if mu > 0 {
            numer += term;
        } else {
            numer -= term;
        }
    }
    Ok(BigRational::new(numer, denom))
}

/// Result of scanning `|Σ_{d≤n} (μ(d)/d)⌊n/d⌋ − 6n/π²| / log n`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DeviationScan {
    pub limit: u64,
    /// Largest observed ratio (the measured constant `K`).
    pub max_ratio: f64,
    pub argmax: u64,
}

/// Scans `2 ≤ n ≤ limit` using the running sum `Σ_{m≤n} φ(m)/m`, which equals
/// the weighted Möbius sum by the Gauss identity.
pub fn weighted_mobius_deviation_scan(table: &ArithmeticTable, limit: u64) -> Result<DeviationScan> {
    table.check("limit", limit)?;
    let slope = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let mut running = 1.0f64; // n = 1
    let mut comp = 0.0f64;
    let mut best = DeviationScan {
        limit,
        max_ratio: 0.0,
        argmax: 2,
    };
    for n in 2..=limit {
        // Kahan summation.
        let y = table.totient(n) as f64 / n as f64 - comp;
        let t = running + y;
        comp = (t - running) - y;
        running = t;
        let ratio = (running - slope * n as f64).abs() / (n as f64).ln();
        if ratio > best.max_ratio {
            best.max_ratio = ratio;
            best.argmax = n;
        }
    }
    Ok(best)
}

/// Measured constant `C = max τ(n)/n^{1/4}` over `1 ≤ n ≤ limit`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TauScan {
    pub limit: u64,
    pub constant: f64,
    pub argmax: u64,
}

pub fn tau_quarter_scan(table: &ArithmeticTable, limit: u64) -> Result<TauScan> {
    table.check("limit", limit)?;
    let mut best = TauScan {
        limit,
        constant: 1.0,
        argmax: 1,
    };
    for n in 2..=limit {
        let c = table.tau(n) as f64 / (n as f64).powf(0.25);
        if c > best.constant {
            best.constant = c;
            best.argmax = n;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn small_table() -> ArithmeticTable {
        sieve(100_000).unwrap()
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(2, 3), 1);
        assert_eq!(gcd(2, 4), 2);
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(gcd(12, 30), 6);
        assert_eq!(gcd(0, 7), 7);
        let big = 1u128 << 100;
        assert_eq!(gcd(big * 3, big * 5), big);
        assert_eq!(gcd(u128::MAX, 5), 5); // 2^128-1 is divisible by 3, 5, 17
    }

    #[test]
    fn sieve_examples() {
        let t = sieve(100).unwrap();
        assert_eq!(t.mobius(6), 1);
        assert_eq!(t.mobius(12), 0);
        assert_eq!(t.mobius(30), -1);
        assert_eq!(t.mobius(1), 1);
        assert_eq!(t.totient(1), 1);
        assert_eq!(t.totient(6), 2);
        for p in t.primes() {
            assert_eq!(t.mobius(u64::from(*p)), -1);
            assert_eq!(t.totient(u64::from(*p)), u64::from(*p) - 1);
        }
        assert_eq!(t.primes().len(), 25);
    }

    #[test]
    fn sieve_limit_is_enforced() {
        assert!(matches!(
            sieve(MAX_SIEVE_LIMIT + 1),
            Err(Error::SieveLimit { .. })
        ));
        let t = sieve(10).unwrap();
        assert!(t.try_mobius(11).is_err());
        assert!(t.try_totient(0).is_err());
        assert!(mertens_weighted_sum(&t, 11).is_err());
    }

    #[test]
    fn gauss_identity_up_to_1e5() {
        let t = small_table();
        for n in 1..=100_000u64 {
            let f = t.factorize(n);
            let s: u64 = f.divisors().iter().map(|&d| t.totient(d)).sum();
            assert_eq!(s, n, "Σ φ(d) over d | {n}");
        }
    }

    #[test]
    fn mobius_over_d_matches_totient_ratio() {
        let t = small_table();
        for m in 1..=10_000u64 {
            let f = t.factorize(m);
            let direct: f64 = f
                .divisors()
                .iter()
                .map(|&d| f64::from(t.mobius(d)) / d as f64)
                .sum();
            let ratio = t.totient(m) as f64 / m as f64;
            assert!((direct - ratio).abs() < 1e-12, "m = {m}");
            assert!((mobius_over_d_divisor_sum(&f) - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).factors().is_empty());
        assert_eq!(factorize(12).factors(), &[(2, 2), (3, 1)]);
        assert_eq!(factorize(30).factors(), &[(2, 1), (3, 1), (5, 1)]);
        assert_eq!(factorize(999_999_000_001).value(), 999_999_000_001);
        let f = factorize(600_851_475_143);
        assert_eq!(f.factors(), &[(71, 1), (839, 1), (1471, 1), (6857, 1)]);
        let t = sieve(1000).unwrap();
        let g = t.factorize(600_851_475_143);
        assert_eq!(f, g);
        // prime beyond sieve reach
        assert_eq!(t.factorize(1_000_000_007).factors(), &[(1_000_000_007, 1)]);
    }

    #[test]
    fn factorization_constructor_validates() {
        assert!(Factorization::new(vec![(2, 2), (3, 1)]).is_ok());
        assert!(Factorization::new(vec![(3, 1), (2, 1)]).is_err());
        assert!(Factorization::new(vec![(4, 1)]).is_err());
        assert!(Factorization::new(vec![(2, 0)]).is_err());
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(1), 1);
        assert_eq!(tau(12), 6);
        assert_eq!(tau(720_720), 240);
    }

    #[test]
    fn mertens_weighted_small_values() {
        let t = sieve(1000).unwrap();
        // Oracle: Σ_{m ≤ n} φ(m)/m with φ counted by brute-force gcd.
        let oracle = |n: u64| {
            let mut acc = BigRational::zero();
            for m in 1..=n {
                let phi = (1..=m).filter(|&j| gcd_u64(j, m) == 1).count();
                acc += BigRational::new(BigInt::from(phi), BigInt::from(m));
            }
            acc
        };
        assert_eq!(mertens_weighted_sum(&t, 1).unwrap(), BigRational::one());
        assert_eq!(
            mertens_weighted_sum(&t, 4).unwrap(),
            BigRational::new(8.into(), 3.into())
        );
        for n in [2, 5, 17, 60, 211] {
            assert_eq!(mertens_weighted_sum(&t, n).unwrap(), oracle(n), "n = {n}");
        }
    }

    #[test]
    fn floating_scan_agrees_with_exact_sum() {
        let t = sieve(20_000).unwrap();
        let slope = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        for n in [10u64, 100, 1000, 20_000] {
            let exact = mertens_weighted_sum(&t, n).unwrap().to_f64().unwrap();
            let running: f64 = (1..=n).map(|m| t.totient(m) as f64 / m as f64).sum();
            assert!((exact - running).abs() < 1e-9 * n as f64);
            assert!((exact - slope * n as f64).abs() < 2.0 * (n as f64).ln() + 1.0);
        }
        let scan = weighted_mobius_deviation_scan(&t, 20_000).unwrap();
        assert!(scan.max_ratio.is_finite() && scan.max_ratio > 0.0);
    }

    #[test]
    fn eratosthenes_matches_linear_sieve() {
        let t = sieve(200_000).unwrap();
        let a: Vec<u64> = t.primes().iter().map(|&p| u64::from(p)).collect();
        assert_eq!(primes_up_to(200_000), a);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(2), vec![2]);
        assert_eq!(primes_up_to(9), vec![2, 3, 5, 7]);
    }

    #[test]
    fn miller_rabin_matches_sieve() {
        let t = sieve(100_000).unwrap();
        for n in 0..=100_000u64 {
            let sieved = n >= 2 && t.smallest_prime_factor(n) == n;
            assert_eq!(is_prime(n), sieved, "n = {n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to 2,3,5,7
    }
}
