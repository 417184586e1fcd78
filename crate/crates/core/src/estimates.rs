//! Quantitative lemmas behind the convergence proofs: binomial bounds,
//! residue-class equidistribution, gcd-restricted binomial sums and the
//! main-term and closed-form expectations they feed.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numtheory::{factorize, gcd_u64, ArithmeticTable, Factorization};

/// Largest `n` accepted by the exact rational binomial.
pub const EXACT_BINOMIAL_MAX: u64 = 60;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// `ln n! − ln(√(2πn) (n/e)^n)`, the Stirling remainder.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = n as f64;
    if n <= 15 {
        let ln_fact: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
        return ln_fact - (0.5 * (2.0 * PI * x).ln() + x * x.ln() - x);
    }
    let nn = x * x;
    if n > 500 {
        (S0 - S1 / nn) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / x
    }
}

/// Deviance term `x ln(x/m) + m − x`, evaluated without cancellation.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Loader's saddle-point form of the binomial pmf; the relative error stays
/// near machine precision for every `n`, unlike a difference of log-gammas.
fn pmf_unchecked(n: u64, alpha: f64, k: u64) -> f64 {
    if k == 0 {
        return (n as f64 * (-alpha).ln_1p()).exp();
    }
    if k == n {
        return (n as f64 * alpha.ln()).exp();
    }
    let (nf, kf) = (n as f64, k as f64);
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * alpha) - bd0(nf - kf, nf * (1.0 - alpha));
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `C(n,k) α^k (1−α)^{n−k}`.
pub fn binomial_pmf(n: u64, alpha: f64, k: u64) -> Result<f64> {
    check_alpha(alpha)?;
    if k > n {
        return Err(invalid(format!("k = {k} exceeds n = {n}")));
    }
    Ok(pmf_unchecked(n, alpha, k))
}

/// The whole row `binomial_pmf(n, α, 0..=n)`.
pub fn binomial_row(n: u64, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    Ok((0..=n).map(|k| pmf_unchecked(n, alpha, k)).collect())
}

fn binomial_coefficient(n: u64, k: u64) -> BigInt {
    let k = k.min(n - k);
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// Exact `C(n,k) α^k (1−α)^{n−k}` for rational `α` and `n ≤ 60`.
pub fn binomial_pmf_exact(n: u64, alpha: &BigRational, k: u64) -> Result<BigRational> {
    if n > EXACT_BINOMIAL_MAX {
        return Err(Error::ExactModeLimit {
            n: n as usize,
            max: EXACT_BINOMIAL_MAX as usize,
        });
    }
    if !(alpha.is_positive() && *alpha < BigRational::one()) {
        return Err(invalid("alpha must lie in (0,1)"));
    }
    if k > n {
        return Err(invalid(format!("k = {k} exceeds n = {n}")));
    }
    let one_minus = BigRational::one() - alpha;
    Ok(BigRational::from_integer(binomial_coefficient(n, k))
        * num_traits::pow(alpha.clone(), k as usize)
        * num_traits::pow(one_minus, (n - k) as usize))
}

/// The grid `{0.01, 0.02, …, 0.99}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// Outcome of scanning `pmf / ((π/2)/√(2πnα(1−α)))` over a parameter grid.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub n_range: (u64, u64),
    pub alpha_grid: Vec<f64>,
    /// Largest `pmf / bound`; at most 1 when the inequality holds everywhere.
    pub max_ratio: f64,
    pub worst_case: (u64, f64, u64),
    /// Largest `pmf · √(2πnα(1−α))`, i.e. the ratio against the constant-1 bound.
    pub max_ratio_unit_constant: f64,
    /// A case where the constant-1 variant fails, if any exists on the grid.
    pub unit_constant_witness: Option<(u64, f64, u64)>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.max_ratio <= 1.0
    }
}

type Best = (f64, (u64, f64, u64));

fn better(x: Best, y: Best) -> Best {
    // Total order (ratio, then lexicographic case) so the reduction does not
    // depend on how rayon splits the work.
    let key = |b: &Best| (b.0, b.1 .0, b.1 .1, b.1 .2);
    if key(&y).partial_cmp(&key(&x)) == Some(std::cmp::Ordering::Greater) {
        y
    } else {
        x
    }
}

/// Verifies `P(bin(n,α) = k) ≤ (π/2)/√(2πnα(1−α))` for all `n ≤ n_max`,
/// `k ≤ n` and `α` in the grid, and looks for a failure of the same bound
/// with `π/2` replaced by 1.
pub fn check_binomial_sup_bound(n_max: u64, alpha_grid: &[f64]) -> Result<BoundReport> {
    if n_max == 0 {
        return Err(invalid("n_max must be >= 1"));
    }
    for &a in alpha_grid {
        check_alpha(a)?;
    }
    let zero: Best = (f64::NEG_INFINITY, (0, 0.0, 0));
    let (best, best_unit) = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut local = (zero, zero);
            for &alpha in alpha_grid {
                let scale = (2.0 * PI * n as f64 * alpha * (1.0 - alpha)).sqrt();
                let row = binomial_row(n, alpha).expect("alpha validated");
                for (k, &p) in row.iter().enumerate() {
                    let unit = p * scale;
                    let case = (n, alpha, k as u64);
                    local.0 = better(local.0, (unit / (PI / 2.0), case));
                    local.1 = better(local.1, (unit, case));
                }
            }
            local
        })
        .reduce(|| (zero, zero), |x, y| (better(x.0, y.0), better(x.1, y.1)));
    Ok(BoundReport {
        n_range: (1, n_max),
        alpha_grid: alpha_grid.to_vec(),
        max_ratio: best.0,
        worst_case: best.1,
        max_ratio_unit_constant: best_unit.0,
        unit_constant_witness: (best_unit.0 > 1.0).then_some(best_unit.1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidueMass {
    pub mass: f64,
    /// `|mass − 1/d| · √(α(1−α)n)`.
    pub deviation_scaled: f64,
}

fn residue_sums(row: &[f64], d: u64) -> Vec<f64> {
    let mut sums = vec![0.0; d as usize];
    for (l, &p) in row.iter().enumerate() {
        sums[l % d as usize] += p;
    }
    sums
}

/// Binomial mass on the residue class `l ≡ r (mod d)`.
pub fn residue_class_mass(n: u64, alpha: f64, d: u64, r: u64) -> Result<ResidueMass> {
    if d == 0 {
        return Err(invalid("modulus must be >= 1"));
    }
    let row = binomial_row(n, alpha)?;
    let mass = residue_sums(&row, d)[(r % d) as usize];
    Ok(ResidueMass {
        mass,
        deviation_scaled: (mass - 1.0 / d as f64).abs() * (alpha * (1.0 - alpha) * n as f64).sqrt(),
    })
}

/// Integer binomial terms `C(n,l) p^l (q−p)^{n−l}` for `l = 0..=n`, whose
/// sum is `q^n`; dividing by `q^n` gives the exact pmf at `α = p/q`.
pub fn binomial_numerators(n: u64, p: u64, q: u64) -> Result<(Vec<BigInt>, BigInt)> {
    if p == 0 || p >= q {
        return Err(invalid("need 0 < p < q"));
    }
    let mut terms = Vec::with_capacity(n as usize + 1);
    let mut term = num_traits::pow(BigInt::from(q - p), n as usize);
    for l in 0..=n {
        terms.push(term.clone());
        if l < n {
            // Exact: the next term is again an integer.
            term = term * ((n - l) * p) / ((l + 1) * (q - p));
        }
    }
    Ok((terms, num_traits::pow(BigInt::from(q), n as usize)))
}

/// Buckets binomial numerators by `l mod d`.
pub fn bucket_numerators(terms: &[BigInt], d: u64) -> Result<Vec<BigInt>> {
    if d == 0 {
        return Err(invalid("modulus must be >= 1"));
    }
    let mut sums = vec![BigInt::zero(); d as usize];
    for (l, t) in terms.iter().enumerate() {
        sums[l % d as usize] += t;
    }
    Ok(sums)
}

/// Exact residue masses for rational `α = p/q`, returned as integer
/// numerators over the common denominator `q^n`. Entry `r` is
/// `Σ_{l≡r} C(n,l) p^l (q−p)^{n−l}`.
pub fn residue_class_numerators(n: u64, p: u64, q: u64, d: u64) -> Result<(Vec<BigInt>, BigInt)> {
    let (terms, den) = binomial_numerators(n, p, q)?;
    Ok((bucket_numerators(&terms, d)?, den))
}

/// Binomial mass of `{l : l·c ≡ r (mod d)}`, by direct enumeration.
pub fn twisted_residue_mass(n: u64, alpha: f64, c: u64, d: u64, r: u64) -> Result<f64> {
    if d == 0 {
        return Err(invalid("modulus must be >= 1"));
    }
    let row = binomial_row(n, alpha)?;
    let mut sums = vec![0.0; d as usize];
    for (l, &p) in row.iter().enumerate() {
        sums[((l as u64 % d) * (c % d) % d) as usize] += p;
    }
    Ok(sums[(r % d) as usize])
}

/// Inverse of `c` modulo `d`, when `gcd(c, d) = 1`.
pub fn mod_inverse(c: u64, d: u64) -> Option<u64> {
    if d == 1 {
        return Some(0);
    }
    let e = (c as i128).extended_gcd(&(d as i128));
    (e.gcd == 1).then(|| e.x.rem_euclid(d as i128) as u64)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidueScan {
    /// Empirical constant `Ĉ = max deviation_scaled` over the whole scan.
    pub constant: f64,
    pub argmax: (u64, f64, u64, u64),
    /// `(n, max deviation_scaled at this n)`.
    pub per_n: Vec<(u64, f64)>,
    /// Largest `|Σ_r mass_r − 1|` seen in floating point.
    pub max_partition_error: f64,
}

/// `(n, alpha, d, r)` locating a residue-class deviation.
type ResidueWitness = (u64, f64, u64, u64);

/// Scans `deviation_scaled` over every `n` in `ns`, every `2 ≤ d ≤ d_max`,
/// every residue and every grid `α`.
pub fn residue_scan(ns: &[u64], d_max: u64, alpha_grid: &[f64]) -> Result<ResidueScan> {
    let mut per_n = Vec::with_capacity(ns.len());
    let mut best = (f64::NEG_INFINITY, (0, 0.0, 0, 0));
    let mut max_partition_error = 0.0f64;
    for &n in ns {
        let tiles: Vec<(f64, ResidueWitness, f64)> = alpha_grid
            .par_iter()
            .map(|&alpha| -> Result<_> {
                let row = binomial_row(n, alpha)?;
                let scale = (alpha * (1.0 - alpha) * n as f64).sqrt();
                let mut local = (f64::NEG_INFINITY, (n, alpha, 0, 0), 0.0f64);
                for d in 1..=d_max {
                    let sums = residue_sums(&row, d);
                    let total: f64 = sums.iter().sum();
                    local.2 = local.2.max((total - 1.0).abs());
                    if d == 1 {
                        continue;
                    }
                    for (r, &m) in sums.iter().enumerate() {
                        let dev = (m - 1.0 / d as f64).abs() * scale;
                        if dev > local.0 {
                            local.0 = dev;
                            local.1 = (n, alpha, d, r as u64);
                        }
                    }
                }
                Ok(local)
            })
            .collect::<Result<_>>()?;
        let mut n_best = f64::NEG_INFINITY;
        for (dev, case, perr) in tiles {
            max_partition_error = max_partition_error.max(perr);
            n_best = n_best.max(dev);
            if dev > best.0 {
                best = (dev, case);
            }
        }
        per_n.push((n, n_best));
    }
    Ok(ResidueScan {
        constant: best.0,
        argmax: best.1,
        per_n,
        max_partition_error,
    })
}

fn phi_ratio(f: &Factorization) -> f64 {
    f.primes().map(|p| 1.0 - 1.0 / p as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GcdSum {
    pub value: f64,
    pub main_term: f64,
}

impl GcdSum {
    pub fn error(&self) -> f64 {
        (self.value - self.main_term).abs()
    }
}

/// `Σ_{0≤l≤M, gcd(l+s, M+t) = k} P(bin(M,α) = l)` together with its main term
/// `(g_k(M+t)/k) Σ_{kd | M+t} μ(d)/d`, where `g_k(m) = 1` iff `k | m`.
pub fn gcd_restricted_sum(m: u64, s: u64, t: u64, k: u64, alpha: f64) -> Result<GcdSum> {
    if m == 0 || k == 0 {
        return Err(invalid("need M >= 1 and k >= 1"));
    }
    let modulus = m + t;
    let row = binomial_row(m, alpha)?;
    let value = row
        .iter()
        .enumerate()
        .filter(|&(l, _)| gcd_u64(l as u64 + s, modulus) == k)
        .map(|(_, &p)| p)
        .sum();
    let main_term = if modulus.is_multiple_of(k) {
        // Σ_{d | m/k} μ(d)/d = φ(m/k)/(m/k).
        phi_ratio(&factorize(modulus / k)) / k as f64
    } else {
        0.0
    };
    Ok(GcdSum { value, main_term })
}

/// Main term `φ(n+a0+b0)/(n+a0+b0)` of the probability that the α-walk from
/// `(a0, b0)` is visible after `n` steps.
pub fn expected_indicator_main_term(n: u64, a0: u64, b0: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    Ok(phi_ratio(&factorize(n + a0 + b0)))
}

/// Exact probability that the step-`c` α-walk from `(a0, b0)` is visible
/// after `n` steps: `Σ_l P(bin(n,α)=l) [gcd(a0+lc, b0+(n−l)c) = 1]`.
pub fn expected_indicator_exact(n: u64, a0: u64, b0: u64, c: u64, alpha: f64) -> Result<f64> {
    if n == 0 || c == 0 {
        return Err(invalid("need n >= 1 and c >= 1"));
    }
    let row = binomial_row(n, alpha)?;
    Ok(row
        .iter()
        .enumerate()
        .filter(|&(l, _)| {
            let l = l as u64;
            gcd_u64(a0 + l * c, b0 + (n - l) * c) == 1
        })
        .map(|(_, &p)| p)
        .sum())
}

/// `Σ_{d | a0+b0+nc, gcd(d,c) = 1} μ(d)/d` for starts `(1+kc, 1+qc)`.
pub fn step_c_main_term(n: u64, a0: u64, b0: u64, c: u64) -> Result<f64> {
    if n == 0 || c == 0 {
        return Err(invalid("need n >= 1 and c >= 1"));
    }
    if a0 == 0 || b0 == 0 || !(a0 - 1).is_multiple_of(c) || !(b0 - 1).is_multiple_of(c) {
        return Err(invalid(format!(
            "start ({a0}, {b0}) is not of the form (1 + kc, 1 + qc) for c = {c}"
        )));
    }
    let f = factorize(a0 + b0 + n * c);
    Ok(f.primes().filter(|&p| !c.is_multiple_of(p)).map(|p| 1.0 - 1.0 / p as f64).product())
}

fn check_closed_form_range(table: &ArithmeticTable, n: u64) -> Result<()> {
    if n == 0 {
        return Err(invalid("N must be >= 1"));
    }
    if n + 2 > table.limit() {
        return Err(Error::BeyondSieve {
            what: "expected_q_closed_form",
            value: n + 2,
            limit: table.limit(),
        });
    }
    Ok(())
}

/// `E(Q_N) = (1/N) Σ_{n=1}^N φ(n+2)/(n+1)` for Pólya's walk from `(1,1)`,
/// compensated-summed in floating point.
pub fn expected_q_closed_form(table: &ArithmeticTable, n: u64) -> Result<f64> {
    check_closed_form_range(table, n)?;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for j in 1..=n {
        let y = table.totient(j + 2) as f64 / (j + 1) as f64 - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum / n as f64)
}

/// Exact rational value of [`expected_q_closed_form`].
pub fn expected_q_closed_form_exact(table: &ArithmeticTable, n: u64) -> Result<BigRational> {
    check_closed_form_range(table, n)?;
    // Accumulate over the running lcm of denominators to avoid a gcd per term.
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for j in 1..=n {
        let dj = BigInt::from(j + 1);
        let scale = &dj / den.gcd(&dj);
        if !scale.is_one() {
            num *= &scale;
            den *= &scale;
        }
        num += BigInt::from(table.totient(j + 2)) * (&den / &dj);
    }
    Ok(BigRational::new(num, den * n))
}

/// Per-`N` deviation of the closed form from `6/π²`, scaled by `N / log N`.
pub fn closed_form_deviation_trend(table: &ArithmeticTable, ns: &[u64]) -> Result<Vec<(u64, f64, f64)>> {
    let target = crate::densities::inv_zeta2();
    ns.iter()
        .map(|&n| {
            let v = expected_q_closed_form(table, n)?;
            let dev = (v - target).abs();
            Ok((n, dev, dev * n as f64 / (n as f64).ln().max(1.0)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::sieve;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn binomial_examples() {
        assert!((binomial_pmf(2, 0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        let exact = binomial_pmf_exact(10, &rat(3, 10), 3).unwrap();
        // 120 · 27 · 823543 / 10^10.
        assert_eq!(exact, rat(120 * 27 * 823_543, 10_000_000_000));
        assert!((binomial_pmf(10, 0.3, 3).unwrap() - exact.to_f64().unwrap()).abs() < 1e-14);
        assert!((exact.to_f64().unwrap() - 0.266_827_932).abs() < 1e-9);
        assert!(binomial_pmf(3, 0.5, 4).is_err());
        assert!(binomial_pmf(3, 1.0, 1).is_err());
        assert!(binomial_pmf_exact(61, &rat(1, 2), 1).is_err());
    }

    #[test]
    fn binomial_rows_sum_to_one() {
        for n in [1, 7, 60, 500, 10_000] {
            for alpha in [0.01, 0.3, 0.5, 0.97] {
                let s: f64 = binomial_row(n, alpha).unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "n={n} α={alpha}: {s}");
            }
        }
        for n in [1u64, 10, 60] {
            let total: BigRational = (0..=n).map(|k| binomial_pmf_exact(n, &rat(2, 7), k).unwrap()).sum();
            assert_eq!(total, BigRational::one());
        }
    }

    #[test]
    fn sup_bound_small_cases() {
        let bound = (PI / 2.0) / (PI / 2.0).sqrt();
        assert!((bound - 1.2533).abs() < 1e-4);
        assert!(binomial_pmf(1, 0.5, 0).unwrap() < bound);
        let rep = check_binomial_sup_bound(60, &[0.01, 0.1, 0.5]).unwrap();
        assert!(rep.holds());
        let (n, a, k) = rep.unit_constant_witness.expect("Poisson regime violates constant 1");
        let p = binomial_pmf(n, a, k).unwrap();
        assert!(p * (2.0 * PI * n as f64 * a * (1.0 - a)).sqrt() > 1.0);
    }

    #[test]
    fn residue_examples() {
        let whole = residue_class_mass(37, 0.3, 1, 0).unwrap();
        assert!((whole.mass - 1.0).abs() < 1e-14);
        let even = residue_class_mass(2, 0.5, 2, 0).unwrap();
        assert!((even.mass - 0.5).abs() < 1e-15);
        let (nums, den) = residue_class_numerators(2, 1, 2, 2).unwrap();
        assert_eq!(BigRational::new(nums[0].clone(), den), rat(1, 2));
        // d = 2 has the closed form (1 + (1−2α)^n)/2 on even l.
        for n in [5u64, 40, 333] {
            let m = residue_class_mass(n, 0.2, 2, 0).unwrap().mass;
            assert!((m - (1.0 + 0.6f64.powi(n as i32)) / 2.0).abs() < 1e-13);
        }
        assert!(residue_class_mass(5, 0.5, 0, 0).is_err());
    }

    #[test]
    fn numerators_match_exact_pmf() {
        let (terms, den) = binomial_numerators(10, 3, 10).unwrap();
        for (k, t) in terms.iter().enumerate() {
            let exact = binomial_pmf_exact(10, &rat(3, 10), k as u64).unwrap();
            assert_eq!(BigRational::new(t.clone(), den.clone()), exact);
        }
    }

    #[test]
    fn residue_partition_is_exact() {
        for n in [1u64, 17, 100] {
            for (p, q) in [(1, 2), (3, 10), (99, 100)] {
                for d in [1, 2, 7, 50] {
                    let (nums, den) = residue_class_numerators(n, p, q, d).unwrap();
                    assert_eq!(nums.iter().sum::<BigInt>(), den);
                }
            }
        }
    }

    #[test]
    fn twisted_residues_relabel_classes() {
        for n in [0u64, 3, 50, 500] {
            for c in 1..=20u64 {
                for d in 1..=20u64 {
                    let Some(beta) = mod_inverse(c, d) else { continue };
                    assert_eq!(c * beta % d, 1 % d);
                    for r in 0..d {
                        let tw = twisted_residue_mass(n, 0.37, c, d, r).unwrap();
                        let plain = residue_class_mass(n, 0.37, d, beta * r % d).unwrap().mass;
                        assert!((tw - plain).abs() < 1e-15);
                    }
                }
            }
        }
        assert_eq!(mod_inverse(4, 6), None);
    }

    #[test]
    fn gcd_sum_examples() {
        let p = 101;
        let g = gcd_restricted_sum(p, 0, 0, 1, 0.4).unwrap();
        assert!((g.main_term - (1.0 - 1.0 / p as f64)).abs() < 1e-15);
        // Only l = 0 and l = M share the factor p with p itself.
        let edge = binomial_pmf(p, 0.4, 0).unwrap() + binomial_pmf(p, 0.4, p).unwrap();
        assert!((g.value - (1.0 - edge)).abs() < 1e-12);
        let odd = gcd_restricted_sum(40, 3, 5, 2, 0.5).unwrap();
        assert_eq!(odd.value, 0.0);
        assert_eq!(odd.main_term, 0.0);
    }

    #[test]
    fn gcd_sums_over_k_partition_unity() {
        for (m, s, t) in [(30, 0, 0), (45, 2, 7), (64, 1, 2)] {
            let total: f64 = (1..=m + t)
                .map(|k| gcd_restricted_sum(m, s, t, k, 0.35).unwrap().value)
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gcd_sum_error_shape_at_ten_thousand() {
        let (m, s, t, alpha) = (10_000, 1, 2, 0.3);
        let g = gcd_restricted_sum(m, s, t, 1, alpha).unwrap();
        let allowance = 5.0 * tau(m + t) / (alpha * (1.0 - alpha) * m as f64).sqrt();
        assert!(g.error() < allowance, "{} vs {}", g.error(), allowance);
    }

    fn tau(n: u64) -> f64 {
        crate::numtheory::tau(n) as f64
    }

    #[test]
    fn indicator_main_terms() {
        assert!((expected_indicator_main_term(1, 1, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        for n in [1u64, 12, 97, 1000] {
            for (a0, b0) in [(1, 1), (2, 5)] {
                let main = expected_indicator_main_term(n, a0, b0).unwrap();
                let via = gcd_restricted_sum(n, a0, a0 + b0, 1, 0.5).unwrap().main_term;
                assert!((main - via).abs() < 1e-15);
                let exact = expected_indicator_exact(n, a0, b0, 1, 0.5).unwrap();
                let direct = gcd_restricted_sum(n, a0, a0 + b0, 1, 0.5).unwrap().value;
                assert!((exact - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_c_terms() {
        for n in [1u64, 9, 250] {
            assert_eq!(
                step_c_main_term(n, 1, 1, 1).unwrap(),
                expected_indicator_main_term(n, 1, 1).unwrap()
            );
        }
        // 2 + 2n = 2^j ⇒ only d = 1 contributes.
        for n in [1u64, 3, 7, 15, 1023] {
            assert_eq!(step_c_main_term(n, 1, 1, 2).unwrap(), 1.0);
        }
        assert!((step_c_main_term(2, 1, 1, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(step_c_main_term(5, 2, 1, 2).is_err());
        assert!(step_c_main_term(5, 4, 7, 3).is_ok());
    }

    #[test]
    fn closed_form_values() {
        let table = sieve(2_000).unwrap();
        assert_eq!(expected_q_closed_form_exact(&table, 1).unwrap(), rat(1, 1));
        assert_eq!(expected_q_closed_form_exact(&table, 3).unwrap(), rat(8, 9));
        assert!((expected_q_closed_form(&table, 3).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        // Oracle: brute-force totients.
        let brute_phi = |m: u64| (1..=m).filter(|&j| gcd_u64(j, m) == 1).count() as i64;
        let mut acc = BigRational::zero();
        for j in 1..=200u64 {
            acc += rat(brute_phi(j + 2), (j + 1) as i64);
        }
        assert_eq!(expected_q_closed_form_exact(&table, 200).unwrap(), acc / BigRational::from_integer(200.into()));
        let exact = expected_q_closed_form_exact(&table, 1_000).unwrap().to_f64().unwrap();
        assert!((exact - expected_q_closed_form(&table, 1_000).unwrap()).abs() < 1e-13);
        assert!(expected_q_closed_form(&table, 1_999).is_err());
    }
}
