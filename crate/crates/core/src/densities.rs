//! Limit densities of visible points on affine grids, and the constants of
//! the three-colour urn.
//!
//! Each density has two routes: a closed Euler-product form and a truncated
//! Möbius series with a declared tail bound. Lattice counting gives a third,
//! brute-force check.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numtheory::{factorize, gcd_u64, primes_up_to, ArithmeticTable};

/// `1/ζ(2) = 6/π²`.
pub fn inv_zeta2() -> f64 {
    6.0 / (PI * PI)
}

/// Density of `k`-visible points, `1/(k²ζ(2))`.
pub fn k_visible_density(k: u64) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    inv_zeta2() / (k as f64 * k as f64)
}

/// Parameters of the grid `{(a0 + n·r0, b0 + m·u0) : n, m ≥ 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityParams {
    pub a0: u64,
    pub b0: u64,
    pub r0: u64,
    pub u0: u64,
}

impl DensityParams {
    pub fn new(a0: u64, b0: u64, r0: u64, u0: u64) -> Result<Self> {
        if a0 == 0 || b0 == 0 || r0 == 0 || u0 == 0 {
            return Err(invalid("density parameters must all be >= 1"));
        }
        Ok(Self { a0, b0, r0, u0 })
    }

    pub fn gcd_all(&self) -> u64 {
        gcd_u64(gcd_u64(self.a0, self.b0), gcd_u64(self.r0, self.u0))
    }
}

impl std::str::FromStr for DensityParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u64> = s
            .split(',')
            .map(|x| x.trim().parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("bad density parameters {s:?}: {e}")))?;
        match parts[..] {
            [a0, b0, r0, u0] => DensityParams::new(a0, b0, r0, u0),
            _ => Err(invalid(format!("expected a0,b0,r0,u0, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityMethod {
    EulerProduct,
    MobiusTruncated(u64),
    BruteForce(u64),
}

/// A density together with the method that produced it and an upper bound
/// on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: f64,
    pub method: DensityMethod,
    pub tail_bound: f64,
}

impl DensityValue {
    fn euler(value: f64) -> Self {
        Self {
            value,
            method: DensityMethod::EulerProduct,
            tail_bound: 0.0,
        }
    }

    /// True when `other` lies within the combined tail bounds (plus `slack`).
    pub fn agrees_with(&self, other: &DensityValue, slack: f64) -> bool {
        (self.value - other.value).abs() <= self.tail_bound + other.tail_bound + slack
    }
}

/// Partial sum `Σ_{d ≤ depth} μ(d)/d²`; the remainder is below `1/depth`.
pub fn mobius_square_partial_sum(table: &ArithmeticTable, depth: u64) -> Result<DensityValue> {
    delta_c_mobius(table, 1, depth)
}

/// `Δ(c) = (6/π²) / Π_{p | c} (1 − 1/p²)`.
pub fn delta_c(c: u64) -> DensityValue {
    assert!(c >= 1, "c must be >= 1");
    let local: f64 = factorize(c)
        .primes()
        .map(|p| 1.0 - 1.0 / (p as f64 * p as f64))
        .product();
    DensityValue::euler(inv_zeta2() / local)
}

fn check_depth(table: &ArithmeticTable, depth: u64) -> Result<()> {
    if depth == 0 || depth > table.limit() {
        return Err(Error::BeyondSieve {
            what: "depth",
            value: depth,
            limit: table.limit(),
        });
    }
    Ok(())
}

/// `Σ_{d ≤ depth, gcd(d,c) = 1} μ(d)/d²`, summed from the smallest terms up.
pub fn delta_c_mobius(table: &ArithmeticTable, c: u64, depth: u64) -> Result<DensityValue> {
    check_depth(table, depth)?;
    let mu = table.mobius_slice();
    let mut sum = 0.0f64;
    for d in (1..=depth).rev() {
        let m = mu[d as usize];
        if m != 0 && gcd_u64(d, c) == 1 {
            sum += f64::from(m) / (d as f64 * d as f64);
        }
    }
    Ok(DensityValue {
        value: sum,
        method: DensityMethod::MobiusTruncated(depth),
        tail_bound: 1.0 / depth as f64,
    })
}

/// Closed form of `Δ(a0, b0; r0, u0)`:
/// `δ₁(gcd) · Π_{p∈H}(1 − 1/p) · Π_{p ∤ lcm(r0,u0)}(1 − 1/p²)`,
/// with `H = ((R∖U) ∩ A) ∪ ((U∖R) ∩ B)`.
pub fn delta_general(p: DensityParams) -> DensityValue {
    if p.gcd_all() > 1 {
        return DensityValue::euler(0.0);
    }
    let r_primes: Vec<u64> = factorize(p.r0).primes().collect();
    let u_primes: Vec<u64> = factorize(p.u0).primes().collect();
    let mut weight = 1.0f64;
    for &q in &r_primes {
        if !u_primes.contains(&q) && p.a0.is_multiple_of(q) {
            weight *= 1.0 - 1.0 / q as f64;
        }
    }
    for &q in &u_primes {
        if !r_primes.contains(&q) && p.b0.is_multiple_of(q) {
            weight *= 1.0 - 1.0 / q as f64;
        }
    }
    let mut lcm_primes = r_primes;
    lcm_primes.extend(u_primes);
    lcm_primes.sort_unstable();
    lcm_primes.dedup();
    let local: f64 = lcm_primes
        .iter()
        .map(|&q| 1.0 - 1.0 / (q as f64 * q as f64))
        .product();
    DensityValue::euler(weight * inv_zeta2() / local)
}

/// Truncated series
/// `Σ_{d ≤ depth; gcd(d,r0) | a0; gcd(d,u0) | b0} μ(d)/d² · gcd(d,r0)·gcd(d,u0)`.
pub fn delta_general_mobius(table: &ArithmeticTable, p: DensityParams, depth: u64) -> Result<DensityValue> {
    check_depth(table, depth)?;
    let mu = table.mobius_slice();
    let mut sum = 0.0f64;
    for d in (1..=depth).rev() {
        let m = mu[d as usize];
        if m == 0 {
            continue;
        }
        let gr = gcd_u64(d, p.r0);
        let gu = gcd_u64(d, p.u0);
        if !p.a0.is_multiple_of(gr) || !p.b0.is_multiple_of(gu) {
            continue;
        }
        sum += f64::from(m) * (gr * gu) as f64 / (d as f64 * d as f64);
    }
    Ok(DensityValue {
        value: sum,
        method: DensityMethod::MobiusTruncated(depth),
        tail_bound: (p.r0 * p.u0) as f64 / depth as f64,
    })
}

/// `#{0 ≤ n, m ≤ N : gcd(a0 + n·r0, b0 + m·u0) = 1}`, exact.
pub fn brute_force_count(p: DensityParams, n_max: u64) -> u64 {
    (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let x = p.a0 + n * p.r0;
            (0..=n_max)
                .filter(|&m| gcd_u64(x, p.b0 + m * p.u0) == 1)
                .count() as u64
        })
        .sum()
}

/// Fraction of visible points among the `(N+1)²` grid points.
pub fn brute_force_density(p: DensityParams, n_max: u64) -> f64 {
    let cells = (n_max + 1) as f64;
    brute_force_count(p, n_max) as f64 / (cells * cells)
}

/// A constant with a bound on its evaluation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantValue {
    pub value: f64,
    pub error_bound: f64,
    pub method: &'static str,
}

/// `ζ(3)` by the series `Σ 1/n³` over `n ≤ terms`, with the remainder taken as
/// the midpoint of its integral bounds `[1/(2(M+1)²), 1/(2M²)]`.
pub fn zeta3_series(terms: u64) -> ConstantValue {
    let terms = terms.max(1);
    let mut sum = 0.0f64;
    for n in (1..=terms).rev() {
        let x = n as f64;
        sum += 1.0 / (x * x * x);
    }
    let m = terms as f64;
    let lo = 0.5 / ((m + 1.0) * (m + 1.0));
    let hi = 0.5 / (m * m);
    ConstantValue {
        value: sum + 0.5 * (lo + hi),
        error_bound: 0.5 * (hi - lo) + 1e-16,
        method: "series",
    }
}

/// `P = 1/ζ(3)`, the conjectured proportion of time a three-colour urn is a
/// coprime triple.
pub fn constant_p() -> ConstantValue {
    let z = zeta3_series(200_000);
    ConstantValue {
        value: 1.0 / z.value,
        error_bound: z.error_bound / (z.value * z.value),
        method: "series",
    }
}

/// `P` as the Euler product `Π_{p ≤ cutoff} (1 − 1/p³)`; the omitted factors
/// lower it by at most `1/(2·cutoff²)` relative.
pub fn constant_p_euler(cutoff: u64) -> ConstantValue {
    let log: f64 = primes_up_to(cutoff)
        .iter()
        .map(|&p| {
            let x = p as f64;
            (-1.0 / (x * x * x)).ln_1p()
        })
        .sum();
    let value = log.exp();
    let c = cutoff.max(1) as f64;
    ConstantValue {
        value,
        error_bound: value * 0.5 / (c * c),
        method: "euler_product",
    }
}

/// Default prime cutoff for [`constant_t`].
pub const T_CUTOFF: u64 = 10_000_000;

/// `T = Π_p (1 − 3(1 − 1/p)/p² − 1/p³)` over primes `≤ cutoff`.
///
/// Each omitted factor is `1 − x` with `x < 3/p² ≤ 1/2`, so
/// `−log(1 − x) ≤ 2x < 6/p²` and the omitted product lies in
/// `[exp(−6/cutoff), 1]`. The returned value is the truncated product and
/// `error_bound = value · (1 − exp(−6/cutoff))`.
pub fn constant_t(cutoff: u64) -> ConstantValue {
    let log: f64 = primes_up_to(cutoff)
        .iter()
        .map(|&p| {
            let x = p as f64;
            (-(3.0 * (1.0 - 1.0 / x) / (x * x) + 1.0 / (x * x * x))).ln_1p()
        })
        .sum();
    let value = log.exp();
    let c = cutoff.max(2) as f64;
    ConstantValue {
        value,
        error_bound: -value * (-6.0 / c).exp_m1(),
        method: "euler_product",
    }
}
