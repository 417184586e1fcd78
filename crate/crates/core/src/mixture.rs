//! The de Finetti layer: exchangeable step probabilities, beta laws, and
//! checks that Pólya's walk is a beta mixture of α-walks.

use std::f64::consts::FRAC_PI_2;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::stats::{integrate, ks_statistic};
use crate::walks::{run_walk, WalkConfig, WalkKind};

/// Largest `n` for which exact rational position laws are produced.
pub const EXACT_MODE_MAX: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParams {
    a: f64,
    b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("beta parameters must be positive, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// Mixture law of a Pólya walk from `(a0, b0)` with step `c`: Beta(a0/c, b0/c).
    pub fn for_polya(a0: u64, b0: u64, c: u64) -> Result<Self> {
        if c == 0 {
            return Err(invalid("step must be >= 1"));
        }
        Self::new(a0 as f64 / c as f64, b0 as f64 / c as f64)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn ln_beta(&self) -> f64 {
        ln_gamma(self.a) + ln_gamma(self.b) - ln_gamma(self.a + self.b)
    }
}

/// `Beta(a, b) = Γ(a)Γ(b)/Γ(a+b)`, via log-gamma.
pub fn beta_function(a: f64, b: f64) -> Result<f64> {
    Ok(BetaParams::new(a, b)?.ln_beta().exp())
}

/// Exact `Beta(a, b) = ((a+b)/(ab)) / C(a+b, a)` for positive integers.
pub fn beta_function_exact(a: u64, b: u64) -> Result<BigRational> {
    if a == 0 || b == 0 {
        return Err(invalid("beta parameters must be positive"));
    }
    let mut binom = BigInt::one();
    for i in 0..a {
        binom = binom * (a + b - i) / (i + 1);
    }
    Ok(BigRational::new(BigInt::from(a + b), BigInt::from(a) * b * binom))
}

/// Beta density `α^{a−1}(1−α)^{b−1} / Beta(a,b)` on the open unit interval.
pub fn beta_density(p: BetaParams, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let log = (p.a - 1.0) * alpha.ln() + (p.b - 1.0) * (-alpha).ln_1p() - p.ln_beta();
    Ok(log.exp())
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_cdf(p: BetaParams, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(p.a, p.b, x)
    }
}

/// One Beta(a, b) deviate.
pub fn beta_sample<R: Rng + ?Sized>(p: BetaParams, rng: &mut R) -> f64 {
    let dist = rand_distr::Beta::new(p.a, p.b).expect("validated parameters");
    rng.sample(dist)
}

/// A right/up sequence: `true` is a right step (an amber ball added).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    bits: Vec<bool>,
}

impl StepRecord {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self::new(bits.iter().map(|&b| b != 0).collect())
    }

    /// The `n` low bits of `mask`, least significant first.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self::new((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of right steps.
    pub fn t_n(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Probability that the urn with unequal additions `(r0, u0)` produces exactly
/// this sequence:
/// `Π_{j<t_n}(a0 + j r0) Π_{j<n−t_n}(b0 + j u0) / Π_{j<n}(a0 + b0 + j u0 + (r0−u0) t_j)`.
pub fn exchange_probability_steps(a0: u64, b0: u64, r0: u64, u0: u64, bits: &StepRecord) -> Result<BigRational> {
    if bits.is_empty() {
        return Err(invalid("step record must be nonempty"));
    }
    if a0 == 0 || b0 == 0 || r0 == 0 || u0 == 0 {
        return Err(invalid("urn parameters must be >= 1"));
    }
    let (mut amber, mut blue) = (BigInt::from(a0), BigInt::from(b0));
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for &right in bits.bits() {
        den *= &amber + &blue;
        if right {
            num *= &amber;
            amber += r0;
        } else {
            num *= &blue;
            blue += u0;
        }
    }
    Ok(BigRational::new(num, den))
}

/// Exchangeable case `r0 = u0 = c`.
pub fn exchange_probability(a0: u64, b0: u64, c: u64, bits: &StepRecord) -> Result<BigRational> {
    exchange_probability_steps(a0, b0, c, c, bits)
}

/// `Beta(a0/c + t, b0/c + n − t) / Beta(a0/c, b0/c)` in floating point.
pub fn exchange_probability_beta(a0: u64, b0: u64, c: u64, t: usize, n: usize) -> Result<f64> {
    let base = BetaParams::for_polya(a0, b0, c)?;
    let moved = BetaParams::new(base.a + t as f64, base.b + (n - t) as f64)?;
    Ok((moved.ln_beta() - base.ln_beta()).exp())
}

/// Exact law of the number of right steps after `n` steps: entry `k` is
/// `C(n,k)` times the probability of any single sequence with `k` right steps.
pub fn position_law_exact(a0: u64, b0: u64, c: u64, n: usize) -> Result<Vec<BigRational>> {
    if n > EXACT_MODE_MAX {
        return Err(Error::ExactModeLimit {
            n,
            max: EXACT_MODE_MAX,
        });
    }
    if n == 0 {
        return Ok(vec![BigRational::one()]);
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut binom = BigInt::one();
    for k in 0..=n {
        let rep = StepRecord::new((0..n).map(|i| i < k).collect());
        let p = exchange_probability(a0, b0, c, &rep)?;
        out.push(p * BigRational::from_integer(binom.clone()));
        binom = binom * (n - k) / (k + 1);
    }
    Ok(out)
}

/// Log-space version of [`position_law_exact`] for any `n`.
pub fn position_law(a0: u64, b0: u64, c: u64, n: usize) -> Result<Vec<f64>> {
    let ln_choose = |n: usize, k: usize| {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    };
    let base = BetaParams::for_polya(a0, b0, c)?;
    (0..=n)
        .map(|k| {
            let moved = BetaParams::new(base.a + k as f64, base.b + (n - k) as f64)?;
            Ok((ln_choose(n, k) + moved.ln_beta() - base.ln_beta()).exp())
        })
        .collect()
}

/// Sum of exact probabilities over every sequence of length `n` (enumerated).
pub fn total_sequence_probability(a0: u64, b0: u64, r0: u64, u0: u64, n: usize) -> Result<BigRational> {
    if n == 0 || n > 24 {
        return Err(invalid("enumeration supports 1 <= n <= 24"));
    }
    let mut total = BigRational::zero();
    for mask in 0..(1u64 << n) {
        total += exchange_probability_steps(a0, b0, r0, u0, &StepRecord::from_mask(mask, n))?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct KsReport {
    pub ks: f64,
    pub trials: u64,
    pub horizon: u64,
    pub master_seed: u64,
    pub law: BetaParams,
    /// Per-trial statistic in trial order (limit frequency or slope angle).
    #[serde(skip)]
    pub samples: Vec<f64>,
}

fn equal_step_polya(cfg: &WalkConfig) -> Result<(u64, u64, u64)> {
    let c = match (cfg.kind, cfg.common_step()) {
        (WalkKind::Polya, Some(c)) => c,
        _ => {
            return Err(Error::Unsupported(
                "the beta mixture law holds for equal-step Pólya walks only".into(),
            ))
        }
    };
    match cfg.start[..] {
        [a0, b0] => Ok((a0, b0, c)),
        _ => Err(invalid("expected a 2D start")),
    }
}

/// Simulates `trials` walks of `n` steps and returns the KS distance between
/// the empirical law of `right_count / n` and Beta(a0/c, b0/c).
pub fn definetti_check(cfg: &WalkConfig, n: u64, trials: u64, master_seed: u64) -> Result<KsReport> {
    let (a0, b0, c) = equal_step_polya(cfg)?;
    if n == 0 || trials == 0 {
        return Err(invalid("horizon and trials must be >= 1"));
    }
    let law = BetaParams::for_polya(a0, b0, c)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| run_walk(cfg, n, RngStream::new(master_seed, t)).map(|w| w.right_count as f64 / n as f64))
        .collect::<Result<_>>()?;
    let mut sorted = samples.clone();
    let ks = ks_statistic(&mut sorted, |x| beta_cdf(law, x));
    Ok(KsReport {
        ks,
        trials,
        horizon: n,
        master_seed,
        law,
        samples,
    })
}

/// Limit density of the slope angle `Ψ` of a Pólya walk whose limit frequency
/// is Beta(a0, b0):
/// `sin^{b0−1}ψ cos^{a0−1}ψ / ((sinψ + cosψ)^{a0+b0} Beta(a0, b0))`.
pub fn slope_limit_density(a0: f64, b0: f64, psi: f64) -> Result<f64> {
    if !(psi > 0.0 && psi < FRAC_PI_2) {
        return Err(invalid(format!("psi must lie in (0, π/2), got {psi}")));
    }
    let p = BetaParams::new(a0, b0)?;
    let (s, c) = psi.sin_cos();
    let log = (b0 - 1.0) * s.ln() + (a0 - 1.0) * c.ln() - (a0 + b0) * (s + c).ln() - p.ln_beta();
    Ok(log.exp())
}

/// `P(Ψ ≤ ψ) = 1 − I_{cosψ/(sinψ+cosψ)}(a0, b0)`, since `Ψ = arctan((1−L)/L)`.
pub fn slope_limit_cdf(a0: f64, b0: f64, psi: f64) -> f64 {
    if psi <= 0.0 {
        return 0.0;
    }
    if psi >= FRAC_PI_2 {
        return 1.0;
    }
    let p = BetaParams { a: a0, b: b0 };
    let (s, c) = psi.sin_cos();
    1.0 - beta_cdf(p, c / (s + c))
}

/// KS distance between final slope angles of `trials` walks and the limit
/// slope law.
pub fn slope_check(cfg: &WalkConfig, n: u64, trials: u64, master_seed: u64) -> Result<KsReport> {
    let (a0, b0, c) = equal_step_polya(cfg)?;
    let law = BetaParams::for_polya(a0, b0, c)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| run_walk(cfg, n, RngStream::new(master_seed, t)).map(|w| w.slope_angle))
        .collect::<Result<_>>()?;
    let mut sorted = samples.clone();
    let ks = ks_statistic(&mut sorted, |psi| slope_limit_cdf(law.a, law.b, psi));
    Ok(KsReport {
        ks,
        trials,
        horizon: n,
        master_seed,
        law,
        samples,
    })
}

/// `∫_ε^{1−ε} (α(1−α))^{−exponent} f_{a,b}(α) dα`, integrated in log
/// coordinates on each half so the endpoint behaviour stays smooth.
pub fn truncated_weight_integral(p: BetaParams, exponent: f64, eps: f64) -> f64 {
    let g = |alpha: f64, one_minus: f64| {
        let log = (p.a - 1.0 - exponent) * alpha.ln() + (p.b - 1.0 - exponent) * one_minus.ln() - p.ln_beta();
        log.exp()
    };
    // α = e^x near 0, and 1 − α = e^x near 1.
    let left = |x: f64| {
        let alpha = x.exp();
        g(alpha, 1.0 - alpha) * alpha
    };
    let right = |x: f64| {
        let om = x.exp();
        g(1.0 - om, om) * om
    };
    let lo = eps.ln();
    let hi = 0.5f64.ln();
    integrate(&left, lo, hi, 1e-12) + integrate(&right, lo, hi, 1e-12)
}

/// Decides numerically whether `∫ (α(1−α))^{−exponent} f_{a,b}` is finite by
/// watching the truncated integral as the cut-off shrinks from 1e−4 to 1e−12.
///
/// A convergent integral has geometrically shrinking increments; a divergent
/// one has increments that stay level (logarithmic) or grow.
pub fn weight_integral_is_finite(p: BetaParams, exponent: f64) -> bool {
    let cuts = [1e-4, 1e-6, 1e-8, 1e-10, 1e-12];
    let vals: Vec<f64> = cuts.iter().map(|&e| truncated_weight_integral(p, exponent, e)).collect();
    let incs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let first = incs[0].abs().max(f64::MIN_POSITIVE);
    let last = incs[incs.len() - 1].abs();
    last < 0.5 * first
}
