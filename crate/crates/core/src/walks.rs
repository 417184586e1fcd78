//! Step-exact simulation of Pólya walks and their relatives, with
//! visibility bookkeeping.
//!
//! A 2D walk at `(a, b)` moves right by `step_right` or up by `step_up`. The
//! move is decided by one uniform draw per step, taken from the trial's
//! counter-based stream at index `step - 1`.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::numtheory::{gcd, gcd_u64};
use crate::rng::{RngStream, StreamRng};
use crate::stats::mean_var;

/// Which process is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WalkKind {
    /// Same-colour reinforcement: right with probability `a/(a+b)`.
    Polya,
    /// i.i.d. increments: right with fixed probability `alpha`.
    AlphaRandom { alpha: f64 },
    /// Opposite-colour reinforcement (Friedman's urn).
    Friedman,
    /// Three-colour Pólya urn with unit additions.
    Polya3D,
}

impl WalkKind {
    pub fn label(&self) -> &'static str {
        match self {
            WalkKind::Polya => "polya",
            WalkKind::AlphaRandom { .. } => "alpha",
            WalkKind::Friedman => "friedman",
            WalkKind::Polya3D => "polya3d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub kind: WalkKind,
    pub start: Vec<u64>,
    pub step_right: u64,
    pub step_up: u64,
}

impl WalkConfig {
    pub fn polya(a0: u64, b0: u64) -> Self {
        Self::polya_step(a0, b0, 1)
    }

    /// Pólya walk whose right and up steps both have size `c`.
    pub fn polya_step(a0: u64, b0: u64, c: u64) -> Self {
        Self {
            kind: WalkKind::Polya,
            start: vec![a0, b0],
            step_right: c,
            step_up: c,
        }
    }

    pub fn alpha(alpha: f64, a0: u64, b0: u64) -> Self {
        Self {
            kind: WalkKind::AlphaRandom { alpha },
            start: vec![a0, b0],
            step_right: 1,
            step_up: 1,
        }
    }

    pub fn friedman(a0: u64, b0: u64) -> Self {
        Self {
            kind: WalkKind::Friedman,
            start: vec![a0, b0],
            step_right: 1,
            step_up: 1,
        }
    }

    pub fn polya3d(a0: u64, b0: u64, c0: u64) -> Self {
        Self {
            kind: WalkKind::Polya3D,
            start: vec![a0, b0, c0],
            step_right: 1,
            step_up: 1,
        }
    }

    pub fn with_steps(mut self, step_right: u64, step_up: u64) -> Self {
        self.step_right = step_right;
        self.step_up = step_up;
        self
    }

    pub fn dims(&self) -> usize {
        self.start.len()
    }

    /// `Some(c)` when both step sizes equal `c`.
    pub fn common_step(&self) -> Option<u64> {
        (self.step_right == self.step_up).then_some(self.step_right)
    }

    pub fn validate(&self) -> Result<()> {
        let want = if self.kind == WalkKind::Polya3D { 3 } else { 2 };
        if self.start.len() != want {
            return Err(invalid(format!(
                "{} walk needs {want} start coordinates, got {}",
                self.kind.label(),
                self.start.len()
            )));
        }
        if self.start.contains(&0) {
            return Err(invalid("start coordinates must be >= 1"));
        }
        if self.step_right == 0 || self.step_up == 0 {
            return Err(invalid("step sizes must be >= 1"));
        }
        if let WalkKind::AlphaRandom { alpha } = self.kind {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
            }
        }
        Ok(())
    }

    pub fn start_position(&self) -> Position {
        Position::new(&self.start)
    }
}

/// Urn composition / lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    coords: [u128; 3],
    dim: u8,
}

impl Position {
    pub fn new(coords: &[u64]) -> Self {
        assert!(coords.len() == 2 || coords.len() == 3);
        let mut c = [0u128; 3];
        for (slot, &x) in c.iter_mut().zip(coords) {
            *slot = u128::from(x);
        }
        Self {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn coords(&self) -> &[u128] {
        &self.coords[..self.dim as usize]
    }

    pub fn sum(&self) -> u128 {
        self.coords().iter().sum()
    }

    /// gcd of all coordinates.
    pub fn gcd(&self) -> u128 {
        self.coords().iter().fold(0, |g, &x| gcd(g, x))
    }

    /// True when every pair of coordinates is coprime.
    pub fn pairwise_coprime(&self) -> bool {
        let c = self.coords();
        (0..c.len()).all(|i| (i + 1..c.len()).all(|j| gcd(c[i], c[j]) == 1))
    }
}

/// One transition given the uniform draw `u ∈ [0,1)`.
///
/// Returns the new position and whether the first coordinate grew.
pub fn step(kind: WalkKind, pos: &Position, steps: (u64, u64), u: f64) -> (Position, bool) {
    let mut next = *pos;
    let (r0, u0) = (u128::from(steps.0), u128::from(steps.1));
    match kind {
        WalkKind::Polya3D => {
            let [a, b, c] = pos.coords;
            let s = (a + b + c) as f64;
            let i = if u < a as f64 / s {
                0
            } else if u < (a + b) as f64 / s {
                1
            } else {
                2
            };
            next.coords[i] += 1;
            (next, i == 0)
        }
        WalkKind::Polya | WalkKind::Friedman | WalkKind::AlphaRandom { .. } => {
            let [a, b, _] = pos.coords;
            let p = match kind {
                WalkKind::AlphaRandom { alpha } => alpha,
                _ => a as f64 / (a + b) as f64,
            };
            let drawn_first = u < p;
            let right = if kind == WalkKind::Friedman {
                !drawn_first
            } else {
                drawn_first
            };
            if right {
                next.coords[0] += r0;
            } else {
                next.coords[1] += u0;
            }
            (next, right)
        }
    }
}

/// Occupation statistics of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitStats {
    pub horizon: u64,
    /// Steps `1..=N` at which all coordinates were jointly coprime.
    pub visible_steps: u64,
    pub q: f64,
    /// `(k, fraction of steps with gcd = k)`, always including `k = 1`.
    pub q_k: Vec<(u64, f64)>,
    /// 3D only: fraction of steps at which the composition is pairwise coprime.
    pub pairwise: Option<f64>,
    pub right_count: u64,
    pub final_position: Position,
    /// `atan2(b_N - b_0, a_N - a_0)`; `π/2` when every step went up.
    pub slope_angle: f64,
    /// `|Y_N - Y_0| / ((a_N - a_0) + (b_N - b_0))`, which equals `r_N/N` for unit steps.
    pub radial_ratio: f64,
}

fn normalized_k_list(k_list: &[u64]) -> Vec<u64> {
    let mut ks: Vec<u64> = k_list.iter().copied().filter(|&k| k >= 1).collect();
    ks.push(1);
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn geometry(cfg: &WalkConfig, fin: &Position) -> (f64, f64) {
    let da = (fin.coords[0] - u128::from(cfg.start[0])) as f64;
    let db = (fin.coords[1] - u128::from(cfg.start[1])) as f64;
    let angle = db.atan2(da);
    let total = da + db;
    let radial = if total > 0.0 { da.hypot(db) / total } else { 0.0 };
    (angle, radial)
}

/// Runs `horizon` steps of `cfg` on `stream`, checking visibility after each.
pub fn simulate(cfg: &WalkConfig, horizon: u64, k_list: &[u64], stream: RngStream) -> Result<VisitStats> {
    cfg.validate()?;
    if horizon == 0 {
        return Err(invalid("horizon must be >= 1"));
    }
    let ks = normalized_k_list(k_list);
    let mut k_counts = vec![0u64; ks.len()];
    let mut pairwise_count = 0u64;
    let mut right_count = 0u64;
    let mut rng = stream.reader();
    let mut pos = cfg.start_position();
    let steps = (cfg.step_right, cfg.step_up);
    let start_sum = pos.sum();
    let three_d = cfg.kind == WalkKind::Polya3D;

    if three_d {
        for n in 1..=horizon {
            let (next, right) = step(cfg.kind, &pos, steps, rng.next_uniform());
            pos = next;
            right_count += u64::from(right);
            if cfg!(debug_assertions) {
                check_sum_invariant(cfg, &pos, start_sum, n, right_count);
            }
            let [a, b, c] = pos.coords;
            let gab = gcd(a, b);
            if gab == 1 && gcd(a, c) == 1 && gcd(b, c) == 1 {
                pairwise_count += 1;
            }
            tally(&ks, &mut k_counts, gcd(gab, c));
        }
    } else {
        // 2D fast path on 64-bit coordinates; the decisions match `step`.
        let (r0, u0) = steps;
        let limit = cfg.start[0].max(cfg.start[1]) as u128 + u128::from(horizon) * u128::from(r0.max(u0));
        if limit > u128::from(u64::MAX) {
            return Err(invalid("horizon too large for 64-bit coordinates"));
        }
        let (mut a, mut b) = (cfg.start[0], cfg.start[1]);
        let kind = cfg.kind;
        let friedman = kind == WalkKind::Friedman;
        for _ in 1..=horizon {
            let u = rng.next_uniform();
            let p = match kind {
                WalkKind::AlphaRandom { alpha } => alpha,
                _ => a as f64 / (a + b) as f64,
            };
            if (u < p) != friedman {
                a += r0;
                right_count += 1;
            } else {
                b += u0;
            }
            let g = gcd_u64(a, b);
            if g == 1 {
                k_counts[0] += 1;
            } else {
                tally(&ks, &mut k_counts, u128::from(g));
            }
        }
        pos.coords[0] = u128::from(a);
        pos.coords[1] = u128::from(b);
        if cfg!(debug_assertions) {
            check_sum_invariant(cfg, &pos, start_sum, horizon, right_count);
        }
    }

    let nf = horizon as f64;
    let q_k: Vec<(u64, f64)> = ks
        .iter()
        .zip(&k_counts)
        .map(|(&k, &c)| (k, c as f64 / nf))
        .collect();
    let visible_steps = k_counts[0];
    let (slope_angle, radial_ratio) = geometry(cfg, &pos);
    Ok(VisitStats {
        horizon,
        visible_steps,
        q: visible_steps as f64 / nf,
        q_k,
        pairwise: three_d.then(|| pairwise_count as f64 / nf),
        right_count,
        final_position: pos,
        slope_angle,
        radial_ratio,
    })
}

#[inline]
fn tally(ks: &[u64], counts: &mut [u64], g: u128) {
    if let Some(i) = ks.iter().position(|&k| u128::from(k) == g) {
        counts[i] += 1;
    }
}

fn check_sum_invariant(cfg: &WalkConfig, pos: &Position, start_sum: u128, n: u64, right: u64) {
    let expected = if cfg.kind == WalkKind::Polya3D {
        start_sum + u128::from(n)
    } else {
        start_sum
            + u128::from(right) * u128::from(cfg.step_right)
            + u128::from(n - right) * u128::from(cfg.step_up)
    };
    debug_assert_eq!(pos.sum(), expected, "coordinate sum invariant broken at step {n}");
}

/// Endpoint of a trajectory, without visibility bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub right_count: u64,
    pub final_position: Position,
    pub slope_angle: f64,
    pub radial_ratio: f64,
}

/// Runs `horizon` steps, tracking only the endpoint. Uses the same draws as
/// [`simulate`], so both agree on `right_count` and the final position.
pub fn run_walk(cfg: &WalkConfig, horizon: u64, stream: RngStream) -> Result<Trajectory> {
    cfg.validate()?;
    let mut rng: StreamRng = stream.reader();
    let steps = (cfg.step_right, cfg.step_up);
    let mut right_count = 0u64;
    let final_position = match cfg.kind {
        WalkKind::Polya3D => {
            let mut pos = cfg.start_position();
            for _ in 0..horizon {
                let (next, right) = step(cfg.kind, &pos, steps, rng.next_uniform());
                pos = next;
                right_count += u64::from(right);
            }
            pos
        }
        kind => {
            // Inlined 2D loop; identical decisions to `step`.
            let (mut a, mut b) = (u128::from(cfg.start[0]), u128::from(cfg.start[1]));
            let (r0, u0) = (u128::from(steps.0), u128::from(steps.1));
            for _ in 0..horizon {
                let u = rng.next_uniform();
                let p = match kind {
                    WalkKind::AlphaRandom { alpha } => alpha,
                    _ => a as f64 / (a + b) as f64,
                };
                let right = (u < p) != (kind == WalkKind::Friedman);
                if right {
                    a += r0;
                    right_count += 1;
                } else {
                    b += u0;
                }
            }
            let mut pos = cfg.start_position();
            pos.coords[0] = a;
            pos.coords[1] = b;
            pos
        }
    };
    let (slope_angle, radial_ratio) = geometry(cfg, &final_position);
    Ok(Trajectory {
        right_count,
        final_position,
        slope_angle,
        radial_ratio,
    })
}

/// Aggregate over independent trials; trial `t` uses stream id `t`.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloSummary {
    pub config: WalkConfig,
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub mean_q: f64,
    pub var_q: f64,
    pub stderr: f64,
    pub mean_q_k: Vec<(u64, f64)>,
    pub var_q_k: Vec<(u64, f64)>,
    pub mean_pairwise: Option<f64>,
    pub var_pairwise: Option<f64>,
    #[serde(skip)]
    pub records: Vec<VisitStats>,
}

pub fn monte_carlo(
    cfg: &WalkConfig,
    horizon: u64,
    trials: u64,
    k_list: &[u64],
    master_seed: u64,
) -> Result<MonteCarloSummary> {
    if trials < 2 {
        return Err(invalid("monte carlo needs at least 2 trials"));
    }
    cfg.validate()?;
    let records: Vec<VisitStats> = (0..trials)
        .into_par_iter()
        .map(|t| simulate(cfg, horizon, k_list, RngStream::new(master_seed, t)))
        .collect::<Result<_>>()?;
    Ok(summarize(cfg, horizon, master_seed, records))
}

fn summarize(cfg: &WalkConfig, horizon: u64, master_seed: u64, records: Vec<VisitStats>) -> MonteCarloSummary {
    let qs: Vec<f64> = records.iter().map(|r| r.q).collect();
    let (mean_q, var_q) = mean_var(&qs);
    let ks: Vec<u64> = records[0].q_k.iter().map(|&(k, _)| k).collect();
    let mut mean_q_k = Vec::with_capacity(ks.len());
    let mut var_q_k = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let xs: Vec<f64> = records.iter().map(|r| r.q_k[i].1).collect();
        let (m, v) = mean_var(&xs);
        mean_q_k.push((k, m));
        var_q_k.push((k, v));
    }
    let (mean_pairwise, var_pairwise) = if records[0].pairwise.is_some() {
        let xs: Vec<f64> = records.iter().map(|r| r.pairwise.unwrap_or(0.0)).collect();
        let (m, v) = mean_var(&xs);
        (Some(m), Some(v))
    } else {
        (None, None)
    };
    let trials = records.len() as u64;
    MonteCarloSummary {
        config: cfg.clone(),
        horizon,
        trials,
        master_seed,
        mean_q,
        var_q,
        stderr: (var_q / trials as f64).sqrt(),
        mean_q_k,
        var_q_k,
        mean_pairwise,
        var_pairwise,
        records,
    }
}

impl MonteCarloSummary {
    pub fn mean_q_for(&self, k: u64) -> Option<f64> {
        self.mean_q_k.iter().find(|&&(kk, _)| kk == k).map(|&(_, m)| m)
    }

    /// Per-trial CSV: `trial_id,N,q,q_k:<k>...,[pairwise,]right_count,slope_angle,radial_ratio`.
    pub fn write_trials_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let ks: Vec<u64> = self.mean_q_k.iter().map(|&(k, _)| k).collect();
        let mut header = String::from("trial_id,N,q");
        for k in &ks {
            header.push_str(&format!(",q_k:{k}"));
        }
        if self.mean_pairwise.is_some() {
            header.push_str(",pairwise");
        }
        header.push_str(",right_count,slope_angle,radial_ratio");
        writeln!(out, "{header}")?;
        for (t, r) in self.records.iter().enumerate() {
            let mut line = format!("{t},{},{}", r.horizon, r.q);
            for (_, v) in &r.q_k {
                line.push_str(&format!(",{v}"));
            }
            if let Some(p) = r.pairwise {
                line.push_str(&format!(",{p}"));
            }
            line.push_str(&format!(",{},{},{}", r.right_count, r.slope_angle, r.radial_ratio));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Named trajectory events with closed-form probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryEvent {
    /// The first `n` steps are all upward.
    FirstNUp(u64),
    /// Starting at height 1, the first `N` steps are all rightward.
    StayAtHeightOne(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventProbability {
    Exact(BigRational),
    Real(f64),
}

impl EventProbability {
    pub fn to_f64(&self) -> f64 {
        match self {
            EventProbability::Exact(r) => num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN),
            EventProbability::Real(x) => *x,
        }
    }
}

/// Probability that an equal-step Pólya walk makes `n` consecutive moves in
/// one direction, the "stay" coordinate starting at `stay` and the other at
/// `grow`: `Π_{j<n} (stay + jc)/(stay + grow + jc)`.
fn run_probability(stay: u64, other: u64, c: u64, n: u64) -> EventProbability {
    if c == 1 {
        let mut p = BigRational::one();
        for j in 0..n {
            p *= BigRational::new(BigInt::from(stay + j), BigInt::from(stay + other + j));
        }
        EventProbability::Exact(p)
    } else {
        let (x, s, nf) = (stay as f64 / c as f64, (stay + other) as f64 / c as f64, n as f64);
        EventProbability::Real((ln_gamma(x + nf) - ln_gamma(x) + ln_gamma(s) - ln_gamma(s + nf)).exp())
    }
}

/// Exact probability of a named event for an equal-step Pólya walk (or an
/// α-walk, where it is a plain power).
pub fn exact_event_probability(cfg: &WalkConfig, event: TrajectoryEvent) -> Result<EventProbability> {
    cfg.validate()?;
    let (a0, b0) = match cfg.start[..] {
        [a, b] => (a, b),
        _ => return Err(Error::Unsupported("trajectory events are 2D only".into())),
    };
    match cfg.kind {
        WalkKind::Polya => {
            let c = cfg.common_step().ok_or_else(|| {
                Error::Unsupported("trajectory events need equal step sizes".into())
            })?;
            match event {
                TrajectoryEvent::FirstNUp(n) => Ok(run_probability(b0, a0, c, n)),
                TrajectoryEvent::StayAtHeightOne(n) => {
                    if b0 != 1 {
                        return Err(invalid("StayAtHeightOne needs b0 = 1"));
                    }
                    Ok(run_probability(a0, b0, c, n))
                }
            }
        }
        WalkKind::AlphaRandom { alpha } => match event {
            TrajectoryEvent::FirstNUp(n) => Ok(EventProbability::Real((1.0 - alpha).powf(n as f64))),
            TrajectoryEvent::StayAtHeightOne(n) if b0 == 1 => {
                Ok(EventProbability::Real(alpha.powf(n as f64)))
            }
            TrajectoryEvent::StayAtHeightOne(_) => Err(invalid("StayAtHeightOne needs b0 = 1")),
        },
        _ => Err(Error::Unsupported(format!(
            "no closed form for {} walks",
            cfg.kind.label()
        ))),
    }
}
