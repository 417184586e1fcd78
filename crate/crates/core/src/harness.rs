//! Configuration-driven experiment runner.
//!
//! An [`ExperimentSpec`] is a flat TOML document:
//!
//! ```toml
//! name = "polya-unit"
//! walk = "polya"          # polya | alpha | friedman | polya3d
//! start = [1, 1]
//! step_right = 1          # optional, default 1
//! step_up = 1             # optional, default 1
//! alpha = 0.5             # alpha walk only
//! horizons = [1000, 10000, 100000]
//! trials = 200
//! k_list = [2, 3]         # optional; 2D walks only
//! seed = 7
//! output_dir = "out/polya-unit"   # optional
//! target = 0.6079         # optional override of the resolved target
//! tolerance = 0.02        # optional hard threshold on the final |mean − target|
//! ```
//!
//! [`run`] simulates every horizon, resolves limit targets from
//! [`crate::densities`], and [`write_outputs`] emits `convergence.csv`,
//! one `trials_N<N>.csv` per horizon, `summary.json` and `meta.json`. Only
//! `meta.json` carries wall-clock information, so every other file is a pure
//! function of the spec.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::densities::{self, DensityParams};
use crate::error::{Error, Result};
use crate::walks::{monte_carlo, MonteCarloSummary, WalkConfig, WalkKind};

/// Version of every CSV and JSON layout written by this module.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "URNWALK_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkName {
    Polya,
    Alpha,
    Friedman,
    Polya3d,
}

fn one() -> u64 {
    1
}

/// On-disk form of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub name: String,
    pub walk: WalkName,
    pub start: Vec<u64>,
    #[serde(default = "one")]
    pub step_right: u64,
    #[serde(default = "one")]
    pub step_up: u64,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub horizons: Vec<u64>,
    pub trials: u64,
    #[serde(default)]
    pub k_list: Vec<u64>,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub walk: WalkConfig,
    pub horizons: Vec<u64>,
    pub trials: u64,
    pub k_list: Vec<u64>,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
}

impl TryFrom<SpecFile> for ExperimentSpec {
    type Error = Error;

    fn try_from(f: SpecFile) -> Result<Self> {
        let kind = match f.walk {
            WalkName::Polya => WalkKind::Polya,
            WalkName::Friedman => WalkKind::Friedman,
            WalkName::Polya3d => WalkKind::Polya3D,
            WalkName::Alpha => WalkKind::AlphaRandom {
                alpha: f.alpha.ok_or_else(|| Error::Config("alpha walk needs `alpha`".into()))?,
            },
        };
        if f.alpha.is_some() && f.walk != WalkName::Alpha {
            return Err(Error::Config("`alpha` is only meaningful for the alpha walk".into()));
        }
        let spec = ExperimentSpec {
            name: f.name,
            walk: WalkConfig {
                kind,
                start: f.start,
                step_right: f.step_right,
                step_up: f.step_up,
            },
            horizons: f.horizons,
            trials: f.trials,
            k_list: f.k_list,
            master_seed: f.seed,
            output_dir: f.output_dir,
            target: f.target,
            tolerance: f.tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.walk.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.horizons.is_empty() {
            return Err(Error::Config("at least one horizon is required".into()));
        }
        if self.horizons[0] == 0 || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("horizons must be positive and strictly increasing".into()));
        }
        if self.trials < 2 {
            return Err(Error::Config("trials must be >= 2 to estimate a variance".into()));
        }
        if self.walk.kind == WalkKind::Polya3D && !self.k_list.is_empty() {
            return Err(Error::Config("k_list is not defined for the three-colour walk".into()));
        }
        if self.k_list.contains(&0) {
            return Err(Error::Config("k_list entries must be >= 1".into()));
        }
        if let Some(t) = self.target {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("target must lie in [0,1], got {t}")));
            }
        }
        if let Some(tol) = self.tolerance {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::Config("tolerance must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Where a target value came from and whether it is proven.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Target {
    pub value: f64,
    pub source: String,
    /// True when the limit is an open question rather than a theorem.
    pub conjectural: bool,
}

impl Target {
    fn proven(value: f64, source: impl Into<String>) -> Self {
        Self {
            value,
            source: source.into(),
            conjectural: false,
        }
    }

    fn conjecture(value: f64, source: impl Into<String>) -> Self {
        Self {
            value,
            source: source.into(),
            conjectural: true,
        }
    }
}

/// Targets for the statistics a run reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Targets {
    pub q: Option<Target>,
    pub q_k: Vec<(u64, Option<Target>)>,
    pub pairwise: Option<Target>,
}

/// Resolves limit targets for `walk`.
///
/// Proven: equal-step Pólya and α-walks (affine-grid density), and the
/// `k`-visible density for unit steps. Conjectural: unequal steps, Friedman's
/// urn, and both constants of the three-colour urn.
pub fn resolve_targets(walk: &WalkConfig, k_list: &[u64]) -> Result<Targets> {
    walk.validate()?;
    if walk.kind == WalkKind::Polya3D {
        return Ok(Targets {
            q: Some(Target::conjecture(densities::constant_p().value, "1/zeta(3)")),
            q_k: vec![],
            pairwise: Some(Target::conjecture(
                densities::constant_t(densities::T_CUTOFF).value,
                "prod_p (1 - 3/p^2 + 2/p^3)",
            )),
        });
    }
    let params = DensityParams::new(walk.start[0], walk.start[1], walk.step_right, walk.step_up)?;
    let grid = densities::delta_general(params).value;
    let source = format!(
        "delta_general({},{},{},{})",
        params.a0, params.b0, params.r0, params.u0
    );
    let q = match (walk.kind, walk.common_step()) {
        (WalkKind::Friedman, _) => Target::conjecture(densities::inv_zeta2(), "1/zeta(2)"),
        (_, None) => Target::conjecture(grid, source),
        _ => Target::proven(grid, source),
    };
    let unit = walk.common_step() == Some(1) && walk.kind != WalkKind::Friedman;
    let mut ks: Vec<u64> = k_list.iter().copied().filter(|&k| k > 1).collect();
    ks.sort_unstable();
    ks.dedup();
    let q_k = ks
        .into_iter()
        .map(|k| {
            let t = unit.then(|| Target::proven(densities::k_visible_density(k), format!("k_visible_density({k})")));
            (k, t)
        })
        .collect();
    Ok(Targets {
        q: Some(q),
        q_k,
        pairwise: None,
    })
}

/// One line of `convergence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// `q`, `q_k:<k>` or `pairwise`.
    pub statistic: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub mean_q: f64,
    pub var_q: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    pub abs_err: Option<f64>,
    pub abs_err_times_n_quarter: Option<f64>,
    pub conjectural: bool,
}

impl ConvergenceRow {
    fn new(statistic: String, n: u64, trials: u64, mean: f64, var: f64, target: Option<&Target>) -> Self {
        let abs_err = target.map(|t| (mean - t.value).abs());
        Self {
            statistic,
            n,
            mean_q: mean,
            var_q: var,
            stderr: (var / trials as f64).sqrt(),
            target: target.map(|t| t.value),
            abs_err,
            abs_err_times_n_quarter: abs_err.map(|e| e * (n as f64).powf(0.25)),
            conjectural: target.is_some_and(|t| t.conjectural),
        }
    }
}

/// A pass/fail threshold evaluated on the final horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Hard checks decide the exit code; soft ones are informational.
    pub hard: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub schema_version: u32,
    pub spec: ExperimentSpec,
    pub targets: Targets,
    pub rows: Vec<ConvergenceRow>,
    pub checks: Vec<Check>,
    /// Observed power-law decay of the error, per statistic.
    pub decay: Vec<DecaySlope>,
    #[serde(skip)]
    pub summaries: Vec<MonteCarloSummary>,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

/// Least-squares slope of `ln |mean − target|` against `ln N`.
///
/// A slope of `−1/4` matches the proven worst-case rate; Monte Carlo noise
/// flattens the curve once the error reaches the standard error, so this is
/// descriptive only and never gates a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySlope {
    pub statistic: String,
    pub slope: f64,
    pub points: usize,
}

fn decay_slopes(rows: &[ConvergenceRow]) -> Vec<DecaySlope> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.statistic.as_str()) {
            names.push(&r.statistic);
        }
    }
    names
        .into_iter()
        .filter_map(|name| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.statistic == name)
                .filter_map(|r| r.abs_err.filter(|&e| e > 0.0).map(|e| ((r.n as f64).ln(), e.ln())))
                .collect();
            if pts.len() < 2 {
                return None;
            }
            let m = pts.len() as f64;
            let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            Some(DecaySlope { statistic: name.to_string(), slope: sxy / sxx, points: pts.len() })
        })
        .collect()
}

impl RunOutcome {
    /// True iff every hard check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.hard).all(|c| c.passed)
    }
}

/// Simulates every horizon of `spec` and assembles the convergence table.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let started = Instant::now();
    let mut targets = resolve_targets(&spec.walk, &spec.k_list)?;
    if let Some(v) = spec.target {
        targets.q = Some(Target::proven(v, "spec override"));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::with_capacity(spec.horizons.len());
    for &n in &spec.horizons {
        let s = monte_carlo(&spec.walk, n, spec.trials, &spec.k_list, spec.master_seed)?;
        rows.push(ConvergenceRow::new("q".into(), n, s.trials, s.mean_q, s.var_q, targets.q.as_ref()));
        for (k, t) in &targets.q_k {
            let mean = s.mean_q_for(*k).unwrap_or(0.0);
            let var = s.var_q_k.iter().find(|e| e.0 == *k).map_or(0.0, |e| e.1);
            rows.push(ConvergenceRow::new(format!("q_k:{k}"), n, s.trials, mean, var, t.as_ref()));
        }
        if let (Some(m), Some(v)) = (s.mean_pairwise, s.var_pairwise) {
            rows.push(ConvergenceRow::new("pairwise".into(), n, s.trials, m, v, targets.pairwise.as_ref()));
        }
        summaries.push(s);
    }

    let mut checks = Vec::new();
    if let Some(tol) = spec.tolerance {
        let last = *spec.horizons.last().expect("validated");
        for row in rows.iter().filter(|r| r.n == last) {
            if let Some(err) = row.abs_err {
                // The final q row is held to `tolerance`; k-rows scale with their target.
                let threshold = if row.statistic == "q" { tol } else { tol / 2.0 };
                checks.push(Check {
                    name: format!("{} |mean - target| at N={last}", row.statistic),
                    observed: err,
                    threshold,
                    passed: err < threshold,
                    hard: !row.conjectural,
                });
            }
        }
    }
    Ok(RunOutcome {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        targets,
        decay: decay_slopes(&rows),
        rows,
        checks,
        summaries,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// `convergence.csv` body.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "schema_version,statistic,N,mean_q,var_q,stderr,target,abs_err,abs_err_times_N_quarter,conjectural"
    )?;
    for r in rows {
        writeln!(
            out,
            "{SCHEMA_VERSION},{},{},{},{},{},{},{},{},{}",
            r.statistic,
            r.n,
            r.mean_q,
            r.var_q,
            r.stderr,
            opt(r.target),
            opt(r.abs_err),
            opt(r.abs_err_times_n_quarter),
            r.conjectural
        )?;
    }
    Ok(())
}

/// Resolves the output directory: explicit argument, then the spec, then
/// `$URNWALK_OUT_DIR/<name>`, then `./out/<name>`.
pub fn output_dir(spec: &ExperimentSpec, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = &spec.output_dir {
        return p.clone();
    }
    let base = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
    base.join(&spec.name)
}

#[derive(Serialize)]
struct Meta<'a> {
    schema_version: u32,
    name: &'a str,
    unix_time: u64,
    elapsed_secs: f64,
    threads: usize,
    crate_version: &'static str,
}

/// Writes every artifact of `outcome` into `dir` and returns the file paths.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let path = dir.join("convergence.csv");
    let mut w = BufWriter::new(fs::File::create(&path)?);
    write_convergence_csv(&outcome.rows, &mut w)?;
    w.flush()?;
    files.push(path);

    for s in &outcome.summaries {
        let path = dir.join(format!("trials_N{}.csv", s.horizon));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        s.write_trials_csv(&mut w)?;
        w.flush()?;
        files.push(path);
    }

    let path = dir.join("summary.json");
    let mut body = serde_json::to_string_pretty(outcome).map_err(|e| Error::Config(e.to_string()))?;
    body.push('\n');
    fs::write(&path, body)?;
    files.push(path);

    let meta = Meta {
        schema_version: SCHEMA_VERSION,
        name: &outcome.spec.name,
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        elapsed_secs: outcome.elapsed_secs,
        threads: rayon::current_num_threads(),
        crate_version: env!("CARGO_PKG_VERSION"),
    };
    let path = dir.join("meta.json");
    fs::write(&path, serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?)?;
    files.push(path);
    Ok(files)
}

fn check(name: &str, observed: f64, threshold: f64, passed: bool) -> Check {
    Check {
        name: name.to_string(),
        observed,
        threshold,
        passed,
        hard: true,
    }
}

/// A fast property suite touching every module; each entry is one hard check.
pub fn selftest() -> Result<Vec<Check>> {
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive};

    use crate::{estimates, mixture, numtheory};

    let mut out = Vec::new();
    let table = numtheory::sieve(100_000)?;

    let gauss_ok = (1..=10_000u64).all(|n| {
        let f = table.factorize(n);
        f.divisors().iter().map(|&d| table.totient(d)).sum::<u64>() == n
    });
    out.push(check("sum of totients over divisors is n (n <= 1e4)", 0.0, 0.0, gauss_ok));

    let m4 = numtheory::mertens_weighted_sum(&table, 4)?;
    let expected = BigRational::new(8.into(), 3.into());
    out.push(check("weighted Mobius sum at n=4 is 8/3", m4.to_f64().unwrap_or(f64::NAN), 8.0 / 3.0, m4 == expected));

    let d = densities::delta_general(DensityParams::new(1, 1, 2, 2)?).value;
    out.push(check("density of (1,1;2,2)", d, 0.810_569, (d - 0.810_569).abs() < 1e-6));

    let c = densities::brute_force_count(DensityParams::new(1, 1, 1, 1)?, 3);
    out.push(check("coprime pairs in {1..4}^2 is 11", c as f64, 11.0, c == 11));

    let p = densities::constant_p().value;
    out.push(check("1/zeta(3)", p, 0.831_907, (p - 0.831_907_372_6).abs() < 1e-9));

    let e3 = estimates::expected_q_closed_form_exact(&table, 3)?;
    out.push(check(
        "closed-form E(Q_3) is 8/9",
        e3.to_f64().unwrap_or(f64::NAN),
        8.0 / 9.0,
        e3 == BigRational::new(8.into(), 9.into()),
    ));

    let b = estimates::check_binomial_sup_bound(50, &estimates::default_alpha_grid())?;
    out.push(check("binomial sup bound (n <= 50)", b.max_ratio, 1.0, b.holds()));

    let (nums, den) = estimates::residue_class_numerators(100, 3, 10, 7)?;
    out.push(check("residue classes partition unity exactly", 0.0, 0.0, nums.iter().sum::<num_bigint::BigInt>() == den));

    let law = mixture::position_law_exact(1, 1, 1, 12)?;
    let uniform = law.iter().all(|x| *x == BigRational::new(1.into(), 13.into()));
    out.push(check("position law from (1,1) is uniform (n=12)", 0.0, 0.0, uniform));

    let total = mixture::total_sequence_probability(1, 1, 1, 1, 12)?;
    out.push(check("sequence probabilities sum to 1 (n=12)", 0.0, 0.0, total == BigRational::one()));

    let cfg = WalkConfig::polya(1, 1);
    let s = monte_carlo(&cfg, 10_000, 50, &[], 11)?;
    let err = (s.mean_q - densities::inv_zeta2()).abs();
    out.push(check("Polya walk visibility near 6/pi^2 (N=1e4, T=50)", err, 0.05, err < 0.05));

    let again = monte_carlo(&cfg, 10_000, 50, &[], 11)?;
    let same = s.records.iter().zip(&again.records).all(|(x, y)| x == y);
    out.push(check("same seed reproduces every trial", 0.0, 0.0, same));
    Ok(out)
}
