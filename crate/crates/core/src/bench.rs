//! End-to-end pipeline (dataset → SDP → rounding → score) and the
//! noise-sweep benchmark comparing it with signature clustering.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::baseline::{baseline_cluster, SignatureKind};
use crate::error::{domain, Error, Result};
use crate::harmonics::{Bandwidth, RotationAngle};
use crate::penalty::build_coefficient_matrices;
use crate::rounding::{align_from_r, alignment_error, classification_error, cluster_from_c, SolveReport};
use crate::sdp::{solve, NugSdpProblem, NugSdpSolution, SolverConfig};
use crate::seed::derive_seed;
use crate::signals::{generate_dataset, sigma_from_noise_level, Dataset};

/// Tag separating the rounding stream from the dataset streams of a trial.
const ROUNDING_STREAM: u64 = 0x726f_756e_64;

#[derive(Debug, Clone)]
pub struct NugRun {
    pub solution: NugSdpSolution,
    pub report: SolveReport,
}

/// Solves the relaxation for `d`, rounds labels from `C` and rotations from
/// `R_1`, and scores both against the dataset's ground truth.
pub fn solve_dataset(d: &Dataset, balanced: bool, solver: &SolverConfig, seed: u64) -> Result<NugRun> {
    d.validate()?;
    let m = d.num_classes;
    if m > d.len() {
        return domain(format!("M = {m} exceeds the number of signals {}", d.len()));
    }
    let problem = NugSdpProblem::new(build_coefficient_matrices(d)?, m, balanced)?;
    let solution = solve(&problem, solver)?;
    let labels = cluster_from_c(&solution.variables.c, m, seed)?;
    let shifts = match solution.variables.r.first() {
        Some(r1) => align_from_r(r1, &labels)?,
        None => vec![RotationAngle::new(0.0); d.len()],
    };
    let report = SolveReport {
        classification_error: classification_error(&labels, &d.true_labels, m)?,
        alignment_rms: alignment_error(&shifts, &d.true_shifts, &labels, &d.true_labels, m)?,
        labels,
        shifts,
        objective: solution.objective,
        converged: solution.converged,
        iterations: solution.iterations,
    };
    Ok(NugRun { solution, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Nug,
    Bispectrum,
    Autocorrelation,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Nug => "nug",
            Self::Bispectrum => "bispectrum",
            Self::Autocorrelation => "autocorrelation",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nug" => Ok(Self::Nug),
            "bispectrum" => Ok(Self::Bispectrum),
            "autocorrelation" => Ok(Self::Autocorrelation),
            _ => Err(Error::Domain(format!(
                "unknown method `{s}` (expected nug, bispectrum or autocorrelation)"
            ))),
        }
    }
}

/// Level 0 followed by seven levels spaced by a factor `√2` from 0.25 to 2.
pub fn default_noise_levels() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..7).map(|i| 0.25 * 2f64.powf(i as f64 / 2.0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub num_classes: usize,
    pub copies_per_class: usize,
    pub bandwidth: Bandwidth,
    /// Ratio of the per-coefficient noise standard deviation to the
    /// coefficient RMS of a unit-norm prototype; see [`sigma_from_noise_level`].
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub balanced: bool,
    pub solver: SolverConfig,
    /// When false, `wall_time` is written as 0 so reruns are byte-identical.
    pub record_wall_time: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            num_classes: 4,
            copies_per_class: 15,
            bandwidth: Bandwidth(5),
            noise_levels: default_noise_levels(),
            trials: 20,
            master_seed: 0,
            methods: vec![Method::Nug, Method::Bispectrum],
            balanced: true,
            solver: SolverConfig::default(),
            record_wall_time: true,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        if self.num_classes < 2 || self.copies_per_class == 0 {
            return domain("need M >= 2 classes and at least one copy per class");
        }
        if let Some(l) = self.noise_levels.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return domain(format!("noise levels must be finite and nonnegative, got {l}"));
        }
        if self.noise_levels.is_empty() || self.methods.is_empty() {
            return domain("need at least one noise level and one method");
        }
        self.solver.validate()
    }

    /// Dataset seed of trial `trial` at level index `level`.
    pub fn trial_seed(&self, level: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, &[level as u64, trial as u64])
    }
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub noise_level: f64,
    pub trial: usize,
    pub method: Method,
    /// `NaN` when the trial failed.
    pub classification_error: f64,
    /// Relaxation objective for `nug`; `None` for signature methods.
    pub objective: Option<f64>,
    pub converged: bool,
    pub wall_time: f64,
}

fn run_method(d: &Dataset, method: Method, config: &BenchmarkConfig, seed: u64) -> (f64, Option<f64>, bool) {
    let m = config.num_classes;
    match method {
        Method::Nug => match solve_dataset(d, config.balanced, &config.solver, seed) {
            Ok(run) => (run.report.classification_error, Some(run.report.objective), run.report.converged),
            Err(_) => (f64::NAN, None, false),
        },
        Method::Bispectrum | Method::Autocorrelation => {
            let kind = if method == Method::Bispectrum {
                SignatureKind::Bispectrum
            } else {
                SignatureKind::Autocorrelation
            };
            let labels = baseline_cluster(d, kind, m, seed);
            match classification_error(&labels, &d.true_labels, m) {
                Ok(e) => (e, None, true),
                Err(_) => (f64::NAN, None, false),
            }
        }
    }
}

fn run_trial(config: &BenchmarkConfig, level: usize, trial: usize) -> Vec<TrialRecord> {
    let noise_level = config.noise_levels[level];
    let seed = config.trial_seed(level, trial);
    let sigma = sigma_from_noise_level(noise_level, config.bandwidth);
    let dataset = generate_dataset(config.num_classes, config.copies_per_class, config.bandwidth, sigma, seed);
    let rounding_seed = derive_seed(seed, &[ROUNDING_STREAM]);
    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let (err, objective, converged) = match &dataset {
                Ok(d) => run_method(d, method, config, rounding_seed),
                Err(_) => (f64::NAN, None, false),
            };
            TrialRecord {
                noise_level,
                trial,
                method,
                classification_error: err,
                objective,
                converged,
                wall_time: if config.record_wall_time {
                    start.elapsed().as_secs_f64()
                } else {
                    0.0
                },
            }
        })
        .collect()
}

/// Runs every (level, trial) pair, in parallel, returning records ordered by
/// level, trial, then method as listed in the config.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.noise_levels.len())
        .flat_map(|l| (0..config.trials).map(move |t| (l, t)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(l, t)| run_trial(config, l, t))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect())
}

pub const RECORD_HEADER: &str = "noise_level,trial,method,classification_error,objective,converged,wall_time";

fn axis_comment(config: &BenchmarkConfig) -> String {
    format!(
        "# noise_level = sigma * sqrt(2K+1): per-coefficient complex noise std relative to the coefficient RMS of a unit-norm prototype (M={}, copies={}, K={}, balanced={}, master_seed={})\n",
        config.num_classes, config.copies_per_class, config.bandwidth.0, config.balanced, config.master_seed
    )
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        x.to_string()
    }
}

pub fn format_records(config: &BenchmarkConfig, records: &[TrialRecord]) -> String {
    let mut out = axis_comment(config);
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.noise_level,
            r.trial,
            r.method,
            num(r.classification_error),
            r.objective.map_or_else(|| "NA".into(), num),
            r.converged,
            r.wall_time
        );
    }
    out
}

/// Per-level, per-method aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub noise_level: f64,
    pub method: Method,
    /// Over trials that produced an error value.
    pub mean_error: f64,
    /// Sample standard deviation over `√trials`; 0 for a single trial.
    pub stderr: f64,
    pub trials: usize,
    pub failures: usize,
    pub nonconverged: usize,
}

pub fn summarize(config: &BenchmarkConfig, records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &level in &config.noise_levels {
        for &method in &config.methods {
            let sel: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.noise_level == level && r.method == method)
                .collect();
            let values: Vec<f64> = sel
                .iter()
                .map(|r| r.classification_error)
                .filter(|e| !e.is_nan())
                .collect();
            let count = values.len() as f64;
            let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / count };
            let stderr = if values.len() > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
                (var / count).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                noise_level: level,
                method,
                mean_error: mean,
                stderr,
                trials: sel.len(),
                failures: sel.len() - values.len(),
                nonconverged: sel.iter().filter(|r| !r.converged).count(),
            });
        }
    }
    rows
}

/// Outcome of a one-sided paired sign test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    /// Trials where the first method had strictly lower error.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P(Binomial(wins + losses, 1/2) >= wins)`; 1 when every pair ties.
    pub p_value: f64,
}

/// Upper tail `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let dist = Binomial::new(0.5, n as u64).expect("valid binomial parameters");
    dist.sf(k as u64 - 1)
}

/// Tests whether `a` has lower error than `b` at `level`, pairing trials by index.
/// Trials where either error is missing are skipped.
pub fn paired_sign_test(records: &[TrialRecord], level: f64, a: Method, b: Method) -> SignTest {
    let pick = |m: Method| -> Vec<(usize, f64)> {
        records
            .iter()
            .filter(|r| r.noise_level == level && r.method == m)
            .map(|r| (r.trial, r.classification_error))
            .collect()
    };
    let (ea, eb) = (pick(a), pick(b));
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for &(t, x) in &ea {
        let Some(&(_, y)) = eb.iter().find(|(u, _)| *u == t) else {
            continue;
        };
        if x.is_nan() || y.is_nan() {
            continue;
        }
        if x < y {
            wins += 1;
        } else if x > y {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    SignTest {
        wins,
        losses,
        ties,
        p_value: binomial_upper_tail(wins + losses, wins),
    }
}

pub const SUMMARY_HEADER: &str =
    "noise_level,method,mean_error,stderr,trials,failures,nonconverged,sign_test_wins,sign_test_losses,sign_test_p";

/// Summary table. Sign-test columns compare `nug` with `bispectrum` and are
/// filled on `nug` rows when both methods ran.
pub fn format_summary(config: &BenchmarkConfig, records: &[TrialRecord]) -> String {
    let compare = config.methods.contains(&Method::Nug) && config.methods.contains(&Method::Bispectrum);
    let mut out = axis_comment(config);
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for row in summarize(config, records) {
        let sign = if compare && row.method == Method::Nug {
            let t = paired_sign_test(records, row.noise_level, Method::Nug, Method::Bispectrum);
            format!("{},{},{}", t.wins, t.losses, t.p_value)
        } else {
            ",,".into()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.noise_level,
            row.method,
            num(row.mean_error),
            row.stderr,
            row.trials,
            row.failures,
            row.nonconverged,
            sign
        );
    }
    out
}
