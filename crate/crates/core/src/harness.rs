//! Experiment orchestration: sweep specs, seeded Monte Carlo runs, analytic
//! comparison and tabular output.
//!
//! Every trial draws its channel from the stream keyed by
//! `(seed, point index, trial index)`, so results do not depend on the number
//! of worker threads. Trials run in parallel and are reduced in trial order.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::channel::{sample_channel, ChannelConfig, ChannelError, PathCount, StreamKey};
use crate::mu::{self, AssignmentMethod, MuError, MuSystemConfig};
use crate::su::{self, SuError, SuSystemConfig};

/// Fixed CSV header of [`emit`].
pub const CSV_HEADER: &str = "mode,scheme,method,N_t,L,N_RF,U,alpha,trials,mean_len,se_len,outage,se_outage,mean_rate,se_rate,analytic_len,analytic_outage,flags";

/// Outage counts below this attach a `few-outage-events` flag.
pub const MIN_OUTAGE_EVENTS: u64 = 100;

/// |z| above this is flagged in comparison reports.
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid spec: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Su(#[from] SuError),
    #[error(transparent)]
    Mu(#[from] MuError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Su,
    Mu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    It,
    NitFull,
    NitPartial,
    RateVariant,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Su => "su",
            Mode::Mu => "mu",
        })
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::It => "it",
            Scheme::NitFull => "nit_full",
            Scheme::NitPartial => "nit_partial",
            Scheme::RateVariant => "rate_variant",
        })
    }
}

fn default_users() -> Vec<usize> {
    vec![1]
}

/// A sweep over the cartesian product of all list-valued axes.
///
/// The threshold is either `alpha` (α for SU, ᾱ for MU), optionally with
/// `power_db` so rates can be reported, or `power_db` together with `rate_th`.
/// For `nit_partial` an empty `l_trained` means "match the interleaved
/// scheme's mean training length at the same point".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<AssignmentMethod>,
    pub n_t: Vec<usize>,
    pub paths: Vec<PathCount>,
    pub n_rf: Vec<usize>,
    #[serde(default = "default_users")]
    pub users: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub power_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_th: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub l_trained: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; affects speed only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustive_cap: Option<u64>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Expands and validates every sweep point without running any trial.
    pub fn points(&self) -> Result<Vec<SweepPoint>, HarnessError> {
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        let method = match (self.mode, self.method) {
            (Mode::Mu, None) => return Err(config_err("mu mode needs an assignment method")),
            (Mode::Su, Some(_)) => return Err(config_err("assignment method applies to mu mode only")),
            (_, m) => m,
        };
        if self.mode == Mode::Mu && self.scheme == Scheme::RateVariant {
            return Err(config_err("rate_variant is a single-user scheme"));
        }
        if self.mode == Mode::Su && self.users != [1] {
            return Err(config_err("su mode serves exactly one user"));
        }
        if self.scheme != Scheme::NitPartial && !self.l_trained.is_empty() {
            return Err(config_err("l_trained applies to nit_partial only"));
        }
        let thresholds = self.thresholds()?;
        let partial: Vec<Option<usize>> = if self.l_trained.is_empty() {
            vec![None]
        } else {
            self.l_trained.iter().map(|&l| Some(l)).collect()
        };

        let mut out = Vec::new();
        for &paths in &self.paths {
            for &n_rf in &self.n_rf {
                for &users in &self.users {
                    for &(alpha, power) in &thresholds {
                        for &l_trained in &partial {
                            for &n_t in &self.n_t {
                                let point = SweepPoint {
                                    index: out.len() as u64,
                                    mode: self.mode,
                                    scheme: self.scheme,
                                    method,
                                    n_t,
                                    paths,
                                    l: ChannelConfig::new(n_t, paths, users)?.path_count()?,
                                    n_rf,
                                    users,
                                    alpha,
                                    power,
                                    l_trained,
                                    exhaustive_cap: self.exhaustive_cap.unwrap_or(mu::DEFAULT_EXHAUSTIVE_CAP),
                                };
                                point.validate()?;
                                out.push(point);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `(threshold, linear power)` pairs.
    fn thresholds(&self) -> Result<Vec<(f64, Option<f64>)>, HarnessError> {
        let users = |u: usize| if self.mode == Mode::Mu { u as f64 } else { 1.0 };
        match (self.alpha.is_empty(), self.rate_th.is_empty()) {
            (false, false) => Err(config_err("give either alpha or (power_db, rate_th), not both")),
            (true, true) => Err(config_err("a threshold is required: alpha or (power_db, rate_th)")),
            (false, true) => {
                let powers: Vec<Option<f64>> = if self.power_db.is_empty() {
                    vec![None]
                } else {
                    self.power_db.iter().map(|&db| Some(db_to_linear(db))).collect()
                };
                Ok(self
                    .alpha
                    .iter()
                    .flat_map(|&a| powers.iter().map(move |&p| (a, p)))
                    .collect())
            }
            (true, false) => {
                if self.power_db.is_empty() {
                    return Err(config_err("rate_th needs power_db"));
                }
                if self.mode == Mode::Mu && self.users.len() != 1 {
                    return Err(config_err("rate thresholds in mu mode need a single user count"));
                }
                let u = users(self.users[0]);
                let mut v = Vec::new();
                for &db in &self.power_db {
                    for &r in &self.rate_th {
                        let p = db_to_linear(db);
                        v.push(((r.exp2() - 1.0) * u / p, Some(p)));
                    }
                }
                Ok(v)
            }
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One fully resolved point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: u64,
    pub mode: Mode,
    pub scheme: Scheme,
    pub method: Option<AssignmentMethod>,
    pub n_t: usize,
    pub paths: PathCount,
    /// Resolved path count.
    pub l: usize,
    pub n_rf: usize,
    pub users: usize,
    /// α for SU points, ᾱ for MU points.
    pub alpha: f64,
    pub power: Option<f64>,
    pub l_trained: Option<usize>,
    pub exhaustive_cap: u64,
}

impl SweepPoint {
    fn validate(&self) -> Result<(), HarnessError> {
        match self.mode {
            Mode::Su => {
                SuSystemConfig::with_alpha(self.n_rf, self.alpha)?;
            }
            Mode::Mu => {
                MuSystemConfig::with_alpha_bar(self.n_rf, self.users, self.alpha)?;
                if self.users > self.n_t {
                    return Err(MuError::TooManyUsers {
                        users: self.users,
                        n_t: self.n_t,
                    }
                    .into());
                }
            }
        }
        if let Some(t) = self.l_trained {
            let lo = if self.mode == Mode::Mu { self.users } else { 1 };
            if t < lo || t > self.n_t {
                return Err(config_err(format!("l_trained = {t} outside [{lo}, {}]", self.n_t)));
            }
        }
        Ok(())
    }

    fn channel_config(&self) -> ChannelConfig {
        ChannelConfig {
            n_t: self.n_t,
            paths: PathCount::Fixed(self.l),
            users: self.users,
        }
    }

    fn su_config(&self) -> SuSystemConfig {
        let cfg = SuSystemConfig {
            n_rf: self.n_rf,
            alpha: self.alpha,
            power: None,
        };
        match self.power {
            Some(p) => cfg.with_power(p),
            None => cfg,
        }
    }

    fn mu_config(&self) -> MuSystemConfig {
        MuSystemConfig {
            n_rf: self.n_rf,
            users: self.users,
            alpha_bar: self.alpha,
            power: self.power,
            exhaustive_cap: self.exhaustive_cap,
        }
    }
}

/// What one trial contributes to the summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub training_length: usize,
    pub outage: bool,
    /// Per-user rate in bits/s/Hz when a transmit power is known.
    pub rate: Option<f64>,
}

/// Runs one trial of `point` under `scheme`. `l_trained` is used by
/// `nit_partial` only.
pub fn run_trial(
    point: &SweepPoint,
    scheme: Scheme,
    l_trained: usize,
    key: StreamKey,
) -> Result<TrialOutcome, HarnessError> {
    let ch = sample_channel(&point.channel_config(), &key)?;
    match point.mode {
        Mode::Su => {
            let cfg = point.su_config();
            let r = match scheme {
                Scheme::It => su::it_su_episode(&ch, &cfg),
                Scheme::RateVariant => su::su_rate_episode(&ch, &cfg),
                Scheme::NitFull => su::nit_su_full(&ch, &cfg),
                Scheme::NitPartial => su::nit_su_partial(&ch, &cfg, l_trained)?,
            };
            Ok(TrialOutcome {
                training_length: r.training_length,
                outage: r.outage,
                rate: r.rate,
            })
        }
        Mode::Mu => {
            let cfg = point.mu_config();
            let method = point.method.expect("validated mu point has a method");
            let r = match scheme {
                Scheme::It => mu::it_mu_episode(&ch, &cfg, method)?,
                Scheme::NitFull => mu::nit_mu_full(&ch, &cfg, method)?,
                Scheme::NitPartial => mu::nit_mu_partial(&ch, &cfg, l_trained, method)?,
                Scheme::RateVariant => unreachable!("rejected at validation"),
            };
            // ZF gives each user SNR P·λ²/U; nothing is sent in outage.
            let rate = cfg.power.map(|p| {
                if r.outage {
                    0.0
                } else {
                    (1.0 + p * r.lambda_sq / cfg.users as f64).log2()
                }
            });
            Ok(TrialOutcome {
                training_length: r.training_length,
                outage: r.outage,
                rate,
            })
        }
    }
}

/// Per-point aggregate. Standard errors are `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mode: Mode,
    pub scheme: Scheme,
    pub method: Option<AssignmentMethod>,
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_RF")]
    pub n_rf: usize,
    #[serde(rename = "U")]
    pub users: usize,
    pub alpha: f64,
    pub trials: u64,
    pub mean_len: f64,
    pub se_len: Option<f64>,
    pub outage: f64,
    pub se_outage: Option<f64>,
    pub mean_rate: Option<f64>,
    pub se_rate: Option<f64>,
    pub analytic_len: Option<f64>,
    pub analytic_outage: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
    /// Wall-clock seconds per point; kept out of emitted output.
    pub wall_time: Vec<f64>,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: u64) -> (f64, Option<f64>) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, Some((ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()))
}

/// Sample statistics of a set of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub mean_len: f64,
    pub se_len: Option<f64>,
    pub outage: f64,
    pub se_outage: Option<f64>,
    /// Mean rate and its standard error, when every trial reports a rate.
    pub rate: Option<(f64, Option<f64>)>,
}

/// Mean, sample standard error and outage statistics of trial outcomes.
pub fn summarize(outcomes: &[TrialOutcome]) -> Estimates {
    let n = outcomes.len() as u64;
    let (mean_len, se_len) = mean_and_se(outcomes.iter().map(|o| o.training_length as f64), n);
    let outages = outcomes.iter().filter(|o| o.outage).count() as f64;
    let p = outages / n as f64;
    let se_outage = (n >= 2).then(|| (p * (1.0 - p) / n as f64).sqrt());
    let rate = if outcomes.iter().all(|o| o.rate.is_some()) {
        Some(mean_and_se(outcomes.iter().map(|o| o.rate.unwrap_or(0.0)), n))
    } else {
        None
    };
    Estimates {
        mean_len,
        se_len,
        outage: p,
        se_outage,
        rate,
    }
}

fn run_point(point: &SweepPoint, seed: u64, trials: u64) -> Result<(SummaryRow, f64), HarnessError> {
    let start = Instant::now();
    let run = |scheme: Scheme, l_trained: usize| -> Result<Vec<TrialOutcome>, HarnessError> {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(point, scheme, l_trained, StreamKey::new(seed, point.index, t)))
            .collect()
    };

    let mut flags = Vec::new();
    let l_trained = match (point.scheme, point.l_trained) {
        (Scheme::NitPartial, Some(t)) => t,
        (Scheme::NitPartial, None) => {
            let it = run(Scheme::It, point.n_t)?;
            let mean = it.iter().map(|o| o.training_length as f64).sum::<f64>() / it.len() as f64;
            let lo = if point.mode == Mode::Mu { point.users } else { 1 };
            let t = (mean.round() as usize).clamp(lo, point.n_t);
            flags.push(format!("matched-l_trained={t}"));
            t
        }
        _ => point.n_t,
    };
    if point.scheme == Scheme::NitPartial && point.l_trained.is_some() {
        flags.push(format!("l_trained={l_trained}"));
    }

    let outcomes = run(point.scheme, l_trained)?;
    let Estimates {
        mean_len,
        se_len,
        outage,
        se_outage,
        rate,
    } = summarize(&outcomes);
    let outage_events = outcomes.iter().filter(|o| o.outage).count() as u64;
    if trials < 2 {
        flags.push("se-undefined".to_string());
    }
    if outage_events < MIN_OUTAGE_EVENTS {
        flags.push("few-outage-events".to_string());
    }

    let (analytic_len, analytic_outage) = match analytic_reference(point) {
        Ok(v) => v,
        Err(e) => {
            flags.push(format!("analytic-invalid: {e}"));
            (None, None)
        }
    };

    let row = SummaryRow {
        mode: point.mode,
        scheme: point.scheme,
        method: point.method,
        n_t: point.n_t,
        l: point.l,
        n_rf: point.n_rf,
        users: point.users,
        alpha: point.alpha,
        trials,
        mean_len,
        se_len,
        outage,
        se_outage,
        mean_rate: rate.map(|r| r.0),
        se_rate: rate.and_then(|r| r.1),
        analytic_len,
        analytic_outage,
        flags,
    };
    Ok((row, start.elapsed().as_secs_f64()))
}

/// Analytic training length and outage for the point, where the closed forms
/// apply: SU interleaved schemes (both) and SU full training (outage only,
/// length is `N_t`).
pub fn analytic_reference(point: &SweepPoint) -> Result<(Option<f64>, Option<f64>), AnalyticError> {
    if point.mode != Mode::Su {
        return Ok((None, None));
    }
    let outage = || {
        if point.n_rf.min(point.l) == 1 {
            analytic::outage_single_rf(point.n_t, point.l, point.alpha)
        } else {
            analytic::outage_it_su(point.n_t, point.l, point.n_rf, point.alpha)
        }
    };
    match point.scheme {
        Scheme::It | Scheme::RateVariant => Ok((
            Some(analytic::avg_training_length(
                point.n_t,
                point.l,
                point.n_rf,
                point.alpha,
            )?),
            Some(outage()?),
        )),
        Scheme::NitFull => Ok((Some(point.n_t as f64), Some(outage()?))),
        Scheme::NitPartial => Ok((None, None)),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| config_err(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every sweep point of `spec`. All points are validated before the
/// first trial runs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentSummary, HarnessError> {
    let points = spec.points()?;
    with_threads(spec.threads, || {
        let mut rows = Vec::with_capacity(points.len());
        let mut wall_time = Vec::with_capacity(points.len());
        for p in &points {
            let (row, secs) = run_point(p, spec.seed, spec.trials)?;
            rows.push(row);
            wall_time.push(secs);
        }
        Ok(ExperimentSummary { rows, wall_time })
    })?
}

/// Analytic values at every point of `spec`, without simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_RF")]
    pub n_rf: usize,
    pub alpha: f64,
    pub avg_len: Option<f64>,
    pub asymptotic_len: f64,
    pub outage: Option<f64>,
    pub outage_asymptote: Option<f64>,
    pub flags: Vec<String>,
}

pub const ANALYTIC_CSV_HEADER: &str = "N_t,L,N_RF,alpha,avg_len,asymptotic_len,outage,outage_asymptote,flags";

pub fn analytic_table(spec: &ExperimentSpec) -> Result<Vec<AnalyticRow>, HarnessError> {
    if spec.mode != Mode::Su {
        return Err(config_err("closed forms exist for su mode only"));
    }
    let points = spec.points()?;
    Ok(points
        .iter()
        .map(|p| {
            let mut flags = Vec::new();
            let mut keep = |r: Result<f64, AnalyticError>| match r {
                Ok(v) => Some(v),
                Err(e) => {
                    flags.push(format!("analytic-invalid: {e}"));
                    None
                }
            };
            let avg_len = keep(analytic::avg_training_length(p.n_t, p.l, p.n_rf, p.alpha));
            let outage = keep(analytic::outage_it_su(p.n_t, p.l, p.n_rf, p.alpha));
            AnalyticRow {
                n_t: p.n_t,
                l: p.l,
                n_rf: p.n_rf,
                alpha: p.alpha,
                avg_len,
                asymptotic_len: analytic::avg_training_length_asymptotic(p.n_t, p.l),
                outage,
                outage_asymptote: (p.n_rf.min(p.l) == 1)
                    .then(|| analytic::outage_single_rf_asymptote(p.n_t, p.l, p.alpha)),
                flags,
            }
        })
        .collect())
}

/// One simulated-vs-analytic comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_RF")]
    pub n_rf: usize,
    pub alpha: f64,
    pub quantity: String,
    pub simulated: f64,
    pub se: Option<f64>,
    pub analytic: Option<f64>,
    pub z: Option<f64>,
    pub flags: Vec<String>,
}

pub const COMPARISON_CSV_HEADER: &str = "N_t,L,N_RF,alpha,quantity,simulated,se,analytic,z,flags";

fn z_score(sim: f64, analytic: f64, se: f64) -> f64 {
    let d = sim - analytic;
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Simulates `spec` and sets each mean length and outage rate against its
/// closed form. Outage z-scores use the analytic binomial standard error.
pub fn compare_report(spec: &ExperimentSpec) -> Result<Vec<ComparisonRow>, HarnessError> {
    if spec.mode != Mode::Su || spec.scheme == Scheme::NitPartial {
        return Err(config_err(
            "comparison needs su mode with an it, rate_variant or nit_full scheme",
        ));
    }
    let summary = run_experiment(spec)?;
    let mut out = Vec::new();
    for row in summary.rows {
        let invalid: Vec<String> = row
            .flags
            .iter()
            .filter(|f| f.starts_with("analytic-invalid"))
            .cloned()
            .collect();
        let n = row.trials as f64;
        let entries = [
            ("mean_len", row.mean_len, row.se_len, row.analytic_len, row.se_len),
            (
                "outage",
                row.outage,
                row.se_outage,
                row.analytic_outage,
                row.analytic_outage.map(|p| (p * (1.0 - p) / n).sqrt()),
            ),
        ];
        for (quantity, simulated, se, analytic, z_se) in entries {
            let mut flags = invalid.clone();
            let z = match (analytic, z_se) {
                (Some(a), Some(s)) => Some(z_score(simulated, a, s)),
                _ => None,
            };
            if z.is_some_and(|z| z.abs() > Z_LIMIT) {
                flags.push("z-exceeds-3".to_string());
            }
            out.push(ComparisonRow {
                n_t: row.n_t,
                l: row.l,
                n_rf: row.n_rf,
                alpha: row.alpha,
                quantity: quantity.to_string(),
                simulated,
                se,
                analytic,
                z,
                flags,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// 17 significant digits, `.` as the decimal point.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn flags_field(flags: &[String]) -> String {
    let joined = flags.join(";");
    if joined.contains([',', '"', '\n']) {
        format!("\"{}\"", joined.replace('"', "\"\""))
    } else {
        joined
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let method = r.method.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.mode,
            r.scheme,
            method,
            r.n_t,
            r.l,
            r.n_rf,
            r.users,
            fmt_f64(r.alpha),
            r.trials,
            fmt_f64(r.mean_len),
            opt(r.se_len),
            fmt_f64(r.outage),
            opt(r.se_outage),
            opt(r.mean_rate),
            opt(r.se_rate),
            opt(r.analytic_len),
            opt(r.analytic_outage),
            flags_field(&r.flags)
        );
    }
    s
}

pub fn analytic_csv(rows: &[AnalyticRow]) -> String {
    let mut s = String::from(ANALYTIC_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n_t,
            r.l,
            r.n_rf,
            fmt_f64(r.alpha),
            opt(r.avg_len),
            fmt_f64(r.asymptotic_len),
            opt(r.outage),
            opt(r.outage_asymptote),
            flags_field(&r.flags)
        );
    }
    s
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from(COMPARISON_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n_t,
            r.l,
            r.n_rf,
            fmt_f64(r.alpha),
            r.quantity,
            fmt_f64(r.simulated),
            opt(r.se),
            opt(r.analytic),
            opt(r.z),
            flags_field(&r.flags)
        );
    }
    s
}

/// Renders rows as CSV (via `csv`) or as a JSON record array.
pub fn render<T: Serialize>(rows: &[T], format: Format, csv: impl Fn(&[T]) -> String) -> Result<String, HarnessError> {
    match format {
        Format::Csv => Ok(csv(rows)),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Writes the summary rows to `path`.
pub fn emit(summary: &ExperimentSummary, format: Format, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, render(&summary.rows, format, summary_csv)?)?;
    Ok(())
}

/// Reads back rows written by [`emit`] in JSON format.
pub fn read_json_rows(path: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
