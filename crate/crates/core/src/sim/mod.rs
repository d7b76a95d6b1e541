//! Monte Carlo experiments: zigzag cycle codes and expurgated ensembles.
//!
//! Every trial draws from its own ChaCha8 stream (seed, stream = trial index),
//! so results do not depend on thread count, and different grid points or
//! cycle parameters see the same noise for the same trial. Trials run in
//! fixed-size chunks; the stopping rule is only checked between chunks.
//!
//! A zigzag cycle code is decoded all or nothing, so zigzag experiments count
//! one observation per trial (failed or not) to keep the interval honest.

mod output;
mod run;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::decoder::DecoderConfig;
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldParams};
use crate::graph::EnsembleSpec;

pub use output::{emit_results, read_config, sidecar_path, write_points, CsvRow};
pub use run::{run, run_ensemble, run_zigzag, trace_trial};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Closed-form Theorem 1 verdict on the sampled LLRs.
    Predicate,
    /// Full belief propagation.
    Bp,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Predicate => "predicate",
            Engine::Bp => "bp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Bec,
    Bsc,
    Awgn,
}

impl ChannelKind {
    /// Channel at grid point `p` (erasure/crossover probability or sigma^2).
    pub fn model(self, p: f64) -> Result<ChannelModel> {
        match self {
            ChannelKind::Bec => ChannelModel::bec(p),
            ChannelKind::Bsc => ChannelModel::bsc(p),
            ChannelKind::Awgn => ChannelModel::awgn(p),
        }
    }
}

/// Cycle parameter of a zigzag experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSpec {
    /// gamma_1 = alpha^k, other gammas 1.
    Exponent { k: usize },
    /// Label exponents (h_{i,i}, h_{i,i+1}) for i = 1..=s.
    Labels { labels: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZigzagExperiment {
    pub s: usize,
    pub m: u32,
    pub beta: BetaSpec,
    pub engine: Engine,
}

impl ZigzagExperiment {
    /// Labels (h_{i,i}, h_{i,i+1}) of the cycle.
    pub fn labels(&self, field: &FieldParams) -> Result<Vec<(FieldElement, FieldElement)>> {
        match &self.beta {
            BetaSpec::Exponent { k } => Ok((0..self.s)
                .map(|i| (FieldElement::ONE, if i == 0 { field.alpha_pow(*k) } else { FieldElement::ONE }))
                .collect()),
            BetaSpec::Labels { labels } => {
                if labels.len() != self.s {
                    return Err(Error::Config(format!("{} label pairs for a cycle of weight {}", labels.len(), self.s)));
                }
                Ok(labels.iter().map(|&(a, b)| (field.alpha_pow(a), field.alpha_pow(b))).collect())
            }
        }
    }

    pub fn gammas(&self, field: &FieldParams) -> Result<Vec<FieldElement>> {
        self.labels(field)?
            .into_iter()
            .map(|(a, b)| Ok(field.mul(field.inv(a)?, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleExperiment {
    pub spec: EnsembleSpec,
    /// Evaluate one sampled code instead of resampling per trial.
    #[serde(default)]
    pub fixed_code: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    Zigzag(ZigzagExperiment),
    Ensemble(EnsembleExperiment),
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub channel: ChannelKind,
    /// Channel parameters to simulate.
    pub grid: Vec<f64>,
    /// Trial budget per grid point.
    pub max_trials: u64,
    pub min_errors: u64,
    /// Stop a point once `min_errors` are seen and the CI is narrow enough.
    #[serde(default = "default_true")]
    pub early_stop: bool,
    pub seed: u64,
    /// Trials per parallel chunk; 0 picks a default for the experiment.
    #[serde(default)]
    pub chunk: u64,
    pub decoder: DecoderConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("channel grid is empty".into()));
        }
        if self.max_trials == 0 {
            return Err(Error::Config("trial budget must be at least 1".into()));
        }
        for &p in &self.grid {
            self.channel.model(p)?;
        }
        match &self.experiment {
            Experiment::Zigzag(z) => {
                if z.s == 0 {
                    return Err(Error::Config("zigzag cycle weight must be at least 1".into()));
                }
                FieldParams::new(z.m)?;
            }
            Experiment::Ensemble(e) => e.spec.validate()?,
        }
        if matches!(self.experiment, Experiment::Ensemble(_))
            || matches!(&self.experiment, Experiment::Zigzag(z) if z.engine == Engine::Bp)
        {
            self.decoder.validate()?;
        }
        Ok(())
    }

    pub fn engine(&self) -> Engine {
        match &self.experiment {
            Experiment::Zigzag(z) => z.engine,
            Experiment::Ensemble(_) => Engine::Bp,
        }
    }
}

/// Reproducible generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Stream reserved for drawing the code in fixed-code mode.
pub const FIXED_CODE_STREAM: u64 = u64::MAX;

/// Relative 95% CI width below which a point may stop early.
pub const EARLY_STOP_WIDTH: f64 = 0.2;

/// Running symbol error count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub errors: u64,
    pub observed: u64,
    pub trials: u64,
    /// Trials whose code could not be constructed.
    pub skipped: u64,
    /// Sum over trials of errors^2, for the clustered standard error.
    #[serde(default)]
    pub sum_sq: u64,
}

impl SerEstimate {
    pub fn push(&mut self, outcome: Option<(u64, u64)>) {
        self.trials += 1;
        match outcome {
            Some((e, o)) => {
                self.errors += e;
                self.observed += o;
                self.sum_sq += e * e;
            }
            None => self.skipped += 1,
        }
    }

    pub fn ser(&self) -> f64 {
        if self.observed == 0 {
            0.0
        } else {
            self.errors as f64 / self.observed as f64
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        wilson_interval(self.errors, self.observed)
    }

    /// Standard error of the SER treating each trial as one cluster, so
    /// errors that arrive together in one frame are not counted as independent.
    pub fn cluster_se(&self) -> f64 {
        let n = (self.trials - self.skipped) as f64;
        if n < 2.0 || self.observed == 0 {
            return 0.0;
        }
        let mean = self.errors as f64 / n;
        let var = (self.sum_sq as f64 / n - mean * mean).max(0.0) * n / (n - 1.0);
        let per_trial = self.observed as f64 / n;
        (var / n).sqrt() / per_trial
    }

    /// Enough errors and a CI narrower than 20% of the estimate.
    pub fn converged(&self, min_errors: u64) -> bool {
        let (lo, hi) = self.interval();
        self.errors >= min_errors && self.errors > 0 && (hi - lo) / self.ser() < EARLY_STOP_WIDTH
    }
}

/// Folds per-trial (errors, observed) outcomes, `None` for skipped trials,
/// stopping early when `early_stop` and the estimate has converged.
pub fn estimate_ser(
    outcomes: impl IntoIterator<Item = Option<(u64, u64)>>,
    min_errors: u64,
    early_stop: bool,
) -> SerEstimate {
    let mut est = SerEstimate::default();
    for o in outcomes {
        est.push(o);
        if early_stop && est.converged(min_errors) {
            break;
        }
    }
    est
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SERRecord {
    pub channel_param: f64,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Analytic lower bound, ensemble experiments only.
    pub bound: Option<f64>,
    pub errors: u64,
    pub observed: u64,
    pub trials: u64,
    pub skipped: u64,
    /// Clustered standard error, see [`SerEstimate::cluster_se`].
    pub cluster_se: f64,
    pub seed: u64,
    pub engine: Engine,
    /// Budget ran out before `min_errors` errors were seen.
    pub low_confidence: bool,
    pub wall_time: f64,
}

impl SERRecord {
    pub fn from_estimate(
        channel_param: f64,
        est: &SerEstimate,
        min_errors: u64,
        bound: Option<f64>,
        seed: u64,
        engine: Engine,
        wall_time: f64,
    ) -> Self {
        let (ci_low, ci_high) = est.interval();
        Self {
            channel_param,
            ser: est.ser(),
            ci_low,
            ci_high,
            bound,
            errors: est.errors,
            observed: est.observed,
            trials: est.trials,
            skipped: est.skipped,
            cluster_se: est.cluster_se(),
            seed,
            engine,
            low_confidence: est.errors < min_errors,
            wall_time,
        }
    }
}
