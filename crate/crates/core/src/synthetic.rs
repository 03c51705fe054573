//! Synthetic mean-estimation experiments.
//!
//! Every period `t` draws a validation batch of `B_va ~ U{2, 3, 4}` samples and
//! a training batch of `3 B_va` samples, all i.i.d. `N(mu_t, sigma2)`. The
//! candidate models are window averages of the training data, one per entry
//! of the window menu. Selection methods (the adaptive tournament and the
//! fixed-window baselines) pick a candidate from squared-error validation
//! losses over periods `1..=t`, and are scored by `(estimate - mu_t)^2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::{fixed_window_select, tournament, LossTable};
use crate::window_stats::ArwConfig;

/// Window sizes used both for training candidates and for the fixed-window baselines.
pub const DEFAULT_WINDOW_MENU: [usize; 5] = [1, 4, 16, 64, 256];

/// Name of the adaptive method in reports.
pub const ARW_METHOD: &str = "ARW";

/// True per-period means `mu_1..mu_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSequence {
    values: Vec<f64>,
}

impl MeanSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidScenario("mean sequence must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("mean sequence must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean of period `t` (1-based).
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }
}

/// A jump of the mean level at the start of `period` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub period: usize,
    pub size: f64,
}

/// Parameters of the four-segment mean generator.
///
/// Segments are `1..=b1` (piecewise constant with jumps), `b1+1..=b2`
/// (sinusoid around the level reached), `b2+1..=b3` (constant) and
/// `b3+1..=T` (random walk with `+-step` increments). Segments join
/// continuously except at the configured jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeParams {
    /// Last period of the first three segments.
    pub boundaries: [usize; 3],
    pub base_level: f64,
    pub jumps: Vec<Jump>,
    pub amplitude: f64,
    /// Length of one sinusoid cycle, in periods.
    pub cycle: f64,
    pub step: f64,
    /// Seed of the random-walk increments; independent of the trial seed.
    pub seed: u64,
}

impl CompositeParams {
    /// Defaults for a horizon of `horizon` periods, scaled from the 100-period layout.
    ///
    /// The means stay roughly within `[0, 4]`.
    pub fn for_horizon(horizon: usize) -> Self {
        let quarter = (horizon / 4).max(1);
        let b1 = quarter;
        let b2 = (2 * quarter).max(b1 + 1);
        let b3 = (3 * quarter).max(b2 + 1);
        let spacing = (b1 / 3).max(1);
        let jumps = [3.0, -3.0]
            .iter()
            .enumerate()
            .map(|(i, &size)| Jump {
                period: 1 + spacing * (i + 1),
                size,
            })
            .filter(|j| j.period <= b1)
            .collect();
        Self {
            boundaries: [b1, b2, b3],
            base_level: 1.0,
            jumps,
            amplitude: 1.0,
            cycle: (b2 - b1) as f64,
            step: 0.3,
            seed: 2024,
        }
    }
}

impl Default for CompositeParams {
    fn default() -> Self {
        Self::for_horizon(100)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub horizon: usize,
    pub sigma2: f64,
    pub window_menu: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub arw: ArwConfig,
    pub composite: CompositeParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            horizon: 100,
            sigma2: 1.0,
            window_menu: DEFAULT_WINDOW_MENU.to_vec(),
            trials: 20,
            seed: 0,
            arw: ArwConfig::default(),
            composite: CompositeParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidScenario(msg));
        if self.horizon == 0 {
            return invalid("horizon must be at least 1".into());
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return invalid(format!("sigma2 must be positive and finite, got {}", self.sigma2));
        }
        if self.window_menu.is_empty() {
            return invalid("window menu must be non-empty".into());
        }
        if self.window_menu[0] == 0 || self.window_menu.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!(
                "window menu must be strictly ascending positive integers, got {:?}",
                self.window_menu
            ));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        self.arw.validate()
    }

    /// Method names in report order: the adaptive method, then `V<k>` per menu entry.
    pub fn method_names(&self) -> Vec<String> {
        std::iter::once(ARW_METHOD.to_string())
            .chain(self.window_menu.iter().map(|k| format!("V{k}")))
            .collect()
    }
}

pub fn constant_means(horizon: usize, level: f64) -> Result<MeanSequence> {
    MeanSequence::new(vec![level; horizon])
}

/// Four-segment sequence: jumps, sinusoid, stationary stretch, random walk.
pub fn composite_means(config: &ScenarioConfig) -> Result<MeanSequence> {
    let params = &config.composite;
    let horizon = config.horizon;
    let [b1, b2, b3] = params.boundaries;
    if !(1 <= b1 && b1 < b2 && b2 < b3 && b3 < horizon) {
        return Err(Error::InvalidScenario(format!(
            "segment boundaries {:?} do not partition 1..={horizon}",
            params.boundaries
        )));
    }
    if let Some(j) = params.jumps.iter().find(|j| j.period < 2 || j.period > b1) {
        return Err(Error::InvalidScenario(format!(
            "jump at period {} outside the first segment 2..={b1}",
            j.period
        )));
    }
    if params.cycle.is_nan() || params.cycle <= 0.0 {
        return Err(Error::InvalidScenario("sinusoid cycle must be positive".into()));
    }

    let mut values = Vec::with_capacity(horizon);
    let mut level = params.base_level;
    for t in 1..=b1 {
        level += params
            .jumps
            .iter()
            .filter(|j| j.period == t)
            .map(|j| j.size)
            .sum::<f64>();
        values.push(level);
    }
    for t in b1 + 1..=b2 {
        let phase = 2.0 * PI * (t - b1) as f64 / params.cycle;
        values.push(level + params.amplitude * phase.sin());
    }
    let plateau = *values.last().expect("segment 2 is non-empty");
    values.extend(std::iter::repeat_n(plateau, b3 - b2));

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut walk = plateau;
    for _ in b3 + 1..=horizon {
        walk += if rng.random_bool(0.5) {
            params.step
        } else {
            -params.step
        };
        values.push(walk);
    }
    MeanSequence::new(values)
}

/// Constant `before` through period `last_before`, then constant `after`.
pub fn change_point_means(horizon: usize, last_before: usize, before: f64, after: f64) -> Result<MeanSequence> {
    if last_before >= horizon {
        return Err(Error::InvalidScenario(format!(
            "shift after period {last_before} lies beyond horizon {horizon}"
        )));
    }
    MeanSequence::new(
        (1..=horizon)
            .map(|t| if t <= last_before { before } else { after })
            .collect(),
    )
}

/// Random walk with `+-step` increments: consecutive means differ by exactly `step`.
pub fn drift_means(horizon: usize, start: f64, step: f64, seed: u64) -> Result<MeanSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = start;
    let mut values = Vec::with_capacity(horizon);
    for t in 0..horizon {
        if t > 0 {
            level += if rng.random_bool(0.5) { step } else { -step };
        }
        values.push(level);
    }
    MeanSequence::new(values)
}

/// Independent random streams of one trial: batch sizes and sample values.
///
/// Both are ChaCha8 streams keyed by `(seed, trial)`, so adding trials never
/// perturbs earlier ones.
#[derive(Debug, Clone)]
pub struct TrialRng {
    pub sizes: ChaCha8Rng,
    pub values: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut sizes = ChaCha8Rng::seed_from_u64(seed);
        sizes.set_stream(2 * trial);
        let mut values = ChaCha8Rng::seed_from_u64(seed);
        values.set_stream(2 * trial + 1);
        Self { sizes, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodData {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
}

/// Draws the training and validation batches of every period.
pub fn gen_trial_data(means: &MeanSequence, config: &ScenarioConfig, rng: &mut TrialRng) -> Result<Vec<PeriodData>> {
    config.validate()?;
    let sd = config.sigma2.sqrt();
    means
        .values()
        .iter()
        .map(|&mu| {
            let normal = Normal::new(mu, sd).map_err(|e| Error::InvalidScenario(e.to_string()))?;
            let validation_size: usize = rng.sizes.random_range(2..=4);
            let train = normal.sample_iter(&mut rng.values).take(3 * validation_size).collect();
            let validation = normal.sample_iter(&mut rng.values).take(validation_size).collect();
            Ok(PeriodData { train, validation })
        })
        .collect()
}

/// `estimates[t - 1][w]`: mean of the training samples of periods
/// `max(1, t - menu[w] + 1)..=t`.
pub fn candidate_estimates<B: AsRef<[f64]>>(train: &[B], window_menu: &[usize]) -> Vec<Vec<f64>> {
    // prefix[j] = (count, sum) of periods 1..=j
    let mut prefix = vec![(0usize, 0.0f64)];
    for batch in train {
        let batch = batch.as_ref();
        let (n, s) = *prefix.last().unwrap();
        prefix.push((n + batch.len(), s + batch.iter().sum::<f64>()));
    }
    (1..=train.len())
        .map(|t| {
            window_menu
                .iter()
                .map(|&w| {
                    let start = t.saturating_sub(w);
                    let count = prefix[t].0 - prefix[start].0;
                    let sum = prefix[t].1 - prefix[start].1;
                    sum / count as f64
                })
                .collect()
        })
        .collect()
}

/// Squared-error losses of each candidate on the validation batches of periods `1..=t`.
pub fn validation_losses(data: &[PeriodData], candidates: &[f64], t: usize, models: &[String]) -> Result<LossTable> {
    let periods = data[..t]
        .iter()
        .map(|p| {
            p.validation
                .iter()
                .flat_map(|z| candidates.iter().map(move |c| (c - z) * (c - z)))
                .collect()
        })
        .collect();
    LossTable::from_flat(models.to_vec(), periods)
}

/// Excess risks of one method over all periods of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTrace {
    pub method: String,
    pub excess_risks: Vec<f64>,
}

impl MethodTrace {
    pub fn mean(&self) -> f64 {
        self.excess_risks.iter().sum::<f64>() / self.excess_risks.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    /// Adaptive method first, then one entry per fixed window.
    pub methods: Vec<MethodTrace>,
    /// Training window of the tournament champion in each period.
    pub arw_windows: Vec<usize>,
}

/// Runs one trial: at each period, a tournament and every fixed-window baseline.
pub fn run_trial(config: &ScenarioConfig, means: &MeanSequence, trial: u64) -> Result<TrialReport> {
    config.validate()?;
    if means.len() != config.horizon {
        return Err(Error::InvalidScenario(format!(
            "mean sequence has {} periods, horizon is {}",
            means.len(),
            config.horizon
        )));
    }
    let mut rng = TrialRng::new(config.seed, trial);
    let data = gen_trial_data(means, config, &mut rng)?;
    let train: Vec<&[f64]> = data.iter().map(|p| p.train.as_slice()).collect();
    let estimates = candidate_estimates(&train, &config.window_menu);
    let models: Vec<String> = config.window_menu.iter().map(|w| format!("w{w}")).collect();

    let names = config.method_names();
    let mut traces: Vec<MethodTrace> = names
        .into_iter()
        .map(|method| MethodTrace {
            method,
            excess_risks: Vec::with_capacity(config.horizon),
        })
        .collect();
    let mut arw_windows = Vec::with_capacity(config.horizon);

    for t in 1..=config.horizon {
        let candidates = &estimates[t - 1];
        let mu = means.at(t);
        let losses = validation_losses(&data, candidates, t, &models)?;
        let excess = |r: usize| (candidates[r] - mu) * (candidates[r] - mu);

        let champion = tournament(&losses, &config.arw)?.champion;
        traces[0].excess_risks.push(excess(champion));
        arw_windows.push(config.window_menu[champion]);
        for (trace, &k) in traces[1..].iter_mut().zip(&config.window_menu) {
            trace.excess_risks.push(excess(fixed_window_select(&losses, k)?));
        }
    }

    Ok(TrialReport {
        methods: traces,
        arw_windows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub trials: Vec<TrialReport>,
}

/// Trial-averaged results of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_excess_risk: f64,
    /// Excess risk at each period, averaged over trials.
    pub per_period: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub methods: Vec<MethodSummary>,
}

impl SimulationSummary {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn mean_of(&self, name: &str) -> Option<f64> {
        self.method(name).map(|m| m.mean_excess_risk)
    }
}

impl ExperimentReport {
    /// Averages each method over trials; means cover all periods and trials.
    pub fn summary(&self) -> SimulationSummary {
        let Some(first) = self.trials.first() else {
            return SimulationSummary::default();
        };
        let n = self.trials.len() as f64;
        let methods = first
            .methods
            .iter()
            .enumerate()
            .map(|(idx, m)| {
                let periods = m.excess_risks.len();
                let per_period: Vec<f64> = (0..periods)
                    .map(|t| {
                        self.trials
                            .iter()
                            .map(|tr| tr.methods[idx].excess_risks[t])
                            .sum::<f64>()
                            / n
                    })
                    .collect();
                let mean_excess_risk = self.trials.iter().map(|tr| tr.methods[idx].mean()).sum::<f64>() / n;
                MethodSummary {
                    method: m.method.clone(),
                    mean_excess_risk,
                    per_period,
                }
            })
            .collect();
        SimulationSummary { methods }
    }
}

/// Runs `config.trials` independent trials in parallel; results are in trial order.
pub fn run_experiment(config: &ScenarioConfig, means: &MeanSequence) -> Result<ExperimentReport> {
    config.validate()?;
    let trials = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(config, means, trial))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { trials })
}

/// Ground-truth bias and noise level of a look-back window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBiasVariance {
    /// `max_{t-k+1 <= j <= t} |mu_j - mu_t|`
    pub bias: f64,
    /// Square root of the count-weighted mean of per-period variances.
    pub sigma: f64,
}

/// Oracle quantities for window `k` at period `t` (both 1-based).
///
/// `variances[j]` and `counts[j]` describe period `j + 1`.
pub fn oracle_bias_variance(
    means: &[f64],
    variances: &[f64],
    counts: &[usize],
    t: usize,
    k: usize,
) -> Result<OracleBiasVariance> {
    if t == 0 || t > means.len() || variances.len() < t || counts.len() < t {
        return Err(Error::InvalidScenario(format!("period {t} outside the ground truth")));
    }
    if k == 0 || k > t {
        return Err(Error::WindowOutOfRange { k, t });
    }
    let window = t - k..t;
    let current = means[t - 1];
    let bias = means[window.clone()]
        .iter()
        .map(|mu| (mu - current).abs())
        .fold(0.0, f64::max);
    let total: usize = counts[window.clone()].iter().sum();
    let weighted: f64 = variances[window.clone()]
        .iter()
        .zip(&counts[window])
        .map(|(v, &b)| v * b as f64)
        .sum();
    Ok(OracleBiasVariance {
        bias,
        sigma: (weighted / total as f64).sqrt(),
    })
}

/// `max_{t-k+1 <= j <= t} |mu_j - mu_t|` for every `k = 1..=t`.
pub fn true_bias_profile(means: &[f64], t: usize) -> Vec<f64> {
    let current = means[t - 1];
    let mut running = 0.0f64;
    means[..t]
        .iter()
        .rev()
        .map(|mu| {
            running = running.max((mu - current).abs());
            running
        })
        .collect()
}
