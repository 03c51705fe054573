//! Pooled look-back window statistics and adaptive window selection.
//!
//! Each period contributes a [`PeriodSummary`] (count, mean, spread).
//! For the current period `t` and every look-back window `k = 1..=t` the
//! pooled mean and Bessel-corrected pooled variance are derived from those
//! summaries alone. The window is chosen by minimising a bias proxy plus an
//! empirical-Bernstein deviation proxy:
//!
//! ```text
//! psi(k) = v_k * sqrt(2 ln(2/d) / B_k) + 8 M ln(2/d) / (3 (B_k - 1))     (B_k >= 2)
//! psi(k) = M                                                              (B_k == 1)
//! phi(k) = max_{i <= k} ( |mean_k - mean_i| - psi(k) - psi(i) )_+
//! k_hat  = argmin_k phi(k) + psi(k)
//! ```
//!
//! `d` is the confidence parameter `delta_prime` and `M` the loss range width.
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking `second_moment >= mean^2`.
pub const MOMENT_TOLERANCE: f64 = 1e-9;

/// Sufficient statistics of one period's batch.
///
/// Stored as count, mean and sum of squared deviations so that batches far
/// from zero keep their variance; the second moment is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    count: usize,
    mean: f64,
    m2: f64,
}

impl PeriodSummary {
    /// From count, mean and mean of squares.
    pub fn new(count: usize, mean: f64, second_moment: f64) -> Result<Self> {
        if !second_moment.is_finite() {
            return Err(Error::InvalidSummary(format!(
                "non-finite moments (mean {mean}, second moment {second_moment})"
            )));
        }
        let square = mean * mean;
        if second_moment < square - MOMENT_TOLERANCE * square.max(1.0) {
            return Err(Error::InvalidSummary(format!(
                "second moment {second_moment} below squared mean {square}"
            )));
        }
        Self::from_deviations(count, mean, (count as f64 * (second_moment - square)).max(0.0))
    }

    /// From count, mean and sum of squared deviations from the mean.
    pub fn from_deviations(count: usize, mean: f64, sum_squared_deviations: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidSummary("count must be at least 1".into()));
        }
        if !mean.is_finite() || !sum_squared_deviations.is_finite() {
            return Err(Error::InvalidSummary(format!(
                "non-finite moments (mean {mean}, squared deviations {sum_squared_deviations})"
            )));
        }
        if sum_squared_deviations < 0.0 {
            return Err(Error::InvalidSummary(format!(
                "negative sum of squared deviations {sum_squared_deviations}"
            )));
        }
        Ok(Self {
            count,
            mean,
            m2: sum_squared_deviations,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean + self.m2 / self.count as f64
    }

    pub fn sum_squared_deviations(&self) -> f64 {
        self.m2
    }

    /// Checks the mean against a declared loss range `[lo, hi]`.
    pub fn check_range(&self, lo: f64, hi: f64) -> Result<()> {
        if self.mean < lo || self.mean > hi {
            return Err(Error::InvalidSummary(format!(
                "mean {} outside declared range [{lo}, {hi}]",
                self.mean
            )));
        }
        Ok(())
    }
}

/// Reduces a batch of samples to its count, mean and squared deviations.
pub fn summarize_batch(samples: &[f64]) -> Result<PeriodSummary> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    PeriodSummary::from_deviations(samples.len(), mean, m2)
}

/// Time-ordered period summaries; the last entry is the current period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySeries {
    periods: Vec<PeriodSummary>,
}

impl SummarySeries {
    pub fn new(periods: Vec<PeriodSummary>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self { periods })
    }

    /// Summarises each batch in order.
    pub fn from_batches<I, B>(batches: I) -> Result<Self>
    where
        I: IntoIterator<Item = B>,
        B: AsRef<[f64]>,
    {
        let periods = batches
            .into_iter()
            .map(|b| summarize_batch(b.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(periods)
    }

    /// Number of periods `t`.
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn periods(&self) -> &[PeriodSummary] {
        &self.periods
    }

    pub fn current(&self) -> &PeriodSummary {
        self.periods.last().expect("series is non-empty")
    }
}

/// How to resolve ties in the window argmin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    SmallestK,
    LargestK,
}

/// Hyperparameters of the adaptive window rule.
///
/// The defaults (`delta_prime = 0.1`, `range_width = 0`) are the values used
/// in the simulation studies. The deviation guarantees assume `range_width`
/// equals the width `b - a` of the loss range; with `range_width = 0` the
/// second deviation term vanishes and a single pooled sample gets `psi = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArwConfig {
    pub delta_prime: f64,
    pub range_width: f64,
    pub tie_break: TieBreak,
}

impl Default for ArwConfig {
    fn default() -> Self {
        Self {
            delta_prime: 0.1,
            range_width: 0.0,
            tie_break: TieBreak::SmallestK,
        }
    }
}

impl ArwConfig {
    pub fn new(delta_prime: f64, range_width: f64) -> Result<Self> {
        let config = Self {
            delta_prime,
            range_width,
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_prime > 0.0 && self.delta_prime < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta_prime must lie in (0, 1), got {}",
                self.delta_prime
            )));
        }
        if !(self.range_width >= 0.0 && self.range_width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "range_width must be finite and non-negative, got {}",
                self.range_width
            )));
        }
        Ok(())
    }
}

/// `delta / (3 t)`: per-call confidence giving an overall `1 - delta`
/// guarantee for mean estimation or a pairwise comparison at period `t`.
pub fn assessment_delta_prime(delta: f64, periods: usize) -> f64 {
    delta / (3.0 * periods as f64)
}

/// `delta / (3 m^2 t)`: per-comparison confidence for a tournament over `m` models.
pub fn tournament_delta_prime(delta: f64, models: usize, periods: usize) -> f64 {
    let m = models as f64;
    delta / (3.0 * m * m * periods as f64)
}

/// Range width for loss differences when losses lie in `[lo, hi]`.
pub fn comparison_range_width(lo: f64, hi: f64) -> f64 {
    2.0 * (hi - lo)
}

/// Count, mean and sample variance of the samples pooled over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledStats {
    pub count: usize,
    pub mean: f64,
    /// Bessel-corrected, clamped at zero; zero when `count == 1`.
    pub variance: f64,
}

/// Pooled statistics over the last `k` periods.
pub fn pooled_stats(series: &SummarySeries, k: usize) -> Result<PooledStats> {
    let t = series.len();
    if k == 0 || k > t {
        return Err(Error::WindowOutOfRange { k, t });
    }
    Ok(pooled_stats_all(series)[k - 1])
}

/// Pooled statistics for every window `k = 1..=t`, entry `k - 1` holding window `k`.
///
/// Single backward pass merging one period at a time (pairwise update of
/// count, mean and sum of squared deviations).
pub fn pooled_stats_all(series: &SummarySeries) -> Vec<PooledStats> {
    let mut out = Vec::with_capacity(series.len());
    let mut count = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for period in series.periods().iter().rev() {
        let b = period.count();
        let merged = count + b;
        let delta = period.mean() - mean;
        let weight = b as f64 / merged as f64;
        mean += delta * weight;
        m2 += period.sum_squared_deviations() + delta * delta * count as f64 * weight;
        count = merged;
        let variance = if count > 1 {
            (m2 / (count - 1) as f64).max(0.0)
        } else {
            0.0
        };
        out.push(PooledStats { count, mean, variance });
    }
    out
}

/// Empirical-Bernstein deviation proxy for a pooled mean.
pub fn psi_hat(pooled_var: f64, pooled_count: usize, delta_prime: f64, range_width: f64) -> f64 {
    if pooled_count <= 1 {
        return range_width;
    }
    let log_term = (2.0 / delta_prime).ln();
    let b = pooled_count as f64;
    pooled_var.max(0.0).sqrt() * (2.0 * log_term / b).sqrt() + 8.0 * range_width * log_term / (3.0 * (b - 1.0))
}

/// Bias proxy for window `k` given the pooled means and deviation proxies of
/// windows `1..=k` (slice index `i - 1` holds window `i`).
///
/// # Panics
///
/// If either slice is shorter than `k` or `k == 0`.
pub fn phi_hat(k: usize, pooled_means: &[f64], psi_hats: &[f64]) -> f64 {
    assert!(k >= 1, "window index starts at 1");
    let (mean_k, psi_k) = (pooled_means[k - 1], psi_hats[k - 1]);
    pooled_means[..k]
        .iter()
        .zip(&psi_hats[..k])
        .map(|(mean_i, psi_i)| ((mean_k - mean_i).abs() - (psi_k + psi_i)).max(0.0))
        .fold(0.0, f64::max)
}

/// Per-window quantities computed by [`select_window`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub k: usize,
    pub pooled_count: usize,
    pub pooled_mean: f64,
    pub pooled_var: f64,
    pub psi_hat: f64,
    pub phi_hat: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    /// One row per window, `windows[k - 1]` for window `k`.
    pub windows: Vec<WindowRow>,
    pub chosen_k: usize,
    pub estimate: f64,
}

impl WindowDiagnostics {
    pub fn chosen(&self) -> &WindowRow {
        &self.windows[self.chosen_k - 1]
    }

    /// Checks the structural invariants of a diagnostics table.
    pub fn check_invariants(&self, tie_break: TieBreak) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        if self.windows.is_empty() {
            return fail("no windows".into());
        }
        for (idx, row) in self.windows.iter().enumerate() {
            if row.k != idx + 1 {
                return fail(format!("row {idx} has k = {}", row.k));
            }
            if row.phi_hat < 0.0 {
                return fail(format!("negative phi at k = {}", row.k));
            }
            if idx > 0 && row.pooled_count <= self.windows[idx - 1].pooled_count {
                return fail(format!("pooled count not increasing at k = {}", row.k));
            }
        }
        if self.windows[0].phi_hat != 0.0 {
            return fail("phi at k = 1 must be zero".into());
        }
        let expected = argmin_objective(&self.windows, tie_break);
        if expected != self.chosen_k {
            return fail(format!("chosen k = {} but argmin is {expected}", self.chosen_k));
        }
        Ok(())
    }
}

fn argmin_objective(rows: &[WindowRow], tie_break: TieBreak) -> usize {
    let min = rows.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
    let mut hits = rows.iter().filter(|r| r.objective == min);
    let row = match tie_break {
        TieBreak::SmallestK => hits.next(),
        TieBreak::LargestK => hits.next_back(),
    };
    // NaN objectives fall back to the current period alone.
    row.map_or(1, |r| r.k)
}

/// Adaptive rolling window: picks the look-back window minimising `phi + psi`.
pub fn select_window(series: &SummarySeries, config: &ArwConfig) -> Result<WindowDiagnostics> {
    config.validate()?;
    let pooled = pooled_stats_all(series);
    let means: Vec<f64> = pooled.iter().map(|p| p.mean).collect();
    let psis: Vec<f64> = pooled
        .iter()
        .map(|p| psi_hat(p.variance, p.count, config.delta_prime, config.range_width))
        .collect();

    let windows: Vec<WindowRow> = pooled
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let k = idx + 1;
            let phi = phi_hat(k, &means, &psis);
            WindowRow {
                k,
                pooled_count: p.count,
                pooled_mean: p.mean,
                pooled_var: p.variance,
                psi_hat: psis[idx],
                phi_hat: phi,
                objective: phi + psis[idx],
            }
        })
        .collect();

    let chosen_k = argmin_objective(&windows, config.tie_break);
    let estimate = windows[chosen_k - 1].pooled_mean;
    Ok(WindowDiagnostics {
        windows,
        chosen_k,
        estimate,
    })
}
