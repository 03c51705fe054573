//! Model assessment, pairwise comparison, tournament selection and the
//! fixed-window baseline, all driven by per-sample losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::window_stats::{select_window, summarize_batch, ArwConfig, SummarySeries, WindowDiagnostics};

/// Per-period, per-sample, per-model losses.
///
/// Period `j` holds a row-major `samples x models` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTable {
    models: Vec<String>,
    periods: Vec<Vec<f64>>,
}

impl LossTable {
    /// Builds a table from row-major period matrices.
    pub fn from_flat(models: Vec<String>, periods: Vec<Vec<f64>>) -> Result<Self> {
        let m = models.len();
        if m == 0 {
            return Err(Error::EmptyModelSet);
        }
        if periods.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (j, values) in periods.iter().enumerate() {
            if values.is_empty() || values.len() % m != 0 {
                return Err(Error::InvalidLossTable(format!(
                    "period {} has {} values, expected a positive multiple of {m}",
                    j + 1,
                    values.len()
                )));
            }
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidLossTable(format!(
                    "period {} contains non-finite loss {bad}",
                    j + 1
                )));
            }
        }
        Ok(Self { models, periods })
    }

    /// Builds a table from per-period lists of sample rows.
    pub fn from_rows(models: Vec<String>, periods: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let m = models.len();
        let mut flat = Vec::with_capacity(periods.len());
        for (j, rows) in periods.into_iter().enumerate() {
            if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
                return Err(Error::InvalidLossTable(format!(
                    "period {} sample {} has {} losses, expected {m}",
                    j + 1,
                    i + 1,
                    row.len()
                )));
            }
            flat.push(rows.concat());
        }
        Self::from_flat(models, flat)
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn period_count(&self) -> usize {
        self.periods.len()
    }

    /// Number of samples in period `j` (0-based).
    pub fn sample_count(&self, period: usize) -> usize {
        self.periods[period].len() / self.models.len()
    }

    /// Loss of model `r` on sample `i` of period `j` (all 0-based).
    pub fn loss(&self, period: usize, sample: usize, model: usize) -> f64 {
        self.periods[period][sample * self.models.len() + model]
    }

    pub fn model_index(&self, name: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }

    /// Losses of model `r` in period `j`.
    pub fn column(&self, period: usize, model: usize) -> impl Iterator<Item = f64> + '_ {
        self.periods[period]
            .iter()
            .skip(model)
            .step_by(self.models.len())
            .copied()
    }

    /// Checks every entry against a declared loss range `[lo, hi]`.
    pub fn check_range(&self, lo: f64, hi: f64) -> Result<()> {
        for (j, values) in self.periods.iter().enumerate() {
            if let Some(v) = values.iter().find(|v| **v < lo || **v > hi) {
                return Err(Error::InvalidLossTable(format!(
                    "period {} has loss {v} outside [{lo}, {hi}]",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    fn check_model(&self, index: usize) -> Result<()> {
        if index >= self.models.len() {
            return Err(Error::ModelIndex {
                index,
                models: self.models.len(),
            });
        }
        Ok(())
    }
}

/// Per-period summaries of one model's losses.
pub fn model_summaries(losses: &LossTable, model: usize) -> Result<SummarySeries> {
    losses.check_model(model)?;
    let periods = (0..losses.period_count())
        .map(|j| summarize_batch(&losses.column(j, model).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    SummarySeries::new(periods)
}

/// Estimates the current-period risk of one model with the adaptive window.
pub fn assess_model(losses: &LossTable, model: usize, config: &ArwConfig) -> Result<WindowDiagnostics> {
    select_window(&model_summaries(losses, model)?, config)
}

/// Per-period summaries of the sample-wise loss differences `first - second`.
pub fn diff_summaries(losses: &LossTable, first: usize, second: usize) -> Result<SummarySeries> {
    losses.check_model(first)?;
    losses.check_model(second)?;
    if first == second {
        return Err(Error::SelfComparison(first));
    }
    let periods = (0..losses.period_count())
        .map(|j| {
            let diffs: Vec<f64> = losses
                .column(j, first)
                .zip(losses.column(j, second))
                .map(|(a, b)| a - b)
                .collect();
            summarize_batch(&diffs)
        })
        .collect::<Result<Vec<_>>>()?;
    SummarySeries::new(periods)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub first: usize,
    pub second: usize,
    pub winner: usize,
    /// Estimated risk gap `L(first) - L(second)` at the selected window.
    pub gap_estimate: f64,
    pub diagnostics: WindowDiagnostics,
}

/// Pairwise comparison on the loss-difference series.
///
/// `config.range_width` applies to the differences: with losses in `[a, b]`
/// use [`comparison_range_width`](crate::window_stats::comparison_range_width).
/// A gap estimate of exactly zero goes to `first`.
pub fn compare_pair(losses: &LossTable, first: usize, second: usize, config: &ArwConfig) -> Result<ComparisonResult> {
    let diagnostics = select_window(&diff_summaries(losses, first, second)?, config)?;
    let gap_estimate = diagnostics.estimate;
    let winner = if gap_estimate <= 0.0 { first } else { second };
    Ok(ComparisonResult {
        first,
        second,
        winner,
        gap_estimate,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Match(ComparisonResult),
    /// Unpaired survivor advancing without a comparison.
    Bye(usize),
}

impl Pairing {
    pub fn winner(&self) -> usize {
        match self {
            Pairing::Match(result) => result.winner,
            Pairing::Bye(model) => *model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub pairings: Vec<Pairing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRecord {
    pub rounds: Vec<Round>,
    pub champion: usize,
    pub comparisons_made: usize,
}

/// Single-elimination tournament over every model in the table.
///
/// Survivors are paired in order, `(0, 1), (2, 3), ...`; an odd survivor out
/// gets a bye. Each pair is decided by [`compare_pair`] with the same config.
pub fn tournament(losses: &LossTable, config: &ArwConfig) -> Result<BracketRecord> {
    let candidates: Vec<usize> = (0..losses.model_count()).collect();
    tournament_among(losses, &candidates, config)
}

/// Tournament restricted to `candidates` (model indices, in bracket order).
pub fn tournament_among(losses: &LossTable, candidates: &[usize], config: &ArwConfig) -> Result<BracketRecord> {
    if candidates.is_empty() {
        return Err(Error::EmptyModelSet);
    }
    for &c in candidates {
        losses.check_model(c)?;
    }
    config.validate()?;

    let mut survivors = candidates.to_vec();
    let mut rounds = Vec::new();
    let mut comparisons_made = 0;
    while survivors.len() > 1 {
        let pairings = survivors
            .chunks(2)
            .map(|pair| match *pair {
                [a, b] => compare_pair(losses, a, b, config).map(Pairing::Match),
                [a] => Ok(Pairing::Bye(a)),
                _ => unreachable!(),
            })
            .collect::<Result<Vec<_>>>()?;
        comparisons_made += pairings.iter().filter(|p| matches!(p, Pairing::Match(_))).count();
        survivors = pairings.iter().map(Pairing::winner).collect();
        rounds.push(Round { pairings });
    }

    Ok(BracketRecord {
        rounds,
        champion: survivors[0],
        comparisons_made,
    })
}

/// Fixed-window baseline: the model with the lowest pooled mean loss over the
/// last `min(t, window)` periods. Ties go to the smallest model index.
pub fn fixed_window_select(losses: &LossTable, window: usize) -> Result<usize> {
    if window == 0 {
        return Err(Error::InvalidConfig("window must be at least 1".into()));
    }
    let t = losses.period_count();
    let start = t - window.min(t);
    let m = losses.model_count();
    let mut sums = vec![0.0f64; m];
    let mut count = 0usize;
    for j in start..t {
        for row in losses.periods[j].chunks_exact(m) {
            for (sum, v) in sums.iter_mut().zip(row) {
                *sum += v;
            }
        }
        count += losses.sample_count(j);
    }
    let mut best = 0;
    let mut best_mean = sums[0] / count as f64;
    for (r, sum) in sums.iter().enumerate().skip(1) {
        let mean = sum / count as f64;
        if mean < best_mean {
            best = r;
            best_mean = mean;
        }
    }
    Ok(best)
}
