//! Deterministic inputs shared by the benchmarks.

use arw_core::synthetic::{
    candidate_estimates, composite_means, gen_trial_data, validation_losses, PeriodData, TrialRng,
};
use arw_core::{LossTable, ScenarioConfig, SummarySeries};

/// One trial of the composite scenario over `horizon` periods.
pub fn composite_trial(horizon: usize) -> (ScenarioConfig, Vec<PeriodData>) {
    let config = ScenarioConfig {
        horizon,
        composite: arw_core::synthetic::CompositeParams::for_horizon(horizon),
        ..ScenarioConfig::default()
    };
    let means = composite_means(&config).expect("valid composite");
    let data = gen_trial_data(&means, &config, &mut TrialRng::new(1, 0)).expect("valid config");
    (config, data)
}

/// Validation batches of a composite trial as a summary series.
pub fn validation_series(horizon: usize) -> SummarySeries {
    let (_, data) = composite_trial(horizon);
    SummarySeries::from_batches(data.iter().map(|p| p.validation.as_slice())).expect("non-empty batches")
}

/// Validation losses of `models` window-mean candidates at the last period.
pub fn loss_table(horizon: usize, models: usize) -> LossTable {
    let (_, data) = composite_trial(horizon);
    let menu: Vec<usize> = (0..models).map(|i| 1 << i).collect();
    let train: Vec<&[f64]> = data.iter().map(|p| p.train.as_slice()).collect();
    let estimates = candidate_estimates(&train, &menu);
    let names: Vec<String> = menu.iter().map(|w| format!("V{w}")).collect();
    validation_losses(&data, &estimates[horizon - 1], horizon, &names).expect("consistent data")
}
