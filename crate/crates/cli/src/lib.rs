//! Command-line front end for `arw-core`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
//! violation.

pub mod args;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;

use arw_core::io::{
    render_report, AssessmentReport, BaselineReport, ComparisonReport, Report, ReportFormat, SelectionReport,
};
use arw_core::synthetic::{change_point_means, composite_means, constant_means, drift_means, CompositeParams};
use arw_core::{
    assess_model, compare_pair, fixed_window_select, read_losses, read_samples, select_window, tournament, ArwConfig,
    Error, ScenarioConfig, TieBreak, WindowDiagnostics,
};
use clap::Parser;

use crate::args::{Cli, Command, FormatArg, OutputArgs, ScenarioArg, SimulateArgs, TieBreakArg, WindowArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(Error::Invariant(_)) => EXIT_INVARIANT,
            CliError::Core(Error::InvalidConfig(_) | Error::InvalidScenario(_)) => EXIT_USAGE,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Core(e @ Error::Invariant(_)) => write!(f, "internal error: {e}"),
            CliError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

/// Parses `argv` and runs the command, writing the summary to `stdout` and
/// diagnostics to `stderr`. Returns the process exit code.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match run(&cli.command) {
        Ok(summary) => {
            let _ = stdout.write_all(summary.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

/// Runs one command; returns the human-readable summary.
pub fn run(command: &Command) -> Result<String, CliError> {
    let (report, summary, output) = match command {
        Command::Assess(a) => {
            let config = arw_config(&a.window)?;
            let (diagnostics, subject) = match (&a.samples, &a.losses, &a.model) {
                (Some(path), _, _) => (
                    select_window(&read_samples(path)?, &config)?,
                    path.display().to_string(),
                ),
                (None, Some(path), Some(model)) => {
                    let losses = read_losses(path)?;
                    let index = losses.model_index(model)?;
                    (
                        assess_model(&losses, index, &config)?,
                        format!("model {model} in {}", path.display()),
                    )
                }
                _ => {
                    return Err(CliError::Usage(
                        "assess needs --samples or --losses with --model".into(),
                    ))
                }
            };
            diagnostics.check_invariants(config.tie_break)?;
            let summary = format!(
                "assessment of {subject}\nestimate {}\nchosen window k = {} of {}\n\n{}",
                diagnostics.estimate,
                diagnostics.chosen_k,
                diagnostics.windows.len(),
                diagnostics_table(&diagnostics)
            );
            (Report::Assessment(AssessmentReport { diagnostics }), summary, &a.output)
        }
        Command::Compare(c) => {
            let config = arw_config(&c.window)?;
            let [first, second] = c.models.as_slice() else {
                return Err(CliError::Usage(format!(
                    "--models takes exactly two names, got {}",
                    c.models.len()
                )));
            };
            if first == second {
                return Err(CliError::Usage(format!(
                    "--models names the same model twice ({first})"
                )));
            }
            let losses = read_losses(&c.losses)?;
            let (i, j) = (losses.model_index(first)?, losses.model_index(second)?);
            let result = compare_pair(&losses, i, j, &config)?;
            result.diagnostics.check_invariants(config.tie_break)?;
            let winner = losses.models()[result.winner].clone();
            let summary = format!(
                "comparison {first} vs {second}\nwinner {winner}\ngap estimate L({first}) - L({second}) = {}\nchosen window k = {}\n\n{}",
                result.gap_estimate,
                result.diagnostics.chosen_k,
                diagnostics_table(&result.diagnostics)
            );
            let report = Report::Comparison(ComparisonReport {
                first: first.clone(),
                second: second.clone(),
                winner,
                gap_estimate: result.gap_estimate,
                diagnostics: result.diagnostics,
            });
            (report, summary, &c.output)
        }
        Command::Select(s) => {
            let config = arw_config(&s.window)?;
            let losses = read_losses(&s.losses)?;
            let bracket = tournament(&losses, &config)?;
            let m = losses.model_count();
            if bracket.comparisons_made != m - 1 {
                return Err(
                    Error::Invariant(format!("{} comparisons for {m} models", bracket.comparisons_made)).into(),
                );
            }
            let report = SelectionReport::from_bracket(&bracket, losses.models());
            let mut summary = String::new();
            for row in &report.matches {
                match (&row.second, row.gap_estimate) {
                    (Some(second), Some(gap)) => writeln!(
                        summary,
                        "round {}: {} vs {} -> {} (gap {gap}, k = {})",
                        row.round,
                        row.first,
                        second,
                        row.winner,
                        row.chosen_k.unwrap_or(0)
                    ),
                    _ => writeln!(summary, "round {}: {} advances (bye)", row.round, row.first),
                }
                .expect("write to string");
            }
            writeln!(
                summary,
                "champion {} after {} comparisons",
                report.champion, report.comparisons_made
            )
            .expect("write to string");
            (Report::Selection(report), summary, &s.output)
        }
        Command::Baseline(b) => {
            if b.window == 0 {
                return Err(CliError::Usage("--window must be at least 1".into()));
            }
            let losses = read_losses(&b.losses)?;
            let model = losses.models()[fixed_window_select(&losses, b.window)?].clone();
            let summary = format!("fixed window {} selects {model}\n", b.window);
            (
                Report::Baseline(BaselineReport {
                    window: b.window,
                    model,
                }),
                summary,
                &b.output,
            )
        }
        Command::Simulate(s) => {
            let (config, means) = scenario(s)?;
            let experiment = arw_core::synthetic::run_experiment(&config, &means)?;
            let table = experiment.summary();
            for m in &table.methods {
                if m.mean_excess_risk.is_nan() || m.mean_excess_risk < 0.0 {
                    return Err(
                        Error::Invariant(format!("{} has excess risk {}", m.method, m.mean_excess_risk)).into(),
                    );
                }
            }
            let mut summary = format!(
                "scenario {:?}, sigma2 {}, horizon {}, trials {}, seed {}\n{:<8} {:>16}\n",
                s.scenario, config.sigma2, config.horizon, config.trials, config.seed, "method", "mean_excess_risk"
            )
            .to_lowercase();
            for m in &table.methods {
                writeln!(summary, "{:<8} {:>16.6}", m.method, m.mean_excess_risk).expect("write to string");
            }
            (Report::Simulation(table), summary, &s.output)
        }
    };

    if let Some(path) = &output.output {
        let format = report_format(output);
        let bytes = render_report(&report, format)?;
        std::fs::write(path, bytes).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(summary)
}

fn report_format(output: &OutputArgs) -> ReportFormat {
    match output.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    }
}

fn arw_config(args: &WindowArgs) -> Result<ArwConfig, CliError> {
    let tie_break = match args.tie_break {
        TieBreakArg::Smallest => TieBreak::SmallestK,
        TieBreakArg::Largest => TieBreak::LargestK,
    };
    ArwConfig::new(args.delta_prime, args.range_width)
        .map(|c| c.with_tie_break(tie_break))
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn scenario(args: &SimulateArgs) -> Result<(ScenarioConfig, arw_core::MeanSequence), CliError> {
    let config = ScenarioConfig {
        horizon: args.horizon,
        sigma2: args.sigma2,
        window_menu: args.windows.clone(),
        trials: args.trials,
        seed: args.seed,
        arw: arw_config(&args.window)?,
        composite: CompositeParams {
            seed: args.means_seed,
            ..CompositeParams::for_horizon(args.horizon)
        },
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let usage = |e: Error| CliError::Usage(e.to_string());
    let means = match args.scenario {
        ScenarioArg::Stationary => constant_means(args.horizon, 0.0),
        ScenarioArg::Composite => {
            if args.horizon < 4 {
                return Err(CliError::Usage("the composite scenario needs --horizon >= 4".into()));
            }
            composite_means(&config)
        }
        ScenarioArg::Changepoint => {
            if args.shift_periods == 0 || args.shift_periods >= args.horizon {
                return Err(CliError::Usage(format!(
                    "--shift-periods must lie in 1..{}",
                    args.horizon
                )));
            }
            change_point_means(args.horizon, args.horizon - args.shift_periods, 0.0, args.shift_size)
        }
        ScenarioArg::Drift => drift_means(args.horizon, 0.0, args.drift_step, args.means_seed),
    }
    .map_err(usage)?;
    Ok((config, means))
}

fn diagnostics_table(d: &WindowDiagnostics) -> String {
    let mut out = format!(
        "{:>5} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
        "k", "B", "mean", "var", "psi", "phi", "objective"
    );
    for w in &d.windows {
        let marker = if w.k == d.chosen_k { " *" } else { "" };
        writeln!(
            out,
            "{:>5} {:>7} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}{marker}",
            w.k, w.pooled_count, w.pooled_mean, w.pooled_var, w.psi_hat, w.phi_hat, w.objective
        )
        .expect("write to string");
    }
    out
}
