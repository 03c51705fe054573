//! CSV ingestion of samples and losses, and CSV/JSON report serialization.
//!
//! Input schemas (comma separated, UTF-8, header required):
//!
//! - samples: `period,value`
//! - losses: `period,sample,model,loss`
//!
//! Periods start at 1 and must be contiguous. Reports write reals with 17
//! significant digits so that reading a report back reproduces every value
//! bit for bit. See `docs/formats.md` for the report schemas.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::selection::{BracketRecord, LossTable, Pairing};
use crate::synthetic::{MethodSummary, SimulationSummary};
use crate::window_stats::{summarize_batch, SummarySeries, WindowDiagnostics, WindowRow};

/// Formats a real like C's `%.17g`: 17 significant digits, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        trim_fraction(&fixed).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn expect_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile { path: path.into() });
    }
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn parse_field<T: FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {name} {raw:?}")))
}

fn parse_period(path: &Path, line: usize, raw: &str) -> Result<usize> {
    let period: usize = parse_field(path, line, "period", raw)?;
    if period == 0 {
        return Err(Error::parse(path, line, "periods start at 1"));
    }
    Ok(period)
}

fn parse_real(path: &Path, line: usize, name: &str, raw: &str) -> Result<f64> {
    let value: f64 = parse_field(path, line, name, raw)?;
    if !value.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite {name} {raw:?}")));
    }
    Ok(value)
}

fn check_contiguous<V>(path: &Path, groups: &BTreeMap<usize, V>) -> Result<()> {
    for (expected, &found) in (1..).zip(groups.keys()) {
        if found != expected {
            return Err(Error::NonContiguousPeriods {
                path: path.into(),
                expected,
                found,
            });
        }
    }
    Ok(())
}

/// Reads `period,value` rows and summarises each period's batch.
///
/// Row order does not matter: each period's values are summarised in sorted order.
pub fn read_samples(path: impl AsRef<Path>) -> Result<SummarySeries> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    expect_header(path, &mut reader, &["period", "value"])?;

    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let period = parse_period(path, line, &record[0])?;
        let value = parse_real(path, line, "value", &record[1])?;
        groups.entry(period).or_default().push(value);
    }
    if groups.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    check_contiguous(path, &groups)?;

    let periods = groups
        .into_values()
        .map(|mut values| {
            values.sort_by(f64::total_cmp);
            summarize_batch(&values)
        })
        .collect::<Result<Vec<_>>>()?;
    SummarySeries::new(periods)
}

/// Reads `period,sample,model,loss` rows into a dense table.
///
/// Models are ordered by first appearance in the file; samples within a
/// period by their sample index.
pub fn read_losses(path: impl AsRef<Path>) -> Result<LossTable> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    expect_header(path, &mut reader, &["period", "sample", "model", "loss"])?;

    let mut models: Vec<String> = Vec::new();
    let mut model_index: HashMap<String, usize> = HashMap::new();
    // period -> sample -> model index -> loss
    let mut cells: BTreeMap<usize, BTreeMap<usize, BTreeMap<usize, f64>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 4 fields, found {}", record.len()),
            ));
        }
        let period = parse_period(path, line, &record[0])?;
        let sample: usize = parse_field(path, line, "sample", &record[1])?;
        if sample == 0 {
            return Err(Error::parse(path, line, "samples start at 1"));
        }
        let name = &record[2];
        if name.is_empty() {
            return Err(Error::parse(path, line, "empty model name"));
        }
        let loss = parse_real(path, line, "loss", &record[3])?;
        let model = *model_index.entry(name.to_string()).or_insert_with(|| {
            models.push(name.to_string());
            models.len() - 1
        });
        match cells.entry(period).or_default().entry(sample).or_default().entry(model) {
            Entry::Vacant(slot) => {
                slot.insert(loss);
            }
            Entry::Occupied(_) => {
                return Err(Error::DuplicateLoss {
                    path: path.into(),
                    period,
                    sample,
                    model: name.to_string(),
                })
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    check_contiguous(path, &cells)?;

    let m = models.len();
    let mut periods = Vec::with_capacity(cells.len());
    for (period, samples) in cells {
        let mut flat = Vec::with_capacity(samples.len() * m);
        for (sample, row) in samples {
            if let Some(missing) = (0..m).find(|r| !row.contains_key(r)) {
                return Err(Error::MissingLoss {
                    path: path.into(),
                    period,
                    sample,
                    model: models[missing].clone(),
                });
            }
            flat.extend(row.into_values());
        }
        periods.push(flat);
    }
    LossTable::from_flat(models, periods)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?} (expected csv or json)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub diagnostics: WindowDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub first: String,
    pub second: String,
    pub winner: String,
    pub gap_estimate: f64,
    pub diagnostics: WindowDiagnostics,
}

/// One bracket entry; byes have no opponent, gap or window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub round: usize,
    pub first: String,
    pub second: Option<String>,
    pub winner: String,
    pub gap_estimate: Option<f64>,
    pub chosen_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub matches: Vec<MatchRow>,
    pub champion: String,
    pub comparisons_made: usize,
}

impl SelectionReport {
    pub fn from_bracket(bracket: &BracketRecord, models: &[String]) -> Self {
        let matches = bracket
            .rounds
            .iter()
            .enumerate()
            .flat_map(|(idx, round)| {
                round.pairings.iter().map(move |p| match p {
                    Pairing::Match(c) => MatchRow {
                        round: idx + 1,
                        first: models[c.first].clone(),
                        second: Some(models[c.second].clone()),
                        winner: models[c.winner].clone(),
                        gap_estimate: Some(c.gap_estimate),
                        chosen_k: Some(c.diagnostics.chosen_k),
                    },
                    Pairing::Bye(r) => MatchRow {
                        round: idx + 1,
                        first: models[*r].clone(),
                        second: None,
                        winner: models[*r].clone(),
                        gap_estimate: None,
                        chosen_k: None,
                    },
                })
            })
            .collect();
        Self {
            matches,
            champion: models[bracket.champion].clone(),
            comparisons_made: bracket.comparisons_made,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub window: usize,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Assessment(AssessmentReport),
    Comparison(ComparisonReport),
    Selection(SelectionReport),
    Baseline(BaselineReport),
    Simulation(SimulationSummary),
}

const DIAGNOSTIC_COLUMNS: [&str; 8] = ["k", "B", "mean", "var", "psi", "phi", "objective", "selected"];
const SELECTION_COLUMNS: [&str; 6] = ["round", "first", "second", "winner", "gap_estimate", "chosen_k"];
const BASELINE_COLUMNS: [&str; 2] = ["window", "model"];
const SIMULATION_COLUMNS: [&str; 2] = ["method", "mean_excess_risk"];
const COMPARISON_PREFIX: [&str; 3] = ["first", "second", "winner"];
const FINAL_ROUND: &str = "final";

fn diagnostic_fields(d: &WindowDiagnostics, row: &WindowRow) -> Vec<String> {
    vec![
        row.k.to_string(),
        row.pooled_count.to_string(),
        format_real(row.pooled_mean),
        format_real(row.pooled_var),
        format_real(row.psi_hat),
        format_real(row.phi_hat),
        format_real(row.objective),
        u8::from(row.k == d.chosen_k).to_string(),
    ]
}

/// Serializes a report into bytes. Output is deterministic for a given report.
pub fn render_report(report: &Report, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => render_json(report),
        ReportFormat::Csv => render_csv(report),
    }
}

fn render_csv(report: &Report) -> Result<Vec<u8>> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let header: Vec<String> = match report {
        Report::Assessment(a) => {
            for row in &a.diagnostics.windows {
                rows.push(diagnostic_fields(&a.diagnostics, row));
            }
            DIAGNOSTIC_COLUMNS.iter().map(|s| s.to_string()).collect()
        }
        Report::Comparison(c) => {
            for row in &c.diagnostics.windows {
                let mut fields = vec![c.first.clone(), c.second.clone(), c.winner.clone()];
                fields.extend(diagnostic_fields(&c.diagnostics, row));
                rows.push(fields);
            }
            COMPARISON_PREFIX
                .iter()
                .chain(DIAGNOSTIC_COLUMNS.iter())
                .map(|s| s.to_string())
                .collect()
        }
        Report::Selection(s) => {
            for m in &s.matches {
                rows.push(vec![
                    m.round.to_string(),
                    m.first.clone(),
                    m.second.clone().unwrap_or_default(),
                    m.winner.clone(),
                    m.gap_estimate.map(format_real).unwrap_or_default(),
                    m.chosen_k.map(|k| k.to_string()).unwrap_or_default(),
                ]);
            }
            rows.push(vec![
                FINAL_ROUND.to_string(),
                s.champion.clone(),
                String::new(),
                s.champion.clone(),
                String::new(),
                String::new(),
            ]);
            SELECTION_COLUMNS.iter().map(|s| s.to_string()).collect()
        }
        Report::Baseline(b) => {
            rows.push(vec![b.window.to_string(), b.model.clone()]);
            BASELINE_COLUMNS.iter().map(|s| s.to_string()).collect()
        }
        Report::Simulation(s) => {
            let periods = s.methods.first().map_or(0, |m| m.per_period.len());
            for m in &s.methods {
                let mut fields = vec![m.method.clone(), format_real(m.mean_excess_risk)];
                fields.extend(m.per_period.iter().map(|&v| format_real(v)));
                rows.push(fields);
            }
            SIMULATION_COLUMNS
                .iter()
                .map(|s| s.to_string())
                .chain((1..=periods).map(|t| format!("t{t}")))
                .collect()
        }
    };

    let mut writer = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
    let sink = Path::new("<memory>");
    writer.write_record(&header).map_err(|e| Error::csv(sink, e))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| Error::csv(sink, e))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::io(sink, io::Error::other(e.to_string())))
}

/// Pretty JSON whose reals use 17 significant digits.
struct RealFormatter(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for RealFormatter {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_real(value).as_bytes())
    }
}

fn render_json(report: &Report) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut out, RealFormatter(PrettyFormatter::new()));
    report.serialize(&mut serializer).map_err(|e| Error::Json {
        path: "<memory>".into(),
        source: e,
    })?;
    out.push(b'\n');
    Ok(out)
}

/// Writes a report to `path`.
pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = render_report(report, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a report written by [`write_report`]. CSV reports are recognised by their header.
pub fn read_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<Report> {
    let path = path.as_ref();
    match format {
        ReportFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: path.into(),
                source: e,
            })
        }
        ReportFormat::Csv => read_csv_report(path),
    }
}

fn read_csv_report(path: &Path) -> Result<Report> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(path, e))?;
    let rows: Vec<(usize, Vec<&str>)> = records
        .iter()
        .map(|r| (r.position().map_or(0, |p| p.line() as usize), r.iter().collect()))
        .collect();

    let is = |cols: &[&str]| header.iter().map(String::as_str).eq(cols.iter().copied());
    if is(&DIAGNOSTIC_COLUMNS) {
        let diagnostics = parse_diagnostics(path, rows.iter().map(|(l, r)| (*l, &r[..])))?;
        return Ok(Report::Assessment(AssessmentReport { diagnostics }));
    }
    let comparison_columns: Vec<&str> = COMPARISON_PREFIX
        .iter()
        .chain(DIAGNOSTIC_COLUMNS.iter())
        .copied()
        .collect();
    if is(&comparison_columns) {
        let (_, first) = rows
            .first()
            .ok_or_else(|| Error::parse(path, 2, "comparison report without rows"))?;
        let names: Vec<String> = first[..3].iter().map(|s| s.to_string()).collect();
        for (line, row) in &rows {
            if row[..3] != first[..3] {
                return Err(Error::parse(path, *line, "model names differ between rows"));
            }
        }
        let diagnostics = parse_diagnostics(path, rows.iter().map(|(l, r)| (*l, &r[3..])))?;
        return Ok(Report::Comparison(ComparisonReport {
            first: names[0].clone(),
            second: names[1].clone(),
            winner: names[2].clone(),
            gap_estimate: diagnostics.estimate,
            diagnostics,
        }));
    }
    if is(&SELECTION_COLUMNS) {
        let mut matches = Vec::new();
        let mut champion = None;
        for (line, row) in &rows {
            if row[0] == FINAL_ROUND {
                champion = Some(row[1].to_string());
                continue;
            }
            let optional = |s: &str| (!s.is_empty()).then(|| s.to_string());
            matches.push(MatchRow {
                round: parse_field(path, *line, "round", row[0])?,
                first: row[1].to_string(),
                second: optional(row[2]),
                winner: row[3].to_string(),
                gap_estimate: optional(row[4])
                    .map(|s| parse_field(path, *line, "gap_estimate", &s))
                    .transpose()?,
                chosen_k: optional(row[5])
                    .map(|s| parse_field(path, *line, "chosen_k", &s))
                    .transpose()?,
            });
        }
        let champion = champion.ok_or_else(|| Error::parse(path, rows.len() + 1, "missing final row"))?;
        let comparisons_made = matches.iter().filter(|m| m.second.is_some()).count();
        return Ok(Report::Selection(SelectionReport {
            matches,
            champion,
            comparisons_made,
        }));
    }
    if is(&BASELINE_COLUMNS) {
        let (line, row) = rows
            .first()
            .ok_or_else(|| Error::parse(path, 2, "baseline report without rows"))?;
        return Ok(Report::Baseline(BaselineReport {
            window: parse_field(path, *line, "window", row[0])?,
            model: row[1].to_string(),
        }));
    }
    if header.len() >= 2 && header[..2] == SIMULATION_COLUMNS {
        let methods = rows
            .iter()
            .map(|(line, row)| {
                Ok(MethodSummary {
                    method: row[0].to_string(),
                    mean_excess_risk: parse_field(path, *line, "mean_excess_risk", row[1])?,
                    per_period: row[2..]
                        .iter()
                        .map(|s| parse_field(path, *line, "excess risk", s))
                        .collect::<Result<Vec<f64>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Report::Simulation(SimulationSummary { methods }));
    }
    Err(Error::parse(
        path,
        1,
        format!("unrecognised report header {:?}", header.join(",")),
    ))
}

fn parse_diagnostics<'a>(path: &Path, rows: impl Iterator<Item = (usize, &'a [&'a str])>) -> Result<WindowDiagnostics> {
    let mut windows = Vec::new();
    let mut chosen_k = None;
    for (line, row) in rows {
        let real = |idx: usize, name: &str| parse_field::<f64>(path, line, name, row[idx]);
        let k: usize = parse_field(path, line, "k", row[0])?;
        windows.push(WindowRow {
            k,
            pooled_count: parse_field(path, line, "B", row[1])?,
            pooled_mean: real(2, "mean")?,
            pooled_var: real(3, "var")?,
            psi_hat: real(4, "psi")?,
            phi_hat: real(5, "phi")?,
            objective: real(6, "objective")?,
        });
        match row[7] {
            "1" => chosen_k = Some(k),
            "0" => {}
            other => return Err(Error::parse(path, line, format!("invalid selected flag {other:?}"))),
        }
    }
    let chosen_k = chosen_k.ok_or_else(|| Error::parse(path, windows.len() + 1, "no selected window"))?;
    let estimate = windows
        .iter()
        .find(|w| w.k == chosen_k)
        .map(|w| w.pooled_mean)
        .expect("selected row exists");
    Ok(WindowDiagnostics {
        windows,
        chosen_k,
        estimate,
    })
}
