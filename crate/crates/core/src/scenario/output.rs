//! CSV and JSON rendering of result sets.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::run::{ResultSet, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    Directory(PathBuf),
}

/// 17 significant digits, round-trip exact.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn digest_line(digest: &str) -> String {
    format!("# scenario_digest: {digest}\n")
}

/// One time series as CSV, preceded by a `# scenario_digest:` comment line.
pub fn render_csv(series: &TimeSeries, digest: &str) -> String {
    let mut out = digest_line(digest);
    out.push_str(&series.columns.join(","));
    out.push('\n');
    for row in &series.rows {
        let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Scalar results as `analysis,key,value,unit` rows in run order.
pub fn render_scalars_csv(results: &ResultSet) -> String {
    let mut out = digest_line(&results.scenario_digest);
    out.push_str("analysis,key,value,unit\n");
    for s in &results.scalars {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.analysis,
            s.key,
            format_float(s.value),
            s.unit
        );
    }
    out
}

/// Errors and diagnostics as `kind,analysis,code,message` rows.
pub fn render_messages_csv(results: &ResultSet) -> String {
    let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
    let mut out = digest_line(&results.scenario_digest);
    out.push_str("kind,analysis,code,message\n");
    for e in &results.errors {
        let _ = writeln!(out, "error,{},,{}", e.analysis, quote(&e.message));
    }
    for d in &results.diagnostics {
        let _ = writeln!(out, "diagnostic,{},{},{}", d.analysis, d.code, quote(&d.message));
    }
    out
}

/// The whole result set as JSON, scalars grouped by analysis name.
pub fn render_json(results: &ResultSet) -> String {
    let mut scalars = Map::new();
    for s in &results.scalars {
        let group = scalars
            .entry(s.analysis.clone())
            .or_insert_with(|| Value::Object(Map::new()));
        group
            .as_object_mut()
            .expect("group is an object")
            .insert(s.key.clone(), json!({ "value": s.value, "unit": s.unit }));
    }
    let series: Map<String, Value> = results
        .series
        .iter()
        .map(|t| (t.name.clone(), json!({ "columns": t.columns, "rows": t.rows })))
        .collect();
    let mut errors = Map::new();
    for e in &results.errors {
        errors.insert(e.analysis.clone(), Value::String(e.message.clone()));
    }
    let doc = json!({
        "scenario_digest": results.scenario_digest,
        "scalars": scalars,
        "time_series": series,
        "diagnostics": results.diagnostics,
        "errors": errors,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    text.push('\n');
    text
}

/// File name and contents for every output of `results` in `format`.
pub fn render_files(results: &ResultSet, format: OutputFormat) -> Vec<(String, String)> {
    match format {
        OutputFormat::Json => vec![("results.json".into(), render_json(results))],
        OutputFormat::Csv => {
            let mut files = vec![
                ("scalars.csv".to_string(), render_scalars_csv(results)),
                ("messages.csv".to_string(), render_messages_csv(results)),
            ];
            for t in &results.series {
                files.push((format!("{}.csv", t.name), render_csv(t, &results.scenario_digest)));
            }
            files
        }
    }
}

/// Writes the outputs, returning the paths created (empty for stdout).
pub fn emit(
    results: &ResultSet,
    format: OutputFormat,
    destination: &Destination,
) -> io::Result<Vec<PathBuf>> {
    let files = render_files(results, format);
    match destination {
        Destination::Stdout => {
            let mut text = String::new();
            for (name, body) in &files {
                if files.len() > 1 {
                    let _ = writeln!(text, "## {name}");
                }
                text.push_str(body);
            }
            print!("{text}");
            Ok(Vec::new())
        }
        Destination::Directory(dir) => write_files(dir, &files),
    }
}

pub(crate) fn write_files(dir: &Path, files: &[(String, String)]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::run::ScalarResult;

    fn sample() -> ResultSet {
        ResultSet {
            scenario_digest: "abc".into(),
            scalars: vec![ScalarResult {
                analysis: "intensities".into(),
                key: "i1".into(),
                value: 0.25,
                unit: "dimensionless".into(),
            }],
            series: vec![TimeSeries {
                name: "autocorrelation".into(),
                columns: vec!["t".into(), "c_value".into()],
                rows: vec![vec![0.0, 1.0], vec![0.1, 0.1f64.cos()]],
            }],
            diagnostics: Vec::new(),
            errors: Vec::new(),
        }
    }

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for v in [0.1, -1.0 / 3.0, 6.02e23, 1e-300, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s
                .split('e')
                .next()
                .unwrap()
                .trim_start_matches('-')
                .replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let r = sample();
        let text = render_csv(&r.series[0], &r.scenario_digest);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# scenario_digest: abc");
        assert_eq!(lines[1], "t,c_value");
        assert_eq!(lines[2], "0.0000000000000000e0,1.0000000000000000e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn json_groups_by_analysis() {
        let v: Value = serde_json::from_str(&render_json(&sample())).unwrap();
        assert_eq!(v["scenario_digest"], "abc");
        assert_eq!(v["scalars"]["intensities"]["i1"]["value"], 0.25);
        assert_eq!(v["time_series"]["autocorrelation"]["columns"][1], "c_value");
    }
}
