//! One-parameter sweeps over a scenario document.

use std::collections::BTreeSet;

use rayon::prelude::*;
use toml::{Table, Value};

use super::output::format_float;
use super::run::{run_scenario, ResultSet};
use super::{map_toml_error, parse_scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: Result<ResultSet, ScenarioError>,
}

enum Step {
    Key(String),
    Index(usize),
}

/// Splits `arm[0].element[1].duration` (or `arm.0.element.1.duration`).
fn parse_path(key: &str) -> Result<Vec<Step>, ScenarioError> {
    let bad = || ScenarioError::Invalid {
        field: key.to_string(),
        message: "parameter path must look like `section.key` or `arm[0].element[0].duration`".into(),
    };
    let mut steps = Vec::new();
    for part in key.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if !name.is_empty() {
            match name.parse::<usize>() {
                Ok(i) => steps.push(Step::Index(i)),
                Err(_) => steps.push(Step::Key(name.to_string())),
            }
        } else if rest.is_empty() {
            return Err(bad());
        }
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            let index = rest[1..close].parse::<usize>().map_err(|_| bad())?;
            steps.push(Step::Index(index));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(bad());
            }
        }
    }
    match steps.last() {
        Some(Step::Key(_)) => Ok(steps),
        _ => Err(bad()),
    }
}

/// The document with the numeric parameter at `key` set to `value`.
/// Integer-valued parameters stay integers when `value` is integral.
pub fn with_parameter(text: &str, key: &str, value: f64) -> Result<String, ScenarioError> {
    let doc: Table = toml::from_str(text).map_err(|e| map_toml_error(text, &e))?;
    let steps = parse_path(key)?;
    let missing = |what: String| ScenarioError::Invalid {
        field: key.to_string(),
        message: what,
    };

    let (last, inner) = steps.split_last().expect("path is non-empty");
    let mut root = Value::Table(doc);
    let mut cursor = &mut root;
    for step in inner {
        cursor = match (step, cursor) {
            (Step::Key(k), Value::Table(t)) => {
                t.entry(k.as_str()).or_insert_with(|| Value::Table(Table::new()))
            }
            (Step::Index(i), Value::Array(a)) => a
                .get_mut(*i)
                .ok_or_else(|| missing(format!("index {i} out of range")))?,
            _ => return Err(missing("path does not match the document structure".into())),
        };
    }
    let Step::Key(name) = last else { unreachable!() };
    let Value::Table(table) = cursor else {
        return Err(missing("parameter parent is not a table".into()));
    };
    let new = match table.get(name) {
        Some(Value::Integer(_)) if value.fract() == 0.0 && value.abs() < 9.0e15 => {
            Value::Integer(value as i64)
        }
        Some(Value::Float(_)) | None => Value::Float(value),
        Some(Value::Integer(_)) => Value::Float(value),
        Some(_) => return Err(missing(format!("`{name}` is not numeric"))),
    };
    table.insert(name.clone(), new);
    Ok(toml::to_string(&root).expect("TOML values serialize"))
}

/// Runs the scenario once per value, in parallel; output order follows
/// `values`.
pub fn run_sweep(text: &str, key: &str, values: &[f64]) -> Result<Vec<SweepPoint>, ScenarioError> {
    parse_scenario(text)?;
    parse_path(key)?;
    Ok(values
        .par_iter()
        .map(|&value| SweepPoint {
            value,
            outcome: with_parameter(text, key, value)
                .and_then(|doc| parse_scenario(&doc))
                .map(|s| run_scenario(&s)),
        })
        .collect())
}

/// One row per sweep value: the value, a status, every `analysis.key`
/// scalar seen in any run, and the per-run digest.
pub fn render_sweep_csv(key: &str, points: &[SweepPoint]) -> String {
    let columns: BTreeSet<String> = points
        .iter()
        .filter_map(|p| p.outcome.as_ref().ok())
        .flat_map(|r| r.scalars.iter().map(|s| format!("{}.{}", s.analysis, s.key)))
        .collect();
    let mut out = String::new();
    let mut header = vec![key.to_string(), "status".to_string()];
    header.extend(columns.iter().cloned());
    header.push("scenario_digest".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for p in points {
        let mut row = vec![format_float(p.value)];
        match &p.outcome {
            Ok(r) => {
                row.push(if r.has_errors() { "analysis_error" } else { "ok" }.into());
                for col in &columns {
                    let (analysis, k) = col.split_once('.').expect("column has a dot");
                    row.push(r.scalar(analysis, k).map(format_float).unwrap_or_default());
                }
                row.push(r.scenario_digest.clone());
            }
            Err(e) => {
                row.push(e.code().into());
                row.extend(columns.iter().map(|_| String::new()));
                row.push(String::new());
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
version = "1"
experiment = "sab"

[beam]
state = "sz+"

[[arm]]
[[arm.element]]
kind = "field_pulse"
magnitude = 0.5
duration = 1.0

[[arm]]
[[arm.element]]
kind = "free"
duration = 1.0

[analyses]
intensities = true
"#;

    #[test]
    fn sets_nested_parameter() {
        let doc = with_parameter(DOC, "arm[0].element[0].magnitude", 2.0).unwrap();
        let s = parse_scenario(&doc).unwrap();
        let (a1, _) = s.arms().unwrap();
        assert_eq!(
            a1[0],
            crate::interferometer::ArmElement::field_pulse(2.0, [0.0, 0.0, 1.0], 1.0)
        );
        let dotted = with_parameter(DOC, "arm.0.element.0.magnitude", 2.0).unwrap();
        assert_eq!(doc, dotted);
    }

    #[test]
    fn creates_missing_leaf_and_rejects_bad_paths() {
        let doc = with_parameter(DOC, "particle.magnetic_moment", 3.0).unwrap();
        assert_eq!(parse_scenario(&doc).unwrap().particle.magnetic_moment, 3.0);
        assert!(with_parameter(DOC, "arm[5].element[0].magnitude", 1.0).is_err());
        assert!(with_parameter(DOC, "arm[0]", 1.0).is_err());
        assert!(with_parameter(DOC, "experiment", 1.0).is_err());
    }

    #[test]
    fn sweep_preserves_order_and_reports_invalid_points() {
        let values = [0.5, -1.0, 1.5, 2.5];
        let points = run_sweep(DOC, "arm[1].element[0].duration", &values).unwrap();
        assert_eq!(points.iter().map(|p| p.value).collect::<Vec<_>>(), values);
        assert_eq!(points[1].outcome.as_ref().unwrap_err().code(), "range");
        let csv = render_sweep_csv("arm[1].element[0].duration", &points);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[2].contains(",range,"));
        let rerun = run_sweep(DOC, "arm[1].element[0].duration", &values).unwrap();
        let again = render_sweep_csv("arm[1].element[0].duration", &rerun);
        assert_eq!(csv, again);
    }
}
