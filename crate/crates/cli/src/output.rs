//! Machine-readable result emission.
//!
//! Two serializations share one tabular model: CSV rows under a
//! `#`-prefixed JSON header line (config + tool version), or one JSON
//! document `{tool, version, command, config, records}`.  Floats are
//! written with 12 significant digits in both formats, columns keep a
//! fixed declared order, and identical runs produce byte-identical
//! artifacts.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{Format, Settings};
use crate::CliError;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(&'static str),
    /// Column not produced by this command (CSV: empty, JSON: null).
    Null,
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Num(x) => format_sig(*x),
            Field::Int(n) => n.to_string(),
            Field::Bool(b) => b.to_string(),
            Field::Text(s) => (*s).to_string(),
            Field::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(x) => json!(round_sig(*x)),
            Field::Int(n) => json!(n),
            Field::Bool(b) => json!(b),
            Field::Text(s) => json!(s),
            Field::Null => Value::Null,
        }
    }
}

/// Render with 12 significant digits.
fn format_sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// Round to the 12 significant digits the text formats carry, so JSON
/// numbers match the CSV column values.
fn round_sig(x: f64) -> f64 {
    format_sig(x).parse().expect("formatted float reparses")
}

/// A complete result table: fixed column names plus rows of cells.
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Field>>,
}

/// The full-width sweep row shared by `amid-sweep`, `discord-sweep`, and
/// `qd-vs-variance`; columns not meaningful for a command stay null.
pub const SWEEP_COLUMNS: &[&str] = &[
    "kind",
    "alpha0",
    "n0",
    "eta",
    "sigma",
    "lambda_a",
    "lambda_b",
    "theta_m",
    "phi_m",
    "discord_bits",
    "variance",
    "mid_bits",
    "amid_bits",
    "truncation_dim",
    "nodes",
    "converged",
];

/// Serialize `table` in the configured format and write it to `--out` or
/// stdout.
///
/// # Errors
/// Fails only on the final write (exit code 1 territory, not a usage
/// error).
pub fn emit(command: &str, settings: &Settings, table: &Table) -> Result<(), CliError> {
    let text = match settings.format {
        Format::Csv => render_csv(command, settings, table),
        Format::Json => render_json(command, settings, table),
    };
    match &settings.out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            CliError::runtime(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            let stdout = std::io::stdout();
            stdout
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::runtime(format!("cannot write stdout: {e}")))
        }
    }
}

fn header_value(command: &str, settings: &Settings) -> Value {
    let mut map = Map::new();
    map.insert("command".into(), json!(command));
    map.insert("config".into(), settings.as_json(command));
    map.insert("tool".into(), json!("qdchan"));
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    Value::Object(map)
}

fn render_csv(command: &str, settings: &Settings, table: &Table) -> String {
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&header_value(command, settings).to_string());
    out.push('\n');
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        debug_assert_eq!(row.len(), table.columns.len());
        let cells: Vec<String> = row.iter().map(Field::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn render_json(command: &str, settings: &Settings, table: &Table) -> String {
    let records: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut object = Map::new();
            for (name, field) in table.columns.iter().zip(row) {
                object.insert((*name).to_string(), field.json());
            }
            Value::Object(object)
        })
        .collect();
    let Value::Object(mut document) = header_value(command, settings) else {
        unreachable!("header is always an object");
    };
    document.insert("records".into(), Value::Array(records));
    let mut text = serde_json::to_string_pretty(&Value::Object(document))
        .expect("static document serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_twelve_significant_digits() {
        assert_eq!(format_sig(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(format_sig(0.0), "0.00000000000e0");
        assert_eq!(round_sig(std::f64::consts::PI), 3.14159265359);
    }

    #[test]
    fn csv_and_json_share_the_cell_values() {
        let settings = Settings::default();
        let table = Table {
            columns: &["a", "b"],
            rows: vec![vec![Field::Num(0.5), Field::Null]],
        };
        let csv = render_csv("jqp", &settings, &table);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("# {"));
        assert_eq!(lines.next().unwrap(), "a,b");
        assert_eq!(lines.next().unwrap(), "5.00000000000e-1,");

        let json = render_json("jqp", &settings, &table);
        let doc: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["records"][0]["a"], json!(0.5));
        assert_eq!(doc["records"][0]["b"], Value::Null);
        assert_eq!(doc["tool"], json!("qdchan"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let settings = Settings::default();
        let table = Table {
            columns: &["x"],
            rows: vec![vec![Field::Num(1.2345678901234e-7)]],
        };
        let first = render_json("jqp", &settings, &table);
        let second = render_json("jqp", &settings, &table);
        assert_eq!(first, second);
        assert_eq!(
            render_csv("jqp", &settings, &table),
            render_csv("jqp", &settings, &table)
        );
    }
}
