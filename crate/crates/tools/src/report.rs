//! Markdown digest of the summaries and tables in an output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::ToolError;
use crate::output::Summary;
use crate::table::ResultTable;

/// Rows shown per embedded table; longer tables are thinned evenly.
pub const MAX_ROWS: usize = 40;

const ORDER: [&str; 8] = [
    "modes",
    "crsc",
    "prsc",
    "scaling",
    "sideband",
    "carrier",
    "carrier_fit",
    "limits",
];

/// Summaries found in `dir`, in presentation order.
pub fn collect(dir: &Path) -> Result<Vec<(PathBuf, Summary)>, ToolError> {
    let entries = std::fs::read_dir(dir).map_err(|e| ToolError::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| ToolError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            found.push((path.clone(), Summary::read(&path)?));
        }
    }
    let rank = |c: &str| ORDER.iter().position(|o| *o == c).unwrap_or(ORDER.len());
    found.sort_by(|a, b| (rank(&a.1.command), &a.0).cmp(&(rank(&b.1.command), &b.0)));
    Ok(found)
}

fn markdown_table(t: &ResultTable, out: &mut String) {
    let _ = writeln!(out, "| {} |", t.columns.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(t.columns.len()));
    let n = t.rows.len();
    let stride = n.div_ceil(MAX_ROWS).max(1);
    for (k, row) in t.rows.iter().enumerate() {
        if k % stride == 0 || k + 1 == n {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
    }
    if stride > 1 {
        let _ = writeln!(out, "\nShowing every {stride}th of {n} rows and the last row.");
    }
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => "n/a".into(),
        other => other.to_string(),
    }
}

/// Arrays of JSON objects, shown as their own table.
fn records(v: &serde_json::Value) -> Option<Vec<&serde_json::Map<String, serde_json::Value>>> {
    let items = v.as_array().filter(|a| !a.is_empty())?;
    items.iter().map(|x| x.as_object()).collect()
}

fn record_table(rows: &[&serde_json::Map<String, serde_json::Value>], out: &mut String) {
    let mut keys: Vec<&String> = rows.iter().flat_map(|r| r.keys()).collect();
    keys.sort();
    keys.dedup();
    let _ = writeln!(out, "| {} |", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(keys.len()));
    for r in rows {
        let cells: Vec<String> = keys.iter().map(|k| r.get(*k).map_or("".into(), scalar)).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
}

/// Builds the report. Fails if the summaries or their tables disagree on
/// the configuration hash.
pub fn build_report(dir: &Path) -> Result<String, ToolError> {
    let found = collect(dir)?;
    let Some((_, first)) = found.first() else {
        return Err(ToolError::Usage(format!("no summaries in {}", dir.display())));
    };
    let hash = first.config_hash.clone();
    let mut tables = Vec::new();
    for (path, s) in &found {
        if s.config_hash != hash {
            return Err(ToolError::Report(format!(
                "{} has config hash {} but {} was expected",
                path.display(),
                s.config_hash,
                hash
            )));
        }
        for name in &s.tables {
            let p = dir.join(name);
            let t = ResultTable::read_csv(&p)?;
            match t.metadata.get("config_hash") {
                Some(h) if *h == hash => tables.push(t),
                other => {
                    return Err(ToolError::Report(format!(
                        "{} has config hash {} but {} was expected",
                        p.display(),
                        other.map_or("(none)", String::as_str),
                        hash
                    )))
                }
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "# Cooling simulation report\n");
    let _ = writeln!(out, "- config hash: `{hash}`");
    let _ = writeln!(out, "- tool version: {}", first.version);
    let mut tables = tables.into_iter();
    for (_, s) in &found {
        let _ = writeln!(out, "\n## {}\n", s.command);
        let _ = writeln!(out, "- seed: {}", s.seed);
        for (k, v) in &s.parameters {
            let _ = writeln!(out, "- {k}: {v}");
        }
        if let serde_json::Value::Object(map) = &s.results {
            let _ = writeln!(out, "\n| result | value |\n|---|---|");
            for (k, v) in map.iter().filter(|(_, v)| records(v).is_none()) {
                let _ = writeln!(out, "| {k} | {} |", scalar(v));
            }
            for (k, rows) in map.iter().filter_map(|(k, v)| records(v).map(|r| (k, r))) {
                let _ = writeln!(out, "\n### {k}\n");
                record_table(&rows, &mut out);
            }
        }
        for name in &s.tables {
            let t = tables.next().expect("one table per listed name");
            let _ = writeln!(out, "\n### {name}\n");
            markdown_table(&t, &mut out);
        }
    }
    Ok(out)
}

/// Writes `report.md` into `out_dir` and returns its path.
pub fn write_report(dir: &Path, out_dir: &Path) -> Result<PathBuf, ToolError> {
    let text = build_report(dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| ToolError::io(out_dir, e))?;
    let path = out_dir.join("report.md");
    std::fs::write(&path, text).map_err(|e| ToolError::io(&path, e))?;
    Ok(path)
}
