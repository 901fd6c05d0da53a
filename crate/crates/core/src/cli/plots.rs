//! Self-contained matplotlib scripts that read the emitted CSV files.

/// How one CSV file should be drawn.
pub(crate) struct PlotSpec {
    pub csv: &'static str,
    pub x: &'static str,
    /// Column name prefixes; every column starting with one of them is drawn.
    pub y_prefixes: &'static [&'static str],
    /// Column whose distinct values split the data into separate curves.
    pub group_by: Option<&'static str>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: &'static str,
}

pub(crate) fn script(spec: &PlotSpec) -> String {
    let prefixes: Vec<String> = spec.y_prefixes.iter().map(|p| format!("\"{p}\"")).collect();
    let group = spec.group_by.map_or("None".to_string(), |g| format!("\"{g}\""));
    let py_bool = |b: bool| if b { "True" } else { "False" };
    format!(
        r#"#!/usr/bin/env python3
"""Plot {csv} (generated by tvar)."""
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, "{csv}")
X = "{x}"
PREFIXES = [{prefixes}]
GROUP = {group}

with open(CSV, newline="") as fh:
    rows = list(csv.DictReader(fh))
columns = [c for c in rows[0].keys() if any(c.startswith(p) for p in PREFIXES)] if rows else []
groups = defaultdict(list)
for row in rows:
    groups[row[GROUP] if GROUP else ""].append(row)

fig, ax = plt.subplots(figsize=(7, 4.5))
for key, members in groups.items():
    xs = [float(r[X]) for r in members]
    for col in columns:
        label = f"{{col}} ({{GROUP}}={{float(key):g}})" if GROUP else col
        ax.plot(xs, [float(r[col]) for r in members], marker="." if len(xs) < 50 else None, label=label)
if {log_x}:
    ax.set_xscale("log")
if {log_y}:
    ax.set_yscale("log")
ax.set_xlabel(X)
ax.set_title("{title}")
if len(columns) * len(groups) <= 12:
    ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{stem}.png"), dpi=150)
"#,
        csv = spec.csv,
        x = spec.x,
        prefixes = prefixes.join(", "),
        group = group,
        log_x = py_bool(spec.log_x),
        log_y = py_bool(spec.log_y),
        title = spec.title,
        stem = spec.csv.trim_end_matches(".csv"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_references_only_its_csv() {
        let s = script(&PlotSpec {
            csv: "risk.csv",
            x: "n",
            y_prefixes: &["l2_risk"],
            group_by: Some("t"),
            log_x: true,
            log_y: true,
            title: "risk",
        });
        assert!(s.contains("\"risk.csv\""));
        assert!(s.contains("PREFIXES = [\"l2_risk\"]"));
        assert!(s.contains("if True:"));
    }
}
