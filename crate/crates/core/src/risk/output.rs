use std::fmt::Display;
use std::io::Write;

use crate::csv::fmt;

use super::compare::ComparisonReport;
use super::expansion::{CenteredRiskEntry, ExpansionEntry};
use super::montecarlo::{RiskEntry, RiskReport};
use super::rate::RateFit;

/// Accumulates `key = value` lines for a machine-readable summary.
#[derive(Debug, Default, Clone)]
pub struct SummaryWriter {
    lines: Vec<String>,
}

impl SummaryWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.lines.push(format!("{key} = \"{value}\""));
        self
    }

    pub fn int(&mut self, key: &str, value: impl Into<i128>) -> &mut Self {
        self.lines.push(format!("{key} = {}", value.into()));
        self
    }

    pub fn real(&mut self, key: &str, value: f64) -> &mut Self {
        let v = if value.is_finite() {
            fmt(value)
        } else if value.is_nan() {
            "nan".to_string()
        } else if value > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
        self.lines.push(format!("{key} = {v}"));
        self
    }

    pub fn rate_fit(&mut self, prefix: &str, fit: &RateFit) -> &mut Self {
        self.real(&format!("{prefix}.slope"), fit.slope)
            .real(&format!("{prefix}.slope_se"), fit.slope_se)
            .real(&format!("{prefix}.intercept"), fit.intercept)
            .real(&format!("{prefix}.r_squared"), fit.r_squared)
            .int(&format!("{prefix}.points"), fit.points.len() as i128)
    }

    pub fn finish(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

pub fn write_summary<W: Write>(mut w: W, summary: &SummaryWriter) -> std::io::Result<()> {
    w.write_all(summary.finish().as_bytes())
}

fn risk_header(d: usize, prefix: &str) -> Vec<String> {
    let mut h: Vec<String> = ["l1_risk", "l1_se", "l2_risk", "l2_se", "msem_trace"]
        .iter()
        .map(|s| format!("{prefix}{s}"))
        .collect();
    for i in 1..=d {
        h.push(format!("{prefix}bias_{i}"));
    }
    for i in 1..=d {
        h.push(format!("{prefix}bias_se_{i}"));
    }
    for i in 1..=d {
        for j in 1..=d {
            h.push(format!("{prefix}cov_{i}_{j}"));
        }
    }
    for i in 1..=d {
        for j in 1..=d {
            h.push(format!("{prefix}msem_{i}_{j}"));
        }
    }
    h
}

fn risk_row(e: &RiskEntry) -> Vec<String> {
    let mut row = vec![
        fmt(e.l1_risk),
        fmt(e.l1_se),
        fmt(e.l2_risk),
        fmt(e.l2_se),
        fmt(e.msem_trace()),
    ];
    row.extend(e.bias.iter().map(|v| fmt(*v)));
    row.extend(e.bias_se.iter().map(|v| fmt(*v)));
    let d = e.bias.len();
    for i in 0..d {
        for j in 0..d {
            row.push(fmt(e.cov_unbiased[(i, j)]));
        }
    }
    for i in 0..d {
        for j in 0..d {
            row.push(fmt(e.msem[(i, j)]));
        }
    }
    row
}

impl RiskReport {
    /// One row per `(n, t)`; `cov` columns hold the unbiased covariance.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.entries.first().map_or(0, |e| e.bias.len());
        let mut header = vec!["n".to_string(), "t".into(), "mu".into(), "replicates".into()];
        header.extend(risk_header(d, ""));
        writeln!(w, "{}", header.join(","))?;
        for e in &self.entries {
            let mut row = vec![e.n.to_string(), fmt(e.t), fmt(e.mu), e.replicates.to_string()];
            row.extend(risk_row(e));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

impl RateFit {
    /// Points as `log_n,log_risk` plus the fitted value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "log_n,log_risk,fitted")?;
        for &(x, y) in &self.points {
            writeln!(w, "{},{},{}", fmt(x), fmt(y), fmt(self.intercept + self.slope * x))?;
        }
        Ok(())
    }
}

impl ComparisonReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.entries.first().map_or(0, |e| e.nlms.bias.len());
        let mut header = vec![
            "n".to_string(),
            "t".into(),
            "mu".into(),
            "gamma".into(),
            "replicates".into(),
            "l2_ratio".into(),
            "l2_ratio_se".into(),
        ];
        header.extend(risk_header(d, "nlms_"));
        header.extend(risk_header(d, "romberg_"));
        writeln!(w, "{}", header.join(","))?;
        for e in &self.entries {
            let mut row = vec![
                e.n.to_string(),
                fmt(e.t),
                fmt(e.mu),
                fmt(self.gamma),
                e.nlms.replicates.to_string(),
                fmt(e.l2_ratio),
                fmt(e.l2_ratio_se),
            ];
            row.extend(risk_row(&e.nlms));
            row.extend(risk_row(&e.romberg));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn write_expansion_csv<W: Write>(mut w: W, entries: &[ExpansionEntry]) -> std::io::Result<()> {
    let d = entries.first().map_or(0, |e| e.predicted_bias.len());
    let mut header: Vec<String> = ["n", "t", "mu", "bias_residual", "cov_residual", "centered_msem_residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(
        [
            "predicted_variance",
            "scale_noise",
            "scale_bias_squared",
            "scale_smoothness",
            "scale_cross",
            "remainder_scale",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    for prefix in ["predicted_bias", "empirical_bias", "bias_se"] {
        header.extend((1..=d).map(|i| format!("{prefix}_{i}")));
    }
    writeln!(w, "{}", header.join(","))?;
    for e in entries {
        let mut row = vec![e.n.to_string()];
        row.extend(
            [
                e.t,
                e.mu,
                e.bias_residual,
                e.cov_residual,
                e.centered_msem_residual,
                e.predicted_variance,
                e.scale_noise,
                e.scale_bias_squared,
                e.scale_smoothness,
                e.scale_cross,
                e.remainder_scale(),
            ]
            .iter()
            .map(|v| fmt(*v)),
        );
        for v in e.predicted_bias.iter().chain(&e.empirical_bias).chain(&e.bias_se) {
            row.push(fmt(*v));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_centered_csv<W: Write>(mut w: W, entries: &[CenteredRiskEntry]) -> std::io::Result<()> {
    let d = entries.first().map_or(0, |e| e.centering.len());
    let mut header: Vec<String> = [
        "n",
        "t",
        "mu",
        "centered_l1",
        "centered_l1_se",
        "centered_l2",
        "centered_l2_se",
        "uncentered_l1",
        "uncentered_l1_se",
        "uncentered_l2",
        "uncentered_l2_se",
        "squared_gain",
        "squared_gain_se",
        "bound_scale",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=d).map(|i| format!("centering_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for e in entries {
        let mut row = vec![e.n.to_string()];
        row.extend(
            [
                e.t,
                e.mu,
                e.centered.l1_risk,
                e.centered.l1_se,
                e.centered.l2_risk,
                e.centered.l2_se,
                e.uncentered.l1_risk,
                e.uncentered.l1_se,
                e.uncentered.l2_risk,
                e.uncentered.l2_se,
                e.squared_gain,
                e.squared_gain_se,
                e.bound_scale,
            ]
            .iter()
            .map(|v| fmt(*v)),
        );
        row.extend(e.centering.iter().map(|v| fmt(*v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_lines_are_key_value() {
        let mut s = SummaryWriter::new();
        s.text("command", "rate").int("replicates", 400u32).real("slope", -0.25);
        assert_eq!(
            s.finish(),
            "command = \"rate\"\nreplicates = 400\nslope = -2.5000000000000000e-1\n"
        );
    }
}
