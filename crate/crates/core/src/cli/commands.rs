use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::csv::fmt;
use crate::error::{Error, Result};
use crate::linalg::operator_norm;
use crate::local::{
    covariance_approx_error, local_covariance_quadrature, local_covariance_yw, spectrum, CovarianceCheck,
};
use crate::nlms::{bias_corrected_estimate, error_decomposition, estimate_index, nlms_run};
use crate::risk::{
    centered_risk, compare_estimators, deterministic_bias_oracle, monte_carlo_msem, msem_expansion_check,
    rate_fit_report, write_centered_csv, write_expansion_csv, SummaryWriter,
};
use crate::tvar::{check_stability_class, stability_ball_radii, lipschitz_seminorm, simulate, TVARPath};

use super::config::{Command, RunConfig};
use super::plots::{script, PlotSpec};

/// Files written by a run and its key-value summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: SummaryWriter,
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
    plots: Vec<PlotSpec>,
}

impl<'a> Artifacts<'a> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn plot(&mut self, spec: PlotSpec) {
        self.plots.push(spec);
    }
}

fn require<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::validation(format!("{what} is required")))
}

fn simulate_path(cfg: &RunConfig) -> Result<TVARPath> {
    let n = require(cfg.run.n, "run.n")?;
    simulate(&cfg.curve, n, &cfg.innovations, cfg.seed, &cfg.run.init)
}

fn path_artifacts(out: &mut Artifacts, path: &TVARPath) -> Result<()> {
    out.write("path.csv", |w| path.write_csv(w))?;
    out.plot(PlotSpec {
        csv: "path.csv",
        x: "k",
        y_prefixes: &["x"],
        group_by: None,
        log_x: false,
        log_y: false,
        title: "simulated path",
    });
    Ok(())
}

fn run_simulate(cfg: &RunConfig, out: &mut Artifacts, s: &mut SummaryWriter) -> Result<()> {
    let path = simulate_path(cfg)?;
    path_artifacts(out, &path)?;
    let max_abs = path.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    s.int("n", path.n as i128).real("max_abs_x", max_abs);
    Ok(())
}

fn run_estimate(cfg: &RunConfig, out: &mut Artifacts, s: &mut SummaryWriter) -> Result<()> {
    let path = simulate_path(cfg)?;
    let mu = require(cfg.run.mu_rule, "step size")?.mu(path.n);
    let traj = nlms_run(&path, mu)?;
    out.write("trajectory.csv", |w| traj.write_csv(w))?;
    out.plot(PlotSpec {
        csv: "trajectory.csv",
        x: "k",
        y_prefixes: &["theta_hat_"],
        group_by: None,
        log_x: false,
        log_y: false,
        title: "NLMS estimates",
    });
    let d = cfg.curve.d;
    let mut rows = Vec::new();
    for &t in &cfg.run.t_points {
        let k = estimate_index(t, path.n)?;
        let truth = cfg.curve.theta_at(t)?;
        let hat = traj.estimate(k).to_vec();
        let tilde = match cfg.run.gamma {
            Some(g) => Some(bias_corrected_estimate(&path, mu, g, t)?),
            None => None,
        };
        rows.push((t, k, truth, hat, tilde));
    }
    out.write("estimates.csv", |w| {
        let mut header = vec!["t".to_string(), "k".into()];
        header.extend((1..=d).map(|i| format!("theta_{i}")));
        header.extend((1..=d).map(|i| format!("theta_hat_{i}")));
        if cfg.run.gamma.is_some() {
            header.extend((1..=d).map(|i| format!("theta_tilde_{i}")));
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, k, truth, hat, tilde) in &rows {
            let mut row = vec![fmt(*t), k.to_string()];
            row.extend(truth.iter().chain(hat).map(|v| fmt(*v)));
            if let Some(tilde) = tilde {
                row.extend(tilde.iter().map(|v| fmt(*v)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    s.int("n", path.n as i128).real("mu", mu);
    for (i, (t, k, truth, hat, tilde)) in rows.iter().enumerate() {
        s.real(&format!("point.{i}.t"), *t).int(&format!("point.{i}.k"), *k as i128);
        let err = |v: &[f64]| v.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        s.real(&format!("point.{i}.nlms_error"), err(hat));
        if let Some(tilde) = tilde {
            s.real(&format!("point.{i}.romberg_error"), err(tilde));
        }
    }
    Ok(())
}

fn run_decompose(cfg: &RunConfig, out: &mut Artifacts, s: &mut SummaryWriter) -> Result<()> {
    let path = simulate_path(cfg)?;
    let mu = require(cfg.run.mu_rule, "step size")?.mu(path.n);
    let dec = error_decomposition(&path, mu, &cfg.curve)?;
    path_artifacts(out, &path)?;
    out.write("decomposition.csv", |w| dec.write_csv(w))?;
    out.plot(PlotSpec {
        csv: "decomposition.csv",
        x: "k",
        y_prefixes: &["u_", "v_", "w_"],
        group_by: None,
        log_x: false,
        log_y: false,
        title: "error decomposition",
    });
    s.int("n", path.n as i128)
        .real("mu", mu)
        .real("identity_error", dec.identity_error());
    Ok(())
}

fn run_covariance(cfg: &RunConfig, out: &mut Artifacts, s: &mut SummaryWriter) -> Result<()> {
    let r = &cfg.run;
    let curve = &cfg.curve;
    let report = check_stability_class(curve, curve.declared_rho, r.grid_size)?;
    let (inner, outer) = stability_ball_radii(curve.declared_rho, curve.d);
    s.real("declared_rho", curve.declared_rho)
        .real("worst_radius", report.worst_radius)
        .real("worst_t", report.worst_t)
        .text("member", report.member)
        .real("ball_inner_radius", inner)
        .real("ball_outer_radius", outer)
        .real("sup_norm", curve.sup_norm(r.grid_size)?);
    if curve.declared_beta <= 1.0 {
        s.real("lipschitz_seminorm", lipschitz_seminorm(curve, curve.declared_beta, r.grid_size)?);
    }

    let mut cov_rows = Vec::new();
    let mut spec_rows = Vec::new();
    for (i, &t) in r.t_points.iter().enumerate() {
        let (theta, sigma) = curve.eval(t)?;
        let yw = local_covariance_yw(&theta, sigma)?;
        let quad = local_covariance_quadrature(&theta, sigma, r.node_count)?;
        let gap = operator_norm(&(&yw.matrix - &quad.matrix));
        s.real(&format!("point.{i}.t"), t).real(&format!("point.{i}.method_gap"), gap);
        for row in 0..curve.d {
            for col in 0..curve.d {
                cov_rows.push((t, row, col, yw.matrix[(row, col)], quad.matrix[(row, col)]));
            }
        }
        for sample in spectrum(&theta, sigma, r.spectrum_points)? {
            spec_rows.push((t, sample.lambda, sample.value));
        }
    }
    out.write("covariance.csv", |w| {
        writeln!(w, "t,row,col,yule_walker,quadrature")?;
        for (t, row, col, a, b) in &cov_rows {
            writeln!(w, "{},{row},{col},{},{}", fmt(*t), fmt(*a), fmt(*b))?;
        }
        Ok(())
    })?;
    out.write("spectrum.csv", |w| {
        writeln!(w, "t,lambda,density")?;
        for (t, l, v) in &spec_rows {
            writeln!(w, "{},{},{}", fmt(*t), fmt(*l), fmt(*v))?;
        }
        Ok(())
    })?;
    out.plot(PlotSpec {
        csv: "spectrum.csv",
        x: "lambda",
        y_prefixes: &["density"],
        group_by: Some("t"),
        log_x: false,
        log_y: true,
        title: "local spectral density",
    });

    if !r.k_list.is_empty() {
        let check = CovarianceCheck {
            curve: curve.clone(),
            spec: cfg.innovations,
            n: require(r.n, "run.n")?,
            k_list: r.k_list.clone(),
            replicates: r.replicates,
            seed: cfg.seed,
            init: r.init.clone(),
            estimator: r.covariance_estimator,
        };
        let points = covariance_approx_error(&check, cfg.workers)?;
        out.write("covariance_approx.csv", |w| {
            writeln!(w, "k,n,deviation,standard_error,init_error,geometric_term,drift_term")?;
            for p in &points {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    p.k,
                    p.n,
                    fmt(p.deviation),
                    fmt(p.standard_error),
                    fmt(p.init_error),
                    fmt(p.geometric_term),
                    fmt(p.drift_term)
                )?;
            }
            Ok(())
        })?;
        out.plot(PlotSpec {
            csv: "covariance_approx.csv",
            x: "k",
            y_prefixes: &["deviation", "standard_error"],
            group_by: None,
            log_x: true,
            log_y: true,
            title: "local covariance approximation",
        });
        for (i, p) in points.iter().enumerate() {
            s.int(&format!("approx.{i}.k"), p.k as i128)
                .real(&format!("approx.{i}.deviation"), p.deviation)
                .real(&format!("approx.{i}.standard_error"), p.standard_error);
        }
    }
    Ok(())
}

fn risk_plot() -> PlotSpec {
    PlotSpec {
        csv: "risk.csv",
        x: "n",
        y_prefixes: &["l2_risk"],
        group_by: Some("t"),
        log_x: true,
        log_y: true,
        title: "L2 risk",
    }
}

fn run_risk(cfg: &RunConfig, out: &mut Artifacts, s: &mut SummaryWriter, fit: bool) -> Result<()> {
    let scenario = cfg.scenario();
    let report = monte_carlo_msem(&scenario, cfg.workers)?;
    out.write("risk.csv", |w| report.write_csv(w))?;
    out.plot(risk_plot());
    s.text("estimator", scenario.estimator.name())
        .int("replicates", scenario.replicates as i128);
    for (i, e) in report.entries.iter().enumerate() {
        s.int(&format!("entry.{i}.n"), e.n as i128)
            .real(&format!("entry.{i}.t"), e.t)
            .real(&format!("entry.{i}.mu"), e.mu)
            .real(&format!("entry.{i}.l2_risk"), e.l2_risk)
            .real(&format!("entry.{i}.l2_se"), e.l2_se)
            .real(&format!("entry.{i}.msem_trace"), e.msem_trace())
            .real(&format!("entry.{i}.decomposition_error"), e.decomposition_error());
    }
    if fit {
        let mut fits = Vec::new();
        for &t in &scenario.t_points {
            fits.push((t, rate_fit_report(&report, t)?));
        }
        out.write("rate.csv", |w| {
            writeln!(w, "t,log_n,log_risk,fitted")?;
            for (t, f) in &fits {
                for &(x, y) in &f.points {
                    writeln!(w, "{},{},{},{}", fmt(*t), fmt(x), fmt(y), fmt(f.intercept + f.slope * x))?;
                }
            }
            Ok(())
        })?;
        out.plot(PlotSpec {
            csv: "rate.csv",
            x: "log_n",
            y_prefixes: &["log_risk", "fitted"],
            group_by: Some("t"),
            log_x: false,
            log_y: false,
            title: "rate fit",
        });
        for (i, (t, f)) in fits.iter().enumerate() {
            s.real(&format!("rate.{i}.t"), *t).rate_fit(&format!("rate.{i}"), f);
        }
    }
    Ok(())
}

fn run_expansion(cfg: &RunConfig, out: &mut Artifacts, s: &mut SummaryWriter) -> Result<()> {
    let scenario = cfg.scenario();
    let settings = cfg
        .run
        .expansion
        .clone()
        .ok_or_else(|| Error::validation("expansion settings are required"))?;
    let entries = msem_expansion_check(&scenario, &settings, cfg.workers)?;
    out.write("expansion.csv", |w| write_expansion_csv(w, &entries))?;
    out.plot(PlotSpec {
        csv: "expansion.csv",
        x: "n",
        y_prefixes: &["bias_residual", "cov_residual", "remainder_scale"],
        group_by: Some("t"),
        log_x: true,
        log_y: true,
        title: "expansion residuals",
    });
    let mut oracle_rows = Vec::new();
    for e in &entries {
        let oracle = deterministic_bias_oracle(&cfg.curve, e.mu, e.n, e.t)?;
        oracle_rows.push((e.n, e.t, e.mu, oracle, e.predicted_bias.clone()));
    }
    let d = cfg.curve.d;
    out.write("oracle.csv", |w| {
        let mut header = vec!["n".to_string(), "t".into(), "mu".into()];
        header.extend((1..=d).map(|i| format!("oracle_{i}")));
        header.extend((1..=d).map(|i| format!("predicted_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (n, t, mu, oracle, predicted) in &oracle_rows {
            let mut row = vec![n.to_string(), fmt(*t), fmt(*mu)];
            row.extend(oracle.iter().chain(predicted).map(|v| fmt(*v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    s.real("beta", settings.beta);
    for (i, e) in entries.iter().enumerate() {
        s.int(&format!("entry.{i}.n"), e.n as i128)
            .real(&format!("entry.{i}.t"), e.t)
            .real(&format!("entry.{i}.bias_residual"), e.bias_residual)
            .real(&format!("entry.{i}.cov_residual"), e.cov_residual)
            .real(&format!("entry.{i}.centered_msem_residual"), e.centered_msem_residual)
            .real(&format!("entry.{i}.remainder_scale"), e.remainder_scale());
    }
    // The centered comparison needs a closed-form derivative.
    if cfg.run.t_points.iter().all(|&t| cfg.curve.derivative(t).is_ok()) {
        let centered = centered_risk(&scenario, cfg.workers)?;
        out.write("centered.csv", |w| write_centered_csv(w, &centered))?;
        for (i, c) in centered.iter().enumerate() {
            s.real(&format!("centered.{i}.centered_l2"), c.centered.l2_risk)
                .real(&format!("centered.{i}.uncentered_l2"), c.uncentered.l2_risk)
                .real(&format!("centered.{i}.squared_gain"), c.squared_gain)
                .real(&format!("centered.{i}.squared_gain_se"), c.squared_gain_se);
        }
    }
    Ok(())
}

fn run_compare(cfg: &RunConfig, out: &mut Artifacts, s: &mut SummaryWriter) -> Result<()> {
    let scenario = cfg.scenario();
    let report = compare_estimators(&scenario, cfg.workers)?;
    out.write("compare.csv", |w| report.write_csv(w))?;
    out.plot(PlotSpec {
        csv: "compare.csv",
        x: "n",
        y_prefixes: &["nlms_l2_risk", "romberg_l2_risk"],
        group_by: Some("t"),
        log_x: true,
        log_y: true,
        title: "NLMS vs Romberg",
    });
    s.real("gamma", report.gamma)
        .int("replicates", scenario.replicates as i128);
    for (i, e) in report.entries.iter().enumerate() {
        s.int(&format!("entry.{i}.n"), e.n as i128)
            .real(&format!("entry.{i}.t"), e.t)
            .real(&format!("entry.{i}.nlms_l2"), e.nlms.l2_risk)
            .real(&format!("entry.{i}.romberg_l2"), e.romberg.l2_risk)
            .real(&format!("entry.{i}.l2_ratio"), e.l2_ratio)
            .real(&format!("entry.{i}.l2_ratio_se"), e.l2_ratio_se);
    }
    Ok(())
}

/// Executes the configured command and writes the manifest, result CSVs, the
/// summary and (optionally) plot scripts into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    let mut out = Artifacts {
        dir: &cfg.output_dir,
        files: Vec::new(),
        plots: Vec::new(),
    };
    out.write("manifest.toml", |w| w.write_all(cfg.manifest().as_bytes()))?;

    let mut summary = SummaryWriter::new();
    summary
        .text("command", cfg.command.name())
        .int("seed", cfg.seed)
        .text("curve", &cfg.curve.id)
        .int("d", cfg.curve.d as i128);
    match cfg.command {
        Command::Simulate => run_simulate(cfg, &mut out, &mut summary)?,
        Command::Estimate => run_estimate(cfg, &mut out, &mut summary)?,
        Command::Decompose => run_decompose(cfg, &mut out, &mut summary)?,
        Command::Covariance => run_covariance(cfg, &mut out, &mut summary)?,
        Command::Risk => run_risk(cfg, &mut out, &mut summary, false)?,
        Command::Rate => run_risk(cfg, &mut out, &mut summary, true)?,
        Command::ExpansionCheck => run_expansion(cfg, &mut out, &mut summary)?,
        Command::Compare => run_compare(cfg, &mut out, &mut summary)?,
    }
    out.write("summary.txt", |w| w.write_all(summary.finish().as_bytes()))?;
    if cfg.emit_plots {
        let plots = std::mem::take(&mut out.plots);
        for spec in &plots {
            let name = format!("plot_{}.py", spec.csv.trim_end_matches(".csv"));
            out.write(&name, |w| w.write_all(script(spec).as_bytes()))?;
        }
    }
    Ok(RunOutcome {
        files: out.files,
        summary,
    })
}
