//! CSV output of experiment results and the mode dispatcher.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Mode};
use crate::harness::experiment::{
    run_consistency_experiment, run_pilot, run_recovery_demo, validate_sampler, ConvergenceReport, RecoveryReport,
};
use crate::io::fmt_value;
use crate::sampler::GnzReport;

fn writer(out: impl Write) -> csv::Writer<impl Write> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_value).unwrap_or_default()
}

pub fn write_convergence(report: &ConvergenceReport, out: impl Write) -> Result<()> {
    let mut w = writer(out);
    w.write_record([
        "side", "bandwidth", "r", "replicates", "mean", "target", "smoothed_target", "bias", "variance", "stderr",
        "scaled_variance", "variance_limit", "mse",
    ])?;
    for s in &report.rungs {
        w.write_record([
            fmt_value(s.side),
            fmt_value(s.bandwidth),
            fmt_value(s.r),
            s.replicates.to_string(),
            fmt_value(s.mean),
            fmt_value(s.target),
            opt(s.smoothed_target),
            fmt_value(s.bias),
            fmt_value(s.variance),
            fmt_value(s.stderr),
            fmt_value(s.scaled_variance),
            opt(s.variance_limit),
            fmt_value(s.mse),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slopes(report: &ConvergenceReport, out: impl Write) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["fit", "r", "group", "points", "slope"])?;
    let fits = report.bias_slopes.iter().map(|f| ("bias_vs_bandwidth", f));
    let fits = fits.chain(report.variance_slopes.iter().map(|f| ("variance_vs_volume", f)));
    for (name, f) in fits {
        w.write_record([name.to_string(), fmt_value(f.r), fmt_value(f.group), f.points.to_string(), fmt_value(f.slope)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_recovery(report: &RecoveryReport, out: impl Write) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["r", "gamma_true", "gamma_hat_median"])?;
    for ((r, g), m) in report.r_grid.iter().zip(&report.gamma_true).zip(&report.gamma_median) {
        w.write_record([fmt_value(*r), fmt_value(*g), fmt_value(*m)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_recovery_summary(report: &RecoveryReport, out: impl Write) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["replicate", "band_median", "sup_discrepancy", "positivity_violations"])?;
    for (k, rep) in report.replicates.iter().enumerate() {
        w.write_record([
            k.to_string(),
            fmt_value(report.band_medians[k]),
            fmt_value(report.sup_discrepancy[k]),
            rep.positivity_violations().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gnz(reports: &[GnzReport], out: impl Write) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["order", "chains", "lhs", "rhs", "mc_stderr", "z_score"])?;
    for g in reports {
        w.write_record([
            g.order.to_string(),
            g.chains.to_string(),
            fmt_value(g.lhs),
            fmt_value(g.rhs),
            fmt_value(g.mc_stderr),
            fmt_value(g.z_score),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_targets(cfg: &ExperimentConfig, targets: &[(f64, f64)], mut out: impl Write) -> Result<()> {
    let side = cfg.largest_side();
    let b = cfg.bandwidths.at(side).into_iter().fold(f64::INFINITY, f64::min);
    writeln!(
        out,
        "# pilot mean of R_hat: model={:?} dim={} side={} bandwidth={} kernel={} replicates={} seed={}",
        cfg.model.interaction(),
        cfg.dim,
        side,
        b,
        cfg.kernel.kind(),
        crate::harness::experiment::PILOT_FACTOR * cfg.replicates,
        cfg.seed
    )?;
    let mut w = writer(out);
    w.write_record(["r", "target"])?;
    for &(r, t) in targets {
        w.write_record([fmt_value(r), fmt_value(t)])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of one configured experiment.
#[derive(Clone, Debug)]
pub enum ExperimentOutput {
    Consistency(ConvergenceReport),
    Recovery(RecoveryReport),
    Validate(Vec<GnzReport>),
    Pilot(Vec<(f64, f64)>),
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path: PathBuf = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Resource(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Runs the configured mode and, when `output_dir` is set, writes its CSV
/// files there. Returns the written paths alongside the result.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, Vec<PathBuf>)> {
    let output = match cfg.mode {
        Mode::Consistency => ExperimentOutput::Consistency(run_consistency_experiment(cfg)?),
        Mode::Recovery => ExperimentOutput::Recovery(run_recovery_demo(cfg)?),
        Mode::Validate => ExperimentOutput::Validate(validate_sampler(cfg)?),
        Mode::Pilot => ExperimentOutput::Pilot(run_pilot(cfg)?),
    };
    let Some(dir) = &cfg.output_dir else {
        return Ok((output, Vec::new()));
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::Resource(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        let mut out = create(dir, name)?;
        f(&mut out)?;
        out.flush()?;
        written.push(dir.join(name));
        Ok(())
    };
    match &output {
        ExperimentOutput::Consistency(r) => {
            emit("convergence.csv", &|w| write_convergence(r, w))?;
            emit("slopes.csv", &|w| write_slopes(r, w))?;
        }
        ExperimentOutput::Recovery(r) => {
            emit("recovery.csv", &|w| write_recovery(r, w))?;
            emit("recovery_replicates.csv", &|w| write_recovery_summary(r, w))?;
        }
        ExperimentOutput::Validate(g) => emit("gnz.csv", &|w| write_gnz(g, w))?,
        ExperimentOutput::Pilot(t) => emit("targets.csv", &|w| write_targets(cfg, t, w))?,
    }
    Ok((output, written))
}
