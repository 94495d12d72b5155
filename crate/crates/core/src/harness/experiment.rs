//! Replicated experiments: consistency of the kernel estimator across a
//! window ladder, recovery of the pair potential, and sampler validation.
//!
//! Replicate `k` at rung `i` always draws from stream `(i << 40) | k` of
//! the configured seed, so every bandwidth at a rung sees the same patterns
//! and results do not depend on the thread count.

use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{linear_grid, EstimateReport, EstimatorInput, EstimatorSettings, PairTable};
use crate::harness::config::{Bandwidths, ExperimentConfig};
use crate::parallel;
use crate::sampler::{
    chain_rng, gnz_pair_residual, gnz_residual, run_chain, sample_poisson_with, ChainConfig, GnzReport, Initial,
    SubBox, TestFunction,
};
use crate::spatial::{PointPattern, Window};
use crate::theory;

pub const PILOT_FACTOR: usize = 10;

fn stream(rung: usize, replicate: usize) -> u64 {
    ((rung as u64) << 40) | replicate as u64
}

/// Chain settings scaled by the expected point count `β|W|`.
pub fn chain_config(cfg: &ExperimentConfig, window: &Window) -> ChainConfig {
    let scale = cfg.model.beta() * window.volume();
    let burn_in = (cfg.burn_in_factor * scale).ceil().max(1.0) as u64;
    let steps = ((cfg.steps_factor * scale).ceil() as u64).max(burn_in + 1);
    ChainConfig { steps, burn_in, seed: cfg.seed, initial: Initial::Poisson, boundary: cfg.boundary }
}

/// One realization of the configured model. Poisson models are drawn
/// exactly; everything else runs the birth–death chain.
pub fn simulate_replicate(cfg: &ExperimentConfig, window: &Window, stream: u64) -> Result<PointPattern> {
    let model = &cfg.model;
    let mut rng = chain_rng(cfg.seed, stream);
    if model.is_poisson() {
        sample_poisson_with(window, model.beta(), model.range(), &mut rng)
    } else {
        let chain = chain_config(cfg, window);
        run_chain(model, window, &chain, &mut rng, |_, _| {})?.to_pattern(model.range())
    }
}

/// Statistics of `R̂(r)` over the replicates of one rung.
#[derive(Clone, Debug, PartialEq)]
pub struct RungStats {
    pub side: f64,
    pub bandwidth: f64,
    pub r: f64,
    pub replicates: usize,
    pub mean: f64,
    pub target: f64,
    /// Exact finite-bandwidth mean, known for Poisson models only.
    pub smoothed_target: Option<f64>,
    pub bias: f64,
    /// Sample variance with divisor `n`.
    pub variance: f64,
    pub stderr: f64,
    /// `b |W⊖2R| Var`.
    pub scaled_variance: f64,
    /// Large-window limit of `scaled_variance`, for Poisson models.
    pub variance_limit: Option<f64>,
    /// `variance + bias²`.
    pub mse: f64,
    pub samples: Vec<f64>,
}

/// Least-squares slope of a log-log relation.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub r: f64,
    /// Side for bias fits, bandwidth index for variance fits.
    pub group: f64,
    pub points: usize,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rungs: Vec<RungStats>,
    /// `log|bias|` against `log b`, at fixed side.
    pub bias_slopes: Vec<SlopeFit>,
    /// `log Var` against `log |W⊖2R|`, at fixed bandwidth index.
    pub variance_slopes: Vec<SlopeFit>,
}

pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Target values `(r, R(r))` from a pilot file: `#` comment lines, a
/// header, then `r,target` rows.
pub fn read_target_file(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read target file {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("r,") {
            continue;
        }
        let bad = || Error::Parse { line: k + 1, msg: format!("expected `r,target`, got {line:?}") };
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        out.push((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?));
    }
    Ok(out)
}

fn targets(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let model = &cfg.model;
    if model.is_poisson() {
        return Ok(cfg
            .r_probes
            .iter()
            .map(|&r| theory::poisson_r_hat_limit(model.beta(), r, model.range(), cfg.dim))
            .collect());
    }
    let path = cfg
        .target_file
        .as_ref()
        .ok_or_else(|| Error::config("non-Poisson consistency runs need experiment.target_file"))?;
    let table = read_target_file(path)?;
    cfg.r_probes
        .iter()
        .map(|&r| {
            table
                .iter()
                .find(|(tr, _)| (tr - r).abs() <= 1e-9 * r.max(1.0))
                .map(|&(_, t)| t)
                .ok_or_else(|| Error::config(format!("target file has no value for r = {r}")))
        })
        .collect()
}

/// `R̂` for every (bandwidth, probe) pair, for every replicate of a rung:
/// `out[k][j * probes + i]`.
fn rung_values(cfg: &ExperimentConfig, rung: usize, side: f64, bandwidths: &[f64]) -> Result<Vec<Vec<f64>>> {
    let window = Window::new(cfg.dim, side)?;
    let range = cfg.model.range();
    parallel::map_range(cfg.replicates, |k| -> Result<Vec<f64>> {
        let x = simulate_replicate(cfg, &window, stream(rung, k))?;
        let table = PairTable::build(&x, range)?;
        Ok(bandwidths
            .iter()
            .flat_map(|&b| cfg.r_probes.iter().map(move |&r| (b, r)))
            .map(|(b, r)| table.r_hat(&cfg.kernel, b, r))
            .collect())
    })
    .into_iter()
    .collect()
}

pub fn run_consistency_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let target = targets(cfg)?;
    let model = &cfg.model;
    let range = model.range();
    let mut rungs = Vec::new();
    for (i, &side) in cfg.sides.iter().enumerate() {
        let eroded = Window::new(cfg.dim, side)?.erode(2.0 * range)?;
        if eroded.is_empty() {
            return Err(Error::config(format!("side {side} leaves an empty 2R-eroded window")));
        }
        let bandwidths = cfg.bandwidths.at(side);
        let values = rung_values(cfg, i, side, &bandwidths)?;
        let n = cfg.replicates as f64;
        for (j, &b) in bandwidths.iter().enumerate() {
            for (p, &r) in cfg.r_probes.iter().enumerate() {
                let samples: Vec<f64> = values.iter().map(|v| v[j * cfg.r_probes.len() + p]).collect();
                let mean = samples.iter().sum::<f64>() / n;
                let variance = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
                let bias = mean - target[p];
                let (smoothed_target, variance_limit) = if model.is_poisson() {
                    let j_r = theory::poisson_j(model.beta(), r, range, cfg.dim);
                    (
                        Some(theory::poisson_r_hat_mean(model.beta(), r, range, cfg.dim, &cfg.kernel, b)),
                        Some(theory::variance_constant(model.beta(), r, cfg.dim, j_r, 1.0, &cfg.kernel)),
                    )
                } else {
                    (None, None)
                };
                rungs.push(RungStats {
                    side,
                    bandwidth: b,
                    r,
                    replicates: cfg.replicates,
                    mean,
                    target: target[p],
                    smoothed_target,
                    bias,
                    variance,
                    stderr: (variance / (n - 1.0)).sqrt(),
                    scaled_variance: b * eroded.volume() * variance,
                    variance_limit,
                    mse: variance + bias * bias,
                    samples,
                });
            }
        }
    }
    let mut bias_slopes = Vec::new();
    let mut variance_slopes = Vec::new();
    for &r in &cfg.r_probes {
        for &side in &cfg.sides {
            let sel: Vec<&RungStats> = rungs.iter().filter(|s| s.r == r && s.side == side).collect();
            if sel.len() >= 2 {
                let bs: Vec<f64> = sel.iter().map(|s| s.bandwidth).collect();
                let ys: Vec<f64> = sel.iter().map(|s| s.bias.abs()).collect();
                bias_slopes.push(SlopeFit { r, group: side, points: sel.len(), slope: log_log_slope(&bs, &ys) });
            }
        }
        if cfg.sides.len() >= 2 {
            let per_side = match &cfg.bandwidths {
                Bandwidths::Values(v) => v.len(),
                Bandwidths::Schedule(_) => 1,
            };
            for j in 0..per_side {
                let sel: Vec<&RungStats> =
                    rungs.iter().filter(|s| s.r == r).skip(j).step_by(per_side).collect();
                let vols: Vec<f64> = sel.iter().map(|s| (s.side - 4.0 * range).powi(cfg.dim as i32)).collect();
                let ys: Vec<f64> = sel.iter().map(|s| s.variance).collect();
                variance_slopes.push(SlopeFit { r, group: j as f64, points: sel.len(), slope: log_log_slope(&vols, &ys) });
            }
        }
    }
    Ok(ConvergenceReport { rungs, bias_slopes, variance_slopes })
}

/// Pilot estimate of `R(r)` for models without a closed form: the mean of
/// `R̂` at the largest side and smallest bandwidth, over ten times the
/// configured replicates.
pub fn run_pilot(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let side = cfg.largest_side();
    let b = cfg.bandwidths.at(side).into_iter().fold(f64::INFINITY, f64::min);
    let pilot = ExperimentConfig { replicates: PILOT_FACTOR * cfg.replicates, ..cfg.clone() };
    let values = rung_values(&pilot, cfg.sides.len() - 1, side, &[b])?;
    let n = values.len() as f64;
    Ok(cfg
        .r_probes
        .iter()
        .enumerate()
        .map(|(p, &r)| (r, values.iter().map(|v| v[p]).sum::<f64>() / n))
        .collect())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| !x.is_nan());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 || v[m - 1] == v[m] {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryReport {
    pub side: f64,
    pub bandwidth: f64,
    pub r_grid: Vec<f64>,
    pub gamma_true: Vec<f64>,
    /// Per-r median of `γ̂` across replicates.
    pub gamma_median: Vec<f64>,
    /// Per-replicate median of `γ̂` over the band.
    pub band_medians: Vec<f64>,
    /// Median of `band_medians`.
    pub band_median: f64,
    /// Per-replicate `sup |γ̂ − γ|` over the band.
    pub sup_discrepancy: Vec<f64>,
    /// False when the model violates the positivity assumption.
    pub repulsive: bool,
    pub replicates: Vec<EstimateReport>,
}

pub fn run_recovery_demo(cfg: &ExperimentConfig) -> Result<RecoveryReport> {
    let model = &cfg.model;
    if !model.is_pairwise() {
        return Err(Error::UnsupportedModel("pair-potential recovery needs a pairwise model".into()));
    }
    let side = cfg.largest_side();
    let window = Window::new(cfg.dim, side)?;
    let bandwidth = cfg.bandwidths.at(side)[0];
    let r_grid = linear_grid(cfg.r_band.0, cfg.r_band.1, cfg.r_points);
    let gamma_true = r_grid.iter().map(|&r| model.pair_potential(r)).collect::<Result<Vec<_>>>()?;
    let mut settings = EstimatorSettings::new(model.range(), cfg.kernel, bandwidth, r_grid.clone());
    settings.sphere_nodes = cfg.sphere_nodes;
    settings.region_grid_res = cfg.region_grid_res;
    settings.validate()?;
    let rung = cfg.sides.len() - 1;
    let replicates = parallel::map_range(cfg.replicates, |k| -> Result<EstimateReport> {
        let x = simulate_replicate(cfg, &window, stream(rung, k))?;
        crate::estimators::estimate_phi(&EstimatorInput::new(&x, settings.clone())?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let band_medians: Vec<f64> = replicates.iter().map(|rep| median(rep.rows.iter().map(|r| r.gamma_hat).collect())).collect();
    let sup_discrepancy = replicates
        .iter()
        .map(|rep| {
            rep.rows
                .iter()
                .zip(&gamma_true)
                .map(|(row, g)| if row.gamma_hat.is_nan() { f64::INFINITY } else { (row.gamma_hat - g).abs() })
                .filter(|d| !d.is_nan())
                .fold(0.0, f64::max)
        })
        .collect();
    let gamma_median =
        (0..r_grid.len()).map(|i| median(replicates.iter().map(|rep| rep.rows[i].gamma_hat).collect())).collect();
    Ok(RecoveryReport {
        side,
        bandwidth,
        r_grid,
        gamma_true,
        gamma_median,
        band_median: median(band_medians.clone()),
        band_medians,
        sup_discrepancy,
        repulsive: model.is_repulsive(),
        replicates,
    })
}

/// Single-point and pair GNZ checks on the smallest configured window,
/// over the cube `[R, L − R]^d`.
pub fn validate_sampler(cfg: &ExperimentConfig) -> Result<Vec<GnzReport>> {
    if cfg.chains == 0 {
        return Err(Error::arg("sampler validation needs at least one chain"));
    }
    let side = cfg.sides[0];
    let range = cfg.model.range();
    let window = Window::new(cfg.dim, side)?;
    let chain = chain_config(cfg, &window);
    let region = SubBox::cube(cfg.dim, range, side - range);
    Ok(vec![
        gnz_residual(&cfg.model, &window, cfg.chains, &chain, TestFunction::Indicator(region))?,
        gnz_pair_residual(&cfg.model, &window, cfg.chains, &chain, region)?,
    ])
}
