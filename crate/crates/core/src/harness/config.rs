//! TOML configuration. Every section is optional at parse time; each
//! command demands the sections it uses. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::DEFAULT_SPHERE_NODES;
use crate::kernels::{BandwidthSchedule, Kernel, KernelKind};
use crate::models::{Interaction, Model};
use crate::spatial::Boundary;

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<ModelSection>,
    pub window: Option<WindowSection>,
    pub kernel: Option<KernelSection>,
    pub bandwidth: Option<BandwidthSection>,
    pub experiment: Option<ExperimentSection>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    pub beta: f64,
    pub range: Option<f64>,
    pub phi: Option<f64>,
    pub breaks: Option<Vec<f64>>,
    pub phis: Option<Vec<f64>>,
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub sides: Vec<f64>,
    pub boundary: Option<String>,
}

fn default_dim() -> usize {
    2
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub kind: String,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSection {
    pub constant: Option<f64>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    /// Explicit bandwidths, each run at every side.
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub mode: Option<String>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub r_probes: Option<Vec<f64>>,
    pub r_band: Option<[f64; 2]>,
    pub r_points: Option<usize>,
    pub chains: Option<usize>,
    pub burn_in_factor: Option<f64>,
    pub steps_factor: Option<f64>,
    pub sphere_nodes: Option<usize>,
    pub region_grid_res: Option<usize>,
    pub target_file: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn model(&self) -> Result<Model> {
        self.model.as_ref().ok_or_else(|| Error::config("missing [model] section"))?.to_model()
    }
}

fn forbid(kind: &str, present: &[(&str, bool)]) -> Result<()> {
    match present.iter().find(|(_, on)| *on) {
        Some((key, _)) => Err(Error::config(format!("model.{key} is not a parameter of the {kind} model"))),
        None => Ok(()),
    }
}

fn need<T: Copy>(v: Option<T>, key: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(format!("the {kind} model requires model.{key}")))
}

impl ModelSection {
    pub fn to_model(&self) -> Result<Model> {
        let kind = self.kind.as_str();
        let phi = self.phi.is_some();
        let pw = self.breaks.is_some() || self.phis.is_some();
        let theta = self.theta.is_some();
        let range = |s: &Self| need(s.range, "range", kind);
        let interaction = match kind {
            "poisson" => {
                forbid(kind, &[("phi", phi), ("breaks", pw), ("theta", theta)])?;
                Interaction::Poisson
            }
            "strauss" | "triplets" => {
                forbid(kind, &[("breaks", pw), ("theta", theta)])?;
                let phi = need(self.phi, "phi", kind)?;
                if kind == "strauss" {
                    Interaction::Strauss { phi }
                } else {
                    Interaction::Triplets { phi }
                }
            }
            "piecewise_strauss" => {
                forbid(kind, &[("phi", phi), ("theta", theta)])?;
                let breaks = self.breaks.clone().ok_or_else(|| Error::config("piecewise_strauss requires model.breaks"))?;
                let phis = self.phis.clone().ok_or_else(|| Error::config("piecewise_strauss requires model.phis"))?;
                let r = *breaks.last().ok_or_else(|| Error::config("model.breaks is empty"))?;
                if let Some(given) = self.range {
                    if (given - r).abs() > 1e-12 * r {
                        return Err(Error::config("model.range must equal the last break"));
                    }
                }
                return Model::new(self.beta, r, Interaction::PiecewiseStrauss { breaks, phis })
                    .map_err(|e| Error::config(e.to_string()));
            }
            "lennard_jones" => {
                forbid(kind, &[("phi", phi), ("breaks", pw)])?;
                Interaction::LennardJones { theta: need(self.theta, "theta", kind)? }
            }
            other => return Err(Error::config(format!("unknown model kind {other:?}"))),
        };
        Model::new(self.beta, range(self)?, interaction).map_err(|e| Error::config(e.to_string()))
    }
}

pub fn parse_boundary(s: &str) -> Result<Boundary> {
    match s {
        "free" => Ok(Boundary::Free),
        "torus" => Ok(Boundary::Torus),
        other => Err(Error::config(format!("unknown boundary {other:?} (expected free or torus)"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Consistency,
    Recovery,
    Validate,
    Pilot,
}

impl Mode {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "consistency" => Ok(Mode::Consistency),
            "recovery" => Ok(Mode::Recovery),
            "validate" => Ok(Mode::Validate),
            "pilot" => Ok(Mode::Pilot),
            other => Err(Error::config(format!("unknown experiment mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Bandwidths {
    Schedule(BandwidthSchedule),
    Values(Vec<f64>),
}

impl Bandwidths {
    pub fn at(&self, side: f64) -> Vec<f64> {
        match self {
            Bandwidths::Schedule(s) => vec![s.at(side)],
            Bandwidths::Values(v) => v.clone(),
        }
    }
}

/// A validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub model: Model,
    pub dim: usize,
    pub sides: Vec<f64>,
    pub boundary: Boundary,
    pub kernel: Kernel,
    pub bandwidths: Bandwidths,
    pub replicates: usize,
    pub seed: u64,
    pub r_probes: Vec<f64>,
    pub r_band: (f64, f64),
    pub r_points: usize,
    pub chains: usize,
    pub burn_in_factor: f64,
    pub steps_factor: f64,
    pub sphere_nodes: usize,
    pub region_grid_res: usize,
    pub target_file: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let model = file.model()?;
        let range = model.range();
        let win = file.window.as_ref().ok_or_else(|| Error::config("missing [window] section"))?;
        let exp = file.experiment.clone().unwrap_or_default();
        let mode = Mode::parse(exp.mode.as_deref().unwrap_or("consistency"))?;
        if !(1..=3).contains(&win.dim) {
            return Err(Error::config(format!("window.dim must be 1, 2 or 3, got {}", win.dim)));
        }
        if win.sides.is_empty() {
            return Err(Error::config("window.sides must list at least one side"));
        }
        if win.sides.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("window.sides must be strictly increasing"));
        }
        if let Some(&l) = win.sides.iter().find(|&&l| !(l > 4.0 * range)) {
            return Err(Error::config(format!(
                "window side {l} leaves an empty 2R-eroded window (needs side > 4R = {})",
                4.0 * range
            )));
        }
        let boundary = parse_boundary(win.boundary.as_deref().unwrap_or("free"))?;
        let kernel = match &file.kernel {
            Some(k) => Kernel::new(k.kind.parse::<KernelKind>()?),
            None => Kernel::default(),
        };
        let bw = file.bandwidth.clone().unwrap_or_default();
        let bandwidths = match (&bw.values, bw.constant, bw.q1, bw.q2) {
            (Some(_), Some(_), _, _) | (Some(_), _, Some(_), _) | (Some(_), _, _, Some(_)) => {
                return Err(Error::config("bandwidth.values excludes constant/q1/q2"))
            }
            (Some(v), ..) => {
                if v.is_empty() || v.iter().any(|&b| !(b > 0.0 && b <= range)) {
                    return Err(Error::config("bandwidth.values must be nonempty and lie in (0, R]"));
                }
                Bandwidths::Values(v.clone())
            }
            (None, None, None, None) => {
                Bandwidths::Schedule(BandwidthSchedule::default_rule(&kernel, win.dim, range, win.sides[0]))
            }
            (None, c, q1, q2) => {
                let s = BandwidthSchedule {
                    constant: c.ok_or_else(|| Error::config("bandwidth.q1/q2 need bandwidth.constant"))?,
                    q1: q1.unwrap_or(0.0),
                    q2: q2.unwrap_or(0.0),
                };
                s.check_ladder(&win.sides, range, win.dim)?;
                Bandwidths::Schedule(s)
            }
        };
        let replicates = exp.replicates.unwrap_or(match mode {
            Mode::Recovery => 1,
            _ => 100,
        });
        if replicates == 0 {
            return Err(Error::config("experiment.replicates must be positive"));
        }
        if matches!(mode, Mode::Consistency | Mode::Pilot) && replicates < 30 {
            return Err(Error::config(format!("variance rungs need at least 30 replicates, got {replicates}")));
        }
        let r_probes = exp.r_probes.clone().unwrap_or_else(|| vec![0.6 * range]);
        if let Some(r) = r_probes.iter().find(|&&r| !(r > 0.0 && r <= range)) {
            return Err(Error::config(format!("probe r = {r} outside (0, R]")));
        }
        let r_band = exp.r_band.map(|b| (b[0], b[1])).unwrap_or((0.3 * range, 0.9 * range));
        if !(r_band.0 > 0.0 && r_band.0 < r_band.1 && r_band.1 <= range) {
            return Err(Error::config("experiment.r_band must satisfy 0 < lo < hi <= R"));
        }
        let factor = |v: Option<f64>, default: f64, key: &str| -> Result<f64> {
            let f = v.unwrap_or(default);
            if f > 0.0 && f.is_finite() {
                Ok(f)
            } else {
                Err(Error::config(format!("experiment.{key} must be positive")))
            }
        };
        let burn_in_factor = factor(exp.burn_in_factor, 10.0, "burn_in_factor")?;
        let steps_factor = factor(exp.steps_factor, 2.0 * burn_in_factor, "steps_factor")?;
        if steps_factor <= burn_in_factor {
            return Err(Error::config("experiment.steps_factor must exceed burn_in_factor"));
        }
        let cfg = ExperimentConfig {
            mode,
            model,
            dim: win.dim,
            sides: win.sides.clone(),
            boundary,
            kernel,
            bandwidths,
            replicates,
            seed: exp.seed.unwrap_or(0),
            r_probes,
            r_band,
            r_points: exp.r_points.unwrap_or(25).max(1),
            chains: exp.chains.unwrap_or(200),
            burn_in_factor,
            steps_factor,
            sphere_nodes: exp.sphere_nodes.unwrap_or(DEFAULT_SPHERE_NODES),
            region_grid_res: exp.region_grid_res.unwrap_or(if win.dim == 3 { 48 } else { 128 }),
            target_file: exp.target_file.clone(),
            output_dir: exp.output_dir.clone(),
        };
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_file(&ConfigFile::parse(text)?)
    }

    pub fn largest_side(&self) -> f64 {
        *self.sides.last().expect("sides validated nonempty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
kind = "strauss"
beta = 0.5
range = 1.0
phi = 0.5

[window]
dim = 2
sides = [15.0, 20.0]
boundary = "torus"

[kernel]
kind = "epanechnikov"

[bandwidth]
constant = 0.15

[experiment]
mode = "consistency"
replicates = 40
seed = 7
"#;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(cfg.model, Model::strauss(0.5, 1.0, 0.5).unwrap());
        assert_eq!(cfg.boundary, Boundary::Torus);
        assert_eq!(cfg.bandwidths.at(20.0), vec![0.15]);
        assert_eq!(cfg.r_probes, vec![0.6]);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = BASE.replace("phi = 0.5", "phi = 0.5\ncolour = 3");
        assert!(matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))));
        let text = format!("{BASE}\n[extras]\na = 1\n");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn degenerate_rung_is_rejected() {
        let text = BASE.replace("sides = [15.0, 20.0]", "sides = [4.0, 20.0]");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("2R-eroded")), "{err}");
    }

    #[test]
    fn too_few_replicates() {
        let text = BASE.replace("replicates = 40", "replicates = 10");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn model_kinds() {
        let m = |s: &str| ConfigFile::parse(s).unwrap().model();
        assert!(m("[model]\nkind = \"poisson\"\nbeta = 1.0\nrange = 1.0\n").unwrap().is_poisson());
        assert!(m("[model]\nkind = \"poisson\"\nbeta = 1.0\nrange = 1.0\nphi = 0.5\n").is_err());
        let pw = m("[model]\nkind = \"piecewise_strauss\"\nbeta = 1.0\nbreaks = [0.0, 0.5, 1.0]\nphis = [0.3, 0.8]\n").unwrap();
        assert_eq!(pw.range(), 1.0);
        assert!(m("[model]\nkind = \"lennard_jones\"\nbeta = 1.0\nrange = 1.0\ntheta = 0.6\n").is_ok());
        assert!(m("[model]\nkind = \"lennard_jones\"\nbeta = 1.0\nrange = 1.0\n").is_err());
        assert!(m("[model]\nkind = \"gauss\"\nbeta = 1.0\nrange = 1.0\n").is_err());
    }

    #[test]
    fn bandwidth_forms() {
        let text = BASE.replace("constant = 0.15", "values = [0.3, 0.15]");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.bandwidths.at(15.0), vec![0.3, 0.15]);
        let text = BASE.replace("[bandwidth]\nconstant = 0.15", "");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert!((cfg.bandwidths.at(15.0)[0] - 0.25).abs() < 1e-12);
        let text = BASE.replace("constant = 0.15", "constant = 0.15\nvalues = [0.1]");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = BASE.replace("constant = 0.15", "constant = 2.0");
        assert!(ExperimentConfig::parse(&text).is_err());
    }
}
