//! Simulation of finite-range Gibbs point processes and kernel-based,
//! edge-corrected recovery of their pair potential.
//!
//! ```
//! use pairpot::{estimators, sampler, Kernel, Model, Window};
//!
//! let window = Window::new(2, 12.0).unwrap();
//! let model = Model::strauss(0.5, 1.0, 0.5).unwrap();
//! let cfg = sampler::ChainConfig::for_model(&model, &window, 1);
//! let x = sampler::run_birth_death(&model, &window, &cfg).unwrap();
//!
//! let grid = estimators::linear_grid(0.3, 0.9, 7);
//! let settings = estimators::EstimatorSettings::new(1.0, Kernel::epanechnikov(), 0.25, grid);
//! let input = estimators::EstimatorInput::new(&x, settings).unwrap();
//! let report = estimators::estimate_phi(&input).unwrap();
//! assert_eq!(report.rows.len(), 7);
//! ```

pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod models;
pub mod parallel;
pub mod sampler;
pub mod spatial;
pub mod theory;

pub use error::{Error, Result};
pub use kernels::{BandwidthSchedule, Kernel, KernelKind};
pub use models::{Interaction, Model};
pub use spatial::{Boundary, Point, PointPattern, Window};
