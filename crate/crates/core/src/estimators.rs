//! Edge-corrected non-parametric estimators of the interaction function.
//!
//! All sums run over points of the `2R`-eroded window, so every
//! neighborhood they inspect is fully observed. Summation orders are
//! canonical (integer counts, or sorted pair distances) which makes every
//! estimate independent of the order of the input points.

use std::borrow::Cow;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::sampler::sphere_directions;
use crate::spatial::{ErodedRegion, Point, PointPattern, MAX_DIM};
use crate::theory::sphere_measure;

pub const DEFAULT_SPHERE_NODES: usize = 64;

/// Estimator parameters independent of the data.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSettings {
    pub range: f64,
    pub kernel: Kernel,
    pub bandwidth: f64,
    pub r_grid: Vec<f64>,
    pub sphere_nodes: usize,
    pub region_grid_res: usize,
}

impl EstimatorSettings {
    pub fn new(range: f64, kernel: Kernel, bandwidth: f64, r_grid: Vec<f64>) -> Self {
        EstimatorSettings {
            range,
            kernel,
            bandwidth,
            r_grid,
            sphere_nodes: DEFAULT_SPHERE_NODES,
            region_grid_res: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let range = self.range;
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::arg(format!("range must be positive, got {range}")));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth <= range) {
            return Err(Error::arg(format!("bandwidth must lie in (0, R], got {}", self.bandwidth)));
        }
        if let Some(r) = self.r_grid.iter().find(|&&r| !(r > 0.0 && r <= range)) {
            return Err(Error::arg(format!("r-grid value {r} outside (0, {range}]")));
        }
        if self.r_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("r-grid must be strictly increasing"));
        }
        if self.sphere_nodes < 16 {
            return Err(Error::arg(format!("need at least 16 sphere nodes, got {}", self.sphere_nodes)));
        }
        if self.region_grid_res < 32 {
            return Err(Error::arg(format!("region grid resolution must be >= 32, got {}", self.region_grid_res)));
        }
        Ok(())
    }
}

/// Evenly spaced grid of `n` values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// A pattern together with validated estimator settings.
#[derive(Clone, Debug)]
pub struct EstimatorInput<'a> {
    pattern: Cow<'a, PointPattern>,
    settings: EstimatorSettings,
}

impl<'a> EstimatorInput<'a> {
    pub fn new(pattern: &'a PointPattern, settings: EstimatorSettings) -> Result<Self> {
        settings.validate()?;
        let pattern = if pattern.reach() < settings.range {
            Cow::Owned(pattern.with_reach(settings.range))
        } else {
            Cow::Borrowed(pattern)
        };
        Ok(EstimatorInput { pattern, settings })
    }

    pub fn pattern(&self) -> &PointPattern {
        &self.pattern
    }

    pub fn settings(&self) -> &EstimatorSettings {
        &self.settings
    }

    fn eroded(&self, factor: f64) -> Result<ErodedRegion> {
        let e = self.pattern.window().erode(factor * self.settings.range)?;
        if e.is_empty() {
            return Err(Error::degenerate(format!(
                "the {factor}R-eroded window is empty (side {}, R {})",
                self.pattern.window().side(),
                self.settings.range
            )));
        }
        Ok(e)
    }
}

/// `h̃(u, x) = 1(d(u, x) > R)`.
pub fn htilde(u: &Point, x: &PointPattern, range: f64) -> bool {
    x.dist_to(u) > range
}

#[inline]
fn isolated(x: &PointPattern, u: &Point, range: f64, exclude: &[usize]) -> bool {
    let mut any = false;
    x.for_each_within(u, range, |j, _| any |= !exclude.contains(&j));
    !any
}

/// Quadrature nodes on the unit sphere; each node carries weight
/// `σ_d / len`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    dim: usize,
    dirs: Vec<[f64; MAX_DIM]>,
}

impl SphereRule {
    /// `m` equal-angle nodes in 2-d, an `m`-node Fibonacci lattice in 3-d,
    /// the two directions `±1` in 1-d.
    pub fn new(dim: usize, m: usize) -> Self {
        SphereRule { dim, dirs: sphere_directions(dim, m) }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn weight(&self) -> f64 {
        sphere_measure(self.dim) / self.dirs.len() as f64
    }

    /// Number of sphere nodes `u + r·v` that are R-isolated from `x`
    /// (ignoring the indices in `exclude`).
    fn free_nodes(&self, x: &PointPattern, u: &Point, r: f64, range: f64, exclude: &[usize]) -> usize {
        self.dirs.iter().filter(|d| isolated(x, &u.offset(d, r), range, exclude)).count()
    }
}

/// `h*(u, x) = ∫_{S^{d−1}} h̃(u + r v, x) dv` against surface measure.
pub fn hstar(u: &Point, r: f64, x: &PointPattern, range: f64, m: usize) -> f64 {
    let rule = SphereRule::new(x.dim(), m);
    rule.free_nodes(x, u, r, range, &[]) as f64 * rule.weight()
}

/// `β̂ = Σ_{u∈X∩Λ} h̃(u, X∖u) / ∫_Λ h̃(u, X) du` over `Λ = W⊖R`, the
/// denominator by midpoint quadrature.
pub fn estimate_beta(input: &EstimatorInput) -> Result<f64> {
    let x = input.pattern();
    let range = input.settings.range;
    let region = input.eroded(1.0)?;
    let numerator = x
        .points()
        .iter()
        .enumerate()
        .filter(|(i, u)| region.contains(u) && isolated(x, u, range, &[*i]))
        .count();
    let res = input.settings.region_grid_res;
    let dim = x.dim();
    let h = region.side() / res as f64;
    let total = res.pow(dim as u32);
    let mut free = 0usize;
    for mut idx in 0..total {
        let mut c = [0.0; MAX_DIM];
        for v in c.iter_mut().take(dim) {
            *v = region.lo() + ((idx % res) as f64 + 0.5) * h;
            idx /= res;
        }
        if isolated(x, &Point(c), range, &[]) {
            free += 1;
        }
    }
    if free == 0 {
        return Err(Error::degenerate("no R-isolated location in W⊖R; the pattern saturates the region"));
    }
    Ok(numerator as f64 / (free as f64 * h.powi(dim as i32)))
}

/// Ĵ on every r of the grid. Estimates `β J(r)`, with `J` the sphere
/// average of the two-point void probability.
pub fn estimate_j_curve(input: &EstimatorInput, r_grid: &[f64]) -> Result<Vec<f64>> {
    let x = input.pattern();
    let range = input.settings.range;
    let region = input.eroded(2.0)?;
    let rule = SphereRule::new(x.dim(), input.settings.sphere_nodes);
    let mut counts = vec![0usize; r_grid.len()];
    for (i, u) in x.points().iter().enumerate() {
        if !(region.contains(u) && isolated(x, u, range, &[i])) {
            continue;
        }
        for (c, &r) in counts.iter_mut().zip(r_grid) {
            *c += rule.free_nodes(x, u, r, range, &[i]);
        }
    }
    let denom = rule.len() as f64 * region.volume();
    Ok(counts.into_iter().map(|c| c as f64 / denom).collect())
}

pub fn estimate_j(input: &EstimatorInput, r: f64) -> Result<f64> {
    check_r(r, input.settings.range)?;
    Ok(estimate_j_curve(input, &[r])?[0])
}

fn check_r(r: f64, range: f64) -> Result<()> {
    if r > 0.0 && r <= range {
        Ok(())
    } else {
        Err(Error::arg(format!("r = {r} outside (0, {range}]")))
    }
}

/// Distances of the ordered pairs `(u, v)` entering the kernel estimator:
/// `u` in `W⊖2R`, `‖v−u‖ <= R`, and neither point has any other
/// R-neighbor. Kept sorted so sums are order independent.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable {
    dim: usize,
    eroded_volume: f64,
    distances: Vec<f64>,
}

impl PairTable {
    pub fn build(x: &PointPattern, range: f64) -> Result<Self> {
        let region = x.window().erode(2.0 * range)?;
        if region.is_empty() {
            return Err(Error::degenerate("the 2R-eroded window is empty"));
        }
        let x: Cow<PointPattern> =
            if x.reach() < range { Cow::Owned(x.with_reach(range)) } else { Cow::Borrowed(x) };
        // the partner of a point in W⊖2R lies in W⊖R, so neighbor counts
        // are only needed there
        let inner = x.window().erode(range)?;
        let pts = x.points();
        let mut count = vec![0u32; pts.len()];
        let mut last = vec![(0usize, 0.0); pts.len()];
        for (i, u) in pts.iter().enumerate() {
            if !inner.contains(u) {
                continue;
            }
            x.for_each_within(u, range, |j, d| {
                if j != i {
                    count[i] += 1;
                    last[i] = (j, d);
                }
            });
        }
        let mut distances = Vec::new();
        for (i, u) in pts.iter().enumerate() {
            let (j, d) = last[i];
            if count[i] == 1 && count[j] == 1 && region.contains(u) {
                distances.push(d);
            }
        }
        distances.sort_by(f64::total_cmp);
        Ok(PairTable { dim: x.dim(), eroded_volume: region.volume(), distances })
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn eroded_volume(&self) -> f64 {
        self.eroded_volume
    }

    /// `R̂(r)` for a given kernel and bandwidth.
    pub fn r_hat(&self, kernel: &Kernel, bandwidth: f64, r: f64) -> f64 {
        let reach = kernel.support() * bandwidth;
        let lo = self.distances.partition_point(|&d| d < r - reach);
        let hi = self.distances.partition_point(|&d| d <= r + reach);
        let power = self.dim as i32 - 1;
        let sum: f64 = self.distances[lo..hi]
            .iter()
            .map(|&d| kernel.eval((d - r) / bandwidth) / d.powi(power))
            .sum();
        sum / (bandwidth * self.eroded_volume * sphere_measure(self.dim))
    }
}

pub fn estimate_r_hat(input: &EstimatorInput, r: f64) -> Result<f64> {
    check_r(r, input.settings.range)?;
    let s = &input.settings;
    Ok(PairTable::build(input.pattern(), s.range)?.r_hat(&s.kernel, s.bandwidth, r))
}

/// Per-row diagnostics of an interaction-function estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RowFlags {
    /// `β̂ = 0` or `Ĵ(r) = 0`: the ratio is undefined.
    pub undefined: bool,
    /// `Φ̂(r) <= 0`; `γ̂` is reported as `+∞`.
    pub nonpositive_phi: bool,
    /// `Φ̂(r) > 1`, i.e. `γ̂(r) < 0`, contradicting a repulsive potential.
    pub positivity_violation: bool,
}

impl RowFlags {
    pub fn is_clear(&self) -> bool {
        *self == RowFlags::default()
    }
}

impl fmt::Display for RowFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.undefined, "undefined"),
            (self.nonpositive_phi, "nonpositive_phi"),
            (self.positivity_violation, "gamma_negative"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        f.write_str(&names.join(";"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateRow {
    pub r: f64,
    pub r_hat: f64,
    pub j_hat: f64,
    /// NaN when undefined.
    pub phi_hat: f64,
    /// `−ln Φ̂`; `+∞` when `Φ̂ <= 0`, NaN when undefined.
    pub gamma_hat: f64,
    pub flags: RowFlags,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub rows: Vec<EstimateRow>,
    pub beta_hat: f64,
    pub eroded_volume: f64,
    pub sigma_d: f64,
    pub bandwidth: f64,
    pub range: f64,
    pub side: f64,
    pub dim: usize,
    pub n_points: usize,
}

impl EstimateReport {
    pub fn positivity_violations(&self) -> usize {
        self.rows.iter().filter(|r| r.flags.positivity_violation).count()
    }

    pub fn gamma_curve(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|row| (row.r, row.gamma_hat)).collect()
    }
}

/// `Φ̂(r) = R̂(r) / (β̂ Ĵ(r))` and `γ̂ = −ln Φ̂` on the r-grid.
pub fn estimate_phi(input: &EstimatorInput) -> Result<EstimateReport> {
    let s = &input.settings;
    let x = input.pattern();
    let beta_hat = estimate_beta(input)?;
    let j_hat = estimate_j_curve(input, &s.r_grid)?;
    let table = PairTable::build(x, s.range)?;
    let rows = s
        .r_grid
        .iter()
        .zip(j_hat)
        .map(|(&r, j)| {
            let r_hat = table.r_hat(&s.kernel, s.bandwidth, r);
            let mut flags = RowFlags::default();
            let (phi_hat, gamma_hat) = if beta_hat == 0.0 || j == 0.0 {
                flags.undefined = true;
                (f64::NAN, f64::NAN)
            } else {
                let phi = r_hat / (beta_hat * j);
                if phi > 0.0 {
                    flags.positivity_violation = phi > 1.0;
                    (phi, -phi.ln())
                } else {
                    flags.nonpositive_phi = true;
                    (phi, f64::INFINITY)
                }
            };
            EstimateRow { r, r_hat, j_hat: j, phi_hat, gamma_hat, flags }
        })
        .collect();
    Ok(EstimateReport {
        rows,
        beta_hat,
        eroded_volume: table.eroded_volume(),
        sigma_d: sphere_measure(x.dim()),
        bandwidth: s.bandwidth,
        range: s.range,
        side: x.window().side(),
        dim: x.dim(),
        n_points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::Window;
    use std::f64::consts::PI;

    fn pattern(side: f64, pts: &[[f64; 2]]) -> PointPattern {
        let w = Window::new(2, side).unwrap();
        PointPattern::new(w, pts.iter().map(|p| Point::new(p)).collect(), 1.0).unwrap()
    }

    fn settings(b: f64) -> EstimatorSettings {
        EstimatorSettings::new(1.0, Kernel::epanechnikov(), b, vec![0.3, 0.6, 0.9])
    }

    #[test]
    fn htilde_strict_boundary() {
        let x = pattern(10.0, &[[0.0, 0.0]]);
        let empty = pattern(10.0, &[]);
        assert!(htilde(&Point::new(&[5.0, 5.0]), &empty, 1.0));
        assert!(!htilde(&Point::new(&[1.0, 0.0]), &x, 1.0));
        assert!(htilde(&Point::new(&[1.0 + 1e-9, 0.0]), &x, 1.0));
    }

    #[test]
    fn hstar_limits() {
        let empty = pattern(10.0, &[]);
        assert!((hstar(&Point::new(&[5.0, 5.0]), 0.5, &empty, 1.0, 64) - 2.0 * PI).abs() < 1e-12);
        let dense: Vec<[f64; 2]> =
            (0..21).flat_map(|i| (0..21).map(move |j| [4.0 + 0.1 * i as f64, 4.0 + 0.1 * j as f64])).collect();
        let x = pattern(10.0, &dense);
        assert_eq!(hstar(&Point::new(&[5.0, 5.0]), 0.5, &x, 1.0, 64), 0.0);
    }

    #[test]
    fn hstar_blocked_arc_against_fine_quadrature() {
        // one blocker at distance 1.2 from u; the sphere of radius 0.6 is
        // blocked where it comes within R = 1 of the blocker
        let u = Point::new(&[5.0, 5.0]);
        let x = pattern(10.0, &[[6.2, 5.0]]);
        let reference = {
            let m = 1_000_000;
            let free = (0..m)
                .filter(|&k| {
                    let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    let (px, py) = (5.0 + 0.6 * t.cos(), 5.0 + 0.6 * t.sin());
                    ((px - 6.2).powi(2) + (py - 5.0).powi(2)).sqrt() > 1.0
                })
                .count();
            2.0 * PI * free as f64 / m as f64
        };
        let got = hstar(&u, 0.6, &x, 1.0, 4096);
        assert!((got - reference).abs() < 2.0 * 2.0 * PI / 4096.0, "{got} vs {reference}");
        assert!(reference < 2.0 * PI && reference > 0.0);
    }

    #[test]
    fn empty_pattern_estimates() {
        let x = pattern(10.0, &[]);
        let input = EstimatorInput::new(&x, settings(0.2)).unwrap();
        assert_eq!(estimate_beta(&input).unwrap(), 0.0);
        assert_eq!(estimate_j(&input, 0.5).unwrap(), 0.0);
        assert_eq!(estimate_r_hat(&input, 0.5).unwrap(), 0.0);
        let rep = estimate_phi(&input).unwrap();
        assert!(rep.rows.iter().all(|r| r.flags.undefined));
    }

    #[test]
    fn two_point_r_hat() {
        let rho0 = 0.55;
        let x = pattern(10.0, &[[5.0, 5.0], [5.0 + rho0, 5.0]]);
        let b = 0.2;
        let input = EstimatorInput::new(&x, settings(b)).unwrap();
        let k = Kernel::epanechnikov();
        for r in [0.4, 0.5, 0.6, 0.7] {
            let want = 2.0 * k.eval((rho0 - r) / b) / (b * 36.0 * 2.0 * PI * rho0);
            let got = estimate_r_hat(&input, r).unwrap();
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn no_close_pairs_gives_zero() {
        let x = pattern(10.0, &[[3.0, 3.0], [5.0, 5.0], [7.0, 3.0]]);
        let input = EstimatorInput::new(&x, settings(0.2)).unwrap();
        assert_eq!(estimate_r_hat(&input, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn single_interior_point_j() {
        let x = pattern(10.0, &[[5.0, 5.0]]);
        let input = EstimatorInput::new(&x, settings(0.2)).unwrap();
        // X∖u is empty so every sphere node is free: h* = 2π, normalized 1
        assert!((estimate_j(&input, 0.5).unwrap() - 1.0 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_beta_against_refined_quadrature() {
        let x = pattern(20.0, &[[10.0, 10.0]]);
        let mut s = settings(0.2);
        s.region_grid_res = 128;
        let coarse = estimate_beta(&EstimatorInput::new(&x, s.clone()).unwrap()).unwrap();
        s.region_grid_res = 512;
        let fine = estimate_beta(&EstimatorInput::new(&x, s).unwrap()).unwrap();
        // |Λ| − |B(u, R)| with Λ = [1, 19]²
        let exact = 1.0 / (324.0 - PI);
        assert!((fine - exact).abs() < 1e-3 * exact);
        assert!((coarse - fine).abs() < 5e-3 * exact, "{coarse} vs {fine}");
    }

    #[test]
    fn degenerate_inputs() {
        let x = pattern(3.5, &[[1.0, 1.0]]);
        let input = EstimatorInput::new(&x, settings(0.2)).unwrap();
        assert!(matches!(estimate_j(&input, 0.5), Err(Error::Degenerate(_))));
        assert!(matches!(estimate_r_hat(&input, 0.5), Err(Error::Degenerate(_))));
        // a lattice at spacing 0.5 leaves no isolated location
        let lattice: Vec<[f64; 2]> =
            (0..21).flat_map(|i| (0..21).map(move |j| [0.5 * i as f64, 0.5 * j as f64])).collect();
        let x = pattern(10.0, &lattice);
        let input = EstimatorInput::new(&x, settings(0.2)).unwrap();
        assert!(matches!(estimate_beta(&input), Err(Error::Degenerate(_))));
    }

    #[test]
    fn settings_validation() {
        let x = pattern(10.0, &[]);
        let mut s = settings(1.5);
        assert!(EstimatorInput::new(&x, s.clone()).is_err());
        s.bandwidth = 0.2;
        s.r_grid = vec![0.5, 1.2];
        assert!(EstimatorInput::new(&x, s.clone()).is_err());
        s.r_grid = vec![0.5];
        s.sphere_nodes = 8;
        assert!(EstimatorInput::new(&x, s.clone()).is_err());
        s.sphere_nodes = 16;
        s.region_grid_res = 10;
        assert!(EstimatorInput::new(&x, s).is_err());
    }

    #[test]
    fn zero_r_hat_flags_infinite_gamma() {
        // an isolated point gives β̂ > 0 and Ĵ > 0 but no pairs
        let x = pattern(10.0, &[[5.0, 5.0]]);
        let rep = estimate_phi(&EstimatorInput::new(&x, settings(0.2)).unwrap()).unwrap();
        for row in &rep.rows {
            assert_eq!(row.phi_hat, 0.0);
            assert_eq!(row.gamma_hat, f64::INFINITY);
            assert!(row.flags.nonpositive_phi);
            assert_eq!(row.flags.to_string(), "nonpositive_phi");
        }
    }

    #[test]
    fn reindexes_coarse_patterns() {
        let w = Window::new(2, 10.0).unwrap();
        let x = PointPattern::new(w, vec![Point::new(&[5.0, 5.0]), Point::new(&[5.5, 5.0])], 0.1).unwrap();
        let input = EstimatorInput::new(&x, settings(0.2)).unwrap();
        assert!(input.pattern().reach() >= 1.0);
        assert!(estimate_r_hat(&input, 0.5).unwrap() > 0.0);
    }
}
