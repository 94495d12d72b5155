//! Realizations of Gibbs models: exact Poisson sampling, a birth–death
//! Metropolis–Hastings chain, and Georgii–Nguyen–Zessin residual checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::parallel;
use crate::spatial::{Boundary, CellGrid, Point, PointPattern, Window, MAX_DIM};
use crate::theory::ball_volume;

const POISSON_MEAN_CAP: f64 = 1e8;

/// Independent random stream `stream` of the generator seeded by `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Initial {
    Empty,
    /// A Poisson pattern with the model's activity.
    #[default]
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub initial: Initial,
    pub boundary: Boundary,
}

impl ChainConfig {
    pub fn new(steps: u64, burn_in: u64, seed: u64) -> Result<Self> {
        let cfg = ChainConfig { steps, burn_in, seed, initial: Initial::default(), boundary: Boundary::Free };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `10 β|W|` burn-in proposals followed by as many again.
    pub fn for_model(model: &Model, window: &Window, seed: u64) -> Self {
        let burn_in = ((10.0 * model.beta() * window.volume()).ceil() as u64).max(1000);
        ChainConfig { steps: 2 * burn_in, burn_in, seed, initial: Initial::default(), boundary: Boundary::Free }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_initial(mut self, initial: Initial) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::config("chain needs at least one step"));
        }
        if self.burn_in >= self.steps {
            return Err(Error::config(format!(
                "burn-in ({}) must be smaller than the step count ({})",
                self.burn_in, self.steps
            )));
        }
        Ok(())
    }
}

fn uniform_point(window: &Window, rng: &mut impl Rng) -> Point {
    let mut c = [0.0; MAX_DIM];
    for v in &mut c[..window.dim()] {
        *v = rng.gen::<f64>() * window.side();
    }
    Point(c)
}

fn poisson_points(window: &Window, beta: f64, rng: &mut impl Rng) -> Result<Vec<Point>> {
    let mean = beta * window.volume();
    if !(mean < POISSON_MEAN_CAP) {
        return Err(Error::Resource(format!("expected point count {mean:.3e} exceeds {POISSON_MEAN_CAP:.0e}")));
    }
    if !(mean > 0.0) {
        return Ok(Vec::new());
    }
    let n = Poisson::new(mean).map_err(|e| Error::arg(e.to_string()))?.sample(rng) as usize;
    Ok((0..n).map(|_| uniform_point(window, rng)).collect())
}

/// A homogeneous Poisson pattern, indexed for queries up to `reach`.
pub fn sample_poisson_with(window: &Window, beta: f64, reach: f64, rng: &mut impl Rng) -> Result<PointPattern> {
    if !(beta > 0.0) {
        return Err(Error::arg(format!("intensity must be positive, got {beta}")));
    }
    loop {
        let pts = poisson_points(window, beta, rng)?;
        match PointPattern::new(*window, pts, reach) {
            Ok(p) => return Ok(p),
            // coincident draws; probability zero in exact arithmetic
            Err(Error::Argument(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

pub fn sample_poisson(window: &Window, beta: f64, seed: u64) -> Result<PointPattern> {
    let reach = beta.powf(-1.0 / window.dim() as f64).min(window.side());
    sample_poisson_with(window, beta, reach, &mut chain_rng(seed, 0))
}

/// Mutable configuration of a running chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    window: Window,
    boundary: Boundary,
    points: Vec<Point>,
    grid: CellGrid,
    scratch: Vec<Point>,
}

impl ChainState {
    pub fn new(window: Window, boundary: Boundary, reach: f64) -> Self {
        ChainState {
            window,
            boundary,
            points: Vec::new(),
            grid: CellGrid::new(&window, reach, boundary),
            scratch: Vec::new(),
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn push(&mut self, p: Point) {
        self.grid.insert(self.points.len(), &p);
        self.points.push(p);
    }

    pub fn swap_remove(&mut self, i: usize) -> Point {
        let last = self.points.len() - 1;
        let p = self.points[i];
        self.grid.remove(i, &p);
        if i != last {
            let q = self.points[last];
            self.grid.remove(last, &q);
            self.grid.insert(i, &q);
        }
        self.points.swap_remove(i);
        p
    }

    #[inline]
    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        self.grid.dist(a, b)
    }

    /// Visits points within `radius` of `u` (radius at most the grid reach),
    /// skipping index `skip`.
    #[inline]
    pub fn for_each_within(&self, u: &Point, radius: f64, skip: Option<usize>, mut f: impl FnMut(usize, f64)) {
        debug_assert!(radius <= self.grid.reach());
        self.grid.for_each_candidate(u, |j| {
            if Some(j) != skip {
                let d = self.grid.dist(&self.points[j], u);
                if d <= radius {
                    f(j, d);
                }
            }
        });
    }

    /// `log λ(u, x ∖ x_skip ∪ extra)`.
    pub fn log_lambda(&mut self, model: &Model, u: &Point, skip: Option<usize>, extra: &[Point]) -> f64 {
        let mut nb = std::mem::take(&mut self.scratch);
        nb.clear();
        let range = model.range();
        self.for_each_within(u, range, skip, |j, _| nb.push(self.points[j]));
        nb.extend(extra.iter().filter(|v| self.dist(u, v) <= range));
        let out = model.log_intensity_local(u, &nb, |a, b| self.grid.dist(a, b));
        self.scratch = nb;
        out
    }

    /// Whether no point other than `skip` lies within `range` of `u`.
    pub fn isolated(&self, u: &Point, range: f64, skip: Option<usize>) -> bool {
        let mut any = false;
        self.for_each_within(u, range, skip, |_, _| any = true);
        !any
    }

    pub fn to_pattern(&self, reach: f64) -> Result<PointPattern> {
        PointPattern::new(self.window, self.points.clone(), reach)
    }
}

/// Runs the chain, calling `observe(step, state)` after every proposal
/// past the burn-in.
pub fn run_chain(
    model: &Model,
    window: &Window,
    cfg: &ChainConfig,
    rng: &mut impl Rng,
    mut observe: impl FnMut(u64, &ChainState),
) -> Result<ChainState> {
    cfg.validate()?;
    let mut state = ChainState::new(*window, cfg.boundary, model.range());
    if cfg.initial == Initial::Poisson {
        for p in poisson_points(window, model.beta(), rng)? {
            state.push(p);
        }
    }
    let log_vol = window.volume().ln();
    for step in 1..=cfg.steps {
        let n = state.len();
        if rng.gen::<bool>() {
            let u = uniform_point(window, rng);
            let log_ratio = state.log_lambda(model, &u, None, &[]) + log_vol - ((n + 1) as f64).ln();
            if rng.gen::<f64>().ln() < log_ratio {
                state.push(u);
            }
        } else if n > 0 {
            let i = rng.gen_range(0..n);
            let v = state.points[i];
            // λ = 0 (a hard-core violation) makes the ratio +∞
            let log_ratio = (n as f64).ln() - state.log_lambda(model, &v, Some(i), &[]) - log_vol;
            if rng.gen::<f64>().ln() < log_ratio {
                state.swap_remove(i);
            }
        }
        if step > cfg.burn_in {
            observe(step, &state);
        }
    }
    Ok(state)
}

/// Final state of one birth–death chain as a pattern indexed at the
/// model's range.
pub fn run_birth_death(model: &Model, window: &Window, cfg: &ChainConfig) -> Result<PointPattern> {
    let mut rng = chain_rng(cfg.seed, 0);
    run_chain(model, window, cfg, &mut rng, |_, _| {})?.to_pattern(model.range())
}

/// An axis-aligned sub-box of a window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubBox {
    dim: usize,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
}

impl SubBox {
    pub fn new(dim: usize, lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::arg("sub-box corners must have one coordinate per dimension"));
        }
        let mut b = SubBox { dim, lo: [0.0; MAX_DIM], hi: [0.0; MAX_DIM] };
        b.lo[..dim].copy_from_slice(lo);
        b.hi[..dim].copy_from_slice(hi);
        Ok(b)
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        let mut b = SubBox { dim, lo: [0.0; MAX_DIM], hi: [0.0; MAX_DIM] };
        b.lo[..dim].fill(lo);
        b.hi[..dim].fill(hi);
        b
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|k| self.hi[k] <= self.lo[k])
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (0..self.dim).map(|k| self.hi[k] - self.lo[k]).product()
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|k| p.0[k] >= self.lo[k] && p.0[k] <= self.hi[k])
    }

    fn inside(&self, w: &Window) -> bool {
        self.dim == w.dim() && (0..self.dim).all(|k| self.lo[k] >= 0.0 && self.hi[k] <= w.side())
    }

    /// Midpoints of a `res^dim` grid, each standing for `cell_volume`.
    fn midpoints(&self, res: usize) -> (Vec<Point>, f64) {
        if self.is_empty() {
            return (Vec::new(), 0.0);
        }
        let mut h = [0.0; MAX_DIM];
        for k in 0..self.dim {
            h[k] = (self.hi[k] - self.lo[k]) / res as f64;
        }
        let total = res.pow(self.dim as u32);
        let pts = (0..total)
            .map(|mut idx| {
                let mut c = [0.0; MAX_DIM];
                for k in 0..self.dim {
                    c[k] = self.lo[k] + ((idx % res) as f64 + 0.5) * h[k];
                    idx /= res;
                }
                Point(c)
            })
            .collect();
        (pts, h[..self.dim].iter().product())
    }
}

/// Test function of the single-point GNZ identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunction {
    /// `h(u, x) = 1_B(u)`.
    Indicator(SubBox),
    /// `h(u, x) = 1_B(u) · 1(d(u, x) > R)`.
    HtildeWeighted(SubBox),
}

impl TestFunction {
    fn region(&self) -> &SubBox {
        match self {
            TestFunction::Indicator(b) | TestFunction::HtildeWeighted(b) => b,
        }
    }
}

/// Sum side against integral side of a GNZ identity over independent chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnzReport {
    /// Number of points in the identity (1 or 2).
    pub order: usize,
    pub chains: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub mc_stderr: f64,
    pub z_score: f64,
}

impl GnzReport {
    fn from_pairs(order: usize, pairs: &[(f64, f64)]) -> Self {
        let n = pairs.len() as f64;
        let lhs = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let rhs = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let diff = lhs - rhs;
        let var = if pairs.len() > 1 {
            pairs.iter().map(|p| (p.0 - p.1 - diff).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mc_stderr = (var / n).sqrt();
        let z_score = if mc_stderr > 0.0 {
            diff / mc_stderr
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        GnzReport { order, chains: pairs.len(), lhs, rhs, mc_stderr, z_score }
    }
}

const GNZ_GRID: usize = 64;
const GNZ_PAIR_GRID: usize = 32;
const BALL_SHELLS: usize = 8;

fn check_gnz_args(window: &Window, n_chains: usize, cfg: &ChainConfig, region: &SubBox) -> Result<()> {
    if n_chains == 0 {
        return Err(Error::arg("GNZ check needs at least one chain"));
    }
    if !region.inside(window) {
        return Err(Error::arg("test region must lie inside the window"));
    }
    cfg.validate()
}

fn final_state(model: &Model, window: &Window, cfg: &ChainConfig, chain: usize) -> Result<ChainState> {
    let mut rng = chain_rng(cfg.seed, chain as u64);
    run_chain(model, window, cfg, &mut rng, |_, _| {})
}

/// Single-point GNZ identity
/// `E Σ_{u∈X} h(u, X∖u) = ∫ E[h(u,X) λ(u,X)] du`, one chain per replicate.
/// The integral side uses a `64^dim` midpoint grid over the test region.
pub fn gnz_residual(
    model: &Model,
    window: &Window,
    n_chains: usize,
    cfg: &ChainConfig,
    test: TestFunction,
) -> Result<GnzReport> {
    let region = *test.region();
    check_gnz_args(window, n_chains, cfg, &region)?;
    let (nodes, cell) = region.midpoints(GNZ_GRID);
    let range = model.range();
    let weighted = matches!(test, TestFunction::HtildeWeighted(_));
    let pairs = parallel::map_range(n_chains, |c| -> Result<(f64, f64)> {
        let mut state = final_state(model, window, cfg, c)?;
        let mut lhs = 0.0;
        for (i, u) in state.points().iter().enumerate() {
            if region.contains(u) && (!weighted || state.isolated(u, range, Some(i))) {
                lhs += 1.0;
            }
        }
        let mut rhs = 0.0;
        for u in &nodes {
            if !weighted || state.isolated(u, range, None) {
                rhs += state.log_lambda(model, u, None, &[]).exp();
            }
        }
        Ok((lhs, rhs * cell))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(GnzReport::from_pairs(1, &pairs))
}

/// Direction set on the unit sphere: ±1 in 1-d, equal angles in 2-d,
/// a Fibonacci lattice in 3-d.
pub(crate) fn sphere_directions(dim: usize, m: usize) -> Vec<[f64; MAX_DIM]> {
    match dim {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..m)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / m as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    [rho * t.cos(), rho * t.sin(), z]
                })
                .collect()
        }
        _ => panic!("dimension {dim} not supported"),
    }
}

/// Iterated (two-point) GNZ identity with
/// `h(u, v, x) = 1_B(u) 1(‖u − v‖ <= R)`:
/// `E Σ≠ h = ∫_B ∫_{B(u,R)} E[λ(u,X) λ(v, X ∪ {u})] dv du`.
pub fn gnz_pair_residual(
    model: &Model,
    window: &Window,
    n_chains: usize,
    cfg: &ChainConfig,
    region: SubBox,
) -> Result<GnzReport> {
    check_gnz_args(window, n_chains, cfg, &region)?;
    let dim = window.dim();
    let range = model.range();
    let (nodes, cell) = region.midpoints(GNZ_PAIR_GRID);
    let dirs = sphere_directions(dim, if dim == 2 { 16 } else { 32 });
    let radii: Vec<f64> = (0..BALL_SHELLS)
        .map(|k| range * ((k as f64 + 0.5) / BALL_SHELLS as f64).powf(1.0 / dim as f64))
        .collect();
    let ball_w = ball_volume(dim, range) / (BALL_SHELLS * dirs.len()) as f64;
    let pairs = parallel::map_range(n_chains, |c| -> Result<(f64, f64)> {
        let mut state = final_state(model, window, cfg, c)?;
        let mut lhs = 0.0;
        for (i, u) in state.points().iter().enumerate() {
            if region.contains(u) {
                state.for_each_within(u, range, Some(i), |_, _| lhs += 1.0);
            }
        }
        let mut rhs = 0.0;
        for u in &nodes {
            let lu = state.log_lambda(model, u, None, &[]);
            if lu == f64::NEG_INFINITY {
                continue;
            }
            let mut inner = 0.0;
            for &rho in &radii {
                for d in &dirs {
                    let mut v = u.offset(d, rho);
                    match state.boundary() {
                        Boundary::Free if !window.contains(&v) => continue,
                        Boundary::Free => {}
                        Boundary::Torus => v = window.wrap(&v),
                    }
                    inner += (lu + state.log_lambda(model, &v, None, std::slice::from_ref(u))).exp();
                }
            }
            rhs += inner;
        }
        Ok((lhs, rhs * cell * ball_w))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(GnzReport::from_pairs(2, &pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_sampling_support_and_mean() {
        let w = Window::new(2, 10.0).unwrap();
        let tiny = Window::new(2, 1e-6).unwrap();
        assert!(sample_poisson(&tiny, 1e-3, 1).unwrap().is_empty());
        let mut rng = chain_rng(11, 0);
        let mut total = 0usize;
        for _ in 0..1000 {
            let x = sample_poisson_with(&w, 2.0, 1.0, &mut rng).unwrap();
            assert!(x.points().iter().all(|p| w.contains(p)));
            total += x.len();
        }
        let mean = total as f64 / 1000.0;
        // Poisson(200): stderr of the mean = sqrt(200/1000)
        assert!((mean - 200.0).abs() <= 3.0 * (200.0f64 / 1000.0).sqrt(), "{mean}");
    }

    #[test]
    fn poisson_cap() {
        let w = Window::new(2, 1e5).unwrap();
        assert!(matches!(sample_poisson(&w, 1.0, 0), Err(Error::Resource(_))));
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(10, 10, 0).is_err());
        assert!(ChainConfig::new(0, 0, 0).is_err());
        assert!(ChainConfig::new(10, 5, 0).is_ok());
    }

    #[test]
    fn deterministic_chains() {
        let m = Model::strauss(0.5, 1.0, 0.5).unwrap();
        let w = Window::new(2, 8.0).unwrap();
        let cfg = ChainConfig::for_model(&m, &w, 99);
        let a = run_birth_death(&m, &w, &cfg).unwrap();
        let b = run_birth_death(&m, &w, &cfg).unwrap();
        assert_eq!(a.points(), b.points());
        let c = run_birth_death(&m, &w, &cfg.with_seed(100)).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn swap_remove_keeps_index_consistent() {
        let w = Window::new(2, 5.0).unwrap();
        let mut s = ChainState::new(w, Boundary::Free, 1.0);
        let mut rng = chain_rng(3, 0);
        for _ in 0..50 {
            s.push(uniform_point(&w, &mut rng));
        }
        for _ in 0..30 {
            let i = rng.gen_range(0..s.len());
            s.swap_remove(i);
        }
        for (i, p) in s.points().iter().enumerate() {
            let mut found = false;
            s.grid.for_each_candidate(p, |j| found |= j == i);
            assert!(found);
        }
    }

    #[test]
    fn strauss_repulsion_lowers_count() {
        let w = Window::new(2, 10.0).unwrap();
        let beta = 1.0;
        let mut counts = [0.0; 2];
        for (k, phi) in [1.0, 0.5].into_iter().enumerate() {
            let m = Model::strauss(beta, 1.0, phi).unwrap();
            let cfg = ChainConfig::for_model(&m, &w, 5);
            let mut rng = chain_rng(5, k as u64);
            let mut sum = 0.0;
            let mut n = 0.0;
            run_chain(&m, &w, &cfg, &mut rng, |_, s| {
                sum += s.len() as f64;
                n += 1.0;
            })
            .unwrap();
            counts[k] = sum / n;
        }
        assert!(counts[1] < counts[0] - 10.0, "{counts:?}");
    }

    #[test]
    fn empty_region_gnz_is_zero() {
        let m = Model::strauss(0.5, 1.0, 0.5).unwrap();
        let w = Window::new(2, 6.0).unwrap();
        let cfg = ChainConfig::for_model(&m, &w, 1);
        let b = SubBox::cube(2, 2.0, 2.0);
        let r = gnz_residual(&m, &w, 3, &cfg, TestFunction::Indicator(b)).unwrap();
        assert_eq!((r.lhs, r.rhs, r.z_score), (0.0, 0.0, 0.0));
        assert!(gnz_residual(&m, &w, 0, &cfg, TestFunction::Indicator(b)).is_err());
        let outside = SubBox::cube(2, 5.0, 7.0);
        assert!(gnz_residual(&m, &w, 2, &cfg, TestFunction::Indicator(outside)).is_err());
    }

    #[test]
    fn fibonacci_directions_are_unit() {
        for d in sphere_directions(3, 50) {
            assert!(((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) - 1.0).abs() < 1e-12);
        }
    }
}
