//! Univariate smoothing kernels and bandwidth schedules.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// Uniform density on `[−1/2, 1/2]`.
    Box,
    /// `(3/4)(1 − u²)` on `[−1, 1]`.
    Epanechnikov,
    /// Biweight `(15/16)(1 − u²)²` on `[−1, 1]`.
    Quartic,
    /// Fourth-order polynomial kernel `(15/32)(3 − 10u² + 7u⁴)` on `[−1, 1]`.
    /// Takes negative values near the ends of its support.
    HigherOrder4,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] =
        [KernelKind::Box, KernelKind::Epanechnikov, KernelKind::Quartic, KernelKind::HigherOrder4];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Box => "box",
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Quartic => "quartic",
            KernelKind::HigherOrder4 => "higher_order_4",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown kernel kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    kind: KernelKind,
}

impl Kernel {
    pub fn new(kind: KernelKind) -> Self {
        Kernel { kind }
    }

    pub fn epanechnikov() -> Self {
        Kernel::new(KernelKind::Epanechnikov)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Order α: the first non-vanishing moment beyond the zeroth.
    pub fn order(&self) -> u32 {
        match self.kind {
            KernelKind::HigherOrder4 => 4,
            _ => 2,
        }
    }

    /// Half-width of the support.
    pub fn support(&self) -> f64 {
        match self.kind {
            KernelKind::Box => 0.5,
            _ => 1.0,
        }
    }

    /// Analytic `sup |K′|` on the support interior.
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            KernelKind::Box => 0.0,
            KernelKind::Epanechnikov => 1.5,
            // (15/4)|u|(1 − u²) peaks at u = 1/√3
            KernelKind::Quartic => 15.0 / 4.0 * (2.0 / 3.0) / 3f64.sqrt(),
            // (15/32)|28u³ − 20u| peaks at the support edge
            KernelKind::HigherOrder4 => 15.0 / 32.0 * 8.0,
        }
    }

    pub fn is_discontinuous(&self) -> bool {
        self.kind == KernelKind::Box
    }

    pub fn is_nonnegative(&self) -> bool {
        self.kind != KernelKind::HigherOrder4
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        match self.kind {
            KernelKind::Box => {
                if a <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            _ if a > 1.0 => 0.0,
            KernelKind::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelKind::Quartic => {
                let t = 1.0 - u * u;
                0.9375 * t * t
            }
            KernelKind::HigherOrder4 => {
                let s = u * u;
                15.0 / 32.0 * (3.0 - 10.0 * s + 7.0 * s * s)
            }
        }
    }

    /// `∫ K²`.
    pub fn squared_integral(&self) -> f64 {
        integrate(-self.support(), self.support(), QUAD_NODES, |u| {
            let k = self.eval(u);
            k * k
        })
    }

    /// Moments `m_j = ∫ u^j K(u) du` for `j = 0..count`.
    pub fn moments(&self, count: usize) -> Vec<f64> {
        let s = self.support();
        (0..count)
            .map(|j| integrate(-s, s, QUAD_NODES, |u| u.powi(j as i32) * self.eval(u)))
            .collect()
    }

    pub fn check_moments(&self, alpha: u32, tol: f64) -> MomentReport {
        let moments = self.moments(alpha.max(1) as usize);
        let passed = moments
            .iter()
            .enumerate()
            .all(|(j, &m)| if j == 0 { (m - 1.0).abs() <= tol } else { m.abs() <= tol });
        MomentReport { passed, moments }
    }

    /// Largest finite-difference slope over `probes` equally spaced points
    /// covering the support, with a jump detector.
    pub fn lipschitz_check(&self, probes: usize) -> LipschitzReport {
        let probes = probes.max(1000);
        let coarse = max_slope(self, probes);
        let fine = max_slope(self, 4 * probes);
        // a jump makes the slope grow with the resolution; a Lipschitz
        // kernel's slope converges
        let discontinuous = fine > 2.0 * coarse.max(1e-300);
        LipschitzReport { constant: if discontinuous { f64::INFINITY } else { fine }, discontinuous }
    }
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::epanechnikov()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub passed: bool,
    pub moments: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzReport {
    pub constant: f64,
    pub discontinuous: bool,
}

const QUAD_NODES: usize = 10_000;

/// Composite Simpson rule with `n` (even) subintervals.
pub(crate) fn integrate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn max_slope(k: &Kernel, probes: usize) -> f64 {
    let (a, b) = (-1.5, 1.5);
    let h = (b - a) / probes as f64;
    let mut prev = k.eval(a);
    let mut best = 0.0f64;
    for i in 1..=probes {
        let cur = k.eval(a + i as f64 * h);
        best = best.max((cur - prev).abs() / h);
        prev = cur;
    }
    best
}

/// Bandwidth as a function of the window side `L`:
/// `b(L) = c · L^(−q2) · (ln L)^(q1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandwidthSchedule {
    pub constant: f64,
    pub q1: f64,
    pub q2: f64,
}

impl BandwidthSchedule {
    pub fn fixed(b: f64) -> Self {
        BandwidthSchedule { constant: b, q1: 0.0, q2: 0.0 }
    }

    /// `b(L) = c · L^(−1/(2α+d))` with `c` chosen so that `b(L0) = R/4`.
    pub fn default_rule(kernel: &Kernel, dim: usize, range: f64, smallest_side: f64) -> Self {
        let q2 = 1.0 / (2.0 * kernel.order() as f64 + dim as f64);
        let constant = 0.25 * range * smallest_side.powf(q2);
        BandwidthSchedule { constant, q1: 0.0, q2 }
    }

    pub fn at(&self, side: f64) -> f64 {
        let mut b = self.constant * side.powf(-self.q2);
        if self.q1 != 0.0 {
            b *= side.ln().powf(self.q1);
        }
        b
    }

    /// Checks along the side ladder that `b` is positive, at most `range`,
    /// non-increasing, and that `b · (L − 4R)^dim` increases.
    pub fn check_ladder(&self, sides: &[f64], range: f64, dim: usize) -> Result<()> {
        let mut prev: Option<(f64, f64)> = None;
        for &l in sides {
            let b = self.at(l);
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::config(format!("bandwidth at side {l} is not positive ({b})")));
            }
            if b > range {
                return Err(Error::config(format!("bandwidth {b} at side {l} exceeds the range {range}")));
            }
            let scaled = b * (l - 4.0 * range).max(0.0).powi(dim as i32);
            if let Some((pb, ps)) = prev {
                if b > pb * (1.0 + 1e-12) {
                    return Err(Error::config(format!("bandwidth increases at side {l}")));
                }
                if scaled <= ps {
                    return Err(Error::config(format!("b·|W⊖2R| does not grow at side {l}")));
                }
            }
            prev = Some((b, scaled));
        }
        Ok(())
    }
}
