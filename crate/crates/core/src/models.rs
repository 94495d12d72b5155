//! Papangelou conditional intensities with a finite interaction range.

use crate::error::{Error, Result};
use crate::spatial::{Point, PointPattern};

/// The interaction part of a model.
#[derive(Clone, Debug, PartialEq)]
pub enum Interaction {
    Poisson,
    /// `λ(u,x) = β φ^{n_R(u,x)}`.
    Strauss { phi: f64 },
    /// Strauss with a step interaction: `φ_j` applies on `(R_{j−1}, R_j]`.
    /// `breaks` holds `R_0 = 0 < R_1 < … < R_p = range`.
    PiecewiseStrauss { breaks: Vec<f64>, phis: Vec<f64> },
    /// `λ(u,x) = β φ^{s(x∪u) − s(x)}`, `s` counting R-close triplets.
    Triplets { phi: f64 },
    /// Lennard-Jones truncated at the range.
    LennardJones { theta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    beta: f64,
    range: f64,
    interaction: Interaction,
}

fn check_phi(phi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&phi) {
        Ok(())
    } else {
        Err(Error::arg(format!("interaction parameter must lie in [0, 1], got {phi}")))
    }
}

impl Model {
    pub fn new(beta: f64, range: f64, interaction: Interaction) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::arg(format!("activity must be positive, got {beta}")));
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::arg(format!("interaction range must be positive, got {range}")));
        }
        match &interaction {
            Interaction::Poisson => {}
            Interaction::Strauss { phi } | Interaction::Triplets { phi } => check_phi(*phi)?,
            Interaction::PiecewiseStrauss { breaks, phis } => {
                if phis.is_empty() || breaks.len() != phis.len() + 1 {
                    return Err(Error::arg("piecewise Strauss needs p interaction levels and p+1 breaks"));
                }
                if breaks[0] != 0.0 {
                    return Err(Error::arg("piecewise Strauss breaks must start at 0"));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::arg("piecewise Strauss breaks must be strictly increasing"));
                }
                if (breaks[breaks.len() - 1] - range).abs() > 1e-12 * range {
                    return Err(Error::arg("the last piecewise Strauss break must equal the range"));
                }
                phis.iter().try_for_each(|&p| check_phi(p))?;
            }
            Interaction::LennardJones { theta } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(Error::arg(format!("Lennard-Jones theta must be positive, got {theta}")));
                }
            }
        }
        Ok(Model { beta, range, interaction })
    }

    pub fn poisson(beta: f64, range: f64) -> Result<Self> {
        Self::new(beta, range, Interaction::Poisson)
    }

    pub fn strauss(beta: f64, range: f64, phi: f64) -> Result<Self> {
        Self::new(beta, range, Interaction::Strauss { phi })
    }

    pub fn piecewise_strauss(beta: f64, breaks: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        let range = *breaks.last().ok_or_else(|| Error::arg("piecewise Strauss needs breaks"))?;
        Self::new(beta, range, Interaction::PiecewiseStrauss { breaks, phis })
    }

    pub fn triplets(beta: f64, range: f64, phi: f64) -> Result<Self> {
        Self::new(beta, range, Interaction::Triplets { phi })
    }

    pub fn lennard_jones(beta: f64, range: f64, theta: f64) -> Result<Self> {
        Self::new(beta, range, Interaction::LennardJones { theta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    pub fn is_pairwise(&self) -> bool {
        !matches!(self.interaction, Interaction::Triplets { .. })
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self.interaction, Interaction::Poisson)
    }

    /// Whether `γ(r) >= 0` holds on all of `(0, R]`. False only for
    /// Lennard-Jones models whose attractive tail reaches inside the range.
    pub fn is_repulsive(&self) -> bool {
        match self.interaction {
            // γ(r) = θ¹²r⁻¹² − θ⁶r⁻⁶ >= 0 iff r <= θ
            Interaction::LennardJones { theta } => self.range <= theta,
            _ => true,
        }
    }

    /// The pair potential `γ(r)`; zero beyond the range.
    pub fn pair_potential(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::arg(format!("pair distance must be positive, got {r}")));
        }
        if matches!(self.interaction, Interaction::Triplets { .. }) {
            return Err(Error::UnsupportedModel("the triplets interaction is not pairwise".into()));
        }
        Ok(self.potential_unchecked(r))
    }

    #[inline]
    fn potential_unchecked(&self, r: f64) -> f64 {
        if r > self.range {
            return 0.0;
        }
        match &self.interaction {
            Interaction::Poisson | Interaction::Triplets { .. } => 0.0,
            Interaction::Strauss { phi } => -phi.ln(),
            Interaction::PiecewiseStrauss { breaks, phis } => {
                // first j with r <= R_j
                let j = breaks[1..].partition_point(|&b| b < r);
                -phis[j.min(phis.len() - 1)].ln()
            }
            Interaction::LennardJones { theta } => {
                let s6 = (theta / r).powi(6);
                s6 * s6 - s6
            }
        }
    }

    /// `log λ(u, x)` for `u ∉ x`.
    ///
    /// Returns `−∞` for hard-core exclusion (a zero interaction parameter
    /// with an R-close neighbor).
    pub fn log_papangelou(&self, u: &Point, x: &PointPattern) -> f64 {
        let neighbors: Vec<Point> =
            x.neighbors_within(u, self.range).into_iter().map(|n| n.point).collect();
        self.log_intensity_local(u, &neighbors, |a, b| a.dist(b))
    }

    /// `log λ(u, x)` from the R-neighbors of `u` alone, under the given
    /// metric. `neighbors` must be exactly the points of `x` within the range.
    pub fn log_intensity_local(
        &self,
        u: &Point,
        neighbors: &[Point],
        dist: impl Fn(&Point, &Point) -> f64,
    ) -> f64 {
        let log_beta = self.beta.ln();
        match &self.interaction {
            Interaction::Poisson => log_beta,
            Interaction::Triplets { phi } => {
                // new triplets {u, v, w}: v, w both R-close to u and to each other
                let mut k = 0usize;
                for (i, v) in neighbors.iter().enumerate() {
                    for w in &neighbors[i + 1..] {
                        if dist(v, w) <= self.range {
                            k += 1;
                        }
                    }
                }
                if k == 0 {
                    log_beta
                } else {
                    log_beta + k as f64 * phi.ln()
                }
            }
            _ => {
                let energy: f64 = neighbors.iter().map(|v| self.potential_unchecked(dist(u, v))).sum();
                log_beta - energy
            }
        }
    }

    /// `log λ(u_1, …, u_s, x) = Σ_k log λ(u_k, x ∪ {u_1, …, u_{k−1}})`.
    pub fn log_papangelou_multi(&self, points: &[Point], x: &PointPattern) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::arg("need at least one point"));
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(Error::arg(format!("point {i} repeats an earlier point")));
            }
        }
        let mut total = 0.0;
        for (k, u) in points.iter().enumerate() {
            let mut nb: Vec<Point> =
                x.neighbors_within(u, self.range).into_iter().map(|n| n.point).collect();
            nb.extend(points[..k].iter().filter(|v| v.dist(u) <= self.range));
            total += self.log_intensity_local(u, &nb, |a, b| a.dist(b));
        }
        Ok(total)
    }

    /// Tabulates `γ` on an r-grid.
    pub fn potential_curve(&self, r_grid: &[f64]) -> Result<PairPotentialCurve> {
        let values = r_grid.iter().map(|&r| self.pair_potential(r)).collect::<Result<Vec<_>>>()?;
        Ok(PairPotentialCurve { r: r_grid.to_vec(), gamma: values })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairPotentialCurve {
    pub r: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::Window;

    fn pattern(pts: &[[f64; 2]]) -> PointPattern {
        let w = Window::new(2, 10.0).unwrap();
        PointPattern::new(w, pts.iter().map(|p| Point::new(p)).collect(), 1.0).unwrap()
    }

    #[test]
    fn poisson_is_constant() {
        let m = Model::poisson(3.0, 1.0).unwrap();
        let x = pattern(&[[5.0, 5.0], [5.2, 5.0]]);
        assert_eq!(m.log_papangelou(&Point::new(&[5.1, 5.0]), &x), 3f64.ln());
    }

    #[test]
    fn strauss_three_neighbors() {
        let m = Model::strauss(2.0, 1.0, 0.5).unwrap();
        let x = pattern(&[[5.5, 5.0], [5.0, 5.5], [4.5, 5.0], [7.0, 7.0]]);
        let got = m.log_papangelou(&Point::new(&[5.0, 5.0]), &x);
        assert!((got - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lennard_jones_single_neighbor() {
        let (theta, r) = (0.4, 0.7);
        let m = Model::lennard_jones(1.0, 1.0, theta).unwrap();
        let x = pattern(&[[5.0 + r, 5.0]]);
        let want = theta.powi(6) * r.powi(-6) - theta.powi(12) * r.powi(-12);
        let got = m.log_papangelou(&Point::new(&[5.0, 5.0]), &x);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn finite_range() {
        let x = pattern(&[[2.0, 2.0], [2.5, 2.0], [2.2, 2.4]]);
        let u = Point::new(&[6.0, 6.0]);
        for m in [
            Model::strauss(1.5, 1.0, 0.1).unwrap(),
            Model::triplets(1.5, 1.0, 0.1).unwrap(),
            Model::lennard_jones(1.5, 1.0, 0.5).unwrap(),
            Model::piecewise_strauss(1.5, vec![0.0, 0.4, 1.0], vec![0.2, 0.7]).unwrap(),
        ] {
            assert_eq!(m.log_papangelou(&u, &x), 1.5f64.ln());
        }
    }

    #[test]
    fn hard_core_gives_minus_infinity() {
        let m = Model::strauss(1.0, 1.0, 0.0).unwrap();
        let x = pattern(&[[5.5, 5.0]]);
        assert_eq!(m.log_papangelou(&Point::new(&[5.0, 5.0]), &x), f64::NEG_INFINITY);
        assert_eq!(m.log_papangelou(&Point::new(&[1.0, 1.0]), &x), 0.0);
    }

    #[test]
    fn potentials() {
        let m = Model::strauss(1.0, 2.0, 0.5).unwrap();
        assert_eq!(m.pair_potential(3.0).unwrap(), 0.0);
        assert!((m.pair_potential(1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let pw = Model::piecewise_strauss(1.0, vec![0.0, 0.5, 1.0], vec![0.3, 0.8]).unwrap();
        assert_eq!(pw.pair_potential(0.7).unwrap(), -0.8f64.ln());
        assert_eq!(pw.pair_potential(0.5).unwrap(), -0.3f64.ln());
        assert_eq!(pw.pair_potential(0.2).unwrap(), -0.3f64.ln());
        assert_eq!(pw.pair_potential(1.0).unwrap(), -0.8f64.ln());
        assert!(matches!(
            Model::triplets(1.0, 1.0, 0.5).unwrap().pair_potential(0.5),
            Err(Error::UnsupportedModel(_))
        ));
        assert!(m.pair_potential(0.0).is_err());
    }

    #[test]
    fn construction_checks() {
        assert!(Model::strauss(1.0, 1.0, 1.5).is_err());
        assert!(Model::strauss(0.0, 1.0, 0.5).is_err());
        assert!(Model::piecewise_strauss(1.0, vec![0.0, 0.6, 0.5], vec![0.2, 0.3]).is_err());
        assert!(Model::piecewise_strauss(1.0, vec![0.1, 0.6, 1.0], vec![0.2, 0.3]).is_err());
        assert!(Model::piecewise_strauss(1.0, vec![0.0, 1.0], vec![0.2, 0.3]).is_err());
        assert!(Model::lennard_jones(1.0, 1.0, -0.1).is_err());
        assert!(!Model::lennard_jones(1.0, 1.0, 0.5).unwrap().is_repulsive());
        assert!(Model::lennard_jones(1.0, 1.0, 1.2).unwrap().is_repulsive());
    }

    #[test]
    fn multi_point_intensity() {
        let x = pattern(&[[5.0, 5.0]]);
        let u = Point::new(&[5.3, 5.0]);
        let v = Point::new(&[5.3, 5.4]);
        let m = Model::strauss(2.0, 1.0, 0.5).unwrap();
        assert_eq!(m.log_papangelou_multi(&[u], &x).unwrap(), m.log_papangelou(&u, &x));
        let p = Model::poisson(2.0, 1.0).unwrap();
        assert!((p.log_papangelou_multi(&[u, v], &x).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        let empty = PointPattern::empty(*x.window(), 1.0);
        let got = m.log_papangelou_multi(&[u, v], &empty).unwrap();
        assert!((got - (2.0 * 2f64.ln() + 0.5f64.ln())).abs() < 1e-12);
        assert!(m.log_papangelou_multi(&[u, u], &x).is_err());
        assert!(m.log_papangelou_multi(&[], &x).is_err());
    }

    #[test]
    fn triplets_counts_new_triangles() {
        let m = Model::triplets(1.0, 1.0, 0.5).unwrap();
        // v, w close to each other and to u; z close to u only
        let x = pattern(&[[5.4, 5.0], [5.0, 5.4], [4.1, 4.8]]);
        let got = m.log_papangelou(&Point::new(&[5.0, 5.0]), &x);
        assert!((got - 0.5f64.ln()).abs() < 1e-12);
    }
}
