//! Closed-form population quantities for the homogeneous Poisson process,
//! used as targets by the experiment harness.
//!
//! `J(r)` here is the sphere *average* of the two-point void probability,
//! so for Poisson `J(r) = exp(−β |B(o,R) ∪ B(rv,R)|)` and the kernel
//! estimator's limit is `β² J(r) Φ(r)`.

use std::f64::consts::PI;

use crate::kernels::{integrate, Kernel};

/// Surface measure of the unit sphere in `R^dim`: 2, 2π, 4π.
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {dim} not supported"),
    }
}

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    sphere_measure(dim) * radius.powi(dim as i32) / dim as f64
}

/// Volume of the intersection of two radius-`radius` balls at distance `r`.
pub fn lens_volume(dim: usize, r: f64, radius: f64) -> f64 {
    if r >= 2.0 * radius {
        return 0.0;
    }
    match dim {
        1 => 2.0 * radius - r,
        2 => {
            2.0 * radius * radius * (r / (2.0 * radius)).acos()
                - 0.5 * r * (4.0 * radius * radius - r * r).sqrt()
        }
        3 => PI * (4.0 * radius + r) * (2.0 * radius - r).powi(2) / 12.0,
        _ => panic!("dimension {dim} not supported"),
    }
}

/// `|B(o,R) ∪ B(rv,R)|`.
pub fn union_volume(dim: usize, r: f64, radius: f64) -> f64 {
    2.0 * ball_volume(dim, radius) - lens_volume(dim, r, radius)
}

/// Sphere-averaged two-point void probability of a Poisson(β) process.
pub fn poisson_j(beta: f64, r: f64, range: f64, dim: usize) -> f64 {
    (-beta * union_volume(dim, r, range)).exp()
}

/// Large-window limit of the kernel estimator for Poisson(β): `β² J(r)`.
pub fn poisson_r_hat_limit(beta: f64, r: f64, range: f64, dim: usize) -> f64 {
    beta * beta * poisson_j(beta, r, range, dim)
}

/// Exact expectation of the kernel estimator under Poisson(β) at bandwidth
/// `b`, i.e. the smoothed limit `(β²/b) ∫_0^R J(ρ) K((ρ−r)/b) dρ`.
pub fn poisson_r_hat_mean(beta: f64, r: f64, range: f64, dim: usize, kernel: &Kernel, b: f64) -> f64 {
    let s = kernel.support() * b;
    let lo = (r - s).max(0.0);
    let hi = (r + s).min(range);
    if hi <= lo {
        return 0.0;
    }
    beta * beta / b
        * integrate(lo, hi, 20_000, |rho| poisson_j(beta, rho, range, dim) * kernel.eval((rho - r) / b))
}

/// Large-window limit of `b |W⊖2R| Var R̂(r)`:
/// `2β² J(r) Φ(r) ∫K² / (σ_d r^{d−1})`.
pub fn variance_constant(beta: f64, r: f64, dim: usize, j: f64, phi: f64, kernel: &Kernel) -> f64 {
    2.0 * beta * beta * j * phi * kernel.squared_integral() / (sphere_measure(dim) * r.powi(dim as i32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_and_ball() {
        assert_eq!(sphere_measure(1), 2.0);
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-15);
        assert!((ball_volume(3, 2.0) - 32.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lens_limits() {
        for dim in 1..=3 {
            assert!((lens_volume(dim, 0.0, 1.0) - ball_volume(dim, 1.0)).abs() < 1e-12);
            assert_eq!(lens_volume(dim, 2.0, 1.0), 0.0);
            assert!((union_volume(dim, 3.0, 1.0) - 2.0 * ball_volume(dim, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn lens_matches_grid_integration() {
        // midpoint grid count of the intersection of two unit disks
        for r in [0.3, 0.6, 1.0, 1.7] {
            let n = 2000;
            let h = 4.0 / n as f64;
            let mut inside = 0usize;
            for i in 0..n {
                let x = -2.0 + (i as f64 + 0.5) * h;
                for j in 0..n {
                    let y = -2.0 + (j as f64 + 0.5) * h;
                    if x * x + y * y <= 1.0 && (x - r) * (x - r) + y * y <= 1.0 {
                        inside += 1;
                    }
                }
            }
            let area = inside as f64 * h * h;
            assert!((area - lens_volume(2, r, 1.0)).abs() < 2e-3, "r={r}: {area}");
        }
    }

    #[test]
    fn smoothed_mean_converges_to_limit() {
        let k = Kernel::epanechnikov();
        let lim = poisson_r_hat_limit(0.5, 0.6, 1.0, 2);
        let mut prev = f64::INFINITY;
        for b in [0.3, 0.15, 0.075, 0.0375] {
            let err = (poisson_r_hat_mean(0.5, 0.6, 1.0, 2, &k, b) - lim).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-5);
    }
}
