//! Synthetic point clouds: noisy circles and spheres on a spherical
//! Fibonacci lattice.
//!
//! Circle radius is fixed at 1, so the noise level `sigma` reads directly as
//! a fraction of the radius. Generation is a pure function of the config,
//! seed included.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circles,
    FibonacciSpheres,
}

/// Configuration for both generators; fields irrelevant to the selected
/// shape are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub shape: Shape,
    /// Number of circles (1, 2, or 3).
    pub r: usize,
    /// Total sample size for the circles shape.
    pub n: usize,
    /// Horizontal separation between circle centers.
    pub d_x: f64,
    /// Vertical separation for the three-circle layout.
    pub d_y: f64,
    /// Standard deviation of the isotropic Gaussian perturbation (0 = none).
    pub sigma: f64,
    pub n_spheres: usize,
    pub pts_per_sphere: usize,
    pub sphere_radius: f64,
    /// Radius of the lattice the sphere centers sit on.
    pub lattice_radius: f64,
    pub seed: u64,
}

pub const DEFAULT_SPHERE_RADIUS: f64 = 1.0;
pub const DEFAULT_LATTICE_RADIUS: f64 = 5.0;

impl GeneratorConfig {
    pub fn circles(r: usize, n: usize, d_x: f64, d_y: f64, sigma: f64, seed: u64) -> Self {
        Self {
            shape: Shape::Circles,
            r,
            n,
            d_x,
            d_y,
            sigma,
            n_spheres: 0,
            pts_per_sphere: 0,
            sphere_radius: DEFAULT_SPHERE_RADIUS,
            lattice_radius: DEFAULT_LATTICE_RADIUS,
            seed,
        }
    }

    pub fn fibonacci_spheres(
        n_spheres: usize,
        pts_per_sphere: usize,
        sphere_radius: f64,
        lattice_radius: f64,
        sigma: f64,
        seed: u64,
    ) -> Self {
        Self {
            shape: Shape::FibonacciSpheres,
            r: 0,
            n: n_spheres * pts_per_sphere,
            d_x: 0.0,
            d_y: 0.0,
            sigma,
            n_spheres,
            pts_per_sphere,
            sphere_radius,
            lattice_radius,
            seed,
        }
    }

    pub fn sample(&self) -> Result<PointCloud> {
        match self.shape {
            Shape::Circles => sample_circles(self),
            Shape::FibonacciSpheres => sample_fibonacci_spheres(self),
        }
    }
}

/// Unit-radius circle centers for the 1-, 2-, and 3-circle layouts.
fn circle_centers(r: usize, d_x: f64, d_y: f64) -> Vec<[f64; 2]> {
    match r {
        1 => vec![[0.0, 0.0]],
        2 => vec![[0.0, 0.0], [d_x, 0.0]],
        3 => vec![[0.0, 0.0], [d_x, 0.0], [d_x / 2.0, d_y]],
        _ => unreachable!("r validated earlier"),
    }
}

/// Samples `cfg.n` points uniformly from `cfg.r` unit circles, optionally
/// perturbed by isotropic Gaussian noise. Points are allocated per circle as
/// evenly as possible, remainder to the earlier circles.
pub fn sample_circles(cfg: &GeneratorConfig) -> Result<PointCloud> {
    if cfg.shape != Shape::Circles {
        return Err(Error::InvalidConfig("generator shape is not circles".into()));
    }
    if !(1..=3).contains(&cfg.r) {
        return Err(Error::InvalidConfig(format!(
            "number of circles must be 1, 2, or 3, got {}",
            cfg.r
        )));
    }
    if cfg.n < cfg.r {
        return Err(Error::InvalidConfig(format!(
            "sample size {} is smaller than the number of circles {}",
            cfg.n, cfg.r
        )));
    }
    if !(cfg.sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be nonnegative, got {}",
            cfg.sigma
        )));
    }
    if cfg.r >= 2 && !(cfg.d_x > 0.0) {
        return Err(Error::InvalidConfig(
            "horizontal separation d_x must be positive for r >= 2".into(),
        ));
    }
    if cfg.r == 3 && !(cfg.d_y > 0.0) {
        return Err(Error::InvalidConfig(
            "vertical separation d_y must be positive for r = 3".into(),
        ));
    }

    let centers = circle_centers(cfg.r, cfg.d_x, cfg.d_y);
    let base = cfg.n / cfg.r;
    let rem = cfg.n % cfg.r;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut coords = Vec::with_capacity(cfg.n * 2);
    for (c, center) in centers.iter().enumerate() {
        let count = base + usize::from(c < rem);
        for _ in 0..count {
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let mut x = center[0] + angle.cos();
            let mut y = center[1] + angle.sin();
            if cfg.sigma > 0.0 {
                let zx: f64 = rng.sample(StandardNormal);
                let zy: f64 = rng.sample(StandardNormal);
                x += cfg.sigma * zx;
                y += cfg.sigma * zy;
            }
            coords.push(x);
            coords.push(y);
        }
    }
    PointCloud::new(2, coords)
}

/// Centers of `n` points of the spherical Fibonacci lattice on a sphere of
/// radius `radius`: `z_i = 1 - (2i+1)/n`, azimuth `2 pi i / golden`.
pub fn fibonacci_lattice(n: usize, radius: f64) -> Vec<[f64; 3]> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let azimuth = std::f64::consts::TAU * i as f64 / golden;
            [
                radius * rho * azimuth.cos(),
                radius * rho * azimuth.sin(),
                radius * z,
            ]
        })
        .collect()
}

/// Samples `pts_per_sphere` points uniformly from each of `n_spheres`
/// spheres centered on a spherical Fibonacci lattice. Uniformity comes from
/// normalized Gaussian triples; optional noise is added afterwards.
pub fn sample_fibonacci_spheres(cfg: &GeneratorConfig) -> Result<PointCloud> {
    if cfg.shape != Shape::FibonacciSpheres {
        return Err(Error::InvalidConfig(
            "generator shape is not fibonacci_spheres".into(),
        ));
    }
    if cfg.n_spheres < 1 || cfg.pts_per_sphere < 1 {
        return Err(Error::InvalidConfig(
            "n_spheres and pts_per_sphere must be at least 1".into(),
        ));
    }
    if !(cfg.sphere_radius > 0.0) || !(cfg.lattice_radius > 0.0) {
        return Err(Error::InvalidConfig(
            "sphere_radius and lattice_radius must be positive".into(),
        ));
    }
    if !(cfg.sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be nonnegative, got {}",
            cfg.sigma
        )));
    }

    let centers = fibonacci_lattice(cfg.n_spheres, cfg.lattice_radius);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut coords = Vec::with_capacity(cfg.n_spheres * cfg.pts_per_sphere * 3);
    for center in &centers {
        for _ in 0..cfg.pts_per_sphere {
            let dir = loop {
                let g = [
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ];
                let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                if norm > 1e-12 {
                    break [g[0] / norm, g[1] / norm, g[2] / norm];
                }
            };
            let mut p = [
                center[0] + cfg.sphere_radius * dir[0],
                center[1] + cfg.sphere_radius * dir[1],
                center[2] + cfg.sphere_radius * dir[2],
            ];
            if cfg.sigma > 0.0 {
                for coord in &mut p {
                    let z: f64 = rng.sample(StandardNormal);
                    *coord += cfg.sigma * z;
                }
            }
            coords.extend_from_slice(&p);
        }
    }
    PointCloud::new(3, coords)
}
