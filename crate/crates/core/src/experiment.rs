//! Replicated simulation runner.
//!
//! A config describes a grid of generator settings, a replication count, and
//! the chain/estimator settings shared by every run. Each (cell, replication)
//! runs the full pipeline — generate, persistence, lifetimes, chain,
//! summaries — and the per-cell estimation error rates land in an
//! [`ErrorTable`]. Replication `j` is seeded with `base_seed + j`, so a
//! config reproduces its table bit-exactly.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::summarize;
use crate::homology::{
    build_rips_filtration, compute_persistence, enclosing_eps_max, zero_dim_persistence,
    PersistenceDiagram,
};
use crate::io::write_summary_json;
use crate::lifetimes::extract_lifetimes;
use crate::partition::NormalGammaParams;
use crate::sampler::{run_chain, ChainConfig, GammaPrior};
use crate::synthgen::{GeneratorConfig, Shape, DEFAULT_LATTICE_RADIUS, DEFAULT_SPHERE_RADIUS};

/// Chain settings shared across replications; the per-replication seed comes
/// from the experiment's base seed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainSettings {
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub theta_init: f64,
    pub theta_prior: GammaPrior,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            samples: 5_000,
            thin: 1,
            theta_init: 1.0,
            theta_prior: GammaPrior {
                shape: 1.1,
                rate: 0.1,
            },
        }
    }
}

/// Default normal-gamma prior for the log-lifetime kernels.
pub fn default_prior() -> NormalGammaParams {
    NormalGammaParams {
        mean: 0.0,
        var_scale: 0.5,
        shape: 1.1,
        rate: 0.1,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub shape: Shape,
    /// Circle counts to sweep (circles shape).
    pub r: Vec<usize>,
    /// Sample sizes to sweep (circles shape).
    pub n: Vec<usize>,
    pub sigma: Vec<f64>,
    pub d_x: Vec<f64>,
    pub d_y: Vec<f64>,
    /// Sphere counts to sweep (fibonacci_spheres shape).
    pub n_spheres: Vec<usize>,
    pub pts_per_sphere: Vec<usize>,
    pub sphere_radius: f64,
    pub lattice_radius: f64,
    /// Replications per cell.
    pub s: usize,
    /// Homology levels to fit.
    pub levels: Vec<usize>,
    pub chain: ChainSettings,
    pub prior: NormalGammaParams,
    pub p0: f64,
    pub tau_overlap: f64,
    /// Fixed maximum radius; when absent, half the cloud diameter plus 5%.
    pub eps_max: Option<f64>,
    pub base_seed: u64,
    /// When set, per-replication summaries and the final table are written
    /// below this directory.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            shape: Shape::Circles,
            r: vec![1],
            n: vec![300],
            sigma: vec![0.0],
            d_x: vec![5.0],
            d_y: vec![5.0],
            n_spheres: vec![10],
            pts_per_sphere: vec![30],
            sphere_radius: DEFAULT_SPHERE_RADIUS,
            lattice_radius: DEFAULT_LATTICE_RADIUS,
            s: 20,
            levels: vec![0],
            chain: ChainSettings::default(),
            prior: default_prior(),
            p0: 0.3,
            tau_overlap: 0.03,
            eps_max: None,
            base_seed: 20260809,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
    }

    fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::InvalidConfig("s must be at least 1".into()));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| l > 2) {
            return Err(Error::InvalidConfig(
                "levels must be a nonempty subset of {0, 1, 2}".into(),
            ));
        }
        if let Some(eps) = self.eps_max {
            if !(eps > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "fixed eps_max must be positive, got {eps}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.p0) || !(self.tau_overlap >= 0.0) {
            return Err(Error::InvalidConfig(
                "p0 must lie in [0, 1] and tau_overlap must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Design cells: the cross product of the swept generator settings, with
    /// separations collapsed where the layout ignores them.
    fn cells(&self) -> Vec<GeneratorConfig> {
        let mut cells = Vec::new();
        match self.shape {
            Shape::Circles => {
                for &r in &self.r {
                    let d_xs: &[f64] = if r >= 2 { &self.d_x } else { &[0.0] };
                    let d_ys: &[f64] = if r >= 3 { &self.d_y } else { &[0.0] };
                    for &n in &self.n {
                        for &sigma in &self.sigma {
                            for &d_x in d_xs {
                                for &d_y in d_ys {
                                    cells.push(GeneratorConfig::circles(r, n, d_x, d_y, sigma, 0));
                                }
                            }
                        }
                    }
                }
            }
            Shape::FibonacciSpheres => {
                for &n_spheres in &self.n_spheres {
                    for &pts in &self.pts_per_sphere {
                        for &sigma in &self.sigma {
                            cells.push(GeneratorConfig::fibonacci_spheres(
                                n_spheres,
                                pts,
                                self.sphere_radius,
                                self.lattice_radius,
                                sigma,
                                0,
                            ));
                        }
                    }
                }
            }
        }
        cells
    }
}

/// True Betti number for a synthetic design at a homology level.
pub fn true_beta(gen: &GeneratorConfig, level: usize) -> usize {
    match (gen.shape, level) {
        (Shape::Circles, 0) | (Shape::Circles, 1) => gen.r,
        (Shape::Circles, _) => 0,
        (Shape::FibonacciSpheres, 0) | (Shape::FibonacciSpheres, 2) => gen.n_spheres,
        (Shape::FibonacciSpheres, _) => 0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRow {
    pub shape: Shape,
    /// Circle count, or sphere count for the lattice shape.
    pub r: usize,
    pub n: usize,
    pub sigma: f64,
    pub d_x: f64,
    pub d_y: f64,
    pub level: usize,
    pub true_beta: usize,
    pub er_hat: f64,
    pub er_check: f64,
    /// Replications whose lifetime sample was too small to model; these count
    /// as estimation errors in both rates.
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorTable {
    pub s: usize,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            w,
            "shape,r,n,sigma,d_x,d_y,level,true_beta,er_hat,er_check,failures"
        )?;
        for row in &self.rows {
            let shape = match row.shape {
                Shape::Circles => "circles",
                Shape::FibonacciSpheres => "fibonacci_spheres",
            };
            writeln!(
                w,
                "{shape},{},{},{},{},{},{},{},{},{},{}",
                row.r,
                row.n,
                row.sigma,
                row.d_x,
                row.d_y,
                row.level,
                row.true_beta,
                row.er_hat,
                row.er_check,
                row.failures
            )?;
        }
        Ok(())
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

fn cell_slug(gen: &GeneratorConfig) -> String {
    match gen.shape {
        Shape::Circles => format!(
            "circles_r{}_n{}_sig{}_dx{}_dy{}",
            gen.r, gen.n, gen.sigma, gen.d_x, gen.d_y
        ),
        Shape::FibonacciSpheres => format!(
            "spheres_{}x{}_sig{}",
            gen.n_spheres, gen.pts_per_sphere, gen.sigma
        ),
    }
}

/// Per-level outcome of one replication.
#[derive(Debug, Clone, Copy)]
struct LevelOutcome {
    hat_err: bool,
    check_err: bool,
    failed: bool,
}

fn run_replication(
    cfg: &ExperimentConfig,
    template: &GeneratorConfig,
    rep: usize,
) -> Result<Vec<LevelOutcome>> {
    let mut gen = template.clone();
    gen.seed = cfg.base_seed.wrapping_add(rep as u64);
    let cloud = gen.sample()?;
    let eps_max = cfg.eps_max.unwrap_or_else(|| enclosing_eps_max(&cloud));

    let max_level = *cfg.levels.iter().max().unwrap();
    let diag: PersistenceDiagram = if max_level == 0 {
        zero_dim_persistence(&cloud, eps_max)?
    } else {
        compute_persistence(&build_rips_filtration(&cloud, eps_max, max_level + 1)?)
    };

    let mut outcomes = Vec::with_capacity(cfg.levels.len());
    for &level in &cfg.levels {
        let truth = true_beta(&gen, level);
        let sample = match extract_lifetimes(&diag, level) {
            Ok(sample) => sample,
            Err(Error::DegenerateSample(_)) => {
                outcomes.push(LevelOutcome {
                    hat_err: true,
                    check_err: true,
                    failed: true,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let chain_cfg = ChainConfig {
            burn_in: cfg.chain.burn_in,
            samples: cfg.chain.samples,
            thin: cfg.chain.thin,
            prior: cfg.prior,
            theta_prior: cfg.chain.theta_prior,
            theta_init: cfg.chain.theta_init,
            seed: gen.seed,
        };
        let out = run_chain(sample.logs(), &chain_cfg)?;
        let summary = summarize(&out, &sample, &cfg.prior, cfg.p0, cfg.tau_overlap)?;

        if let Some(dir) = &cfg.output_dir {
            let path = dir
                .join(cell_slug(&gen))
                .join(format!("rep{rep:03}_h{level}.json"));
            write_summary_json(&summary, &path)?;
        }

        outcomes.push(LevelOutcome {
            hat_err: summary.beta_hat.unwrap_or(0) != truth,
            check_err: summary.beta_check.unwrap_or(0) != truth,
            failed: false,
        });
    }
    Ok(outcomes)
}

/// Runs every design cell for `cfg.s` replications and aggregates the
/// per-estimator error rates. Replications run in parallel; aggregation and
/// table writing are single-threaded and deterministic.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    let cells = cfg.cells();
    let mut rows = Vec::with_capacity(cells.len() * cfg.levels.len());

    for template in &cells {
        let outcomes: Vec<Vec<LevelOutcome>> = (0..cfg.s)
            .into_par_iter()
            .map(|rep| run_replication(cfg, template, rep))
            .collect::<Result<_>>()?;

        for (li, &level) in cfg.levels.iter().enumerate() {
            let hat_errs = outcomes.iter().filter(|o| o[li].hat_err).count();
            let check_errs = outcomes.iter().filter(|o| o[li].check_err).count();
            let failures = outcomes.iter().filter(|o| o[li].failed).count();
            rows.push(ErrorRow {
                shape: template.shape,
                r: match template.shape {
                    Shape::Circles => template.r,
                    Shape::FibonacciSpheres => template.n_spheres,
                },
                n: match template.shape {
                    Shape::Circles => template.n,
                    Shape::FibonacciSpheres => template.n_spheres * template.pts_per_sphere,
                },
                sigma: template.sigma,
                d_x: template.d_x,
                d_y: template.d_y,
                level,
                true_beta: true_beta(template, level),
                er_hat: hat_errs as f64 / cfg.s as f64,
                er_check: check_errs as f64 / cfg.s as f64,
                failures,
            });
        }
    }

    let table = ErrorTable { s: cfg.s, rows };
    if let Some(dir) = &cfg.output_dir {
        table.write_csv(&dir.join("error_table.csv"))?;
        table.write_json(&dir.join("error_table.json"))?;
    }
    Ok(table)
}

/// One in-process pipeline run for a single cloud: persistence, lifetimes,
/// chain, summary. Shared by the CLI and by tests that need the full path
/// without the replication machinery.
pub fn fit_single_cloud(
    cloud: &crate::cloud::PointCloud,
    level: usize,
    eps_max: Option<f64>,
    chain: &ChainConfig,
    prior: &NormalGammaParams,
    p0: f64,
    tau_overlap: f64,
) -> Result<crate::estimators::PosteriorSummary> {
    let eps = eps_max.unwrap_or_else(|| enclosing_eps_max(cloud));
    let diag = if level == 0 {
        zero_dim_persistence(cloud, eps)?
    } else {
        compute_persistence(&build_rips_filtration(cloud, eps, level + 1)?)
    };
    let sample = extract_lifetimes(&diag, level)?;
    let out = run_chain(sample.logs(), chain)?;
    summarize(&out, &sample, prior, p0, tau_overlap)
}
