//! File formats for pipeline artifacts.
//!
//! CSV files use `.` decimals, LF line endings, and a 17-significant-digit
//! rendering that round-trips f64 exactly. Diagram and lifetime CSVs carry a
//! JSON metadata sidecar next to the data file (`foo.csv` -> `foo.meta.json`).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::estimators::PosteriorSummary;
use crate::homology::PersistenceDiagram;
use crate::lifetimes::LifetimeSample;
use crate::partition::{Composition, NormalGammaParams};
use crate::sampler::{ChainConfig, ChainOutput, GammaPrior};

/// 17 significant digits: enough to reproduce any f64 bit-exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(tok: &str, path: &Path, line: usize, what: &str) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse {what} from {tok:?}"),
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Metadata sidecar path: `foo.csv` -> `foo.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

// ---------------------------------------------------------------------------
// Point cloud CSV: header `x,y[,z]`, one point per row.

pub fn write_cloud_csv(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let header = if cloud.dim() == 2 { "x,y" } else { "x,y,z" };
    writeln!(w, "{header}")?;
    for p in cloud.points() {
        let row: Vec<String> = p.iter().map(|&c| fmt17(c)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_cloud_csv(path: &Path) -> Result<PointCloud> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let dim = match lines.next() {
        Some((_, header)) => match header?.trim() {
            "x,y" => 2,
            "x,y,z" => 3,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("expected header `x,y` or `x,y,z`, got {other:?}"),
                })
            }
        },
        None => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let mut coords = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("expected {dim} fields, got {}", fields.len()),
            });
        }
        for f in fields {
            coords.push(parse_f64(f, path, idx + 1, "coordinate")?);
        }
    }
    PointCloud::new(dim, coords)
}

// ---------------------------------------------------------------------------
// Diagram CSV: header `dim,birth,death` plus a sidecar with eps_max and the
// cloud size.

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiagramMeta {
    pub eps_max: f64,
    pub n_points: usize,
}

pub fn write_diagram_csv(diag: &PersistenceDiagram, n_points: usize, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "dim,birth,death")?;
    for (h, level) in diag.levels().iter().enumerate() {
        for &(birth, death) in level {
            writeln!(w, "{h},{},{}", fmt17(birth), fmt17(death))?;
        }
    }
    drop(w);
    let meta = DiagramMeta {
        eps_max: diag.eps_max(),
        n_points,
    };
    let mut w = create(&sidecar_path(path))?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w)?;
    Ok(())
}

/// Reads a diagram CSV and its metadata sidecar. Rows with `birth > death`,
/// negative births, deaths beyond `eps_max`, or levels above 2 are rejected
/// with their line number.
pub fn load_diagram_csv(path: &Path) -> Result<(PersistenceDiagram, DiagramMeta)> {
    let meta_path = sidecar_path(path);
    if !meta_path.exists() {
        return Err(Error::MissingMetadata(meta_path));
    }
    let meta: DiagramMeta = serde_json::from_reader(fs::File::open(&meta_path)?)?;

    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).transpose()?;
    if header.as_deref().map(str::trim) != Some("dim,birth,death") {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `dim,birth,death`".into(),
        });
    }

    let mut levels: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let h: usize = fields[0].trim().parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: format!("cannot parse level from {:?}", fields[0]),
        })?;
        if h > 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("homology level {h} out of range (0..=2)"),
            });
        }
        let birth = parse_f64(fields[1], path, lineno, "birth")?;
        let death = parse_f64(fields[2], path, lineno, "death")?;
        if !birth.is_finite() || birth < 0.0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("birth must be finite and nonnegative, got {birth}"),
            });
        }
        if !(death >= birth) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("birth {birth} exceeds death {death}"),
            });
        }
        if death > meta.eps_max {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("death {death} exceeds eps_max {}", meta.eps_max),
            });
        }
        if levels.len() <= h {
            levels.resize(h + 1, Vec::new());
        }
        levels[h].push((birth, death));
    }
    Ok((PersistenceDiagram::new(meta.eps_max, levels).sorted(), meta))
}

// ---------------------------------------------------------------------------
// Lifetime CSV: header `lifetime`, ascending, sidecar with the level and the
// removed-at-max count.

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LifetimeMeta {
    pub h: usize,
    pub removed_at_max: usize,
}

pub fn write_lifetimes_csv(sample: &LifetimeSample, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "lifetime")?;
    for &l in sample.lifetimes() {
        writeln!(w, "{}", fmt17(l))?;
    }
    drop(w);
    let meta = LifetimeMeta {
        h: sample.h(),
        removed_at_max: sample.removed_at_max(),
    };
    let mut w = create(&sidecar_path(path))?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_lifetimes_csv(path: &Path) -> Result<LifetimeSample> {
    let meta_path = sidecar_path(path);
    if !meta_path.exists() {
        return Err(Error::MissingMetadata(meta_path));
    }
    let meta: LifetimeMeta = serde_json::from_reader(fs::File::open(&meta_path)?)?;

    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).transpose()?;
    if header.as_deref().map(str::trim) != Some("lifetime") {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `lifetime`".into(),
        });
    }
    let mut values = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_f64(&line, path, idx + 1, "lifetime")?);
    }
    LifetimeSample::new(meta.h, values, meta.removed_at_max)
}

// ---------------------------------------------------------------------------
// Fit JSON: the lifetime sample, the chain configuration it was run with,
// and the retained-sample summaries.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositionCount {
    pub sizes: Vec<usize>,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRecord {
    pub h: usize,
    pub removed_at_max: usize,
    pub lifetimes: Vec<f64>,
    pub prior: NormalGammaParams,
    pub theta_prior: GammaPrior,
    pub theta_init: f64,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
    /// Sorted by descending count, then ascending sizes, for stable files.
    pub compositions: Vec<CompositionCount>,
    pub start_counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_trace: Option<Vec<f64>>,
}

impl FitRecord {
    pub fn new(
        sample: &LifetimeSample,
        cfg: &ChainConfig,
        out: &ChainOutput,
        include_trace: bool,
    ) -> Self {
        let mut compositions: Vec<CompositionCount> = out
            .composition_counts
            .iter()
            .map(|(c, &count)| CompositionCount {
                sizes: c.sizes().to_vec(),
                count,
            })
            .collect();
        compositions.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.sizes.cmp(&b.sizes)));
        Self {
            h: sample.h(),
            removed_at_max: sample.removed_at_max(),
            lifetimes: sample.lifetimes().to_vec(),
            prior: cfg.prior,
            theta_prior: cfg.theta_prior,
            theta_init: cfg.theta_init,
            burn_in: cfg.burn_in,
            samples: cfg.samples,
            thin: cfg.thin,
            seed: cfg.seed,
            acceptance_rate: out.acceptance_rate,
            compositions,
            start_counts: out.start_counts.clone(),
            theta_trace: include_trace.then(|| out.theta_trace.clone()),
        }
    }

    pub fn lifetime_sample(&self) -> Result<LifetimeSample> {
        LifetimeSample::new(self.h, self.lifetimes.clone(), self.removed_at_max)
    }

    pub fn chain_output(&self) -> Result<ChainOutput> {
        let mut composition_counts = HashMap::with_capacity(self.compositions.len());
        for cc in &self.compositions {
            composition_counts.insert(Composition::new(cc.sizes.clone())?, cc.count);
        }
        Ok(ChainOutput {
            composition_counts,
            start_counts: self.start_counts.clone(),
            theta_trace: self.theta_trace.clone().unwrap_or_default(),
            acceptance_rate: self.acceptance_rate,
        })
    }
}

pub fn write_fit_json(record: &FitRecord, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, record)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_fit_json(path: &Path) -> Result<FitRecord> {
    Ok(serde_json::from_reader(fs::File::open(path)?)?)
}

// ---------------------------------------------------------------------------
// Posterior summary JSON.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub modal_sizes: Vec<usize>,
    pub modal_freq: f64,
    pub overlaps: Vec<f64>,
    /// Sparse start probabilities: only entries at or above 0.01, keyed by
    /// the 1-based lifetime index.
    pub s: BTreeMap<usize, f64>,
    pub beta_hat: Option<usize>,
    pub beta_check: Option<usize>,
    pub correction: usize,
    pub p0: f64,
    pub tau_overlap: f64,
}

/// Sparse cutoff for serialized start probabilities.
pub const SPARSE_START_PROB_MIN: f64 = 0.01;

impl From<&PosteriorSummary> for SummaryRecord {
    fn from(summary: &PosteriorSummary) -> Self {
        Self {
            modal_sizes: summary.modal.sizes().to_vec(),
            modal_freq: summary.modal_freq,
            overlaps: summary.overlaps.clone(),
            s: summary.sparse_start_probs(SPARSE_START_PROB_MIN),
            beta_hat: summary.beta_hat,
            beta_check: summary.beta_check,
            correction: summary.correction,
            p0: summary.p0,
            tau_overlap: summary.tau_overlap,
        }
    }
}

pub fn write_summary_json(summary: &PosteriorSummary, path: &Path) -> Result<()> {
    let record = SummaryRecord::from(summary);
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &record)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_summary_json(path: &Path) -> Result<SummaryRecord> {
    Ok(serde_json::from_reader(fs::File::open(path)?)?)
}
