//! Lifetime extraction from persistence diagrams.
//!
//! The partition model consumes the sorted positive lifetimes of one homology
//! level. Features dying exactly at the maximum radius are censored by the
//! filtration, not real deaths, so they are removed and counted separately;
//! for level 0 that count re-enters the Betti estimate as a correction.

use crate::error::{Error, Result};
use crate::homology::PersistenceDiagram;

/// Sorted positive lifetimes of one homology level, their logs, and the
/// number of features removed because they die at the maximum radius.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeSample {
    h: usize,
    lifetimes: Vec<f64>,
    logs: Vec<f64>,
    removed_at_max: usize,
}

impl LifetimeSample {
    /// Validates and sorts raw lifetimes. Requires at least 2 values, all
    /// positive and finite.
    pub fn new(h: usize, mut lifetimes: Vec<f64>, removed_at_max: usize) -> Result<Self> {
        if lifetimes.len() < 2 {
            return Err(Error::DegenerateSample(lifetimes.len()));
        }
        if lifetimes.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidConfig(
                "lifetimes must be positive and finite".into(),
            ));
        }
        lifetimes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let logs = lifetimes.iter().map(|l| l.ln()).collect();
        Ok(Self {
            h,
            lifetimes,
            logs,
            removed_at_max,
        })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn n(&self) -> usize {
        self.lifetimes.len()
    }

    /// Ascending lifetimes.
    pub fn lifetimes(&self) -> &[f64] {
        &self.lifetimes
    }

    /// Natural logs of the lifetimes, same order.
    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn removed_at_max(&self) -> usize {
        self.removed_at_max
    }
}

/// Extracts the level-`h` lifetime sample from a diagram: `death - birth` for
/// every feature with `death < eps_max`, ascending. Features with
/// `death == eps_max` are counted in `removed_at_max`; zero lifetimes (which
/// the persistence computation already discards) are dropped.
pub fn extract_lifetimes(diag: &PersistenceDiagram, h: usize) -> Result<LifetimeSample> {
    if !diag.has_level(h) {
        return Err(Error::MissingLevel {
            level: h,
            max: diag.num_levels().saturating_sub(1),
        });
    }
    let mut lifetimes = Vec::new();
    let mut removed = 0usize;
    for &(birth, death) in diag.features(h) {
        if death >= diag.eps_max() {
            removed += 1;
        } else if death > birth {
            lifetimes.push(death - birth);
        }
    }
    LifetimeSample::new(h, lifetimes, removed)
}
