//! Posterior summaries and Betti estimates.
//!
//! Two point estimates come out of a chain run. The first reads block sizes
//! off the posterior modal partition, walking right-to-left while adjacent
//! mixture components barely overlap. The second thresholds the marginal
//! probability that each lifetime starts a block. Level 0 adds the count of
//! features censored at the maximum radius, since the component that never
//! dies is removed before modeling but still counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifetimes::LifetimeSample;
use crate::partition::{Composition, NormalGammaParams};
use crate::sampler::ChainOutput;

/// Location and precision of one block's log-lifetime normal kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub mean: f64,
    pub precision: f64,
}

/// Grid size used by [`component_overlap`].
pub const OVERLAP_GRID_POINTS: usize = 100_000;

/// Most frequently retained composition and its relative frequency. Ties are
/// broken toward fewer blocks, then the lexicographically smaller sizes.
pub fn modal_partition(out: &ChainOutput) -> (Composition, f64) {
    let samples = out.samples();
    assert!(samples > 0, "chain output has no retained samples");
    let (comp, count) = out
        .composition_counts
        .iter()
        .max_by(|(ca, na), (cb, nb)| {
            na.cmp(nb)
                .then_with(|| cb.k().cmp(&ca.k()))
                .then_with(|| cb.sizes().cmp(ca.sizes()))
        })
        .expect("nonempty composition counts");
    (comp.clone(), *count as f64 / samples as f64)
}

/// Marginal probability that each lifetime starts a block, for items
/// `2 ..= n` (entry `idx` is item `idx + 2`). The first lifetime always
/// starts a block and is excluded.
pub fn start_probabilities(out: &ChainOutput) -> Vec<f64> {
    let samples = out.samples() as f64;
    out.start_counts[1..]
        .iter()
        .map(|&c| c as f64 / samples)
        .collect()
}

/// Conjugate normal-gamma update for one block of log-lifetimes.
pub fn kernel_posterior(y_block: &[f64], ng: &NormalGammaParams) -> NormalGammaParams {
    assert!(!y_block.is_empty(), "kernel posterior needs observations");
    let n = y_block.len() as f64;
    let mean = y_block.iter().sum::<f64>() / n;
    let ssd: f64 = y_block.iter().map(|v| (v - mean) * (v - mean)).sum();
    let scale = n * ng.var_scale + 1.0;
    let dev = mean - ng.mean;
    NormalGammaParams {
        mean: (n * ng.var_scale * mean + ng.mean) / scale,
        var_scale: ng.var_scale / scale,
        shape: n / 2.0 + ng.shape,
        rate: ssd / 2.0 + n * dev * dev / (2.0 * scale) + ng.rate,
    }
}

/// Posterior-mean point estimate of a block kernel: location `mean`,
/// precision `shape / rate`.
pub fn kernel_point_estimate(post: &NormalGammaParams) -> KernelParams {
    KernelParams {
        mean: post.mean,
        precision: post.shape / post.rate,
    }
}

/// Overlap of each adjacent pair of weighted mixture components under the
/// modal partition, on a custom trapezoid grid. Component `j` is the normal
/// with the block's posterior-mean kernel parameters, weighted by its share
/// `n_j / n` of the sample.
pub fn component_overlap_grid(
    modal: &Composition,
    y: &[f64],
    ng: &NormalGammaParams,
    grid_points: usize,
) -> Result<Vec<f64>> {
    if modal.k() < 2 {
        return Err(Error::InvalidConfig(
            "component overlap needs at least two blocks".into(),
        ));
    }
    if y.len() != modal.n() {
        return Err(Error::LengthMismatch {
            data: y.len(),
            composition: modal.n(),
        });
    }
    assert!(grid_points >= 2);

    let n = modal.n() as f64;
    let comps: Vec<(f64, f64, f64)> = modal
        .block_ranges()
        .map(|r| {
            let weight = r.len() as f64 / n;
            let est = kernel_point_estimate(&kernel_posterior(&y[r], ng));
            (weight, est.mean, (1.0 / est.precision).sqrt())
        })
        .collect();

    let lo_mean = comps.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let hi_mean = comps.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let max_sd = comps.iter().map(|c| c.2).fold(0.0f64, f64::max);
    let lo = lo_mean - 8.0 * max_sd;
    let hi = hi_mean + 8.0 * max_sd;
    let step = (hi - lo) / (grid_points - 1) as f64;

    let density = |(w, mean, sd): (f64, f64, f64), x: f64| {
        let z = (x - mean) / sd;
        w * (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };

    let mut overlaps = Vec::with_capacity(comps.len() - 1);
    for pair in comps.windows(2) {
        let mut acc = 0.0;
        let mut prev = density(pair[0], lo).min(density(pair[1], lo));
        for g in 1..grid_points {
            let x = lo + step * g as f64;
            let cur = density(pair[0], x).min(density(pair[1], x));
            acc += 0.5 * (prev + cur) * step;
            prev = cur;
        }
        overlaps.push(acc);
    }
    Ok(overlaps)
}

/// [`component_overlap_grid`] on the default grid.
pub fn component_overlap(
    modal: &Composition,
    y: &[f64],
    ng: &NormalGammaParams,
) -> Result<Vec<f64>> {
    component_overlap_grid(modal, y, ng, OVERLAP_GRID_POINTS)
}

/// Modal-partition Betti estimate: sum block sizes right-to-left while the
/// overlap with the left neighbor stays at or below `tau_overlap`; level 0
/// additionally counts the censored features. `None` means no topological
/// signal was detected.
pub fn beta_hat(
    modal: &Composition,
    overlaps: &[f64],
    h: usize,
    removed_at_max: usize,
    tau_overlap: f64,
) -> Option<usize> {
    debug_assert!(overlaps.len() + 1 == modal.k() || modal.k() == 1);
    let mut signal = 0usize;
    for j in (0..overlaps.len()).rev() {
        if overlaps[j] <= tau_overlap {
            signal += modal.sizes()[j + 1];
        } else {
            break;
        }
    }
    let total = signal + if h == 0 { removed_at_max } else { 0 };
    (total > 0).then_some(total)
}

/// Start-probability Betti estimate: `n - max{i >= 2 : S_i >= p0} + 1`, with
/// the same level-0 correction. `start_probs` is indexed as in
/// [`start_probabilities`]. `None` means no signal was detected.
pub fn beta_check(
    start_probs: &[f64],
    p0: f64,
    h: usize,
    removed_at_max: usize,
) -> Option<usize> {
    assert!((0.0..=1.0).contains(&p0));
    let n = start_probs.len() + 1;
    let signal = start_probs
        .iter()
        .rposition(|&s| s >= p0)
        .map(|idx| n - (idx + 2) + 1)
        .unwrap_or(0);
    let total = signal + if h == 0 { removed_at_max } else { 0 };
    (total > 0).then_some(total)
}

/// Everything the reporting layer needs from one fitted level.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub modal: Composition,
    pub modal_freq: f64,
    /// Start probabilities for items `2 ..= n`; see [`start_probabilities`].
    pub start_probs: Vec<f64>,
    /// Overlaps of adjacent modal components; empty when the mode has one
    /// block.
    pub overlaps: Vec<f64>,
    pub beta_hat: Option<usize>,
    pub beta_check: Option<usize>,
    /// Censored-feature count added to both estimates (level 0 only).
    pub correction: usize,
    pub p0: f64,
    pub tau_overlap: f64,
}

impl PosteriorSummary {
    /// Start probabilities as a 1-based sparse map, keeping entries at or
    /// above `min_prob`.
    pub fn sparse_start_probs(&self, min_prob: f64) -> BTreeMap<usize, f64> {
        self.start_probs
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s >= min_prob)
            .map(|(idx, &s)| (idx + 2, s))
            .collect()
    }
}

/// Full posterior summary of one chain run over one lifetime sample.
pub fn summarize(
    out: &ChainOutput,
    sample: &LifetimeSample,
    ng: &NormalGammaParams,
    p0: f64,
    tau_overlap: f64,
) -> Result<PosteriorSummary> {
    let (modal, modal_freq) = modal_partition(out);
    let start_probs = start_probabilities(out);
    let overlaps = if modal.k() >= 2 {
        component_overlap(&modal, sample.logs(), ng)?
    } else {
        Vec::new()
    };
    let h = sample.h();
    let removed = sample.removed_at_max();
    let hat = beta_hat(&modal, &overlaps, h, removed, tau_overlap);
    let check = beta_check(&start_probs, p0, h, removed);
    Ok(PosteriorSummary {
        modal,
        modal_freq,
        start_probs,
        overlaps,
        beta_hat: hat,
        beta_check: check,
        correction: if h == 0 { removed } else { 0 },
        p0,
        tau_overlap,
    })
}
