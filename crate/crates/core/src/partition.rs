//! No-gaps random partitions over ordered lifetimes.
//!
//! A partition of the sorted sample satisfies the no-gaps condition when every
//! block is a run of consecutive indices, so it is encoded here as a
//! [`Composition`]: the ordered block sizes `(n_1, ..., n_k)`. The prior over
//! compositions is the Dirichlet-process partition distribution restricted to
//! this space, and each block carries a log-normal kernel whose `(mu, tau)`
//! parameters are integrated out against a conjugate normal-gamma prior. All
//! probability arithmetic is done in natural-log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered block sizes `(n_1, ..., n_k)` of a no-gaps partition.
///
/// Block `j` (0-based) covers items `offset_j .. offset_j + sizes[j]` of the
/// sorted sample, where `offset_j` is the sum of the earlier sizes. Encoding
/// partitions this way makes the no-gaps constraint structural and sidesteps
/// label switching: two compositions are equal iff the partitions are.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Composition {
    sizes: Vec<usize>,
}

impl Composition {
    /// Builds a composition from explicit block sizes. Every size must be
    /// positive and the sequence nonempty.
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidComposition);
        }
        Ok(Self { sizes })
    }

    /// The one-block composition `(n)`.
    pub fn single_block(n: usize) -> Self {
        assert!(n >= 1);
        Self { sizes: vec![n] }
    }

    /// The all-singletons composition `(1, 1, ..., 1)`.
    pub fn singletons(n: usize) -> Self {
        assert!(n >= 1);
        Self { sizes: vec![1; n] }
    }

    /// Total number of items.
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// 0-based half-open item ranges of the blocks, in order.
    pub fn block_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.sizes.iter().scan(0usize, |offset, &s| {
            let lo = *offset;
            *offset += s;
            Some(lo..*offset)
        })
    }

    /// 0-based offsets of the items that start a block (the first is always 0).
    pub fn block_starts(&self) -> impl Iterator<Item = usize> + '_ {
        self.block_ranges().map(|r| r.start)
    }
}

/// Hyperparameters of the conjugate normal-gamma prior for a block's
/// log-normal kernel: `mu | tau ~ N(mean, var_scale / tau)` and
/// `tau ~ Gamma(shape, rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalGammaParams {
    pub mean: f64,
    pub var_scale: f64,
    pub shape: f64,
    pub rate: f64,
}

impl NormalGammaParams {
    pub fn new(mean: f64, var_scale: f64, shape: f64, rate: f64) -> Result<Self> {
        if !mean.is_finite() || !(var_scale > 0.0) || !(shape > 0.0) || !(rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "normal-gamma parameters must satisfy var_scale, shape, rate > 0; \
                 got ({mean}, {var_scale}, {shape}, {rate})"
            )));
        }
        Ok(Self {
            mean,
            var_scale,
            shape,
            rate,
        })
    }
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log prior probability of a composition under the Dirichlet-process
/// partition distribution restricted to the no-gaps space, with total mass
/// `theta`.
///
/// The multinomial coefficient and the product of block-size gamma factors
/// collapse to `ln n! - sum_j ln n_j`, which keeps every intermediate bounded.
pub fn log_eppf(comp: &Composition, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "total mass must be positive, got {theta}"
        )));
    }
    let n = comp.n() as f64;
    let k = comp.k() as f64;
    let sum_ln_sizes: f64 = comp.sizes().iter().map(|&s| (s as f64).ln()).sum();
    Ok(ln_gamma(n + 1.0) - sum_ln_sizes + k * theta.ln() - ln_gamma(k + 1.0)
        - (ln_gamma(theta + n) - ln_gamma(theta)))
}

/// Sufficient statistics of one block of log-lifetimes.
#[derive(Debug, Clone, Copy)]
pub struct BlockStats {
    /// Block size.
    pub len: usize,
    /// Block mean of the observations.
    pub mean: f64,
    /// Sum of squared deviations from the block mean.
    pub ssd: f64,
}

impl BlockStats {
    /// Two-pass statistics of a raw slice.
    pub fn from_slice(y: &[f64]) -> Self {
        let len = y.len();
        assert!(len >= 1, "block must be nonempty");
        let mean = y.iter().sum::<f64>() / len as f64;
        let ssd = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        Self { len, mean, ssd }
    }
}

/// Log marginal likelihood of a single block, with the log-normal kernel
/// parameters integrated out against the normal-gamma prior:
///
/// `b^a Gamma(n/2 + a) / ((2 pi)^{n/2} (n c + 1)^{1/2} Gamma(a))
///   * (ssd/2 + n (mean - m)^2 / (2 (n c + 1)) + b)^{-(n/2 + a)}`
///
/// evaluated in log space.
pub fn block_log_marginal(stats: BlockStats, ng: &NormalGammaParams) -> f64 {
    let n = stats.len as f64;
    let scale = n * ng.var_scale + 1.0;
    let dev = stats.mean - ng.mean;
    // Guard tiny negative ssd from cancellation in prefix-sum callers.
    let ssd = stats.ssd.max(0.0);
    let tail = ssd / 2.0 + n * dev * dev / (2.0 * scale) + ng.rate;
    ng.shape * ng.rate.ln() + ln_gamma(n / 2.0 + ng.shape)
        - (n / 2.0) * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * scale.ln()
        - ln_gamma(ng.shape)
        - (n / 2.0 + ng.shape) * tail.ln()
}

/// Log marginal likelihood of the whole sample under a composition: the
/// product over blocks of [`block_log_marginal`], each block seeing its slice
/// of the sorted log-lifetimes.
pub fn log_marginal_likelihood(
    y: &[f64],
    comp: &Composition,
    ng: &NormalGammaParams,
) -> Result<f64> {
    if y.len() != comp.n() {
        return Err(Error::LengthMismatch {
            data: y.len(),
            composition: comp.n(),
        });
    }
    Ok(comp
        .block_ranges()
        .map(|r| block_log_marginal(BlockStats::from_slice(&y[r]), ng))
        .sum())
}

/// Unnormalized log posterior of a composition: prior times marginal
/// likelihood, in log space.
pub fn log_posterior(
    comp: &Composition,
    y: &[f64],
    ng: &NormalGammaParams,
    theta: f64,
) -> Result<f64> {
    Ok(log_eppf(comp, theta)? + log_marginal_likelihood(y, comp, ng)?)
}
