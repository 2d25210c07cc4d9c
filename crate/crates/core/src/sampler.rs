//! Split-merge MCMC over the no-gaps partition space.
//!
//! The proposal kernel: when the current partition has one block a split is
//! forced, when every block is a singleton a merge is forced, otherwise the
//! move type is a fair coin. A split picks one of the blocks of size >= 2
//! uniformly and a cut position inside it uniformly; a merge picks one of the
//! adjacent pairs uniformly. The Metropolis-Hastings ratio uses the exact
//! forward/reverse proposal probabilities, forced moves included.
//!
//! The total-mass parameter gets the classic beta-augmented two-gamma update
//! once per iteration, conditioning only on the current number of blocks.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{
    block_log_marginal, ln_gamma, BlockStats, Composition, NormalGammaParams,
};

/// Gamma prior (shape, rate) for the total-mass parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0) || !(rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma prior parameters must be positive, got ({shape}, {rate})"
            )));
        }
        Ok(Self { shape, rate })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    /// Number of retained samples.
    pub samples: usize,
    /// Keep every `thin`-th post-burn-in iteration.
    pub thin: usize,
    pub prior: NormalGammaParams,
    pub theta_prior: GammaPrior,
    pub theta_init: f64,
    pub seed: u64,
}

impl ChainConfig {
    fn validate(&self) -> Result<()> {
        if self.samples < 1 || self.thin < 1 {
            return Err(Error::InvalidConfig(
                "samples and thin must be at least 1".into(),
            ));
        }
        if !(self.theta_init > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "theta_init must be positive, got {}",
                self.theta_init
            )));
        }
        NormalGammaParams::new(
            self.prior.mean,
            self.prior.var_scale,
            self.prior.shape,
            self.prior.rate,
        )?;
        GammaPrior::new(self.theta_prior.shape, self.theta_prior.rate)?;
        Ok(())
    }
}

/// Current partition, total mass, and the cached unnormalized log posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub comp: Composition,
    pub theta: f64,
    pub log_post: f64,
}

/// Retained-sample summaries of one chain run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Occurrence count of every visited composition among retained samples.
    pub composition_counts: HashMap<Composition, u64>,
    /// Per item (0-based; item 0 is the smallest lifetime), the number of
    /// retained samples in which it starts a block. Entry 0 always equals the
    /// number of retained samples.
    pub start_counts: Vec<u64>,
    pub theta_trace: Vec<f64>,
    /// Accepted split-merge proposals over all iterations, burn-in included.
    pub acceptance_rate: f64,
}

impl ChainOutput {
    /// Number of retained samples.
    pub fn samples(&self) -> u64 {
        self.composition_counts.values().sum()
    }
}

const LN_HALF: f64 = -std::f64::consts::LN_2;

/// Incremental chain state: prefix sums give O(1) block statistics, and each
/// move touches only the affected blocks' likelihood terms.
struct Engine {
    n: usize,
    center: f64,
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
    ng: NormalGammaParams,
    theta: f64,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    block_lml: Vec<f64>,
    lml_total: f64,
    sum_ln_sizes: f64,
    log_post: f64,
}

impl Engine {
    fn new(y: &[f64], ng: NormalGammaParams, comp: &Composition, theta: f64) -> Self {
        let n = y.len();
        debug_assert_eq!(n, comp.n());
        // Centering the prefix sums keeps the sum-of-squares subtraction
        // well conditioned when lifetimes span many orders of magnitude.
        let center = y.iter().sum::<f64>() / n as f64;
        let mut prefix = Vec::with_capacity(n + 1);
        let mut prefix_sq = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        prefix_sq.push(0.0);
        for &v in y {
            let c = v - center;
            prefix.push(prefix.last().unwrap() + c);
            prefix_sq.push(prefix_sq.last().unwrap() + c * c);
        }

        let sizes: Vec<usize> = comp.sizes().to_vec();
        let offsets: Vec<usize> = comp.block_starts().collect();
        let mut engine = Self {
            n,
            center,
            prefix,
            prefix_sq,
            ng,
            theta,
            sizes,
            offsets,
            block_lml: Vec::new(),
            lml_total: 0.0,
            sum_ln_sizes: 0.0,
            log_post: 0.0,
        };
        engine.block_lml = (0..engine.sizes.len())
            .map(|j| {
                let lo = engine.offsets[j];
                block_log_marginal(engine.stats(lo, lo + engine.sizes[j]), &engine.ng)
            })
            .collect();
        engine.lml_total = engine.block_lml.iter().sum();
        engine.sum_ln_sizes = engine.sizes.iter().map(|&s| (s as f64).ln()).sum();
        engine.log_post = engine.eppf() + engine.lml_total;
        engine
    }

    fn stats(&self, lo: usize, hi: usize) -> BlockStats {
        let len = hi - lo;
        let sum = self.prefix[hi] - self.prefix[lo];
        let sum_sq = self.prefix_sq[hi] - self.prefix_sq[lo];
        let mean_c = sum / len as f64;
        BlockStats {
            len,
            mean: self.center + mean_c,
            ssd: sum_sq - sum * mean_c,
        }
    }

    fn k(&self) -> usize {
        self.sizes.len()
    }

    fn eppf(&self) -> f64 {
        let n = self.n as f64;
        let k = self.k() as f64;
        ln_gamma(n + 1.0) - self.sum_ln_sizes + k * self.theta.ln() - ln_gamma(k + 1.0)
            - (ln_gamma(self.theta + n) - ln_gamma(self.theta))
    }

    fn splittable_count(&self) -> usize {
        self.sizes.iter().filter(|&&s| s >= 2).count()
    }

    fn set_theta(&mut self, theta: f64) {
        let n = self.n as f64;
        let k = self.k() as f64;
        self.log_post += k * (theta.ln() - self.theta.ln())
            + (ln_gamma(self.theta + n) - ln_gamma(self.theta))
            - (ln_gamma(theta + n) - ln_gamma(theta));
        self.theta = theta;
    }

    fn composition(&self) -> Composition {
        Composition::new(self.sizes.clone()).expect("engine sizes are positive")
    }

    /// One split-merge proposal; returns whether it was accepted.
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let k = self.k();
        let n = self.n;
        if n == 1 {
            return false;
        }

        let split = if k == 1 {
            true
        } else if k == n {
            false
        } else {
            rng.random::<bool>()
        };
        let ln_fwd_move = if k == 1 || k == n { 0.0 } else { LN_HALF };

        if split {
            let k_split = self.splittable_count();
            let pick = rng.random_range(0..k_split);
            let idx = self
                .sizes
                .iter()
                .enumerate()
                .filter(|&(_, &s)| s >= 2)
                .nth(pick)
                .map(|(i, _)| i)
                .expect("splittable block exists");
            let m = self.sizes[idx];
            let cut = 1 + rng.random_range(0..m - 1);
            let lo = self.offsets[idx];

            let lml_left = block_log_marginal(self.stats(lo, lo + cut), &self.ng);
            let lml_right = block_log_marginal(self.stats(lo + cut, lo + m), &self.ng);
            let d_lml = lml_left + lml_right - self.block_lml[idx];
            let d_eppf = self.theta.ln() - ((k + 1) as f64).ln() + (m as f64).ln()
                - (cut as f64).ln()
                - ((m - cut) as f64).ln();

            let ln_fwd = ln_fwd_move - (k_split as f64).ln() - ((m - 1) as f64).ln();
            let ln_rev_move = if k + 1 == n { 0.0 } else { LN_HALF };
            let ln_rev = ln_rev_move - (k as f64).ln();

            if accept(rng, d_eppf + d_lml + ln_rev - ln_fwd) {
                self.sizes[idx] = cut;
                self.sizes.insert(idx + 1, m - cut);
                self.offsets.insert(idx + 1, lo + cut);
                self.block_lml[idx] = lml_left;
                self.block_lml.insert(idx + 1, lml_right);
                self.lml_total += d_lml;
                self.sum_ln_sizes +=
                    (cut as f64).ln() + ((m - cut) as f64).ln() - (m as f64).ln();
                self.log_post += d_eppf + d_lml;
                true
            } else {
                false
            }
        } else {
            let pair = rng.random_range(0..k - 1);
            let (n_a, n_b) = (self.sizes[pair], self.sizes[pair + 1]);
            let m = n_a + n_b;
            let lo = self.offsets[pair];

            let lml_merged = block_log_marginal(self.stats(lo, lo + m), &self.ng);
            let d_lml = lml_merged - self.block_lml[pair] - self.block_lml[pair + 1];
            let d_eppf = -self.theta.ln() + (k as f64).ln() + (n_a as f64).ln()
                + (n_b as f64).ln()
                - (m as f64).ln();

            let ln_fwd = ln_fwd_move - ((k - 1) as f64).ln();
            let ln_rev_move = if k - 1 == 1 { 0.0 } else { LN_HALF };
            let k_split_new =
                self.splittable_count() - usize::from(n_a >= 2) - usize::from(n_b >= 2) + 1;
            let ln_rev = ln_rev_move - (k_split_new as f64).ln() - ((m - 1) as f64).ln();

            if accept(rng, d_eppf + d_lml + ln_rev - ln_fwd) {
                self.sizes[pair] = m;
                self.sizes.remove(pair + 1);
                self.offsets.remove(pair + 1);
                self.block_lml[pair] = lml_merged;
                self.block_lml.remove(pair + 1);
                self.lml_total += d_lml;
                self.sum_ln_sizes +=
                    (m as f64).ln() - (n_a as f64).ln() - (n_b as f64).ln();
                self.log_post += d_eppf + d_lml;
                true
            } else {
                false
            }
        }
    }
}

fn accept<R: Rng + ?Sized>(rng: &mut R, ln_ratio: f64) -> bool {
    ln_ratio >= 0.0 || rng.random::<f64>().ln() < ln_ratio
}

/// One Metropolis-Hastings split-merge move from `state`. The returned
/// state's `log_post` is consistent with its composition and total mass.
pub fn split_merge_step<R: Rng + ?Sized>(
    state: &ChainState,
    y: &[f64],
    ng: &NormalGammaParams,
    rng: &mut R,
) -> Result<ChainState> {
    if y.len() != state.comp.n() {
        return Err(Error::LengthMismatch {
            data: y.len(),
            composition: state.comp.n(),
        });
    }
    let mut engine = Engine::new(y, *ng, &state.comp, state.theta);
    engine.step(rng);
    Ok(ChainState {
        comp: engine.composition(),
        theta: engine.theta,
        log_post: engine.log_post,
    })
}

/// Draws a new total mass given the current block count `k`: with
/// `eta ~ Beta(theta + 1, n)`, the conditional is the two-component gamma
/// mixture `q Ga(shape + k, rate - ln eta) + (1 - q) Ga(shape + k - 1,
/// rate - ln eta)` with odds `q/(1-q) = (shape + k - 1) / (n (rate - ln eta))`.
pub fn update_theta<R: Rng + ?Sized>(
    theta: f64,
    k: usize,
    n: usize,
    shape: f64,
    rate: f64,
    rng: &mut R,
) -> f64 {
    assert!(theta > 0.0 && k >= 1 && n >= 1 && shape > 0.0 && rate > 0.0);
    let eta: f64 = Beta::new(theta + 1.0, n as f64)
        .expect("valid beta parameters")
        .sample(rng);
    let eta = eta.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16);
    let rate_post = rate - eta.ln();
    let odds = (shape + k as f64 - 1.0) / (n as f64 * rate_post);
    let q = odds / (1.0 + odds);
    let shape_post = if rng.random::<f64>() < q {
        shape + k as f64
    } else {
        shape + k as f64 - 1.0
    };
    let draw = Gamma::new(shape_post, 1.0 / rate_post)
        .expect("valid gamma parameters")
        .sample(rng);
    draw.max(f64::MIN_POSITIVE)
}

/// Runs one chain on sorted log-lifetimes: starts from the single-block
/// partition, alternates one split-merge move and one total-mass update per
/// iteration, discards `burn_in` iterations, then retains every `thin`-th of
/// the next `samples * thin`.
pub fn run_chain(y: &[f64], cfg: &ChainConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    let n = y.len();
    if n < 2 {
        return Err(Error::DegenerateSample(n));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("log-lifetimes must be finite".into()));
    }
    if y.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(
            "log-lifetimes must be nondecreasing".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut engine = Engine::new(y, cfg.prior, &Composition::single_block(n), cfg.theta_init);

    let total_iters = cfg.burn_in + cfg.samples * cfg.thin;
    let mut accepted = 0u64;
    let mut composition_counts: HashMap<Composition, u64> = HashMap::new();
    let mut start_counts = vec![0u64; n];
    let mut theta_trace = Vec::with_capacity(cfg.samples);

    for iter in 0..total_iters {
        if engine.step(&mut rng) {
            accepted += 1;
        }
        let theta = update_theta(
            engine.theta,
            engine.k(),
            n,
            cfg.theta_prior.shape,
            cfg.theta_prior.rate,
            &mut rng,
        );
        engine.set_theta(theta);

        if iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0 {
            *composition_counts.entry(engine.composition()).or_insert(0) += 1;
            for &offset in &engine.offsets {
                start_counts[offset] += 1;
            }
            theta_trace.push(engine.theta);
        }
    }

    Ok(ChainOutput {
        composition_counts,
        start_counts,
        theta_trace,
        acceptance_rate: accepted as f64 / total_iters as f64,
    })
}
