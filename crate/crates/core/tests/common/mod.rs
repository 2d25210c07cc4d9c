//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here deliberately avoids the library's optimized code paths:
//! simplices come from subset enumeration, reduction runs on a dense bit
//! matrix, partition posteriors come from full enumeration, and integrals
//! from adaptive Simpson quadrature on the defining integrands.

#![allow(dead_code)]

use std::collections::HashMap;

use itertools::Itertools;

use bettibayes::cloud::PointCloud;
use bettibayes::homology::PersistenceDiagram;
use bettibayes::partition::{log_posterior, Composition, NormalGammaParams};

// ---------------------------------------------------------------------------
// Persistence oracle: subset enumeration + dense GF(2) reduction.

/// Dense bit column.
#[derive(Clone)]
struct BitColumn {
    words: Vec<u64>,
}

impl BitColumn {
    fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn xor(&mut self, other: &BitColumn) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn highest_set(&self) -> Option<usize> {
        for (w, &word) in self.words.iter().enumerate().rev() {
            if word != 0 {
                return Some(w * 64 + 63 - word.leading_zeros() as usize);
            }
        }
        None
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

/// Persistence diagram computed from scratch: every subset of at most
/// `max_dim + 1` vertices whose half-diameter fits under `eps_max`, sorted by
/// (value, dimension, lexicographic vertices), reduced as a dense boundary
/// matrix. Zero-persistence pairs are dropped and unpaired creators below
/// `max_dim` die at `eps_max`.
pub fn oracle_rips_diagram(cloud: &PointCloud, eps_max: f64, max_dim: usize) -> PersistenceDiagram {
    let n = cloud.len();
    let mut simplices: Vec<(Vec<usize>, f64)> = Vec::new();
    for size in 1..=(max_dim + 1) {
        for comb in (0..n).combinations(size) {
            let mut value = 0.0f64;
            for pair in comb.iter().combinations(2) {
                value = value.max(cloud.distance(*pair[0], *pair[1]) / 2.0);
            }
            if value <= eps_max {
                simplices.push((comb, value));
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap()
            .then(a.0.len().cmp(&b.0.len()))
            .then_with(|| a.0.cmp(&b.0))
    });

    let m = simplices.len();
    let index: HashMap<&[usize], usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (v.as_slice(), i))
        .collect();

    let mut cols: Vec<BitColumn> = Vec::with_capacity(m);
    for (verts, _) in &simplices {
        let mut col = BitColumn::zeros(m);
        if verts.len() > 1 {
            for drop in 0..verts.len() {
                let face: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != drop)
                    .map(|(_, &v)| v)
                    .collect();
                col.set(index[face.as_slice()]);
            }
        }
        cols.push(col);
    }

    let mut owner: Vec<Option<usize>> = vec![None; m];
    for j in 0..m {
        while let Some(low) = cols[j].highest_set() {
            match owner[low] {
                Some(o) => {
                    let other = cols[o].clone();
                    cols[j].xor(&other);
                }
                None => {
                    owner[low] = Some(j);
                    break;
                }
            }
        }
    }

    let mut destroyed = vec![false; m];
    let mut levels: Vec<Vec<(f64, f64)>> = vec![Vec::new(); max_dim.max(1)];
    for j in 0..m {
        if let Some(low) = cols[j].highest_set() {
            destroyed[low] = true;
            let (birth, death) = (simplices[low].1, simplices[j].1);
            if birth != death {
                levels[simplices[low].0.len() - 1].push((birth, death));
            }
        }
    }
    for i in 0..m {
        if cols[i].is_empty() && !destroyed[i] {
            let dim = simplices[i].0.len() - 1;
            if dim < max_dim {
                levels[dim].push((simplices[i].1, eps_max));
            }
        }
    }
    PersistenceDiagram::new(eps_max, levels).sorted()
}

// ---------------------------------------------------------------------------
// Partition-space enumeration.

/// Every composition of `n`, one per subset of the `n - 1` cut positions.
pub fn all_compositions(n: usize) -> Vec<Composition> {
    assert!(n >= 1 && n <= 25);
    let mut out = Vec::with_capacity(1usize << (n - 1));
    for mask in 0u64..(1 << (n - 1)) {
        let mut sizes = Vec::new();
        let mut run = 1usize;
        for cut in 0..(n - 1) {
            if mask & (1 << cut) != 0 {
                sizes.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        sizes.push(run);
        out.push(Composition::new(sizes).unwrap());
    }
    out
}

/// Exact posterior over all compositions at fixed total mass.
pub fn enumerated_posterior(
    y: &[f64],
    ng: &NormalGammaParams,
    theta: f64,
) -> Vec<(Composition, f64)> {
    let comps = all_compositions(y.len());
    let logs: Vec<f64> = comps
        .iter()
        .map(|c| log_posterior(c, y, ng, theta).unwrap())
        .collect();
    normalize_log_weights(comps, logs)
}

/// Exact posterior with the total mass integrated out against its gamma
/// prior, by quadrature of the prior-weighted partition probability.
pub fn enumerated_posterior_theta_marginal(
    y: &[f64],
    ng: &NormalGammaParams,
    alpha: f64,
    beta: f64,
) -> Vec<(Composition, f64)> {
    use bettibayes::partition::{log_eppf, log_marginal_likelihood};
    let comps = all_compositions(y.len());
    let logs: Vec<f64> = comps
        .iter()
        .map(|c| {
            let log_prior_mass = log_quadrature(
                &|theta: f64| {
                    log_eppf(c, theta).unwrap() + (alpha - 1.0) * theta.ln() - beta * theta
                },
                1e-10,
                (60.0 + 10.0 * (alpha + c.k() as f64)) / beta,
                1e-10,
            );
            log_prior_mass + log_marginal_likelihood(y, c, ng).unwrap()
        })
        .collect();
    normalize_log_weights(comps, logs)
}

fn normalize_log_weights(
    comps: Vec<Composition>,
    logs: Vec<f64>,
) -> Vec<(Composition, f64)> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    comps
        .into_iter()
        .zip(logs)
        .map(|(c, l)| (c, (l - max).exp() / z))
        .collect()
}

/// Per-item block-start marginals of an enumerated posterior (0-based items).
pub fn start_marginals(posterior: &[(Composition, f64)]) -> Vec<f64> {
    let n = posterior[0].0.n();
    let mut marginals = vec![0.0; n];
    for (comp, p) in posterior {
        for start in comp.block_starts() {
            marginals[start] += p;
        }
    }
    marginals
}

/// Total variation distance between an empirical count map and an enumerated
/// distribution.
pub fn total_variation(
    counts: &HashMap<Composition, u64>,
    total: u64,
    exact: &[(Composition, f64)],
) -> f64 {
    let mut tv = 0.0;
    for (comp, p) in exact {
        let emp = counts.get(comp).copied().unwrap_or(0) as f64 / total as f64;
        tv += (emp - p).abs();
    }
    // Any empirical mass outside the enumeration would be a bug, but count it.
    let exact_keys: std::collections::HashSet<_> = exact.iter().map(|(c, _)| c).collect();
    for (comp, &count) in counts {
        if !exact_keys.contains(comp) {
            tv += count as f64 / total as f64;
        }
    }
    tv / 2.0
}

// ---------------------------------------------------------------------------
// Quadrature.

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Integrates `exp(log_f)` over `[a, b]` in a numerically safe way, returning
/// the log of the integral. The integrand is rescaled by its coarse-grid
/// maximum before adaptive refinement, and the interval is pre-split so
/// narrow bumps cannot hide from the initial Simpson stencil.
pub fn log_quadrature(log_f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    const COARSE: usize = 512;
    let step = (b - a) / COARSE as f64;
    let mut shift = f64::NEG_INFINITY;
    for i in 0..=COARSE {
        shift = shift.max(log_f(a + step * i as f64));
    }
    assert!(shift.is_finite(), "integrand is zero everywhere on [{a}, {b}]");
    let f = |x: f64| {
        let v = log_f(x) - shift;
        if v < -745.0 {
            0.0
        } else {
            v.exp()
        }
    };
    let mut total = 0.0;
    for i in 0..32 {
        let lo = a + (b - a) * i as f64 / 32.0;
        let hi = a + (b - a) * (i + 1) as f64 / 32.0;
        total += adaptive_simpson(&f, lo, hi, rel_tol * (b - a) / 32.0);
    }
    shift + total.ln()
}

/// Log marginal likelihood of one block by direct 2-d quadrature of the
/// defining integral: the product of normal densities integrated against the
/// normal-gamma prior. The inner (location) integral is centered where the
/// Gaussian-in-mu integrand peaks; the outer runs over log precision.
pub fn quadrature_log_marginal(y: &[f64], ng: &NormalGammaParams) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    // Completing the square in mu: the integrand is a Gaussian centered at
    // the precision-weighted combination, with precision tau * (n c + 1) / c.
    let mu_center = (n * ng.var_scale * mean + ng.mean) / (n * ng.var_scale + 1.0);

    let ln_two_pi = (2.0 * std::f64::consts::PI).ln();
    let log_joint = |mu: f64, tau: f64| -> f64 {
        let mut acc = 0.0;
        for &v in y {
            acc += 0.5 * (tau.ln() - ln_two_pi) - 0.5 * tau * (v - mu) * (v - mu);
        }
        // Normal-gamma prior density at (mu, tau).
        acc += 0.5 * (tau.ln() - ln_two_pi - ng.var_scale.ln())
            - 0.5 * tau * (mu - ng.mean) * (mu - ng.mean) / ng.var_scale;
        acc += ng.shape * ng.rate.ln() - libm::lgamma(ng.shape) + (ng.shape - 1.0) * tau.ln()
            - ng.rate * tau;
        acc
    };

    let tau_hi = (80.0 + 20.0 * (ng.shape + n / 2.0)) / ng.rate;
    let log_outer = |t: f64| -> f64 {
        let tau = t.exp();
        let width = (ng.var_scale / (tau * (n * ng.var_scale + 1.0))).sqrt();
        let inner = log_quadrature(
            &|mu: f64| log_joint(mu, tau),
            mu_center - 40.0 * width,
            mu_center + 40.0 * width,
            1e-12,
        );
        // d tau = tau d t
        inner + t
    };
    log_quadrature(&log_outer, (1e-9f64).ln(), tau_hi.ln(), 1e-11)
}

// ---------------------------------------------------------------------------
// Diagram helpers.

/// Asserts exact multiset equality of two diagrams (same eps_max, same sorted
/// features per level).
pub fn assert_diagrams_equal(a: &PersistenceDiagram, b: &PersistenceDiagram, context: &str) {
    let (a, b) = (a.sorted(), b.sorted());
    assert_eq!(a.eps_max(), b.eps_max(), "{context}: eps_max differs");
    let levels = a.num_levels().max(b.num_levels());
    for h in 0..levels {
        assert_eq!(
            a.features(h),
            b.features(h),
            "{context}: level {h} differs"
        );
    }
}

/// Asserts per-level feature equality within a tolerance, for comparisons
/// across rigid motions.
pub fn assert_diagrams_close(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    tol: f64,
    context: &str,
) {
    let (a, b) = (a.sorted(), b.sorted());
    let levels = a.num_levels().max(b.num_levels());
    for h in 0..levels {
        let (fa, fb) = (a.features(h), b.features(h));
        assert_eq!(fa.len(), fb.len(), "{context}: level {h} count differs");
        for (x, y) in fa.iter().zip(fb) {
            assert!(
                (x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol,
                "{context}: level {h} feature {x:?} vs {y:?}"
            );
        }
    }
}
