//! Vietoris-Rips persistent homology up to level 2.
//!
//! The filtration parameter is half the pairwise distance: an edge enters the
//! complex at `eps = d(x, y) / 2`, and a general simplex at half the diameter
//! of its vertex set. Persistence pairs come from the standard left-to-right
//! boundary-matrix reduction over GF(2); connected components alone can be
//! read off a minimum spanning tree instead, which [`zero_dim_persistence`]
//! does in `O(n^2)` without building the complex.

use std::collections::HashMap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// One simplex of the filtration: strictly increasing vertex indices plus the
/// radius at which it enters.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// A Rips filtration: simplices sorted by (value, dimension, lexicographic
/// vertices), so every face precedes its cofaces. `max_dim` is the dimension
/// the filtration was built for, even when no simplex reaches it.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub simplices: Vec<Simplex>,
    pub eps_max: f64,
    pub max_dim: usize,
}

/// Persistence diagram: per homology level, the multiset of (birth, death)
/// radii. Essential classes carry `death == eps_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    eps_max: f64,
    levels: Vec<Vec<(f64, f64)>>,
}

impl PersistenceDiagram {
    pub fn new(eps_max: f64, levels: Vec<Vec<(f64, f64)>>) -> Self {
        Self { eps_max, levels }
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    /// Number of levels carried by the diagram (levels may be empty).
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn has_level(&self, h: usize) -> bool {
        h < self.levels.len()
    }

    pub fn features(&self, h: usize) -> &[(f64, f64)] {
        self.levels.get(h).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn levels(&self) -> &[Vec<(f64, f64)>] {
        &self.levels
    }

    /// Features of every level sorted within level; useful for multiset
    /// comparisons in tests and for stable file output.
    pub fn sorted(&self) -> PersistenceDiagram {
        let mut levels = self.levels.clone();
        for level in &mut levels {
            level.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        PersistenceDiagram {
            eps_max: self.eps_max,
            levels,
        }
    }
}

/// Default maximum radius: half the cloud's diameter with 5% headroom, so
/// the complex eventually becomes connected and level 0 keeps exactly one
/// essential class.
pub fn enclosing_eps_max(cloud: &PointCloud) -> f64 {
    (1.05 * cloud.diameter() / 2.0).max(1e-9)
}

fn half_distance_matrix(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    let mut half = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cloud.distance(i, j) / 2.0;
            half[i * n + j] = d;
            half[j * n + i] = d;
        }
    }
    half
}

/// Builds the Rips filtration of `cloud` containing every simplex of
/// dimension `<= max_dim` whose half-diameter is `<= eps_max`.
pub fn build_rips_filtration(
    cloud: &PointCloud,
    eps_max: f64,
    max_dim: usize,
) -> Result<Filtration> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(eps_max > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "eps_max must be positive, got {eps_max}"
        )));
    }
    if !(1..=3).contains(&max_dim) {
        return Err(Error::InvalidConfig(format!(
            "max_dim must be 1, 2, or 3, got {max_dim}"
        )));
    }

    let n = cloud.len();
    let half = half_distance_matrix(cloud);
    let hd = |i: usize, j: usize| half[i * n + j];

    let mut simplices: Vec<Simplex> = (0..n)
        .map(|v| Simplex {
            vertices: vec![v],
            value: 0.0,
        })
        .collect();

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if hd(i, j) <= eps_max {
                edges.push((i, j));
                simplices.push(Simplex {
                    vertices: vec![i, j],
                    value: hd(i, j),
                });
            }
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    if max_dim >= 2 {
        for &(i, j) in &edges {
            for k in (j + 1)..n {
                if hd(i, k) <= eps_max && hd(j, k) <= eps_max {
                    triangles.push([i, j, k]);
                    simplices.push(Simplex {
                        vertices: vec![i, j, k],
                        value: hd(i, j).max(hd(i, k)).max(hd(j, k)),
                    });
                }
            }
        }
    }

    if max_dim >= 3 {
        for &[i, j, k] in &triangles {
            for l in (k + 1)..n {
                if hd(i, l) <= eps_max && hd(j, l) <= eps_max && hd(k, l) <= eps_max {
                    let value = hd(i, j)
                        .max(hd(i, k))
                        .max(hd(i, l))
                        .max(hd(j, k))
                        .max(hd(j, l))
                        .max(hd(k, l));
                    simplices.push(Simplex {
                        vertices: vec![i, j, k, l],
                        value,
                    });
                }
            }
        }
    }

    simplices.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap()
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then_with(|| a.vertices.cmp(&b.vertices))
    });

    Ok(Filtration {
        simplices,
        eps_max,
        max_dim,
    })
}

/// Outcome of the GF(2) column reduction: persistence pairs as filtration
/// indices, plus the creators that were never destroyed.
pub(crate) struct Reduction {
    pub pairs: Vec<(usize, usize)>,
    pub essential: Vec<usize>,
}

pub(crate) fn reduce_filtration(filt: &Filtration) -> Reduction {
    let m = filt.simplices.len();
    let mut index_of: HashMap<&[usize], usize> = HashMap::with_capacity(m);
    for (i, s) in filt.simplices.iter().enumerate() {
        index_of.insert(s.vertices.as_slice(), i);
    }

    // pivot_owner[i] = reduced column whose lowest entry is i
    let mut pivot_owner: Vec<Option<usize>> = vec![None; m];
    let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut pairs = Vec::new();
    let mut is_destroyed = vec![false; m];

    for (j, simplex) in filt.simplices.iter().enumerate() {
        let mut col: Vec<usize> = if simplex.dim() == 0 {
            Vec::new()
        } else {
            let mut faces: Vec<usize> = (0..simplex.vertices.len())
                .map(|drop| {
                    let face: Vec<usize> = simplex
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|&(pos, _)| pos != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    *index_of
                        .get(face.as_slice())
                        .expect("face missing from filtration")
                })
                .collect();
            faces.sort_unstable();
            faces
        };

        while let Some(&low) = col.last() {
            match pivot_owner[low] {
                Some(owner) => col = xor_sorted(&col, &reduced[owner]),
                None => break,
            }
        }

        if let Some(&low) = col.last() {
            pivot_owner[low] = Some(j);
            pairs.push((low, j));
            is_destroyed[low] = true;
        }
        reduced.push(col);
    }

    let essential = (0..m)
        .filter(|&i| reduced[i].is_empty() && !is_destroyed[i])
        .collect();
    Reduction { pairs, essential }
}

/// Symmetric difference of two ascending index lists.
fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Persistence diagram of a filtration built with `max_dim`, reporting levels
/// `0 ..= max_dim - 1`. Zero-persistence pairs are discarded; unpaired
/// creators below `max_dim` become essential classes dying at `eps_max`.
pub fn compute_persistence(filt: &Filtration) -> PersistenceDiagram {
    let max_dim = filt.max_dim.max(1);
    let mut levels = vec![Vec::new(); max_dim];

    let reduction = reduce_filtration(filt);
    for (creator, destroyer) in reduction.pairs {
        let birth = filt.simplices[creator].value;
        let death = filt.simplices[destroyer].value;
        if birth == death {
            continue;
        }
        let h = filt.simplices[creator].dim();
        debug_assert!(h < max_dim);
        levels[h].push((birth, death));
    }
    for creator in reduction.essential {
        let h = filt.simplices[creator].dim();
        if h < max_dim {
            levels[h].push((filt.simplices[creator].value, filt.eps_max));
        }
    }

    PersistenceDiagram::new(filt.eps_max, levels).sorted()
}

/// Level-0 diagram via single linkage: each minimum-spanning-tree edge of
/// length `l <= 2 * eps_max` kills a component at `l / 2`; whatever survives
/// is essential. Agrees with level 0 of [`compute_persistence`].
pub fn zero_dim_persistence(cloud: &PointCloud, eps_max: f64) -> Result<PersistenceDiagram> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(eps_max > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "eps_max must be positive, got {eps_max}"
        )));
    }

    let n = cloud.len();
    let mut features = Vec::with_capacity(n);
    let mut survivors = 1usize;

    if n > 1 {
        // Prim's algorithm on the complete graph; O(n^2) time, O(n) space.
        let mut in_tree = vec![false; n];
        let mut best = vec![f64::INFINITY; n];
        in_tree[0] = true;
        for j in 1..n {
            best[j] = cloud.distance(0, j);
        }
        for _ in 1..n {
            let mut next = usize::MAX;
            let mut next_d = f64::INFINITY;
            for j in 0..n {
                if !in_tree[j] && best[j] < next_d {
                    next = j;
                    next_d = best[j];
                }
            }
            in_tree[next] = true;
            if next_d > 2.0 * eps_max {
                survivors += 1;
            } else if next_d > 0.0 {
                features.push((0.0, next_d / 2.0));
            }
            for j in 0..n {
                if !in_tree[j] {
                    let d = cloud.distance(next, j);
                    if d < best[j] {
                        best[j] = d;
                    }
                }
            }
        }
    }

    features.extend(std::iter::repeat((0.0, eps_max)).take(survivors));
    Ok(PersistenceDiagram::new(eps_max, vec![features]).sorted())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> PointCloud {
        PointCloud::from_points(2, vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap()
    }

    fn unit_square() -> PointCloud {
        PointCloud::from_points(
            2,
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn two_point_filtration() {
        let filt = build_rips_filtration(&two_points(), 2.0, 1).unwrap();
        assert_eq!(filt.simplices.len(), 3);
        assert_eq!(filt.simplices[0].vertices, vec![0]);
        assert_eq!(filt.simplices[1].vertices, vec![1]);
        assert_eq!(filt.simplices[2].vertices, vec![0, 1]);
        assert_eq!(filt.simplices[2].value, 1.0);
    }

    #[test]
    fn eps_zero_rejected_but_tiny_allowed() {
        let cloud = two_points();
        assert!(build_rips_filtration(&cloud, 0.0, 1).is_err());
        // Far below the edge threshold: vertices only.
        let filt = build_rips_filtration(&cloud, 1e-9, 1).unwrap();
        assert_eq!(filt.simplices.len(), 2);
        assert!(filt.simplices.iter().all(|s| s.dim() == 0));
    }

    #[test]
    fn unit_square_filtration_counts() {
        let filt = build_rips_filtration(&unit_square(), 1.0, 2).unwrap();
        let by_dim = |d: usize| filt.simplices.iter().filter(|s| s.dim() == d).count();
        assert_eq!(by_dim(0), 4);
        assert_eq!(by_dim(1), 6);
        assert_eq!(by_dim(2), 4);
        let sides = filt
            .simplices
            .iter()
            .filter(|s| s.dim() == 1 && (s.value - 0.5).abs() < 1e-15)
            .count();
        assert_eq!(sides, 4);
        let diag = 0.5f64 * 2.0f64.sqrt();
        let diagonals = filt
            .simplices
            .iter()
            .filter(|s| s.dim() == 1 && (s.value - diag).abs() < 1e-15)
            .count();
        assert_eq!(diagonals, 2);
        assert!(filt
            .simplices
            .iter()
            .filter(|s| s.dim() == 2)
            .all(|s| (s.value - diag).abs() < 1e-15));
    }

    #[test]
    fn faces_precede_cofaces() {
        let filt = build_rips_filtration(&unit_square(), 1.0, 3).unwrap();
        let pos: HashMap<Vec<usize>, usize> = filt
            .simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.clone(), i))
            .collect();
        for (i, s) in filt.simplices.iter().enumerate() {
            if s.dim() == 0 {
                continue;
            }
            for drop in 0..s.vertices.len() {
                let face: Vec<usize> = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != drop)
                    .map(|(_, &v)| v)
                    .collect();
                assert!(pos[&face] < i, "face {face:?} after coface {:?}", s.vertices);
            }
        }
    }

    #[test]
    fn two_point_diagram() {
        let filt = build_rips_filtration(&two_points(), 2.0, 1).unwrap();
        let diag = compute_persistence(&filt);
        assert_eq!(diag.features(0), &[(0.0, 1.0), (0.0, 2.0)]);
        assert_eq!(diag.num_levels(), 1);
    }

    #[test]
    fn unit_square_diagram() {
        let filt = build_rips_filtration(&unit_square(), 1.0, 2).unwrap();
        let diag = compute_persistence(&filt);
        let d = 0.5f64 * 2.0f64.sqrt();
        assert_eq!(
            diag.features(0),
            &[(0.0, 0.5), (0.0, 0.5), (0.0, 0.5), (0.0, 1.0)]
        );
        assert_eq!(diag.features(1), &[(0.5, d)]);
    }

    #[test]
    fn equilateral_triangle_diagram() {
        let s = 1.5f64;
        let cloud = PointCloud::from_points(
            2,
            vec![
                vec![0.0, 0.0],
                vec![s, 0.0],
                vec![s / 2.0, s * 3.0f64.sqrt() / 2.0],
            ],
        )
        .unwrap();
        let filt = build_rips_filtration(&cloud, 2.0, 2).unwrap();
        let diag = compute_persistence(&filt);
        let half = s / 2.0;
        assert_eq!(diag.features(0).len(), 3);
        assert!((diag.features(0)[0].1 - half).abs() < 1e-12);
        assert!((diag.features(0)[1].1 - half).abs() < 1e-12);
        assert_eq!(diag.features(0)[2], (0.0, 2.0));
        assert!(diag.features(1).is_empty());
    }

    #[test]
    fn zero_dim_matches_fixtures() {
        let diag = zero_dim_persistence(&two_points(), 2.0).unwrap();
        assert_eq!(diag.features(0), &[(0.0, 1.0), (0.0, 2.0)]);

        let single = PointCloud::from_points(2, vec![vec![3.0, -1.0]]).unwrap();
        let diag = zero_dim_persistence(&single, 0.7).unwrap();
        assert_eq!(diag.features(0), &[(0.0, 0.7)]);
    }

    #[test]
    fn zero_dim_counts_split_components() {
        // Two pairs far apart with eps_max too small to join them.
        let cloud = PointCloud::from_points(
            2,
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![100.0, 0.0],
                vec![101.0, 0.0],
            ],
        )
        .unwrap();
        let diag = zero_dim_persistence(&cloud, 1.0).unwrap();
        assert_eq!(
            diag.features(0),
            &[(0.0, 0.5), (0.0, 0.5), (0.0, 1.0), (0.0, 1.0)]
        );
    }

    #[test]
    fn level_zero_feature_count_equals_points() {
        let cloud = PointCloud::from_points(
            2,
            (0..9)
                .map(|i| vec![(i % 3) as f64, (i / 3) as f64 * 1.3])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let filt = build_rips_filtration(&cloud, 3.0, 2).unwrap();
        let diag = compute_persistence(&filt);
        assert_eq!(diag.features(0).len(), cloud.len());
    }

    #[test]
    fn reduction_bookkeeping_identity() {
        let cloud = PointCloud::from_points(
            2,
            vec![
                vec![0.0, 0.0],
                vec![1.1, 0.2],
                vec![0.3, 0.9],
                vec![1.4, 1.2],
                vec![0.7, 2.1],
            ],
        )
        .unwrap();
        let filt = build_rips_filtration(&cloud, 1.5, 3).unwrap();
        let reduction = reduce_filtration(&filt);
        assert_eq!(
            2 * reduction.pairs.len() + reduction.essential.len(),
            filt.simplices.len()
        );
    }
}
