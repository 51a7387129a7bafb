//! Divisive hierarchical k-means index tree over feature-matrix columns.

use std::collections::VecDeque;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_BRANCHING: usize = 4;
const MAX_LLOYD_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KmeansOutcome {
    Assignments(Vec<usize>),
    /// Fewer distinct points than requested clusters.
    Indivisible,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub(crate) fn count_distinct(points: &[&[f64]]) -> usize {
    let mut distinct: Vec<&[f64]> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| q == p) {
            distinct.push(p);
        }
    }
    distinct.len()
}

/// Seeded k-means++ followed by Lloyd iterations.
///
/// Ties between equidistant centroids go to the lowest index. A cluster that
/// empties out takes over the point farthest from its own centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> KmeansOutcome {
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    kmeans_refs(&refs, k, seed)
}

fn kmeans_refs(points: &[&[f64]], k: usize, seed: u64) -> KmeansOutcome {
    assert!(k >= 2, "k-means needs k >= 2");
    assert!(!points.is_empty(), "k-means needs points");
    if count_distinct(points) < k {
        return KmeansOutcome::Indivisible;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();

    let mut centroids: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 {
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
        }
        let c = points[pick.expect("distinct points remain")].to_vec();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centroids.push(c);
    }

    let dim = points[0].len();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (c, _) = nearest(p, &centroids);
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        repair_empty(points, &mut assign, &centroids, k);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    repair_empty(points, &mut assign, &centroids, k);
    KmeansOutcome::Assignments(assign)
}

fn repair_empty(points: &[&[f64]], assign: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assign.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[assign[i]] > 1)
            .map(|i| (i, sq_dist(points[i], &centroids[assign[i]])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        match far {
            Some((i, _)) => assign[i] = empty,
            None => return,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Column indices, ascending.
    pub members: Vec<usize>,
    pub depth: usize,
    /// Leaf that k-means could not split (all points identical).
    pub indivisible: bool,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Node ids are breadth-first, so every child id is larger than its parent's.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
    pub k: usize,
}

impl IndexTree {
    pub fn single_leaf(n: usize, k: usize) -> Self {
        Self {
            nodes: vec![TreeNode {
                id: 0,
                parent: None,
                children: vec![],
                members: (0..n).collect(),
                depth: 0,
                indivisible: false,
            }],
            root: 0,
            k,
        }
    }

    pub fn n_columns(&self) -> usize {
        self.nodes[self.root].members.len()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Node ids ordered so that every child precedes its parent.
    pub fn bottom_up(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().rev()
    }

    /// Checks the partition and stop-rule invariants, returning the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let roots: Vec<_> = self.nodes.iter().filter(|n| n.parent.is_none()).collect();
        if roots.len() != 1 || roots[0].id != self.root {
            return Err(format!("expected exactly one root, found {}", roots.len()));
        }
        let n = self.n_columns();
        if self.nodes[self.root].members != (0..n).collect::<Vec<_>>() {
            return Err("root does not hold every column".into());
        }
        for node in &self.nodes {
            if self.nodes[node.id].id != node.id {
                return Err(format!("node stored at wrong position: {}", node.id));
            }
            if node.children.len() > self.k {
                return Err(format!("node {} has {} children", node.id, node.children.len()));
            }
            if node.is_leaf() {
                if node.members.len() >= self.k && !node.indivisible {
                    return Err(format!(
                        "leaf {} has {} members and is divisible",
                        node.id,
                        node.members.len()
                    ));
                }
                continue;
            }
            let mut union: Vec<usize> = Vec::new();
            for &c in &node.children {
                let child = &self.nodes[c];
                if child.parent != Some(node.id) || child.depth != node.depth + 1 {
                    return Err(format!("child {c} is not linked to {}", node.id));
                }
                if child.members.is_empty() {
                    return Err(format!("child {c} is empty"));
                }
                union.extend_from_slice(&child.members);
            }
            let before = union.len();
            union.sort_unstable();
            union.dedup();
            if union.len() != before {
                return Err(format!("children of {} overlap", node.id));
            }
            if union != node.members {
                return Err(format!("children of {} do not partition it", node.id));
            }
        }
        Ok(())
    }
}

fn node_seed(seed: u64, node: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ (node as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Recursively splits clusters with k-means until each has fewer than `k` points
/// or cannot be split.
pub fn build_index_tree(points: &[Vec<f64>], k: usize, seed: u64) -> IndexTree {
    assert!(k >= 2, "branching factor must be at least 2");
    let mut tree = IndexTree::single_leaf(points.len(), k);
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let members = tree.nodes[id].members.clone();
        if members.len() < k {
            continue;
        }
        let pts: Vec<&[f64]> = members.iter().map(|&m| points[m].as_slice()).collect();
        let distinct = count_distinct(&pts);
        if distinct < 2 {
            tree.nodes[id].indivisible = true;
            continue;
        }
        let k_eff = k.min(distinct);
        let assign = match kmeans_refs(&pts, k_eff, node_seed(seed, id)) {
            KmeansOutcome::Assignments(a) => a,
            KmeansOutcome::Indivisible => {
                tree.nodes[id].indivisible = true;
                continue;
            }
        };
        let depth = tree.nodes[id].depth + 1;
        for c in 0..k_eff {
            let child_members: Vec<usize> = members
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(&m, _)| m)
                .collect();
            if child_members.is_empty() {
                continue;
            }
            let child = tree.nodes.len();
            tree.nodes.push(TreeNode {
                id: child,
                parent: Some(id),
                children: vec![],
                members: child_members,
                depth,
                indivisible: false,
            });
            tree.nodes[id].children.push(child);
            queue.push_back(child);
        }
    }
    let n = points.len().max(1) as f64;
    let bound = (n.ln() / (k as f64).ln()).ceil() as usize + 2;
    if tree.depth() > bound {
        debug!("index tree depth {} exceeds sanity bound {bound}", tree.depth());
    }
    tree
}

/// Clustering vector for proposal `j`: `[row / height, col / width, features...]`.
pub fn clustering_points(
    features: &nalgebra::DMatrix<f64>,
    coords: &[(usize, usize)],
    height: usize,
    width: usize,
) -> Vec<Vec<f64>> {
    coords
        .iter()
        .enumerate()
        .map(|(j, &(r, c))| {
            let mut v = Vec::with_capacity(features.nrows() + 2);
            v.push(r as f64 / height as f64);
            v.push(c as f64 / width as f64);
            v.extend(features.column(j).iter());
            v
        })
        .collect()
}
