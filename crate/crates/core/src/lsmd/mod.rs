//! Low-rank plus tree-structured sparse decomposition of proposal features.

mod decompose;
mod prox;
mod tree;

pub use decompose::{
    activity_scores, decompose, lsmd_objective, motion_prior, Decomposition, LsmdParams,
    PriorScaling,
};
pub use prox::{nuclear_norm, prox_nuclear, prox_tree_norm, svt, tree_norm, TreeWeights};
pub use tree::{
    build_index_tree, clustering_points, kmeans, IndexTree, KmeansOutcome, TreeNode,
    DEFAULT_BRANCHING,
};
