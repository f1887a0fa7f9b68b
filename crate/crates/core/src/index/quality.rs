//! Tree quality metrics: leaf depth, compactness and overlap.

use serde::{Deserialize, Serialize};

use super::{CctIndex, NodeId, RadiusKind};
use crate::error::{CctError, Result};
use crate::frechet::DistanceMode;
use crate::session::{PairOracle, PairSession};

pub const DEFAULT_ORACLE_CAP: usize = 5000;
pub const HISTOGRAM_BINS: usize = 10;

/// Size cap for exhaustive exact checks; `CCT_ORACLE_CAP` overrides the default.
pub fn oracle_cap() -> usize {
    std::env::var("CCT_ORACLE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_CAP)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub leaves: usize,
    pub nodes: usize,
    pub mean_leaf_depth: f64,
    /// Mean leaf depth over `ceil(log2 |S|)` (at least 1).
    pub avg_leaf_depth_normalized: f64,
    pub compactness: f64,
    /// Mean over leaves of covering internal nodes per leaf depth; 1 is minimal.
    pub overlap: f64,
    /// Node-leaf pairs whose coverage the bounds could not settle.
    pub overlap_undecided: usize,
    pub oracle: bool,
    /// Equal-width bins over `[0, max internal radius]`.
    pub radius_histogram: Vec<usize>,
    pub max_radius: f64,
    pub upper_bound_fraction: f64,
}

impl CctIndex {
    pub fn quality(&self, use_oracle: bool) -> Result<QualityReport> {
        let n = self.len();
        if use_oracle {
            let cap = oracle_cap();
            if n > cap {
                return Err(CctError::OracleCapExceeded { size: n, cap });
            }
        }
        let Some(root) = self.root else {
            return Err(CctError::EmptyIndex);
        };

        let mut depth = vec![0usize; self.nodes.len()];
        let mut order = vec![root];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &c in &self.nodes[v].children {
                depth[c] = depth[v] + 1;
                order.push(c);
            }
            i += 1;
        }
        let leaves: Vec<NodeId> = order.iter().copied().filter(|&v| self.nodes[v].is_leaf()).collect();
        let internal: Vec<NodeId> = order.iter().copied().filter(|&v| !self.nodes[v].is_leaf()).collect();

        let mean_leaf_depth = leaves.iter().map(|&v| depth[v] as f64).sum::<f64>() / leaves.len() as f64;
        let log_n = (n as f64).log2().ceil().max(1.0);

        let ratios: Vec<f64> = internal
            .iter()
            .filter_map(|&v| {
                let node = &self.nodes[v];
                let parent = node.parent?;
                if node.radius <= 0.0 {
                    return None;
                }
                let pr = self.nodes[parent].radius;
                Some(if pr <= 0.0 { 1.0 } else { (node.radius / pr).clamp(0.0, 1.0) })
            })
            .collect();
        let compactness = if ratios.is_empty() {
            0.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        };

        let (overlap, overlap_undecided) = self.overlap(&leaves, &internal, &depth, use_oracle);

        let max_radius = internal.iter().map(|&v| self.nodes[v].radius).fold(0.0, f64::max);
        let mut radius_histogram = vec![0usize; HISTOGRAM_BINS];
        for &v in &internal {
            let r = self.nodes[v].radius;
            let bin = if max_radius > 0.0 {
                ((r / max_radius * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            radius_histogram[bin] += 1;
        }
        let upper = internal
            .iter()
            .filter(|&&v| self.nodes[v].radius_kind == RadiusKind::UpperBound)
            .count();
        let upper_bound_fraction = if internal.is_empty() {
            0.0
        } else {
            upper as f64 / internal.len() as f64
        };

        Ok(QualityReport {
            leaves: leaves.len(),
            nodes: self.nodes.len(),
            mean_leaf_depth,
            avg_leaf_depth_normalized: mean_leaf_depth / log_n,
            compactness,
            overlap,
            overlap_undecided,
            oracle: use_oracle,
            radius_histogram,
            max_radius,
            upper_bound_fraction,
        })
    }

    fn overlap(&self, leaves: &[NodeId], internal: &[NodeId], depth: &[usize], use_oracle: bool) -> (f64, usize) {
        let mut sess = PairSession::new(&self.store, DistanceMode::Auto);
        let mut undecided = 0usize;
        let mut ratios = Vec::new();
        for &leaf in leaves {
            if depth[leaf] == 0 {
                continue;
            }
            let x = self.nodes[leaf].center;
            let mut ancestors = Vec::new();
            let mut cur = self.nodes[leaf].parent;
            while let Some(a) = cur {
                ancestors.push(a);
                cur = self.nodes[a].parent;
            }
            let mut covering = ancestors.len();
            for &v in internal {
                if ancestors.contains(&v) {
                    continue;
                }
                let node = &self.nodes[v];
                let (c, rad) = (node.center, node.radius);
                let covers = if c == x || sess.ub(c, x) <= rad {
                    Some(true)
                } else if sess.lb(c, x) > rad || sess.lb_fd(c, x, rad) {
                    Some(false)
                } else if use_oracle {
                    Some(sess.dfd(c, x, rad))
                } else {
                    None
                };
                match covers {
                    Some(true) => covering += 1,
                    Some(false) => {}
                    None => undecided += 1,
                }
            }
            ratios.push(covering as f64 / depth[leaf] as f64);
            sess.forget_bounds();
        }
        let overlap = if ratios.is_empty() {
            0.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        };
        (overlap, undecided)
    }
}
