//! The Cluster Center Tree.
//!
//! Every internal node has at least two children, one of which shares its
//! center (nesting), and the radius of a node bounds the distance from its
//! center to the center of every descendant (bounding). Nodes live in an arena
//! and reference trajectories through store slots.

mod bisector;
mod build;
mod insert;
mod persist;
mod quality;

use serde::{Deserialize, Serialize};

use crate::error::{CctError, Result};
use crate::frechet::DistanceMode;
use crate::geometry::{TrajId, Trajectory, TrajectorySet};
use crate::instrument::Instrumentation;
use crate::session::PairOracle;
use crate::store::{Slot, TrajStore};

pub use bisector::{bisector_localize, Localized, Side};
pub use build::BuildOptions;
pub use insert::InsertVariant;
pub use persist::{IndexDocument, NodeRecord, FORMAT_VERSION};
pub use quality::{oracle_cap, QualityReport, DEFAULT_ORACLE_CAP};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusKind {
    Exact,
    UpperBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuildVariant {
    Exact,
    Relaxed,
    Approx,
    /// Built purely by inserts, starting from an empty index.
    Inserts,
}

impl std::str::FromStr for BuildVariant {
    type Err = CctError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "relaxed" => Ok(Self::Relaxed),
            "approx" => Ok(Self::Approx),
            "inserts" => Ok(Self::Inserts),
            _ => Err(CctError::ConfigInvalid(format!("unknown build variant {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub center: Slot,
    pub radius: f64,
    pub radius_kind: RadiusKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

impl Node {
    fn leaf(center: Slot, parent: Option<NodeId>) -> Self {
        Self {
            center,
            radius: 0.0,
            radius_kind: RadiusKind::Exact,
            parent,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixMode {
    Exact,
    UpperBoundOnly,
}

#[derive(Clone, Debug)]
pub struct CctIndex {
    store: TrajStore,
    nodes: Vec<Node>,
    root: Option<NodeId>,
    leaf_of: Vec<NodeId>,
    build_stats: Instrumentation,
    seed: u64,
    variant: BuildVariant,
    pick_order: Vec<TrajId>,
    mode: DistanceMode,
}

impl CctIndex {
    pub fn empty(seed: u64) -> Self {
        Self {
            store: TrajStore::default(),
            nodes: Vec::new(),
            root: None,
            leaf_of: Vec::new(),
            build_stats: Instrumentation::default(),
            seed,
            variant: BuildVariant::Inserts,
            pick_order: Vec::new(),
            mode: DistanceMode::Auto,
        }
    }

    pub fn build(set: TrajectorySet, variant: BuildVariant, opts: &BuildOptions) -> Result<Self> {
        match variant {
            BuildVariant::Exact => build::build_exact(set, opts),
            BuildVariant::Relaxed => build::build_relaxed(set, opts),
            BuildVariant::Approx => build::build_approx(set, opts),
            BuildVariant::Inserts => {
                let mut idx = Self::empty(opts.seed);
                idx.mode = opts.mode;
                for t in set.into_vec() {
                    idx.insert(t, InsertVariant::Exact)?;
                }
                Ok(idx)
            }
        }
    }

    pub fn build_exact(set: TrajectorySet, seed: u64) -> Result<Self> {
        Self::build(set, BuildVariant::Exact, &BuildOptions::seeded(seed))
    }

    pub fn build_relaxed(set: TrajectorySet, seed: u64) -> Result<Self> {
        Self::build(set, BuildVariant::Relaxed, &BuildOptions::seeded(seed))
    }

    pub fn build_approx(set: TrajectorySet, seed: u64) -> Result<Self> {
        Self::build(set, BuildVariant::Approx, &BuildOptions::seeded(seed))
    }

    pub fn store(&self) -> &TrajStore {
        &self.store
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.store.dim()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn center_id(&self, node: NodeId) -> TrajId {
        self.store.id(self.nodes[node].center)
    }

    pub fn trajectory(&self, id: TrajId) -> Option<&Trajectory> {
        self.store.slot(id).map(|s| self.store.traj(s))
    }

    pub fn build_stats(&self) -> &Instrumentation {
        &self.build_stats
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn variant(&self) -> BuildVariant {
        self.variant
    }

    pub fn distance_mode(&self) -> DistanceMode {
        self.mode
    }

    /// Centers of the exact construction in the order they were picked.
    pub fn pick_order(&self) -> &[TrajId] {
        &self.pick_order
    }

    pub fn leaf_of(&self, slot: Slot) -> NodeId {
        self.leaf_of[slot]
    }

    pub fn depth(&self, mut node: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[node].parent {
            node = p;
            d += 1;
        }
        d
    }

    /// Leaf center slots below `node`, in depth-first order.
    pub fn leaves_under(&self, node: NodeId) -> Vec<Slot> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            let n = &self.nodes[v];
            if n.is_leaf() {
                out.push(n.center);
            } else {
                stack.extend(n.children.iter().rev());
            }
        }
        out
    }

    fn new_node(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn set_leaf(&mut self, slot: Slot, node: NodeId) {
        if self.leaf_of.len() <= slot {
            self.leaf_of.resize(slot + 1, usize::MAX);
        }
        self.leaf_of[slot] = node;
    }

    fn make_root_leaf(&mut self, slot: Slot) -> NodeId {
        let id = self.new_node(Node::leaf(slot, None));
        self.root = Some(id);
        self.set_leaf(slot, id);
        id
    }

    /// Turns the leaf holding `existing` into an internal node with two leaf
    /// children: `existing` first, `added` second. Returns the new leaf of `added`.
    fn split_leaf(&mut self, existing: Slot, added: Slot) -> NodeId {
        let v = self.leaf_of[existing];
        let a = self.new_node(Node::leaf(existing, Some(v)));
        let b = self.new_node(Node::leaf(added, Some(v)));
        self.nodes[v].children = vec![a, b];
        self.set_leaf(existing, a);
        self.set_leaf(added, b);
        b
    }

    /// Restores bounding for the ancestors of the leaf holding `slot`.
    ///
    /// `sibling` is the center of another leaf below every ancestor, together with
    /// an upper bound on its distance to `slot`; in upper-bound mode it caps the
    /// raise through the triangle inequality.
    pub(crate) fn fix_ancestor_radius<O: PairOracle>(
        &mut self,
        oracle: &mut O,
        slot: Slot,
        mode: FixMode,
        sibling: Option<(Slot, f64)>,
    ) {
        let mut cur = self.nodes[self.leaf_of[slot]].parent;
        while let Some(a) = cur {
            let c = self.nodes[a].center;
            cur = self.nodes[a].parent;
            if c == slot {
                continue;
            }
            let rad = self.nodes[a].radius;
            match mode {
                FixMode::Exact => {
                    if oracle.ub(c, slot) <= rad {
                        continue;
                    }
                    if !oracle.lb_fd(c, slot, rad) && oracle.dfd(c, slot, rad) {
                        continue;
                    }
                    let d = oracle.df(c, slot);
                    if d > rad {
                        self.nodes[a].radius = d;
                    }
                }
                FixMode::UpperBoundOnly => {
                    let mut u = oracle.ub(c, slot);
                    if let Some((s, to_slot)) = sibling {
                        if s != slot {
                            u = u.min(rad + to_slot);
                        }
                    }
                    if u > rad {
                        self.nodes[a].radius = u;
                        self.nodes[a].radius_kind = RadiusKind::UpperBound;
                    }
                }
            }
        }
    }

    /// Structural nesting check: parent links, child counts, shared centers, and
    /// one leaf per stored trajectory.
    pub fn check_nesting(&self) -> Result<()> {
        let bad = |m: String| Err(CctError::MalformedIndex(m));
        let Some(root) = self.root else {
            return if self.store.is_empty() && self.nodes.is_empty() {
                Ok(())
            } else {
                bad("index has trajectories but no root".into())
            };
        };
        if self.nodes[root].parent.is_some() {
            return bad("root has a parent".into());
        }
        let mut seen = vec![false; self.store.len()];
        let mut visited = 0usize;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            visited += 1;
            if visited > self.nodes.len() {
                return bad("cycle in node links".into());
            }
            let n = &self.nodes[v];
            if n.center >= self.store.len() {
                return bad(format!("node {v} references a missing trajectory"));
            }
            if !(n.radius >= 0.0) {
                return bad(format!("node {v} has invalid radius {}", n.radius));
            }
            if n.is_leaf() {
                if n.radius != 0.0 {
                    return bad(format!("leaf {v} has nonzero radius"));
                }
                if std::mem::replace(&mut seen[n.center], true) {
                    return bad(format!("trajectory {} appears in two leaves", self.store.id(n.center)));
                }
                continue;
            }
            if n.children.len() < 2 {
                return bad(format!("internal node {v} has fewer than two children"));
            }
            if !n.children.iter().any(|&c| self.nodes[c].center == n.center) {
                return bad(format!("internal node {v} has no child sharing its center"));
            }
            for &c in &n.children {
                if c >= self.nodes.len() || self.nodes[c].parent != Some(v) {
                    return bad(format!("child {c} of node {v} has an inconsistent parent link"));
                }
                stack.push(c);
            }
        }
        if visited != self.nodes.len() {
            return bad("unreachable nodes".into());
        }
        if let Some(s) = seen.iter().position(|&x| !x) {
            return bad(format!("trajectory {} has no leaf", self.store.id(s)));
        }
        Ok(())
    }

    /// Pairs `(node, descendant leaf slot)` with their required bound, for checks.
    pub fn bounding_pairs(&self) -> Vec<(NodeId, Slot)> {
        let mut out = Vec::new();
        for (v, n) in self.nodes.iter().enumerate() {
            if !n.is_leaf() {
                for s in self.leaves_under(v) {
                    if s != n.center {
                        out.push((v, s));
                    }
                }
            }
        }
        out
    }

    /// Verifies bounding with exact distances. Returns the violating
    /// `(node, trajectory id, distance)` triples.
    pub fn bounding_violations_exact(&self, tol: f64) -> Vec<(NodeId, TrajId, f64)> {
        let mut out = Vec::new();
        for (v, s) in self.bounding_pairs() {
            let n = &self.nodes[v];
            let (a, b) = (self.store.traj(n.center), self.store.traj(s));
            if crate::frechet::decide_unchecked(a, b, n.radius + tol) {
                continue;
            }
            let d = crate::frechet::distance_unchecked(a, b, DistanceMode::Auto);
            if d > n.radius + tol {
                out.push((v, self.store.id(s), d));
            }
        }
        out
    }
}
