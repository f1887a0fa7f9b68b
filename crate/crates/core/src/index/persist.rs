//! JSON persistence of the tree and dendrogram export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BuildVariant, CctIndex, Node, NodeId, RadiusKind};
use crate::error::{CctError, Result};
use crate::frechet::DistanceMode;
use crate::geometry::TrajId;
use crate::instrument::Instrumentation;
use crate::io;
use crate::store::TrajStore;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub center: TrajId,
    pub radius: f64,
    pub radius_kind: RadiusKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexDocument {
    pub version: u32,
    pub d: usize,
    pub nodes: Vec<NodeRecord>,
    /// Trajectory CSV, relative to the index file's directory.
    pub trajectory_file: String,
    pub seed: u64,
    pub build_variant: BuildVariant,
    pub build_stats: Instrumentation,
    #[serde(default)]
    pub pick_order: Vec<TrajId>,
}

fn sidecar_path(index_path: &Path) -> PathBuf {
    let mut name = index_path.file_name().unwrap_or_default().to_os_string();
    name.push(".traj.csv");
    index_path.with_file_name(name)
}

impl CctIndex {
    pub fn to_document(&self, trajectory_file: String) -> IndexDocument {
        IndexDocument {
            version: FORMAT_VERSION,
            d: self.dim().unwrap_or(0),
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeRecord {
                    id,
                    parent: n.parent,
                    center: self.store.id(n.center),
                    radius: n.radius,
                    radius_kind: n.radius_kind,
                })
                .collect(),
            trajectory_file,
            seed: self.seed,
            build_variant: self.variant,
            build_stats: self.build_stats.clone(),
            pick_order: self.pick_order.clone(),
        }
    }

    /// Writes the index as JSON at `path` and its trajectories to `<path>.traj.csv`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_path = sidecar_path(path);
        io::write_trajectories(&csv_path, self.store.trajectories())?;
        let rel = csv_path.file_name().unwrap().to_string_lossy().into_owned();
        let mut text = serde_json::to_string_pretty(&self.to_document(rel))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let doc: IndexDocument = serde_json::from_slice(&std::fs::read(path)?)?;
        let csv_path = path.parent().unwrap_or(Path::new(".")).join(&doc.trajectory_file);
        let set = io::read_trajectories(csv_path)?;
        Self::from_document(doc, TrajStore::from_set(set))
    }

    pub fn from_document(doc: IndexDocument, store: TrajStore) -> Result<Self> {
        let bad = |m: String| CctError::MalformedIndex(m);
        if doc.version != FORMAT_VERSION {
            return Err(bad(format!("unsupported version {}", doc.version)));
        }
        if let Some(d) = store.dim() {
            if d != doc.d {
                return Err(CctError::DimensionMismatch {
                    expected: doc.d,
                    found: d,
                });
            }
        }
        let mut idx = CctIndex::empty(doc.seed);
        idx.variant = doc.build_variant;
        idx.build_stats = doc.build_stats;
        idx.pick_order = doc.pick_order;
        idx.mode = DistanceMode::Auto;
        let mut children: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        let mut roots = Vec::new();
        for (i, r) in doc.nodes.iter().enumerate() {
            if r.id != i {
                return Err(bad(format!("node ids must be 0..n in order, found {} at {i}", r.id)));
            }
            match r.parent {
                Some(p) if p >= doc.nodes.len() => return Err(bad(format!("node {i} has unknown parent {p}"))),
                Some(p) => children.entry(p).or_default().push(i),
                None => roots.push(i),
            }
        }
        if !doc.nodes.is_empty() && roots.len() != 1 {
            return Err(bad(format!("expected one root, found {}", roots.len())));
        }
        idx.leaf_of = vec![usize::MAX; store.len()];
        for (i, r) in doc.nodes.iter().enumerate() {
            let center = store.slot(r.center).ok_or_else(|| bad(format!("node {i} references unknown trajectory {}", r.center)))?;
            let kids = children.remove(&i).unwrap_or_default();
            if kids.is_empty() {
                idx.leaf_of[center] = i;
            }
            idx.nodes.push(Node {
                center,
                radius: r.radius,
                radius_kind: r.radius_kind,
                parent: r.parent,
                children: kids,
            });
        }
        idx.root = roots.first().copied();
        idx.store = store;
        idx.check_nesting()?;
        Ok(idx)
    }

    /// Writes `node_id,parent_id,center_id,radius,depth,leaf_count` rows and a DOT graph.
    pub fn export_dendrogram(&self, csv_path: impl AsRef<Path>, dot_path: impl AsRef<Path>) -> Result<()> {
        let mut leaf_count = vec![0usize; self.nodes.len()];
        for s in 0..self.store.len() {
            let mut cur = Some(self.leaf_of[s]);
            while let Some(v) = cur {
                leaf_count[v] += 1;
                cur = self.nodes[v].parent;
            }
        }
        let mut w = csv::Writer::from_path(csv_path.as_ref())?;
        w.write_record(["node_id", "parent_id", "center_id", "radius", "depth", "leaf_count"])?;
        let mut dot = String::from("digraph cct {\n  node [shape=box];\n");
        for (v, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map(|p| p.to_string()).unwrap_or_default();
            let center = self.store.id(n.center);
            w.write_record([
                v.to_string(),
                parent,
                center.to_string(),
                n.radius.to_string(),
                self.depth(v).to_string(),
                leaf_count[v].to_string(),
            ])?;
            let _ = writeln!(dot, "  n{v} [label=\"{center} r={}\"];", n.radius);
            if let Some(p) = n.parent {
                let _ = writeln!(dot, "  n{p} -> n{v};");
            }
        }
        dot.push_str("}\n");
        w.flush()?;
        std::fs::write(dot_path.as_ref(), dot)?;
        Ok(())
    }
}
