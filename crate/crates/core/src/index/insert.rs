//! Dynamic inserts.

use super::{CctIndex, FixMode};
use crate::error::{CctError, Result};
use crate::geometry::Trajectory;
use crate::instrument::{Instrumentation, Stage};
use crate::query::{query_slots, ErrorModel, QuerySpec};
use crate::session::{PairOracle, PairSession};
use crate::store::Slot;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertVariant {
    /// Split the exact nearest neighbor's leaf; radii fixed with distance calls.
    Exact,
    /// Split the implicit approximate nearest neighbor's leaf; radii from upper bounds.
    Approx,
    /// Descend by smallest lower bound; radii from upper bounds.
    Standard,
}

impl std::str::FromStr for InsertVariant {
    type Err = CctError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "approx" => Ok(Self::Approx),
            "standard" => Ok(Self::Standard),
            _ => Err(CctError::ConfigInvalid(format!("unknown insert variant {s:?}"))),
        }
    }
}

impl CctIndex {
    /// Inserts `t` and returns the calls the insert performed.
    pub fn insert(&mut self, t: Trajectory, variant: InsertVariant) -> Result<Instrumentation> {
        if self.store.slot(t.id()).is_some() {
            return Err(CctError::DuplicateId(t.id()));
        }
        if let Some(d) = self.store.dim() {
            if d != t.dim() {
                return Err(CctError::DimensionMismatch {
                    expected: d,
                    found: t.dim(),
                });
            }
        }
        let mut instr = Instrumentation::default();
        if self.root.is_none() {
            let slot = self.store.push(t)?;
            self.make_root_leaf(slot);
            return Ok(instr);
        }

        let (host, known) = match variant {
            InsertVariant::Exact | InsertVariant::Approx => {
                let model = if variant == InsertVariant::Exact {
                    ErrorModel::Additive(0.0)
                } else {
                    ErrorModel::Implicit
                };
                let spec = QuerySpec::nn().with_error(model).with_seed(self.seed ^ self.store.len() as u64);
                let (slots, res, known) = query_slots(self, &t, &spec)?;
                instr.merge(&res.instr);
                (slots[0], known)
            }
            InsertVariant::Standard => (self.descend_by_lower_bound(&t, &mut instr), None),
        };

        let mut store = std::mem::take(&mut self.store);
        let slot = match store.push(t) {
            Ok(s) => s,
            Err(e) => {
                self.store = store;
                return Err(e);
            }
        };
        let mut sess = PairSession::new(&store, self.mode);
        if let Some(d) = known {
            sess.remember(host, slot, d);
        }
        self.split_leaf(host, slot);
        match variant {
            InsertVariant::Exact => self.fix_ancestor_radius(&mut sess, slot, FixMode::Exact, None),
            _ => {
                let to_host = sess.ub(host, slot);
                self.fix_ancestor_radius(&mut sess, slot, FixMode::UpperBoundOnly, Some((host, to_host)))
            }
        }
        instr.merge(&sess.instr);
        self.build_stats.merge(&instr);
        self.store = store;
        Ok(instr)
    }

    /// Leaf reached by always stepping to the child with the smallest lower bound.
    fn descend_by_lower_bound(&self, t: &Trajectory, instr: &mut Instrumentation) -> Slot {
        let feat = crate::bounds::TrajectoryFeatures::compute(t);
        let q = crate::bounds::TrajRef::new(t, &feat);
        instr.set_stage(Stage::Build);
        instr.counters_mut().segment += 1;
        let mut v = self.root.expect("index is not empty");
        loop {
            instr.counters_mut().node_visits += 1;
            let node = &self.nodes[v];
            if node.is_leaf() {
                return node.center;
            }
            let mut best: Option<(f64, u64, usize)> = None;
            for &c in &node.children {
                let center = self.nodes[c].center;
                let lb = crate::bounds::lb_group(self.store.get(center), q, instr);
                let key = (lb, self.store.id(center), c);
                if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                    best = Some(key);
                }
            }
            v = best.unwrap().2;
        }
    }
}
