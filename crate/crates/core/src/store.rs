//! Stored trajectories with their features, addressed by dense slots.

use std::collections::HashMap;

use crate::bounds::{TrajRef, TrajectoryFeatures};
use crate::error::{CctError, Result};
use crate::geometry::{TrajId, Trajectory, TrajectorySet};

pub type Slot = usize;

#[derive(Clone, Debug, Default)]
pub struct TrajStore {
    trajs: Vec<Trajectory>,
    feats: Vec<TrajectoryFeatures>,
    slots: HashMap<TrajId, Slot>,
    dim: Option<usize>,
}

impl TrajStore {
    pub fn from_set(set: TrajectorySet) -> Self {
        let mut store = Self::default();
        for t in set.into_vec() {
            store.push(t).expect("set members have unique ids and one dimension");
        }
        store
    }

    pub fn push(&mut self, t: Trajectory) -> Result<Slot> {
        if let Some(d) = self.dim {
            if d != t.dim() {
                return Err(CctError::DimensionMismatch {
                    expected: d,
                    found: t.dim(),
                });
            }
        }
        if self.slots.contains_key(&t.id()) {
            return Err(CctError::DuplicateId(t.id()));
        }
        let slot = self.trajs.len();
        self.dim = Some(t.dim());
        self.slots.insert(t.id(), slot);
        self.feats.push(TrajectoryFeatures::compute(&t));
        self.trajs.push(t);
        Ok(slot)
    }

    pub fn len(&self) -> usize {
        self.trajs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn slot(&self, id: TrajId) -> Option<Slot> {
        self.slots.get(&id).copied()
    }

    pub fn traj(&self, slot: Slot) -> &Trajectory {
        &self.trajs[slot]
    }

    pub fn features(&self, slot: Slot) -> &TrajectoryFeatures {
        &self.feats[slot]
    }

    pub fn get(&self, slot: Slot) -> TrajRef<'_> {
        TrajRef::new(&self.trajs[slot], &self.feats[slot])
    }

    pub fn id(&self, slot: Slot) -> TrajId {
        self.trajs[slot].id()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajs
    }
}
