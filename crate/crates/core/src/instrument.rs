//! Call counters: the cost model of every construction and query.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub df_calls: u64,
    pub dfd_calls: u64,
    pub sev: u64,
    pub bb: u64,
    pub st: u64,
    pub tr: u64,
    pub ub_bb: u64,
    pub adf: u64,
    /// Trajectory-to-segment distance computations (query feature setup).
    pub segment: u64,
    pub node_visits: u64,
}

impl Counters {
    pub fn bound_calls(&self) -> u64 {
        self.sev + self.bb + self.st + self.tr + self.ub_bb + self.adf + self.segment
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Self) {
        self.df_calls += o.df_calls;
        self.dfd_calls += o.dfd_calls;
        self.sev += o.sev;
        self.bb += o.bb;
        self.st += o.st;
        self.tr += o.tr;
        self.ub_bb += o.ub_bb;
        self.adf += o.adf;
        self.segment += o.segment;
        self.node_visits += o.node_visits;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    #[default]
    Build,
    Prune,
    Reduce,
    Decide,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Build, Stage::Prune, Stage::Reduce, Stage::Decide];

    fn index(self) -> usize {
        self as usize
    }
}

/// Counters split by stage; every increment lands in the current stage.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instrumentation {
    #[serde(skip)]
    current: Stage,
    stages: [Counters; 4],
}

impl Instrumentation {
    pub fn set_stage(&mut self, stage: Stage) {
        self.current = stage;
    }

    pub fn current_stage(&self) -> Stage {
        self.current
    }

    pub fn counters_mut(&mut self) -> &mut Counters {
        &mut self.stages[self.current.index()]
    }

    pub fn stage(&self, stage: Stage) -> &Counters {
        &self.stages[stage.index()]
    }

    pub fn totals(&self) -> Counters {
        let mut t = Counters::default();
        for c in &self.stages {
            t += *c;
        }
        t
    }

    pub fn merge(&mut self, other: &Instrumentation) {
        for (a, b) in self.stages.iter_mut().zip(&other.stages) {
            *a += *b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_sum_to_totals() {
        let mut i = Instrumentation::default();
        i.counters_mut().df_calls += 2;
        i.set_stage(Stage::Decide);
        i.counters_mut().df_calls += 3;
        i.counters_mut().adf += 3;
        assert_eq!(i.stage(Stage::Build).df_calls, 2);
        assert_eq!(i.stage(Stage::Decide).df_calls, 3);
        assert_eq!(i.totals().df_calls, 5);
        assert_eq!(i.totals().bound_calls(), 3);
    }
}
