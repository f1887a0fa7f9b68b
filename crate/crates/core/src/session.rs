//! Memoizing evaluators of bounds and distances.
//!
//! A [`PairSession`] answers questions about pairs of stored trajectories and is
//! used by constructions and inserts. A [`QuerySession`] answers questions about
//! stored trajectories against one query trajectory. Both count every evaluation
//! in their [`Instrumentation`] and never evaluate the same bound twice.

use std::collections::HashMap;

use crate::bounds::{self, TrajRef, TrajectoryFeatures};
use crate::frechet::{self, DistanceMode};
use crate::geometry::Trajectory;
use crate::instrument::{Instrumentation, Stage};
use crate::store::{Slot, TrajStore};

/// Bounds and distances between stored trajectories.
pub trait PairOracle {
    fn lb(&mut self, a: Slot, b: Slot) -> f64;
    fn ub(&mut self, a: Slot, b: Slot) -> f64;
    /// True only if `δ_F(a, b) > alpha`.
    fn lb_fd(&mut self, a: Slot, b: Slot, alpha: f64) -> bool;
    fn df(&mut self, a: Slot, b: Slot) -> f64;
    fn dfd(&mut self, a: Slot, b: Slot, eps: f64) -> bool;
}

/// Bounds and distances between stored trajectories and a fixed query.
pub trait QueryOracle {
    fn lb(&mut self, s: Slot) -> f64;
    fn ub(&mut self, s: Slot) -> f64;
    fn lb_fd(&mut self, s: Slot, alpha: f64) -> bool;
    fn df(&mut self, s: Slot) -> f64;
    fn dfd(&mut self, s: Slot, eps: f64) -> bool;
}

#[derive(Clone, Copy, Debug, Default)]
struct Memo {
    lb: Option<f64>,
    ub: Option<f64>,
    df: Option<f64>,
}

impl Memo {
    /// The distance, when the bounds pin it down or it was computed.
    fn exact(&self) -> Option<f64> {
        self.df.or(match (self.lb, self.ub) {
            (Some(l), Some(u)) if l == u => Some(l),
            _ => None,
        })
    }

    /// Rounding can leave the bounds crossed by an ulp; the lower bound yields.
    fn set_lb(&mut self, v: f64) -> f64 {
        let v = self.ub.map_or(v, |u| v.min(u));
        self.lb = Some(v);
        v
    }

    fn set_ub(&mut self, v: f64) -> f64 {
        let v = self.lb.map_or(v, |l| v.max(l));
        self.ub = Some(v);
        v
    }
}

pub struct PairSession<'a> {
    store: &'a TrajStore,
    memo: HashMap<(Slot, Slot), Memo>,
    mode: DistanceMode,
    pub instr: Instrumentation,
}

impl<'a> PairSession<'a> {
    pub fn new(store: &'a TrajStore, mode: DistanceMode) -> Self {
        Self {
            store,
            memo: HashMap::new(),
            mode,
            instr: Instrumentation::default(),
        }
    }

    fn key(a: Slot, b: Slot) -> (Slot, Slot) {
        (a.min(b), a.max(b))
    }

    fn refs(&self, a: Slot, b: Slot) -> (TrajRef<'a>, TrajRef<'a>) {
        let (x, y) = Self::key(a, b);
        (self.store.get(x), self.store.get(y))
    }

    /// Drops memoized bounds while keeping computed distances.
    pub fn forget_bounds(&mut self) {
        self.memo.retain(|_, m| m.df.is_some());
        for m in self.memo.values_mut() {
            m.lb = None;
            m.ub = None;
        }
    }

    pub fn known_distance(&self, a: Slot, b: Slot) -> Option<f64> {
        self.memo.get(&Self::key(a, b)).and_then(Memo::exact)
    }

    /// Records a distance computed elsewhere.
    pub fn remember(&mut self, a: Slot, b: Slot, d: f64) {
        self.memo.entry(Self::key(a, b)).or_default().df = Some(d);
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }
}

impl PairOracle for PairSession<'_> {
    fn lb(&mut self, a: Slot, b: Slot) -> f64 {
        let key = Self::key(a, b);
        if let Some(v) = self.memo.get(&key).and_then(|m| m.lb) {
            return v;
        }
        let (x, y) = self.refs(a, b);
        let v = bounds::lb_group(x, y, &mut self.instr);
        self.memo.entry(key).or_default().set_lb(v)
    }

    fn ub(&mut self, a: Slot, b: Slot) -> f64 {
        let key = Self::key(a, b);
        if let Some(v) = self.memo.get(&key).and_then(|m| m.ub) {
            return v;
        }
        let (x, y) = self.refs(a, b);
        let v = bounds::ub_group(x, y, &mut self.instr);
        self.memo.entry(key).or_default().set_ub(v)
    }

    fn lb_fd(&mut self, a: Slot, b: Slot, alpha: f64) -> bool {
        if let Some(d) = self.known_distance(a, b) {
            return d > alpha;
        }
        let (x, y) = self.refs(a, b);
        bounds::lb_fd(x, y, alpha, &mut self.instr)
    }

    fn df(&mut self, a: Slot, b: Slot) -> f64 {
        if let Some(d) = self.known_distance(a, b) {
            return d;
        }
        let (x, y) = self.refs(a, b);
        self.instr.counters_mut().df_calls += 1;
        let d = frechet::distance_unchecked(x.traj, y.traj, self.mode);
        self.memo.entry(Self::key(a, b)).or_default().df = Some(d);
        d
    }

    fn dfd(&mut self, a: Slot, b: Slot, eps: f64) -> bool {
        if let Some(d) = self.known_distance(a, b) {
            return d <= eps;
        }
        let (x, y) = self.refs(a, b);
        self.instr.counters_mut().dfd_calls += 1;
        frechet::decide_unchecked(x.traj, y.traj, eps)
    }
}

pub struct QuerySession<'a> {
    store: &'a TrajStore,
    query: &'a Trajectory,
    qfeat: TrajectoryFeatures,
    memo: HashMap<Slot, Memo>,
    mode: DistanceMode,
    pub instr: Instrumentation,
}

impl<'a> QuerySession<'a> {
    pub fn new(store: &'a TrajStore, query: &'a Trajectory, mode: DistanceMode) -> Self {
        let mut instr = Instrumentation::default();
        instr.set_stage(Stage::Prune);
        instr.counters_mut().segment += 1;
        Self {
            store,
            query,
            qfeat: TrajectoryFeatures::compute(query),
            memo: HashMap::new(),
            mode,
            instr,
        }
    }

    pub fn store(&self) -> &'a TrajStore {
        self.store
    }

    fn q(&self) -> TrajRef<'_> {
        TrajRef::new(self.query, &self.qfeat)
    }

    pub fn known_distance(&self, s: Slot) -> Option<f64> {
        self.memo.get(&s).and_then(Memo::exact)
    }

    pub fn into_instrumentation(self) -> Instrumentation {
        self.instr
    }
}

impl QueryOracle for QuerySession<'_> {
    fn lb(&mut self, s: Slot) -> f64 {
        if let Some(v) = self.memo.get(&s).and_then(|m| m.lb) {
            return v;
        }
        let p = self.store.get(s);
        let q = TrajRef::new(self.query, &self.qfeat);
        let v = bounds::lb_group(p, q, &mut self.instr);
        self.memo.entry(s).or_default().set_lb(v)
    }

    fn ub(&mut self, s: Slot) -> f64 {
        if let Some(v) = self.memo.get(&s).and_then(|m| m.ub) {
            return v;
        }
        let p = self.store.get(s);
        let q = TrajRef::new(self.query, &self.qfeat);
        let v = bounds::ub_group(p, q, &mut self.instr);
        self.memo.entry(s).or_default().set_ub(v)
    }

    fn lb_fd(&mut self, s: Slot, alpha: f64) -> bool {
        if let Some(d) = self.known_distance(s) {
            return d > alpha;
        }
        let p = self.store.get(s);
        let q = TrajRef::new(self.query, &self.qfeat);
        bounds::lb_fd(p, q, alpha, &mut self.instr)
    }

    fn df(&mut self, s: Slot) -> f64 {
        if let Some(d) = self.known_distance(s) {
            return d;
        }
        self.instr.counters_mut().df_calls += 1;
        let d = frechet::distance_unchecked(self.store.traj(s), self.q().traj, self.mode);
        self.memo.entry(s).or_default().df = Some(d);
        d
    }

    fn dfd(&mut self, s: Slot, eps: f64) -> bool {
        if let Some(d) = self.known_distance(s) {
            return d <= eps;
        }
        self.instr.counters_mut().dfd_calls += 1;
        frechet::decide_unchecked(self.store.traj(s), self.query, eps)
    }
}
