//! Three-stage proximity queries over a [`CctIndex`].
//!
//! *Prune* walks the tree and collects candidates, *Reduce* filters and admits
//! candidates from their bound intervals, and *Decide* settles what is left with
//! distance and decision calls. Implicit variants stop after Reduce and report
//! the approximation error they achieved instead.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CctError, Result};
use crate::frechet::{self, DistanceMode};
use crate::geometry::{TrajId, Trajectory};
use crate::index::{oracle_cap, CctIndex};
use crate::instrument::{Instrumentation, Stage};
use crate::session::{QueryOracle, QuerySession};
use crate::store::{Slot, TrajStore};

pub const DEFAULT_KAPPA: f64 = 1.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    Knn(usize),
    Nn,
    Rnn(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    Additive(f64),
    Relative(f64),
    Implicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub kind: QueryKind,
    pub error: ErrorModel,
    /// Seed of the Decide pivot generator.
    pub seed: u64,
    /// Gate for whole-subtree admission in range queries.
    pub kappa: f64,
}

impl QuerySpec {
    pub fn new(kind: QueryKind) -> Self {
        Self {
            kind,
            error: ErrorModel::Additive(0.0),
            seed: 0,
            kappa: DEFAULT_KAPPA,
        }
    }

    pub fn knn(k: usize) -> Self {
        Self::new(QueryKind::Knn(k))
    }

    pub fn nn() -> Self {
        Self::new(QueryKind::Nn)
    }

    pub fn rnn(tau: f64) -> Self {
        Self::new(QueryKind::Rnn(tau))
    }

    pub fn with_error(mut self, error: ErrorModel) -> Self {
        self.error = error;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    fn validate(&self, size: usize) -> Result<()> {
        let bad = |m: &str| Err(CctError::InvalidQuery(m.into()));
        match self.kind {
            QueryKind::Knn(0) => return bad("k must be at least 1"),
            QueryKind::Knn(k) if k > size => return Err(CctError::KTooLarge { k, size }),
            QueryKind::Rnn(t) if !(t >= 0.0 && t.is_finite()) => return bad("tau must be finite and non-negative"),
            _ => {}
        }
        match self.error {
            ErrorModel::Additive(e) | ErrorModel::Relative(e) if !(e >= 0.0 && e.is_finite()) => {
                bad("error must be finite and non-negative")
            }
            _ if !(self.kappa >= 1.0 && self.kappa.is_finite()) => bad("kappa must be at least 1"),
            _ => Ok(()),
        }
    }
}

/// Error achieved by an implicit query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedError {
    pub e_add: f64,
    /// Infinite when the denominator is zero and `e_add > 0`.
    pub e_rel: f64,
    pub zero_denominator: bool,
    /// Bracket of the k-th smallest distance (kNN only).
    pub alpha_k: Option<f64>,
    pub beta_k: Option<f64>,
}

impl ReportedError {
    fn new(e_add: f64, denom: f64, alpha_k: Option<f64>, beta_k: Option<f64>) -> Self {
        let e_add = e_add.max(0.0);
        let (e_rel, zero_denominator) = if e_add == 0.0 {
            (0.0, false)
        } else if denom == 0.0 {
            (f64::INFINITY, true)
        } else {
            (e_add / denom, false)
        };
        Self {
            e_add,
            e_rel,
            zero_denominator,
            alpha_k,
            beta_k,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    /// Result ids in ascending order.
    pub ids: Vec<TrajId>,
    pub reported_error: Option<ReportedError>,
    pub instr: Instrumentation,
    pub seed: u64,
}

/// Max-heap entry ordered by upper bound, then id.
#[derive(Clone, Copy, Debug)]
struct UbEntry(f64, TrajId);

impl PartialEq for UbEntry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for UbEntry {}
impl PartialOrd for UbEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for UbEntry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

struct Pruned {
    cands: Vec<Slot>,
    beta: f64,
    /// Set when a leaf within the error budget ended the search (NN only).
    shortcut: Option<Slot>,
}

fn by_bound_then_id(store: &TrajStore, a: (f64, Slot), b: (f64, Slot)) -> Ordering {
    a.0.total_cmp(&b.0).then(store.id(a.1).cmp(&store.id(b.1)))
}

fn knn_prune(idx: &CctIndex, o: &mut QuerySession, k: usize, e_add: f64, nn: bool) -> Pruned {
    let store = idx.store();
    let mut heap: BinaryHeap<UbEntry> = BinaryHeap::with_capacity(k + 1);
    let mut cands = Vec::new();
    let beta = |h: &BinaryHeap<UbEntry>| if h.len() >= k { h.peek().unwrap().0 } else { f64::INFINITY };
    let mut stack = vec![idx.root().expect("index is not empty")];
    while let Some(v) = stack.pop() {
        o.instr.counters_mut().node_visits += 1;
        let node = idx.node(v);
        let b = beta(&heap);
        if node.is_leaf() {
            let p = node.center;
            let lb = o.lb(p);
            if b.is_finite() && !(lb < b) {
                continue;
            }
            let ub = o.ub(p);
            if nn && ub <= e_add {
                return Pruned {
                    cands: vec![p],
                    beta: ub,
                    shortcut: Some(p),
                };
            }
            if b.is_finite() && !(ub < b) && o.lb_fd(p, b) {
                continue;
            }
            cands.push(p);
            heap.push(UbEntry(ub, store.id(p)));
            if heap.len() > k {
                heap.pop();
            }
            continue;
        }
        if b.is_finite() && !(o.lb(node.center) <= b + node.radius - e_add) {
            continue;
        }
        let mut kids: Vec<(f64, usize)> = node
            .children
            .iter()
            .map(|&c| (o.lb(idx.node(c).center), c))
            .collect();
        kids.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(idx.center_id(a.1).cmp(&idx.center_id(b.1)))
        });
        // Children already outside the current threshold are never visited.
        let b = beta(&heap);
        let open = |&&(lb, c): &&(f64, usize)| {
            let child = idx.node(c);
            !b.is_finite() || if child.is_leaf() { lb < b } else { lb <= b + child.radius - e_add }
        };
        stack.extend(kids.iter().rev().filter(open).map(|&(_, c)| c));
    }
    Pruned {
        beta: beta(&heap),
        cands,
        shortcut: None,
    }
}

/// k-th smallest of `values` (1-based), or infinity when there are fewer.
fn kth_smallest(values: &mut [f64], k: usize) -> f64 {
    if k == 0 || values.len() < k {
        return f64::INFINITY;
    }
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

struct Reduced {
    admitted: Vec<Slot>,
    rest: Vec<Slot>,
}

/// Filters candidates against `beta - e_add` and admits those certified to be
/// within `e_add` of the k-th smallest distance.
fn knn_reduce<O: QueryOracle>(store: &TrajStore, o: &mut O, cands: &[Slot], beta: f64, k: usize, e_add: f64) -> Result<Reduced> {
    let cut = beta - e_add;
    let mut kept = Vec::with_capacity(cands.len());
    for &p in cands {
        if o.ub(p) <= beta || (o.lb(p) < cut && !o.lb_fd(p, cut)) {
            kept.push(p);
        }
    }
    if kept.len() < k {
        return Err(CctError::Internal(format!(
            "reduce kept {} candidates for k = {k}",
            kept.len()
        )));
    }
    if kept.len() == k {
        return Ok(Reduced {
            admitted: kept,
            rest: Vec::new(),
        });
    }
    let mut by_lb: Vec<(f64, Slot)> = kept.iter().map(|&p| (o.lb(p), p)).collect();
    by_lb.sort_by(|&a, &b| by_bound_then_id(store, a, b));
    let alpha_k = by_lb[k - 1].0;
    let alpha_k1 = by_lb.get(k).map_or(f64::INFINITY, |x| x.0);
    let rank: std::collections::HashMap<Slot, usize> = by_lb.iter().enumerate().map(|(i, &(_, p))| (p, i)).collect();

    let mut by_ub: Vec<(f64, Slot)> = kept.iter().map(|&p| (o.ub(p), p)).collect();
    by_ub.sort_by(|&a, &b| by_bound_then_id(store, a, b));
    let mut admitted = Vec::new();
    for &(ub, p) in &by_ub {
        if admitted.len() == k {
            break;
        }
        // k-th smallest lower bound among the other kept candidates.
        let alpha_others = if rank[&p] < k { alpha_k1 } else { alpha_k };
        if ub - e_add <= alpha_others.min(cut) {
            admitted.push(p);
        }
    }
    let rest = kept.into_iter().filter(|p| !admitted.contains(p)).collect();
    Ok(Reduced { admitted, rest })
}

/// Randomized selection of the `need` closest members of `pool`.
pub(crate) fn decide_knn<O: QueryOracle>(o: &mut O, mut pool: Vec<Slot>, mut need: usize, rng: &mut ChaCha8Rng, out: &mut Vec<Slot>) {
    while need > 0 {
        if pool.len() <= need {
            out.extend(pool);
            return;
        }
        let pivot = pool.remove(rng.gen_range(0..pool.len()));
        let pi = o.df(pivot);
        let (mut closer, mut further) = (Vec::new(), Vec::new());
        for x in pool {
            let is_closer = if o.ub(x) <= pi {
                true
            } else if o.lb(x) > pi || o.lb_fd(x, pi) {
                false
            } else {
                o.dfd(x, pi)
            };
            if is_closer {
                closer.push(x);
            } else {
                further.push(x);
            }
        }
        if closer.len() < need {
            need -= closer.len() + 1;
            out.extend(closer);
            out.push(pivot);
            pool = further;
        } else {
            pool = closer;
        }
    }
}

/// Steps of the traversal-race search that tightens lower bounds in the NN Decide stage.
const TR_REFINE_STEPS: usize = 12;

/// Largest threshold below which the traversal race certifies `p` is further away,
/// searched between the lower and upper bound.
fn refined_lb<O: QueryOracle>(o: &mut O, p: Slot) -> f64 {
    let (mut lo, mut hi) = (o.lb(p), o.ub(p));
    for _ in 0..TR_REFINE_STEPS {
        let mid = lo + 0.5 * (hi - lo);
        if o.lb_fd(p, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Nearest member of `pool` (at least two members).
fn decide_nn<O: QueryOracle>(store: &TrajStore, o: &mut O, pool: &[Slot]) -> Slot {
    let mut by_lb: Vec<(f64, Slot)> = pool.iter().map(|&p| (refined_lb(o, p), p)).collect();
    by_lb.sort_by(|&a, &b| by_bound_then_id(store, a, b));
    let mut by_ub: Vec<(f64, Slot)> = pool.iter().map(|&p| (o.ub(p), p)).collect();
    by_ub.sort_by(|&a, &b| by_bound_then_id(store, a, b));

    // A member within the smallest lower bound of all others is the nearest.
    let mut tried = None;
    for first in [by_lb[0].1, by_ub[0].1] {
        if tried == Some(first) {
            continue;
        }
        tried = Some(first);
        let alpha = by_lb.iter().find(|x| x.1 != first).map_or(f64::INFINITY, |x| x.0);
        if o.ub(first) <= alpha || (!o.lb_fd(first, alpha) && o.dfd(first, alpha)) {
            return first;
        }
    }
    let refined: std::collections::HashMap<Slot, f64> = by_lb.iter().map(|&(l, p)| (p, l)).collect();
    let mut best = by_ub[0].1;
    let mut pi = o.df(best);
    for &(_, p) in &by_ub[1..] {
        if refined[&p] >= pi {
            continue;
        }
        if !o.lb_fd(p, pi) && o.dfd(p, pi) {
            let d = o.df(p);
            if d < pi {
                best = p;
                pi = d;
            }
        }
    }
    best
}

/// Result of the k smallest upper bounds, with the achieved error.
fn implicit_knn<O: QueryOracle>(store: &TrajStore, o: &mut O, red: Reduced, k: usize) -> (Vec<Slot>, ReportedError) {
    let mut rest: Vec<(f64, Slot)> = red.rest.iter().map(|&p| (o.ub(p), p)).collect();
    rest.sort_by(|&a, &b| by_bound_then_id(store, a, b));
    let take = k - red.admitted.len();
    let mut result = red.admitted;
    result.extend(rest[..take].iter().map(|x| x.1));
    let beta = result.iter().map(|&p| o.ub(p)).fold(f64::NEG_INFINITY, f64::max);
    let max_lb = result.iter().map(|&p| o.lb(p)).fold(f64::NEG_INFINITY, f64::max);
    let alpha_rest = rest[take..].iter().map(|x| o.lb(x.1)).fold(f64::INFINITY, f64::min);
    let alpha = max_lb.min(alpha_rest);
    let err = ReportedError::new(beta - alpha, alpha, Some(alpha), Some(beta));
    (result, err)
}

fn run_knn(idx: &CctIndex, sess: &mut QuerySession, k: usize, model: ErrorModel, nn: bool, rng: &mut ChaCha8Rng) -> Result<(Vec<Slot>, Option<ReportedError>)> {
    let store = idx.store();
    let e_prune = match model {
        ErrorModel::Additive(e) => e,
        _ => 0.0,
    };
    sess.instr.set_stage(Stage::Prune);
    let pruned = knn_prune(idx, sess, k, e_prune, nn);
    if let Some(p) = pruned.shortcut {
        let err = (model == ErrorModel::Implicit).then(|| {
            let ub = sess.ub(p);
            ReportedError::new(ub, 0.0, Some(0.0), Some(ub))
        });
        return Ok((vec![p], err));
    }

    sess.instr.set_stage(Stage::Reduce);
    let e_add = match model {
        ErrorModel::Additive(e) => e,
        ErrorModel::Relative(r) => {
            let mut lbs: Vec<f64> = pruned.cands.iter().map(|&p| sess.lb(p)).collect();
            r * kth_smallest(&mut lbs, k)
        }
        ErrorModel::Implicit => 0.0,
    };
    let red = knn_reduce(store, sess, &pruned.cands, pruned.beta, k, e_add)?;

    sess.instr.set_stage(Stage::Decide);
    if model == ErrorModel::Implicit {
        let (r, err) = implicit_knn(store, sess, red, k);
        return Ok((r, Some(err)));
    }
    let mut out = red.admitted;
    let need = k - out.len();
    if need > 0 {
        if nn && red.rest.len() > 1 {
            out.push(decide_nn(store, sess, &red.rest));
        } else {
            decide_knn(sess, red.rest, need, rng, &mut out);
        }
    }
    Ok((out, None))
}

fn run_rnn(idx: &CctIndex, sess: &mut QuerySession, tau: f64, model: ErrorModel, kappa: f64) -> (Vec<Slot>, Option<ReportedError>) {
    sess.instr.set_stage(Stage::Prune);
    let mut result = Vec::new();
    let mut cands = Vec::new();
    let mut stack = vec![idx.root().expect("index is not empty")];
    while let Some(v) = stack.pop() {
        sess.instr.counters_mut().node_visits += 1;
        let node = idx.node(v);
        let lb = sess.lb(node.center);
        if node.is_leaf() {
            if lb <= tau {
                cands.push(node.center);
            }
            continue;
        }
        if !(lb <= tau + node.radius) {
            continue;
        }
        if kappa * lb + node.radius < tau && sess.ub(node.center) + node.radius <= tau {
            result.extend(idx.leaves_under(v));
            continue;
        }
        stack.extend(node.children.iter().rev());
    }

    sess.instr.set_stage(Stage::Reduce);
    let e_add = match model {
        ErrorModel::Additive(e) => e,
        ErrorModel::Relative(r) => r * tau,
        ErrorModel::Implicit => 0.0,
    };
    let mut pool = Vec::new();
    for p in cands {
        if sess.ub(p) < tau + e_add {
            result.push(p);
        } else if !sess.lb_fd(p, tau) {
            pool.push(p);
        }
    }

    sess.instr.set_stage(Stage::Decide);
    if model == ErrorModel::Implicit {
        let beta = pool.iter().map(|&p| sess.ub(p)).fold(tau, f64::max);
        result.extend(pool);
        return (result, Some(ReportedError::new(beta - tau, tau, None, None)));
    }
    for p in pool {
        if sess.dfd(p, tau) {
            result.push(p);
        }
    }
    (result, None)
}

fn check_query(idx: &CctIndex, q: &Trajectory) -> Result<()> {
    let d = idx.dim().ok_or(CctError::EmptyIndex)?;
    if d != q.dim() {
        return Err(CctError::DimensionMismatch {
            expected: d,
            found: q.dim(),
        });
    }
    Ok(())
}

fn finish(store: &TrajStore, slots: Vec<Slot>, err: Option<ReportedError>, instr: Instrumentation, seed: u64) -> QueryResult {
    let mut ids: Vec<TrajId> = slots.into_iter().map(|s| store.id(s)).collect();
    ids.sort_unstable();
    QueryResult {
        ids,
        reported_error: err,
        instr,
        seed,
    }
}

/// Runs a query and also returns the slots of the result, for inserts.
pub(crate) fn query_slots(idx: &CctIndex, q: &Trajectory, spec: &QuerySpec) -> Result<(Vec<Slot>, QueryResult, Option<f64>)> {
    check_query(idx, q)?;
    spec.validate(idx.len())?;
    let mut sess = QuerySession::new(idx.store(), q, idx.distance_mode());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (slots, err) = match spec.kind {
        QueryKind::Knn(k) => run_knn(idx, &mut sess, k, spec.error, false, &mut rng)?,
        QueryKind::Nn => run_knn(idx, &mut sess, 1, spec.error, true, &mut rng)?,
        QueryKind::Rnn(tau) => run_rnn(idx, &mut sess, tau, spec.error, spec.kappa),
    };
    let known = match slots.as_slice() {
        [s] => sess.known_distance(*s),
        _ => None,
    };
    let res = finish(idx.store(), slots.clone(), err, sess.into_instrumentation(), spec.seed);
    Ok((slots, res, known))
}

pub fn query(idx: &CctIndex, q: &Trajectory, spec: &QuerySpec) -> Result<QueryResult> {
    query_slots(idx, q, spec).map(|r| r.1)
}

/// Exact nearest neighbor by a bound-assisted scan over every stored trajectory.
pub fn linear_scan_nn(store: &TrajStore, q: &Trajectory, mode: DistanceMode) -> Result<QueryResult> {
    let d = store.dim().ok_or(CctError::EmptySet)?;
    if d != q.dim() {
        return Err(CctError::DimensionMismatch {
            expected: d,
            found: q.dim(),
        });
    }
    let mut sess = QuerySession::new(store, q, mode);
    let mut beta = f64::INFINITY;
    let mut cands = Vec::new();
    for p in 0..store.len() {
        if sess.lb(p) < beta && !sess.lb_fd(p, beta) {
            beta = beta.min(sess.ub(p));
            cands.push(p);
        }
    }
    sess.instr.set_stage(Stage::Reduce);
    let red = knn_reduce(store, &mut sess, &cands, beta, 1, 0.0)?;
    sess.instr.set_stage(Stage::Decide);
    let slot = match (red.admitted.first(), red.rest.len()) {
        (Some(&s), _) => s,
        (None, 1) => red.rest[0],
        _ => decide_nn(store, &mut sess, &red.rest),
    };
    Ok(finish(store, vec![slot], None, sess.into_instrumentation(), 0))
}

/// Exact distance from `q` to every trajectory of `trajs`, in input order.
pub fn exact_distances(trajs: &[Trajectory], q: &Trajectory) -> Result<Vec<(TrajId, f64)>> {
    let cap = oracle_cap();
    if trajs.len() > cap {
        return Err(CctError::OracleCapExceeded {
            size: trajs.len(),
            cap,
        });
    }
    trajs
        .iter()
        .map(|t| frechet::distance(t, q, DistanceMode::Auto).map(|d| (t.id(), d)))
        .collect()
}

/// Answer computed from exact distances only; the test oracle.
pub fn brute_force(trajs: &[Trajectory], q: &Trajectory, kind: QueryKind) -> Result<QueryResult> {
    if trajs.is_empty() {
        return Err(CctError::EmptySet);
    }
    let mut dists = exact_distances(trajs, q)?;
    let mut ids: Vec<TrajId> = match kind {
        QueryKind::Knn(k) if k > trajs.len() => {
            return Err(CctError::KTooLarge { k, size: trajs.len() })
        }
        QueryKind::Knn(k) => {
            dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            dists[..k].iter().map(|x| x.0).collect()
        }
        QueryKind::Nn => {
            dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            vec![dists[0].0]
        }
        QueryKind::Rnn(tau) => dists.iter().filter(|x| x.1 <= tau).map(|x| x.0).collect(),
    };
    ids.sort_unstable();
    Ok(QueryResult {
        ids,
        reported_error: None,
        instr: Instrumentation::default(),
        seed: 0,
    })
}
