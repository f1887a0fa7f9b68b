//! Batch constructions: exact (farthest-first), relaxed (recursive bisector
//! splits) and approximate (upper bounds only).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bisector_localize, BuildVariant, CctIndex, FixMode, RadiusKind, Side};
use crate::error::{CctError, Result};
use crate::frechet::DistanceMode;
use crate::geometry::{Interval, TrajId, TrajectorySet};
use crate::session::{PairOracle, PairSession};
use crate::store::{Slot, TrajStore};

/// Memoized bound pairs kept before the memo is flushed.
const MEMO_LIMIT: usize = 4_000_000;

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub seed: u64,
    /// Overrides the seeded choice of the first center.
    pub first_center: Option<TrajId>,
    pub mode: DistanceMode,
}

impl BuildOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            first_center: None,
            mode: DistanceMode::Auto,
        }
    }
}

fn prepare(set: TrajectorySet, opts: &BuildOptions, variant: BuildVariant) -> Result<(CctIndex, Slot)> {
    if set.is_empty() {
        return Err(CctError::EmptySet);
    }
    let store = TrajStore::from_set(set);
    let first = match opts.first_center {
        Some(id) => store.slot(id).ok_or(CctError::UnknownId(id))?,
        None => ChaCha8Rng::seed_from_u64(opts.seed).gen_range(0..store.len()),
    };
    let mut idx = CctIndex::empty(opts.seed);
    idx.store = store;
    idx.variant = variant;
    idx.mode = opts.mode;
    idx.make_root_leaf(first);
    idx.pick_order.push(idx.store.id(first));
    Ok((idx, first))
}

/// Farthest-first clustering run to completion; every pick splits the leaf of
/// the center it was assigned to.
pub(super) fn build_exact(set: TrajectorySet, opts: &BuildOptions) -> Result<CctIndex> {
    let (mut idx, first) = prepare(set, opts, BuildVariant::Exact)?;
    let store = std::mem::take(&mut idx.store);
    let n = store.len();
    let mut sess = PairSession::new(&store, opts.mode);

    let mut assigned = vec![first; n];
    let mut iv = vec![Interval::point(0.0); n];
    let mut remaining: Vec<Slot> = (0..n).filter(|&x| x != first).collect();
    for &x in &remaining {
        iv[x] = Interval::new(sess.lb(x, first), sess.ub(x, first));
    }
    sess.forget_bounds();

    while !remaining.is_empty() {
        let c = loop {
            let (mut top, mut second_hi) = (remaining[0], f64::NEG_INFINITY);
            for &x in &remaining[1..] {
                let better = iv[x].hi > iv[top].hi
                    || (iv[x].hi == iv[top].hi && store.id(x) < store.id(top));
                if better {
                    second_hi = second_hi.max(iv[top].hi);
                    top = x;
                } else {
                    second_hi = second_hi.max(iv[x].hi);
                }
            }
            if iv[top].lo == iv[top].hi || iv[top].lo >= second_hi {
                break top;
            }
            iv[top] = Interval::point(sess.df(top, assigned[top]));
        };
        remaining.retain(|&x| x != c);
        idx.pick_order.push(store.id(c));
        idx.split_leaf(assigned[c], c);

        for &x in &remaining {
            let loc = bisector_localize(&mut sess, x, assigned[x], c, Some(iv[x]), None);
            match loc.side {
                Side::Second => {
                    iv[x] = match sess.known_distance(x, c) {
                        Some(d) => Interval::point(d),
                        None => {
                            let hi = sess.ub(x, c).min(iv[x].hi);
                            Interval::new(sess.lb(x, c).min(hi), hi)
                        }
                    };
                    assigned[x] = c;
                }
                Side::First => {
                    if let Some(d) = sess.known_distance(x, assigned[x]) {
                        iv[x] = Interval::point(d);
                    }
                }
            }
        }
        sess.forget_bounds();
    }

    let order: Vec<Slot> = idx.pick_order.iter().map(|&id| store.slot(id).unwrap()).collect();
    for &s in &order[1..] {
        idx.fix_ancestor_radius(&mut sess, s, FixMode::Exact, None);
    }
    idx.build_stats = sess.instr;
    idx.store = store;
    Ok(idx)
}

/// Furthest member of `members` from `c` (excluding `c`) and its distance.
fn furthest_exact(sess: &mut PairSession, store: &TrajStore, c: Slot, members: &[Slot]) -> (Slot, f64) {
    let mut alpha = f64::NEG_INFINITY;
    let mut cands: Vec<(f64, Slot)> = Vec::with_capacity(members.len());
    for &x in members {
        if x != c {
            alpha = alpha.max(sess.lb(x, c));
            cands.push((sess.ub(x, c), x));
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(store.id(a.1).cmp(&store.id(b.1))));
    let (mut best, mut best_d) = (cands[0].1, f64::NEG_INFINITY);
    for &(ub, x) in &cands {
        if ub < alpha || ub < best_d || (ub == best_d && store.id(x) > store.id(best)) {
            break;
        }
        let d = sess.df(x, c);
        if d > best_d || (d == best_d && store.id(x) < store.id(best)) {
            best = x;
            best_d = d;
        }
    }
    (best, best_d)
}

fn furthest_upper(sess: &mut PairSession, store: &TrajStore, c: Slot, members: &[Slot]) -> (Slot, f64) {
    let mut best: Option<(Slot, f64)> = None;
    for &x in members {
        if x == c {
            continue;
        }
        let u = sess.ub(x, c);
        let better = match best {
            None => true,
            Some((b, bu)) => u > bu || (u == bu && store.id(x) < store.id(b)),
        };
        if better {
            best = Some((x, u));
        }
    }
    best.expect("cluster has at least two members")
}

fn build_recursive(set: TrajectorySet, opts: &BuildOptions, approx: bool) -> Result<CctIndex> {
    let variant = if approx { BuildVariant::Approx } else { BuildVariant::Relaxed };
    let (mut idx, _) = prepare(set, opts, variant)?;
    let store = std::mem::take(&mut idx.store);
    let mut sess = PairSession::new(&store, opts.mode);

    let root = idx.root.expect("root was created");
    let mut stack: Vec<(usize, Vec<Slot>)> = vec![(root, (0..store.len()).collect())];
    while let Some((v, members)) = stack.pop() {
        if members.len() < 2 {
            continue;
        }
        if sess_memo_large(&sess) {
            sess.forget_bounds();
        }
        let c = idx.nodes[v].center;
        let (f, rad) = if approx {
            furthest_upper(&mut sess, &store, c, &members)
        } else {
            furthest_exact(&mut sess, &store, c, &members)
        };
        idx.nodes[v].radius = rad;
        idx.nodes[v].radius_kind = if approx { RadiusKind::UpperBound } else { RadiusKind::Exact };
        let b = idx.split_leaf(c, f);
        let a = idx.leaf_of[c];

        let (mut near_c, mut near_f) = (vec![c], vec![f]);
        for &x in &members {
            if x == c || x == f {
                continue;
            }
            let side = if approx {
                if sess.ub(x, c) <= sess.ub(x, f) {
                    Side::First
                } else {
                    Side::Second
                }
            } else {
                bisector_localize(&mut sess, x, c, f, None, Some(rad)).side
            };
            match side {
                Side::First => near_c.push(x),
                Side::Second => near_f.push(x),
            }
        }
        stack.push((b, near_f));
        stack.push((a, near_c));
    }
    idx.build_stats = sess.instr;
    idx.store = store;
    Ok(idx)
}

fn sess_memo_large(sess: &PairSession) -> bool {
    sess.memo_len() > MEMO_LIMIT
}

pub(super) fn build_relaxed(set: TrajectorySet, opts: &BuildOptions) -> Result<CctIndex> {
    build_recursive(set, opts, false)
}

pub(super) fn build_approx(set: TrajectorySet, opts: &BuildOptions) -> Result<CctIndex> {
    build_recursive(set, opts, true)
}
