//! Cheap lower and upper bounds on the continuous Fréchet distance.
//!
//! Bounds are combined into three groups: the lower-bound group (maximum of the
//! start/end, bounding-box and simplified-trajectory bounds), the traversal race
//! decision predicate, and the upper-bound group (minimum of the bounding-box
//! bound and three greedy discrete couplings).

use serde::{Deserialize, Serialize};

use crate::geometry::{dist, point_segment_dist, Interval, Trajectory};
use crate::instrument::Instrumentation;

pub type BoundInterval = Interval;

/// Rotation angles (degrees) of the extra boxes kept for planar trajectories.
pub const ROTATIONS_DEG: [f64; 2] = [22.5, 45.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BBox {
    pub fn of_points<'a, I: IntoIterator<Item = &'a [f64]>>(dim: usize, points: I) -> Self {
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for p in points {
            for k in 0..dim {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        Self { min, max }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(k, &x)| self.min[k] <= x && x <= self.max[k])
    }

    fn gap(&self, other: &BBox, k: usize) -> f64 {
        (self.min[k] - other.max[k])
            .max(other.min[k] - self.max[k])
            .max(0.0)
    }
}

fn rotate_box(t: &Trajectory, deg: f64) -> BBox {
    let (s, c) = deg.to_radians().sin_cos();
    let mut min = vec![f64::INFINITY; 2];
    let mut max = vec![f64::NEG_INFINITY; 2];
    for v in t.vertices() {
        let x = c * v[0] - s * v[1];
        let y = s * v[0] + c * v[1];
        min[0] = min[0].min(x);
        max[0] = max[0].max(x);
        min[1] = min[1].min(y);
        max[1] = max[1].max(y);
    }
    BBox { min, max }
}

/// Per-trajectory inputs of the bounds, computed once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFeatures {
    pub bbox: BBox,
    /// Boxes of the trajectory rotated counter-clockwise about the origin; planar only.
    pub rotated_bboxes: Option<[BBox; 2]>,
    /// Interval around the distance between the trajectory and its start-end segment.
    pub st_dist: Interval,
    pub reach: f64,
}

impl TrajectoryFeatures {
    pub fn compute(t: &Trajectory) -> Self {
        let bbox = BBox::of_points(t.dim(), t.vertices());
        let rotated_bboxes = (t.dim() == 2).then(|| ROTATIONS_DEG.map(|deg| rotate_box(t, deg)));
        let reach = t.reach();
        let tol = (1e-9 * reach).max(1e-12);
        let st_dist = t.segment_distance(t.first(), t.last(), tol);
        Self {
            bbox,
            rotated_bboxes,
            st_dist,
            reach,
        }
    }
}

/// A trajectory together with its precomputed features.
#[derive(Clone, Copy, Debug)]
pub struct TrajRef<'a> {
    pub traj: &'a Trajectory,
    pub feat: &'a TrajectoryFeatures,
}

impl<'a> TrajRef<'a> {
    pub fn new(traj: &'a Trajectory, feat: &'a TrajectoryFeatures) -> Self {
        Self { traj, feat }
    }
}

pub fn lb_sev(p: &Trajectory, q: &Trajectory) -> f64 {
    dist(p.first(), q.first()).max(dist(p.last(), q.last()))
}

/// Maximum distance between corresponding facets of two boxes.
///
/// The extreme vertex of the larger box along an axis must be matched to a point
/// of the other box, which lies on the inner side of the corresponding facet.
fn facet_bound(a: &BBox, b: &BBox) -> f64 {
    let d = a.min.len();
    let gaps: Vec<f64> = (0..d).map(|k| a.gap(b, k)).collect();
    let total: f64 = gaps.iter().map(|g| g * g).sum();
    (0..d)
        .map(|k| {
            let delta = (a.max[k] - b.max[k]).abs().max((a.min[k] - b.min[k]).abs());
            let rest = total - gaps[k] * gaps[k];
            (delta * delta + rest.max(0.0)).sqrt()
        })
        .fold(0.0, f64::max)
}

fn coordinate_bound(a: &BBox, b: &BBox) -> f64 {
    (0..a.min.len())
        .map(|k| (a.max[k] - b.max[k]).abs().max((a.min[k] - b.min[k]).abs()))
        .fold(0.0, f64::max)
}

fn corner_bound(a: &BBox, b: &BBox) -> f64 {
    (0..a.min.len())
        .map(|k| {
            let x = (a.max[k] - b.min[k]).abs().max((b.max[k] - a.min[k]).abs());
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

fn joint_diagonal(a: &BBox, b: &BBox) -> f64 {
    (0..a.min.len())
        .map(|k| {
            let x = a.max[k].max(b.max[k]) - a.min[k].min(b.min[k]);
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

/// Bounding-box lower bound without the rotated boxes.
pub fn lb_bb_unrotated(p: &TrajectoryFeatures, q: &TrajectoryFeatures) -> f64 {
    if p.bbox.min.len() <= 3 {
        facet_bound(&p.bbox, &q.bbox)
    } else {
        coordinate_bound(&p.bbox, &q.bbox)
    }
}

/// Rounding allowance for boxes built from rotated coordinates.
fn rotation_slack(a: &BBox, b: &BBox) -> f64 {
    let scale = [&a.min, &a.max, &b.min, &b.max]
        .iter()
        .flat_map(|v| v.iter())
        .fold(1.0f64, |m, x| m.max(x.abs()));
    1e-13 * scale
}

pub fn lb_bb(p: &TrajectoryFeatures, q: &TrajectoryFeatures) -> f64 {
    let mut best = lb_bb_unrotated(p, q);
    if let (Some(pr), Some(qr)) = (&p.rotated_bboxes, &q.rotated_bboxes) {
        for (a, b) in pr.iter().zip(qr) {
            best = best.max(facet_bound(a, b) - rotation_slack(a, b));
        }
    }
    best
}

pub fn ub_bb_unrotated(p: &TrajectoryFeatures, q: &TrajectoryFeatures) -> f64 {
    if p.bbox.min.len() <= 2 {
        corner_bound(&p.bbox, &q.bbox)
    } else {
        joint_diagonal(&p.bbox, &q.bbox)
    }
}

pub fn ub_bb(p: &TrajectoryFeatures, q: &TrajectoryFeatures) -> f64 {
    let mut best = ub_bb_unrotated(p, q);
    if let (Some(pr), Some(qr)) = (&p.rotated_bboxes, &q.rotated_bboxes) {
        for (a, b) in pr.iter().zip(qr) {
            best = best.min(corner_bound(a, b) + rotation_slack(a, b));
        }
    }
    best
}

/// `|δ_F(P,P') - δ_F(Q,Q')| / 2`, evaluated soundly on the certified intervals.
pub fn lb_st(p: &TrajectoryFeatures, q: &TrajectoryFeatures) -> f64 {
    let (a, b) = (p.st_dist, q.st_dist);
    ((a.lo - b.hi).max(b.lo - a.hi) / 2.0).max(0.0)
}

/// One direction of the traversal race. Returns true when `q`'s edges run out
/// before every vertex of `p` found an edge within `alpha`.
fn traversal_race(p: &Trajectory, q: &Trajectory, alpha: f64) -> bool {
    let (n, m) = (p.len(), q.len());
    // Edge e of q, with a degenerate edge at each end.
    let edge = |e: usize| -> (&[f64], &[f64]) {
        if e == 0 {
            (q.vertex(0), q.vertex(0))
        } else if e == m {
            (q.vertex(m - 1), q.vertex(m - 1))
        } else {
            (q.vertex(e - 1), q.vertex(e))
        }
    };
    let (mut i, mut e) = (0, 0);
    while i < n && e <= m {
        let (a, b) = edge(e);
        if point_segment_dist(p.vertex(i), a, b) <= alpha {
            i += 1;
        } else {
            e += 1;
        }
    }
    i < n
}

/// True only if `δ_F(p, q) > alpha`; false carries no information.
pub fn lb_tr(p: &Trajectory, q: &Trajectory, alpha: f64) -> bool {
    if !(alpha >= 0.0) {
        return alpha < 0.0;
    }
    traversal_race(p, q, alpha) || traversal_race(q, p, alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdfVariant {
    Forward,
    Reverse,
    Diagonal,
}

/// Maximum matched-vertex distance along a greedy monotone vertex coupling.
pub fn ub_adf(p: &Trajectory, q: &Trajectory, variant: AdfVariant) -> f64 {
    let (n, m) = (p.len(), q.len());
    let d = |i: usize, j: usize| dist(p.vertex(i), q.vertex(j));
    match variant {
        AdfVariant::Forward | AdfVariant::Reverse => {
            let fwd = variant == AdfVariant::Forward;
            let (mut i, mut j) = if fwd { (0, 0) } else { (n - 1, m - 1) };
            let mut worst = d(i, j);
            loop {
                let (ri, rj) = if fwd { (n - 1 - i, m - 1 - j) } else { (i, j) };
                if ri == 0 && rj == 0 {
                    break;
                }
                let step = |x: usize, r: usize| if fwd { x + r } else { x - r };
                // Candidates in preference order: diagonal, then the longer remainder.
                let mut cands: Vec<(usize, usize)> = Vec::with_capacity(3);
                if ri > 0 && rj > 0 {
                    cands.push((step(i, 1), step(j, 1)));
                }
                let p_first = ri >= rj;
                let p_step = (ri > 0).then(|| (step(i, 1), j));
                let q_step = (rj > 0).then(|| (i, step(j, 1)));
                if p_first {
                    cands.extend(p_step);
                    cands.extend(q_step);
                } else {
                    cands.extend(q_step);
                    cands.extend(p_step);
                }
                let mut best = cands[0];
                let mut best_d = d(best.0, best.1);
                for &c in &cands[1..] {
                    let dc = d(c.0, c.1);
                    if dc < best_d {
                        best = c;
                        best_d = dc;
                    }
                }
                (i, j) = best;
                worst = worst.max(best_d);
            }
            worst
        }
        AdfVariant::Diagonal => {
            let mut worst: f64 = 0.0;
            if n >= m {
                for i in 1..=n {
                    let j = (m * i).div_ceil(n);
                    worst = worst.max(d(i - 1, j - 1));
                }
            } else {
                for j in 1..=m {
                    let i = (n * j).div_ceil(m);
                    worst = worst.max(d(i - 1, j - 1));
                }
            }
            worst
        }
    }
}

/// Lower-bound group: maximum of the start/end, box and simplified-trajectory bounds.
pub fn lb_group(p: TrajRef, q: TrajRef, instr: &mut Instrumentation) -> f64 {
    let c = instr.counters_mut();
    c.sev += 1;
    c.bb += 1;
    c.st += 1;
    lb_sev(p.traj, q.traj)
        .max(lb_bb(p.feat, q.feat))
        .max(lb_st(p.feat, q.feat))
}

/// Upper-bound group: minimum of the box bound and the three greedy couplings.
pub fn ub_group(p: TrajRef, q: TrajRef, instr: &mut Instrumentation) -> f64 {
    let c = instr.counters_mut();
    c.ub_bb += 1;
    c.adf += 3;
    [AdfVariant::Forward, AdfVariant::Reverse, AdfVariant::Diagonal]
        .into_iter()
        .map(|v| ub_adf(p.traj, q.traj, v))
        .fold(ub_bb(p.feat, q.feat), f64::min)
}

pub fn lb_fd(p: TrajRef, q: TrajRef, alpha: f64, instr: &mut Instrumentation) -> bool {
    instr.counters_mut().tr += 1;
    lb_tr(p.traj, q.traj, alpha)
}

/// Bracket `[lo, hi]` around `δ_F(p, q)` from bounds that need no precomputation.
pub fn quick_bracket(p: &Trajectory, q: &Trajectory) -> (f64, f64) {
    let bp = BBox::of_points(p.dim(), p.vertices());
    let bq = BBox::of_points(q.dim(), q.vertices());
    let lo = lb_sev(p, q).max(if p.dim() <= 3 {
        facet_bound(&bp, &bq)
    } else {
        coordinate_bound(&bp, &bq)
    });
    let hi = [AdfVariant::Forward, AdfVariant::Reverse, AdfVariant::Diagonal]
        .into_iter()
        .map(|v| ub_adf(p, q, v))
        .fold(f64::INFINITY, f64::min);
    (lo.min(hi), hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(id: u64, pts: &[&[f64]]) -> Trajectory {
        Trajectory::from_points(id, pts).unwrap()
    }

    fn feat(t: &Trajectory) -> TrajectoryFeatures {
        TrajectoryFeatures::compute(t)
    }

    #[test]
    fn features_examples() {
        let a = t(0, &[&[0.0, 0.0], &[1.0, 0.0]]);
        let f = feat(&a);
        assert_eq!(f.bbox.min, vec![0.0, 0.0]);
        assert_eq!(f.bbox.max, vec![1.0, 0.0]);
        assert!(f.st_dist.lo == 0.0 && f.st_dist.hi < 1e-9);
        assert_eq!(f.reach, 1.0);
        assert!(f.rotated_bboxes.is_some());

        let b = t(1, &[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.0]]);
        let f = feat(&b);
        assert_eq!(f.bbox.max, vec![2.0, 1.0]);
        assert!(f.st_dist.lo <= 1.0 && 1.0 <= f.st_dist.hi + 1e-15);
        assert!(f.st_dist.width() <= 1e-9 * 2.0 + 1e-15);

        let c = t(2, &[&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]]);
        assert!(feat(&c).rotated_bboxes.is_none());
    }

    #[test]
    fn sev_examples() {
        let a = t(0, &[&[0.0, 0.0], &[5.0, 0.0]]);
        assert_eq!(lb_sev(&a, &a), 0.0);
        let b = t(1, &[&[3.0, 0.0], &[5.0, 0.0]]);
        assert_eq!(lb_sev(&a, &b), 3.0);
        let c = t(2, &[&[0.0, 1.0], &[5.0, 4.0]]);
        assert_eq!(lb_sev(&a, &c), 4.0);
    }

    #[test]
    fn bb_lower_examples() {
        let a = t(0, &[&[0.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(lb_bb(&feat(&a), &feat(&a)), 0.0);

        let p = feat(&t(0, &[&[0.0, 0.0], &[1.0, 1.0]]));
        let q = feat(&t(1, &[&[3.0, 0.0], &[4.0, 1.0]]));
        assert!((lb_bb_unrotated(&p, &q) - 3.0).abs() < 1e-12);

        let p = feat(&t(0, &[&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 1.0]]));
        let q = feat(&t(1, &[&[0.0, 0.0, 0.0, 0.0], &[5.0, 1.0, 1.0, 1.0]]));
        assert_eq!(lb_bb(&p, &q), 4.0);
    }

    #[test]
    fn bb_lower_is_sound_in_3d_for_crossed_extremes() {
        // The extreme y vertex is not the extreme z vertex; 1-faces of the box
        // would overestimate here.
        let p = t(0, &[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let q = t(1, &[&[0.0, 0.0, 0.0], &[0.0, 1e-3, 0.0]]);
        let lb = lb_bb(&feat(&p), &feat(&q));
        let d = crate::frechet::distance(&p, &q, crate::frechet::DistanceMode::CriticalValues).unwrap();
        assert!(lb <= d + 1e-12, "lb {lb} > δ {d}");
    }

    #[test]
    fn bb_upper_examples() {
        let p = feat(&t(0, &[&[0.0, 0.0], &[1.0, 1.0]]));
        let u = ub_bb(&p, &p);
        assert!(u <= 2f64.sqrt() + 1e-12);
        assert!((ub_bb_unrotated(&p, &p) - 2f64.sqrt()).abs() < 1e-12);

        let p = feat(&t(0, &[&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]]));
        assert!((ub_bb(&p, &p) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn st_examples() {
        let a = feat(&t(0, &[&[0.0, 0.0], &[1.0, 0.0]]));
        let b = feat(&t(1, &[&[5.0, 5.0], &[6.0, 5.0]]));
        assert_eq!(lb_st(&a, &b), 0.0);
        let mut c = b.clone();
        c.st_dist = Interval::point(4.0);
        assert_eq!(lb_st(&a, &c), 2.0);
        assert_eq!(lb_st(&c, &a), 2.0);
    }

    #[test]
    fn tr_examples() {
        let a = t(0, &[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 1.0]]);
        assert!(!lb_tr(&a, &a, 0.0));
        let p = t(0, &[&[0.0, 0.0], &[4.0, 0.0]]);
        let q = t(1, &[&[0.0, 5.0], &[4.0, 5.0]]);
        assert!(lb_tr(&p, &q, 1.0));
        assert!(!lb_tr(&p, &q, 10.0));
    }

    #[test]
    fn adf_examples() {
        let a = t(0, &[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 1.0]]);
        for v in [AdfVariant::Forward, AdfVariant::Reverse, AdfVariant::Diagonal] {
            assert_eq!(ub_adf(&a, &a, v), 0.0);
        }
        let p = t(0, &[&[0.0, 0.0], &[1.0, 0.0]]);
        let q = t(1, &[&[0.0, 1.0], &[1.0, 1.0]]);
        for v in [AdfVariant::Forward, AdfVariant::Reverse, AdfVariant::Diagonal] {
            assert_eq!(ub_adf(&p, &q, v), 1.0);
        }
        let p = t(0, &[&[0.0, 0.0], &[2.0, 0.0]]);
        let q = t(1, &[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.0]]);
        assert!((ub_adf(&p, &q, AdfVariant::Forward) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn groups_on_identical() {
        let a = t(0, &[&[0.0, 0.0], &[1.0, 0.5], &[2.0, 1.0], &[3.0, 0.0]]);
        let f = feat(&a);
        let r = TrajRef::new(&a, &f);
        let mut instr = Instrumentation::default();
        assert_eq!(lb_group(r, r, &mut instr), 0.0);
        assert_eq!(ub_group(r, r, &mut instr), 0.0);
        assert!(!lb_fd(r, r, 0.0, &mut instr));
    }
}
