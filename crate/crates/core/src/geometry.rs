//! Trajectories as polygonal curves in R^d.
//!
//! A [`Trajectory`] stores its vertices as one flat coordinate buffer. Ingestion
//! collapses consecutive duplicate vertices so that every segment has positive
//! length, which keeps the free-space computations well defined.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{CctError, Result};
use crate::frechet;

pub type TrajId = u64;

/// A closed real interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is inverted");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean distance from `p` to the closed segment `ab`.
pub fn point_segment_dist(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut vv = 0.0;
    let mut wv = 0.0;
    for k in 0..p.len() {
        let v = b[k] - a[k];
        vv += v * v;
        wv += (p[k] - a[k]) * v;
    }
    if vv == 0.0 {
        return dist(p, a);
    }
    let t = (wv / vv).clamp(0.0, 1.0);
    p.iter()
        .zip(a.iter().zip(b))
        .map(|(pk, (ak, bk))| {
            let x = ak + t * (bk - ak) - pk;
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

/// A polygonal curve through at least two vertices in R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    id: TrajId,
    dim: usize,
    coords: Vec<f64>,
}

impl Trajectory {
    /// Ingests a row-major vertex matrix, collapsing consecutive duplicate rows.
    pub fn new(id: TrajId, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(CctError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if coords.is_empty() {
            return Err(CctError::EmptyInput(id));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(CctError::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(CctError::Parse(format!(
                "trajectory {id} has a non-finite coordinate"
            )));
        }
        let mut kept: Vec<f64> = Vec::with_capacity(coords.len());
        for row in coords.chunks_exact(dim) {
            let dup = kept.len() >= dim && kept[kept.len() - dim..] == *row;
            if !dup {
                kept.extend_from_slice(row);
            }
        }
        if kept.len() < 2 * dim {
            return Err(CctError::DegenerateTrajectory(id));
        }
        Ok(Self {
            id,
            dim,
            coords: kept,
        })
    }

    /// Ingests a list of points; all points must share one dimension.
    pub fn from_points<P: AsRef<[f64]>>(id: TrajId, points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(CctError::EmptyInput(id))?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(CctError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(id, dim, coords)
    }

    /// Builds a trajectory without normalization. Callers guarantee the invariants.
    pub(crate) fn from_raw(id: TrajId, dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(coords.len() >= 2 * dim && coords.len().is_multiple_of(dim));
        Self { id, dim, coords }
    }

    pub fn id(&self) -> TrajId {
        self.id
    }

    pub fn with_id(&self, id: TrajId) -> Self {
        Self {
            id,
            dim: self.dim,
            coords: self.coords.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn first(&self) -> &[f64] {
        self.vertex(0)
    }

    pub fn last(&self) -> &[f64] {
        self.vertex(self.len() - 1)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Sub-curve over vertices `i..=j`.
    pub(crate) fn slice(&self, i: usize, j: usize) -> Self {
        Self::from_raw(
            self.id,
            self.dim,
            self.coords[i * self.dim..(j + 1) * self.dim].to_vec(),
        )
    }

    pub fn longest_segment(&self) -> f64 {
        (1..self.len())
            .map(|i| dist(self.vertex(i - 1), self.vertex(i)))
            .fold(0.0, f64::max)
    }

    /// Largest distance from the start vertex to any other vertex.
    pub fn reach(&self) -> f64 {
        let start = self.first();
        self.vertices()
            .skip(1)
            .map(|v| dist(start, v))
            .fold(0.0, f64::max)
    }

    /// Greedy Fréchet-bounded simplification over a subsequence of the vertices.
    ///
    /// From the current anchor, the shortcut is extended by exponential and then
    /// binary search; each accepted shortcut `p_i p_j` satisfies
    /// `δ_F(<p_i..p_j>, p_i p_j) <= eps_hat`, so the concatenation does too.
    pub fn simplify(&self, eps_hat: f64) -> Trajectory {
        let n = self.len();
        let eps_hat = eps_hat.max(0.0);
        let accepts = |i: usize, j: usize| -> bool {
            if j == i + 1 {
                return true;
            }
            let (a, b) = (self.vertex(i), self.vertex(j));
            if a == b {
                return false;
            }
            let mut seg = Vec::with_capacity(2 * self.dim);
            seg.extend_from_slice(a);
            seg.extend_from_slice(b);
            let seg = Trajectory::from_raw(self.id, self.dim, seg);
            frechet::decide_unchecked(&self.slice(i, j), &seg, eps_hat)
        };

        let mut kept = vec![0usize];
        let mut i = 0;
        while i < n - 1 {
            let mut good = i + 1;
            let mut bad = n;
            let mut step = 2;
            loop {
                let probe = (i + step).min(n - 1);
                if probe <= good {
                    break;
                }
                if accepts(i, probe) {
                    good = probe;
                    if probe == n - 1 {
                        break;
                    }
                    step *= 2;
                } else {
                    bad = probe;
                    break;
                }
            }
            while bad - good > 1 {
                let mid = good + (bad - good) / 2;
                if accepts(i, mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            kept.push(good);
            i = good;
        }
        let mut coords = Vec::with_capacity(kept.len() * self.dim);
        for &k in &kept {
            coords.extend_from_slice(self.vertex(k));
        }
        Trajectory::from_raw(self.id, self.dim, coords)
    }

    /// Certified interval around `δ_F(self, ab)` of width at most `tol`.
    pub fn segment_distance(&self, a: &[f64], b: &[f64], tol: f64) -> Interval {
        assert_eq!(a.len(), self.dim);
        assert_eq!(b.len(), self.dim);
        let tol = if tol > 0.0 { tol } else { 1e-12 };
        let mut coords = Vec::with_capacity(2 * self.dim);
        coords.extend_from_slice(a);
        coords.extend_from_slice(b);
        let seg = Trajectory::from_raw(self.id, self.dim, coords);

        let mut lo = dist(self.first(), a).max(dist(self.last(), b));
        if frechet::decide_unchecked(self, &seg, lo) {
            return Interval::point(lo);
        }
        let mut hi = frechet::discrete_frechet_unchecked(self, &seg);
        while hi - lo > tol {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            if frechet::decide_unchecked(self, &seg, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Interval::new(lo, hi)
    }
}

/// A set of trajectories sharing one dimension, with unique ids.
#[derive(Clone, Debug, Default)]
pub struct TrajectorySet {
    trajectories: Vec<Trajectory>,
    by_id: HashMap<TrajId, usize>,
    dim: Option<usize>,
}

impl TrajectorySet {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        let mut set = Self::default();
        for t in trajectories {
            set.push(t)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, t: Trajectory) -> Result<()> {
        if let Some(d) = self.dim {
            if t.dim() != d {
                return Err(CctError::DimensionMismatch {
                    expected: d,
                    found: t.dim(),
                });
            }
        }
        if self.by_id.contains_key(&t.id()) {
            return Err(CctError::DuplicateId(t.id()));
        }
        self.dim = Some(t.dim());
        self.by_id.insert(t.id(), self.trajectories.len());
        self.trajectories.push(t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn get(&self, id: TrajId) -> Option<&Trajectory> {
        self.by_id.get(&id).map(|&i| &self.trajectories[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trajectory> {
        self.trajectories.iter()
    }

    pub fn as_slice(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn into_vec(self) -> Vec<Trajectory> {
        self.trajectories
    }
}

impl<'a> IntoIterator for &'a TrajectorySet {
    type Item = &'a Trajectory;
    type IntoIter = std::slice::Iter<'a, Trajectory>;

    fn into_iter(self) -> Self::IntoIter {
        self.trajectories.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(pts: &[[f64; 2]]) -> Trajectory {
        Trajectory::from_points(0, pts).unwrap()
    }

    #[test]
    fn ingest_collapses_duplicates() {
        let t = traj(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(t.len(), 2);
        assert_eq!(t.coords(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn ingest_rejects_single_vertex() {
        let err = Trajectory::from_points(7, &[[0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, CctError::DegenerateTrajectory(7)));
        let err = Trajectory::from_points(7, &[[1.0, 1.0], [1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, CctError::DegenerateTrajectory(7)));
    }

    #[test]
    fn ingest_errors() {
        let empty: Vec<Vec<f64>> = vec![];
        assert!(matches!(
            Trajectory::from_points(1, &empty),
            Err(CctError::EmptyInput(1))
        ));
        let ragged = vec![vec![0.0, 0.0], vec![1.0]];
        assert!(matches!(
            Trajectory::from_points(1, &ragged),
            Err(CctError::DimensionMismatch { .. })
        ));
        assert!(Trajectory::new(1, 2, vec![0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn ingest_identity() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn reach_examples() {
        assert_eq!(traj(&[[0.0, 0.0], [3.0, 4.0]]).reach(), 5.0);
        assert_eq!(traj(&[[0.0, 0.0], [1.0, 0.0], [0.0, 0.5]]).reach(), 1.0);
        assert_eq!(traj(&[[0.0, 0.0], [2.0, 0.0], [5.0, 0.0]]).reach(), 5.0);
    }

    #[test]
    fn simplify_collinear_at_zero() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let s = t.simplify(0.0);
        assert_eq!(s.coords(), &[0.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn simplify_keeps_corners_at_zero() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [3.0, 2.0]]);
        let s = t.simplify(0.0);
        assert_eq!(
            s.vertices().collect::<Vec<_>>(),
            vec![&[0.0, 0.0][..], &[2.0, 0.0], &[2.0, 1.0], &[3.0, 2.0]]
        );
    }

    #[test]
    fn simplify_zigzag() {
        let t = traj(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [3.0, 1.0], [4.0, 0.0]]);
        let s = t.simplify(1.5);
        assert_eq!(s.coords(), &[0.0, 0.0, 4.0, 0.0]);
        let iv = t.segment_distance(&[0.0, 0.0], &[4.0, 0.0], 1e-9);
        assert!(iv.contains(1.0) || (iv.lo - 1.0).abs() < 1e-9);
        assert!(iv.hi <= 1.5);
    }

    #[test]
    fn segment_distance_examples() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0]]);
        let iv = t.segment_distance(&[0.0, 0.0], &[1.0, 0.0], 1e-9);
        assert!(iv.contains(0.0) && iv.width() <= 1e-9);

        let t = traj(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]);
        let iv = t.segment_distance(&[0.0, 0.0], &[2.0, 0.0], 1e-9);
        assert!(iv.lo <= 1.0 + 1e-12 && 1.0 <= iv.hi + 1e-12, "{iv:?}");
        assert!(iv.width() <= 1e-9);

        let t = traj(&[[0.0, 0.0], [1.0, 0.0]]);
        let iv = t.segment_distance(&[0.0, 2.0], &[1.0, 2.0], 1e-9);
        assert!(iv.contains(2.0));
    }

    #[test]
    fn set_rejects_duplicates_and_mixed_dims() {
        let a = traj(&[[0.0, 0.0], [1.0, 0.0]]);
        let b = Trajectory::from_points(0, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            TrajectorySet::new(vec![a.clone(), a.clone()]),
            Err(CctError::DuplicateId(0))
        ));
        assert!(matches!(
            TrajectorySet::new(vec![a, b.with_id(1)]),
            Err(CctError::DimensionMismatch { .. })
        ));
    }
}
