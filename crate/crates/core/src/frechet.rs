//! Continuous and discrete Fréchet distance kernels.
//!
//! [`decide`] is the free-space reachability test. [`distance`] computes the
//! continuous distance either by binary search over the finite set of critical
//! values or by bisection on [`decide`] inside a bound bracket. The critical-value
//! search is a reconstruction of an exact cubic method; it enumerates
//!
//! * the start and end vertex distances,
//! * every vertex-to-edge distance in both directions,
//! * for every vertex pair of one curve and every edge of the other, the distance
//!   realised where the pair's bisector hyperplane crosses the edge,
//!
//! and returns the smallest candidate accepted by the decision procedure.

use crate::bounds;
use crate::error::{CctError, Result};
use crate::geometry::{dist, dot, point_segment_dist, Trajectory};

/// Slack for comparisons of free-space interval endpoints, in edge-parameter units.
const PARAM_SLACK: f64 = 1e-12;
/// Relative size below which a negative discriminant is treated as a tangency.
const TANGENT_REL: f64 = 1e-12;
/// Relative inflation of `eps²` so that values computed as a square root are
/// accepted when squared back.
const EPS_SQ_INFLATE: f64 = 1e-12;

/// Largest `n * m` for which [`DistanceMode::Auto`] uses critical values.
pub const CRITICAL_VALUE_CELLS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DistanceMode {
    /// Binary search over all critical values; exact.
    CriticalValues,
    /// Bisection on the decision procedure to absolute width `tol`; returns the upper end.
    Bisection { tol: f64 },
    /// Critical values for small inputs, bisection at `1e-9 * UB` above.
    Auto,
}

fn check_dims(p: &Trajectory, q: &Trajectory) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(CctError::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(())
}

/// True iff `δ_F(p, q) <= eps`.
pub fn decide(p: &Trajectory, q: &Trajectory, eps: f64) -> Result<bool> {
    check_dims(p, q)?;
    Ok(decide_unchecked(p, q, eps))
}

pub fn distance(p: &Trajectory, q: &Trajectory, mode: DistanceMode) -> Result<f64> {
    check_dims(p, q)?;
    Ok(distance_unchecked(p, q, mode))
}

pub fn discrete_frechet(p: &Trajectory, q: &Trajectory) -> Result<f64> {
    check_dims(p, q)?;
    Ok(discrete_frechet_unchecked(p, q))
}

/// Free sub-interval of the segment `a + t (b - a)`, `t ∈ [0, 1]`, within `eps` of `c`.
fn free_interval(a: &[f64], b: &[f64], c: &[f64], eps2: f64) -> Option<(f64, f64)> {
    let mut vv = 0.0;
    let mut wv = 0.0;
    let mut ww = 0.0;
    for k in 0..a.len() {
        let v = b[k] - a[k];
        let w = a[k] - c[k];
        vv += v * v;
        wv += w * v;
        ww += w * w;
    }
    if vv == 0.0 {
        return (ww <= eps2).then_some((0.0, 1.0));
    }
    let mut disc = wv * wv - vv * (ww - eps2);
    if disc < 0.0 {
        if -disc <= TANGENT_REL * (wv * wv + vv * (ww + eps2)) {
            disc = 0.0;
        } else {
            return None;
        }
    }
    let s = disc.sqrt();
    let lo = ((-wv - s) / vv).max(0.0);
    let hi = ((-wv + s) / vv).min(1.0);
    if lo <= hi {
        Some((lo, hi))
    } else if lo - hi <= PARAM_SLACK {
        let t = (0.5 * (lo + hi)).clamp(0.0, 1.0);
        Some((t, t))
    } else {
        None
    }
}

/// Part of a cell boundary's free interval reachable by a monotone path.
#[inline]
fn propagate(free: Option<(f64, f64)>, opposite_open: bool, near: Option<(f64, f64)>) -> Option<(f64, f64)> {
    let (lo, hi) = free?;
    if opposite_open {
        return Some((lo, hi));
    }
    let (start, _) = near?;
    let lo = lo.max(start);
    if lo <= hi + PARAM_SLACK {
        Some((lo.min(hi), hi))
    } else {
        None
    }
}

pub(crate) fn decide_unchecked(p: &Trajectory, q: &Trajectory, eps: f64) -> bool {
    if !(eps >= 0.0) {
        return false;
    }
    let n = p.len();
    let m = q.len();
    if dist(p.first(), q.first()) > eps || dist(p.last(), q.last()) > eps {
        return false;
    }
    let eps2 = eps * eps * (1.0 + EPS_SQ_INFLATE);

    // Bottom boundaries of the current cell row, one per edge of p.
    let mut bottom: Vec<Option<(f64, f64)>> = Vec::with_capacity(n - 1);
    let mut open = true;
    for i in 0..n - 1 {
        let f = if open {
            free_interval(p.vertex(i), p.vertex(i + 1), q.vertex(0), eps2)
                .filter(|&(lo, _)| lo <= PARAM_SLACK)
        } else {
            None
        };
        open = f.is_some_and(|(_, hi)| hi >= 1.0 - PARAM_SLACK);
        bottom.push(f);
    }

    let mut column_open = true;
    let mut right = None;
    for j in 0..m - 1 {
        let (qa, qb) = (q.vertex(j), q.vertex(j + 1));
        let mut left = if column_open {
            free_interval(qa, qb, p.vertex(0), eps2).filter(|&(lo, _)| lo <= PARAM_SLACK)
        } else {
            None
        };
        column_open = left.is_some_and(|(_, hi)| hi >= 1.0 - PARAM_SLACK);

        let mut any = left.is_some();
        for (i, b) in bottom.iter_mut().enumerate() {
            let top_free = free_interval(p.vertex(i), p.vertex(i + 1), qb, eps2);
            let right_free = free_interval(qa, qb, p.vertex(i + 1), eps2);
            let top = propagate(top_free, left.is_some(), *b);
            let r = propagate(right_free, b.is_some(), left);
            *b = top;
            left = r;
            any |= top.is_some() || r.is_some();
        }
        right = left;
        if !any {
            return false;
        }
    }
    let reaches_end = |iv: Option<(f64, f64)>| iv.is_some_and(|(_, hi)| hi >= 1.0 - PARAM_SLACK);
    reaches_end(bottom[n - 2]) || reaches_end(right)
}

pub(crate) fn discrete_frechet_unchecked(p: &Trajectory, q: &Trajectory) -> f64 {
    let m = q.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, pv) in p.vertices().enumerate() {
        for j in 0..m {
            let d = dist(pv, q.vertex(j));
            cur[j] = if i == 0 && j == 0 {
                d
            } else if i == 0 {
                cur[j - 1].max(d)
            } else if j == 0 {
                prev[0].max(d)
            } else {
                prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d)
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

fn push_bisector_candidates(p: &Trajectory, q: &Trajectory, out: &mut Vec<f64>) {
    let d = p.dim();
    let mut diff = vec![0.0; d];
    for k in 0..p.len() {
        let pk = p.vertex(k);
        let nk = dot(pk, pk);
        for l in k + 1..p.len() {
            let pl = p.vertex(l);
            for x in 0..d {
                diff[x] = pl[x] - pk[x];
            }
            let rhs0 = dot(pl, pl) - nk;
            for j in 0..q.len() - 1 {
                let (qa, qb) = (q.vertex(j), q.vertex(j + 1));
                // Points x = qa + t (qb - qa) with 2 x·(pl - pk) = |pl|² - |pk|².
                let mut denom = 0.0;
                let mut base = 0.0;
                for x in 0..d {
                    denom += (qb[x] - qa[x]) * diff[x];
                    base += qa[x] * diff[x];
                }
                if denom == 0.0 {
                    continue;
                }
                let t = (rhs0 - 2.0 * base) / (2.0 * denom);
                if (0.0..=1.0).contains(&t) {
                    let r: f64 = (0..d)
                        .map(|x| {
                            let v = qa[x] + t * (qb[x] - qa[x]) - pk[x];
                            v * v
                        })
                        .sum();
                    out.push(r.sqrt());
                }
            }
        }
    }
}

/// All critical values of the pair, sorted and deduplicated.
pub fn critical_values(p: &Trajectory, q: &Trajectory) -> Vec<f64> {
    let mut out = vec![dist(p.first(), q.first()), dist(p.last(), q.last())];
    for (a, b) in [(p, q), (q, p)] {
        for v in a.vertices() {
            for j in 0..b.len() - 1 {
                out.push(point_segment_dist(v, b.vertex(j), b.vertex(j + 1)));
            }
        }
        push_bisector_candidates(a, b, &mut out);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Smallest value of the sorted `candidates` accepted by the decision procedure.
fn search_candidates(p: &Trajectory, q: &Trajectory, candidates: &[f64]) -> Option<f64> {
    let last = *candidates.last()?;
    if !decide_unchecked(p, q, last) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if decide_unchecked(p, q, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(candidates[lo])
}

/// Bisection on `[lo, hi]`; returns a certified interval of width at most `tol`.
pub(crate) fn bisect(p: &Trajectory, q: &Trajectory, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    if decide_unchecked(p, q, lo) {
        return (lo, lo);
    }
    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if decide_unchecked(p, q, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

pub(crate) fn distance_unchecked(p: &Trajectory, q: &Trajectory, mode: DistanceMode) -> f64 {
    match mode {
        DistanceMode::CriticalValues => {
            let cands = critical_values(p, q);
            search_candidates(p, q, &cands).unwrap_or_else(|| {
                let (lo, hi) = bounds::quick_bracket(p, q);
                bisect(p, q, lo, hi, 1e-12 * hi.max(1.0)).1
            })
        }
        DistanceMode::Bisection { tol } => {
            let (lo, hi) = bounds::quick_bracket(p, q);
            bisect(p, q, lo, hi, tol).1
        }
        DistanceMode::Auto => {
            let (lo, hi) = bounds::quick_bracket(p, q);
            if p.len() * q.len() <= CRITICAL_VALUE_CELLS {
                let slack = 1e-9 * hi.max(1e-300);
                let mut cands: Vec<f64> = critical_values(p, q)
                    .into_iter()
                    .filter(|&c| c >= lo - slack && c <= hi + slack)
                    .collect();
                cands.push(hi);
                cands.sort_by(f64::total_cmp);
                cands.dedup();
                if let Some(v) = search_candidates(p, q, &cands) {
                    return v;
                }
            }
            bisect(p, q, lo, hi, 1e-9 * hi).1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(pts: &[[f64; 2]]) -> Trajectory {
        Trajectory::from_points(0, pts).unwrap()
    }

    #[test]
    fn decide_identical_at_zero() {
        let p = t(&[[0.0, 0.0], [1.0, 0.0]]);
        assert!(decide(&p, &p, 0.0).unwrap());
    }

    #[test]
    fn decide_parallel_segments() {
        let p = t(&[[0.0, 0.0], [2.0, 0.0]]);
        let q = t(&[[0.0, 1.0], [2.0, 1.0]]);
        assert!(!decide(&p, &q, 0.5).unwrap());
        assert!(decide(&p, &q, 1.0).unwrap());
    }

    #[test]
    fn decide_apex() {
        let p = t(&[[0.0, 0.0], [4.0, 0.0]]);
        let q = t(&[[0.0, 0.0], [2.0, 2.0], [4.0, 0.0]]);
        assert!(decide(&p, &q, 2.0).unwrap());
        assert!(!decide(&p, &q, 1.9).unwrap());
        assert!(decide(&q, &p, 2.0).unwrap());
    }

    #[test]
    fn decide_requires_monotone_path() {
        // q runs back and forth; a point-wise close but non-monotone matching is rejected.
        let p = t(&[[0.0, 0.0], [10.0, 0.0]]);
        let q = t(&[[0.0, 0.0], [10.0, 0.0], [0.0, 0.0], [10.0, 0.0]]);
        assert!(!decide(&p, &q, 1.0).unwrap());
        assert!(decide(&p, &q, 5.0).unwrap());
        let d = distance(&p, &q, DistanceMode::CriticalValues).unwrap();
        assert!((d - 5.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn dimension_mismatch() {
        let p = t(&[[0.0, 0.0], [1.0, 0.0]]);
        let q = Trajectory::from_points(1, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(decide(&p, &q, 1.0), Err(CctError::DimensionMismatch { .. })));
        assert!(distance(&p, &q, DistanceMode::Auto).is_err());
        assert!(discrete_frechet(&p, &q).is_err());
    }

    #[test]
    fn distance_examples() {
        let p = t(&[[0.0, 0.0], [1.0, 0.0]]);
        let q = t(&[[0.0, 2.0], [1.0, 2.0]]);
        for mode in [
            DistanceMode::CriticalValues,
            DistanceMode::Auto,
            DistanceMode::Bisection { tol: 1e-10 },
        ] {
            let d = distance(&p, &q, mode).unwrap();
            assert!((d - 2.0).abs() <= 1e-10, "{mode:?}: {d}");
            assert_eq!(distance(&p, &p, mode).unwrap(), 0.0);
        }
        let p = t(&[[0.0, 0.0], [4.0, 0.0]]);
        let q = t(&[[0.0, 0.0], [2.0, 2.0], [4.0, 0.0]]);
        let exact = distance(&p, &q, DistanceMode::CriticalValues).unwrap();
        let bis = distance(&p, &q, DistanceMode::Bisection { tol: 1e-9 }).unwrap();
        assert!((exact - 2.0).abs() < 1e-12);
        assert!((bis - 2.0).abs() <= 1e-9);
        assert!(decide(&p, &q, exact).unwrap());
    }

    #[test]
    fn discrete_examples() {
        let p = t(&[[0.0, 0.0], [2.0, 0.0]]);
        let q = t(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]);
        assert_eq!(discrete_frechet(&p, &p).unwrap(), 0.0);
        assert!((discrete_frechet(&p, &q).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let a = t(&[[0.0, 0.0], [1.0, 0.0]]);
        let b = t(&[[0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(discrete_frechet(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn zero_length_edges_in_decide() {
        // A closed loop simplified to its endpoints gives a point-like segment.
        let p = t(&[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]);
        let seg = Trajectory::from_raw(0, 2, vec![0.0, 0.0, 0.0, 0.0]);
        assert!(decide_unchecked(&p, &seg, 1.0));
        assert!(!decide_unchecked(&p, &seg, 0.99));
    }
}
