use cct_core::bounds::{self, TrajRef, TrajectoryFeatures};
use cct_core::frechet::{self, DistanceMode};
use cct_core::{Instrumentation, Interval, Trajectory};
use proptest::prelude::*;

fn traj(dim: usize, max_len: usize) -> impl Strategy<Value = Trajectory> {
    (2..=max_len)
        .prop_flat_map(move |n| prop::collection::vec(-10.0f64..10.0, n * dim))
        .prop_filter_map("degenerate", move |c| Trajectory::new(0, dim, c).ok())
}

fn pair(max_len: usize) -> impl Strategy<Value = (Trajectory, Trajectory)> {
    (1usize..=3).prop_flat_map(move |d| (traj(d, max_len), traj(d, max_len)))
}

fn exact(p: &Trajectory, q: &Trajectory) -> f64 {
    frechet::distance(p, q, DistanceMode::CriticalValues).unwrap()
}

proptest! {
    #[test]
    fn decide_is_monotone((p, q) in pair(8), a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if frechet::decide(&p, &q, lo).unwrap() {
            prop_assert!(frechet::decide(&p, &q, hi).unwrap());
        }
    }

    #[test]
    fn symmetric((p, q) in pair(8), eps in 0.0f64..20.0) {
        prop_assert_eq!(frechet::decide(&p, &q, eps).unwrap(), frechet::decide(&q, &p, eps).unwrap());
        prop_assert!((exact(&p, &q) - exact(&q, &p)).abs() <= 1e-9);
    }

    #[test]
    fn exact_distance_is_tight((p, q) in pair(8)) {
        let d = exact(&p, &q);
        prop_assert!(frechet::decide(&p, &q, d).unwrap());
        if d > 1e-9 {
            prop_assert!(!frechet::decide(&p, &q, d * (1.0 - 1e-9) - 1e-12).unwrap());
        }
    }

    #[test]
    fn triangle(a in traj(2, 6), b in traj(2, 6), c in traj(2, 6)) {
        prop_assert!(exact(&a, &c) <= exact(&a, &b) + exact(&b, &c) + 3e-9);
    }

    #[test]
    fn sandwich_with_discrete((p, q) in pair(8)) {
        let d = exact(&p, &q);
        let dd = frechet::discrete_frechet(&p, &q).unwrap();
        let longest = p.longest_segment().max(q.longest_segment());
        prop_assert!(d <= dd + 1e-9);
        prop_assert!(dd <= d + longest + 1e-9);
    }

    #[test]
    fn segments_have_closed_form(p in traj(2, 2), q in traj(2, 2)) {
        let closed = cct_core::geometry::dist(p.first(), q.first()).max(cct_core::geometry::dist(p.last(), q.last()));
        prop_assert!((exact(&p, &q) - closed).abs() <= 1e-9);
    }

    #[test]
    fn modes_agree((p, q) in pair(10)) {
        let cv = exact(&p, &q);
        let bi = frechet::distance(&p, &q, DistanceMode::Bisection { tol: 1e-9 }).unwrap();
        prop_assert!((cv - bi).abs() <= 1e-8, "{} vs {}", cv, bi);
    }

    #[test]
    fn bounds_sandwich_distance((p, q) in pair(10), frac in 0.0f64..2.0) {
        let (fp, fq) = (TrajectoryFeatures::compute(&p), TrajectoryFeatures::compute(&q));
        let (rp, rq) = (TrajRef::new(&p, &fp), TrajRef::new(&q, &fq));
        let mut instr = Instrumentation::default();
        let lb = bounds::lb_group(rp, rq, &mut instr);
        let ub = bounds::ub_group(rp, rq, &mut instr);
        let d = exact(&p, &q);
        prop_assert!(lb <= d + 1e-9, "lb {} > d {}", lb, d);
        prop_assert!(d <= ub + 1e-9, "d {} > ub {}", d, ub);
        let alpha = frac * ub;
        if bounds::lb_tr(&p, &q, alpha) {
            prop_assert!(!frechet::decide(&p, &q, alpha).unwrap());
        }
        prop_assert!(!bounds::lb_fd(rp, rq, ub, &mut instr));
    }

    #[test]
    fn rotations_only_tighten(p in traj(2, 10), q in traj(2, 10)) {
        let (fp, fq) = (TrajectoryFeatures::compute(&p), TrajectoryFeatures::compute(&q));
        prop_assert!(bounds::lb_bb(&fp, &fq) >= bounds::lb_bb_unrotated(&fp, &fq));
        prop_assert!(bounds::ub_bb(&fp, &fq) <= bounds::ub_bb_unrotated(&fp, &fq));
    }

    #[test]
    fn widening_never_raises_lb_st(p in traj(2, 10), q in traj(2, 10), w1 in 0.0f64..3.0, w2 in 0.0f64..3.0) {
        let (fp, fq) = (TrajectoryFeatures::compute(&p), TrajectoryFeatures::compute(&q));
        let base = bounds::lb_st(&fp, &fq);
        let mut wide = fp.clone();
        wide.st_dist = Interval::new((fp.st_dist.lo - w1).max(0.0), fp.st_dist.hi + w2);
        prop_assert!(bounds::lb_st(&wide, &fq) <= base);
        prop_assert_eq!(base, bounds::lb_st(&fq, &fp));
    }

    #[test]
    fn simplify_stays_within_tolerance(p in traj(2, 20), frac in 0.0f64..0.2) {
        let eps = frac * p.reach();
        let s = p.simplify(eps);
        prop_assert_eq!(s.first(), p.first());
        prop_assert_eq!(s.last(), p.last());
        let mut it = p.vertices();
        for v in s.vertices() {
            prop_assert!(it.any(|w| w == v), "not a subsequence");
        }
        prop_assert!(frechet::decide(&p, &s, eps + 1e-9).unwrap());
    }

    #[test]
    fn segment_distance_brackets_a_finer_search(p in traj(2, 10), a in prop::array::uniform2(-10.0f64..10.0), b in prop::array::uniform2(-10.0f64..10.0)) {
        prop_assume!(a != b);
        let iv = p.segment_distance(&a, &b, 1e-6);
        let seg = Trajectory::from_points(1, &[a, b]).unwrap();
        let fine = frechet::distance(&p, &seg, DistanceMode::Bisection { tol: 1e-7 }).unwrap();
        prop_assert!(iv.width() <= 1e-6 + 1e-12);
        prop_assert!(iv.lo <= fine + 1e-12 && fine - 1e-7 <= iv.hi + 1e-12, "{:?} vs {}", iv, fine);
    }

    #[test]
    fn reach_covers_the_last_vertex(p in traj(3, 10)) {
        prop_assert!(p.reach() >= cct_core::geometry::dist(p.first(), p.last()));
    }
}
