//! Deciding which of two centers a trajectory is closer to, with as few
//! distance calls as possible.

use crate::geometry::Interval;
use crate::session::PairOracle;
use crate::store::Slot;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Localized {
    pub side: Side,
    /// Number (1 to 10) of the test that settled the question.
    pub test: u8,
}

fn settled(side: Side, test: u8) -> Localized {
    Localized { side, test }
}

/// Localizes `p` relative to centers `c1` and `c2`.
///
/// `c1_bounds` may carry an already known interval around `δ_F(p, c1)`.
/// `relaxed_radius` enables the half-radius test; it must be `δ_F(c1, c2)` with
/// `c2` the furthest member of `c1`'s cluster. Ties go to `c2` only when
/// `δ_F(p, c2) <= δ_F(p, c1)` is certified, so the result is always a closest center.
pub fn bisector_localize<O: PairOracle>(
    o: &mut O,
    p: Slot,
    c1: Slot,
    c2: Slot,
    c1_bounds: Option<Interval>,
    relaxed_radius: Option<f64>,
) -> Localized {
    let (lb1, ub1) = match c1_bounds {
        Some(iv) => (iv.lo, iv.hi),
        None => (o.lb(p, c1), o.ub(p, c1)),
    };
    let ub2 = o.ub(p, c2);
    if ub2 <= lb1 {
        return settled(Side::Second, 1);
    }
    let lb2 = o.lb(p, c2);
    if ub1 <= lb2 {
        return settled(Side::First, 2);
    }
    if o.lb_fd(p, c1, ub2) {
        return settled(Side::Second, 3);
    }
    if o.lb_fd(p, c2, ub1) {
        return settled(Side::First, 4);
    }
    let d1 = if lb1 == ub1 { lb1 } else { o.df(p, c1) };
    if let Some(rad) = relaxed_radius {
        if d1 < rad / 2.0 {
            return settled(Side::First, 5);
        }
    }
    if d1 < lb2 {
        return settled(Side::First, 6);
    }
    if d1 > ub2 {
        return settled(Side::Second, 7);
    }
    if o.lb_fd(p, c2, d1) {
        return settled(Side::First, 8);
    }
    if o.dfd(p, c2, d1) {
        return settled(Side::Second, 9);
    }
    settled(Side::First, 10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::Counters;

    /// Scripted oracle over three slots: 0 = P, 1 = C1, 2 = C2.
    struct Scripted {
        lb: [f64; 3],
        ub: [f64; 3],
        d: [f64; 3],
        calls: Counters,
    }

    impl Scripted {
        fn vacuous(d1: f64, d2: f64) -> Self {
            Self {
                lb: [0.0; 3],
                ub: [f64::INFINITY; 3],
                d: [0.0, d1, d2],
                calls: Counters::default(),
            }
        }

        fn other(a: Slot, b: Slot) -> usize {
            assert!(a == 0 || b == 0);
            a + b
        }
    }

    impl PairOracle for Scripted {
        fn lb(&mut self, a: Slot, b: Slot) -> f64 {
            self.lb[Self::other(a, b)]
        }
        fn ub(&mut self, a: Slot, b: Slot) -> f64 {
            self.ub[Self::other(a, b)]
        }
        fn lb_fd(&mut self, _: Slot, _: Slot, _: f64) -> bool {
            false
        }
        fn df(&mut self, a: Slot, b: Slot) -> f64 {
            self.calls.df_calls += 1;
            self.d[Self::other(a, b)]
        }
        fn dfd(&mut self, a: Slot, b: Slot, eps: f64) -> bool {
            self.calls.dfd_calls += 1;
            self.d[Self::other(a, b)] <= eps
        }
    }

    #[test]
    fn bound_tests_settle_without_distance_calls() {
        let mut o = Scripted::vacuous(2.0, 1.0);
        o.ub[2] = 1.0;
        o.lb[1] = 2.0;
        assert_eq!(bisector_localize(&mut o, 0, 1, 2, None, None), settled(Side::Second, 1));

        let mut o = Scripted::vacuous(1.0, 2.0);
        o.ub[1] = 1.0;
        o.lb[2] = 2.0;
        assert_eq!(bisector_localize(&mut o, 0, 1, 2, None, None), settled(Side::First, 2));
        assert_eq!(o.calls.df_calls + o.calls.dfd_calls, 0);
    }

    #[test]
    fn half_radius_test_only_when_relaxed() {
        let mut o = Scripted::vacuous(1.0, 3.0);
        let r = bisector_localize(&mut o, 0, 1, 2, None, Some(4.0));
        assert_eq!(r, settled(Side::First, 5));
        assert_eq!(o.calls.df_calls, 1);
        assert_eq!(o.calls.dfd_calls, 0);

        let mut o = Scripted::vacuous(1.0, 3.0);
        let r = bisector_localize(&mut o, 0, 1, 2, None, None);
        assert_eq!(r, settled(Side::First, 10));
        assert_eq!(o.calls.dfd_calls, 1);
    }

    #[test]
    fn distance_tests() {
        let mut o = Scripted::vacuous(1.0, 3.0);
        o.lb[2] = 2.0;
        assert_eq!(bisector_localize(&mut o, 0, 1, 2, None, None), settled(Side::First, 6));

        let mut o = Scripted::vacuous(3.0, 1.0);
        o.ub[2] = 2.0;
        assert_eq!(bisector_localize(&mut o, 0, 1, 2, None, None), settled(Side::Second, 7));

        let mut o = Scripted::vacuous(2.0, 1.0);
        assert_eq!(bisector_localize(&mut o, 0, 1, 2, None, None), settled(Side::Second, 9));

        let mut o = Scripted::vacuous(2.0, 2.0);
        assert_eq!(bisector_localize(&mut o, 0, 1, 2, None, None), settled(Side::Second, 9));
    }

    #[test]
    fn known_interval_skips_distance_call() {
        let mut o = Scripted::vacuous(1.0, 3.0);
        let r = bisector_localize(&mut o, 0, 1, 2, Some(Interval::point(1.0)), None);
        assert_eq!(r.side, Side::First);
        assert_eq!(o.calls.df_calls, 0);
    }
}
