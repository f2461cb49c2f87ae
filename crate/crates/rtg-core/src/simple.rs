//! Symbolic simple functions on region closures.
//!
//! Game values live in a closed class of functions on each region's
//! closure: a constant `e`, a slope `e - s(c)`, or infinity. Transferring
//! a value backwards along a simple timed action stays in the class, and
//! two members compare uniformly over a whole region, so the solver can
//! fold moves symbolically and only ever touches rationals when it
//! evaluates at concrete states.
//!
//! Functions are kept in a per-region canonical form: a clock pinned to
//! an integer folds into the constant, and a clock is replaced by the
//! lowest-id clock of its fractional block. Two canonical functions are
//! pointwise equal on a region iff they are structurally equal, which is
//! what the oracle-equivalence checks compare.

use crate::rational::{q_int, ExtQ, Q};
use crate::region::ClockRegionDescriptor;
use crate::ta::{ActionId, ClockId, ClockValuation, Configuration};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SimpleFunction {
    Constant(i64),
    /// `e - s(c)`.
    MinusClock(i64, ClockId),
    Infinite,
}

impl SimpleFunction {
    pub fn zero() -> Self {
        SimpleFunction::Constant(0)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SimpleFunction::Infinite)
    }

    /// Canonical form on a region: integral clocks fold into constants,
    /// other clocks are renamed to their block's lowest id with the
    /// offset adjusted (clocks in one block differ by a fixed integer).
    pub fn normalize_on(self, desc: &ClockRegionDescriptor) -> SimpleFunction {
        match self {
            SimpleFunction::MinusClock(e, c) => {
                if desc.zero_block.contains(&c) {
                    SimpleFunction::Constant(e - desc.int_parts[c] as i64)
                } else {
                    let block = desc
                        .frac_blocks
                        .iter()
                        .find(|b| b.contains(&c))
                        .expect("clock missing from descriptor");
                    let leader = block[0];
                    let shift = desc.int_parts[leader] as i64 - desc.int_parts[c] as i64;
                    SimpleFunction::MinusClock(e + shift, leader)
                }
            }
            other => other,
        }
    }

    /// Evaluates at a valuation in the closure of the attached region.
    pub fn eval(&self, v: &ClockValuation) -> ExtQ {
        match self {
            SimpleFunction::Constant(e) => ExtQ::Fin(q_int(*e)),
            SimpleFunction::MinusClock(e, c) => ExtQ::Fin(q_int(*e) - &v.0[*c]),
            SimpleFunction::Infinite => ExtQ::Inf,
        }
    }
}

impl fmt::Display for SimpleFunction {
    /// Canonical serialization: `inf`, `const <e>`, or `<e> - <clock id>`;
    /// use [`render_simple`] when clock names are available.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleFunction::Constant(e) => write!(f, "const {e}"),
            SimpleFunction::MinusClock(e, c) => write!(f, "{e} - #{c}"),
            SimpleFunction::Infinite => write!(f, "inf"),
        }
    }
}

pub fn render_simple(f: &SimpleFunction, clock_name: impl Fn(ClockId) -> String) -> String {
    match f {
        SimpleFunction::Constant(e) => format!("const {e}"),
        SimpleFunction::MinusClock(e, c) => format!("{} - {}", e, clock_name(*c)),
        SimpleFunction::Infinite => "inf".to_string(),
    }
}

/// A simple timed action: wait until clock `clock` reaches `bound` and
/// act, or act immediately from inside a thick region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimpleTimedAction {
    Boundary {
        action: ActionId,
        bound: u32,
        clock: ClockId,
    },
    Immediate {
        action: ActionId,
    },
}

impl SimpleTimedAction {
    pub fn action(&self) -> ActionId {
        match self {
            SimpleTimedAction::Boundary { action, .. } => *action,
            SimpleTimedAction::Immediate { action } => *action,
        }
    }
}

/// Wait time of a simple timed action at a concrete state: `b - s(c)`
/// clamped at zero, or zero for immediate actions.
pub fn wait_time(s: &Configuration, alpha: &SimpleTimedAction) -> Q {
    match alpha {
        SimpleTimedAction::Boundary { bound, clock, .. } => {
            let gap = q_int(*bound as i64) - &s.valuation.0[*clock];
            if gap < q_int(0) {
                q_int(0)
            } else {
                gap
            }
        }
        SimpleTimedAction::Immediate { .. } => q_int(0),
    }
}

/// Natural number extended with infinity; the step-distance component of
/// a game value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NatInf {
    Fin(u64),
    Inf,
}

impl NatInf {
    pub fn is_finite(self) -> bool {
        matches!(self, NatInf::Fin(_))
    }

    pub fn as_finite(self) -> Option<u64> {
        match self {
            NatInf::Fin(n) => Some(n),
            NatInf::Inf => None,
        }
    }
}

impl fmt::Display for NatInf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NatInf::Fin(n) => write!(f, "{n}"),
            NatInf::Inf => write!(f, "inf"),
        }
    }
}

/// One more step: `d + 1`, absorbing at infinity.
pub fn bump(d: NatInf) -> NatInf {
    match d {
        NatInf::Fin(n) => NatInf::Fin(n + 1),
        NatInf::Inf => NatInf::Inf,
    }
}

/// Whether `s(c) <= b` holds uniformly on a region; the truth of a simple
/// constraint is constant per region.
fn clock_at_most(desc: &ClockRegionDescriptor, clock: ClockId, bound: u32) -> bool {
    let i = desc.int_parts[clock];
    if i < bound {
        return true;
    }
    i == bound && desc.zero_block.contains(&clock)
}

/// Pulls a value on the target's closure back along a simple timed
/// action: the symbolic form of `wait + value-after-step`, resolved by
/// case analysis on the wait branch and on whether the value's clock is
/// reset. The result is canonical on the source region.
pub fn transfer(
    f: &SimpleFunction,
    alpha: &SimpleTimedAction,
    resets: &BTreeSet<ClockId>,
    source: &ClockRegionDescriptor,
) -> SimpleFunction {
    let raw = match (f, alpha) {
        (SimpleFunction::Infinite, _) => SimpleFunction::Infinite,
        (SimpleFunction::MinusClock(e, c), _) if !resets.contains(c) => {
            // The clock keeps running through the wait: the wait cancels.
            SimpleFunction::MinusClock(*e, *c)
        }
        // Constant target value, or a reset clock (value e at the step).
        (f, SimpleTimedAction::Immediate { .. }) => match f {
            SimpleFunction::Constant(e) | SimpleFunction::MinusClock(e, _) => {
                SimpleFunction::Constant(*e)
            }
            SimpleFunction::Infinite => unreachable!(),
        },
        (f, SimpleTimedAction::Boundary { bound, clock, .. }) => {
            let e = match f {
                SimpleFunction::Constant(e) | SimpleFunction::MinusClock(e, _) => *e,
                SimpleFunction::Infinite => unreachable!(),
            };
            if clock_at_most(source, *clock, *bound) {
                SimpleFunction::MinusClock(*bound as i64 + e, *clock)
            } else {
                // Clamped wait: act now, pay nothing.
                SimpleFunction::Constant(e)
            }
        }
    };
    raw.normalize_on(source)
}

/// Exact comparison of two simple functions over the open region: by the
/// uniform-sign property the order at the canonical representative is the
/// order everywhere, and equality at the representative forces pointwise
/// equality. Computed in integers over the common denominator `m + 1`.
pub fn compare_on_region(
    f: &SimpleFunction,
    g: &SimpleFunction,
    desc: &ClockRegionDescriptor,
) -> Ordering {
    match (f, g) {
        (SimpleFunction::Infinite, SimpleFunction::Infinite) => Ordering::Equal,
        (SimpleFunction::Infinite, _) => Ordering::Greater,
        (_, SimpleFunction::Infinite) => Ordering::Less,
        _ => rep_value_num(f, desc).cmp(&rep_value_num(g, desc)),
    }
}

/// Value at the representative, scaled by `m + 1` to stay integral.
fn rep_value_num(f: &SimpleFunction, desc: &ClockRegionDescriptor) -> i64 {
    let den = desc.num_frac_blocks() as i64 + 1;
    match f {
        SimpleFunction::Constant(e) => e * den,
        SimpleFunction::MinusClock(e, c) => {
            let pos = desc.block_position(*c) as i64;
            (e - desc.int_parts[*c] as i64) * den - pos
        }
        SimpleFunction::Infinite => unreachable!("compared before"),
    }
}

/// Lexicographic comparison of `(T, D)` pairs over a region.
pub fn lex_compare(
    a: (&SimpleFunction, NatInf),
    b: (&SimpleFunction, NatInf),
    desc: &ClockRegionDescriptor,
) -> Ordering {
    compare_on_region(a.0, b.0, desc).then(a.1.cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q_int, q_ratio, q_zero};
    use crate::region::descriptor_of;
    use crate::ta::Configuration;

    fn config(vals: &[Q]) -> Configuration {
        Configuration {
            location: 0,
            valuation: ClockValuation(vals.to_vec()),
        }
    }

    #[test]
    fn wait_time_cases() {
        let s = config(&[q_ratio(2, 5)]);
        let to_one = SimpleTimedAction::Boundary {
            action: 0,
            bound: 1,
            clock: 0,
        };
        assert_eq!(wait_time(&s, &to_one), q_ratio(3, 5));
        let to_zero = SimpleTimedAction::Boundary {
            action: 0,
            bound: 0,
            clock: 0,
        };
        assert_eq!(wait_time(&s, &to_zero), q_zero());
        let now = SimpleTimedAction::Immediate { action: 0 };
        assert_eq!(wait_time(&s, &now), q_zero());
    }

    #[test]
    fn eval_cases() {
        let s = config(&[q_ratio(1, 4)]);
        assert_eq!(
            SimpleFunction::MinusClock(1, 0).eval(&s.valuation),
            ExtQ::Fin(q_ratio(3, 4))
        );
        assert_eq!(
            SimpleFunction::Constant(2).eval(&s.valuation),
            ExtQ::Fin(q_int(2))
        );
        assert_eq!(SimpleFunction::Infinite.eval(&s.valuation), ExtQ::Inf);
    }

    #[test]
    fn bump_cases() {
        assert_eq!(bump(NatInf::Fin(0)), NatInf::Fin(1));
        assert_eq!(bump(NatInf::Fin(7)), NatInf::Fin(8));
        assert_eq!(bump(NatInf::Inf), NatInf::Inf);
    }

    #[test]
    fn transfer_constant_through_boundary_gains_the_wait() {
        // On 0 < x < 1 with target value e: wait (b - x) then collect e,
        // giving (b + e) - x.
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 2)]));
        let alpha = SimpleTimedAction::Boundary {
            action: 0,
            bound: 1,
            clock: 0,
        };
        let out = transfer(
            &SimpleFunction::Constant(2),
            &alpha,
            &BTreeSet::new(),
            &desc,
        );
        assert_eq!(out, SimpleFunction::MinusClock(3, 0));
    }

    #[test]
    fn transfer_keeps_unreset_clock_slopes() {
        // Value e - s(c') with c' not reset: the wait cancels and the
        // function survives unchanged.
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 3), q_ratio(2, 3)]));
        let alpha = SimpleTimedAction::Boundary {
            action: 0,
            bound: 1,
            clock: 0,
        };
        let out = transfer(
            &SimpleFunction::MinusClock(1, 1),
            &alpha,
            &BTreeSet::new(),
            &desc,
        );
        assert_eq!(out, SimpleFunction::MinusClock(1, 1));
    }

    #[test]
    fn transfer_resets_collapse_to_constants() {
        // Value e - s(c') with c' reset and an immediate action: the
        // successor sees c' = 0, so the value is the constant e.
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 2)]));
        let alpha = SimpleTimedAction::Immediate { action: 0 };
        let resets: BTreeSet<ClockId> = [0].into_iter().collect();
        let out = transfer(&SimpleFunction::MinusClock(1, 0), &alpha, &resets, &desc);
        assert_eq!(out, SimpleFunction::Constant(1));
    }

    #[test]
    fn transfer_clamped_branch_drops_the_wait() {
        // On x > b the wait is 0, so a constant stays a constant.
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(3, 2)]));
        let alpha = SimpleTimedAction::Boundary {
            action: 0,
            bound: 1,
            clock: 0,
        };
        let out = transfer(
            &SimpleFunction::Constant(4),
            &alpha,
            &BTreeSet::new(),
            &desc,
        );
        assert_eq!(out, SimpleFunction::Constant(4));
    }

    #[test]
    fn transfer_is_absorbing_at_infinity() {
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 2)]));
        for alpha in [
            SimpleTimedAction::Immediate { action: 0 },
            SimpleTimedAction::Boundary {
                action: 0,
                bound: 1,
                clock: 0,
            },
        ] {
            assert_eq!(
                transfer(&SimpleFunction::Infinite, &alpha, &BTreeSet::new(), &desc),
                SimpleFunction::Infinite
            );
        }
    }

    #[test]
    fn normalization_folds_pinned_clocks() {
        // On the region x = 1: 2 - s(x) is the constant 1.
        let desc = descriptor_of(&ClockValuation(vec![q_int(1)]));
        assert_eq!(
            SimpleFunction::MinusClock(2, 0).normalize_on(&desc),
            SimpleFunction::Constant(1)
        );
        // Same-block clocks collapse onto the block leader.
        let desc2 = descriptor_of(&ClockValuation(vec![q_ratio(1, 2), q_ratio(3, 2)]));
        assert_eq!(
            SimpleFunction::MinusClock(2, 1).normalize_on(&desc2),
            SimpleFunction::MinusClock(1, 0)
        );
    }

    #[test]
    fn comparison_is_uniform_on_the_region() {
        // On 0 < x < 1: the constant 1 exceeds 1 - s(x).
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 2)]));
        assert_eq!(
            compare_on_region(
                &SimpleFunction::Constant(1),
                &SimpleFunction::MinusClock(1, 0),
                &desc
            ),
            Ordering::Greater
        );
    }

    #[test]
    fn comparison_orders_slopes_by_fractional_rank() {
        // frac(x) < frac(y), both integer parts 0: 2 - s(x) > 1 - s(y)
        // because the difference floor is constant on the region.
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 3), q_ratio(2, 3)]));
        assert_eq!(
            compare_on_region(
                &SimpleFunction::MinusClock(2, 0),
                &SimpleFunction::MinusClock(1, 1),
                &desc
            ),
            Ordering::Greater
        );
    }

    #[test]
    fn same_block_slopes_compare_equal() {
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 3), q_ratio(1, 3)]));
        assert_eq!(
            compare_on_region(
                &SimpleFunction::MinusClock(1, 0),
                &SimpleFunction::MinusClock(1, 1),
                &desc
            ),
            Ordering::Equal
        );
    }

    #[test]
    fn infinite_tops_the_order() {
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 2)]));
        assert_eq!(
            compare_on_region(
                &SimpleFunction::Infinite,
                &SimpleFunction::Constant(1_000_000),
                &desc
            ),
            Ordering::Greater
        );
    }

    #[test]
    fn lex_compare_examples() {
        let desc = descriptor_of(&ClockValuation(vec![q_ratio(1, 2)]));
        let c1 = SimpleFunction::Constant(1);
        let c0 = SimpleFunction::Constant(0);
        assert_eq!(
            lex_compare((&c1, NatInf::Fin(3)), (&c1, NatInf::Fin(5)), &desc),
            Ordering::Less
        );
        assert_eq!(
            lex_compare((&c0, NatInf::Fin(9)), (&c1, NatInf::Fin(0)), &desc),
            Ordering::Less
        );
        assert_eq!(
            lex_compare(
                (&SimpleFunction::Infinite, NatInf::Inf),
                (&SimpleFunction::Constant(1_000_000), NatInf::Fin(1)),
                &desc
            ),
            Ordering::Greater
        );
    }
}
