//! The timed-automaton game model and its exact concrete semantics.
//!
//! A game consists of locations owned by Min or Max, bounded clocks, and
//! edge-style actions. Each action is compiled to the global form: an
//! enabledness zone restricted to the edge's source location, a total
//! transition function (self-targets elsewhere, unreachable because the
//! zone excludes them), and a reset set. Delays and discrete steps are
//! partial: the result reports which membership failed.

use crate::rational::{floor_u32, q_int, Q};
use num_traits::Signed;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type ClockId = usize;
pub type LocationId = usize;
pub type ActionId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Min,
    Max,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Min => Player::Max,
            Player::Max => Player::Min,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Min => write!(f, "min"),
            Player::Max => write!(f, "max"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clock {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub owner: Player,
    /// State-zone constraint at this location (the location invariant).
    pub invariant: ClockConstraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn eval(self, lhs: &Q, rhs: &Q) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// One conjunct of a clock constraint: `c op i` or `c - c' op i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub kind: AtomKind,
    pub op: CmpOp,
    pub bound: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Single(ClockId),
    /// Difference `lhs - rhs`.
    Diff(ClockId, ClockId),
}

impl Atom {
    pub fn holds(&self, v: &ClockValuation) -> bool {
        let bound = q_int(self.bound as i64);
        match self.kind {
            AtomKind::Single(c) => self.op.eval(&v.0[c], &bound),
            AtomKind::Diff(c, d) => self.op.eval(&(&v.0[c] - &v.0[d]), &bound),
        }
    }
}

/// Conjunction of atoms; the empty conjunction is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ClockConstraint {
    pub atoms: Vec<Atom>,
}

impl ClockConstraint {
    pub fn truth() -> Self {
        ClockConstraint { atoms: Vec::new() }
    }

    pub fn holds(&self, v: &ClockValuation) -> bool {
        self.atoms.iter().all(|a| a.holds(v))
    }

    pub fn max_constant(&self) -> u32 {
        self.atoms.iter().map(|a| a.bound).max().unwrap_or(0)
    }
}

/// Per-location constraints; locations absent from the map are excluded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Zone {
    pub per_location: BTreeMap<LocationId, ClockConstraint>,
}

impl Zone {
    pub fn contains(&self, s: &Configuration) -> bool {
        self.per_location
            .get(&s.location)
            .is_some_and(|cc| cc.holds(&s.valuation))
    }
}

/// An edge-style action: enabled at `source` under `guard`, resets
/// `resets`, moves to `target`. Elsewhere it keeps the location and is
/// never enabled, which makes the transition function total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub label: String,
    pub source: LocationId,
    pub guard: ClockConstraint,
    pub resets: BTreeSet<ClockId>,
    pub target: LocationId,
}

/// Clock valuation with every value in `[0, k]`; all arithmetic exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClockValuation(pub Vec<Q>);

impl ClockValuation {
    pub fn zeroed(num_clocks: usize) -> Self {
        ClockValuation(vec![q_int(0); num_clocks])
    }

    pub fn num_clocks(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub location: LocationId,
    pub valuation: ClockValuation,
}

/// A timed action: perform `action` after waiting `delay`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAction {
    pub action: ActionId,
    pub delay: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransitionError {
    #[error("delay pushes clock `{clock}` past the bound")]
    ExceedsBound { clock: String },
    #[error("delay leaves the state zone")]
    LeavesStateZone,
    #[error("source configuration is not a state")]
    SourceNotInS,
    #[error("action `{action}` is not enabled")]
    NotEnabled { action: String },
    #[error("successor configuration is not a state")]
    SuccessorNotInS,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAutomatonGame {
    pub clocks: Vec<Clock>,
    pub locations: Vec<Location>,
    /// The global clock bound k; every constraint constant must be <= k.
    pub bound: u32,
    pub actions: Vec<Action>,
    /// Final-state constraints; locations absent are never final.
    pub finals: BTreeMap<LocationId, ClockConstraint>,
}

impl TimedAutomatonGame {
    pub fn num_clocks(&self) -> usize {
        self.clocks.len()
    }

    pub fn owner(&self, loc: LocationId) -> Player {
        self.locations[loc].owner
    }

    pub fn clock_name(&self, c: ClockId) -> &str {
        &self.clocks[c].name
    }

    pub fn clock_by_name(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c.name == name)
    }

    pub fn location_by_name(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|l| l.name == name)
    }

    /// Total transition function: the action's target at its source
    /// location, identity elsewhere.
    pub fn delta(&self, loc: LocationId, a: ActionId) -> LocationId {
        let act = &self.actions[a];
        if act.source == loc {
            act.target
        } else {
            loc
        }
    }

    /// The state zone S as a per-location zone (location invariants).
    pub fn state_zone(&self) -> Zone {
        Zone {
            per_location: self
                .locations
                .iter()
                .enumerate()
                .map(|(i, l)| (i, l.invariant.clone()))
                .collect(),
        }
    }

    /// The final zone F.
    pub fn final_zone(&self) -> Zone {
        Zone {
            per_location: self.finals.clone(),
        }
    }

    pub fn in_valuation_space(&self, v: &ClockValuation) -> bool {
        let k = q_int(self.bound as i64);
        v.0.iter().all(|x| !x.is_negative() && *x <= k)
    }

    pub fn is_state(&self, s: &Configuration) -> bool {
        self.in_valuation_space(&s.valuation)
            && self.locations[s.location].invariant.holds(&s.valuation)
    }

    pub fn is_final(&self, s: &Configuration) -> bool {
        self.is_state(s)
            && self
                .finals
                .get(&s.location)
                .is_some_and(|cc| cc.holds(&s.valuation))
    }

    pub fn is_enabled(&self, s: &Configuration, a: ActionId) -> bool {
        let act = &self.actions[a];
        act.source == s.location && act.guard.holds(&s.valuation)
    }

    /// Guarded delay: all of `[0, t]` must stay inside the state zone and
    /// no clock may pass the bound. Invariants are convex, so checking
    /// both endpoints covers the whole segment.
    pub fn delay(&self, s: &Configuration, t: &Q) -> Result<Configuration, TransitionError> {
        assert!(!t.is_negative(), "negative delay");
        let k = q_int(self.bound as i64);
        for (c, x) in s.valuation.0.iter().enumerate() {
            if x + t > k {
                return Err(TransitionError::ExceedsBound {
                    clock: self.clocks[c].name.clone(),
                });
            }
        }
        let moved = Configuration {
            location: s.location,
            valuation: ClockValuation(s.valuation.0.iter().map(|x| x + t).collect()),
        };
        if !self.is_state(s) || !self.is_state(&moved) {
            return Err(TransitionError::LeavesStateZone);
        }
        Ok(moved)
    }

    /// Guarded discrete step: requires the source to be a state, the
    /// action to be enabled, and the successor to be a state.
    pub fn discrete_succ(
        &self,
        s: &Configuration,
        a: ActionId,
    ) -> Result<Configuration, TransitionError> {
        if !self.is_state(s) {
            return Err(TransitionError::SourceNotInS);
        }
        if !self.is_enabled(s, a) {
            return Err(TransitionError::NotEnabled {
                action: self.actions[a].label.clone(),
            });
        }
        let succ = self.apply_action_raw(s, a);
        if !self.is_state(&succ) {
            return Err(TransitionError::SuccessorNotInS);
        }
        Ok(succ)
    }

    /// Delay followed by a discrete step; the first failing stage's error
    /// propagates.
    pub fn timed_succ(
        &self,
        s: &Configuration,
        tau: &TimedAction,
    ) -> Result<Configuration, TransitionError> {
        let mid = self.delay(s, &tau.delay)?;
        self.discrete_succ(&mid, tau.action)
    }

    /// Reset + relocation without any zone or guard checks.
    pub fn apply_action_raw(&self, s: &Configuration, a: ActionId) -> Configuration {
        let act = &self.actions[a];
        let mut vals = s.valuation.0.clone();
        for &c in &act.resets {
            vals[c] = q_int(0);
        }
        Configuration {
            location: self.delta(s.location, a),
            valuation: ClockValuation(vals),
        }
    }

    /// Unguarded timed successor: delay bounded only by the clock space,
    /// then reset + relocation. Used when evaluating value functions on
    /// region closures, where the intermediate point may sit on a
    /// boundary the guard excludes.
    pub fn succ_unguarded(&self, s: &Configuration, a: ActionId, t: &Q) -> Option<Configuration> {
        let k = q_int(self.bound as i64);
        if t.is_negative() {
            return None;
        }
        let mut vals = Vec::with_capacity(s.valuation.0.len());
        for x in &s.valuation.0 {
            let moved = x + t;
            if moved > k {
                return None;
            }
            vals.push(moved);
        }
        let mid = Configuration {
            location: s.location,
            valuation: ClockValuation(vals),
        };
        Some(self.apply_action_raw(&mid, a))
    }

    pub fn render_configuration(&self, s: &Configuration) -> String {
        let vals: Vec<String> = s
            .valuation
            .0
            .iter()
            .map(crate::rational::fmt_q)
            .collect();
        format!("{},({})", self.locations[s.location].name, vals.join(","))
    }
}

/// A validation finding; `validate` reports all of them instead of
/// aborting on the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A region satisfies the final constraint but not the invariant.
    FinalOutsideState { location: String, region: String },
    /// A constraint constant exceeds the clock bound k.
    ConstantExceedsBound { context: String, constant: u32 },
    /// A non-final state region with no outgoing move in the timed
    /// region graph: the game would be stuck there.
    DeadlockRegion { region: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FinalOutsideState { location, region } => {
                write!(f, "final-outside-state: location {location}, region {region}")
            }
            Violation::ConstantExceedsBound { context, constant } => {
                write!(f, "constant-exceeds-bound: {context} uses {constant}")
            }
            Violation::DeadlockRegion { region } => {
                write!(f, "deadlock-region: {region}")
            }
        }
    }
}

/// Checks the structural assumptions the solver relies on: constraint
/// constants within the bound, F contained in S, and at least one move
/// out of every non-final state region.
pub fn validate(aut: &TimedAutomatonGame) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut check_constants = |context: String, cc: &ClockConstraint| {
        for atom in &cc.atoms {
            if atom.bound > aut.bound {
                out.push(Violation::ConstantExceedsBound {
                    context: context.clone(),
                    constant: atom.bound,
                });
            }
        }
    };
    for loc in &aut.locations {
        check_constants(format!("invariant of {}", loc.name), &loc.invariant);
    }
    for act in &aut.actions {
        check_constants(
            format!("guard of {} at {}", act.label, aut.locations[act.source].name),
            &act.guard,
        );
    }
    for (loc, cc) in &aut.finals {
        check_constants(format!("final constraint of {}", aut.locations[*loc].name), cc);
    }

    // F must be a subset of S; both are unions of regions, so testing the
    // representative of every clock region is exact.
    for (loc, final_cc) in &aut.finals {
        for desc in crate::region::enumerate_descriptors(aut.num_clocks(), aut.bound) {
            let region = crate::region::Region {
                location: *loc,
                descriptor: desc,
            };
            let rep = crate::region::representative(&region);
            if final_cc.holds(&rep.valuation)
                && !aut.locations[*loc].invariant.holds(&rep.valuation)
            {
                out.push(Violation::FinalOutsideState {
                    location: aut.locations[*loc].name.clone(),
                    region: crate::region::region_text(&region, aut),
                });
            }
        }
    }

    let graph = crate::trg::build(aut);
    for (idx, region) in graph.regions.iter().enumerate() {
        if !graph.is_final[idx] && graph.moves[idx].is_empty() {
            out.push(Violation::DeadlockRegion {
                region: crate::region::region_text(region, aut),
            });
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_model;
    use crate::rational::{q_ratio, q_zero};
    use proptest::prelude::*;

    pub(crate) const A0: &str = "\
rtg-ta 1
clocks x
k 1
location ell min invariant true
location g max invariant true
edge ell a guard true reset {} to g
final g true
";

    fn a0() -> TimedAutomatonGame {
        parse_model(A0).unwrap()
    }

    fn config(aut: &TimedAutomatonGame, loc: &str, vals: &[Q]) -> Configuration {
        Configuration {
            location: aut.location_by_name(loc).unwrap(),
            valuation: ClockValuation(vals.to_vec()),
        }
    }

    #[test]
    fn delay_moves_all_clocks() {
        let aut = a0();
        let s = config(&aut, "ell", &[q_ratio(1, 4)]);
        let moved = aut.delay(&s, &q_ratio(1, 2)).unwrap();
        assert_eq!(moved.valuation.0[0], q_ratio(3, 4));
        assert_eq!(moved.location, s.location);
    }

    #[test]
    fn zero_delay_is_identity() {
        let aut = a0();
        let s = config(&aut, "ell", &[q_ratio(1, 4)]);
        assert_eq!(aut.delay(&s, &q_zero()).unwrap(), s);
    }

    #[test]
    fn delay_past_bound_is_rejected() {
        let aut = a0();
        let s = config(&aut, "ell", &[q_ratio(1, 2)]);
        assert_eq!(
            aut.delay(&s, &q_ratio(3, 4)),
            Err(TransitionError::ExceedsBound { clock: "x".into() })
        );
    }

    #[test]
    fn delay_must_stay_in_state_zone() {
        let text = "\
rtg-ta 1
clocks x
k 2
location ell min invariant x <= 1
location g max invariant true
edge ell a guard true reset {} to g
final g true
";
        let aut = parse_model(text).unwrap();
        let s = config(&aut, "ell", &[q_ratio(1, 2)]);
        assert_eq!(
            aut.delay(&s, &q_int(1)),
            Err(TransitionError::LeavesStateZone)
        );
    }

    #[test]
    fn discrete_succ_resets_exactly_the_reset_set() {
        let text = "\
rtg-ta 1
clocks x y
k 1
location ell min invariant true
location g max invariant true
edge ell a guard true reset {x} to g
final g true
";
        let aut = parse_model(text).unwrap();
        let s = config(&aut, "ell", &[q_ratio(2, 3), q_ratio(1, 3)]);
        let succ = aut.discrete_succ(&s, 0).unwrap();
        assert_eq!(succ.location, aut.location_by_name("g").unwrap());
        assert_eq!(succ.valuation.0, vec![q_zero(), q_ratio(1, 3)]);
    }

    #[test]
    fn discrete_succ_requires_the_guard() {
        let text = "\
rtg-ta 1
clocks x
k 1
location ell min invariant true
location g max invariant true
edge ell a guard x = 1 reset {} to g
edge ell b guard true reset {} to ell
final g true
";
        let aut = parse_model(text).unwrap();
        let s = config(&aut, "ell", &[q_ratio(1, 2)]);
        assert_eq!(
            aut.discrete_succ(&s, 0),
            Err(TransitionError::NotEnabled { action: "a".into() })
        );
    }

    #[test]
    fn empty_reset_keeps_the_valuation() {
        let aut = a0();
        let s = config(&aut, "ell", &[q_ratio(1, 4)]);
        let succ = aut.discrete_succ(&s, 0).unwrap();
        assert_eq!(succ.valuation, s.valuation);
        assert_eq!(succ.location, aut.location_by_name("g").unwrap());
    }

    #[test]
    fn timed_succ_composes_both_stages() {
        let aut = a0();
        let s = config(&aut, "ell", &[q_ratio(1, 4)]);
        let tau = TimedAction {
            action: 0,
            delay: q_ratio(1, 2),
        };
        let succ = aut.timed_succ(&s, &tau).unwrap();
        assert_eq!(succ.location, aut.location_by_name("g").unwrap());
        assert_eq!(succ.valuation.0[0], q_ratio(3, 4));

        let zero = TimedAction {
            action: 0,
            delay: q_zero(),
        };
        assert_eq!(
            aut.timed_succ(&s, &zero).unwrap().valuation.0[0],
            q_ratio(1, 4)
        );

        let too_far = TimedAction {
            action: 0,
            delay: q_int(1),
        };
        assert_eq!(
            aut.timed_succ(&s, &too_far),
            Err(TransitionError::ExceedsBound { clock: "x".into() })
        );
    }

    #[test]
    fn validate_accepts_a0() {
        assert_eq!(validate(&a0()), Vec::new());
    }

    #[test]
    fn validate_reports_deadlocks() {
        // With k = 1 the guard x > 1 is unsatisfiable, so no region of ell
        // ever has an outgoing move.
        let text = "\
rtg-ta 1
clocks x
k 1
location ell min invariant true
location g max invariant true
edge ell a guard x > 1 reset {} to g
final g true
";
        let aut = parse_model(text).unwrap();
        let violations = validate(&aut);
        assert!(
            violations
                .iter()
                .any(|v| matches!(v, Violation::DeadlockRegion { .. })),
            "expected a deadlock region, got {violations:?}"
        );
    }

    #[test]
    fn validate_reports_final_outside_state() {
        let text = "\
rtg-ta 1
clocks x
k 2
location ell min invariant true
location g max invariant x <= 1
edge ell a guard true reset {} to g
final g x >= 1
";
        let aut = parse_model(text).unwrap();
        let violations = validate(&aut);
        assert!(
            violations
                .iter()
                .any(|v| matches!(v, Violation::FinalOutsideState { .. })),
            "expected final-outside-state, got {violations:?}"
        );
    }

    #[test]
    fn validate_reports_oversized_constants() {
        let text = "\
rtg-ta 1
clocks x
k 2
location ell min invariant true
location g max invariant true
edge ell a guard x = 3 reset {} to g
edge ell b guard true reset {} to g
final g true
";
        let aut = parse_model(text).unwrap();
        let violations = validate(&aut);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::ConstantExceedsBound { constant: 3, .. })));
    }

    #[test]
    fn reset_is_idempotent() {
        let text = "\
rtg-ta 1
clocks x y
k 2
location ell min invariant true
edge ell a guard true reset {x} to ell
final ell x = 2
";
        let aut = parse_model(text).unwrap();
        let s = config(&aut, "ell", &[q_ratio(1, 2), q_ratio(3, 2)]);
        let once = aut.discrete_succ(&s, 0).unwrap();
        let twice = aut.discrete_succ(&once, 0).unwrap();
        assert_eq!(once.valuation, twice.valuation);
        assert_eq!(twice.valuation.0[0], q_zero());
    }

    proptest! {
        #[test]
        fn delay_is_additive(n1 in 0i64..8, n2 in 0i64..8, start in 0i64..4) {
            let aut = a0();
            let s = config(&aut, "ell", &[q_ratio(start, 8)]);
            let t1 = q_ratio(n1, 16);
            let t2 = q_ratio(n2, 16);
            let stepped = aut
                .delay(&s, &t1)
                .and_then(|mid| aut.delay(&mid, &t2));
            let joined = aut.delay(&s, &(&t1 + &t2));
            match (stepped, joined) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                // One side may fail only if the other does too.
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "divergent: {:?} vs {:?}", a, b),
            }
        }
    }
}
