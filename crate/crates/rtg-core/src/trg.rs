//! Construction of the timed region graph and its strategy restrictions.
//!
//! Vertices are the state regions; a labelled edge summarizes one
//! boundary-optimal way of playing a timed action. From a region `R`
//! with a thin region `R''` on its future chain and `(b, c)` its
//! boundary label:
//!
//! * hit: act exactly on `R''` (the action must be enabled there);
//! * after (Min regions): act just after `R''`, inside the thick
//!   successor `R'''`; the wait is the infimum `b - s(c)` and the
//!   successor lands in the closure of the target;
//! * before (Max regions): act just before a thin boundary, inside the
//!   thick region `R'''` preceding it; the wait is the supremum.
//!
//! Thick regions additionally get immediate moves (`act now`, wait 0)
//! for every action enabled on them: the infimum of acting anywhere in
//! the current region is attained at its past edge, and without these
//! moves a Min player strictly inside a thick region could never realize
//! it. Thin regions need no such move because the hit case with
//! `R'' = R` already has wait 0.
//!
//! Moves are deduplicated by (source, action, symbolic wait, target) and
//! kept in a canonical order, so everything downstream is deterministic.

use crate::region::{
    enumerate_regions, future_chain, region_discrete_succ, region_text, representative, Region,
    RegionId,
};
use crate::simple::{transfer, SimpleFunction, SimpleTimedAction};
use crate::ta::{Player, TimedAutomatonGame};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// How a move realizes its timed action; drives both tie-breaking and
/// strategy concretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    /// Acts exactly on the thin boundary region.
    ThinHit,
    /// Acts immediately inside a thick region (wait 0).
    ImmediateInterior,
    /// Min acts just after the boundary, inside the thick successor.
    MinAfterBoundary,
    /// Max acts just before the boundary, inside the thick predecessor.
    MaxBeforeBoundary,
}

impl MoveKind {
    /// Exact kinds realize their wait precisely; boundary-limit kinds
    /// only approach it.
    pub fn is_exact(self) -> bool {
        matches!(self, MoveKind::ThinHit | MoveKind::ImmediateInterior)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub source: RegionId,
    pub alpha: SimpleTimedAction,
    pub target: RegionId,
    pub kind: MoveKind,
    /// The thin region hit by the wait (absent for immediate moves).
    pub boundary: Option<RegionId>,
    /// The thick region the action is taken from, for the two
    /// boundary-limit kinds.
    pub via_thick: Option<RegionId>,
}

impl Move {
    /// Deterministic tie-breaking key: exact kinds win, then action
    /// index, immediate before boundary, then bound, clock and target.
    pub fn choose_key(&self) -> (usize, u8, u8, u32, usize, usize) {
        let exactness = if self.kind.is_exact() { 0 } else { 1 };
        match &self.alpha {
            SimpleTimedAction::Immediate { action } => (*action, exactness, 0, 0, 0, self.target),
            SimpleTimedAction::Boundary {
                action,
                bound,
                clock,
            } => (*action, exactness, 1, *bound, *clock, self.target),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedRegionGraph {
    /// State regions in canonical order.
    pub regions: Vec<Region>,
    pub representatives: Vec<crate::ta::Configuration>,
    pub is_final: Vec<bool>,
    pub owner: Vec<Player>,
    /// Outgoing moves per region, canonically ordered.
    pub moves: Vec<Vec<Move>>,
    index: HashMap<Region, RegionId>,
}

impl TimedRegionGraph {
    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn region_id(&self, r: &Region) -> Option<RegionId> {
        self.index.get(r).copied()
    }

    pub fn num_moves(&self) -> usize {
        self.moves.iter().map(Vec::len).sum()
    }

    /// Non-final regions owned by `side`.
    pub fn owned_non_final(&self, side: Player) -> impl Iterator<Item = RegionId> + '_ {
        (0..self.num_regions()).filter(move |&r| self.owner[r] == side && !self.is_final[r])
    }
}

/// A regionally constant positional strategy: one move per owned
/// non-final region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionalStrategy {
    pub side: Player,
    pub choice: BTreeMap<RegionId, Move>,
}

impl PositionalStrategy {
    pub fn get(&self, r: RegionId) -> Option<&Move> {
        self.choice.get(&r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphClass {
    ZeroPlayer,
    OnePlayerMax,
    OnePlayerMin,
    TwoPlayer,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RestrictError {
    #[error("strategy is missing a choice for region #{0}")]
    MissingChoice(RegionId),
}

/// Builds the timed region graph of a game.
pub fn build(aut: &TimedAutomatonGame) -> TimedRegionGraph {
    let regions = enumerate_regions(aut);
    let index: HashMap<Region, RegionId> = regions
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, r)| (r, i))
        .collect();
    let representatives: Vec<_> = regions.iter().map(representative).collect();
    let is_final: Vec<bool> = representatives
        .iter()
        .map(|rep| aut.is_final(rep))
        .collect();
    let owner: Vec<Player> = regions.iter().map(|r| aut.owner(r.location)).collect();

    let mut moves: Vec<Vec<Move>> = vec![Vec::new(); regions.len()];
    for (rid, region) in regions.iter().enumerate() {
        let side = owner[rid];
        let chain = future_chain(region, aut);
        let mut out = Vec::new();
        for (pos, stage) in chain.iter().enumerate() {
            if stage.descriptor.is_thin() {
                let (bound, clock) = boundary_label(stage);
                let stage_id = index[stage];
                for a in 0..aut.actions.len() {
                    if let Some(target) = region_discrete_succ(stage, a, aut) {
                        out.push(Move {
                            source: rid,
                            alpha: SimpleTimedAction::Boundary {
                                action: a,
                                bound,
                                clock,
                            },
                            target: index[&target],
                            kind: MoveKind::ThinHit,
                            boundary: Some(stage_id),
                            via_thick: None,
                        });
                    }
                }
                if side == Player::Min {
                    if let Some(after) = chain.get(pos + 1) {
                        let after_id = index[after];
                        for a in 0..aut.actions.len() {
                            if let Some(target) = region_discrete_succ(after, a, aut) {
                                out.push(Move {
                                    source: rid,
                                    alpha: SimpleTimedAction::Boundary {
                                        action: a,
                                        bound,
                                        clock,
                                    },
                                    target: index[&target],
                                    kind: MoveKind::MinAfterBoundary,
                                    boundary: Some(stage_id),
                                    via_thick: Some(after_id),
                                });
                            }
                        }
                    }
                }
            } else if side == Player::Max {
                // Act inside this thick region, just before its time
                // successor; only meaningful when the successor exists.
                if let Some(next_thin) = chain.get(pos + 1) {
                    let (bound, clock) = boundary_label(next_thin);
                    let stage_id = index[stage];
                    for a in 0..aut.actions.len() {
                        if let Some(target) = region_discrete_succ(stage, a, aut) {
                            out.push(Move {
                                source: rid,
                                alpha: SimpleTimedAction::Boundary {
                                    action: a,
                                    bound,
                                    clock,
                                },
                                target: index[&target],
                                kind: MoveKind::MaxBeforeBoundary,
                                boundary: Some(index[next_thin]),
                                via_thick: Some(stage_id),
                            });
                        }
                    }
                }
            }
        }
        if !region.descriptor.is_thin() {
            for a in 0..aut.actions.len() {
                if let Some(target) = region_discrete_succ(region, a, aut) {
                    out.push(Move {
                        source: rid,
                        alpha: SimpleTimedAction::Immediate { action: a },
                        target: index[&target],
                        kind: MoveKind::ImmediateInterior,
                        boundary: None,
                        via_thick: Some(rid),
                    });
                }
            }
        }
        moves[rid] = canonicalize_moves(out, region);
    }

    TimedRegionGraph {
        regions,
        representatives,
        is_final,
        owner,
        moves,
        index,
    }
}

/// The `(b, c)` label of a thin region: its lowest integral clock and
/// that clock's integer part. Callers guarantee the region is on the
/// relevant future chain; `boundary_target` is the checked variant.
fn boundary_label(thin: &Region) -> (u32, crate::ta::ClockId) {
    let c = *thin
        .descriptor
        .zero_block
        .first()
        .expect("thin region has an integral clock");
    (thin.descriptor.int_parts[c], c)
}

/// Sorts moves canonically and deduplicates by (source, action, symbolic
/// wait on the source region, target). Exact kinds sort first, so they
/// win collisions: they realize the same wait legally.
fn canonicalize_moves(mut moves: Vec<Move>, source: &Region) -> Vec<Move> {
    let wait_key = |m: &Move| -> SimpleFunction {
        transfer(
            &SimpleFunction::Constant(0),
            &m.alpha,
            &std::collections::BTreeSet::new(),
            &source.descriptor,
        )
    };
    moves.sort_by_key(|m| m.choose_key());
    let mut out: Vec<Move> = Vec::with_capacity(moves.len());
    let mut seen: Vec<(usize, SimpleFunction, RegionId)> = Vec::new();
    for m in moves {
        let key = (m.alpha.action(), wait_key(&m), m.target);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        out.push(m);
    }
    out
}

/// Restricts the owned side to a single move per region; the other side
/// and final regions keep their full lists.
pub fn restrict(
    g: &TimedRegionGraph,
    strategy: &PositionalStrategy,
) -> Result<TimedRegionGraph, RestrictError> {
    let mut out = g.clone();
    for r in 0..g.num_regions() {
        if g.owner[r] == strategy.side && !g.is_final[r] {
            match strategy.get(r) {
                Some(m) => out.moves[r] = vec![m.clone()],
                None => {
                    if !g.moves[r].is_empty() {
                        return Err(RestrictError::MissingChoice(r));
                    }
                    // A stuck region has nothing to choose.
                }
            }
        }
    }
    Ok(out)
}

/// Classifies a graph by which sides still have choices on non-final
/// regions. Regions with at most one move are choiceless; stuck regions
/// (no moves) count as choiceless.
pub fn classify(g: &TimedRegionGraph) -> GraphClass {
    let has_choice = |side: Player| {
        (0..g.num_regions())
            .any(|r| g.owner[r] == side && !g.is_final[r] && g.moves[r].len() > 1)
    };
    match (has_choice(Player::Min), has_choice(Player::Max)) {
        (false, false) => GraphClass::ZeroPlayer,
        (false, true) => GraphClass::OnePlayerMax,
        (true, false) => GraphClass::OnePlayerMin,
        (true, true) => GraphClass::TwoPlayer,
    }
}

/// One line per move: `<region> --(<action>,b=<b>,c=<clock>|now)--> <region>`.
pub fn render_moves(g: &TimedRegionGraph, aut: &TimedAutomatonGame) -> String {
    let mut out = String::new();
    for r in 0..g.num_regions() {
        for m in &g.moves[r] {
            out.push_str(&render_move_line(g, aut, m));
            out.push('\n');
        }
    }
    out
}

pub fn render_move_line(g: &TimedRegionGraph, aut: &TimedAutomatonGame, m: &Move) -> String {
    format!(
        "{} --({})--> {}",
        region_text(&g.regions[m.source], aut),
        render_alpha(&m.alpha, aut),
        region_text(&g.regions[m.target], aut)
    )
}

pub fn render_alpha(alpha: &SimpleTimedAction, aut: &TimedAutomatonGame) -> String {
    match alpha {
        SimpleTimedAction::Immediate { action } => {
            format!("{},now", aut.actions[*action].label)
        }
        SimpleTimedAction::Boundary {
            action,
            bound,
            clock,
        } => format!(
            "{},b={},c={}",
            aut.actions[*action].label, bound, aut.clock_name(*clock)
        ),
    }
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_model;
    use crate::rational::q_ratio;
    use crate::region::region_of;
    use crate::ta::{ClockValuation, Configuration};

    pub(crate) const A0: &str = "\
rtg-ta 1
clocks x
k 1
location ell min invariant true
location g max invariant true
edge ell a guard true reset {} to g
final g true
";

    pub(crate) const A2: &str = "\
rtg-ta 1
clocks x
k 1
location ell max invariant true
location g min invariant true
edge ell a guard true reset {} to g
final g true
";

    fn region_at(g: &TimedRegionGraph, aut: &TimedAutomatonGame, loc: &str, x: Q) -> RegionId {
        let s = Configuration {
            location: aut.location_by_name(loc).unwrap(),
            valuation: ClockValuation(vec![x]),
        };
        g.region_id(&region_of(&s)).unwrap()
    }

    use crate::rational::{q_int, q_zero, Q};

    #[test]
    fn a0_thick_region_has_boundary_and_immediate_moves() {
        let aut = parse_model(A0).unwrap();
        let g = build(&aut);
        let mid = region_at(&g, &aut, "ell", q_ratio(1, 2));
        let moves = &g.moves[mid];
        // Hit the boundary x = 1, or exit immediately; Min also gets the
        // after-boundary move via x = 1 only when a successor exists
        // (here time is blocked at x = 1, so there is none).
        assert_eq!(moves.len(), 2);
        assert!(moves.iter().any(|m| matches!(
            m.alpha,
            SimpleTimedAction::Immediate { action: 0 }
        ) && m.kind == MoveKind::ImmediateInterior
            && g.regions[m.target].descriptor.frac_blocks == vec![vec![0]]));
        assert!(moves.iter().any(|m| matches!(
            m.alpha,
            SimpleTimedAction::Boundary {
                action: 0,
                bound: 1,
                clock: 0
            }
        ) && m.kind == MoveKind::ThinHit
            && g.regions[m.target].descriptor.int_parts == vec![1]));
    }

    #[test]
    fn a2_max_region_move_cases() {
        let aut = parse_model(A2).unwrap();
        let g = build(&aut);
        let origin = region_at(&g, &aut, "ell", q_zero());
        let kinds: Vec<(MoveKind, u32)> = g.moves[origin]
            .iter()
            .map(|m| {
                let b = match m.alpha {
                    SimpleTimedAction::Boundary { bound, .. } => bound,
                    SimpleTimedAction::Immediate { .. } => u32::MAX,
                };
                (m.kind, b)
            })
            .collect();
        // Hit x = 0 (wait 0), hit x = 1, act just before x = 1 from the
        // open interval.
        assert!(kinds.contains(&(MoveKind::ThinHit, 0)));
        assert!(kinds.contains(&(MoveKind::ThinHit, 1)));
        assert!(kinds.contains(&(MoveKind::MaxBeforeBoundary, 1)));
        assert_eq!(kinds.len(), 3);
    }

    #[test]
    fn blocked_time_region_only_waits_zero() {
        let aut = parse_model(A0).unwrap();
        let g = build(&aut);
        let top = region_at(&g, &aut, "ell", q_int(1));
        let moves = &g.moves[top];
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].kind, MoveKind::ThinHit);
        match moves[0].alpha {
            SimpleTimedAction::Boundary { bound, .. } => assert_eq!(bound, 1),
            _ => panic!("expected a boundary move"),
        }
    }

    #[test]
    fn case_parity_holds() {
        for text in [A0, A2] {
            let aut = parse_model(text).unwrap();
            let g = build(&aut);
            for r in 0..g.num_regions() {
                for m in &g.moves[r] {
                    match m.kind {
                        MoveKind::MinAfterBoundary => assert_eq!(g.owner[r], Player::Min),
                        MoveKind::MaxBeforeBoundary => assert_eq!(g.owner[r], Player::Max),
                        _ => {}
                    }
                }
            }
        }
    }

    #[test]
    fn classify_and_restrict() {
        let aut = parse_model(A0).unwrap();
        let g = build(&aut);
        assert_eq!(classify(&g), GraphClass::OnePlayerMin);

        // Pin Min to the first move everywhere: the graph becomes
        // choiceless.
        let strategy = PositionalStrategy {
            side: Player::Min,
            choice: g
                .owned_non_final(Player::Min)
                .map(|r| (r, g.moves[r][0].clone()))
                .collect(),
        };
        let restricted = restrict(&g, &strategy).unwrap();
        assert_eq!(classify(&restricted), GraphClass::ZeroPlayer);
        // Restricting an already choiceless side again is the identity.
        let again = restrict(&restricted, &strategy).unwrap();
        assert_eq!(again, restricted);
    }

    #[test]
    fn restrict_reports_missing_choices() {
        let aut = parse_model(A0).unwrap();
        let g = build(&aut);
        let empty = PositionalStrategy {
            side: Player::Min,
            choice: BTreeMap::new(),
        };
        assert!(matches!(
            restrict(&g, &empty),
            Err(RestrictError::MissingChoice(_))
        ));
    }

    #[test]
    fn graph_size_respects_the_hard_bound() {
        for text in [A0, A2] {
            let aut = parse_model(text).unwrap();
            let g = build(&aut);
            let bound = g.num_regions()
                * aut.actions.len()
                * (aut.bound as usize + 1)
                * aut.num_clocks()
                + g.num_regions() * aut.actions.len();
            assert!(g.num_moves() <= bound);
        }
    }
}
