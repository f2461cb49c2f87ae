//! Solving the optimality equations on a timed region graph.
//!
//! The two-player solve is nested strategy improvement: the outer loop
//! improves Min's positional strategy, the inner loop solves the
//! one-player maximization by improving Max against path-solved
//! choiceless graphs. Values are pairs `(T, D)` per region: a simple
//! function giving the reachability time on the region's closure and the
//! regionally constant number of steps an optimal play needs. The
//! lexicographic `(T, D)` order makes every strategy switch a strict
//! improvement, which bounds both loops by the number of regions.
//!
//! A region with no outgoing move is stuck: the play cannot continue and
//! no final state is ever reached, so its value is pinned to
//! `(infinity, infinity)` on both sides of the equations. Such regions
//! arise in reductions whose guards are only satisfiable on lower
//! boundaries; `validate` reports them, the solver just handles them.
//!
//! Two independent checks are provided: `verify_opt` re-derives every
//! equation right-hand side from concrete rational arithmetic at sampled
//! states, and `value_iteration_oracle` solves the same equations by
//! synchronous fixpoint sweeps without ever touching a strategy.

use crate::rational::ExtQ;
use crate::simple::{
    bump, lex_compare, transfer, wait_time, NatInf, SimpleFunction, SimpleTimedAction,
};
use crate::ta::{Player, TimedAutomatonGame};
use crate::trg::{Move, PositionalStrategy, TimedRegionGraph};
use crate::region::RegionId;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// A candidate solution of the optimality equations: per region, the
/// symbolic time value on the region's closure and the step distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionalValue {
    pub t: Vec<SimpleFunction>,
    pub d: Vec<NatInf>,
}

impl RegionalValue {
    pub fn all_infinite(n: usize) -> Self {
        RegionalValue {
            t: vec![SimpleFunction::Infinite; n],
            d: vec![NatInf::Inf; n],
        }
    }

    /// `T` evaluated at a concrete state of region `r`.
    pub fn eval_t(&self, r: RegionId, v: &crate::ta::ClockValuation) -> ExtQ {
        self.t[r].eval(v)
    }
}

/// A move together with its transferred score on the source region.
#[derive(Debug, Clone)]
pub struct MoveScore {
    pub move_index: usize,
    pub score_t: SimpleFunction,
    pub score_d: NatInf,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("strategy improvement still changing after {0} iterations")]
    NonTermination(usize),
    #[error("value iteration reached {0} sweeps without a fixpoint")]
    NoFixpoint(usize),
}

/// Which equation system `verify_opt` checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMode {
    MinMax,
    Max,
    Min,
    ZeroPlayer,
    Geq,
    Leq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptViolation {
    /// A final region whose value is not (0, 0).
    FinalValue { region: RegionId },
    /// The T component disagrees with the folded move scores.
    TValue { region: RegionId },
    /// T agrees but the D component disagrees.
    DValue { region: RegionId },
    /// D and T disagree about finiteness.
    Coupling { region: RegionId },
}

impl fmt::Display for OptViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptViolation::FinalValue { region } => write!(f, "final region #{region} not (0,0)"),
            OptViolation::TValue { region } => write!(f, "T equation fails at region #{region}"),
            OptViolation::DValue { region } => write!(f, "D equation fails at region #{region}"),
            OptViolation::Coupling { region } => {
                write!(f, "T/D finiteness mismatch at region #{region}")
            }
        }
    }
}

/// Values logged across improvement iterations, for the monotonicity
/// assertions: `values[i]` is the i-th computed value and
/// `strategy_changed[i]` says whether the following iteration switched
/// the strategy.
#[derive(Debug, Clone, Default)]
pub struct ImprovementLog {
    pub values: Vec<RegionalValue>,
    pub strategy_changed: Vec<bool>,
}

impl ImprovementLog {
    pub fn iterations(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct MinMaxStats {
    pub outer: ImprovementLog,
    pub inner_iterations: Vec<usize>,
    pub inner_logs: Vec<ImprovementLog>,
}

#[derive(Debug, Clone)]
pub struct MinMaxOutcome {
    pub value: RegionalValue,
    pub min_strategy: PositionalStrategy,
    pub max_strategy: PositionalStrategy,
    pub stats: MinMaxStats,
}

/// The transferred score of one move under a candidate value.
pub fn move_score(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    v: &RegionalValue,
    m: &Move,
) -> (SimpleFunction, NatInf) {
    let resets = &aut.actions[m.alpha.action()].resets;
    let t = transfer(
        &v.t[m.target],
        &m.alpha,
        resets,
        &g.regions[m.source].descriptor,
    );
    (t, bump(v.d[m.target]))
}

/// All move scores of a region, in the canonical move order.
pub fn scored_moves(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    v: &RegionalValue,
    r: RegionId,
) -> Vec<MoveScore> {
    g.moves[r]
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (score_t, score_d) = move_score(g, aut, v, m);
            MoveScore {
                move_index: i,
                score_t,
                score_d,
            }
        })
        .collect()
}

/// Indices of the lex-optimal moves of region `r` under `v`; the first
/// entry is the canonical choice because moves are canonically sorted.
fn best_move_indices(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    v: &RegionalValue,
    r: RegionId,
    side: Player,
) -> Vec<usize> {
    let desc = &g.regions[r].descriptor;
    let mut best: Vec<usize> = Vec::new();
    let mut best_score: Option<(SimpleFunction, NatInf)> = None;
    for (i, m) in g.moves[r].iter().enumerate() {
        let score = move_score(g, aut, v, m);
        match &best_score {
            None => {
                best_score = Some(score);
                best = vec![i];
            }
            Some(b) => {
                let ord = lex_compare((&score.0, score.1), (&b.0, b.1), desc);
                let better = match side {
                    Player::Max => ord == Ordering::Greater,
                    Player::Min => ord == Ordering::Less,
                };
                if better {
                    best_score = Some(score);
                    best = vec![i];
                } else if ord == Ordering::Equal {
                    best.push(i);
                }
            }
        }
    }
    best
}

/// `Choose` applied to each owned non-final region's full move set.
pub fn initial_strategy(g: &TimedRegionGraph, side: Player) -> PositionalStrategy {
    let choice: BTreeMap<RegionId, Move> = g
        .owned_non_final(side)
        .filter_map(|r| g.moves[r].first().map(|m| (r, m.clone())))
        .collect();
    PositionalStrategy { side, choice }
}

/// The canonical `(T, D)`-optimal strategy for `side`.
pub fn canonical_strategy(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    v: &RegionalValue,
    side: Player,
) -> PositionalStrategy {
    let mut choice = BTreeMap::new();
    for r in g.owned_non_final(side) {
        if g.moves[r].is_empty() {
            continue;
        }
        let best = best_move_indices(g, aut, v, r, side);
        choice.insert(r, g.moves[r][best[0]].clone());
    }
    PositionalStrategy { side, choice }
}

/// Path-solve of a choiceless graph view: follows each region's unique
/// resolved move until a final region, an already solved region, or a
/// cycle, then unwinds values backwards. Regions on or leading into a
/// cycle, and stuck regions, get `(infinity, infinity)`. Linear in the
/// number of regions.
fn solve_paths(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    resolve: &dyn Fn(RegionId) -> Option<Move>,
) -> RegionalValue {
    let n = g.num_regions();
    let mut value = RegionalValue::all_infinite(n);
    // 0 = unvisited, 1 = on the current path, 2 = solved.
    let mut state = vec![0u8; n];
    for r in 0..n {
        if g.is_final[r] {
            value.t[r] = SimpleFunction::zero();
            value.d[r] = NatInf::Fin(0);
            state[r] = 2;
        }
    }
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path: Vec<RegionId> = Vec::new();
        let mut cur = start;
        loop {
            if state[cur] == 2 {
                break;
            }
            if state[cur] == 1 {
                // Cycle: everything from its entry point stays infinite.
                let pos = path.iter().position(|&x| x == cur).expect("on path");
                for &r in &path[pos..] {
                    state[r] = 2;
                }
                path.truncate(pos);
                break;
            }
            match resolve(cur) {
                None => {
                    // Stuck region: the play ends, no final is reached.
                    state[cur] = 2;
                    break;
                }
                Some(m) => {
                    state[cur] = 1;
                    path.push(cur);
                    cur = m.target;
                }
            }
        }
        while let Some(r) = path.pop() {
            let m = resolve(r).expect("was resolved while walking");
            let resets = &aut.actions[m.alpha.action()].resets;
            value.t[r] = transfer(
                &value.t[m.target],
                &m.alpha,
                resets,
                &g.regions[r].descriptor,
            );
            value.d[r] = bump(value.d[m.target]);
            state[r] = 2;
        }
    }
    value
}

/// Solves a choiceless graph; every non-final region must have at most
/// one move.
pub fn solve_zero_player(g: &TimedRegionGraph, aut: &TimedAutomatonGame) -> RegionalValue {
    assert_eq!(
        crate::trg::classify(g),
        crate::trg::GraphClass::ZeroPlayer,
        "solve_zero_player needs a choiceless graph"
    );
    solve_paths(g, aut, &|r| g.moves[r].first().copied())
}

/// One improvement step for Max: keep the current move when it is
/// already lex-optimal, otherwise switch to the canonical optimum.
pub fn improve_max(
    chi: &PositionalStrategy,
    v: &RegionalValue,
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
) -> PositionalStrategy {
    improve(chi, v, g, aut, Player::Max)
}

/// One improvement step for Min; dual of `improve_max`.
pub fn improve_min(
    mu: &PositionalStrategy,
    v: &RegionalValue,
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
) -> PositionalStrategy {
    improve(mu, v, g, aut, Player::Min)
}

fn improve(
    current: &PositionalStrategy,
    v: &RegionalValue,
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    side: Player,
) -> PositionalStrategy {
    assert_eq!(current.side, side);
    let mut choice = BTreeMap::new();
    for r in g.owned_non_final(side) {
        if g.moves[r].is_empty() {
            continue;
        }
        let cur = current
            .get(r)
            .expect("strategy total on owned non-final regions");
        let best = best_move_indices(g, aut, v, r, side);
        if best.iter().any(|&i| &g.moves[r][i] == cur) {
            choice.insert(r, cur.clone());
        } else {
            choice.insert(r, g.moves[r][best[0]].clone());
        }
    }
    PositionalStrategy { side, choice }
}

/// Inner strategy improvement: solves the maximization over a graph
/// whose Min regions are either choiceless or pinned by `min_pin`.
fn solve_max_inner(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    min_pin: Option<&PositionalStrategy>,
) -> Result<(RegionalValue, PositionalStrategy, ImprovementLog), SolverError> {
    let n = g.num_regions();
    let mut chi = initial_strategy(g, Player::Max);
    let mut log = ImprovementLog::default();
    for _ in 0..=n + 1 {
        let resolver = |r: RegionId| -> Option<&Move> {
            match g.owner[r] {
                Player::Max => chi.get(r),
                Player::Min => match min_pin {
                    Some(mu) => mu.get(r),
                    None => g.moves[r].first(),
                },
            }
        };
        let v = solve_paths(g, aut, &resolver);
        let next = improve_max(&chi, &v, g, aut);
        let changed = next != chi;
        log.values.push(v.clone());
        log.strategy_changed.push(changed);
        if !changed {
            return Ok((v, chi, log));
        }
        chi = next;
    }
    Err(SolverError::NonTermination(n + 2))
}

/// Solves the one-player maximization; Min regions must be choiceless.
pub fn solve_one_player_max(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
) -> Result<(RegionalValue, PositionalStrategy, ImprovementLog), SolverError> {
    for r in 0..g.num_regions() {
        if g.owner[r] == Player::Min && !g.is_final[r] {
            assert!(
                g.moves[r].len() <= 1,
                "solve_one_player_max needs choiceless Min regions"
            );
        }
    }
    solve_max_inner(g, aut, None)
}

/// Full two-player solve: outer improvement over Min strategies, inner
/// maximization per candidate. Returns the fixpoint value and both
/// canonical optimal strategies.
pub fn solve_minmax(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
) -> Result<MinMaxOutcome, SolverError> {
    let n = g.num_regions();
    let mut mu = initial_strategy(g, Player::Min);
    let mut stats = MinMaxStats::default();
    for _ in 0..=n + 1 {
        let (v, _chi, inner_log) = solve_max_inner(g, aut, Some(&mu))?;
        stats.inner_iterations.push(inner_log.iterations());
        stats.inner_logs.push(inner_log);
        let next = improve_min(&mu, &v, g, aut);
        let changed = next != mu;
        stats.outer.values.push(v.clone());
        stats.outer.strategy_changed.push(changed);
        if !changed {
            let min_strategy = canonical_strategy(g, aut, &v, Player::Min);
            let max_strategy = canonical_strategy(g, aut, &v, Player::Max);
            return Ok(MinMaxOutcome {
                value: v,
                min_strategy,
                max_strategy,
                stats,
            });
        }
        mu = next;
    }
    Err(SolverError::NonTermination(n + 2))
}

/// Re-derives every region's equation right-hand side from scratch and
/// reports regions where the stated (in)equality fails.
///
/// This is a separate code path from the solvers: each move's score is
/// computed by concrete rational arithmetic (wait time plus the target
/// value at the actual successor state) and folded lexicographically at
/// the region's representative and five extra sampled interior points.
pub fn verify_opt(
    v: &RegionalValue,
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    mode: OptMode,
) -> Vec<OptViolation> {
    let mut out = Vec::new();
    for r in 0..g.num_regions() {
        if v.d[r].is_finite() != !v.t[r].is_infinite() {
            out.push(OptViolation::Coupling { region: r });
            continue;
        }
        let mut points = vec![g.representatives[r].clone()];
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ r as u64);
        for _ in 0..5 {
            points.push(crate::ta::Configuration {
                location: g.regions[r].location,
                valuation: crate::region::sample_interior(&g.regions[r].descriptor, &mut rng),
            });
        }
        let mut t_bad = false;
        let mut d_bad = false;
        let mut final_bad = false;
        for s in &points {
            let stored = (v.eval_t(r, &s.valuation), v.d[r]);
            if g.is_final[r] {
                let ok = match mode {
                    OptMode::Geq => cmp_pair(&stored, &(ExtQ::zero(), NatInf::Fin(0))) != Ordering::Less,
                    OptMode::Leq => cmp_pair(&stored, &(ExtQ::zero(), NatInf::Fin(0))) != Ordering::Greater,
                    _ => stored.0 == ExtQ::zero() && stored.1 == NatInf::Fin(0),
                };
                if !ok {
                    final_bad = true;
                }
                continue;
            }
            if g.moves[r].is_empty() {
                match mode {
                    // The relaxations hold vacuously on stuck regions.
                    OptMode::Geq | OptMode::Leq => {}
                    _ => {
                        if stored.0 != ExtQ::Inf || stored.1 != NatInf::Inf {
                            t_bad = true;
                        }
                    }
                }
                continue;
            }
            let maximize = match mode {
                OptMode::MinMax => g.owner[r] == Player::Max,
                OptMode::Max | OptMode::Geq => true,
                OptMode::Min | OptMode::Leq | OptMode::ZeroPlayer => false,
            };
            let folded = fold_concrete(g, aut, v, r, s, maximize);
            match mode {
                OptMode::Geq => {
                    if cmp_pair(&stored, &folded) == Ordering::Less {
                        t_bad = true;
                    }
                }
                OptMode::Leq => {
                    if cmp_pair(&stored, &folded) == Ordering::Greater {
                        t_bad = true;
                    }
                }
                _ => {
                    if stored.0 != folded.0 {
                        t_bad = true;
                    } else if stored.1 != folded.1 {
                        d_bad = true;
                    }
                }
            }
        }
        if final_bad {
            out.push(OptViolation::FinalValue { region: r });
        }
        if t_bad {
            out.push(OptViolation::TValue { region: r });
        } else if d_bad {
            out.push(OptViolation::DValue { region: r });
        }
    }
    out
}

/// Concrete score fold at one state: for every move, wait time plus the
/// target value at the unguarded successor, folded lexicographically.
fn fold_concrete(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    v: &RegionalValue,
    r: RegionId,
    s: &crate::ta::Configuration,
    maximize: bool,
) -> (ExtQ, NatInf) {
    let mut best: Option<(ExtQ, NatInf)> = None;
    for m in &g.moves[r] {
        let score = concrete_move_score(g, aut, v, m, s);
        best = Some(match best {
            None => score,
            Some(b) => {
                let ord = cmp_pair(&score, &b);
                let better = if maximize {
                    ord == Ordering::Greater
                } else {
                    ord == Ordering::Less
                };
                if better {
                    score
                } else {
                    b
                }
            }
        });
    }
    best.unwrap_or((ExtQ::Inf, NatInf::Inf))
}

/// `wait + T(target)(successor)` evaluated with exact arithmetic; the
/// successor may sit on the target's closure boundary.
pub fn concrete_move_score(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    v: &RegionalValue,
    m: &Move,
    s: &crate::ta::Configuration,
) -> (ExtQ, NatInf) {
    let t = wait_time(s, &m.alpha);
    let succ = aut
        .succ_unguarded(s, m.alpha.action(), &t)
        .expect("move wait stays within the clock space");
    debug_assert!(
        crate::region::closure_contains(&g.regions[m.target], &succ),
        "successor must land in the target's closure"
    );
    (
        v.eval_t(m.target, &succ.valuation).add_delay(&t),
        bump(v.d[m.target]),
    )
}

pub fn cmp_pair(a: &(ExtQ, NatInf), b: &(ExtQ, NatInf)) -> Ordering {
    a.0.cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Independent oracle: synchronous lexicographic Bellman sweeps from the
/// all-infinite start, finals pinned at `(0, 0)`. Runs until a sweep
/// changes nothing (at most one sweep per region plus one) and returns
/// the fixpoint.
pub fn value_iteration_oracle(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
) -> Result<RegionalValue, SolverError> {
    let n = g.num_regions();
    let mut cur = RegionalValue::all_infinite(n);
    for r in 0..n {
        if g.is_final[r] {
            cur.t[r] = SimpleFunction::zero();
            cur.d[r] = NatInf::Fin(0);
        }
    }
    for _ in 0..=n + 1 {
        let next = bellman_sweep(g, aut, &cur);
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
    Err(SolverError::NoFixpoint(n + 2))
}

fn bellman_sweep(
    g: &TimedRegionGraph,
    aut: &TimedAutomatonGame,
    v: &RegionalValue,
) -> RegionalValue {
    let n = g.num_regions();
    let mut out = RegionalValue::all_infinite(n);
    for r in 0..n {
        if g.is_final[r] {
            out.t[r] = SimpleFunction::zero();
            out.d[r] = NatInf::Fin(0);
            continue;
        }
        let desc = &g.regions[r].descriptor;
        let mut best: Option<(SimpleFunction, NatInf)> = None;
        for m in &g.moves[r] {
            let score = move_score(g, aut, v, m);
            best = Some(match best {
                None => score,
                Some(b) => {
                    let ord = lex_compare((&score.0, score.1), (&b.0, b.1), desc);
                    let better = match g.owner[r] {
                        Player::Max => ord == Ordering::Greater,
                        Player::Min => ord == Ordering::Less,
                    };
                    if better {
                        score
                    } else {
                        b
                    }
                }
            });
        }
        if let Some((t, d)) = best {
            out.t[r] = t;
            out.d[r] = d;
        }
    }
    out
}

/// Aggregated lexicographic order on regional value pairs: `Less` when
/// the T components are pointwise <= with a strict region, or equal with
/// D pointwise <=; `None` when the regions disagree in direction.
pub fn compare_regional(
    a: &RegionalValue,
    b: &RegionalValue,
    g: &TimedRegionGraph,
) -> Option<Ordering> {
    let mut t_less = false;
    let mut t_greater = false;
    for r in 0..g.num_regions() {
        match crate::simple::compare_on_region(&a.t[r], &b.t[r], &g.regions[r].descriptor) {
            Ordering::Less => t_less = true,
            Ordering::Greater => t_greater = true,
            Ordering::Equal => {}
        }
    }
    match (t_less, t_greater) {
        (true, true) => None,
        (true, false) => Some(Ordering::Less),
        (false, true) => Some(Ordering::Greater),
        (false, false) => {
            let mut d_less = false;
            let mut d_greater = false;
            for r in 0..g.num_regions() {
                match a.d[r].cmp(&b.d[r]) {
                    Ordering::Less => d_less = true,
                    Ordering::Greater => d_greater = true,
                    Ordering::Equal => {}
                }
            }
            match (d_less, d_greater) {
                (true, true) => None,
                (true, false) => Some(Ordering::Less),
                (false, true) => Some(Ordering::Greater),
                (false, false) => Some(Ordering::Equal),
            }
        }
    }
}

/// Regions whose finite time value dips below zero anywhere on the open
/// region; a correct solve never produces any.
pub fn negative_value_regions(v: &RegionalValue, g: &TimedRegionGraph) -> Vec<RegionId> {
    let mut out = Vec::new();
    for r in 0..g.num_regions() {
        match &v.t[r] {
            SimpleFunction::Constant(e) => {
                if *e < 0 {
                    out.push(r);
                }
            }
            SimpleFunction::MinusClock(e, c) => {
                // Nonnegative on the open region iff e >= i_c + 1.
                if *e < g.regions[r].descriptor.int_parts[*c] as i64 + 1 {
                    out.push(r);
                }
            }
            SimpleFunction::Infinite => {}
        }
    }
    out
}
