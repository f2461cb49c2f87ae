//! Canonical clock regions with diagonal refinement.
//!
//! Two valuations are equivalent when they satisfy the same simple
//! constraints `c op i` and `c - c' op i` with constants up to the bound.
//! That holds exactly when all integer parts agree and the clocks are
//! ordered the same way by fractional part, including which fractional
//! parts are zero. A descriptor therefore stores the integer part of each
//! clock plus the ordered fractional blocks: `zero_block` holds clocks
//! with fractional part 0, `frac_blocks` the remaining clocks grouped by
//! equal fractional part in strictly increasing order.
//!
//! The canonical region order is `(location, int_parts, frac_blocks,
//! zero_block)` with lexicographic comparison of the block lists by
//! sorted clock ids. Along a time-successor chain this sorts regions in
//! chain order, which keeps golden outputs readable.

use crate::rational::{floor_u32, frac_part, q_int, Q};
use crate::ta::{ActionId, ClockId, ClockValuation, Configuration, TimedAutomatonGame};
use num_rational::BigRational;
use num_traits::Zero;
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClockRegionDescriptor {
    /// Integer part of each clock, indexed by clock id; values in `0..=k`.
    pub int_parts: Vec<u32>,
    /// Clocks with fractional part 0, sorted by id; may be empty.
    pub zero_block: Vec<ClockId>,
    /// Non-empty groups of clocks with equal, strictly increasing positive
    /// fractional parts; each group sorted by id.
    pub frac_blocks: Vec<Vec<ClockId>>,
}

impl ClockRegionDescriptor {
    /// Thin regions change under every positive delay, which happens
    /// exactly when some clock is integral.
    pub fn is_thin(&self) -> bool {
        !self.zero_block.is_empty()
    }

    /// Block position of a clock: 0 for the zero block, `j` for the j-th
    /// positive block.
    pub fn block_position(&self, clock: ClockId) -> usize {
        if self.zero_block.contains(&clock) {
            return 0;
        }
        for (j, block) in self.frac_blocks.iter().enumerate() {
            if block.contains(&clock) {
                return j + 1;
            }
        }
        panic!("clock {clock} missing from descriptor");
    }

    /// Number of positive fractional blocks.
    pub fn num_frac_blocks(&self) -> usize {
        self.frac_blocks.len()
    }

    /// True when some clock sits at the bound, so no positive delay stays
    /// inside the valuation space.
    pub fn time_blocked(&self, bound: u32) -> bool {
        self.int_parts.iter().any(|&i| i == bound)
    }

    fn order_key(&self) -> (&Vec<u32>, &Vec<Vec<ClockId>>, &Vec<ClockId>) {
        (&self.int_parts, &self.frac_blocks, &self.zero_block)
    }
}

impl PartialOrd for ClockRegionDescriptor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ClockRegionDescriptor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub location: crate::ta::LocationId,
    pub descriptor: ClockRegionDescriptor,
}

/// Region index into the canonical enumeration of a game's state regions.
pub type RegionId = usize;

/// The clock region of a valuation.
pub fn descriptor_of(v: &ClockValuation) -> ClockRegionDescriptor {
    let mut int_parts = Vec::with_capacity(v.0.len());
    let mut zero_block = Vec::new();
    let mut fractional: Vec<(Q, ClockId)> = Vec::new();
    for (c, x) in v.0.iter().enumerate() {
        int_parts.push(floor_u32(x));
        let f = frac_part(x);
        if f.is_zero() {
            zero_block.push(c);
        } else {
            fractional.push((f, c));
        }
    }
    fractional.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut frac_blocks: Vec<Vec<ClockId>> = Vec::new();
    let mut last: Option<Q> = None;
    for (f, c) in fractional {
        if last.as_ref() == Some(&f) {
            frac_blocks.last_mut().unwrap().push(c);
        } else {
            frac_blocks.push(vec![c]);
            last = Some(f);
        }
    }
    ClockRegionDescriptor {
        int_parts,
        zero_block,
        frac_blocks,
    }
}

pub fn region_of(s: &Configuration) -> Region {
    Region {
        location: s.location,
        descriptor: descriptor_of(&s.valuation),
    }
}

/// The canonical interior point: integral clocks at their integer, the
/// j-th positive block at fraction `j / (m + 1)`.
pub fn representative(r: &Region) -> Configuration {
    let desc = &r.descriptor;
    let m = desc.num_frac_blocks();
    let mut vals = vec![Q::zero(); desc.int_parts.len()];
    for &c in &desc.zero_block {
        vals[c] = q_int(desc.int_parts[c] as i64);
    }
    for (j, block) in desc.frac_blocks.iter().enumerate() {
        let frac = BigRational::new(((j + 1) as i64).into(), ((m + 1) as i64).into());
        for &c in block {
            vals[c] = q_int(desc.int_parts[c] as i64) + &frac;
        }
    }
    Configuration {
        location: r.location,
        valuation: ClockValuation(vals),
    }
}

/// All clock-region descriptors over `num_clocks` clocks bounded by `k`,
/// in canonical order. A clock at the bound must be integral, so blocks
/// never contain clocks with integer part `k`.
pub fn enumerate_descriptors(num_clocks: usize, k: u32) -> Vec<ClockRegionDescriptor> {
    let clocks: Vec<ClockId> = (0..num_clocks).collect();
    let mut out = Vec::new();
    for zero_mask in 0u32..(1 << num_clocks) {
        let zero_block: Vec<ClockId> = clocks
            .iter()
            .copied()
            .filter(|c| zero_mask & (1 << c) != 0)
            .collect();
        let rest: Vec<ClockId> = clocks
            .iter()
            .copied()
            .filter(|c| zero_mask & (1 << c) == 0)
            .collect();
        for blocks in ordered_partitions(&rest) {
            let mut int_choices = vec![Vec::new()];
            for c in 0..num_clocks {
                let max_i = if zero_block.contains(&c) { k } else { k.saturating_sub(1) };
                // A positive fraction is impossible when k = 0.
                if !zero_block.contains(&c) && k == 0 {
                    int_choices.clear();
                    break;
                }
                let mut next = Vec::new();
                for prefix in &int_choices {
                    for i in 0..=max_i {
                        let mut v: Vec<u32> = prefix.clone();
                        v.push(i);
                        next.push(v);
                    }
                }
                int_choices = next;
            }
            for int_parts in int_choices {
                out.push(ClockRegionDescriptor {
                    int_parts,
                    zero_block: zero_block.clone(),
                    frac_blocks: blocks.clone(),
                });
            }
        }
    }
    out.sort();
    out
}

/// All ways to split `items` into an ordered sequence of non-empty,
/// sorted blocks; the empty sequence for no items.
fn ordered_partitions(items: &[ClockId]) -> Vec<Vec<Vec<ClockId>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let n = items.len();
    // The first block is any non-empty subset; recurse on the remainder.
    for mask in 1u32..(1 << n) {
        let first: Vec<ClockId> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| items[i]).collect();
        let rest: Vec<ClockId> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| items[i]).collect();
        for mut tail in ordered_partitions(&rest) {
            let mut blocks = vec![first.clone()];
            blocks.append(&mut tail);
            out.push(blocks);
        }
    }
    out
}

/// All state regions of the game: every region whose representative
/// satisfies the location invariant, in canonical order. Zones are
/// unions of regions, so the representative test is exact.
pub fn enumerate_regions(aut: &TimedAutomatonGame) -> Vec<Region> {
    let descriptors = enumerate_descriptors(aut.num_clocks(), aut.bound);
    let mut out = Vec::new();
    for loc in 0..aut.locations.len() {
        for desc in &descriptors {
            let region = Region {
                location: loc,
                descriptor: desc.clone(),
            };
            let rep = representative(&region);
            if aut.locations[loc].invariant.holds(&rep.valuation) {
                out.push(region);
            }
        }
    }
    out
}

/// The time successor within the state zone: `None` when time is blocked
/// (a clock at the bound) or the next region leaves the invariant.
pub fn time_successor(r: &Region, aut: &TimedAutomatonGame) -> Option<Region> {
    let desc = &r.descriptor;
    if desc.time_blocked(aut.bound) {
        return None;
    }
    let next = if desc.is_thin() {
        // The integral clocks pick up the smallest positive fraction.
        let mut frac_blocks = Vec::with_capacity(desc.frac_blocks.len() + 1);
        frac_blocks.push(desc.zero_block.clone());
        frac_blocks.extend(desc.frac_blocks.iter().cloned());
        ClockRegionDescriptor {
            int_parts: desc.int_parts.clone(),
            zero_block: Vec::new(),
            frac_blocks,
        }
    } else {
        // The top block reaches the next integer.
        let mut frac_blocks = desc.frac_blocks.clone();
        let top = frac_blocks.pop().expect("thick region has a block");
        let mut int_parts = desc.int_parts.clone();
        for &c in &top {
            int_parts[c] += 1;
        }
        ClockRegionDescriptor {
            int_parts,
            zero_block: top,
            frac_blocks,
        }
    };
    let region = Region {
        location: r.location,
        descriptor: next,
    };
    let rep = representative(&region);
    if aut.locations[r.location].invariant.holds(&rep.valuation) {
        Some(region)
    } else {
        None
    }
}

/// The reflexive chain of time successors from `r`, in order.
pub fn future_chain(r: &Region, aut: &TimedAutomatonGame) -> Vec<Region> {
    let mut chain = vec![r.clone()];
    let mut cur = r.clone();
    while let Some(next) = time_successor(&cur, aut) {
        chain.push(next.clone());
        cur = next;
    }
    chain
}

/// The boundary label `(b, c)` of a thin region in the future of `r`:
/// from any state of `r`, delaying by `b - s(c)` lands exactly in
/// `thin`. Returns `None` if `thin` is not on `r`'s future chain. The
/// clock is the smallest id in the thin region's zero block; any of them
/// reaches its integer at the same instant.
pub fn boundary_target(
    r: &Region,
    thin: &Region,
    aut: &TimedAutomatonGame,
) -> Option<(u32, ClockId)> {
    if !thin.descriptor.is_thin() {
        return None;
    }
    if !future_chain(r, aut).contains(thin) {
        return None;
    }
    let c = *thin.descriptor.zero_block.first()?;
    Some((thin.descriptor.int_parts[c], c))
}

/// The discrete region successor under action `a`: `None` when the guard
/// does not cover `r` or the successor leaves the state zone. Reset
/// clocks join the zero block with integer part 0; the successor region
/// does not depend on the chosen state.
pub fn region_discrete_succ(
    r: &Region,
    a: ActionId,
    aut: &TimedAutomatonGame,
) -> Option<Region> {
    let act = &aut.actions[a];
    if act.source != r.location {
        return None;
    }
    let rep = representative(r);
    if !act.guard.holds(&rep.valuation) {
        return None;
    }
    let desc = &r.descriptor;
    let mut int_parts = desc.int_parts.clone();
    let mut zero_block = desc.zero_block.clone();
    let mut frac_blocks = Vec::with_capacity(desc.frac_blocks.len());
    for &c in &act.resets {
        int_parts[c] = 0;
        if !zero_block.contains(&c) {
            zero_block.push(c);
        }
    }
    zero_block.sort_unstable();
    for block in &desc.frac_blocks {
        let kept: Vec<ClockId> = block
            .iter()
            .copied()
            .filter(|c| !act.resets.contains(c))
            .collect();
        if !kept.is_empty() {
            frac_blocks.push(kept);
        }
    }
    let region = Region {
        location: act.target,
        descriptor: ClockRegionDescriptor {
            int_parts,
            zero_block,
            frac_blocks,
        },
    };
    let target_rep = representative(&region);
    if aut.locations[region.location].invariant.holds(&target_rep.valuation) {
        Some(region)
    } else {
        None
    }
}

/// Closure membership: the non-strict relaxation of the region's
/// defining constraints. Equalities (integral clocks, same-block pairs)
/// stay equalities; strict bounds and cross-block orderings relax.
pub fn closure_contains(r: &Region, s: &Configuration) -> bool {
    if s.location != r.location {
        return false;
    }
    let desc = &r.descriptor;
    let v = &s.valuation;
    for &c in &desc.zero_block {
        if v.0[c] != q_int(desc.int_parts[c] as i64) {
            return false;
        }
    }
    for block in &desc.frac_blocks {
        for &c in block {
            let lo = q_int(desc.int_parts[c] as i64);
            let hi = q_int(desc.int_parts[c] as i64 + 1);
            if v.0[c] < lo || v.0[c] > hi {
                return false;
            }
        }
        // Within a block the value differences are pinned.
        let c0 = block[0];
        let base = q_int(desc.int_parts[c0] as i64);
        for &c in &block[1..] {
            let expected = q_int(desc.int_parts[c] as i64) - &base;
            if &v.0[c] - &v.0[c0] != expected {
                return false;
            }
        }
    }
    // Fractional order between different groups relaxes to <=.
    let group_rep: Vec<ClockId> = std::iter::once(desc.zero_block.first().copied())
        .chain(desc.frac_blocks.iter().map(|b| b.first().copied()))
        .flatten()
        .collect();
    let positions: Vec<usize> = group_rep
        .iter()
        .map(|&c| desc.block_position(c))
        .collect();
    for (i, &c) in group_rep.iter().enumerate() {
        for (j, &d) in group_rep.iter().enumerate() {
            if positions[i] < positions[j] {
                // frac(c) <= frac(d), i.e. v(c) - v(d) <= i_c - i_d.
                let gap = q_int(desc.int_parts[c] as i64) - q_int(desc.int_parts[d] as i64);
                if &v.0[c] - &v.0[d] > gap {
                    return false;
                }
            }
        }
    }
    true
}

/// Canonical textual form: `loc=<name>; int=[c:i,...]; frac=[{B0},{B1},...]`.
pub fn region_text(r: &Region, aut: &TimedAutomatonGame) -> String {
    let desc = &r.descriptor;
    let ints: Vec<String> = desc
        .int_parts
        .iter()
        .enumerate()
        .map(|(c, i)| format!("{}:{}", aut.clock_name(c), i))
        .collect();
    let block = |b: &Vec<ClockId>| {
        let names: Vec<&str> = b.iter().map(|&c| aut.clock_name(c)).collect();
        format!("{{{}}}", names.join(","))
    };
    let mut blocks = vec![block(&desc.zero_block)];
    blocks.extend(desc.frac_blocks.iter().map(block));
    format!(
        "loc={}; int=[{}]; frac=[{}]",
        aut.locations[r.location].name,
        ints.join(","),
        blocks.join(",")
    )
}
