//! Solver library for reachability-time games on timed automata.
//!
//! The library models two-player games where Min wants to reach a final
//! state as fast as possible and Max wants to delay that as long as
//! possible. Values are computed exactly: the state space is quotiented
//! into clock regions, game values are symbolic simple functions per
//! region, and the optimality equations over the resulting timed region
//! graph are solved by nested strategy improvement. Independent verifiers
//! (a from-scratch equation checker and a value-iteration oracle) validate
//! every solution, and epsilon-optimal positional strategies can be
//! concretized and simulated with exact rational arithmetic.

pub mod countdown;
pub mod io;
pub mod play;
pub mod rational;
pub mod region;
pub mod simple;
pub mod solver;
pub mod ta;
pub mod trg;

pub use rational::{ExtQ, Q};
pub use ta::{Configuration, Player, TimedAutomatonGame};
