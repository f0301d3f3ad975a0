//! Hierarchical co-safe LTL for multi-robot task planning.
//!
//! The pipeline runs from a natural-language instruction to a Hierarchical
//! Task Tree ([`htt`]), from the tree to a leveled set of co-safe formulas
//! ([`hier`]), and from those formulas to automata ([`automata`]) that drive
//! an optimal joint task-allocation and planning search ([`planner`]) over a
//! grid world ([`world`]).

pub mod api;
pub mod automata;
pub mod harness;
pub mod hier;
pub mod htt;
pub mod ltl;
pub mod nl;
pub mod planner;
pub mod world;
