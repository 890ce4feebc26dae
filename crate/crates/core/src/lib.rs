//! Energy-aware footstep planning for humanoid robots on elevation maps.
//!
//! The crate builds a filtered elevation map from terrain primitives, plans
//! footstep sequences with A* over adaptive action sets scored by a
//! cost-of-transport energy model, and replays plans in a step-synchronous
//! replanning simulator.

pub mod actions;
pub mod energy;
pub mod error;
pub mod feasibility;
pub mod geometry;
pub mod planner;
pub mod replan;
pub mod report;
pub mod scenario;
pub mod worldmap;

pub use error::{Error, Result};
