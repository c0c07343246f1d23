//! Per-team Markov decision processes learned from soccer event data.
//!
//! The pitch is split into field states ([`grid`]); possessions from event
//! streams ([`events`], [`statsbomb`]) are counted into a team model
//! ([`model`]). The policy induces an absorbing chain ([`chain`]) that
//! answers shot-or-move questions exactly ([`scenario`]) and evaluates
//! counterfactual shooting policies over a season ([`policy`]).
//! [`synthetic`] samples possessions from known models for testing.

pub mod analysis;
pub mod chain;
pub mod config;
pub mod events;
pub mod export;
pub mod grid;
pub mod intent;
pub mod model;
pub mod policy;
pub mod scenario;
pub mod statsbomb;
pub mod synthetic;

pub use analysis::{Analysis, PreparedModel, SweepMode, WhatIfRequest};
pub use chain::{InducedChain, SolverError, ValueMethod};
pub use events::{Event, EventKind, Possession};
pub use grid::{GridSpec, RegionMask, ZoneId};
pub use model::{fit_team_model, FitOptions, TeamModel};
pub use policy::{adjust_policy, season_whatif, PolicyAdjustment, SeasonReport};
pub use scenario::{ScenarioKind, ScenarioResult};
