//! Zero-determinant welfare control for the repeated cross-silo
//! federated-learning participation game.
//!
//! Organizations repeatedly choose how many aggregation rounds to join. The
//! one-shot game is a social dilemma: nobody participating is the only pure
//! equilibrium. A one-round-memory ZD strategy lets a single organization, or
//! an alliance acting through a leader, pin the stationary social welfare
//! regardless of what everyone else does. This crate provides
//!
//! * [`game_model`]: revenue, cost, utility, welfare and the dilemma check,
//! * [`state_space`]: outcome encoding and welfare extrema (enumerated and structured),
//! * [`zd_core`]: transition matrices, stationary distributions and pinning checks,
//! * [`zd_synthesis`]: optimal pinning for individuals and alliances,
//! * [`strategies`] and [`sim_engine`]: the agent roster and the repeated-game simulator,
//! * [`cli`]: scenario files, CSV/SVG output and the `mmzd` command workflows.

pub mod cli;
pub mod error;
pub mod game_model;
pub mod rng;
pub mod sim_engine;
pub mod state_space;
pub mod strategies;
pub mod zd_core;
pub mod zd_synthesis;

pub use error::{Error, Result};
pub use game_model::{ActionProfile, GameConfig, OrgProfile};
pub use state_space::StateIndex;
pub use zd_synthesis::{AllianceSpec, CompletionPolicy, ZdSolution};
