//! A maze-muncher grid world and the learning stack built on top of it:
//! a rule-based agent whose action modules form behavioral states,
//! cross-entropy policy search over the rule space, TD(0) valuation of
//! the behavioral states with TD-error histograms, and a deterministic
//! look-ahead planner running on a simplified model of the world.

pub mod cem;
pub mod config;
pub mod grid;
pub mod maze;
pub mod observe;
pub mod plan;
pub mod policy;
pub mod report;
pub mod rollout;
pub mod td;
pub mod world;

pub use grid::{AgentAction, Direction, Pos};
pub use maze::{canonical_maze, Distance, Maze, MazeError};
pub use observe::{observe, observe_all, ObservationKind, Observations};
pub use policy::{
    decide, eval_condition, macro_code, module_direction, prewired_policy, ActionModuleKind,
    MacroCode, ModuleSet, Policy, Rule,
};
pub use world::{reset, Event, GameState, GhostMode, GhostState, StepOutcome, WorldConfig};
