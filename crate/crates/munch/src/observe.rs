//! Scalar observations that rule conditions test.
//!
//! The four `Nearest*` observations are corridor BFS distances from the
//! agent to the closest entity of the class, or the sentinel `100.0` when
//! no such entity exists (picked so a `>99` condition can test absence).
//! `GhostDensity` sums `max(0, 1 - d/10)` over normal-mode ghosts, and
//! `Constant` is always 1.

use serde::{Deserialize, Serialize};

use crate::grid::Pos;
use crate::world::{GameState, GhostMode};

/// Sentinel distance reported when an entity class is empty.
pub const ABSENT: f64 = 100.0;

/// Horizon, in tiles, of the ghost-density kernel.
pub const DENSITY_HORIZON: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObservationKind {
    NearestDot,
    NearestPowerDot,
    NearestGhost,
    NearestEdGhost,
    GhostDensity,
    Constant,
}

impl ObservationKind {
    pub const ALL: [ObservationKind; 6] = [
        ObservationKind::NearestDot,
        ObservationKind::NearestPowerDot,
        ObservationKind::NearestGhost,
        ObservationKind::NearestEdGhost,
        ObservationKind::GhostDensity,
        ObservationKind::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObservationKind::NearestDot => "NearestDot",
            ObservationKind::NearestPowerDot => "NearestPowerDot",
            ObservationKind::NearestGhost => "NearestGhost",
            ObservationKind::NearestEdGhost => "NearestEdGhost",
            ObservationKind::GhostDensity => "GhostDensity",
            ObservationKind::Constant => "Constant",
        }
    }

    pub fn from_name(s: &str) -> Option<ObservationKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn index(self) -> usize {
        match self {
            ObservationKind::NearestDot => 0,
            ObservationKind::NearestPowerDot => 1,
            ObservationKind::NearestGhost => 2,
            ObservationKind::NearestEdGhost => 3,
            ObservationKind::GhostDensity => 4,
            ObservationKind::Constant => 5,
        }
    }
}

/// One value per observation kind, computed from a single agent BFS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observations([f64; 6]);

impl Observations {
    pub fn get(&self, kind: ObservationKind) -> f64 {
        self.0[kind.index()]
    }

    /// Hand-assembled observations for tests and condition evaluation
    /// outside a live game.
    pub fn from_values(values: [(ObservationKind, f64); 6]) -> Observations {
        let mut obs = [0.0; 6];
        for (kind, v) in values {
            obs[kind.index()] = v;
        }
        Observations(obs)
    }
}

/// Compute every observation for a state.
pub fn observe_all(state: &GameState) -> Observations {
    let field = state.maze.distance_field(&[state.agent_pos]);
    let dist_to = |pos: Pos| field.get(pos).map(|d| d as f64);

    let nearest = |positions: &mut dyn Iterator<Item = Pos>| -> f64 {
        positions
            .filter_map(dist_to)
            .fold(None::<f64>, |acc, d| Some(acc.map_or(d, |a| a.min(d))))
            .unwrap_or(ABSENT)
    };

    let nearest_dot = nearest(&mut state.dots.iter().copied());
    let nearest_power = nearest(&mut state.power_dots.iter().copied());
    let nearest_ghost = nearest(
        &mut state
            .ghosts
            .iter()
            .filter(|g| g.mode == GhostMode::Normal)
            .map(|g| g.pos),
    );
    let nearest_edible = nearest(
        &mut state
            .ghosts
            .iter()
            .filter(|g| matches!(g.mode, GhostMode::Edible { .. }))
            .map(|g| g.pos),
    );
    let density: f64 = state
        .ghosts
        .iter()
        .filter(|g| g.mode == GhostMode::Normal)
        .filter_map(|g| dist_to(g.pos))
        .map(|d| (1.0 - d / DENSITY_HORIZON).max(0.0))
        .sum();

    Observations([nearest_dot, nearest_power, nearest_ghost, nearest_edible, density, 1.0])
}

/// Compute a single observation; consistent with `observe_all`.
pub fn observe(state: &GameState, kind: ObservationKind) -> f64 {
    observe_all(state).get(kind)
}
