//! Game dynamics: agent and ghost movement, item consumption, collisions,
//! scoring, lives, and episode termination.
//!
//! One step advances the whole world by one tile-time: the agent moves,
//! items under it are consumed, ghosts move, then collisions are resolved
//! (same tile after both moves, or the two swapped tiles during the move).
//! Ghost steering is the only stochastic part and is driven either by a
//! seeded stream or by the deterministic chase/flee rules the look-ahead
//! model uses; everything else is shared between the two.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{AgentAction, Direction, Pos};
use crate::maze::{DistanceField, Maze};

pub const DOT_POINTS: u32 = 10;
pub const POWER_DOT_POINTS: u32 = 40;
pub const EXTRA_LIFE_THRESHOLD: u32 = 10_000;
pub const INITIAL_LIVES: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Probability that a ghost takes its steering-optimal move at a
    /// choice point; otherwise it picks uniformly among the other options.
    pub ghost_chase_prob: f64,
    /// Steps a ghost stays edible after a power dot.
    pub edible_duration_steps: u32,
    /// Edible ghosts move only on steps divisible by this.
    pub ghost_edible_speed_divisor: u32,
    pub rng_seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            ghost_chase_prob: 0.8,
            edible_duration_steps: 40,
            ghost_edible_speed_divisor: 2,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GhostMode {
    Normal,
    Edible { remaining: u32 },
    Returning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhostState {
    pub pos: Pos,
    pub dir: Direction,
    pub mode: GhostMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    DotEaten,
    PowerDotEaten,
    /// `rank` is the 1-based position in the current power-dot chain.
    GhostEaten(u8),
    LifeLost,
    ExtraLife,
    LevelCleared,
}

impl Event {
    pub fn points(self) -> u32 {
        match self {
            Event::DotEaten => DOT_POINTS,
            Event::PowerDotEaten => POWER_DOT_POINTS,
            Event::GhostEaten(rank) => 200 * (1 << (rank - 1)),
            Event::LifeLost | Event::ExtraLife | Event::LevelCleared => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepOutcome {
    pub reward: u32,
    pub events: Vec<Event>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("step called on a terminal state")]
    SteppedTerminal,
}

/// Who picks the ghost moves this step.
pub enum GhostDriver<'a> {
    /// Steering-optimal move with probability `ghost_chase_prob`, else
    /// uniform over the other candidates.
    Stochastic(&'a mut ChaCha8Rng),
    /// Always the steering-optimal move. Used by the look-ahead model.
    Deterministic,
}

#[derive(Debug, Clone)]
pub struct GameState {
    pub maze: Arc<Maze>,
    pub dots: std::collections::BTreeSet<Pos>,
    pub power_dots: std::collections::BTreeSet<Pos>,
    pub agent_pos: Pos,
    pub agent_dir: Direction,
    pub ghosts: Vec<GhostState>,
    pub score: u32,
    pub lives: u8,
    pub ghost_chain: u8,
    pub extra_life_granted: bool,
    pub step_index: u64,
    pub terminal: bool,
}

fn initial_dir(maze: &Maze, pos: Pos) -> Direction {
    maze.open_directions(pos)
        .first()
        .copied()
        .unwrap_or(Direction::North)
}

/// Fresh first-level state: all items present, three lives, ghosts at
/// their spawns in normal mode.
pub fn reset(maze: Arc<Maze>, _config: &WorldConfig) -> GameState {
    let ghosts = maze
        .ghost_spawn
        .iter()
        .map(|&pos| GhostState {
            pos,
            dir: initial_dir(&maze, pos),
            mode: GhostMode::Normal,
        })
        .collect();
    GameState {
        dots: maze.dot_spawn.clone(),
        power_dots: maze.power_dot_spawn.clone(),
        agent_pos: maze.agent_spawn,
        agent_dir: initial_dir(&maze, maze.agent_spawn),
        ghosts,
        score: 0,
        lives: INITIAL_LIVES,
        ghost_chain: 0,
        extra_life_granted: false,
        step_index: 0,
        terminal: false,
        maze,
    }
}

impl GameState {
    /// Directions whose target tile is a corridor, fixed N,E,S,W order.
    pub fn legal_moves(&self) -> Vec<Direction> {
        self.maze.open_directions(self.agent_pos)
    }

    /// Advance one step with a seeded ghost stream.
    pub fn step(
        &mut self,
        action: Direction,
        config: &WorldConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<StepOutcome, StepError> {
        self.step_action(AgentAction::Move(action), config, &mut GhostDriver::Stochastic(rng))
    }

    /// Advance one step; `Stop` keeps the agent in place while the rest of
    /// the world moves.
    pub fn step_action(
        &mut self,
        action: AgentAction,
        config: &WorldConfig,
        driver: &mut GhostDriver,
    ) -> Result<StepOutcome, StepError> {
        if self.terminal {
            return Err(StepError::SteppedTerminal);
        }
        let mut events = Vec::new();

        // Agent phase: move one tile if legal, else stay.
        let agent_prev = self.agent_pos;
        if let AgentAction::Move(dir) = action {
            if let Some(next) = self.maze.neighbor(self.agent_pos, dir) {
                self.agent_pos = next;
                self.agent_dir = dir;
            }
        }

        // Consume items under the agent before ghosts react.
        if self.dots.remove(&self.agent_pos) {
            events.push(Event::DotEaten);
        }
        if self.power_dots.remove(&self.agent_pos) {
            events.push(Event::PowerDotEaten);
            self.ghost_chain = 0;
            for ghost in &mut self.ghosts {
                if ghost.mode == GhostMode::Normal {
                    ghost.mode = GhostMode::Edible { remaining: config.edible_duration_steps };
                    ghost.dir = ghost.dir.opposite();
                }
            }
        }

        // Ghost phase. Chase/flee steering reads distance to the agent's
        // new tile; the home field only matters while someone is returning.
        let agent_field = self.maze.distance_field(&[self.agent_pos]);
        let home_field = self
            .ghosts
            .iter()
            .any(|g| g.mode == GhostMode::Returning)
            .then(|| self.maze.distance_field(&[self.maze.ghost_home]));
        let ghost_prev: Vec<Pos> = self.ghosts.iter().map(|g| g.pos).collect();
        for ghost in &mut self.ghosts {
            move_ghost(
                ghost,
                &self.maze,
                config,
                self.step_index,
                &agent_field,
                home_field.as_ref(),
                driver,
            );
        }

        // Collisions: same tile after the moves, or swapped tiles.
        let mut life_lost = false;
        for (i, ghost) in self.ghosts.iter_mut().enumerate() {
            let same_tile = ghost.pos == self.agent_pos;
            let swapped = ghost.pos == agent_prev && ghost_prev[i] == self.agent_pos;
            if !(same_tile || swapped) {
                continue;
            }
            match ghost.mode {
                GhostMode::Edible { .. } => {
                    self.ghost_chain += 1;
                    events.push(Event::GhostEaten(self.ghost_chain));
                    ghost.mode = GhostMode::Returning;
                    ghost.dir = ghost.dir.opposite();
                }
                GhostMode::Normal => {
                    life_lost = true;
                    break;
                }
                GhostMode::Returning => {}
            }
        }
        if life_lost {
            self.lives -= 1;
            events.push(Event::LifeLost);
            self.respawn_actors();
        }

        let reward: u32 = events.iter().map(|e| e.points()).sum();
        self.score += reward;
        if !self.extra_life_granted && self.score >= EXTRA_LIFE_THRESHOLD {
            self.extra_life_granted = true;
            self.lives += 1;
            events.push(Event::ExtraLife);
        }

        if self.dots.is_empty() && self.power_dots.is_empty() {
            events.push(Event::LevelCleared);
            self.terminal = true;
        }
        if self.lives == 0 {
            self.terminal = true;
        }
        self.step_index += 1;
        Ok(StepOutcome { reward, events })
    }

    fn respawn_actors(&mut self) {
        self.agent_pos = self.maze.agent_spawn;
        self.agent_dir = initial_dir(&self.maze, self.maze.agent_spawn);
        self.ghost_chain = 0;
        let spawns = self.maze.ghost_spawn.clone();
        for (ghost, spawn) in self.ghosts.iter_mut().zip(spawns) {
            ghost.pos = spawn;
            ghost.dir = initial_dir(&self.maze, spawn);
            ghost.mode = GhostMode::Normal;
        }
    }
}

fn move_ghost(
    ghost: &mut GhostState,
    maze: &Maze,
    config: &WorldConfig,
    step_index: u64,
    agent_field: &DistanceField,
    home_field: Option<&DistanceField>,
    driver: &mut GhostDriver,
) {
    // Returning remains normalize at the home tile before and after moving.
    if ghost.mode == GhostMode::Returning && ghost.pos == maze.ghost_home {
        ghost.mode = GhostMode::Normal;
        ghost.dir = ghost.dir.opposite();
    }

    match ghost.mode {
        GhostMode::Returning => {
            let home_field = home_field.expect("home field computed while ghosts return");
            // Straight home, reverse allowed, ignoring the agent.
            if let Some(dir) = best_direction(maze, ghost.pos, None, home_field, false) {
                ghost.pos = maze.neighbor(ghost.pos, dir).unwrap();
                ghost.dir = dir;
            }
            if ghost.pos == maze.ghost_home {
                ghost.mode = GhostMode::Normal;
                ghost.dir = ghost.dir.opposite();
            }
        }
        GhostMode::Edible { remaining } => {
            let remaining = remaining - 1;
            if remaining == 0 {
                ghost.mode = GhostMode::Normal;
                ghost.dir = ghost.dir.opposite();
                steer(ghost, maze, config, agent_field, false, driver);
            } else {
                ghost.mode = GhostMode::Edible { remaining };
                // Slowdown: edible ghosts only move on divisor steps.
                if step_index.is_multiple_of(config.ghost_edible_speed_divisor as u64) {
                    steer(ghost, maze, config, agent_field, true, driver);
                }
            }
        }
        GhostMode::Normal => {
            steer(ghost, maze, config, agent_field, false, driver);
        }
    }
}

/// Candidate moves for a ghost: open directions excluding its reverse,
/// unless reversing is the only way out.
fn ghost_candidates(maze: &Maze, pos: Pos, dir: Direction) -> Vec<Direction> {
    let open = maze.open_directions(pos);
    let filtered: Vec<Direction> =
        open.iter().copied().filter(|&d| d != dir.opposite()).collect();
    if filtered.is_empty() {
        open
    } else {
        filtered
    }
}

/// Pick the candidate optimizing the field value at the target tile:
/// minimize when chasing, maximize when fleeing. Fixed-order tie-break.
fn best_direction(
    maze: &Maze,
    pos: Pos,
    no_reverse_of: Option<Direction>,
    field: &DistanceField,
    maximize: bool,
) -> Option<Direction> {
    let candidates = match no_reverse_of {
        Some(dir) => ghost_candidates(maze, pos, dir),
        None => maze.open_directions(pos),
    };
    let mut best: Option<(Direction, u32)> = None;
    for dir in candidates {
        let target = maze.neighbor(pos, dir).unwrap();
        let Some(d) = field.get(target) else { continue };
        let better = match best {
            None => true,
            Some((_, bd)) => {
                if maximize {
                    d > bd
                } else {
                    d < bd
                }
            }
        };
        if better {
            best = Some((dir, d));
        }
    }
    best.map(|(dir, _)| dir)
}

fn steer(
    ghost: &mut GhostState,
    maze: &Maze,
    config: &WorldConfig,
    agent_field: &DistanceField,
    flee: bool,
    driver: &mut GhostDriver,
) {
    let candidates = ghost_candidates(maze, ghost.pos, ghost.dir);
    if candidates.is_empty() {
        return;
    }
    let best = best_direction(maze, ghost.pos, Some(ghost.dir), agent_field, flee)
        .unwrap_or(candidates[0]);
    let chosen = if candidates.len() == 1 {
        candidates[0]
    } else {
        match driver {
            GhostDriver::Deterministic => best,
            GhostDriver::Stochastic(rng) => {
                if rng.gen_bool(config.ghost_chase_prob) {
                    best
                } else {
                    let others: Vec<Direction> =
                        candidates.iter().copied().filter(|&d| d != best).collect();
                    others[rng.gen_range(0..others.len())]
                }
            }
        }
    };
    ghost.pos = maze.neighbor(ghost.pos, chosen).unwrap();
    ghost.dir = chosen;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::test_mazes;
    use crate::maze::{canonical_maze, Distance};
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn corridor_world(len: u16) -> (Arc<Maze>, GameState) {
        let maze = Arc::new(test_mazes::corridor(len));
        let cfg = WorldConfig::default();
        let state = reset(maze.clone(), &cfg);
        (maze, state)
    }

    #[test]
    fn reset_canonical_has_all_items_and_lives() {
        let maze = Arc::new(canonical_maze());
        let state = reset(maze, &WorldConfig::default());
        assert_eq!(state.dots.len(), 174);
        assert_eq!(state.power_dots.len(), 4);
        assert_eq!(state.lives, 3);
        assert_eq!(state.score, 0);
        assert!(!state.terminal);
        assert!(state.ghosts.iter().all(|g| g.mode == GhostMode::Normal));
    }

    #[test]
    fn reset_is_deterministic() {
        let maze = Arc::new(canonical_maze());
        let cfg = WorldConfig::default();
        let a = reset(maze.clone(), &cfg);
        let b = reset(maze, &cfg);
        assert_eq!(a.agent_pos, b.agent_pos);
        assert_eq!(a.ghosts, b.ghosts);
        assert_eq!(a.dots, b.dots);
    }

    #[test]
    fn legal_moves_in_straight_corridor() {
        let (_maze, mut state) = corridor_world(8);
        state.agent_pos = Pos::new(4, 1);
        assert_eq!(state.legal_moves(), vec![Direction::East, Direction::West]);
    }

    #[test]
    fn legal_moves_at_spawn_match_the_maze_file() {
        // Read the glyphs around 'P' straight out of the bundled file and
        // compare with what the engine reports.
        let text = include_str!("../assets/canonical.maze");
        let rows: Vec<&str> = text.lines().collect();
        let (px, py) = rows
            .iter()
            .enumerate()
            .find_map(|(y, row)| row.find('P').map(|x| (x, y)))
            .unwrap();
        let open_by_glyph: Vec<Direction> = Direction::ALL
            .into_iter()
            .filter(|d| {
                let (dx, dy) = d.delta();
                let row = rows[(py as i32 + dy) as usize].as_bytes();
                row[(px as i32 + dx) as usize] != b'#'
            })
            .collect();

        let maze = Arc::new(canonical_maze());
        let state = reset(maze, &WorldConfig::default());
        assert_eq!(state.legal_moves(), open_by_glyph);
    }

    #[test]
    fn legal_moves_at_four_way_junction() {
        let maze = Arc::new(test_mazes::ring5());
        let mut state = reset(maze, &WorldConfig::default());
        // Center of the ring's top edge has N blocked by the border wall;
        // build a plus shape instead.
        let plus = Maze::from_parts(
            5,
            5,
            &[
                Pos::new(0, 0),
                Pos::new(1, 0),
                Pos::new(3, 0),
                Pos::new(4, 0),
                Pos::new(0, 1),
                Pos::new(1, 1),
                Pos::new(3, 1),
                Pos::new(4, 1),
                Pos::new(0, 3),
                Pos::new(1, 3),
                Pos::new(3, 3),
                Pos::new(4, 3),
                Pos::new(0, 4),
                Pos::new(1, 4),
                Pos::new(3, 4),
                Pos::new(4, 4),
            ],
            &[],
            &[],
            Pos::new(2, 2),
            [Pos::new(2, 0); 4],
            Pos::new(2, 4),
        )
        .unwrap();
        state.maze = Arc::new(plus);
        state.agent_pos = Pos::new(2, 2);
        assert_eq!(
            state.legal_moves(),
            vec![Direction::North, Direction::East, Direction::South, Direction::West]
        );
    }

    #[test]
    fn eating_a_dot_pays_ten() {
        let (_maze, mut state) = corridor_world(8);
        state.ghosts.clear();
        state.dots = [Pos::new(2, 1)].into_iter().collect();
        state.power_dots = [Pos::new(8, 1)].into_iter().collect();
        state.agent_pos = Pos::new(1, 1);
        let out = state.step(Direction::East, &WorldConfig::default(), &mut rng()).unwrap();
        assert_eq!(out.reward, 10);
        assert_eq!(out.events, vec![Event::DotEaten]);
        assert_eq!(state.score, 10);
    }

    #[test]
    fn wall_bump_changes_nothing() {
        let (_maze, mut state) = corridor_world(8);
        state.ghosts.clear();
        state.dots = [Pos::new(8, 1)].into_iter().collect();
        state.agent_pos = Pos::new(1, 1);
        let out = state.step(Direction::North, &WorldConfig::default(), &mut rng()).unwrap();
        assert_eq!(out.reward, 0);
        assert!(out.events.is_empty());
        assert_eq!(state.agent_pos, Pos::new(1, 1));
    }

    #[test]
    fn ghost_chain_doubles_and_resets() {
        // Corridor: agent at 1, power dot at 2, two ghosts ahead. A dot
        // stays parked behind the agent so the level never clears, and the
        // ghost home sits at the west end so eaten ghosts return behind
        // the hunt instead of recovering in the middle of it.
        let mut maze = test_mazes::corridor(12);
        maze.ghost_home = Pos::new(1, 1);
        let mut state = reset(Arc::new(maze), &WorldConfig::default());
        let cfg = WorldConfig { ghost_chase_prob: 1.0, ..WorldConfig::default() };
        state.dots = [Pos::new(1, 1)].into_iter().collect();
        state.power_dots = [Pos::new(2, 1)].into_iter().collect();
        state.agent_pos = Pos::new(1, 1);
        state.ghosts = vec![
            GhostState { pos: Pos::new(4, 1), dir: Direction::West, mode: GhostMode::Normal },
            GhostState { pos: Pos::new(6, 1), dir: Direction::West, mode: GhostMode::Normal },
        ];
        let mut r = rng();
        let out = state.step(Direction::East, &cfg, &mut r).unwrap();
        assert_eq!(out.events, vec![Event::PowerDotEaten]);
        assert!(state.ghosts.iter().all(|g| matches!(g.mode, GhostMode::Edible { .. })));

        // Walk east until both ghosts are eaten; they flee at half speed
        // and get cornered at the east wall.
        let mut ranks = Vec::new();
        for _ in 0..40 {
            let out = state.step(Direction::East, &cfg, &mut r).unwrap();
            for e in out.events {
                if let Event::GhostEaten(rank) = e {
                    ranks.push((rank, e.points()));
                }
            }
            if ranks.len() == 2 {
                break;
            }
        }
        assert_eq!(ranks, vec![(1, 200), (2, 400)]);

        // A later power dot resets the chain: the next ghost pays 200 again.
        state.power_dots = [Pos::new(2, 1)].into_iter().collect();
        state.agent_pos = Pos::new(3, 1);
        state.ghosts = vec![GhostState {
            pos: Pos::new(7, 1),
            dir: Direction::West,
            mode: GhostMode::Normal,
        }];
        let out = state.step(Direction::West, &cfg, &mut r).unwrap();
        assert!(out.events.contains(&Event::PowerDotEaten));
        assert_eq!(state.ghost_chain, 0);
        for _ in 0..40 {
            let out = state.step(Direction::East, &cfg, &mut r).unwrap();
            if let Some(Event::GhostEaten(rank)) =
                out.events.iter().find(|e| matches!(e, Event::GhostEaten(_)))
            {
                assert_eq!(*rank, 1);
                assert_eq!(out.reward, 200);
                return;
            }
        }
        panic!("ghost never caught");
    }

    #[test]
    fn swap_collision_is_detected() {
        let (_maze, mut state) = corridor_world(8);
        let cfg = WorldConfig { ghost_chase_prob: 1.0, ..WorldConfig::default() };
        state.dots = [Pos::new(8, 1)].into_iter().collect();
        state.agent_pos = Pos::new(3, 1);
        state.ghosts = vec![GhostState {
            pos: Pos::new(4, 1),
            dir: Direction::West,
            mode: GhostMode::Normal,
        }];
        // Agent steps east into the ghost while the ghost steps west into
        // the agent: they cross without sharing a tile.
        let out = state.step(Direction::East, &cfg, &mut rng()).unwrap();
        assert!(out.events.contains(&Event::LifeLost));
        assert_eq!(state.lives, 2);
        assert_eq!(state.agent_pos, state.maze.agent_spawn);
    }

    #[test]
    fn returning_ghost_heads_home_and_recovers() {
        let (maze, mut state) = corridor_world(9);
        let cfg = WorldConfig::default();
        state.dots = [Pos::new(9, 1)].into_iter().collect();
        state.agent_pos = Pos::new(1, 1);
        let start = Pos::new(8, 1);
        state.ghosts = vec![GhostState {
            pos: start,
            dir: Direction::East,
            mode: GhostMode::Returning,
        }];
        let home = maze.ghost_home;
        let Distance::Steps(dist) = maze.shortest_path_distance(start, home).unwrap() else {
            panic!("unreachable home");
        };
        let mut r = rng();
        for _ in 0..dist {
            state.step(Direction::West, &cfg, &mut r).unwrap();
        }
        assert_eq!(state.ghosts[0].pos, home);
        // One more step flips it back to normal.
        state.step(Direction::East, &cfg, &mut r).unwrap();
        assert_eq!(state.ghosts[0].mode, GhostMode::Normal);
    }

    #[test]
    fn edible_timer_counts_down_to_normal() {
        let (_maze, mut state) = corridor_world(20);
        let cfg = WorldConfig { edible_duration_steps: 5, ..WorldConfig::default() };
        state.dots = [Pos::new(20, 1)].into_iter().collect();
        state.agent_pos = Pos::new(1, 1);
        state.ghosts = vec![GhostState {
            pos: Pos::new(15, 1),
            dir: Direction::East,
            mode: GhostMode::Edible { remaining: 5 },
        }];
        let mut r = rng();
        let mut seen = Vec::new();
        for _ in 0..5 {
            state.step(Direction::East, &cfg, &mut r).unwrap();
            seen.push(state.ghosts[0].mode);
        }
        assert_eq!(
            seen,
            vec![
                GhostMode::Edible { remaining: 4 },
                GhostMode::Edible { remaining: 3 },
                GhostMode::Edible { remaining: 2 },
                GhostMode::Edible { remaining: 1 },
                GhostMode::Normal,
            ]
        );
    }

    #[test]
    fn extra_life_granted_exactly_once() {
        let (_maze, mut state) = corridor_world(8);
        let cfg = WorldConfig::default();
        state.ghosts.clear();
        state.dots = [Pos::new(2, 1), Pos::new(3, 1), Pos::new(8, 1)].into_iter().collect();
        state.agent_pos = Pos::new(1, 1);
        state.score = 9_995;
        let mut r = rng();
        let out = state.step(Direction::East, &cfg, &mut r).unwrap();
        assert!(out.events.contains(&Event::ExtraLife));
        assert_eq!(state.lives, 4);
        let out = state.step(Direction::East, &cfg, &mut r).unwrap();
        assert!(!out.events.contains(&Event::ExtraLife));
        assert_eq!(state.lives, 4);
    }

    #[test]
    fn clearing_the_level_terminates() {
        let (_maze, mut state) = corridor_world(8);
        state.ghosts.clear();
        state.dots = [Pos::new(2, 1)].into_iter().collect();
        state.power_dots.clear();
        state.agent_pos = Pos::new(1, 1);
        let out = state.step(Direction::East, &WorldConfig::default(), &mut rng()).unwrap();
        assert!(out.events.contains(&Event::LevelCleared));
        assert!(state.terminal);
        assert_eq!(
            state.step(Direction::East, &WorldConfig::default(), &mut rng()),
            Err(StepError::SteppedTerminal)
        );
    }

    #[test]
    fn losing_last_life_terminates() {
        let (_maze, mut state) = corridor_world(8);
        let cfg = WorldConfig { ghost_chase_prob: 1.0, ..WorldConfig::default() };
        state.dots = [Pos::new(8, 1)].into_iter().collect();
        state.lives = 1;
        state.agent_pos = Pos::new(3, 1);
        state.ghosts = vec![GhostState {
            pos: Pos::new(4, 1),
            dir: Direction::West,
            mode: GhostMode::Normal,
        }];
        let out = state.step(Direction::East, &cfg, &mut rng()).unwrap();
        assert!(out.events.contains(&Event::LifeLost));
        assert!(state.terminal);
    }
}

