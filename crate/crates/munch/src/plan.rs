//! Deterministic look-ahead on a simplified model of the world.
//!
//! The model is the real step function with ghost randomness stripped:
//! normal ghosts always chase, edible ghosts always flee, ties break in
//! the same fixed direction order. Trajectories are enumerated depth
//! first over agent actions, never revisiting an agent position, with an
//! optional `Stop` at positions where the base policy was seen
//! zig-zagging. A branch ends at the depth limit, at a model reset
//! (losing a life), or when the level clears. Each leaf is scored as
//! cumulated reward plus the learned value of the macro the base policy
//! would occupy there (undiscounted), and the chosen move is the first
//! action of the best leaf.

use std::collections::BTreeSet;

use crate::grid::{AgentAction, Pos};
use crate::observe::observe_all;
use crate::policy::{decide, macro_code, module_direction, ModuleSet, Policy};
use crate::td::ValueTable;
use crate::world::{Event, GameState, GhostDriver, StepError, StepOutcome, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookaheadConfig {
    /// Trajectory depth in agent steps; 0 disables planning.
    pub depth: u32,
    pub allow_stop_at_zigzag: bool,
    /// Cap on node expansions per decision.
    pub node_budget: u64,
    /// Leaf value used when the branch ended in a lost life.
    pub death_penalty: f64,
}

impl Default for LookaheadConfig {
    fn default() -> Self {
        LookaheadConfig {
            depth: 0,
            allow_stop_at_zigzag: true,
            node_budget: 5_000_000,
            death_penalty: -1000.0,
        }
    }
}

/// One step of the deterministic model: identical scoring and collision
/// rules, ghosts on their fixed chase/flee policies.
pub fn deterministic_step(
    state: &mut GameState,
    action: AgentAction,
    config: &WorldConfig,
) -> Result<StepOutcome, StepError> {
    state.step_action(action, config, &mut GhostDriver::Deterministic)
}

/// A finished trajectory: the model state it reached, the base policy's
/// module bookkeeping at that state, and the path that led there.
#[derive(Debug, Clone)]
pub struct TrajectoryNode {
    pub state: GameState,
    pub modules: ModuleSet,
    pub depth: u32,
    pub cumulated_reward: u32,
    /// Actions from the root; the first entry is what the agent would
    /// actually execute.
    pub actions: Vec<AgentAction>,
    pub visited: BTreeSet<Pos>,
    pub died: bool,
}

impl TrajectoryNode {
    pub fn first_action(&self) -> Option<AgentAction> {
        self.actions.first().copied()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Enumeration {
    pub leaves: Vec<TrajectoryNode>,
    /// Set when the node budget ran out; the leaves found so far are
    /// still returned.
    pub truncated: bool,
    pub expansions: u64,
}

/// Depth-first enumeration of model trajectories from `root`.
pub fn enumerate(
    root: &GameState,
    root_modules: &ModuleSet,
    policy: &Policy,
    world: &WorldConfig,
    config: &LookaheadConfig,
    zigzag: &BTreeSet<Pos>,
) -> Enumeration {
    let mut out = Enumeration::default();
    if config.depth == 0 || root.terminal {
        return out;
    }
    let mut visited = BTreeSet::new();
    visited.insert(root.agent_pos);
    let node = TrajectoryNode {
        state: root.clone(),
        modules: *root_modules,
        depth: 0,
        cumulated_reward: 0,
        actions: Vec::new(),
        visited,
        died: false,
    };
    expand(node, policy, world, config, zigzag, &mut out);
    out
}

fn expand(
    node: TrajectoryNode,
    policy: &Policy,
    world: &WorldConfig,
    config: &LookaheadConfig,
    zigzag: &BTreeSet<Pos>,
    out: &mut Enumeration,
) {
    if node.depth >= config.depth || node.state.terminal || node.died {
        out.leaves.push(node);
        return;
    }

    // No turning back: candidate moves may not target a position already
    // on this path. Stop is offered only at calibrated zig-zag tiles.
    let mut actions: Vec<AgentAction> = node
        .state
        .legal_moves()
        .into_iter()
        .filter(|&d| {
            let target = node.state.maze.neighbor(node.state.agent_pos, d).unwrap();
            !node.visited.contains(&target)
        })
        .map(AgentAction::Move)
        .collect();
    if config.allow_stop_at_zigzag && zigzag.contains(&node.state.agent_pos) {
        actions.push(AgentAction::Stop);
    }
    if actions.is_empty() {
        out.leaves.push(node);
        return;
    }

    for action in actions {
        if out.expansions >= config.node_budget {
            out.truncated = true;
            return;
        }
        out.expansions += 1;

        let mut state = node.state.clone();
        let outcome = deterministic_step(&mut state, action, world)
            .expect("non-terminal node cannot be terminal");
        let died = outcome.events.contains(&Event::LifeLost);
        let mut modules = node.modules;
        decide(policy, &observe_all(&state), &mut modules);
        let mut actions_path = node.actions.clone();
        actions_path.push(action);
        let mut visited = node.visited.clone();
        visited.insert(state.agent_pos);
        let child = TrajectoryNode {
            state,
            modules,
            depth: node.depth + 1,
            cumulated_reward: node.cumulated_reward + outcome.reward,
            actions: actions_path,
            visited,
            died,
        };
        expand(child, policy, world, config, zigzag, out);
        if out.truncated {
            return;
        }
    }
}

/// Score a leaf: cumulated reward plus the value table entry for the
/// macro the base policy holds there. Death leaves take the penalty and
/// cleared-level leaves bootstrap with zero.
pub fn lookahead_value(leaf: &TrajectoryNode, values: &ValueTable, config: &LookaheadConfig) -> f64 {
    let reward = leaf.cumulated_reward as f64;
    if leaf.died {
        reward + config.death_penalty
    } else if leaf.state.terminal {
        reward
    } else {
        reward + values.value(macro_code(&leaf.modules))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PlannerStats {
    pub depth: u32,
    pub leaves: usize,
    pub expansions: u64,
    pub best_value: f64,
    pub truncated: bool,
}

/// Everything a look-ahead decision needs: the depth configuration, the
/// learned macro values, and the calibrated stop positions.
#[derive(Debug, Clone)]
pub struct Planner {
    pub config: LookaheadConfig,
    pub values: ValueTable,
    pub zigzag: BTreeSet<Pos>,
}

impl Planner {
    pub fn new(config: LookaheadConfig, values: ValueTable, zigzag: BTreeSet<Pos>) -> Planner {
        Planner { config, values, zigzag }
    }

    /// Pick the agent's action at `state`. Falls back to the base
    /// policy's module direction when planning is disabled or no
    /// trajectory exists. Ties between equal-valued leaves break by
    /// fixed direction order (Stop last), then discovery order.
    pub fn choose(
        &self,
        state: &GameState,
        modules: &ModuleSet,
        policy: &Policy,
        world: &WorldConfig,
    ) -> (AgentAction, PlannerStats) {
        let base = AgentAction::Move(module_direction(modules.acting(), state));
        let mut stats = PlannerStats {
            depth: self.config.depth,
            leaves: 0,
            expansions: 0,
            best_value: 0.0,
            truncated: false,
        };
        if self.config.depth == 0 {
            return (base, stats);
        }
        let enumeration = enumerate(state, modules, policy, world, &self.config, &self.zigzag);
        stats.leaves = enumeration.leaves.len();
        stats.expansions = enumeration.expansions;
        stats.truncated = enumeration.truncated;
        let mut best: Option<(f64, u8, AgentAction)> = None;
        for leaf in &enumeration.leaves {
            let Some(first) = leaf.first_action() else { continue };
            let value = lookahead_value(leaf, &self.values, &self.config);
            let rank = first.tie_rank();
            let better = match best {
                None => true,
                Some((bv, br, _)) => value > bv || (value == bv && rank < br),
            };
            if better {
                best = Some((value, rank, first));
            }
        }
        match best {
            Some((value, _, action)) => {
                stats.best_value = value;
                (action, stats)
            }
            None => (base, stats),
        }
    }
}

/// Positions where the base policy was seen alternating between the
/// power-dot approach and retreat modules within a four-step window
/// during seeded calibration episodes. These are the tiles where the
/// planner may propose standing still.
pub fn calibrate_zigzag(
    maze: &std::sync::Arc<crate::maze::Maze>,
    policy: &Policy,
    world: &WorldConfig,
    episodes: u32,
    base_seed: u64,
    max_steps: u64,
) -> BTreeSet<Pos> {
    use crate::policy::ActionModuleKind;
    use crate::rollout::{derive_seed, run_episode, RolloutOptions};

    let pair = [ActionModuleKind::FromPowerDot, ActionModuleKind::ToPowerDot];
    let mut positions = BTreeSet::new();
    for ep in 0..episodes {
        let seed = derive_seed(base_seed, &[0x5a5a, ep as u64]);
        let result = run_episode(
            maze,
            world,
            policy,
            seed,
            &RolloutOptions { max_steps, ..Default::default() },
        );
        // A tile qualifies when the agent came back to it within four
        // steps, steering relative to a power dot on both visits, with
        // the opposing steering module acting somewhere in between (the
        // hovering pattern oscillates over both endpoints).
        let trace = &result.pos_acting;
        for (t, &(pos, acting)) in trace.iter().enumerate() {
            if !pair.contains(&acting) {
                continue;
            }
            for (offset, &(later_pos, later_acting)) in
                trace.iter().skip(t + 1).take(4).enumerate()
            {
                if later_pos != pos || !pair.contains(&later_acting) {
                    continue;
                }
                let between = &trace[t + 1..t + 1 + offset];
                if between.iter().any(|&(_, a)| pair.contains(&a) && a != acting) {
                    positions.insert(pos);
                }
            }
        }
    }
    positions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Direction;
    use crate::maze::test_mazes;
    use crate::policy::prewired_policy;
    use crate::world::{reset, GhostMode, GhostState};
    use std::sync::Arc;

    fn corridor_state(len: u16) -> GameState {
        let maze = Arc::new(test_mazes::corridor(len));
        reset(maze, &WorldConfig::default())
    }

    #[test]
    fn model_step_is_deterministic() {
        let mut a = corridor_state(10);
        a.dots = [Pos::new(9, 1)].into_iter().collect();
        a.agent_pos = Pos::new(3, 1);
        let mut b = a.clone();
        let cfg = WorldConfig::default();
        let oa = deterministic_step(&mut a, AgentAction::Move(Direction::East), &cfg).unwrap();
        let ob = deterministic_step(&mut b, AgentAction::Move(Direction::East), &cfg).unwrap();
        assert_eq!(oa, ob);
        assert_eq!(a.agent_pos, b.agent_pos);
        assert_eq!(a.ghosts, b.ghosts);
    }

    #[test]
    fn model_scoring_matches_world() {
        let mut state = corridor_state(10);
        state.ghosts.clear();
        state.dots = [Pos::new(4, 1), Pos::new(9, 1)].into_iter().collect();
        state.agent_pos = Pos::new(3, 1);
        let out =
            deterministic_step(&mut state, AgentAction::Move(Direction::East), &WorldConfig::default())
                .unwrap();
        assert_eq!(out.reward, 10);
        assert_eq!(out.events, vec![Event::DotEaten]);
    }

    #[test]
    fn chasing_ghost_collides_with_stopped_agent() {
        // Ghost two tiles away; the agent stands still twice; the
        // deterministic chase closes the gap and resets the model.
        let mut state = corridor_state(10);
        state.dots = [Pos::new(9, 1)].into_iter().collect();
        state.agent_pos = Pos::new(3, 1);
        state.ghosts = vec![GhostState {
            pos: Pos::new(5, 1),
            dir: Direction::West,
            mode: GhostMode::Normal,
        }];
        let cfg = WorldConfig::default();
        let out1 = deterministic_step(&mut state, AgentAction::Stop, &cfg).unwrap();
        assert!(out1.events.is_empty());
        let out2 = deterministic_step(&mut state, AgentAction::Stop, &cfg).unwrap();
        assert!(out2.events.contains(&Event::LifeLost));
    }

    #[test]
    fn depth_zero_enumerates_nothing() {
        let state = corridor_state(10);
        let cfg = LookaheadConfig { depth: 0, ..Default::default() };
        let e = enumerate(
            &state,
            &ModuleSet::new(),
            &prewired_policy(),
            &WorldConfig::default(),
            &cfg,
            &BTreeSet::new(),
        );
        assert!(e.leaves.is_empty());
    }

    #[test]
    fn straight_corridor_has_one_leaf() {
        // No-turn-back kills the reverse branch, so a corridor is linear.
        let mut state = corridor_state(12);
        state.ghosts.clear();
        state.dots = [Pos::new(12, 1)].into_iter().collect();
        state.agent_pos = Pos::new(6, 1);
        let cfg = LookaheadConfig { depth: 5, ..Default::default() };
        let e = enumerate(
            &state,
            &ModuleSet::new(),
            &prewired_policy(),
            &WorldConfig::default(),
            &cfg,
            &BTreeSet::new(),
        );
        // Two leaves from the root (east and west), each then linear.
        assert_eq!(e.leaves.len(), 2);
        for leaf in &e.leaves {
            assert_eq!(leaf.depth, 5);
            let positions: BTreeSet<Pos> = leaf.visited.iter().copied().collect();
            assert_eq!(positions.len(), 6, "all path positions distinct");
        }
        // From a wall-adjacent tile only one direction survives.
        state.agent_pos = Pos::new(1, 1);
        let e = enumerate(
            &state,
            &ModuleSet::new(),
            &prewired_policy(),
            &WorldConfig::default(),
            &cfg,
            &BTreeSet::new(),
        );
        assert_eq!(e.leaves.len(), 1);
    }

    #[test]
    fn junction_branches_once_per_open_direction() {
        let maze = Arc::new(test_mazes::ring5());
        let mut state = reset(maze, &WorldConfig::default());
        state.ghosts.clear();
        state.agent_pos = Pos::new(1, 1);
        let cfg = LookaheadConfig { depth: 1, ..Default::default() };
        let e = enumerate(
            &state,
            &ModuleSet::new(),
            &prewired_policy(),
            &WorldConfig::default(),
            &cfg,
            &BTreeSet::new(),
        );
        // Ring corner: two open directions, no stop.
        assert_eq!(e.leaves.len(), 2);
    }

    #[test]
    fn leaf_rewards_replay_exactly() {
        let maze = Arc::new(test_mazes::ring5());
        let mut state = reset(maze, &WorldConfig::default());
        state.ghosts.clear();
        state.agent_pos = Pos::new(1, 1);
        let cfg = LookaheadConfig { depth: 4, ..Default::default() };
        let world = WorldConfig::default();
        let e = enumerate(
            &state,
            &ModuleSet::new(),
            &prewired_policy(),
            &world,
            &cfg,
            &BTreeSet::new(),
        );
        assert!(!e.leaves.is_empty());
        for leaf in &e.leaves {
            let mut replay = state.clone();
            let mut total = 0u32;
            for &action in &leaf.actions {
                total += deterministic_step(&mut replay, action, &world).unwrap().reward;
            }
            assert_eq!(total, leaf.cumulated_reward);
            assert_eq!(replay.agent_pos, leaf.state.agent_pos);
        }
    }

    #[test]
    fn death_branches_stop_early() {
        let mut state = corridor_state(12);
        state.dots = [Pos::new(12, 1)].into_iter().collect();
        state.agent_pos = Pos::new(4, 1);
        state.ghosts = vec![GhostState {
            pos: Pos::new(7, 1),
            dir: Direction::West,
            mode: GhostMode::Normal,
        }];
        let cfg = LookaheadConfig { depth: 6, ..Default::default() };
        let e = enumerate(
            &state,
            &ModuleSet::new(),
            &prewired_policy(),
            &WorldConfig::default(),
            &cfg,
            &BTreeSet::new(),
        );
        let east_leaf = e
            .leaves
            .iter()
            .find(|l| l.first_action() == Some(AgentAction::Move(Direction::East)))
            .unwrap();
        assert!(east_leaf.died);
        assert!(east_leaf.depth < 6, "branch ended at the collision");
    }

    #[test]
    fn leaf_value_arithmetic() {
        let mut values = ValueTable::new(0.05, 0.95);
        let state = corridor_state(10);
        let mut modules = ModuleSet::new();
        crate::policy::settle(&prewired_policy(), &observe_all(&state), &mut modules);
        values.set_value(macro_code(&modules), 6100.0);
        let cfg = LookaheadConfig { depth: 3, ..Default::default() };

        let leaf = TrajectoryNode {
            state: state.clone(),
            modules,
            depth: 3,
            cumulated_reward: 50,
            actions: vec![AgentAction::Move(Direction::East)],
            visited: BTreeSet::new(),
            died: false,
        };
        assert_eq!(lookahead_value(&leaf, &values, &cfg), 6150.0);

        // Zero-reward path in the same macro as the root reads the root
        // macro's value exactly.
        let same = TrajectoryNode { cumulated_reward: 0, ..leaf.clone() };
        assert_eq!(lookahead_value(&same, &values, &cfg), 6100.0);

        let dead = TrajectoryNode { cumulated_reward: 30, died: true, ..leaf };
        assert_eq!(lookahead_value(&dead, &values, &cfg), -970.0);
    }

    #[test]
    fn depth_zero_defers_to_base_policy() {
        let mut state = corridor_state(10);
        state.ghosts.clear();
        state.dots = [Pos::new(9, 1)].into_iter().collect();
        state.agent_pos = Pos::new(3, 1);
        let policy = prewired_policy();
        let mut modules = ModuleSet::new();
        crate::policy::settle(&policy, &observe_all(&state), &mut modules);
        let planner =
            Planner::new(LookaheadConfig::default(), ValueTable::new(0.05, 0.95), BTreeSet::new());
        let world = WorldConfig::default();
        let (action, _) = planner.choose(&state, &modules, &policy, &world);
        assert_eq!(
            action,
            AgentAction::Move(module_direction(modules.acting(), &state))
        );
    }

    #[test]
    fn bigger_reward_wins_the_argmax() {
        // Two-armed corridor: a dot to the east, empty to the west. With a
        // flat value table the east trajectory dominates.
        let mut state = corridor_state(10);
        state.ghosts.clear();
        state.dots = [Pos::new(5, 1), Pos::new(10, 1)].into_iter().collect();
        state.agent_pos = Pos::new(4, 1);
        let policy = prewired_policy();
        let mut modules = ModuleSet::new();
        crate::policy::settle(&policy, &observe_all(&state), &mut modules);
        let planner = Planner::new(
            LookaheadConfig { depth: 2, ..Default::default() },
            ValueTable::new(0.05, 0.95),
            BTreeSet::new(),
        );
        let (action, stats) = planner.choose(&state, &modules, &policy, &WorldConfig::default());
        assert_eq!(action, AgentAction::Move(Direction::East));
        assert!(stats.leaves > 0);
        assert!(stats.best_value >= 10.0);
    }

    #[test]
    fn budget_truncation_is_flagged() {
        let maze = Arc::new(test_mazes::ring5());
        let mut state = reset(maze, &WorldConfig::default());
        state.ghosts.clear();
        state.agent_pos = Pos::new(1, 1);
        let cfg = LookaheadConfig { depth: 6, node_budget: 3, ..Default::default() };
        let e = enumerate(
            &state,
            &ModuleSet::new(),
            &prewired_policy(),
            &WorldConfig::default(),
            &cfg,
            &BTreeSet::new(),
        );
        assert!(e.truncated);
        assert!(e.expansions <= 3);
    }
}
