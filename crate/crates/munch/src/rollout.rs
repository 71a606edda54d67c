//! Seeded episode execution shared by training, evaluation, TD statistics,
//! and the look-ahead sweeps.
//!
//! Every episode derives its own stream from a base seed and structured
//! salt, so batches can run in parallel in any schedule and still
//! reproduce byte for byte.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{AgentAction, Pos};
use crate::maze::Maze;
use crate::observe::observe_all;
use crate::plan::{Planner, PlannerStats};
use crate::policy::{decide, macro_code, module_direction, settle, ActionModuleKind, MacroCode, ModuleSet, Policy};
use crate::world::{reset, Event, GhostDriver, GhostState, WorldConfig};

pub const DEFAULT_MAX_STEPS: u64 = 10_000;

/// splitmix64 over the base seed and salt words.
pub fn derive_seed(base: u64, salt: &[u64]) -> u64 {
    let mut x = base;
    for &s in salt {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(s);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x = z ^ (z >> 31);
    }
    x
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One line of the episode replay log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub step_index: u64,
    pub action: String,
    pub agent_pos: Pos,
    pub ghosts: Vec<GhostState>,
    pub reward: u32,
    pub score: u32,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlannerTraceRecord {
    pub step_index: u64,
    pub depth: u32,
    pub leaves: usize,
    pub expansions: u64,
    pub chosen: String,
    pub best_value: f64,
}

#[derive(Clone, Default)]
pub struct RolloutOptions<'a> {
    pub max_steps: u64,
    pub planner: Option<&'a Planner>,
    /// Sub-policy that takes over while the base policy occupies the
    /// given macro code.
    pub overlay: Option<(&'a Policy, MacroCode)>,
    pub record_replay: bool,
    pub record_planner_trace: bool,
}

impl RolloutOptions<'_> {
    fn max_steps(&self) -> u64 {
        if self.max_steps == 0 {
            DEFAULT_MAX_STEPS
        } else {
            self.max_steps
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeResult {
    pub score: u32,
    pub lives_lost: u8,
    pub steps: u64,
    pub terminal: bool,
    /// Macro code in force and reward collected, per step.
    pub macro_steps: Vec<(MacroCode, u32)>,
    pub visited_codes: BTreeSet<MacroCode>,
    /// Agent position and acting module per step (zig-zag calibration).
    pub pos_acting: Vec<(Pos, ActionModuleKind)>,
    /// Reward collected during overlay-controlled steps.
    pub overlay_reward: u32,
    pub overlay_steps: u64,
    pub decisions: u64,
    pub fires: u64,
    pub replay: Vec<ReplayRecord>,
    pub planner_trace: Vec<PlannerTraceRecord>,
}

/// Play one seeded episode of `policy` on `maze`.
pub fn run_episode(
    maze: &Arc<Maze>,
    world: &WorldConfig,
    policy: &Policy,
    seed: u64,
    opts: &RolloutOptions,
) -> EpisodeResult {
    let mut state = reset(maze.clone(), world);
    let mut rng = seeded_rng(seed);
    let mut modules = ModuleSet::new();
    settle(policy, &observe_all(&state), &mut modules);

    let mut result = EpisodeResult::default();
    let mut sub_modules = ModuleSet::new();
    let mut in_overlay = false;

    while !state.terminal && result.steps < opts.max_steps() {
        let obs = observe_all(&state);
        let decision = decide(policy, &obs, &mut modules);
        result.decisions += 1;
        if decision.fired.is_some() {
            result.fires += 1;
        }
        let code = macro_code(&modules);
        result.visited_codes.insert(code);
        result.pos_acting.push((state.agent_pos, decision.acting));

        let mut overlay_controls = false;
        let action = if let Some(planner) = opts.planner {
            let (action, stats) = planner.choose(&state, &modules, policy, world);
            if opts.record_planner_trace {
                result.planner_trace.push(planner_trace_record(&stats, &state, action));
            }
            action
        } else if let Some((sub_policy, target)) = opts.overlay {
            if code == target {
                if !in_overlay {
                    sub_modules = ModuleSet::new();
                    settle(sub_policy, &obs, &mut sub_modules);
                }
                let sub_decision = decide(sub_policy, &obs, &mut sub_modules);
                overlay_controls = true;
                AgentAction::Move(module_direction(sub_decision.acting, &state))
            } else {
                AgentAction::Move(module_direction(decision.acting, &state))
            }
        } else {
            AgentAction::Move(module_direction(decision.acting, &state))
        };
        in_overlay = overlay_controls;

        let outcome = state
            .step_action(action, world, &mut GhostDriver::Stochastic(&mut rng))
            .expect("loop only steps non-terminal states");

        result.macro_steps.push((code, outcome.reward));
        if overlay_controls {
            result.overlay_reward += outcome.reward;
            result.overlay_steps += 1;
        }
        result.lives_lost += outcome.events.iter().filter(|e| **e == Event::LifeLost).count() as u8;
        if opts.record_replay {
            result.replay.push(ReplayRecord {
                step_index: state.step_index - 1,
                action: action.name().to_string(),
                agent_pos: state.agent_pos,
                ghosts: state.ghosts.clone(),
                reward: outcome.reward,
                score: state.score,
                events: outcome.events,
            });
        }
        result.steps += 1;
    }
    result.score = state.score;
    result.terminal = state.terminal;
    result
}

fn planner_trace_record(
    stats: &PlannerStats,
    state: &crate::world::GameState,
    action: AgentAction,
) -> PlannerTraceRecord {
    PlannerTraceRecord {
        step_index: state.step_index,
        depth: stats.depth,
        leaves: stats.leaves,
        expansions: stats.expansions,
        chosen: action.name().to_string(),
        best_value: stats.best_value,
    }
}

/// Run `episodes` seeded episodes in parallel; results come back in
/// episode order regardless of scheduling.
pub fn run_batch(
    maze: &Arc<Maze>,
    world: &WorldConfig,
    policy: &Policy,
    base_seed: u64,
    episodes: u32,
    opts: &RolloutOptions,
) -> Vec<EpisodeResult> {
    (0..episodes)
        .into_par_iter()
        .map(|ep| {
            let seed = derive_seed(base_seed, &[0xe915, ep as u64]);
            run_episode(maze, world, policy, seed, opts)
        })
        .collect()
}
