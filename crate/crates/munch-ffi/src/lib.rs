//! C ABI over the munch engine.
//!
//! Handles are opaque pointers created and destroyed by this library;
//! every fallible call returns a `MunchStatus` and writes results through
//! out-pointers. Handles are not thread-safe; guard them externally if
//! shared. Directions on the wire are 0 = north, 1 = east, 2 = south,
//! 3 = west.

use std::ffi::{CStr, CString};
use std::sync::Arc;

use libc::{c_char, c_double};
use rand_chacha::ChaCha8Rng;

use munch::grid::Direction;
use munch::maze::Maze;
use munch::observe::{observe_all, ObservationKind};
use munch::policy::{decide, macro_code, module_direction, settle, ModuleSet, Policy};
use munch::rollout::seeded_rng;
use munch::world::{reset, Event, GameState, WorldConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MunchStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidArgument = -2,
    ParseError = -3,
    /// The world is terminal; reset before stepping again.
    Terminal = -4,
}

/// Step event bits for `munch_world_step`.
pub const MUNCH_EVENT_DOT: u32 = 1 << 0;
pub const MUNCH_EVENT_POWER_DOT: u32 = 1 << 1;
pub const MUNCH_EVENT_GHOST: u32 = 1 << 2;
pub const MUNCH_EVENT_LIFE_LOST: u32 = 1 << 3;
pub const MUNCH_EVENT_EXTRA_LIFE: u32 = 1 << 4;
pub const MUNCH_EVENT_LEVEL_CLEARED: u32 = 1 << 5;

/// Opaque maze handle.
pub struct MunchMaze {
    maze: Arc<Maze>,
}

/// Opaque world handle: one live game plus its seeded ghost stream.
pub struct MunchWorld {
    state: GameState,
    config: WorldConfig,
    rng: ChaCha8Rng,
}

/// Opaque policy handle.
pub struct MunchPolicy {
    policy: Policy,
}

/// Opaque agent handle: a policy plus its module bookkeeping.
pub struct MunchAgent {
    policy: Policy,
    modules: ModuleSet,
    settled: bool,
}

fn direction_from_wire(dir: u8) -> Option<Direction> {
    match dir {
        0 => Some(Direction::North),
        1 => Some(Direction::East),
        2 => Some(Direction::South),
        3 => Some(Direction::West),
        _ => None,
    }
}

fn direction_to_wire(dir: Direction) -> u8 {
    match dir {
        Direction::North => 0,
        Direction::East => 1,
        Direction::South => 2,
        Direction::West => 3,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn munch_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a `munch_*` function and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn munch_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a maze from its ASCII text form.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn munch_maze_parse(
    text: *const c_char,
    out: *mut *mut MunchMaze,
) -> MunchStatus {
    if text.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return MunchStatus::InvalidArgument;
    };
    match Maze::parse(text) {
        Ok(maze) => {
            *out = Box::into_raw(Box::new(MunchMaze { maze: Arc::new(maze) }));
            MunchStatus::Ok
        }
        Err(_) => MunchStatus::ParseError,
    }
}

/// The maze bundled with the engine.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn munch_maze_canonical(out: *mut *mut MunchMaze) -> MunchStatus {
    if out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = Box::into_raw(Box::new(MunchMaze { maze: Arc::new(munch::canonical_maze()) }));
    MunchStatus::Ok
}

/// # Safety
/// `maze` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn munch_maze_free(maze: *mut MunchMaze) {
    if !maze.is_null() {
        drop(Box::from_raw(maze));
    }
}

/// # Safety
/// Valid `maze` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_maze_max_score(
    maze: *const MunchMaze,
    out: *mut u64,
) -> MunchStatus {
    if maze.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = (*maze).maze.max_score();
    MunchStatus::Ok
}

/// # Safety
/// Valid `maze`, `out_width`, `out_height` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_maze_size(
    maze: *const MunchMaze,
    out_width: *mut u16,
    out_height: *mut u16,
) -> MunchStatus {
    if maze.is_null() || out_width.is_null() || out_height.is_null() {
        return MunchStatus::NullPointer;
    }
    *out_width = (*maze).maze.width();
    *out_height = (*maze).maze.height();
    MunchStatus::Ok
}

/// Create a world on `maze`. `chase_prob` in [0,1]; `edible_steps` and
/// `speed_divisor` must be positive.
///
/// # Safety
/// Valid `maze` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_world_new(
    maze: *const MunchMaze,
    chase_prob: c_double,
    edible_steps: u32,
    speed_divisor: u32,
    seed: u64,
    out: *mut *mut MunchWorld,
) -> MunchStatus {
    if maze.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    if !(0.0..=1.0).contains(&chase_prob) || edible_steps == 0 || speed_divisor == 0 {
        return MunchStatus::InvalidArgument;
    }
    let config = WorldConfig {
        ghost_chase_prob: chase_prob,
        edible_duration_steps: edible_steps,
        ghost_edible_speed_divisor: speed_divisor,
        rng_seed: seed,
    };
    let state = reset((*maze).maze.clone(), &config);
    *out = Box::into_raw(Box::new(MunchWorld { state, config, rng: seeded_rng(seed) }));
    MunchStatus::Ok
}

/// # Safety
/// `world` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn munch_world_free(world: *mut MunchWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Restart the episode and reseed the ghost stream.
///
/// # Safety
/// Valid `world` pointer.
#[no_mangle]
pub unsafe extern "C" fn munch_world_reset(world: *mut MunchWorld, seed: u64) -> MunchStatus {
    if world.is_null() {
        return MunchStatus::NullPointer;
    }
    let w = &mut *world;
    w.state = reset(w.state.maze.clone(), &w.config);
    w.rng = seeded_rng(seed);
    MunchStatus::Ok
}

/// Advance one step. Writes the points gained and an event bitmask
/// (`MUNCH_EVENT_*`). Returns `Terminal` when the episode is already over.
///
/// # Safety
/// Valid `world` pointer; out-pointers may be null to skip them.
#[no_mangle]
pub unsafe extern "C" fn munch_world_step(
    world: *mut MunchWorld,
    direction: u8,
    out_reward: *mut u32,
    out_events: *mut u32,
) -> MunchStatus {
    if world.is_null() {
        return MunchStatus::NullPointer;
    }
    let Some(dir) = direction_from_wire(direction) else {
        return MunchStatus::InvalidArgument;
    };
    let w = &mut *world;
    match w.state.step(dir, &w.config, &mut w.rng) {
        Ok(outcome) => {
            if !out_reward.is_null() {
                *out_reward = outcome.reward;
            }
            if !out_events.is_null() {
                let mut mask = 0u32;
                for event in &outcome.events {
                    mask |= match event {
                        Event::DotEaten => MUNCH_EVENT_DOT,
                        Event::PowerDotEaten => MUNCH_EVENT_POWER_DOT,
                        Event::GhostEaten(_) => MUNCH_EVENT_GHOST,
                        Event::LifeLost => MUNCH_EVENT_LIFE_LOST,
                        Event::ExtraLife => MUNCH_EVENT_EXTRA_LIFE,
                        Event::LevelCleared => MUNCH_EVENT_LEVEL_CLEARED,
                    };
                }
                *out_events = mask;
            }
            MunchStatus::Ok
        }
        Err(_) => MunchStatus::Terminal,
    }
}

/// # Safety
/// Valid `world` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_world_score(world: *const MunchWorld, out: *mut u32) -> MunchStatus {
    if world.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = (*world).state.score;
    MunchStatus::Ok
}

/// # Safety
/// Valid `world` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_world_lives(world: *const MunchWorld, out: *mut u8) -> MunchStatus {
    if world.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = (*world).state.lives;
    MunchStatus::Ok
}

/// # Safety
/// Valid `world` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_world_is_terminal(
    world: *const MunchWorld,
    out: *mut bool,
) -> MunchStatus {
    if world.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = (*world).state.terminal;
    MunchStatus::Ok
}

/// # Safety
/// Valid `world`, `out_x`, `out_y` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_world_agent_pos(
    world: *const MunchWorld,
    out_x: *mut u16,
    out_y: *mut u16,
) -> MunchStatus {
    if world.is_null() || out_x.is_null() || out_y.is_null() {
        return MunchStatus::NullPointer;
    }
    *out_x = (*world).state.agent_pos.x;
    *out_y = (*world).state.agent_pos.y;
    MunchStatus::Ok
}

/// Legal moves as a bitmask: bit k set when wire direction k is open.
///
/// # Safety
/// Valid `world` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_world_legal_moves(
    world: *const MunchWorld,
    out: *mut u8,
) -> MunchStatus {
    if world.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    let mut mask = 0u8;
    for dir in (*world).state.legal_moves() {
        mask |= 1 << direction_to_wire(dir);
    }
    *out = mask;
    MunchStatus::Ok
}

/// The six observations in fixed order: NearestDot, NearestPowerDot,
/// NearestGhost, NearestEdGhost, GhostDensity, Constant.
///
/// # Safety
/// Valid `world` pointer; `out` must have room for six doubles.
#[no_mangle]
pub unsafe extern "C" fn munch_world_observe(
    world: *const MunchWorld,
    out: *mut c_double,
) -> MunchStatus {
    if world.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    if (*world).state.terminal {
        return MunchStatus::Terminal;
    }
    let obs = observe_all(&(*world).state);
    for (i, kind) in ObservationKind::ALL.into_iter().enumerate() {
        *out.add(i) = obs.get(kind);
    }
    MunchStatus::Ok
}

/// Parse a policy from its text form.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn munch_policy_parse(
    text: *const c_char,
    out: *mut *mut MunchPolicy,
) -> MunchStatus {
    if text.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return MunchStatus::InvalidArgument;
    };
    match Policy::parse(text) {
        Ok(policy) => {
            *out = Box::into_raw(Box::new(MunchPolicy { policy }));
            MunchStatus::Ok
        }
        Err(_) => MunchStatus::ParseError,
    }
}

/// The bundled default policy.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn munch_policy_prewired(out: *mut *mut MunchPolicy) -> MunchStatus {
    if out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = Box::into_raw(Box::new(MunchPolicy { policy: munch::prewired_policy() }));
    MunchStatus::Ok
}

/// Serialize a policy; free the result with `munch_string_free`.
///
/// # Safety
/// Valid `policy` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_policy_to_text(
    policy: *const MunchPolicy,
    out: *mut *mut c_char,
) -> MunchStatus {
    if policy.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    match CString::new((*policy).policy.to_text()) {
        Ok(s) => {
            *out = s.into_raw();
            MunchStatus::Ok
        }
        Err(_) => MunchStatus::InvalidArgument,
    }
}

/// # Safety
/// `policy` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn munch_policy_free(policy: *mut MunchPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Create an agent driving `policy`. The policy is copied in.
///
/// # Safety
/// Valid `policy` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_agent_new(
    policy: *const MunchPolicy,
    out: *mut *mut MunchAgent,
) -> MunchStatus {
    if policy.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = Box::into_raw(Box::new(MunchAgent {
        policy: (*policy).policy.clone(),
        modules: ModuleSet::new(),
        settled: false,
    }));
    MunchStatus::Ok
}

/// # Safety
/// `agent` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn munch_agent_free(agent: *mut MunchAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Run one rule-engine decision against the world and write the wire
/// direction the acting module wants. Step the world with it afterwards.
///
/// # Safety
/// Valid `agent`, `world`, `out_direction` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_agent_act(
    agent: *mut MunchAgent,
    world: *const MunchWorld,
    out_direction: *mut u8,
) -> MunchStatus {
    if agent.is_null() || world.is_null() || out_direction.is_null() {
        return MunchStatus::NullPointer;
    }
    let state = &(*world).state;
    if state.terminal {
        return MunchStatus::Terminal;
    }
    let a = &mut *agent;
    let obs = observe_all(state);
    if !a.settled {
        settle(&a.policy, &obs, &mut a.modules);
        a.settled = true;
    }
    let decision = decide(&a.policy, &obs, &mut a.modules);
    *out_direction = direction_to_wire(module_direction(decision.acting, state));
    MunchStatus::Ok
}

/// Current behavioral-state code as a value in 0..=63 (the six digits of
/// the macro code read as binary).
///
/// # Safety
/// Valid `agent` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn munch_agent_macro_code(
    agent: *const MunchAgent,
    out: *mut u8,
) -> MunchStatus {
    if agent.is_null() || out.is_null() {
        return MunchStatus::NullPointer;
    }
    *out = macro_code(&(*agent).modules).0;
    MunchStatus::Ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(munch_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn maze_lifecycle_and_queries() {
        unsafe {
            let mut maze: *mut MunchMaze = ptr::null_mut();
            assert_eq!(munch_maze_canonical(&mut maze), MunchStatus::Ok);
            let mut score = 0u64;
            assert_eq!(munch_maze_max_score(maze, &mut score), MunchStatus::Ok);
            assert_eq!(score, 13_900);
            let (mut w, mut h) = (0u16, 0u16);
            assert_eq!(munch_maze_size(maze, &mut w, &mut h), MunchStatus::Ok);
            assert_eq!((w, h), (19, 21));
            munch_maze_free(maze);
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        unsafe {
            let text = CString::new("###\n#x#\n###\n").unwrap();
            let mut maze: *mut MunchMaze = ptr::null_mut();
            assert_eq!(munch_maze_parse(text.as_ptr(), &mut maze), MunchStatus::ParseError);
            assert_eq!(
                munch_maze_parse(ptr::null(), &mut maze),
                MunchStatus::NullPointer
            );
        }
    }

    #[test]
    fn world_steps_and_reports() {
        unsafe {
            let mut maze: *mut MunchMaze = ptr::null_mut();
            munch_maze_canonical(&mut maze);
            let mut world: *mut MunchWorld = ptr::null_mut();
            assert_eq!(
                munch_world_new(maze, 0.8, 40, 2, 7, &mut world),
                MunchStatus::Ok
            );
            let mut mask = 0u8;
            assert_eq!(munch_world_legal_moves(world, &mut mask), MunchStatus::Ok);
            assert_ne!(mask, 0);
            let dir = mask.trailing_zeros() as u8;
            let (mut reward, mut events) = (0u32, 0u32);
            assert_eq!(
                munch_world_step(world, dir, &mut reward, &mut events),
                MunchStatus::Ok
            );
            let mut obs = [0f64; 6];
            assert_eq!(munch_world_observe(world, obs.as_mut_ptr()), MunchStatus::Ok);
            assert_eq!(obs[5], 1.0, "constant observation");
            assert_eq!(munch_world_step(world, 9, ptr::null_mut(), ptr::null_mut()),
                MunchStatus::InvalidArgument);
            munch_world_free(world);
            munch_maze_free(maze);
        }
    }

    #[test]
    fn rejects_bad_world_parameters() {
        unsafe {
            let mut maze: *mut MunchMaze = ptr::null_mut();
            munch_maze_canonical(&mut maze);
            let mut world: *mut MunchWorld = ptr::null_mut();
            assert_eq!(
                munch_world_new(maze, 1.5, 40, 2, 7, &mut world),
                MunchStatus::InvalidArgument
            );
            assert_eq!(
                munch_world_new(maze, 0.5, 0, 2, 7, &mut world),
                MunchStatus::InvalidArgument
            );
            munch_maze_free(maze);
        }
    }

    #[test]
    fn policy_roundtrips_through_the_abi() {
        unsafe {
            let mut policy: *mut MunchPolicy = ptr::null_mut();
            assert_eq!(munch_policy_prewired(&mut policy), MunchStatus::Ok);
            let mut text: *mut c_char = ptr::null_mut();
            assert_eq!(munch_policy_to_text(policy, &mut text), MunchStatus::Ok);
            let as_str = CStr::from_ptr(text).to_str().unwrap().to_owned();
            let c = CString::new(as_str.clone()).unwrap();
            let mut again: *mut MunchPolicy = ptr::null_mut();
            assert_eq!(munch_policy_parse(c.as_ptr(), &mut again), MunchStatus::Ok);
            let mut text2: *mut c_char = ptr::null_mut();
            munch_policy_to_text(again, &mut text2);
            assert_eq!(as_str, CStr::from_ptr(text2).to_str().unwrap());
            munch_string_free(text);
            munch_string_free(text2);
            munch_policy_free(policy);
            munch_policy_free(again);
        }
    }

    #[test]
    fn agent_plays_a_full_episode() {
        unsafe {
            let mut maze: *mut MunchMaze = ptr::null_mut();
            munch_maze_canonical(&mut maze);
            let mut world: *mut MunchWorld = ptr::null_mut();
            munch_world_new(maze, 0.8, 40, 2, 3, &mut world);
            let mut policy: *mut MunchPolicy = ptr::null_mut();
            munch_policy_prewired(&mut policy);
            let mut agent: *mut MunchAgent = ptr::null_mut();
            munch_agent_new(policy, &mut agent);

            let mut steps = 0u32;
            loop {
                let mut terminal = false;
                munch_world_is_terminal(world, &mut terminal);
                if terminal || steps >= 5000 {
                    break;
                }
                let mut dir = 0u8;
                assert_eq!(munch_agent_act(agent, world, &mut dir), MunchStatus::Ok);
                let status = munch_world_step(world, dir, ptr::null_mut(), ptr::null_mut());
                assert_eq!(status, MunchStatus::Ok);
                steps += 1;
            }
            let mut score = 0u32;
            munch_world_score(world, &mut score);
            assert!(score > 0, "agent scored nothing in {steps} steps");
            let mut code = 0u8;
            assert_eq!(munch_agent_macro_code(agent, &mut code), MunchStatus::Ok);
            assert!(code < 64);

            munch_agent_free(agent);
            munch_policy_free(policy);
            munch_world_free(world);
            munch_maze_free(maze);
        }
    }
}
