//! Priority-ordered rule engine and action modules.
//!
//! A policy is a list of rules `if <condition> then <Module>+|-`, scanned
//! in priority order each step. A rule fires when its condition holds and
//! its effect would actually change the module set; rules whose effect is
//! already in place are passed over so lower-priority rules still get
//! their turn (this is what lets an always-true bottom rule keep a module
//! permanently on, and what produces the zig-zag alternation near power
//! dots). At most one rule fires per decision.
//!
//! Switching on a module stamps it with the firing rule's priority; the
//! active module with the best (numerically smallest) stamp acts. The
//! three steering modules that pursue or avoid a target (`ToPowerDot`,
//! `FromPowerDot`, `ToEdGhost`) are mutually exclusive: switching one on
//! displaces the others, so the observable behavioral state is always one
//! steering objective plus the ghost-avoidance toggle and the always-on
//! pill seeker. The resulting six-bit macro code is the state the TD
//! learner values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Direction, Pos};
use crate::maze::DistanceField;
use crate::observe::{ObservationKind, Observations};
use crate::world::{GameState, GhostMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionModuleKind {
    ToDot,
    ToPowerDot,
    FromPowerDot,
    ToEdGhost,
    FromGhost,
    ToNearestPill,
}

impl ActionModuleKind {
    pub const ALL: [ActionModuleKind; 6] = [
        ActionModuleKind::ToDot,
        ActionModuleKind::ToPowerDot,
        ActionModuleKind::FromPowerDot,
        ActionModuleKind::ToEdGhost,
        ActionModuleKind::FromGhost,
        ActionModuleKind::ToNearestPill,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionModuleKind::ToDot => "ToDot",
            ActionModuleKind::ToPowerDot => "ToPowerDot",
            ActionModuleKind::FromPowerDot => "FromPowerDot",
            ActionModuleKind::ToEdGhost => "ToEdGhost",
            ActionModuleKind::FromGhost => "FromGhost",
            ActionModuleKind::ToNearestPill => "ToNearestPill",
        }
    }

    pub fn from_name(s: &str) -> Option<ActionModuleKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap()
    }

    /// Steering modules displace each other when switched on.
    fn is_steering(self) -> bool {
        matches!(
            self,
            ActionModuleKind::ToPowerDot
                | ActionModuleKind::FromPowerDot
                | ActionModuleKind::ToEdGhost
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Less,
    Greater,
}

/// A single conjunct of a rule condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Atom {
    Obs { kind: ObservationKind, op: Cmp, threshold: f64 },
    Module { kind: ActionModuleKind, required_on: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    pub module: ActionModuleKind,
    pub switch_on: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub condition: Condition,
    pub effect: Effect,
    /// 1 is the highest priority.
    pub priority: u32,
}

/// Rules in scan order: ascending priority, list position breaking ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    rules: Vec<Rule>,
}

impl Policy {
    pub fn new(mut rules: Vec<Rule>) -> Policy {
        rules.sort_by_key(|r| r.priority);
        Policy { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }
}

/// Per-module switch state. `Untouched` and `SwitchedOff` are both
/// inactive, but the distinction is visible for `FromGhost`, whose macro
/// digit pair reports "commanded on" and "commanded off" separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModuleState {
    #[default]
    Untouched,
    On(u32),
    SwitchedOff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModuleSet {
    states: [ModuleState; 6],
}

impl ModuleSet {
    pub fn new() -> ModuleSet {
        ModuleSet::default()
    }

    pub fn state(&self, kind: ActionModuleKind) -> ModuleState {
        self.states[kind.index()]
    }

    pub fn is_on(&self, kind: ActionModuleKind) -> bool {
        matches!(self.state(kind), ModuleState::On(_))
    }

    pub fn set(&mut self, kind: ActionModuleKind, state: ModuleState) {
        self.states[kind.index()] = state;
    }

    fn switch_on(&mut self, kind: ActionModuleKind, priority: u32) {
        if kind.is_steering() {
            for other in ActionModuleKind::ALL {
                if other != kind && other.is_steering() && self.is_on(other) {
                    self.set(other, ModuleState::Untouched);
                }
            }
        }
        self.set(kind, ModuleState::On(priority));
    }

    /// Active module with the best priority stamp; fixed kind order breaks
    /// ties. Falls back to `ToDot` when nothing is on.
    pub fn acting(&self) -> ActionModuleKind {
        let mut best: Option<(ActionModuleKind, u32)> = None;
        for kind in ActionModuleKind::ALL {
            if let ModuleState::On(p) = self.state(kind) {
                if best.is_none_or(|(_, bp)| p < bp) {
                    best = Some((kind, p));
                }
            }
        }
        best.map_or(ActionModuleKind::ToDot, |(k, _)| k)
    }
}

/// The six-digit behavioral-state code, in digit order FromGhost+,
/// FromGhost-, ToPowerDot, ToEdGhost, FromPowerDot, ToNearestPill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MacroCode(pub u8);

impl MacroCode {
    pub fn from_bits(bits: [bool; 6]) -> MacroCode {
        let mut v = 0u8;
        for b in bits {
            v = (v << 1) | b as u8;
        }
        MacroCode(v)
    }

    pub fn parse(s: &str) -> Option<MacroCode> {
        if s.len() != 6 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return None;
        }
        u8::from_str_radix(s, 2).ok().map(MacroCode)
    }
}

impl std::fmt::Display for MacroCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:06b}", self.0)
    }
}

/// Project a module set onto its macro code.
pub fn macro_code(modules: &ModuleSet) -> MacroCode {
    MacroCode::from_bits([
        modules.is_on(ActionModuleKind::FromGhost),
        modules.state(ActionModuleKind::FromGhost) == ModuleState::SwitchedOff,
        modules.is_on(ActionModuleKind::ToPowerDot),
        modules.is_on(ActionModuleKind::ToEdGhost),
        modules.is_on(ActionModuleKind::FromPowerDot),
        modules.is_on(ActionModuleKind::ToNearestPill),
    ])
}

/// True when every conjunct holds. Comparisons are strict.
pub fn eval_condition(cond: &Condition, obs: &Observations, modules: &ModuleSet) -> bool {
    cond.atoms.iter().all(|atom| match atom {
        Atom::Obs { kind, op, threshold } => {
            let v = obs.get(*kind);
            match op {
                Cmp::Less => v < *threshold,
                Cmp::Greater => v > *threshold,
            }
        }
        Atom::Module { kind, required_on } => modules.is_on(*kind) == *required_on,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecideOutcome {
    pub acting: ActionModuleKind,
    /// Index (into the policy's scan order) of the rule that fired, if any.
    pub fired: Option<usize>,
}

/// One decision: scan rules in order, fire the first whose condition holds
/// and whose effect changes the module set, then report the acting module.
pub fn decide(policy: &Policy, obs: &Observations, modules: &mut ModuleSet) -> DecideOutcome {
    let mut fired = None;
    for (i, rule) in policy.rules().iter().enumerate() {
        if !eval_condition(&rule.condition, obs, modules) {
            continue;
        }
        let kind = rule.effect.module;
        let changes = if rule.effect.switch_on {
            modules.state(kind) != ModuleState::On(rule.priority)
        } else {
            modules.state(kind) != ModuleState::SwitchedOff
        };
        if !changes {
            continue;
        }
        if rule.effect.switch_on {
            modules.switch_on(kind, rule.priority);
        } else {
            modules.set(kind, ModuleState::SwitchedOff);
        }
        fired = Some(i);
        break;
    }
    DecideOutcome { acting: modules.acting(), fired }
}

/// Run decisions against fixed observations until quiescent. Used once at
/// episode start so the opening module set is already a behavioral state
/// rather than a half-built transient.
pub fn settle(policy: &Policy, obs: &Observations, modules: &mut ModuleSet) {
    for _ in 0..policy.rules().len() * 2 + 2 {
        if decide(policy, obs, modules).fired.is_none() {
            return;
        }
    }
}

/// First step of the acting module's pursuit: `To*` modules head along a
/// shortest corridor path to the nearest target of their class, `From*`
/// modules take the legal move that maximizes distance to it. Absent
/// target classes fall back to dot seeking. Ties break in fixed N,E,S,W
/// order.
pub fn module_direction(kind: ActionModuleKind, state: &GameState) -> Direction {
    let legal = state.legal_moves();
    let fallback = legal.first().copied().unwrap_or(Direction::North);

    let (targets, maximize) = module_targets(kind, state);
    let (targets, maximize) = if targets.is_empty() {
        // Fall back to dot seeking; near the end of a level the dot class
        // itself may be empty, in which case power dots stand in.
        (module_targets(ActionModuleKind::ToDot, state).0, false)
    } else {
        (targets, maximize)
    };
    if targets.is_empty() {
        return fallback;
    }
    let field = state.maze.distance_field(&targets);
    pick_direction(state, &legal, &field, maximize).unwrap_or(fallback)
}

fn module_targets(kind: ActionModuleKind, state: &GameState) -> (Vec<Pos>, bool) {
    match kind {
        ActionModuleKind::ToDot | ActionModuleKind::ToNearestPill => {
            let dots: Vec<Pos> = state.dots.iter().copied().collect();
            if dots.is_empty() {
                (state.power_dots.iter().copied().collect(), false)
            } else {
                (dots, false)
            }
        }
        ActionModuleKind::ToPowerDot => (state.power_dots.iter().copied().collect(), false),
        ActionModuleKind::FromPowerDot => (state.power_dots.iter().copied().collect(), true),
        ActionModuleKind::ToEdGhost => (
            state
                .ghosts
                .iter()
                .filter(|g| matches!(g.mode, GhostMode::Edible { .. }))
                .map(|g| g.pos)
                .collect(),
            false,
        ),
        ActionModuleKind::FromGhost => (
            state
                .ghosts
                .iter()
                .filter(|g| g.mode == GhostMode::Normal)
                .map(|g| g.pos)
                .collect(),
            true,
        ),
    }
}

fn pick_direction(
    state: &GameState,
    legal: &[Direction],
    field: &DistanceField,
    maximize: bool,
) -> Option<Direction> {
    let mut best: Option<(Direction, u32)> = None;
    for &dir in legal {
        // Legal moves always have a corridor target.
        let target = state.maze.neighbor(state.agent_pos, dir).unwrap();
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
    best.map(|(d, _)| d)
}

// --- text format ------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyParseError {
    #[error("line {0}: expected 'P<k>: if <condition> then <Module>+|-'")]
    Malformed(usize),
    #[error("line {0}: bad priority")]
    BadPriority(usize),
    #[error("line {0}: unknown observation or module '{1}'")]
    UnknownName(usize, String),
    #[error("line {0}: bad threshold '{1}'")]
    BadThreshold(usize, String),
    #[error("line {0}: empty condition")]
    EmptyCondition(usize),
}

impl Policy {
    /// Parse the one-rule-per-line text form, e.g.
    /// `P2: if GhostDensity<1.5 and NearestPowerDot<5 then FromPowerDot+`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Policy, PolicyParseError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let n = i + 1;
            let rest = line.strip_prefix('P').ok_or(PolicyParseError::Malformed(n))?;
            let (prio, rest) = rest.split_once(':').ok_or(PolicyParseError::Malformed(n))?;
            let priority: u32 =
                prio.trim().parse().map_err(|_| PolicyParseError::BadPriority(n))?;
            if priority == 0 {
                return Err(PolicyParseError::BadPriority(n));
            }
            let rest = rest.trim();
            let rest = rest.strip_prefix("if ").ok_or(PolicyParseError::Malformed(n))?;
            let (cond_text, effect_text) =
                rest.split_once(" then ").ok_or(PolicyParseError::Malformed(n))?;
            let mut atoms = Vec::new();
            for part in cond_text.split(" and ") {
                atoms.push(parse_atom(part.trim(), n)?);
            }
            if atoms.is_empty() {
                return Err(PolicyParseError::EmptyCondition(n));
            }
            let effect = parse_effect(effect_text.trim(), n)?;
            rules.push(Rule { condition: Condition { atoms }, effect, priority });
        }
        Ok(Policy::new(rules))
    }

    /// Inverse of `parse`, exact down to threshold formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&format!("P{}: if ", rule.priority));
            let conds: Vec<String> = rule.condition.atoms.iter().map(atom_text).collect();
            out.push_str(&conds.join(" and "));
            out.push_str(&format!(
                " then {}{}\n",
                rule.effect.module.name(),
                if rule.effect.switch_on { '+' } else { '-' }
            ));
        }
        out
    }
}

fn parse_atom(s: &str, line: usize) -> Result<Atom, PolicyParseError> {
    if let Some(idx) = s.find(['<', '>']) {
        let (name, rest) = s.split_at(idx);
        let op = if rest.starts_with('<') { Cmp::Less } else { Cmp::Greater };
        let kind = ObservationKind::from_name(name.trim())
            .ok_or_else(|| PolicyParseError::UnknownName(line, name.trim().to_string()))?;
        let value = rest[1..].trim();
        let threshold: f64 =
            value.parse().map_err(|_| PolicyParseError::BadThreshold(line, value.to_string()))?;
        Ok(Atom::Obs { kind, op, threshold })
    } else if let Some(name) = s.strip_suffix('+') {
        let kind = module_name(name, line)?;
        Ok(Atom::Module { kind, required_on: true })
    } else if let Some(name) = s.strip_suffix('-') {
        let kind = module_name(name, line)?;
        Ok(Atom::Module { kind, required_on: false })
    } else {
        Err(PolicyParseError::Malformed(line))
    }
}

fn parse_effect(s: &str, line: usize) -> Result<Effect, PolicyParseError> {
    if let Some(name) = s.strip_suffix('+') {
        Ok(Effect { module: module_name(name, line)?, switch_on: true })
    } else if let Some(name) = s.strip_suffix('-') {
        Ok(Effect { module: module_name(name, line)?, switch_on: false })
    } else {
        Err(PolicyParseError::Malformed(line))
    }
}

fn module_name(s: &str, line: usize) -> Result<ActionModuleKind, PolicyParseError> {
    ActionModuleKind::from_name(s.trim())
        .ok_or_else(|| PolicyParseError::UnknownName(line, s.trim().to_string()))
}

fn atom_text(atom: &Atom) -> String {
    match atom {
        Atom::Obs { kind, op, threshold } => {
            format!("{}{}{}", kind.name(), if *op == Cmp::Less { '<' } else { '>' }, threshold)
        }
        Atom::Module { kind, required_on } => {
            format!("{}{}", kind.name(), if *required_on { '+' } else { '-' })
        }
    }
}

/// The bundled default policy. Its reachable behavioral states under play
/// are exactly the six macro codes the TD learner tracks.
pub fn prewired_policy() -> Policy {
    Policy::parse(include_str!("../assets/prewired.policy"))
        .expect("bundled policy must parse")
}
