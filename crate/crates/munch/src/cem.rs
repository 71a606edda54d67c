//! Cross-entropy policy search over the rule space.
//!
//! The search distribution is one categorical per priority slot over a
//! finite candidate-rule pool plus "empty". Each iteration draws N
//! policies, scores them by seeded rollouts, keeps the top `rho` fraction
//! as the elite, and blends the per-slot elite frequencies into the
//! distribution with smoothing `beta` and a probability floor `eps`.
//! Draw and evaluation streams derive from (seed, iteration, sample), so
//! training is reproducible and resumable from a checkpoint mid-run.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maze::Maze;
use crate::observe::ObservationKind;
use crate::policy::{Atom, Cmp, Condition, Effect, MacroCode, Policy, Rule};
use crate::policy::ActionModuleKind;
use crate::rollout::{derive_seed, run_episode, seeded_rng, RolloutOptions};
use crate::world::WorldConfig;

/// A pool entry: a rule body whose priority comes from the slot it is
/// drawn into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRule {
    pub condition: Condition,
    pub effect: Effect,
}

impl CandidateRule {
    pub fn at_priority(&self, priority: u32) -> Rule {
        Rule { condition: self.condition.clone(), effect: self.effect, priority }
    }

    pub fn matches(&self, rule: &Rule) -> bool {
        self.condition == rule.condition && self.effect == rule.effect
    }
}

/// Threshold grid per observation; covers the thresholds the bundled
/// policy uses so it lies inside the search space.
fn thresholds(kind: ObservationKind) -> &'static [f64] {
    match kind {
        ObservationKind::GhostDensity => &[0.5, 1.0, 1.5, 2.0],
        ObservationKind::Constant => &[0.0],
        _ => &[1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 99.0],
    }
}

/// Single-atom rules over the threshold grids crossed with every module
/// toggle, plus the compound power-dot retreat rule.
pub fn default_pool() -> Vec<CandidateRule> {
    let mut pool = Vec::new();
    for kind in ObservationKind::ALL {
        for &threshold in thresholds(kind) {
            for op in [Cmp::Less, Cmp::Greater] {
                for module in ActionModuleKind::ALL {
                    for switch_on in [true, false] {
                        pool.push(CandidateRule {
                            condition: Condition {
                                atoms: vec![Atom::Obs { kind, op, threshold }],
                            },
                            effect: Effect { module, switch_on },
                        });
                    }
                }
            }
        }
    }
    pool.push(CandidateRule {
        condition: Condition {
            atoms: vec![
                Atom::Obs { kind: ObservationKind::GhostDensity, op: Cmp::Less, threshold: 1.5 },
                Atom::Obs {
                    kind: ObservationKind::NearestPowerDot,
                    op: Cmp::Less,
                    threshold: 5.0,
                },
            ],
        },
        effect: Effect { module: ActionModuleKind::FromPowerDot, switch_on: true },
    });
    pool
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CemConfig {
    /// Samples per iteration (N).
    pub samples: u32,
    /// Elite fraction (rho).
    pub elite_fraction: f64,
    /// Iterations (T).
    pub iterations: u32,
    /// Episodes averaged per fitness evaluation (E).
    pub episodes_per_eval: u32,
    /// Distribution smoothing (beta).
    pub smoothing: f64,
    /// Probability floor (eps).
    pub floor: f64,
    /// Priority slots (L).
    pub slots: u32,
    pub seed: u64,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            samples: 50,
            elite_fraction: 0.05,
            iterations: 50,
            episodes_per_eval: 5,
            smoothing: 0.7,
            floor: 1e-3,
            slots: 6,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CemError {
    #[error("no samples to select an elite from")]
    EmptySamples,
    #[error("no training iterations configured")]
    NoTraining,
    #[error("macro {0} never entered during probe episodes")]
    MacroUnreachable(MacroCode),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Per-slot categorical over the pool, choice 0 meaning "leave the slot
/// empty".
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pool: Vec<CandidateRule>,
    weights: Vec<Vec<f64>>,
    pub smoothing: f64,
    pub floor: f64,
}

impl PolicyDistribution {
    pub fn uniform(pool: Vec<CandidateRule>, slots: u32, smoothing: f64, floor: f64) -> Self {
        let choices = pool.len() + 1;
        let w = 1.0 / choices as f64;
        PolicyDistribution {
            pool,
            weights: vec![vec![w; choices]; slots as usize],
            smoothing,
            floor,
        }
    }

    pub fn with_weights(
        pool: Vec<CandidateRule>,
        weights: Vec<Vec<f64>>,
        smoothing: f64,
        floor: f64,
    ) -> Self {
        let mut dist = PolicyDistribution { pool, weights, smoothing, floor };
        for slot in &mut dist.weights {
            normalize(slot);
        }
        dist
    }

    pub fn pool(&self) -> &[CandidateRule] {
        &self.pool
    }

    pub fn slots(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Draw one policy: one independent categorical choice per slot, the
    /// slot index giving the rule its priority.
    pub fn draw(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Policy {
        use rand::Rng;
        let mut rules = Vec::new();
        for (slot, weights) in self.weights.iter().enumerate() {
            let u: f64 = rng.gen::<f64>();
            let mut acc = 0.0;
            let mut choice = weights.len() - 1;
            for (i, &w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    choice = i;
                    break;
                }
            }
            if choice > 0 {
                rules.push(self.pool[choice - 1].at_priority(slot as u32 + 1));
            }
        }
        Policy::new(rules)
    }

    /// Which choice a policy made in a slot, for elite frequency counts.
    fn choice_of(&self, policy: &Policy, slot: usize) -> usize {
        let priority = slot as u32 + 1;
        policy
            .rules()
            .iter()
            .find(|r| r.priority == priority)
            .and_then(|r| self.pool.iter().position(|c| c.matches(r)).map(|i| i + 1))
            .unwrap_or(0)
    }

    /// Blend the elite's empirical slot frequencies into the weights,
    /// then apply the floor and renormalize.
    pub fn update(&mut self, elite: &[FitnessSample]) {
        if elite.is_empty() {
            return;
        }
        let beta = self.smoothing;
        for slot in 0..self.weights.len() {
            let mut freq = vec![0.0; self.weights[slot].len()];
            for sample in elite {
                freq[self.choice_of(&sample.policy, slot)] += 1.0;
            }
            let n = elite.len() as f64;
            for (w, f) in self.weights[slot].iter_mut().zip(&freq) {
                *w = (1.0 - beta) * *w + beta * (f / n);
            }
            apply_floor(&mut self.weights[slot], self.floor);
        }
    }

    /// Every slot sums to one within 1e-9 and respects the floor.
    pub fn is_valid(&self) -> bool {
        self.weights.iter().all(|slot| {
            let sum: f64 = slot.iter().sum();
            (sum - 1.0).abs() < 1e-9 && slot.iter().all(|&w| w >= self.floor - 1e-12)
        })
    }
}

fn normalize(weights: &mut [f64]) {
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        for w in weights.iter_mut() {
            *w /= sum;
        }
    }
}

/// Clamp-from-below without breaking the sum: deficient entries are
/// pinned at the floor and the rest renormalized to the remaining mass,
/// repeated until stable.
fn apply_floor(weights: &mut [f64], floor: f64) {
    normalize(weights);
    if floor <= 0.0 {
        return;
    }
    for _ in 0..weights.len() {
        let deficient: Vec<usize> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w < floor)
            .map(|(i, _)| i)
            .collect();
        if deficient.is_empty() {
            return;
        }
        let pinned: f64 = deficient.len() as f64 * floor;
        let rest: f64 = weights
            .iter()
            .enumerate()
            .filter(|(i, _)| !deficient.contains(i))
            .map(|(_, &w)| w)
            .sum();
        let scale = (1.0 - pinned) / rest;
        for (i, w) in weights.iter_mut().enumerate() {
            if deficient.contains(&i) {
                *w = floor;
            } else {
                *w *= scale;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitnessSample {
    pub policy: Policy,
    pub fitness: f64,
}

/// Sort by descending fitness (draw order breaking ties) and keep the
/// top `ceil(rho * N)`; theta is the worst elite fitness.
pub fn select_elite(
    samples: &[FitnessSample],
    rho: f64,
) -> Result<(Vec<FitnessSample>, f64), CemError> {
    if samples.is_empty() {
        return Err(CemError::EmptySamples);
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .fitness
            .partial_cmp(&samples[a].fitness)
            .expect("fitness must be finite")
    });
    let count = ((rho * samples.len() as f64).ceil() as usize).max(1).min(samples.len());
    let elite: Vec<FitnessSample> = order[..count].iter().map(|&i| samples[i].clone()).collect();
    let theta = elite.last().unwrap().fitness;
    Ok((elite, theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: u32,
    pub mean: f64,
    pub theta: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: FitnessSample,
    pub trace: Vec<TraceRow>,
    pub dist: PolicyDistribution,
}

/// Generic CEM loop over an arbitrary fitness function. The function
/// receives (policy, iteration, sample index) so it can derive its own
/// evaluation streams.
pub fn train_with<F>(
    config: &CemConfig,
    mut dist: PolicyDistribution,
    start_iteration: u32,
    mut prior: Option<TrainOutcome>,
    fitness: F,
) -> Result<TrainOutcome, CemError>
where
    F: Fn(&Policy, u32, u32) -> f64 + Sync,
{
    if config.iterations == 0 {
        return Err(CemError::NoTraining);
    }
    if config.samples == 0 || config.elite_fraction <= 0.0 || config.elite_fraction > 1.0 {
        return Err(CemError::BadConfig("samples and elite fraction must be positive".into()));
    }
    if (config.samples as f64 * config.elite_fraction).ceil() < 1.0 {
        return Err(CemError::BadConfig("elite would be empty".into()));
    }

    let mut trace = prior.as_ref().map(|p| p.trace.clone()).unwrap_or_default();
    let mut best: Option<FitnessSample> = prior.take().map(|p| p.best);

    for t in start_iteration..config.iterations {
        let policies: Vec<Policy> = (0..config.samples)
            .map(|i| {
                let mut rng = seeded_rng(derive_seed(config.seed, &[0xd4a3, t as u64, i as u64]));
                dist.draw(&mut rng)
            })
            .collect();
        let samples: Vec<FitnessSample> = policies
            .into_par_iter()
            .enumerate()
            .map(|(i, policy)| {
                let fitness = fitness(&policy, t, i as u32);
                FitnessSample { policy, fitness }
            })
            .collect();

        let (elite, theta) = select_elite(&samples, config.elite_fraction)?;
        let mean = samples.iter().map(|s| s.fitness).sum::<f64>() / samples.len() as f64;
        let max = samples.iter().map(|s| s.fitness).fold(f64::NEG_INFINITY, f64::max);
        trace.push(TraceRow { iteration: t, mean, theta, max });

        for s in &samples {
            if best.as_ref().is_none_or(|b| s.fitness > b.fitness) {
                best = Some(s.clone());
            }
        }
        dist.update(&elite);
    }

    Ok(TrainOutcome { best: best.ok_or(CemError::NoTraining)?, trace, dist })
}

/// Game fitness: mean episode score over E seeded episodes.
#[allow(clippy::too_many_arguments)]
fn game_fitness(
    maze: &Arc<Maze>,
    world: &WorldConfig,
    config: &CemConfig,
    policy: &Policy,
    iteration: u32,
    sample: u32,
    max_steps: u64,
    overlay: Option<(&Policy, MacroCode)>,
) -> f64 {
    let mut total = 0.0;
    for e in 0..config.episodes_per_eval.max(1) {
        let seed = derive_seed(
            config.seed,
            &[0xf17e, iteration as u64, sample as u64, e as u64],
        );
        let opts = RolloutOptions { max_steps, overlay, ..Default::default() };
        let (run_policy, opts) = match overlay {
            // Overlay mode: the drawn policy is the sub-policy, the base
            // policy drives everything outside the macro.
            Some((base, code)) => (base, RolloutOptions { overlay: Some((policy, code)), ..opts }),
            None => (policy, opts),
        };
        total += run_episode(maze, world, run_policy, seed, &opts).score as f64;
    }
    total / config.episodes_per_eval.max(1) as f64
}

/// Whole-policy optimization on the game.
pub fn train(
    config: &CemConfig,
    maze: &Arc<Maze>,
    world: &WorldConfig,
    dist: PolicyDistribution,
    start_iteration: u32,
    prior: Option<TrainOutcome>,
    max_steps: u64,
) -> Result<TrainOutcome, CemError> {
    train_with(config, dist, start_iteration, prior, |policy, t, i| {
        game_fitness(maze, world, config, policy, t, i, max_steps, None)
    })
}

/// Optimize behavior inside one behavioral state: the drawn sub-policy
/// controls the agent only while the base policy occupies `target`.
/// Returns the best sub-policy and its mean in-macro reward.
pub fn optimize_macro(
    config: &CemConfig,
    maze: &Arc<Maze>,
    world: &WorldConfig,
    base: &Policy,
    target: MacroCode,
    max_steps: u64,
) -> Result<(Policy, f64), CemError> {
    // Probe: the macro must actually occur under the base policy.
    let probes = config.episodes_per_eval.max(5);
    let mut reachable = false;
    for e in 0..probes {
        let seed = derive_seed(config.seed, &[0x9206, e as u64]);
        let r = run_episode(
            maze,
            world,
            base,
            seed,
            &RolloutOptions { max_steps, ..Default::default() },
        );
        if r.visited_codes.contains(&target) {
            reachable = true;
            break;
        }
    }
    if !reachable {
        return Err(CemError::MacroUnreachable(target));
    }

    let pool = default_pool();
    let dist = PolicyDistribution::uniform(pool, config.slots, config.smoothing, config.floor);
    let outcome = train_with(config, dist, 0, None, |policy, t, i| {
        game_fitness(maze, world, config, policy, t, i, max_steps, Some((base, target)))
    })?;

    // Measure the winner's in-macro reward.
    let sub = outcome.best.policy;
    let mut total = 0.0;
    let evals = config.episodes_per_eval.max(1);
    for e in 0..evals {
        let seed = derive_seed(config.seed, &[0x37a1, e as u64]);
        let r = run_episode(
            maze,
            world,
            base,
            seed,
            &RolloutOptions { max_steps, overlay: Some((&sub, target)), ..Default::default() },
        );
        total += r.overlay_reward as f64;
    }
    Ok((sub, total / evals as f64))
}

/// Serialized training state; resuming from it continues the identical
/// trace because all randomness derives from (seed, iteration, sample).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: CemConfig,
    /// Next iteration to run.
    pub iteration: u32,
    pub weights: Vec<Vec<f64>>,
    pub best_policy: String,
    pub best_fitness: f64,
    pub trace: Vec<TraceRow>,
}

impl Checkpoint {
    pub fn capture(config: &CemConfig, outcome: &TrainOutcome, iteration: u32) -> Checkpoint {
        Checkpoint {
            config: *config,
            iteration,
            weights: outcome.dist.weights().to_vec(),
            best_policy: outcome.best.policy.to_text(),
            best_fitness: outcome.best.fitness,
            trace: outcome.trace.clone(),
        }
    }

    pub fn restore(&self) -> Result<(PolicyDistribution, TrainOutcome), CemError> {
        let pool = default_pool();
        if self.weights.iter().any(|slot| slot.len() != pool.len() + 1) {
            return Err(CemError::BadConfig("checkpoint weights do not match the pool".into()));
        }
        let dist = PolicyDistribution::with_weights(
            pool,
            self.weights.clone(),
            self.config.smoothing,
            self.config.floor,
        );
        let best = FitnessSample {
            policy: Policy::parse(&self.best_policy)
                .map_err(|e| CemError::BadConfig(format!("checkpoint policy: {e}")))?,
            fitness: self.best_fitness,
        };
        Ok((dist.clone(), TrainOutcome { best, trace: self.trace.clone(), dist }))
    }
}
