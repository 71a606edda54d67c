use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use munch::cem::{self, Checkpoint, PolicyDistribution};
use munch::config::ExperimentConfig;
use munch::grid::Pos;
use munch::maze::{canonical_maze, Maze};
use munch::plan::{calibrate_zigzag, LookaheadConfig, Planner};
use munch::policy::{prewired_policy, Policy};
use munch::report::{score_per_life, EvalReport};
use munch::rollout::{derive_seed, run_batch, run_episode, ReplayRecord, RolloutOptions};
use munch::td::{record_episode, TdErrorHistogram, ValueTable};
use munch::world::{Event, GhostMode, GhostState};

#[derive(Parser)]
#[command(name = "munch", version, about = "Maze-muncher policy experiments")]
struct Cli {
    /// Experiment configuration file (key = value sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the evaluation episode count.
    #[arg(long, global = true)]
    episodes: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-entropy training of a full policy; writes the fitness trace,
    /// the best policy, and a resumable checkpoint.
    Train {
        /// Resume from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Seeded batch evaluation of a policy.
    Eval {
        /// Policy file; the bundled policy when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Also write the first episode's replay log.
        #[arg(long)]
        replay_log: bool,
    },
    /// TD valuation of behavioral states plus TD-error histograms.
    TdStats {
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Evaluate a policy under look-ahead at several depths.
    LookaheadSweep {
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Macro value table (the values.csv written by td-stats).
        #[arg(long)]
        values: PathBuf,
        /// Comma-separated depths; 0 means no look-ahead.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8,20")]
        depths: Vec<u32>,
        /// Dump per-step planner statistics for the first episode of the
        /// deepest setting.
        #[arg(long)]
        planner_trace: bool,
    },
    /// Render a replay log as per-step ASCII boards, verifying scores.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(episodes) = cli.episodes {
        cfg.episodes = episodes;
    }

    match &cli.command {
        Command::Train { resume } => cmd_train(&cfg, &cli.out, resume.as_deref()),
        Command::Eval { policy, replay_log } => {
            cmd_eval(&cfg, &cli.out, policy.as_deref(), *replay_log)
        }
        Command::TdStats { policy } => cmd_td_stats(&cfg, &cli.out, policy.as_deref()),
        Command::LookaheadSweep { policy, values, depths, planner_trace } => {
            cmd_lookahead_sweep(&cfg, &cli.out, policy.as_deref(), values, depths, *planner_trace)
        }
        Command::Replay { log } => cmd_replay(&cfg, log),
    }
}

fn load_maze(cfg: &ExperimentConfig) -> Result<Arc<Maze>> {
    match &cfg.maze_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading maze {}", path.display()))?;
            Ok(Arc::new(Maze::parse(&text)?))
        }
        None => Ok(Arc::new(canonical_maze())),
    }
}

fn load_policy(path: Option<&Path>) -> Result<Policy> {
    match path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading policy {}", path.display()))?;
            Ok(Policy::parse(&text)?)
        }
        None => Ok(prewired_policy()),
    }
}

/// Write through a `.partial` file so interrupted runs never leave a
/// half-written artifact under the final name.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let partial = path.with_extension(format!(
        "{}.partial",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&partial, contents)?;
    fs::rename(&partial, path)?;
    Ok(())
}

fn cmd_train(cfg: &ExperimentConfig, out: &Path, resume: Option<&Path>) -> Result<()> {
    let maze = load_maze(cfg)?;
    let (dist, prior, start, cem_cfg) = match resume {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading checkpoint {}", path.display()))?;
            let ckpt: Checkpoint = serde_json::from_str(&text).context("parsing checkpoint")?;
            let (dist, outcome) = ckpt.restore()?;
            (dist, Some(outcome), ckpt.iteration, ckpt.config)
        }
        None => {
            let dist = PolicyDistribution::uniform(
                cem::default_pool(),
                cfg.cem.slots,
                cfg.cem.smoothing,
                cfg.cem.floor,
            );
            (dist, None, 0, cfg.cem)
        }
    };

    let outcome = cem::train(&cem_cfg, &maze, &cfg.world, dist, start, prior, cfg.max_steps)?;

    let mut trace_csv = String::from("iteration,mean,theta,max\n");
    for row in &outcome.trace {
        trace_csv.push_str(&format!("{},{},{},{}\n", row.iteration, row.mean, row.theta, row.max));
    }
    write_atomic(&out.join("fitness_trace.csv"), &trace_csv)?;
    write_atomic(&out.join("best_policy.policy"), &outcome.best.policy.to_text())?;
    let ckpt = Checkpoint::capture(&cem_cfg, &outcome, cem_cfg.iterations);
    write_atomic(&out.join("checkpoint.json"), &serde_json::to_string_pretty(&ckpt)?)?;
    println!(
        "trained {} iterations, best fitness {}",
        outcome.trace.len(),
        outcome.best.fitness
    );
    Ok(())
}

fn cmd_eval(
    cfg: &ExperimentConfig,
    out: &Path,
    policy_path: Option<&Path>,
    replay_log: bool,
) -> Result<()> {
    let maze = load_maze(cfg)?;
    let policy = load_policy(policy_path)?;
    let opts = RolloutOptions { max_steps: cfg.max_steps, ..Default::default() };
    let results = run_batch(&maze, &cfg.world, &policy, cfg.seed, cfg.episodes, &opts);
    let report = EvalReport::from_results(&results);
    write_atomic(&out.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    write_atomic(&out.join("report.csv"), &report.to_csv())?;
    write_atomic(&out.join("macro_visits.csv"), &report.macro_visits_csv())?;
    if replay_log {
        let seed = derive_seed(cfg.seed, &[0xe915, 0]);
        let opts = RolloutOptions {
            max_steps: cfg.max_steps,
            record_replay: true,
            ..Default::default()
        };
        let episode = run_episode(&maze, &cfg.world, &policy, seed, &opts);
        let mut log = String::new();
        for rec in &episode.replay {
            log.push_str(&serde_json::to_string(rec)?);
            log.push('\n');
        }
        write_atomic(&out.join("replay.jsonl"), &log)?;
    }
    println!(
        "evaluated {} episodes: mean score {}, mean lives lost {}",
        report.episodes, report.mean_score, report.mean_lives_lost
    );
    Ok(())
}

fn cmd_td_stats(cfg: &ExperimentConfig, out: &Path, policy_path: Option<&Path>) -> Result<()> {
    let maze = load_maze(cfg)?;
    let policy = load_policy(policy_path)?;
    let opts = RolloutOptions { max_steps: cfg.max_steps, ..Default::default() };
    let results = run_batch(&maze, &cfg.world, &policy, cfg.seed, cfg.episodes, &opts);

    let mut table = ValueTable::new(cfg.td_alpha, cfg.td_gamma);
    let mut hist = TdErrorHistogram::new(cfg.bin_width);
    for r in &results {
        record_episode(&mut table, &mut hist, &r.macro_steps, r.terminal);
    }
    write_atomic(&out.join("values.csv"), &table.export_csv())?;
    write_atomic(&out.join("td_errors.csv"), &hist.export_csv(false))?;
    write_atomic(&out.join("td_errors_masked.csv"), &hist.export_csv(true))?;
    println!(
        "recorded {} episodes over {} macro codes",
        results.len(),
        table.codes().count()
    );
    Ok(())
}

fn cmd_lookahead_sweep(
    cfg: &ExperimentConfig,
    out: &Path,
    policy_path: Option<&Path>,
    values_path: &Path,
    depths: &[u32],
    planner_trace: bool,
) -> Result<()> {
    let maze = load_maze(cfg)?;
    let policy = load_policy(policy_path)?;
    let values_text = fs::read_to_string(values_path)
        .with_context(|| format!("reading values {}", values_path.display()))?;
    let values = ValueTable::parse_csv(&values_text, cfg.td_alpha, cfg.td_gamma)
        .ok_or_else(|| anyhow!("malformed value table {}", values_path.display()))?;

    let zigzag = calibrate_zigzag(
        &maze,
        &policy,
        &cfg.world,
        cfg.calibration_episodes,
        cfg.seed,
        cfg.max_steps,
    );

    let mut csv = String::from("depth,mean_score,mean_lives_lost,mean_score_per_life\n");
    for &depth in depths {
        let planner = Planner::new(
            LookaheadConfig { depth, ..cfg.lookahead },
            values.clone(),
            zigzag.clone(),
        );
        let opts = RolloutOptions {
            max_steps: cfg.max_steps,
            planner: (depth > 0).then_some(&planner),
            ..Default::default()
        };
        let results = run_batch(&maze, &cfg.world, &policy, cfg.seed, cfg.episodes, &opts);
        let report = EvalReport::from_results(&results);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            depth,
            report.mean_score,
            report.mean_lives_lost,
            score_per_life(report.mean_score, report.mean_lives_lost)
        ));
        println!(
            "depth {}: mean score {}, lives lost {}",
            depth, report.mean_score, report.mean_lives_lost
        );
    }
    write_atomic(&out.join("sweep.csv"), &csv)?;

    if planner_trace {
        let depth = depths.iter().copied().max().unwrap_or(0);
        let planner = Planner::new(
            LookaheadConfig { depth, ..cfg.lookahead },
            values.clone(),
            zigzag,
        );
        let opts = RolloutOptions {
            max_steps: cfg.max_steps,
            planner: (depth > 0).then_some(&planner),
            record_planner_trace: true,
            ..Default::default()
        };
        let episode =
            run_episode(&maze, &cfg.world, &policy, derive_seed(cfg.seed, &[0xe915, 0]), &opts);
        let mut log = String::new();
        for rec in &episode.planner_trace {
            log.push_str(&serde_json::to_string(rec)?);
            log.push('\n');
        }
        write_atomic(&out.join("planner_trace.jsonl"), &log)?;
    }
    Ok(())
}

fn render_board(
    maze: &Maze,
    dots: &BTreeSet<Pos>,
    power: &BTreeSet<Pos>,
    agent: Pos,
    ghosts: &[GhostState],
) -> String {
    let mut out = String::new();
    for y in 0..maze.height() {
        for x in 0..maze.width() {
            let pos = Pos::new(x, y);
            let glyph = if let Some(ghost) = ghosts.iter().find(|g| g.pos == pos) {
                match ghost.mode {
                    GhostMode::Normal => 'G',
                    GhostMode::Edible { .. } => 'g',
                    GhostMode::Returning => 'r',
                }
            } else if pos == agent {
                '@'
            } else if !maze.is_corridor(pos) {
                '#'
            } else if power.contains(&pos) {
                'o'
            } else if dots.contains(&pos) {
                '.'
            } else {
                ' '
            };
            out.push(glyph);
        }
        out.push('\n');
    }
    out
}

fn cmd_replay(cfg: &ExperimentConfig, log_path: &Path) -> Result<()> {
    let maze = load_maze(cfg)?;
    let text = fs::read_to_string(log_path)
        .with_context(|| format!("reading log {}", log_path.display()))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReplayRecord = serde_json::from_str(line)
            .map_err(|e| anyhow!("corrupt log: line {}: {e}", i + 1))?;
        records.push(rec);
    }

    let mut dots = maze.dot_spawn.clone();
    let mut power = maze.power_dot_spawn.clone();
    let spawn_ghosts: Vec<GhostState> = maze
        .ghost_spawn
        .iter()
        .map(|&pos| GhostState { pos, dir: munch::Direction::North, mode: GhostMode::Normal })
        .collect();
    println!("step -: start");
    print!("{}", render_board(&maze, &dots, &power, maze.agent_spawn, &spawn_ghosts));

    let mut running_score: u32 = 0;
    for rec in &records {
        let event_points: u32 = rec.events.iter().map(|e| e.points()).sum();
        if event_points != rec.reward {
            bail!(
                "corrupt log: step {}: reward {} does not match events worth {}",
                rec.step_index,
                rec.reward,
                event_points
            );
        }
        running_score += rec.reward;
        if running_score != rec.score {
            bail!(
                "corrupt log: step {}: cumulative reward {} does not match score {}",
                rec.step_index,
                running_score,
                rec.score
            );
        }
        for event in &rec.events {
            match event {
                Event::DotEaten => {
                    dots.remove(&rec.agent_pos);
                }
                Event::PowerDotEaten => {
                    power.remove(&rec.agent_pos);
                }
                _ => {}
            }
        }
        println!(
            "step {}: action {} reward {} score {}",
            rec.step_index, rec.action, rec.reward, rec.score
        );
        print!("{}", render_board(&maze, &dots, &power, rec.agent_pos, &rec.ghosts));
    }
    if let Some(last) = records.last() {
        println!("final score {}", last.score);
    }
    Ok(())
}
