//! Evaluation summaries over episode batches.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::rollout::EpisodeResult;

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub episodes: u32,
    pub mean_score: f64,
    pub mean_lives_lost: f64,
    /// `mean_score / mean_lives_lost`; when no life was ever lost the
    /// score itself stands in (one life used).
    pub mean_score_per_life: f64,
    pub min_score: u32,
    pub median_score: u32,
    pub max_score: u32,
    /// Steps spent in each macro code over the whole batch.
    pub macro_visits: BTreeMap<String, u64>,
}

impl EvalReport {
    pub fn from_results(results: &[EpisodeResult]) -> EvalReport {
        let n = results.len().max(1) as f64;
        let mean_score = results.iter().map(|r| r.score as f64).sum::<f64>() / n;
        let mean_lives_lost = results.iter().map(|r| r.lives_lost as f64).sum::<f64>() / n;
        let mut scores: Vec<u32> = results.iter().map(|r| r.score).collect();
        scores.sort_unstable();
        let mut macro_visits: BTreeMap<String, u64> = BTreeMap::new();
        for r in results {
            for &(code, _) in &r.macro_steps {
                *macro_visits.entry(code.to_string()).or_insert(0) += 1;
            }
        }
        EvalReport {
            episodes: results.len() as u32,
            mean_score,
            mean_lives_lost,
            mean_score_per_life: score_per_life(mean_score, mean_lives_lost),
            min_score: scores.first().copied().unwrap_or(0),
            median_score: scores.get(scores.len() / 2).copied().unwrap_or(0),
            max_score: scores.last().copied().unwrap_or(0),
            macro_visits,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "episodes,mean_score,mean_lives_lost,mean_score_per_life,min_score,median_score,max_score\n{},{},{},{},{},{},{}\n",
            self.episodes,
            self.mean_score,
            self.mean_lives_lost,
            self.mean_score_per_life,
            self.min_score,
            self.median_score,
            self.max_score
        )
    }

    pub fn macro_visits_csv(&self) -> String {
        let mut out = String::from("macro_code,steps\n");
        for (code, steps) in &self.macro_visits {
            out.push_str(&format!("{code},{steps}\n"));
        }
        out
    }
}

pub fn score_per_life(mean_score: f64, mean_lives_lost: f64) -> f64 {
    if mean_lives_lost > 0.0 {
        mean_score / mean_lives_lost
    } else {
        mean_score
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(score: u32, lives_lost: u8) -> EpisodeResult {
        EpisodeResult { score, lives_lost, ..Default::default() }
    }

    #[test]
    fn single_episode_collapses_the_summary() {
        let report = EvalReport::from_results(&[result(300, 2)]);
        assert_eq!(report.min_score, 300);
        assert_eq!(report.median_score, 300);
        assert_eq!(report.max_score, 300);
        assert_eq!(report.mean_score, 300.0);
    }

    #[test]
    fn score_per_life_recomputes_from_parts() {
        let results = vec![result(100, 1), result(200, 3), result(600, 2)];
        let report = EvalReport::from_results(&results);
        assert_eq!(report.mean_score, 300.0);
        assert_eq!(report.mean_lives_lost, 2.0);
        assert_eq!(report.mean_score_per_life, 150.0);
        // Independent recomputation from the raw parts.
        let by_hand = (100.0 + 200.0 + 600.0) / 3.0 / ((1.0 + 3.0 + 2.0) / 3.0);
        assert!((report.mean_score_per_life - by_hand).abs() < 1e-12);
    }

    #[test]
    fn deathless_batches_fall_back_to_raw_score() {
        let report = EvalReport::from_results(&[result(500, 0), result(700, 0)]);
        assert_eq!(report.mean_score_per_life, 600.0);
    }
}
