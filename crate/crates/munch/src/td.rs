//! TD(0) valuation of behavioral states and TD-error statistics.
//!
//! The learner's states are macro codes, not tiles. A transition fires
//! when the code changes; the reward is everything collected while the
//! source code was active and the discount is applied per step of that
//! stay, so a macro held for `k` steps bootstraps with `gamma^k`. The
//! per-code TD-error histograms are the non-Markovity probe: a state
//! whose error distribution has several separated peaks is hiding
//! outcomes the code cannot distinguish.

use std::collections::BTreeMap;

use crate::policy::MacroCode;

#[derive(Debug, Clone)]
pub struct ValueTable {
    values: BTreeMap<MacroCode, f64>,
    visits: BTreeMap<MacroCode, u64>,
    pub alpha: f64,
    pub gamma: f64,
}

impl ValueTable {
    pub fn new(alpha: f64, gamma: f64) -> ValueTable {
        ValueTable { values: BTreeMap::new(), visits: BTreeMap::new(), alpha, gamma }
    }

    /// Unseen codes read as zero.
    pub fn value(&self, code: MacroCode) -> f64 {
        self.values.get(&code).copied().unwrap_or(0.0)
    }

    pub fn set_value(&mut self, code: MacroCode, value: f64) {
        self.values.insert(code, value);
    }

    pub fn visits(&self, code: MacroCode) -> u64 {
        self.visits.get(&code).copied().unwrap_or(0)
    }

    pub fn codes(&self) -> impl Iterator<Item = MacroCode> + '_ {
        self.values.keys().copied()
    }

    /// CSV rows `macro_code,value,visits`, sorted by code.
    pub fn export_csv(&self) -> String {
        let mut out = String::from("macro_code,value,visits\n");
        for (&code, &value) in &self.values {
            out.push_str(&format!("{},{},{}\n", code, value, self.visits(code)));
        }
        out
    }

    /// Parse the `export_csv` form.
    pub fn parse_csv(text: &str, alpha: f64, gamma: f64) -> Option<ValueTable> {
        let mut table = ValueTable::new(alpha, gamma);
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let code = MacroCode::parse(parts.next()?)?;
            let value: f64 = parts.next()?.parse().ok()?;
            let visits: u64 = parts.next()?.parse().ok()?;
            table.values.insert(code, value);
            table.visits.insert(code, visits);
        }
        Some(table)
    }
}

/// One behavioral-state transition: the code held, what it handed over
/// to (`None` at episode end), the reward accumulated during the stay,
/// and how many steps the stay lasted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroTransition {
    pub code: MacroCode,
    pub next: Option<MacroCode>,
    pub reward: f64,
    pub duration: u64,
}

/// `reward + gamma^duration * V(next) - V(code)`; terminal successors
/// bootstrap with zero.
pub fn td_error(table: &ValueTable, t: &MacroTransition) -> f64 {
    let next_v = t.next.map_or(0.0, |c| table.value(c));
    t.reward + table.gamma.powi(t.duration as i32) * next_v - table.value(t.code)
}

/// Apply one TD(0) update; only the source code's entry changes. Returns
/// the error that drove the update.
pub fn td_update(table: &mut ValueTable, t: &MacroTransition) -> f64 {
    let delta = td_error(table, t);
    let v = table.value(t.code);
    table.values.insert(t.code, v + table.alpha * delta);
    *table.visits.entry(t.code).or_insert(0) += 1;
    delta
}

/// Group a per-step `(code, reward)` trace into macro transitions. The
/// trailing stay becomes a terminal transition when the episode actually
/// ended; a stay cut off by a step cap has no successor and is dropped.
pub fn segment_transitions(steps: &[(MacroCode, u32)], terminal: bool) -> Vec<MacroTransition> {
    let mut out = Vec::new();
    let mut iter = steps.iter().copied();
    let Some((mut code, first_reward)) = iter.next() else {
        return out;
    };
    let mut reward = first_reward as f64;
    let mut duration = 1u64;
    for (c, r) in iter {
        if c == code {
            reward += r as f64;
            duration += 1;
        } else {
            out.push(MacroTransition { code, next: Some(c), reward, duration });
            code = c;
            reward = r as f64;
            duration = 1;
        }
    }
    if terminal {
        out.push(MacroTransition { code, next: None, reward, duration });
    }
    out
}

/// Per-code histogram of TD errors with fixed-width bins.
#[derive(Debug, Clone)]
pub struct TdErrorHistogram {
    pub bin_width: f64,
    bins: BTreeMap<MacroCode, BTreeMap<i64, u64>>,
}

impl TdErrorHistogram {
    pub fn new(bin_width: f64) -> TdErrorHistogram {
        TdErrorHistogram { bin_width, bins: BTreeMap::new() }
    }

    pub fn record(&mut self, code: MacroCode, delta: f64) {
        let idx = (delta / self.bin_width).floor() as i64;
        *self.bins.entry(code).or_default().entry(idx).or_insert(0) += 1;
    }

    pub fn total(&self, code: MacroCode) -> u64 {
        self.bins.get(&code).map_or(0, |b| b.values().sum())
    }

    pub fn codes(&self) -> impl Iterator<Item = MacroCode> + '_ {
        self.bins.keys().copied()
    }

    /// `(code, bin_low, bin_high, count)` rows. With `mask_main_peak` the
    /// single largest bin of each code is omitted (lowest bin wins ties),
    /// which is the view that makes the secondary structure visible.
    pub fn rows(&self, mask_main_peak: bool) -> Vec<(MacroCode, f64, f64, u64)> {
        let mut out = Vec::new();
        for (&code, bins) in &self.bins {
            let masked: Option<i64> = if mask_main_peak {
                bins.iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(&idx, _)| idx)
            } else {
                None
            };
            for (&idx, &count) in bins {
                if Some(idx) == masked {
                    continue;
                }
                let low = idx as f64 * self.bin_width;
                out.push((code, low, low + self.bin_width, count));
            }
        }
        out
    }

    pub fn export_csv(&self, mask_main_peak: bool) -> String {
        let mut out = String::from("macro_code,bin_low,bin_high,count\n");
        for (code, low, high, count) in self.rows(mask_main_peak) {
            out.push_str(&format!("{},{},{},{}\n", code, low, high, count));
        }
        out
    }

    /// Number of modes: local maxima over the contiguous bin range whose
    /// topographic prominence reaches `prominence_frac` of the tallest
    /// bin. Gap bins count as zero; plateaus count once.
    pub fn peak_count(&self, code: MacroCode, prominence_frac: f64) -> usize {
        let Some(bins) = self.bins.get(&code) else { return 0 };
        if bins.is_empty() {
            return 0;
        }
        let lo = *bins.keys().next().unwrap();
        let hi = *bins.keys().last().unwrap();
        let dense: Vec<f64> =
            (lo..=hi).map(|i| bins.get(&i).copied().unwrap_or(0) as f64).collect();
        count_peaks(&dense, prominence_frac)
    }
}

/// Prominence-filtered peak count over a sampled curve.
pub fn count_peaks(values: &[f64], prominence_frac: f64) -> usize {
    // Compress plateaus so runs of equal bins act as one candidate.
    let mut compact: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if compact.last() != Some(&v) {
            compact.push(v);
        }
    }
    let max = compact.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    let threshold = prominence_frac * max;
    let n = compact.len();
    let mut peaks = 0;
    for i in 0..n {
        let left_ok = i == 0 || compact[i - 1] < compact[i];
        let right_ok = i + 1 == n || compact[i + 1] < compact[i];
        if !(left_ok && right_ok) {
            continue;
        }
        // Base on each side: the minimum before terrain rises above the
        // peak again (or before the edge).
        let mut left_base = compact[i];
        for j in (0..i).rev() {
            left_base = left_base.min(compact[j]);
            if compact[j] > compact[i] {
                break;
            }
        }
        if i == 0 {
            left_base = 0.0;
        }
        let mut right_base = compact[i];
        for &v in &compact[i + 1..] {
            right_base = right_base.min(v);
            if v > compact[i] {
                break;
            }
        }
        if i + 1 == n {
            right_base = 0.0;
        }
        let prominence = compact[i] - left_base.max(right_base);
        if prominence >= threshold {
            peaks += 1;
        }
    }
    peaks
}

/// Feed one episode's macro trace through the learner, recording each
/// error in the histogram of its source code.
pub fn record_episode(
    table: &mut ValueTable,
    hist: &mut TdErrorHistogram,
    steps: &[(MacroCode, u32)],
    terminal: bool,
) {
    for t in segment_transitions(steps, terminal) {
        let delta = td_error(table, &t);
        hist.record(t.code, delta);
        td_update(table, &t);
    }
}
