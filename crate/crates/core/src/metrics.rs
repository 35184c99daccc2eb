//! Per-task benchmark metrics and the report-level aggregation.
//!
//! Rates and accuracies are on the percent scale. Interval overlap scores
//! (`temporal_iou`, `temporal_f1`) and cosine alignment are returned raw and
//! scaled by 100 when they enter a [`TaskScores`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::parse::ParsedAnswer;
use crate::task::{Choice, Task};
use crate::temporal::{IntervalSet, Timestamp};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("gold interval set is empty")]
    MissingGold,
    #[error("length mismatch: {left} predictions vs {right} golds")]
    LengthMismatch { left: usize, right: usize },
    #[error("reference is empty")]
    EmptyReference,
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("task {0} appears more than once")]
    DuplicateTask(Task),
    #[error("task {task} expects sub-metrics {expected:?}")]
    SubMetricNames {
        task: Task,
        expected: &'static [&'static str],
    },
}

/// Default Hit@T tolerance, in seconds.
pub const DEFAULT_TOLERANCE: f64 = 3.0;

/// Sub-metric names reported for each task, in column order.
pub fn sub_metric_names(task: Task) -> &'static [&'static str] {
    match task {
        Task::Tsg => &["onset_hit", "offset_hit"],
        Task::Ltr => &["acc"],
        Task::Tad => &["meteor", "align"],
        Task::Gto => &["acc"],
        Task::Mtr => &["iou", "f1"],
    }
}

/// `|pred − gold| ≤ tol`.
pub fn hit_at_t(pred: Timestamp, gold: Timestamp, tol: f64) -> bool {
    libm::fabs(pred.seconds() - gold.seconds()) <= tol
}

fn percent(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * hits as f64 / n as f64
    }
}

fn check_len(left: usize, right: usize) -> Result<(), MetricError> {
    if left == right {
        Ok(())
    } else {
        Err(MetricError::LengthMismatch { left, right })
    }
}

/// Hit@T rate in percent; unparsed predictions are misses.
pub fn hit_rate(preds: &[ParsedAnswer], golds: &[Timestamp], tol: f64) -> Result<f64, MetricError> {
    check_len(preds.len(), golds.len())?;
    let hits = preds
        .iter()
        .zip(golds)
        .filter(|(p, g)| p.timestamp().is_some_and(|t| hit_at_t(t, **g, tol)))
        .count();
    Ok(percent(hits, golds.len()))
}

/// Jaccard overlap of the two unions. Empty predictions score 0.
pub fn temporal_iou(pred: &IntervalSet, gold: &IntervalSet) -> Result<f64, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::MissingGold);
    }
    let inter = pred.overlap_length(gold);
    let union = pred.union_length() + gold.union_length() - inter;
    Ok(if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    })
}

/// Dice overlap of the two unions. Empty predictions score 0.
pub fn temporal_f1(pred: &IntervalSet, gold: &IntervalSet) -> Result<f64, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::MissingGold);
    }
    let inter = pred.overlap_length(gold);
    let denom = pred.union_length() + gold.union_length();
    Ok((2.0 * inter / denom).clamp(0.0, 1.0))
}

/// Percent of items whose parsed letter equals the gold letter.
pub fn mcq_accuracy(preds: &[ParsedAnswer], golds: &[Choice]) -> Result<f64, MetricError> {
    check_len(preds.len(), golds.len())?;
    let correct = preds.iter().zip(golds).filter(|(p, g)| p.choice() == Some(**g)).count();
    Ok(percent(correct, golds.len()))
}

/// Cosine similarity of an audio and a text embedding, in `[-1, 1]`.
pub fn align_cosine(audio: &[f64], text: &[f64]) -> Result<f64, MetricError> {
    check_len(audio.len(), text.len()).map_err(|_| MetricError::DimensionMismatch {
        left: audio.len(),
        right: text.len(),
    })?;
    let dot: f64 = audio.iter().zip(text).map(|(a, b)| a * b).sum();
    let na = libm::sqrt(audio.iter().map(|a| a * a).sum());
    let nt = libm::sqrt(text.iter().map(|b| b * b).sum());
    if na == 0.0 || nt == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    Ok((dot / (na * nt)).clamp(-1.0, 1.0))
}

/// One task's sub-metrics (percent scale) over `n_items` items.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawTaskScores"))]
pub struct TaskScores {
    task: Task,
    sub_metrics: BTreeMap<String, f64>,
    n_items: usize,
}

#[cfg_attr(feature = "serde", derive(serde::Deserialize))]
#[allow(dead_code)]
struct RawTaskScores {
    task: Task,
    sub_metrics: BTreeMap<String, f64>,
    n_items: usize,
}

impl TryFrom<RawTaskScores> for TaskScores {
    type Error = MetricError;

    fn try_from(raw: RawTaskScores) -> Result<Self, Self::Error> {
        let values = sub_metric_names(raw.task)
            .iter()
            .map(|name| raw.sub_metrics.get(*name).copied())
            .collect::<Option<Vec<_>>>();
        match values {
            Some(v) if raw.sub_metrics.len() == v.len() => Ok(TaskScores::new(raw.task, &v, raw.n_items)),
            _ => Err(MetricError::SubMetricNames {
                task: raw.task,
                expected: sub_metric_names(raw.task),
            }),
        }
    }
}

impl TaskScores {
    /// `values` follow [`sub_metric_names`] order.
    ///
    /// # Panics
    /// When `values.len()` differs from the task's sub-metric count.
    pub fn new(task: Task, values: &[f64], n_items: usize) -> Self {
        let names = sub_metric_names(task);
        assert_eq!(names.len(), values.len(), "{task} takes {} sub-metrics", names.len());
        let sub_metrics = names.iter().zip(values).map(|(n, v)| (n.to_string(), *v)).collect();
        Self {
            task,
            sub_metrics,
            n_items,
        }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.sub_metrics.get(name).copied()
    }

    /// Values in column order.
    pub fn values(&self) -> Vec<f64> {
        sub_metric_names(self.task)
            .iter()
            .map(|n| self.sub_metrics[*n])
            .collect()
    }

    pub fn average(&self) -> f64 {
        mean(&self.values())
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Per-task scores, per-task averages and the overall average.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub per_task: Vec<TaskScores>,
    pub task_avgs: BTreeMap<Task, f64>,
    /// Mean over every sub-metric present (eight when all tasks are scored).
    pub total_avg: f64,
    /// Tasks absent from the input; non-empty means `total_avg` is partial.
    pub missing: Vec<Task>,
}

impl MetricsReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn task(&self, task: Task) -> Option<&TaskScores> {
        self.per_task.iter().find(|s| s.task == task)
    }
}

/// Averages sub-metrics within each task and over all sub-metrics.
///
/// The total is the mean of the individual sub-metrics, not of the task
/// averages, so two-column tasks weigh twice as much as one-column tasks.
pub fn aggregate(per_task: Vec<TaskScores>) -> Result<MetricsReport, MetricError> {
    let mut by_task: BTreeMap<Task, TaskScores> = BTreeMap::new();
    for scores in per_task {
        let task = scores.task;
        if by_task.insert(task, scores).is_some() {
            return Err(MetricError::DuplicateTask(task));
        }
    }
    let task_avgs = by_task.iter().map(|(t, s)| (*t, s.average())).collect();
    let all: Vec<f64> = by_task.values().flat_map(TaskScores::values).collect();
    let missing = Task::ALL.into_iter().filter(|t| !by_task.contains_key(t)).collect();
    Ok(MetricsReport {
        per_task: by_task.into_values().collect(),
        task_avgs,
        total_avg: mean(&all),
        missing,
    })
}

/// Rounds half-up at `decimals` places, operating on the shortest decimal
/// representation of `x` (the digits `Display` prints). A mean stored as
/// `28.549999999999997` therefore rounds to `28.5`, matching what printing
/// the computed value and rounding by hand gives.
pub fn round_half_up(x: f64, decimals: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let text = alloc::format!("{}", libm::fabs(x));
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text.as_str(), ""),
    };
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    digits.extend((0..decimals).map(|k| frac.get(k).copied().unwrap_or(0)));
    if frac.get(decimals).is_some_and(|&d| d >= 5) {
        let mut k = digits.len();
        loop {
            if k == 0 {
                digits.insert(0, 1);
                break;
            }
            k -= 1;
            if digits[k] == 9 {
                digits[k] = 0;
            } else {
                digits[k] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let mut out = String::new();
    if x < 0.0 {
        out.push('-');
    }
    out.extend(digits[..split].iter().map(|d| (b'0' + d) as char));
    if decimals > 0 {
        out.push('.');
        out.extend(digits[split..].iter().map(|d| (b'0' + d) as char));
    }
    out.parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_choice, parse_timestamp};

    fn ts(s: f64) -> Timestamp {
        Timestamp::new(s).unwrap()
    }

    fn set(p: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_pairs(p).unwrap()
    }

    #[test]
    fn hit_boundaries() {
        assert!(hit_at_t(ts(72.0), ts(72.0), 3.0));
        assert!(hit_at_t(ts(75.0), ts(72.0), 3.0));
        assert!(!hit_at_t(ts(75.001), ts(72.0), 3.0));
        assert!(hit_at_t(ts(69.0), ts(72.0), 3.0));
    }

    #[test]
    fn hit_rate_counts_invalid_as_miss() {
        let preds = [parse_timestamp("72"), parse_timestamp("no idea"), parse_timestamp("80")];
        let golds = [ts(72.0), ts(10.0), ts(72.0)];
        let r = hit_rate(&preds, &golds, 3.0).unwrap();
        assert!((r - 100.0 / 3.0).abs() < 1e-12);
        assert!(hit_rate(&preds, &golds[..2], 3.0).is_err());
    }

    #[test]
    fn iou_f1_examples() {
        let g = set(&[(5.0, 15.0)]);
        assert_eq!(temporal_iou(&g, &g).unwrap(), 1.0);
        assert_eq!(temporal_f1(&g, &g).unwrap(), 1.0);
        let far = set(&[(100.0, 110.0)]);
        assert_eq!(temporal_iou(&far, &g).unwrap(), 0.0);
        assert_eq!(temporal_f1(&far, &g).unwrap(), 0.0);
        let p = set(&[(0.0, 10.0)]);
        assert!((temporal_iou(&p, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((temporal_f1(&p, &g).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_and_missing_gold() {
        let g = set(&[(5.0, 15.0)]);
        assert_eq!(temporal_iou(&IntervalSet::empty(), &g).unwrap(), 0.0);
        assert_eq!(temporal_f1(&IntervalSet::empty(), &g).unwrap(), 0.0);
        assert_eq!(temporal_iou(&g, &IntervalSet::empty()), Err(MetricError::MissingGold));
        assert_eq!(temporal_f1(&g, &IntervalSet::empty()), Err(MetricError::MissingGold));
    }

    #[test]
    fn accuracy_examples() {
        let abcd: Vec<Choice> = Choice::first(4).collect();
        let golds: Vec<Choice> = "ABCD".chars().filter_map(Choice::from_letter).collect();
        let all: Vec<_> = ["A", "B", "C", "D"].iter().map(|t| parse_choice(t, &abcd)).collect();
        assert_eq!(mcq_accuracy(&all, &golds).unwrap(), 100.0);
        let bad: Vec<_> = ["?", "-", "", "none"].iter().map(|t| parse_choice(t, &abcd)).collect();
        assert_eq!(mcq_accuracy(&bad, &golds).unwrap(), 0.0);
        let three: Vec<_> = ["A", "B", "C", "A"].iter().map(|t| parse_choice(t, &abcd)).collect();
        assert_eq!(mcq_accuracy(&three, &golds).unwrap(), 75.0);
        assert!(matches!(
            mcq_accuracy(&three[..3], &golds),
            Err(MetricError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cosine_examples() {
        assert!((align_cosine(&[0.6, 0.8], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(align_cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = align_cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(align_cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(MetricError::ZeroVector));
        assert!(matches!(
            align_cosine(&[1.0], &[1.0, 0.0]),
            Err(MetricError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn aggregate_gemini_flash_row() {
        let report = aggregate(alloc::vec![
            TaskScores::new(Task::Tsg, &[60.0, 71.5], 400),
            TaskScores::new(Task::Ltr, &[56.7], 208),
            TaskScores::new(Task::Tad, &[11.2, 34.5], 208),
            TaskScores::new(Task::Gto, &[42.4], 198),
            TaskScores::new(Task::Mtr, &[24.8, 33.1], 250),
        ])
        .unwrap();
        assert!(report.is_complete());
        assert_eq!(round_half_up(report.task_avgs[&Task::Tsg], 1), 65.8);
        assert_eq!(round_half_up(report.task_avgs[&Task::Tad], 1), 22.9);
        assert_eq!(round_half_up(report.task_avgs[&Task::Mtr], 1), 29.0);
        assert!((report.total_avg - 41.775).abs() < 1e-9);
        assert_eq!(round_half_up(report.total_avg, 1), 41.8);
    }

    #[test]
    fn aggregate_zero_and_duplicates() {
        let zeros: Vec<TaskScores> = Task::ALL
            .iter()
            .map(|&t| TaskScores::new(t, &alloc::vec![0.0; sub_metric_names(t).len()], 1))
            .collect();
        let report = aggregate(zeros).unwrap();
        assert_eq!(report.total_avg, 0.0);
        assert!(report.task_avgs.values().all(|&v| v == 0.0));

        let dup = aggregate(alloc::vec![
            TaskScores::new(Task::Ltr, &[1.0], 1),
            TaskScores::new(Task::Ltr, &[2.0], 1),
        ]);
        assert_eq!(dup, Err(MetricError::DuplicateTask(Task::Ltr)));
    }

    #[test]
    fn aggregate_flags_missing_tasks() {
        let report = aggregate(alloc::vec![TaskScores::new(Task::Mtr, &[20.0, 30.0], 5)]).unwrap();
        assert_eq!(report.missing, alloc::vec![Task::Tsg, Task::Ltr, Task::Tad, Task::Gto]);
        assert_eq!(report.total_avg, 25.0);
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(65.75, 1), 65.8);
        assert_eq!(round_half_up(57.25, 1), 57.3);
        assert_eq!(round_half_up(22.85, 1), 22.9);
        assert_eq!(round_half_up(28.549999999999997, 1), 28.5);
        assert_eq!(round_half_up(24.325000000000003, 1), 24.3);
        assert_eq!(round_half_up(99.95, 1), 100.0);
        assert_eq!(round_half_up(0.0, 1), 0.0);
        assert_eq!(round_half_up(-1.25, 1), -1.3);
        assert_eq!(round_half_up(2.5, 0), 3.0);
    }
}
