//! Scores prediction files against gold files.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tgbench_core::meteor::meteor;
use tgbench_core::metrics::{
    aggregate, align_cosine, hit_at_t, sub_metric_names, temporal_f1, temporal_iou, MetricError, MetricsReport,
    TaskScores,
};
use tgbench_core::parse::{
    parse_choice, parse_interval_list, parse_ordering, parse_text, parse_timestamp, AnswerValue, ParsedAnswer,
};
use tgbench_core::qagen::{Edge, Gold, QAItem};
use tgbench_core::rewards::{mtr_reward, mtr_soft_f1, tsg_reward};
use tgbench_core::{AnswerKind, Choice, IntervalSet, Task};

use crate::formats::{read_gold_path, read_predictions_path, Config, FormatError, PredictionRecord};
use crate::text::{tokenize, EnglishStemmer};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("line {line}: second prediction for item {item_id:?}")]
    DuplicatePrediction { item_id: String, line: usize },
    #[error("line {line}: prediction for unknown item {item_id:?}")]
    UnknownItem { item_id: String, line: usize },
    #[error("line {line}: gold item id {item_id:?} appears twice")]
    DuplicateGold { item_id: String, line: usize },
    #[error("no reward is defined for {0} items")]
    NoReward(Task),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Scores for one gold item. Per-item values are fractions in `[0, 1]`
/// (rewards excepted); task-level sub-metrics are the percent means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub item_id: String,
    pub task: Task,
    pub parsed: ParsedAnswer,
    pub scores: BTreeMap<String, f64>,
    pub out_of_range: bool,
}

impl ItemResult {
    pub fn format_ok(&self) -> bool {
        self.parsed.format_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metrics: MetricsReport,
    pub per_item: Vec<ItemResult>,
    /// Share of parsed timestamp and interval predictions reaching past the track.
    pub out_of_range_rate: f64,
    /// Share of gold items whose prediction is missing or unparseable.
    pub format_error_rate: f64,
}

impl RunReport {
    /// Mean of a per-item score over items of `task` that carry it.
    pub fn item_mean(&self, task: Task, key: &str) -> Option<f64> {
        let vals: Vec<f64> = self
            .per_item
            .iter()
            .filter(|r| r.task == task)
            .filter_map(|r| r.scores.get(key).copied())
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub fn answer_kind(task: Task) -> AnswerKind {
    match task {
        Task::Tsg => AnswerKind::Timestamp,
        Task::Ltr => AnswerKind::Choice,
        Task::Gto => AnswerKind::Ordering,
        Task::Mtr => AnswerKind::IntervalList,
        Task::Tad => AnswerKind::Text,
    }
}

/// Parses a response as the answer type `item` expects. Descriptions are
/// free text, so any non-blank response is well formed.
pub fn parse_for(item: &QAItem, text: &str) -> ParsedAnswer {
    match item.task {
        Task::Tsg => parse_timestamp(text),
        Task::Mtr => parse_interval_list(text),
        Task::Gto => parse_ordering(text),
        Task::Ltr => {
            let n = item.options.as_ref().map_or(Choice::MAX_OPTIONS, Vec::len);
            let allowed: Vec<Choice> = Choice::first(n).collect();
            parse_choice(text, &allowed)
        }
        Task::Tad => parse_text(text),
    }
}

/// Canonical response text that scores perfectly against `item`.
pub fn gold_response(item: &QAItem) -> String {
    use tgbench_core::parse::format_answer;
    match &item.gold {
        Gold::Timestamp { time, .. } => format_answer(&AnswerValue::Timestamp(*time)),
        Gold::Choice { letter } if item.task == Task::Gto => format_answer(&AnswerValue::Ordering(*letter)),
        Gold::Choice { letter } => format_answer(&AnswerValue::Choice(*letter)),
        Gold::Text { text } => text.clone(),
        Gold::Intervals { spans } => format_answer(&AnswerValue::IntervalList(spans.intervals().to_vec())),
    }
}

fn pred_set(parsed: &ParsedAnswer) -> Option<IntervalSet> {
    parsed
        .intervals()
        .map(|spans| IntervalSet::normalize(spans.iter().copied()))
}

/// Whether a parsed timestamp or interval answer reaches past `duration`.
pub fn is_out_of_range(parsed: &ParsedAnswer, duration: f64) -> bool {
    if let Some(t) = parsed.timestamp() {
        return t.seconds() > duration;
    }
    parsed
        .intervals()
        .is_some_and(|spans| spans.iter().any(|iv| iv.exceeds(duration)))
}

fn bool_score(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

struct Scorer<'a> {
    cfg: &'a Config,
    stemmer: EnglishStemmer,
}

impl Scorer<'_> {
    fn score(&self, item: &QAItem, pred: Option<&PredictionRecord>) -> Result<ItemResult, MetricError> {
        let text = pred.map_or("", |p| p.raw_text.as_str());
        let parsed = parse_for(item, text);
        let mut scores = BTreeMap::new();
        let cfg = self.cfg;
        match &item.gold {
            Gold::Timestamp { time, edge } => {
                let hit = parsed
                    .timestamp()
                    .is_some_and(|t| hit_at_t(t, *time, cfg.metrics.tolerance));
                let key = match edge {
                    Edge::Onset => "onset_hit",
                    Edge::Offset => "offset_hit",
                };
                scores.insert(key.to_string(), bool_score(hit));
                scores.insert("reward".into(), tsg_reward(&parsed, *time, item.duration, &cfg.reward));
            }
            Gold::Choice { letter } => {
                scores.insert("acc".into(), bool_score(parsed.choice() == Some(*letter)));
            }
            Gold::Text { text: reference } => {
                let cand = tokenize(text);
                let refs = tokenize(reference);
                let cand: Vec<&str> = cand.iter().map(String::as_str).collect();
                let refs: Vec<&str> = refs.iter().map(String::as_str).collect();
                let m = if refs.is_empty() {
                    0.0
                } else {
                    meteor(&cand, &refs, &cfg.metrics.meteor, &self.stemmer)?
                };
                scores.insert("meteor".into(), m);
                let align = match pred.and_then(|p| p.audio_emb.as_deref().zip(p.text_emb.as_deref())) {
                    Some((a, t)) => align_cosine(a, t).map_or(0.0, |c| c.max(0.0)),
                    None => 0.0,
                };
                scores.insert("align".into(), align);
            }
            Gold::Intervals { spans } => {
                let (iou, f1, soft) = match pred_set(&parsed) {
                    Some(p) => (
                        temporal_iou(&p, spans)?,
                        temporal_f1(&p, spans)?,
                        mtr_soft_f1(&p, spans, item.duration, &cfg.reward).unwrap_or(0.0),
                    ),
                    None => (0.0, 0.0, 0.0),
                };
                scores.insert("iou".into(), iou);
                scores.insert("f1".into(), f1);
                scores.insert("soft_f1".into(), soft);
                scores.insert("reward".into(), mtr_reward(&parsed, spans, item.duration, &cfg.reward));
            }
        }
        Ok(ItemResult {
            item_id: item.id.clone(),
            task: item.task,
            out_of_range: is_out_of_range(&parsed, item.duration),
            parsed,
            scores,
        })
    }
}

fn percent_mean(results: &[&ItemResult], key: &str) -> f64 {
    let vals: Vec<f64> = results.iter().filter_map(|r| r.scores.get(key).copied()).collect();
    if vals.is_empty() {
        0.0
    } else {
        100.0 * vals.iter().sum::<f64>() / vals.len() as f64
    }
}

fn task_scores(results: &[ItemResult]) -> Vec<TaskScores> {
    Task::ALL
        .into_iter()
        .filter_map(|task| {
            let rs: Vec<&ItemResult> = results.iter().filter(|r| r.task == task).collect();
            if rs.is_empty() {
                return None;
            }
            let values: Vec<f64> = sub_metric_names(task).iter().map(|k| percent_mean(&rs, k)).collect();
            Some(TaskScores::new(task, &values, rs.len()))
        })
        .collect()
}

fn index_gold(gold: &[(usize, QAItem)]) -> Result<HashMap<&str, &QAItem>, HarnessError> {
    let mut by_id = HashMap::with_capacity(gold.len());
    for (line, item) in gold {
        if by_id.insert(item.id.as_str(), item).is_some() {
            return Err(HarnessError::DuplicateGold {
                item_id: item.id.clone(),
                line: *line,
            });
        }
    }
    Ok(by_id)
}

/// Scores `preds` against `gold`. Records carry their source line numbers
/// for error reporting. Missing predictions count as format errors; a
/// second prediction for an item, or one for an unknown item, is an error.
/// Output is ordered by item id regardless of input order.
pub fn evaluate(
    gold: &[(usize, QAItem)],
    preds: &[(usize, PredictionRecord)],
    cfg: &Config,
    only: Option<Task>,
) -> Result<RunReport, HarnessError> {
    let by_id = index_gold(gold)?;
    let mut pred_by_id: HashMap<&str, &PredictionRecord> = HashMap::with_capacity(preds.len());
    for (line, p) in preds {
        let Some(item) = by_id.get(p.item_id.as_str()) else {
            return Err(HarnessError::UnknownItem {
                item_id: p.item_id.clone(),
                line: *line,
            });
        };
        if only.is_some_and(|t| t != item.task) {
            continue;
        }
        if pred_by_id.insert(p.item_id.as_str(), p).is_some() {
            return Err(HarnessError::DuplicatePrediction {
                item_id: p.item_id.clone(),
                line: *line,
            });
        }
    }

    let mut items: Vec<&QAItem> = gold
        .iter()
        .map(|(_, g)| g)
        .filter(|g| only.is_none_or(|t| t == g.task))
        .collect();
    items.sort_by(|a, b| a.id.cmp(&b.id));

    let per_item = items
        .par_iter()
        .map_init(
            || Scorer {
                cfg,
                stemmer: EnglishStemmer::new(),
            },
            |scorer, item| scorer.score(item, pred_by_id.get(item.id.as_str()).copied()),
        )
        .collect::<Result<Vec<_>, _>>()?;

    let metrics = aggregate(task_scores(&per_item))?;
    let stats = range_stats(&per_item);
    let format_errors = per_item.iter().filter(|r| !r.format_ok()).count();
    Ok(RunReport {
        metrics,
        out_of_range_rate: stats.fraction,
        format_error_rate: ratio(format_errors, per_item.len()),
        per_item,
    })
}

/// File-level entry point; without a config path the defaults apply.
pub fn evaluate_run(gold_path: &Path, pred_path: &Path, config_path: Option<&Path>) -> Result<RunReport, HarnessError> {
    let cfg = match config_path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let gold = read_gold_path(gold_path)?;
    let preds = read_predictions_path(pred_path)?;
    evaluate(&gold, &preds, &cfg, None)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfRangeStats {
    /// Flagged over parsed timestamp and interval predictions; 0 when none parsed.
    pub fraction: f64,
    /// `(item_id, flagged)` for each parsed timestamp or interval prediction.
    pub flags: Vec<(String, bool)>,
}

fn range_stats(per_item: &[ItemResult]) -> OutOfRangeStats {
    let flags: Vec<(String, bool)> = per_item
        .iter()
        .filter(|r| matches!(r.task, Task::Tsg | Task::Mtr) && r.format_ok())
        .map(|r| (r.item_id.clone(), r.out_of_range))
        .collect();
    let flagged = flags.iter().filter(|f| f.1).count();
    OutOfRangeStats {
        fraction: ratio(flagged, flags.len()),
        flags,
    }
}

/// Re-derives range flags from the parsed answers and gold durations.
pub fn out_of_range_stats(report: &RunReport, golds: &[QAItem]) -> OutOfRangeStats {
    let duration: HashMap<&str, f64> = golds.iter().map(|g| (g.id.as_str(), g.duration)).collect();
    let flags: Vec<(String, bool)> = report
        .per_item
        .iter()
        .filter(|r| matches!(r.task, Task::Tsg | Task::Mtr) && r.format_ok())
        .filter_map(|r| {
            let d = duration.get(r.item_id.as_str())?;
            Some((r.item_id.clone(), is_out_of_range(&r.parsed, *d)))
        })
        .collect();
    let flagged = flags.iter().filter(|f| f.1).count();
    OutOfRangeStats {
        fraction: ratio(flagged, flags.len()),
        flags,
    }
}

/// Reward for one rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub item_id: String,
    pub reward: f64,
    pub format_ok: bool,
    pub out_of_range: bool,
}

/// Rewards for rollouts; unlike [`evaluate`], an item may have any number of
/// responses. Output follows input order.
pub fn batch_rewards(
    gold: &[(usize, QAItem)],
    preds: &[(usize, PredictionRecord)],
    cfg: &Config,
) -> Result<Vec<RewardRecord>, HarnessError> {
    let by_id = index_gold(gold)?;
    preds
        .par_iter()
        .map(|(line, p)| {
            let item = by_id.get(p.item_id.as_str()).ok_or_else(|| HarnessError::UnknownItem {
                item_id: p.item_id.clone(),
                line: *line,
            })?;
            let parsed = parse_for(item, &p.raw_text);
            let reward = match &item.gold {
                Gold::Timestamp { time, .. } => tsg_reward(&parsed, *time, item.duration, &cfg.reward),
                Gold::Intervals { spans } => mtr_reward(&parsed, spans, item.duration, &cfg.reward),
                _ => return Err(HarnessError::NoReward(item.task)),
            };
            Ok(RewardRecord {
                item_id: p.item_id.clone(),
                reward,
                format_ok: parsed.format_ok(),
                out_of_range: is_out_of_range(&parsed, item.duration),
            })
        })
        .collect()
}
