//! Deterministic construction of benchmark items from pre-extracted feature
//! tables: per-source activity spans and annotated transition events.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::parse::format_timestamp;
use crate::task::{Choice, Task};
use crate::temporal::{Interval, IntervalSet, TemporalError, Timestamp};

/// Labels attached to the three transitions of an ordering item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GtoLabel {
    X,
    Y,
    Z,
}

impl GtoLabel {
    pub const ALL: [GtoLabel; 3] = [GtoLabel::X, GtoLabel::Y, GtoLabel::Z];

    pub fn as_char(self) -> char {
        match self {
            GtoLabel::X => 'X',
            GtoLabel::Y => 'Y',
            GtoLabel::Z => 'Z',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// The six chronological orderings in option order `A..F`.
pub fn gto_option_table() -> [[GtoLabel; 3]; 6] {
    use GtoLabel::*;
    [[X, Y, Z], [X, Z, Y], [Y, X, Z], [Y, Z, X], [Z, X, Y], [Z, Y, X]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FilterReason {
    ShortSegment,
    LowSeparation,
}

impl fmt::Display for FilterReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterReason::ShortSegment => "short_segment",
            FilterReason::LowSeparation => "low_separation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QagenError {
    #[error("no span reaches the volume threshold")]
    NoAudibleSpan,
    #[error("need {needed} distinct descriptions, track has {available}")]
    InsufficientDistractors { needed: usize, available: usize },
    #[error("event index {index} out of range for {len} events")]
    TargetOutOfRange { index: usize, len: usize },
    #[error("ordering items need three distinct timestamps")]
    DuplicateTimestamps,
    #[error("ordering items need exactly three events, got {0}")]
    WrongEventCount(usize),
    #[error("item filtered out: {0}")]
    FilteredOut(FilterReason),
    #[error("need at least 2 boundaries inside the track, got {0}")]
    TooFewBoundaries(usize),
    #[error("mood change {0} is outside [-3, 3]")]
    MoodDelta(f64),
    #[error("time {time} lies outside the track duration {duration}")]
    OutsideTrack { time: f64, duration: f64 },
    #[error("volume {0} must be finite and non-negative")]
    Volume(f64),
    #[error("invalid item: {0}")]
    InvalidItem(&'static str),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
}

/// One audible stretch of a source, with its mean volume.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActivitySpan {
    pub start: f64,
    pub end: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceActivity {
    pub source_id: String,
    pub events: Vec<ActivitySpan>,
    pub track_duration: f64,
}

impl SourceActivity {
    pub fn validate(&self) -> Result<(), QagenError> {
        if !(self.track_duration.is_finite() && self.track_duration > 0.0) {
            return Err(TemporalError::NonPositive {
                what: "track_duration",
                value: self.track_duration,
            }
            .into());
        }
        for span in &self.events {
            Interval::new(span.start, span.end)?;
            if span.end > self.track_duration {
                return Err(QagenError::OutsideTrack {
                    time: span.end,
                    duration: self.track_duration,
                });
            }
            if !(span.volume.is_finite() && span.volume >= 0.0) {
                return Err(QagenError::Volume(span.volume));
            }
        }
        Ok(())
    }

    pub fn peak_volume(&self) -> f64 {
        self.events.iter().map(|s| s.volume).fold(0.0, f64::max)
    }
}

/// Which end of a source's audible life a grounding item asks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Edge {
    /// First onset among qualifying spans.
    Onset,
    /// Final offset among qualifying spans.
    Offset,
}

/// Grounding label for one source: the earliest start or latest end among
/// spans whose volume reaches `volume_threshold`.
pub fn tsg_label(act: &SourceActivity, volume_threshold: f64, edge: Edge) -> Result<Timestamp, QagenError> {
    act.validate()?;
    let loud = act.events.iter().filter(|s| s.volume >= volume_threshold);
    let t = match edge {
        Edge::Onset => loud.map(|s| s.start).reduce(f64::min),
        Edge::Offset => loud.map(|s| s.end).reduce(f64::max),
    };
    Ok(Timestamp::new(t.ok_or(QagenError::NoAudibleSpan)?)?)
}

/// Absolute threshold at `ratio` times the loudest span across `sources`.
pub fn relative_threshold(sources: &[SourceActivity], ratio: f64) -> f64 {
    ratio * sources.iter().map(SourceActivity::peak_volume).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawEvent"))]
pub struct TransitionEvent {
    time: Timestamp,
    description: String,
    mood_delta: f64,
}

#[cfg_attr(feature = "serde", derive(serde::Deserialize))]
#[allow(dead_code)]
struct RawEvent {
    time: Timestamp,
    description: String,
    mood_delta: f64,
}

impl TryFrom<RawEvent> for TransitionEvent {
    type Error = QagenError;

    fn try_from(raw: RawEvent) -> Result<Self, Self::Error> {
        TransitionEvent::new(raw.time.seconds(), raw.description, raw.mood_delta)
    }
}

impl TransitionEvent {
    pub fn new(time: f64, description: impl Into<String>, mood_delta: f64) -> Result<Self, QagenError> {
        if !(-3.0..=3.0).contains(&mood_delta) {
            return Err(QagenError::MoodDelta(mood_delta));
        }
        Ok(Self {
            time: Timestamp::new(time)?,
            description: description.into(),
            mood_delta,
        })
    }

    pub fn time(&self) -> Timestamp {
        self.time
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn mood_delta(&self) -> f64 {
        self.mood_delta
    }
}

/// Typed gold answer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Gold {
    Timestamp { time: Timestamp, edge: Edge },
    Choice { letter: Choice },
    Text { text: String },
    Intervals { spans: IntervalSet },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QAItem {
    pub id: String,
    pub task: Task,
    pub track_id: String,
    pub duration: f64,
    pub question: String,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub options: Option<Vec<String>>,
    pub gold: Gold,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "BTreeMap::is_empty"))]
    pub meta: BTreeMap<String, String>,
}

/// Spans allowed in one interval answer.
pub const MAX_MTR_SPANS: usize = 4;

impl QAItem {
    pub fn validate(&self) -> Result<(), QagenError> {
        let bad = |why| Err(QagenError::InvalidItem(why));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad("duration must be positive");
        }
        if self.task.has_options() != self.options.is_some() {
            return bad("options must be present exactly for LTR and GTO");
        }
        if let Some(opts) = &self.options {
            if !(2..=Choice::MAX_OPTIONS).contains(&opts.len()) {
                return bad("option count must be 2 to 6");
            }
        }
        match (&self.gold, self.task) {
            (Gold::Timestamp { .. }, Task::Tsg) | (Gold::Text { .. }, Task::Tad) => Ok(()),
            (Gold::Choice { letter }, Task::Ltr | Task::Gto) => {
                let n = self.options.as_ref().map_or(0, Vec::len);
                if letter.index() < n {
                    Ok(())
                } else {
                    bad("gold letter has no option")
                }
            }
            (Gold::Intervals { spans }, Task::Mtr) => {
                if (1..=MAX_MTR_SPANS).contains(&spans.len()) {
                    Ok(())
                } else {
                    bad("interval gold needs 1 to 4 spans")
                }
            }
            _ => bad("gold type does not match task"),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grounding item for one source edge.
pub fn tsg_item(track_id: &str, act: &SourceActivity, volume_threshold: f64, edge: Edge) -> Result<QAItem, QagenError> {
    let time = tsg_label(act, volume_threshold, edge)?;
    let (verb, tag) = match edge {
        Edge::Onset => ("first enter", "onset"),
        Edge::Offset => ("finally exit", "offset"),
    };
    let mut meta = BTreeMap::new();
    meta.insert("source".to_string(), act.source_id.clone());
    Ok(QAItem {
        id: format!("{track_id}-tsg-{tag}"),
        task: Task::Tsg,
        track_id: track_id.to_string(),
        duration: act.track_duration,
        question: format!(
            "When does the {} {verb} in this track? Answer with a single timestamp in seconds.",
            act.source_id
        ),
        options: None,
        gold: Gold::Timestamp { time, edge },
        meta,
    })
}

fn target(events: &[TransitionEvent], index: usize) -> Result<&TransitionEvent, QagenError> {
    events.get(index).ok_or(QagenError::TargetOutOfRange {
        index,
        len: events.len(),
    })
}

/// Multiple-choice recognition item: the target description plus
/// `k_options − 1` distinct descriptions from other events of the same track,
/// sampled and ordered by `seed`.
pub fn ltr_item(
    track_id: &str,
    duration: f64,
    events: &[TransitionEvent],
    target_index: usize,
    k_options: usize,
    seed: u64,
) -> Result<QAItem, QagenError> {
    let tgt = target(events, target_index)?;
    if !(2..=Choice::MAX_OPTIONS).contains(&k_options) {
        return Err(QagenError::InvalidItem("option count must be 2 to 6"));
    }
    let mut pool: Vec<&str> = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let d = ev.description();
        if i != target_index && d != tgt.description() && !pool.contains(&d) {
            pool.push(d);
        }
    }
    if pool.len() + 1 < k_options {
        return Err(QagenError::InsufficientDistractors {
            needed: k_options,
            available: pool.len() + 1,
        });
    }
    let mut rng = rng(seed);
    pool.shuffle(&mut rng);
    let mut options: Vec<String> = pool[..k_options - 1].iter().map(|s| s.to_string()).collect();
    options.push(tgt.description().to_string());
    options.shuffle(&mut rng);
    let gold = options
        .iter()
        .position(|o| o == tgt.description())
        .and_then(Choice::from_index)
        .expect("target is among the options");

    let mut meta = BTreeMap::new();
    meta.insert("time".to_string(), format_timestamp(tgt.time()));
    Ok(QAItem {
        id: format!("{track_id}-ltr"),
        task: Task::Ltr,
        track_id: track_id.to_string(),
        duration,
        question: format!(
            "What best describes the musical change at {}s?",
            format_timestamp(tgt.time())
        ),
        options: Some(options),
        gold: Gold::Choice { letter: gold },
        meta,
    })
}

/// Open-ended description item; the gold is the target's own description.
pub fn tad_item(
    track_id: &str,
    duration: f64,
    events: &[TransitionEvent],
    target_index: usize,
) -> Result<QAItem, QagenError> {
    let tgt = target(events, target_index)?;
    let mut meta = BTreeMap::new();
    meta.insert("time".to_string(), format_timestamp(tgt.time()));
    Ok(QAItem {
        id: format!("{track_id}-tad"),
        task: Task::Tad,
        track_id: track_id.to_string(),
        duration,
        question: format!("Describe the musical change at {}s.", format_timestamp(tgt.time())),
        options: None,
        gold: Gold::Text {
            text: tgt.description().to_string(),
        },
        meta,
    })
}

/// Option letter whose permutation lists the labels in ascending time.
/// `times` is indexed by label: `[X, Y, Z]`.
pub fn gto_gold_letter(times: [f64; 3]) -> Result<Choice, QagenError> {
    if times[0] == times[1] || times[0] == times[2] || times[1] == times[2] {
        return Err(QagenError::DuplicateTimestamps);
    }
    let mut order = GtoLabel::ALL;
    order.sort_by(|a, b| times[a.index()].total_cmp(&times[b.index()]));
    let pos = gto_option_table()
        .iter()
        .position(|perm| *perm == order)
        .expect("table holds every permutation");
    Ok(Choice::from_index(pos).expect("six options"))
}

/// Ordering item with a fixed assignment: `labeled[0]` is X, `[1]` Y, `[2]` Z.
pub fn gto_item_labeled(track_id: &str, duration: f64, labeled: [&TransitionEvent; 3]) -> Result<QAItem, QagenError> {
    let letter = gto_gold_letter(labeled.map(|e| e.time().seconds()))?;
    let mut question = String::from(
        "The following descriptions (X, Y, Z) represent three distinct musical transitions \
         from the same track.\n\nDescriptions:\n",
    );
    let mut meta = BTreeMap::new();
    for (label, ev) in GtoLabel::ALL.iter().zip(labeled.iter()) {
        question.push_str(&format!("({}) {}\n", label.as_char(), ev.description()));
        meta.insert(
            format!("time_{}", label.as_char().to_ascii_lowercase()),
            format_timestamp(ev.time()),
        );
    }
    question.push_str(
        "\nQuestion: Which of the following options represents the correct chronological \
         order of these transitions as they appear in the track?",
    );
    let options = Choice::first(6).map(crate::parse::format_ordering).collect();
    Ok(QAItem {
        id: format!("{track_id}-gto"),
        task: Task::Gto,
        track_id: track_id.to_string(),
        duration,
        question,
        options: Some(options),
        gold: Gold::Choice { letter },
        meta,
    })
}

/// Ordering item with labels assigned to `three` by a seeded shuffle.
pub fn gto_item(track_id: &str, duration: f64, three: &[TransitionEvent], seed: u64) -> Result<QAItem, QagenError> {
    let [a, b, c] = three else {
        return Err(QagenError::WrongEventCount(three.len()));
    };
    let mut slots = [a, b, c];
    slots.shuffle(&mut rng(seed));
    gto_item_labeled(track_id, duration, slots)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MtrParams {
    /// Shortest selectable segment, seconds.
    pub min_seg: f64,
    /// Minimum gap between the highest and lowest segment levels.
    pub min_separation: f64,
    /// Levels within this distance of the extreme count as tied.
    pub span_band: f64,
    pub max_spans: usize,
}

impl Default for MtrParams {
    fn default() -> Self {
        Self {
            min_seg: 10.0,
            min_separation: 2.0,
            span_band: 0.5,
            max_spans: MAX_MTR_SPANS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtrLabels {
    pub highest: IntervalSet,
    pub lowest: IntervalSet,
    /// Level of each segment of the boundary partition, in time order.
    pub levels: Vec<f64>,
    pub boundaries: Vec<f64>,
}

/// Segments whose level passes `keep`, merged into spans, capped by
/// dropping the span with the smallest `margin` (latest first on ties).
fn select_spans(
    segments: &[(f64, f64)],
    levels: &[f64],
    keep: impl Fn(f64) -> bool,
    margin: impl Fn(f64) -> f64,
    params: &MtrParams,
) -> Result<IntervalSet, QagenError> {
    // (start, end, best margin)
    let mut spans: Vec<(f64, f64, f64)> = Vec::new();
    for (&(s, e), &lv) in segments.iter().zip(levels) {
        if !keep(lv) {
            continue;
        }
        match spans.last_mut() {
            Some(last) if last.1 == s => {
                last.1 = e;
                last.2 = last.2.max(margin(lv));
            }
            _ => spans.push((s, e, margin(lv))),
        }
    }
    while spans.len() > params.max_spans.max(1) {
        let drop = (0..spans.len())
            .rev()
            .min_by(|&i, &j| spans[i].2.total_cmp(&spans[j].2))
            .expect("non-empty");
        spans.remove(drop);
    }
    let kept: Vec<Interval> = spans
        .iter()
        .map(|&(s, e, _)| Interval::new(s, e))
        .collect::<Result<_, _>>()?;
    for (&(s, e), &lv) in segments.iter().zip(levels) {
        let inside = kept.iter().any(|iv| iv.start() <= s && e <= iv.end());
        if inside && keep(lv) && e - s < params.min_seg {
            return Err(QagenError::FilteredOut(FilterReason::ShortSegment));
        }
    }
    Ok(IntervalSet::normalize(kept))
}

/// Highest and lowest mood spans from cumulative boundary mood changes.
///
/// Boundaries split `[0, duration]` into segments; the first segment has
/// level 0 and each boundary adds its `mood_delta`. Segments within
/// `span_band` of the maximum (minimum) level form the highest (lowest) set.
pub fn mtr_labels(events: &[TransitionEvent], duration: f64, params: &MtrParams) -> Result<MtrLabels, QagenError> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(TemporalError::NonPositive {
            what: "duration",
            value: duration,
        }
        .into());
    }
    let mut sorted: Vec<&TransitionEvent> = events.iter().collect();
    sorted.sort_by(|a, b| a.time().seconds().total_cmp(&b.time().seconds()));
    for ev in &sorted {
        let t = ev.time().seconds();
        if t <= 0.0 || t >= duration {
            return Err(QagenError::OutsideTrack { time: t, duration });
        }
    }
    if sorted.len() < 2 {
        return Err(QagenError::TooFewBoundaries(sorted.len()));
    }
    if sorted.windows(2).any(|w| w[0].time() == w[1].time()) {
        return Err(QagenError::DuplicateTimestamps);
    }

    let boundaries: Vec<f64> = sorted.iter().map(|e| e.time().seconds()).collect();
    let mut cuts = vec![0.0];
    cuts.extend(&boundaries);
    cuts.push(duration);
    let segments: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();

    let mut levels = vec![0.0];
    let mut acc = 0.0;
    for ev in &sorted {
        acc += ev.mood_delta();
        levels.push(acc);
    }

    let max = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = levels.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min < params.min_separation {
        return Err(QagenError::FilteredOut(FilterReason::LowSeparation));
    }
    let band = params.span_band;
    let highest = select_spans(
        &segments,
        &levels,
        |lv| lv >= max - band,
        |lv| lv - (max - band),
        params,
    )?;
    let lowest = select_spans(
        &segments,
        &levels,
        |lv| lv <= min + band,
        |lv| (min + band) - lv,
        params,
    )?;
    Ok(MtrLabels {
        highest,
        lowest,
        levels,
        boundaries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Extreme {
    Highest,
    Lowest,
}

impl Extreme {
    pub fn as_str(self) -> &'static str {
        match self {
            Extreme::Highest => "highest",
            Extreme::Lowest => "lowest",
        }
    }
}

pub fn mtr_item(
    track_id: &str,
    duration: f64,
    events: &[TransitionEvent],
    params: &MtrParams,
    extreme: Extreme,
) -> Result<QAItem, QagenError> {
    let labels = mtr_labels(events, duration, params)?;
    let spans = match extreme {
        Extreme::Highest => labels.highest,
        Extreme::Lowest => labels.lowest,
    };
    let mut meta = BTreeMap::new();
    meta.insert("extreme".to_string(), extreme.as_str().to_string());
    Ok(QAItem {
        id: format!("{track_id}-mtr"),
        task: Task::Mtr,
        track_id: track_id.to_string(),
        duration,
        question: format!(
            "When is(are) the {} arousal duration(s) in this audio? \
             Please answer with duration in seconds (ex. [72-110]).",
            extreme.as_str()
        ),
        options: None,
        gold: Gold::Intervals { spans },
        meta,
    })
}

/// All features extracted for one track.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackFeatures {
    pub track_id: String,
    pub duration: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sources: Vec<SourceActivity>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub transitions: Vec<TransitionEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct QagenConfig {
    /// Span volume must reach this fraction of the track's loudest span.
    pub volume_ratio: f64,
    pub k_options: usize,
    pub mtr: MtrParams,
}

impl Default for QagenConfig {
    fn default() -> Self {
        Self {
            volume_ratio: 0.5,
            k_options: 4,
            mtr: MtrParams::default(),
        }
    }
}

/// FNV-1a of the track id mixed with the run seed.
pub fn track_seed(track_id: &str, seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in track_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed
}

/// Items for one track in task order. Tasks whose inputs are missing or
/// filtered out are skipped.
pub fn generate_track(track: &TrackFeatures, cfg: &QagenConfig, seed: u64) -> Vec<QAItem> {
    let mut rng = rng(track_seed(&track.track_id, seed));
    let mut out = Vec::new();
    let id = track.track_id.as_str();

    let threshold = relative_threshold(&track.sources, cfg.volume_ratio);
    let audible: Vec<&SourceActivity> = track
        .sources
        .iter()
        .filter(|s| tsg_label(s, threshold, Edge::Onset).is_ok())
        .collect();
    if let Some(src) = audible.choose(&mut rng) {
        for edge in [Edge::Onset, Edge::Offset] {
            if let Ok(item) = tsg_item(id, src, threshold, edge) {
                out.push(item);
            }
        }
    }

    let events = &track.transitions;
    if !events.is_empty() {
        let target_index = rng.gen_range(0..events.len());
        if let Ok(item) = ltr_item(id, track.duration, events, target_index, cfg.k_options, rng.gen()) {
            out.push(item);
        }
        if let Ok(item) = tad_item(id, track.duration, events, target_index) {
            out.push(item);
        }
    }

    let mut distinct: Vec<&TransitionEvent> = Vec::new();
    for ev in events {
        if !distinct.iter().any(|d| d.time() == ev.time()) {
            distinct.push(ev);
        }
    }
    if distinct.len() >= 3 {
        let three: Vec<TransitionEvent> = distinct.choose_multiple(&mut rng, 3).map(|e| (*e).clone()).collect();
        if let Ok(item) = gto_item(id, track.duration, &three, rng.gen()) {
            out.push(item);
        }
    }

    let extreme = if rng.gen_bool(0.5) {
        Extreme::Highest
    } else {
        Extreme::Lowest
    };
    if let Ok(item) = mtr_item(id, track.duration, events, &cfg.mtr, extreme) {
        out.push(item);
    }
    out
}

/// Items for every track, ordered by track id then task.
pub fn generate(tracks: &[TrackFeatures], cfg: &QagenConfig, seed: u64) -> Vec<QAItem> {
    let mut sorted: Vec<&TrackFeatures> = tracks.iter().collect();
    sorted.sort_by(|a, b| a.track_id.cmp(&b.track_id));
    sorted.into_iter().flat_map(|t| generate_track(t, cfg, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, d: &str, delta: f64) -> TransitionEvent {
        TransitionEvent::new(t, d, delta).unwrap()
    }

    fn act(spans: &[(f64, f64, f64)]) -> SourceActivity {
        SourceActivity {
            source_id: "guitar".into(),
            events: spans
                .iter()
                .map(|&(start, end, volume)| ActivitySpan { start, end, volume })
                .collect(),
            track_duration: 300.0,
        }
    }

    #[test]
    fn tsg_examples() {
        let t = |a: &SourceActivity, th, e| tsg_label(a, th, e).unwrap().seconds();
        assert_eq!(t(&act(&[(10.0, 20.0, 0.9)]), 0.5, Edge::Onset), 10.0);
        assert_eq!(
            t(&act(&[(10.0, 20.0, 0.9), (100.0, 150.0, 0.8)]), 0.5, Edge::Offset),
            150.0
        );
        assert_eq!(t(&act(&[(5.0, 8.0, 0.1), (30.0, 60.0, 0.9)]), 0.5, Edge::Onset), 30.0);
        assert_eq!(
            tsg_label(&act(&[(5.0, 8.0, 0.1)]), 0.5, Edge::Onset),
            Err(QagenError::NoAudibleSpan)
        );
    }

    #[test]
    fn option_table_is_all_permutations() {
        let table = gto_option_table();
        assert_eq!(table[3], [GtoLabel::Y, GtoLabel::Z, GtoLabel::X]);
        for (i, a) in table.iter().enumerate() {
            let mut s = *a;
            s.sort();
            assert_eq!(s, GtoLabel::ALL);
            assert!(table[i + 1..].iter().all(|b| b != a));
        }
    }

    #[test]
    fn gto_worked_example() {
        assert_eq!(gto_gold_letter([200.0, 15.0, 160.0]).unwrap().letter(), 'D');
        assert_eq!(gto_gold_letter([1.0, 2.0, 3.0]).unwrap().letter(), 'A');
        assert_eq!(gto_gold_letter([1.0, 1.0, 3.0]), Err(QagenError::DuplicateTimestamps));
        let x = ev(200.0, "x", 0.0);
        let y = ev(15.0, "y", 0.0);
        let z = ev(160.0, "z", 0.0);
        let item = gto_item_labeled("t", 240.0, [&x, &y, &z]).unwrap();
        assert_eq!(
            item.gold,
            Gold::Choice {
                letter: Choice::from_letter('D').unwrap()
            }
        );
        assert_eq!(item.options.as_ref().unwrap()[3], "Y → Z → X");
        assert!(!item.question.contains("200"));
        item.validate().unwrap();
    }

    #[test]
    fn ltr_uses_all_descriptions_and_is_seeded() {
        let events: Vec<_> = ["a", "b", "c", "d"]
            .iter()
            .enumerate()
            .map(|(i, d)| ev(30.0 * (i + 1) as f64, d, 0.0))
            .collect();
        let item = ltr_item("t", 200.0, &events, 2, 4, 7).unwrap();
        let mut opts = item.options.clone().unwrap();
        let Gold::Choice { letter } = item.gold else { panic!() };
        assert_eq!(opts[letter.index()], "c");
        opts.sort();
        assert_eq!(opts, ["a", "b", "c", "d"]);
        assert_eq!(item, ltr_item("t", 200.0, &events, 2, 4, 7).unwrap());
        assert!(matches!(
            ltr_item("t", 200.0, &events, 0, 5, 7),
            Err(QagenError::InsufficientDistractors { .. })
        ));
    }

    #[test]
    fn ltr_question_embeds_time() {
        let events = vec![ev(133.0, "vocals enter", 1.0), ev(20.0, "drums drop", -1.0)];
        let item = ltr_item("t", 200.0, &events, 0, 2, 1).unwrap();
        assert_eq!(item.question, "What best describes the musical change at 133s?");
    }

    #[test]
    fn mtr_hand_example() {
        let events = vec![ev(30.0, "up", 2.0), ev(60.0, "down", -3.0)];
        let l = mtr_labels(&events, 90.0, &MtrParams::default()).unwrap();
        assert_eq!(l.levels, vec![0.0, 2.0, -1.0]);
        assert_eq!(l.highest, IntervalSet::from_pairs(&[(30.0, 60.0)]).unwrap());
        assert_eq!(l.lowest, IntervalSet::from_pairs(&[(60.0, 90.0)]).unwrap());
    }

    #[test]
    fn mtr_filters() {
        let flat = vec![ev(30.0, "a", 0.0), ev(60.0, "b", 0.0)];
        assert_eq!(
            mtr_labels(&flat, 90.0, &MtrParams::default()),
            Err(QagenError::FilteredOut(FilterReason::LowSeparation))
        );
        let short = vec![ev(30.0, "a", 3.0), ev(35.0, "b", -3.0)];
        assert_eq!(
            mtr_labels(&short, 90.0, &MtrParams::default()),
            Err(QagenError::FilteredOut(FilterReason::ShortSegment))
        );
        assert_eq!(
            mtr_labels(&flat[..1], 90.0, &MtrParams::default()),
            Err(QagenError::TooFewBoundaries(1))
        );
    }

    #[test]
    fn mtr_tied_segments_give_multi_span() {
        let events = vec![ev(30.0, "a", 2.0), ev(60.0, "b", -2.0), ev(90.0, "c", 2.2)];
        let l = mtr_labels(&events, 120.0, &MtrParams::default()).unwrap();
        assert_eq!(
            l.highest,
            IntervalSet::from_pairs(&[(30.0, 60.0), (90.0, 120.0)]).unwrap()
        );
    }

    #[test]
    fn mtr_caps_spans() {
        // six alternating peaks, the two weakest are dropped
        let mut events = Vec::new();
        let peaks = [2.0, 2.3, 2.1, 2.4, 2.2, 2.45];
        let mut level = 0.0;
        for (i, p) in peaks.iter().enumerate() {
            let t = 20.0 + 40.0 * i as f64;
            events.push(ev(t, "up", p - level));
            events.push(ev(t + 20.0, "down", -p));
            level = 0.0;
        }
        let l = mtr_labels(&events, 260.0, &MtrParams::default()).unwrap();
        assert_eq!(l.highest.len(), 4);
        let starts: Vec<f64> = l.highest.intervals().iter().map(|iv| iv.start()).collect();
        assert_eq!(starts, vec![60.0, 140.0, 180.0, 220.0]);
    }

    #[test]
    fn generation_is_deterministic_and_valid() {
        let track = TrackFeatures {
            track_id: "t1".into(),
            duration: 240.0,
            sources: vec![act(&[(12.0, 200.0, 0.8)])],
            transitions: vec![
                ev(40.0, "drums enter", 2.0),
                ev(100.0, "key change", 1.0),
                ev(160.0, "breakdown", -3.0),
                ev(200.0, "outro", -1.0),
            ],
        };
        let cfg = QagenConfig::default();
        let a = generate(core::slice::from_ref(&track), &cfg, 3);
        assert_eq!(a, generate(core::slice::from_ref(&track), &cfg, 3));
        let tasks: Vec<Task> = a.iter().map(|i| i.task).collect();
        assert_eq!(
            tasks,
            vec![Task::Tsg, Task::Tsg, Task::Ltr, Task::Tad, Task::Gto, Task::Mtr]
        );
        for item in &a {
            item.validate().unwrap();
        }
    }

    #[test]
    fn track_seed_mixes_id() {
        assert_ne!(track_seed("a", 0), track_seed("b", 0));
        assert_eq!(track_seed("", 0), 0xcbf2_9ce4_8422_2325);
    }
}
