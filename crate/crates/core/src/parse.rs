//! Pattern extraction of typed answers from free-form model responses.
//!
//! Parsing never fails loudly: anything that cannot be read as the requested
//! kind yields a [`ParsedAnswer`] with no value, which scorers treat as an
//! invalid format.
//!
//! Timestamps are read in priority order: clock forms (`M:SS`, `MM:SS`),
//! then decimal seconds with an optional unit (`s`, `sec`, `seconds`). When
//! the response carries an answer marker (the word "answer", or failing that
//! the final line of a multi-line response) the last candidate inside the
//! marked region wins; otherwise the first candidate does, and two different
//! clock values with no marker are rejected as ambiguous.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::qagen::{gto_option_table, GtoLabel};
use crate::task::Choice;
use crate::temporal::{Interval, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AnswerKind {
    Timestamp,
    IntervalList,
    Choice,
    Ordering,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AnswerValue {
    Timestamp(Timestamp),
    IntervalList(Vec<Interval>),
    Choice(Choice),
    Ordering(Choice),
    Text(String),
}

impl AnswerValue {
    pub fn kind(&self) -> AnswerKind {
        match self {
            AnswerValue::Timestamp(_) => AnswerKind::Timestamp,
            AnswerValue::IntervalList(_) => AnswerKind::IntervalList,
            AnswerValue::Choice(_) => AnswerKind::Choice,
            AnswerValue::Ordering(_) => AnswerKind::Ordering,
            AnswerValue::Text(_) => AnswerKind::Text,
        }
    }
}

/// The typed reading of one response. `value` is `None` exactly when the
/// format was not recognized.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParsedAnswer {
    kind: AnswerKind,
    value: Option<AnswerValue>,
    raw: String,
}

impl ParsedAnswer {
    fn ok(value: AnswerValue, raw: &str) -> Self {
        Self {
            kind: value.kind(),
            value: Some(value),
            raw: raw.to_string(),
        }
    }

    /// An unparseable response of the given kind.
    pub fn invalid(kind: AnswerKind, raw: &str) -> Self {
        Self {
            kind,
            value: None,
            raw: raw.to_string(),
        }
    }

    pub fn kind(&self) -> AnswerKind {
        self.kind
    }

    pub fn value(&self) -> Option<&AnswerValue> {
        self.value.as_ref()
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn format_ok(&self) -> bool {
        self.value.is_some()
    }

    pub fn timestamp(&self) -> Option<Timestamp> {
        match self.value {
            Some(AnswerValue::Timestamp(t)) => Some(t),
            _ => None,
        }
    }

    pub fn intervals(&self) -> Option<&[Interval]> {
        match &self.value {
            Some(AnswerValue::IntervalList(v)) => Some(v),
            _ => None,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match &self.value {
            Some(AnswerValue::Text(t)) => Some(t),
            _ => None,
        }
    }

    /// The selected letter for choice and ordering answers.
    pub fn choice(&self) -> Option<Choice> {
        match self.value {
            Some(AnswerValue::Choice(c)) | Some(AnswerValue::Ordering(c)) => Some(c),
            _ => None,
        }
    }
}

const SECOND_UNITS: &[&str] = &["s", "sec", "secs", "second", "seconds"];
const OTHER_UNITS: &[&str] = &[
    "bpm", "hz", "khz", "db", "ms", "min", "mins", "minute", "minutes", "h", "hr", "hrs", "hour", "hours", "bar",
    "bars", "beat", "beats", "measure", "measures", "percent", "times", "x",
];
const CHOICE_FILLERS: &[&str] = &[
    "is", "would", "be", "should", "option", "choice", "letter", "the", "correct", "final", "my", "it", "s", "will",
];
const SEQUENCE_WORDS: &[&str] = &["then", "and", "followed", "by", "finally", "before"];
const SEQUENCE_PUNCT: &[char] = &[
    '→', '⟶', '⇒', '➔', '➜', '-', '–', '—', '>', '<', ',', ';', '(', ')', '[', ']', '=', '|', '/', '*',
];

#[derive(Debug, Clone, Copy)]
struct TimeToken {
    start: usize,
    seconds: f64,
    clock: bool,
}

#[derive(Debug, Clone)]
struct Word {
    start: usize,
    end: usize,
    lower: String,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn words(chars: &[char]) -> Vec<Word> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if is_word_char(chars[i]) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            let lower = chars[start..i].iter().flat_map(|c| c.to_lowercase()).collect();
            out.push(Word { start, end: i, lower });
        } else {
            i += 1;
        }
    }
    out
}

fn read_digits(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    i
}

fn digits_value(chars: &[char]) -> f64 {
    let s: String = chars.iter().collect();
    s.parse().unwrap_or(f64::NAN)
}

/// Reads a number (optionally with a fraction) starting at `i`; returns its
/// value and the index just past it.
fn read_decimal(chars: &[char], i: usize) -> (f64, usize) {
    let mut end = read_digits(chars, i);
    if end + 1 < chars.len() && chars[end] == '.' && chars[end + 1].is_ascii_digit() {
        end = read_digits(chars, end + 1);
    }
    (digits_value(&chars[i..end]), end)
}

fn read_alpha(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_alphabetic() {
        i += 1;
    }
    i
}

fn lower_word(chars: &[char]) -> String {
    chars.iter().flat_map(|c| c.to_lowercase()).collect()
}

/// Tries to read a clock form `M:SS(.f)` or `MM:SS(.f)` at `i`.
/// `Some(None)` means a clock-shaped token with an invalid value.
fn read_clock(chars: &[char], i: usize, int_end: usize) -> Option<(Option<f64>, usize)> {
    if int_end >= chars.len() || chars[int_end] != ':' {
        return None;
    }
    let sec_start = int_end + 1;
    let sec_end = read_digits(chars, sec_start);
    if sec_end - sec_start != 2 {
        return None;
    }
    let (frac, end) = if sec_end + 1 < chars.len() && chars[sec_end] == '.' && chars[sec_end + 1].is_ascii_digit() {
        let e = read_digits(chars, sec_end + 1);
        (digits_value(&chars[sec_end..e]), e)
    } else {
        (0.0, sec_end)
    };
    if end < chars.len() && (is_word_char(chars[end]) || chars[end] == ':') {
        // H:MM:SS or glued text
        return Some((None, end));
    }
    let minutes = int_end - i;
    let secs = digits_value(&chars[sec_start..sec_end]);
    if minutes > 2 || secs >= 60.0 {
        return Some((None, end));
    }
    let value = digits_value(&chars[i..int_end]) * 60.0 + secs + frac;
    Some((Some(value), end))
}

fn scan_times(chars: &[char]) -> Vec<TimeToken> {
    let mut out = Vec::new();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if !c.is_ascii_digit() {
            i += 1;
            continue;
        }
        if i > 0 && (is_word_char(chars[i - 1]) || chars[i - 1] == '.' || chars[i - 1] == ':') {
            // digits glued to a word or a previous number
            i = read_digits(chars, i);
            continue;
        }
        let negative =
            i > 0 && chars[i - 1] == '-' && (i < 2 || !(chars[i - 2].is_alphanumeric() || chars[i - 2] == '.'));
        let int_end = read_digits(chars, i);

        if let Some((value, end)) = read_clock(chars, i, int_end) {
            if let (Some(v), false) = (value, negative) {
                out.push(TimeToken {
                    start: i,
                    seconds: v,
                    clock: true,
                });
            }
            i = end;
            continue;
        }

        let (value, mut end) = read_decimal(chars, i);
        let mut accepted = !negative && value.is_finite();
        if end < n {
            let next = chars[end];
            if next.is_alphabetic() {
                let w_end = read_alpha(chars, end);
                let w = lower_word(&chars[end..w_end]);
                if SECOND_UNITS.contains(&w.as_str()) && !(w_end < n && is_word_char(chars[w_end])) {
                    end = w_end;
                } else {
                    accepted = false;
                    end = w_end;
                }
            } else if next == '%' || next == ':' || next == '_' {
                accepted = false;
            } else if next == ' ' || next == '\t' {
                let mut k = end;
                while k < n && (chars[k] == ' ' || chars[k] == '\t') {
                    k += 1;
                }
                if k < n && chars[k].is_alphabetic() {
                    let w_end = read_alpha(chars, k);
                    let glued = w_end < n && is_word_char(chars[w_end]);
                    let w = lower_word(&chars[k..w_end]);
                    if !glued && SECOND_UNITS.contains(&w.as_str()) {
                        end = w_end;
                    } else if !glued && OTHER_UNITS.contains(&w.as_str()) {
                        accepted = false;
                    }
                } else if k < n && chars[k] == '%' {
                    accepted = false;
                }
            }
        }
        if accepted {
            out.push(TimeToken {
                start: i,
                seconds: value,
                clock: false,
            });
        }
        i = end.max(i + 1);
    }
    out
}

/// Start of the marked answer region, if the response carries a marker.
fn marker_start(chars: &[char], words: &[Word]) -> Option<usize> {
    if let Some(w) = words.iter().rev().find(|w| w.lower == "answer") {
        return Some(w.end);
    }
    let mut lines = Vec::new();
    let mut line_start = 0;
    for (i, &c) in chars.iter().enumerate() {
        if c == '\n' {
            lines.push((line_start, i));
            line_start = i + 1;
        }
    }
    lines.push((line_start, chars.len()));
    let non_empty: Vec<_> = lines
        .into_iter()
        .filter(|&(s, e)| chars[s..e].iter().any(|c| !c.is_whitespace()))
        .collect();
    if non_empty.len() >= 2 {
        non_empty.last().map(|&(s, _)| s)
    } else {
        None
    }
}

/// Extracts a single timestamp in seconds.
pub fn parse_timestamp(text: &str) -> ParsedAnswer {
    let chars: Vec<char> = text.chars().collect();
    let all = scan_times(&chars);
    let has_clock = all.iter().any(|t| t.clock);
    let candidates: Vec<TimeToken> = all.into_iter().filter(|t| t.clock == has_clock).collect();
    if candidates.is_empty() {
        return ParsedAnswer::invalid(AnswerKind::Timestamp, text);
    }

    let words = words(&chars);
    let marked = marker_start(&chars, &words).and_then(|m| candidates.iter().rev().find(|t| t.start >= m).copied());

    let picked = match marked {
        Some(t) => Some(t),
        None if has_clock => {
            let first = candidates[0];
            let conflict = candidates.iter().any(|t| t.seconds != first.seconds);
            (!conflict).then_some(first)
        }
        None => Some(candidates[0]),
    };

    match picked.and_then(|t| Timestamp::new(t.seconds).ok()) {
        Some(ts) => ParsedAnswer::ok(AnswerValue::Timestamp(ts), text),
        None => ParsedAnswer::invalid(AnswerKind::Timestamp, text),
    }
}

fn skip_ws(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    i
}

/// A span endpoint inside brackets: clock form or seconds with optional unit.
fn read_endpoint(chars: &[char], i: usize) -> Option<(f64, usize)> {
    if i >= chars.len() || !chars[i].is_ascii_digit() {
        return None;
    }
    let int_end = read_digits(chars, i);
    let (value, mut end) = match read_clock(chars, i, int_end) {
        Some((Some(v), end)) => (v, end),
        Some((None, _)) => return None,
        None => read_decimal(chars, i),
    };
    if end < chars.len() && chars[end].is_alphabetic() {
        let w_end = read_alpha(chars, end);
        if !SECOND_UNITS.contains(&lower_word(&chars[end..w_end]).as_str()) {
            return None;
        }
        end = w_end;
    }
    Some((value, end))
}

/// Reads `[a-b]` at `i` (which must be `[`); returns the endpoints and the
/// index past `]`.
fn read_span(chars: &[char], i: usize) -> Option<(f64, f64, usize)> {
    let mut k = skip_ws(chars, i + 1);
    let (a, e) = read_endpoint(chars, k)?;
    k = skip_ws(chars, e);
    match chars.get(k) {
        Some('-') | Some('–') | Some('—') | Some('~') => k += 1,
        Some('t') | Some('T') if chars.get(k + 1).is_some_and(|c| c.eq_ignore_ascii_case(&'o')) => k += 2,
        _ => return None,
    }
    k = skip_ws(chars, k);
    let (b, e) = read_endpoint(chars, k)?;
    k = skip_ws(chars, e);
    (chars.get(k) == Some(&']')).then_some((a, b, k + 1))
}

/// Extracts bracketed `[START-END]` spans (seconds or clock form).
pub fn parse_interval_list(text: &str) -> ParsedAnswer {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '[' {
            if let Some((a, b, end)) = read_span(&chars, i) {
                match Interval::new(a, b) {
                    Ok(iv) => spans.push(iv),
                    Err(_) => return ParsedAnswer::invalid(AnswerKind::IntervalList, text),
                }
                i = end;
                continue;
            }
        }
        i += 1;
    }
    if spans.is_empty() {
        ParsedAnswer::invalid(AnswerKind::IntervalList, text)
    } else {
        ParsedAnswer::ok(AnswerValue::IntervalList(spans), text)
    }
}

fn single_letter(w: &Word, chars: &[char]) -> Option<char> {
    (w.end - w.start == 1).then(|| chars[w.start])
}

/// A letter from `allowed` that directly follows an answer marker, skipping
/// connective words ("is", "option", ...).
fn marker_letter(chars: &[char], words: &[Word], allowed: &[Choice]) -> Option<Choice> {
    let mut found = None;
    for (idx, w) in words.iter().enumerate() {
        if w.lower != "answer" && w.lower != "answers" {
            continue;
        }
        for next in &words[idx + 1..] {
            if CHOICE_FILLERS.contains(&next.lower.as_str()) {
                continue;
            }
            if let Some(c) = single_letter(next, chars)
                .and_then(Choice::from_letter)
                .filter(|c| allowed.contains(c))
            {
                // keep the last marker-adjacent letter
                found = Some(c);
            }
            break;
        }
    }
    found
}

fn choice_with_tiers(chars: &[char], words: &[Word], allowed: &[Choice]) -> Option<Choice> {
    if let Some(c) = marker_letter(chars, words, allowed) {
        return Some(c);
    }
    let letters: Vec<(&Word, char, Choice)> = words
        .iter()
        .filter_map(|w| {
            let ch = single_letter(w, chars)?;
            let c = Choice::from_letter(ch).filter(|c| allowed.contains(c))?;
            Some((w, ch, c))
        })
        .collect();

    let formatted = letters.iter().find(|(w, _, _)| {
        let before = w.start.checked_sub(1).map(|k| chars[k]);
        let after = chars.get(w.end).copied();
        before == Some('(') || matches!(after, Some('.') | Some(')') | Some(':'))
    });
    if let Some((_, _, c)) = formatted {
        return Some(*c);
    }
    letters
        .iter()
        .find(|(_, ch, _)| ch.is_ascii_uppercase())
        .or_else(|| letters.first())
        .map(|(_, _, c)| *c)
}

/// Extracts a multiple-choice letter from `allowed`.
///
/// Preference order: a letter right after an answer marker, a letter written
/// as an option label (`B.`, `(B)`, `B)`), the first standalone capital,
/// then the first standalone lowercase letter. Letters inside words never count.
pub fn parse_choice(text: &str, allowed: &[Choice]) -> ParsedAnswer {
    let chars: Vec<char> = text.chars().collect();
    let words = words(&chars);
    match choice_with_tiers(&chars, &words, allowed) {
        Some(c) => ParsedAnswer::ok(AnswerValue::Choice(c), text),
        None => ParsedAnswer::invalid(AnswerKind::Choice, text),
    }
}

fn xyz_label(w: &Word) -> Option<GtoLabel> {
    match w.lower.as_str() {
        "x" => Some(GtoLabel::X),
        "y" => Some(GtoLabel::Y),
        "z" => Some(GtoLabel::Z),
        _ => None,
    }
}

fn compact_sequence(w: &Word, chars: &[char]) -> Option<Vec<GtoLabel>> {
    let s = &chars[w.start..w.end];
    (s.len() == 3 && s.iter().all(|c| matches!(c, 'X' | 'Y' | 'Z'))).then(|| {
        s.iter()
            .map(|c| match c {
                'X' => GtoLabel::X,
                'Y' => GtoLabel::Y,
                _ => GtoLabel::Z,
            })
            .collect()
    })
}

fn sequence_gap(chars: &[char], words: &[Word], from: usize, to: usize) -> bool {
    let inner: Vec<&Word> = words.iter().filter(|w| w.start >= from && w.end <= to).collect();
    if inner.iter().any(|w| !SEQUENCE_WORDS.contains(&w.lower.as_str())) {
        return false;
    }
    (from..to).all(|k| {
        let c = chars[k];
        c.is_whitespace() || SEQUENCE_PUNCT.contains(&c) || inner.iter().any(|w| (w.start..w.end).contains(&k))
    })
}

/// First run of three or more X/Y/Z labels joined only by arrows, commas or
/// connective words.
fn first_sequence(chars: &[char], words: &[Word]) -> Option<Vec<GtoLabel>> {
    let mut run: Vec<GtoLabel> = Vec::new();
    let mut last_end = 0;
    for w in words {
        if let Some(label) = xyz_label(w) {
            if !run.is_empty() && sequence_gap(chars, words, last_end, w.start) {
                run.push(label);
            } else {
                if run.len() >= 3 {
                    return Some(run);
                }
                run = alloc::vec![label];
            }
            last_end = w.end;
        } else if SEQUENCE_WORDS.contains(&w.lower.as_str()) && !run.is_empty() {
            continue;
        } else {
            if run.len() >= 3 {
                return Some(run);
            }
            run.clear();
            if let Some(seq) = compact_sequence(w, chars) {
                return Some(seq);
            }
        }
    }
    (run.len() >= 3).then_some(run)
}

/// Extracts a chronological-ordering answer: either an option letter or an
/// explicit X/Y/Z sequence canonicalized through the option table.
pub fn parse_ordering(text: &str) -> ParsedAnswer {
    let chars: Vec<char> = text.chars().collect();
    let words = words(&chars);
    let all: Vec<Choice> = Choice::first(6).collect();

    if let Some(c) = marker_letter(&chars, &words, &all) {
        return ParsedAnswer::ok(AnswerValue::Ordering(c), text);
    }
    if let Some(seq) = first_sequence(&chars, &words) {
        let letter = (seq.len() == 3)
            .then(|| {
                gto_option_table()
                    .iter()
                    .position(|perm| perm[..] == seq[..])
                    .and_then(Choice::from_index)
            })
            .flatten();
        return match letter {
            Some(c) => ParsedAnswer::ok(AnswerValue::Ordering(c), text),
            None => ParsedAnswer::invalid(AnswerKind::Ordering, text),
        };
    }
    match choice_with_tiers(&chars, &words, &all) {
        Some(c) => ParsedAnswer::ok(AnswerValue::Ordering(c), text),
        None => ParsedAnswer::invalid(AnswerKind::Ordering, text),
    }
}

/// Free-text answer: the trimmed response, invalid when blank.
pub fn parse_text(text: &str) -> ParsedAnswer {
    let t = text.trim();
    if t.is_empty() {
        ParsedAnswer::invalid(AnswerKind::Text, text)
    } else {
        ParsedAnswer::ok(AnswerValue::Text(t.to_string()), text)
    }
}

/// Canonical response text for a timestamp.
pub fn format_timestamp(t: Timestamp) -> String {
    format!("{}", t.seconds())
}

/// Canonical response text for an interval list: `[a-b], [c-d]`.
pub fn format_intervals(spans: &[Interval]) -> String {
    spans
        .iter()
        .map(|iv| format!("[{}-{}]", iv.start(), iv.end()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical ordering text, e.g. `Y → Z → X`.
pub fn format_ordering(c: Choice) -> String {
    gto_option_table()[c.index()]
        .iter()
        .map(|l| l.as_char().to_string())
        .collect::<Vec<_>>()
        .join(" → ")
}

/// Canonical response text for any answer value.
pub fn format_answer(value: &AnswerValue) -> String {
    match value {
        AnswerValue::Timestamp(t) => format_timestamp(*t),
        AnswerValue::IntervalList(spans) => format_intervals(spans),
        AnswerValue::Choice(c) | AnswerValue::Ordering(c) => c.to_string(),
        AnswerValue::Text(t) => t.clone(),
    }
}
