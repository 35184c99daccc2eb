use core::fmt;
use core::str::FromStr;

/// The five benchmark task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Task {
    /// Temporal source grounding: when a source starts or stops.
    #[cfg_attr(feature = "serde", serde(rename = "TSG"))]
    Tsg,
    /// Local transition recognition: multiple choice over descriptions.
    #[cfg_attr(feature = "serde", serde(rename = "LTR"))]
    Ltr,
    /// Transition-aware description: free text.
    #[cfg_attr(feature = "serde", serde(rename = "TAD"))]
    Tad,
    /// Global temporal ordering of three transitions.
    #[cfg_attr(feature = "serde", serde(rename = "GTO"))]
    Gto,
    /// Mood trajectory reasoning: interval lists.
    #[cfg_attr(feature = "serde", serde(rename = "MTR"))]
    Mtr,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Tsg, Task::Ltr, Task::Tad, Task::Gto, Task::Mtr];

    pub fn code(self) -> &'static str {
        match self {
            Task::Tsg => "TSG",
            Task::Ltr => "LTR",
            Task::Tad => "TAD",
            Task::Gto => "GTO",
            Task::Mtr => "MTR",
        }
    }

    pub fn has_options(self) -> bool {
        matches!(self, Task::Ltr | Task::Gto)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task code")]
pub struct UnknownTask;

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(s.trim()))
            .ok_or(UnknownTask)
    }
}

/// A multiple-choice option letter, `A` through `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "char", into = "char"))]
pub struct Choice(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("option letter must be A-F, got {0:?}")]
pub struct InvalidChoice(pub char);

impl Choice {
    pub const MAX_OPTIONS: usize = 6;

    pub fn from_index(index: usize) -> Option<Self> {
        (index < Self::MAX_OPTIONS).then_some(Self(index as u8))
    }

    pub fn from_letter(c: char) -> Option<Self> {
        let up = c.to_ascii_uppercase();
        ('A'..='F').contains(&up).then(|| Self(up as u8 - b'A'))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }

    /// The first `n` letters, `A..`.
    pub fn first(n: usize) -> impl Iterator<Item = Choice> {
        (0..n.min(Self::MAX_OPTIONS)).map(|i| Choice(i as u8))
    }
}

impl TryFrom<char> for Choice {
    type Error = InvalidChoice;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        Choice::from_letter(c).ok_or(InvalidChoice(c))
    }
}

impl From<Choice> for char {
    fn from(c: Choice) -> char {
        c.letter()
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}
