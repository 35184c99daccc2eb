//! Token budgets, transition-aware frame selection and sinusoidal time
//! embeddings for the audio token stream.

use alloc::vec;
use alloc::vec::Vec;

use crate::temporal::{frame_center, frame_count, Timestamp};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("budget {budget} exceeds {frames} frames")]
    BudgetExceedsFrames { budget: usize, frames: usize },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("embedding dimension must be even and positive, got {0}")]
    OddDimension(usize),
    #[error("embedding base must exceed 1, got {0}")]
    InvalidBase(f64),
    #[error("profile has {actual} frames, expected {expected}")]
    ProfileLength { expected: usize, actual: usize },
    #[error("probability {value} at frame {index} is outside [0, 1]")]
    ProbabilityRange { index: usize, value: f64 },
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("coverage fraction must lie in [0, 1], got {0}")]
    CoverageFraction(f64),
}

/// Per-frame transition probabilities for one track.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawProfile"))]
pub struct TransitionProfile {
    probs: Vec<f64>,
    frame_rate_hz: f64,
    duration: f64,
}

#[cfg_attr(feature = "serde", derive(serde::Deserialize))]
#[allow(dead_code)]
struct RawProfile {
    probs: Vec<f64>,
    frame_rate_hz: f64,
    duration: f64,
}

impl TryFrom<RawProfile> for TransitionProfile {
    type Error = SamplingError;

    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        TransitionProfile::new(raw.probs, raw.frame_rate_hz, raw.duration)
    }
}

fn positive(what: &'static str, value: f64) -> Result<(), SamplingError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SamplingError::NonPositive { what, value })
    }
}

impl TransitionProfile {
    pub fn new(probs: Vec<f64>, frame_rate_hz: f64, duration: f64) -> Result<Self, SamplingError> {
        positive("frame_rate_hz", frame_rate_hz)?;
        positive("duration", duration)?;
        let expected = frame_count(duration, frame_rate_hz);
        if probs.len() != expected {
            return Err(SamplingError::ProfileLength {
                expected,
                actual: probs.len(),
            });
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(SamplingError::ProbabilityRange { index, value });
        }
        Ok(Self {
            probs,
            frame_rate_hz,
            duration,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn frames(&self) -> usize {
        self.probs.len()
    }

    /// Frame-center time of `index`, in seconds.
    pub fn time_of(&self, index: usize) -> f64 {
        frame_center(index, self.frame_rate_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SamplingConfig {
    pub rate_tokens_per_sec: f64,
    pub max_tokens: usize,
    /// Share of the budget placed uniformly before probability-driven placement.
    pub coverage_fraction: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            rate_tokens_per_sec: 6.66,
            max_tokens: 2000,
            coverage_fraction: 0.5,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), SamplingError> {
        positive("rate_tokens_per_sec", self.rate_tokens_per_sec)?;
        if self.max_tokens == 0 {
            return Err(SamplingError::ZeroBudget);
        }
        if !(0.0..=1.0).contains(&self.coverage_fraction) {
            return Err(SamplingError::CoverageFraction(self.coverage_fraction));
        }
        Ok(())
    }
}

/// `min(floor(duration · rate), max_tokens)`.
pub fn token_budget(duration: f64, cfg: &SamplingConfig) -> usize {
    let raw = duration * cfg.rate_tokens_per_sec;
    // absorb products like 2.9999999999999996 that should be integral
    let tokens = libm::floor(raw + 1e-9).max(0.0) as usize;
    tokens.min(cfg.max_tokens)
}

/// `count` anchors at the centers of `count` equal bins over `frames` frames.
fn coverage_indices(frames: usize, count: usize) -> impl Iterator<Item = usize> {
    (0..count).map(move |k| (2 * k + 1) * frames / (2 * count))
}

/// Position of a frame in a fixed low-discrepancy order: ranking by the
/// bit-reversed index visits 0, n/2, n/4, 3n/4, ... so a prefix of the order
/// is spread across the track.
fn spread_key(index: usize) -> u64 {
    (index as u64).reverse_bits()
}

/// Selects exactly `budget` distinct frames, ascending.
///
/// `round(coverage_fraction · budget)` frames are anchored at the centers of
/// equal bins over the track. The remaining seats are apportioned over the
/// other frames in proportion to their transition probability by largest
/// remainders. With a capacity of one token per frame this amounts to taking
/// the highest-probability frames: any frame whose quota reaches one is
/// filled, and once no quota does, the fractional quotas are themselves
/// proportional to probability. Equal probabilities are ordered by
/// [`spread_key`] rather than by index so that ties spread over the track.
/// An all-zero profile is treated as uniform.
pub fn allocate_tokens(
    profile: &TransitionProfile,
    budget: usize,
    cfg: &SamplingConfig,
) -> Result<Vec<usize>, SamplingError> {
    let frames = profile.frames();
    if budget == 0 {
        return Err(SamplingError::ZeroBudget);
    }
    if budget > frames {
        return Err(SamplingError::BudgetExceedsFrames { budget, frames });
    }
    if !(0.0..=1.0).contains(&cfg.coverage_fraction) {
        return Err(SamplingError::CoverageFraction(cfg.coverage_fraction));
    }

    let anchors = (libm::round(cfg.coverage_fraction * budget as f64) as usize).min(budget);
    let mut selected = vec![false; frames];
    for i in coverage_indices(frames, anchors) {
        selected[i] = true;
    }

    let probs = profile.probs();
    let free_mass: f64 = (0..frames).filter(|&i| !selected[i]).map(|i| probs[i]).sum();
    let weight = |i: usize| if free_mass > 0.0 { probs[i] } else { 1.0 };

    let mut free: Vec<usize> = (0..frames).filter(|&i| !selected[i]).collect();
    free.sort_by(|&a, &b| weight(b).total_cmp(&weight(a)).then(spread_key(a).cmp(&spread_key(b))));
    for &i in free.iter().take(budget - anchors) {
        selected[i] = true;
    }

    Ok(selected
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| s.then_some(i))
        .collect())
}

/// Interleaved `(sin(t/base^{2k/dim}), cos(t/base^{2k/dim}))` for
/// `k = 0..dim/2`.
pub fn time_embedding(t: Timestamp, dim: usize, base: f64) -> Result<Vec<f64>, SamplingError> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(SamplingError::OddDimension(dim));
    }
    if !(base.is_finite() && base > 1.0) {
        return Err(SamplingError::InvalidBase(base));
    }
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim / 2 {
        let angle = t.seconds() / libm::pow(base, (2 * k) as f64 / dim as f64);
        out.push(libm::sin(angle));
        out.push(libm::cos(angle));
    }
    Ok(out)
}

/// Conventional sinusoidal base.
pub const DEFAULT_EMBEDDING_BASE: f64 = 10_000.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(probs: Vec<f64>) -> TransitionProfile {
        let n = probs.len() as f64;
        TransitionProfile::new(probs, 1.0, n).unwrap()
    }

    #[test]
    fn budget_examples() {
        let hi = SamplingConfig::default();
        assert_eq!(token_budget(300.0, &hi), 1998);
        assert_eq!(token_budget(60.0, &hi), 399);
        assert_eq!(token_budget(400.0, &hi), 2000);
        let lo = SamplingConfig {
            rate_tokens_per_sec: 3.33,
            max_tokens: 1000,
            ..hi
        };
        assert_eq!(token_budget(300.0, &lo), 999);
        let exact = SamplingConfig {
            rate_tokens_per_sec: 10.0,
            max_tokens: 3000,
            ..hi
        };
        assert_eq!(token_budget(300.0, &exact), 3000);
    }

    #[test]
    fn profile_validation() {
        assert!(TransitionProfile::new(vec![0.0; 9], 1.0, 10.0).is_err());
        assert!(TransitionProfile::new(vec![1.2; 10], 1.0, 10.0).is_err());
        assert!(TransitionProfile::new(vec![0.5; 50], 5.0, 10.0).is_ok());
    }

    #[test]
    fn full_coverage_is_evenly_spaced() {
        let cfg = SamplingConfig {
            coverage_fraction: 1.0,
            ..Default::default()
        };
        let idx = allocate_tokens(&profile(vec![0.3; 100]), 10, &cfg).unwrap();
        assert_eq!(idx, vec![5, 15, 25, 35, 45, 55, 65, 75, 85, 95]);
    }

    #[test]
    fn zero_profile_equals_uniform_profile() {
        let cfg = SamplingConfig::default();
        let a = allocate_tokens(&profile(vec![0.0; 200]), 40, &cfg).unwrap();
        let b = allocate_tokens(&profile(vec![0.7; 200]), 40, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
    }

    #[test]
    fn spike_attracts_tokens() {
        let mut probs = vec![0.05; 1000];
        for p in &mut probs[400..500] {
            *p = 0.9;
        }
        let idx = allocate_tokens(&profile(probs), 100, &SamplingConfig::default()).unwrap();
        assert_eq!(idx.len(), 100);
        let in_spike = idx.iter().filter(|&&i| (400..500).contains(&i)).count();
        assert!(in_spike >= 50, "{in_spike}");
        for start in (0..1000).step_by(100).filter(|&s| s != 400) {
            let flat = idx.iter().filter(|&&i| (start..start + 100).contains(&i)).count();
            assert!(in_spike > flat);
        }
    }

    #[test]
    fn uniform_ties_spread_out() {
        let cfg = SamplingConfig {
            coverage_fraction: 0.0,
            ..Default::default()
        };
        let idx = allocate_tokens(&profile(vec![0.5; 64]), 4, &cfg).unwrap();
        assert_eq!(idx, vec![0, 16, 32, 48]);
    }

    #[test]
    fn budget_errors() {
        let p = profile(vec![0.1; 10]);
        let cfg = SamplingConfig::default();
        assert_eq!(
            allocate_tokens(&p, 11, &cfg),
            Err(SamplingError::BudgetExceedsFrames { budget: 11, frames: 10 })
        );
        assert_eq!(allocate_tokens(&p, 0, &cfg), Err(SamplingError::ZeroBudget));
        assert_eq!(allocate_tokens(&p, 10, &cfg).unwrap(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sparse_profile_fills_remaining_seats() {
        let mut probs = vec![0.0; 20];
        probs[17] = 1.0;
        let cfg = SamplingConfig {
            coverage_fraction: 0.0,
            ..Default::default()
        };
        let idx = allocate_tokens(&profile(probs), 3, &cfg).unwrap();
        assert_eq!(idx, vec![0, 16, 17]);
    }

    #[test]
    fn embedding_examples() {
        let e = time_embedding(Timestamp::ZERO, 8, DEFAULT_EMBEDDING_BASE).unwrap();
        assert_eq!(e, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let pi = time_embedding(Timestamp::new(core::f64::consts::PI).unwrap(), 4, 10_000.0).unwrap();
        assert!(pi[0].abs() < 1e-12);
        assert!((pi[1] + 1.0).abs() < 1e-12);
        let big = time_embedding(Timestamp::new(1234.5).unwrap(), 64, 10_000.0).unwrap();
        assert!(big.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(
            time_embedding(Timestamp::ZERO, 7, 10_000.0),
            Err(SamplingError::OddDimension(7))
        );
        assert!(time_embedding(Timestamp::ZERO, 8, 1.0).is_err());
    }
}
