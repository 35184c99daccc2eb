//! Scalar rewards for timestamp-centric RL fine-tuning.
//!
//! Both rewards share the same penalty structure:
//! `base − out_penalty·[out of range] − fmt_penalty·[unparseable]`.
//! An unparseable answer has no distance or overlap term and no range term,
//! so it always scores exactly `−fmt_penalty`.

use crate::metrics::MetricError;
use crate::parse::ParsedAnswer;
use crate::temporal::{gaussian_smooth, rasterize, IntervalSet, TemporalError, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RewardConfig {
    /// Seconds of error that decay the timestamp reward by `1/e`.
    pub tsg_scale: f64,
    pub out_penalty: f64,
    pub fmt_penalty: f64,
    /// Soft-F1 smoothing width, seconds.
    pub sigma: f64,
    /// Soft-F1 kernel half-width, seconds.
    pub radius: f64,
    /// Mask resolution for soft-F1, frames per second.
    pub resolution_hz: f64,
    pub epsilon: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            tsg_scale: 15.0,
            out_penalty: 0.5,
            fmt_penalty: 1.0,
            sigma: 15.0,
            radius: 60.0,
            resolution_hz: 1.0,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardConfigError {
    #[error("reward parameter {name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardConfigError> {
        let fields = [
            ("tsg_scale", self.tsg_scale),
            ("out_penalty", self.out_penalty),
            ("fmt_penalty", self.fmt_penalty),
            ("sigma", self.sigma),
            ("radius", self.radius),
            ("resolution_hz", self.resolution_hz),
            ("epsilon", self.epsilon),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            Some(&(name, value)) => Err(RewardConfigError::NotPositive { name, value }),
            None => Ok(()),
        }
    }
}

/// Exponential-decay timestamp reward with range and format penalties.
///
/// The predicted time is not clipped; a prediction past the track keeps its
/// distance term and additionally loses `out_penalty`.
pub fn tsg_reward(pred: &ParsedAnswer, gold: Timestamp, duration: f64, cfg: &RewardConfig) -> f64 {
    match pred.timestamp() {
        Some(t) => {
            let err = libm::fabs(t.seconds() - gold.seconds());
            let base = libm::exp(-err / cfg.tsg_scale);
            let out = t.seconds() > duration;
            if out {
                base - cfg.out_penalty
            } else {
                base
            }
        }
        None => -cfg.fmt_penalty,
    }
}

fn soft_f1_unchecked(
    pred: &IntervalSet,
    gold: &IntervalSet,
    duration: f64,
    cfg: &RewardConfig,
) -> Result<f64, TemporalError> {
    let p = gaussian_smooth(&rasterize(pred, duration, cfg.resolution_hz)?, cfg.sigma, cfg.radius)?;
    let g = gaussian_smooth(&rasterize(gold, duration, cfg.resolution_hz)?, cfg.sigma, cfg.radius)?;
    let num = 2.0 * p.dot(&g);
    let den = p.squared_norm() + g.squared_norm() + cfg.epsilon;
    Ok((num / den).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
}

/// Dice overlap of Gaussian-smoothed masks of the two sets; both are
/// rasterized over `[0, duration]`, clipping anything beyond.
pub fn mtr_soft_f1(
    pred: &IntervalSet,
    gold: &IntervalSet,
    duration: f64,
    cfg: &RewardConfig,
) -> Result<f64, RewardError> {
    if gold.is_empty() {
        return Err(MetricError::MissingGold.into());
    }
    Ok(soft_f1_unchecked(pred, gold, duration, cfg)?)
}

/// Soft-F1 interval reward with range and format penalties.
///
/// # Panics
/// When `duration` is not positive or `cfg` has a non-positive resolution,
/// sigma or radius; callers validate both up front.
pub fn mtr_reward(pred: &ParsedAnswer, gold: &IntervalSet, duration: f64, cfg: &RewardConfig) -> f64 {
    let Some(spans) = pred.intervals() else {
        return -cfg.fmt_penalty;
    };
    let set = IntervalSet::normalize(spans.iter().copied());
    let soft = soft_f1_unchecked(&set, gold, duration, cfg)
        .expect("duration and smoothing parameters are validated by the caller");
    if set.exceeds(duration) {
        soft - cfg.out_penalty
    } else {
        soft
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::temporal_f1;
    use crate::parse::{parse_interval_list, parse_timestamp};

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    fn set(p: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_pairs(p).unwrap()
    }

    #[test]
    fn defaults_validate() {
        assert!(cfg().validate().is_ok());
        let bad = RewardConfig { sigma: 0.0, ..cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tsg_exact_and_one_scale() {
        let gold = Timestamp::new(72.0).unwrap();
        assert_eq!(tsg_reward(&parse_timestamp("72"), gold, 200.0, &cfg()), 1.0);
        let r = tsg_reward(&parse_timestamp("87"), gold, 200.0, &cfg());
        assert_eq!(r, libm::exp(-1.0));
        assert!((r - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn tsg_penalties() {
        let gold = Timestamp::new(100.0).unwrap();
        assert_eq!(tsg_reward(&parse_timestamp("dunno"), gold, 200.0, &cfg()), -1.0);
        let out = tsg_reward(&parse_timestamp("215"), gold, 200.0, &cfg());
        assert_eq!(out, libm::exp(-115.0 / 15.0) - 0.5);
        // exactly at the end is in range
        let edge = tsg_reward(&parse_timestamp("200"), gold, 200.0, &cfg());
        assert_eq!(edge, libm::exp(-100.0 / 15.0));
    }

    #[test]
    fn soft_f1_identity_and_empty() {
        let g = set(&[(110.0, 140.0)]);
        let same = mtr_soft_f1(&g, &g, 300.0, &cfg()).unwrap();
        assert!(same > 0.999 && same <= 1.0);
        assert_eq!(mtr_soft_f1(&IntervalSet::empty(), &g, 300.0, &cfg()).unwrap(), 0.0);
        assert!(matches!(
            mtr_soft_f1(&g, &IntervalSet::empty(), 300.0, &cfg()),
            Err(RewardError::Metric(MetricError::MissingGold))
        ));
    }

    #[test]
    fn soft_f1_grants_partial_credit() {
        let g = set(&[(110.0, 140.0)]);
        let p = set(&[(100.0, 130.0)]);
        let soft = mtr_soft_f1(&p, &g, 300.0, &cfg()).unwrap();
        let hard = temporal_f1(&p, &g).unwrap();
        assert!((hard - 2.0 / 3.0).abs() < 1e-12);
        assert!(soft > hard && soft < 1.0, "soft {soft} hard {hard}");
        let far = set(&[(60.0, 90.0)]);
        assert!(mtr_soft_f1(&far, &g, 300.0, &cfg()).unwrap() < soft);
    }

    #[test]
    fn mtr_reward_cases() {
        let g = set(&[(110.0, 140.0)]);
        let exact = mtr_reward(&parse_interval_list("[110-140]"), &g, 300.0, &cfg());
        assert!(exact > 0.999);
        assert_eq!(mtr_reward(&parse_interval_list("no idea"), &g, 300.0, &cfg()), -1.0);

        let over = parse_interval_list("[110-140], [280-320]");
        let clipped = set(&[(110.0, 140.0), (280.0, 300.0)]);
        let soft = mtr_soft_f1(&clipped, &g, 300.0, &cfg()).unwrap();
        assert_eq!(mtr_reward(&over, &g, 300.0, &cfg()), soft - 0.5);
    }
}
