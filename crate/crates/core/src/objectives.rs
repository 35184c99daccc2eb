//! Value oracles for the encoder and fine-tuning losses, computed over plain
//! numeric slices. No gradients.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::temporal::{frame_center, TemporalError, TemporalMask, Timestamp};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("item {0} has no answer positions")]
    EmptyAnswerMask(usize),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("boundary {boundary} lies outside [0, {duration}]")]
    BoundaryOutOfRange { boundary: f64, duration: f64 },
    #[error(transparent)]
    Temporal(#[from] TemporalError),
}

fn check_len(left: usize, right: usize) -> Result<(), ObjectiveError> {
    if left == right {
        Ok(())
    } else {
        Err(ObjectiveError::LengthMismatch { left, right })
    }
}

/// Gaussian boundary-target parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryTargetSpec {
    pub boundaries: Vec<Timestamp>,
    pub duration: f64,
    pub frame_rate_hz: f64,
    pub sigma: f64,
}

impl BoundaryTargetSpec {
    pub const DEFAULT_SIGMA: f64 = 1.5;
    pub const DEFAULT_FRAME_RATE_HZ: f64 = 5.0;

    pub fn new(boundaries: Vec<Timestamp>, duration: f64) -> Self {
        Self {
            boundaries,
            duration,
            frame_rate_hz: Self::DEFAULT_FRAME_RATE_HZ,
            sigma: Self::DEFAULT_SIGMA,
        }
    }
}

/// Per-frame targets `y_t = max_b exp(−(t − b)² / 2σ²)` at frame centers.
pub fn boundary_targets(spec: &BoundaryTargetSpec) -> Result<TemporalMask, ObjectiveError> {
    let n = TemporalMask::zeros(spec.duration, spec.frame_rate_hz)?.len();
    if !(spec.sigma.is_finite() && spec.sigma > 0.0) {
        return Err(TemporalError::NonPositive {
            what: "sigma",
            value: spec.sigma,
        }
        .into());
    }
    if let Some(b) = spec.boundaries.iter().find(|b| b.seconds() > spec.duration) {
        return Err(ObjectiveError::BoundaryOutOfRange {
            boundary: b.seconds(),
            duration: spec.duration,
        });
    }
    let two_var = 2.0 * spec.sigma * spec.sigma;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let t = frame_center(i, spec.frame_rate_hz);
            spec.boundaries
                .iter()
                .map(|b| {
                    let d = t - b.seconds();
                    libm::exp(-d * d / two_var)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(TemporalMask::from_values(values, spec.duration, spec.frame_rate_hz)?)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on logits, averaged over frames, plus the smoothed
/// Dice term `1 − (2Σpy + s)/(Σp + Σy + s)` with `p = σ(z)`.
pub fn bce_dice_loss(logits: &[f64], targets: &[f64], smoothing: f64) -> Result<f64, ObjectiveError> {
    check_len(logits.len(), targets.len())?;
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(TemporalError::NonPositive {
            what: "smoothing",
            value: smoothing,
        }
        .into());
    }
    if logits.is_empty() {
        return Ok(0.0);
    }
    let mut bce = 0.0;
    let (mut py, mut sp, mut sy) = (0.0, 0.0, 0.0);
    for (&z, &y) in logits.iter().zip(targets) {
        // max(z, 0) − z·y + ln(1 + e^{−|z|})
        bce += z.max(0.0) - z * y + libm::log1p(libm::exp(-libm::fabs(z)));
        let p = sigmoid(z);
        py += p * y;
        sp += p;
        sy += y;
    }
    let bce = bce / logits.len() as f64;
    let dice = 1.0 - (2.0 * py + smoothing) / (sp + sy + smoothing);
    Ok(bce + dice)
}

/// Mask-typed convenience wrapper over [`bce_dice_loss`].
pub fn bce_dice_loss_mask(logits: &[f64], targets: &TemporalMask, smoothing: f64) -> Result<f64, ObjectiveError> {
    bce_dice_loss(logits, targets.values(), smoothing)
}

/// `1 − 2·cov / (var_pred + var_gold + (μ_pred − μ_gold)² + ε)` with
/// population moments.
pub fn ccc_loss(pred: &[f64], gold: &[f64], epsilon: f64) -> Result<f64, ObjectiveError> {
    check_len(pred.len(), gold.len())?;
    if pred.len() < 2 {
        return Err(ObjectiveError::TooShort(pred.len()));
    }
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mg = gold.iter().sum::<f64>() / n;
    let (mut cov, mut vp, mut vg) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.iter().zip(gold) {
        cov += (p - mp) * (g - mg);
        vp += (p - mp) * (p - mp);
        vg += (g - mg) * (g - mg);
    }
    cov /= n;
    vp /= n;
    vg /= n;
    Ok(1.0 - 2.0 * cov / (vp + vg + (mp - mg) * (mp - mg) + epsilon))
}

/// One supervised example: token losses and which positions are answer tokens.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SftItem {
    pub task_id: String,
    pub token_nll: Vec<f64>,
    pub answer_mask: Vec<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SftBatch {
    pub items: Vec<SftItem>,
}

/// Answer-only, per-sample normalized, task-balanced loss: mean token loss per
/// item, mean over items per task, then mean over the tasks present.
pub fn balanced_sft_loss(batch: &SftBatch) -> Result<f64, ObjectiveError> {
    if batch.items.is_empty() {
        return Err(ObjectiveError::EmptyBatch);
    }
    let mut per_task: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (idx, item) in batch.items.iter().enumerate() {
        check_len(item.token_nll.len(), item.answer_mask.len())?;
        let (sum, count) = item
            .token_nll
            .iter()
            .zip(&item.answer_mask)
            .filter(|(_, &m)| m)
            .fold((0.0, 0usize), |(s, c), (l, _)| (s + l, c + 1));
        if count == 0 {
            return Err(ObjectiveError::EmptyAnswerMask(idx));
        }
        let entry = per_task.entry(item.task_id.as_str()).or_insert((0.0, 0));
        entry.0 += sum / count as f64;
        entry.1 += 1;
    }
    let total: f64 = per_task.values().map(|(s, c)| s / *c as f64).sum();
    Ok(total / per_task.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ts(s: f64) -> Timestamp {
        Timestamp::new(s).unwrap()
    }

    #[test]
    fn boundary_targets_empty_is_zero() {
        let m = boundary_targets(&BoundaryTargetSpec::new(vec![], 10.0)).unwrap();
        assert_eq!(m.len(), 50);
        assert!(m.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_targets_peak_and_sigma_offset() {
        // 1 Hz frames: centers at k + 0.5
        let spec = BoundaryTargetSpec {
            boundaries: vec![ts(20.5)],
            duration: 40.0,
            frame_rate_hz: 1.0,
            sigma: 2.0,
        };
        let m = boundary_targets(&spec).unwrap();
        assert_eq!(m.values()[20], 1.0);
        assert!((m.values()[22] - libm::exp(-0.5)).abs() < 1e-15);
        assert!((m.values()[18] - libm::exp(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn boundary_targets_max_combination() {
        let spec = BoundaryTargetSpec {
            boundaries: vec![ts(10.0), ts(10.8)],
            duration: 20.0,
            frame_rate_hz: 5.0,
            sigma: 1.5,
        };
        let m = boundary_targets(&spec).unwrap();
        assert!(m.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let bad = BoundaryTargetSpec {
            boundaries: vec![ts(25.0)],
            ..spec
        };
        assert!(matches!(
            boundary_targets(&bad),
            Err(ObjectiveError::BoundaryOutOfRange { .. })
        ));
    }

    #[test]
    fn bce_dice_perfect_limit() {
        let loss = bce_dice_loss(&[40.0; 8], &[1.0; 8], 1.0).unwrap();
        assert!(loss < 1e-12, "{loss}");
    }

    #[test]
    fn bce_dice_half_probabilities() {
        let y = [0.0, 1.0, 0.0, 1.0];
        let loss = bce_dice_loss(&[0.0; 4], &y, 1.0).unwrap();
        // BCE = ln 2; Dice = 1 − (2·1 + 1)/(2 + 2 + 1) = 0.4
        assert!((loss - (core::f64::consts::LN_2 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn bce_dice_all_zero_targets() {
        let loss = bce_dice_loss(&[-40.0; 6], &[0.0; 6], 1.0).unwrap();
        assert!(loss < 1e-12, "{loss}");
        assert!(bce_dice_loss(&[0.0; 3], &[0.0; 2], 1.0).is_err());
        assert!(bce_dice_loss(&[0.0; 3], &[0.0; 3], 0.0).is_err());
    }

    #[test]
    fn ccc_examples() {
        let x = [1.0, -2.0, 0.5, 3.0];
        let eps = 1e-8;
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let same = ccc_loss(&x, &x, eps).unwrap();
        assert!((same - eps / (2.0 * var + eps)).abs() < 1e-15);
        assert!((ccc_loss(&[2.0; 4], &x, eps).unwrap() - 1.0).abs() < 1e-12);

        let z = [1.0, -1.0, 2.0, -2.0];
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let vz = 2.5;
        let expected = 1.0 + 2.0 * vz / (2.0 * vz + eps);
        assert!((ccc_loss(&neg, &z, eps).unwrap() - expected).abs() < 1e-12);

        assert!(matches!(
            ccc_loss(&[1.0], &[1.0], eps),
            Err(ObjectiveError::TooShort(1))
        ));
        assert!(matches!(
            ccc_loss(&[1.0, 2.0], &[1.0], eps),
            Err(ObjectiveError::LengthMismatch { .. })
        ));
    }

    fn item(task: &str, nll: &[f64], mask: &[bool]) -> SftItem {
        SftItem {
            task_id: task.to_string(),
            token_nll: nll.to_vec(),
            answer_mask: mask.to_vec(),
        }
    }

    #[test]
    fn sft_plain_mean() {
        let b = SftBatch {
            items: vec![item("TSG", &[1.0, 2.0, 3.0], &[true; 3])],
        };
        assert_eq!(balanced_sft_loss(&b).unwrap(), 2.0);
    }

    #[test]
    fn sft_task_balanced() {
        let mut items: Vec<SftItem> = (0..10).map(|_| item("A", &[1.0], &[true])).collect();
        items.push(item("B", &[3.0], &[true]));
        let loss = balanced_sft_loss(&SftBatch { items }).unwrap();
        assert_eq!(loss, 2.0);
        assert!((loss - 13.0 / 11.0).abs() > 0.5);
    }

    #[test]
    fn sft_masking() {
        let b = SftBatch {
            items: vec![item("A", &[9.0, 9.0, 1.0, 3.0], &[false, false, true, true])],
        };
        assert_eq!(balanced_sft_loss(&b).unwrap(), 2.0);
        let empty = SftBatch {
            items: vec![item("A", &[1.0], &[false])],
        };
        assert_eq!(balanced_sft_loss(&empty), Err(ObjectiveError::EmptyAnswerMask(0)));
        assert_eq!(balanced_sft_loss(&SftBatch::default()), Err(ObjectiveError::EmptyBatch));
    }
}
