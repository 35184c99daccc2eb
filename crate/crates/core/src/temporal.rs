//! Timestamps, interval sets and fixed-resolution temporal masks.
//!
//! Interval unions are measure-theoretic: abutting spans merge and an
//! [`IntervalSet`] is always kept sorted and disjoint. Masks sample the
//! timeline at frame centers, so an interval covers frame `i` when
//! `(i + 0.5) / hz` lies in `[start, end)`.

use alloc::vec::Vec;
use core::fmt;

/// Errors raised while constructing temporal values.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemporalError {
    #[error("timestamp must be finite and non-negative, got {0}")]
    InvalidTimestamp(f64),
    #[error("interval start must precede end, got [{start}, {end}]")]
    EmptyInterval { start: f64, end: f64 },
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("mask has {actual} frames, expected {expected}")]
    MaskLength { expected: usize, actual: usize },
    #[error("mask value {value} at frame {index} is outside [0, 1]")]
    MaskValue { index: usize, value: f64 },
}

/// A point on a track's timeline, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct Timestamp(f64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0.0);

    pub fn new(seconds: f64) -> Result<Self, TemporalError> {
        if seconds.is_finite() && seconds >= 0.0 {
            // normalizes -0.0
            Ok(Self(seconds + 0.0))
        } else {
            Err(TemporalError::InvalidTimestamp(seconds))
        }
    }

    #[inline]
    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Timestamp {
    type Error = TemporalError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Timestamp> for f64 {
    fn from(t: Timestamp) -> f64 {
        t.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

/// A non-empty span `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "(f64, f64)", into = "(f64, f64)"))]
pub struct Interval {
    start: Timestamp,
    end: Timestamp,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self, TemporalError> {
        let s = Timestamp::new(start)?;
        let e = Timestamp::new(end)?;
        if s.0 < e.0 {
            Ok(Self { start: s, end: e })
        } else {
            Err(TemporalError::EmptyInterval { start, end })
        }
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start.0
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.end.0
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.end.0 - self.start.0
    }

    /// True when any part of the span lies outside `[0, duration]`.
    pub fn exceeds(&self, duration: f64) -> bool {
        self.end.0 > duration
    }

    /// Restricts the span to `[lo, hi]`, or `None` when nothing remains.
    pub fn clip(&self, lo: f64, hi: f64) -> Option<Interval> {
        let s = self.start.0.max(lo);
        let e = self.end.0.min(hi);
        Interval::new(s, e).ok()
    }
}

impl TryFrom<(f64, f64)> for Interval {
    type Error = TemporalError;

    fn try_from((start, end): (f64, f64)) -> Result<Self, Self::Error> {
        Self::new(start, end)
    }
}

impl From<Interval> for (f64, f64) {
    fn from(iv: Interval) -> (f64, f64) {
        (iv.start.0, iv.end.0)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}-{}]", self.start.0, self.end.0)
    }
}

/// A normalized union of intervals: sorted by start, pairwise disjoint,
/// with no two components touching.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "Vec<Interval>", into = "Vec<Interval>"))]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and merges overlapping or abutting spans.
    pub fn normalize<I>(raw: I) -> Self
    where
        I: IntoIterator<Item = Interval>,
    {
        let mut spans: Vec<Interval> = raw.into_iter().collect();
        spans.sort_by(|a, b| a.start().total_cmp(&b.start()).then(a.end().total_cmp(&b.end())));

        let mut merged: Vec<Interval> = Vec::with_capacity(spans.len());
        for iv in spans {
            match merged.last_mut() {
                Some(last) if iv.start() <= last.end() => {
                    if iv.end() > last.end() {
                        last.end = iv.end;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    /// Builds a normalized set from `(start, end)` pairs, rejecting empty spans.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, TemporalError> {
        let spans = pairs
            .iter()
            .map(|&(s, e)| Interval::new(s, e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::normalize(spans))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn union_length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let s = a[i].start().max(b[j].start());
            let e = a[i].end().min(b[j].end());
            if s < e {
                // both inputs are disjoint and sorted, so pieces come out in order
                out.push(Interval {
                    start: Timestamp(s),
                    end: Timestamp(e),
                });
            }
            if a[i].end() < b[j].end() {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::normalize(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    /// `|U(self) ∩ U(other)|` without materializing the intersection.
    pub fn overlap_length(&self, other: &IntervalSet) -> f64 {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut total = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let s = a[i].start().max(b[j].start());
            let e = a[i].end().min(b[j].end());
            if s < e {
                total += e - s;
            }
            if a[i].end() < b[j].end() {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    pub fn clip(&self, lo: f64, hi: f64) -> IntervalSet {
        IntervalSet {
            intervals: self.intervals.iter().filter_map(|iv| iv.clip(lo, hi)).collect(),
        }
    }

    pub fn exceeds(&self, duration: f64) -> bool {
        self.intervals.iter().any(|iv| iv.exceeds(duration))
    }
}

impl From<Vec<Interval>> for IntervalSet {
    fn from(v: Vec<Interval>) -> Self {
        IntervalSet::normalize(v)
    }
}

impl From<IntervalSet> for Vec<Interval> {
    fn from(s: IntervalSet) -> Self {
        s.intervals
    }
}

impl FromIterator<Interval> for IntervalSet {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        IntervalSet::normalize(iter)
    }
}

/// Number of frames covering `duration` seconds at `hz`: `ceil(duration * hz)`,
/// tolerant of products that land a hair above an integer.
pub fn frame_count(duration: f64, hz: f64) -> usize {
    let x = duration * hz;
    let r = libm::round(x);
    if libm::fabs(x - r) < 1e-9 {
        r as usize
    } else {
        libm::ceil(x) as usize
    }
}

#[inline]
pub(crate) fn frame_center(index: usize, hz: f64) -> f64 {
    (index as f64 + 0.5) / hz
}

fn check_positive(what: &'static str, value: f64) -> Result<(), TemporalError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(TemporalError::NonPositive { what, value })
    }
}

/// Per-frame values in `[0, 1]` over a track sampled at `resolution_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMask {
    resolution_hz: f64,
    duration: f64,
    values: Vec<f64>,
}

impl TemporalMask {
    pub fn zeros(duration: f64, resolution_hz: f64) -> Result<Self, TemporalError> {
        check_positive("duration", duration)?;
        check_positive("resolution_hz", resolution_hz)?;
        Ok(Self {
            resolution_hz,
            duration,
            values: alloc::vec![0.0; frame_count(duration, resolution_hz)],
        })
    }

    pub fn from_values(values: Vec<f64>, duration: f64, resolution_hz: f64) -> Result<Self, TemporalError> {
        check_positive("duration", duration)?;
        check_positive("resolution_hz", resolution_hz)?;
        let expected = frame_count(duration, resolution_hz);
        if values.len() != expected {
            return Err(TemporalError::MaskLength {
                expected,
                actual: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(TemporalError::MaskValue { index, value });
        }
        Ok(Self {
            resolution_hz,
            duration,
            values,
        })
    }

    pub fn resolution_hz(&self) -> f64 {
        self.resolution_hz
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &TemporalMask) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Rasterizes `set` onto a mask: a frame is 1 when its center falls in
/// `[start, end)` of some component, else 0. Spans past the track are clipped.
pub fn rasterize(set: &IntervalSet, duration: f64, resolution_hz: f64) -> Result<TemporalMask, TemporalError> {
    let mut mask = TemporalMask::zeros(duration, resolution_hz)?;
    let n = mask.values.len();
    for iv in set.clip(0.0, duration).intervals() {
        // first frame whose center is >= start
        let first = libm::ceil(iv.start() * resolution_hz - 0.5).max(0.0) as usize;
        for i in first..n {
            let c = frame_center(i, resolution_hz);
            if c >= iv.end() {
                break;
            }
            if c >= iv.start() {
                mask.values[i] = 1.0;
            }
        }
    }
    Ok(mask)
}

/// Truncated Gaussian kernel sampled at the mask resolution, support
/// `±radius` seconds, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64, radius: f64, resolution_hz: f64) -> Result<Vec<f64>, TemporalError> {
    check_positive("sigma", sigma)?;
    check_positive("radius", radius)?;
    check_positive("resolution_hz", resolution_hz)?;
    let half = libm::floor(radius * resolution_hz + 1e-9) as i64;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|k| {
            let dt = k as f64 / resolution_hz / sigma;
            libm::exp(-0.5 * dt * dt)
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }
    Ok(kernel)
}

/// Convolves the mask with a normalized truncated Gaussian. Frames beyond the
/// track count as zero; the result is clipped to `[0, 1]`.
pub fn gaussian_smooth(mask: &TemporalMask, sigma: f64, radius: f64) -> Result<TemporalMask, TemporalError> {
    let kernel = gaussian_kernel(sigma, radius, mask.resolution_hz)?;
    let half = (kernel.len() / 2) as isize;
    let n = mask.values.len() as isize;
    let values = (0..n)
        .map(|i| {
            let lo = (i - half).max(0);
            let hi = (i + half).min(n - 1);
            let acc: f64 = (lo..=hi)
                .map(|j| kernel[(j - i + half) as usize] * mask.values[j as usize])
                .sum();
            acc.clamp(0.0, 1.0)
        })
        .collect();
    Ok(TemporalMask {
        resolution_hz: mask.resolution_hz,
        duration: mask.duration,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn set(pairs: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_pairs(pairs).unwrap()
    }

    fn pairs(s: &IntervalSet) -> Vec<(f64, f64)> {
        s.intervals().iter().map(|&iv| iv.into()).collect()
    }

    #[test]
    fn timestamp_rejects_negative_and_nan() {
        assert!(Timestamp::new(-0.5).is_err());
        assert!(Timestamp::new(f64::NAN).is_err());
        assert!(Timestamp::new(f64::INFINITY).is_err());
        assert_eq!(Timestamp::new(-0.0).unwrap().seconds().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn zero_length_interval_rejected() {
        assert!(matches!(
            Interval::new(5.0, 5.0),
            Err(TemporalError::EmptyInterval { .. })
        ));
        assert!(IntervalSet::from_pairs(&[(0.0, 1.0), (3.0, 2.0)]).is_err());
    }

    #[test]
    fn normalize_merges_overlap_and_abutting() {
        assert_eq!(pairs(&set(&[(0.0, 10.0), (5.0, 20.0)])), vec![(0.0, 20.0)]);
        assert_eq!(pairs(&set(&[(0.0, 10.0), (10.0, 20.0)])), vec![(0.0, 20.0)]);
        let s = set(&[(30.0, 40.0), (0.0, 5.0), (4.0, 6.0)]);
        assert_eq!(pairs(&s), vec![(0.0, 6.0), (30.0, 40.0)]);
        assert_eq!(s.union_length(), 16.0);
    }

    #[test]
    fn union_length_examples() {
        assert_eq!(IntervalSet::empty().union_length(), 0.0);
        assert_eq!(set(&[(0.0, 10.0), (20.0, 30.0)]).union_length(), 20.0);
        assert_eq!(set(&[(0.0, 10.0), (5.0, 12.0)]).union_length(), 12.0);
    }

    #[test]
    fn intersect_examples() {
        let a = set(&[(0.0, 10.0)]);
        assert_eq!(a.intersect(&a), a);
        assert!(a.intersect(&set(&[(20.0, 30.0)])).is_empty());
        let b = set(&[(0.0, 10.0), (15.0, 25.0)]);
        let c = set(&[(5.0, 20.0)]);
        assert_eq!(pairs(&b.intersect(&c)), vec![(5.0, 10.0), (15.0, 20.0)]);
        assert_eq!(b.overlap_length(&c), 10.0);
    }

    #[test]
    fn touching_sets_do_not_intersect() {
        let a = set(&[(0.0, 10.0)]);
        let b = set(&[(10.0, 20.0)]);
        assert!(a.intersect(&b).is_empty());
        assert_eq!(a.overlap_length(&b), 0.0);
    }

    #[test]
    fn frame_count_tolerates_rounding() {
        assert_eq!(frame_count(300.0, 1.0), 300);
        assert_eq!(frame_count(30.0, 0.1), 3);
        assert_eq!(frame_count(4.5, 1.0), 5);
        assert_eq!(frame_count(4.2, 5.0), 21);
    }

    #[test]
    fn rasterize_examples() {
        let full = rasterize(&set(&[(0.0, 7.0)]), 7.0, 2.0).unwrap();
        assert!(full.values().iter().all(|&v| v == 1.0));
        let empty = rasterize(&IntervalSet::empty(), 7.0, 2.0).unwrap();
        assert!(empty.values().iter().all(|&v| v == 0.0));
        let m = rasterize(&set(&[(1.0, 3.0)]), 5.0, 1.0).unwrap();
        assert_eq!(m.values(), &[0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn rasterize_is_half_open_on_frame_centers() {
        // centers 0.5, 1.5, 2.5; [0.5, 2.5) covers the first two only
        let m = rasterize(&set(&[(0.5, 2.5)]), 3.0, 1.0).unwrap();
        assert_eq!(m.values(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn rasterize_clips_past_duration() {
        let m = rasterize(&set(&[(3.0, 50.0)]), 5.0, 1.0).unwrap();
        assert_eq!(m.values(), &[0.0, 0.0, 0.0, 1.0, 1.0]);
        let beyond = rasterize(&set(&[(10.0, 50.0)]), 5.0, 1.0).unwrap();
        assert!(beyond.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mask_validation() {
        assert!(TemporalMask::from_values(vec![0.0; 4], 5.0, 1.0).is_err());
        assert!(TemporalMask::from_values(vec![0.0, 1.5, 0.0, 0.0, 0.0], 5.0, 1.0).is_err());
        assert!(TemporalMask::zeros(0.0, 1.0).is_err());
        assert!(TemporalMask::zeros(5.0, -1.0).is_err());
    }

    #[test]
    fn kernel_sums_to_one() {
        let k = gaussian_kernel(15.0, 60.0, 1.0).unwrap();
        assert_eq!(k.len(), 121);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gaussian_kernel(0.0, 60.0, 1.0).is_err());
        assert!(gaussian_kernel(15.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn smoothing_zero_mask_stays_zero() {
        let m = TemporalMask::zeros(100.0, 1.0).unwrap();
        let s = gaussian_smooth(&m, 15.0, 60.0).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn smoothing_preserves_interior_constants() {
        let m = TemporalMask::from_values(vec![1.0; 400], 400.0, 1.0).unwrap();
        let s = gaussian_smooth(&m, 15.0, 60.0).unwrap();
        for v in &s.values()[60..340] {
            assert!((v - 1.0).abs() < 1e-9);
        }
        // edges lose mass to the zero padding
        assert!(s.values()[0] < 0.9);
    }

    #[test]
    fn smoothing_impulse_matches_gaussian_shape() {
        let mut v = vec![0.0; 301];
        v[150] = 1.0;
        let m = TemporalMask::from_values(v, 301.0, 1.0).unwrap();
        let s = gaussian_smooth(&m, 15.0, 60.0).unwrap();
        let peak = s.values()[150];
        let argmax = s
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 150);
        let expected = libm::exp(-0.5) * peak;
        assert!((s.values()[135] - expected).abs() < 1e-12);
        assert!((s.values()[165] - expected).abs() < 1e-12);
        // support ends at the radius
        assert_eq!(s.values()[89], 0.0);
        assert!(s.values()[90] > 0.0);
    }
}
