//! Numeric series helpers for training-curve analysis.

/// Centered moving average. Each output averages `window` neighbours
/// (`window / 2` before, the rest after) truncated at the series ends, so
/// the output has the input's length.
///
/// # Panics
/// When `window` is 0.
pub fn sliding_mean(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let before = window / 2;
    let after = window - 1 - before;
    (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after + 1).min(series.len());
            series[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(sliding_mean(&[0.0, 10.0, 20.0], 3), vec![5.0, 10.0, 15.0]);
        let s = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(sliding_mean(&s, 1), s.to_vec());
        assert!(sliding_mean(&[0.7; 50], 20).iter().all(|&v| (v - 0.7).abs() < 1e-12));
        assert!(sliding_mean(&[], 20).is_empty());
    }

    #[test]
    fn even_window_leans_left() {
        // window 4 at index 2 covers 0..=3
        assert_eq!(sliding_mean(&[0.0, 4.0, 8.0, 12.0, 16.0], 4)[2], 6.0);
    }
}
