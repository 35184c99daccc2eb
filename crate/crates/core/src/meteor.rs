//! Unigram METEOR with exact and stem matching stages.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::metrics::MetricError;

/// Maps a word to its stem for the second matching stage.
pub trait Stemmer {
    fn stem(&self, word: &str) -> String;
}

/// Identity stemmer; the stem stage then adds no matches.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoStemmer;

impl Stemmer for NoStemmer {
    fn stem(&self, word: &str) -> String {
        word.to_string()
    }
}

impl<F: Fn(&str) -> String> Stemmer for F {
    fn stem(&self, word: &str) -> String {
        self(word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MeteorParams {
    /// Recall weight in the harmonic mean.
    pub alpha: f64,
    /// Fragmentation exponent.
    pub beta: f64,
    /// Maximum fragmentation penalty.
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Greedy one-to-one alignment. For each candidate token (left to right) the
/// reference position continuing the previous match is preferred, otherwise
/// the leftmost free equal token.
fn align_stage<T: PartialEq>(cand: &[T], refs: &[T], cand_to_ref: &mut [Option<usize>], ref_used: &mut [bool]) {
    for i in 0..cand.len() {
        if cand_to_ref[i].is_some() {
            continue;
        }
        let follow = i
            .checked_sub(1)
            .and_then(|p| cand_to_ref[p])
            .map(|j| j + 1)
            .filter(|&j| j < refs.len() && !ref_used[j] && refs[j] == cand[i]);
        let pick = follow.or_else(|| (0..refs.len()).find(|&j| !ref_used[j] && refs[j] == cand[i]));
        if let Some(j) = pick {
            cand_to_ref[i] = Some(j);
            ref_used[j] = true;
        }
    }
}

/// Matched unigram count and chunk count for a candidate/reference pair.
pub fn meteor_alignment(candidate: &[&str], reference: &[&str], stemmer: &dyn Stemmer) -> (usize, usize) {
    let mut cand_to_ref = vec![None; candidate.len()];
    let mut ref_used = vec![false; reference.len()];
    align_stage(candidate, reference, &mut cand_to_ref, &mut ref_used);

    let cand_stems: Vec<String> = candidate.iter().map(|w| stemmer.stem(w)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|w| stemmer.stem(w)).collect();
    align_stage(&cand_stems, &ref_stems, &mut cand_to_ref, &mut ref_used);

    let pairs: Vec<(usize, usize)> = cand_to_ref
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let chunks = pairs
        .iter()
        .enumerate()
        .filter(|(k, &(i, j))| *k == 0 || pairs[k - 1] != (i - 1, j.wrapping_sub(1)))
        .count();
    (pairs.len(), chunks)
}

/// METEOR score in `[0, 1]`:
/// `F_mean · (1 − γ·(chunks/matches)^β)` with
/// `F_mean = P·R / (α·P + (1 − α)·R)`.
pub fn meteor(
    candidate: &[&str],
    reference: &[&str],
    params: &MeteorParams,
    stemmer: &dyn Stemmer,
) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let (matches, chunks) = meteor_alignment(candidate, reference, stemmer);
    if matches == 0 {
        return Ok(0.0);
    }
    let m = matches as f64;
    let precision = m / candidate.len() as f64;
    let recall = m / reference.len() as f64;
    let f_mean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let penalty = params.gamma * libm::pow(chunks as f64 / m, params.beta);
    Ok((f_mean * (1.0 - penalty)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    fn score(c: &str, r: &str) -> f64 {
        meteor(&split(c), &split(r), &MeteorParams::default(), &NoStemmer).unwrap()
    }

    #[test]
    fn self_match_has_single_chunk_penalty() {
        let r = "the bass drops out and the drums double time";
        let m = split(r).len() as f64;
        let expected = 1.0 - 0.5 * libm::pow(1.0 / m, 3.0);
        assert!((score(r, r) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_overlap_is_zero() {
        assert_eq!(score("guitar enters", "vocals fade"), 0.0);
        assert_eq!(score("", "vocals fade"), 0.0);
    }

    #[test]
    fn prefix_candidate() {
        // P = 1, R = 3/4, one chunk of three matches:
        // F = 0.75 / 0.975 = 10/13, penalty = 0.5/27, score = 10/13 * 53/54
        let expected = (10.0 / 13.0) * (53.0 / 54.0);
        assert!((score("the cat sat", "the cat sat down") - expected).abs() < 1e-12);
    }

    #[test]
    fn scrambled_order_costs_chunks() {
        let (m, chunks) = meteor_alignment(&split("sat cat the"), &split("the cat sat"), &NoStemmer);
        assert_eq!((m, chunks), (3, 3));
        assert!(score("sat cat the", "the cat sat") < score("the cat sat", "the cat sat"));
    }

    #[test]
    fn repeated_words_follow_chunk() {
        let (m, chunks) = meteor_alignment(&split("a b a b"), &split("a b a b"), &NoStemmer);
        assert_eq!((m, chunks), (4, 1));
    }

    #[test]
    fn stem_stage_adds_matches() {
        let strip_s = |w: &str| w.trim_end_matches('s').to_string();
        let c = split("drum enter");
        let r = split("drums enters");
        let p = MeteorParams::default();
        assert_eq!(meteor(&c, &r, &p, &NoStemmer).unwrap(), 0.0);
        let (m, chunks) = meteor_alignment(&c, &r, &strip_s);
        assert_eq!((m, chunks), (2, 1));
        assert!(meteor(&c, &r, &p, &strip_s).unwrap() > 0.9);
    }

    #[test]
    fn empty_reference_errors() {
        assert_eq!(
            meteor(&split("x"), &[], &MeteorParams::default(), &NoStemmer),
            Err(MetricError::EmptyReference)
        );
    }
}
