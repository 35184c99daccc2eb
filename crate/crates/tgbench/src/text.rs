//! Tokenization and stemming for description scoring.

use rust_stemmers::{Algorithm, Stemmer as Snowball};
use tgbench_core::meteor::Stemmer;

/// English Snowball stemmer behind the core [`Stemmer`] trait.
pub struct EnglishStemmer(Snowball);

impl EnglishStemmer {
    pub fn new() -> Self {
        Self(Snowball::create(Algorithm::English))
    }
}

impl Default for EnglishStemmer {
    fn default() -> Self {
        Self::new()
    }
}

impl Stemmer for EnglishStemmer {
    fn stem(&self, word: &str) -> String {
        self.0.stem(word).into_owned()
    }
}

/// Lowercased alphanumeric runs; apostrophes inside words are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe =
            (c == '\'' || c == '’') && !cur.is_empty() && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        assert_eq!(
            tokenize("The bass drops out; drums don't stop!"),
            ["the", "bass", "drops", "out", "drums", "don't", "stop"]
        );
        assert!(tokenize("  ... ").is_empty());
    }

    #[test]
    fn stems() {
        let s = EnglishStemmer::new();
        assert_eq!(s.stem("drums"), "drum");
        assert_eq!(s.stem("entering"), s.stem("enters"));
    }
}
