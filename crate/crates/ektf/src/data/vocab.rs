//! Token vocabularies with frequency thresholding, and the numeric
//! discretizer that turns raw numbers into bucket tokens.

use crate::error::{EktfError, Result};
use std::collections::HashMap;

/// Map a raw numeric value to a bucket token.
///
/// Values above 2 land in bucket floor((ln x)^2); everything else (including
/// zero and negatives) collapses to bucket 1. The token is a string so it
/// flows through vocabulary building like any categorical value.
pub fn discretize_numeric(x: f64) -> Result<String> {
    if x.is_nan() {
        return Err(EktfError::Data("numeric value is NaN".into()));
    }
    if x.is_infinite() {
        return Err(EktfError::Data("numeric value is infinite".into()));
    }
    if x > 2.0 {
        let bucket = x.ln().powi(2).floor() as i64;
        Ok(bucket.to_string())
    } else {
        Ok("1".to_string())
    }
}

/// Per-field token-to-id map. Id 0 is always the out-of-vocabulary id;
/// retained tokens get ids 1.. ordered by (count desc, token asc) so the
/// assignment is deterministic.
#[derive(Clone, Debug)]
pub struct Vocab {
    ids: HashMap<String, u32>,
    tokens: Vec<String>, // tokens[id-1] = token for id >= 1
    pub min_count: u64,
}

impl Vocab {
    pub fn build<'a, I>(column: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if min_count < 1 {
            return Err(EktfError::Config("min_count must be >= 1".into()));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for token in column {
            *counts.entry(token).or_insert(0) += 1;
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut ids = HashMap::with_capacity(kept.len());
        let mut tokens = Vec::with_capacity(kept.len());
        for (i, (token, _)) in kept.iter().enumerate() {
            ids.insert((*token).to_string(), i as u32 + 1);
            tokens.push((*token).to_string());
        }
        Ok(Vocab {
            ids,
            tokens,
            min_count,
        })
    }

    /// Id for a token; unseen or below-threshold tokens map to 0.
    pub fn encode(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(0)
    }

    /// The raw token behind a non-OOV id, if any.
    pub fn token_of(&self, id: u32) -> Option<&str> {
        if id == 0 {
            None
        } else {
            self.tokens.get(id as usize - 1).map(|s| s.as_str())
        }
    }

    /// Total id count including the OOV id.
    pub fn size(&self) -> u32 {
        self.tokens.len() as u32 + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discretization_matches_pinned_buckets() {
        // Oracle values from a high-precision scalar script:
        // (ln 9)^2 = 4.8278.. -> 4; (ln 100)^2 = 21.2076.. -> 21.
        assert_eq!(discretize_numeric(2.0).unwrap(), "1");
        assert_eq!(discretize_numeric(1.0).unwrap(), "1");
        assert_eq!(discretize_numeric(0.0).unwrap(), "1");
        assert_eq!(discretize_numeric(-5.0).unwrap(), "1");
        assert_eq!(discretize_numeric(9.0).unwrap(), "4");
        assert_eq!(discretize_numeric(100.0).unwrap(), "21");
        // Just above the threshold the square of the log is < 1.
        assert_eq!(discretize_numeric(2.0000001).unwrap(), "0");
        assert!(discretize_numeric(f64::NAN).is_err());
    }

    #[test]
    fn discretization_is_monotone_above_two() {
        let mut prev = -1i64;
        for i in 0..2000 {
            let x = 2.001 + i as f64 * 3.7;
            let bucket: i64 = discretize_numeric(x).unwrap().parse().unwrap();
            assert!(bucket >= prev, "bucket({x}) = {bucket} < {prev}");
            prev = bucket;
        }
    }

    #[test]
    fn threshold_splits_tokens() {
        let column: Vec<&str> = std::iter::repeat("a")
            .take(12)
            .chain(std::iter::repeat("b").take(3))
            .collect();
        let vocab = Vocab::build(column, 10).unwrap();
        assert_eq!(vocab.encode("a"), 1);
        assert_eq!(vocab.encode("b"), 0);
        assert_eq!(vocab.size(), 2);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let vocab = Vocab::build(["x", "y", "y", "z"], 1).unwrap();
        assert_eq!(vocab.size(), 4);
        for t in ["x", "y", "z"] {
            assert!(vocab.encode(t) > 0);
        }
        // Ties broken by token order: y (count 2) first, then x, z.
        assert_eq!(vocab.encode("y"), 1);
        assert_eq!(vocab.encode("x"), 2);
        assert_eq!(vocab.encode("z"), 3);
    }

    #[test]
    fn unseen_token_is_oov() {
        let vocab = Vocab::build(["a", "a"], 1).unwrap();
        assert_eq!(vocab.encode("never_seen"), 0);
    }

    #[test]
    fn ids_decode_uniquely() {
        let vocab = Vocab::build(["a", "a", "b", "b", "c", "c"], 1).unwrap();
        for id in 1..vocab.size() {
            let token = vocab.token_of(id).unwrap();
            assert_eq!(vocab.encode(token), id);
        }
        assert!(vocab.token_of(0).is_none());
    }

    #[test]
    fn rejects_zero_min_count() {
        assert!(Vocab::build(["a"], 0).is_err());
    }
}
