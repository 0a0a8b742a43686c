//! Synthetic CTR data with a known generative model.
//!
//! Each sample draws one id per field uniformly. The click probability is
//! sigmoid of a latent score built from per-id biases plus pairwise
//! interaction coefficients over a sparse set of field pairs. Because the
//! generative probability is retained per row, the dataset's Bayes-optimal
//! ranking (the AUC ceiling) is measurable, which acceptance tests use as
//! an oracle no real benchmark can provide.

use super::dataset::EncodedDataset;
use super::schema::FeatureSchema;
use crate::error::{EktfError, Result};
use crate::numkit::rng::Rng;
use crate::numkit::sigmoid;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub num_rows: usize,
    pub num_fields: usize,
    /// Per-field id-space size (including id 0, which here is ordinary).
    pub vocab_size: u32,
    /// Std-dev of per-id bias coefficients.
    pub bias_strength: f64,
    /// Std-dev of pairwise interaction coefficients.
    pub interaction_strength: f64,
    /// How many field pairs carry interactions.
    pub num_interaction_pairs: usize,
    /// Constant added to every latent score; shifts the positive rate.
    pub intercept: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_rows: 10_000,
            num_fields: 8,
            vocab_size: 40,
            bias_strength: 0.6,
            interaction_strength: 1.2,
            num_interaction_pairs: 6,
            intercept: -0.6,
        }
    }
}

/// The drawn generative coefficients, kept for diagnostics.
#[derive(Clone, Debug)]
pub struct Generator {
    /// biases[j][v] = bias of id v in field j.
    pub biases: Vec<Vec<f64>>,
    /// (field_a, field_b, coefficient matrix of shape vocab x vocab).
    pub interactions: Vec<(usize, usize, Vec<f64>)>,
    pub vocab_size: u32,
    pub intercept: f64,
}

impl Generator {
    /// Latent click probability for one row of ids.
    pub fn true_ctr(&self, ids: &[u32]) -> f64 {
        let mut score = self.intercept;
        for (j, &id) in ids.iter().enumerate() {
            score += self.biases[j][id as usize];
        }
        let v = self.vocab_size as usize;
        for (a, b, coeffs) in &self.interactions {
            score += coeffs[ids[*a] as usize * v + ids[*b] as usize];
        }
        sigmoid(score)
    }
}

/// Draw a dataset plus its generative model. Same seed, same dataset.
pub fn synthesize(config: &SyntheticConfig, seed: u64) -> Result<(EncodedDataset, Generator)> {
    if config.num_rows == 0 || config.num_fields == 0 || config.vocab_size == 0 {
        return Err(EktfError::Config(
            "synthetic config sizes must all be >= 1".into(),
        ));
    }
    let max_pairs = config.num_fields * (config.num_fields - 1) / 2;
    if config.num_interaction_pairs > max_pairs {
        return Err(EktfError::Config(format!(
            "{} interaction pairs requested but only {max_pairs} distinct pairs exist",
            config.num_interaction_pairs
        )));
    }
    let mut rng = Rng::seed_from(seed);
    let f = config.num_fields;
    let v = config.vocab_size as usize;

    let biases: Vec<Vec<f64>> = (0..f)
        .map(|_| {
            (0..v)
                .map(|_| rng.next_normal_scaled(config.bias_strength))
                .collect()
        })
        .collect();

    // Choose a sparse set of field pairs by shuffling all pairs.
    let mut all_pairs: Vec<(usize, usize)> = (0..f)
        .flat_map(|a| ((a + 1)..f).map(move |b| (a, b)))
        .collect();
    rng.shuffle(&mut all_pairs);
    let interactions: Vec<(usize, usize, Vec<f64>)> = all_pairs
        .into_iter()
        .take(config.num_interaction_pairs)
        .map(|(a, b)| {
            let coeffs = (0..v * v)
                .map(|_| rng.next_normal_scaled(config.interaction_strength))
                .collect();
            (a, b, coeffs)
        })
        .collect();

    let generator = Generator {
        biases,
        interactions,
        vocab_size: config.vocab_size,
        intercept: config.intercept,
    };

    let n = config.num_rows;
    let mut rows = Vec::with_capacity(n * f);
    let mut labels = Vec::with_capacity(n);
    let mut true_ctr = Vec::with_capacity(n);
    let mut ids = vec![0u32; f];
    for _ in 0..n {
        for id in ids.iter_mut() {
            *id = rng.next_below(config.vocab_size as u64) as u32;
        }
        let p = generator.true_ctr(&ids);
        let y = u8::from(rng.next_f64() < p);
        rows.extend_from_slice(&ids);
        labels.push(y);
        true_ctr.push(p);
    }

    let schema = FeatureSchema::synthetic(f);
    let vocab_sizes = vec![config.vocab_size; f];
    let dataset = EncodedDataset::new(schema, vocab_sizes, rows, labels, Some(true_ctr))?;
    Ok((dataset, generator))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_generator_gives_half_everywhere() {
        let config = SyntheticConfig {
            num_rows: 200,
            bias_strength: 0.0,
            interaction_strength: 0.0,
            intercept: 0.0,
            ..SyntheticConfig::default()
        };
        let (ds, _) = synthesize(&config, 1).unwrap();
        for p in ds.true_ctr.as_ref().unwrap() {
            assert_eq!(*p, 0.5);
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let config = SyntheticConfig {
            num_rows: 500,
            ..SyntheticConfig::default()
        };
        let (a, _) = synthesize(&config, 9).unwrap();
        let (b, _) = synthesize(&config, 9).unwrap();
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.true_ctr, b.true_ctr);
        for i in 0..a.num_rows() {
            assert_eq!(a.row(i), b.row(i));
        }
        let (c, _) = synthesize(&config, 10).unwrap();
        assert_ne!(a.labels(), c.labels());
    }

    #[test]
    fn positive_rate_tracks_mean_true_ctr() {
        let config = SyntheticConfig {
            num_rows: 50_000,
            ..SyntheticConfig::default()
        };
        let (ds, _) = synthesize(&config, 3).unwrap();
        let ctr = ds.true_ctr.as_ref().unwrap();
        let mean_p = ctr.iter().sum::<f64>() / ctr.len() as f64;
        // Bernoulli standard error around the mean probability.
        let var = ctr.iter().map(|p| p * (1.0 - p)).sum::<f64>() / (ctr.len() as f64).powi(2);
        let se = var.sqrt();
        let rate = ds.positive_rate();
        assert!(
            (rate - mean_p).abs() < 3.0 * se,
            "rate {rate} vs mean true_ctr {mean_p} (se {se})"
        );
    }

    #[test]
    fn true_ctr_matches_generator_recomputation() {
        let config = SyntheticConfig {
            num_rows: 100,
            ..SyntheticConfig::default()
        };
        let (ds, generator) = synthesize(&config, 4).unwrap();
        let ctr = ds.true_ctr.as_ref().unwrap();
        for i in 0..ds.num_rows() {
            assert_eq!(ctr[i], generator.true_ctr(ds.row(i)));
        }
    }

    #[test]
    fn rejects_impossible_pair_count() {
        let config = SyntheticConfig {
            num_fields: 3,
            num_interaction_pairs: 4, // only 3 distinct pairs exist
            ..SyntheticConfig::default()
        };
        assert!(synthesize(&config, 1).is_err());
    }
}
