//! Faller-group augmentation: append Gaussian-perturbed copies of randomly
//! chosen real training fallers.
//!
//! Each synthetic record perturbs one donor (sampled without replacement)
//! by N(0, (noise_scale * sigma_f)^2) per feature, where sigma_f is the
//! sample standard deviation of that feature over the real training
//! fallers. Perturbed values are not clipped; downstream code must
//! tolerate values outside physical ranges.

use crate::dataset::{Dataset, Outcome, Split, SubjectRecord};
use crate::error::{Error, Result};
use crate::seeding;
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AugmentationConfig {
    /// Number of synthetic fallers to append.
    pub count: usize,
    /// Noise standard deviation as a multiple of each feature's sigma_f.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            count: 15,
            noise_scale: 0.1,
            seed: 0,
        }
    }
}

/// Append `config.count` synthetic training fallers to a copy of `dataset`.
pub fn augment_fallers(dataset: &Dataset, config: &AugmentationConfig) -> Result<Dataset> {
    if config.count == 0 {
        return Err(Error::Augmentation("count must be positive".into()));
    }
    if config.noise_scale < 0.0 || config.noise_scale.is_nan() {
        return Err(Error::Augmentation(format!(
            "noise_scale must be non-negative, got {}",
            config.noise_scale
        )));
    }
    let donors: Vec<&SubjectRecord> = dataset
        .subjects()
        .iter()
        .filter(|s| s.outcome == Outcome::Faller && s.split == Split::Train && !s.synthetic)
        .collect();
    if donors.len() < config.count {
        return Err(Error::Augmentation(format!(
            "insufficient donors: need {} real training fallers, have {}",
            config.count,
            donors.len()
        )));
    }

    // sigma_f over the real training fallers (sample std; zero when the
    // feature is constant or there is a single donor).
    let catalog = dataset.catalog();
    let sigmas: Vec<f64> = catalog
        .names()
        .map(|name| {
            let vals: Vec<f64> = donors.iter().map(|d| d.values[name]).collect();
            sample_std(&vals)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive_seed(
        config.seed,
        seeding::stream::AUGMENT,
        0,
    ));

    // Sample donor positions without replacement (partial Fisher-Yates).
    let mut order: Vec<usize> = (0..donors.len()).collect();
    for i in 0..config.count {
        let j = rng.gen_range(i..order.len());
        order.swap(i, j);
    }

    let existing: HashSet<&str> = dataset.subjects().iter().map(|s| s.subject_id.as_str()).collect();
    let mut subjects = dataset.subjects().to_vec();
    let mut next_id = 1usize;
    for &donor_idx in order.iter().take(config.count) {
        let donor = donors[donor_idx];
        let subject_id = loop {
            let candidate = format!("syn-{next_id:04}");
            next_id += 1;
            if !existing.contains(candidate.as_str()) {
                break candidate;
            }
        };
        let mut values = IndexMap::with_capacity(catalog.len());
        for (name, sigma) in catalog.names().zip(&sigmas) {
            let noise: f64 = rng.sample(StandardNormal);
            values.insert(
                name.to_string(),
                donor.values[name] + config.noise_scale * sigma * noise,
            );
        }
        subjects.push(SubjectRecord {
            subject_id,
            outcome: Outcome::Faller,
            synthetic: true,
            split: Split::Train,
            values,
        });
    }
    Dataset::new(catalog.clone(), subjects)
}

fn sample_std(vals: &[f64]) -> f64 {
    if vals.len() < 2 {
        return 0.0;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{FeatureCatalog, FeatureDescriptor, FeatureKind, RiskDirection};

    fn catalog2() -> FeatureCatalog {
        FeatureCatalog::new(
            ["a", "b"]
                .iter()
                .map(|n| FeatureDescriptor {
                    name: n.to_string(),
                    unit: String::new(),
                    kind: FeatureKind::Itug,
                    direction: RiskDirection::HigherRiskier,
                })
                .collect(),
        )
        .unwrap()
    }

    fn faller(id: &str, a: f64, b: f64) -> SubjectRecord {
        SubjectRecord {
            subject_id: id.to_string(),
            outcome: Outcome::Faller,
            synthetic: false,
            split: Split::Train,
            values: IndexMap::from([("a".to_string(), a), ("b".to_string(), b)]),
        }
    }

    fn cohort(n: usize) -> Dataset {
        let subjects = (0..n).map(|i| faller(&format!("f{i}"), i as f64, 7.0)).collect();
        Dataset::new(catalog2(), subjects).unwrap()
    }

    #[test]
    fn appends_requested_count_as_synthetic_train_fallers() {
        let ds = cohort(10);
        let out = augment_fallers(
            &ds,
            &AugmentationConfig {
                count: 4,
                noise_scale: 0.1,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(out.len(), 14);
        let synth: Vec<_> = out.subjects().iter().filter(|s| s.synthetic).collect();
        assert_eq!(synth.len(), 4);
        assert!(synth.iter().all(|s| s.split == Split::Train && s.outcome == Outcome::Faller));
    }

    #[test]
    fn zero_variance_feature_copies_donor_exactly() {
        // Feature b is constant 7.0 across fallers, so sigma_b = 0.
        let ds = cohort(6);
        let out = augment_fallers(
            &ds,
            &AugmentationConfig {
                count: 6,
                noise_scale: 0.5,
                seed: 11,
            },
        )
        .unwrap();
        for s in out.subjects().iter().filter(|s| s.synthetic) {
            assert_eq!(s.values["b"], 7.0);
        }
    }

    #[test]
    fn zero_noise_scale_copies_all_features() {
        let ds = cohort(5);
        let out = augment_fallers(
            &ds,
            &AugmentationConfig {
                count: 5,
                noise_scale: 0.0,
                seed: 2,
            },
        )
        .unwrap();
        let donors: std::collections::HashSet<(u64, u64)> = ds
            .subjects()
            .iter()
            .map(|s| (s.values["a"].to_bits(), s.values["b"].to_bits()))
            .collect();
        for s in out.subjects().iter().filter(|s| s.synthetic) {
            assert!(donors.contains(&(s.values["a"].to_bits(), s.values["b"].to_bits())));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = cohort(8);
        let cfg = AugmentationConfig {
            count: 3,
            noise_scale: 0.1,
            seed: 42,
        };
        let a = augment_fallers(&ds, &cfg).unwrap();
        let b = augment_fallers(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        let c = augment_fallers(
            &ds,
            &AugmentationConfig {
                seed: 43,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn insufficient_donors_rejected() {
        let ds = cohort(3);
        let err = augment_fallers(
            &ds,
            &AugmentationConfig {
                count: 4,
                noise_scale: 0.1,
                seed: 0,
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("insufficient donors"));
    }

    #[test]
    fn negative_noise_scale_rejected() {
        let ds = cohort(3);
        assert!(augment_fallers(
            &ds,
            &AugmentationConfig {
                count: 1,
                noise_scale: -0.1,
                seed: 0,
            },
        )
        .is_err());
    }

    #[test]
    fn fresh_ids_do_not_collide() {
        let catalog = catalog2();
        let mut subjects = vec![faller("syn-0001", 0.0, 7.0), faller("x", 1.0, 7.0)];
        subjects.push(faller("y", 2.0, 7.0));
        let ds = Dataset::new(catalog, subjects).unwrap();
        let out = augment_fallers(
            &ds,
            &AugmentationConfig {
                count: 2,
                noise_scale: 0.0,
                seed: 0,
            },
        )
        .unwrap();
        let ids: HashSet<&str> = out.subjects().iter().map(|s| s.subject_id.as_str()).collect();
        assert_eq!(ids.len(), out.len());
    }

    /// Empirical std of (synthetic - donor) against noise_scale * sigma_f.
    ///
    /// A zero-noise run with the same seed draws the identical donor
    /// permutation (the noise stream is consumed either way), so pairing
    /// each synthetic record with its donor is exact.
    #[test]
    fn noise_magnitude_converges() {
        let n = 10_000;
        let mut subjects = Vec::with_capacity(n);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..n {
            let a: f64 = rng.sample::<f64, _>(StandardNormal) * 3.0;
            subjects.push(faller(&format!("f{i}"), a, 7.0));
        }
        let ds = Dataset::new(catalog2(), subjects).unwrap();
        let sigma_a = {
            let vals: Vec<f64> = ds.subjects().iter().map(|s| s.values["a"]).collect();
            sample_std(&vals)
        };
        let noise_scale = 0.1;
        let seed = 123;
        let noisy = augment_fallers(&ds, &AugmentationConfig { count: n, noise_scale, seed }).unwrap();
        let clean = augment_fallers(&ds, &AugmentationConfig { count: n, noise_scale: 0.0, seed }).unwrap();
        let diffs: Vec<f64> = noisy.subjects()[n..]
            .iter()
            .zip(&clean.subjects()[n..])
            .map(|(s, d)| s.values["a"] - d.values["a"])
            .collect();
        assert_eq!(diffs.len(), n);
        let observed = sample_std(&diffs);
        let expected = noise_scale * sigma_a;
        assert!(
            (observed / expected - 1.0).abs() < 0.05,
            "observed {observed}, expected {expected}"
        );
    }
}
