use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scsr_core::problems::{builtin_instance, in_extrapolation_band, sample_dataset, Split, PARTITION_SIZE};

/// Noise on train and validation, normalized by the sample's own sigma_y,
/// pooled over enough samples for 10 000 draws.
fn normalized_noise(name: &str, level: f64, split: Split) -> Vec<f64> {
    let inst = builtin_instance(name).unwrap();
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < 10_000 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        seed += 1;
        let s = sample_dataset(inst, level, split, &mut rng).unwrap();
        for part in [&s.train, &s.validation] {
            for i in 0..part.rows() {
                let truth = inst.ground_truth().value(&part.row(i));
                out.push((part.target()[i] - truth) / s.sigma_y);
            }
        }
    }
    out
}

fn std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

#[test]
fn noise_scale_follows_the_level() {
    for level in [0.1, 0.3, 1.0] {
        for (name, split) in [("I.6.20", Split::InDomain), ("Pagie", Split::OutOfDomain)] {
            let noise = normalized_noise(name, level, split);
            let want = level.sqrt();
            let got = std(&noise);
            assert!((got - want).abs() <= 0.1 * want, "{name} level {level}: {got} vs {want}");
            let mean = noise.iter().sum::<f64>() / noise.len() as f64;
            assert!(mean.abs() < 0.05 * want, "{name} level {level}: mean {mean}");
        }
    }
}

#[test]
fn zero_noise_leaves_targets_exact() {
    let noise = normalized_noise("II.35.21", 0.0, Split::InDomain);
    assert!(noise.iter().all(|&e| e == 0.0));
}

#[test]
fn test_partition_is_identical_across_noise_levels() {
    for name in ["I.48.20", "Kotanchek", "UnwrappedBall"] {
        let inst = builtin_instance(name).unwrap();
        for split in [Split::InDomain, Split::OutOfDomain] {
            for seed in 0..5 {
                let draw = |level| sample_dataset(inst, level, split, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                let base = draw(0.0);
                for level in [0.1, 0.3, 1.0] {
                    let other = draw(level);
                    assert_eq!(base.test, other.test);
                    // inputs of the noisy partitions do not move either
                    assert_eq!(base.train.columns(), other.train.columns());
                    assert_eq!(base.validation.columns(), other.validation.columns());
                }
            }
        }
    }
}

#[test]
fn out_of_domain_split_places_only_test_points_in_the_band() {
    for name in ["Pagie", "I.6.20", "UnwrappedBall"] {
        let inst = builtin_instance(name).unwrap();
        let frac = inst.extrapolation_fraction().unwrap();
        let s = sample_dataset(inst, 0.0, Split::OutOfDomain, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.train.rows(), PARTITION_SIZE);
        assert_eq!(s.test.rows(), PARTITION_SIZE);
        for i in 0..PARTITION_SIZE {
            assert!(!in_extrapolation_band(&s.train.row(i), inst.domain(), frac));
            assert!(!in_extrapolation_band(&s.validation.row(i), inst.domain(), frac));
            assert!(in_extrapolation_band(&s.test.row(i), inst.domain(), frac));
            assert!(inst.domain().contains(&s.test.row(i)));
        }
    }
}
