//! Seeded synthetic data generators for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{CategoricalDataset, VariableSchema};
use crate::learners::Labeling;

/// Random dataset with the given per-variable level counts. Every level is
/// observed at least once (each column starts with one row per level, then
/// uniform fill, then a per-column shuffle). Requires `n >= max(qs)`.
pub fn random_dataset(n: usize, qs: &[usize], seed: u64) -> CategoricalDataset {
    assert!(
        qs.iter().all(|&q| q >= 1 && q <= n),
        "need n >= q for every variable"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<VariableSchema> = qs
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            VariableSchema::new(format!("v{j}"), (0..q).map(|l| format!("l{l}")).collect())
        })
        .collect();
    let codes: Vec<Vec<u32>> = qs
        .iter()
        .map(|&q| {
            let mut col: Vec<u32> = (0..n)
                .map(|i| {
                    if i < q {
                        i as u32
                    } else {
                        rng.random_range(0..q as u32)
                    }
                })
                .collect();
            col.shuffle(&mut rng);
            col
        })
        .collect();
    CategoricalDataset::from_parts(vars, codes).expect("generated codes are valid")
}

/// Random strictly positive probability vector of length `q`.
pub fn random_profile(q: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..q).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.into_iter().map(|v| v / total).collect();
        }
    }
}

/// Classification fixture: three roughly balanced classes, two predictors
/// that copy the class with `noise` corruption probability, and two uniform
/// noise predictors (4 levels each). Deterministic given the seed; every
/// level of every variable is observed.
pub fn three_class_fixture(n: usize, noise: f64, seed: u64) -> (CategoricalDataset, Labeling) {
    assert!(n >= 12, "fixture needs enough rows to observe all levels");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<u32> = (0..n).map(|_| rng.random_range(0..3u32)).collect();

    let informative = |rng: &mut ChaCha8Rng, classes: &[u32]| -> Vec<u32> {
        classes
            .iter()
            .map(|&c| {
                if rng.random::<f64>() < noise {
                    rng.random_range(0..3u32)
                } else {
                    c
                }
            })
            .collect()
    };
    let mut cols = vec![
        informative(&mut rng, &classes),
        informative(&mut rng, &classes),
        (0..n).map(|_| rng.random_range(0..4u32)).collect::<Vec<u32>>(),
        (0..n).map(|_| rng.random_range(0..4u32)).collect::<Vec<u32>>(),
    ];
    let mut classes = classes;

    // Deterministic patch: force any unobserved level onto a fixed row so
    // the dataset invariant (all levels observed) always holds.
    let patch = |col: &mut [u32], q: u32, salt: usize| {
        for l in 0..q {
            if !col.iter().any(|&c| c == l) {
                let row = (l as usize * 31 + salt * 17) % col.len();
                col[row] = l;
            }
        }
    };
    patch(&mut classes, 3, 0);
    for (j, col) in cols.iter_mut().enumerate() {
        let q = if j < 2 { 3 } else { 4 };
        patch(col, q, j + 1);
    }

    let vars = vec![
        VariableSchema::new("signal_a", vec!["a0".into(), "a1".into(), "a2".into()]),
        VariableSchema::new("signal_b", vec!["b0".into(), "b1".into(), "b2".into()]),
        VariableSchema::new(
            "noise_a",
            vec!["n0".into(), "n1".into(), "n2".into(), "n3".into()],
        ),
        VariableSchema::new(
            "noise_b",
            vec!["m0".into(), "m1".into(), "m2".into(), "m3".into()],
        ),
    ];
    let ds = CategoricalDataset::from_parts(vars, cols).expect("fixture codes are valid");
    let labels = Labeling::new(
        vec!["c0".into(), "c1".into(), "c2".into()],
        classes,
    )
    .expect("fixture labels are valid");
    (ds, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_dataset_observes_every_level() {
        let ds = random_dataset(10, &[2, 5, 10], 3);
        assert!(!ds.has_unobserved_levels());
        assert_eq!(ds.n_rows(), 10);
        let again = random_dataset(10, &[2, 5, 10], 3);
        assert_eq!(ds, again, "seeded generation is deterministic");
    }

    #[test]
    fn profiles_are_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for q in 2..8 {
            let p = random_profile(q, &mut rng);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn fixture_shape() {
        let (ds, labels) = three_class_fixture(60, 0.05, 9);
        assert_eq!(ds.n_rows(), 60);
        assert_eq!(ds.n_vars(), 4);
        assert!(!ds.has_unobserved_levels());
        assert_eq!(labels.n_classes(), 3);
        // The informative predictor mostly copies the class.
        let agree = ds
            .codes_of(0)
            .iter()
            .zip(labels.codes())
            .filter(|(a, b)| a == b)
            .count();
        assert!(agree as f64 / 60.0 > 0.8);
    }
}
