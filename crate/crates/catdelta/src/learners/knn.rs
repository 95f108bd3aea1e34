//! K-nearest-neighbor classification from train-to-test cross distances.
//!
//! Ties are fully deterministic: neighbors tied at the k-th distance are
//! taken by lower training-row index, and vote ties are broken by the
//! smaller summed distance among the tied classes, then by lower class code.

use crate::dataset::CategoricalDataset;
use crate::delta::BlockDiagonalDelta;
use crate::distance::{cross_distances, UnseenPolicy};
use crate::error::{Error, Result};
use crate::learners::Labeling;

/// Predict test labels with one k. See [`knn_predict_grid`] for several k
/// over one distance computation.
pub fn knn_predict(
    train: &CategoricalDataset,
    labels: &Labeling,
    test: &CategoricalDataset,
    delta: &BlockDiagonalDelta,
    k: usize,
    policy: UnseenPolicy,
) -> Result<Labeling> {
    Ok(knn_predict_grid(train, labels, test, delta, &[k], policy)?
        .pop()
        .expect("one grid entry"))
}

/// Predict test labels for each k in `ks`, computing the train x test
/// distance matrix once.
pub fn knn_predict_grid(
    train: &CategoricalDataset,
    labels: &Labeling,
    test: &CategoricalDataset,
    delta: &BlockDiagonalDelta,
    ks: &[usize],
    policy: UnseenPolicy,
) -> Result<Vec<Labeling>> {
    let n_train = train.n_rows();
    if labels.n_rows() != n_train {
        return Err(Error::LengthMismatch {
            expected: n_train,
            got: labels.n_rows(),
        });
    }
    for &k in ks {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if k > n_train {
            return Err(Error::KTooLarge { k, n: n_train });
        }
    }
    // Leak guard: a data-dependent dissimilarity must have been built from
    // exactly this training data.
    let prov = delta.provenance();
    if prov.data_dependent && prov.train_fingerprint != train.predictor_fingerprint() {
        return Err(Error::ProvenanceMismatch(format!(
            "dissimilarity '{}' was built from different data than the training set",
            prov.measure
        )));
    }

    // Distances of interest are the columns of the train x test matrix.
    let cross = cross_distances(train, test, delta, policy)?;
    let n_test = test.n_rows();
    let n_classes = labels.n_classes();

    let mut per_k_codes: Vec<Vec<u32>> = vec![Vec::with_capacity(n_test); ks.len()];
    let mut order: Vec<usize> = Vec::with_capacity(n_train);
    for t in 0..n_test {
        order.clear();
        order.extend(0..n_train);
        // (distance, train index) ranking: deterministic neighbor order.
        order.sort_by(|&a, &b| {
            cross
                .get(a, t)
                .partial_cmp(&cross.get(b, t))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for (ki, &k) in ks.iter().enumerate() {
            let mut counts = vec![0u32; n_classes];
            let mut sums = vec![0.0f64; n_classes];
            for &idx in &order[..k] {
                let c = labels.codes()[idx] as usize;
                counts[c] += 1;
                sums[c] += cross.get(idx, t);
            }
            let mut best = 0usize;
            let mut found = false;
            for c in 0..n_classes {
                if counts[c] == 0 {
                    continue;
                }
                if !found
                    || counts[c] > counts[best]
                    || (counts[c] == counts[best] && sums[c] < sums[best])
                {
                    best = c;
                    found = true;
                }
            }
            per_k_codes[ki].push(best as u32);
        }
    }
    per_k_codes
        .into_iter()
        .map(|codes| Labeling::new(labels.levels().to_vec(), codes))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VariableSchema;
    use crate::measures::indep::build_matching;

    fn ds_from(codes: Vec<Vec<u32>>, qs: &[usize]) -> CategoricalDataset {
        let vars = qs
            .iter()
            .enumerate()
            .map(|(j, &q)| {
                VariableSchema::new(format!("v{j}"), (0..q).map(|l| format!("l{l}")).collect())
            })
            .collect();
        CategoricalDataset::from_parts(vars, codes).unwrap()
    }

    #[test]
    fn k1_exact_match_returns_its_label() {
        let train = ds_from(vec![vec![0, 1, 2], vec![0, 1, 0]], &[3, 2]);
        let labels = Labeling::from_labels(&["a", "b", "c"]);
        let test = train.subset(&[1]).unwrap();
        let delta = build_matching(&train).unwrap();
        let pred = knn_predict(&train, &labels, &test, &delta, 1, UnseenPolicy::Error).unwrap();
        assert_eq!(pred.label(0), "b");
    }

    #[test]
    fn majority_vote() {
        // Test row matches rows 0,1 on both vars, row 2 on neither.
        let full = ds_from(vec![vec![0, 0, 1, 0], vec![0, 0, 1, 0]], &[2, 2]);
        let train = full.subset(&[0, 1, 2]).unwrap();
        let labels = Labeling::from_labels(&["a", "a", "b"]);
        let test = full.subset(&[3]).unwrap();
        let delta = build_matching(&train).unwrap();
        let pred = knn_predict(&train, &labels, &test, &delta, 3, UnseenPolicy::Error).unwrap();
        assert_eq!(pred.label(0), "a");
    }

    #[test]
    fn vote_tie_broken_by_summed_distance() {
        // k=2 over two training rows labeled a and b ties the counts; the
        // test row is nearer to 'a' (0.2 vs 0.5), which must win.
        use crate::delta::{BlockDiagonalDelta, DeltaBlock, DeltaProvenance};
        // Rows: train0 = (0,1), train1 = (1,0); test = (0,0).
        let full = ds_from(vec![vec![0, 1, 0], vec![1, 0, 0]], &[2, 2]);
        let train = full.subset(&[0, 1]).unwrap();
        let test = full.subset(&[2]).unwrap();
        let labels = Labeling::from_labels(&["a", "b"]);
        let b0 = DeltaBlock::new(0, "v0", vec!["l0".into(), "l1".into()], vec![0.0, 0.5, 0.5, 0.0]);
        let b1 = DeltaBlock::new(1, "v1", vec!["l0".into(), "l1".into()], vec![0.0, 0.2, 0.2, 0.0]);
        let delta = BlockDiagonalDelta::new(
            vec![b0, b1],
            true,
            true,
            DeltaProvenance {
                measure: "custom".into(),
                spec_fingerprint: 0,
                train_fingerprint: 0,
                schema_fingerprint: train.predictor_schema_fingerprint(),
                data_dependent: false,
                warnings: vec![],
            },
        );
        // train0 mismatches the test row on v1 (0.2); train1 on v0 (0.5).
        let pred = knn_predict(&train, &labels, &test, &delta, 2, UnseenPolicy::Error).unwrap();
        assert_eq!(pred.label(0), "a");
    }

    #[test]
    fn k_bounds() {
        let train = ds_from(vec![vec![0, 1]], &[2]);
        let labels = Labeling::from_labels(&["a", "b"]);
        let delta = build_matching(&train).unwrap();
        let test = train.subset(&[0]).unwrap();
        assert!(matches!(
            knn_predict(&train, &labels, &test, &delta, 3, UnseenPolicy::Error),
            Err(Error::KTooLarge { .. })
        ));
        assert!(knn_predict(&train, &labels, &test, &delta, 0, UnseenPolicy::Error).is_err());
    }

    #[test]
    fn provenance_mismatch_is_rejected() {
        use crate::cooccur::MarginalTable;
        use crate::measures::indep::build_iof;
        let full = ds_from(vec![vec![0, 1, 0, 1, 1], vec![0, 0, 1, 1, 0]], &[2, 2]);
        let train = full.subset(&[0, 1, 2]).unwrap();
        let labels = Labeling::from_labels(&["a", "b", "a"]);
        // Delta built on the FULL data, not the training rows: leak.
        let marg = MarginalTable::from_dataset(&full);
        let delta = build_iof(&marg).unwrap();
        let test = full.subset(&[3, 4]).unwrap();
        assert!(matches!(
            knn_predict(&train, &labels, &test, &delta, 1, UnseenPolicy::Error),
            Err(Error::ProvenanceMismatch(_))
        ));
    }
}
