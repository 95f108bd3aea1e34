//! Partitioning around medoids, in the basic alternate form: random initial
//! medoids, assign every row to its closest medoid, update each cluster's
//! medoid to the member minimizing the within-cluster distance sum, and stop
//! when the medoid set no longer changes. Deterministic given the seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::CategoricalDataset;
use crate::delta::BlockDiagonalDelta;
use crate::distance::{cross_distances, DistanceMatrix, UnseenPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PamResult {
    /// Row indices of the final medoids, one per cluster slot.
    pub medoids: Vec<usize>,
    /// Cluster slot per row (ties to the lowest medoid position).
    pub assignment: Vec<u32>,
    /// Sum of distances from each row to its assigned medoid.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Empty-cluster repairs performed (medoid re-seeded to the row farthest
    /// from its current medoid).
    pub repairs: usize,
    /// Cost after every (re)assignment, non-increasing.
    pub cost_trace: Vec<f64>,
}

fn assign(d: &DistanceMatrix, medoids: &[usize]) -> (Vec<u32>, f64) {
    let n = d.n_rows();
    let mut assignment = Vec::with_capacity(n);
    let mut cost = 0.0;
    for row in 0..n {
        let mut best = 0usize;
        let mut best_d = d.get(row, medoids[0]);
        for (m, &med) in medoids.iter().enumerate().skip(1) {
            let dist = d.get(row, med);
            if dist < best_d {
                best = m;
                best_d = dist;
            }
        }
        assignment.push(best as u32);
        cost += best_d;
    }
    (assignment, cost)
}

/// Cluster a square symmetric distance matrix around `k` medoids.
pub fn pam_fit(d: &DistanceMatrix, k: usize, seed: u64, max_iter: usize) -> Result<PamResult> {
    if !d.is_square() {
        return Err(Error::InvalidArgument(
            "PAM needs a square distance matrix".into(),
        ));
    }
    if !d.is_symmetric() {
        return Err(Error::NonSymmetric);
    }
    let n = d.n_rows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    pool.shuffle(&mut rng);
    let mut medoids: Vec<usize> = pool[..k].to_vec();

    let (mut assignment, mut cost) = assign(d, &medoids);
    let mut cost_trace = vec![cost];
    let mut repairs = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;

        // Repair empty clusters (one pass): hand each empty slot to the row
        // farthest from its current medoid, excluding rows already serving
        // as medoids. A single pass keeps the loop bounded even on fully
        // degenerate (all-zero) distance matrices.
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a as usize] += 1;
        }
        let mut repaired = false;
        for m in 0..k {
            if counts[m] > 0 {
                continue;
            }
            let candidate = (0..n)
                .filter(|r| !medoids.contains(r))
                .max_by(|&a, &b| {
                    let da = d.get(a, medoids[assignment[a] as usize]);
                    let db = d.get(b, medoids[assignment[b] as usize]);
                    da.partial_cmp(&db)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(b.cmp(&a)) // prefer the lower row index on ties
                });
            if let Some(row) = candidate {
                medoids[m] = row;
                repairs += 1;
                repaired = true;
            }
        }
        if repaired {
            let (a, c) = assign(d, &medoids);
            assignment = a;
            cost = c;
            cost_trace.push(cost);
        }

        // Update each cluster's medoid to the member with the smallest
        // within-cluster distance sum (ties to the lowest row index).
        let mut new_medoids = medoids.clone();
        for (m, slot) in new_medoids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&r| assignment[r] as usize == m).collect();
            if members.is_empty() {
                continue;
            }
            let mut best = members[0];
            let mut best_sum = f64::INFINITY;
            for &cand in &members {
                let sum: f64 = members.iter().map(|&r| d.get(r, cand)).sum();
                if sum < best_sum {
                    best = cand;
                    best_sum = sum;
                }
            }
            *slot = best;
        }

        let mut old_sorted = medoids.clone();
        let mut new_sorted = new_medoids.clone();
        old_sorted.sort_unstable();
        new_sorted.sort_unstable();
        if old_sorted == new_sorted {
            converged = true;
            break;
        }
        medoids = new_medoids;
        let (a, c) = assign(d, &medoids);
        assignment = a;
        cost = c;
        cost_trace.push(cost);
    }

    Ok(PamResult {
        medoids,
        assignment,
        cost,
        iterations,
        converged,
        repairs,
        cost_trace,
    })
}

/// Assign test rows to the nearest medoid's cluster via medoid-to-test
/// cross distances (ties to the lowest medoid position).
pub fn pam_assign(
    train: &CategoricalDataset,
    medoid_rows: &[usize],
    test: &CategoricalDataset,
    delta: &BlockDiagonalDelta,
    policy: UnseenPolicy,
) -> Result<Vec<u32>> {
    if medoid_rows.is_empty() {
        return Err(Error::EmptySelection);
    }
    let medoid_ds = train.subset(medoid_rows)?;
    let d = cross_distances(&medoid_ds, test, delta, policy)?;
    let mut out = Vec::with_capacity(test.n_rows());
    for t in 0..test.n_rows() {
        let mut best = 0usize;
        let mut best_d = d.get(0, t);
        for m in 1..medoid_rows.len() {
            let dist = d.get(m, t);
            if dist < best_d {
                best = m;
                best_d = dist;
            }
        }
        out.push(best as u32);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VariableSchema;
    use crate::distance::pairwise_distances;
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

    /// Two blobs: rows 0-2 identical, rows 3-5 identical, blobs differ on
    /// both variables.
    fn blobs() -> CategoricalDataset {
        ds_from(
            vec![vec![0, 0, 0, 1, 1, 1], vec![0, 0, 0, 1, 1, 1]],
            &[2, 2],
        )
    }

    #[test]
    fn separable_blobs_cluster_perfectly() {
        let ds = blobs();
        let delta = build_matching(&ds).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        let r = pam_fit(&d, 2, 7, 100).unwrap();
        assert_eq!(r.cost, 0.0);
        assert!(r.converged);
        let a = r.assignment[0];
        assert!(r.assignment[..3].iter().all(|&x| x == a));
        assert!(r.assignment[3..].iter().all(|&x| x != a));
    }

    #[test]
    fn k_equals_n_gives_zero_cost() {
        let ds = ds_from(vec![vec![0, 1, 2, 3]], &[4]);
        let delta = build_matching(&ds).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        let r = pam_fit(&d, 4, 1, 100).unwrap();
        assert_eq!(r.cost, 0.0);
        let mut meds = r.medoids.clone();
        meds.sort_unstable();
        assert_eq!(meds, vec![0, 1, 2, 3]);
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = ds_from(
            vec![vec![0, 1, 2, 0, 1, 2, 0, 1], vec![0, 0, 1, 1, 0, 1, 0, 1]],
            &[3, 2],
        );
        let delta = build_matching(&ds).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        let a = pam_fit(&d, 3, 99, 100).unwrap();
        let b = pam_fit(&d, 3, 99, 100).unwrap();
        assert_eq!(a, b);
        let c = pam_fit(&d, 3, 100, 100).unwrap();
        // A different seed may converge elsewhere, but both must be valid.
        assert!(c.converged);
    }

    #[test]
    fn cost_trace_non_increasing() {
        let ds = ds_from(
            vec![
                vec![0, 1, 2, 0, 1, 2, 1, 0, 2, 1],
                vec![0, 0, 1, 1, 0, 1, 1, 0, 0, 1],
                vec![1, 0, 1, 0, 1, 0, 0, 1, 1, 0],
            ],
            &[3, 2, 2],
        );
        let delta = build_matching(&ds).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        for seed in 0..10 {
            let r = pam_fit(&d, 3, seed, 100).unwrap();
            for w in r.cost_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "cost increased: {:?}", r.cost_trace);
            }
        }
    }

    #[test]
    fn rejects_non_symmetric_and_bad_k() {
        let ds = blobs();
        let delta = build_matching(&ds).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        assert!(matches!(pam_fit(&d, 9, 0, 10), Err(Error::KTooLarge { .. })));

        use crate::distance::DistanceProvenance;
        let asym = DistanceMatrix::new(
            2,
            2,
            vec![0.0, 1.0, 2.0, 0.0],
            false,
            true,
            DistanceProvenance {
                measure: "m".into(),
                delta_spec_fingerprint: 0,
                delta_train_fingerprint: 0,
                delta_data_dependent: false,
                rows_fingerprint: 0,
                cols_fingerprint: 0,
            },
        );
        assert!(matches!(pam_fit(&asym, 1, 0, 10), Err(Error::NonSymmetric)));
    }

    #[test]
    fn assign_test_rows_to_nearest_medoid() {
        let ds = blobs();
        let delta = build_matching(&ds).unwrap();
        // Medoids: one row from each blob.
        let clusters = pam_assign(&ds, &[0, 3], &ds, &delta, UnseenPolicy::Error).unwrap();
        assert_eq!(clusters, vec![0, 0, 0, 1, 1, 1]);
        // A medoid's own row lands in its cluster.
        let own = pam_assign(&ds, &[3], &ds.subset(&[3]).unwrap(), &delta, UnseenPolicy::Error)
            .unwrap();
        assert_eq!(own, vec![0]);
    }

    #[test]
    fn equidistant_test_row_takes_lowest_medoid_position() {
        // Test row at distance 1 from both medoids.
        let ds = ds_from(vec![vec![0, 1, 2], vec![0, 0, 0]], &[3, 1]);
        let delta = build_matching(&ds).unwrap();
        let clusters =
            pam_assign(&ds, &[0, 1], &ds.subset(&[2]).unwrap(), &delta, UnseenPolicy::Error)
                .unwrap();
        assert_eq!(clusters, vec![0]);
    }

    #[test]
    fn zero_distances_with_k2_repair_terminates() {
        // Degenerate all-zero distances: every row ties to medoid 0; the
        // repair loop must terminate and still produce k distinct medoids.
        let ds = ds_from(vec![vec![0, 0, 0, 0]], &[1]);
        let delta = build_matching(&ds).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        let r = pam_fit(&d, 2, 5, 50).unwrap();
        assert_eq!(r.cost, 0.0);
        let mut meds = r.medoids.clone();
        meds.sort_unstable();
        meds.dedup();
        assert_eq!(meds.len(), 2);
    }
}
