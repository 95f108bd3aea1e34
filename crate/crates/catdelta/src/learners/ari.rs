//! Adjusted Rand index between two flat clusterings, from the contingency
//! table of pair counts.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn comb2(x: u64) -> f64 {
    if x < 2 {
        0.0
    } else {
        (x as f64) * ((x - 1) as f64) / 2.0
    }
}

/// Chance-corrected agreement between two labelings of the same rows:
/// 1 for identical partitions (up to relabeling), about 0 for independent
/// ones, negative for worse-than-chance agreement.
///
/// Degenerate case: when max index equals expected index (e.g. both
/// labelings put everything in one cluster) the usual ratio is 0/0; this
/// returns 1 if the two labelings induce identical partitions and 0
/// otherwise.
pub fn adjusted_rand_index(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "ARI needs at least two rows".into(),
        ));
    }
    let mut contingency: HashMap<(u32, u32), u64> = HashMap::new();
    let mut rows: HashMap<u32, u64> = HashMap::new();
    let mut cols: HashMap<u32, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *contingency.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let index: f64 = contingency.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| comb2(c)).sum();
    let total = comb2(a.len() as u64);

    // (Index - Expected) / (Max - Expected) with Expected = sum_a*sum_b/total
    // and Max = (sum_a + sum_b)/2, cleared of the early division: pair counts
    // are exact in f64, so small cases come out exact (the 4-point crossing
    // example is -0.5 on the nose).
    let num = index * total - sum_a * sum_b;
    let den = 0.5 * (sum_a + sum_b) * total - sum_a * sum_b;
    if den == 0.0 {
        // Identical partitions iff every cluster of one maps to exactly one
        // cluster of the other.
        let identical =
            contingency.len() == rows.len() && contingency.len() == cols.len();
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_partitions_give_one() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        // Relabeled but identical partition.
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
    }

    #[test]
    fn crossing_example_is_minus_half() {
        // Index = 0, Expected = 2/3, Max = 2 -> (0 - 2/3)/(2 - 2/3) = -0.5.
        let v = adjusted_rand_index(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap();
        assert_eq!(v, -0.5);
    }

    #[test]
    fn relabeling_invariance() {
        let a = [0, 1, 2, 0, 1, 2, 1, 1];
        let b = [1, 1, 0, 0, 2, 2, 1, 0];
        let v1 = adjusted_rand_index(&a, &b).unwrap();
        // Permute the labels of b: 0 -> 7, 1 -> 3, 2 -> 5.
        let b2: Vec<u32> = b.iter().map(|&x| [7u32, 3, 5][x as usize]).collect();
        let v2 = adjusted_rand_index(&a, &b2).unwrap();
        assert!((v1 - v2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_single_cluster() {
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(adjusted_rand_index(&[0, 1], &[0, 1, 2]).is_err());
    }
}
