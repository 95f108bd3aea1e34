//! Between-observation and between-set distances from a block-diagonal
//! dissimilarity.
//!
//! The production path is the gather form: each observation's indicator row
//! selects one entry per block, so `D[u, v] = sum_j delta_j[code_j(u),
//! code_j(v)]`. This is algebraically identical to the indicator-matrix
//! product and runs in O(n1 * n2 * Q) time with no materialized indicator
//! matrix. [`naive_pairwise_dense`] keeps the literal dense product as a
//! testing oracle.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::CategoricalDataset;
use crate::delta::BlockDiagonalDelta;
use crate::error::{Error, Result};

/// What to do when a code hits a dissimilarity row that is undefined because
/// the category never occurred in the data the blocks were built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnseenPolicy {
    /// Fail, naming the variable and category.
    #[default]
    Error,
    /// Treat the missing row/column as the block's maximum off-diagonal
    /// value, with 0 on the diagonal.
    Max,
}

impl std::str::FromStr for UnseenPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "error" => Ok(UnseenPolicy::Error),
            "max" => Ok(UnseenPolicy::Max),
            other => Err(Error::InvalidArgument(format!(
                "unknown unseen policy '{other}' (error|max)"
            ))),
        }
    }
}

/// Where a distance matrix came from, for leak detection and manifests.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceProvenance {
    pub measure: String,
    pub delta_spec_fingerprint: u64,
    pub delta_train_fingerprint: u64,
    pub delta_data_dependent: bool,
    pub rows_fingerprint: u64,
    pub cols_fingerprint: u64,
}

/// Dense n1 x n2 distance matrix with symmetry/zero-diagonal flags derived
/// from the dissimilarity that produced it.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n1: usize,
    n2: usize,
    values: Vec<f64>,
    symmetric: bool,
    zero_diagonal: bool,
    provenance: DistanceProvenance,
}

impl DistanceMatrix {
    pub fn new(
        n1: usize,
        n2: usize,
        values: Vec<f64>,
        symmetric: bool,
        zero_diagonal: bool,
        provenance: DistanceProvenance,
    ) -> Self {
        assert_eq!(values.len(), n1 * n2);
        DistanceMatrix {
            n1,
            n2,
            values,
            symmetric,
            zero_diagonal,
            provenance,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n1
    }

    pub fn n_cols(&self) -> usize {
        self.n2
    }

    pub fn is_square(&self) -> bool {
        self.n1 == self.n2
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n2 + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n2..(i + 1) * self.n2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_zero_diagonal(&self) -> bool {
        self.zero_diagonal
    }

    pub fn provenance(&self) -> &DistanceProvenance {
        &self.provenance
    }

    /// Explicit symmetrization (D + D') / 2. Square matrices only.
    pub fn symmetrize(&self) -> Result<DistanceMatrix> {
        if !self.is_square() {
            return Err(Error::InvalidArgument(
                "cannot symmetrize a non-square matrix".into(),
            ));
        }
        let n = self.n1;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        Ok(DistanceMatrix {
            n1: n,
            n2: n,
            values,
            symmetric: true,
            zero_diagonal: self.zero_diagonal,
            provenance: self.provenance.clone(),
        })
    }

    /// Check the declared flags and non-negativity against the stored
    /// entries (diagnostic; tolerance 1e-12 as everywhere).
    pub fn verify_invariants(&self) -> Result<()> {
        for &v in &self.values {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "distance entry {v} is negative or non-finite"
                )));
            }
        }
        if self.symmetric {
            if !self.is_square() {
                return Err(Error::InvalidArgument(
                    "symmetric flag on a non-square matrix".into(),
                ));
            }
            for i in 0..self.n1 {
                for j in (i + 1)..self.n2 {
                    if (self.get(i, j) - self.get(j, i)).abs() > 1e-12 {
                        return Err(Error::InvalidArgument(format!(
                            "symmetric flag violated at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        if self.zero_diagonal && self.is_square() {
            for i in 0..self.n1 {
                if self.get(i, i).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "zero-diagonal flag violated at row {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Validate that the dataset's predictor variables line up with the delta's
/// blocks, and return the predictor code columns in block order.
fn block_columns<'a>(
    ds: &'a CategoricalDataset,
    delta: &BlockDiagonalDelta,
) -> Result<Vec<&'a [u32]>> {
    let pred = ds.predictor_indices();
    if pred.len() != delta.n_blocks() {
        return Err(Error::SchemaMismatch(format!(
            "dataset has {} predictor variables, dissimilarity has {} blocks",
            pred.len(),
            delta.n_blocks()
        )));
    }
    if delta.provenance().schema_fingerprint != ds.predictor_schema_fingerprint() {
        return Err(Error::SchemaMismatch(
            "dataset schema differs from the schema the dissimilarity was built on".into(),
        ));
    }
    let mut cols = Vec::with_capacity(pred.len());
    for (pos, &j) in pred.iter().enumerate() {
        let block = delta.block(pos);
        if block.order() != ds.q(j) || block.variable_name() != ds.variable(j).name {
            return Err(Error::SchemaMismatch(format!(
                "block {pos} ('{}', order {}) does not match variable '{}' ({} levels)",
                block.variable_name(),
                block.order(),
                ds.variable(j).name,
                ds.q(j)
            )));
        }
        cols.push(ds.codes_of(j));
    }
    Ok(cols)
}

fn gather_entry(
    delta: &BlockDiagonalDelta,
    cols_a: &[&[u32]],
    cols_b: &[&[u32]],
    u: usize,
    v: usize,
    policy: UnseenPolicy,
) -> Result<f64> {
    let mut d = 0.0;
    for (bi, block) in delta.blocks().iter().enumerate() {
        let ca = cols_a[bi][u] as usize;
        let cb = cols_b[bi][v] as usize;
        if block.has_undefined() && (block.is_undefined(ca) || block.is_undefined(cb)) {
            match policy {
                UnseenPolicy::Error => {
                    let lvl = if block.is_undefined(ca) { ca } else { cb };
                    return Err(Error::UnseenCategory {
                        variable: block.variable_name().to_string(),
                        level: block.levels()[lvl].clone(),
                    });
                }
                UnseenPolicy::Max => {
                    if ca != cb {
                        d += block.max_defined_offdiag();
                    }
                }
            }
        } else {
            d += block.get(ca, cb);
        }
    }
    Ok(d)
}

/// All pairwise distances within one dataset (gather form).
pub fn pairwise_distances(
    ds: &CategoricalDataset,
    delta: &BlockDiagonalDelta,
    policy: UnseenPolicy,
) -> Result<DistanceMatrix> {
    let cols = block_columns(ds, delta)?;
    let n = ds.n_rows();
    if n == 0 {
        return Err(Error::EmptySelection);
    }
    let mut values = vec![0.0; n * n];
    if delta.is_symmetric() {
        // Fill the upper triangle (diagonal included) and mirror.
        let results: Result<Vec<(usize, Vec<f64>)>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let mut row = Vec::with_capacity(n - u);
                for v in u..n {
                    row.push(gather_entry(delta, &cols, &cols, u, v, policy)?);
                }
                Ok((u, row))
            })
            .collect();
        for (u, row) in results? {
            for (off, d) in row.into_iter().enumerate() {
                let v = u + off;
                values[u * n + v] = d;
                values[v * n + u] = d;
            }
        }
    } else {
        values
            .par_chunks_mut(n)
            .enumerate()
            .try_for_each(|(u, out)| -> Result<()> {
                for (v, slot) in out.iter_mut().enumerate() {
                    *slot = gather_entry(delta, &cols, &cols, u, v, policy)?;
                }
                Ok(())
            })?;
    }
    let fp = ds.predictor_fingerprint();
    Ok(DistanceMatrix::new(
        n,
        n,
        values,
        delta.is_symmetric(),
        delta.has_zero_diagonal(),
        provenance_for(delta, fp, fp),
    ))
}

/// Distances between two row sets sharing the schema the dissimilarity was
/// built under: entry (u, v) is the distance from row u of `ds_a` to row v
/// of `ds_b`.
pub fn cross_distances(
    ds_a: &CategoricalDataset,
    ds_b: &CategoricalDataset,
    delta: &BlockDiagonalDelta,
    policy: UnseenPolicy,
) -> Result<DistanceMatrix> {
    let cols_a = block_columns(ds_a, delta)?;
    let cols_b = block_columns(ds_b, delta)?;
    let (n1, n2) = (ds_a.n_rows(), ds_b.n_rows());
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptySelection);
    }
    let mut values = vec![0.0; n1 * n2];
    values
        .par_chunks_mut(n2)
        .enumerate()
        .try_for_each(|(u, out)| -> Result<()> {
            for (v, slot) in out.iter_mut().enumerate() {
                *slot = gather_entry(delta, &cols_a, &cols_b, u, v, policy)?;
            }
            Ok(())
        })?;
    let fp_a = ds_a.predictor_fingerprint();
    let fp_b = ds_b.predictor_fingerprint();
    let same_rows = fp_a == fp_b;
    Ok(DistanceMatrix::new(
        n1,
        n2,
        values,
        same_rows && delta.is_symmetric(),
        same_rows && delta.has_zero_diagonal(),
        provenance_for(delta, fp_a, fp_b),
    ))
}

fn provenance_for(delta: &BlockDiagonalDelta, rows: u64, cols: u64) -> DistanceProvenance {
    let p = delta.provenance();
    DistanceProvenance {
        measure: p.measure.clone(),
        delta_spec_fingerprint: p.spec_fingerprint,
        delta_train_fingerprint: p.train_fingerprint,
        delta_data_dependent: p.data_dependent,
        rows_fingerprint: rows,
        cols_fingerprint: cols,
    }
}

/// Upper bound on rows for the dense testing oracle.
pub const DENSE_ORACLE_MAX_ROWS: usize = 2000;

/// Literal dense evaluation: materialize the indicator matrix and multiply
/// it through the full block-diagonal dissimilarity. Exists to validate the
/// gather implementation; refuses large inputs and blocks with undefined
/// levels.
pub fn naive_pairwise_dense(
    ds: &CategoricalDataset,
    delta: &BlockDiagonalDelta,
) -> Result<DistanceMatrix> {
    let n = ds.n_rows();
    if n > DENSE_ORACLE_MAX_ROWS {
        return Err(Error::GuardExceeded {
            what: format!("dense oracle over {n} rows"),
            limit: DENSE_ORACLE_MAX_ROWS,
        });
    }
    if delta.has_undefined() {
        return Err(Error::InvalidArgument(
            "dense oracle requires fully defined dissimilarity blocks".into(),
        ));
    }
    let cols = block_columns(ds, delta)?;
    let q_star = delta.total_order();

    // Z: n x Q*, one 1 per variable per row.
    let offsets: Vec<usize> = delta
        .blocks()
        .iter()
        .scan(0usize, |acc, b| {
            let o = *acc;
            *acc += b.order();
            Some(o)
        })
        .collect();
    let mut z = vec![0.0f64; n * q_star];
    for (bi, col) in cols.iter().enumerate() {
        for (row, &c) in col.iter().enumerate() {
            z[row * q_star + offsets[bi] + c as usize] = 1.0;
        }
    }

    // Dense Q* x Q* block-diagonal dissimilarity.
    let mut dd = vec![0.0f64; q_star * q_star];
    for (bi, block) in delta.blocks().iter().enumerate() {
        let o = offsets[bi];
        for a in 0..block.order() {
            for b in 0..block.order() {
                dd[(o + a) * q_star + (o + b)] = block.get(a, b);
            }
        }
    }

    // M = Z * Delta, then D = M * Z'.
    let mut m = vec![0.0f64; n * q_star];
    for r in 0..n {
        for k in 0..q_star {
            let zr = z[r * q_star + k];
            if zr == 0.0 {
                continue;
            }
            for c in 0..q_star {
                m[r * q_star + c] += zr * dd[k * q_star + c];
            }
        }
    }
    let mut values = vec![0.0f64; n * n];
    for r in 0..n {
        for s in 0..n {
            let mut acc = 0.0;
            for c in 0..q_star {
                acc += m[r * q_star + c] * z[s * q_star + c];
            }
            values[r * n + s] = acc;
        }
    }
    let fp = ds.predictor_fingerprint();
    Ok(DistanceMatrix::new(
        n,
        n,
        values,
        delta.is_symmetric(),
        delta.has_zero_diagonal(),
        provenance_for(delta, fp, fp),
    ))
}

/// Metric-property diagnostics for one block.
#[derive(Debug, Clone, Serialize)]
pub struct BlockMetricReport {
    pub variable: String,
    pub zero_diagonal: bool,
    pub symmetric: bool,
    pub triangle_violations: usize,
    pub worst_violation: f64,
    pub max_abs_diagonal: f64,
    pub max_asymmetry: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub blocks: Vec<BlockMetricReport>,
}

impl MetricReport {
    pub fn all_zero_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| b.zero_diagonal)
    }

    pub fn all_symmetric(&self) -> bool {
        self.blocks.iter().all(|b| b.symmetric)
    }

    pub fn total_triangle_violations(&self) -> usize {
        self.blocks.iter().map(|b| b.triangle_violations).sum()
    }

    /// All three metric conditions hold on every block.
    pub fn is_metric(&self) -> bool {
        self.all_zero_diagonal() && self.all_symmetric() && self.total_triangle_violations() == 0
    }
}

/// Check zero diagonal, symmetry and the triangle inequality on every block
/// (all O(q^3) triples), tolerance 1e-12. Undefined levels are skipped.
pub fn check_metric_properties(delta: &BlockDiagonalDelta) -> MetricReport {
    const TOL: f64 = 1e-12;
    let blocks = delta
        .blocks()
        .iter()
        .map(|block| {
            let q = block.order();
            let defined: Vec<usize> = (0..q).filter(|&l| !block.is_undefined(l)).collect();
            let mut max_diag = 0.0f64;
            let mut max_asym = 0.0f64;
            let mut violations = 0usize;
            let mut worst = 0.0f64;
            for &a in &defined {
                max_diag = max_diag.max(block.get(a, a).abs());
                for &b in &defined {
                    max_asym = max_asym.max((block.get(a, b) - block.get(b, a)).abs());
                    for &c in &defined {
                        let excess = block.get(a, c) - block.get(a, b) - block.get(b, c);
                        if excess > TOL {
                            violations += 1;
                            worst = worst.max(excess);
                        }
                    }
                }
            }
            BlockMetricReport {
                variable: block.variable_name().to_string(),
                zero_diagonal: max_diag <= TOL,
                symmetric: max_asym <= TOL,
                triangle_violations: violations,
                worst_violation: worst,
                max_abs_diagonal: max_diag,
                max_asymmetry: max_asym,
            }
        })
        .collect();
    MetricReport { blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VariableSchema;
    use crate::delta::{DeltaBlock, DeltaProvenance};
    use crate::measures::indep::{build_goodall, build_matching, GoodallVariant};
    use crate::cooccur::MarginalTable;

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
    fn matching_distance_counts_mismatches() {
        let ds = ds_from(
            vec![vec![0, 0], vec![0, 1], vec![0, 1]],
            &[1, 2, 2],
        );
        let delta = build_matching(&ds).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(0, 0), 0.0);
        d.verify_invariants().unwrap();
    }

    #[test]
    fn goodall3_nonzero_self_distance() {
        let ds = ds_from(vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]], &[2, 2]);
        let marg = MarginalTable::from_dataset(&ds);
        let delta = build_goodall(&marg, GoodallVariant::G3).unwrap();
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        // D[i,i] = sum_j p_{j, code_j(i)}^2 = 0.25 + 0.25.
        assert!((d.get(0, 0) - 0.5).abs() < 1e-12);
        assert!(!d.has_zero_diagonal());
    }

    #[test]
    fn zero_delta_gives_zero_matrix() {
        let ds = ds_from(vec![vec![0, 1, 0]], &[2]);
        let block = DeltaBlock::new(0, "v0", vec!["l0".into(), "l1".into()], vec![0.0; 4]);
        let delta = crate::delta::BlockDiagonalDelta::new(
            vec![block],
            true,
            true,
            DeltaProvenance {
                measure: "zero".into(),
                spec_fingerprint: 0,
                train_fingerprint: ds.predictor_fingerprint(),
                schema_fingerprint: ds.predictor_schema_fingerprint(),
                data_dependent: false,
                warnings: vec![],
            },
        );
        let d = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cross_equals_pairwise_on_same_rows() {
        let ds = ds_from(vec![vec![0, 1, 2, 0], vec![0, 0, 1, 1]], &[3, 2]);
        let delta = build_matching(&ds).unwrap();
        let pw = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        let cr = cross_distances(&ds, &ds, &delta, UnseenPolicy::Error).unwrap();
        assert_eq!(pw.values(), cr.values());
        assert!(cr.is_symmetric());
    }

    #[test]
    fn single_row_against_many() {
        let ds = ds_from(vec![vec![0, 1, 0, 1], vec![0, 0, 1, 1]], &[2, 2]);
        let medoid = ds.subset(&[2]).unwrap();
        let delta = build_matching(&ds).unwrap();
        let d = cross_distances(&medoid, &ds, &delta, UnseenPolicy::Error).unwrap();
        assert_eq!(d.n_rows(), 1);
        assert_eq!(d.n_cols(), 4);
        assert_eq!(d.row(0), &[1.0, 2.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_test_set_is_an_error() {
        let ds = ds_from(vec![vec![0, 1]], &[2]);
        let empty = ds.subset_with(&[], true).unwrap();
        let delta = build_matching(&ds).unwrap();
        assert!(matches!(
            cross_distances(&ds, &empty, &delta, UnseenPolicy::Error),
            Err(Error::EmptySelection)
        ));
    }

    #[test]
    fn dense_oracle_matches_gather_single_block() {
        let ds = ds_from(vec![vec![0, 1, 2, 1, 0]], &[3]);
        let delta = build_matching(&ds).unwrap();
        let gather = pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
        let dense = naive_pairwise_dense(&ds, &delta).unwrap();
        assert_eq!(gather.values(), dense.values());
    }

    #[test]
    fn dense_oracle_guard() {
        let n = DENSE_ORACLE_MAX_ROWS + 1;
        let ds = ds_from(vec![(0..n).map(|i| (i % 2) as u32).collect()], &[2]);
        let delta = build_matching(&ds).unwrap();
        assert!(matches!(
            naive_pairwise_dense(&ds, &delta),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn unseen_policy_error_and_max() {
        let ds = ds_from(vec![vec![0, 1, 2, 0]], &[3]);
        let train = ds.subset(&[0, 1, 3]).unwrap(); // level 2 unobserved
        let marg = MarginalTable::from_dataset(&train);
        let delta = crate::measures::indep::build_iof(&marg).unwrap();
        let test = ds.subset(&[2]).unwrap();
        let err = cross_distances(&train, &test, &delta, UnseenPolicy::Error).unwrap_err();
        match err {
            Error::UnseenCategory { variable, level } => {
                assert_eq!(variable, "v0");
                assert_eq!(level, "l2");
            }
            other => panic!("unexpected {other:?}"),
        }
        let d = cross_distances(&train, &test, &delta, UnseenPolicy::Max).unwrap();
        // Unseen level against every observed category gets the block max.
        let max_off = delta.block(0).max_defined_offdiag();
        for v in 0..train.n_rows() {
            assert_eq!(d.get(v, 0), max_off);
        }
    }

    #[test]
    fn metric_report_flags() {
        let ds = ds_from(vec![vec![0, 1, 2, 0], vec![0, 1, 0, 1]], &[3, 2]);
        let sm = build_matching(&ds).unwrap();
        let report = check_metric_properties(&sm);
        assert!(report.is_metric());

        let marg = MarginalTable::from_dataset(&ds);
        let g4 = build_goodall(&marg, GoodallVariant::G4).unwrap();
        let report = check_metric_properties(&g4);
        assert!(!report.all_zero_diagonal());
        assert!(report.all_symmetric());
    }

    #[test]
    fn triangle_violations_are_reported() {
        // Hand-built non-metric block: d(0,1) = 10 > d(0,2) + d(2,1) = 5.
        let vals = vec![0.0, 10.0, 1.0, 10.0, 0.0, 4.0, 1.0, 4.0, 0.0];
        let block = DeltaBlock::new(
            0,
            "v0",
            vec!["a".into(), "b".into(), "c".into()],
            vals,
        );
        let delta = crate::delta::BlockDiagonalDelta::new(
            vec![block],
            true,
            true,
            DeltaProvenance {
                measure: "custom".into(),
                spec_fingerprint: 0,
                train_fingerprint: 0,
                schema_fingerprint: 0,
                data_dependent: false,
                warnings: vec![],
            },
        );
        let report = check_metric_properties(&delta);
        assert!(report.total_triangle_violations() > 0);
        assert!((report.blocks[0].worst_violation - 5.0).abs() < 1e-12);
    }

    #[test]
    fn symmetrize_produces_symmetric_matrix() {
        let prov = DistanceProvenance {
            measure: "m".into(),
            delta_spec_fingerprint: 0,
            delta_train_fingerprint: 0,
            delta_data_dependent: false,
            rows_fingerprint: 0,
            cols_fingerprint: 0,
        };
        let d = DistanceMatrix::new(2, 2, vec![0.0, 1.0, 3.0, 0.0], false, true, prov);
        let s = d.symmetrize().unwrap();
        assert_eq!(s.get(0, 1), 2.0);
        assert_eq!(s.get(1, 0), 2.0);
        assert!(s.is_symmetric());
    }
}
