//! Independent category dissimilarities: each variable's block is built from
//! that variable's own schema or observed frequencies, ignoring all other
//! variables.
//!
//! Logarithm convention: natural log throughout this module. Lin's
//! dissimilarity is a ratio of logs and therefore base-invariant; IOF and OF
//! are not, and natural log is the normative choice here.

use crate::cooccur::MarginalTable;
use crate::dataset::CategoricalDataset;
use crate::delta::{BlockDiagonalDelta, DeltaBlock, DeltaProvenance};
use crate::error::{Error, Result};
use crate::measures::{LinGuard, Measure, MeasureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoodallVariant {
    G1,
    G2,
    G3,
    G4,
}

impl GoodallVariant {
    pub fn number(self) -> u8 {
        match self {
            GoodallVariant::G1 => 1,
            GoodallVariant::G2 => 2,
            GoodallVariant::G3 => 3,
            GoodallVariant::G4 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariabilityVariant {
    /// VE: one minus normalized entropy on the diagonal.
    Entropy,
    /// VM: one minus normalized Gini on the diagonal.
    Mutability,
}

fn provenance(measure: Measure, train: u64, schema: u64, warnings: Vec<String>) -> DeltaProvenance {
    let data_dependent = measure.is_data_dependent();
    DeltaProvenance {
        measure: measure.canonical_name(),
        spec_fingerprint: MeasureSpec::new(measure).fingerprint(),
        train_fingerprint: train,
        schema_fingerprint: schema,
        data_dependent,
        warnings,
    }
}

/// Simple matching: every pair of distinct categories has dissimilarity 1,
/// so the resulting distance counts mismatching variables.
pub fn build_matching(ds: &CategoricalDataset) -> Result<BlockDiagonalDelta> {
    let blocks = ds
        .predictor_indices()
        .into_iter()
        .map(|j| {
            let v = ds.variable(j);
            let q = v.n_levels();
            let mut vals = vec![1.0; q * q];
            for a in 0..q {
                vals[a * q + a] = 0.0;
            }
            DeltaBlock::new(j, &v.name, v.levels.clone(), vals)
        })
        .collect();
    Ok(BlockDiagonalDelta::new(
        blocks,
        true,
        true,
        provenance(
            Measure::Matching,
            ds.predictor_fingerprint(),
            ds.predictor_schema_fingerprint(),
            vec![],
        ),
    ))
}

/// Eskin: off-diagonal 2/q^2, so variables with more categories contribute
/// smaller dissimilarities. With equal q everywhere this rescales matching.
pub fn build_eskin(ds: &CategoricalDataset) -> Result<BlockDiagonalDelta> {
    let blocks = ds
        .predictor_indices()
        .into_iter()
        .map(|j| {
            let v = ds.variable(j);
            let q = v.n_levels();
            let off = 2.0 / (q as f64 * q as f64);
            let mut vals = vec![off; q * q];
            for a in 0..q {
                vals[a * q + a] = 0.0;
            }
            DeltaBlock::new(j, &v.name, v.levels.clone(), vals)
        })
        .collect();
    Ok(BlockDiagonalDelta::new(
        blocks,
        true,
        true,
        provenance(
            Measure::Eskin,
            ds.predictor_fingerprint(),
            ds.predictor_schema_fingerprint(),
            vec![],
        ),
    ))
}

/// Lin: off-diagonal [log p_a + log p_b - 2 log(p_a + p_b)] / 2 log(p_a + p_b),
/// zero diagonal. Frequent categories give heavier mismatches. When
/// p_a + p_b = 1 (always the case for binary variables) the denominator
/// vanishes; `guard` decides between a domain error and clamping the sum.
pub fn build_lin(marg: &MarginalTable, guard: LinGuard) -> Result<BlockDiagonalDelta> {
    let n = marg.n();
    let eps = guard.epsilon(n);
    let mut warnings = Vec::new();
    let mut blocks = Vec::new();
    for j in marg.predictor_indices() {
        let q = marg.q(j);
        let counts = marg.counts(j);
        let undefined: Vec<bool> = counts.iter().map(|&c| c == 0).collect();
        let mut vals = vec![0.0; q * q];
        let mut clamped_pairs = 0usize;
        for a in 0..q {
            if undefined[a] {
                continue;
            }
            for b in (a + 1)..q {
                if undefined[b] {
                    continue;
                }
                // Detect the singular sum exactly via integer counts; the
                // floating sum of two count/n ratios can miss 1.0.
                let singular = counts[a] + counts[b] == n as u64;
                let s = if singular {
                    match eps {
                        None => {
                            return Err(Error::LinSingularity {
                                variable: marg.name(j).to_string(),
                                cat_a: marg.level(j, a).to_string(),
                                cat_b: marg.level(j, b).to_string(),
                            })
                        }
                        Some(e) => {
                            clamped_pairs += 1;
                            1.0 - e
                        }
                    }
                } else {
                    let s0 = (counts[a] + counts[b]) as f64 / n as f64;
                    match eps {
                        Some(e) => s0.min(1.0 - e),
                        None => s0,
                    }
                };
                let (pa, pb) = (
                    counts[a] as f64 / n as f64,
                    counts[b] as f64 / n as f64,
                );
                let num = pa.ln() + pb.ln() - 2.0 * s.ln();
                let den = 2.0 * s.ln();
                let d = num / den;
                vals[a * q + b] = d;
                vals[b * q + a] = d;
            }
        }
        if clamped_pairs > 0 {
            warnings.push(format!(
                "lin: clamped {clamped_pairs} category pair(s) with p_a + p_b = 1 in variable '{}'",
                marg.name(j)
            ));
        }
        blocks.push(DeltaBlock::with_undefined(
            j,
            marg.name(j),
            marg.levels(j).to_vec(),
            vals,
            undefined,
        ));
    }
    let mut spec = MeasureSpec::new(Measure::Lin);
    spec.lin_guard = guard;
    let mut prov = provenance(
        Measure::Lin,
        marg.source_fingerprint(),
        marg.schema_fingerprint(),
        warnings,
    );
    prov.spec_fingerprint = spec.fingerprint();
    Ok(BlockDiagonalDelta::new(blocks, true, true, prov))
}

/// Inverse occurrence frequency: off-diagonal log(n p_a) log(n p_b) — larger
/// dissimilarity for frequently observed categories.
pub fn build_iof(marg: &MarginalTable) -> Result<BlockDiagonalDelta> {
    let mut warnings = Vec::new();
    let blocks = freq_product_blocks(marg, |count, _n| (count as f64).ln());
    for j in marg.predictor_indices() {
        for (l, &c) in marg.counts(j).iter().enumerate() {
            if c == 1 {
                warnings.push(format!(
                    "iof: category '{}' of variable '{}' has count 1, so its pairs get dissimilarity 0",
                    marg.level(j, l),
                    marg.name(j)
                ));
            }
        }
    }
    Ok(BlockDiagonalDelta::new(
        blocks,
        true,
        true,
        provenance(
            Measure::Iof,
            marg.source_fingerprint(),
            marg.schema_fingerprint(),
            warnings,
        ),
    ))
}

/// Occurrence frequency: off-diagonal log(1/p_a) log(1/p_b) — larger
/// dissimilarity for rarely observed categories. Equals log(p_a) log(p_b)
/// and is non-negative.
pub fn build_of(marg: &MarginalTable) -> Result<BlockDiagonalDelta> {
    let blocks = freq_product_blocks(marg, |count, n| (n as f64 / count as f64).ln());
    Ok(BlockDiagonalDelta::new(
        blocks,
        true,
        true,
        provenance(
            Measure::Of,
            marg.source_fingerprint(),
            marg.schema_fingerprint(),
            vec![],
        ),
    ))
}

/// Shared shape of IOF/OF: off-diagonal = f(a) * f(b), zero diagonal.
fn freq_product_blocks(
    marg: &MarginalTable,
    f: impl Fn(u64, usize) -> f64,
) -> Vec<DeltaBlock> {
    let n = marg.n();
    marg.predictor_indices()
        .into_iter()
        .map(|j| {
            let q = marg.q(j);
            let counts = marg.counts(j);
            let undefined: Vec<bool> = counts.iter().map(|&c| c == 0).collect();
            let factors: Vec<f64> = counts
                .iter()
                .map(|&c| if c == 0 { 0.0 } else { f(c, n) })
                .collect();
            let mut vals = vec![0.0; q * q];
            for a in 0..q {
                if undefined[a] {
                    continue;
                }
                for b in (a + 1)..q {
                    if undefined[b] {
                        continue;
                    }
                    let d = factors[a] * factors[b];
                    vals[a * q + b] = d;
                    vals[b * q + a] = d;
                }
            }
            DeltaBlock::with_undefined(j, marg.name(j), marg.levels(j).to_vec(), vals, undefined)
        })
        .collect()
}

/// Goodall 1-4: off-diagonal always 1; the diagonal (the "cost" of a match)
/// depends on the observed proportions. The conditional sums of G1/G2
/// include the category itself, so tied proportions contribute to both.
pub fn build_goodall(marg: &MarginalTable, variant: GoodallVariant) -> Result<BlockDiagonalDelta> {
    let blocks = marg
        .predictor_indices()
        .into_iter()
        .map(|j| {
            let q = marg.q(j);
            let props = marg.props(j);
            let undefined: Vec<bool> = marg.counts(j).iter().map(|&c| c == 0).collect();
            let mut vals = vec![1.0; q * q];
            for a in 0..q {
                if undefined[a] {
                    for b in 0..q {
                        vals[a * q + b] = 0.0;
                        vals[b * q + a] = 0.0;
                    }
                    continue;
                }
                let pa = props[a];
                vals[a * q + a] = match variant {
                    GoodallVariant::G1 => props
                        .iter()
                        .filter(|&&p| p > 0.0 && p <= pa)
                        .map(|&p| p * p)
                        .sum(),
                    GoodallVariant::G2 => props
                        .iter()
                        .filter(|&&p| p > 0.0 && p >= pa)
                        .map(|&p| p * p)
                        .sum(),
                    GoodallVariant::G3 => pa * pa,
                    GoodallVariant::G4 => 1.0 - pa * pa,
                };
            }
            DeltaBlock::with_undefined(j, marg.name(j), marg.levels(j).to_vec(), vals, undefined)
        })
        .collect();
    Ok(BlockDiagonalDelta::new(
        blocks,
        true,
        false,
        provenance(
            Measure::Goodall(variant),
            marg.source_fingerprint(),
            marg.schema_fingerprint(),
            vec![],
        ),
    ))
}

/// VE / VM: off-diagonal 1; diagonal one minus the normalized entropy
/// (respectively Gini) of the variable, so matches on low-variability
/// variables cost more. Requires q >= 2.
pub fn build_variability(
    marg: &MarginalTable,
    variant: VariabilityVariant,
) -> Result<BlockDiagonalDelta> {
    let mut blocks = Vec::new();
    for j in marg.predictor_indices() {
        let q = marg.q(j);
        if q < 2 {
            return Err(Error::ConstantVariable {
                variable: marg.name(j).to_string(),
            });
        }
        let props = marg.props(j);
        let undefined: Vec<bool> = marg.counts(j).iter().map(|&c| c == 0).collect();
        let diag = match variant {
            VariabilityVariant::Entropy => {
                let h: f64 = props
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|&p| p * p.ln())
                    .sum();
                1.0 + h / (q as f64).ln()
            }
            VariabilityVariant::Mutability => {
                let gini = 1.0 - props.iter().map(|&p| p * p).sum::<f64>();
                1.0 - (q as f64 / (q as f64 - 1.0)) * gini
            }
        }
        .clamp(0.0, 1.0);
        let mut vals = vec![1.0; q * q];
        for a in 0..q {
            if undefined[a] {
                for b in 0..q {
                    vals[a * q + b] = 0.0;
                    vals[b * q + a] = 0.0;
                }
            } else {
                vals[a * q + a] = diag;
            }
        }
        blocks.push(DeltaBlock::with_undefined(
            j,
            marg.name(j),
            marg.levels(j).to_vec(),
            vals,
            undefined,
        ));
    }
    let measure = match variant {
        VariabilityVariant::Entropy => Measure::VariableEntropy,
        VariabilityVariant::Mutability => Measure::VariableMutability,
    };
    Ok(BlockDiagonalDelta::new(
        blocks,
        true,
        false,
        provenance(
            measure,
            marg.source_fingerprint(),
            marg.schema_fingerprint(),
            vec![],
        ),
    ))
}

/// Ordered categories: dissimilarity is the absolute difference of level
/// scores (level index by default, custom scores e.g. bin midpoints).
/// Non-monotone custom scores violate the ordered-dissimilarity condition;
/// they are reported as a warning, not repaired.
pub fn build_ordered(ds: &CategoricalDataset) -> Result<BlockDiagonalDelta> {
    let mut warnings = Vec::new();
    let mut blocks = Vec::new();
    for j in ds.predictor_indices() {
        let v = ds.variable(j);
        let q = v.n_levels();
        let scores = v.scores();
        let mut vals = vec![0.0; q * q];
        for a in 0..q {
            for b in 0..q {
                vals[a * q + b] = (scores[b] - scores[a]).abs();
            }
        }
        if !monotone_along_order(&vals, q) {
            warnings.push(format!(
                "ordered: custom scores for variable '{}' are not monotone along the category order",
                v.name
            ));
        }
        blocks.push(DeltaBlock::new(j, &v.name, v.levels.clone(), vals));
    }
    Ok(BlockDiagonalDelta::new(
        blocks,
        true,
        true,
        provenance(
            Measure::Ordered,
            ds.predictor_fingerprint(),
            ds.predictor_schema_fingerprint(),
            warnings,
        ),
    ))
}

/// Ordered-dissimilarity condition: moving further along the order away from
/// `a` must never decrease the dissimilarity, on either side.
fn monotone_along_order(vals: &[f64], q: usize) -> bool {
    for a in 0..q {
        for b in (a + 1)..q.saturating_sub(1) {
            if vals[a * q + b] > vals[a * q + b + 1] {
                return false;
            }
        }
        for b in (1..a).rev() {
            if vals[a * q + b] > vals[a * q + b - 1] {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VariableSchema;

    fn ds_with_props(counts: &[&[u64]]) -> CategoricalDataset {
        // Build a dataset realizing the given per-variable level counts.
        let n: u64 = counts[0].iter().sum();
        let vars: Vec<VariableSchema> = counts
            .iter()
            .enumerate()
            .map(|(j, c)| {
                VariableSchema::new(
                    format!("v{j}"),
                    (0..c.len()).map(|l| format!("l{l}")).collect(),
                )
            })
            .collect();
        let codes: Vec<Vec<u32>> = counts
            .iter()
            .map(|c| {
                assert_eq!(c.iter().sum::<u64>(), n);
                let mut col = Vec::new();
                for (l, &k) in c.iter().enumerate() {
                    col.extend(std::iter::repeat(l as u32).take(k as usize));
                }
                col
            })
            .collect();
        CategoricalDataset::from_parts(vars, codes).unwrap()
    }

    #[test]
    fn matching_block_values() {
        let ds = ds_with_props(&[&[2, 1, 1]]);
        let delta = build_matching(&ds).unwrap();
        let b = delta.block(0);
        assert_eq!(
            b.values(),
            &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]
        );
    }

    #[test]
    fn matching_degenerate_single_level() {
        let ds = ds_with_props(&[&[3]]);
        let delta = build_matching(&ds).unwrap();
        assert_eq!(delta.block(0).values(), &[0.0]);
    }

    #[test]
    fn eskin_values() {
        let ds = ds_with_props(&[&[2, 2], &[2, 1, 1]]);
        let delta = build_eskin(&ds).unwrap();
        assert_eq!(delta.block(0).get(0, 1), 0.5);
        assert!((delta.block(1).get(0, 1) - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn eskin_rescales_matching_for_equal_q() {
        let ds = ds_with_props(&[&[2, 2], &[3, 1]]);
        let e = build_eskin(&ds).unwrap();
        let m = build_matching(&ds).unwrap();
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    assert_eq!(e.block(j).get(a, b), 0.5 * m.block(j).get(a, b));
                }
            }
        }
    }

    // Direct scalar evaluation of Lin's off-diagonal formula.
    fn lin_scalar(pa: f64, pb: f64) -> f64 {
        (pa.ln() + pb.ln() - 2.0 * (pa + pb).ln()) / (2.0 * (pa + pb).ln())
    }

    #[test]
    fn lin_golden_value() {
        // p = (0.2, 0.3, 0.5) over n = 10.
        let ds = ds_with_props(&[&[2, 3, 5]]);
        let marg = MarginalTable::from_dataset(&ds);
        let delta = build_lin(&marg, LinGuard::Strict).unwrap();
        let d = delta.block(0).get(0, 1);
        assert!((d - 1.029447).abs() < 1e-6);
        assert!((d - lin_scalar(0.2, 0.3)).abs() < 1e-12);
        assert_eq!(delta.block(0).get(0, 0), 0.0);
    }

    #[test]
    fn lin_equal_props() {
        // p_a = p_b = 0.25 with p_a + p_b = 0.5 < 1.
        let ds = ds_with_props(&[&[1, 1, 2]]);
        let marg = MarginalTable::from_dataset(&ds);
        let delta = build_lin(&marg, LinGuard::Strict).unwrap();
        let expect = (2.0 * 0.25f64.ln() - 2.0 * 0.5f64.ln()) / (2.0 * 0.5f64.ln());
        assert!((delta.block(0).get(0, 1) - expect).abs() < 1e-12);
    }

    #[test]
    fn lin_binary_singularity() {
        let ds = ds_with_props(&[&[2, 2]]);
        let marg = MarginalTable::from_dataset(&ds);
        assert!(matches!(
            build_lin(&marg, LinGuard::Strict),
            Err(Error::LinSingularity { .. })
        ));
        // Clamp mode computes a finite value and records a warning.
        let delta = build_lin(&marg, LinGuard::DefaultClamp).unwrap();
        assert!(delta.block(0).get(0, 1).is_finite());
        assert!(!delta.provenance().warnings.is_empty());
    }

    #[test]
    fn iof_golden_value() {
        // n = 100: counts 10, 20, 70. Off-diagonal is ln(10) * ln(20),
        // about 6.8979284.
        let ds = ds_with_props(&[&[10, 20, 70]]);
        let marg = MarginalTable::from_dataset(&ds);
        let delta = build_iof(&marg).unwrap();
        let expect = 10f64.ln() * 20f64.ln();
        assert!((delta.block(0).get(0, 1) - expect).abs() < 1e-12);
        assert!((expect - 6.8979284).abs() < 1e-6);
    }

    #[test]
    fn iof_singleton_count_gives_zero_row() {
        let ds = ds_with_props(&[&[1, 4, 5]]);
        let marg = MarginalTable::from_dataset(&ds);
        let delta = build_iof(&marg).unwrap();
        assert_eq!(delta.block(0).get(0, 1), 0.0);
        assert_eq!(delta.block(0).get(0, 2), 0.0);
        assert!(delta
            .provenance()
            .warnings
            .iter()
            .any(|w| w.contains("count 1")));
    }

    #[test]
    fn of_golden_value() {
        // n = 10: p = (0.1, 0.2, 0.7).
        let ds = ds_with_props(&[&[1, 2, 7]]);
        let marg = MarginalTable::from_dataset(&ds);
        let delta = build_of(&marg).unwrap();
        let expect = 10f64.ln() * 5f64.ln();
        assert!((delta.block(0).get(0, 1) - expect).abs() < 1e-12);
        assert!((expect - 3.705867).abs() < 1e-6);
        // log(p_a) log(p_b) form agrees.
        assert!((delta.block(0).get(0, 1) - 0.1f64.ln() * 0.2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn goodall_diagonals() {
        // p = (0.5, 0.3, 0.2) over n = 10.
        let ds = ds_with_props(&[&[5, 3, 2]]);
        let marg = MarginalTable::from_dataset(&ds);
        let g1 = build_goodall(&marg, GoodallVariant::G1).unwrap();
        let g2 = build_goodall(&marg, GoodallVariant::G2).unwrap();
        let g3 = build_goodall(&marg, GoodallVariant::G3).unwrap();
        let g4 = build_goodall(&marg, GoodallVariant::G4).unwrap();
        // Category 1 has p = 0.3.
        assert!((g1.block(0).get(1, 1) - 0.13).abs() < 1e-12);
        assert!((g2.block(0).get(1, 1) - 0.34).abs() < 1e-12);
        assert!((g3.block(0).get(1, 1) - 0.09).abs() < 1e-12);
        assert!((g4.block(0).get(1, 1) - 0.91).abs() < 1e-12);
        // Off-diagonal is 1 for every variant.
        for d in [&g1, &g2, &g3, &g4] {
            assert_eq!(d.block(0).get(0, 1), 1.0);
            assert!(!d.has_zero_diagonal());
        }
    }

    #[test]
    fn variability_uniform_diagonals_are_zero() {
        let binary = ds_with_props(&[&[5, 5]]);
        let marg = MarginalTable::from_dataset(&binary);
        let ve = build_variability(&marg, VariabilityVariant::Entropy).unwrap();
        assert!(ve.block(0).get(0, 0).abs() < 1e-12);

        let ternary = ds_with_props(&[&[4, 4, 4]]);
        let marg = MarginalTable::from_dataset(&ternary);
        let vm = build_variability(&marg, VariabilityVariant::Mutability).unwrap();
        assert!(vm.block(0).get(0, 0).abs() < 1e-12);
    }

    #[test]
    fn variability_low_variance_diagonal_near_one() {
        let ds = ds_with_props(&[&[999, 1]]);
        let marg = MarginalTable::from_dataset(&ds);
        let ve = build_variability(&marg, VariabilityVariant::Entropy).unwrap();
        let vm = build_variability(&marg, VariabilityVariant::Mutability).unwrap();
        assert!(ve.block(0).get(0, 0) > 0.98);
        assert!(vm.block(0).get(0, 0) > 0.99);
    }

    #[test]
    fn variability_rejects_constant_variable() {
        let ds = ds_with_props(&[&[4]]);
        let marg = MarginalTable::from_dataset(&ds);
        assert!(matches!(
            build_variability(&marg, VariabilityVariant::Entropy),
            Err(Error::ConstantVariable { .. })
        ));
    }

    #[test]
    fn ordered_default_scores() {
        let ds = ds_with_props(&[&[1, 1, 1, 1]]);
        let delta = build_ordered(&ds).unwrap();
        assert_eq!(delta.block(0).get(0, 3), 3.0);
        assert_eq!(delta.block(0).get(2, 2), 0.0);
        assert!(delta.provenance().warnings.is_empty());
    }

    #[test]
    fn ordered_custom_scores() {
        let mut ds = ds_with_props(&[&[1, 1, 1]]);
        // Bin midpoints for age groups.
        let mut vars = ds.variables().to_vec();
        vars[0].ordered_scores = Some(vec![18.0, 35.0, 60.0]);
        ds = CategoricalDataset::from_parts(
            vars,
            vec![ds.codes_of(0).to_vec()],
        )
        .unwrap();
        let delta = build_ordered(&ds).unwrap();
        assert_eq!(delta.block(0).get(0, 2), 42.0);
    }

    #[test]
    fn ordered_non_monotone_scores_warn() {
        let mut vars = vec![VariableSchema::new(
            "v0",
            vec!["a".into(), "b".into(), "c".into()],
        )];
        vars[0].ordered_scores = Some(vec![0.0, 5.0, 1.0]);
        let ds = CategoricalDataset::from_parts(vars, vec![vec![0, 1, 2]]).unwrap();
        let delta = build_ordered(&ds).unwrap();
        assert!(delta
            .provenance()
            .warnings
            .iter()
            .any(|w| w.contains("not monotone")));
    }

    #[test]
    fn goodall_g1_g2_overlap_identity() {
        // Tie-free proportions: G1(a) + G2(a) = sum p^2 + p_a^2.
        let ds = ds_with_props(&[&[5, 3, 2]]);
        let marg = MarginalTable::from_dataset(&ds);
        let g1 = build_goodall(&marg, GoodallVariant::G1).unwrap();
        let g2 = build_goodall(&marg, GoodallVariant::G2).unwrap();
        let sum_sq: f64 = marg.props(0).iter().map(|p| p * p).sum();
        for a in 0..3 {
            let pa = marg.props(0)[a];
            let lhs = g1.block(0).get(a, a) + g2.block(0).get(a, a);
            assert!((lhs - (sum_sq + pa * pa)).abs() < 1e-12);
        }
    }

    #[test]
    fn unobserved_levels_are_marked_undefined() {
        let ds = ds_with_props(&[&[2, 2, 2, 1]]);
        let sub = ds.subset(&[0, 1, 2, 3, 4, 5]).unwrap(); // drops the only l3 row
        let marg = MarginalTable::from_dataset(&sub);
        let delta = build_lin(&marg, LinGuard::Strict).unwrap();
        assert!(delta.block(0).is_undefined(3));
        assert!(!delta.block(0).is_undefined(0));
        assert!(delta.has_undefined());
    }
}
