//! Block-diagonal category dissimilarity matrices: one square block per
//! variable, collecting the pairwise dissimilarities between that variable's
//! categories. The blocks fully determine every between-observation
//! distance.

use serde::Serialize;

/// Square dissimilarity block for one variable. Levels whose dissimilarities
/// could not be computed (zero-count categories of a training subset) are
/// marked undefined; the distance layer decides what to do when a code hits
/// them.
#[derive(Debug, Clone)]
pub struct DeltaBlock {
    variable_index: usize,
    variable_name: String,
    levels: Vec<String>,
    order: usize,
    /// Row-major order x order. Undefined rows/columns hold 0.0 placeholders.
    values: Vec<f64>,
    undefined: Vec<bool>,
    any_undefined: bool,
    max_defined_offdiag: f64,
}

impl DeltaBlock {
    pub fn new(
        variable_index: usize,
        variable_name: impl Into<String>,
        levels: Vec<String>,
        values: Vec<f64>,
    ) -> Self {
        let order = levels.len();
        Self::with_undefined(variable_index, variable_name, levels, values, vec![false; order])
    }

    pub fn with_undefined(
        variable_index: usize,
        variable_name: impl Into<String>,
        levels: Vec<String>,
        values: Vec<f64>,
        undefined: Vec<bool>,
    ) -> Self {
        let order = levels.len();
        assert_eq!(values.len(), order * order, "block must be square");
        assert_eq!(undefined.len(), order);
        let mut max_off = 0.0f64;
        for a in 0..order {
            for b in 0..order {
                if a != b && !undefined[a] && !undefined[b] {
                    max_off = max_off.max(values[a * order + b]);
                }
            }
        }
        DeltaBlock {
            variable_index,
            variable_name: variable_name.into(),
            levels,
            order,
            values,
            any_undefined: undefined.iter().any(|&u| u),
            undefined,
            max_defined_offdiag: max_off,
        }
    }

    /// Index of the variable in the (predictor) dataset this block belongs to.
    pub fn variable_index(&self) -> usize {
        self.variable_index
    }

    pub fn variable_name(&self) -> &str {
        &self.variable_name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Raw entry; meaningless when either level is undefined.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.order + b]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_undefined(&self, level: usize) -> bool {
        self.undefined[level]
    }

    pub fn has_undefined(&self) -> bool {
        self.any_undefined
    }

    pub fn undefined_levels(&self) -> Vec<usize> {
        (0..self.order).filter(|&l| self.undefined[l]).collect()
    }

    /// Largest off-diagonal entry among defined level pairs (the fill value
    /// for the `max` unseen policy).
    pub fn max_defined_offdiag(&self) -> f64 {
        self.max_defined_offdiag
    }

    pub(crate) fn scale(&self, c: f64) -> DeltaBlock {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out.max_defined_offdiag *= c;
        out
    }
}

/// Where a dissimilarity matrix came from: enough to detect fold mixing and
/// to label exported artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaProvenance {
    /// Canonical measure name (e.g. "matching", "supervised_tvd").
    pub measure: String,
    /// Fingerprint of the full measure spec (guards, weights, flags).
    pub spec_fingerprint: u64,
    /// Predictor-data fingerprint of the dataset the blocks were built from.
    pub train_fingerprint: u64,
    /// Predictor-schema fingerprint of that dataset.
    pub schema_fingerprint: u64,
    /// False for measures that depend on the schema only (matching, eskin,
    /// ordered); their blocks are identical however the rows are split.
    pub data_dependent: bool,
    /// Non-fatal observations from the builder (singleton counts, clamps,
    /// non-monotone scores).
    pub warnings: Vec<String>,
}

/// All per-variable dissimilarity blocks for one measure, plus flags the
/// distance layer propagates.
#[derive(Debug, Clone)]
pub struct BlockDiagonalDelta {
    blocks: Vec<DeltaBlock>,
    symmetric: bool,
    zero_diagonal: bool,
    provenance: DeltaProvenance,
}

impl BlockDiagonalDelta {
    pub fn new(
        blocks: Vec<DeltaBlock>,
        symmetric: bool,
        zero_diagonal: bool,
        provenance: DeltaProvenance,
    ) -> Self {
        BlockDiagonalDelta {
            blocks,
            symmetric,
            zero_diagonal,
            provenance,
        }
    }

    pub fn blocks(&self) -> &[DeltaBlock] {
        &self.blocks
    }

    pub fn block(&self, idx: usize) -> &DeltaBlock {
        &self.blocks[idx]
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Sum of block orders (the order of the full block-diagonal matrix).
    pub fn total_order(&self) -> usize {
        self.blocks.iter().map(|b| b.order()).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_zero_diagonal(&self) -> bool {
        self.zero_diagonal
    }

    pub fn provenance(&self) -> &DeltaProvenance {
        &self.provenance
    }

    pub fn has_undefined(&self) -> bool {
        self.blocks.iter().any(|b| b.has_undefined())
    }

    /// Multiply every block entry by `c > 0` (weight rescaling).
    pub fn scale(&self, c: f64) -> BlockDiagonalDelta {
        BlockDiagonalDelta {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
            symmetric: self.symmetric,
            zero_diagonal: self.zero_diagonal,
            provenance: self.provenance.clone(),
        }
    }
}
