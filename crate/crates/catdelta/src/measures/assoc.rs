//! Association-based category dissimilarities: the dissimilarity between two
//! categories of variable i is a weighted sum, over the other variables j, of
//! a divergence between their profile rows (conditional distributions of j's
//! categories). Includes the supervised variants that append the response as
//! an extra variable, and a brute-force partition-maximization oracle that is
//! provably equal to the total variation distance.

use std::fmt;
use std::sync::Arc;

use crate::cooccur::CooccurrenceModel;
use crate::dataset::CategoricalDataset;
use crate::delta::{BlockDiagonalDelta, DeltaBlock, DeltaProvenance};
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprinter;

/// Largest number of categories the partition-enumeration oracle accepts
/// (2^q - 2 partitions; beyond this the enumeration is the problem the
/// closed form solves).
pub const ORACLE_MAX_CATEGORIES: usize = 20;

/// Total variation distance between two discrete distributions: half the L1
/// norm. In [0, 1]; zero iff the distributions are equal.
pub fn phi_tvd(r_a: &[f64], r_b: &[f64]) -> Result<f64> {
    if r_a.len() != r_b.len() {
        return Err(Error::LengthMismatch {
            expected: r_a.len(),
            got: r_b.len(),
        });
    }
    Ok(0.5 * r_a.iter().zip(r_b).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Partition-maximization dissimilarity: the maximum over all non-trivial
/// binary partitions of the categories of |sum of profile differences inside
/// the partition|. Exactly equal to [`phi_tvd`]; kept as an independent
/// oracle and for benchmarking the closed form against the enumeration.
pub fn ahmad_dey_oracle(r_a: &[f64], r_b: &[f64]) -> Result<f64> {
    if r_a.len() != r_b.len() {
        return Err(Error::LengthMismatch {
            expected: r_a.len(),
            got: r_b.len(),
        });
    }
    let q = r_a.len();
    if q > ORACLE_MAX_CATEGORIES {
        return Err(Error::GuardExceeded {
            what: format!("oracle enumeration over {q} categories"),
            limit: ORACLE_MAX_CATEGORIES,
        });
    }
    if q < 2 {
        return Ok(0.0);
    }
    let diffs: Vec<f64> = r_a.iter().zip(r_b).map(|(a, b)| a - b).collect();
    let full: u32 = (1u32 << q) - 1;
    let mut best = 0.0f64;
    for mask in 1..full {
        let mut sum = 0.0;
        for (l, d) in diffs.iter().enumerate() {
            if mask & (1 << l) != 0 {
                sum += d;
            }
        }
        best = best.max(sum.abs());
    }
    Ok(best)
}

/// Symmetrized Kullback-Leibler divergence between two profiles, in binary
/// logarithm. Entries below `floor` are raised to `floor` inside this
/// function only (no renormalization), keeping the value finite on sparse
/// profiles. With `floor = 0` a zero entry is a domain error.
pub fn phi_kl(r_a: &[f64], r_b: &[f64], floor: f64) -> Result<f64> {
    kl_impl(r_a, r_b, floor, false)
}

/// One-directional KL sum (profile a against profile b). Not symmetric;
/// dissimilarity matrices built from it are flagged accordingly.
pub fn phi_kl_directed(r_a: &[f64], r_b: &[f64], floor: f64) -> Result<f64> {
    kl_impl(r_a, r_b, floor, true)
}

fn kl_impl(r_a: &[f64], r_b: &[f64], floor: f64, directed: bool) -> Result<f64> {
    if r_a.len() != r_b.len() {
        return Err(Error::LengthMismatch {
            expected: r_a.len(),
            got: r_b.len(),
        });
    }
    let mut total = 0.0;
    for (&a, &b) in r_a.iter().zip(r_b) {
        if floor <= 0.0 && (a <= 0.0 || b <= 0.0) {
            return Err(Error::KlZeroEntry);
        }
        let fa = a.max(floor);
        let fb = b.max(floor);
        total += fa * (fa / fb).log2();
        if !directed {
            total += fb * (fb / fa).log2();
        }
    }
    Ok(total)
}

/// Chi-squared distance between profiles: squared differences weighted by
/// the reciprocal of the target variable's marginal proportions.
pub fn phi_chisq(r_a: &[f64], r_b: &[f64], p_target: &[f64]) -> Result<f64> {
    if r_a.len() != r_b.len() {
        return Err(Error::LengthMismatch {
            expected: r_a.len(),
            got: r_b.len(),
        });
    }
    if p_target.len() != r_a.len() {
        return Err(Error::LengthMismatch {
            expected: r_a.len(),
            got: p_target.len(),
        });
    }
    let mut total = 0.0;
    for l in 0..r_a.len() {
        if p_target[l] <= 0.0 {
            return Err(Error::ZeroMarginal {
                variable: "target".into(),
                level: format!("#{l}"),
            });
        }
        let d = r_a[l] - r_b[l];
        total += d * d / p_target[l];
    }
    Ok(total)
}

/// A divergence between two profile rows. Custom divergences also receive
/// the target variable's marginal proportions so chi-squared-like forms fit
/// the same signature.
#[derive(Clone)]
pub enum ProfileDivergence {
    Tvd,
    Kl { floor: f64, directed: bool },
    ChiSquared,
    Custom(CustomDivergence),
}

/// Signature of a pluggable divergence: (profile a, profile b, target
/// marginals) -> value.
pub type DivergenceFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomDivergence {
    pub name: String,
    /// Declared by the author; drives the symmetry flag of built matrices.
    pub symmetric: bool,
    pub func: DivergenceFn,
}

impl fmt::Debug for ProfileDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileDivergence::Tvd => write!(f, "Tvd"),
            ProfileDivergence::Kl { floor, directed } => {
                write!(f, "Kl {{ floor: {floor}, directed: {directed} }}")
            }
            ProfileDivergence::ChiSquared => write!(f, "ChiSquared"),
            ProfileDivergence::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl ProfileDivergence {
    pub fn evaluate(&self, r_a: &[f64], r_b: &[f64], p_target: &[f64]) -> Result<f64> {
        match self {
            ProfileDivergence::Tvd => phi_tvd(r_a, r_b),
            ProfileDivergence::Kl { floor, directed } => kl_impl(r_a, r_b, *floor, *directed),
            ProfileDivergence::ChiSquared => phi_chisq(r_a, r_b, p_target),
            ProfileDivergence::Custom(c) => Ok((c.func)(r_a, r_b, p_target)),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            ProfileDivergence::Tvd | ProfileDivergence::ChiSquared => true,
            ProfileDivergence::Kl { directed, .. } => !directed,
            ProfileDivergence::Custom(c) => c.symmetric,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ProfileDivergence::Tvd => "tvd".into(),
            ProfileDivergence::Kl { directed: false, .. } => "kl".into(),
            ProfileDivergence::Kl { directed: true, .. } => "directed_kl".into(),
            ProfileDivergence::ChiSquared => "chisq".into(),
            ProfileDivergence::Custom(c) => format!("custom_{}", c.name),
        }
    }

    fn write_fingerprint(&self, h: &mut Fingerprinter) {
        h.write_str(&self.name());
        if let ProfileDivergence::Kl { floor, .. } = self {
            h.write_f64(*floor);
        }
    }
}

/// Divergence selection per ordered variable pair.
#[derive(Debug, Clone)]
pub enum PhiAssignment {
    /// Same divergence for every pair.
    Global(ProfileDivergence),
    /// A default plus explicit per-pair overrides keyed by (i, j).
    PerPair {
        default: ProfileDivergence,
        overrides: Vec<((usize, usize), ProfileDivergence)>,
    },
}

impl PhiAssignment {
    fn phi_for(&self, i: usize, j: usize) -> &ProfileDivergence {
        match self {
            PhiAssignment::Global(p) => p,
            PhiAssignment::PerPair { default, overrides } => overrides
                .iter()
                .find(|((a, b), _)| *a == i && *b == j)
                .map(|(_, p)| p)
                .unwrap_or(default),
        }
    }

    fn all_symmetric(&self) -> bool {
        match self {
            PhiAssignment::Global(p) => p.is_symmetric(),
            PhiAssignment::PerPair { default, overrides } => {
                default.is_symmetric() && overrides.iter().all(|(_, p)| p.is_symmetric())
            }
        }
    }

    fn name(&self) -> String {
        match self {
            PhiAssignment::Global(p) => p.name(),
            PhiAssignment::PerPair { .. } => "mixed".into(),
        }
    }

    fn write_fingerprint(&self, h: &mut Fingerprinter) {
        match self {
            PhiAssignment::Global(p) => p.write_fingerprint(h),
            PhiAssignment::PerPair { default, overrides } => {
                default.write_fingerprint(h);
                for ((i, j), p) in overrides {
                    h.write_u64(*i as u64);
                    h.write_u64(*j as u64);
                    p.write_fingerprint(h);
                }
            }
        }
    }
}

/// Non-negative pair weights with a zero diagonal.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    dim: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    /// All off-diagonal weights 1 (sums over context variables).
    pub fn ones(dim: usize) -> Self {
        Self::constant(dim, 1.0)
    }

    /// All off-diagonal weights 1/(dim - 1) (averages).
    pub fn mean(dim: usize) -> Self {
        Self::constant(dim, 1.0 / (dim as f64 - 1.0))
    }

    /// Weight 1 toward `response` only; everything else 0.
    pub fn response_only(dim: usize, response: usize) -> Self {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            if i != response {
                w[i * dim + response] = 1.0;
            }
        }
        WeightMatrix { dim, w }
    }

    fn constant(dim: usize, value: f64) -> Self {
        let mut w = vec![value; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 0.0;
        }
        WeightMatrix { dim, w }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        let mut w = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidWeights(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidWeights(format!(
                        "entry ({i}, {j}) = {v} must be finite and non-negative"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidWeights(format!(
                        "diagonal entry ({i}, {i}) must be 0, got {v}"
                    )));
                }
                w.push(v);
            }
        }
        Ok(WeightMatrix { dim, w })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.dim + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.w[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }
}

/// Supervised weighting variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupervisedMode {
    /// Only the association with the response counts.
    ResponseOnly,
    /// All pairs count, response included.
    Full,
}

/// Association-based blocks over all model variables: block i entry (a, b) is
/// the weighted sum over j of the divergence between the (i, j) profile rows
/// of categories a and b. Categories unobserved in the model's data give
/// undefined rows/columns rather than an error; the distance layer applies
/// the unseen policy.
pub fn build_delta_association(
    model: &CooccurrenceModel,
    phi: &PhiAssignment,
    weights: &WeightMatrix,
) -> Result<BlockDiagonalDelta> {
    let include: Vec<usize> = (0..model.n_vars()).collect();
    let (blocks, symmetric, zero_diag) = assoc_blocks(model, phi, weights, &include)?;
    let marg = model.marginal_table();
    let mut h = Fingerprinter::new();
    h.write_str("assoc");
    phi.write_fingerprint(&mut h);
    for &w in weights.values() {
        h.write_f64(w);
    }
    Ok(BlockDiagonalDelta::new(
        blocks,
        symmetric,
        zero_diag,
        DeltaProvenance {
            measure: phi.name(),
            spec_fingerprint: h.finish(),
            train_fingerprint: marg.source_fingerprint(),
            schema_fingerprint: marg.schema_fingerprint(),
            data_dependent: true,
            warnings: vec![],
        },
    ))
}

/// Supervised association blocks: the co-occurrence model is built over the
/// predictors plus the marked response, weights follow `mode`, and the
/// response's own block is dropped from the result.
pub fn build_delta_supervised(
    ds: &CategoricalDataset,
    phi: ProfileDivergence,
    mode: SupervisedMode,
    spec: &crate::measures::MeasureSpec,
) -> Result<BlockDiagonalDelta> {
    let resp = ds.response_index().ok_or(Error::NoResponse)?;
    let model = CooccurrenceModel::build(ds)?;
    let marg = model.marginal_table();
    let observed_classes = marg.counts(resp).iter().filter(|&&c| c > 0).count();
    if observed_classes < 2 {
        return Err(Error::SingleClass);
    }
    let nv = model.n_vars();
    let weights = match mode {
        SupervisedMode::ResponseOnly => WeightMatrix::response_only(nv, resp),
        SupervisedMode::Full => WeightMatrix::ones(nv),
    };
    let include: Vec<usize> = (0..nv).filter(|&i| i != resp).collect();
    let assignment = PhiAssignment::Global(phi);
    let (blocks, symmetric, zero_diag) = assoc_blocks(&model, &assignment, &weights, &include)?;
    Ok(BlockDiagonalDelta::new(
        blocks,
        symmetric,
        zero_diag,
        DeltaProvenance {
            measure: spec.canonical_name(),
            spec_fingerprint: spec.fingerprint(),
            train_fingerprint: marg.source_fingerprint(),
            schema_fingerprint: marg.schema_fingerprint(),
            data_dependent: true,
            warnings: vec![],
        },
    ))
}

fn assoc_blocks(
    model: &CooccurrenceModel,
    phi: &PhiAssignment,
    weights: &WeightMatrix,
    include: &[usize],
) -> Result<(Vec<DeltaBlock>, bool, bool)> {
    let nv = model.n_vars();
    if nv < 2 {
        return Err(Error::NeedsMultipleVariables);
    }
    if weights.dim() != nv {
        return Err(Error::InvalidWeights(format!(
            "weight matrix is {}x{}, model has {} variables",
            weights.dim(),
            weights.dim(),
            nv
        )));
    }
    let marg = model.marginal_table();
    // Profiles are compared over the observed categories of the target
    // variable only; unobserved targets carry zero mass in every profile row
    // and zero marginals, so restriction changes nothing for TVD and keeps
    // KL/chi-squared well defined on subsets.
    let keep: Vec<Vec<usize>> = (0..nv)
        .map(|j| {
            (0..marg.q(j))
                .filter(|&l| marg.observed(j, l))
                .collect()
        })
        .collect();
    let symmetric = phi.all_symmetric();

    let mut blocks = Vec::with_capacity(include.len());
    let mut max_abs_diag = 0.0f64;
    for (pos, &i) in include.iter().enumerate() {
        let qi = marg.q(i);
        let undefined: Vec<bool> = (0..qi).map(|a| !marg.observed(i, a)).collect();
        let defined: Vec<usize> = (0..qi).filter(|&a| !undefined[a]).collect();
        let mut vals = vec![0.0; qi * qi];
        for j in 0..nv {
            if j == i {
                continue;
            }
            let w = weights.get(i, j);
            if w == 0.0 {
                continue;
            }
            let block = model.profile(i, j)?;
            let keep_j = &keep[j];
            let p_full = marg.props(j);
            let p_rest: Vec<f64> = keep_j.iter().map(|&l| p_full[l]).collect();
            let rows: Vec<Vec<f64>> = defined
                .iter()
                .map(|&a| {
                    let full = block.row(a)?;
                    Ok(keep_j.iter().map(|&l| full[l]).collect())
                })
                .collect::<Result<_>>()?;
            let pair_phi = phi.phi_for(i, j);
            for (ia, &a) in defined.iter().enumerate() {
                let b_range: Box<dyn Iterator<Item = usize>> = if symmetric {
                    Box::new(ia..defined.len())
                } else {
                    Box::new(0..defined.len())
                };
                for ib in b_range {
                    let b = defined[ib];
                    let v = w * pair_phi.evaluate(&rows[ia], &rows[ib], &p_rest)?;
                    if symmetric {
                        vals[a * qi + b] += v;
                        if b != a {
                            vals[b * qi + a] += v;
                        }
                    } else {
                        vals[a * qi + b] += v;
                    }
                }
            }
        }
        for &a in &defined {
            max_abs_diag = max_abs_diag.max(vals[a * qi + a].abs());
        }
        blocks.push(DeltaBlock::with_undefined(
            pos,
            marg.name(i),
            marg.levels(i).to_vec(),
            vals,
            undefined,
        ));
    }
    Ok((blocks, symmetric, max_abs_diag <= 1e-12))
}
