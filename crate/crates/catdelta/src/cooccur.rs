//! Co-occurrence statistics: per-variable marginal proportions and, for every
//! ordered variable pair, the profile rows (empirical conditional
//! distributions of one variable's categories given a category of another).
//!
//! Counts are accumulated as integers and divided once at the end, so joint
//! proportions are exact ratios count/n and the integer-reconstruction
//! invariant holds exactly. Joint blocks are stored for the upper triangle
//! only; the (j,i) block is the transpose of (i,j). Profile blocks are stored
//! for both directions since they normalize differently.

use crate::dataset::CategoricalDataset;
use crate::error::{Error, Result};

/// Observed relative frequencies per variable, with the raw counts kept for
/// exact reconstruction. Covers every variable of the source dataset
/// (response included, when one is marked).
#[derive(Debug, Clone)]
pub struct MarginalTable {
    n: usize,
    names: Vec<String>,
    levels: Vec<Vec<String>>,
    counts: Vec<Vec<u64>>,
    props: Vec<Vec<f64>>,
    response: Option<usize>,
    source_fingerprint: u64,
    schema_fingerprint: u64,
}

impl MarginalTable {
    pub fn from_dataset(ds: &CategoricalDataset) -> Self {
        let mut counts: Vec<Vec<u64>> = (0..ds.n_vars()).map(|j| vec![0u64; ds.q(j)]).collect();
        for (j, col) in counts.iter_mut().enumerate() {
            for &c in ds.codes_of(j) {
                col[c as usize] += 1;
            }
        }
        let n = ds.n_rows();
        let props = counts
            .iter()
            .map(|col| col.iter().map(|&c| c as f64 / n as f64).collect())
            .collect();
        MarginalTable {
            n,
            names: ds.variables().iter().map(|v| v.name.clone()).collect(),
            levels: ds.variables().iter().map(|v| v.levels.clone()).collect(),
            counts,
            props,
            response: ds.response_index(),
            source_fingerprint: ds.predictor_fingerprint(),
            schema_fingerprint: ds.predictor_schema_fingerprint(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn q(&self, j: usize) -> usize {
        self.props[j].len()
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn level(&self, j: usize, l: usize) -> &str {
        &self.levels[j][l]
    }

    pub fn levels(&self, j: usize) -> &[String] {
        &self.levels[j]
    }

    /// Relative frequencies p_j (entries may be zero on subsets).
    pub fn props(&self, j: usize) -> &[f64] {
        &self.props[j]
    }

    pub fn counts(&self, j: usize) -> &[u64] {
        &self.counts[j]
    }

    pub fn observed(&self, j: usize, level: usize) -> bool {
        self.counts[j][level] > 0
    }

    pub fn response(&self) -> Option<usize> {
        self.response
    }

    /// Variable indices excluding the marked response.
    pub fn predictor_indices(&self) -> Vec<usize> {
        (0..self.n_vars())
            .filter(|&j| Some(j) != self.response)
            .collect()
    }

    pub fn source_fingerprint(&self) -> u64 {
        self.source_fingerprint
    }

    pub fn schema_fingerprint(&self) -> u64 {
        self.schema_fingerprint
    }

    /// First (variable, level) pair with a zero count, if any.
    pub fn first_unobserved(&self) -> Option<(usize, usize)> {
        for j in 0..self.n_vars() {
            if let Some(l) = self.counts[j].iter().position(|&c| c == 0) {
                return Some((j, l));
            }
        }
        None
    }
}

/// Conditional distributions of `target`'s categories given each category of
/// `source`: row `a` is the profile of source category `a`. Rows for
/// categories with zero count are sentinels; touching them is an error.
#[derive(Debug, Clone)]
pub struct ProfileBlock {
    source: usize,
    target: usize,
    q_source: usize,
    q_target: usize,
    /// Row-major q_source x q_target.
    values: Vec<f64>,
    defined: Vec<bool>,
}

impl ProfileBlock {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn q_source(&self) -> usize {
        self.q_source
    }

    pub fn q_target(&self) -> usize {
        self.q_target
    }

    pub fn is_defined(&self, a: usize) -> bool {
        self.defined[a]
    }

    /// Profile row for source category `a`.
    pub fn row(&self, a: usize) -> Result<&[f64]> {
        if !self.defined[a] {
            return Err(Error::UnobservedLevel {
                variable: format!("#{}", self.source),
                level: format!("#{a}"),
            });
        }
        Ok(&self.values[a * self.q_target..(a + 1) * self.q_target])
    }
}

/// Marginals plus joint and profile blocks for all variable pairs.
#[derive(Debug, Clone)]
pub struct CooccurrenceModel {
    marginals: MarginalTable,
    n_vars: usize,
    /// Upper-triangle joint counts: entry for (i, j) with i < j is row-major
    /// q_i x q_j.
    joint_counts: Vec<Option<Vec<u64>>>,
    /// Profiles for every ordered pair (i, j), i != j.
    profiles: Vec<Option<ProfileBlock>>,
}

impl CooccurrenceModel {
    /// Build the model. Zero-count levels (possible only on schema-preserving
    /// subsets) yield sentinel profile rows rather than an error.
    pub fn build(ds: &CategoricalDataset) -> Result<Self> {
        Self::build_impl(ds, false)
    }

    /// Like [`CooccurrenceModel::build`] but refuses datasets with
    /// unobserved levels.
    pub fn build_strict(ds: &CategoricalDataset) -> Result<Self> {
        Self::build_impl(ds, true)
    }

    fn build_impl(ds: &CategoricalDataset, strict: bool) -> Result<Self> {
        if ds.n_rows() == 0 {
            return Err(Error::EmptyTable);
        }
        let marginals = MarginalTable::from_dataset(ds);
        if strict {
            if let Some((j, l)) = marginals.first_unobserved() {
                return Err(Error::UnobservedLevel {
                    variable: marginals.name(j).to_string(),
                    level: marginals.level(j, l).to_string(),
                });
            }
        }
        let nv = ds.n_vars();
        let mut joint_counts: Vec<Option<Vec<u64>>> = vec![None; nv * nv];
        for i in 0..nv {
            for j in (i + 1)..nv {
                let (qi, qj) = (ds.q(i), ds.q(j));
                let mut counts = vec![0u64; qi * qj];
                let (ci, cj) = (ds.codes_of(i), ds.codes_of(j));
                for row in 0..ds.n_rows() {
                    counts[ci[row] as usize * qj + cj[row] as usize] += 1;
                }
                joint_counts[i * nv + j] = Some(counts);
            }
        }

        let mut profiles: Vec<Option<ProfileBlock>> = vec![None; nv * nv];
        for i in 0..nv {
            for j in 0..nv {
                if i == j {
                    continue;
                }
                let (qi, qj) = (ds.q(i), ds.q(j));
                let joint = if i < j {
                    joint_counts[i * nv + j].as_ref().unwrap().clone()
                } else {
                    // Transpose the stored (j, i) block.
                    let base = joint_counts[j * nv + i].as_ref().unwrap();
                    let mut t = vec![0u64; qi * qj];
                    for a in 0..qj {
                        for b in 0..qi {
                            t[b * qj + a] = base[a * qi + b];
                        }
                    }
                    t
                };
                let counts_i = marginals.counts(i);
                let mut values = vec![0.0; qi * qj];
                let mut defined = vec![false; qi];
                for a in 0..qi {
                    if counts_i[a] == 0 {
                        continue;
                    }
                    defined[a] = true;
                    for l in 0..qj {
                        values[a * qj + l] = joint[a * qj + l] as f64 / counts_i[a] as f64;
                    }
                }
                profiles[i * nv + j] = Some(ProfileBlock {
                    source: i,
                    target: j,
                    q_source: qi,
                    q_target: qj,
                    values,
                    defined,
                });
            }
        }

        Ok(CooccurrenceModel {
            marginals,
            n_vars: nv,
            joint_counts,
            profiles,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n(&self) -> usize {
        self.marginals.n()
    }

    pub fn marginal_table(&self) -> &MarginalTable {
        &self.marginals
    }

    /// Marginal proportions for variable `i`.
    pub fn marginals(&self, i: usize) -> &[f64] {
        self.marginals.props(i)
    }

    /// Stored profile block for the ordered pair (i, j).
    pub fn profile(&self, i: usize, j: usize) -> Result<&ProfileBlock> {
        if i == j {
            return Err(Error::DiagonalProfile { index: i });
        }
        Ok(self.profiles[i * self.n_vars + j].as_ref().unwrap())
    }

    /// Joint count of (category a of i, category l of j), transposing
    /// internally for i > j.
    pub fn joint_count(&self, i: usize, j: usize, a: usize, l: usize) -> u64 {
        if i < j {
            let qj = self.marginals.q(j);
            self.joint_counts[i * self.n_vars + j].as_ref().unwrap()[a * qj + l]
        } else {
            let qi = self.marginals.q(i);
            self.joint_counts[j * self.n_vars + i].as_ref().unwrap()[l * qi + a]
        }
    }

    /// Joint proportion block for (i, j) materialized row-major q_i x q_j.
    pub fn joint_props(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if i == j {
            return Err(Error::DiagonalProfile { index: i });
        }
        let (qi, qj) = (self.marginals.q(i), self.marginals.q(j));
        let n = self.marginals.n() as f64;
        let mut out = vec![0.0; qi * qj];
        for a in 0..qi {
            for l in 0..qj {
                out[a * qj + l] = self.joint_count(i, j, a, l) as f64 / n;
            }
        }
        Ok(out)
    }

    /// JSON dump of marginals and profile rows for inspection. Not a
    /// stability-guaranteed format.
    pub fn inspection_json(&self) -> serde_json::Value {
        let marginals: Vec<serde_json::Value> = (0..self.n_vars)
            .map(|j| {
                serde_json::json!({
                    "variable": self.marginals.name(j),
                    "levels": self.marginals.levels(j),
                    "counts": self.marginals.counts(j),
                    "proportions": self.marginals.props(j),
                })
            })
            .collect();
        let mut profiles = Vec::new();
        for i in 0..self.n_vars {
            for j in 0..self.n_vars {
                if i == j {
                    continue;
                }
                let block = self.profiles[i * self.n_vars + j].as_ref().unwrap();
                let rows: Vec<serde_json::Value> = (0..block.q_source())
                    .map(|a| match block.row(a) {
                        Ok(r) => serde_json::json!(r),
                        Err(_) => serde_json::Value::Null, // sentinel row
                    })
                    .collect();
                profiles.push(serde_json::json!({
                    "source": self.marginals.name(i),
                    "target": self.marginals.name(j),
                    "rows": rows,
                }));
            }
        }
        serde_json::json!({
            "n": self.marginals.n(),
            "marginals": marginals,
            "profiles": profiles,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoricalDataset, VariableSchema};

    fn ds_from(codes: Vec<Vec<u32>>, qs: &[usize]) -> CategoricalDataset {
        let vars = qs
            .iter()
            .enumerate()
            .map(|(j, &q)| {
                VariableSchema::new(
                    format!("v{j}"),
                    (0..q).map(|l| format!("l{l}")).collect(),
                )
            })
            .collect();
        CategoricalDataset::from_parts(vars, codes).unwrap()
    }

    #[test]
    fn perfect_association_gives_identity_profiles() {
        let ds = ds_from(vec![vec![0, 1, 0, 1], vec![0, 1, 0, 1]], &[2, 2]);
        let model = CooccurrenceModel::build(&ds).unwrap();
        let p = model.profile(0, 1).unwrap();
        assert_eq!(p.row(0).unwrap(), &[1.0, 0.0]);
        assert_eq!(p.row(1).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn independence_gives_flat_profiles() {
        // All four combinations of two binary variables, once each.
        let ds = ds_from(vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]], &[2, 2]);
        let model = CooccurrenceModel::build(&ds).unwrap();
        for (i, j) in [(0, 1), (1, 0)] {
            let p = model.profile(i, j).unwrap();
            for a in 0..2 {
                assert_eq!(p.row(a).unwrap(), &[0.5, 0.5]);
            }
        }
    }

    #[test]
    fn joint_block_sums_to_one() {
        let ds = ds_from(vec![vec![0, 1, 2, 0], vec![0, 1, 0, 1]], &[3, 2]);
        let model = CooccurrenceModel::build(&ds).unwrap();
        let total: f64 = model.joint_props(0, 1).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_rows_sum_to_one() {
        let ds = ds_from(vec![vec![0, 1, 2, 0, 1], vec![0, 1, 0, 1, 1]], &[3, 2]);
        let model = CooccurrenceModel::build(&ds).unwrap();
        let p = model.profile(0, 1).unwrap();
        for a in 0..3 {
            let s: f64 = p.row(a).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_marginals() {
        let ds = ds_from(vec![vec![0, 1, 2, 3, 0, 1, 2, 3], vec![0; 8]], &[4, 1]);
        let model = CooccurrenceModel::build(&ds).unwrap();
        assert_eq!(model.marginals(0), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn diagonal_profile_is_an_error() {
        let ds = ds_from(vec![vec![0, 1], vec![0, 1]], &[2, 2]);
        let model = CooccurrenceModel::build(&ds).unwrap();
        assert!(matches!(
            model.profile(1, 1),
            Err(Error::DiagonalProfile { index: 1 })
        ));
    }

    #[test]
    fn subset_sentinels_and_strict_mode() {
        let ds = ds_from(vec![vec![0, 1, 2, 1], vec![0, 1, 0, 1]], &[3, 2]);
        let sub = ds.subset(&[0, 1, 3]).unwrap(); // level 2 of v0 unobserved
        let model = CooccurrenceModel::build(&sub).unwrap();
        let p = model.profile(0, 1).unwrap();
        assert!(p.is_defined(0));
        assert!(!p.is_defined(2));
        assert!(p.row(2).is_err());
        assert!(matches!(
            CooccurrenceModel::build_strict(&sub),
            Err(Error::UnobservedLevel { .. })
        ));
    }

    #[test]
    fn inspection_dump_marks_sentinels_null() {
        let ds = ds_from(vec![vec![0, 1, 2, 1], vec![0, 1, 0, 1]], &[3, 2]);
        let sub = ds.subset(&[0, 1, 3]).unwrap();
        let model = CooccurrenceModel::build(&sub).unwrap();
        let dump = model.inspection_json();
        assert_eq!(dump["n"], 3);
        let rows = dump["profiles"][0]["rows"].as_array().unwrap();
        assert!(rows[0].is_array());
        assert!(rows[2].is_null(), "unobserved level dumps as null");
    }

    #[test]
    fn bayes_and_transpose_consistency() {
        let ds = ds_from(
            vec![vec![0, 1, 2, 0, 1, 2, 0, 1], vec![0, 1, 0, 1, 1, 0, 0, 1]],
            &[3, 2],
        );
        let model = CooccurrenceModel::build(&ds).unwrap();
        let p01 = model.joint_props(0, 1).unwrap();
        let p10 = model.joint_props(1, 0).unwrap();
        for a in 0..3 {
            for l in 0..2 {
                assert_eq!(p01[a * 2 + l], p10[l * 3 + a]);
                let lhs = model.marginals(0)[a] * model.profile(0, 1).unwrap().row(a).unwrap()[l];
                let rhs = model.marginals(1)[l] * model.profile(1, 0).unwrap().row(l).unwrap()[a];
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
