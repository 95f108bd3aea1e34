//! Categorical tables: level encoding, subsetting, response handling and
//! cross-validation fold plans.
//!
//! A dataset stores one integer code column per variable; the code is the
//! index of the observed category in the variable's level list. This is the
//! implicit one-hot coding: materializing it would give one indicator matrix
//! per variable with exactly one 1 per row. Level order is first appearance
//! in the input, which keeps dissimilarity block indices stable across runs;
//! reordering input rows may permute category indices but never changes
//! distances.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{derive_seed, Fingerprinter};

/// Schema of a single categorical variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSchema {
    pub name: String,
    /// Distinct category labels, in first-appearance order.
    pub levels: Vec<String>,
    /// Optional numeric score per level for ordered variables
    /// (e.g. bin midpoints). Defaults to the level index when absent.
    pub ordered_scores: Option<Vec<f64>>,
}

impl VariableSchema {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Self {
        VariableSchema {
            name: name.into(),
            levels,
            ordered_scores: None,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Scores used by the ordered dissimilarity: custom if present,
    /// otherwise the level index.
    pub fn scores(&self) -> Vec<f64> {
        match &self.ordered_scores {
            Some(s) => s.clone(),
            None => (0..self.levels.len()).map(|i| i as f64).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, l) in self.levels.iter().enumerate() {
            if seen.insert(l.as_str(), i).is_some() {
                return Err(Error::SchemaMismatch(format!(
                    "variable '{}' has duplicate level '{}'",
                    self.name, l
                )));
            }
        }
        if let Some(s) = &self.ordered_scores {
            if s.len() != self.levels.len() {
                return Err(Error::LengthMismatch {
                    expected: self.levels.len(),
                    got: s.len(),
                });
            }
        }
        Ok(())
    }
}

/// How to treat missing cells during CSV parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    /// Fail, naming the offending row and column.
    #[default]
    Error,
    /// Silently drop rows containing a missing cell.
    DropRow,
}

/// CSV parsing options. Cells matching one of `na_markers` count as missing
/// ("", "?" and "NA" by default, matching common UCI file conventions).
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    pub delimiter: u8,
    pub na_policy: NaPolicy,
    pub na_markers: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            delimiter: b',',
            na_policy: NaPolicy::Error,
            na_markers: vec![String::new(), "?".into(), "NA".into()],
        }
    }
}

/// n observations on Q categorical variables, stored as per-variable code
/// columns. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDataset {
    variables: Vec<VariableSchema>,
    /// codes[j][row] = level index of variable j at `row`.
    codes: Vec<Vec<u32>>,
    n_rows: usize,
    /// observed[j][level]: does the level occur in THIS dataset? All true for
    /// parsed data; subsets preserve the parent schema and may leave gaps.
    observed: Vec<Vec<bool>>,
    /// Index of the marked response variable, if any.
    response: Option<usize>,
}

impl CategoricalDataset {
    /// Build from explicit schema and code columns, validating ranges.
    pub fn from_parts(variables: Vec<VariableSchema>, codes: Vec<Vec<u32>>) -> Result<Self> {
        if variables.len() != codes.len() {
            return Err(Error::LengthMismatch {
                expected: variables.len(),
                got: codes.len(),
            });
        }
        if variables.is_empty() {
            return Err(Error::EmptyTable);
        }
        let n_rows = codes[0].len();
        for v in &variables {
            v.validate()?;
        }
        let mut observed = Vec::with_capacity(variables.len());
        for (v, col) in variables.iter().zip(&codes) {
            if col.len() != n_rows {
                return Err(Error::LengthMismatch {
                    expected: n_rows,
                    got: col.len(),
                });
            }
            let mut seen = vec![false; v.n_levels()];
            for &c in col {
                let c = c as usize;
                if c >= v.n_levels() {
                    return Err(Error::SchemaMismatch(format!(
                        "code {} out of range for variable '{}' ({} levels)",
                        c,
                        v.name,
                        v.n_levels()
                    )));
                }
                seen[c] = true;
            }
            observed.push(seen);
        }
        Ok(CategoricalDataset {
            variables,
            codes,
            n_rows,
            observed,
            response: None,
        })
    }

    /// Parse a CSV stream. Every column is treated as categorical; levels are
    /// enumerated per column in first-appearance order, so every level of the
    /// resulting schema is observed by construction.
    pub fn parse_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .delimiter(options.delimiter)
            .flexible(false)
            .from_reader(reader);

        let mut names: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| match e.kind() {
                csv::ErrorKind::UnequalLengths { .. } => Error::Parse {
                    row: i + 1,
                    msg: format!("ragged row: {e}"),
                },
                _ => Error::Csv(e),
            })?;
            let cells: Vec<String> = rec.iter().map(|s| s.to_string()).collect();
            if options.has_header && names.is_none() {
                names = Some(cells);
            } else {
                rows.push(cells);
            }
        }
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let n_cols = rows[0].len();
        let names = names
            .unwrap_or_else(|| (0..n_cols).map(|j| format!("var{j}")).collect());
        if names.len() != n_cols {
            return Err(Error::Parse {
                row: 1,
                msg: format!(
                    "header has {} columns but data rows have {}",
                    names.len(),
                    n_cols
                ),
            });
        }

        let mut level_maps: Vec<HashMap<String, u32>> = vec![HashMap::new(); n_cols];
        let mut levels: Vec<Vec<String>> = vec![Vec::new(); n_cols];
        let mut codes: Vec<Vec<u32>> = vec![Vec::new(); n_cols];

        'rows: for (i, row) in rows.iter().enumerate() {
            // Missing-value scan first so that a dropped row leaves no trace
            // in any column's codes or levels.
            for (j, cell) in row.iter().enumerate() {
                if options.na_markers.iter().any(|m| m == cell) {
                    match options.na_policy {
                        NaPolicy::Error => {
                            return Err(Error::MissingValue {
                                row: i + 1,
                                column: names[j].clone(),
                            })
                        }
                        NaPolicy::DropRow => continue 'rows,
                    }
                }
            }
            for (j, cell) in row.iter().enumerate() {
                let next = levels[j].len() as u32;
                let code = *level_maps[j].entry(cell.clone()).or_insert_with(|| {
                    levels[j].push(cell.clone());
                    next
                });
                codes[j].push(code);
            }
        }
        if codes[0].is_empty() {
            return Err(Error::EmptyTable);
        }

        let variables = names
            .into_iter()
            .zip(levels)
            .map(|(name, levels)| VariableSchema::new(name, levels))
            .collect();
        Self::from_parts(variables, codes)
    }

    pub fn parse_csv_str(text: &str, options: &CsvOptions) -> Result<Self> {
        Self::parse_csv(text.as_bytes(), options)
    }

    pub fn parse_csv_path(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse_csv(file, options)
    }

    /// Parse a CSV under an existing schema (same columns, codes taken from
    /// the given level lists). Labels absent from the schema are an error:
    /// they are not representable, unlike schema levels that merely went
    /// unobserved in a subset.
    pub fn parse_csv_with_schema<R: Read>(
        reader: R,
        options: &CsvOptions,
        schema: &[VariableSchema],
    ) -> Result<Self> {
        let raw = Self::parse_csv(reader, options)?;
        if raw.n_vars() != schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "file has {} columns, schema has {}",
                raw.n_vars(),
                schema.len()
            )));
        }
        let maps: Vec<HashMap<&str, u32>> = schema
            .iter()
            .map(|v| {
                v.levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i as u32))
                    .collect()
            })
            .collect();
        let mut codes: Vec<Vec<u32>> = vec![Vec::with_capacity(raw.n_rows()); schema.len()];
        for (j, v) in schema.iter().enumerate() {
            if options.has_header && raw.variable(j).name != v.name {
                return Err(Error::SchemaMismatch(format!(
                    "column {} is named '{}', schema expects '{}'",
                    j,
                    raw.variable(j).name,
                    v.name
                )));
            }
            for row in 0..raw.n_rows() {
                let label = raw.decode(j, raw.code(j, row));
                match maps[j].get(label) {
                    Some(&c) => codes[j].push(c),
                    None => {
                        return Err(Error::SchemaMismatch(format!(
                            "row {}: category '{}' of variable '{}' is not in the schema",
                            row + 1,
                            label,
                            v.name
                        )))
                    }
                }
            }
        }
        Self::from_parts(schema.to_vec(), codes)
    }

    pub fn parse_csv_path_with_schema(
        path: impl AsRef<Path>,
        options: &CsvOptions,
        schema: &[VariableSchema],
    ) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse_csv_with_schema(file, options, schema)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[VariableSchema] {
        &self.variables
    }

    pub fn variable(&self, j: usize) -> &VariableSchema {
        &self.variables[j]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Number of levels of variable `j`.
    pub fn q(&self, j: usize) -> usize {
        self.variables[j].n_levels()
    }

    /// Total number of categories over all variables.
    pub fn total_levels(&self) -> usize {
        self.variables.iter().map(|v| v.n_levels()).sum()
    }

    pub fn code(&self, j: usize, row: usize) -> u32 {
        self.codes[j][row]
    }

    pub fn codes_of(&self, j: usize) -> &[u32] {
        &self.codes[j]
    }

    pub fn response_index(&self) -> Option<usize> {
        self.response
    }

    /// Indices of the non-response variables, in order.
    pub fn predictor_indices(&self) -> Vec<usize> {
        (0..self.n_vars())
            .filter(|&j| Some(j) != self.response)
            .collect()
    }

    pub fn n_predictors(&self) -> usize {
        self.predictor_indices().len()
    }

    pub fn is_observed(&self, j: usize, level: usize) -> bool {
        self.observed[j][level]
    }

    pub fn has_unobserved_levels(&self) -> bool {
        self.observed.iter().flatten().any(|&o| !o)
    }

    /// Decode a cell back to its category label.
    pub fn decode(&self, j: usize, code: u32) -> &str {
        &self.variables[j].levels[code as usize]
    }

    /// Reconstruct the table of labels (row-major), for round-trips.
    pub fn to_label_rows(&self) -> Vec<Vec<String>> {
        (0..self.n_rows)
            .map(|i| {
                (0..self.n_vars())
                    .map(|j| self.decode(j, self.codes[j][i]).to_string())
                    .collect()
            })
            .collect()
    }

    /// Row subset preserving the parent schema: levels that no longer occur
    /// stay in the schema (flagged unobserved) so that dissimilarity blocks
    /// built on a training subset remain indexable by test codes. Duplicate
    /// indices are allowed; an empty selection is an error by default.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        self.subset_with(rows, false)
    }

    pub fn subset_with(&self, rows: &[usize], empty_ok: bool) -> Result<Self> {
        if rows.is_empty() && !empty_ok {
            return Err(Error::EmptySelection);
        }
        for &r in rows {
            if r >= self.n_rows {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    len: self.n_rows,
                });
            }
        }
        let codes: Vec<Vec<u32>> = self
            .codes
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        let observed = self
            .variables
            .iter()
            .zip(&codes)
            .map(|(v, col)| {
                let mut seen = vec![false; v.n_levels()];
                for &c in col {
                    seen[c as usize] = true;
                }
                seen
            })
            .collect();
        Ok(CategoricalDataset {
            variables: self.variables.clone(),
            codes,
            n_rows: rows.len(),
            observed,
            response: self.response,
        })
    }

    /// Append a response column (raw labels, levels enumerated by first
    /// appearance) and mark it so dissimilarity construction can exclude its
    /// block.
    pub fn append_response<S: AsRef<str>>(&self, name: &str, labels: &[S]) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                expected: self.n_rows,
                got: labels.len(),
            });
        }
        let mut map = HashMap::new();
        let mut levels = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let next = levels.len() as u32;
            let code = *map.entry(l.to_string()).or_insert_with(|| {
                levels.push(l.to_string());
                next
            });
            codes.push(code);
        }
        self.append_response_coded(name, levels, &codes)
    }

    /// Append a response column with a fixed class schema. The full level
    /// list is preserved even when some class is absent from `codes` (the
    /// usual situation on training folds), but at least two classes must
    /// actually occur.
    pub fn append_response_coded(
        &self,
        name: &str,
        levels: Vec<String>,
        codes: &[u32],
    ) -> Result<Self> {
        if codes.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                expected: self.n_rows,
                got: codes.len(),
            });
        }
        if self.response.is_some() {
            return Err(Error::SchemaMismatch(
                "dataset already has a response variable".into(),
            ));
        }
        let schema = VariableSchema::new(name, levels);
        schema.validate()?;
        let mut seen = vec![false; schema.n_levels()];
        for &c in codes {
            if (c as usize) >= schema.n_levels() {
                return Err(Error::SchemaMismatch(format!(
                    "class code {} out of range ({} classes)",
                    c,
                    schema.n_levels()
                )));
            }
            seen[c as usize] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::SingleClass);
        }
        let mut variables = self.variables.clone();
        variables.push(schema);
        let mut all_codes = self.codes.clone();
        all_codes.push(codes.to_vec());
        let mut observed = self.observed.clone();
        observed.push(seen);
        Ok(CategoricalDataset {
            variables,
            codes: all_codes,
            n_rows: self.n_rows,
            observed,
            response: Some(self.n_vars()),
        })
    }

    /// Remove column `j`, returning the reduced dataset plus the removed
    /// column's schema and codes. Used to lift a labeled CSV into
    /// (predictors, labels) form.
    pub fn extract_column(&self, j: usize) -> Result<(Self, VariableSchema, Vec<u32>)> {
        if j >= self.n_vars() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.n_vars(),
            });
        }
        if self.n_vars() == 1 {
            return Err(Error::EmptyTable);
        }
        let mut variables = self.variables.clone();
        let schema = variables.remove(j);
        let mut codes = self.codes.clone();
        let col = codes.remove(j);
        let mut observed = self.observed.clone();
        observed.remove(j);
        Ok((
            CategoricalDataset {
                variables,
                codes,
                n_rows: self.n_rows,
                observed,
                response: None,
            },
            schema,
            col,
        ))
    }

    /// Fingerprint of schema plus data, response column included.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint_impl(false)
    }

    /// Fingerprint restricted to the predictor columns; a dataset and the
    /// same dataset with a response appended agree on this value.
    pub fn predictor_fingerprint(&self) -> u64 {
        self.fingerprint_impl(true)
    }

    fn fingerprint_impl(&self, predictors_only: bool) -> u64 {
        let mut h = Fingerprinter::new();
        h.write_u64(self.n_rows as u64);
        for j in 0..self.n_vars() {
            if predictors_only && Some(j) == self.response {
                continue;
            }
            let v = &self.variables[j];
            h.write_str(&v.name);
            for l in &v.levels {
                h.write_str(l);
            }
            if let Some(s) = &v.ordered_scores {
                for &x in s {
                    h.write_f64(x);
                }
            }
            for &c in &self.codes[j] {
                h.write_u32(c);
            }
        }
        h.finish()
    }

    /// Fingerprint of the predictor schema only (names, levels, scores).
    pub fn predictor_schema_fingerprint(&self) -> u64 {
        let mut h = Fingerprinter::new();
        for j in self.predictor_indices() {
            let v = &self.variables[j];
            h.write_str(&v.name);
            for l in &v.levels {
                h.write_str(l);
            }
            if let Some(s) = &v.ordered_scores {
                for &x in s {
                    h.write_f64(x);
                }
            }
        }
        h.finish()
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            n_rows: self.n_rows,
            variables: self.variables.clone(),
            response: self.response.map(|j| self.variables[j].name.clone()),
        }
    }

    /// Assign rows to folds, repeated `n_repeats` times with independent
    /// shuffles. Stratified by `labels` when given: within each class, rows
    /// are dealt cyclically so per-class fold sizes differ by at most one.
    /// Deterministic given `seed`.
    pub fn split_folds(
        &self,
        labels: Option<&[u32]>,
        n_folds: usize,
        n_repeats: usize,
        seed: u64,
    ) -> Result<FoldPlan> {
        if n_folds < 2 || n_folds > self.n_rows {
            return Err(Error::FoldCount {
                n_folds,
                n_rows: self.n_rows,
            });
        }
        if n_repeats == 0 {
            return Err(Error::InvalidArgument("n_repeats must be >= 1".into()));
        }
        if let Some(l) = labels {
            if l.len() != self.n_rows {
                return Err(Error::LengthMismatch {
                    expected: self.n_rows,
                    got: l.len(),
                });
            }
        }
        let mut assignments = Vec::with_capacity(n_repeats);
        for r in 0..n_repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[r as u64]));
            let mut assign = vec![0u32; self.n_rows];
            match labels {
                Some(labels) => {
                    let n_classes = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(1);
                    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
                    for (i, &c) in labels.iter().enumerate() {
                        groups[c as usize].push(i);
                    }
                    // The deal counter carries over between classes so the
                    // overall fold sizes stay balanced too.
                    let mut deal = 0usize;
                    for group in &mut groups {
                        group.shuffle(&mut rng);
                        for &row in group.iter() {
                            assign[row] = (deal % n_folds) as u32;
                            deal += 1;
                        }
                    }
                }
                None => {
                    let mut order: Vec<usize> = (0..self.n_rows).collect();
                    order.shuffle(&mut rng);
                    for (deal, &row) in order.iter().enumerate() {
                        assign[row] = (deal % n_folds) as u32;
                    }
                }
            }
            assignments.push(assign);
        }
        Ok(FoldPlan {
            n_folds,
            n_repeats,
            seed,
            assignments,
        })
    }
}

/// JSON-serializable description of a dataset, emitted alongside any saved
/// artifact so distance/dissimilarity files stay interpretable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n_rows: usize,
    pub variables: Vec<VariableSchema>,
    pub response: Option<String>,
}

/// Repeated fold assignments for cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    n_folds: usize,
    n_repeats: usize,
    seed: u64,
    /// assignments[repeat][row] = fold index.
    assignments: Vec<Vec<u32>>,
}

impl FoldPlan {
    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn n_repeats(&self) -> usize {
        self.n_repeats
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_rows(&self) -> usize {
        self.assignments[0].len()
    }

    pub fn fold_of(&self, repeat: usize, row: usize) -> u32 {
        self.assignments[repeat][row]
    }

    /// Train/test row indices for one cell of the plan.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &f) in self.assignments[repeat].iter().enumerate() {
            if f as usize == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> CategoricalDataset {
        CategoricalDataset::parse_csv_str(
            "a,x\nb,x\na,y\n",
            &CsvOptions {
                has_header: false,
                ..CsvOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn first_appearance_encoding() {
        let ds = toy();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.q(0), 2);
        assert_eq!(ds.q(1), 2);
        assert_eq!(ds.codes_of(0), &[0, 1, 0]);
        assert_eq!(ds.codes_of(1), &[0, 0, 1]);
    }

    #[test]
    fn degenerate_single_level_variable() {
        let ds = CategoricalDataset::parse_csv_str(
            "u\nu\nu\n",
            &CsvOptions {
                has_header: false,
                ..CsvOptions::default()
            },
        )
        .unwrap();
        assert_eq!(ds.q(0), 1);
        assert_eq!(ds.codes_of(0), &[0, 0, 0]);
    }

    #[test]
    fn header_handling() {
        let ds =
            CategoricalDataset::parse_csv_str("color,shape\nred,square\nblue,circle\n", &CsvOptions::default())
                .unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.variable(0).name, "color");
        assert_eq!(ds.variable(1).name, "shape");
    }

    #[test]
    fn ragged_row_is_an_error_with_row_number() {
        let err = CategoricalDataset::parse_csv_str(
            "a,x\nb\n",
            &CsvOptions {
                has_header: false,
                ..CsvOptions::default()
            },
        )
        .unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(matches!(
            CategoricalDataset::parse_csv_str("", &CsvOptions::default()),
            Err(Error::EmptyTable)
        ));
        // Header only, no data rows.
        assert!(matches!(
            CategoricalDataset::parse_csv_str("a,b\n", &CsvOptions::default()),
            Err(Error::EmptyTable)
        ));
    }

    #[test]
    fn missing_values_error_or_drop() {
        let text = "c1,c2\na,x\n?,y\nb,z\n";
        let err = CategoricalDataset::parse_csv_str(text, &CsvOptions::default()).unwrap_err();
        match err {
            Error::MissingValue { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "c1");
            }
            other => panic!("unexpected {other:?}"),
        }
        let ds = CategoricalDataset::parse_csv_str(
            text,
            &CsvOptions {
                na_policy: NaPolicy::DropRow,
                ..CsvOptions::default()
            },
        )
        .unwrap();
        assert_eq!(ds.n_rows(), 2);
        // The dropped row's 'y' never becomes a level.
        assert_eq!(ds.q(1), 2);
    }

    #[test]
    fn subset_identity_and_schema_preservation() {
        let ds = toy();
        let all = ds.subset(&[0, 1, 2]).unwrap();
        assert_eq!(all, ds);

        let sub = ds.subset(&[0, 2]).unwrap();
        assert_eq!(sub.codes_of(1), &[0, 1]);
        assert_eq!(sub.q(0), 2, "schema preserved");
        assert!(!sub.is_observed(0, 1), "level 'b' unobserved in subset");
        assert!(sub.has_unobserved_levels());
    }

    #[test]
    fn subset_errors() {
        let ds = toy();
        assert!(matches!(ds.subset(&[]), Err(Error::EmptySelection)));
        assert_eq!(ds.subset_with(&[], true).unwrap().n_rows(), 0);
        assert!(matches!(
            ds.subset(&[5]),
            Err(Error::IndexOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn append_response_marks_index() {
        let ds = CategoricalDataset::parse_csv_str(
            "a,x,p\nb,x,q\na,y,p\n",
            &CsvOptions {
                has_header: false,
                ..CsvOptions::default()
            },
        )
        .unwrap();
        let with = ds.append_response("class", &["yes", "no", "yes"]).unwrap();
        assert_eq!(with.n_vars(), 4);
        assert_eq!(with.response_index(), Some(3));
        assert_eq!(with.predictor_indices(), vec![0, 1, 2]);
        assert_eq!(with.predictor_fingerprint(), ds.predictor_fingerprint());
    }

    #[test]
    fn append_response_many_classes() {
        let n = 38;
        let ds = CategoricalDataset::from_parts(
            vec![VariableSchema::new("v", vec!["a".into(), "b".into()])],
            vec![(0..n).map(|i| (i % 2) as u32).collect()],
        )
        .unwrap();
        let labels: Vec<String> = (0..n).map(|i| format!("c{}", i % 19)).collect();
        let with = ds.append_response("class", &labels).unwrap();
        assert_eq!(with.q(1), 19);
    }

    #[test]
    fn append_response_errors() {
        let ds = toy();
        assert!(matches!(
            ds.append_response("y", &["a", "b"]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            ds.append_response("y", &["a", "a", "a"]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn round_trip_labels() {
        let text = "h1,h2\nred,1\nblue,2\nred,3\n";
        let ds = CategoricalDataset::parse_csv_str(text, &CsvOptions::default()).unwrap();
        let rows = ds.to_label_rows();
        assert_eq!(
            rows,
            vec![
                vec!["red".to_string(), "1".to_string()],
                vec!["blue".to_string(), "2".to_string()],
                vec!["red".to_string(), "3".to_string()],
            ]
        );
    }

    #[test]
    fn stratified_folds_balanced_classes() {
        let ds = CategoricalDataset::from_parts(
            vec![VariableSchema::new("v", vec!["a".into(), "b".into()])],
            vec![(0..10).map(|i| (i % 2) as u32).collect()],
        )
        .unwrap();
        let labels: Vec<u32> = (0..10).map(|i| (i % 2) as u32).collect();
        let plan = ds.split_folds(Some(&labels), 5, 3, 42).unwrap();
        for r in 0..3 {
            for f in 0..5 {
                let (_, test) = plan.split(r, f);
                assert_eq!(test.len(), 2);
                let c0 = test.iter().filter(|&&i| labels[i] == 0).count();
                assert_eq!(c0, 1, "each fold gets one row of each class");
            }
        }
    }

    #[test]
    fn folds_deterministic_and_partitioning() {
        let ds = toy();
        let a = ds.split_folds(None, 3, 10, 7).unwrap();
        let b = ds.split_folds(None, 3, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_repeats(), 10);
        for r in 0..10 {
            let mut seen = vec![false; 3];
            for f in 0..3 {
                let (train, test) = a.split(r, f);
                assert_eq!(train.len() + test.len(), 3);
                for &t in &test {
                    assert!(!seen[t], "folds must be disjoint");
                    seen[t] = true;
                }
                assert!(!test.is_empty(), "each fold non-empty");
            }
            assert!(seen.iter().all(|&s| s), "folds must cover all rows");
        }
    }

    #[test]
    fn fold_count_errors() {
        let ds = toy();
        assert!(matches!(
            ds.split_folds(None, 5, 1, 0),
            Err(Error::FoldCount { .. })
        ));
        assert!(matches!(
            ds.split_folds(None, 1, 1, 0),
            Err(Error::FoldCount { .. })
        ));
    }

    #[test]
    fn total_levels_sums_q() {
        let ds = toy();
        assert_eq!(ds.total_levels(), 4);
    }

    #[test]
    fn parse_with_schema_reuses_codes() {
        let train = CategoricalDataset::parse_csv_str(
            "c1,c2\na,x\nb,y\n",
            &CsvOptions::default(),
        )
        .unwrap();
        // Different first-appearance order in the second file; codes must
        // still follow the training schema.
        let test = CategoricalDataset::parse_csv_with_schema(
            "c1,c2\nb,y\na,x\n".as_bytes(),
            &CsvOptions::default(),
            train.variables(),
        )
        .unwrap();
        assert_eq!(test.codes_of(0), &[1, 0]);
        assert_eq!(test.codes_of(1), &[1, 0]);

        let err = CategoricalDataset::parse_csv_with_schema(
            "c1,c2\nz,x\n".as_bytes(),
            &CsvOptions::default(),
            train.variables(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("not in the schema"));
    }
}
