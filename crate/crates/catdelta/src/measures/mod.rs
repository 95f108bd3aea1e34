//! Category dissimilarity measures and the declarative spec that selects
//! one. Independent measures (per-variable frequencies only) live in
//! [`indep`]; association-based measures (profile divergences combined over
//! variable pairs) live in [`assoc`].

pub mod assoc;
pub mod indep;

use std::fmt;
use std::str::FromStr;

use serde_json::json;

use crate::cooccur::{CooccurrenceModel, MarginalTable};
use crate::dataset::CategoricalDataset;
use crate::delta::BlockDiagonalDelta;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprinter;

pub use assoc::{PhiAssignment, ProfileDivergence, SupervisedMode, WeightMatrix};
pub use indep::{GoodallVariant, VariabilityVariant};

/// Profile divergence selector for association-based measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    Tvd,
    Kl,
    ChiSquared,
}

impl PhiKind {
    fn name(self) -> &'static str {
        match self {
            PhiKind::Tvd => "tvd",
            PhiKind::Kl => "kl",
            PhiKind::ChiSquared => "chisq",
        }
    }
}

/// Which dissimilarity to build.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Matching,
    Eskin,
    Lin,
    Iof,
    Of,
    Goodall(GoodallVariant),
    VariableEntropy,
    VariableMutability,
    Ordered,
    /// Association over the predictors, unsupervised.
    Assoc(PhiKind),
    /// Association with the response column only.
    Supervised(PhiKind),
    /// Association over predictors plus response, all pairs.
    SupervisedFull(PhiKind),
    /// User-registered divergence (see [`MeasureSpec::custom`]); identified
    /// by name.
    Custom(String),
}

impl Measure {
    pub fn canonical_name(&self) -> String {
        match self {
            Measure::Matching => "matching".into(),
            Measure::Eskin => "eskin".into(),
            Measure::Lin => "lin".into(),
            Measure::Iof => "iof".into(),
            Measure::Of => "of".into(),
            Measure::Goodall(v) => format!("goodall{}", v.number()),
            Measure::VariableEntropy => "ve".into(),
            Measure::VariableMutability => "vm".into(),
            Measure::Ordered => "ordered".into(),
            Measure::Assoc(p) => p.name().into(),
            Measure::Supervised(p) => format!("supervised_{}", p.name()),
            Measure::SupervisedFull(p) => format!("supervised_full_{}", p.name()),
            Measure::Custom(name) => format!("custom_{name}"),
        }
    }

    pub fn is_supervised(&self) -> bool {
        matches!(self, Measure::Supervised(_) | Measure::SupervisedFull(_))
    }

    /// Does the built delta depend on the rows (frequencies/co-occurrences)
    /// rather than the schema alone?
    pub fn is_data_dependent(&self) -> bool {
        !matches!(self, Measure::Matching | Measure::Eskin | Measure::Ordered)
    }

    /// All measure names constructible from a string, for CLI listings.
    pub fn builtin_names() -> Vec<&'static str> {
        vec![
            "matching", "eskin", "lin", "iof", "of", "goodall1", "goodall2", "goodall3",
            "goodall4", "ve", "vm", "ordered", "tvd", "kl", "chisq", "supervised_tvd",
            "supervised_kl", "supervised_chisq", "supervised_full_tvd", "supervised_full_kl",
            "supervised_full_chisq",
        ]
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s.trim().to_ascii_lowercase().as_str() {
            "matching" | "sm" => Measure::Matching,
            "eskin" => Measure::Eskin,
            "lin" => Measure::Lin,
            "iof" => Measure::Iof,
            "of" => Measure::Of,
            "goodall1" => Measure::Goodall(GoodallVariant::G1),
            "goodall2" => Measure::Goodall(GoodallVariant::G2),
            "goodall3" => Measure::Goodall(GoodallVariant::G3),
            "goodall4" => Measure::Goodall(GoodallVariant::G4),
            "ve" => Measure::VariableEntropy,
            "vm" => Measure::VariableMutability,
            "ordered" => Measure::Ordered,
            "tvd" => Measure::Assoc(PhiKind::Tvd),
            "kl" => Measure::Assoc(PhiKind::Kl),
            "chisq" => Measure::Assoc(PhiKind::ChiSquared),
            "supervised_tvd" => Measure::Supervised(PhiKind::Tvd),
            "supervised_kl" => Measure::Supervised(PhiKind::Kl),
            "supervised_chisq" => Measure::Supervised(PhiKind::ChiSquared),
            "supervised_full_tvd" => Measure::SupervisedFull(PhiKind::Tvd),
            "supervised_full_kl" => Measure::SupervisedFull(PhiKind::Kl),
            "supervised_full_chisq" => Measure::SupervisedFull(PhiKind::ChiSquared),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown measure '{other}' (known: {})",
                    Measure::builtin_names().join(", ")
                )))
            }
        };
        Ok(m)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_name())
    }
}

/// Behavior of Lin's dissimilarity when p_a + p_b = 1 (the denominator
/// log(p_a + p_b) vanishes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinGuard {
    /// Fail with a domain error naming the variable and categories.
    Strict,
    /// Clamp the sum to 1 - 1/(2n) before the logs.
    DefaultClamp,
    /// Clamp the sum to 1 - eps before the logs.
    Clamp(f64),
}

impl Default for LinGuard {
    fn default() -> Self {
        LinGuard::Strict
    }
}

impl LinGuard {
    /// Epsilon to clamp with, or None for strict mode.
    pub fn epsilon(&self, n: usize) -> Option<f64> {
        match *self {
            LinGuard::Strict => None,
            LinGuard::DefaultClamp => Some(1.0 / (2.0 * n as f64)),
            LinGuard::Clamp(e) if e > 0.0 => Some(e),
            LinGuard::Clamp(_) => None,
        }
    }
}

/// Weight selection for the association combiner.
#[derive(Debug, Clone)]
pub enum WeightsChoice {
    /// All pair weights 1 (sums over context variables).
    Ones,
    /// All pair weights 1/(Q-1) (averages).
    Mean,
    /// Explicit non-negative matrix with zero diagonal.
    Matrix(WeightMatrix),
}

impl Default for WeightsChoice {
    fn default() -> Self {
        WeightsChoice::Ones
    }
}

/// Declarative choice of a dissimilarity measure plus its numeric guards.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    pub measure: Measure,
    pub weights: WeightsChoice,
    pub lin_guard: LinGuard,
    /// Floor applied to profile entries inside the KL divergence.
    pub kl_floor: f64,
    /// Use the one-directional KL sum instead of the symmetric form.
    pub directed_kl: bool,
    custom_phi: Option<ProfileDivergence>,
}

pub const DEFAULT_KL_FLOOR: f64 = 1e-10;

impl MeasureSpec {
    pub fn new(measure: Measure) -> Self {
        MeasureSpec {
            measure,
            weights: WeightsChoice::Ones,
            lin_guard: LinGuard::Strict,
            kl_floor: DEFAULT_KL_FLOOR,
            directed_kl: false,
            custom_phi: None,
        }
    }

    /// Spec using a caller-supplied profile divergence as an unsupervised
    /// association measure.
    pub fn custom(divergence: ProfileDivergence) -> Self {
        let mut spec = MeasureSpec::new(Measure::Custom(divergence.name()));
        spec.custom_phi = Some(divergence);
        spec
    }

    pub fn parse_name(name: &str) -> Result<Self> {
        Ok(MeasureSpec::new(name.parse()?))
    }

    pub fn canonical_name(&self) -> String {
        self.measure.canonical_name()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = Fingerprinter::new();
        h.write_str(&self.canonical_name());
        match &self.weights {
            WeightsChoice::Ones => h.write_str("ones"),
            WeightsChoice::Mean => h.write_str("mean"),
            WeightsChoice::Matrix(m) => {
                h.write_str("matrix");
                for &w in m.values() {
                    h.write_f64(w);
                }
            }
        }
        match self.lin_guard {
            LinGuard::Strict => h.write_str("strict"),
            LinGuard::DefaultClamp => h.write_str("default_clamp"),
            LinGuard::Clamp(e) => {
                h.write_str("clamp");
                h.write_f64(e);
            }
        }
        h.write_f64(self.kl_floor);
        h.write_u32(self.directed_kl as u32);
        h.finish()
    }

    /// JSON description for manifests.
    pub fn to_manifest_json(&self) -> serde_json::Value {
        json!({
            "measure": self.canonical_name(),
            "weights": match &self.weights {
                WeightsChoice::Ones => json!("ones"),
                WeightsChoice::Mean => json!("mean"),
                WeightsChoice::Matrix(m) => json!({"matrix": m.rows()}),
            },
            "lin_guard": match self.lin_guard {
                LinGuard::Strict => json!("strict"),
                LinGuard::DefaultClamp => json!("default"),
                LinGuard::Clamp(e) => json!(e),
            },
            "kl_floor": self.kl_floor,
            "directed_kl": self.directed_kl,
        })
    }

    fn divergence(&self, kind: PhiKind) -> ProfileDivergence {
        match kind {
            PhiKind::Tvd => ProfileDivergence::Tvd,
            PhiKind::Kl => ProfileDivergence::Kl {
                floor: self.kl_floor,
                directed: self.directed_kl,
            },
            PhiKind::ChiSquared => ProfileDivergence::ChiSquared,
        }
    }

    fn weight_matrix(&self, q: usize) -> Result<WeightMatrix> {
        match &self.weights {
            WeightsChoice::Ones => Ok(WeightMatrix::ones(q)),
            WeightsChoice::Mean => Ok(WeightMatrix::mean(q)),
            WeightsChoice::Matrix(m) => {
                if m.dim() != q {
                    return Err(Error::InvalidWeights(format!(
                        "weight matrix is {}x{} but the model has {} variables",
                        m.dim(),
                        m.dim(),
                        q
                    )));
                }
                Ok(m.clone())
            }
        }
    }

    /// Build the block-diagonal dissimilarity for this spec on `ds`.
    ///
    /// Supervised measures require `ds` to carry a marked response variable;
    /// all other measures ignore a marked response (its block is never
    /// built).
    pub fn build(&self, ds: &CategoricalDataset) -> Result<BlockDiagonalDelta> {
        match &self.measure {
            Measure::Matching => indep::build_matching(ds),
            Measure::Eskin => indep::build_eskin(ds),
            Measure::Ordered => indep::build_ordered(ds),
            Measure::Lin => {
                let marg = MarginalTable::from_dataset(ds);
                indep::build_lin(&marg, self.lin_guard)
            }
            Measure::Iof => {
                let marg = MarginalTable::from_dataset(ds);
                indep::build_iof(&marg)
            }
            Measure::Of => {
                let marg = MarginalTable::from_dataset(ds);
                indep::build_of(&marg)
            }
            Measure::Goodall(v) => {
                let marg = MarginalTable::from_dataset(ds);
                indep::build_goodall(&marg, *v)
            }
            Measure::VariableEntropy => {
                let marg = MarginalTable::from_dataset(ds);
                indep::build_variability(&marg, VariabilityVariant::Entropy)
            }
            Measure::VariableMutability => {
                let marg = MarginalTable::from_dataset(ds);
                indep::build_variability(&marg, VariabilityVariant::Mutability)
            }
            Measure::Assoc(kind) => {
                let phi = self.divergence(*kind);
                self.build_assoc(ds, phi)
            }
            Measure::Custom(name) => {
                let phi = self.custom_phi.clone().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "custom measure '{name}' has no divergence attached; \
                         construct the spec with MeasureSpec::custom"
                    ))
                })?;
                self.build_assoc(ds, phi)
            }
            Measure::Supervised(kind) => assoc::build_delta_supervised(
                ds,
                self.divergence(*kind),
                SupervisedMode::ResponseOnly,
                self,
            ),
            Measure::SupervisedFull(kind) => assoc::build_delta_supervised(
                ds,
                self.divergence(*kind),
                SupervisedMode::Full,
                self,
            ),
        }
    }

    fn build_assoc(
        &self,
        ds: &CategoricalDataset,
        phi: ProfileDivergence,
    ) -> Result<BlockDiagonalDelta> {
        // Unsupervised association runs over the predictors only.
        let owned;
        let pred: &CategoricalDataset = match ds.response_index() {
            Some(r) => {
                owned = ds.extract_column(r)?.0;
                &owned
            }
            None => ds,
        };
        let model = CooccurrenceModel::build(pred)?;
        let weights = self.weight_matrix(model.n_vars())?;
        assoc::build_delta_association(&model, &PhiAssignment::Global(phi), &weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_names_round_trip() {
        for name in Measure::builtin_names() {
            let m: Measure = name.parse().unwrap();
            assert_eq!(m.canonical_name(), name);
        }
    }

    #[test]
    fn unknown_measure_is_rejected() {
        assert!("gower".parse::<Measure>().is_err());
    }

    #[test]
    fn lin_guard_epsilon() {
        assert_eq!(LinGuard::Strict.epsilon(10), None);
        assert_eq!(LinGuard::DefaultClamp.epsilon(10), Some(0.05));
        assert_eq!(LinGuard::Clamp(1e-3).epsilon(10), Some(1e-3));
    }

    #[test]
    fn spec_fingerprint_distinguishes_params() {
        let a = MeasureSpec::new(Measure::Assoc(PhiKind::Kl));
        let mut b = a.clone();
        b.kl_floor = 1e-6;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
