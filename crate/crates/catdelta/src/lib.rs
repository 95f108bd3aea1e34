//! Distances for categorical data via block-diagonal category
//! dissimilarities.
//!
//! Everything revolves around one object: a block-diagonal matrix with one
//! square block per variable holding the pairwise dissimilarities between
//! that variable's categories. Given those blocks, the distance between two
//! observations is just the sum, over variables, of the block entry selected
//! by their category codes — the gather form of the indicator-matrix product
//! `Z * Delta * Z'`. Choosing the blocks picks the distance:
//!
//! - independent measures ([`measures::indep`]): simple matching, Eskin,
//!   Lin, IOF, OF, Goodall 1-4, variable entropy/mutability, ordered scores;
//! - association-based measures ([`measures::assoc`]): total variation, KL
//!   and chi-squared divergences between conditional profiles, combined over
//!   variable pairs with configurable weights, plus supervised variants that
//!   append the class variable;
//! - learners ([`learners`]): KNN classification, PAM clustering, accuracy,
//!   adjusted Rand index, and a repeated stratified cross-validation harness
//!   that rebuilds the blocks on every training fold.
//!
//! ```
//! use catdelta::{CategoricalDataset, CsvOptions, MeasureSpec, UnseenPolicy};
//!
//! let ds = CategoricalDataset::parse_csv_str(
//!     "color,size\nred,s\nblue,m\nred,l\n",
//!     &CsvOptions::default(),
//! ).unwrap();
//! let delta = MeasureSpec::parse_name("matching").unwrap().build(&ds).unwrap();
//! let d = catdelta::pairwise_distances(&ds, &delta, UnseenPolicy::Error).unwrap();
//! assert_eq!(d.get(0, 1), 2.0); // rows differ on both variables
//! ```

pub mod cooccur;
pub mod dataset;
pub mod delta;
pub mod distance;
pub mod error;
pub mod fingerprint;
pub mod io;
pub mod learners;
pub mod measures;
pub mod synth;

pub use cooccur::{CooccurrenceModel, MarginalTable, ProfileBlock};
pub use dataset::{CategoricalDataset, CsvOptions, DatasetManifest, FoldPlan, NaPolicy, VariableSchema};
pub use delta::{BlockDiagonalDelta, DeltaBlock, DeltaProvenance};
pub use distance::{
    check_metric_properties, cross_distances, naive_pairwise_dense, pairwise_distances,
    BlockMetricReport, DistanceMatrix, DistanceProvenance, MetricReport, UnseenPolicy,
};
pub use error::{Error, ErrorKind, Result};
pub use learners::{
    accuracy, adjusted_rand_index, cross_validate, knn_predict, knn_predict_grid, pam_assign,
    pam_fit, CvCell, CvOptions, CvReport, CvSummaryRow, CvTask, Labeling, PamResult,
};
pub use measures::assoc::{
    ahmad_dey_oracle, build_delta_association, build_delta_supervised, phi_chisq, phi_kl,
    phi_kl_directed, phi_tvd, CustomDivergence, PhiAssignment, ProfileDivergence, SupervisedMode,
    WeightMatrix,
};
pub use measures::indep::{
    build_eskin, build_goodall, build_iof, build_lin, build_matching, build_of, build_ordered,
    build_variability, GoodallVariant, VariabilityVariant,
};
pub use measures::{LinGuard, Measure, MeasureSpec, PhiKind, WeightsChoice, DEFAULT_KL_FLOOR};
