//! Repeated stratified cross-validation over a grid of measures: per fold,
//! dissimilarity blocks are rebuilt on the training rows only, then scored
//! on the held-out fold (KNN accuracy over a grid of k, or PAM adjusted Rand
//! index with k fixed to the number of classes).

use rayon::prelude::*;

use crate::dataset::{CategoricalDataset, FoldPlan};
use crate::distance::{pairwise_distances, UnseenPolicy};
use crate::error::{Error, Result};
use crate::fingerprint::derive_seed;
use crate::learners::{
    accuracy, adjusted_rand_index, knn_predict_grid, pam_assign, pam_fit, Labeling,
};
use crate::measures::MeasureSpec;

/// Neighbor grid used when the caller does not override it.
pub const DEFAULT_K_GRID: [usize; 6] = [1, 3, 5, 9, 15, 21];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvTask {
    Knn,
    Pam,
}

impl CvTask {
    pub fn metric_name(self) -> &'static str {
        match self {
            CvTask::Knn => "accuracy",
            CvTask::Pam => "ari",
        }
    }
}

impl std::str::FromStr for CvTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(CvTask::Knn),
            "pam" => Ok(CvTask::Pam),
            other => Err(Error::InvalidArgument(format!(
                "unknown task '{other}' (knn|pam)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvOptions {
    pub unseen: UnseenPolicy,
    pub pam_max_iter: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            unseen: UnseenPolicy::Error,
            pam_max_iter: 100,
        }
    }
}

/// One (measure, k, repeat, fold) evaluation. A failed cell carries its
/// error text instead of a value; failures are per-cell, never fatal to the
/// whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub measure: String,
    pub k: Option<usize>,
    pub repeat: usize,
    pub fold: usize,
    pub value: Option<f64>,
    pub error: Option<String>,
}

/// Aggregate over repeats for one (measure, k): the per-repeat fold means
/// are averaged, and the reported sd is the sample standard deviation of
/// those repeat means.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSummaryRow {
    pub measure: String,
    pub k: Option<usize>,
    pub mean: f64,
    pub sd: f64,
    pub n_ok: usize,
    pub n_err: usize,
    /// Chosen hyper-parameter for its measure (highest mean, ties to the
    /// smaller k). Always true for PAM rows.
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub task_metric: String,
    pub k_grid: Vec<usize>,
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub cells: Vec<CvCell>,
    pub summaries: Vec<CvSummaryRow>,
}

impl CvReport {
    /// (measure, chosen k, mean metric) per measure; k is None for PAM.
    pub fn chosen(&self) -> Vec<(String, Option<usize>, f64)> {
        self.summaries
            .iter()
            .filter(|s| s.selected)
            .map(|s| (s.measure.clone(), s.k, s.mean))
            .collect()
    }
}

/// Run the full grid: every measure on every (repeat, fold) cell of the
/// plan. `ds` holds predictors only; the labels ride separately and are
/// appended per training fold for supervised measures.
pub fn cross_validate(
    ds: &CategoricalDataset,
    labels: &Labeling,
    measures: &[MeasureSpec],
    k_grid: &[usize],
    plan: &FoldPlan,
    task: CvTask,
    options: &CvOptions,
) -> Result<CvReport> {
    if ds.response_index().is_some() {
        return Err(Error::InvalidArgument(
            "pass predictors only; labels ride separately".into(),
        ));
    }
    if labels.n_rows() != ds.n_rows() {
        return Err(Error::LengthMismatch {
            expected: ds.n_rows(),
            got: labels.n_rows(),
        });
    }
    if plan.n_rows() != ds.n_rows() {
        return Err(Error::LengthMismatch {
            expected: ds.n_rows(),
            got: plan.n_rows(),
        });
    }
    if measures.is_empty() {
        return Err(Error::InvalidArgument("no measures given".into()));
    }
    let k_grid: Vec<usize> = if task == CvTask::Knn {
        let g = if k_grid.is_empty() {
            DEFAULT_K_GRID.to_vec()
        } else {
            k_grid.to_vec()
        };
        if g.contains(&0) {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        g
    } else {
        Vec::new()
    };

    let mut units: Vec<(usize, usize, usize)> = Vec::new();
    for m in 0..measures.len() {
        for r in 0..plan.n_repeats() {
            for f in 0..plan.n_folds() {
                units.push((m, r, f));
            }
        }
    }
    let cell_groups: Vec<Vec<CvCell>> = units
        .par_iter()
        .map(|&(m, r, f)| run_unit(ds, labels, &measures[m], &k_grid, plan, r, f, task, options))
        .collect();
    let cells: Vec<CvCell> = cell_groups.into_iter().flatten().collect();

    let summaries = summarize(&cells, measures, &k_grid, plan.n_repeats(), task);
    Ok(CvReport {
        task_metric: task.metric_name().to_string(),
        k_grid,
        n_folds: plan.n_folds(),
        n_repeats: plan.n_repeats(),
        seed: plan.seed(),
        cells,
        summaries,
    })
}

type CellOutcome = (Option<usize>, std::result::Result<f64, String>);

#[allow(clippy::too_many_arguments)]
fn run_unit(
    ds: &CategoricalDataset,
    labels: &Labeling,
    spec: &MeasureSpec,
    k_grid: &[usize],
    plan: &FoldPlan,
    repeat: usize,
    fold: usize,
    task: CvTask,
    options: &CvOptions,
) -> Vec<CvCell> {
    let name = spec.canonical_name();
    let outcomes: Vec<CellOutcome> =
        match run_unit_inner(ds, labels, spec, k_grid, plan, repeat, fold, task, options) {
            Ok(v) => v,
            Err(msg) => match task {
                CvTask::Knn => k_grid.iter().map(|&k| (Some(k), Err(msg.clone()))).collect(),
                CvTask::Pam => vec![(None, Err(msg))],
            },
        };
    outcomes
        .into_iter()
        .map(|(k, res)| {
            let (value, error) = match res {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e)),
            };
            CvCell {
                measure: name.clone(),
                k,
                repeat,
                fold,
                value,
                error,
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_unit_inner(
    ds: &CategoricalDataset,
    labels: &Labeling,
    spec: &MeasureSpec,
    k_grid: &[usize],
    plan: &FoldPlan,
    repeat: usize,
    fold: usize,
    task: CvTask,
    options: &CvOptions,
) -> std::result::Result<Vec<CellOutcome>, String> {
    let fail = |e: Error| e.to_string();
    let (train_rows, test_rows) = plan.split(repeat, fold);
    let train = ds.subset(&train_rows).map_err(fail)?;
    let test = ds.subset(&test_rows).map_err(fail)?;
    let ltrain = labels.subset(&train_rows).map_err(fail)?;
    let ltest = labels.subset(&test_rows).map_err(fail)?;

    // Blocks are rebuilt per fold from training rows only.
    let delta = if spec.measure.is_supervised() {
        let sup = train
            .append_response_coded("__response__", labels.levels().to_vec(), ltrain.codes())
            .map_err(fail)?;
        spec.build(&sup).map_err(fail)?
    } else {
        spec.build(&train).map_err(fail)?
    };

    match task {
        CvTask::Knn => {
            let usable: Vec<usize> = k_grid
                .iter()
                .copied()
                .filter(|&k| k <= train.n_rows())
                .collect();
            let preds = if usable.is_empty() {
                Vec::new()
            } else {
                knn_predict_grid(&train, &ltrain, &test, &delta, &usable, options.unseen)
                    .map_err(fail)?
            };
            let mut out = Vec::with_capacity(k_grid.len());
            for &k in k_grid {
                match usable.iter().position(|&u| u == k) {
                    Some(i) => {
                        let acc = accuracy(preds[i].codes(), ltest.codes()).map_err(fail)?;
                        out.push((Some(k), Ok(acc)));
                    }
                    None => out.push((
                        Some(k),
                        Err(format!(
                            "k = {k} exceeds the {} training rows of this fold",
                            train.n_rows()
                        )),
                    )),
                }
            }
            Ok(out)
        }
        CvTask::Pam => {
            let d = pairwise_distances(&train, &delta, options.unseen).map_err(fail)?;
            if !d.is_symmetric() {
                return Err(Error::NonSymmetric.to_string());
            }
            let seed = derive_seed(plan.seed(), &[repeat as u64, fold as u64]);
            let fit = pam_fit(&d, labels.n_classes(), seed, options.pam_max_iter).map_err(fail)?;
            let clusters =
                pam_assign(&train, &fit.medoids, &test, &delta, options.unseen).map_err(fail)?;
            let ari = adjusted_rand_index(&clusters, ltest.codes()).map_err(fail)?;
            Ok(vec![(None, Ok(ari))])
        }
    }
}

fn summarize(
    cells: &[CvCell],
    measures: &[MeasureSpec],
    k_grid: &[usize],
    n_repeats: usize,
    task: CvTask,
) -> Vec<CvSummaryRow> {
    let keys: Vec<(String, Option<usize>)> = measures
        .iter()
        .flat_map(|m| {
            let name = m.canonical_name();
            match task {
                CvTask::Knn => k_grid
                    .iter()
                    .map(|&k| (name.clone(), Some(k)))
                    .collect::<Vec<_>>(),
                CvTask::Pam => vec![(name.clone(), None)],
            }
        })
        .collect();

    let mut rows: Vec<CvSummaryRow> = keys
        .into_iter()
        .map(|(measure, k)| {
            let mut repeat_means: Vec<f64> = Vec::new();
            let mut n_ok = 0usize;
            let mut n_err = 0usize;
            for r in 0..n_repeats {
                let vals: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.measure == measure && c.k == k && c.repeat == r)
                    .filter_map(|c| {
                        if c.value.is_none() {
                            n_err += 1;
                        } else {
                            n_ok += 1;
                        }
                        c.value
                    })
                    .collect();
                if !vals.is_empty() {
                    repeat_means.push(vals.iter().sum::<f64>() / vals.len() as f64);
                }
            }
            let (mean, sd) = mean_sd(&repeat_means);
            CvSummaryRow {
                measure,
                k,
                mean,
                sd,
                n_ok,
                n_err,
                selected: false,
            }
        })
        .collect();

    // Select the best k per measure: highest mean, ties to the smaller k.
    for m in measures {
        let name = m.canonical_name();
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.measure == name && r.n_ok > 0 && r.mean.is_finite())
            .max_by(|(_, a), (_, b)| {
                a.mean
                    .partial_cmp(&b.mean)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.k.cmp(&a.k))
            })
            .map(|(i, _)| i);
        if let Some(i) = best {
            rows[i].selected = true;
        }
    }
    rows
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, var.sqrt())
}
