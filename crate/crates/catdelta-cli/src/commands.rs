//! Implementations of the CLI subcommands. Every command that writes files
//! puts a resolved `config.json` (re-runnable as `--config`) and a
//! `dataset_manifest.json` next to its results.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use catdelta::io::{
    fmt_f64, read_weight_matrix_csv, write_cv_cells_csv, write_cv_summary_csv, write_dataset_manifest,
    write_delta, write_distance_binary, write_distance_csv,
};
use catdelta::synth::{random_dataset, random_profile};
use catdelta::*;

use crate::config::RunConfig;
use crate::CliError;

type CliResult<T> = std::result::Result<T, CliError>;

fn csv_options(cfg: &RunConfig) -> CliResult<CsvOptions> {
    let na_policy = match cfg.na_policy.as_str() {
        "error" => NaPolicy::Error,
        "drop_row" => NaPolicy::DropRow,
        other => return Err(CliError::usage(format!("bad na_policy '{other}' (error|drop_row)"))),
    };
    let mut delim = [0u8; 4];
    cfg.delimiter.encode_utf8(&mut delim);
    if cfg.delimiter.len_utf8() != 1 {
        return Err(CliError::usage("delimiter must be a single-byte character"));
    }
    Ok(CsvOptions {
        has_header: cfg.has_header,
        delimiter: delim[0],
        na_policy,
        ..CsvOptions::default()
    })
}

/// Parsed input with the response column split off.
struct LoadedInput {
    predictors: CategoricalDataset,
    labels: Option<Labeling>,
    /// Schema of the extracted response (class dictionary comes from here).
    response_schema: Option<VariableSchema>,
    /// Column position the response occupied in the input file.
    response_position: Option<usize>,
}

/// Load the input CSV and split off the response column when configured.
fn load_input(cfg: &RunConfig) -> CliResult<LoadedInput> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::usage("missing input CSV path"))?;
    let ds = CategoricalDataset::parse_csv_path(path, &csv_options(cfg)?)?;
    match &cfg.response {
        None => Ok(LoadedInput {
            predictors: ds,
            labels: None,
            response_schema: None,
            response_position: None,
        }),
        Some(name) => {
            let j = ds.column_index(name).ok_or_else(|| {
                CliError::usage(format!(
                    "response column '{name}' not found (columns: {})",
                    ds.variables()
                        .iter()
                        .map(|v| v.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })?;
            let (pred, schema, codes) = ds.extract_column(j)?;
            let labels = Labeling::from_schema(&schema, codes)?;
            Ok(LoadedInput {
                predictors: pred,
                labels: Some(labels),
                response_schema: Some(schema),
                response_position: Some(j),
            })
        }
    }
}

/// Load an `--against` file under the input's schema. The file may carry the
/// same columns as the input (response included, at its original position)
/// or the predictors only.
fn load_against(
    cfg: &RunConfig,
    input: &LoadedInput,
) -> CliResult<(CategoricalDataset, Option<Labeling>)> {
    let path = cfg
        .against
        .as_ref()
        .ok_or_else(|| CliError::usage("missing --against CSV path"))?;
    let options = csv_options(cfg)?;
    let predictors = &input.predictors;
    if let (Some(resp), Some(pos)) = (&input.response_schema, input.response_position) {
        let mut full: Vec<VariableSchema> = predictors.variables().to_vec();
        full.insert(pos, resp.clone());
        if let Ok(ds) = CategoricalDataset::parse_csv_path_with_schema(path, &options, &full) {
            let (pred, schema, codes) = ds.extract_column(pos)?;
            let labels = Labeling::from_schema(&schema, codes)?;
            return Ok((pred, Some(labels)));
        }
    }
    let ds = CategoricalDataset::parse_csv_path_with_schema(path, &options, predictors.variables())?;
    Ok((ds, None))
}

fn parse_lin_guard(cfg: &RunConfig) -> CliResult<LinGuard> {
    match cfg.lin_guard.as_str() {
        "strict" => Ok(LinGuard::Strict),
        "default" => Ok(LinGuard::DefaultClamp),
        other => {
            let eps: f64 = other
                .parse()
                .map_err(|_| CliError::usage(format!("bad --lin-guard '{other}' (strict|default|eps)")))?;
            if eps < 0.0 || eps >= 1.0 {
                return Err(CliError::usage("--lin-guard epsilon must be in [0, 1)"));
            }
            Ok(if eps == 0.0 { LinGuard::Strict } else { LinGuard::Clamp(eps) })
        }
    }
}

fn apply_supervised_mode(name: &str, mode: Option<&str>) -> CliResult<String> {
    let Some(mode) = mode else {
        return Ok(name.to_string());
    };
    if name.starts_with("supervised") {
        return Ok(name.to_string());
    }
    let assoc = matches!(name, "tvd" | "kl" | "chisq");
    if !assoc {
        return Err(CliError::usage(format!(
            "--supervised-mode applies to association measures (tvd, kl, chisq), not '{name}'"
        )));
    }
    match mode {
        "supervised" => Ok(format!("supervised_{name}")),
        "full" | "supervised_full" => Ok(format!("supervised_full_{name}")),
        other => Err(CliError::usage(format!(
            "bad --supervised-mode '{other}' (supervised|full)"
        ))),
    }
}

/// Turn configured measure names into fully parameterized specs.
fn measure_specs(
    cfg: &RunConfig,
    predictors: &CategoricalDataset,
) -> CliResult<Vec<MeasureSpec>> {
    if cfg.measures.is_empty() {
        return Err(CliError::usage("no measure given (use --measure or --measures)"));
    }
    let lin_guard = parse_lin_guard(cfg)?;
    let weights = match cfg.weights.as_str() {
        "ones" => WeightsChoice::Ones,
        "mean" => WeightsChoice::Mean,
        path => {
            let names: Vec<String> = predictors
                .variables()
                .iter()
                .map(|v| v.name.clone())
                .collect();
            let w = read_weight_matrix_csv(Path::new(path), Some(&names))?;
            WeightsChoice::Matrix(w)
        }
    };
    cfg.measures
        .iter()
        .map(|name| {
            let name = apply_supervised_mode(name, cfg.supervised_mode.as_deref())?;
            let mut spec = MeasureSpec::parse_name(&name).map_err(|e| CliError::usage(e.to_string()))?;
            spec.lin_guard = lin_guard;
            spec.kl_floor = cfg.kl_floor;
            spec.directed_kl = cfg.directed_kl;
            spec.weights = weights.clone();
            Ok(spec)
        })
        .collect()
}

fn build_delta_cli(
    spec: &MeasureSpec,
    predictors: &CategoricalDataset,
    labels: Option<&Labeling>,
) -> CliResult<BlockDiagonalDelta> {
    if spec.measure.is_supervised() {
        let labels = labels.ok_or_else(|| {
            CliError::usage(format!(
                "measure '{}' needs --response",
                spec.canonical_name()
            ))
        })?;
        let sup = predictors.append_response_coded(
            "__response__",
            labels.levels().to_vec(),
            labels.codes(),
        )?;
        Ok(spec.build(&sup)?)
    } else {
        Ok(spec.build(predictors)?)
    }
}

fn unseen_policy(cfg: &RunConfig) -> CliResult<UnseenPolicy> {
    cfg.unseen
        .parse::<UnseenPolicy>()
        .map_err(|e| CliError::usage(e.to_string()))
}

/// Create the output directory and write the config echo and dataset
/// manifest into it.
fn prepare_out(cfg: &RunConfig, ds: Option<&CategoricalDataset>) -> CliResult<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::data(e.to_string()))?;
    let file = std::fs::File::create(cfg.out.join("config.json"))
        .map_err(|e| CliError::data(e.to_string()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), cfg)
        .map_err(|e| CliError::data(e.to_string()))?;
    if let Some(ds) = ds {
        write_dataset_manifest(ds, &cfg.out.join("dataset_manifest.json"))?;
    }
    Ok(())
}

fn print_warnings(delta: &BlockDiagonalDelta) {
    for w in &delta.provenance().warnings {
        eprintln!("warning: {w}");
    }
}

pub fn run_delta(cfg: &RunConfig) -> CliResult<()> {
    let input = load_input(cfg)?;
    let pred = &input.predictors;
    let specs = measure_specs(cfg, pred)?;
    if specs.len() != 1 {
        return Err(CliError::usage("delta takes exactly one --measure"));
    }
    let delta = build_delta_cli(&specs[0], pred, input.labels.as_ref())?;
    print_warnings(&delta);
    prepare_out(cfg, Some(pred))?;
    write_delta(&delta, specs[0].to_manifest_json(), &cfg.out)?;
    println!(
        "wrote {} dissimilarity blocks ({}) to {}",
        delta.n_blocks(),
        specs[0].canonical_name(),
        cfg.out.display()
    );
    Ok(())
}

pub fn run_dist(cfg: &RunConfig) -> CliResult<()> {
    let input = load_input(cfg)?;
    let pred = &input.predictors;
    let specs = measure_specs(cfg, pred)?;
    if specs.len() != 1 {
        return Err(CliError::usage("dist takes exactly one --measure"));
    }
    let delta = build_delta_cli(&specs[0], pred, input.labels.as_ref())?;
    print_warnings(&delta);
    let policy = unseen_policy(cfg)?;

    let d = match &cfg.against {
        Some(_) => {
            let (test_pred, _) = load_against(cfg, &input)?;
            cross_distances(pred, &test_pred, &delta, policy)?
        }
        None => pairwise_distances(pred, &delta, policy)?,
    };
    let d = if cfg.symmetrize && d.is_square() && !d.is_symmetric() {
        d.symmetrize()?
    } else {
        d
    };
    prepare_out(cfg, Some(pred))?;
    write_distance_csv(&d, &cfg.out.join("distances.csv"))?;
    write_distance_binary(&d, &cfg.out.join("distances.bin"))?;
    println!(
        "wrote {} x {} distance matrix ({}) to {}",
        d.n_rows(),
        d.n_cols(),
        specs[0].canonical_name(),
        cfg.out.display()
    );
    Ok(())
}

pub fn run_knn(cfg: &RunConfig) -> CliResult<()> {
    let input = load_input(cfg)?;
    let train = &input.predictors;
    let labels = input
        .labels
        .as_ref()
        .ok_or_else(|| CliError::usage("knn needs --response on the training file"))?;
    let specs = measure_specs(cfg, train)?;
    if specs.len() != 1 {
        return Err(CliError::usage("knn takes exactly one --measure"));
    }
    let delta = build_delta_cli(&specs[0], train, Some(labels))?;
    print_warnings(&delta);
    let policy = unseen_policy(cfg)?;
    let k = cfg.k.unwrap_or(5);

    let (test, truth) = load_against(cfg, &input)?;
    let pred = knn_predict(train, labels, &test, &delta, k, policy)?;

    prepare_out(cfg, Some(train))?;
    let mut w = csv::Writer::from_path(cfg.out.join("predictions.csv"))
        .map_err(|e| CliError::data(e.to_string()))?;
    match &truth {
        Some(t) => {
            w.write_record(["row", "predicted", "truth", "correct"])
                .map_err(|e| CliError::data(e.to_string()))?;
            for i in 0..test.n_rows() {
                w.write_record([
                    i.to_string(),
                    pred.label(i).to_string(),
                    t.label(i).to_string(),
                    ((pred.label(i) == t.label(i)) as u8).to_string(),
                ])
                .map_err(|e| CliError::data(e.to_string()))?;
            }
        }
        None => {
            w.write_record(["row", "predicted"])
                .map_err(|e| CliError::data(e.to_string()))?;
            for i in 0..test.n_rows() {
                w.write_record([i.to_string(), pred.label(i).to_string()])
                    .map_err(|e| CliError::data(e.to_string()))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::data(e.to_string()))?;
    drop(w);

    let acc = match &truth {
        Some(t) => {
            // The against file's labels share the training dictionary.
            Some(accuracy(pred.codes(), t.codes())?)
        }
        None => None,
    };
    let summary = serde_json::json!({
        "measure": specs[0].canonical_name(),
        "k": k,
        "n_test": test.n_rows(),
        "accuracy": acc,
    });
    std::fs::write(
        cfg.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::data(e.to_string()))?,
    )
    .map_err(|e| CliError::data(e.to_string()))?;
    match acc {
        Some(a) => println!(
            "knn k={k} ({}): accuracy {} on {} test rows",
            specs[0].canonical_name(),
            fmt_f64(a),
            test.n_rows()
        ),
        None => println!(
            "knn k={k} ({}): predicted {} test rows",
            specs[0].canonical_name(),
            test.n_rows()
        ),
    }
    Ok(())
}

pub fn run_pam(cfg: &RunConfig) -> CliResult<()> {
    let input = load_input(cfg)?;
    let pred = &input.predictors;
    let labels = input.labels.as_ref();
    let specs = measure_specs(cfg, pred)?;
    if specs.len() != 1 {
        return Err(CliError::usage("pam takes exactly one --measure"));
    }
    let k = match (cfg.k, labels) {
        (Some(k), _) => k,
        (None, Some(l)) => l.n_classes(),
        (None, None) => {
            return Err(CliError::usage("pam needs --k (or --response to default to the class count)"))
        }
    };
    let delta = build_delta_cli(&specs[0], pred, labels)?;
    print_warnings(&delta);
    let policy = unseen_policy(cfg)?;
    let d = pairwise_distances(pred, &delta, policy)?;
    let d = if !d.is_symmetric() {
        if cfg.symmetrize {
            d.symmetrize()?
        } else {
            return Err(CliError::from(Error::NonSymmetric));
        }
    } else {
        d
    };
    let fit = pam_fit(&d, k, cfg.seed, 100)?;

    prepare_out(cfg, Some(pred))?;
    let mut text = String::from("cluster,medoid_row\n");
    for (m, row) in fit.medoids.iter().enumerate() {
        text.push_str(&format!("{m},{row}\n"));
    }
    std::fs::write(cfg.out.join("medoids.csv"), text).map_err(|e| CliError::data(e.to_string()))?;
    let mut text = String::from("row,cluster\n");
    for (row, c) in fit.assignment.iter().enumerate() {
        text.push_str(&format!("{row},{c}\n"));
    }
    std::fs::write(cfg.out.join("assignments.csv"), text)
        .map_err(|e| CliError::data(e.to_string()))?;

    let ari = match labels {
        Some(l) => Some(adjusted_rand_index(&fit.assignment, l.codes())?),
        None => None,
    };
    let summary = serde_json::json!({
        "measure": specs[0].canonical_name(),
        "k": k,
        "cost": fit.cost,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "repairs": fit.repairs,
        "ari": ari,
    });
    std::fs::write(
        cfg.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::data(e.to_string()))?,
    )
    .map_err(|e| CliError::data(e.to_string()))?;
    match ari {
        Some(a) => println!(
            "pam k={k} ({}): cost {}, ARI {} vs labels",
            specs[0].canonical_name(),
            fmt_f64(fit.cost),
            fmt_f64(a)
        ),
        None => println!(
            "pam k={k} ({}): cost {}, {} iterations",
            specs[0].canonical_name(),
            fmt_f64(fit.cost),
            fit.iterations
        ),
    }
    Ok(())
}

pub fn run_cv(cfg: &RunConfig) -> CliResult<()> {
    let input = load_input(cfg)?;
    let pred = &input.predictors;
    let labels = input
        .labels
        .as_ref()
        .ok_or_else(|| CliError::usage("cv needs --response"))?;
    let specs = measure_specs(cfg, pred)?;
    let task: CvTask = cfg.task.parse().map_err(|e: Error| CliError::usage(e.to_string()))?;
    let plan = pred.split_folds(Some(labels.codes()), cfg.folds, cfg.repeats, cfg.seed)?;
    let options = CvOptions {
        unseen: unseen_policy(cfg)?,
        ..CvOptions::default()
    };
    let report = cross_validate(pred, labels, &specs, &cfg.k_grid, &plan, task, &options)?;

    prepare_out(cfg, Some(pred))?;
    write_cv_cells_csv(&report, &cfg.out.join("cv_cells.csv"))?;
    write_cv_summary_csv(&report, &cfg.out.join("cv_summary.csv"))?;

    println!(
        "cv task={} folds={} repeats={} seed={}",
        cfg.task, cfg.folds, cfg.repeats, cfg.seed
    );
    for (measure, k, mean) in report.chosen() {
        let sd = report
            .summaries
            .iter()
            .find(|s| s.measure == measure && s.k == k)
            .map(|s| s.sd)
            .unwrap_or(f64::NAN);
        match k {
            Some(k) => println!(
                "  {measure}: best K = {k}, mean {} = {} (sd {})",
                report.task_metric,
                fmt_f64(mean),
                fmt_f64(sd)
            ),
            None => println!(
                "  {measure}: mean {} = {} (sd {})",
                report.task_metric,
                fmt_f64(mean),
                fmt_f64(sd)
            ),
        }
    }
    let n_err = report.cells.iter().filter(|c| c.error.is_some()).count();
    if n_err > 0 {
        eprintln!("warning: {n_err} of {} cells failed (see cv_cells.csv)", report.cells.len());
    }
    println!("wrote cv_cells.csv and cv_summary.csv to {}", cfg.out.display());
    Ok(())
}

pub fn run_check(cfg: &RunConfig) -> CliResult<()> {
    let input = load_input(cfg)?;
    let pred = &input.predictors;
    let labels = input.labels.as_ref();
    let names: Vec<String> = if cfg.measures.is_empty() {
        let mut v: Vec<String> = [
            "matching", "eskin", "lin", "iof", "of", "goodall1", "goodall2", "goodall3",
            "goodall4", "ve", "vm", "ordered", "tvd", "kl", "chisq",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if labels.is_some() {
            v.push("supervised_tvd".into());
            v.push("supervised_full_tvd".into());
        }
        v
    } else {
        cfg.measures.clone()
    };
    let mut cfg_all = cfg.clone();
    cfg_all.measures = names;
    let specs = measure_specs(&cfg_all, pred)?;

    prepare_out(cfg, Some(pred))?;
    let path = cfg.out.join("metric_report.csv");
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(&path).map_err(|e| CliError::data(e.to_string()))?,
    );
    writeln!(
        file,
        "measure,variable,zero_diagonal,symmetric,triangle_violations,worst_violation,error"
    )
    .map_err(|e| CliError::data(e.to_string()))?;

    println!("{:<22} {:>13} {:>9} {:>18} metric", "measure", "zero_diag", "symmetric", "triangle_violations");
    for spec in &specs {
        match build_delta_cli(spec, pred, labels) {
            Ok(delta) => {
                let report = check_metric_properties(&delta);
                for b in &report.blocks {
                    writeln!(
                        file,
                        "{},{},{},{},{},{},",
                        spec.canonical_name(),
                        b.variable,
                        b.zero_diagonal,
                        b.symmetric,
                        b.triangle_violations,
                        fmt_f64(b.worst_violation)
                    )
                    .map_err(|e| CliError::data(e.to_string()))?;
                }
                println!(
                    "{:<22} {:>13} {:>9} {:>18} {}",
                    spec.canonical_name(),
                    report.all_zero_diagonal(),
                    report.all_symmetric(),
                    report.total_triangle_violations(),
                    if report.is_metric() { "yes" } else { "no" }
                );
            }
            Err(e) => {
                writeln!(file, "{},,,,,,\"{}\"", spec.canonical_name(), e.message)
                    .map_err(|e| CliError::data(e.to_string()))?;
                println!("{:<22} failed to build: {}", spec.canonical_name(), e.message);
            }
        }
    }
    println!("wrote metric_report.csv to {}", cfg.out.display());
    Ok(())
}

pub fn run_bench(cfg: &RunConfig) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    println!("closed-form TVD vs partition-enumeration oracle (per profile pair):");
    println!(
        "{:>4} {:>12} {:>16} {:>14} {:>10}",
        "q", "partitions", "tvd_ns_per_pair", "oracle_ns", "speedup"
    );
    for q in [4usize, 8, 12, 16] {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..32)
            .map(|_| (random_profile(q, &mut rng), random_profile(q, &mut rng)))
            .collect();

        // Sanity: the two paths agree on every pair.
        for (a, b) in &pairs {
            let t = phi_tvd(a, b).map_err(CliError::from)?;
            let o = ahmad_dey_oracle(a, b).map_err(CliError::from)?;
            if (t - o).abs() > 1e-12 {
                return Err(CliError::data(format!("tvd {t} != oracle {o} at q={q}")));
            }
        }

        let tvd_reps = 2000usize;
        let start = Instant::now();
        let mut sink = 0.0;
        for _ in 0..tvd_reps {
            for (a, b) in &pairs {
                sink += phi_tvd(a, b).unwrap();
            }
        }
        let tvd_ns = start.elapsed().as_nanos() as f64 / (tvd_reps * pairs.len()) as f64;

        let start = Instant::now();
        for (a, b) in &pairs {
            sink += ahmad_dey_oracle(a, b).unwrap();
        }
        let oracle_ns = start.elapsed().as_nanos() as f64 / pairs.len() as f64;
        std::hint::black_box(sink);

        println!(
            "{q:>4} {:>12} {:>16.1} {:>14.1} {:>9.0}x",
            (1u64 << q) - 2,
            tvd_ns,
            oracle_ns,
            oracle_ns / tvd_ns
        );
    }

    println!();
    println!("gather vs dense pairwise distances (matching, Q=10, q=4):");
    println!("{:>6} {:>12} {:>12} {:>10}", "n", "gather_ms", "dense_ms", "equal");
    for n in [500usize, 1000] {
        let ds = random_dataset(n, &[4; 10], cfg.seed ^ n as u64);
        let delta = MeasureSpec::parse_name("matching")
            .map_err(CliError::from)?
            .build(&ds)
            .map_err(CliError::from)?;
        let start = Instant::now();
        let g = pairwise_distances(&ds, &delta, UnseenPolicy::Error).map_err(CliError::from)?;
        let gather_ms = start.elapsed().as_secs_f64() * 1e3;
        let start = Instant::now();
        let dn = naive_pairwise_dense(&ds, &delta).map_err(CliError::from)?;
        let dense_ms = start.elapsed().as_secs_f64() * 1e3;
        let equal = g
            .values()
            .iter()
            .zip(dn.values())
            .all(|(a, b)| (a - b).abs() <= 1e-12);
        println!("{n:>6} {gather_ms:>12.2} {dense_ms:>12.2} {equal:>10}");
        if !equal {
            return Err(CliError::data("gather and dense results differ"));
        }
    }
    Ok(())
}
