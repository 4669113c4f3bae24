//! Experiment orchestration: for each configured kernel, select the cost by
//! cross-validation, train both multiclass strategies, classify the raster,
//! assess both label maps against reference pixels, and compare the two
//! kappa coefficients with a Z-test.
//!
//! Every run is fully determined by its configuration (seed included): label
//! maps and reports contain no timestamps or absolute paths, training is
//! sequential per machine, and pixel classification assigns output cells by
//! index, so reruns — at any worker count — are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::assessment::{
    build_confusion, kappa, render_assessment_kv, render_assessment_text, z_test, AccuracyReport,
    ComparisonVerdict,
};
use crate::error::{Error, Result};
use crate::fsutil::atomic_write;
use crate::kernels::KernelSpec;
use crate::model_io::fmt_f64;
use crate::multiclass::{
    train_multiclass, ClassCatalog, LabeledDataset, MulticlassModel, Strategy, TrainParams, Voting,
};
use crate::raster::{
    classify_raster, extract_samples, read_raster, read_samples_csv, LabelMap, RasterImage,
    TrainingSamples,
};
use crate::seed::derive_seed;
use crate::svm::{stratified_folds, DEFAULT_MAX_PASSES, DEFAULT_TOLERANCE};

/// The four kernels an experiment runs by default.
pub fn default_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::linear(),
        KernelSpec::quadratic(),
        KernelSpec::polynomial(3),
        KernelSpec::rbf_default(),
    ]
}

/// Default cost grid searched per kernel.
pub fn default_cost_grid() -> Vec<f64> {
    vec![1.0, 10.0, 100.0]
}

/// Everything a comparison run needs. Construct with
/// [`ExperimentConfig::new`] and adjust fields as needed.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Header path of the scene to classify.
    pub raster: PathBuf,
    /// Training samples (pixel or feature CSV).
    pub train_csv: PathBuf,
    /// Reference samples for assessment (pixel CSV).
    pub test_csv: PathBuf,
    /// Class catalog as (code, name) pairs.
    pub classes: Vec<(u8, String)>,
    pub kernels: Vec<KernelSpec>,
    pub cost_grid: Vec<f64>,
    /// Cross-validation folds for cost selection.
    pub folds: usize,
    pub voting: Voting,
    pub tolerance: f64,
    pub max_passes: usize,
    pub seed: u64,
    /// Output directory for label maps and reports; created if missing.
    pub out_dir: PathBuf,
    /// Worker threads for classification; `None` uses the global default.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(
        raster: impl Into<PathBuf>,
        train_csv: impl Into<PathBuf>,
        test_csv: impl Into<PathBuf>,
        classes: Vec<(u8, String)>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            raster: raster.into(),
            train_csv: train_csv.into(),
            test_csv: test_csv.into(),
            classes,
            kernels: default_kernels(),
            cost_grid: default_cost_grid(),
            folds: 5,
            voting: Voting::Majority,
            tolerance: DEFAULT_TOLERANCE,
            max_passes: DEFAULT_MAX_PASSES,
            seed: 42,
            out_dir: out_dir.into(),
            threads: None,
        }
    }
}

/// Results of one strategy under one kernel.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub unclassified: usize,
    pub mixed: usize,
    pub report: AccuracyReport,
    /// Emitted file names, relative to the output directory.
    pub labelmap_file: String,
    pub assessment_text_file: String,
    pub assessment_kv_file: String,
}

/// Results of one kernel: both strategies plus their comparison.
#[derive(Debug, Clone)]
pub struct KernelOutcome {
    pub kernel: KernelSpec,
    pub cost: f64,
    pub one_against_one: StrategyOutcome,
    pub one_against_all: StrategyOutcome,
    pub verdict: ComparisonVerdict,
}

/// The merged table shape of a full run: one row per kernel, each carrying
/// sentinel counts, kappa reports, and the significance verdict.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub outcomes: Vec<KernelOutcome>,
    /// Emitted report file names, relative to the output directory.
    pub text_file: String,
    pub kv_file: String,
}

/// Runs the full comparison experiment described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ComparisonReport> {
    match config.threads {
        None => run_inner(config),
        Some(threads) => {
            if threads == 0 {
                return Err(Error::input("thread count must be positive"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::input(format!("cannot build a {threads}-thread pool: {e}")))?;
            pool.install(|| run_inner(config))
        }
    }
}

fn run_inner(config: &ExperimentConfig) -> Result<ComparisonReport> {
    if config.kernels.is_empty() {
        return Err(Error::input("kernel list is empty"));
    }
    if config.cost_grid.is_empty() {
        return Err(Error::input("cost grid is empty"));
    }
    for &c in &config.cost_grid {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::input(format!("cost grid entries must be positive, got {c}")));
        }
    }
    let catalog = ClassCatalog::from_pairs(
        config.classes.iter().map(|(code, name)| (*code, name.clone())),
    )?;

    let image = read_raster(&config.raster)?;
    let train_raw = read_samples_csv(&config.train_csv)?;
    let train = extract_samples(&image, &train_raw)
        .map_err(|e| e.with_context("resolving training samples"))?;

    // Validate the reference set before any training so a bad assessment
    // input fails fast.
    let test = read_samples_csv(&config.test_csv)?;
    if test.is_empty() {
        return Err(Error::input(format!(
            "test sample csv {} is empty",
            config.test_csv.display()
        )));
    }
    let test_pixels = match &test {
        TrainingSamples::Pixels(p) => p,
        TrainingSamples::Features(_) => {
            return Err(Error::input(
                "test samples must be pixel coordinates (row,col,class) to assess label maps",
            ));
        }
    };
    for p in test_pixels {
        if p.row >= image.rows() || p.col >= image.cols() {
            return Err(Error::input(format!(
                "test sample at ({}, {}) is outside the {}x{} raster",
                p.row,
                p.col,
                image.rows(),
                image.cols()
            )));
        }
        if !catalog.contains(p.class) {
            return Err(Error::input(format!(
                "test sample class {} is not in the catalog",
                p.class
            )));
        }
    }

    std::fs::create_dir_all(&config.out_dir).map_err(|e| {
        Error::from(e).with_context(format!("creating {}", config.out_dir.display()))
    })?;

    let mut outcomes = Vec::with_capacity(config.kernels.len());
    for (ki, kernel) in config.kernels.iter().enumerate() {
        let kernel = kernel.resolve(image.bands())?;
        let context = format!("kernel {}", kernel.describe());

        let cost = select_cost(config, &catalog, &train, &kernel, ki)
            .map_err(|e| e.with_context(context.clone()))?;

        let mut strategy_outcomes = Vec::with_capacity(2);
        for (si, strategy) in [Strategy::OneAgainstOne, Strategy::OneAgainstAll]
            .into_iter()
            .enumerate()
        {
            let outcome = run_cell(config, &catalog, &train, &test, &image, &kernel, cost, ki, si, strategy)
                .map_err(|e| e.with_context(format!("{context}, strategy {strategy}")))?;
            strategy_outcomes.push(outcome);
        }
        let one_against_all = strategy_outcomes.pop().expect("two cells");
        let one_against_one = strategy_outcomes.pop().expect("two cells");

        let verdict = z_test(&one_against_one.report, &one_against_all.report)
            .map_err(|e| e.with_context(context.clone()))?;
        outcomes.push(KernelOutcome { kernel, cost, one_against_one, one_against_all, verdict });
    }

    let report = ComparisonReport {
        outcomes,
        text_file: "comparison.txt".to_string(),
        kv_file: "comparison.kv".to_string(),
    };
    let text = render_comparison_text(&report);
    atomic_write(&config.out_dir.join(&report.text_file), text.as_bytes())
        .map_err(|e| Error::from(e).with_context("writing comparison.txt"))?;
    let kv = render_comparison_kv(&report);
    atomic_write(&config.out_dir.join(&report.kv_file), kv.as_bytes())
        .map_err(|e| Error::from(e).with_context("writing comparison.kv"))?;
    Ok(report)
}

/// Picks the cost for one kernel by stratified k-fold cross-validation of a
/// one-against-one classifier on the training samples. A singleton grid
/// skips the search. Ties prefer the smaller cost.
fn select_cost(
    config: &ExperimentConfig,
    catalog: &ClassCatalog,
    train: &LabeledDataset,
    kernel: &KernelSpec,
    kernel_index: usize,
) -> Result<f64> {
    if config.cost_grid.len() == 1 {
        return Ok(config.cost_grid[0]);
    }
    let folds = stratified_folds(
        train.labels(),
        config.folds,
        derive_seed(config.seed, 0xc0_0000 ^ kernel_index as u64),
    )?;
    let mut best: Option<(f64, f64)> = None; // (mean accuracy, cost)
    for (ci, &cost) in config.cost_grid.iter().enumerate() {
        let mut accuracy_sum = 0.0;
        for (fi, test_idx) in folds.iter().enumerate() {
            let mut fold_features = Vec::new();
            let mut fold_labels = Vec::new();
            let in_test = |i: usize| test_idx.binary_search(&i).is_ok();
            for i in 0..train.len() {
                if !in_test(i) {
                    fold_features.push(train.features()[i].clone());
                    fold_labels.push(train.labels()[i]);
                }
            }
            let fold_train = LabeledDataset::new(fold_features, fold_labels)?;
            let params = TrainParams {
                tolerance: config.tolerance,
                max_passes: config.max_passes,
                seed: derive_seed(
                    config.seed,
                    0xcf_0000 ^ ((kernel_index as u64) << 32) ^ ((ci as u64) << 16) ^ fi as u64,
                ),
            };
            let model = train_multiclass(
                &fold_train,
                catalog,
                Strategy::OneAgainstOne,
                kernel,
                cost,
                config.voting,
                &params,
            )?;
            let mut correct = 0usize;
            for &i in test_idx {
                // Sentinel predictions count as wrong.
                let predicted = model.classify(&train.features()[i])?;
                if predicted.code() == train.labels()[i] {
                    correct += 1;
                }
            }
            accuracy_sum += correct as f64 / test_idx.len() as f64;
        }
        let mean = accuracy_sum / folds.len() as f64;
        let better = match best {
            None => true,
            Some((best_mean, best_cost)) => {
                mean > best_mean || (mean == best_mean && cost < best_cost)
            }
        };
        if better {
            best = Some((mean, cost));
        }
    }
    Ok(best.expect("non-empty cost grid").1)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &ExperimentConfig,
    catalog: &ClassCatalog,
    train: &LabeledDataset,
    test: &TrainingSamples,
    image: &RasterImage,
    kernel: &KernelSpec,
    cost: f64,
    kernel_index: usize,
    strategy_index: usize,
    strategy: Strategy,
) -> Result<StrategyOutcome> {
    let params = TrainParams {
        tolerance: config.tolerance,
        max_passes: config.max_passes,
        seed: derive_seed(
            config.seed,
            0xce11_0000 ^ ((kernel_index as u64) << 8) ^ strategy_index as u64,
        ),
    };
    let model = train_multiclass(train, catalog, strategy, kernel, cost, config.voting, &params)?;
    let map = classify_raster(&model, image)?;

    let stem = format!("k{kernel_index}_{}_{}", kernel.kind.name(), strategy.name());
    let labelmap_file = format!("{stem}.hdr");
    crate::raster::write_labelmap(&map, &config.out_dir.join(&labelmap_file))?;

    let (unclassified, mixed) = map.count_special();
    let matrix = build_confusion(&map, test, catalog)?;
    let report = kappa(&matrix)?;

    let assessment_text_file = format!("{stem}_assessment.txt");
    atomic_write(
        &config.out_dir.join(&assessment_text_file),
        render_assessment_text(&matrix, &report).as_bytes(),
    )
    .map_err(|e| Error::from(e).with_context(format!("writing {assessment_text_file}")))?;
    let assessment_kv_file = format!("{stem}_assessment.kv");
    atomic_write(
        &config.out_dir.join(&assessment_kv_file),
        render_assessment_kv(&matrix, &report).as_bytes(),
    )
    .map_err(|e| Error::from(e).with_context(format!("writing {assessment_kv_file}")))?;

    Ok(StrategyOutcome {
        strategy,
        unclassified,
        mixed,
        report,
        labelmap_file,
        assessment_text_file,
        assessment_kv_file,
    })
}

/// Renders the merged comparison table as human-readable text.
pub fn render_comparison_text(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Strategy comparison: one-against-one vs one-against-all");
    for o in &report.outcomes {
        let _ = writeln!(out);
        let _ = writeln!(out, "== {} (C = {}) ==", o.kernel.describe(), o.cost);
        for s in [&o.one_against_one, &o.one_against_all] {
            let _ = writeln!(
                out,
                "  {:3}  unclassified {:6}  mixed {:6}  accuracy {:.4}  kappa {:.4}",
                s.strategy.name(),
                s.unclassified,
                s.mixed,
                s.report.overall_accuracy,
                s.report.kappa,
            );
        }
        let _ = writeln!(out, "  z = {:.4} -> {}", o.verdict.z(), o.verdict.describe());
    }
    out
}

const COMPARISON_MAGIC: &str = "multisvm-comparison v1";

/// Renders the comparison as a machine-readable key-value document.
pub fn render_comparison_kv(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{COMPARISON_MAGIC}");
    let _ = writeln!(out, "kernels: {}", report.outcomes.len());
    for (i, o) in report.outcomes.iter().enumerate() {
        let _ = writeln!(out, "kernel.{i}.spec: {}", o.kernel.describe());
        let _ = writeln!(out, "kernel.{i}.cost: {}", fmt_f64(o.cost));
        for s in [&o.one_against_one, &o.one_against_all] {
            let tag = s.strategy.name();
            let _ = writeln!(out, "kernel.{i}.{tag}.unclassified: {}", s.unclassified);
            let _ = writeln!(out, "kernel.{i}.{tag}.mixed: {}", s.mixed);
            let _ = writeln!(
                out,
                "kernel.{i}.{tag}.overall_accuracy: {}",
                fmt_f64(s.report.overall_accuracy)
            );
            let _ = writeln!(out, "kernel.{i}.{tag}.kappa: {}", fmt_f64(s.report.kappa));
            let _ = writeln!(
                out,
                "kernel.{i}.{tag}.kappa_variance: {}",
                fmt_f64(s.report.kappa_variance)
            );
            let _ = writeln!(out, "kernel.{i}.{tag}.labelmap: {}", s.labelmap_file);
            let _ = writeln!(out, "kernel.{i}.{tag}.assessment: {}", s.assessment_kv_file);
        }
        let _ = writeln!(out, "kernel.{i}.z: {}", fmt_f64(o.verdict.z()));
        let _ = writeln!(out, "kernel.{i}.verdict: {}", o.verdict.describe());
    }
    out
}

/// Writes a generated scene to disk: raster, train CSV, test CSV.
///
/// Returns the three paths (header, train, test) inside `dir`.
pub fn write_scene(
    scene: &crate::synth::SynthScene,
    dir: &Path,
) -> Result<(PathBuf, PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::from(e).with_context(format!("creating {}", dir.display())))?;
    let raster = dir.join("scene.hdr");
    let train = dir.join("train.csv");
    let test = dir.join("test.csv");
    crate::raster::write_raster(&scene.image, &raster)?;
    crate::raster::write_samples_csv(&scene.train, &train)?;
    crate::raster::write_samples_csv(&scene.test, &test)?;
    Ok((raster, train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthConfig};

    /// A small, fast, well-separated scene for harness plumbing tests.
    fn tiny_scene_config() -> SynthConfig {
        SynthConfig {
            rows: 20,
            cols: 20,
            n_classes: 3,
            bands: 4,
            class_separation: 8.0,
            overlap_fraction: 0.0,
            seed: 11,
            train_per_class: 12,
            test_per_class: 12,
        }
    }

    fn write_tiny_scene(dir: &Path) -> ExperimentConfig {
        let scene = generate_synthetic(&tiny_scene_config()).unwrap();
        let (raster, train, test) = write_scene(&scene, dir).unwrap();
        let classes = scene
            .catalog
            .classes()
            .iter()
            .map(|c| (c.code, c.name.clone()))
            .collect();
        let mut config = ExperimentConfig::new(raster, train, test, classes, dir.join("out"));
        config.kernels = vec![KernelSpec::linear()];
        config.cost_grid = vec![10.0];
        config.folds = 3;
        config
    }

    #[test]
    fn single_kernel_experiment_on_separable_data() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_tiny_scene(dir.path());
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.outcomes.len(), 1);
        let o = &report.outcomes[0];
        assert!(
            o.one_against_one.report.kappa >= 0.9,
            "1a1 kappa {}",
            o.one_against_one.report.kappa
        );
        assert!(
            o.one_against_all.report.kappa >= 0.9,
            "1aa kappa {}",
            o.one_against_all.report.kappa
        );
        assert!(!o.verdict.significant());
        assert_eq!(o.one_against_one.mixed, 0);

        // Emitted files exist and the kv re-parses consistently.
        for s in [&o.one_against_one, &o.one_against_all] {
            let map = crate::raster::read_labelmap(&config.out_dir.join(&s.labelmap_file)).unwrap();
            let (u, m) = map.count_special();
            assert_eq!((u, m), (s.unclassified, s.mixed));
            let text =
                std::fs::read_to_string(config.out_dir.join(&s.assessment_kv_file)).unwrap();
            let (matrix, parsed) = crate::assessment::parse_assessment_kv(&text).unwrap();
            assert_eq!(&parsed, &s.report);
            assert_eq!(kappa(&matrix).unwrap(), parsed);
        }
        assert!(config.out_dir.join(&report.text_file).exists());
        assert!(config.out_dir.join(&report.kv_file).exists());
    }

    #[test]
    fn empty_test_csv_fails_before_training() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = write_tiny_scene(dir.path());
        std::fs::write(&config.test_csv, "row,col,class\n").unwrap();
        // Make training impossibly expensive so we would notice if it ran.
        config.max_passes = 0;
        let err = run_experiment(&config).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");
        assert!(!err.is_convergence(), "validation must precede training: {err}");
    }

    #[test]
    fn errors_carry_kernel_and_strategy_context() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = write_tiny_scene(dir.path());
        config.max_passes = 0; // force a convergence failure
        let err = run_experiment(&config).unwrap_err();
        assert!(err.is_convergence(), "{err}");
        let msg = err.to_string();
        assert!(msg.contains("linear") && msg.contains("1a1"), "{msg}");
    }

    #[test]
    fn rerun_is_byte_identical_across_thread_counts() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = write_tiny_scene(dir.path());
        config.out_dir = dir.path().join("out1");
        config.threads = Some(1);
        run_experiment(&config).unwrap();
        let mut config2 = config.clone();
        config2.out_dir = dir.path().join("out4");
        config2.threads = Some(4);
        run_experiment(&config2).unwrap();

        let mut names: Vec<String> = std::fs::read_dir(&config.out_dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = std::fs::read(config.out_dir.join(&name)).unwrap();
            let b = std::fs::read(config2.out_dir.join(&name)).unwrap();
            assert_eq!(a, b, "{name} differs between thread counts");
        }
    }

    #[test]
    fn cost_selection_prefers_smaller_cost_on_ties() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = write_tiny_scene(dir.path());
        config.cost_grid = vec![100.0, 1.0, 10.0];
        let report = run_experiment(&config).unwrap();
        // The scene is trivially separable, so all costs tie at accuracy 1.
        assert_eq!(report.outcomes[0].cost, 1.0);
    }
}
