//! Accuracy assessment: confusion matrices, overall accuracy, the kappa
//! coefficient with a large-sample variance, and a Z-test comparing two
//! classifications.
//!
//! Confusion matrices have one row per class plus two sentinel rows
//! (unclassified and mixed) and one column per reference class. Sentinel
//! rows count toward the total and the row sums, so non-decisions depress
//! both overall accuracy and chance agreement; they never gain a reference
//! column of their own.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model_io::fmt_f64;
use crate::multiclass::{ClassCatalog, ClassEntry, MIXED, UNCLASSIFIED};
use crate::raster::{LabelMap, TrainingSamples};

/// Two-sided 95% critical value for the kappa Z-test.
pub const Z_CRITICAL: f64 = 1.96;

/// Cross-tabulation of predicted categories against reference classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    catalog: ClassCatalog,
    /// `(N+2) x N` counts; row `N` collects unclassified predictions and row
    /// `N+1` mixed predictions.
    counts: Vec<Vec<u64>>,
    n: u64,
}

impl ConfusionMatrix {
    pub fn new(catalog: ClassCatalog, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n_classes = catalog.len();
        if counts.len() != n_classes + 2 {
            return Err(Error::input(format!(
                "confusion matrix needs {} rows ({n_classes} classes + 2 sentinels), got {}",
                n_classes + 2,
                counts.len()
            )));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != n_classes {
                return Err(Error::input(format!(
                    "confusion matrix row {i} has {} columns, expected {n_classes}",
                    row.len()
                )));
            }
        }
        let n: u64 = counts.iter().flatten().sum();
        if n == 0 {
            return Err(Error::input("confusion matrix is empty"));
        }
        Ok(Self { catalog, counts, n })
    }

    pub fn catalog(&self) -> &ClassCatalog {
        &self.catalog
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Total number of reference samples.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Row index of the unclassified sentinel.
    pub fn unclassified_row(&self) -> usize {
        self.catalog.len()
    }

    /// Row index of the mixed sentinel.
    pub fn mixed_row(&self) -> usize {
        self.catalog.len() + 1
    }
}

/// Builds the confusion matrix of a label map against reference pixels.
///
/// The reference samples must be pixel coordinates (the map has no feature
/// space to match direct feature vectors against). Every reference class must
/// be in `catalog`, and every predicted code must be a catalog class or a
/// sentinel.
pub fn build_confusion(
    predicted: &LabelMap,
    reference: &TrainingSamples,
    catalog: &ClassCatalog,
) -> Result<ConfusionMatrix> {
    let pixels = match reference {
        TrainingSamples::Pixels(p) => p,
        TrainingSamples::Features(_) => {
            return Err(Error::input(
                "reference samples must be pixel coordinates to assess a label map",
            ));
        }
    };
    if pixels.is_empty() {
        return Err(Error::input("reference sample set is empty"));
    }
    let n_classes = catalog.len();
    let mut counts = vec![vec![0u64; n_classes]; n_classes + 2];
    for p in pixels {
        if p.row >= predicted.rows() || p.col >= predicted.cols() {
            return Err(Error::input(format!(
                "reference sample at ({}, {}) is outside the {}x{} label map",
                p.row,
                p.col,
                predicted.rows(),
                predicted.cols()
            )));
        }
        let col = catalog.index_of(p.class).ok_or_else(|| {
            Error::input(format!("reference class {} is not in the catalog", p.class))
        })?;
        let code = predicted.label(p.row, p.col);
        let row = match code {
            UNCLASSIFIED => n_classes,
            MIXED => n_classes + 1,
            c => catalog.index_of(c).ok_or_else(|| {
                Error::input(format!("label map contains code {c} that is not in the catalog"))
            })?,
        };
        counts[row][col] += 1;
    }
    ConfusionMatrix::new(catalog.clone(), counts)
}

/// Agreement statistics derived from one confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    /// Observed agreement `p_o` (diagonal mass over n).
    pub overall_accuracy: f64,
    /// Chance agreement `p_e`.
    pub expected_agreement: f64,
    /// Chance-corrected agreement `(p_o - p_e) / (1 - p_e)`.
    pub kappa: f64,
    /// Large-sample variance `p_o (1 - p_o) / (n (1 - p_e)^2)`.
    pub kappa_variance: f64,
    pub n: u64,
    /// Per catalog class: diagonal over column total (`None` when the class
    /// has no reference samples).
    pub producer_accuracy: Vec<Option<f64>>,
    /// Per catalog class: diagonal over row total (`None` when the class was
    /// never predicted).
    pub user_accuracy: Vec<Option<f64>>,
}

/// Computes overall accuracy, kappa, and its variance from a matrix.
///
/// Errors with a degenerate-distribution message when chance agreement is 1
/// (all row and column mass concentrated so that kappa is undefined).
pub fn kappa(matrix: &ConfusionMatrix) -> Result<AccuracyReport> {
    let n_classes = matrix.catalog().len();
    let counts = matrix.counts();
    let n = matrix.n() as f64;

    let mut diagonal = 0u64;
    for i in 0..n_classes {
        diagonal += counts[i][i];
    }
    let row_totals: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<u64> =
        (0..n_classes).map(|c| counts.iter().map(|r| r[c]).sum()).collect();

    let p_o = diagonal as f64 / n;
    let mut chance = 0.0;
    for i in 0..n_classes {
        chance += row_totals[i] as f64 * col_totals[i] as f64;
    }
    let p_e = chance / (n * n);
    if p_e >= 1.0 {
        return Err(Error::Degenerate(format!(
            "chance agreement is {p_e}; kappa is undefined when every prediction and \
             reference fall in one class"
        )));
    }
    let kappa = (p_o - p_e) / (1.0 - p_e);
    let kappa_variance = p_o * (1.0 - p_o) / (n * (1.0 - p_e) * (1.0 - p_e));

    let mut producer_accuracy = Vec::with_capacity(n_classes);
    let mut user_accuracy = Vec::with_capacity(n_classes);
    for i in 0..n_classes {
        producer_accuracy.push(if col_totals[i] == 0 {
            None
        } else {
            Some(counts[i][i] as f64 / col_totals[i] as f64)
        });
        user_accuracy.push(if row_totals[i] == 0 {
            None
        } else {
            Some(counts[i][i] as f64 / row_totals[i] as f64)
        });
    }

    Ok(AccuracyReport {
        overall_accuracy: p_o,
        expected_agreement: p_e,
        kappa,
        kappa_variance,
        n: matrix.n(),
        producer_accuracy,
        user_accuracy,
    })
}

/// Result of comparing two kappa coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonVerdict {
    z: f64,
    significant: bool,
}

impl ComparisonVerdict {
    /// Builds a verdict from a Z statistic; `significant` is derived, never
    /// stored independently, so the `|z| > 1.96` rule cannot drift.
    pub fn new(z: f64) -> Self {
        Self { z, significant: z.abs() > Z_CRITICAL }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn significant(&self) -> bool {
        self.significant
    }

    /// Human-readable verdict line.
    pub fn describe(&self) -> &'static str {
        if self.significant {
            "Difference significant"
        } else if self.z == 0.0 {
            "No difference"
        } else {
            "Difference insignificant"
        }
    }
}

/// Two-sided Z-test on the difference of two kappa coefficients.
///
/// `z = (a.kappa - b.kappa) / sqrt(a.variance + b.variance)`. When both
/// variances are zero the test degenerates: equal kappas give z = 0
/// (insignificant), unequal kappas are an error.
pub fn z_test(a: &AccuracyReport, b: &AccuracyReport) -> Result<ComparisonVerdict> {
    for (side, v) in [("first", a.kappa_variance), ("second", b.kappa_variance)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::input(format!(
                "{side} report has invalid kappa variance {v}"
            )));
        }
    }
    let var_sum = a.kappa_variance + b.kappa_variance;
    if var_sum == 0.0 {
        if a.kappa == b.kappa {
            return Ok(ComparisonVerdict::new(0.0));
        }
        return Err(Error::Degenerate(format!(
            "both kappa variances are zero but the kappas differ ({} vs {})",
            a.kappa, b.kappa
        )));
    }
    Ok(ComparisonVerdict::new((a.kappa - b.kappa) / var_sum.sqrt()))
}

// ---------------------------------------------------------------------------
// Report rendering.
// ---------------------------------------------------------------------------

const ASSESSMENT_MAGIC: &str = "multisvm-assessment v1";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => fmt_f64(v),
        None => "na".to_string(),
    }
}

/// Renders an assessment as a human-readable text table.
pub fn render_assessment_text(matrix: &ConfusionMatrix, report: &AccuracyReport) -> String {
    let catalog = matrix.catalog();
    let names: Vec<&str> = catalog.classes().iter().map(|c| c.name.as_str()).collect();
    let mut row_labels: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    row_labels.push("unclassified".to_string());
    row_labels.push("mixed".to_string());
    let label_width = row_labels.iter().map(|l| l.len()).max().unwrap_or(0).max(9);
    let col_width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(8);

    let mut out = String::new();
    let _ = writeln!(out, "Accuracy assessment (n = {})", report.n);
    let _ = writeln!(out, "predicted \\ reference");
    let _ = write!(out, "{:label_width$}", "");
    for name in &names {
        let _ = write!(out, "  {name:>col_width$}");
    }
    out.push('\n');
    for (i, label) in row_labels.iter().enumerate() {
        let _ = write!(out, "{label:label_width$}");
        for c in 0..names.len() {
            let _ = write!(out, "  {:>col_width$}", matrix.counts()[i][c]);
        }
        out.push('\n');
    }
    out.push('\n');
    let _ = writeln!(out, "overall accuracy   {:.4}", report.overall_accuracy);
    let _ = writeln!(out, "chance agreement   {:.4}", report.expected_agreement);
    let _ = writeln!(out, "kappa              {:.4}", report.kappa);
    let _ = writeln!(out, "kappa variance     {}", fmt_f64(report.kappa_variance));
    let _ = writeln!(out, "per-class accuracy (producer / user):");
    for (i, name) in names.iter().enumerate() {
        let p = report.producer_accuracy[i]
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "na".into());
        let u = report.user_accuracy[i]
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "na".into());
        let _ = writeln!(out, "  {name:label_width$}  {p} / {u}");
    }
    out
}

/// Renders an assessment as a machine-readable key-value document.
pub fn render_assessment_kv(matrix: &ConfusionMatrix, report: &AccuracyReport) -> String {
    let catalog = matrix.catalog();
    let mut out = String::new();
    let _ = writeln!(out, "{ASSESSMENT_MAGIC}");
    let codes: Vec<String> = catalog.classes().iter().map(|c| c.code.to_string()).collect();
    let _ = writeln!(out, "classes: {}", codes.join(" "));
    for c in catalog.classes() {
        let _ = writeln!(out, "class.{}: {}", c.code, c.name);
    }
    let _ = writeln!(out, "n: {}", report.n);
    for (i, c) in catalog.classes().iter().enumerate() {
        let row: Vec<String> = matrix.counts()[i].iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "row.{}: {}", c.code, row.join(" "));
    }
    for (key, idx) in [("row.unclassified", matrix.unclassified_row()), ("row.mixed", matrix.mixed_row())] {
        let row: Vec<String> = matrix.counts()[idx].iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{key}: {}", row.join(" "));
    }
    let _ = writeln!(out, "overall_accuracy: {}", fmt_f64(report.overall_accuracy));
    let _ = writeln!(out, "expected_agreement: {}", fmt_f64(report.expected_agreement));
    let _ = writeln!(out, "kappa: {}", fmt_f64(report.kappa));
    let _ = writeln!(out, "kappa_variance: {}", fmt_f64(report.kappa_variance));
    for (i, c) in catalog.classes().iter().enumerate() {
        let _ = writeln!(out, "producer.{}: {}", c.code, fmt_opt(report.producer_accuracy[i]));
    }
    for (i, c) in catalog.classes().iter().enumerate() {
        let _ = writeln!(out, "user.{}: {}", c.code, fmt_opt(report.user_accuracy[i]));
    }
    out
}

/// Parses a document produced by [`render_assessment_kv`] back into its
/// matrix and report, so emitted numbers can be re-checked against a
/// recomputation.
pub fn parse_assessment_kv(text: &str) -> Result<(ConfusionMatrix, AccuracyReport)> {
    let mut lines = text.lines();
    if lines.next() != Some(ASSESSMENT_MAGIC) {
        return Err(Error::Format {
            message: format!("expected {ASSESSMENT_MAGIC:?} on the first line"),
            offset: None,
        });
    }
    let mut kv: std::collections::BTreeMap<&str, &str> = Default::default();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once(": ").ok_or_else(|| Error::Format {
            message: format!("expected \"key: value\", got {line:?}"),
            offset: None,
        })?;
        if kv.insert(k, v).is_some() {
            return Err(Error::Format { message: format!("duplicate key {k:?}"), offset: None });
        }
    }
    let get = |key: &str| -> Result<&str> {
        kv.get(key).copied().ok_or_else(|| Error::Format {
            message: format!("missing key {key:?}"),
            offset: None,
        })
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        let v = get(key)?;
        v.parse()
            .map_err(|_| Error::Format { message: format!("bad float {v:?} for {key}"), offset: None })
    };
    let parse_row = |key: &str, len: usize| -> Result<Vec<u64>> {
        let v = get(key)?;
        let row: Vec<u64> = v
            .split(' ')
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format { message: format!("bad counts {v:?} for {key}"), offset: None })?;
        if row.len() != len {
            return Err(Error::Format {
                message: format!("{key} has {} entries, expected {len}", row.len()),
                offset: None,
            });
        }
        Ok(row)
    };
    let parse_opt = |key: &str| -> Result<Option<f64>> {
        let v = get(key)?;
        if v == "na" {
            return Ok(None);
        }
        v.parse().map(Some).map_err(|_| Error::Format {
            message: format!("bad float {v:?} for {key}"),
            offset: None,
        })
    };

    let codes: Vec<u8> = get("classes")?
        .split(' ')
        .map(|t| t.parse::<u8>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format { message: "bad class code list".into(), offset: None })?;
    let mut entries = Vec::with_capacity(codes.len());
    for &code in &codes {
        entries.push(ClassEntry { code, name: get(&format!("class.{code}"))?.to_string() });
    }
    let catalog = ClassCatalog::new(entries)?;

    let mut counts = Vec::with_capacity(codes.len() + 2);
    for &code in &codes {
        counts.push(parse_row(&format!("row.{code}"), codes.len())?);
    }
    counts.push(parse_row("row.unclassified", codes.len())?);
    counts.push(parse_row("row.mixed", codes.len())?);
    let matrix = ConfusionMatrix::new(catalog, counts)?;

    let n: u64 = get("n")?
        .parse()
        .map_err(|_| Error::Format { message: "bad n".into(), offset: None })?;
    let mut producer_accuracy = Vec::with_capacity(codes.len());
    let mut user_accuracy = Vec::with_capacity(codes.len());
    for &code in &codes {
        producer_accuracy.push(parse_opt(&format!("producer.{code}"))?);
        user_accuracy.push(parse_opt(&format!("user.{code}"))?);
    }
    let report = AccuracyReport {
        overall_accuracy: parse_f64("overall_accuracy")?,
        expected_agreement: parse_f64("expected_agreement")?,
        kappa: parse_f64("kappa")?,
        kappa_variance: parse_f64("kappa_variance")?,
        n,
        producer_accuracy,
        user_accuracy,
    };
    if n != matrix.n() {
        return Err(Error::Format {
            message: format!("n = {n} disagrees with the matrix total {}", matrix.n()),
            offset: None,
        });
    }
    Ok((matrix, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::PixelSample;

    fn catalog2() -> ClassCatalog {
        ClassCatalog::from_pairs([(1, "a"), (2, "b")]).unwrap()
    }

    fn matrix2(rows: [[u64; 2]; 4]) -> ConfusionMatrix {
        ConfusionMatrix::new(catalog2(), rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn hand_computed_kappa_is_exact() {
        let m = matrix2([[45, 5], [10, 40], [0, 0], [0, 0]]);
        let r = kappa(&m).unwrap();
        assert_eq!(r.overall_accuracy, 0.85);
        assert_eq!(r.expected_agreement, 0.5);
        assert!((r.kappa - 0.7).abs() < 1e-12, "kappa = {}", r.kappa);
        assert_eq!(r.n, 100);
        assert_eq!(r.producer_accuracy, vec![Some(45.0 / 55.0), Some(40.0 / 45.0)]);
        assert_eq!(r.user_accuracy, vec![Some(0.9), Some(0.8)]);
    }

    #[test]
    fn perfect_agreement_has_kappa_one() {
        let m = matrix2([[50, 0], [0, 50], [0, 0], [0, 0]]);
        let r = kappa(&m).unwrap();
        assert_eq!(r.overall_accuracy, 1.0);
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.kappa_variance, 0.0);
    }

    #[test]
    fn chance_structured_matrix_has_kappa_zero() {
        // Rows proportional to column totals.
        let m = matrix2([[30, 30], [20, 20], [0, 0], [0, 0]]);
        let r = kappa(&m).unwrap();
        assert!(r.kappa.abs() < 1e-12, "kappa = {}", r.kappa);
    }

    #[test]
    fn sentinel_rows_depress_accuracy_but_have_no_column() {
        let m = matrix2([[40, 0], [0, 40], [10, 5], [0, 5]]);
        let r = kappa(&m).unwrap();
        assert_eq!(r.n, 100);
        assert_eq!(r.overall_accuracy, 0.8);
        // Chance agreement only uses class-row totals: (40*50 + 40*50)/100^2.
        assert_eq!(r.expected_agreement, 0.4);
    }

    #[test]
    fn degenerate_single_cell_matrix_is_an_error() {
        let catalog = catalog2();
        let m = ConfusionMatrix::new(
            catalog,
            vec![vec![100, 0], vec![0, 0], vec![0, 0], vec![0, 0]],
        )
        .unwrap();
        let err = kappa(&m).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }

    #[test]
    fn kappa_never_exceeds_overall_accuracy() {
        // A few deterministic pseudo-random matrices.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state % 50
        };
        for _ in 0..200 {
            let rows = [
                [next(), next()],
                [next(), next()],
                [next(), next()],
                [next(), next()],
            ];
            if rows.iter().flatten().sum::<u64>() == 0 {
                continue;
            }
            let m = matrix2(rows);
            match kappa(&m) {
                Ok(r) if r.expected_agreement > 0.0 => {
                    assert!(
                        r.kappa <= r.overall_accuracy + 1e-12,
                        "kappa {} > accuracy {}",
                        r.kappa,
                        r.overall_accuracy
                    );
                }
                _ => {}
            }
        }
    }

    #[test]
    fn build_confusion_routes_sentinels() {
        let catalog = catalog2();
        // Map: class 1, class 2, unclassified, mixed.
        let map = LabelMap::new(2, 2, vec![1, 2, 0, 255]).unwrap();
        let reference = TrainingSamples::Pixels(vec![
            PixelSample { row: 0, col: 0, class: 1 },
            PixelSample { row: 0, col: 1, class: 1 },
            PixelSample { row: 1, col: 0, class: 2 },
            PixelSample { row: 1, col: 1, class: 2 },
        ]);
        let m = build_confusion(&map, &reference, &catalog).unwrap();
        assert_eq!(m.counts()[0], vec![1, 0]); // predicted a
        assert_eq!(m.counts()[1], vec![1, 0]); // predicted b for reference a
        assert_eq!(m.counts()[2], vec![0, 1]); // unclassified
        assert_eq!(m.counts()[3], vec![0, 1]); // mixed
        assert_eq!(m.n(), 4);
    }

    #[test]
    fn build_confusion_validates_inputs() {
        let catalog = catalog2();
        let map = LabelMap::new(1, 1, vec![1]).unwrap();
        let empty = TrainingSamples::Pixels(vec![]);
        assert!(build_confusion(&map, &empty, &catalog).is_err());

        let oob = TrainingSamples::Pixels(vec![PixelSample { row: 3, col: 0, class: 1 }]);
        let err = build_confusion(&map, &oob, &catalog).unwrap_err();
        assert!(err.to_string().contains("(3, 0)"), "{err}");

        let bad_class = TrainingSamples::Pixels(vec![PixelSample { row: 0, col: 0, class: 9 }]);
        let err = build_confusion(&map, &bad_class, &catalog).unwrap_err();
        assert!(err.to_string().contains("class 9"), "{err}");

        let foreign_map = LabelMap::new(1, 1, vec![77]).unwrap();
        let good_ref = TrainingSamples::Pixels(vec![PixelSample { row: 0, col: 0, class: 1 }]);
        let err = build_confusion(&foreign_map, &good_ref, &catalog).unwrap_err();
        assert!(err.to_string().contains("77"), "{err}");
    }

    fn report(kappa: f64, variance: f64) -> AccuracyReport {
        AccuracyReport {
            overall_accuracy: 0.9,
            expected_agreement: 0.5,
            kappa,
            kappa_variance: variance,
            n: 100,
            producer_accuracy: vec![],
            user_accuracy: vec![],
        }
    }

    #[test]
    fn z_test_hand_arithmetic() {
        let v = z_test(&report(0.9, 0.0004), &report(0.5, 0.0004)).unwrap();
        assert!((v.z() - 0.4 / 0.0008f64.sqrt()).abs() < 1e-12);
        assert!(v.significant());
        assert_eq!(v.describe(), "Difference significant");
    }

    #[test]
    fn z_test_identical_reports() {
        let v = z_test(&report(0.7, 0.001), &report(0.7, 0.001)).unwrap();
        assert_eq!(v.z(), 0.0);
        assert!(!v.significant());
        assert_eq!(v.describe(), "No difference");
    }

    #[test]
    fn z_test_is_antisymmetric() {
        let a = report(0.92, 0.0007);
        let b = report(0.81, 0.0011);
        let ab = z_test(&a, &b).unwrap();
        let ba = z_test(&b, &a).unwrap();
        assert_eq!(ab.z(), -ba.z());
        assert_eq!(ab.significant(), ba.significant());
    }

    #[test]
    fn z_test_zero_variance_rules() {
        // Equal kappas, zero variances: defined as z = 0.
        let v = z_test(&report(1.0, 0.0), &report(1.0, 0.0)).unwrap();
        assert_eq!(v.z(), 0.0);
        // Unequal kappas, zero variances: degenerate.
        let err = z_test(&report(1.0, 0.0), &report(0.9, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }

    #[test]
    fn verdict_boundary_is_strict() {
        assert!(!ComparisonVerdict::new(1.96).significant());
        assert!(!ComparisonVerdict::new(-1.96).significant());
        assert!(ComparisonVerdict::new(1.9600001).significant());
        assert!(ComparisonVerdict::new(-1.9600001).significant());
        assert_eq!(ComparisonVerdict::new(1.0).describe(), "Difference insignificant");
    }

    #[test]
    fn kv_round_trip_matches_recomputation() {
        let m = matrix2([[45, 5], [10, 38], [1, 0], [0, 1]]);
        let r = kappa(&m).unwrap();
        let doc = render_assessment_kv(&m, &r);
        let (m2, r2) = parse_assessment_kv(&doc).unwrap();
        assert_eq!(m, m2);
        assert_eq!(r, r2);
        // The parsed matrix recomputes to the parsed report bit-for-bit.
        assert_eq!(kappa(&m2).unwrap(), r2);
    }

    #[test]
    fn text_report_mentions_the_key_numbers() {
        let m = matrix2([[45, 5], [10, 40], [0, 0], [0, 0]]);
        let r = kappa(&m).unwrap();
        let text = render_assessment_text(&m, &r);
        assert!(text.contains("kappa              0.7000"), "{text}");
        assert!(text.contains("overall accuracy   0.8500"), "{text}");
        assert!(text.contains("unclassified"), "{text}");
    }
}
