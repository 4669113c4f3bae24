//! Binary soft-margin SVM trained with sequential minimal optimization.
//!
//! The trainer solves the dual problem
//!
//! ```text
//! maximize   W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C,   sum_i a_i y_i = 0
//! ```
//!
//! with Platt-style working-set selection: an outer loop alternating between
//! full sweeps and non-bound sweeps, and a second-choice hierarchy that first
//! tries the partner maximizing |E1 - E2| over non-bound examples, then all
//! non-bound examples from a random start, then every example from a random
//! start. Features are standardized per machine before any kernel evaluation,
//! and the stored model keeps its support vectors in standardized space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ConvergenceDiagnostics, Error, Result};
use crate::kernels::{FeatureVector, KernelSpec};
use crate::seed::derive_seed;

/// Default KKT tolerance used when a caller does not override it.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
/// Default examination budget multiplier (times the sample count).
pub const DEFAULT_MAX_PASSES: usize = 100;

/// A two-class training set with labels in {-1, +1}.
#[derive(Debug, Clone)]
pub struct BinaryProblem {
    samples: Vec<FeatureVector>,
    labels: Vec<f64>,
    cost: f64,
}

impl BinaryProblem {
    /// Validates and wraps a two-class training set.
    ///
    /// Every label must be exactly `-1.0` or `+1.0`, both classes must be
    /// present, all samples must share one finite feature dimension, and the
    /// box constraint `cost` must be a positive finite number.
    pub fn new(samples: Vec<FeatureVector>, labels: Vec<f64>, cost: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("training set is empty"));
        }
        if samples.len() != labels.len() {
            return Err(Error::input(format!(
                "sample/label count mismatch: {} samples vs {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if !(cost.is_finite() && cost > 0.0) {
            return Err(Error::input(format!("cost must be positive and finite, got {cost}")));
        }
        let dim = samples[0].len();
        if dim == 0 {
            return Err(Error::input("samples must have at least one feature"));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::Dimension { expected: dim, actual: s.len() });
            }
            if let Some(v) = s.iter().find(|v| !v.is_finite()) {
                return Err(Error::input(format!("sample {i} contains a non-finite value {v}")));
            }
        }
        let mut pos = 0usize;
        let mut neg = 0usize;
        for (i, &l) in labels.iter().enumerate() {
            if l == 1.0 {
                pos += 1;
            } else if l == -1.0 {
                neg += 1;
            } else {
                return Err(Error::input(format!("label {i} must be -1 or +1, got {l}")));
            }
        }
        if pos == 0 || neg == 0 {
            return Err(Error::input(format!(
                "both classes must be present (got {pos} positive, {neg} negative)"
            )));
        }
        Ok(Self { samples, labels, cost })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn samples(&self) -> &[FeatureVector] {
        &self.samples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }
}

/// Per-feature affine transform `(x - mean) / std` fitted on a training set.
///
/// The standard deviation is the population form (divisor `n`); features with
/// zero variance get a divisor of one so they pass through centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(samples: &[FeatureVector]) -> Self {
        let n = samples.len();
        let dim = samples[0].len();
        let mut means = vec![0.0; dim];
        for s in samples {
            for (m, v) in means.iter_mut().zip(s) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut stds = vec![0.0; dim];
        for s in samples {
            for ((acc, v), m) in stds.iter_mut().zip(s).zip(&means) {
                let d = v - m;
                *acc += d * d;
            }
        }
        for v in &mut stds {
            *v = (*v / n as f64).sqrt();
            if *v == 0.0 {
                *v = 1.0;
            }
        }
        Self { means, stds }
    }

    /// Identity transform for a given dimension (used by hand-built models).
    pub fn identity(dim: usize) -> Self {
        Self { means: vec![0.0; dim], stds: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> FeatureVector {
        x.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn apply_all(&self, xs: &[FeatureVector]) -> Vec<FeatureVector> {
        xs.iter().map(|x| self.apply(x)).collect()
    }
}

/// A trained binary decision function `f(x) = sum_i coef_i K(sv_i, z) + b`
/// where `z` is the standardized query point.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvmModel {
    /// Fully resolved kernel (RBF gamma is always concrete here).
    pub kernel: KernelSpec,
    pub standardizer: Standardizer,
    /// Support vectors, already standardized.
    pub support_vectors: Vec<FeatureVector>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
}

impl BinarySvmModel {
    /// A degenerate machine whose decision function is the constant `value`
    /// everywhere. Useful for exercising voting logic without training.
    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            kernel: KernelSpec::linear(),
            standardizer: Standardizer::identity(dim),
            support_vectors: vec![vec![0.0; dim]],
            dual_coefs: vec![0.0],
            bias: value,
        }
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Evaluates the decision function on a raw (unstandardized) input.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), actual: x.len() });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("query point contains a non-finite value {v}")));
        }
        Ok(self.decision_value_unchecked(x))
    }

    /// Same as [`decision_value`](Self::decision_value) without input
    /// validation; callers must guarantee dimension and finiteness.
    pub(crate) fn decision_value_unchecked(&self, x: &[f64]) -> f64 {
        let z = self.standardizer.apply(x);
        let mut acc = 0.0;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            acc += coef * self.kernel.eval_unchecked(sv, &z);
        }
        acc + self.bias
    }

    /// Predicted label in {-1, +1}; a decision value of exactly zero maps to
    /// the positive class.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.decision_value(x)? >= 0.0 { 1.0 } else { -1.0 })
    }
}

/// Extra information about a finished training run, mainly for verification.
#[derive(Debug, Clone)]
pub struct TrainDiagnostics {
    /// Final dual variables, aligned with the problem's sample order.
    pub alphas: Vec<f64>,
    /// Number of candidate examinations performed by the outer loop.
    pub iterations: usize,
    /// Largest KKT violation at the returned solution (decision-margin units).
    pub max_violation: f64,
}

/// Trains a binary SVM; see [`train_with_diagnostics`] for the full contract.
pub fn train(
    problem: &BinaryProblem,
    kernel: &KernelSpec,
    tolerance: f64,
    max_passes: usize,
    seed: u64,
) -> Result<BinarySvmModel> {
    train_with_diagnostics(problem, kernel, tolerance, max_passes, seed).map(|(m, _)| m)
}

/// Trains a binary SVM and also returns solver diagnostics.
///
/// On success the returned model satisfies the KKT conditions within
/// `tolerance`: examples at `alpha = 0` have margin `>= 1 - tolerance`, free
/// examples have margin within `tolerance` of 1, and examples at `alpha = C`
/// have margin `<= 1 + tolerance`. If the examination budget
/// `max_passes * n` is exhausted first, training fails with a convergence
/// error carrying diagnostics.
pub fn train_with_diagnostics(
    problem: &BinaryProblem,
    kernel: &KernelSpec,
    tolerance: f64,
    max_passes: usize,
    seed: u64,
) -> Result<(BinarySvmModel, TrainDiagnostics)> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::input(format!("tolerance must be positive and finite, got {tolerance}")));
    }
    let kernel = kernel.resolve(problem.dim())?;
    kernel.validate()?;

    let standardizer = Standardizer::fit(problem.samples());
    let standardized = standardizer.apply_all(problem.samples());

    let mut solver = SmoSolver::new(
        &standardized,
        problem.labels(),
        problem.cost(),
        &kernel,
        tolerance,
        max_passes.saturating_mul(problem.len()),
        seed,
    );
    solver.run()?;
    let (alphas, bias, max_violation, iterations) = solver.finish(tolerance)?;

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (i, &a) in alphas.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(standardized[i].clone());
            dual_coefs.push(a * problem.labels()[i]);
        }
    }
    if support_vectors.is_empty() {
        return Err(Error::Degenerate(format!(
            "no support vectors retained; tolerance {tolerance} is too loose for this data"
        )));
    }

    let model = BinarySvmModel { kernel, standardizer, support_vectors, dual_coefs, bias };
    let diagnostics = TrainDiagnostics { alphas, iterations, max_violation };
    Ok((model, diagnostics))
}

/// Threshold below which a step is considered to have made no progress.
const STEP_EPS: f64 = 1e-12;

struct SmoSolver<'a> {
    labels: &'a [f64],
    cost: f64,
    n: usize,
    gram: Vec<f64>,
    alphas: Vec<f64>,
    errors: Vec<f64>,
    bias: f64,
    /// Working tolerance; tighter than the caller's so that the final bias
    /// canonicalization cannot push any example past the caller's tolerance.
    tol: f64,
    budget: usize,
    examinations: usize,
    rng: ChaCha8Rng,
    /// Snap-to-bound threshold for dual variables.
    snap: f64,
}

impl<'a> SmoSolver<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        samples: &[FeatureVector],
        labels: &'a [f64],
        cost: f64,
        kernel: &KernelSpec,
        tolerance: f64,
        budget: usize,
        seed: u64,
    ) -> Self {
        let n = samples.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval_unchecked(&samples[i], &samples[j]);
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        // With all alphas at zero the decision function is identically zero,
        // so the initial error cache is just -y.
        let errors = labels.iter().map(|y| -y).collect();
        Self {
            labels,
            cost,
            n,
            gram,
            alphas: vec![0.0; n],
            errors,
            bias: 0.0,
            tol: tolerance * 0.45,
            budget,
            examinations: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            snap: 8.0 * f64::EPSILON * cost.max(1.0),
        }
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn run(&mut self) -> Result<()> {
        let mut examine_all = true;
        let mut num_changed = 1usize;
        while num_changed > 0 || examine_all {
            num_changed = 0;
            if examine_all {
                for i in 0..self.n {
                    num_changed += self.examine(i)? as usize;
                }
            } else {
                for i in 0..self.n {
                    if self.alphas[i] > 0.0 && self.alphas[i] < self.cost {
                        num_changed += self.examine(i)? as usize;
                    }
                }
            }
            if examine_all {
                examine_all = false;
            } else if num_changed == 0 {
                examine_all = true;
            }
        }
        Ok(())
    }

    fn examine(&mut self, i2: usize) -> Result<bool> {
        if self.examinations >= self.budget {
            return Err(self.convergence_error());
        }
        self.examinations += 1;

        let y2 = self.labels[i2];
        let alph2 = self.alphas[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates =
            (r2 < -self.tol && alph2 < self.cost) || (r2 > self.tol && alph2 > 0.0);
        if !violates {
            return Ok(false);
        }

        let non_bound: Vec<usize> = (0..self.n)
            .filter(|&i| self.alphas[i] > 0.0 && self.alphas[i] < self.cost)
            .collect();

        // Heuristic 1: the non-bound partner with the largest |E1 - E2|.
        if non_bound.len() > 1 {
            let mut best = non_bound[0];
            let mut best_gap = -1.0;
            for &i in &non_bound {
                let gap = (self.errors[i] - e2).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best = i;
                }
            }
            if self.take_step(best, i2) {
                return Ok(true);
            }
        }

        // Heuristic 2: every non-bound example, starting at a random offset.
        if !non_bound.is_empty() {
            let start = self.rng.gen_range(0..non_bound.len());
            for k in 0..non_bound.len() {
                let i1 = non_bound[(start + k) % non_bound.len()];
                if self.take_step(i1, i2) {
                    return Ok(true);
                }
            }
        }

        // Heuristic 3: every example, starting at a random offset.
        let start = self.rng.gen_range(0..self.n);
        for k in 0..self.n {
            let i1 = (start + k) % self.n;
            if self.take_step(i1, i2) {
                return Ok(true);
            }
        }

        Ok(false)
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (y1, y2) = (self.labels[i1], self.labels[i2]);
        let (alph1, alph2) = (self.alphas[i1], self.alphas[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;

        let (lo, hi) = if s < 0.0 {
            ((alph2 - alph1).max(0.0), (self.cost + alph2 - alph1).min(self.cost))
        } else {
            ((alph1 + alph2 - self.cost).max(0.0), (alph1 + alph2).min(self.cost))
        };
        if lo >= hi {
            return false;
        }

        let k11 = self.k(i1, i1);
        let k12 = self.k(i1, i2);
        let k22 = self.k(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2;
        if eta > 0.0 {
            a2 = alph2 + y2 * (e1 - e2) / eta;
            a2 = a2.clamp(lo, hi);
        } else {
            // The objective is flat (or spuriously concave from roundoff)
            // along this direction; compare it at the two segment endpoints.
            // With g the directional derivative at alph2, the change when
            // moving to a is g*(a - alph2) - eta/2*(a - alph2)^2.
            let g = y2 * (e1 - e2);
            let dl = lo - alph2;
            let dh = hi - alph2;
            let obj_lo = g * dl - 0.5 * eta * dl * dl;
            let obj_hi = g * dh - 0.5 * eta * dh * dh;
            let eps = STEP_EPS * (1.0 + obj_lo.abs() + obj_hi.abs());
            if obj_lo > obj_hi + eps {
                a2 = lo;
            } else if obj_hi > obj_lo + eps {
                a2 = hi;
            } else {
                return false;
            }
        }
        if (a2 - alph2).abs() < STEP_EPS * (a2 + alph2 + STEP_EPS) {
            return false;
        }

        let mut a1 = alph1 + s * (alph2 - a2);
        a1 = self.snap_to_bounds(a1);
        a2 = self.snap_to_bounds(a2);

        let d1 = y1 * (a1 - alph1);
        let d2 = y2 * (a2 - alph2);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let new_bias = if a1 > 0.0 && a1 < self.cost {
            b1
        } else if a2 > 0.0 && a2 < self.cost {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_bias - self.bias;

        for k in 0..self.n {
            self.errors[k] += d1 * self.k(i1, k) + d2 * self.k(i2, k) + db;
        }
        self.alphas[i1] = a1;
        self.alphas[i2] = a2;
        self.bias = new_bias;
        true
    }

    /// Clamps a dual variable into the box and snaps values that are within
    /// rounding distance of a bound onto the bound exactly, so bound/free
    /// status is decidable by exact comparison.
    fn snap_to_bounds(&self, a: f64) -> f64 {
        if a < self.snap {
            0.0
        } else if a > self.cost - self.snap {
            self.cost
        } else {
            a
        }
    }

    /// Decision values recomputed from scratch (no error cache, no bias).
    fn raw_decision_values(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for j in 0..self.n {
            let a = self.alphas[j];
            if a == 0.0 {
                continue;
            }
            let coef = a * self.labels[j];
            for (i, gi) in g.iter_mut().enumerate() {
                *gi += coef * self.k(j, i);
            }
        }
        g
    }

    /// Replaces the running bias estimate with the canonical one: the mean of
    /// `y_i - g(x_i)` over free support vectors, or the midpoint of the
    /// feasible bias interval when no example is free.
    fn canonical_bias(&self, raw: &[f64]) -> f64 {
        let mut free_sum = 0.0;
        let mut free_count = 0usize;
        for i in 0..self.n {
            if self.alphas[i] > 0.0 && self.alphas[i] < self.cost {
                free_sum += self.labels[i] - raw[i];
                free_count += 1;
            }
        }
        if free_count > 0 {
            return free_sum / free_count as f64;
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..self.n {
            let target = self.labels[i] - raw[i];
            // alpha = 0 wants margin >= 1, alpha = C wants margin <= 1.
            let wants_at_least = (self.alphas[i] == 0.0) == (self.labels[i] > 0.0);
            if wants_at_least {
                lo = lo.max(target);
            } else {
                hi = hi.min(target);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }

    fn max_violation(&self, raw: &[f64], bias: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let margin = self.labels[i] * (raw[i] + bias);
            let v = if self.alphas[i] == 0.0 {
                1.0 - margin
            } else if self.alphas[i] == self.cost {
                margin - 1.0
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    fn convergence_error(&self) -> Error {
        let raw = self.raw_decision_values();
        let bias = self.canonical_bias(&raw);
        Error::Convergence(ConvergenceDiagnostics {
            iterations: self.examinations,
            budget: self.budget,
            max_violation: self.max_violation(&raw, bias),
            n_samples: self.n,
            cost: self.cost,
        })
    }

    /// Canonicalizes the bias, verifies the KKT conditions against the
    /// caller's tolerance, and hands back the solution.
    fn finish(self, tolerance: f64) -> Result<(Vec<f64>, f64, f64, usize)> {
        let raw = self.raw_decision_values();
        let bias = self.canonical_bias(&raw);
        let max_violation = self.max_violation(&raw, bias);
        if max_violation > tolerance {
            return Err(Error::Convergence(ConvergenceDiagnostics {
                iterations: self.examinations,
                budget: self.budget,
                max_violation,
                n_samples: self.n,
                cost: self.cost,
            }));
        }
        Ok((self.alphas, bias, max_violation, self.examinations))
    }
}

/// One row of a cross-validation table: a (kernel, cost) cell and its
/// per-fold held-out accuracies.
#[derive(Debug, Clone)]
pub struct CvCell {
    pub kernel: KernelSpec,
    pub cost: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Outcome of a grid search: the winning cell plus the full table.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub kernel: KernelSpec,
    pub cost: f64,
    pub mean_accuracy: f64,
    pub table: Vec<CvCell>,
}

/// Selects a (kernel, cost) pair by stratified k-fold cross-validation.
///
/// Folds are formed per class with a seeded shuffle and round-robin
/// assignment, so every fold sees both labels. Ties on mean accuracy prefer
/// the smaller cost, then the earlier grid position (kernels outermost).
pub fn cross_validate(
    problem: &BinaryProblem,
    kernels: &[KernelSpec],
    costs: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvOutcome> {
    if kernels.is_empty() || costs.is_empty() {
        return Err(Error::input("cross-validation needs at least one kernel and one cost"));
    }
    for &c in costs {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::input(format!("cost grid entries must be positive, got {c}")));
        }
    }
    let keys: Vec<i8> = problem.labels().iter().map(|&y| if y > 0.0 { 1 } else { -1 }).collect();
    let fold_sets = stratified_folds(&keys, folds, derive_seed(seed, 0x666f6c64))?;

    let mut table = Vec::with_capacity(kernels.len() * costs.len());
    let mut best: Option<usize> = None;
    for (ki, kernel) in kernels.iter().enumerate() {
        let kernel = kernel.resolve(problem.dim())?;
        for (ci, &cost) in costs.iter().enumerate() {
            let mut fold_accuracies = Vec::with_capacity(folds);
            for (fi, test_idx) in fold_sets.iter().enumerate() {
                let in_test = |i: usize| test_idx.binary_search(&i).is_ok();
                let mut train_samples = Vec::new();
                let mut train_labels = Vec::new();
                for i in 0..problem.len() {
                    if !in_test(i) {
                        train_samples.push(problem.samples()[i].clone());
                        train_labels.push(problem.labels()[i]);
                    }
                }
                let sub = BinaryProblem::new(train_samples, train_labels, cost)?;
                let machine_seed =
                    derive_seed(seed, ((ki as u64) << 32) ^ ((ci as u64) << 16) ^ fi as u64);
                let model = train(&sub, &kernel, DEFAULT_TOLERANCE, DEFAULT_MAX_PASSES, machine_seed)?;
                let mut correct = 0usize;
                for &i in test_idx {
                    if model.predict(&problem.samples()[i])? == problem.labels()[i] {
                        correct += 1;
                    }
                }
                fold_accuracies.push(correct as f64 / test_idx.len() as f64);
            }
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds as f64;
            table.push(CvCell { kernel: kernel.clone(), cost, fold_accuracies, mean_accuracy });
            let idx = table.len() - 1;
            let better = match best {
                None => true,
                Some(b) => {
                    let cur = &table[b];
                    mean_accuracy > cur.mean_accuracy
                        || (mean_accuracy == cur.mean_accuracy && cost < cur.cost)
                }
            };
            if better {
                best = Some(idx);
            }
        }
    }
    let b = &table[best.expect("grid is non-empty")];
    Ok(CvOutcome {
        kernel: b.kernel.clone(),
        cost: b.cost,
        mean_accuracy: b.mean_accuracy,
        table,
    })
}

/// Splits indices into `folds` disjoint test sets, stratified by `keys`.
///
/// Each key group is shuffled with a seeded RNG and dealt round-robin, so
/// class proportions are preserved up to rounding. Every group must have at
/// least `folds` members. The returned index lists are sorted.
pub(crate) fn stratified_folds<K: Ord + Copy + std::fmt::Display>(
    keys: &[K],
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::input(format!("need at least 2 folds, got {folds}")));
    }
    let mut groups: std::collections::BTreeMap<K, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, &k) in keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets = vec![Vec::new(); folds];
    for (key, mut idx) in groups {
        if idx.len() < folds {
            return Err(Error::input(format!(
                "class {key} has only {} samples but {folds} folds were requested",
                idx.len()
            )));
        }
        // Fisher-Yates with explicit index draws keeps the RNG stream layout
        // independent of the rand crate's shuffle implementation details.
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        for (pos, i) in idx.into_iter().enumerate() {
            sets[pos % folds].push(i);
        }
    }
    for s in &mut sets {
        s.sort_unstable();
    }
    Ok(sets)
}
