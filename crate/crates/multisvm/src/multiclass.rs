//! Multiclass decomposition over binary machines: one-against-one with
//! majority or weighted voting, and one-against-all with unclassified and
//! mixed-pixel semantics.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernels::{FeatureVector, KernelSpec};
use crate::seed::derive_seed;
use crate::svm::{train, BinaryProblem, BinarySvmModel, DEFAULT_MAX_PASSES, DEFAULT_TOLERANCE};

/// Label-map code for a pixel no rule could assign.
pub const UNCLASSIFIED: u8 = 0;
/// Label-map code for a pixel claimed by two or more one-against-all machines.
pub const MIXED: u8 = 255;

/// One land-cover class: a code in `1..=254` plus a display name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub code: u8,
    pub name: String,
}

/// Ordered list of classes; order defines machine enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCatalog {
    classes: Vec<ClassEntry>,
}

impl ClassCatalog {
    /// Validates the catalog: at least two classes, unique codes outside the
    /// reserved sentinels 0 and 255, nonempty unique names.
    pub fn new(classes: Vec<ClassEntry>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::input(format!(
                "a catalog needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        let mut codes = std::collections::BTreeSet::new();
        let mut names = std::collections::BTreeSet::new();
        for c in &classes {
            if c.code == UNCLASSIFIED || c.code == MIXED {
                return Err(Error::input(format!(
                    "class code {} is reserved (0 = unclassified, 255 = mixed)",
                    c.code
                )));
            }
            if !codes.insert(c.code) {
                return Err(Error::input(format!("duplicate class code {}", c.code)));
            }
            if c.name.is_empty() || c.name.chars().any(|ch| ch.is_whitespace()) {
                return Err(Error::input(format!(
                    "class name {:?} must be nonempty and whitespace-free",
                    c.name
                )));
            }
            if !names.insert(c.name.clone()) {
                return Err(Error::input(format!("duplicate class name {:?}", c.name)));
            }
        }
        Ok(Self { classes })
    }

    /// Convenience constructor from `(code, name)` pairs.
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (u8, S)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(code, name)| ClassEntry { code, name: name.into() })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    pub fn index_of(&self, code: u8) -> Option<usize> {
        self.classes.iter().position(|c| c.code == code)
    }

    pub fn contains(&self, code: u8) -> bool {
        self.index_of(code).is_some()
    }

    pub fn name_of(&self, code: u8) -> Option<&str> {
        self.index_of(code).map(|i| self.classes[i].name.as_str())
    }

    /// All unordered class-index pairs `(i, j)` with `i < j`, lexicographic.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push((i, j));
            }
        }
        out
    }
}

/// Which decomposition produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    OneAgainstOne,
    OneAgainstAll,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::OneAgainstOne => "1a1",
            Strategy::OneAgainstAll => "1aa",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1a1" => Ok(Strategy::OneAgainstOne),
            "1aa" => Ok(Strategy::OneAgainstAll),
            other => Err(Error::input(format!(
                "unknown strategy {other:?} (expected \"1a1\" or \"1aa\")"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Vote combination rule for one-against-one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Voting {
    /// Each pair machine contributes one vote to its winner.
    Majority,
    /// Each pair machine contributes |decision value| to its winner's score.
    Weighted,
}

impl Voting {
    pub fn name(self) -> &'static str {
        match self {
            Voting::Majority => "majority",
            Voting::Weighted => "weighted",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(Voting::Majority),
            "weighted" => Ok(Voting::Weighted),
            other => Err(Error::input(format!(
                "unknown voting mode {other:?} (expected \"majority\" or \"weighted\")"
            ))),
        }
    }
}

impl fmt::Display for Voting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Prediction outcome: a concrete class or one of the two sentinels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictedLabel {
    Class(u8),
    Unclassified,
    Mixed,
}

impl PredictedLabel {
    /// The 8-bit code stored in label maps.
    pub fn code(self) -> u8 {
        match self {
            PredictedLabel::Class(c) => c,
            PredictedLabel::Unclassified => UNCLASSIFIED,
            PredictedLabel::Mixed => MIXED,
        }
    }

    pub fn from_code(code: u8) -> Self {
        match code {
            UNCLASSIFIED => PredictedLabel::Unclassified,
            MIXED => PredictedLabel::Mixed,
            c => PredictedLabel::Class(c),
        }
    }
}

/// Feature vectors paired with class codes; the common training/test shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<FeatureVector>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(features: Vec<FeatureVector>, labels: Vec<u8>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::input("dataset is empty"));
        }
        if features.len() != labels.len() {
            return Err(Error::input(format!(
                "feature/label count mismatch: {} vs {}",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::input("feature vectors must have at least one entry"));
        }
        for (i, f) in features.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::Dimension { expected: dim, actual: f.len() });
            }
            if let Some(v) = f.iter().find(|v| !v.is_finite()) {
                return Err(Error::input(format!("feature vector {i} contains non-finite value {v}")));
            }
        }
        for (i, &l) in labels.iter().enumerate() {
            if l == UNCLASSIFIED || l == MIXED {
                return Err(Error::input(format!(
                    "label {i} uses reserved code {l} (0 and 255 are sentinels)"
                )));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Sample count per class code, ascending by code.
    pub fn class_counts(&self) -> BTreeMap<u8, usize> {
        let mut out = BTreeMap::new();
        for &l in &self.labels {
            *out.entry(l).or_insert(0) += 1;
        }
        out
    }
}

/// A binary machine plus the classes it separates. `negative` is `None` for
/// one-against-all machines (positive class versus everything else).
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedMachine {
    pub positive: u8,
    pub negative: Option<u8>,
    pub svm: BinarySvmModel,
}

/// A full multiclass classifier: strategy, catalog, and tagged machines.
///
/// Prediction is driven by the machine tags, not machine positions, so any
/// permutation of `machines` yields identical predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub strategy: Strategy,
    pub voting: Voting,
    pub catalog: ClassCatalog,
    pub machines: Vec<TaggedMachine>,
}

impl MulticlassModel {
    /// Feature dimensionality expected by every machine.
    pub fn dim(&self) -> usize {
        self.machines[0].svm.dim()
    }

    /// Structural validation: the machine set must cover exactly the pairs
    /// (1A1) or classes (1AA) of the catalog, with uniform dimensionality.
    pub fn validate(&self) -> Result<()> {
        let n = self.catalog.len();
        let dim = self.dim();
        for m in &self.machines {
            if m.svm.dim() != dim {
                return Err(Error::Dimension { expected: dim, actual: m.svm.dim() });
            }
        }
        match self.strategy {
            Strategy::OneAgainstOne => {
                let expected = n * (n - 1) / 2;
                if self.machines.len() != expected {
                    return Err(Error::input(format!(
                        "one-against-one with {n} classes needs {expected} machines, got {}",
                        self.machines.len()
                    )));
                }
                let mut seen = std::collections::BTreeSet::new();
                for m in &self.machines {
                    let neg = m.negative.ok_or_else(|| {
                        Error::input("one-against-one machine is missing its negative class")
                    })?;
                    let i = self.catalog.index_of(m.positive).ok_or_else(|| {
                        Error::input(format!("machine references unknown class {}", m.positive))
                    })?;
                    let j = self.catalog.index_of(neg).ok_or_else(|| {
                        Error::input(format!("machine references unknown class {neg}"))
                    })?;
                    if i == j {
                        return Err(Error::input(format!(
                            "machine pits class {} against itself",
                            m.positive
                        )));
                    }
                    if !seen.insert((i.min(j), i.max(j))) {
                        return Err(Error::input(format!(
                            "duplicate machine for class pair {} / {neg}",
                            m.positive
                        )));
                    }
                }
            }
            Strategy::OneAgainstAll => {
                if self.machines.len() != n {
                    return Err(Error::input(format!(
                        "one-against-all with {n} classes needs {n} machines, got {}",
                        self.machines.len()
                    )));
                }
                let mut seen = std::collections::BTreeSet::new();
                for m in &self.machines {
                    if m.negative.is_some() {
                        return Err(Error::input(
                            "one-against-all machine must not name a negative class",
                        ));
                    }
                    if !self.catalog.contains(m.positive) {
                        return Err(Error::input(format!(
                            "machine references unknown class {}",
                            m.positive
                        )));
                    }
                    if !seen.insert(m.positive) {
                        return Err(Error::input(format!(
                            "duplicate machine for class {}",
                            m.positive
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Predicts the label for one raw feature vector.
    pub fn classify(&self, x: &[f64]) -> Result<PredictedLabel> {
        self.check_input(x)?;
        Ok(self.classify_unchecked(x))
    }

    /// Predicts the label and, for one-against-all, the set of class codes
    /// whose machines claimed the point (empty for one-against-one).
    pub fn classify_with_positives(&self, x: &[f64]) -> Result<(PredictedLabel, Vec<u8>)> {
        self.check_input(x)?;
        match self.strategy {
            Strategy::OneAgainstOne => Ok((self.classify_unchecked(x), Vec::new())),
            Strategy::OneAgainstAll => {
                let mut positives = Vec::new();
                for m in &self.machines {
                    if m.svm.decision_value_unchecked(x) > 0.0 {
                        positives.push(m.positive);
                    }
                }
                positives.sort_unstable();
                let label = match positives.as_slice() {
                    [] => PredictedLabel::Unclassified,
                    [one] => PredictedLabel::Class(*one),
                    _ => PredictedLabel::Mixed,
                };
                Ok((label, positives))
            }
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), actual: x.len() });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("query point contains a non-finite value {v}")));
        }
        Ok(())
    }

    /// Prediction without input validation; used by the raster hot loop.
    pub(crate) fn classify_unchecked(&self, x: &[f64]) -> PredictedLabel {
        match self.strategy {
            Strategy::OneAgainstOne => {
                let n = self.catalog.len();
                let mut scores = vec![0.0f64; n];
                for m in &self.machines {
                    let f = m.svm.decision_value_unchecked(x);
                    // Exactly zero goes to the positive class of the pair.
                    let winner = if f >= 0.0 {
                        m.positive
                    } else {
                        m.negative.expect("validated 1a1 machine has a negative class")
                    };
                    let idx = self.catalog.index_of(winner).expect("validated machine tag");
                    scores[idx] += match self.voting {
                        Voting::Majority => 1.0,
                        Voting::Weighted => f.abs(),
                    };
                }
                let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut winners = scores.iter().enumerate().filter(|(_, &s)| s == best);
                let first = winners.next().expect("catalog is nonempty");
                if winners.next().is_some() {
                    PredictedLabel::Unclassified
                } else {
                    PredictedLabel::Class(self.catalog.classes()[first.0].code)
                }
            }
            Strategy::OneAgainstAll => {
                let mut unique = None;
                let mut count = 0usize;
                for m in &self.machines {
                    if m.svm.decision_value_unchecked(x) > 0.0 {
                        count += 1;
                        if count > 1 {
                            return PredictedLabel::Mixed;
                        }
                        unique = Some(m.positive);
                    }
                }
                match unique {
                    None => PredictedLabel::Unclassified,
                    Some(code) => PredictedLabel::Class(code),
                }
            }
        }
    }

    /// Decision value of every machine at `x`, in stored machine order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .machines
            .iter()
            .map(|m| m.svm.decision_value_unchecked(x))
            .collect())
    }
}

/// One-against-one prediction; errors when the model is not a 1A1 model.
pub fn predict_1a1(model: &MulticlassModel, x: &[f64]) -> Result<PredictedLabel> {
    if model.strategy != Strategy::OneAgainstOne {
        return Err(Error::input("predict_1a1 called on a one-against-all model"));
    }
    model.classify(x)
}

/// One-against-all prediction; errors when the model is not a 1AA model.
pub fn predict_1aa(model: &MulticlassModel, x: &[f64]) -> Result<PredictedLabel> {
    if model.strategy != Strategy::OneAgainstAll {
        return Err(Error::input("predict_1aa called on a one-against-one model"));
    }
    model.classify(x)
}

/// Solver settings shared by every machine of one multiclass training run.
#[derive(Debug, Clone)]
pub struct TrainParams {
    pub tolerance: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, max_passes: DEFAULT_MAX_PASSES, seed: 0 }
    }
}

/// Trains one binary machine per class pair (1A1) or per class (1AA).
///
/// Machines come out in deterministic order: catalog order for 1AA,
/// lexicographic catalog-index pairs for 1A1 with the earlier class as the
/// positive side. Every catalog class must have at least two samples.
pub fn train_multiclass(
    dataset: &LabeledDataset,
    catalog: &ClassCatalog,
    strategy: Strategy,
    kernel: &KernelSpec,
    cost: f64,
    voting: Voting,
    params: &TrainParams,
) -> Result<MulticlassModel> {
    let counts = dataset.class_counts();
    for (&code, _) in counts.iter() {
        if !catalog.contains(code) {
            return Err(Error::input(format!(
                "dataset contains class code {code} that is not in the catalog"
            )));
        }
    }
    for entry in catalog.classes() {
        let have = counts.get(&entry.code).copied().unwrap_or(0);
        if have < 2 {
            return Err(Error::input(format!(
                "class {} (code {}) has {have} samples; at least 2 are required",
                entry.name, entry.code
            )));
        }
    }
    let kernel = kernel.resolve(dataset.dim())?;

    let mut machines = Vec::new();
    match strategy {
        Strategy::OneAgainstOne => {
            for (mi, (i, j)) in catalog.pairs().into_iter().enumerate() {
                let pos = catalog.classes()[i].code;
                let neg = catalog.classes()[j].code;
                let mut samples = Vec::new();
                let mut labels = Vec::new();
                for (f, &l) in dataset.features().iter().zip(dataset.labels()) {
                    if l == pos || l == neg {
                        samples.push(f.clone());
                        labels.push(if l == pos { 1.0 } else { -1.0 });
                    }
                }
                let problem = BinaryProblem::new(samples, labels, cost)?;
                let seed = derive_seed(params.seed, mi as u64);
                let svm = train(&problem, &kernel, params.tolerance, params.max_passes, seed)
                    .map_err(|e| {
                        e.with_context(format!(
                            "training pair machine {} vs {}",
                            catalog.name_of(pos).unwrap_or("?"),
                            catalog.name_of(neg).unwrap_or("?")
                        ))
                    })?;
                machines.push(TaggedMachine { positive: pos, negative: Some(neg), svm });
            }
        }
        Strategy::OneAgainstAll => {
            for (mi, entry) in catalog.classes().iter().enumerate() {
                let labels: Vec<f64> = dataset
                    .labels()
                    .iter()
                    .map(|&l| if l == entry.code { 1.0 } else { -1.0 })
                    .collect();
                let problem = BinaryProblem::new(dataset.features().to_vec(), labels, cost)?;
                let seed = derive_seed(params.seed, 0x1aa0_0000 ^ mi as u64);
                let svm = train(&problem, &kernel, params.tolerance, params.max_passes, seed)
                    .map_err(|e| {
                        e.with_context(format!(
                            "training machine {} vs rest",
                            entry.name
                        ))
                    })?;
                machines.push(TaggedMachine { positive: entry.code, negative: None, svm });
            }
        }
    }

    let model = MulticlassModel { strategy, voting, catalog: catalog.clone(), machines };
    model.validate()?;
    Ok(model)
}
