//! Reading and writing trained multiclass models.
//!
//! The format is a single UTF-8 text document, line-oriented, beginning with
//! `multisvm-model v1`. Floats are printed with 17 significant digits so a
//! write-read-write cycle is byte-identical. Kernel parameter lines may be
//! omitted when they equal the defaults (polynomial degree 3, offset 1, RBF
//! gamma 1/dim).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::atomic_write;
use crate::kernels::{KernelKind, KernelSpec, DEFAULT_DEGREE, DEFAULT_OFFSET};
use crate::multiclass::{ClassCatalog, ClassEntry, MulticlassModel, Strategy, TaggedMachine, Voting};
use crate::svm::{BinarySvmModel, Standardizer};

const MODEL_MAGIC: &str = "multisvm-model v1";

/// Canonical float formatting: 17 significant digits, scientific notation.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_floats(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    out.push(':');
    for v in values {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

/// Renders a model to its canonical text form.
pub fn serialize_model(model: &MulticlassModel) -> Result<String> {
    model.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "strategy: {}", model.strategy);
    let _ = writeln!(out, "voting: {}", model.voting);
    let _ = writeln!(out, "classes: {}", model.catalog.len());
    for c in model.catalog.classes() {
        let _ = writeln!(out, "class: {} {}", c.code, c.name);
    }
    let _ = writeln!(out, "machines: {}", model.machines.len());
    for (i, m) in model.machines.iter().enumerate() {
        let _ = writeln!(out, "machine: {i}");
        let _ = writeln!(out, "positive: {}", m.positive);
        match m.negative {
            Some(neg) => {
                let _ = writeln!(out, "negative: {neg}");
            }
            None => {
                let _ = writeln!(out, "negative: rest");
            }
        }
        let svm = &m.svm;
        let _ = writeln!(out, "kernel: {}", svm.kernel.kind.name());
        match svm.kernel.kind {
            KernelKind::Linear => {}
            KernelKind::Quadratic => {
                push_floats(&mut out, "offset", &[svm.kernel.offset]);
            }
            KernelKind::Polynomial => {
                let _ = writeln!(out, "degree: {}", svm.kernel.degree);
                push_floats(&mut out, "offset", &[svm.kernel.offset]);
            }
            KernelKind::Rbf => {
                let gamma = svm.kernel.gamma.ok_or_else(|| {
                    Error::input("cannot serialize an rbf model with unresolved gamma")
                })?;
                push_floats(&mut out, "gamma", &[gamma]);
            }
        }
        let _ = writeln!(out, "dim: {}", svm.dim());
        push_floats(&mut out, "means", &svm.standardizer.means);
        push_floats(&mut out, "stds", &svm.standardizer.stds);
        let _ = writeln!(out, "num_sv: {}", svm.support_vectors.len());
        for sv in &svm.support_vectors {
            push_floats(&mut out, "sv", sv);
        }
        push_floats(&mut out, "coefs", &svm.dual_coefs);
        push_floats(&mut out, "bias", &[svm.bias]);
    }
    Ok(out)
}

/// Writes a model file atomically.
pub fn write_model(model: &MulticlassModel, path: &Path) -> Result<()> {
    let text = serialize_model(model)?;
    atomic_write(path, text.as_bytes())
        .map_err(|e| Error::from(e).with_context(format!("writing {}", path.display())))
}

/// Reads a model file written by [`write_model`] (or assembled by hand).
pub fn read_model(path: &Path) -> Result<MulticlassModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).with_context(format!("reading {}", path.display())))?;
    parse_model(&text).map_err(|e| e.with_context(format!("parsing {}", path.display())))
}

/// Parses the canonical text form back into a model.
pub fn parse_model(text: &str) -> Result<MulticlassModel> {
    let mut r = Lines::new(text);
    r.expect_literal(MODEL_MAGIC)?;
    let strategy = Strategy::parse(r.expect_value("strategy")?.as_str())
        .map_err(|e| r.contextualize(e))?;
    let voting =
        Voting::parse(r.expect_value("voting")?.as_str()).map_err(|e| r.contextualize(e))?;
    let n_classes: usize = r.expect_parsed("classes")?;
    let mut classes = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let v = r.expect_value("class")?;
        let (code, name) = v
            .split_once(' ')
            .ok_or_else(|| r.err("expected \"class: <code> <name>\""))?;
        let code: u8 = code
            .parse()
            .map_err(|_| r.err(format!("bad class code {code:?}")))?;
        classes.push(ClassEntry { code, name: name.to_string() });
    }
    let catalog = ClassCatalog::new(classes).map_err(|e| r.contextualize(e))?;

    let n_machines: usize = r.expect_parsed("machines")?;
    let mut machines = Vec::with_capacity(n_machines);
    for i in 0..n_machines {
        let idx: usize = r.expect_parsed("machine")?;
        if idx != i {
            return Err(r.err(format!("machine index {idx} out of order (expected {i})")));
        }
        let positive: u8 = r.expect_parsed("positive")?;
        let negative_raw = r.expect_value("negative")?;
        let negative = if negative_raw == "rest" {
            None
        } else {
            Some(
                negative_raw
                    .parse::<u8>()
                    .map_err(|_| r.err(format!("bad negative class {negative_raw:?}")))?,
            )
        };
        let kind = KernelKind::parse(r.expect_value("kernel")?.as_str())
            .map_err(|e| r.contextualize(e))?;
        let degree: u32 = match r.peek_key() {
            Some("degree") => r.expect_parsed("degree")?,
            _ => DEFAULT_DEGREE,
        };
        let offset: f64 = match r.peek_key() {
            Some("offset") => r.expect_float("offset")?,
            _ => DEFAULT_OFFSET,
        };
        let gamma: Option<f64> = match r.peek_key() {
            Some("gamma") => Some(r.expect_float("gamma")?),
            _ => None,
        };
        let dim: usize = r.expect_parsed("dim")?;
        if dim == 0 {
            return Err(r.err("dim must be positive"));
        }
        let kernel = match kind {
            KernelKind::Linear => KernelSpec::linear(),
            KernelKind::Quadratic => {
                let mut k = KernelSpec::quadratic();
                k.offset = offset;
                k
            }
            KernelKind::Polynomial => {
                let mut k = KernelSpec::polynomial(degree);
                k.offset = offset;
                k
            }
            KernelKind::Rbf => match gamma {
                Some(g) => KernelSpec::rbf(g),
                None => KernelSpec::rbf_default(),
            },
        };
        let kernel = kernel.resolve(dim).map_err(|e| r.contextualize(e))?;

        let means = r.expect_float_list("means", dim)?;
        let stds = r.expect_float_list("stds", dim)?;
        let num_sv: usize = r.expect_parsed("num_sv")?;
        if num_sv == 0 {
            return Err(r.err("a machine needs at least one support vector"));
        }
        let mut support_vectors = Vec::with_capacity(num_sv);
        for _ in 0..num_sv {
            support_vectors.push(r.expect_float_list("sv", dim)?);
        }
        let dual_coefs = r.expect_float_list("coefs", num_sv)?;
        let bias = r.expect_float("bias")?;
        machines.push(TaggedMachine {
            positive,
            negative,
            svm: BinarySvmModel {
                kernel,
                standardizer: Standardizer { means, stds },
                support_vectors,
                dual_coefs,
                bias,
            },
        });
    }
    r.expect_eof()?;

    let model = MulticlassModel { strategy, voting, catalog, machines };
    model.validate()?;
    Ok(model)
}

/// Sequential line reader with one-token lookahead and line numbers in every
/// error.
struct Lines<'t> {
    lines: std::str::Lines<'t>,
    peeked: Option<&'t str>,
    line_no: usize,
}

impl<'t> Lines<'t> {
    fn new(text: &'t str) -> Self {
        Self { lines: text.lines(), peeked: None, line_no: 0 }
    }

    fn next_line(&mut self) -> Option<&'t str> {
        if let Some(l) = self.peeked.take() {
            return Some(l);
        }
        let l = self.lines.next()?;
        self.line_no += 1;
        Some(l)
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Format { message: format!("model line {}: {msg}", self.line_no), offset: None }
    }

    fn contextualize(&self, e: Error) -> Error {
        e.with_context(format!("model line {}", self.line_no))
    }

    fn expect_literal(&mut self, expected: &str) -> Result<()> {
        match self.next_line() {
            Some(l) if l == expected => Ok(()),
            Some(l) => Err(self.err(format!("expected {expected:?}, got {l:?}"))),
            None => Err(self.err(format!("expected {expected:?}, got end of file"))),
        }
    }

    /// The key of the next line, without consuming it.
    fn peek_key(&mut self) -> Option<&'t str> {
        if self.peeked.is_none() {
            self.peeked = self.lines.next();
            if self.peeked.is_some() {
                self.line_no += 1;
            }
        }
        self.peeked.and_then(|l| l.split_once(':').map(|(k, _)| k))
    }

    fn expect_value(&mut self, key: &str) -> Result<String> {
        match self.next_line() {
            Some(l) => match l.split_once(": ") {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(self.err(format!("expected key {key:?}, got {l:?}"))),
            },
            None => Err(self.err(format!("expected key {key:?}, got end of file"))),
        }
    }

    fn expect_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.expect_value(key)?;
        v.parse()
            .map_err(|_| self.err(format!("bad value {v:?} for key {key:?}")))
    }

    fn expect_float(&mut self, key: &str) -> Result<f64> {
        let v: f64 = self.expect_parsed(key)?;
        if !v.is_finite() {
            return Err(self.err(format!("{key} must be finite, got {v}")));
        }
        Ok(v)
    }

    fn expect_float_list(&mut self, key: &str, expected_len: usize) -> Result<Vec<f64>> {
        let v = self.expect_value(key)?;
        let mut out = Vec::with_capacity(expected_len);
        for tok in v.split(' ') {
            let f: f64 = tok
                .parse()
                .map_err(|_| self.err(format!("bad float {tok:?} in {key} list")))?;
            if !f.is_finite() {
                return Err(self.err(format!("{key} values must be finite, got {f}")));
            }
            out.push(f);
        }
        if out.len() != expected_len {
            return Err(self.err(format!(
                "{key} list has {} values, expected {expected_len}",
                out.len()
            )));
        }
        Ok(out)
    }

    fn expect_eof(&mut self) -> Result<()> {
        while let Some(l) = self.next_line() {
            if !l.is_empty() {
                return Err(self.err(format!("unexpected trailing content {l:?}")));
            }
        }
        Ok(())
    }
}
