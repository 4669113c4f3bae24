//! Kernel functions and Gram-matrix computation.
//!
//! Four kernels are supported: linear, quadratic, polynomial and RBF
//! (Gaussian). Quadratic is the polynomial kernel pinned at degree 2; both
//! share the same evaluation path.

use crate::error::{Error, Result};

/// A feature vector: one value per raster band.
pub type FeatureVector = Vec<f64>;

/// Default polynomial degree when none is given.
pub const DEFAULT_DEGREE: u32 = 3;
/// Default polynomial/quadratic offset when none is given.
pub const DEFAULT_OFFSET: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Quadratic,
    Polynomial,
    Rbf,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Quadratic => "quadratic",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Rbf => "rbf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "quadratic" => Ok(KernelKind::Quadratic),
            "polynomial" => Ok(KernelKind::Polynomial),
            "rbf" => Ok(KernelKind::Rbf),
            other => Err(Error::input(format!("unknown kernel kind `{other}`"))),
        }
    }
}

/// Which kernel to use and its parameters.
///
/// `degree` applies to polynomial only (quadratic is fixed at 2), `offset` to
/// quadratic/polynomial, `gamma` to RBF. An RBF spec with `gamma: None` is
/// unresolved; [`KernelSpec::resolve`] fills in the scale-aware default
/// `1 / n_bands` before any evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub degree: u32,
    pub offset: f64,
    pub gamma: Option<f64>,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            degree: DEFAULT_DEGREE,
            offset: DEFAULT_OFFSET,
            gamma: None,
        }
    }

    pub fn quadratic() -> Self {
        KernelSpec {
            kind: KernelKind::Quadratic,
            degree: 2,
            offset: DEFAULT_OFFSET,
            gamma: None,
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            degree,
            offset: DEFAULT_OFFSET,
            gamma: None,
        }
    }

    /// RBF with the default gamma, resolved against the data dimensionality
    /// at training time.
    pub fn rbf_default() -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            degree: DEFAULT_DEGREE,
            offset: DEFAULT_OFFSET,
            gamma: None,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            degree: DEFAULT_DEGREE,
            offset: DEFAULT_OFFSET,
            gamma: Some(gamma),
        }
    }

    /// The degree actually used in evaluation: 2 for quadratic, `degree`
    /// for polynomial, irrelevant otherwise.
    pub fn effective_degree(&self) -> u32 {
        match self.kind {
            KernelKind::Quadratic => 2,
            _ => self.degree,
        }
    }

    /// Fills the RBF gamma default (`1 / dim`) if unset. Other kinds are
    /// returned unchanged.
    pub fn resolve(&self, dim: usize) -> Result<Self> {
        let mut resolved = self.clone();
        if resolved.kind == KernelKind::Rbf && resolved.gamma.is_none() {
            if dim == 0 {
                return Err(Error::input("cannot resolve rbf gamma for zero bands"));
            }
            resolved.gamma = Some(1.0 / dim as f64);
        }
        resolved.validate()?;
        Ok(resolved)
    }

    /// Kernel evaluation without validation; see the module-level
    /// [`eval_unchecked`].
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        eval_unchecked(self, x, z)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Linear => {}
            KernelKind::Quadratic | KernelKind::Polynomial => {
                if self.kind == KernelKind::Polynomial && self.degree < 1 {
                    return Err(Error::input("polynomial degree must be >= 1"));
                }
                if !self.offset.is_finite() || self.offset < 0.0 {
                    return Err(Error::input(format!(
                        "kernel offset must be finite and >= 0, got {}",
                        self.offset
                    )));
                }
            }
            KernelKind::Rbf => {
                if let Some(g) = self.gamma {
                    if !g.is_finite() || g <= 0.0 {
                        return Err(Error::input(format!(
                            "rbf gamma must be finite and > 0, got {g}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Human-readable form used in reports, e.g. `polynomial(degree=3, offset=1)`.
    pub fn describe(&self) -> String {
        match self.kind {
            KernelKind::Linear => "linear".to_string(),
            KernelKind::Quadratic => format!("quadratic(offset={})", self.offset),
            KernelKind::Polynomial => {
                format!("polynomial(degree={}, offset={})", self.degree, self.offset)
            }
            KernelKind::Rbf => match self.gamma {
                Some(g) => format!("rbf(gamma={g})"),
                None => "rbf(gamma=1/bands)".to_string(),
            },
        }
    }
}

fn check_pair(x: &[f64], z: &[f64]) -> Result<()> {
    if x.len() != z.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: z.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::input("feature vectors must be non-empty"));
    }
    if !x.iter().chain(z.iter()).all(|v| v.is_finite()) {
        return Err(Error::input("feature vectors must be finite"));
    }
    Ok(())
}

/// Kernel evaluation without validation. Callers must have checked
/// dimensionality, finiteness and spec resolution.
pub(crate) fn eval_unchecked(spec: &KernelSpec, x: &[f64], z: &[f64]) -> f64 {
    match spec.kind {
        KernelKind::Linear => dot(x, z),
        KernelKind::Quadratic | KernelKind::Polynomial => {
            (dot(x, z) + spec.offset).powi(spec.effective_degree() as i32)
        }
        KernelKind::Rbf => {
            let gamma = spec.gamma.expect("rbf gamma resolved");
            (-gamma * squared_distance(x, z)).exp()
        }
    }
}

/// Evaluates the kernel on a pair of feature vectors.
///
/// Symmetric in `x` and `z`; the RBF result lies in (0, 1].
pub fn evaluate(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    spec.validate()?;
    if spec.kind == KernelKind::Rbf && spec.gamma.is_none() {
        return Err(Error::input(
            "rbf gamma is unresolved; call KernelSpec::resolve first",
        ));
    }
    check_pair(x, z)?;
    let v = eval_unchecked(spec, x, z);
    if !v.is_finite() {
        return Err(Error::input(format!(
            "kernel value overflowed for {}",
            spec.describe()
        )));
    }
    Ok(v)
}

/// Computes the full Gram matrix `G[i][j] = K(xs[i], xs[j])`.
///
/// The result is exactly symmetric: the upper triangle is computed and
/// mirrored.
pub fn gram_matrix(spec: &KernelSpec, xs: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
    if xs.is_empty() {
        return Err(Error::input("gram matrix of an empty sample list"));
    }
    let dim = xs[0].len();
    for x in xs {
        check_pair(&xs[0], x)?;
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: x.len(),
            });
        }
    }
    spec.validate()?;
    if spec.kind == KernelKind::Rbf && spec.gamma.is_none() {
        return Err(Error::input(
            "rbf gamma is unresolved; call KernelSpec::resolve first",
        ));
    }
    let n = xs.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = eval_unchecked(spec, &xs[i], &xs[j]);
            if !v.is_finite() {
                return Err(Error::input(format!(
                    "kernel value overflowed at ({i}, {j}) for {}",
                    spec.describe()
                )));
            }
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

pub(crate) fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub(crate) fn squared_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter()
        .zip(z)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_dot_product() {
        let k = evaluate(&KernelSpec::linear(), &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(k, 11.0);
    }

    #[test]
    fn rbf_identity_is_one() {
        let x = vec![0.3, -1.7, 2.2];
        for gamma in [0.1, 1.0, 7.5] {
            let k = evaluate(&KernelSpec::rbf(gamma), &x, &x).unwrap();
            assert_eq!(k, 1.0);
        }
    }

    #[test]
    fn polynomial_orthogonal_pair() {
        let k = evaluate(&KernelSpec::polynomial(2), &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(k, 1.0);
    }

    #[test]
    fn quadratic_matches_polynomial_degree_two() {
        let x = vec![0.5, -1.0, 2.0];
        let z = vec![1.5, 0.25, -0.75];
        let q = evaluate(&KernelSpec::quadratic(), &x, &z).unwrap();
        let p = evaluate(&KernelSpec::polynomial(2), &x, &z).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn gram_linear_orthonormal() {
        let xs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = gram_matrix(&KernelSpec::linear(), &xs).unwrap();
        assert_eq!(g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn gram_rbf_unit_diagonal() {
        let xs = vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 0.0]];
        let g = gram_matrix(&KernelSpec::rbf(0.7), &xs).unwrap();
        for (i, row) in g.iter().enumerate() {
            assert_eq!(row[i], 1.0);
        }
    }

    #[test]
    fn gram_polynomial_hand_values() {
        // (x.z + 1)^2 on unit axes: diagonal (1+1)^2 = 4, off-diagonal (0+1)^2 = 1.
        let xs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = gram_matrix(&KernelSpec::polynomial(2), &xs).unwrap();
        assert_eq!(g, vec![vec![4.0, 1.0], vec![1.0, 4.0]]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = evaluate(&KernelSpec::linear(), &[1.0, 2.0], &[1.0]).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                actual: 1
            }
        ));
    }

    #[test]
    fn non_finite_input_rejected() {
        let err = evaluate(&KernelSpec::linear(), &[f64::NAN], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn unresolved_rbf_rejected() {
        let err = evaluate(&KernelSpec::rbf_default(), &[1.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        let resolved = KernelSpec::rbf_default().resolve(4).unwrap();
        assert_eq!(resolved.gamma, Some(0.25));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::polynomial(0).validate().is_err());
        assert!(KernelSpec::rbf(-1.0).validate().is_err());
        assert!(KernelSpec::rbf(0.0).validate().is_err());
        let mut k = KernelSpec::polynomial(3);
        k.offset = -0.5;
        assert!(k.validate().is_err());
    }

    fn any_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-50.0f64..50.0, len..=len)
    }

    fn any_spec() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            Just(KernelSpec::linear()),
            Just(KernelSpec::quadratic()),
            (1u32..5).prop_map(KernelSpec::polynomial),
            (0.01f64..3.0).prop_map(KernelSpec::rbf),
        ]
    }

    proptest! {
        #[test]
        fn evaluation_is_exactly_symmetric(
            spec in any_spec(),
            (x, z) in (1usize..6).prop_flat_map(|d| (any_vec(d), any_vec(d))),
        ) {
            let a = evaluate(&spec, &x, &z).unwrap();
            let b = evaluate(&spec, &z, &x).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn rbf_range(
            gamma in 0.01f64..1.0,
            // Kept small enough that exp(-gamma * d^2) cannot underflow to
            // zero in f64; strict positivity is a mathematical property, not
            // a subnormal-arithmetic one.
            (x, z) in (1usize..6).prop_flat_map(|d| {
                let small = proptest::collection::vec(-5.0f64..5.0, d..=d);
                (small.clone(), small)
            }),
        ) {
            let k = evaluate(&KernelSpec::rbf(gamma), &x, &z).unwrap();
            prop_assert!(k > 0.0 && k <= 1.0);
        }

        #[test]
        fn gram_is_symmetric(
            spec in any_spec(),
            xs in (1usize..5).prop_flat_map(|d| proptest::collection::vec(any_vec(d), 1..12)),
        ) {
            let g = gram_matrix(&spec, &xs).unwrap();
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    prop_assert_eq!(g[i][j], g[j][i]);
                }
            }
        }
    }
}
