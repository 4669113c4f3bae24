//! Synthetic multiband scenes with known ground truth.
//!
//! Every class gets a Gaussian band signature: the class means sit pairwise
//! `class_separation` apart (scaled orthogonal corners of band space) with
//! unit per-band noise. Classes occupy horizontal stripes; a pixel draws its
//! generating class from the stripe with probability `1 - overlap_fraction`
//! and uniformly from all classes otherwise, which interleaves the regions
//! and creates genuinely ambiguous pixels as the overlap grows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::multiclass::ClassCatalog;
use crate::raster::{PixelSample, RasterImage, TrainingSamples};

/// Parameters of one synthetic scene.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub rows: usize,
    pub cols: usize,
    pub n_classes: usize,
    pub bands: usize,
    /// Pairwise distance between class mean signatures.
    pub class_separation: f64,
    /// Probability that a pixel's generating class ignores its stripe.
    pub overlap_fraction: f64,
    pub seed: u64,
    /// Training pixels drawn per class.
    pub train_per_class: usize,
    /// Test pixels drawn per class, disjoint from the training pixels.
    pub test_per_class: usize,
}

impl Default for SynthConfig {
    /// The bundled overlap scenario: a 128x128 six-band scene with three
    /// moderately overlapping classes.
    fn default() -> Self {
        Self {
            rows: 128,
            cols: 128,
            n_classes: 3,
            bands: 6,
            class_separation: 2.0,
            overlap_fraction: 0.3,
            seed: 42,
            train_per_class: 60,
            test_per_class: 60,
        }
    }
}

/// A generated scene: the raster, disjoint train/test pixel samples, and the
/// catalog naming the classes (codes 1..=n, names `class1`..`classn`).
#[derive(Debug, Clone)]
pub struct SynthScene {
    pub image: RasterImage,
    pub train: TrainingSamples,
    pub test: TrainingSamples,
    pub catalog: ClassCatalog,
}

/// Generates a synthetic scene; fully reproducible from the seed.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthScene> {
    let SynthConfig {
        rows,
        cols,
        n_classes,
        bands,
        class_separation,
        overlap_fraction,
        seed,
        train_per_class,
        test_per_class,
    } = *config;

    if rows == 0 || cols == 0 {
        return Err(Error::input(format!("scene dimensions must be positive, got {rows}x{cols}")));
    }
    if n_classes < 2 {
        return Err(Error::input(format!("need at least 2 classes, got {n_classes}")));
    }
    if n_classes > 254 {
        return Err(Error::input(format!("at most 254 classes fit the label space, got {n_classes}")));
    }
    if bands == 0 {
        return Err(Error::input("need at least one band"));
    }
    if n_classes > bands {
        return Err(Error::input(format!(
            "class signatures are orthogonal corners of band space, so n_classes ({n_classes}) \
             must not exceed the band count ({bands})"
        )));
    }
    if !(class_separation.is_finite() && class_separation >= 0.0) {
        return Err(Error::input(format!(
            "class separation must be finite and >= 0, got {class_separation}"
        )));
    }
    if !(0.0..=1.0).contains(&overlap_fraction) {
        return Err(Error::input(format!(
            "overlap fraction must be in [0, 1], got {overlap_fraction}"
        )));
    }
    if train_per_class == 0 || test_per_class == 0 {
        return Err(Error::input("train and test sample counts must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Class k's signature is (separation / sqrt(2)) * e_k, making all pairs of
    // means exactly `class_separation` apart.
    let scale = class_separation / std::f64::consts::SQRT_2;

    let stripe = rows.div_ceil(n_classes);
    let mut data = vec![0.0f32; rows * cols * bands];
    let mut generating = vec![0usize; rows * cols];
    for r in 0..rows {
        let region = (r / stripe).min(n_classes - 1);
        for c in 0..cols {
            let class = if rng.gen::<f64>() < overlap_fraction {
                rng.gen_range(0..n_classes)
            } else {
                region
            };
            generating[r * cols + c] = class;
            for b in 0..bands {
                let mean = if b == class { scale } else { 0.0 };
                let noise: f64 = StandardNormal.sample(&mut rng);
                data[b * rows * cols + r * cols + c] = (mean + noise) as f32;
            }
        }
    }
    let band_names: Vec<String> = (1..=bands).map(|b| format!("b{b}")).collect();
    let image = RasterImage::new(rows, cols, bands, data, band_names, None)?;

    // Disjoint train/test pixel lists per class, drawn from a per-class
    // shuffle of all pixels that class generated.
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (idx, &class) in generating.iter().enumerate() {
        by_class[class].push(idx);
    }
    let mut train = Vec::with_capacity(n_classes * train_per_class);
    let mut test = Vec::with_capacity(n_classes * test_per_class);
    for (class, pixels) in by_class.iter_mut().enumerate() {
        let need = train_per_class + test_per_class;
        if pixels.len() < need {
            return Err(Error::input(format!(
                "class {} generated only {} pixels but {need} samples were requested; \
                 enlarge the scene or reduce the sample counts",
                class + 1,
                pixels.len()
            )));
        }
        for i in (1..pixels.len()).rev() {
            let j = rng.gen_range(0..=i);
            pixels.swap(i, j);
        }
        let code = (class + 1) as u8;
        for &idx in &pixels[..train_per_class] {
            train.push(PixelSample { row: idx / cols, col: idx % cols, class: code });
        }
        for &idx in &pixels[train_per_class..need] {
            test.push(PixelSample { row: idx / cols, col: idx % cols, class: code });
        }
    }

    let catalog =
        ClassCatalog::from_pairs((1..=n_classes as u8).map(|c| (c, format!("class{c}"))))?;

    Ok(SynthScene {
        image,
        train: TrainingSamples::Pixels(train),
        test: TrainingSamples::Pixels(test),
        catalog,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SynthConfig {
        SynthConfig {
            rows: 24,
            cols: 24,
            n_classes: 3,
            bands: 4,
            class_separation: 3.0,
            overlap_fraction: 0.2,
            seed: 7,
            train_per_class: 10,
            test_per_class: 10,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic(&small_config()).unwrap();
        let b = generate_synthetic(&small_config()).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);

        let different = generate_synthetic(&SynthConfig { seed: 8, ..small_config() }).unwrap();
        assert_ne!(a.image, different.image);
    }

    #[test]
    fn shapes_and_catalog_match_the_config() {
        let scene = generate_synthetic(&small_config()).unwrap();
        assert_eq!(scene.image.rows(), 24);
        assert_eq!(scene.image.cols(), 24);
        assert_eq!(scene.image.bands(), 4);
        assert_eq!(scene.catalog.len(), 3);
        assert_eq!(scene.train.len(), 30);
        assert_eq!(scene.test.len(), 30);
    }

    #[test]
    fn train_and_test_pixels_are_disjoint() {
        let scene = generate_synthetic(&small_config()).unwrap();
        let (train, test) = match (&scene.train, &scene.test) {
            (TrainingSamples::Pixels(a), TrainingSamples::Pixels(b)) => (a, b),
            _ => panic!("generator emits pixel samples"),
        };
        let train_set: std::collections::BTreeSet<(usize, usize)> =
            train.iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(train_set.len(), train.len(), "duplicate training pixels");
        for p in test {
            assert!(
                !train_set.contains(&(p.row, p.col)),
                "test pixel ({}, {}) is also a training pixel",
                p.row,
                p.col
            );
        }
    }

    #[test]
    fn zero_separation_is_allowed() {
        let scene = generate_synthetic(&SynthConfig {
            class_separation: 0.0,
            ..small_config()
        })
        .unwrap();
        assert_eq!(scene.image.bands(), 4);
    }

    #[test]
    fn parameter_domain_is_validated() {
        assert!(generate_synthetic(&SynthConfig { n_classes: 1, ..small_config() }).is_err());
        assert!(generate_synthetic(&SynthConfig { n_classes: 5, bands: 4, ..small_config() }).is_err());
        assert!(generate_synthetic(&SynthConfig { overlap_fraction: 1.5, ..small_config() }).is_err());
        assert!(generate_synthetic(&SynthConfig { class_separation: -1.0, ..small_config() }).is_err());
        assert!(generate_synthetic(&SynthConfig { rows: 0, ..small_config() }).is_err());
        // More samples than pixels.
        assert!(generate_synthetic(&SynthConfig {
            rows: 4,
            cols: 4,
            train_per_class: 10,
            test_per_class: 10,
            ..small_config()
        })
        .is_err());
    }

    #[test]
    fn stripes_dominate_when_overlap_is_zero() {
        let scene = generate_synthetic(&SynthConfig {
            overlap_fraction: 0.0,
            ..small_config()
        })
        .unwrap();
        let (train, _) = match (&scene.train, &scene.test) {
            (TrainingSamples::Pixels(a), TrainingSamples::Pixels(b)) => (a, b),
            _ => unreachable!(),
        };
        // With zero overlap every class-1 sample must come from the top stripe.
        for p in train.iter().filter(|p| p.class == 1) {
            assert!(p.row < 8, "class 1 pixel outside its stripe: row {}", p.row);
        }
    }
}
