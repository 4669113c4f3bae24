//! Multiband raster and label-map I/O, training-sample CSV files, and
//! raster classification.
//!
//! Rasters live in a two-file format: a UTF-8 text header (one `key: value`
//! per line, terminated by a blank line) and a companion raw binary file with
//! little-endian scalars in band-sequential order (each band contiguous,
//! row-major within a band). Label maps reuse the same header with
//! `dtype: u8` and a single band.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fsutil::atomic_write;
use crate::kernels::FeatureVector;
use crate::multiclass::{LabeledDataset, MulticlassModel, MIXED, UNCLASSIFIED};

const RASTER_MAGIC: &str = "multisvm-raster v1";

/// A multiband image: `bands * rows * cols` 32-bit floats in BSQ layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    rows: usize,
    cols: usize,
    bands: usize,
    band_names: Vec<String>,
    data: Vec<f32>,
    nodata: Option<f32>,
}

impl RasterImage {
    /// Validates and wraps raster storage.
    ///
    /// `band_names` is either empty or one comma-free name per band. Every
    /// value must be finite unless it equals the `nodata` flag (a NaN flag
    /// marks all NaNs as nodata).
    pub fn new(
        rows: usize,
        cols: usize,
        bands: usize,
        data: Vec<f32>,
        band_names: Vec<String>,
        nodata: Option<f32>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || bands == 0 {
            return Err(Error::input(format!(
                "raster dimensions must be positive, got {rows}x{cols}x{bands}"
            )));
        }
        let expected = rows * cols * bands;
        if data.len() != expected {
            return Err(Error::input(format!(
                "raster data has {} values but {rows}x{cols}x{bands} = {expected} are required",
                data.len()
            )));
        }
        if !band_names.is_empty() {
            if band_names.len() != bands {
                return Err(Error::input(format!(
                    "got {} band names for {bands} bands",
                    band_names.len()
                )));
            }
            for name in &band_names {
                if name.is_empty() || name.contains(',') || name.chars().any(|c| c.is_whitespace())
                {
                    return Err(Error::input(format!(
                        "band name {name:?} must be nonempty, comma-free and whitespace-free"
                    )));
                }
            }
        }
        let image = Self { rows, cols, bands, band_names, data, nodata };
        for (idx, &v) in image.data.iter().enumerate() {
            if !v.is_finite() && !image.is_nodata_value(v) {
                return Err(Error::Format {
                    message: format!("non-finite raster value {v} without a matching nodata flag"),
                    offset: Some((idx * 4) as u64),
                });
            }
        }
        Ok(image)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn band_names(&self) -> &[String] {
        &self.band_names
    }

    pub fn nodata(&self) -> Option<f32> {
        self.nodata
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn is_nodata_value(&self, v: f32) -> bool {
        match self.nodata {
            None => false,
            Some(nd) => v == nd || (v.is_nan() && nd.is_nan()),
        }
    }

    /// Value of one band at one pixel.
    pub fn value(&self, band: usize, row: usize, col: usize) -> f32 {
        self.data[band * self.rows * self.cols + row * self.cols + col]
    }

    /// The feature vector of a pixel, or `None` when any band is nodata.
    pub fn pixel(&self, row: usize, col: usize) -> Option<FeatureVector> {
        let mut out = Vec::with_capacity(self.bands);
        for b in 0..self.bands {
            let v = self.value(b, row, col);
            if self.is_nodata_value(v) {
                return None;
            }
            out.push(v as f64);
        }
        Some(out)
    }
}

/// A classified image: one 8-bit code per pixel (0 = unclassified,
/// 255 = mixed, everything else a class code).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    rows: usize,
    cols: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(rows: usize, cols: usize, labels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input(format!(
                "label map dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if labels.len() != rows * cols {
            return Err(Error::input(format!(
                "label map has {} values but {rows}x{cols} = {} are required",
                labels.len(),
                rows * cols
            )));
        }
        Ok(Self { rows, cols, labels })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.cols + col]
    }

    /// Counts of the two sentinel codes: `(unclassified, mixed)`.
    pub fn count_special(&self) -> (usize, usize) {
        let mut unclassified = 0;
        let mut mixed = 0;
        for &l in &self.labels {
            if l == UNCLASSIFIED {
                unclassified += 1;
            } else if l == MIXED {
                mixed += 1;
            }
        }
        (unclassified, mixed)
    }

    /// Pixel count per label code, ascending by code.
    pub fn histogram(&self) -> std::collections::BTreeMap<u8, usize> {
        let mut out = std::collections::BTreeMap::new();
        for &l in &self.labels {
            *out.entry(l).or_insert(0) += 1;
        }
        out
    }
}

/// One reference pixel: a raster coordinate plus its class code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelSample {
    pub row: usize,
    pub col: usize,
    pub class: u8,
}

/// Training/reference samples: raster coordinates to be looked up in an
/// image, or feature vectors used directly.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingSamples {
    Pixels(Vec<PixelSample>),
    Features(LabeledDataset),
}

impl TrainingSamples {
    pub fn len(&self) -> usize {
        match self {
            TrainingSamples::Pixels(p) => p.len(),
            TrainingSamples::Features(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// ---------------------------------------------------------------------------
// Header parsing shared by rasters and label maps.
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Header {
    rows: usize,
    cols: usize,
    bands: usize,
    dtype: String,
    nodata: Option<f32>,
    band_names: Vec<String>,
    data_file: String,
}

fn format_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format { message: format!("header line {line}: {msg}"), offset: None }
}

fn parse_header(path: &Path) -> Result<Header> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).with_context(format!("reading {}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, RASTER_MAGIC)) => {}
        Some((_, other)) => {
            return Err(Error::Format {
                message: format!("unsupported header version {other:?}, expected {RASTER_MAGIC:?}"),
                offset: Some(0),
            });
        }
        None => {
            return Err(Error::Format { message: "empty header file".into(), offset: Some(0) });
        }
    }

    let mut fields: std::collections::BTreeMap<&str, (usize, &str)> = Default::default();
    for (i, line) in lines {
        if line.is_empty() {
            break;
        }
        let (key, value) = line.split_once(": ").ok_or_else(|| {
            format_err(i + 1, format!("expected \"key: value\", got {line:?}"))
        })?;
        if fields.insert(key, (i + 1, value)).is_some() {
            return Err(format_err(i + 1, format!("duplicate key {key:?}")));
        }
    }

    const KNOWN: [&str; 9] =
        ["rows", "cols", "bands", "dtype", "byteorder", "interleave", "nodata", "band_names", "data"];
    for (&key, &(line, _)) in &fields {
        if !KNOWN.contains(&key) {
            return Err(format_err(line, format!("unknown key {key:?}")));
        }
    }

    fn take<'t>(
        fields: &mut std::collections::BTreeMap<&'t str, (usize, &'t str)>,
        key: &str,
    ) -> Result<(usize, &'t str)> {
        fields.remove(key).ok_or_else(|| Error::Format {
            message: format!("missing required header key {key:?}"),
            offset: None,
        })
    }

    let parse_count = |(line, v): (usize, &str)| -> Result<usize> {
        let n: usize =
            v.parse().map_err(|_| format_err(line, format!("expected a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(format_err(line, "dimension must be positive"));
        }
        Ok(n)
    };

    let rows = parse_count(take(&mut fields, "rows")?)?;
    let cols = parse_count(take(&mut fields, "cols")?)?;
    let bands = parse_count(take(&mut fields, "bands")?)?;
    let (dline, dtype) = take(&mut fields, "dtype")?;
    if dtype != "f32" && dtype != "u8" {
        return Err(format_err(dline, format!("unsupported dtype {dtype:?} (expected f32 or u8)")));
    }
    let (bline, byteorder) = take(&mut fields, "byteorder")?;
    if byteorder != "little-endian" {
        return Err(format_err(bline, format!("unsupported byteorder {byteorder:?}")));
    }
    let (iline, interleave) = take(&mut fields, "interleave")?;
    if interleave != "bsq" {
        return Err(format_err(iline, format!("unsupported interleave {interleave:?}")));
    }
    let nodata = match fields.remove("nodata") {
        None => None,
        Some((line, v)) => Some(
            v.parse::<f32>()
                .map_err(|_| format_err(line, format!("expected a float nodata value, got {v:?}")))?,
        ),
    };
    let band_names = match fields.remove("band_names") {
        None => Vec::new(),
        Some((_, v)) => v.split(',').map(str::to_string).collect(),
    };
    let (_, data_file) = take(&mut fields, "data")?;

    Ok(Header {
        rows,
        cols,
        bands,
        dtype: dtype.to_string(),
        nodata,
        band_names,
        data_file: data_file.to_string(),
    })
}

fn read_payload(header_path: &Path, header: &Header, value_size: usize) -> Result<Vec<u8>> {
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
    let bin_path = dir.join(&header.data_file);
    let bytes = std::fs::read(&bin_path)
        .map_err(|e| Error::from(e).with_context(format!("reading {}", bin_path.display())))?;
    let expected = header.rows * header.cols * header.bands * value_size;
    if bytes.len() != expected {
        return Err(Error::Format {
            message: format!(
                "{} has {} bytes but {}x{}x{} {} values need {expected}",
                bin_path.display(),
                bytes.len(),
                header.rows,
                header.cols,
                header.bands,
                header.dtype,
            ),
            offset: Some(bytes.len().min(expected) as u64),
        });
    }
    Ok(bytes)
}

/// The header/payload path pair used by the writers: the payload sits next to
/// the header, same stem, `.bin` extension.
fn payload_path(header_path: &Path) -> Result<PathBuf> {
    if header_path.extension().is_some_and(|e| e == "bin") {
        return Err(Error::input(format!(
            "header path {} must not use the .bin extension (it is reserved for the payload)",
            header_path.display()
        )));
    }
    Ok(header_path.with_extension("bin"))
}

fn header_text(
    rows: usize,
    cols: usize,
    bands: usize,
    dtype: &str,
    nodata: Option<f32>,
    band_names: &[String],
    data_file: &str,
) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "{RASTER_MAGIC}");
    let _ = writeln!(h, "rows: {rows}");
    let _ = writeln!(h, "cols: {cols}");
    let _ = writeln!(h, "bands: {bands}");
    let _ = writeln!(h, "dtype: {dtype}");
    let _ = writeln!(h, "byteorder: little-endian");
    let _ = writeln!(h, "interleave: bsq");
    if let Some(nd) = nodata {
        let _ = writeln!(h, "nodata: {nd}");
    }
    if !band_names.is_empty() {
        let _ = writeln!(h, "band_names: {}", band_names.join(","));
    }
    let _ = writeln!(h, "data: {data_file}");
    h.push('\n');
    h
}

// ---------------------------------------------------------------------------
// Raster read/write.
// ---------------------------------------------------------------------------

/// Reads a multiband raster (`dtype: f32`) from its header file.
pub fn read_raster(header_path: &Path) -> Result<RasterImage> {
    let header = parse_header(header_path)?;
    if header.dtype != "f32" {
        return Err(Error::Format {
            message: format!("expected a f32 raster, found dtype {}", header.dtype),
            offset: None,
        });
    }
    let bytes = read_payload(header_path, &header, 4)?;
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    RasterImage::new(header.rows, header.cols, header.bands, data, header.band_names, header.nodata)
}

/// Writes a raster as `<path>` (header) plus `<stem>.bin` (payload), both
/// atomically. `header_path` must not itself end in `.bin`.
pub fn write_raster(image: &RasterImage, header_path: &Path) -> Result<()> {
    let bin = payload_path(header_path)?;
    let data_file = bin
        .file_name()
        .ok_or_else(|| Error::input(format!("invalid output path {}", header_path.display())))?
        .to_string_lossy()
        .into_owned();
    let header = header_text(
        image.rows,
        image.cols,
        image.bands,
        "f32",
        image.nodata,
        &image.band_names,
        &data_file,
    );
    let mut payload = Vec::with_capacity(image.data.len() * 4);
    for v in &image.data {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    atomic_write(&bin, &payload)
        .map_err(|e| Error::from(e).with_context(format!("writing {}", bin.display())))?;
    atomic_write(header_path, header.as_bytes())
        .map_err(|e| Error::from(e).with_context(format!("writing {}", header_path.display())))?;
    Ok(())
}

/// Reads a label map (`dtype: u8`, single band) from its header file.
pub fn read_labelmap(header_path: &Path) -> Result<LabelMap> {
    let header = parse_header(header_path)?;
    if header.dtype != "u8" {
        return Err(Error::Format {
            message: format!("expected a u8 label map, found dtype {}", header.dtype),
            offset: None,
        });
    }
    if header.bands != 1 {
        return Err(Error::Format {
            message: format!("label maps are single-band, found {} bands", header.bands),
            offset: None,
        });
    }
    let bytes = read_payload(header_path, &header, 1)?;
    LabelMap::new(header.rows, header.cols, bytes)
}

/// Writes a label map in the raster header format with `dtype: u8`.
pub fn write_labelmap(map: &LabelMap, header_path: &Path) -> Result<()> {
    let bin = payload_path(header_path)?;
    let data_file = bin
        .file_name()
        .ok_or_else(|| Error::input(format!("invalid output path {}", header_path.display())))?
        .to_string_lossy()
        .into_owned();
    let header = header_text(map.rows, map.cols, 1, "u8", None, &[], &data_file);
    atomic_write(&bin, &map.labels)
        .map_err(|e| Error::from(e).with_context(format!("writing {}", bin.display())))?;
    atomic_write(header_path, header.as_bytes())
        .map_err(|e| Error::from(e).with_context(format!("writing {}", header_path.display())))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Training-sample CSV.
// ---------------------------------------------------------------------------

fn csv_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format { message: format!("csv line {line}: {msg}"), offset: None }
}

fn parse_class(line_no: usize, field: &str) -> Result<u8> {
    let class: u8 = field
        .parse()
        .map_err(|_| csv_err(line_no, format!("expected a class code 1..=254, got {field:?}")))?;
    if class == UNCLASSIFIED || class == MIXED {
        return Err(csv_err(
            line_no,
            format!("class code {class} is reserved (0 = unclassified, 255 = mixed)"),
        ));
    }
    Ok(class)
}

/// Reads training/reference samples from CSV.
///
/// Two layouts are accepted, distinguished by the header line:
/// `row,col,class` for pixel coordinates, or `f1,...,fk,class` for direct
/// feature vectors. Comma separator, `.` decimal point, no quoting.
pub fn read_samples_csv(path: &Path) -> Result<TrainingSamples> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).with_context(format!("reading {}", path.display())))?;
    let mut lines = text.lines().map(str::trim_end).enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_err(1, "missing header line"))?;
    let cols: Vec<&str> = header.split(',').collect();

    if cols == ["row", "col", "class"] {
        let mut out = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(csv_err(i + 1, format!("expected 3 fields, got {}", fields.len())));
            }
            let row: usize = fields[0]
                .parse()
                .map_err(|_| csv_err(i + 1, format!("bad row index {:?}", fields[0])))?;
            let col: usize = fields[1]
                .parse()
                .map_err(|_| csv_err(i + 1, format!("bad column index {:?}", fields[1])))?;
            let class = parse_class(i + 1, fields[2])?;
            out.push(PixelSample { row, col, class });
        }
        return Ok(TrainingSamples::Pixels(out));
    }

    // Feature layout: f1..fk,class.
    let k = cols.len().saturating_sub(1);
    let feature_header_ok = k >= 1
        && cols[k] == "class"
        && cols[..k].iter().enumerate().all(|(i, c)| **c == format!("f{}", i + 1));
    if !feature_header_ok {
        return Err(csv_err(
            1,
            format!("unrecognized header {header:?} (expected \"row,col,class\" or \"f1,...,fk,class\")"),
        ));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 1 {
            return Err(csv_err(i + 1, format!("expected {} fields, got {}", k + 1, fields.len())));
        }
        let mut fv = Vec::with_capacity(k);
        for f in &fields[..k] {
            let v: f64 =
                f.parse().map_err(|_| csv_err(i + 1, format!("bad feature value {f:?}")))?;
            fv.push(v);
        }
        features.push(fv);
        labels.push(parse_class(i + 1, fields[k])?);
    }
    if features.is_empty() {
        return Err(csv_err(2, "feature csv has a header but no samples"));
    }
    Ok(TrainingSamples::Features(LabeledDataset::new(features, labels)?))
}

/// Writes samples in the layout matching their variant; inverse of
/// [`read_samples_csv`].
pub fn write_samples_csv(samples: &TrainingSamples, path: &Path) -> Result<()> {
    let mut text = String::new();
    match samples {
        TrainingSamples::Pixels(pixels) => {
            text.push_str("row,col,class\n");
            for p in pixels {
                let _ = writeln!(text, "{},{},{}", p.row, p.col, p.class);
            }
        }
        TrainingSamples::Features(ds) => {
            let k = ds.dim();
            let headers: Vec<String> = (1..=k).map(|i| format!("f{i}")).collect();
            let _ = writeln!(text, "{},class", headers.join(","));
            for (f, l) in ds.features().iter().zip(ds.labels()) {
                for v in f {
                    let _ = write!(text, "{v},");
                }
                let _ = writeln!(text, "{l}");
            }
        }
    }
    atomic_write(path, text.as_bytes())
        .map_err(|e| Error::from(e).with_context(format!("writing {}", path.display())))
}

// ---------------------------------------------------------------------------
// Sample extraction and classification.
// ---------------------------------------------------------------------------

/// Resolves samples against an image: pixel coordinates become the feature
/// vectors of their pixels (band order preserved, duplicates kept); direct
/// features pass through after a dimensionality check.
pub fn extract_samples(image: &RasterImage, samples: &TrainingSamples) -> Result<LabeledDataset> {
    match samples {
        TrainingSamples::Features(ds) => {
            if ds.dim() != image.bands() {
                return Err(Error::Dimension { expected: image.bands(), actual: ds.dim() });
            }
            Ok(ds.clone())
        }
        TrainingSamples::Pixels(pixels) => {
            if pixels.is_empty() {
                return Err(Error::input("sample list is empty"));
            }
            let mut features = Vec::with_capacity(pixels.len());
            let mut labels = Vec::with_capacity(pixels.len());
            for p in pixels {
                if p.row >= image.rows() || p.col >= image.cols() {
                    return Err(Error::input(format!(
                        "sample at ({}, {}) is outside the {}x{} raster",
                        p.row,
                        p.col,
                        image.rows(),
                        image.cols()
                    )));
                }
                let fv = image.pixel(p.row, p.col).ok_or_else(|| {
                    Error::input(format!(
                        "sample at ({}, {}) refers to a nodata pixel",
                        p.row, p.col
                    ))
                })?;
                features.push(fv);
                labels.push(p.class);
            }
            LabeledDataset::new(features, labels)
        }
    }
}

/// Classifies every pixel of `image` with `model`.
///
/// Nodata pixels map to [`UNCLASSIFIED`]. Rows are processed in parallel;
/// each output cell depends only on its own pixel, so the result is
/// byte-identical for any worker count.
pub fn classify_raster(model: &MulticlassModel, image: &RasterImage) -> Result<LabelMap> {
    if image.bands() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), actual: image.bands() });
    }
    model.validate()?;
    let mut labels = vec![0u8; image.rows() * image.cols()];
    labels
        .par_chunks_mut(image.cols())
        .enumerate()
        .for_each(|(row, out)| {
            for (col, cell) in out.iter_mut().enumerate() {
                *cell = match image.pixel(row, col) {
                    None => UNCLASSIFIED,
                    Some(fv) => model.classify_unchecked(&fv).code(),
                };
            }
        });
    LabelMap::new(image.rows(), image.cols(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::multiclass::{
        train_multiclass, ClassCatalog, Strategy, TrainParams, Voting,
    };

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn small_raster() -> RasterImage {
        // 2 rows x 3 cols x 2 bands; band 0 = row index, band 1 = col index.
        let mut data = Vec::new();
        for r in 0..2 {
            for _c in 0..3 {
                data.push(r as f32);
            }
        }
        for _r in 0..2 {
            for c in 0..3 {
                data.push(c as f32);
            }
        }
        RasterImage::new(2, 3, 2, data, vec!["red".into(), "nir".into()], None).unwrap()
    }

    #[test]
    fn raster_round_trip_preserves_everything() {
        let dir = tmpdir();
        let path = dir.path().join("scene.hdr");
        let image = small_raster();
        write_raster(&image, &path).unwrap();
        let back = read_raster(&path).unwrap();
        assert_eq!(image, back);
        // Second write is byte-identical.
        let header1 = std::fs::read(&path).unwrap();
        let bin1 = std::fs::read(dir.path().join("scene.bin")).unwrap();
        write_raster(&back, &path).unwrap();
        assert_eq!(header1, std::fs::read(&path).unwrap());
        assert_eq!(bin1, std::fs::read(dir.path().join("scene.bin")).unwrap());
    }

    #[test]
    fn minimal_single_pixel_raster() {
        let dir = tmpdir();
        let path = dir.path().join("one.hdr");
        let image = RasterImage::new(1, 1, 1, vec![0.0], vec![], None).unwrap();
        write_raster(&image, &path).unwrap();
        let back = read_raster(&path).unwrap();
        assert_eq!(back.rows(), 1);
        assert_eq!(back.pixel(0, 0), Some(vec![0.0]));
    }

    #[test]
    fn truncated_payload_is_reported_with_sizes() {
        let dir = tmpdir();
        let path = dir.path().join("scene.hdr");
        write_raster(&small_raster(), &path).unwrap();
        let bin = dir.path().join("scene.bin");
        let mut bytes = std::fs::read(&bin).unwrap();
        bytes.pop();
        std::fs::write(&bin, &bytes).unwrap();
        let err = read_raster(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("47 bytes") && msg.contains("48"), "unhelpful error: {msg}");
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("scene.hdr");
        std::fs::write(&path, "multisvm-raster v9\nrows: 1\n\n").unwrap();
        let err = read_raster(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn header_with_unknown_key_is_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("scene.hdr");
        write_raster(&small_raster(), &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text = text.replace("interleave: bsq\n", "interleave: bsq\ncolor: green\n");
        std::fs::write(&path, text).unwrap();
        let err = read_raster(&path).unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn nodata_values_round_trip_and_mask_pixels() {
        let dir = tmpdir();
        let path = dir.path().join("scene.hdr");
        let image =
            RasterImage::new(1, 2, 2, vec![1.0, -9999.0, 2.0, 3.0], vec![], Some(-9999.0)).unwrap();
        write_raster(&image, &path).unwrap();
        let back = read_raster(&path).unwrap();
        assert_eq!(back.nodata(), Some(-9999.0));
        assert_eq!(back.pixel(0, 0), Some(vec![1.0, 2.0]));
        assert_eq!(back.pixel(0, 1), None);
    }

    #[test]
    fn non_finite_without_nodata_is_a_format_error() {
        let err = RasterImage::new(1, 1, 2, vec![1.0, f32::INFINITY], vec![], None).unwrap_err();
        match err {
            Error::Format { offset, .. } => assert_eq!(offset, Some(4)),
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn labelmap_round_trip_and_zero_case() {
        let dir = tmpdir();
        let path = dir.path().join("map.hdr");
        let map = LabelMap::new(2, 2, vec![0, 0, 0, 0]).unwrap();
        write_labelmap(&map, &path).unwrap();
        assert_eq!(std::fs::read(dir.path().join("map.bin")).unwrap(), vec![0u8; 4]);
        let back = read_labelmap(&path).unwrap();
        assert_eq!(map, back);

        let map = LabelMap::new(1, 4, vec![1, 2, 255, 0]).unwrap();
        write_labelmap(&map, &path).unwrap();
        let back = read_labelmap(&path).unwrap();
        assert_eq!(back.count_special(), (1, 1));
        assert_eq!(back.histogram().get(&2), Some(&1));
    }

    #[test]
    fn labelmap_reader_rejects_f32_headers() {
        let dir = tmpdir();
        let path = dir.path().join("scene.hdr");
        write_raster(&small_raster(), &path).unwrap();
        let err = read_labelmap(&path).unwrap_err();
        assert!(err.to_string().contains("dtype"), "{err}");
    }

    #[test]
    fn bin_extension_headers_are_refused() {
        let dir = tmpdir();
        let err = write_raster(&small_raster(), &dir.path().join("scene.bin")).unwrap_err();
        assert!(err.to_string().contains(".bin"), "{err}");
    }

    #[test]
    fn pixel_csv_round_trip() {
        let dir = tmpdir();
        let path = dir.path().join("train.csv");
        let samples = TrainingSamples::Pixels(vec![
            PixelSample { row: 0, col: 0, class: 1 },
            PixelSample { row: 1, col: 2, class: 3 },
            PixelSample { row: 1, col: 2, class: 3 },
        ]);
        write_samples_csv(&samples, &path).unwrap();
        assert_eq!(read_samples_csv(&path).unwrap(), samples);
    }

    #[test]
    fn feature_csv_round_trip() {
        let dir = tmpdir();
        let path = dir.path().join("train.csv");
        let ds = LabeledDataset::new(
            vec![vec![0.5, -1.25], vec![3.0, 4.5]],
            vec![1, 2],
        )
        .unwrap();
        let samples = TrainingSamples::Features(ds);
        write_samples_csv(&samples, &path).unwrap();
        assert_eq!(read_samples_csv(&path).unwrap(), samples);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tmpdir();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "row,col,class\n0,0,1\n3,nope,2\n").unwrap();
        let err = read_samples_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        std::fs::write(&path, "x,y,label\n").unwrap();
        let err = read_samples_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");

        std::fs::write(&path, "row,col,class\n0,0,255\n").unwrap();
        let err = read_samples_csv(&path).unwrap_err();
        assert!(err.to_string().contains("reserved"), "{err}");
    }

    #[test]
    fn extraction_reads_band_values_in_order() {
        // 1x1 raster with 6 constant bands 1..=6.
        let data: Vec<f32> = (1..=6).map(|b| b as f32).collect();
        let image = RasterImage::new(1, 1, 6, data, vec![], None).unwrap();
        let samples = TrainingSamples::Pixels(vec![PixelSample { row: 0, col: 0, class: 2 }]);
        let ds = extract_samples(&image, &samples).unwrap();
        assert_eq!(ds.features()[0], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(ds.labels(), &[2]);
    }

    #[test]
    fn extraction_keeps_duplicates_and_validates_bounds() {
        let image = small_raster();
        let dup = TrainingSamples::Pixels(vec![
            PixelSample { row: 0, col: 1, class: 1 },
            PixelSample { row: 0, col: 1, class: 1 },
        ]);
        assert_eq!(extract_samples(&image, &dup).unwrap().len(), 2);

        let oob = TrainingSamples::Pixels(vec![PixelSample { row: 5, col: 0, class: 1 }]);
        let err = extract_samples(&image, &oob).unwrap_err();
        assert!(err.to_string().contains("(5, 0)"), "{err}");
    }

    #[test]
    fn extraction_rejects_nodata_pixels() {
        let image =
            RasterImage::new(1, 2, 1, vec![1.0, f32::NAN], vec![], Some(f32::NAN)).unwrap();
        let samples = TrainingSamples::Pixels(vec![PixelSample { row: 0, col: 1, class: 1 }]);
        let err = extract_samples(&image, &samples).unwrap_err();
        assert!(err.to_string().contains("nodata"), "{err}");
    }

    fn trained_two_class_model() -> MulticlassModel {
        let ds = LabeledDataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![10.0, 10.0], vec![11.0, 11.0]],
            vec![1, 1, 2, 2],
        )
        .unwrap();
        let catalog = ClassCatalog::from_pairs([(1, "low"), (2, "high")]).unwrap();
        train_multiclass(
            &ds,
            &catalog,
            Strategy::OneAgainstOne,
            &KernelSpec::linear(),
            10.0,
            Voting::Majority,
            &TrainParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn classification_labels_separable_pixels() {
        let model = trained_two_class_model();
        // 1x2 raster: pixel 0 near class 1, pixel 1 near class 2.
        let image =
            RasterImage::new(1, 2, 2, vec![0.5, 10.5, 0.5, 10.5], vec![], None).unwrap();
        let map = classify_raster(&model, &image).unwrap();
        assert_eq!(map.labels(), &[1, 2]);
        assert_eq!(map.histogram().values().sum::<usize>(), 2);
    }

    #[test]
    fn all_nodata_raster_is_all_unclassified() {
        let model = trained_two_class_model();
        let image =
            RasterImage::new(2, 2, 2, vec![-1.0; 8], vec![], Some(-1.0)).unwrap();
        let map = classify_raster(&model, &image).unwrap();
        assert_eq!(map.labels(), &[0, 0, 0, 0]);
        assert_eq!(map.count_special(), (4, 0));
    }

    #[test]
    fn classification_checks_band_count() {
        let model = trained_two_class_model();
        let image = RasterImage::new(1, 1, 3, vec![0.0, 0.0, 0.0], vec![], None).unwrap();
        let err = classify_raster(&model, &image).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 2, actual: 3 }));
    }

    mod prop {
        use super::{read_labelmap, read_raster, write_labelmap, write_raster, LabelMap, RasterImage};
        use proptest::prelude::*;

        fn arb_raster() -> impl Strategy<Value = RasterImage> {
            (1usize..4, 1usize..4, 1usize..3)
                .prop_flat_map(|(rows, cols, bands)| {
                    let len = rows * cols * bands;
                    (
                        Just((rows, cols, bands)),
                        proptest::collection::vec(-1e6f32..1e6, len..=len),
                    )
                })
                .prop_map(|((rows, cols, bands), data)| {
                    RasterImage::new(rows, cols, bands, data, vec![], None).unwrap()
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn raster_write_read_write_is_stable(image in arb_raster()) {
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("r.hdr");
                write_raster(&image, &path).unwrap();
                let h1 = std::fs::read(&path).unwrap();
                let b1 = std::fs::read(dir.path().join("r.bin")).unwrap();
                let back = read_raster(&path).unwrap();
                write_raster(&back, &path).unwrap();
                prop_assert_eq!(h1, std::fs::read(&path).unwrap());
                prop_assert_eq!(b1, std::fs::read(dir.path().join("r.bin")).unwrap());
            }

            #[test]
            fn labelmap_write_read_write_is_stable(
                (rows, cols) in (1usize..5, 1usize..5),
                seed in any::<u64>(),
            ) {
                let n = rows * cols;
                let labels: Vec<u8> = (0..n).map(|i| ((seed >> (i % 56)) & 0xff) as u8).collect();
                let map = LabelMap::new(rows, cols, labels).unwrap();
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("m.hdr");
                write_labelmap(&map, &path).unwrap();
                let b1 = std::fs::read(dir.path().join("m.bin")).unwrap();
                let back = read_labelmap(&path).unwrap();
                prop_assert_eq!(&map, &back);
                write_labelmap(&back, &path).unwrap();
                prop_assert_eq!(b1, std::fs::read(dir.path().join("m.bin")).unwrap());
            }
        }
    }
}
