//! Dataset generation and ingestion: the XOR pairs, 2-D Gaussian clusters,
//! MNIST IDX files, labeled CSV, splitting, and a CSV dump format for
//! generated data.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use crate::tensor::{Matrix, Rng, Vector};

/// Targets are either one-hot rows (multi-class) or a single label per
/// sample (binary; XOR keeps its bipolar labels here).
#[derive(Clone, Debug, PartialEq)]
pub enum Targets<T> {
    OneHot(Matrix<T>),
    Binary(Vector<T>),
}

/// Record of the per-feature transform applied at load time.
#[derive(Clone, Debug, PartialEq)]
pub enum Normalization<T> {
    None,
    /// Every feature divided by this value (MNIST uses 255).
    Scale(T),
    /// Per-feature min-max mapping onto `[0, 1]`.
    MinMax { min: Vector<T>, max: Vector<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    /// `N × d` inputs, one sample per row.
    pub inputs: Matrix<T>,
    pub targets: Targets<T>,
    pub class_count: usize,
    pub normalization: Normalization<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_count(&self) -> usize {
        self.inputs.cols()
    }

    pub fn target_width(&self) -> usize {
        match &self.targets {
            Targets::OneHot(m) => m.cols(),
            Targets::Binary(_) => 1,
        }
    }

    pub fn input_vector(&self, i: usize) -> Vector<T> {
        Vector::from_slice(self.inputs.row(i))
    }

    pub fn target_vector(&self, i: usize) -> Vector<T> {
        match &self.targets {
            Targets::OneHot(m) => Vector::from_slice(m.row(i)),
            Targets::Binary(v) => Vector::from_slice(&[v[i]]),
        }
    }

    /// Class index of sample `i`: argmax for one-hot targets; for binary
    /// targets any label above 0.5 counts as class 1 (bipolar -1 maps to 0).
    pub fn class_of(&self, i: usize) -> usize {
        match &self.targets {
            Targets::OneHot(m) => {
                Vector::from_slice(m.row(i)).argmax().expect("one-hot row is non-empty")
            }
            Targets::Binary(v) => usize::from(v[i] > real::<T>(0.5)),
        }
    }

    /// Write the dump format: one metadata comment, then one CSV row per
    /// sample with the features followed by the label (class index for
    /// one-hot targets, the raw label otherwise).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path.as_ref())?;
        let mut out = BufWriter::new(file);
        self.write(&mut out)
    }

    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        let kind = match &self.targets {
            Targets::OneHot(_) => "onehot",
            Targets::Binary(_) => "binary",
        };
        let norm = match &self.normalization {
            Normalization::None => "none".to_string(),
            Normalization::Scale(s) => format!("scale:{s}"),
            Normalization::MinMax { .. } => "minmax".to_string(),
        };
        writeln!(
            out,
            "# qnn-dataset v1 kind={kind} classes={} features={} norm={norm}",
            self.class_count,
            self.feature_count()
        )?;
        if let Normalization::MinMax { min, max } = &self.normalization {
            writeln!(out, "# min {}", join(min.as_slice()))?;
            writeln!(out, "# max {}", join(max.as_slice()))?;
        }
        for i in 0..self.len() {
            for v in self.inputs.row(i) {
                write!(out, "{v},")?;
            }
            match &self.targets {
                Targets::OneHot(_) => writeln!(out, "{}", self.class_of(i))?,
                Targets::Binary(v) => writeln!(out, "{}", v[i])?,
            }
        }
        Ok(())
    }

    /// Read the dump format back. Values round-trip exactly: the writer
    /// uses shortest-round-trip decimal formatting.
    pub fn load(path: impl AsRef<Path>) -> Result<Dataset<T>> {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("dataset dump: empty file".to_string()))??;
        let mut kind = None;
        let mut classes = None;
        let mut features = None;
        let mut norm = None;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("#") || tokens.next() != Some("qnn-dataset") {
            return Err(Error::format("dataset dump: missing '# qnn-dataset' header".to_string()));
        }
        if tokens.next() != Some("v1") {
            return Err(Error::format("dataset dump: unsupported version".to_string()));
        }
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| Error::format(format!("dataset dump: bad header token '{tok}'")))?;
            match key {
                "kind" => kind = Some(value.to_string()),
                "classes" => classes = value.parse::<usize>().ok(),
                "features" => features = value.parse::<usize>().ok(),
                "norm" => norm = Some(value.to_string()),
                _ => {}
            }
        }
        let kind = kind.ok_or_else(|| Error::format("dataset dump: missing kind".to_string()))?;
        let class_count =
            classes.ok_or_else(|| Error::format("dataset dump: missing classes".to_string()))?;
        let features =
            features.ok_or_else(|| Error::format("dataset dump: missing features".to_string()))?;
        let norm = norm.unwrap_or_else(|| "none".to_string());

        let mut normalization = if let Some(scale) = norm.strip_prefix("scale:") {
            Normalization::Scale(parse_scalar::<T>(scale, 1)?)
        } else {
            Normalization::None
        };
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut labels: Vec<T> = Vec::new();
        let mut min_line: Option<Vec<T>> = None;
        let mut max_line: Option<Vec<T>> = None;
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let line_no = idx + 2;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# min ") {
                min_line = Some(parse_scalar_list(rest, line_no)?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("# max ") {
                max_line = Some(parse_scalar_list(rest, line_no)?);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != features + 1 {
                return Err(Error::format(format!(
                    "dataset dump line {line_no}: {} cells, expected {}",
                    cells.len(),
                    features + 1
                )));
            }
            let mut row = Vec::with_capacity(features);
            for cell in &cells[..features] {
                row.push(parse_scalar::<T>(cell, line_no)?);
            }
            rows.push(row);
            labels.push(parse_scalar::<T>(cells[features], line_no)?);
        }
        if norm == "minmax" {
            let (min, max) = match (min_line, max_line) {
                (Some(min), Some(max)) => (min, max),
                _ => {
                    return Err(Error::format(
                        "dataset dump: norm=minmax needs '# min' and '# max' lines".to_string(),
                    ))
                }
            };
            normalization = Normalization::MinMax {
                min: Vector::from_vec(min),
                max: Vector::from_vec(max),
            };
        }
        let inputs = Matrix::from_rows(rows)?;
        let targets = match kind.as_str() {
            "onehot" => {
                let mut m = Matrix::zeros(labels.len(), class_count);
                for (i, label) in labels.iter().enumerate() {
                    let class = label.to_usize().ok_or_else(|| {
                        Error::format(format!("dataset dump: label {label} is not a class index"))
                    })?;
                    if class >= class_count {
                        return Err(Error::format(format!(
                            "dataset dump: label {class} outside 0..{class_count}"
                        )));
                    }
                    m[(i, class)] = T::one();
                }
                Targets::OneHot(m)
            }
            "binary" => Targets::Binary(Vector::from_vec(labels)),
            other => return Err(Error::format(format!("dataset dump: unknown kind '{other}'"))),
        };
        Ok(Dataset { inputs, targets, class_count, normalization })
    }
}

fn join<T: Scalar>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_scalar<T: Scalar>(s: &str, line_no: usize) -> Result<T> {
    let v: T = s
        .trim()
        .parse()
        .map_err(|_| Error::format(format!("line {line_no}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::format(format!("line {line_no}: non-finite value '{s}'")));
    }
    Ok(v)
}

fn parse_scalar_list<T: Scalar>(s: &str, line_no: usize) -> Result<Vec<T>> {
    s.split(',').map(|cell| parse_scalar(cell, line_no)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XorEncoding {
    /// Labels -1/+1, the form the four pairs are usually written in.
    Bipolar,
    /// Labels remapped -1 → 0, +1 → 1 for sigmoid training.
    Binary,
}

/// The four XOR pairs with bipolar inputs:
/// `(-1,-1) → -1, (1,-1) → 1, (-1,1) → 1, (1,1) → -1`.
pub fn xor_dataset<T: Scalar>(encoding: XorEncoding) -> Dataset<T> {
    let one = T::one();
    let neg = -T::one();
    let inputs = Matrix::from_rows(vec![
        vec![neg, neg],
        vec![one, neg],
        vec![neg, one],
        vec![one, one],
    ])
    .expect("static shape");
    let raw = [neg, one, one, neg];
    let labels: Vec<T> = match encoding {
        XorEncoding::Bipolar => raw.to_vec(),
        XorEncoding::Binary => raw.iter().map(|y| (*y + one) / (one + one)).collect(),
    };
    Dataset {
        inputs,
        targets: Targets::Binary(Vector::from_vec(labels)),
        class_count: 2,
        normalization: Normalization::None,
    }
}

/// One Gaussian cluster: class mean, 2×2 covariance, and per-class sample
/// counts for the train/test split.
#[derive(Clone, Debug)]
pub struct ClusterSpec<T> {
    pub mean: Vector<T>,
    pub cov: Matrix<T>,
    pub train_per_class: usize,
    pub test_per_class: usize,
}

/// The six-cluster benchmark layout: means
/// `(-16,0), (-8,0), (0,0), (0,10), (-8,10), (-16,10)` with unit-variance
/// covariances whose correlations cycle through `-0.3, 0, +0.3`.
pub fn six_cluster_specs<T: Scalar>(
    train_per_class: usize,
    test_per_class: usize,
) -> Vec<ClusterSpec<T>> {
    let means = [(-16.0, 0.0), (-8.0, 0.0), (0.0, 0.0), (0.0, 10.0), (-8.0, 10.0), (-16.0, 10.0)];
    let corrs = [-0.3, 0.0, 0.3, -0.3, 0.0, 0.3];
    means
        .iter()
        .zip(corrs)
        .map(|(&(mx, my), corr)| ClusterSpec {
            mean: Vector::from_vec(vec![real(mx), real(my)]),
            cov: Matrix::from_rows(vec![
                vec![T::one(), real(corr)],
                vec![real(corr), T::one()],
            ])
            .expect("static shape"),
            train_per_class,
            test_per_class,
        })
        .collect()
}

/// Sample train and test datasets from per-class Gaussian specs. Classes are
/// drawn in order; within a class all training samples are drawn before the
/// test samples, so the output is reproducible bitwise from the seed.
pub fn cluster_dataset<T: Scalar>(
    specs: &[ClusterSpec<T>],
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if specs.is_empty() {
        return Err(Error::invalid("cluster_dataset: no cluster specs".to_string()));
    }
    let classes = specs.len();
    let mut rng = Rng::new(seed);
    let mut train_rows = Vec::new();
    let mut train_classes = Vec::new();
    let mut test_rows = Vec::new();
    let mut test_classes = Vec::new();
    for (class, spec) in specs.iter().enumerate() {
        for _ in 0..spec.train_per_class {
            let p = rng.gaussian2d(&spec.mean, &spec.cov)?;
            train_rows.push(vec![p[0], p[1]]);
            train_classes.push(class);
        }
        for _ in 0..spec.test_per_class {
            let p = rng.gaussian2d(&spec.mean, &spec.cov)?;
            test_rows.push(vec![p[0], p[1]]);
            test_classes.push(class);
        }
    }
    Ok((
        assemble(train_rows, &train_classes, classes)?,
        assemble(test_rows, &test_classes, classes)?,
    ))
}

fn assemble<T: Scalar>(
    rows: Vec<Vec<T>>,
    classes: &[usize],
    class_count: usize,
) -> Result<Dataset<T>> {
    let mut targets = Matrix::zeros(classes.len(), class_count);
    for (i, &class) in classes.iter().enumerate() {
        targets[(i, class)] = T::one();
    }
    Ok(Dataset {
        inputs: Matrix::from_rows(rows)?,
        targets: Targets::OneHot(targets),
        class_count,
        normalization: Normalization::None,
    })
}

const IDX_IMAGES_MAGIC: u32 = 2051;
const IDX_LABELS_MAGIC: u32 = 2049;

fn read_u32_be(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

/// Load an MNIST-style IDX image/label file pair.
///
/// Pixels are scaled to `[0, 1]` by dividing by 255; raw 0–255 inputs
/// saturate sigmoids and blow up the quadratic terms (values up to 255²),
/// so training assumes this scaling. Images are flattened row-major; labels
/// become one-hot over 10 classes.
pub fn load_mnist<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset<T>> {
    let mut images = BufReader::new(File::open(images_path.as_ref())?);
    let magic = read_u32_be(&mut images)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(format!(
            "{}: image magic is {magic}, expected {IDX_IMAGES_MAGIC}",
            images_path.as_ref().display()
        )));
    }
    let count = read_u32_be(&mut images)? as usize;
    let rows = read_u32_be(&mut images)? as usize;
    let cols = read_u32_be(&mut images)? as usize;
    let mut pixel_bytes = vec![0u8; count * rows * cols];
    images.read_exact(&mut pixel_bytes)?;

    let mut labels = BufReader::new(File::open(labels_path.as_ref())?);
    let magic = read_u32_be(&mut labels)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(format!(
            "{}: label magic is {magic}, expected {IDX_LABELS_MAGIC}",
            labels_path.as_ref().display()
        )));
    }
    let label_count = read_u32_be(&mut labels)? as usize;
    if label_count != count {
        return Err(Error::format(format!(
            "IDX pair mismatch: {count} images but {label_count} labels"
        )));
    }
    let mut label_bytes = vec![0u8; label_count];
    labels.read_exact(&mut label_bytes)?;

    let scale = real::<T>(255.0);
    let dim = rows * cols;
    let inputs = Matrix::from_fn(count, dim, |i, j| {
        real::<T>(f64::from(pixel_bytes[i * dim + j])) / scale
    });
    let mut targets = Matrix::zeros(count, 10);
    for (i, &label) in label_bytes.iter().enumerate() {
        if label > 9 {
            return Err(Error::format(format!("label {label} at sample {i} outside 0..10")));
        }
        targets[(i, label as usize)] = T::one();
    }
    Ok(Dataset {
        inputs,
        targets: Targets::OneHot(targets),
        class_count: 10,
        normalization: Normalization::Scale(scale),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    /// Integer-coded categorical column; values are passed through but must
    /// be whole numbers.
    Categorical,
}

#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub label_column: usize,
    pub class_count: usize,
    pub has_header: bool,
    /// Per-column kinds covering every column including the label; `None`
    /// treats everything as numeric.
    pub columns: Option<Vec<ColumnKind>>,
    /// Min-max normalize every feature onto `[0, 1]` after loading.
    pub min_max_normalize: bool,
}

impl CsvSchema {
    pub fn new(label_column: usize, class_count: usize) -> Self {
        CsvSchema {
            label_column,
            class_count,
            has_header: false,
            columns: None,
            min_max_normalize: false,
        }
    }
}

/// Load a labeled CSV file (integer class labels, numeric features) into a
/// one-hot dataset.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file =
        File::open(path).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut classes: Vec<usize> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if idx == 0 && schema.has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match width {
            None => {
                if schema.label_column >= cells.len() {
                    return Err(Error::format(format!(
                        "line {line_no}: label column {} but only {} columns",
                        schema.label_column,
                        cells.len()
                    )));
                }
                if let Some(cols) = &schema.columns {
                    if cols.len() != cells.len() {
                        return Err(Error::format(format!(
                            "schema lists {} columns, file has {}",
                            cols.len(),
                            cells.len()
                        )));
                    }
                }
                width = Some(cells.len());
            }
            Some(w) if w != cells.len() => {
                return Err(Error::format(format!(
                    "line {line_no}: {} cells, expected {w}",
                    cells.len()
                )));
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(cells.len() - 1);
        for (col, cell) in cells.iter().enumerate() {
            let value = parse_scalar::<T>(cell, line_no)?;
            let kind = schema
                .columns
                .as_ref()
                .map_or(ColumnKind::Numeric, |cols| cols[col]);
            if kind == ColumnKind::Categorical && value.fract() != T::zero() {
                return Err(Error::format(format!(
                    "line {line_no}: categorical column {col} holds non-integer {value}"
                )));
            }
            if col == schema.label_column {
                let label = value
                    .to_f64()
                    .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                    .map(|v| v as usize)
                    .filter(|v| *v < schema.class_count)
                    .ok_or_else(|| {
                        Error::format(format!(
                            "line {line_no}: label {value} outside 0..{}",
                            schema.class_count
                        ))
                    })?;
                classes.push(label);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    let mut dataset = assemble(rows, &classes, schema.class_count)?;
    if schema.min_max_normalize {
        dataset = min_max_normalize(dataset);
    }
    Ok(dataset)
}

/// Map every feature onto `[0, 1]` by its observed min/max; constant
/// features map to 0. The transform is recorded on the dataset.
pub fn min_max_normalize<T: Scalar>(mut data: Dataset<T>) -> Dataset<T> {
    let d = data.feature_count();
    let n = data.len();
    let mut min = Vector::filled(d, T::infinity());
    let mut max = Vector::filled(d, T::neg_infinity());
    for i in 0..n {
        let row = data.inputs.row(i);
        for j in 0..d {
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    for i in 0..n {
        let row = data.inputs.row_mut(i);
        for j in 0..d {
            let range = max[j] - min[j];
            row[j] = if range > T::zero() { (row[j] - min[j]) / range } else { T::zero() };
        }
    }
    data.normalization = Normalization::MinMax { min, max };
    data
}

/// Seeded shuffle-and-split. With `stratify` the split is performed within
/// each class, preserving class proportions.
pub fn split<T: Scalar>(
    data: &Dataset<T>,
    fraction: f64,
    seed: u64,
    stratify: bool,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(Error::invalid(format!("split: fraction {fraction} outside (0, 1)")));
    }
    let n = data.len();
    let mut rng = Rng::new(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    if stratify {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.class_count];
        for i in 0..n {
            by_class[data.class_of(i)].push(i);
        }
        for mut members in by_class {
            rng.shuffle(&mut members);
            let take = (fraction * members.len() as f64).round() as usize;
            train_idx.extend_from_slice(&members[..take]);
            test_idx.extend_from_slice(&members[take..]);
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let take = (fraction * n as f64).round() as usize;
        train_idx.extend_from_slice(&order[..take]);
        test_idx.extend_from_slice(&order[take..]);
    }
    Ok((subset(data, &train_idx), subset(data, &test_idx)))
}

fn subset<T: Scalar>(data: &Dataset<T>, indices: &[usize]) -> Dataset<T> {
    let d = data.feature_count();
    let inputs = Matrix::from_fn(indices.len(), d, |i, j| data.inputs.row(indices[i])[j]);
    let targets = match &data.targets {
        Targets::OneHot(m) => Targets::OneHot(Matrix::from_fn(
            indices.len(),
            m.cols(),
            |i, j| m.row(indices[i])[j],
        )),
        Targets::Binary(v) => {
            Targets::Binary(Vector::from_vec(indices.iter().map(|&i| v[i]).collect()))
        }
    };
    Dataset {
        inputs,
        targets,
        class_count: data.class_count,
        normalization: data.normalization.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_pairs_match_the_bipolar_table() {
        let d = xor_dataset::<f64>(XorEncoding::Bipolar);
        assert_eq!(d.len(), 4);
        assert_eq!(d.inputs.row(0), &[-1.0, -1.0]);
        match &d.targets {
            Targets::Binary(v) => {
                assert_eq!(v.as_slice(), &[-1.0, 1.0, 1.0, -1.0]);
            }
            _ => panic!("xor targets should be binary"),
        }
        let b = xor_dataset::<f64>(XorEncoding::Binary);
        match &b.targets {
            Targets::Binary(v) => assert_eq!(v.as_slice(), &[0.0, 1.0, 1.0, 0.0]),
            _ => unreachable!(),
        }
        // ([1,-1]) carries label 1 in both encodings
        assert_eq!(d.class_of(1), 1);
        assert_eq!(b.class_of(1), 1);
    }

    #[test]
    fn six_cluster_defaults() {
        let specs = six_cluster_specs::<f64>(2000, 500);
        assert_eq!(specs.len(), 6);
        assert_eq!(specs[0].mean.as_slice(), &[-16.0, 0.0]);
        assert_eq!(specs[0].cov[(0, 1)], -0.3);
        assert_eq!(specs[1].cov[(0, 1)], 0.0);
        assert_eq!(specs[2].cov[(0, 1)], 0.3);
        let (train, test) = cluster_dataset(&six_cluster_specs::<f64>(100, 25), 7).unwrap();
        assert_eq!(train.len(), 600);
        assert_eq!(test.len(), 150);
        assert_eq!(train.class_count, 6);
    }

    #[test]
    fn cluster_sample_means_track_spec_means() {
        let specs = six_cluster_specs::<f64>(2000, 0);
        let (train, _) = cluster_dataset(&specs, 11).unwrap();
        for class in 0..6 {
            let (mut sx, mut sy, mut count) = (0.0, 0.0, 0);
            for i in 0..train.len() {
                if train.class_of(i) == class {
                    sx += train.inputs.row(i)[0];
                    sy += train.inputs.row(i)[1];
                    count += 1;
                }
            }
            assert_eq!(count, 2000);
            let mean = &specs[class].mean;
            assert!((sx / 2000.0 - mean[0]).abs() < 0.15);
            assert!((sy / 2000.0 - mean[1]).abs() < 0.15);
        }
    }

    #[test]
    fn cluster_generation_is_deterministic() {
        let specs = six_cluster_specs::<f64>(50, 10);
        let a = cluster_dataset(&specs, 99).unwrap();
        let b = cluster_dataset(&specs, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_hot_rows_sum_to_one() {
        let (train, test) = cluster_dataset(&six_cluster_specs::<f64>(20, 5), 3).unwrap();
        for data in [train, test] {
            if let Targets::OneHot(m) = &data.targets {
                for i in 0..m.rows() {
                    let sum: f64 = m.row(i).iter().sum();
                    assert_eq!(sum, 1.0);
                }
            }
        }
    }

    fn write_idx_pair(dir: &Path, pixels: &[u8], labels: &[u8], rows: u32, cols: u32) -> (std::path::PathBuf, std::path::PathBuf) {
        let img_path = dir.join("images-idx3-ubyte");
        let lbl_path = dir.join("labels-idx1-ubyte");
        let count = labels.len() as u32;
        let mut img = File::create(&img_path).unwrap();
        img.write_all(&IDX_IMAGES_MAGIC.to_be_bytes()).unwrap();
        img.write_all(&count.to_be_bytes()).unwrap();
        img.write_all(&rows.to_be_bytes()).unwrap();
        img.write_all(&cols.to_be_bytes()).unwrap();
        img.write_all(pixels).unwrap();
        let mut lbl = File::create(&lbl_path).unwrap();
        lbl.write_all(&IDX_LABELS_MAGIC.to_be_bytes()).unwrap();
        lbl.write_all(&count.to_be_bytes()).unwrap();
        lbl.write_all(labels).unwrap();
        (img_path, lbl_path)
    }

    #[test]
    fn idx_loader_scales_and_one_hots() {
        let dir = tempfile::tempdir().unwrap();
        let pixels = [0u8, 255, 128, 64, 255, 0, 0, 32];
        let labels = [7u8, 0];
        let (img, lbl) = write_idx_pair(dir.path(), &pixels, &labels, 2, 2);
        let data = load_mnist::<f64>(&img, &lbl).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.feature_count(), 4);
        assert_eq!(data.inputs.row(0)[0], 0.0);
        assert_eq!(data.inputs.row(0)[1], 1.0);
        assert_eq!(data.class_of(0), 7);
        assert_eq!(data.class_of(1), 0);
        if let Targets::OneHot(m) = &data.targets {
            assert_eq!(m.row(0)[7], 1.0);
            assert_eq!(m.row(0).iter().sum::<f64>(), 1.0);
        }
        assert_eq!(data.normalization, Normalization::Scale(255.0));
    }

    #[test]
    fn idx_loader_rejects_bad_magic_and_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = write_idx_pair(dir.path(), &[0u8; 4], &[1u8], 2, 2);
        // swap image/label paths: magic mismatch names the observed value
        let err = load_mnist::<f64>(&lbl, &img).unwrap_err();
        assert!(err.to_string().contains("2049"), "{err}");

        let short_labels = dir.path().join("short-labels");
        let mut f = File::create(&short_labels).unwrap();
        f.write_all(&IDX_LABELS_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&2u32.to_be_bytes()).unwrap();
        f.write_all(&[1u8, 2]).unwrap();
        let err = load_mnist::<f64>(&img, &short_labels).unwrap_err();
        assert!(err.to_string().contains("1 images but 2 labels"), "{err}");
    }

    #[test]
    fn csv_loader_one_hots_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, "f1,f2,label\n0.5,2.0,0\n1.5,4.0,1\n2.5,8.0,2\n").unwrap();
        let mut schema = CsvSchema::new(2, 3);
        schema.has_header = true;
        let data = load_csv::<f64>(&path, &schema).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.feature_count(), 2);
        if let Targets::OneHot(m) = &data.targets {
            for i in 0..3 {
                assert_eq!(m.row(i)[i], 1.0);
                assert_eq!(m.row(i).iter().sum::<f64>(), 1.0);
            }
        }

        // min-max normalization maps the column max to 1.0
        schema.min_max_normalize = true;
        let norm = load_csv::<f64>(&path, &schema).unwrap();
        assert_eq!(norm.inputs.row(2)[0], 1.0);
        assert_eq!(norm.inputs.row(2)[1], 1.0);
        assert_eq!(norm.inputs.row(0)[0], 0.0);

        std::fs::write(&path, "1.0,2.0,0\n1.0,oops,1\n").unwrap();
        let err = load_csv::<f64>(&path, &CsvSchema::new(2, 2)).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        std::fs::write(&path, "1.0,2.0,0\n1.0,2.0\n").unwrap();
        let err = load_csv::<f64>(&path, &CsvSchema::new(2, 2)).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        std::fs::write(&path, "1.0,2.0,5\n").unwrap();
        let err = load_csv::<f64>(&path, &CsvSchema::new(2, 2)).unwrap_err();
        assert!(err.to_string().contains("outside 0..2"), "{err}");

        std::fs::write(&path, "1.5,2.0,0\n").unwrap();
        let mut schema = CsvSchema::new(2, 2);
        schema.columns =
            Some(vec![ColumnKind::Categorical, ColumnKind::Numeric, ColumnKind::Categorical]);
        let err = load_csv::<f64>(&path, &schema).unwrap_err();
        assert!(err.to_string().contains("categorical column 0"), "{err}");
    }

    #[test]
    fn split_counts_and_determinism() {
        let (data, _) = cluster_dataset(&six_cluster_specs::<f64>(10, 0), 5).unwrap();
        let (train, test) = split(&data, 0.8, 42, false).unwrap();
        assert_eq!(train.len(), 48);
        assert_eq!(test.len(), 12);
        let (train2, test2) = split(&data, 0.8, 42, false).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        assert!(split(&data, 1.0, 0, false).is_err());
        assert!(split(&data, 0.0, 0, false).is_err());
    }

    #[test]
    fn stratified_split_keeps_minority_class_in_test() {
        // 90/10 imbalance: a plain split can drop the minority class from
        // the test side; the stratified one cannot.
        let mut rows = Vec::new();
        let mut classes = Vec::new();
        for i in 0..90 {
            rows.push(vec![i as f64, 0.0]);
            classes.push(0);
        }
        for i in 0..10 {
            rows.push(vec![i as f64, 1.0]);
            classes.push(1);
        }
        let data = assemble(rows, &classes, 2).unwrap();
        let (train, test) = split(&data, 0.8, 9, true).unwrap();
        let test_minority = (0..test.len()).filter(|&i| test.class_of(i) == 1).count();
        assert_eq!(test_minority, 2);
        let train_minority = (0..train.len()).filter(|&i| train.class_of(i) == 1).count();
        assert_eq!(train_minority, 8);
        // proportions preserved within ±2%
        let prop = train_minority as f64 / train.len() as f64;
        assert!((prop - 0.1).abs() <= 0.02);
    }

    #[test]
    fn dump_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let (data, _) = cluster_dataset(&six_cluster_specs::<f64>(25, 0), 13).unwrap();
        let path = dir.path().join("clusters.csv");
        data.save(&path).unwrap();
        let back = Dataset::<f64>::load(&path).unwrap();
        assert_eq!(data, back);

        let xor = xor_dataset::<f64>(XorEncoding::Bipolar);
        let path = dir.path().join("xor.csv");
        xor.save(&path).unwrap();
        let back = Dataset::<f64>::load(&path).unwrap();
        assert_eq!(xor, back);
    }

    #[test]
    fn dump_round_trips_scale_record() {
        let dir = tempfile::tempdir().unwrap();
        let pixels = [10u8, 20, 30, 40];
        let labels = [3u8, 9];
        let (img, lbl) = write_idx_pair(dir.path(), &pixels, &labels, 1, 2);
        let data = load_mnist::<f64>(&img, &lbl).unwrap();
        let dump = dir.path().join("mnist-dump.csv");
        data.save(&dump).unwrap();
        let back = Dataset::<f64>::load(&dump).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn dump_round_trips_minmax_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, "0.5,2.0,0\n1.5,4.0,1\n").unwrap();
        let mut schema = CsvSchema::new(2, 2);
        schema.min_max_normalize = true;
        let data = load_csv::<f64>(&path, &schema).unwrap();
        let dump = dir.path().join("dump.csv");
        data.save(&dump).unwrap();
        let back = Dataset::<f64>::load(&dump).unwrap();
        assert_eq!(data, back);
    }
}
