//! Dataset and image I/O, patch extraction, splits and result files.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const IONOSPHERE_FEATURES: usize = 34;

/// Binary-labelled feature table; label 1 is the positive class.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub feature_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::NoObservations);
        }
        if features.rows() != labels.len() {
            return Err(Error::LengthMismatch { left: features.rows(), right: labels.len() });
        }
        if !features.is_finite() {
            return Err(Error::NonFinite { what: "features", count: features.count_non_finite() });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        Ok(LabeledDataset { features, labels, feature_names: None })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Labels mapped to `{-1, +1}` for the classifier.
    pub fn signed_labels(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect()
    }
}

/// Parses the Ionosphere layout: 34 numeric columns then `g` (1) or `b` (0).
pub fn parse_ionosphere(text: &str, origin: &str) -> Result<LabeledDataset> {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { path: origin.to_string(), line: i + 1, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != IONOSPHERE_FEATURES + 1 {
            return Err(perr(format!(
                "expected {} feature columns plus a label, found {} columns",
                IONOSPHERE_FEATURES,
                fields.len()
            )));
        }
        for f in &fields[..IONOSPHERE_FEATURES] {
            let v: f64 = f.parse().map_err(|_| perr(format!("not a number: '{f}'")))?;
            if !v.is_finite() {
                return Err(perr(format!("non-finite value '{f}'")));
            }
            data.push(v);
        }
        labels.push(match fields[IONOSPHERE_FEATURES] {
            "g" => 1,
            "b" => 0,
            other => return Err(perr(format!("label must be 'g' or 'b', got '{other}'"))),
        });
    }
    let n = labels.len();
    LabeledDataset::new(Matrix::from_vec(n, IONOSPHERE_FEATURES, data)?, labels)
}

pub fn load_ionosphere(path: &Path) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ionosphere(&text, &path.display().to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Share of rows that go to the training set.
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

/// Disjoint `(train, test)` row indices covering every row, each sorted ascending.
///
/// The training set holds `round(N * train_fraction)` rows. In stratified mode the
/// per-class quotas are floored and the leftover rows go to the classes with the
/// largest fractional parts.
pub fn split_indices(labels: &[u8], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::invalid(format!("train fraction must be in (0, 1), got {f}")));
    }
    let n_train = (n as f64 * f).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(format!("train fraction {f} leaves an empty side for {n} rows")));
    }
    let mut rng = RngStream::new(spec.seed).generator();
    let mut train = Vec::with_capacity(n_train);
    if spec.stratified {
        let classes: Vec<Vec<usize>> = [0u8, 1].iter().map(|&c| (0..n).filter(|&i| labels[i] == c).collect()).collect();
        if classes.iter().any(Vec::is_empty) {
            return Err(Error::DegenerateLabels);
        }
        let exact: Vec<f64> = classes.iter().map(|c| c.len() as f64 * n_train as f64 / n as f64).collect();
        let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut left = n_train - quota.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..classes.len()).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
        for &c in order.iter().cycle() {
            if left == 0 {
                break;
            }
            if quota[c] < classes[c].len() {
                quota[c] += 1;
                left -= 1;
            }
        }
        for (c, members) in classes.into_iter().enumerate() {
            let mut m = members;
            m.shuffle(&mut rng);
            train.extend_from_slice(&m[..quota[c]]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        train.extend_from_slice(&all[..n_train]);
    }
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

pub fn split(dataset: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let (tr, te) = split_indices(&dataset.labels, spec)?;
    Ok((dataset.subset(&tr), dataset.subset(&te)))
}

/// Grayscale image with pixels in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Pixels are clamped into `[0, 1]`.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch { left: width * height, right: pixels.len() });
        }
        if pixels.iter().any(|p| p.is_nan()) {
            return Err(Error::NonFinite { what: "pixels", count: pixels.iter().filter(|p| p.is_nan()).count() });
        }
        let pixels = pixels.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(GrayImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pixel at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel at signed coordinates with symmetric reflection at the borders
    /// (`-1 -> 0`, `-2 -> 1`, `w -> w-1`).
    fn get_reflected(&self, x: isize, y: isize) -> f64 {
        self.get(reflect(x, self.width), reflect(y, self.height))
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

fn skip_ws_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else if bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
}

fn read_uint(bytes: &[u8], pos: &mut usize, what: &str, origin: &str) -> Result<usize> {
    skip_ws_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse { path: origin.into(), line: 0, msg: format!("missing {what} in PGM header") });
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse { path: origin.into(), line: 0, msg: format!("bad {what} in PGM header") })
}

/// Decodes a P2 (ASCII) or P5 (binary) PGM. Samples are divided by maxval.
pub fn decode_pgm(bytes: &[u8], origin: &str) -> Result<GrayImage> {
    let perr = |msg: &str| Error::Parse { path: origin.into(), line: 0, msg: msg.into() };
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(perr("not a PGM file (expected P2 or P5 magic)"));
    }
    let binary = bytes[1] == b'5';
    let mut pos = 2;
    let width = read_uint(bytes, &mut pos, "width", origin)?;
    let height = read_uint(bytes, &mut pos, "height", origin)?;
    let maxval = read_uint(bytes, &mut pos, "maxval", origin)?;
    if width == 0 || height == 0 {
        return Err(perr("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(perr("maxval must be in 1..=65535"));
    }
    let n = width * height;
    let scale = maxval as f64;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(perr("truncated PGM header"));
        }
        pos += 1;
        let bps = if maxval < 256 { 1 } else { 2 };
        let data = &bytes[pos..];
        if data.len() < n * bps {
            return Err(perr(&format!("truncated PGM data: need {} bytes, have {}", n * bps, data.len())));
        }
        for k in 0..n {
            let v = if bps == 1 { data[k] as usize } else { (data[2 * k] as usize) << 8 | data[2 * k + 1] as usize };
            if v > maxval {
                return Err(perr("sample exceeds maxval"));
            }
            pixels.push(v as f64 / scale);
        }
    } else {
        for _ in 0..n {
            let v = read_uint(bytes, &mut pos, "sample", origin)
                .map_err(|_| perr("truncated or malformed PGM sample data"))?;
            if v > maxval {
                return Err(perr("sample exceeds maxval"));
            }
            pixels.push(v as f64 / scale);
        }
    }
    GrayImage::new(width, height, pixels)
}

pub fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, &path.display().to_string())
}

/// Binary P5 encoding at maxval 255.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.pixels.iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn save_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

/// Adds independent `N(0, sd^2)` noise to every pixel, then clamps to `[0, 1]`.
pub fn add_gaussian_noise(image: &GrayImage, sd: f64, rng: &RngStream) -> Result<GrayImage> {
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::invalid(format!("noise sd must be >= 0, got {sd}")));
    }
    let mut g = rng.generator();
    let px = image
        .pixels
        .iter()
        .map(|&p| {
            let z: f64 = g.sample(StandardNormal);
            p + sd * z
        })
        .collect();
    GrayImage::new(image.width, image.height, px)
}

fn check_patch(image: &GrayImage, patch_size: usize) -> Result<()> {
    if patch_size < 3 || patch_size % 2 == 0 {
        return Err(Error::invalid(format!("patch size must be odd and >= 3, got {patch_size}")));
    }
    if image.width < patch_size || image.height < patch_size {
        return Err(Error::ImageTooSmall { width: image.width, height: image.height, min: patch_size });
    }
    Ok(())
}

/// Flattened `patch_size^2` neighbourhood of each `(row, col)` centre.
pub fn patches_at(image: &GrayImage, centers: &[(usize, usize)], patch_size: usize) -> Result<Matrix> {
    check_patch(image, patch_size)?;
    let half = (patch_size / 2) as isize;
    let d = patch_size * patch_size;
    let mut data = Vec::with_capacity(centers.len() * d);
    for &(r, c) in centers {
        for dr in -half..=half {
            for dc in -half..=half {
                data.push(image.get_reflected(c as isize + dc, r as isize + dr));
            }
        }
    }
    Matrix::from_vec(centers.len(), d, data)
}

/// Patches centred on every `stride`-th row and column, row-major order.
pub fn extract_patches(image: &GrayImage, patch_size: usize, stride: usize) -> Result<(Matrix, Vec<(usize, usize)>)> {
    check_patch(image, patch_size)?;
    if stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    let centers: Vec<(usize, usize)> =
        (0..image.height).step_by(stride).flat_map(|r| (0..image.width).step_by(stride).map(move |c| (r, c))).collect();
    Ok((patches_at(image, &centers, patch_size)?, centers))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
