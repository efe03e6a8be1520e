//! Synthetic four-class bar-shape images, the `QADS` container and IDX ingestion.
//!
//! Glyphs are drawn in final-pixel coordinates on a 16×16 frame whose centre
//! is (8, 8): class 0 is a horizontal bar, class 1 a cross, class 2 a vertical
//! bar with a half-bar to the right and class 3 a vertical bar with a half-bar
//! to the left. Full bars cover `[2, 14)` along their axis and half-bars cover
//! `[8, 14)` or `[2, 8)`. A bar of thickness `t` covers `[8 - t/2, 8 + t/2)`
//! across its axis.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const SIDE: usize = 16;
pub const DIM: usize = SIDE * SIDE;
pub const NUM_CLASSES: usize = 4;

const QADS_MAGIC: &[u8; 4] = b"QADS";
const QADS_VERSION: u8 = 0x01;
const QADS_HEADER_LEN: usize = 13;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// A 16×16 grayscale image, row-major, every pixel in `[0, 1]`.
///
/// Pixels are stored as `f32` because that is the on-disk precision; the
/// models consume [`Image::to_vec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pixels: Vec<f32>,
}

impl Image {
    pub fn from_pixels(pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != DIM {
            return Err(Error::domain(format!(
                "image must have {DIM} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::domain(format!(
                "pixel {i} = {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self { pixels })
    }

    pub fn zeros() -> Self {
        Self {
            pixels: vec![0.0; DIM],
        }
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * SIDE + col]
    }

    /// Flattened `f64` copy, the input representation of every model.
    pub fn to_vec(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }
}

/// Images with class labels in `0..4`. Both vectors always have equal length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledDataset {
    images: Vec<Image>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(images: Vec<Image>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::domain(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::domain(format!("label {l} outside 0..{NUM_CLASSES}")));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Image, u8)> {
        self.images.iter().zip(self.labels.iter().copied())
    }

    /// First `n` samples (or all, if fewer).
    pub fn take(&self, n: usize) -> LabeledDataset {
        let n = n.min(self.len());
        LabeledDataset {
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Images widened to `f64` and labels as indices, in sample order.
    pub fn to_samples(&self) -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            self.images.iter().map(Image::to_vec).collect(),
            self.labels.iter().map(|&l| l as usize).collect(),
        )
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// Train and test splits produced by [`generate_dataset`].
#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    /// Rotation angle is drawn from `U(-range, +range)` degrees.
    pub rotation_range_deg: f64,
    /// Blur sigma is drawn from `U(0, blur_sigma_max)` pixels.
    pub blur_sigma_max: f64,
    /// Bar thicknesses in final-pixel units, one picked uniformly per sample.
    pub thickness_choices: Vec<u32>,
    pub supersample_factor: u32,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            rotation_range_deg: 10.0,
            blur_sigma_max: 0.6,
            thickness_choices: vec![2, 3],
            supersample_factor: 4,
        }
    }
}

impl RenderParams {
    /// Rendering with no rotation and no blur.
    pub fn crisp(thickness: u32) -> Self {
        Self {
            rotation_range_deg: 0.0,
            blur_sigma_max: 0.0,
            thickness_choices: vec![thickness],
            supersample_factor: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rotation_range_deg >= 0.0) || !self.rotation_range_deg.is_finite() {
            return Err(Error::domain("rotation_range_deg must be finite and >= 0"));
        }
        if !(self.blur_sigma_max >= 0.0) || !self.blur_sigma_max.is_finite() {
            return Err(Error::domain("blur_sigma_max must be finite and >= 0"));
        }
        if self.thickness_choices.is_empty() {
            return Err(Error::domain("thickness_choices must be nonempty"));
        }
        if self.thickness_choices.iter().any(|&t| t == 0 || t as usize > SIDE) {
            return Err(Error::domain("thickness must lie in 1..=16"));
        }
        if self.supersample_factor == 0 {
            return Err(Error::domain("supersample_factor must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub train_count: usize,
    pub test_count: usize,
    pub seed: u64,
    pub render: RenderParams,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            train_count: 1000,
            test_count: 200,
            seed: 2024,
            render: RenderParams::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("train_count", self.train_count), ("test_count", self.test_count)] {
            if n == 0 || n % NUM_CLASSES != 0 {
                return Err(Error::domain(format!(
                    "{name} = {n} must be a positive multiple of {NUM_CLASSES}"
                )));
            }
        }
        self.render.validate()
    }
}

#[derive(Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

fn glyph(class_id: u8, thickness: f64) -> Vec<Rect> {
    let c = SIDE as f64 / 2.0;
    let (lo, hi) = (2.0, 14.0);
    let t0 = (c - thickness / 2.0).floor();
    let t1 = t0 + thickness;
    let horizontal = |x0, x1| Rect { x0, x1, y0: t0, y1: t1 };
    let vertical = Rect { x0: t0, x1: t1, y0: lo, y1: hi };
    match class_id {
        0 => vec![horizontal(lo, hi)],
        1 => vec![horizontal(lo, hi), vertical],
        2 => vec![vertical, horizontal(c, hi)],
        3 => vec![vertical, horizontal(lo, c)],
        _ => unreachable!(),
    }
}

/// Draws one glyph: supersampled mask, rotation by inverse mapping with
/// bilinear sampling, box downsampling, optional Gaussian blur and clamping.
///
/// Random draws happen in a fixed order (thickness, angle, sigma) regardless
/// of whether the corresponding ranges are zero.
pub fn render_sample(class_id: u8, rng: &mut Rng, params: &RenderParams) -> Result<Image> {
    if class_id as usize >= NUM_CLASSES {
        return Err(Error::domain(format!("class id {class_id} outside 0..4")));
    }
    params.validate()?;

    let thickness = params.thickness_choices[rng.below(params.thickness_choices.len())] as f64;
    let angle = rng
        .uniform_range(-params.rotation_range_deg, params.rotation_range_deg)
        .to_radians();
    let sigma = rng.uniform_range(0.0, params.blur_sigma_max);

    let s = params.supersample_factor as usize;
    let n = SIDE * s;
    let sf = s as f64;
    let rects = glyph(class_id, thickness);
    let mut mask = vec![0.0f64; n * n];
    for r in 0..n {
        let y = (r as f64 + 0.5) / sf;
        for c in 0..n {
            let x = (c as f64 + 0.5) / sf;
            if rects.iter().any(|rect| rect.contains(x, y)) {
                mask[r * n + c] = 1.0;
            }
        }
    }

    let rotated = if angle == 0.0 {
        mask
    } else {
        rotate(&mask, n, sf, angle)
    };

    let mut img = vec![0.0f64; DIM];
    let inv = 1.0 / (sf * sf);
    for r in 0..n {
        for c in 0..n {
            img[(r / s) * SIDE + c / s] += rotated[r * n + c] * inv;
        }
    }

    if sigma > 0.0 {
        img = gaussian_blur(&img, SIDE, sigma);
    }

    let pixels = img.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
    Image::from_pixels(pixels)
}

fn rotate(mask: &[f64], n: usize, sf: f64, angle: f64) -> Vec<f64> {
    let centre = SIDE as f64 / 2.0;
    let (sin, cos) = angle.sin_cos();
    let sample = |row: isize, col: isize| -> f64 {
        if row < 0 || col < 0 || row >= n as isize || col >= n as isize {
            0.0
        } else {
            mask[row as usize * n + col as usize]
        }
    };
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        let dy = (r as f64 + 0.5) / sf - centre;
        for c in 0..n {
            let dx = (c as f64 + 0.5) / sf - centre;
            // inverse rotation back into the unrotated glyph
            let sx = cos * dx + sin * dy + centre;
            let sy = -sin * dx + cos * dy + centre;
            let u = sx * sf - 0.5;
            let v = sy * sf - 0.5;
            let (u0, v0) = (u.floor(), v.floor());
            let (fu, fv) = (u - u0, v - v0);
            let (ui, vi) = (u0 as isize, v0 as isize);
            out[r * n + c] = (1.0 - fv) * ((1.0 - fu) * sample(vi, ui) + fu * sample(vi, ui + 1))
                + fv * ((1.0 - fu) * sample(vi + 1, ui) + fu * sample(vi + 1, ui + 1));
        }
    }
    out
}

fn reflect(mut i: isize, n: isize) -> usize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Separable Gaussian blur, kernel radius `ceil(3 sigma)`, half-sample
/// symmetric reflection at the borders.
fn gaussian_blur(img: &[f64], side: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let n = side as isize;
    let mut tmp = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            tmp[r * side + c] = (-radius..=radius)
                .map(|k| kernel[(k + radius) as usize] * img[r * side + reflect(c as isize + k, n)])
                .sum();
        }
    }
    let mut out = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            out[r * side + c] = (-radius..=radius)
                .map(|k| kernel[(k + radius) as usize] * tmp[reflect(r as isize + k, n) * side + c])
                .sum();
        }
    }
    out
}

fn generate_split(count: usize, rng: &mut Rng, params: &RenderParams) -> Result<LabeledDataset> {
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let class_id = (i % NUM_CLASSES) as u8;
        images.push(render_sample(class_id, rng, params)?);
        labels.push(class_id);
    }
    let mut order: Vec<usize> = (0..count).collect();
    rng.shuffle(&mut order);
    let images = order.iter().map(|&i| images[i].clone()).collect();
    let labels = order.iter().map(|&i| labels[i]).collect();
    LabeledDataset::new(images, labels)
}

/// Balanced, shuffled train and test splits; a pure function of `spec`.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Splits> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let train = generate_split(spec.train_count, &mut rng, &spec.render)?;
    let test = generate_split(spec.test_count, &mut rng, &spec.render)?;
    Ok(Splits { train, test })
}

/// Encodes a dataset in the `QADS` layout (little-endian): magic, version,
/// u32 count, u16 width, u16 height, then per record a u8 label followed by
/// `width * height` f32 pixels.
pub fn encode_dataset(ds: &LabeledDataset) -> Vec<u8> {
    let mut buf = Vec::with_capacity(QADS_HEADER_LEN + ds.len() * (1 + 4 * DIM));
    buf.extend_from_slice(QADS_MAGIC);
    buf.push(QADS_VERSION);
    buf.extend_from_slice(&(ds.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(SIDE as u16).to_le_bytes());
    buf.extend_from_slice(&(SIDE as u16).to_le_bytes());
    for (img, label) in ds.iter() {
        buf.push(label);
        for p in img.pixels() {
            buf.extend_from_slice(&p.to_le_bytes());
        }
    }
    buf
}

pub fn decode_dataset(bytes: &[u8]) -> Result<LabeledDataset> {
    if bytes.len() < QADS_HEADER_LEN {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated header: {} of {QADS_HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if &bytes[0..4] != QADS_MAGIC {
        return Err(Error::format(0, format!("bad magic {:?}", &bytes[0..4])));
    }
    if bytes[4] != QADS_VERSION {
        return Err(Error::format(4, format!("unsupported version {}", bytes[4])));
    }
    let count = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let width = u16::from_le_bytes(bytes[9..11].try_into().unwrap()) as usize;
    let height = u16::from_le_bytes(bytes[11..13].try_into().unwrap()) as usize;
    if width != SIDE {
        return Err(Error::format(9, format!("width {width}, expected {SIDE}")));
    }
    if height != SIDE {
        return Err(Error::format(11, format!("height {height}, expected {SIDE}")));
    }

    let record = 1 + 4 * DIM;
    let expected = QADS_HEADER_LEN + count * record;
    if bytes.len() < expected {
        let complete = (bytes.len() - QADS_HEADER_LEN) / record;
        return Err(Error::format(
            (QADS_HEADER_LEN + complete * record) as u64,
            format!("truncated: record {complete} of {count} incomplete"),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(expected as u64, "trailing bytes after last record"));
    }

    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let start = QADS_HEADER_LEN + i * record;
        let label = bytes[start];
        if label as usize >= NUM_CLASSES {
            return Err(Error::format(start as u64, format!("label {label} outside 0..4")));
        }
        let mut pixels = Vec::with_capacity(DIM);
        for k in 0..DIM {
            let off = start + 1 + 4 * k;
            let p = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::format(off as u64, format!("pixel value {p} outside [0, 1]")));
            }
            pixels.push(p);
        }
        images.push(Image { pixels });
        labels.push(label);
    }
    LabeledDataset::new(images, labels)
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_dataset(ds))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    decode_dataset(&fs::read(path)?)
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(offset as u64, "truncated IDX header"))
}

/// Area-weighted resampling weights from `n_in` cells onto `n_out` cells; row
/// `o` holds the overlap of output cell `o` with every input cell, normalized
/// to sum to one.
fn area_weights(n_in: usize, n_out: usize) -> Vec<Vec<f64>> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let (a, b) = (o as f64 * scale, (o + 1) as f64 * scale);
            (0..n_in)
                .map(|i| {
                    let overlap = (b.min((i + 1) as f64) - a.max(i as f64)).max(0.0);
                    overlap / scale
                })
                .collect()
        })
        .collect()
}

/// Reads IDX images/labels, keeps samples whose label is in `classes` and
/// resizes them to 16×16 by area averaging.
///
/// At most four classes may be requested; labels are remapped to their rank
/// within the sorted class list, so `{0, 1, 2, 3}` keeps the original labels.
pub fn load_idx_subset(
    image_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
    classes: &[u8],
) -> Result<LabeledDataset> {
    decode_idx_subset(&fs::read(image_path)?, &fs::read(label_path)?, classes)
}

pub fn decode_idx_subset(images: &[u8], labels: &[u8], classes: &[u8]) -> Result<LabeledDataset> {
    let mut classes = classes.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() > NUM_CLASSES {
        return Err(Error::domain(format!(
            "at most {NUM_CLASSES} classes can be kept, got {}",
            classes.len()
        )));
    }

    let magic = be_u32(images, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(0, format!("image file magic {magic:#010x}")));
    }
    let magic = be_u32(labels, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(0, format!("label file magic {magic:#010x}")));
    }
    let n_images = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let n_labels = be_u32(labels, 4)? as usize;
    if n_images != n_labels {
        return Err(Error::format(
            4,
            format!("{n_images} images but {n_labels} labels"),
        ));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::format(8, "zero image dimension"));
    }
    let pixels_per = rows * cols;
    if images.len() < 16 + n_images * pixels_per {
        return Err(Error::format(images.len() as u64, "truncated IDX image data"));
    }
    if labels.len() < 8 + n_labels {
        return Err(Error::format(labels.len() as u64, "truncated IDX label data"));
    }

    let wr = area_weights(rows, SIDE);
    let wc = area_weights(cols, SIDE);
    let mut out_images = Vec::new();
    let mut out_labels = Vec::new();
    for i in 0..n_images {
        let label = labels[8 + i];
        let Some(rank) = classes.iter().position(|&c| c == label) else {
            continue;
        };
        let raw = &images[16 + i * pixels_per..16 + (i + 1) * pixels_per];
        // separable: first columns, then rows
        let mut tmp = vec![0.0f64; rows * SIDE];
        for r in 0..rows {
            for (oc, w) in wc.iter().enumerate() {
                tmp[r * SIDE + oc] = (0..cols).map(|c| w[c] * raw[r * cols + c] as f64).sum();
            }
        }
        let mut pixels = Vec::with_capacity(DIM);
        for w in &wr {
            for oc in 0..SIDE {
                let v: f64 = (0..rows).map(|r| w[r] * tmp[r * SIDE + oc]).sum::<f64>() / 255.0;
                pixels.push(v.clamp(0.0, 1.0) as f32);
            }
        }
        out_images.push(Image { pixels });
        out_labels.push(rank as u8);
    }
    LabeledDataset::new(out_images, out_labels)
}

/// `x / ‖x‖₂`; amplitude states are undefined for the zero vector.
pub fn l2_normalize(x: &[f64]) -> Result<Vec<f64>> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::numeric("non-finite norm"));
    }
    if norm == 0.0 {
        return Err(Error::domain("cannot normalize the zero vector"));
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crisp(class_id: u8, thickness: u32) -> Image {
        render_sample(class_id, &mut Rng::new(1), &RenderParams::crisp(thickness)).unwrap()
    }

    /// Pixels of an axis-aligned bar given by inclusive pixel ranges.
    fn bar_mask(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> Vec<f32> {
        let mut m = vec![0.0; DIM];
        for r in rows {
            for c in cols.clone() {
                m[r * SIDE + c] = 1.0;
            }
        }
        m
    }

    fn union(a: &[f32], b: &[f32]) -> Vec<f32> {
        a.iter().zip(b).map(|(x, y)| x.max(*y)).collect()
    }

    #[test]
    fn horizontal_bar_geometry() {
        assert_eq!(crisp(0, 2).pixels(), &bar_mask(7..=8, 2..=13)[..]);
    }

    #[test]
    fn cross_is_union_of_bars() {
        let expected = union(&bar_mask(7..=8, 2..=13), &bar_mask(2..=13, 7..=8));
        assert_eq!(crisp(1, 2).pixels(), &expected[..]);
        let vertical = bar_mask(2..=13, 7..=8);
        assert_eq!(crisp(1, 2).pixels(), &union(crisp(0, 2).pixels(), &vertical)[..]);
    }

    #[test]
    fn half_bars() {
        let vertical = bar_mask(2..=13, 7..=8);
        assert_eq!(crisp(2, 2).pixels(), &union(&vertical, &bar_mask(7..=8, 8..=13))[..]);
        assert_eq!(crisp(3, 2).pixels(), &union(&vertical, &bar_mask(7..=8, 2..=7))[..]);
    }

    #[test]
    fn odd_thickness_snaps_to_whole_rows() {
        let img = crisp(0, 3);
        assert_eq!(img.get(5, 5), 0.0);
        assert_eq!(img.get(6, 5), 1.0);
        assert_eq!(img.get(7, 5), 1.0);
        assert_eq!(img.get(8, 5), 1.0);
        assert_eq!(img.get(9, 5), 0.0);
    }

    #[test]
    fn crisp_rendering_is_binary_and_deterministic() {
        for class_id in 0..4 {
            let a = render_sample(class_id, &mut Rng::new(9), &RenderParams::crisp(2)).unwrap();
            let b = render_sample(class_id, &mut Rng::new(9), &RenderParams::crisp(2)).unwrap();
            assert_eq!(a, b);
            assert!(a.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
        }
    }

    #[test]
    fn invalid_class_rejected() {
        let err = render_sample(4, &mut Rng::new(0), &RenderParams::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn rotated_blurred_pixels_in_range() {
        let mut rng = Rng::new(5);
        for i in 0..200 {
            let img = render_sample((i % 4) as u8, &mut rng, &RenderParams::default()).unwrap();
            assert!(img.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
            // the glyph keeps roughly its mass under rotation and blur
            let mass: f32 = img.pixels().iter().sum();
            assert!(mass > 15.0, "mass {mass}");
        }
    }

    #[test]
    fn blur_preserves_constant_images() {
        let img = vec![0.3; DIM];
        let out = gaussian_blur(&img, SIDE, 0.9);
        assert!(out.iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn default_dataset_is_balanced() {
        let splits = generate_dataset(&DatasetSpec::default()).unwrap();
        assert_eq!(splits.train.len(), 1000);
        assert_eq!(splits.test.len(), 200);
        assert_eq!(splits.train.class_counts(), [250; 4]);
        assert_eq!(splits.test.class_counts(), [50; 4]);
        // permuted, not in generation order
        assert_ne!(&splits.train.labels()[..8], &[0, 1, 2, 3, 0, 1, 2, 3]);
    }

    #[test]
    fn minimal_dataset_and_determinism() {
        let spec = DatasetSpec {
            train_count: 4,
            test_count: 4,
            ..DatasetSpec::default()
        };
        let a = generate_dataset(&spec).unwrap();
        assert_eq!(a.train.class_counts(), [1; 4]);
        assert_eq!(a.test.class_counts(), [1; 4]);
        assert_eq!(a, generate_dataset(&spec).unwrap());
    }

    #[test]
    fn counts_must_be_multiples_of_four() {
        let spec = DatasetSpec {
            train_count: 10,
            ..DatasetSpec::default()
        };
        assert!(matches!(generate_dataset(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_dataset_encodes_to_header() {
        let bytes = encode_dataset(&LabeledDataset::default());
        assert_eq!(bytes.len(), 4 + 1 + 4 + 2 + 2);
        assert_eq!(decode_dataset(&bytes).unwrap(), LabeledDataset::default());
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = encode_dataset(&generate_dataset(&DatasetSpec {
            train_count: 4,
            test_count: 4,
            ..DatasetSpec::default()
        })
        .unwrap()
        .train);
        let good = bytes.clone();
        bytes[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_dataset(&bytes), Err(Error::Format { offset: 0, .. })));

        let mut v = good.clone();
        v[4] = 2;
        assert!(matches!(decode_dataset(&v), Err(Error::Format { offset: 4, .. })));

        let cut = &good[..good.len() - 3];
        match decode_dataset(cut) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, (13 + 3 * 1025) as u64),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn idx_files(images: &[Vec<u8>], labels: &[u8], side: usize) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend_from_slice(&(images.len() as u32).to_be_bytes());
        img.extend_from_slice(&(side as u32).to_be_bytes());
        img.extend_from_slice(&(side as u32).to_be_bytes());
        for im in images {
            img.extend_from_slice(im);
        }
        let mut lab = Vec::new();
        lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        lab.extend_from_slice(labels);
        (img, lab)
    }

    #[test]
    fn idx_filters_classes_and_preserves_constants() {
        let images: Vec<Vec<u8>> = (0..10u8).map(|d| vec![d * 20; 784]).collect();
        let labels: Vec<u8> = (0..10).collect();
        let (img, lab) = idx_files(&images, &labels, 28);

        let ds = decode_idx_subset(&img, &lab, &[0, 1, 2, 3]).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 2, 3]);
        for (im, l) in ds.iter() {
            let want = (l as f32 * 20.0) / 255.0;
            assert!(im.pixels().iter().all(|p| (p - want).abs() < 1e-6));
        }

        assert!(decode_idx_subset(&img, &lab, &[]).unwrap().is_empty());
    }

    #[test]
    fn idx_area_resize_preserves_mean() {
        let raw: Vec<u8> = (0..784).map(|i| ((i * 37) % 256) as u8).collect();
        let mean_in: f64 = raw.iter().map(|&v| v as f64 / 255.0).sum::<f64>() / 784.0;
        let (img, lab) = idx_files(&[raw], &[1], 28);
        let ds = decode_idx_subset(&img, &lab, &[1]).unwrap();
        let mean_out: f64 = ds.images()[0].to_vec().iter().sum::<f64>() / 256.0;
        assert!((mean_in - mean_out).abs() < 1e-6);
    }

    #[test]
    fn idx_errors() {
        let (mut img, lab) = idx_files(&[vec![0; 784]], &[0], 28);
        let (_, lab2) = idx_files(&[], &[0, 1], 28);
        assert!(matches!(
            decode_idx_subset(&img, &lab2, &[0]),
            Err(Error::Format { .. })
        ));
        img[3] = 0x01;
        assert!(matches!(
            decode_idx_subset(&img, &lab, &[0]),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        let mut x = vec![0.0; DIM];
        x[0] = 3.0;
        x[1] = 4.0;
        let y = l2_normalize(&x).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);

        let mut e5 = vec![0.0; DIM];
        e5[5] = 1.0;
        assert_eq!(l2_normalize(&e5).unwrap(), e5);

        let ones = l2_normalize(&vec![1.0; DIM]).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-15));

        assert!(matches!(l2_normalize(&vec![0.0; DIM]), Err(Error::Domain(_))));
    }
}
