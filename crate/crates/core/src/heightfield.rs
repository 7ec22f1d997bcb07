//! Rectangular height grids built from functions, images, elevation data and
//! depth-camera captures.
//!
//! Row `r`, column `c` of a [`HeightField`] sits at
//! `(origin.x + c * spacing, origin.y + r * spacing)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::Expression;
use crate::geometry::Point2;

/// Border rings added by the image, elevation and depth constructors.
pub const DEFAULT_PAD_WIDTH: usize = 2;
/// Plateau height for binarized images.
pub const DEFAULT_IMAGE_HEIGHT: f64 = 10.0;
pub const DEFAULT_ELEVATION_SCALE: f64 = 1.0 / 50.0;
pub const DEFAULT_DEPTH_SCALE: f64 = 1.0 / 10.0;
pub const DEFAULT_DEPTH_LO: f64 = 20.0;
pub const DEFAULT_DEPTH_HI: f64 = 1500.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeightFieldError {
    #[error("grid must be at least 2x2, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("expected {expected} height values, got {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("height {value} at index {index} is below the base height {base}")]
    BelowBase { index: usize, value: f64, base: f64 },
    #[error("cell spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain yields fewer than 2 samples per axis ({nx}x{ny})")]
    EmptyDomain { nx: usize, ny: usize },
    #[error("every sample lies at or below the floor; nothing to print")]
    AllBelowFloor,
    #[error("unsupported raster: {0}")]
    UnsupportedRaster(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, HeightFieldError>;

/// Grid of heights in millimetres, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    rows: usize,
    cols: usize,
    spacing: f64,
    origin: Point2,
    heights: Vec<f64>,
    base_height: f64,
}

impl HeightField {
    /// Checked constructor. Origin defaults to `(0, 0)`.
    pub fn new(
        rows: usize,
        cols: usize,
        spacing: f64,
        heights: Vec<f64>,
        base_height: f64,
    ) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(HeightFieldError::TooSmall { rows, cols });
        }
        if heights.len() != rows * cols {
            return Err(HeightFieldError::ShapeMismatch {
                expected: rows * cols,
                found: heights.len(),
            });
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(HeightFieldError::InvalidSpacing(spacing));
        }
        if !(base_height.is_finite() && base_height >= 0.0) {
            return Err(HeightFieldError::InvalidParameter(format!(
                "base height must be finite and non-negative, got {base_height}"
            )));
        }
        for (index, &value) in heights.iter().enumerate() {
            if !value.is_finite() {
                return Err(HeightFieldError::NonFiniteValue { index });
            }
            if value < base_height {
                return Err(HeightFieldError::BelowBase {
                    index,
                    value,
                    base: base_height,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            spacing,
            origin: Point2::default(),
            heights,
            base_height,
        })
    }

    pub fn with_origin(mut self, origin: Point2) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(HeightFieldError::InvalidSpacing(spacing));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn base_height(&self) -> f64 {
        self.base_height
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.cols + col]
    }

    /// Plan-view coordinates of lattice node `(row, col)`.
    pub fn node_xy(&self, row: usize, col: usize) -> Point2 {
        Point2::new(
            self.origin.x + col as f64 * self.spacing,
            self.origin.y + row as f64 * self.spacing,
        )
    }

    pub fn max_height(&self) -> f64 {
        self.heights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_height(&self) -> f64 {
        self.heights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Values of the outermost ring, clockwise from the first node.
    pub fn boundary(&self) -> Vec<f64> {
        let (r, c) = (self.rows, self.cols);
        let mut out = Vec::with_capacity(2 * (r + c));
        out.extend((0..c).map(|j| self.get(0, j)));
        out.extend((1..r).map(|i| self.get(i, c - 1)));
        out.extend((0..c - 1).rev().map(|j| self.get(r - 1, j)));
        out.extend((1..r - 1).rev().map(|i| self.get(i, 0)));
        out
    }
}

/// Layout of a flat value stream and how to turn it into a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSourceSpec {
    /// Values per row in the stream.
    pub length_x: usize,
    /// Total number of values.
    pub total: usize,
    pub scale: f64,
    pub pad_width: usize,
    pub pad_value: f64,
}

impl GridSourceSpec {
    fn check(&self, found: usize) -> Result<()> {
        if self.length_x == 0 {
            return Err(HeightFieldError::InvalidParameter(
                "length_x must be positive".into(),
            ));
        }
        if found != self.total {
            return Err(HeightFieldError::ShapeMismatch {
                expected: self.total,
                found,
            });
        }
        if !self.total.is_multiple_of(self.length_x) {
            return Err(HeightFieldError::ShapeMismatch {
                expected: self.total.div_ceil(self.length_x) * self.length_x,
                found: self.total,
            });
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(HeightFieldError::InvalidParameter(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if !self.pad_value.is_finite() {
            return Err(HeightFieldError::InvalidParameter(
                "pad value must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Sampling window for [`from_function`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Domain {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn square(half: f64) -> Self {
        Self::new(-half, half, -half, half)
    }
}

fn samples_along(lo: f64, hi: f64, res: f64) -> usize {
    let steps = ((hi - lo) * res + 1e-9).floor();
    if steps.is_finite() && steps >= 0.0 {
        steps as usize + 1
    } else {
        0
    }
}

/// Sample `surface` on a lattice of spacing `1 / res` over `domain`.
///
/// A sample becomes `floor` when `region` is given and evaluates to `<= 0`,
/// when the surface value is non-finite, or when it is below `floor`.
pub fn from_function(
    surface: &Expression,
    domain: Domain,
    res: f64,
    region: Option<&Expression>,
    floor: f64,
) -> Result<HeightField> {
    let Domain {
        xmin,
        xmax,
        ymin,
        ymax,
    } = domain;
    if ![xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) || xmax <= xmin || ymax <= ymin {
        return Err(HeightFieldError::InvalidParameter(format!(
            "domain must satisfy xmin < xmax and ymin < ymax, got x [{xmin}, {xmax}] y [{ymin}, {ymax}]"
        )));
    }
    if !(res.is_finite() && res > 0.0) {
        return Err(HeightFieldError::InvalidParameter(format!(
            "res must be positive, got {res}"
        )));
    }
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(HeightFieldError::InvalidParameter(format!(
            "floor must be non-negative, got {floor}"
        )));
    }
    let nx = samples_along(xmin, xmax, res);
    let ny = samples_along(ymin, ymax, res);
    if nx < 2 || ny < 2 {
        return Err(HeightFieldError::EmptyDomain { nx, ny });
    }
    let spacing = 1.0 / res;
    let rows: Vec<(Vec<f64>, bool)> = (0..ny)
        .into_par_iter()
        .map(|r| {
            let y = ymin + r as f64 * spacing;
            let mut any_above = false;
            let row = (0..nx)
                .map(|c| {
                    let x = xmin + c as f64 * spacing;
                    let masked = region.is_some_and(|g| !(g.evaluate(x, y) > 0.0));
                    let v = surface.evaluate(x, y);
                    if masked || !v.is_finite() || v <= floor {
                        floor
                    } else {
                        any_above = true;
                        v
                    }
                })
                .collect();
            (row, any_above)
        })
        .collect();
    if !rows.iter().any(|(_, above)| *above) {
        return Err(HeightFieldError::AllBelowFloor);
    }
    let heights = rows.into_iter().flat_map(|(row, _)| row).collect();
    Ok(HeightField::new(ny, nx, spacing, heights, floor)?.with_origin(Point2::new(xmin, ymin)))
}

/// Grayscale image with intensities in `[0, 1]`, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(HeightFieldError::UnsupportedRaster("empty raster".into()));
        }
        if pixels.len() != width * height {
            return Err(HeightFieldError::ShapeMismatch {
                expected: width * height,
                found: pixels.len(),
            });
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(HeightFieldError::UnsupportedRaster(format!(
                "pixel {i} has intensity {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(HeightFieldError::UnsupportedRaster("ragged rows".into()));
        }
        Self::new(width, rows.len(), rows.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Decode a binary (P5) or plain (P2) netpbm graymap. Samples are
    /// rescaled to `[0, 1]` from the file's maxval.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        if !matches!(bytes.get(..2), Some(b"P2" | b"P5")) {
            return Err(HeightFieldError::UnsupportedRaster(
                "not a PGM graymap (expected P2 or P5); convert color images to grayscale first"
                    .into(),
            ));
        }
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Pnm)
            .map_err(|e| HeightFieldError::UnsupportedRaster(e.to_string()))?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        let pixels: Vec<f64> = match img {
            image::DynamicImage::ImageLuma8(g) => {
                g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect()
            }
            image::DynamicImage::ImageLuma16(g) => g
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
            other => {
                return Err(HeightFieldError::UnsupportedRaster(format!(
                    "{:?} raster is not grayscale",
                    other.color()
                )))
            }
        };
        Self::new(width, height, pixels)
    }
}

fn pad(
    values: &[f64],
    rows: usize,
    cols: usize,
    width: usize,
    value: f64,
) -> (Vec<f64>, usize, usize) {
    let pr = rows + 2 * width;
    let pc = cols + 2 * width;
    let mut out = vec![value; pr * pc];
    for r in 0..rows {
        let dst = (r + width) * pc + width;
        out[dst..dst + cols].copy_from_slice(&values[r * cols..(r + 1) * cols]);
    }
    (out, pr, pc)
}

/// Binarize: pixels at or above `threshold` become `height_scale`, the rest 0,
/// then a zero border of [`DEFAULT_PAD_WIDTH`] rings is added. One cell per pixel
/// at 1 mm spacing; grid row `i` is image row `i`.
pub fn from_image(raster: &Raster, threshold: f64, height_scale: f64) -> Result<HeightField> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(HeightFieldError::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if !(height_scale.is_finite() && height_scale > 0.0) {
        return Err(HeightFieldError::InvalidParameter(format!(
            "height scale must be positive, got {height_scale}"
        )));
    }
    let binary: Vec<f64> = raster
        .pixels
        .iter()
        .map(|&p| if p >= threshold { height_scale } else { 0.0 })
        .collect();
    let (heights, rows, cols) = pad(&binary, raster.height, raster.width, DEFAULT_PAD_WIDTH, 0.0);
    HeightField::new(rows, cols, 1.0, heights, 0.0)
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(HeightFieldError::NonFiniteValue { index }),
        None => Ok(()),
    }
}

/// Multiply by `scale`. Scales of the form `1/n` divide by `n` instead, so a
/// 1/50 scale gives exactly `v / 50.0`.
pub fn apply_scale(v: f64, scale: f64) -> f64 {
    let n = 1.0 / scale;
    if n.fract() == 0.0 && 1.0 / n == scale {
        v / n
    } else {
        v * scale
    }
}

/// Reshape a flat stream into rows of `spec.length_x`, scale, then pad.
pub fn from_flat_grid(values: &[f64], spec: &GridSourceSpec) -> Result<HeightField> {
    spec.check(values.len())?;
    check_finite(values)?;
    let scaled: Vec<f64> = values.iter().map(|&v| apply_scale(v, spec.scale)).collect();
    let rows = spec.total / spec.length_x;
    let (heights, pr, pc) = pad(&scaled, rows, spec.length_x, spec.pad_width, spec.pad_value);
    let base = heights.iter().copied().fold(f64::INFINITY, f64::min);
    if base < 0.0 {
        let index = heights.iter().position(|&h| h < 0.0).unwrap_or(0);
        return Err(HeightFieldError::BelowBase {
            index,
            value: heights[index],
            base: 0.0,
        });
    }
    HeightField::new(pr, pc, 1.0, heights, base)
}

/// Depth clamp: values inside `[lo, hi]` pass, everything else becomes `hi`.
pub fn bound(v: f64, lo: f64, hi: f64) -> f64 {
    if v >= lo && v <= hi {
        v
    } else {
        hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthOptions {
    pub lo: f64,
    pub hi: f64,
    /// Reverse each row to undo the camera's mirror image.
    pub mirror: bool,
    /// Convert depth to height (`hi·scale − depth·scale`) so near objects stand tall.
    pub invert: bool,
}

impl Default for DepthOptions {
    fn default() -> Self {
        Self {
            lo: DEFAULT_DEPTH_LO,
            hi: DEFAULT_DEPTH_HI,
            mirror: false,
            invert: true,
        }
    }
}

/// Depth-camera grid. `spec.pad_value` is ignored; the border is always
/// `hi · scale` before inversion, which becomes 0 after it.
pub fn from_depth_grid(
    values: &[f64],
    spec: &GridSourceSpec,
    opts: DepthOptions,
) -> Result<HeightField> {
    let DepthOptions {
        lo,
        hi,
        mirror,
        invert,
    } = opts;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(HeightFieldError::InvalidParameter(format!(
            "depth bounds must satisfy 0 < lo < hi, got lo {lo}, hi {hi}"
        )));
    }
    spec.check(values.len())?;
    check_finite(values)?;
    let top = apply_scale(hi, spec.scale);
    let mut grid: Vec<f64> = values
        .iter()
        .map(|&v| apply_scale(bound(v, lo, hi), spec.scale))
        .collect();
    if mirror {
        for row in grid.chunks_mut(spec.length_x) {
            row.reverse();
        }
    }
    let rows = spec.total / spec.length_x;
    let (mut heights, pr, pc) = pad(&grid, rows, spec.length_x, spec.pad_width, top);
    if invert {
        for h in &mut heights {
            *h = top - *h;
        }
        if heights.iter().all(|&h| h <= 0.0) {
            return Err(HeightFieldError::AllBelowFloor);
        }
        HeightField::new(pr, pc, 1.0, heights, 0.0)
    } else {
        let base = heights.iter().copied().fold(f64::INFINITY, f64::min);
        HeightField::new(pr, pc, 1.0, heights, base)
    }
}

/// Contents of a whitespace-separated grid text file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridText {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub values: Vec<f64>,
}

/// Parse grid text: optional `Width N` / `Height M` header lines, then
/// whitespace-separated reals in row-major order. A `[0,0,0]` sentinel line
/// is dropped.
pub fn parse_grid_text(text: &str) -> Result<GridText> {
    let mut out = GridText {
        width: None,
        height: None,
        values: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.replace(' ', "") == "[0,0,0]" {
            continue;
        }
        let mut words = line.split_whitespace();
        let first = words.next().unwrap_or_default();
        let header = match first.to_ascii_lowercase().as_str() {
            "width" => Some(&mut out.width),
            "height" => Some(&mut out.height),
            _ => None,
        };
        if let Some(slot) = header {
            let n = words
                .next()
                .and_then(|w| w.parse::<usize>().ok())
                .filter(|_| words.next().is_none())
                .ok_or_else(|| HeightFieldError::Parse {
                    line: line_no,
                    message: format!("expected `{first} <count>`"),
                })?;
            *slot = Some(n);
            continue;
        }
        for word in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|w| !w.is_empty())
        {
            let v: f64 = word.parse().map_err(|_| HeightFieldError::Parse {
                line: line_no,
                message: format!("`{word}` is not a number"),
            })?;
            out.values.push(v);
        }
    }
    Ok(out)
}
