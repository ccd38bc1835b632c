//! Histogram-mean adaptive binarization.
//!
//! The pipeline per channel: smooth with the 5×5 box kernel through the
//! streaming filter, take the intensity histogram of the smoothed plane,
//! use the floored mean intensity as the threshold, and mark every pixel
//! at or above it as foreground. For color images the three channel masks
//! are combined with a pointwise OR.
//!
//! The threshold adapts to each image (and each channel) instead of being
//! a fixed constant, which is the whole point: a bright scan and a dim one
//! both split around their own mean.

use thiserror::Error;

use crate::filter::{convolve_streaming, FilterError, Kernel};
use crate::imaging::{BinaryPlane, ImagePlane, RgbImage};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThresholdError {
    #[error("cannot take the mean of zero pixels")]
    EmptyImage,
    #[error("plane sizes differ: {0}")]
    DimensionMismatch(String),
    #[error("threshold range [{low}, {high}] is inverted")]
    InvertedRange { low: u8, high: u8 },
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Intensity histogram: `counts[v]` pixels have value `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; 256],
}

impl Histogram {
    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn count(&self, value: u8) -> u64 {
        self.counts[value as usize]
    }

    /// Total number of counted pixels.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts every pixel of the plane.
pub fn histogram(plane: &ImagePlane) -> Histogram {
    histogram_strided(plane, 1)
}

/// Counts the pixels on a subsampling grid: rows and columns whose index
/// is a multiple of `stride`. Stride 1 covers the whole image.
pub fn histogram_strided(plane: &ImagePlane, stride: u32) -> Histogram {
    assert!(stride >= 1, "stride must be at least 1");
    let mut counts = [0u64; 256];
    if stride == 1 {
        for &p in plane.pixels() {
            counts[p as usize] += 1;
        }
    } else {
        let mut y = 0;
        while y < plane.height() {
            let row = plane.row(y);
            let mut x = 0usize;
            while x < row.len() {
                counts[row[x] as usize] += 1;
                x += stride as usize;
            }
            y += stride;
        }
    }
    Histogram { counts }
}

/// The floored mean intensity of the histogrammed pixels:
/// `⌊ Σ_v v·counts[v] / total ⌋`.
///
/// `total` must match the histogram's pixel count; a zero total is an
/// error. Note the floor: an image whose exact mean is below 1 (almost
/// black, a few faint pixels) maps to threshold 0 like an all-zero image.
pub fn mean_threshold(hist: &Histogram, total: u64) -> Result<u8, ThresholdError> {
    if total == 0 {
        return Err(ThresholdError::EmptyImage);
    }
    debug_assert_eq!(total, hist.total());
    let weighted: u64 = hist
        .counts
        .iter()
        .enumerate()
        .map(|(v, &n)| v as u64 * n)
        .sum();
    Ok((weighted / total) as u8)
}

/// An inclusive intensity band `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdRange {
    low: u8,
    high: u8,
}

impl ThresholdRange {
    /// Requires `low <= high`; the band is never empty.
    pub fn new(low: u8, high: u8) -> Result<Self, ThresholdError> {
        if low > high {
            return Err(ThresholdError::InvertedRange { low, high });
        }
        Ok(Self { low, high })
    }

    pub fn low(&self) -> u8 {
        self.low
    }

    pub fn high(&self) -> u8 {
        self.high
    }

    pub fn contains(&self, value: u8) -> bool {
        self.low <= value && value <= self.high
    }
}

/// Marks every pixel inside the band as 1, everything else as 0.
pub fn binarize(plane: &ImagePlane, range: ThresholdRange) -> BinaryPlane {
    let pixels = plane
        .pixels()
        .iter()
        .map(|&p| u8::from(range.contains(p)))
        .collect();
    BinaryPlane::new(plane.width(), plane.height(), pixels)
        .expect("0/1 values by construction")
}

/// Pointwise OR of three masks: a pixel is foreground when the sum of the
/// three channel bits is at least 1.
pub fn combine_rgb(
    r: &BinaryPlane,
    g: &BinaryPlane,
    b: &BinaryPlane,
) -> Result<BinaryPlane, ThresholdError> {
    let same = r.width() == g.width()
        && r.width() == b.width()
        && r.height() == g.height()
        && r.height() == b.height();
    if !same {
        return Err(ThresholdError::DimensionMismatch(format!(
            "r {}x{}, g {}x{}, b {}x{}",
            r.width(),
            r.height(),
            g.width(),
            g.height(),
            b.width(),
            b.height()
        )));
    }
    let pixels = r
        .pixels()
        .iter()
        .zip(g.pixels())
        .zip(b.pixels())
        .map(|((&rv, &gv), &bv)| u8::from(rv + gv + bv >= 1))
        .collect();
    Ok(BinaryPlane::new(r.width(), r.height(), pixels).expect("0/1 values by construction"))
}

/// Knobs for the full pipeline.
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    /// Histogram subsampling stride for the mean (1 = every pixel).
    pub stride: u32,
    /// Foreground below the mean instead of at-or-above it.
    pub invert: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            invert: false,
        }
    }
}

/// Result of the single-channel pipeline.
#[derive(Debug, Clone)]
pub struct GrayBinarization {
    pub output: BinaryPlane,
    /// The mean threshold computed from the smoothed plane.
    pub threshold: u8,
}

/// Result of the three-channel pipeline.
#[derive(Debug, Clone)]
pub struct ColorBinarization {
    pub output: BinaryPlane,
    /// Per-channel mean thresholds in R, G, B order.
    pub thresholds: [u8; 3],
}

fn binarize_channel(
    plane: &ImagePlane,
    opts: &PipelineOptions,
) -> Result<(BinaryPlane, u8), ThresholdError> {
    let smoothed = convolve_streaming(plane, &Kernel::box5())?;
    let hist = histogram_strided(&smoothed, opts.stride);
    let threshold = mean_threshold(&hist, hist.total())?;
    let out = if opts.invert {
        if threshold == 0 {
            // the complement of [0, 255] is empty: nothing is foreground
            BinaryPlane::new(
                plane.width(),
                plane.height(),
                vec![0; plane.pixels().len()],
            )
            .expect("zeros are valid")
        } else {
            binarize(&smoothed, ThresholdRange::new(0, threshold - 1)?)
        }
    } else {
        binarize(&smoothed, ThresholdRange::new(threshold, 255)?)
    };
    Ok((out, threshold))
}

/// Full single-channel pipeline: smooth, mean threshold, binarize.
pub fn binarize_gray_with(
    plane: &ImagePlane,
    opts: &PipelineOptions,
) -> Result<GrayBinarization, ThresholdError> {
    let (output, threshold) = binarize_channel(plane, opts)?;
    Ok(GrayBinarization { output, threshold })
}

/// [`binarize_gray_with`] with default options.
pub fn binarize_gray(plane: &ImagePlane) -> Result<BinaryPlane, ThresholdError> {
    Ok(binarize_gray_with(plane, &PipelineOptions::default())?.output)
}

/// Full color pipeline: split channels, run the single-channel pipeline
/// on each, then OR the three masks together.
pub fn binarize_color_with(
    img: &RgbImage,
    opts: &PipelineOptions,
) -> Result<ColorBinarization, ThresholdError> {
    let (r, tr) = binarize_channel(img.red(), opts)?;
    let (g, tg) = binarize_channel(img.green(), opts)?;
    let (b, tb) = binarize_channel(img.blue(), opts)?;
    Ok(ColorBinarization {
        output: combine_rgb(&r, &g, &b)?,
        thresholds: [tr, tg, tb],
    })
}

/// [`binarize_color_with`] with default options.
pub fn binarize_color(img: &RgbImage) -> Result<BinaryPlane, ThresholdError> {
    Ok(binarize_color_with(img, &PipelineOptions::default())?.output)
}
