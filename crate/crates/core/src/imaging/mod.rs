//! Raster data types and image file I/O.
//!
//! Everything downstream operates on three owned, immutable-after-construction
//! types: [`ImagePlane`] (one 8-bit channel), [`RgbImage`] (three planes of
//! identical size), and [`BinaryPlane`] (a 0/1 mask). Pixels are stored
//! row-major; `(x, y)` is `(column, row)` with the origin at the top left.
//!
//! File I/O is restricted to binary PGM (`P5`) and PPM (`P6`) with maxval
//! 255 — the simplest containers that round-trip 8-bit pixel data
//! byte-exactly. See [`load_image`] / [`save_image`].

use std::fmt;

use thiserror::Error;

mod pnm;

pub use pnm::{load_image, read_image, save_image, write_image, PnmError};

/// Largest accepted width or height for loaded or transmitted images.
///
/// In-memory construction is not capped; the limit guards the PNM loader and
/// the frame decoder against hostile headers declaring absurd dimensions.
pub const MAX_DIMENSION: u32 = 16384;

/// Validation failure for raster construction.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be nonzero, got {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} values, expected {expected} for {width}x{height}")]
    PixelCount {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("binary plane value at index {index} is {value}, expected 0 or 1")]
    NonBinaryPixel { index: usize, value: u8 },
    #[error("channel planes differ in size: red {red_w}x{red_h}, green {green_w}x{green_h}, blue {blue_w}x{blue_h}")]
    ChannelMismatch {
        red_w: u32,
        red_h: u32,
        green_w: u32,
        green_h: u32,
        blue_w: u32,
        blue_h: u32,
    },
}

/// A single 8-bit channel: `width * height` intensity values, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct ImagePlane {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl fmt::Debug for ImagePlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ImagePlane({}x{})", self.width, self.height)
    }
}

impl ImagePlane {
    /// Builds a plane from row-major pixel data.
    ///
    /// Fails if either dimension is zero or `pixels.len() != width * height`.
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageError::PixelCount {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A plane with every pixel set to `value`.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        Ok(Self {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Pixel at column `x`, row `y`. Panics if out of bounds.
    pub fn get(&self, x: u32, y: u32) -> u8 {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// One full row of pixels.
    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.pixels[start..start + w]
    }
}

/// Three equally sized channel planes.
#[derive(Clone, PartialEq, Eq)]
pub struct RgbImage {
    red: ImagePlane,
    green: ImagePlane,
    blue: ImagePlane,
}

impl fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RgbImage({}x{})", self.width(), self.height())
    }
}

impl RgbImage {
    /// Assembles an image from its channel planes, which must agree in size.
    ///
    /// This is the inverse of [`RgbImage::split_channels`].
    pub fn from_channels(
        red: ImagePlane,
        green: ImagePlane,
        blue: ImagePlane,
    ) -> Result<Self, ImageError> {
        if red.width != green.width
            || red.width != blue.width
            || red.height != green.height
            || red.height != blue.height
        {
            return Err(ImageError::ChannelMismatch {
                red_w: red.width,
                red_h: red.height,
                green_w: green.width,
                green_h: green.height,
                blue_w: blue.width,
                blue_h: blue.height,
            });
        }
        Ok(Self { red, green, blue })
    }

    /// Builds an image from interleaved `RGBRGB...` bytes, row-major.
    pub fn from_interleaved(width: u32, height: u32, data: &[u8]) -> Result<Self, ImageError> {
        let n = width as usize * height as usize;
        if data.len() != n * 3 {
            return Err(ImageError::PixelCount {
                width,
                height,
                expected: n * 3,
                actual: data.len(),
            });
        }
        let mut red = Vec::with_capacity(n);
        let mut green = Vec::with_capacity(n);
        let mut blue = Vec::with_capacity(n);
        for px in data.chunks_exact(3) {
            red.push(px[0]);
            green.push(px[1]);
            blue.push(px[2]);
        }
        Ok(Self {
            red: ImagePlane::new(width, height, red)?,
            green: ImagePlane::new(width, height, green)?,
            blue: ImagePlane::new(width, height, blue)?,
        })
    }

    /// Interleaved `RGBRGB...` bytes, row-major. Inverse of
    /// [`RgbImage::from_interleaved`].
    pub fn interleave(&self) -> Vec<u8> {
        let n = self.red.pixels.len();
        let mut out = Vec::with_capacity(n * 3);
        for i in 0..n {
            out.push(self.red.pixels[i]);
            out.push(self.green.pixels[i]);
            out.push(self.blue.pixels[i]);
        }
        out
    }

    /// Takes the image apart into its red, green and blue planes.
    ///
    /// The planes are moved out untouched; no pixel value changes.
    pub fn split_channels(self) -> (ImagePlane, ImagePlane, ImagePlane) {
        (self.red, self.green, self.blue)
    }

    pub fn red(&self) -> &ImagePlane {
        &self.red
    }

    pub fn green(&self) -> &ImagePlane {
        &self.green
    }

    pub fn blue(&self) -> &ImagePlane {
        &self.blue
    }

    pub fn width(&self) -> u32 {
        self.red.width
    }

    pub fn height(&self) -> u32 {
        self.red.height
    }
}

/// A two-valued mask: every pixel is 0 (background) or 1 (foreground).
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryPlane {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl fmt::Debug for BinaryPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryPlane({}x{})", self.width, self.height)
    }
}

impl BinaryPlane {
    /// Builds a mask from row-major 0/1 values.
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageError::PixelCount {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        if let Some((index, &value)) = pixels.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(ImageError::NonBinaryPixel { index, value });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Pixel at column `x`, row `y`. Panics if out of bounds.
    pub fn get(&self, x: u32, y: u32) -> u8 {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Number of foreground (1) pixels.
    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&v| v == 1).count()
    }

    /// Expands the mask to a displayable plane: 0 stays 0, 1 becomes 255.
    pub fn to_display(&self) -> ImagePlane {
        ImagePlane {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| if v == 1 { 255 } else { 0 }).collect(),
        }
    }
}

/// An image of either channel layout, as produced by the loader.
///
/// Grayscale files (`P5`) travel the single-channel path; color files (`P6`)
/// carry three planes. The distinction is made by file magic, never by
/// content inspection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Image {
    Gray(ImagePlane),
    Rgb(RgbImage),
}

impl Image {
    pub fn width(&self) -> u32 {
        match self {
            Image::Gray(p) => p.width(),
            Image::Rgb(i) => i.width(),
        }
    }

    pub fn height(&self) -> u32 {
        match self {
            Image::Gray(p) => p.height(),
            Image::Rgb(i) => i.height(),
        }
    }

    /// 1 for grayscale, 3 for RGB.
    pub fn channels(&self) -> u8 {
        match self {
            Image::Gray(_) => 1,
            Image::Rgb(_) => 3,
        }
    }
}

impl From<ImagePlane> for Image {
    fn from(p: ImagePlane) -> Self {
        Image::Gray(p)
    }
}

impl From<RgbImage> for Image {
    fn from(i: RgbImage) -> Self {
        Image::Rgb(i)
    }
}
