//! 5×5 spatial convolution in two interchangeable forms.
//!
//! [`convolve_direct`] is the reference path: a plain nested loop over the
//! kernel support. [`convolve_streaming`] computes the same result the way
//! the hardware it models does — pixels are ingested row-major into five
//! line buffers, a 5×5 window of delay taps slides along, and five per-row
//! MAC units produce partial sums that are added, rectified, scaled and
//! narrowed back to 8 bits.
//!
//! Both paths use zero padding outside the image and true convolution
//! (the kernel is flipped relative to a correlation): the output pixel at
//! `(x, y)` is
//!
//! ```text
//! out(x, y) = narrow( Σ_r Σ_c k[r][c] · in(x - (c-2), y - (r-2)) , divisor )
//! ```
//!
//! so a delta kernel offset from the center by `(dr, dc)` shifts the image
//! content by `(dr, dc)`. Streaming and direct outputs are pixel-identical
//! whenever the streaming path's 5×5 minimum size is met.

use std::str::FromStr;

use thiserror::Error;

use crate::imaging::ImagePlane;

/// Kernels are fixed at 5×5; the line-buffer architecture is hardwired to
/// five rows.
pub const KERNEL_SIZE: usize = 5;

/// Largest accepted coefficient magnitude (a signed 16-bit MAC operand).
pub const MAX_COEFFICIENT: i32 = 32767;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("kernel divisor must be at least 1")]
    ZeroDivisor,
    #[error("coefficient {value} outside [-{max}, {max}]", max = MAX_COEFFICIENT)]
    CoefficientRange { value: i32 },
    #[error("expected 26 integers (25 coefficients then a divisor), found {found}")]
    TokenCount { found: usize },
    #[error("invalid integer {token:?} in kernel text")]
    BadInteger { token: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("plane {width}x{height} is too small for the streaming filter (the five line buffers never fill below 5x5)")]
    TooSmall { width: u32, height: u32 },
}

/// A 5×5 integer coefficient matrix with a positive divisor.
///
/// The divisor is the fixed-point scaling factor applied after
/// accumulation: dividing by 25 turns an all-ones kernel into a box mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    coefficients: [[i16; KERNEL_SIZE]; KERNEL_SIZE],
    divisor: u32,
}

impl Kernel {
    pub fn new(
        coefficients: [[i16; KERNEL_SIZE]; KERNEL_SIZE],
        divisor: u32,
    ) -> Result<Self, KernelError> {
        if divisor == 0 {
            return Err(KernelError::ZeroDivisor);
        }
        for row in &coefficients {
            for &c in row {
                if (c as i32).abs() > MAX_COEFFICIENT {
                    return Err(KernelError::CoefficientRange { value: c as i32 });
                }
            }
        }
        Ok(Self {
            coefficients,
            divisor,
        })
    }

    /// The 5×5 smoothing kernel: all 25 coefficients 1, divisor 25.
    pub fn box5() -> Self {
        Self {
            coefficients: [[1; KERNEL_SIZE]; KERNEL_SIZE],
            divisor: 25,
        }
    }

    /// Center coefficient 1, everything else 0, divisor 1: passes the
    /// image through unchanged.
    pub fn identity() -> Self {
        let mut coefficients = [[0; KERNEL_SIZE]; KERNEL_SIZE];
        coefficients[2][2] = 1;
        Self {
            coefficients,
            divisor: 1,
        }
    }

    pub fn coefficient(&self, row: usize, col: usize) -> i16 {
        self.coefficients[row][col]
    }

    pub fn divisor(&self) -> u32 {
        self.divisor
    }

    /// Sum of all 25 coefficients.
    pub fn coefficient_sum(&self) -> i32 {
        self.coefficients
            .iter()
            .flatten()
            .map(|&c| c as i32)
            .sum()
    }
}

impl FromStr for Kernel {
    type Err = KernelError;

    /// Parses the textual form used by the CLI: 26 whitespace-separated
    /// integers, 25 row-major coefficients followed by the divisor.
    fn from_str(s: &str) -> Result<Self, KernelError> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        if tokens.len() != 26 {
            return Err(KernelError::TokenCount {
                found: tokens.len(),
            });
        }
        let mut values = [0i32; 26];
        for (slot, token) in values.iter_mut().zip(&tokens) {
            *slot = token.parse().map_err(|_| KernelError::BadInteger {
                token: (*token).to_owned(),
            })?;
        }
        let mut coefficients = [[0i16; KERNEL_SIZE]; KERNEL_SIZE];
        for (i, &v) in values[..25].iter().enumerate() {
            if v.abs() > MAX_COEFFICIENT {
                return Err(KernelError::CoefficientRange { value: v });
            }
            coefficients[i / 5][i % 5] = v as i16;
        }
        let divisor = values[25];
        if divisor < 1 {
            return Err(KernelError::ZeroDivisor);
        }
        Kernel::new(coefficients, divisor as u32)
    }
}

/// Rectifies, scales and narrows an accumulator to an 8-bit intensity:
/// `min(255, |acc| / divisor)` with truncating division.
///
/// `divisor` must be at least 1; [`Kernel`] construction guarantees this
/// for every kernel-derived call.
pub fn saturate_narrow(acc: i32, divisor: u32) -> u8 {
    assert!(divisor >= 1, "divisor must be positive");
    (acc.unsigned_abs() / divisor).min(255) as u8
}

/// Reference convolution: direct evaluation of the filtering sum at every
/// output pixel, with zero padding outside the image.
///
/// Output dimensions equal input dimensions. This path has no minimum
/// size and serves as the oracle for [`convolve_streaming`].
pub fn convolve_direct(plane: &ImagePlane, kernel: &Kernel) -> ImagePlane {
    let acc = convolve_accumulate(plane, kernel);
    let pixels = acc
        .into_iter()
        .map(|a| saturate_narrow(a, kernel.divisor))
        .collect();
    ImagePlane::new(plane.width(), plane.height(), pixels)
        .expect("output has input dimensions")
}

/// The accumulator image before rectification and narrowing. Linear in the
/// input: useful for reasoning about the filter separately from the 8-bit
/// output stage.
fn convolve_accumulate(plane: &ImagePlane, kernel: &Kernel) -> Vec<i32> {
    let w = plane.width() as isize;
    let h = plane.height() as isize;
    let mut acc = vec![0i32; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0i32;
            for r in 0..KERNEL_SIZE {
                for c in 0..KERNEL_SIZE {
                    let sy = y - (r as isize - 2);
                    let sx = x - (c as isize - 2);
                    if sy >= 0 && sy < h && sx >= 0 && sx < w {
                        let p = plane.get(sx as u32, sy as u32) as i32;
                        sum += kernel.coefficients[r][c] as i32 * p;
                    }
                }
            }
            acc[(y * w + x) as usize] = sum;
        }
    }
    acc
}

/// The five line buffers and the 5×5 tap window of the streaming engine.
///
/// `rows` holds the five most recently ingested image rows in rotation
/// (row `y` lives in slot `y % 5`). `window[age][delay]` is the tap for
/// the pixel at `(x - delay, y - age)` relative to the current stream
/// position; taps start at zero each row, which realizes the zero padding
/// on the left edge exactly as registers that reset do.
struct LineBufferState {
    rows: [Vec<u8>; KERNEL_SIZE],
    rows_ingested: usize,
    pixels_written: usize,
    window: [[u8; KERNEL_SIZE]; KERNEL_SIZE],
}

impl LineBufferState {
    fn new(width: usize) -> Self {
        Self {
            rows: std::array::from_fn(|_| vec![0u8; width]),
            rows_ingested: 0,
            pixels_written: 0,
            window: [[0; KERNEL_SIZE]; KERNEL_SIZE],
        }
    }

    /// Rows currently held, never more than the five buffer lines.
    #[cfg(test)]
    fn occupancy(&self) -> usize {
        self.rows_ingested.min(KERNEL_SIZE)
    }

    fn begin_row(&mut self) {
        self.window = [[0; KERNEL_SIZE]; KERNEL_SIZE];
    }

    fn write_pixel(&mut self, row: usize, x: usize, value: u8) {
        self.rows[row % KERNEL_SIZE][x] = value;
        self.pixels_written += 1;
    }

    fn stored_pixel(&self, row: usize, x: usize) -> u8 {
        self.rows[row % KERNEL_SIZE][x]
    }

    fn end_row(&mut self) {
        self.rows_ingested += 1;
    }

    /// Advances every tap delay line by one column.
    fn shift_in(&mut self, taps: [u8; KERNEL_SIZE]) {
        for (age, line) in self.window.iter_mut().enumerate() {
            line.copy_within(0..KERNEL_SIZE - 1, 1);
            line[0] = taps[age];
        }
    }

    /// Five MAC engines, one per buffered row, each forming the dot
    /// product of a kernel row with its delay taps; the five partial sums
    /// are then added sequentially.
    fn mac_sum(&self, kernel: &Kernel) -> i32 {
        let mut total = 0i32;
        for age in 0..KERNEL_SIZE {
            let mut mac = 0i32;
            for delay in 0..KERNEL_SIZE {
                mac += kernel.coefficients[age][delay] as i32
                    * self.window[age][delay] as i32;
            }
            total += mac;
        }
        total
    }
}

/// Streaming convolution through the line-buffer engine.
///
/// Pixel-identical to [`convolve_direct`] on the same inputs. The engine
/// carries a two-row, two-column latency which is compensated here: two
/// flush rows and two flush columns of zeros push the final outputs out,
/// so the result is aligned with the input and has the same size.
///
/// Fails with [`FilterError::TooSmall`] below 5×5, where the line buffers
/// never fill.
pub fn convolve_streaming(plane: &ImagePlane, kernel: &Kernel) -> Result<ImagePlane, FilterError> {
    let w = plane.width() as usize;
    let h = plane.height() as usize;
    if w < KERNEL_SIZE || h < KERNEL_SIZE {
        return Err(FilterError::TooSmall {
            width: plane.width(),
            height: plane.height(),
        });
    }

    let mut state = LineBufferState::new(w);
    let mut out = vec![0u8; w * h];

    for y in 0..h + 2 {
        state.begin_row();
        for x in 0..w + 2 {
            if y < h && x < w {
                state.write_pixel(y, x, plane.get(x as u32, y as u32));
            }
            let mut taps = [0u8; KERNEL_SIZE];
            if x < w {
                for (age, tap) in taps.iter_mut().enumerate() {
                    if y >= age && y - age < h {
                        *tap = state.stored_pixel(y - age, x);
                    }
                }
            }
            state.shift_in(taps);
            if x >= 2 && y >= 2 {
                let acc = state.mac_sum(kernel);
                out[(y - 2) * w + (x - 2)] = saturate_narrow(acc, kernel.divisor);
            }
        }
        if y < h {
            state.end_row();
        }
    }

    Ok(ImagePlane::new(plane.width(), plane.height(), out)
        .expect("output has input dimensions"))
}
