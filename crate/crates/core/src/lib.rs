//! Software model of a streaming image-binarization pipeline with an
//! encrypted point-to-point image link.
//!
//! The crate has three layers:
//!
//! * [`imaging`] — 8-bit raster types ([`imaging::ImagePlane`],
//!   [`imaging::RgbImage`], [`imaging::BinaryPlane`]) and bit-exact
//!   binary PGM/PPM file I/O.
//! * [`filter`] and [`threshold`] — a 5×5 convolution engine in two
//!   interchangeable forms (a direct reference path and a line-buffer
//!   streaming path) feeding a histogram-mean adaptive binarizer.
//! * [`rc4`] and [`transport`] — an RC4 stream cipher and a framed wire
//!   protocol that carries encrypted images between a sender and a
//!   receiver over any reliable byte stream.
//!
//! The `svip` binary exposes all of it as subcommands; see [`cli`].
//!
//! A longer, narrative walkthrough lives in the `book/` directory of the
//! repository (`mdbook build book`). Its code snippets are compiled and
//! run as doctests by the `svip-book-tests` crate, so the guide cannot
//! drift from the library.

pub mod cli;
pub mod filter;
pub mod imaging;
pub mod rc4;
pub mod threshold;
pub mod transport;
