//! Compiles every code snippet in the guide as a doctest.
//!
//! mdBook renders `book/` but does not run its Rust listings, so each
//! chapter is also attached here as module documentation and picked up
//! by `cargo test --doc`. A snippet that drifts from the library breaks
//! the build instead of silently rotting in the guide.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/images.md")]
pub mod images {}

#[doc = include_str!("../../../book/src/filtering.md")]
pub mod filtering {}

#[doc = include_str!("../../../book/src/thresholding.md")]
pub mod thresholding {}

#[doc = include_str!("../../../book/src/rc4.md")]
pub mod rc4 {}

#[doc = include_str!("../../../book/src/transport.md")]
pub mod transport {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
