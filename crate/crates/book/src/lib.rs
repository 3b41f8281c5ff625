//! The guide's chapters, one module each, so that `cargo test` compiles and
//! runs every listing in `book/src`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/diffusion.md")]
pub mod diffusion {}

#[doc = include_str!("../../../book/src/auction.md")]
pub mod auction {}

#[doc = include_str!("../../../book/src/fairness.md")]
pub mod fairness {}

#[doc = include_str!("../../../book/src/learning.md")]
pub mod learning {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
