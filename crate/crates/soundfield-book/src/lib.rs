//! Doc-test shim for the user guide in `book/` and the workspace README.
//!
//! Each chapter of the mdbook guide is included as the documentation of one
//! empty module, so `cargo test --doc -p soundfield-book` compiles and runs
//! every Rust snippet in the book. A failing snippet points at its chapter
//! by module name. The crate exports nothing and is never published.

#[doc = include_str!("../../../README.md")]
pub mod readme {}

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/coordinate-mapping.md")]
pub mod coordinate_mapping {}

#[doc = include_str!("../../../book/src/trajectories.md")]
pub mod trajectories {}

#[doc = include_str!("../../../book/src/coarse-scheme.md")]
pub mod coarse_scheme {}

#[doc = include_str!("../../../book/src/impulse-responses.md")]
pub mod impulse_responses {}

#[doc = include_str!("../../../book/src/rendering.md")]
pub mod rendering {}

#[doc = include_str!("../../../book/src/dataset.md")]
pub mod dataset {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}

#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}
