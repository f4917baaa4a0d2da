//! mdbook cannot compile snippets against workspace crates, so every chapter
//! is included here and `cargo test --doc` runs its code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}
#[doc = include_str!("../../../book/src/unimodularity.md")]
pub mod unimodularity {}
#[doc = include_str!("../../../book/src/generators.md")]
pub mod generators {}
#[doc = include_str!("../../../book/src/walks.md")]
pub mod walks {}
#[doc = include_str!("../../../book/src/forests.md")]
pub mod forests {}
#[doc = include_str!("../../../book/src/percolation.md")]
pub mod percolation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
