//! The book's chapters, compiled as doc-tests so every listing in
//! `book/src` is checked by `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/corpus.md")]
pub mod corpus {}
#[doc = include_str!("../../../book/src/search.md")]
pub mod search {}
#[doc = include_str!("../../../book/src/mining.md")]
pub mod mining {}
#[doc = include_str!("../../../book/src/concept-space.md")]
pub mod concept_space {}
#[doc = include_str!("../../../book/src/relatedness.md")]
pub mod relatedness {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/significance.md")]
pub mod significance {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
