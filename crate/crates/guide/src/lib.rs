// mdbook cannot run snippets that depend on workspace crates, so every
// chapter is pulled in here as a doc module and `cargo test --doc` runs its
// code blocks. One module per chapter keeps failures traceable to a file.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod chapter1 {}
#[doc = include_str!("../../../book/src/problems.md")]
pub mod chapter2 {}
#[doc = include_str!("../../../book/src/prox.md")]
pub mod chapter3 {}
#[doc = include_str!("../../../book/src/splitting.md")]
pub mod chapter4 {}
#[doc = include_str!("../../../book/src/inexact.md")]
pub mod chapter5 {}
#[doc = include_str!("../../../book/src/penalty.md")]
pub mod chapter6 {}
#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod chapter7 {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod chapter8 {}
