// mdbook cannot run Rust listings against a workspace crate, so each chapter
// is pulled in as the docs of an empty module and `cargo test` runs its code
// blocks as doctests. One module per chapter keeps failures traceable.

#[cfg(doctest)]
#[doc = include_str!("src/introduction.md")]
mod introduction {}
#[cfg(doctest)]
#[doc = include_str!("src/smiles.md")]
mod smiles {}
#[cfg(doctest)]
#[doc = include_str!("src/routes.md")]
mod routes {}
#[cfg(doctest)]
#[doc = include_str!("src/alignment.md")]
mod alignment {}
#[cfg(doctest)]
#[doc = include_str!("src/reward.md")]
mod reward {}
#[cfg(doctest)]
#[doc = include_str!("src/evaluation.md")]
mod evaluation {}
#[cfg(doctest)]
#[doc = include_str!("src/consensus.md")]
mod consensus {}
#[cfg(doctest)]
#[doc = include_str!("src/pipelines.md")]
mod pipelines {}
#[cfg(doctest)]
#[doc = include_str!("../README.md")]
mod readme {}
