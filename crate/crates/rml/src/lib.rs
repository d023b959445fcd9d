//! Bounded analysis and fault localization for relational models.
//!
//! The pipeline: parse a `.rml` model, compile it and a checked property to
//! CNF over relation-tuple variables, find counterexamples with a SAT
//! solver, find nearest satisfying instances with a partial MaxSAT search,
//! and rank suspicious expressions by diffing the two.

pub mod ast;
pub mod bounds;
pub mod circuit;
pub mod enumerate;
pub mod eval;
pub mod frontend;
pub mod ground;
pub mod instance;
pub mod sat;
pub mod localize;
pub mod maxsat;
pub mod solve;

#[doc(hidden)]
pub mod testutil;

// mdbook can't run example code against the crate, so the guide's chapters
// are included here and `cargo test --doc` runs their snippets.
#[cfg(doctest)]
#[doc(hidden)]
pub mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/language.md")]
    pub mod language {}
    #[doc = include_str!("../../../book/src/instances.md")]
    pub mod instances {}
    #[doc = include_str!("../../../book/src/grounding.md")]
    pub mod grounding {}
    #[doc = include_str!("../../../book/src/solver.md")]
    pub mod solver {}
    #[doc = include_str!("../../../book/src/nearest.md")]
    pub mod nearest {}
    #[doc = include_str!("../../../book/src/localization.md")]
    pub mod localization {}
    #[doc = include_str!("../../../book/src/conflicts.md")]
    pub mod conflicts {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
