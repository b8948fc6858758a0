//! Program-repair pipeline engine.
//!
//! The crate covers the non-neural half of a learning-based repair tool:
//!
//! * [`corpus`] mines buggy/fixed hunk pairs from file pairs or unified diffs
//!   and filters them into training instances.
//! * [`context`] finds the surrounding context of a buggy hunk (outermost
//!   enclosing function, or a small line window).
//! * [`retrieval`] embeds the remaining lines of the buggy file and pulls the
//!   ones most similar to the hunk.
//! * [`encode`] renders the generator prompt and fits it to a token budget.
//! * [`generate`] defines the generator contract, with replay-file and HTTP
//!   backends and checkpoint-ensemble fan-out.
//! * [`rank`] merges per-checkpoint beams into one list per hunk and finds
//!   patches shared by every hunk.
//! * [`validate`] runs candidates against a test suite, including the
//!   two-phase multi-hunk search.
//! * [`pipeline`] wires the above together behind the `mendkit` commands.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

pub mod context;
pub mod corpus;
pub mod diff;
pub mod encode;
pub mod generate;
pub mod hunk;
pub mod lang;
pub mod lexer;
pub mod par;
pub mod pipeline;
pub mod rank;
pub mod retrieval;
pub mod text;
pub mod tokenize;
pub mod validate;

pub use hunk::HunkId;
pub use lang::Language;
