//! Symbolic engine for the cyclic categorified quantum group.
//!
//! The crate models graded planar string diagrams exactly (slice words with
//! region weights and exact Laurent-polynomial coefficients), rewrites them
//! modulo the defining relations, evaluates real and fake bubbles, implements
//! the rescaling isomorphism onto the classical presentation, and provides an
//! independent polynomial-representation oracle for the upward sector.

pub mod bubbles;
pub mod cartan;
pub mod cli;
pub mod diagram;
pub mod functor;
pub mod klr;
pub mod parse;
pub mod rewrite;
pub mod scalars;
