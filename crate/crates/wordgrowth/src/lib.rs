//! Desk-scale experiments on the growth of monomial algebras, matrix wreath
//! products and enveloping algebras.
//!
//! Every module is a collection of pure functions over owned values. Counts
//! that can exceed machine words are carried as [`num_bigint::BigUint`].

// Index loops read more plainly than zipped iterators in the table arithmetic.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod growth;
pub mod oscillator;
pub mod pbw;
pub mod sbm;
pub mod toeplitz;
pub mod words;
pub mod wreath;

pub use error::{Error, Result};
pub use growth::{GrowthTab, Label};
