//! Diagrammatic planar algebras for the two-dimensional unipotent
//! representation over Q and F_p: automata, bases, evaluation and
//! skein normalization.

pub mod exactnum;
pub mod unirep;
pub mod wordlang;
pub mod tangle;
pub mod evalfun;
pub mod basisgen;
pub mod skein;
pub mod suites;
