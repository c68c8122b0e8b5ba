//! Probabilistic projection temporal logic over discrete time: formulas
//! with timed next and timed chop, time normal forms, normal form graphs,
//! and exact model checking of discrete-time Markov chains.
//!
//! The crate is `no_std` (with `alloc`); parsing, rewriting, and checking
//! all work without an operating system. Probabilities are exact rationals.
#![no_std]

extern crate alloc;

pub mod bound;
pub mod checker;
pub mod corpus;
pub mod formula;
pub mod guard;
pub mod markov;
pub mod parser;
pub mod semantics;
pub mod tnf;
pub mod tnfg;

/// Exact probability values used throughout the crate.
pub type Rational = num_rational::BigRational;
