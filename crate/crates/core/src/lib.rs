//! Hierarchies of isomorphic arithmetics generated by a bijection g, the
//! non-Newtonian calculus over them, and probabilistic applications: singlet
//! probabilities, Clauser-Horne inequalities at different levels, a
//! hierarchical law of large numbers, Renyi entropy, Fubini-Study ladders and
//! generalized complex numbers.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod arithmetic;
pub mod bell;
pub mod calculus;
pub mod entropy;
pub mod error;
pub mod fubini;
pub mod gcomplex;
pub mod generator;
pub mod lln;
pub mod probability;
pub mod quadrature;

pub use arithmetic::{compare, ArithmeticContext, Op};
pub use error::{Error, Result};
pub use generator::{Bijection, ExtendedGenerator, Generator, GeneratorConfig, IdentityMap};
