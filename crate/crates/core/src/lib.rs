//! Sequential quadratic SDP method for nonlinear semidefinite programs,
//! with an augmented Lagrangian baseline and four benchmark families.
#![no_std]

extern crate alloc;

pub mod almethod;
pub mod dense;
pub mod error;
pub mod merit;
pub mod model;
pub mod problems;
pub mod qsdp;
pub mod sqsdp;
pub mod symmat;
pub mod vomf;

pub use error::{Error, Result};
pub use model::{NsdpProblem, Triplet};
pub use symmat::{eig_sym, smat, svec, EigenDecomposition, SymMatrix};
