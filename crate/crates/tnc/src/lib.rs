//! Compiler and verification toolkit for turning polynomial ODE systems into
//! transcriptional networks.
//!
//! A transcriptional network constrains every variable `w` to
//! `w' = production - gamma * w` where the production is a positive Laurent
//! polynomial and `gamma` is one shared decay rate. [`transform::compile`]
//! rewrites an arbitrary polynomial system into that form by representing
//! each variable as a ratio `x = x_T / x_B` of two network species;
//! [`verify`] then certifies, symbolically and numerically, that the
//! compiled network reproduces the original trajectories.

pub mod corpus;
pub mod expr;
pub mod odesys;
pub mod sim;
pub mod solver;
pub mod svg;
pub mod sysfile;
pub mod transform;
pub mod verify;

pub use expr::{parse_expr, parse_rational, LaurentPolynomial, Monomial, Rational};
