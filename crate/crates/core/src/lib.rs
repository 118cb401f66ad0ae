//! Symbolic–numeric engine for the pseudohermitian and CR tractor
//! invariants of strictly pseudoconvex hypersurfaces in `C^2`.
//!
//! The crate is `no_std` (it needs `alloc`). Everything is expressed as
//! ambient symbolic expressions in the Wirtinger coordinates
//! `z1, z2, zb1, zb2`, differentiated exactly and evaluated numerically at
//! boundary points.
//!
//! Module map:
//! - [`expr`]: interned expression DAG, differentiation, evaluation, parsing
//! - [`geometry`]: contact form, adapted frame, Tanaka–Webster connection
//! - [`calculus`]: weighted covariant derivatives and commutator checks
//! - [`invariants`]: `R`, `T_1`, `S`, `Q_11`, `Y_1`, the obstruction density,
//!   the Monge–Ampère operator
//! - [`tractor`]: standard tractors, tractor connection and curvature
//! - [`automorphism`]: holomorphic fields, potentials, tangency, prolongation
//! - [`presets`]: named test surfaces and the holomorphic field battery
//! - [`quadrature`]: boundary grids and integration of weight `(-2,-2)`
//!   densities

#![no_std]

extern crate alloc;

pub mod expr;
pub mod calculus;
pub mod geometry;
pub mod invariants;
pub mod tractor;
pub mod automorphism;
pub mod quadrature;
pub mod presets;

pub use expr::{Expr, ExprPool, VarId, C64};
