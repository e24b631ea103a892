//! Discrete gradient flows of eigenvalue functionals over Schrödinger
//! potentials.
//!
//! A [`forms::BilinearForm`] and a weight vector fix the operator
//! `L + MV`. An objective `H(V) = φ(λ₁(V), …, λ_J(V))` is lowered by the
//! implicit scheme `Vⁿ ∈ argmin H + K + |V − Vⁿ⁻¹|²_m / 2τ`, where `K` is
//! one of the constraint functionals in [`constraints`]. [`verify`] checks
//! the spectral inequalities the scheme relies on; [`cli`] drives runs from
//! a config file.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod constraints;
pub mod error;
pub mod flow;
pub mod forms;
pub mod objectives;
pub mod output;
pub mod sampling;
pub mod space;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
