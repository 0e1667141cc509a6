//! Generalized quasi-Einstein structures `Ric + ∇²f − ν df⊗df = λg` on
//! conformally flat ℝⁿ, `g = g₀/φ²`: construction from radial and
//! translation-invariant profiles, and numerical verification of the
//! associated differential identities against a finite-difference oracle.
//!
//! Radial profiles are functions of the **squared** norm `r = ‖x‖²`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod examples;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod gqe;
pub mod oracle;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod rigidity;
pub mod suite;
pub mod tensor;

pub use error::Error;
pub use gqe::{GQEStructure, PhiTransform};
pub use report::{Check, VerificationReport};
pub use fields::{field_jet, FieldJet, ScalarFieldRn, SymmetryKind};
pub use profiles::{parse_profile, profile_derivatives, Profile1D, ProfileError};
pub use tensor::{traceless, SymTensor};
