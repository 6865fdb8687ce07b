//! Single-mode SU(1,1) algebra eigenstates and intelligent states.
//!
//! The two-photon realization K₊ = a†²/2, K₋ = a²/2, K₃ = (a†a + 1/2)/2
//! splits the Fock space into an even (Bargmann index k = 1/4) and an odd
//! (k = 3/4) sector. This crate builds normalizable eigenstates of a general
//! combination β₁K₁ + β₂K₂ + β₃K₃ in closed form, computes their photon
//! statistics and squeezing observables exactly, and simulates the optical
//! protocol (squeezer, two-mode mixer, photon-number measurement) that
//! prepares them.
//!
//! Layering:
//! - [`specfun`]: Jacobi polynomials with degree-dependent parameters and the
//!   Gauss hypergeometric series.
//! - [`fock`]: truncated-Fock-space operators and a brute-force oracle that
//!   builds the same states by recursion and measures them by contraction.
//! - [`states`]: spectral classification of β·K and closed-form amplitudes.
//! - [`moments`]: closed-form observable reports for the four state families.
//! - [`scheme`]: the conditional-measurement generation protocol.
//!
//! The oracle layer shares no numerics with the closed forms, so agreement
//! between the two is a real check rather than a tautology.

pub mod fock;
pub mod moments;
pub mod scheme;
pub mod specfun;
pub mod states;

pub use fock::{FockError, FockVector, OperatorKind, OperatorMatrix, Representation};
pub use moments::{
    Family, GeneratorPair, K3Moments, LimitPrediction, MomentsError, MomentsReport, Regime,
    SqueezingFlags,
};
pub use scheme::{
    MeasuredMode, PostTransform, ProtocolOutcome, SchemeError, SchemeParams, TargetFamily,
};
pub use states::{AnalyticState, BetaVector, EigenvalueSign, SpectralClass, SpectralData, StateError};
