//! Deterministic simulator and estimator library for preamble-based OFDM
//! channel estimation.
//!
//! The frame model is an 802.11p-style OFDM symbol (64 FFT bins, 52 active
//! subcarriers, two identical BPSK training symbols). On top of it the crate
//! implements:
//!
//! * classic least-squares (LS) and linear MMSE channel estimators,
//! * a DNN-augmented LS estimator (an MLP trained to denoise the LS output),
//!   including from-scratch training (backprop + ADAM),
//! * fixed-point word-length emulation for the LS and DNN inference paths,
//! * Monte Carlo evaluation (NMSE and BER) over configurable channel models,
//! * a reproducible run harness: datasets, model files, reports, registry.
//!
//! Everything is deterministic given a seed: random draws come from counter
//! addressed ChaCha streams, so results do not depend on thread count or
//! evaluation order.
//!
//! Core math is generic over the scalar type through [`real::Real`]
//! (implemented for `f32` and `f64`); the harness and all file formats use
//! `f64`. The aliases below fix the common concrete choice.

pub mod channel;
pub mod dnn;
pub mod estimators;
pub mod harness;
pub mod numerics;
pub mod phy;
pub mod quant;
pub mod real;
pub mod sim;

/// Complex sample in the default (double) precision.
pub type C64 = numerics::Cplx<f64>;
/// Complex sample in single precision.
pub type C32 = numerics::Cplx<f32>;
/// Dense complex matrix in the default precision.
pub type Mat64 = numerics::CplxMatrix<f64>;
/// MLP model in the default precision.
pub type Model64 = dnn::DnnModel<f64>;
