//! Shared numeric foundations: complex scalars, explicit complex division,
//! direct DFT of tap profiles, dense complex matrices with LU inversion, and
//! deterministic random streams.

mod matrix;
mod rng;

pub use matrix::CplxMatrix;
pub use rng::{gaussian_pair, RngStream};

use num_complex::Complex;
use thiserror::Error;

use crate::real::Real;

/// Complex sample over the generic scalar.
pub type Cplx<T> = Complex<T>;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("complex division by zero")]
    DivisionByZero,
    #[error(
        "matrix is singular (pivot {pivot:.3e} below tolerance {tolerance:.3e} at column {col})"
    )]
    SingularMatrix { col: usize, pivot: f64, tolerance: f64 },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("tap delay {delay} out of range for fft size {fft_size}")]
    DelayOutOfRange { delay: usize, fft_size: usize },
    #[error("subcarrier index {bin} out of range for fft size {fft_size}")]
    BinOutOfRange { bin: usize, fft_size: usize },
}

/// Divides `y` by `x` with the components written out:
/// `((x_r·y_r + x_i·y_i) + j(x_r·y_i − x_i·y_r)) / (x_r² + x_i²)`.
///
/// This is ordinary complex division (numerator is `y·conj(x)`), kept
/// explicit because the fixed-point path re-evaluates the same expression
/// term by term.
pub fn cplx_div<T: Real>(y: Cplx<T>, x: Cplx<T>) -> Result<Cplx<T>, NumericsError> {
    let denom = x.re * x.re + x.im * x.im;
    if denom == T::zero() {
        return Err(NumericsError::DivisionByZero);
    }
    let re = (x.re * y.re + x.im * y.im) / denom;
    let im = (x.re * y.im - x.im * y.re) / denom;
    Ok(Cplx::new(re, im))
}

/// Evaluates the frequency response of a sample-spaced tap profile at the
/// given FFT bins: `H[k] = Σ_l gain_l · exp(−j2π·k·delay_l / fft_size)`.
pub fn taps_to_freq<T: Real>(
    taps: &[(usize, Cplx<T>)],
    k_indices: &[usize],
    fft_size: usize,
) -> Result<Vec<Cplx<T>>, NumericsError> {
    for &(delay, _) in taps {
        if delay >= fft_size {
            return Err(NumericsError::DelayOutOfRange { delay, fft_size });
        }
    }
    for &k in k_indices {
        if k >= fft_size {
            return Err(NumericsError::BinOutOfRange { bin: k, fft_size });
        }
    }
    let mut h = Vec::with_capacity(k_indices.len());
    for &k in k_indices {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for &(delay, gain) in taps {
            // k·d reduced mod N keeps the angle small for precision.
            let phase =
                -2.0 * std::f64::consts::PI * ((k * delay) % fft_size) as f64 / fft_size as f64;
            acc += gain * Cplx::from_polar(T::one(), T::of(phase));
        }
        h.push(acc);
    }
    Ok(h)
}
