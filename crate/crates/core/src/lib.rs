//! Link-level simulator for MIMO millimeter-wave single-carrier links.
//!
//! The crate models a point-to-point MIMO link with symbol-spaced shaping
//! filters and a clustered statistical channel, runs it through one of two
//! transceivers — time-domain stacked LMMSE equalization, or cyclic-prefix
//! frequency-domain per-bin zero forcing — and scores each configuration by
//! its achievable spectral efficiency, a simulation-based mutual-information
//! lower bound under a mismatched Gaussian receiver law.
//!
//! Core math is generic over the scalar type (`f32`/`f64`) through the
//! [`Scalar`] trait; `f64` aliases for the common types live at the crate
//! root. The `mmlink` binary exposes sweeps, pulse spectra and benchmarks on
//! the command line.

pub mod ase;
pub mod channel;
pub mod error;
pub mod fde;
pub mod harness;
pub mod numerics;
pub mod pulses;
pub mod tde;
pub mod txrx;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Scalar};

/// Single-precision complex sample.
pub type C32 = num_complex::Complex<f32>;
/// Double-precision complex sample (the default working type).
pub type C64 = num_complex::Complex<f64>;

pub type CMatrix32 = CMatrix<f32>;
pub type CMatrix64 = CMatrix<f64>;
pub type DiscretePulse64 = pulses::DiscretePulse<f64>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type LinkConfig64 = ase::LinkConfig<f64>;
pub type AseResult64 = ase::AseResult<f64>;

#[cfg(test)]
mod tests {
    use super::*;

    // the math stack instantiates at single precision too
    #[test]
    fn single_precision_instantiation_works() {
        let pulse = pulses::rrc_taps(0.22f32, 8, 4);
        assert_eq!(pulses::symbol_spaced(&pulse).len(), 9);

        let x: Vec<C32> = (0..64)
            .map(|i| C32::new((i as f32 * 0.37).sin(), (i as f32 * 0.11).cos()))
            .collect();
        let back = numerics::ifft(&numerics::fft(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-4);
        }

        let m = CMatrix32::from_fn(3, 3, |i, j| C32::new((i + j) as f32, i as f32 - j as f32));
        let d = numerics::svd(&m);
        assert!(d.s.iter().all(|s| s.is_finite()));
    }
}
