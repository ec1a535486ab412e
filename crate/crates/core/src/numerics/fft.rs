use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::Scalar;

/// Forward DFT, unnormalized (`X[k] = sum_n x[n] e^{-j2πkn/N}`).
///
/// The inverse carries the `1/N` factor so the circular-convolution theorem
/// reads without extra constants.
pub fn fft<T: Scalar>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    assert!(!x.is_empty(), "fft of empty vector");
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
    buf
}

/// Inverse DFT with `1/N` normalization; `ifft(fft(x)) == x`.
pub fn ifft<T: Scalar>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    assert!(!x.is_empty(), "ifft of empty vector");
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_inverse(x.len()).process(&mut buf);
    let scale = T::one() / T::real(x.len() as f64);
    for v in buf.iter_mut() {
        *v = *v * scale;
    }
    buf
}

/// Planner wrapper for hot paths that transform many sequences of one length.
pub struct FftEngine<T: Scalar> {
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Scalar> FftEngine<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn forward(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.len);
        self.fwd.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
        let scale = T::one() / T::real(self.len as f64);
        for v in buf.iter_mut() {
            *v = *v * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn impulse_transforms_to_all_ones() {
        let x = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for v in fft(&x) {
            assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_transforms_to_scaled_impulse() {
        let x = vec![c(1.0, 0.0); 4];
        let y = fft(&x);
        assert!((y[0] - c(4.0, 0.0)).norm() < 1e-12);
        for v in &y[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_identity_up_to_4096() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for len in [1usize, 2, 3, 64, 100, 729, 1024, 4096] {
            let x: Vec<Complex<f64>> = (0..len)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let back = ifft(&fft(&x));
            let err: f64 = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let norm: f64 = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!(err <= 1e-12 * norm.max(1.0), "len {len}: err {err}");
        }
    }

    #[test]
    fn parseval_with_forward_unnormalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for len in [16usize, 250, 1024] {
            let x: Vec<Complex<f64>> = (0..len)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let time: f64 = x.iter().map(|a| a.norm_sqr()).sum();
            let freq: f64 = fft(&x).iter().map(|a| a.norm_sqr()).sum::<f64>() / len as f64;
            assert!((time - freq).abs() <= 1e-10 * time.max(1.0));
        }
    }

    #[test]
    fn engine_matches_free_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<Complex<f64>> = (0..128)
            .map(|_| c(rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        let engine = FftEngine::new(128);
        let mut buf = x.clone();
        engine.forward(&mut buf);
        let reference = fft(&x);
        for (a, b) in buf.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-12);
        }
        engine.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
