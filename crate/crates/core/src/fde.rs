//! Cyclic-prefix frequency-domain-equalization transceiver: CP insertion,
//! per-bin equalization of the circularized channel, IFFT recovery.
//!
//! With a cyclic prefix of at least the composite channel memory, the linear
//! channel acts circularly on the kept window, so each of the k FFT bins
//! carries an independent `M x M` system `R(n) = G(n) S(n) + W(n)` solved by
//! zero forcing (the default) or a per-bin MMSE variant.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{solve_in_place, CMatrix, FftEngine, Lu, Scalar, COND_LIMIT};
use crate::tde::channel_pass;
use crate::txrx::{apply_precoder, PrecoderPair, SymbolBlock};

/// Per-bin equalizer law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EqMode<T> {
    /// `E(n)ᴴ = G(n)^{-1}`; exact in the absence of noise.
    Zf,
    /// `E(n)ᴴ = (G ᴴG + nsr I)^{-1} Gᴴ` with `nsr = sigma2 / P_s`;
    /// regularizes faded bins. Not used for reference-faithful runs.
    MmsePerBin { noise_to_signal: T },
}

/// Block geometry of the CP transceiver, in vector symbols.
#[derive(Debug, Clone, Copy)]
pub struct FdeConfig {
    pub k: usize,
    pub cp: usize,
}

impl FdeConfig {
    /// CP must cover the composite channel memory for circularity.
    pub fn validate(&self, p_tilde: usize) -> Result<()> {
        if self.cp + 1 < p_tilde {
            return Err(Error::Config(format!(
                "cyclic prefix {} shorter than channel memory {}",
                self.cp,
                p_tilde - 1
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("block length k must be positive".into()));
        }
        Ok(())
    }

    /// Minimum CP for a composite channel of length `p_tilde`.
    pub fn minimal(k: usize, p_tilde: usize) -> Self {
        Self {
            k,
            cp: p_tilde.saturating_sub(1),
        }
    }

    /// Rate factor `k / (k + C)` lost to the prefix.
    pub fn overhead_factor<T: Scalar>(&self) -> T {
        T::real(self.k as f64 / (self.k + self.cp) as f64)
    }
}

/// Prepends the last `cp` vector symbols of the block (cyclic extension).
pub fn add_cp<T: Scalar>(block: &SymbolBlock<T>, cp: usize) -> SymbolBlock<T> {
    assert!(cp >= 1, "cyclic prefix must be at least one vector symbol");
    let k = block.k();
    assert!(cp <= k, "cyclic prefix longer than the block");
    let m = block.m();
    let mut symbols = Vec::with_capacity((k + cp) * m);
    symbols.extend_from_slice(&block.symbols()[(k - cp) * m..]);
    symbols.extend_from_slice(block.symbols());
    SymbolBlock::from_symbols(symbols, m)
}

/// Drops the first `cp` vector symbols, keeping `k`.
pub fn remove_cp<T: Clone>(seq: &[Vec<T>], cp: usize, k: usize) -> Vec<Vec<T>> {
    assert!(seq.len() >= cp + k, "sequence shorter than cp + k");
    seq[cp..cp + k].to_vec()
}

// Flat layout: bin n occupies `flat[n*m*m..(n+1)*m*m]` row-major.
fn coded_tap_bins_flat<T: Scalar>(
    composite: &[CMatrix<T>],
    pre: &PrecoderPair<T>,
    k: usize,
    engine: &FftEngine<T>,
) -> Vec<Complex<T>> {
    assert!(composite.len() <= k, "block shorter than channel");
    let m = pre.q.cols();
    let g: Vec<CMatrix<T>> = composite
        .iter()
        .map(|h| pre.d.hermitian().mul(&h.mul(&pre.q)))
        .collect();
    let zero = Complex::new(T::zero(), T::zero());
    let mut flat = vec![zero; k * m * m];
    let mut buf = vec![zero; k];
    for i in 0..m {
        for j in 0..m {
            buf.iter_mut().for_each(|v| *v = zero);
            for (l, gl) in g.iter().enumerate() {
                buf[l] = gl[(i, j)];
            }
            engine.forward(&mut buf);
            let entry = i * m + j;
            for n in 0..k {
                flat[n * m * m + entry] = buf[n];
            }
        }
    }
    flat
}

/// k-point FFT of the pre/post-coded taps `G(l) = Dᴴ H(l) Q`, one `M x M`
/// matrix per bin.
pub fn coded_tap_bins<T: Scalar>(
    composite: &[CMatrix<T>],
    pre: &PrecoderPair<T>,
    k: usize,
) -> Vec<CMatrix<T>> {
    let m = pre.q.cols();
    let engine = FftEngine::new(k);
    let flat = coded_tap_bins_flat(composite, pre, k, &engine);
    (0..k)
        .map(|n| CMatrix::from_fn(m, m, |i, j| flat[n * m * m + i * m + j]))
        .collect()
}

/// Post-equalization noise covariance per bin: `sigma2 G(n)^{-1} G(n)^{-ᴴ}`.
/// The time-domain residual covariance is the average of these over bins.
pub fn noise_enhancement<T: Scalar>(bins: &[CMatrix<T>], sigma2: T) -> Result<Vec<CMatrix<T>>> {
    bins.iter()
        .enumerate()
        .map(|(n, g)| {
            let lu = Lu::factor(g).map_err(|_| Error::SingularBin {
                bin: n,
                count: 1,
                cond: f64::INFINITY,
            })?;
            let inv = lu.inverse();
            Ok(inv.mul(&inv.hermitian()).scale_real(sigma2))
        })
        .collect()
}

/// Full frequency-domain receiver: CP removal, postcoding, entry-wise k-point
/// FFT, per-bin equalization, entry-wise IFFT back to soft symbol estimates.
///
/// Any bin whose system is singular beyond the condition guard aborts the
/// call; the error carries the first offending bin and the total count.
pub fn fde_receive<T: Scalar>(
    y_cp: &[Vec<Complex<T>>],
    pre: &PrecoderPair<T>,
    composite: &[CMatrix<T>],
    k: usize,
    cp: usize,
    mode: EqMode<T>,
) -> Result<Vec<Vec<Complex<T>>>> {
    let m = pre.q.cols();
    let n_rx = pre.d.rows();
    assert!(y_cp.len() >= cp + k, "received sequence shorter than cp + k");

    let engine = FftEngine::new(k);
    let zero = Complex::new(T::zero(), T::zero());

    // fused CP drop + postcode + per-stream forward FFT; bin n at r[n*m..]
    let mut r_flat = vec![zero; k * m];
    let mut buf = vec![zero; k];
    for j in 0..m {
        for (n, slot) in buf.iter_mut().enumerate() {
            let yv = &y_cp[cp + n];
            let mut acc = zero;
            for i in 0..n_rx {
                acc = acc + pre.d[(i, j)].conj() * yv[i];
            }
            *slot = acc;
        }
        engine.forward(&mut buf);
        for n in 0..k {
            r_flat[n * m + j] = buf[n];
        }
    }

    let mut bins = coded_tap_bins_flat(composite, pre, k, &engine);

    // per-bin solves, in place over the flat buffers
    let mut singular: Vec<(usize, f64)> = Vec::new();
    match mode {
        EqMode::Zf => {
            for n in 0..k {
                let sys = &mut bins[n * m * m..(n + 1) * m * m];
                let rhs = &mut r_flat[n * m..(n + 1) * m];
                match solve_in_place(sys, rhs, m) {
                    Some(cond) if cond <= COND_LIMIT => {}
                    Some(cond) => singular.push((n, cond)),
                    None => singular.push((n, f64::INFINITY)),
                }
            }
        }
        EqMode::MmsePerBin { noise_to_signal } => {
            let mut sys = vec![zero; m * m];
            let mut rhs = vec![zero; m];
            for n in 0..k {
                let g = &bins[n * m * m..(n + 1) * m * m];
                // sys = GᴴG + nsr I, rhs = Gᴴ r
                for i in 0..m {
                    for j in 0..m {
                        let mut acc = zero;
                        for p in 0..m {
                            acc = acc + g[p * m + i].conj() * g[p * m + j];
                        }
                        sys[i * m + j] = acc;
                    }
                    sys[i * m + i] = sys[i * m + i] + Complex::new(noise_to_signal, T::zero());
                    let mut acc = zero;
                    for p in 0..m {
                        acc = acc + g[p * m + i].conj() * r_flat[n * m + p];
                    }
                    rhs[i] = acc;
                }
                match solve_in_place(&mut sys, &mut rhs, m) {
                    Some(cond) if cond.is_finite() => {
                        r_flat[n * m..(n + 1) * m].copy_from_slice(&rhs);
                    }
                    _ => singular.push((n, f64::INFINITY)),
                }
            }
        }
    }
    if let Some(&(bin, cond)) = singular.first() {
        return Err(Error::SingularBin {
            bin,
            count: singular.len(),
            cond,
        });
    }

    // entry-wise inverse FFT back to the time domain
    let mut soft = vec![vec![zero; m]; k];
    for j in 0..m {
        for n in 0..k {
            buf[n] = r_flat[n * m + j];
        }
        engine.inverse(&mut buf);
        for n in 0..k {
            soft[n][j] = buf[n];
        }
    }
    Ok(soft)
}

/// One FDE pass over a data block: CP insertion, precoding, channel with
/// noise, receive chain. Soft estimates align with the block's vectors.
pub fn run_chain<T: Scalar, R: Rng + ?Sized>(
    block: &SymbolBlock<T>,
    composite: &[CMatrix<T>],
    pre: &PrecoderPair<T>,
    sigma2: T,
    cfg: FdeConfig,
    mode: EqMode<T>,
    rng: &mut R,
) -> Result<Vec<Vec<Complex<T>>>> {
    cfg.validate(composite.len())?;
    assert_eq!(block.k(), cfg.k, "block length must match the FDE config");
    let extended = add_cp(block, cfg.cp);
    let x = apply_precoder(&extended, &pre.q);
    let y = channel_pass(&x, composite, sigma2, rng);
    fde_receive(&y, pre, composite, cfg.k, cfg.cp, mode)
}
