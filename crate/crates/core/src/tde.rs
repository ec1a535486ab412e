//! Time-domain-equalization transceiver: composite-channel pass, postcoding
//! and the stacked LMMSE equalizer.
//!
//! To estimate `s(n)` the equalizer stacks the `P` postcoded observations
//! `r(n) .. r(n + P - 1)` (`P` the composite channel length) into one vector
//! and applies `Eᴴ`, where `E` minimizes the mean-square symbol error under
//! white symbols (`P_T/M` per stream) and white post-filter noise.

use num_complex::Complex;
use rand::Rng;

use crate::error::Result;
use crate::numerics::{complex_normal, hermitian_solve, CMatrix, Scalar};
use crate::txrx::{PrecoderPair, SymbolBlock};

/// Stacked linear MMSE equalizer for one channel realization.
#[derive(Debug, Clone)]
pub struct LmmseEqualizer<T> {
    /// `(P M) x M`; the receiver applies `Eᴴ`.
    e: CMatrix<T>,
    p_tilde: usize,
    m: usize,
    /// Closed-form per-stream error variances.
    mse: Vec<T>,
    /// Extra decision lag in symbols; 0 stacks `r(n)..r(n+P-1)` for `s(n)`.
    pub decision_delay: usize,
}

impl<T: Scalar> LmmseEqualizer<T> {
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.e
    }

    pub fn stacking_depth(&self) -> usize {
        self.p_tilde
    }

    pub fn streams(&self) -> usize {
        self.m
    }

    pub fn closed_form_mse(&self) -> &[T] {
        &self.mse
    }

    /// Hand-built equalizer, mainly for tests.
    pub fn from_matrix(e: CMatrix<T>, p_tilde: usize, m: usize) -> Self {
        assert_eq!(e.rows(), p_tilde * m);
        assert_eq!(e.cols(), m);
        Self {
            e,
            p_tilde,
            m,
            mse: vec![T::zero(); m],
            decision_delay: 0,
        }
    }
}

/// Passes precoded vectors through the composite channel and adds circular
/// complex Gaussian noise of per-antenna variance `sigma2`. The output keeps
/// the convolution ring-out: `x.len() + P - 1` vectors.
pub fn channel_pass<T: Scalar, R: Rng + ?Sized>(
    x: &[Vec<Complex<T>>],
    composite: &[CMatrix<T>],
    sigma2: T,
    rng: &mut R,
) -> Vec<Vec<Complex<T>>> {
    assert!(!x.is_empty() && !composite.is_empty());
    let n_rx = composite[0].rows();
    let out_len = x.len() + composite.len() - 1;
    let mut y = vec![vec![Complex::new(T::zero(), T::zero()); n_rx]; out_len];
    for (n, xv) in x.iter().enumerate() {
        for (l, h) in composite.iter().enumerate() {
            let dst = &mut y[n + l];
            for i in 0..n_rx {
                let mut acc = Complex::new(T::zero(), T::zero());
                for j in 0..h.cols() {
                    acc = acc + h[(i, j)] * xv[j];
                }
                dst[i] = dst[i] + acc;
            }
        }
    }
    if sigma2 > T::zero() {
        for yv in y.iter_mut() {
            for v in yv.iter_mut() {
                *v = *v + complex_normal(rng, sigma2);
            }
        }
    }
    y
}

/// Applies the postcoder: `r(n) = Dᴴ y(n)`.
pub fn postcode<T: Scalar>(y: &[Vec<Complex<T>>], d: &CMatrix<T>) -> Vec<Vec<Complex<T>>> {
    y.iter().map(|yv| d.hermitian_mul_vec(yv)).collect()
}

// G(l) = Dᴴ H(l) Q, the M x M post/pre-coded channel taps.
fn coded_taps<T: Scalar>(
    composite: &[CMatrix<T>],
    pre: &PrecoderPair<T>,
) -> Vec<CMatrix<T>> {
    composite
        .iter()
        .map(|h| pre.d.hermitian().mul(&h.mul(&pre.q)))
        .collect()
}

/// Builds the stacked LMMSE equalizer in closed form.
///
/// The stacked covariance is block-Toeplitz: with `G(l) = Dᴴ H(l) Q` and
/// per-stream symbol energy `P_s = P_T/M`,
/// `R[i][j] = P_s · sum_a G(a) G(a + j - i)ᴴ + sigma2 δ_ij I`, and the
/// cross-covariance with `s(n)` stacks `P_s · G(i)`.
pub fn build_lmmse<T: Scalar>(
    composite: &[CMatrix<T>],
    pre: &PrecoderPair<T>,
    sigma2: T,
    p_t: T,
    m: usize,
) -> Result<LmmseEqualizer<T>> {
    let p_tilde = composite.len();
    let g = coded_taps(composite, pre);
    let p_s = p_t / T::real(m as f64);

    // S(d) = sum_a G(a) G(a+d)ᴴ for d >= 0, accumulated entry-wise
    let mut lags = Vec::with_capacity(p_tilde);
    for d in 0..p_tilde {
        let mut acc = CMatrix::<T>::zeros(m, m);
        for a in 0..(p_tilde - d) {
            let (x, y) = (&g[a], &g[a + d]);
            for i in 0..m {
                for j in 0..m {
                    let mut s = Complex::new(T::zero(), T::zero());
                    for p in 0..m {
                        s = s + x[(i, p)] * y[(j, p)].conj();
                    }
                    acc[(i, j)] = acc[(i, j)] + s;
                }
            }
        }
        lags.push(acc);
    }

    let dim = p_tilde * m;
    let lag_scaled: Vec<CMatrix<T>> = lags.iter().map(|l| l.scale_real(p_s)).collect();
    let lag_scaled_h: Vec<CMatrix<T>> = lag_scaled.iter().map(|l| l.hermitian()).collect();
    let mut r_zz = CMatrix::<T>::zeros(dim, dim);
    for bi in 0..p_tilde {
        for bj in 0..p_tilde {
            let block = if bj >= bi {
                &lag_scaled[bj - bi]
            } else {
                &lag_scaled_h[bi - bj]
            };
            for i in 0..m {
                for j in 0..m {
                    r_zz[(bi * m + i, bj * m + j)] = block[(i, j)];
                }
            }
        }
    }
    for i in 0..dim {
        r_zz[(i, i)] = r_zz[(i, i)] + Complex::new(sigma2, T::zero());
    }

    let mut r_zs = CMatrix::<T>::zeros(dim, m);
    for bi in 0..p_tilde {
        for i in 0..m {
            for j in 0..m {
                r_zs[(bi * m + i, j)] = g[bi][(i, j)] * p_s;
            }
        }
    }

    let e = hermitian_solve(&r_zz, &r_zs)?;

    // error covariance: P_s I - R_zsᴴ E
    let err = CMatrix::<T>::identity(m)
        .scale_real(p_s)
        .sub(&r_zs.hermitian().mul(&e));
    let mse = (0..m).map(|i| err[(i, i)].re).collect();

    Ok(LmmseEqualizer {
        e,
        p_tilde,
        m,
        mse,
        decision_delay: 0,
    })
}

/// Applies `Eᴴ` to the stacked window `r(n+delay) .. r(n+delay+P-1)` for
/// `n = 0..k`, zero-padding past the end of the observation sequence.
pub fn equalize<T: Scalar>(
    rt: &[Vec<Complex<T>>],
    eq: &LmmseEqualizer<T>,
    k: usize,
) -> Vec<Vec<Complex<T>>> {
    let m = eq.m;
    let dim = eq.p_tilde * m;
    let zero = Complex::new(T::zero(), T::zero());
    let mut stacked = vec![zero; dim];
    (0..k)
        .map(|n| {
            for i in 0..eq.p_tilde {
                let src = n + eq.decision_delay + i;
                for j in 0..m {
                    stacked[i * m + j] = rt.get(src).map_or(zero, |v| v[j]);
                }
            }
            eq.e.hermitian_mul_vec(&stacked)
        })
        .collect()
}

/// One TDE pass over a symbol block: precode, channel, postcode, equalize.
/// Returns the soft estimates aligned with the block's symbol vectors.
pub fn run_chain<T: Scalar, R: Rng + ?Sized>(
    block: &SymbolBlock<T>,
    composite: &[CMatrix<T>],
    pre: &PrecoderPair<T>,
    sigma2: T,
    p_t: T,
    rng: &mut R,
) -> Result<Vec<Vec<Complex<T>>>> {
    let eq = build_lmmse(composite, pre, sigma2, p_t, block.m())?;
    let x = crate::txrx::apply_precoder(block, &pre.q);
    let y = channel_pass(&x, composite, sigma2, rng);
    let rt = postcode(&y, &pre.d);
    Ok(equalize(&rt, &eq, block.k()))
}
