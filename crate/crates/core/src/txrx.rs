//! Constellation mapping, serial-to-parallel framing and precoder/postcoder
//! selection shared by both transceiver chains.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{svd, CMatrix, Scalar};

/// Gray-labeled square QAM constellation scaled to a per-stream average
/// energy of `P_T / M`, so a full M-stream symbol vector carries `P_T`.
#[derive(Debug, Clone)]
pub struct Constellation<T> {
    order: usize,
    points: Vec<Complex<T>>,
    per_stream_energy: T,
}

// Binary-reflected Gray code over `bits` bits.
fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl<T: Scalar> Constellation<T> {
    /// Supported orders: 4, 16 and 64. `total_energy` is the average energy
    /// of a full M-stream symbol vector (`P_T`).
    pub fn new(order: usize, total_energy: T, m: usize) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64) {
            return Err(Error::BadOrder(order));
        }
        assert!(m >= 1);
        let side = (order as f64).sqrt() as usize;
        let per_stream = total_energy / T::real(m as f64);

        // PAM levels -(side-1) .. (side-1) step 2, Gray-indexed per axis.
        let levels: Vec<T> = (0..side)
            .map(|i| T::real(2.0 * i as f64 - (side - 1) as f64))
            .collect();
        let mut raw = vec![Complex::new(T::zero(), T::zero()); order];
        for re_idx in 0..side {
            for im_idx in 0..side {
                let label = gray(re_idx) * side + gray(im_idx);
                raw[label] = Complex::new(levels[re_idx], levels[im_idx]);
            }
        }
        let mean_e = raw
            .iter()
            .fold(T::zero(), |a, c| a + c.norm_sqr())
            / T::real(order as f64);
        let scale = (per_stream / mean_e).sqrt();
        let points = raw.iter().map(|c| c * scale).collect();
        Ok(Self {
            order,
            points,
            per_stream_energy: per_stream,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex<T> {
        self.points[index]
    }

    pub fn per_stream_energy(&self) -> T {
        self.per_stream_energy
    }

    pub fn bits_per_symbol(&self) -> usize {
        (self.order as f64).log2() as usize
    }

    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order)
    }
}

/// `L = k * M` mapped symbols framed as k M-dimensional vectors.
#[derive(Debug, Clone)]
pub struct SymbolBlock<T> {
    symbols: Vec<Complex<T>>,
    m: usize,
}

impl<T: Scalar> SymbolBlock<T> {
    pub fn from_symbols(symbols: Vec<Complex<T>>, m: usize) -> Self {
        assert!(m >= 1);
        assert_eq!(symbols.len() % m, 0, "symbol count must be a multiple of M");
        Self { symbols, m }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.symbols.len() / self.m
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Complex<T>] {
        &self.symbols
    }

    /// The n-th M-dimensional symbol vector.
    pub fn vector(&self, n: usize) -> &[Complex<T>] {
        &self.symbols[n * self.m..(n + 1) * self.m]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.symbols.chunks(self.m)
    }
}

/// Maps constellation indices onto a framed symbol block.
pub fn map_symbols<T: Scalar>(
    indices: &[usize],
    constellation: &Constellation<T>,
    m: usize,
) -> SymbolBlock<T> {
    assert_eq!(indices.len() % m, 0, "index count must be a multiple of M");
    SymbolBlock::from_symbols(
        indices.iter().map(|&i| constellation.point(i)).collect(),
        m,
    )
}

/// Draws `k * m` uniform symbols.
pub fn random_block<T: Scalar, R: Rng + ?Sized>(
    constellation: &Constellation<T>,
    k: usize,
    m: usize,
    rng: &mut R,
) -> SymbolBlock<T> {
    let indices: Vec<usize> = (0..k * m).map(|_| constellation.random_index(rng)).collect();
    map_symbols(&indices, constellation, m)
}

/// Precoder `Q` (N_T x M) and postcoder `D` (N_R x M) taken from the singular
/// vectors of the strongest composite tap `H(eta)`.
#[derive(Debug, Clone)]
pub struct PrecoderPair<T> {
    pub q: CMatrix<T>,
    pub d: CMatrix<T>,
    pub eta: usize,
}

/// Picks `eta` as the Frobenius-norm argmax over the composite taps (ties to
/// the smallest index), then pairs the top-M right singular vectors (Q) with
/// the top-M left singular vectors (D) of that tap.
pub fn select_precoders<T: Scalar>(
    composite: &[CMatrix<T>],
    m: usize,
) -> Result<PrecoderPair<T>> {
    assert!(!composite.is_empty(), "empty composite channel");
    let n_rx = composite[0].rows();
    let n_tx = composite[0].cols();
    assert!(
        m <= n_tx.min(n_rx),
        "multiplexing order exceeds antenna count"
    );

    let mut eta = 0;
    let mut best = T::real(-1.0);
    for (l, tap) in composite.iter().enumerate() {
        let norm = tap.frobenius_norm();
        if norm > best {
            best = norm;
            eta = l;
        }
    }

    let d = svd(&composite[eta]);
    let rank_tol = d.s[0] * T::real(n_tx.max(n_rx) as f64) * T::epsilon();
    let rank = d.s.iter().take_while(|&&s| s > rank_tol).count();
    if rank < m {
        return Err(Error::RankDeficient { requested: m, rank });
    }
    Ok(PrecoderPair {
        q: d.v.take_cols(m),
        d: d.u.take_cols(m),
        eta,
    })
}

/// Applies the precoder to each symbol vector: `x(n) = Q s(n)`.
pub fn apply_precoder<T: Scalar>(block: &SymbolBlock<T>, q: &CMatrix<T>) -> Vec<Vec<Complex<T>>> {
    assert_eq!(q.cols(), block.m(), "precoder column count must equal M");
    block.vectors().map(|s| q.mul_vec(s)).collect()
}
