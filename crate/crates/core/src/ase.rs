//! Achievable spectral efficiency: a simulation-based mutual-information
//! lower bound under a mismatched memoryless Gaussian receiver law,
//! normalized by the time-bandwidth product.
//!
//! Soft estimates from either transceiver are summarized by the linear model
//! `shat(n) = A s(n) + z(n)` with `z` Gaussian of covariance `Sigma_z`
//! (residual interference and noise folded together). The information rate of
//! that auxiliary law, evaluated on samples from the actual chain, lower
//! bounds the true mutual information and is achievable by a receiver
//! designed for the auxiliary law.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{self, ChannelParams, NoiseSpec};
use crate::error::{Error, Result};
use crate::fde::{EqMode, FdeConfig};
use crate::numerics::{
    cholesky, forward_substitute, hermitian_solve, mix_seed, CMatrix, Lu, Scalar,
};
use crate::pulses::{solve_symbol_interval, symbol_spaced, PulseSpec};
use crate::tde;
use crate::txrx::{random_block, select_precoders, Constellation};

/// Largest exact-marginalization alphabet (`order^M`); larger products use an
/// importance-sampled candidate subset.
const EXACT_ENUM_LIMIT: usize = 4096;

/// Importance-sample count per received vector above the exact enumeration
/// limit.
const SUBSET_SIZE: usize = 512;

/// Condition ceiling on `A` for the zero-forcing proposal; beyond it the
/// subset sampler degrades to uniform draws.
const PROPOSAL_COND_LIMIT: f64 = 1e8;

/// Fitted auxiliary-channel law: desired-signal matrix and the Gaussian
/// surrogate covariance for everything else (residual ISI plus noise).
#[derive(Debug, Clone)]
pub struct SoftEstimateModel<T> {
    pub a: CMatrix<T>,
    pub sigma_z: CMatrix<T>,
}

/// Least-squares fit of the auxiliary model from aligned (sent, soft) pairs.
/// Needs at least `10 M^2` samples.
pub fn fit_model<T: Scalar>(
    sent: &[Vec<Complex<T>>],
    soft: &[Vec<Complex<T>>],
) -> Result<SoftEstimateModel<T>> {
    assert_eq!(sent.len(), soft.len(), "sent/soft length mismatch");
    assert!(!sent.is_empty());
    let m = sent[0].len();
    let n = sent.len();
    let need = 10 * m * m;
    if n < need {
        return Err(Error::InsufficientData { got: n, need });
    }

    let mut r_ss = CMatrix::<T>::zeros(m, m);
    let mut r_hs = CMatrix::<T>::zeros(m, m);
    for (s, h) in sent.iter().zip(soft) {
        for i in 0..m {
            for j in 0..m {
                r_ss[(i, j)] = r_ss[(i, j)] + s[i] * s[j].conj();
                r_hs[(i, j)] = r_hs[(i, j)] + h[i] * s[j].conj();
            }
        }
    }
    // A = R_hs R_ss^-1  via  (R_ss X = R_hsᴴ, A = Xᴴ)
    let x = hermitian_solve(&r_ss, &r_hs.hermitian())?;
    let a = x.hermitian();

    let mut sigma = CMatrix::<T>::zeros(m, m);
    for (s, h) in sent.iter().zip(soft) {
        let pred = a.mul_vec(s);
        let r: Vec<Complex<T>> = h.iter().zip(&pred).map(|(x, p)| x - p).collect();
        for i in 0..m {
            for j in 0..m {
                sigma[(i, j)] = sigma[(i, j)] + r[i] * r[j].conj();
            }
        }
    }
    sigma = sigma.scale_real(T::one() / T::real(n as f64));
    // hermitize against accumulation error
    let sigma_z = sigma.add(&sigma.hermitian()).scale_real(T::real(0.5));

    Ok(SoftEstimateModel { a, sigma_z })
}

// Cholesky factor of Sigma_z with eigenvalue flooring at 1e-12 of the trace
// (absolute floor for the exactly-zero case).
fn floored_cholesky<T: Scalar>(sigma: &CMatrix<T>) -> CMatrix<T> {
    let m = sigma.rows();
    let trace = (0..m).fold(T::zero(), |acc, i| acc + sigma[(i, i)].re);
    let mut jitter = (trace * T::real(1e-12)).max(T::real(1e-100));
    loop {
        let mut s = sigma.clone();
        for i in 0..m {
            s[(i, i)] = s[(i, i)] + Complex::new(jitter, T::zero());
        }
        if let Ok(l) = cholesky(&s) {
            return l;
        }
        jitter = jitter * T::real(10.0);
    }
}

// Enumerates all order^m index vectors when feasible.
fn enumerate_vectors(order: usize, m: usize) -> Vec<Vec<usize>> {
    let total = order.pow(m as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut v = vec![0usize; m];
        for slot in v.iter_mut() {
            *slot = code % order;
            code /= order;
        }
        out.push(v);
    }
    out
}

// log-sum-exp with underflow skipping
fn logsumexp<T: Scalar>(terms: &[T]) -> T {
    let peak = terms.iter().fold(T::real(-1e300), |a, &b| a.max(b));
    let skip_below = T::real(-46.0);
    let mut sum = T::zero();
    for &t in terms {
        let e = t - peak;
        if e > skip_below {
            sum = sum + e.exp();
        }
    }
    peak + sum.ln()
}

/// Mutual-information lower bound in bits per vector channel use, evaluated
/// on aligned samples from the actual chain.
///
/// The marginal over inputs is an exact sum when `order^M` is small enough.
/// Larger alphabet products are importance-sampled: candidates are drawn per
/// stream from a softmax around the zero-forced observation `A^{-1} shat` and
/// reweighted exactly, which keeps the estimate sharp at high SNR where
/// uniform subsets saturate. `seed` only matters for the sampled path.
pub fn mi_lower_bound_on_samples<T: Scalar>(
    model: &SoftEstimateModel<T>,
    sent: &[Vec<Complex<T>>],
    soft: &[Vec<Complex<T>>],
    constellation: &Constellation<T>,
    seed: u64,
) -> Result<T> {
    assert_eq!(sent.len(), soft.len());
    assert!(!sent.is_empty());
    let m = model.a.rows();
    let order = constellation.order();
    let l = floored_cholesky(&model.sigma_z);
    let ln2 = T::real(std::f64::consts::LN_2);
    let exact = order
        .checked_pow(m as u32)
        .map_or(false, |t| t <= EXACT_ENUM_LIMIT);

    // whitened per-stream point contributions: wtab[j][p] = (L^-1 A e_j) * point_p
    let mut col_tab: Vec<Vec<Vec<Complex<T>>>> = Vec::with_capacity(m);
    for j in 0..m {
        let col = forward_substitute(&l, &model.a.col(j));
        col_tab.push(
            (0..order)
                .map(|p| {
                    let pt = constellation.point(p);
                    col.iter().map(|&cij| cij * pt).collect()
                })
                .collect(),
        );
    }
    let whiten_candidate = |idx: &[usize]| -> Vec<Complex<T>> {
        let mut w = vec![Complex::new(T::zero(), T::zero()); m];
        for (j, &p) in idx.iter().enumerate() {
            for i in 0..m {
                w[i] = w[i] + col_tab[j][p][i];
            }
        }
        w
    };

    let mut acc = T::zero();
    if exact {
        let cands = enumerate_vectors(order, m);
        let whitened: Vec<Vec<Complex<T>>> =
            cands.iter().map(|idx| whiten_candidate(idx)).collect();
        let ln_cand = T::real((cands.len() as f64).ln());
        for (s, h) in sent.iter().zip(soft) {
            let u = forward_substitute(&l, h);
            let dist2 = |w: &[Complex<T>]| {
                (0..m).fold(T::zero(), |d, i| d + (u[i] - w[i]).norm_sqr())
            };
            let neg: Vec<T> = whitened.iter().map(|w| -dist2(w)).collect();
            let w_true = forward_substitute(&l, &model.a.mul_vec(s));
            acc = acc + (-dist2(&w_true) + ln_cand - logsumexp(&neg)) / ln2;
        }
        return Ok(acc / T::real(sent.len() as f64));
    }

    // sampled path
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ln_r = T::real((SUBSET_SIZE as f64).ln());
    let ln_order_m = T::real((order as f64).ln() * m as f64);

    // zero-forcing proposal geometry, if A is invertible enough
    let zf = Lu::factor(&model.a)
        .ok()
        .filter(|lu| lu.cond_estimate < PROPOSAL_COND_LIMIT)
        .map(|lu| {
            let inv = lu.inverse();
            let sig_zf = inv.mul(&model.sigma_z).mul(&inv.hermitian());
            let tau: Vec<T> = (0..m)
                .map(|j| sig_zf[(j, j)].re.max(T::real(1e-30)))
                .collect();
            (lu, tau)
        });

    let mut neg = vec![T::zero(); SUBSET_SIZE];
    let mut idx = vec![0usize; m];
    for (s, h) in sent.iter().zip(soft) {
        let u = forward_substitute(&l, h);
        let dist2 = |w: &[Complex<T>]| {
            (0..m).fold(T::zero(), |d, i| d + (u[i] - w[i]).norm_sqr())
        };

        // per-stream proposal log-pmf and cdf
        let proposal: Option<(Vec<Vec<T>>, Vec<Vec<T>>)> = zf.as_ref().map(|(lu, tau)| {
            let v = lu.solve_vec(h);
            let mut log_pmf = Vec::with_capacity(m);
            let mut cdf = Vec::with_capacity(m);
            for j in 0..m {
                let logits: Vec<T> = (0..order)
                    .map(|p| -(v[j] - constellation.point(p)).norm_sqr() / tau[j])
                    .collect();
                let z = logsumexp(&logits);
                let lp: Vec<T> = logits.iter().map(|&x| x - z).collect();
                let mut run = T::zero();
                let c: Vec<T> = lp
                    .iter()
                    .map(|&x| {
                        run = run + x.exp();
                        run
                    })
                    .collect();
                log_pmf.push(lp);
                cdf.push(c);
            }
            (log_pmf, cdf)
        });

        for slot in neg.iter_mut() {
            let mut log_q = T::zero();
            match &proposal {
                Some((log_pmf, cdf)) => {
                    for j in 0..m {
                        let draw = T::uniform(&mut rng) * cdf[j][order - 1];
                        let p = cdf[j].partition_point(|&c| c < draw).min(order - 1);
                        idx[j] = p;
                        log_q = log_q + log_pmf[j][p];
                    }
                }
                None => {
                    for slot_idx in idx.iter_mut() {
                        *slot_idx = constellation.random_index(&mut rng);
                    }
                    log_q = -ln_order_m;
                }
            }
            let w = whiten_candidate(&idx);
            // importance weight: log(1/order^M) - log q(candidate)
            *slot = -dist2(&w) - ln_order_m - log_q;
        }
        // slots already fold the uniform prior against the proposal, so the
        // weighted-mean marginal is logsumexp - ln R on the same scale as
        // the numerator's -d^2 term
        let w_true = forward_substitute(&l, &model.a.mul_vec(s));
        let lse = logsumexp(&neg) - ln_r;
        acc = acc + (-dist2(&w_true) - lse) / ln2;
    }
    Ok(acc / T::real(sent.len() as f64))
}

/// Mutual-information lower bound of the auxiliary law itself: draws
/// `n_samples` (input, output) pairs from the model and scores them. When the
/// model matches the actual channel (for instance scalar AWGN) this is the
/// channel's constrained information rate.
pub fn mi_lower_bound<T: Scalar>(
    model: &SoftEstimateModel<T>,
    constellation: &Constellation<T>,
    m: usize,
    n_samples: usize,
    seed: u64,
) -> Result<T> {
    assert_eq!(model.a.rows(), m);
    let l = floored_cholesky(&model.sigma_z);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5eed));
    let mut sent = Vec::with_capacity(n_samples);
    let mut soft = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let s: Vec<Complex<T>> = (0..m)
            .map(|_| constellation.point(constellation.random_index(&mut rng)))
            .collect();
        let w: Vec<Complex<T>> = (0..m)
            .map(|_| {
                Complex::new(T::std_normal(&mut rng), T::std_normal(&mut rng))
                    * (T::one() / T::real(2.0).sqrt())
            })
            .collect();
        let colored = l.mul_vec(&w);
        let mean = model.a.mul_vec(&s);
        soft.push(
            mean.iter()
                .zip(&colored)
                .map(|(a, b)| a + b)
                .collect::<Vec<_>>(),
        );
        sent.push(s);
    }
    mi_lower_bound_on_samples(model, &sent, &soft, constellation, mix_seed(seed, 0xca9d))
}

/// Spectral efficiency from a per-use rate: `overhead * mi / (Ts * W)`.
pub fn ase<T: Scalar>(mi_bits_per_use: T, ts_seconds: T, w_hz: T, overhead: T) -> T {
    overhead * mi_bits_per_use / (ts_seconds * w_hz)
}

/// Which transceiver chain scores the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transceiver {
    Tde,
    Fde,
}

/// Everything needed to score one link configuration.
#[derive(Debug, Clone)]
pub struct LinkConfig<T> {
    pub transceiver: Transceiver,
    pub pulse: PulseSpec<T>,
    pub order: usize,
    pub m: usize,
    pub channel: ChannelParams<T>,
    pub noise: NoiseSpec<T>,
    pub pt_dbw: T,
    /// Symbol vectors simulated per channel realization.
    pub symbol_vectors: usize,
    pub fde_k: usize,
    /// Cyclic prefix in vector symbols; `None` picks the minimum covering
    /// the composite channel memory.
    pub fde_cp: Option<usize>,
    /// Charge the CP rate loss `k/(k+C)` against FDE spectral efficiency.
    pub charge_cp_overhead: bool,
    pub oob_threshold_db: T,
}

impl<T: Scalar> Default for LinkConfig<T> {
    fn default() -> Self {
        Self {
            transceiver: Transceiver::Tde,
            pulse: PulseSpec::phydyas_default(),
            order: 4,
            m: 1,
            channel: ChannelParams::default(),
            noise: NoiseSpec::default(),
            pt_dbw: T::zero(),
            symbol_vectors: 20_000,
            fde_k: 512,
            fde_cp: None,
            charge_cp_overhead: true,
            oob_threshold_db: T::real(40.0),
        }
    }
}

impl<T: Scalar> LinkConfig<T> {
    pub fn transmit_power_watts(&self) -> T {
        T::real(10.0).powf(self.pt_dbw / T::real(10.0))
    }

    fn echo(&self) -> String {
        format!(
            "{:?} pulse={:?} order={} m={} nt={} nr={} pt={:.1}dBW d={:.0}m",
            self.transceiver,
            self.pulse.kind(),
            self.order,
            self.m,
            self.channel.n_tx,
            self.channel.n_rx,
            self.pt_dbw.as_f64(),
            self.channel.distance_m.as_f64(),
        )
    }
}

/// Per-realization aggregate of [`ergodic_ase`].
#[derive(Debug, Clone)]
pub struct AseResult<T> {
    pub mi_per_use: T,
    pub mi_std_error: T,
    pub ase: T,
    pub ase_std_error: T,
    pub realizations: usize,
    /// Realizations aborted by singular zero-forcing bins, and the total
    /// number of such bins.
    pub singular_realizations: usize,
    pub singular_bins: usize,
    pub symbol_interval: T,
    pub overhead: T,
    pub config_echo: String,
}

enum Outcome<T> {
    Mi(T),
    SingularBins(usize),
}

fn run_realization<T: Scalar>(
    link: &LinkConfig<T>,
    filter_taps: &[T],
    sigma2: T,
    p_t: T,
    seed: u64,
) -> Result<Outcome<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = channel::generate(&link.channel, mix_seed(seed, 1))?;
    channel::composite(&mut h, filter_taps, filter_taps);
    let pre = select_precoders(&h.composite, link.m)?;
    let constellation = Constellation::new(link.order, p_t, link.m)?;
    let p_tilde = h.composite.len();

    let (sent, soft): (Vec<Vec<Complex<T>>>, Vec<Vec<Complex<T>>>) = match link.transceiver {
        Transceiver::Tde => {
            let k = link.symbol_vectors;
            assert!(k > 4 * p_tilde, "block too short for edge exclusion");
            let block = random_block(&constellation, k, link.m, &mut rng);
            let soft_all = tde::run_chain(&block, &h.composite, &pre, sigma2, p_t, &mut rng)?;
            // first and last P symbols carry block-edge bias; drop them
            let keep = p_tilde..(k - p_tilde);
            (
                keep.clone().map(|n| block.vector(n).to_vec()).collect(),
                soft_all[keep].to_vec(),
            )
        }
        Transceiver::Fde => {
            let cfg = FdeConfig {
                k: link.fde_k,
                cp: link.fde_cp.unwrap_or(p_tilde - 1),
            };
            cfg.validate(p_tilde)?;
            let blocks = link.symbol_vectors.div_ceil(cfg.k);
            let mut sent = Vec::with_capacity(blocks * cfg.k);
            let mut soft = Vec::with_capacity(blocks * cfg.k);
            for _ in 0..blocks {
                let block = random_block(&constellation, cfg.k, link.m, &mut rng);
                match crate::fde::run_chain(
                    &block,
                    &h.composite,
                    &pre,
                    sigma2,
                    cfg,
                    EqMode::Zf,
                    &mut rng,
                ) {
                    Ok(s) => {
                        sent.extend(block.vectors().map(|v| v.to_vec()));
                        soft.extend(s);
                    }
                    Err(Error::SingularBin { count, .. }) => {
                        return Ok(Outcome::SingularBins(count))
                    }
                    Err(e) => return Err(e),
                }
            }
            (sent, soft)
        }
    };

    let model = fit_model(&sent, &soft)?;
    let mi = mi_lower_bound_on_samples(&model, &sent, &soft, &constellation, mix_seed(seed, 2))?;
    Ok(Outcome::Mi(mi))
}

/// Averages the per-realization information rate over independent channel
/// draws and converts to spectral efficiency. Deterministic for a fixed seed
/// regardless of worker count.
pub fn ergodic_ase<T: Scalar>(
    link: &LinkConfig<T>,
    n_realizations: usize,
    seed: u64,
) -> Result<AseResult<T>> {
    assert!(n_realizations >= 1);
    let pulse = link.pulse.build();
    let ts = solve_symbol_interval(&pulse, link.channel.bandwidth_hz, link.oob_threshold_db)?;
    let filter_taps = symbol_spaced(&pulse);
    let sigma2 = link.noise.variance(link.channel.bandwidth_hz);
    let p_t = link.transmit_power_watts();

    let outcomes: Vec<Result<Outcome<T>>> = (0..n_realizations)
        .into_par_iter()
        .map(|r| run_realization(link, &filter_taps, sigma2, p_t, mix_seed(seed, r as u64)))
        .collect();

    let mut mis = Vec::with_capacity(n_realizations);
    let mut singular_realizations = 0usize;
    let mut singular_bins = 0usize;
    for o in outcomes {
        match o? {
            Outcome::Mi(mi) => mis.push(mi),
            Outcome::SingularBins(count) => {
                singular_realizations += 1;
                singular_bins += count;
            }
        }
    }
    if mis.is_empty() {
        return Err(Error::Config(
            "every realization hit singular zero-forcing bins".into(),
        ));
    }

    let n = T::real(mis.len() as f64);
    let mean = mis.iter().fold(T::zero(), |a, &b| a + b) / n;
    let var = mis
        .iter()
        .fold(T::zero(), |a, &b| a + (b - mean) * (b - mean))
        / n;
    let stderr = (var / n).sqrt();

    let overhead = match link.transceiver {
        Transceiver::Fde if link.charge_cp_overhead => {
            let p_tilde = {
                // composite length is channel taps plus filter ring-out
                let ph = filter_taps.len();
                link.channel.taps + 2 * ph - 1
            };
            FdeConfig {
                k: link.fde_k,
                cp: link.fde_cp.unwrap_or(p_tilde - 1),
            }
            .overhead_factor()
        }
        _ => T::one(),
    };
    let tsw = ts * link.channel.bandwidth_hz;

    Ok(AseResult {
        mi_per_use: mean,
        mi_std_error: stderr,
        ase: overhead * mean / tsw,
        ase_std_error: overhead * stderr / tsw,
        realizations: n_realizations,
        singular_realizations,
        singular_bins,
        symbol_interval: ts,
        overhead,
        config_echo: link.echo(),
    })
}
