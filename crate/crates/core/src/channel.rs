//! Clustered statistical MIMO channel for millimeter-wave links: ray-based
//! tap generation, distance power-law path loss, composite (filtered) channel
//! construction and thermal-noise bookkeeping.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{complex_normal, CMatrix, Scalar};

/// Speed of light, m/s.
const C_LIGHT: f64 = 299_792_458.0;

/// Geometry and statistics of the propagation channel.
///
/// Uniform linear arrays with half-wavelength spacing at both ends; each
/// cluster carries equal average power and spreads its rays with Laplacian
/// angle offsets around uniformly drawn center angles. Cluster delays are
/// uniform over `[0, (P-1) Ts]` and land on the nearest symbol-spaced tap;
/// the shaping filters applied by [`composite`] provide the pulse shape
/// between taps.
#[derive(Debug, Clone)]
pub struct ChannelParams<T> {
    pub carrier_hz: T,
    pub bandwidth_hz: T,
    pub distance_m: T,
    pub path_loss_exponent: T,
    pub clusters: usize,
    pub rays_per_cluster: usize,
    pub angle_spread_rad: T,
    /// Symbol-spaced channel length P.
    pub taps: usize,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl<T: Scalar> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            carrier_hz: T::real(73e9),
            bandwidth_hz: T::real(500e6),
            distance_m: T::real(30.0),
            path_loss_exponent: T::real(3.3),
            clusters: 3,
            rays_per_cluster: 10,
            angle_spread_rad: T::real(5.0_f64.to_radians()),
            taps: 4,
            n_tx: 10,
            n_rx: 10,
        }
    }
}

/// One draw of the channel: P symbol-spaced tap matrices, plus the composite
/// (transmit filter * channel * receive filter) sequence once
/// [`composite`] has run.
#[derive(Debug, Clone)]
pub struct ChannelRealization<T> {
    pub taps: Vec<CMatrix<T>>,
    pub composite: Vec<CMatrix<T>>,
    pub path_loss_db: T,
}

/// Thermal-noise description; the variance covers the full signal bandwidth.
#[derive(Debug, Clone)]
pub struct NoiseSpec<T> {
    pub psd_dbm_hz: T,
    pub noise_figure_db: T,
}

impl<T: Scalar> Default for NoiseSpec<T> {
    fn default() -> Self {
        Self {
            psd_dbm_hz: T::real(-174.0),
            noise_figure_db: T::real(3.0),
        }
    }
}

impl<T: Scalar> NoiseSpec<T> {
    /// Per-antenna complex noise variance in watts over bandwidth `w_hz`:
    /// `sigma^2 = 10^((psd + nf)/10) * 1e-3 * W`.
    pub fn variance(&self, w_hz: T) -> T {
        noise_variance(self, w_hz)
    }
}

/// See [`NoiseSpec::variance`].
pub fn noise_variance<T: Scalar>(spec: &NoiseSpec<T>, w_hz: T) -> T {
    assert!(w_hz > T::zero(), "bandwidth must be positive");
    let exp = (spec.psd_dbm_hz + spec.noise_figure_db) / T::real(10.0);
    T::real(10.0).powf(exp) * T::real(1e-3) * w_hz
}

/// Distance path loss as a linear power ratio: free-space loss at the 1 m
/// reference times `d^exponent`.
pub fn path_loss<T: Scalar>(distance_m: T, params: &ChannelParams<T>) -> Result<T> {
    if distance_m < T::one() {
        return Err(Error::OutOfModel(distance_m.as_f64()));
    }
    let fspl_1m = {
        let x = T::real(4.0) * T::PI() * params.carrier_hz / T::real(C_LIGHT);
        x * x
    };
    Ok(fspl_1m * distance_m.powf(params.path_loss_exponent))
}

// Unit-norm ULA steering vector, half-wavelength spacing.
fn steering<T: Scalar>(n: usize, angle: T) -> Vec<Complex<T>> {
    let scale = T::one() / T::real(n as f64).sqrt();
    let phase_step = T::PI() * angle.sin();
    (0..n)
        .map(|i| {
            let ph = phase_step * T::real(i as f64);
            Complex::new(ph.cos() * scale, ph.sin() * scale)
        })
        .collect()
}

// Zero-mean Laplacian draw with scale `b`.
fn laplacian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, b: T) -> T {
    let u = T::uniform(rng) - T::real(0.5);
    let sign = if u < T::zero() { -T::one() } else { T::one() };
    -b * sign * (T::one() - T::real(2.0) * u.abs()).ln()
}

/// Draws one channel realization. Tap statistics are normalized so the
/// expected total energy before path loss is `N_T * N_R`; the path-loss
/// amplitude is then folded into the taps.
pub fn generate<T: Scalar>(params: &ChannelParams<T>, seed: u64) -> Result<ChannelRealization<T>> {
    assert!(params.taps >= 1, "channel needs at least one tap");
    assert!(params.n_tx >= 1 && params.n_rx >= 1, "antenna counts must be positive");
    assert!(params.clusters >= 1 && params.rays_per_cluster >= 1);
    assert!(
        params.path_loss_exponent > T::real(2.0),
        "path-loss exponent must exceed the free-space value"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params.taps;
    let mut taps = vec![CMatrix::<T>::zeros(params.n_rx, params.n_tx); p];

    let gamma = (T::real((params.n_tx * params.n_rx) as f64)
        / T::real((params.clusters * params.rays_per_cluster) as f64))
        .sqrt();
    let half_pi = T::PI() / T::real(2.0);

    for _ in 0..params.clusters {
        let delay_symbols = T::uniform(&mut rng) * T::real((p - 1) as f64);
        let tap_index = (delay_symbols.round().as_f64() as usize).min(p - 1);
        let aoa_center = (T::uniform(&mut rng) - T::real(0.5)) * T::real(2.0) * half_pi;
        let aod_center = (T::uniform(&mut rng) - T::real(0.5)) * T::real(2.0) * half_pi;
        for _ in 0..params.rays_per_cluster {
            let aoa = aoa_center + laplacian(&mut rng, params.angle_spread_rad);
            let aod = aod_center + laplacian(&mut rng, params.angle_spread_rad);
            let gain = complex_normal(&mut rng, T::one()) * gamma;
            let a_rx = steering(params.n_rx, aoa);
            let a_tx = steering(params.n_tx, aod);
            let h = &mut taps[tap_index];
            for i in 0..params.n_rx {
                for j in 0..params.n_tx {
                    h[(i, j)] = h[(i, j)] + gain * a_rx[i] * a_tx[j].conj();
                }
            }
        }
    }

    let pl = path_loss(params.distance_m, params)?;
    let amp = T::one() / pl.sqrt();
    for h in taps.iter_mut() {
        *h = h.scale_real(amp);
    }

    Ok(ChannelRealization {
        taps,
        composite: Vec::new(),
        path_loss_db: T::real(10.0) * pl.log10(),
    })
}

// 1-D convolution of a matrix-valued sequence with a scalar filter.
fn convolve_filter<T: Scalar>(seq: &[CMatrix<T>], filter: &[T]) -> Vec<CMatrix<T>> {
    let rows = seq[0].rows();
    let cols = seq[0].cols();
    let out_len = seq.len() + filter.len() - 1;
    let mut out = vec![CMatrix::<T>::zeros(rows, cols); out_len];
    for (i, h) in seq.iter().enumerate() {
        for (j, &f) in filter.iter().enumerate() {
            if f == T::zero() {
                continue;
            }
            out[i + j] = out[i + j].add(&h.scale_real(f));
        }
    }
    out
}

/// Fills the composite channel `h_rx * H * h_tx` (entry-wise linear
/// convolution), stored with length `P + 2 P_h - 1`.
///
/// The triple convolution itself spans `P + 2 P_h - 2` taps for `P_h > 1`;
/// the sequence is zero-padded by one tap to keep the crate-wide length
/// convention (equalizer stacking depth, cyclic-prefix sizing) uniform.
pub fn composite<T: Scalar>(h: &mut ChannelRealization<T>, h_tx: &[T], h_rx: &[T]) {
    assert_eq!(h_tx.len(), h_rx.len(), "shaping filters must share a length");
    assert!(!h_tx.is_empty() && !h.taps.is_empty());
    let after_tx = convolve_filter(&h.taps, h_tx);
    h.composite = convolve_filter(&after_tx, h_rx);
    if h_tx.len() > 1 {
        let (r, c) = (h.taps[0].rows(), h.taps[0].cols());
        h.composite.push(CMatrix::zeros(r, c));
    }
}

/// Plaintext matrix dump used for regression fixtures: a `P N_R N_T` header
/// line, then per tap the row-major `re im` pairs, one entry per line.
pub fn dump_plaintext<T: Scalar>(h: &ChannelRealization<T>) -> String {
    let p = h.taps.len();
    let (n_rx, n_tx) = (h.taps[0].rows(), h.taps[0].cols());
    let mut out = format!("{p} {n_rx} {n_tx}\n");
    for tap in &h.taps {
        for i in 0..n_rx {
            for j in 0..n_tx {
                let c = tap[(i, j)];
                out.push_str(&format!("{:.17e} {:.17e}\n", c.re.as_f64(), c.im.as_f64()));
            }
        }
    }
    out
}

/// Parses the [`dump_plaintext`] layout.
pub fn parse_plaintext<T: Scalar>(text: &str) -> Result<ChannelRealization<T>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty channel dump".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header `{header}`"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::Parse("header must be `P N_R N_T`".into()));
    }
    let (p, n_rx, n_tx) = (dims[0], dims[1], dims[2]);
    let mut taps = Vec::with_capacity(p);
    for tap_idx in 0..p {
        let mut m = CMatrix::<T>::zeros(n_rx, n_tx);
        for i in 0..n_rx {
            for j in 0..n_tx {
                let line = lines.next().ok_or_else(|| {
                    Error::Parse(format!("dump truncated in tap {tap_idx} at ({i},{j})"))
                })?;
                let mut parts = line.split_whitespace();
                let re: f64 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad entry `{line}`")))?;
                let im: f64 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad entry `{line}`")))?;
                m[(i, j)] = Complex::new(T::real(re), T::real(im));
            }
        }
        taps.push(m);
    }
    Ok(ChannelRealization {
        taps,
        composite: Vec::new(),
        path_loss_db: T::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::svd;

    fn params_4x4() -> ChannelParams<f64> {
        ChannelParams {
            n_tx: 4,
            n_rx: 4,
            ..ChannelParams::default()
        }
    }

    #[test]
    fn path_loss_doubling_distance() {
        let p = params_4x4();
        let a = path_loss(50.0, &p).unwrap();
        let b = path_loss(100.0, &p).unwrap();
        let delta_db = 10.0 * (b / a).log10();
        assert!((delta_db - 3.3 * 10.0 * 2.0f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn path_loss_reference_distance_is_free_space() {
        let p = params_4x4();
        let fspl = (4.0 * std::f64::consts::PI * 73e9 / C_LIGHT).powi(2);
        assert!((path_loss(1.0, &p).unwrap() - fspl).abs() / fspl < 1e-12);
    }

    #[test]
    fn path_loss_closed_form_ratio() {
        let p = params_4x4();
        let a = path_loss(30.0, &p).unwrap();
        let b = path_loss(100.0, &p).unwrap();
        let delta_db = 10.0 * (b / a).log10();
        assert!((delta_db - 33.0 * (100.0f64 / 30.0).log10()).abs() < 1e-9);
    }

    #[test]
    fn path_loss_rejects_sub_reference_distance() {
        assert!(matches!(
            path_loss(0.5, &params_4x4()),
            Err(Error::OutOfModel(_))
        ));
    }

    #[test]
    fn degenerate_geometry_gives_rank_one_tap() {
        let p = ChannelParams::<f64> {
            clusters: 1,
            rays_per_cluster: 1,
            angle_spread_rad: 0.0,
            taps: 1,
            n_tx: 4,
            n_rx: 4,
            ..ChannelParams::default()
        };
        let h = generate(&p, 3).unwrap();
        let d = svd(&h.taps[0]);
        assert!(d.s[0] > 0.0);
        assert!(d.s[1] <= 1e-12 * d.s[0], "rank-1 expected: {:?}", d.s);
        // outer product of unit-modulus steering vectors: equal-magnitude entries
        let mags: Vec<f64> = h.taps[0].data().iter().map(|c| c.norm()).collect();
        for m in &mags {
            assert!((m - mags[0]).abs() < 1e-12 * mags[0]);
        }
    }

    #[test]
    fn energy_normalization_monte_carlo() {
        let p = params_4x4();
        let pl = path_loss(p.distance_m, &p).unwrap();
        let n = 10_000;
        let mut acc = 0.0;
        for seed in 0..n {
            let h = generate(&p, seed).unwrap();
            acc += h
                .taps
                .iter()
                .map(|m| m.frobenius_norm().powi(2))
                .sum::<f64>()
                * pl;
        }
        let mean = acc / n as f64;
        let expect = (p.n_tx * p.n_rx) as f64;
        assert!(
            (mean - expect).abs() / expect < 0.03,
            "mean energy {mean} vs {expect}"
        );
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let p = params_4x4();
        let a = generate(&p, 42).unwrap();
        let b = generate(&p, 42).unwrap();
        for (x, y) in a.taps.iter().zip(&b.taps) {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn distinct_seeds_have_uncorrelated_energies() {
        let p = params_4x4();
        let n = 1000;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 0..n {
            let e = |seed| -> f64 {
                generate(&p, seed)
                    .unwrap()
                    .taps
                    .iter()
                    .map(|m| m.frobenius_norm().powi(2))
                    .sum()
            };
            xs.push(e(2 * k));
            ys.push(e(2 * k + 1));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&xs), mean(&ys));
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / n as f64;
        let sx = (xs.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n as f64).sqrt();
        let sy = (ys.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((cov / (sx * sy)).abs() < 0.05);
    }

    #[test]
    fn composite_identity_filters() {
        let p = ChannelParams::<f64> {
            taps: 3,
            n_tx: 2,
            n_rx: 2,
            ..ChannelParams::default()
        };
        let mut h = generate(&p, 5).unwrap();
        composite(&mut h, &[1.0], &[1.0]);
        assert_eq!(h.composite.len(), 3);
        for (a, b) in h.composite.iter().zip(&h.taps) {
            assert!(a.sub(b).frobenius_norm() < 1e-15);
        }
    }

    #[test]
    fn composite_length_bookkeeping() {
        let p = ChannelParams::<f64> {
            taps: 1,
            n_tx: 2,
            n_rx: 2,
            ..ChannelParams::default()
        };
        let mut h = generate(&p, 6).unwrap();
        composite(&mut h, &[0.6, 0.8], &[0.6, 0.8]);
        assert_eq!(h.composite.len(), 1 + 2 * 2 - 1);
    }

    #[test]
    fn composite_matches_triple_convolution_oracle() {
        let p = ChannelParams::<f64> {
            taps: 3,
            n_tx: 2,
            n_rx: 3,
            ..ChannelParams::default()
        };
        let mut h = generate(&p, 7).unwrap();
        let h_tx = [0.2, 0.9, -0.1];
        let h_rx = [0.5, 0.7, 0.3];
        composite(&mut h, &h_tx, &h_rx);
        let p_tilde = 3 + 2 * 3 - 1;
        assert_eq!(h.composite.len(), p_tilde);
        assert!(h.composite[p_tilde - 1].frobenius_norm() == 0.0);
        for n in 0..p_tilde {
            let mut oracle = CMatrix::<f64>::zeros(3, 2);
            for (i, &fr) in h_rx.iter().enumerate() {
                for (j, &ft) in h_tx.iter().enumerate() {
                    if let Some(k) = n.checked_sub(i + j) {
                        if k < 3 {
                            oracle = oracle.add(&h.taps[k].scale_real(fr * ft));
                        }
                    }
                }
            }
            assert!(h.composite[n].sub(&oracle).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn composite_is_linear_in_the_channel() {
        let p = ChannelParams::<f64> {
            taps: 2,
            n_tx: 2,
            n_rx: 2,
            ..ChannelParams::default()
        };
        let mut h = generate(&p, 8).unwrap();
        let mut h2 = h.clone();
        for t in h2.taps.iter_mut() {
            *t = t.scale_real(2.5);
        }
        let f = [0.3, 0.8, 0.4];
        composite(&mut h, &f, &f);
        composite(&mut h2, &f, &f);
        for (a, b) in h.composite.iter().zip(&h2.composite) {
            assert!(b.sub(&a.scale_real(2.5)).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn noise_variance_reference_point() {
        let spec = NoiseSpec::<f64>::default();
        let v = noise_variance(&spec, 500e6);
        let expect = 10f64.powf((-174.0 + 3.0) / 10.0) * 1e-3 * 500e6;
        assert!((v - expect).abs() / expect < 1e-12);
        assert!((v - 3.97e-12).abs() / 3.97e-12 < 0.01);
    }

    #[test]
    fn noise_variance_scalings() {
        let spec = NoiseSpec::<f64>::default();
        let no_nf = NoiseSpec::<f64> {
            noise_figure_db: 0.0,
            ..NoiseSpec::default()
        };
        let ratio = noise_variance(&spec, 500e6) / noise_variance(&no_nf, 500e6);
        assert!((ratio - 10f64.powf(0.3)).abs() < 1e-9);
        let doubled = noise_variance(&spec, 1e9) / noise_variance(&spec, 500e6);
        assert!((doubled - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plaintext_dump_roundtrip() {
        let p = ChannelParams::<f64> {
            taps: 2,
            n_tx: 3,
            n_rx: 2,
            ..ChannelParams::default()
        };
        let h = generate(&p, 9).unwrap();
        let text = dump_plaintext(&h);
        let back: ChannelRealization<f64> = parse_plaintext(&text).unwrap();
        assert_eq!(back.taps.len(), 2);
        for (a, b) in h.taps.iter().zip(&back.taps) {
            assert!(a.sub(b).frobenius_norm() < 1e-12 * a.frobenius_norm());
        }
    }
}
