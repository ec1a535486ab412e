//! Shaping pulses: root-raised-cosine, the PHYDYAS prototype filter and the
//! Dolph-Chebyshev window, with spectra, out-of-band bandwidth measurement
//! and symbol-spaced projections.
//!
//! Spectra follow the reference methodology: a zero-padded FFT of the sampled
//! pulse (by default ~256 samples into 1024 bins) normalized to a 0 dB peak.
//! The out-of-band bandwidth is the width to the first spectrum bin at or
//! below the threshold beyond the outermost exceedance, i.e. the smallest
//! interval that verifiably contains every above-threshold bin.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{fft, Scalar};

/// PHYDYAS frequency-sampling coefficient P1 for overlap factor K = 4.
pub const PHYDYAS_P1: f64 = 0.97195983;

/// Overlap factor of the PHYDYAS prototype; the design fixes K = 4.
pub const PHYDYAS_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Rrc,
    Phydyas,
    DolphChebyshev,
}

/// Parameters from which a [`DiscretePulse`] is synthesized.
#[derive(Debug, Clone)]
pub enum PulseSpec<T> {
    /// Root-raised cosine with roll-off `rolloff`, truncated to
    /// `[-span T, span T]`, sampled `oversampling` times per symbol.
    Rrc {
        rolloff: T,
        oversampling: usize,
        span: usize,
    },
    /// PHYDYAS prototype (K = 4). `subcarriers` is the native sampling
    /// density M_s; other densities are resampled from the closed form.
    /// `strict_p3` switches the last coefficient to the printed
    /// `sqrt(1 - P1)` instead of the frequency-sampling `sqrt(1 - P1^2)`.
    Phydyas {
        subcarriers: usize,
        oversampling: usize,
        strict_p3: bool,
    },
    /// Dolph-Chebyshev window of `taps` coefficients (odd) with sidelobe
    /// attenuation `attenuation_db` (negative dB).
    DolphChebyshev {
        taps: usize,
        attenuation_db: T,
        oversampling: usize,
    },
}

impl<T: Scalar> PulseSpec<T> {
    pub fn rrc_default() -> Self {
        PulseSpec::Rrc {
            rolloff: T::real(0.22),
            oversampling: 16,
            span: 8,
        }
    }

    pub fn phydyas_default() -> Self {
        PulseSpec::Phydyas {
            subcarriers: 1,
            oversampling: 64,
            strict_p3: false,
        }
    }

    pub fn dc_default() -> Self {
        PulseSpec::DolphChebyshev {
            taps: 255,
            attenuation_db: T::real(-50.0),
            oversampling: 16,
        }
    }

    pub fn kind(&self) -> PulseKind {
        match self {
            PulseSpec::Rrc { .. } => PulseKind::Rrc,
            PulseSpec::Phydyas { .. } => PulseKind::Phydyas,
            PulseSpec::DolphChebyshev { .. } => PulseKind::DolphChebyshev,
        }
    }

    pub fn build(&self) -> DiscretePulse<T> {
        match *self {
            PulseSpec::Rrc {
                rolloff,
                oversampling,
                span,
            } => rrc_taps(rolloff, oversampling, span),
            PulseSpec::Phydyas {
                subcarriers,
                oversampling,
                strict_p3,
            } => phydyas_taps_opts(subcarriers, oversampling, strict_p3),
            PulseSpec::DolphChebyshev {
                taps,
                attenuation_db,
                oversampling,
            } => dc_taps(taps, attenuation_db, oversampling),
        }
    }
}

/// Sampled shaping pulse: real symmetric taps at `oversampling` samples per
/// symbol interval, normalized to unit energy.
#[derive(Debug, Clone)]
pub struct DiscretePulse<T> {
    taps: Vec<T>,
    oversampling: usize,
    symbol_interval: T,
}

impl<T: Scalar> DiscretePulse<T> {
    /// Wraps raw taps (odd length, centered) and normalizes them to unit
    /// energy. The symbol interval defaults to 1 s until solved.
    pub fn new(taps: Vec<T>, oversampling: usize) -> Self {
        assert!(oversampling >= 1, "oversampling must be at least 1");
        assert!(taps.len() % 2 == 1, "taps must be odd-length (centered)");
        let mut p = Self {
            taps,
            oversampling,
            symbol_interval: T::one(),
        };
        p.normalize_energy();
        p
    }

    fn normalize_energy(&mut self) {
        let e = self.taps.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
        if e > T::zero() {
            for t in self.taps.iter_mut() {
                *t = *t / e;
            }
        }
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn symbol_interval(&self) -> T {
        self.symbol_interval
    }

    pub fn set_symbol_interval(&mut self, seconds: T) {
        self.symbol_interval = seconds;
    }

    pub fn energy(&self) -> T {
        self.taps.iter().fold(T::zero(), |a, &x| a + x * x)
    }
}

/// Raw root-raised-cosine amplitude at time `t` (in symbol intervals, T = 1),
/// before energy normalization. The closed form has dedicated branches at
/// `t = 0` and `|t| = 1/(4 rolloff)`.
pub fn rrc_amplitude<T: Scalar>(rolloff: T, t: T) -> T {
    let pi = T::PI();
    let four = T::real(4.0);
    if t == T::zero() {
        return T::one() - rolloff + four * rolloff / pi;
    }
    if rolloff > T::zero() {
        let singular = T::one() / (four * rolloff);
        if (t.abs() - singular).abs() < T::real(1e-9) * singular.max(T::one()) {
            let two_over_pi = T::real(2.0) / pi;
            let arg = pi / (four * rolloff);
            return rolloff / T::real(2.0).sqrt()
                * ((T::one() + two_over_pi) * arg.sin() + (T::one() - two_over_pi) * arg.cos());
        }
    }
    let num = (pi * t * (T::one() - rolloff)).sin()
        + four * rolloff * t * (pi * t * (T::one() + rolloff)).cos();
    let den = pi * t * (T::one() - (four * rolloff * t) * (four * rolloff * t));
    num / den
}

/// Root-raised-cosine pulse truncated to `[-span T, span T]`.
pub fn rrc_taps<T: Scalar>(rolloff: T, oversampling: usize, span: usize) -> DiscretePulse<T> {
    assert!(
        rolloff >= T::zero() && rolloff <= T::one(),
        "roll-off must be in [0, 1]"
    );
    assert!(span >= 1, "span must be at least one symbol interval");
    let half = (span * oversampling) as i64;
    let taps: Vec<T> = (-half..=half)
        .map(|n| rrc_amplitude(rolloff, T::real(n as f64 / oversampling as f64)))
        .collect();
    DiscretePulse::new(taps, oversampling)
}

fn phydyas_coeffs<T: Scalar>(strict_p3: bool) -> [T; 4] {
    let p1 = T::real(PHYDYAS_P1);
    let p3 = if strict_p3 {
        (T::one() - p1).sqrt()
    } else {
        (T::one() - p1 * p1).sqrt()
    };
    [T::one(), p1, T::one() / T::real(2.0).sqrt(), p3]
}

/// The PHYDYAS impulse response on its native grid:
/// `p(n) = P0 + 2 sum_k (-1)^k P_k cos(2 pi k (n+1) / (K M))` for
/// `n = 0 .. K*M_s - 2`.
pub fn phydyas_native_taps<T: Scalar>(subcarriers: usize, strict_p3: bool) -> Vec<T> {
    assert!(subcarriers >= 1);
    let p = phydyas_coeffs::<T>(strict_p3);
    let km = PHYDYAS_K * subcarriers;
    (0..km - 1)
        .map(|n| {
            let mut v = p[0];
            for k in 1..PHYDYAS_K {
                let sign = if k % 2 == 1 { -T::one() } else { T::one() };
                let arg = T::real(2.0) * T::PI() * T::real(k as f64) * T::real((n + 1) as f64)
                    / T::real(km as f64);
                v = v + T::real(2.0) * sign * p[k] * arg.cos();
            }
            v
        })
        .collect()
}

/// Centered closed form of the PHYDYAS prototype, `t` in symbol intervals.
/// Support is `|t| <= K/2`.
pub fn phydyas_point<T: Scalar>(t: T, strict_p3: bool) -> T {
    let half_span = T::real(PHYDYAS_K as f64 / 2.0);
    if t.abs() > half_span {
        return T::zero();
    }
    let p = phydyas_coeffs::<T>(strict_p3);
    let mut v = p[0];
    for k in 1..PHYDYAS_K {
        let arg = T::real(2.0) * T::PI() * T::real(k as f64) * t / T::real(PHYDYAS_K as f64);
        v = v + T::real(2.0) * p[k] * arg.cos();
    }
    v
}

/// PHYDYAS pulse with the frequency-sampling coefficient set.
pub fn phydyas_taps<T: Scalar>(subcarriers: usize, oversampling: usize) -> DiscretePulse<T> {
    phydyas_taps_opts(subcarriers, oversampling, false)
}

/// PHYDYAS pulse; at `oversampling == subcarriers` the taps are the native
/// formula values, otherwise the closed form is evaluated on the requested
/// grid over the natural support `[-2T, 2T]`.
pub fn phydyas_taps_opts<T: Scalar>(
    subcarriers: usize,
    oversampling: usize,
    strict_p3: bool,
) -> DiscretePulse<T> {
    if oversampling == subcarriers {
        return DiscretePulse::new(phydyas_native_taps(subcarriers, strict_p3), oversampling);
    }
    let half = (PHYDYAS_K * oversampling / 2) as i64;
    let taps: Vec<T> = (-half..=half)
        .map(|n| phydyas_point(T::real(n as f64 / oversampling as f64), strict_p3))
        .collect();
    DiscretePulse::new(taps, oversampling)
}

/// Chebyshev polynomial of the first kind, `cos` branch for `|x| <= 1` and
/// `cosh` branch outside.
pub fn chebyshev<T: Scalar>(order: usize, x: T) -> T {
    let n = T::real(order as f64);
    if x.abs() <= T::one() {
        (n * x.acos()).cos()
    } else {
        let v = (n * acosh(x.abs())).cosh();
        if x < T::zero() && order % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

fn acosh<T: Scalar>(x: T) -> T {
    (x + (x * x - T::one()).sqrt()).ln()
}

/// Dolph-Chebyshev pulse of `n` taps with sidelobe attenuation
/// `attenuation_db` (< 0). In frequency it has the narrowest main lobe of any
/// window with that sidelobe level.
pub fn dc_taps<T: Scalar>(n: usize, attenuation_db: T, oversampling: usize) -> DiscretePulse<T> {
    assert!(n >= 3 && n % 2 == 1, "tap count must be odd and >= 3");
    assert!(attenuation_db < T::zero(), "attenuation must be negative dB");
    let ripple = T::real(10.0).powf(-attenuation_db / T::real(20.0));
    let x0 = (acosh(ripple) / T::real((n - 1) as f64)).cosh();
    let half = (n - 1) / 2;
    let inv_n = T::one() / T::real(n as f64);
    let taps: Vec<T> = (-(half as i64)..=(half as i64))
        .map(|m| {
            let mut acc = ripple;
            for k in 1..=half {
                let beta = x0 * (T::PI() * T::real(k as f64) * inv_n).cos();
                let arg = T::real(2.0) * T::PI() * T::real(m as f64) * T::real(k as f64) * inv_n;
                acc = acc + T::real(2.0) * chebyshev(n - 1, beta) * arg.cos();
            }
            acc * inv_n
        })
        .collect();
    DiscretePulse::new(taps, oversampling)
}

/// Magnitude spectrum in dB of the zero-padded pulse, normalized to a 0 dB
/// peak. Returns `fft_size` values over the full digital frequency axis.
pub fn spectrum<T: Scalar>(pulse: &DiscretePulse<T>, fft_size: usize) -> Vec<T> {
    assert!(fft_size >= pulse.len(), "fft size below tap count");
    let mut buf: Vec<Complex<T>> = pulse
        .taps
        .iter()
        .map(|&x| Complex::new(x, T::zero()))
        .collect();
    buf.resize(fft_size, Complex::new(T::zero(), T::zero()));
    let freq = fft(&buf);
    let mags: Vec<T> = freq.iter().map(|c| c.norm()).collect();
    let peak = mags.iter().fold(T::zero(), |a, &b| a.max(b));
    let floor = T::real(1e-30);
    mags.iter()
        .map(|&m| T::real(20.0) * (m / peak).max(floor).log10())
        .collect()
}

// Default spectral resolution for bandwidth measurement; ~256-tap pulses land
// on the reference 1024-bin grid.
fn default_fft_size(n_taps: usize) -> usize {
    n_taps.next_power_of_two().max(1024)
}

/// Two-sided out-of-band bandwidth in cycles per sample: the width of the
/// smallest symmetric interval whose exterior stays at least `threshold_db`
/// below the spectral peak, measured on the default grid.
pub fn bandwidth<T: Scalar>(pulse: &DiscretePulse<T>, threshold_db: T) -> Result<T> {
    bandwidth_with_fft(pulse, threshold_db, default_fft_size(pulse.len()))
}

/// As [`bandwidth`] with an explicit FFT size. The edge is placed at the
/// first bin at or below the threshold beyond the outermost exceedance.
pub fn bandwidth_with_fft<T: Scalar>(
    pulse: &DiscretePulse<T>,
    threshold_db: T,
    fft_size: usize,
) -> Result<T> {
    assert!(
        threshold_db > T::zero(),
        "threshold is an attenuation depth in dB"
    );
    let db = spectrum(pulse, fft_size);
    let half = fft_size / 2;
    let mut outer = 0usize;
    for (i, &v) in db.iter().enumerate().take(half + 1) {
        if v > -threshold_db {
            outer = i;
        }
    }
    if outer >= half {
        return Err(Error::Bandwidth(threshold_db.as_f64()));
    }
    Ok(T::real(2.0 * (outer + 1) as f64 / fft_size as f64))
}

/// Solves the symbol interval (seconds) at which the pulse's out-of-band
/// bandwidth equals `w_hz`. The measurement is scale invariant, so the
/// solution is direct: `Ts = b * oversampling / W`.
pub fn solve_symbol_interval<T: Scalar>(
    pulse: &DiscretePulse<T>,
    w_hz: T,
    threshold_db: T,
) -> Result<T> {
    let b = bandwidth(pulse, threshold_db)?;
    Ok(b * T::real(pulse.oversampling() as f64) / w_hz)
}

/// Symbol-spaced filter taps: decimation at the symbol rate, center aligned,
/// energy renormalized to 1.
pub fn symbol_spaced<T: Scalar>(pulse: &DiscretePulse<T>) -> Vec<T> {
    let center = pulse.len() / 2;
    let os = pulse.oversampling;
    let reach = center / os;
    let mut taps: Vec<T> = (-(reach as i64)..=(reach as i64))
        .map(|j| pulse.taps[(center as i64 + j * os as i64) as usize])
        .collect();
    let e = taps.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    if e > T::zero() {
        for t in taps.iter_mut() {
            *t = *t / e;
        }
    }
    taps
}

/// Peak sidelobe level in dB relative to the spectral peak (the largest
/// spectrum value beyond the first local minimum of the main lobe).
pub fn peak_sidelobe_db<T: Scalar>(pulse: &DiscretePulse<T>, fft_size: usize) -> T {
    let db = spectrum(pulse, fft_size);
    let half = fft_size / 2;
    let mut i = 1;
    while i < half && db[i] <= db[i - 1] {
        i += 1;
    }
    db[i..=half].iter().fold(T::real(-1e9), |a, &b| a.max(b))
}
