use std::fmt;
use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fde::{fde_receive, EqMode};
use crate::numerics::{mix_seed, CMatrix};
use crate::tde::{build_lmmse, channel_pass, equalize, postcode};
use crate::txrx::{random_block, select_precoders, Constellation, PrecoderPair};

/// Geometry of a benchmark instance.
#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub n_antennas: usize,
    pub m: usize,
    pub k: usize,
    pub p_tilde: usize,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_antennas: 10,
            m: 4,
            k: 1024,
            p_tilde: 12,
            repeats: 7,
        }
    }
}

struct Instance {
    composite: Vec<CMatrix<f64>>,
    pre: PrecoderPair<f64>,
    y: Vec<Vec<Complex<f64>>>,
    sigma2: f64,
    k: usize,
    m: usize,
}

fn build_instance(cfg: &BenchConfig, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n_antennas;
    let composite: Vec<CMatrix<f64>> = (0..cfg.p_tilde)
        .map(|_| {
            CMatrix::from_fn(n, n, |_, _| {
                Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })
        })
        .collect();
    let pre = select_precoders(&composite, cfg.m)?;
    let constellation = Constellation::new(4, 1.0, cfg.m)?;
    let block = random_block(&constellation, cfg.k + cfg.p_tilde, cfg.m, &mut rng);
    let x = crate::txrx::apply_precoder(&block, &pre.q);
    let sigma2 = 0.01;
    let y = channel_pass(&x, &composite, sigma2, &mut rng);

    Ok(Instance {
        composite,
        pre,
        y,

        sigma2,
        k: cfg.k,
        m: cfg.m,
    })
}

// Minimum over repeats after a warmup run; the low-noise estimator for
// CPU-bound timings.
fn best_time(repeats: usize, mut f: impl FnMut()) -> f64 {
    f(); // warmup
    (0..repeats.max(1))
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Wall-clock of the full TDE receiver (postcoding, equalizer build,
/// application to k symbol vectors) on a synthetic instance.
pub fn time_tde_receive(cfg: &BenchConfig, seed: u64) -> Result<f64> {
    let inst = build_instance(cfg, seed)?;
    Ok(best_time(cfg.repeats, || {
        let rt = postcode(&inst.y, &inst.pre.d);
        let eq = build_lmmse(&inst.composite, &inst.pre, inst.sigma2, 1.0, inst.m).unwrap();
        let soft = equalize(&rt, &eq, inst.k);
        std::hint::black_box(soft);
    }))
}

/// Times both receivers on the same instance with interleaved repetitions,
/// so machine-load phases hit both measurements alike. Returns
/// `(tde_seconds, fde_seconds)` as minima over the repetitions.
pub fn time_matched(cfg: &BenchConfig, seed: u64) -> Result<(f64, f64)> {
    let inst = build_instance(cfg, seed)?;
    let cp = cfg.p_tilde - 1;
    let y_cp = &inst.y;

    let run_tde = || {
        let rt = postcode(&inst.y, &inst.pre.d);
        let eq = build_lmmse(&inst.composite, &inst.pre, inst.sigma2, 1.0, inst.m).unwrap();
        std::hint::black_box(equalize(&rt, &eq, inst.k));
    };
    let run_fde = || {
        std::hint::black_box(
            fde_receive(y_cp, &inst.pre, &inst.composite, cfg.k, cp, EqMode::Zf).unwrap(),
        );
    };
    run_tde();
    run_fde();
    let (mut t_tde, mut t_fde) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..cfg.repeats.max(1) {
        let t0 = Instant::now();
        run_tde();
        t_tde = t_tde.min(t0.elapsed().as_secs_f64());
        let t1 = Instant::now();
        run_fde();
        t_fde = t_fde.min(t1.elapsed().as_secs_f64());
    }
    Ok((t_tde, t_fde))
}

/// Wall-clock of the full FDE receiver (CP drop, postcoding, FFTs, per-bin
/// solves, inverse FFTs) on the same synthetic instance geometry.
pub fn time_fde_receive(cfg: &BenchConfig, seed: u64) -> Result<f64> {
    let inst = build_instance(cfg, seed)?;
    let cp = cfg.p_tilde - 1;
    // reuse the linear-channel output as if it were the CP window; the
    // arithmetic exercised is identical
    let mut y_cp = inst.y.clone();
    let needed = cp + cfg.k;
    while y_cp.len() < needed {
        y_cp.push(y_cp[y_cp.len() % inst.y.len()].clone());
    }
    Ok(best_time(cfg.repeats, || {
        let soft = fde_receive(
            &y_cp,
            &inst.pre,
            &inst.composite,
            cfg.k,
            cp,
            EqMode::Zf,
        )
        .unwrap();
        std::hint::black_box(soft);
    }))
}

/// Wall-clock of the LMMSE equalizer build alone across a grid of stacked
/// dimensions `P*M` (fixed M, growing P).
pub fn tde_build_scaling(cfg: &BenchConfig, pm_grid: &[usize], seed: u64) -> Result<Vec<(usize, f64)>> {
    pm_grid
        .iter()
        .map(|&pm| {
            assert_eq!(pm % cfg.m, 0, "grid entries must be multiples of M");
            let sized = BenchConfig {
                p_tilde: pm / cfg.m,
                k: 1, // build only
                ..*cfg
            };
            let inst = build_instance(&sized, mix_seed(seed, pm as u64))?;
            let t = best_time(cfg.repeats, || {
                let eq =
                    build_lmmse(&inst.composite, &inst.pre, inst.sigma2, 1.0, inst.m).unwrap();
                std::hint::black_box(eq);
            });
            Ok((pm, t))
        })
        .collect()
}

/// Wall-clock of the FDE receiver across block lengths `k`.
pub fn fde_k_scaling(cfg: &BenchConfig, k_grid: &[usize], seed: u64) -> Result<Vec<(usize, f64)>> {
    k_grid
        .iter()
        .map(|&k| {
            let sized = BenchConfig { k, ..*cfg };
            Ok((k, time_fde_receive(&sized, mix_seed(seed, k as u64))?))
        })
        .collect()
}

/// Least-squares slope of log(time) against log(size).
pub fn fit_loglog_slope(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(size, t) in points {
        let x = (size as f64).ln();
        let y = t.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Complete benchmark report at matched parameters.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub tde_seconds: f64,
    pub fde_seconds: f64,
    pub build_points: Vec<(usize, f64)>,
    pub build_exponent: f64,
    pub k_points: Vec<(usize, f64)>,
    /// Fitted growth factor per doubling of k over the measured span.
    pub k_doubling_ratio: f64,
}

/// Times both receivers at matched parameters, fits the TDE build-cost
/// exponent in `P*M`, and measures FDE growth under doubling `k`.
pub fn benchmark(cfg: &BenchConfig, seed: u64) -> Result<BenchReport> {
    let matched_cfg = BenchConfig {
        repeats: cfg.repeats.max(15),
        ..*cfg
    };
    let (tde_seconds, fde_seconds) = time_matched(&matched_cfg, mix_seed(seed, 100))?;

    // sizes large enough that the cubic factorization dominates the
    // quadratic covariance-assembly overheads
    let pm_grid: Vec<usize> = [48, 96, 192, 384].iter().map(|f| f * cfg.m).collect();
    let build_points = tde_build_scaling(cfg, &pm_grid, mix_seed(seed, 300))?;
    let build_exponent = fit_loglog_slope(&build_points);

    let k_grid = [cfg.k / 2, cfg.k, cfg.k * 2, cfg.k * 4];
    let k_points = fde_k_scaling(cfg, &k_grid, mix_seed(seed, 400))?;
    let first = k_points.first().expect("nonempty grid");
    let last = k_points.last().expect("nonempty grid");
    let doublings = ((last.0 / first.0) as f64).log2();
    let k_doubling_ratio = (last.1 / first.1).powf(1.0 / doublings);

    Ok(BenchReport {
        config: *cfg,
        tde_seconds,
        fde_seconds,
        build_points,
        build_exponent,
        k_points,
        k_doubling_ratio,
    })
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "matched config: N={}x{} M={} k={} P={}",
            self.config.n_antennas,
            self.config.n_antennas,
            self.config.m,
            self.config.k,
            self.config.p_tilde
        )?;
        writeln!(
            f,
            "receiver wall-clock: TDE {:.3} ms, FDE {:.3} ms ({}x)",
            self.tde_seconds * 1e3,
            self.fde_seconds * 1e3,
            self.tde_seconds / self.fde_seconds
        )?;
        writeln!(f, "TDE equalizer-build scaling (P*M, seconds):")?;
        for (pm, t) in &self.build_points {
            writeln!(f, "  {pm:5} {t:.6}")?;
        }
        writeln!(f, "fitted build exponent: {:.2}", self.build_exponent)?;
        writeln!(f, "FDE block-length scaling (k, seconds):")?;
        for (k, t) in &self.k_points {
            writeln!(f, "  {k:5} {t:.6}")?;
        }
        write!(
            f,
            "fitted FDE time ratio per k doubling: {:.2}",
            self.k_doubling_ratio
        )
    }
}
