use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::ase::ergodic_ase;
use crate::error::{Error, Result};
use crate::numerics::mix_seed;

use super::config::{ExperimentConfig, SweepAxis};

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: f64,
    pub ase_mean: f64,
    pub ase_stderr: f64,
    pub mi_mean: f64,
    pub singular_bins: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

/// Runs the experiment grid point by point. Each point gets a seed derived
/// from the master seed and its index, so results do not depend on worker
/// count or on which other points run.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.grid.len());
    for (i, &value) in cfg.grid.iter().enumerate() {
        let mut link = cfg.link.clone();
        match cfg.axis {
            SweepAxis::Distance => link.channel.distance_m = value,
            SweepAxis::Power => link.pt_dbw = value,
        }
        let start = Instant::now();
        let res = ergodic_ase(&link, cfg.realizations, mix_seed(cfg.seed, i as u64))
            .map_err(|e| Error::GridPoint {
                axis: value,
                source: Box::new(e),
            })?;
        rows.push(SweepRow {
            axis: value,
            ase_mean: res.ase,
            ase_stderr: res.ase_std_error,
            mi_mean: res.mi_per_use,
            singular_bins: res.singular_bins,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(SweepResult {
        axis: cfg.axis,
        rows,
    })
}

const CSV_HEADER: &str = "axis,ase_mean,ase_stderr,mi_mean,singular_bins,seconds";

/// Writes the sweep as CSV: fixed header, one row per grid point in grid
/// order, numeric fields with 9 significant digits.
pub fn emit_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "{:.8e},{:.8e},{:.8e},{:.8e},{},{:.8e}",
            r.axis, r.ase_mean, r.ase_stderr, r.mi_mean, r.singular_bins, r.seconds
        )?;
    }
    Ok(())
}

pub fn write_csv_file(result: &SweepResult, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    emit_csv(result, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Parses the [`emit_csv`] format back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "bad csv header {:?}, expected `{CSV_HEADER}`",
                other
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("bad csv row `{line}`")));
            }
            let num = |i: usize| -> Result<f64> {
                f[i].parse()
                    .map_err(|_| Error::Parse(format!("bad csv number `{}`", f[i])))
            };
            Ok(SweepRow {
                axis: num(0)?,
                ase_mean: num(1)?,
                ase_stderr: num(2)?,
                mi_mean: num(3)?,
                singular_bins: f[4]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad csv count `{}`", f[4])))?,
                seconds: num(5)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            grid: vec![30.0, 100.0],
            realizations: 2,
            seed: 5,
            ..ExperimentConfig::default()
        };
        cfg.link.channel = ChannelParams {
            n_tx: 2,
            n_rx: 2,
            taps: 2,
            ..ChannelParams::default()
        };
        cfg.link.symbol_vectors = 1500;
        cfg
    }

    #[test]
    fn empty_rows_emit_header_only() {
        let res = SweepResult {
            axis: SweepAxis::Distance,
            rows: vec![],
        };
        let mut buf = Vec::new();
        emit_csv(&res, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_roundtrip_preserves_values() {
        let res = SweepResult {
            axis: SweepAxis::Power,
            rows: vec![
                SweepRow {
                    axis: -10.0,
                    ase_mean: 0.123456789,
                    ase_stderr: 0.00123456789,
                    mi_mean: 1.987654321,
                    singular_bins: 3,
                    seconds: 2.5,
                },
                SweepRow {
                    axis: 0.0,
                    ase_mean: 1.0,
                    ase_stderr: 0.01,
                    mi_mean: 2.0,
                    singular_bins: 0,
                    seconds: 0.25,
                },
            ],
        };
        let mut buf = Vec::new();
        emit_csv(&res, &mut buf).unwrap();
        let rows = parse_csv(&String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        for (a, b) in rows.iter().zip(&res.rows) {
            assert!((a.ase_mean - b.ase_mean).abs() <= 1e-8 * b.ase_mean.abs().max(1.0));
            assert!((a.mi_mean - b.mi_mean).abs() <= 1e-8 * b.mi_mean.abs().max(1.0));
            assert_eq!(a.singular_bins, b.singular_bins);
        }
    }

    #[test]
    fn singleton_grid_equals_direct_call() {
        let mut cfg = tiny_config();
        cfg.grid = vec![30.0];
        let sweep = run_sweep(&cfg).unwrap();
        let direct =
            ergodic_ase(&cfg.link, cfg.realizations, mix_seed(cfg.seed, 0)).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        assert_eq!(sweep.rows[0].ase_mean, direct.ase);
        assert_eq!(sweep.rows[0].mi_mean, direct.mi_per_use);
    }

    #[test]
    fn sweep_is_deterministic_modulo_timing() {
        let cfg = tiny_config();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.ase_mean, rb.ase_mean);
            assert_eq!(ra.ase_stderr, rb.ase_stderr);
            assert_eq!(ra.mi_mean, rb.mi_mean);
            assert_eq!(ra.singular_bins, rb.singular_bins);
        }
    }

    #[test]
    fn grid_point_errors_carry_context() {
        let mut cfg = tiny_config();
        cfg.grid = vec![0.5, 30.0]; // below the 1 m path-loss reference
        match run_sweep(&cfg) {
            Err(Error::GridPoint { axis, .. }) => assert_eq!(axis, 0.5),
            other => panic!("expected grid-point error, got {other:?}"),
        }
    }
}
