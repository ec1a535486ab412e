use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use mmlink::ase::ergodic_ase;
use mmlink::harness::{
    benchmark, emit_csv, parse_ini, run_sweep, write_csv_file, BenchConfig, ExperimentConfig,
    Overrides, SweepAxis, SweepResult, SweepRow,
};
use mmlink::numerics::mix_seed;
use mmlink::pulses::{spectrum, PulseSpec};

#[derive(Parser)]
#[command(
    name = "mmlink",
    about = "Link-level simulator for MIMO millimeter-wave single-carrier links",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one link configuration (spectral efficiency, per-use rate).
    SingleRun(RunArgs),
    /// Sweep spectral efficiency over link distance.
    SweepDistance(RunArgs),
    /// Sweep spectral efficiency over transmit power.
    SweepPower(RunArgs),
    /// Emit the magnitude spectra of the three shaping pulses as CSV.
    PulseSpectra(SpectraArgs),
    /// Time the TDE and FDE receivers and their scaling laws.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Structured config file (INI-style sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; every realization derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Transceiver: tde | fde.
    #[arg(long)]
    transceiver: Option<String>,
    /// Shaping pulse: rrc | phydyas | dc.
    #[arg(long)]
    pulse: Option<String>,
    /// QAM order: 4 | 16 | 64.
    #[arg(long)]
    order: Option<usize>,
    /// Multiplexing order (parallel streams).
    #[arg(long)]
    m: Option<usize>,
    /// Transmit antennas.
    #[arg(long)]
    nt: Option<usize>,
    /// Receive antennas.
    #[arg(long)]
    nr: Option<usize>,
    /// Transmit power in dBW.
    #[arg(long)]
    ptdbw: Option<f64>,
    /// Link distance in meters.
    #[arg(long)]
    distance: Option<f64>,
    /// Channel realizations per grid point.
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated sweep grid override.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct SpectraArgs {
    /// CSV output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// FFT size for the spectra.
    #[arg(long, default_value_t = 1024)]
    fft: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// CSV output path for the raw timing points (stdout report regardless).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    seed: u64,
}

fn load_config(args: &RunArgs, axis: Option<SweepAxis>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match axis {
        Some(SweepAxis::Power) => ExperimentConfig::default_power_sweep(),
        _ => ExperimentConfig::default(),
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        parse_ini(&text)?; // surface syntax errors with line numbers first
        cfg.apply_ini(&text)?;
    }
    if let Some(axis) = axis {
        cfg.axis = axis;
    }
    let ov = Overrides {
        transceiver: args.transceiver.clone(),
        pulse: args.pulse.clone(),
        order: args.order,
        m: args.m,
        nt: args.nt,
        nr: args.nr,
        pt_dbw: args.ptdbw,
        distance: args.distance,
        seed: args.seed,
        realizations: args.realizations,
        grid: args.grid.clone(),
    };
    cfg.apply_overrides(&ov)?;
    cfg.validate()?;
    Ok(cfg)
}

fn init_workers(workers: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building worker pool")?;
    }
    Ok(())
}

fn single_run(args: RunArgs) -> anyhow::Result<()> {
    init_workers(args.workers)?;
    let cfg = load_config(&args, None)?;
    let res = ergodic_ase(&cfg.link, cfg.realizations, mix_seed(cfg.seed, 0))?;
    println!("config: {}", res.config_echo);
    println!(
        "symbol interval: {:.4} ns (Ts*W = {:.3})",
        res.symbol_interval * 1e9,
        res.symbol_interval * cfg.link.channel.bandwidth_hz
    );
    println!(
        "rate: {:.4} +/- {:.4} bit/use over {} realizations",
        res.mi_per_use, res.mi_std_error, res.realizations
    );
    println!(
        "ASE: {:.4} +/- {:.4} bit/s/Hz (overhead factor {:.4})",
        res.ase, res.ase_std_error, res.overhead
    );
    if res.singular_realizations > 0 {
        println!(
            "singular zero-forcing bins: {} across {} aborted realizations",
            res.singular_bins, res.singular_realizations
        );
    }
    if let Some(path) = args.out {
        let axis_value = cfg.link.channel.distance_m;
        let result = SweepResult {
            axis: SweepAxis::Distance,
            rows: vec![SweepRow {
                axis: axis_value,
                ase_mean: res.ase,
                ase_stderr: res.ase_std_error,
                mi_mean: res.mi_per_use,
                singular_bins: res.singular_bins,
                seconds: 0.0,
            }],
        };
        write_csv_file(&result, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep(args: RunArgs, axis: SweepAxis) -> anyhow::Result<()> {
    init_workers(args.workers)?;
    let cfg = load_config(&args, Some(axis))?;
    let result = run_sweep(&cfg)?;
    let mut stdout_buf = Vec::new();
    emit_csv(&result, &mut stdout_buf)?;
    print!("{}", String::from_utf8_lossy(&stdout_buf));
    if let Some(path) = args.out {
        write_csv_file(&result, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn pulse_spectra(args: SpectraArgs) -> anyhow::Result<()> {
    let pulses: [(&str, PulseSpec<f64>); 3] = [
        ("rrc", PulseSpec::rrc_default()),
        ("phydyas", PulseSpec::phydyas_default()),
        ("dc", PulseSpec::dc_default()),
    ];
    let mut out = String::from("pulse,frequency_normalized,magnitude_db\n");
    for (name, spec) in pulses {
        let p = spec.build();
        let db = spectrum(&p, args.fft);
        let n = args.fft;
        // emit over [-1/2, 1/2) cycles/sample, DC centered
        for i in 0..n {
            let shifted = (i + n / 2) % n;
            let freq = (i as f64 - (n / 2) as f64) / n as f64;
            out.push_str(&format!("{name},{:.8e},{:.8e}\n", freq, db[shifted]));
        }
    }
    match args.out {
        Some(path) => {
            std::fs::write(&path, out)?;
            println!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let cfg = BenchConfig::default();
    let report = benchmark(&cfg, args.seed)?;
    println!("{report}");
    if let Some(path) = args.out {
        let mut csv = String::from("measurement,size,seconds\n");
        csv.push_str(&format!("tde_receive,{},{:.8e}\n", cfg.k, report.tde_seconds));
        csv.push_str(&format!("fde_receive,{},{:.8e}\n", cfg.k, report.fde_seconds));
        for (pm, t) in &report.build_points {
            csv.push_str(&format!("tde_build,{pm},{t:.8e}\n"));
        }
        for (k, t) in &report.k_points {
            csv.push_str(&format!("fde_k,{k},{t:.8e}\n"));
        }
        std::fs::write(&path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<()> {
        match cli.command {
            Command::SingleRun(args) => single_run(args),
            Command::SweepDistance(args) => sweep(args, SweepAxis::Distance),
            Command::SweepPower(args) => sweep(args, SweepAxis::Power),
            Command::PulseSpectra(args) => pulse_spectra(args),
            Command::Bench(args) => bench(args),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
