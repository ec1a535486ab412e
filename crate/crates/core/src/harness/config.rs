use std::collections::BTreeMap;
use std::str::FromStr;

use crate::ase::{LinkConfig, Transceiver};
use crate::error::{Error, Result};
use crate::pulses::PulseSpec;

/// Sweep axis of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Link length in meters.
    Distance,
    /// Transmit power in dBW.
    Power,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Distance => "distance_m",
            SweepAxis::Power => "pt_dbw",
        }
    }
}

/// A full experiment: one link configuration swept along one axis.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub link: LinkConfig<f64>,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            link: LinkConfig::default(),
            axis: SweepAxis::Distance,
            grid: vec![10.0, 30.0, 100.0, 200.0, 500.0],
            realizations: 50,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn default_power_sweep() -> Self {
        Self {
            axis: SweepAxis::Power,
            grid: (-5..=1).map(|i| (i * 10) as f64).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sweep grid must be strictly increasing".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be positive".into()));
        }
        Ok(())
    }

    /// Applies a config file (see [`parse_ini`]) over the current values.
    pub fn apply_ini(&mut self, text: &str) -> Result<()> {
        let ini = parse_ini(text)?;
        let get = |section: &str, key: &str| -> Option<&String> {
            ini.get(section).and_then(|s| s.get(key))
        };

        macro_rules! set {
            ($dst:expr, $sec:literal, $key:literal, $ty:ty) => {
                if let Some(raw) = get($sec, $key) {
                    $dst = parse_field::<$ty>($sec, $key, raw)?;
                }
            };
        }

        if let Some(raw) = get("experiment", "transceiver") {
            self.link.transceiver = parse_transceiver(raw)?;
        }
        if let Some(raw) = get("experiment", "pulse") {
            self.link.pulse = pulse_by_name(raw)?;
        }
        set!(self.link.order, "experiment", "order", usize);
        set!(self.link.m, "experiment", "m", usize);
        set!(self.link.channel.n_tx, "experiment", "nt", usize);
        set!(self.link.channel.n_rx, "experiment", "nr", usize);
        set!(self.link.pt_dbw, "experiment", "pt_dbw", f64);
        set!(self.link.channel.distance_m, "experiment", "distance_m", f64);
        set!(self.seed, "experiment", "seed", u64);

        self.apply_pulse_section(&ini)?;

        set!(self.link.channel.carrier_hz, "channel", "carrier_hz", f64);
        set!(self.link.channel.bandwidth_hz, "channel", "bandwidth_hz", f64);
        set!(
            self.link.channel.path_loss_exponent,
            "channel",
            "path_loss_exponent",
            f64
        );
        set!(self.link.channel.clusters, "channel", "clusters", usize);
        set!(
            self.link.channel.rays_per_cluster,
            "channel",
            "rays_per_cluster",
            usize
        );
        if let Some(raw) = get("channel", "angle_spread_deg") {
            self.link.channel.angle_spread_rad =
                parse_field::<f64>("channel", "angle_spread_deg", raw)?.to_radians();
        }
        set!(self.link.channel.taps, "channel", "taps", usize);

        set!(self.link.noise.psd_dbm_hz, "noise", "psd_dbm_hz", f64);
        set!(self.link.noise.noise_figure_db, "noise", "noise_figure_db", f64);

        set!(self.link.symbol_vectors, "mc", "symbol_vectors", usize);
        set!(self.realizations, "mc", "realizations", usize);

        set!(self.link.fde_k, "fde", "k", usize);
        if let Some(raw) = get("fde", "cp") {
            self.link.fde_cp = if raw == "auto" {
                None
            } else {
                Some(parse_field::<usize>("fde", "cp", raw)?)
            };
        }
        set!(self.link.charge_cp_overhead, "fde", "charge_overhead", bool);

        if let Some(raw) = get("sweep", "axis") {
            self.axis = match raw.as_str() {
                "distance" => SweepAxis::Distance,
                "power" => SweepAxis::Power,
                other => {
                    return Err(Error::Config(format!(
                        "unknown sweep axis `{other}` (distance|power)"
                    )))
                }
            };
        }
        if let Some(raw) = get("sweep", "grid") {
            self.grid = parse_grid(raw)?;
        }
        Ok(())
    }

    fn apply_pulse_section(
        &mut self,
        ini: &BTreeMap<String, BTreeMap<String, String>>,
    ) -> Result<()> {
        let Some(section) = ini.get("pulse") else {
            return Ok(());
        };
        match &mut self.link.pulse {
            PulseSpec::Rrc {
                rolloff,
                oversampling,
                span,
            } => {
                if let Some(raw) = section.get("rolloff") {
                    *rolloff = parse_field("pulse", "rolloff", raw)?;
                }
                if let Some(raw) = section.get("oversampling") {
                    *oversampling = parse_field("pulse", "oversampling", raw)?;
                }
                if let Some(raw) = section.get("span") {
                    *span = parse_field("pulse", "span", raw)?;
                }
            }
            PulseSpec::Phydyas {
                oversampling,
                strict_p3,
                ..
            } => {
                if let Some(raw) = section.get("oversampling") {
                    *oversampling = parse_field("pulse", "oversampling", raw)?;
                }
                if let Some(raw) = section.get("strict_p3") {
                    *strict_p3 = parse_field("pulse", "strict_p3", raw)?;
                }
            }
            PulseSpec::DolphChebyshev {
                taps,
                attenuation_db,
                oversampling,
            } => {
                if let Some(raw) = section.get("taps") {
                    *taps = parse_field("pulse", "taps", raw)?;
                }
                if let Some(raw) = section.get("attenuation_db") {
                    *attenuation_db = parse_field("pulse", "attenuation_db", raw)?;
                }
                if let Some(raw) = section.get("oversampling") {
                    *oversampling = parse_field("pulse", "oversampling", raw)?;
                }
            }
        }
        Ok(())
    }

    /// Applies command-line overrides on top of file values.
    pub fn apply_overrides(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(t) = &ov.transceiver {
            self.link.transceiver = parse_transceiver(t)?;
        }
        if let Some(p) = &ov.pulse {
            self.link.pulse = pulse_by_name(p)?;
        }
        if let Some(v) = ov.order {
            self.link.order = v;
        }
        if let Some(v) = ov.m {
            self.link.m = v;
        }
        if let Some(v) = ov.nt {
            self.link.channel.n_tx = v;
        }
        if let Some(v) = ov.nr {
            self.link.channel.n_rx = v;
        }
        if let Some(v) = ov.pt_dbw {
            self.link.pt_dbw = v;
        }
        if let Some(v) = ov.distance {
            self.link.channel.distance_m = v;
        }
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = ov.realizations {
            self.realizations = v;
        }
        if let Some(raw) = &ov.grid {
            self.grid = parse_grid(raw)?;
        }
        Ok(())
    }
}

/// Optional command-line overrides; `None` keeps the current value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub transceiver: Option<String>,
    pub pulse: Option<String>,
    pub order: Option<usize>,
    pub m: Option<usize>,
    pub nt: Option<usize>,
    pub nr: Option<usize>,
    pub pt_dbw: Option<f64>,
    pub distance: Option<f64>,
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub grid: Option<String>,
}

fn parse_transceiver(raw: &str) -> Result<Transceiver> {
    match raw.to_ascii_lowercase().as_str() {
        "tde" => Ok(Transceiver::Tde),
        "fde" => Ok(Transceiver::Fde),
        other => Err(Error::Config(format!(
            "unknown transceiver `{other}` (tde|fde)"
        ))),
    }
}

fn pulse_by_name(raw: &str) -> Result<PulseSpec<f64>> {
    match raw.to_ascii_lowercase().as_str() {
        "rrc" => Ok(PulseSpec::rrc_default()),
        "phydyas" => Ok(PulseSpec::phydyas_default()),
        "dc" => Ok(PulseSpec::dc_default()),
        other => Err(Error::Config(format!(
            "unknown pulse `{other}` (rrc|phydyas|dc)"
        ))),
    }
}

fn parse_field<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::Config(format!("bad value `{raw}` for [{section}] {key}"))
    })
}

fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad grid value `{t}`")))
        })
        .collect()
}

/// Minimal INI-style parser: `[section]` headers, `key = value` pairs,
/// `#`/`;` comments. Later duplicate keys win.
pub fn parse_ini(text: &str) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut section = String::from("");
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') {
            let end = line
                .find(']')
                .ok_or_else(|| Error::Parse(format!("line {}: unclosed section", lineno + 1)))?;
            section = line[1..end].trim().to_string();
            out.entry(section.clone()).or_default();
            continue;
        }
        let eq = line
            .find('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        out.entry(section.clone()).or_default().insert(key, value);
    }
    Ok(out)
}
