//! Run configuration.
//!
//! A configuration file is TOML with up to four tables. Every key is
//! optional; a missing key takes the default listed here, so an empty file
//! is a complete configuration. Keys carry their unit in the suffix and
//! frequencies are ordinary (not angular) frequencies; they are converted to
//! rad/s when the core types are built.
//!
//! ```toml
//! [trap]
//! species = "be9"          # only 9Be+ is supported
//! n_ions = 1               # 1..=128
//! omega_z_khz = 735.0      # axial trap frequency
//! omega_x_khz = 3300.0     # radial trap frequency
//! wavelength_nm = 313.0    # Raman wavelength, Δk = √2·2π/λ
//! # delta_k_per_um = 28.4  # overrides wavelength_nm when present
//!
//! [drive]
//! omega0_khz = 300.0       # peak carrier Rabi frequency
//! # eta = 0.78             # default: COM value of the trap above
//! omega24_khz = 700.0      # pump Rabi frequencies at pump_scale = 1
//! omega34_khz = 600.0
//! detuning_khz = -10.0     # pump detuning δ
//! linewidth_mhz = 19.4     # excited-state linewidth Γ/2π
//! pump_scale = [1.0]       # one cooling run per entry
//!
//! [simulation]
//! nbar0 = 6.0              # initial mean phonon number
//! duration_us = 300.0      # continuous cooling duration
//! # dt_ns = 1.0            # default: largest stable step
//! cooling_rate = "total_linewidth"  # or "partial_linewidth", "photon_counting"
//! rsb_index = "standard"   # or "upper_level"
//! prsc_pulses = 50
//! prsc_window_us = 100.0   # pulse lengths searched on [0, window]
//! prsc_grid = 1000
//! axis = "axial"           # or "radial"; scaling and modes
//! n_max = 100              # largest chain in the scaling table
//! mode = 0                 # sideband mode index, 0 = lowest axial
//! nbar_max = 3.0           # sideband ratio grid 0..=nbar_max
//! nbar_step = 0.1
//! expansion = "third"      # or "third_reversed", "full"
//! # probe_time_us = 15.0   # default: brightest blue sideband
//! spectrum_nbar = 0.5
//! spectrum_span_khz = 40.0 # detuning scan ± span around each sideband
//! spectrum_points = 81
//! com_nbar = 1.5           # carrier flopping: COM occupation
//! spectator_nbar = 0.0     # occupation of every other axial mode
//! flop_duration_us = 15.0
//! flop_points = 61
//! waist_um = 270.0         # Raman beam waist along the chain
//! mc_samples = 20000       # used when exact enumeration is too large
//! seed = 2024
//!
//! [output]
//! # directory = "out"      # default: $RSC_OUT_DIR, then "out"
//! formats = ["csv", "json"]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rsc_core::chain::{Axis, IonSpecies, TrapConfig};
use rsc_core::constants::khz;
use rsc_core::crsc::{CoolingRate, CrscConfig};
use rsc_core::sideband::Expansion;
use rsc_core::specfun::RsbIndex;
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config file {} not found", path.display())]
    Missing { path: PathBuf },
    #[error("cannot read config file {}: {message}", path.display())]
    Unreadable { path: PathBuf, message: String },
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("invalid value for `{key}`: {reason}")]
    OutOfRange { key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapSection {
    pub species: String,
    pub n_ions: usize,
    pub omega_z_khz: f64,
    pub omega_x_khz: f64,
    pub wavelength_nm: f64,
    pub delta_k_per_um: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveSection {
    pub omega0_khz: f64,
    pub eta: Option<f64>,
    pub omega24_khz: f64,
    pub omega34_khz: f64,
    pub detuning_khz: f64,
    pub linewidth_mhz: f64,
    pub pump_scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSection {
    pub nbar0: f64,
    pub duration_us: f64,
    pub dt_ns: Option<f64>,
    pub cooling_rate: String,
    pub rsb_index: String,
    pub prsc_pulses: usize,
    pub prsc_window_us: f64,
    pub prsc_grid: usize,
    pub axis: String,
    pub n_max: usize,
    pub mode: usize,
    pub nbar_max: f64,
    pub nbar_step: f64,
    pub expansion: String,
    pub probe_time_us: Option<f64>,
    pub spectrum_nbar: f64,
    pub spectrum_span_khz: f64,
    pub spectrum_points: usize,
    pub com_nbar: f64,
    pub spectator_nbar: f64,
    pub flop_duration_us: f64,
    pub flop_points: usize,
    pub waist_um: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub directory: Option<String>,
    pub formats: Vec<String>,
}

/// A fully validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub trap: TrapSection,
    pub drive: DriveSection,
    pub simulation: SimulationSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config_str("").expect("defaults are valid")
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ConfigError::Missing {
            path: path.to_path_buf(),
        },
        _ => ConfigError::Unreadable {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1);
        ConfigError::Syntax {
            line,
            message: e.message().to_string(),
        }
    })?;
    for (key, value) in &root {
        if !["trap", "drive", "simulation", "output"].contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { key: key.clone() });
        }
        if !value.is_table() {
            return Err(out_of_range(key, "must be a table"));
        }
    }

    let mut s = Section::new(&root, "trap");
    let trap = TrapSection {
        species: s.choice("species", "be9", &["be9"])?,
        n_ions: s.int("n_ions", 1, 1, rsc_core::chain::MAX_IONS)?,
        omega_z_khz: s.positive("omega_z_khz", 735.0)?,
        omega_x_khz: s.positive("omega_x_khz", 3300.0)?,
        wavelength_nm: s.positive("wavelength_nm", 313.0)?,
        delta_k_per_um: s.optional_positive("delta_k_per_um")?,
    };
    s.finish()?;

    let mut s = Section::new(&root, "drive");
    let drive = DriveSection {
        omega0_khz: s.positive("omega0_khz", 300.0)?,
        eta: s.optional_positive("eta")?,
        omega24_khz: s.non_negative("omega24_khz", 700.0)?,
        omega34_khz: s.non_negative("omega34_khz", 600.0)?,
        detuning_khz: s.real("detuning_khz", -10.0)?,
        linewidth_mhz: s.positive("linewidth_mhz", 19.4)?,
        pump_scale: s.list("pump_scale", &[1.0])?,
    };
    s.finish()?;

    let mut s = Section::new(&root, "simulation");
    let simulation = SimulationSection {
        nbar0: s.positive("nbar0", 6.0)?,
        duration_us: s.non_negative("duration_us", 300.0)?,
        dt_ns: s.optional_positive("dt_ns")?,
        cooling_rate: s.choice(
            "cooling_rate",
            "total_linewidth",
            &["total_linewidth", "partial_linewidth", "photon_counting"],
        )?,
        rsb_index: s.choice("rsb_index", "standard", &["standard", "upper_level"])?,
        prsc_pulses: s.int("prsc_pulses", 50, 0, 100_000)?,
        prsc_window_us: s.non_negative("prsc_window_us", 100.0)?,
        prsc_grid: s.int("prsc_grid", 1000, 1, 10_000_000)?,
        axis: s.choice("axis", "axial", &["axial", "radial"])?,
        n_max: s.int("n_max", 100, 1, rsc_core::chain::MAX_IONS)?,
        mode: s.int("mode", 0, 0, rsc_core::chain::MAX_IONS - 1)?,
        nbar_max: s.positive("nbar_max", 3.0)?,
        nbar_step: s.positive("nbar_step", 0.1)?,
        expansion: s.choice("expansion", "third", &["third", "third_reversed", "full"])?,
        probe_time_us: s.optional_non_negative("probe_time_us")?,
        spectrum_nbar: s.non_negative("spectrum_nbar", 0.5)?,
        spectrum_span_khz: s.positive("spectrum_span_khz", 40.0)?,
        spectrum_points: s.int("spectrum_points", 81, 1, 100_000)?,
        com_nbar: s.non_negative("com_nbar", 1.5)?,
        spectator_nbar: s.non_negative("spectator_nbar", 0.0)?,
        flop_duration_us: s.positive("flop_duration_us", 15.0)?,
        flop_points: s.int("flop_points", 61, 2, 1_000_000)?,
        waist_um: s.positive("waist_um", 270.0)?,
        mc_samples: s.int(
            "mc_samples",
            20_000,
            rsc_core::carrier::MIN_MC_SAMPLES,
            100_000_000,
        )?,
        seed: s.int("seed", 2024, 0, i64::MAX as usize)? as u64,
    };
    s.finish()?;

    let mut s = Section::new(&root, "output");
    let output = OutputSection {
        directory: s.optional_string("directory")?,
        formats: s.string_list("formats", &["csv", "json"], &["csv", "json"])?,
    };
    s.finish()?;

    let cfg = RunConfig {
        trap,
        drive,
        simulation,
        output,
    };
    cfg.check_consistency()?;
    Ok(cfg)
}

fn out_of_range(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::OutOfRange {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Reads keys from one table and remembers which were consumed.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str) -> Self {
        Section {
            name,
            table: root.get(name).and_then(Value::as_table),
            used: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn number(&self, key: &str, v: &Value) -> Result<f64, ConfigError> {
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => return Err(out_of_range(&self.path(key), "expected a number")),
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(out_of_range(&self.path(key), "must be finite"))
        }
    }

    fn checked(
        &mut self,
        key: &'static str,
        default: Option<f64>,
        ok: fn(f64) -> bool,
        reason: &str,
    ) -> Result<Option<f64>, ConfigError> {
        let Some(v) = self.get(key) else {
            return Ok(default);
        };
        let x = self.number(key, v)?;
        if ok(x) {
            Ok(Some(x))
        } else {
            Err(out_of_range(&self.path(key), format!("{reason}, got {x}")))
        }
    }

    fn real(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.checked(key, Some(default), |_| true, "")?.unwrap())
    }

    fn positive(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        Ok(self
            .checked(key, Some(default), |x| x > 0.0, "must be positive")?
            .unwrap())
    }

    fn non_negative(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        Ok(self
            .checked(key, Some(default), |x| x >= 0.0, "must be non-negative")?
            .unwrap())
    }

    fn optional_positive(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.checked(key, None, |x| x > 0.0, "must be positive")
    }

    fn optional_non_negative(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.checked(key, None, |x| x >= 0.0, "must be non-negative")
    }

    fn int(
        &mut self,
        key: &'static str,
        default: usize,
        min: usize,
        max: usize,
    ) -> Result<usize, ConfigError> {
        let Some(v) = self.get(key) else {
            return Ok(default);
        };
        let Some(i) = v.as_integer() else {
            return Err(out_of_range(&self.path(key), "expected an integer"));
        };
        if i < min as i64 || i as u64 > max as u64 {
            return Err(out_of_range(
                &self.path(key),
                format!("must lie in {min}..={max}, got {i}"),
            ));
        }
        Ok(i as usize)
    }

    fn choice(
        &mut self,
        key: &'static str,
        default: &str,
        allowed: &[&str],
    ) -> Result<String, ConfigError> {
        let Some(v) = self.get(key) else {
            return Ok(default.to_string());
        };
        match v.as_str() {
            Some(s) if allowed.contains(&s) => Ok(s.to_string()),
            _ => Err(out_of_range(
                &self.path(key),
                format!("expected one of {}", allowed.join(", ")),
            )),
        }
    }

    fn optional_string(&mut self, key: &'static str) -> Result<Option<String>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) if !s.is_empty() => Ok(Some(s.clone())),
            Some(_) => Err(out_of_range(&self.path(key), "expected a non-empty string")),
        }
    }

    fn list(&mut self, key: &'static str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let Some(v) = self.get(key) else {
            return Ok(default.to_vec());
        };
        let items = match v {
            Value::Array(a) => a.clone(),
            single => vec![single.clone()],
        };
        if items.is_empty() {
            return Err(out_of_range(&self.path(key), "must not be empty"));
        }
        items
            .iter()
            .map(|item| {
                let x = self.number(key, item)?;
                if x >= 0.0 {
                    Ok(x)
                } else {
                    Err(out_of_range(
                        &self.path(key),
                        format!("entries must be non-negative, got {x}"),
                    ))
                }
            })
            .collect()
    }

    fn string_list(
        &mut self,
        key: &'static str,
        default: &[&str],
        allowed: &[&str],
    ) -> Result<Vec<String>, ConfigError> {
        let Some(v) = self.get(key) else {
            return Ok(default.iter().map(|s| s.to_string()).collect());
        };
        let bad = || {
            out_of_range(
                &self.path(key),
                format!("expected a list drawn from {}", allowed.join(", ")),
            )
        };
        let items = v.as_array().ok_or_else(bad)?;
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item.as_str() {
                Some(s) if allowed.contains(&s) => out.push(s.to_string()),
                _ => return Err(bad()),
            }
        }
        Ok(out)
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(t) = self.table {
            if let Some(key) = t.keys().find(|k| !self.used.contains(k.as_str())) {
                return Err(ConfigError::UnknownKey {
                    key: format!("{}.{key}", self.name),
                });
            }
        }
        Ok(())
    }
}

impl RunConfig {
    fn check_consistency(&self) -> Result<(), ConfigError> {
        if self.simulation.mode >= self.trap.n_ions {
            return Err(out_of_range(
                "simulation.mode",
                format!("must be below trap.n_ions = {}", self.trap.n_ions),
            ));
        }
        if self.simulation.nbar_step > self.simulation.nbar_max {
            return Err(out_of_range(
                "simulation.nbar_step",
                "must not exceed simulation.nbar_max",
            ));
        }
        Ok(())
    }

    pub fn species(&self) -> IonSpecies {
        IonSpecies::beryllium9()
    }

    /// Trap in rad/s with the configured wavevector difference.
    pub fn trap_config(&self) -> rsc_core::Result<TrapConfig> {
        self.trap_with_ions(self.trap.n_ions)
    }

    pub fn trap_with_ions(&self, n_ions: usize) -> rsc_core::Result<TrapConfig> {
        let t = &self.trap;
        let delta_k = match t.delta_k_per_um {
            Some(k) => k * 1e6,
            None => core::f64::consts::SQRT_2 * 2.0 * core::f64::consts::PI / (t.wavelength_nm * 1e-9),
        };
        TrapConfig::with_delta_k(
            self.species(),
            n_ions,
            khz(t.omega_z_khz),
            khz(t.omega_x_khz),
            delta_k,
        )
    }

    pub fn omega0(&self) -> f64 {
        khz(self.drive.omega0_khz)
    }

    /// Configured `η`, or the trap's value at the axial frequency.
    pub fn eta(&self) -> rsc_core::Result<f64> {
        match self.drive.eta {
            Some(e) => Ok(e),
            None => {
                let cfg = self.trap_config()?;
                Ok(cfg.lamb_dicke(cfg.omega_z))
            }
        }
    }

    pub fn axis(&self) -> Axis {
        parse_axis(&self.simulation.axis).expect("validated")
    }

    pub fn expansion(&self) -> Expansion {
        match self.simulation.expansion.as_str() {
            "third_reversed" => Expansion::ThirdReversed,
            "full" => Expansion::Full { order: 1 },
            _ => Expansion::Third,
        }
    }

    /// Continuous-cooling parameters at `pump_scale`.
    pub fn crsc_config(&self, pump_scale: f64) -> rsc_core::Result<CrscConfig> {
        let d = &self.drive;
        Ok(CrscConfig {
            omega24: khz(d.omega24_khz),
            omega34: khz(d.omega34_khz),
            delta: khz(d.detuning_khz),
            gamma: rsc_core::constants::mhz(d.linewidth_mhz),
            rate: match self.simulation.cooling_rate.as_str() {
                "partial_linewidth" => CoolingRate::PartialLinewidth,
                "photon_counting" => CoolingRate::PhotonCounting,
                _ => CoolingRate::TotalLinewidth,
            },
            index: match self.simulation.rsb_index.as_str() {
                "upper_level" => RsbIndex::UpperLevel,
                _ => RsbIndex::Standard,
            },
            pump_scale,
            ..CrscConfig::beryllium(self.eta()?, self.omega0())
        })
    }

    /// Hex SHA-256 of the physics sections. The output section does not
    /// affect results and is left out.
    pub fn hash(&self) -> String {
        let physics = (&self.trap, &self.drive, &self.simulation);
        let bytes = serde_json::to_vec(&physics).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

pub fn parse_axis(s: &str) -> Option<Axis> {
    match s {
        "axial" => Some(Axis::Axial),
        "radial" => Some(Axis::Radial),
        _ => None,
    }
}
