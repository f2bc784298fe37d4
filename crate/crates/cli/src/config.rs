//! Configuration files, environment overrides and their resolution into
//! engine configs.
//!
//! Files are TOML with one section per concern. Any key can be overridden
//! through an environment variable named `FDCR_<SECTION>_<KEY>` in upper
//! case, e.g. `FDCR_SIM_SEED=7` or `FDCR_RSI_CHI_SQ_DB=-30`. Command-line
//! flags win over both.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use fdcr::analysis::{log_grid, DEFAULT_TAUS};
use fdcr::engine::{DsaConfig, Protocol, ScenarioConfig};
use fdcr::protocols::LbtConfig;
use fdcr::radio::{db_to_linear, PuTrafficModel, RadioParams, RsiFamily, RsiModel, Synthesis};
use fdcr::sensing::StatisticModel;

use crate::error::CliError;

pub const ENV_PREFIX: &str = "FDCR_";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub radio: RadioSection,
    pub rsi: RsiSection,
    pub traffic: TrafficSection,
    pub sensing: SensingSection,
    pub protocol: ProtocolSection,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub compare: CompareSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub noise_power: Option<f64>,
    pub noise_power_db: Option<f64>,
    pub pu_rx_power: Option<f64>,
    pub pu_rx_power_db: Option<f64>,
    pub tx_power: Option<f64>,
    pub tx_power_db: Option<f64>,
    pub link_gain: Option<f64>,
    pub link_gain_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    #[default]
    Gaussian,
    Rayleigh,
    Rician,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsiSection {
    pub chi_sq: Option<f64>,
    pub chi_sq_db: Option<f64>,
    pub family: FamilyName,
    pub k_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub p_idle_to_busy: f64,
    pub p_busy_to_idle: f64,
}

impl Default for TrafficSection {
    fn default() -> Self {
        Self {
            p_idle_to_busy: 0.05,
            p_busy_to_idle: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    #[default]
    Exact,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisName {
    #[default]
    Statistic,
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingSection {
    pub n_samples: i64,
    pub pd_target: f64,
    pub model: ModelName,
    pub synthesis: SynthesisName,
}

impl Default for SensingSection {
    fn default() -> Self {
        Self {
            n_samples: 100,
            pd_target: 0.95,
            model: ModelName::Exact,
            synthesis: SynthesisName::Statistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Lat,
    Lbt,
    Dsa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub mode: ModeName,
    pub sensing_fraction: f64,
    pub n_sus: i64,
    pub backoff_window: i64,
    pub packet_length: i64,
    pub fd_abort: bool,
    pub su_cross_power: Option<f64>,
    pub su_cross_power_db: Option<f64>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let d = DsaConfig::default();
        Self {
            mode: ModeName::Lat,
            sensing_fraction: 0.15,
            n_sus: d.n_sus as i64,
            backoff_window: i64::from(d.backoff_window),
            packet_length: i64::from(d.packet_length),
            fd_abort: d.fd_abort,
            su_cross_power: None,
            su_cross_power_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub n_slots: i64,
    pub warmup_slots: i64,
    pub seed: u64,
    pub thin_trace: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            n_slots: 100_000,
            warmup_slots: 100,
            seed: 1,
            thin_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub p_min_db: f64,
    pub p_max_db: f64,
    pub points: i64,
    /// One curve per entry.
    pub chi_sq: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            p_min_db: 5.0,
            p_max_db: 45.0,
            points: 40,
            chi_sq: vec![0.9, 0.1, 0.01, 0.001, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub taus: Vec<f64>,
    /// Powers to compare at; the sweep grid when empty.
    pub tx_power_db: Vec<f64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            taus: DEFAULT_TAUS.to_vec(),
            tx_power_db: Vec::new(),
        }
    }
}

/// Everything a subcommand needs, fully resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub scenario: ScenarioConfig,
    pub power_grid: Vec<f64>,
    pub sweep_chi_sq: Vec<f64>,
    pub compare_powers: Vec<f64>,
    pub taus: Vec<f64>,
    /// The file-level view that produced `scenario`, for the manifest.
    pub file: FileConfig,
}

/// Command-line overrides, applied last.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub slots: Option<u64>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parse TOML text into a table, reporting syntax errors as config errors.
pub fn parse_table(text: &str) -> Result<Table, CliError> {
    text.parse::<Table>()
        .map_err(|e| config_error(format!("malformed config: {e}")))
}

/// Interpret an environment value as a TOML scalar or array, falling back
/// to a bare string (`FDCR_PROTOCOL_MODE=lbt`).
fn env_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

const SECTIONS: [&str; 8] = [
    "radio", "rsi", "traffic", "sensing", "protocol", "sim", "sweep", "compare",
];

/// Overlay `FDCR_<SECTION>_<KEY>` variables onto a parsed table.
pub fn apply_env<I>(table: &mut Table, vars: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<_> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = name[ENV_PREFIX.len()..].to_ascii_lowercase();
        let Some(section) = SECTIONS.iter().find(|s| rest.starts_with(&format!("{s}_"))) else {
            return Err(config_error(format!(
                "environment variable {name} does not name a config section ({})",
                SECTIONS.join(", ")
            )));
        };
        let key = rest[section.len() + 1..].to_string();
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        let Value::Table(sec) = entry else {
            return Err(config_error(format!("[{section}] must be a table")));
        };
        sec.insert(key, env_value(&raw));
    }
    Ok(())
}

pub fn file_config_from_table(table: Table) -> Result<FileConfig, CliError> {
    FileConfig::deserialize(table).map_err(|e| config_error(format!("invalid config: {e}")))
}

fn either(linear: Option<f64>, db: Option<f64>, name: &str, default: f64) -> Result<f64, CliError> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(config_error(format!(
            "both `{name}` and `{name}_db` given; use one"
        ))),
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(db_to_linear(d)),
        (None, None) => Ok(default),
    }
}

fn count<T: TryFrom<i64>>(value: i64, name: &str, min: i64) -> Result<T, CliError> {
    if value < min {
        return Err(config_error(format!(
            "`{name}` = {value}: expected an integer >= {min}"
        )));
    }
    T::try_from(value).map_err(|_| config_error(format!("`{name}` = {value}: out of range")))
}

impl FileConfig {
    /// Build and validate the engine config and experiment grids.
    pub fn resolve(&self, flags: FlagOverrides) -> Result<Settings, CliError> {
        let base = ScenarioConfig::default();
        let r = &self.radio;
        let radio = RadioParams {
            noise_power: either(
                r.noise_power,
                r.noise_power_db,
                "noise_power",
                base.radio.noise_power,
            )?,
            pu_rx_power: either(
                r.pu_rx_power,
                r.pu_rx_power_db,
                "pu_rx_power",
                base.radio.pu_rx_power,
            )?,
            link_gain: either(
                r.link_gain,
                r.link_gain_db,
                "link_gain",
                base.radio.link_gain,
            )?,
            tx_power: either(r.tx_power, r.tx_power_db, "tx_power", base.radio.tx_power)?,
        };
        let family = match self.rsi.family {
            FamilyName::Gaussian => RsiFamily::Gaussian,
            FamilyName::Rayleigh => RsiFamily::Rayleigh,
            FamilyName::Rician => RsiFamily::Rician {
                k_factor: self.rsi.k_factor.unwrap_or(3.0),
            },
        };
        if self.rsi.k_factor.is_some() && self.rsi.family != FamilyName::Rician {
            return Err(config_error(
                "`k_factor` only applies to family = \"rician\"",
            ));
        }
        let rsi = RsiModel {
            chi_sq: either(
                self.rsi.chi_sq,
                self.rsi.chi_sq_db,
                "chi_sq",
                base.rsi.chi_sq,
            )?,
            family,
        };
        let p = &self.protocol;
        let protocol = match p.mode {
            ModeName::Lat => Protocol::Lat,
            ModeName::Lbt => {
                Protocol::Lbt(LbtConfig::new(p.sensing_fraction).map_err(CliError::from)?)
            }
            ModeName::Dsa => Protocol::Dsa(self.dsa_config()?),
        };
        let n_slots = flags.slots.map_or(Ok(self.sim.n_slots), |s| {
            i64::try_from(s).map_err(|_| config_error("--slots out of range"))
        })?;
        let scenario = ScenarioConfig {
            radio,
            rsi,
            traffic: PuTrafficModel::new(self.traffic.p_idle_to_busy, self.traffic.p_busy_to_idle)?,
            n_samples_per_slot: count(self.sensing.n_samples, "n_samples", 1)?,
            protocol,
            pd_target: self.sensing.pd_target,
            statistic_model: match self.sensing.model {
                ModelName::Exact => StatisticModel::Exact,
                ModelName::Gaussian => StatisticModel::Gaussian,
            },
            synthesis: match self.sensing.synthesis {
                SynthesisName::Statistic => Synthesis::Statistic,
                SynthesisName::Samples => Synthesis::Samples,
            },
            n_slots: count(n_slots, "n_slots", 1)?,
            warmup_slots: count(self.sim.warmup_slots, "warmup_slots", 0)?,
            seed: flags.seed.unwrap_or(self.sim.seed),
            thin_trace: self.sim.thin_trace,
        };
        scenario.validate()?;
        if scenario.warmup_slots >= scenario.n_slots {
            return Err(config_error(format!(
                "`warmup_slots` = {}: expected fewer than n_slots = {}",
                scenario.warmup_slots, scenario.n_slots
            )));
        }
        let s = &self.sweep;
        let power_grid = log_grid(
            db_to_linear(s.p_min_db),
            db_to_linear(s.p_max_db),
            count(s.points, "points", 1)?,
        )?;
        for &chi in &s.chi_sq {
            RsiModel {
                chi_sq: chi,
                family,
            }
            .validate()?;
        }
        let compare_powers = if self.compare.tx_power_db.is_empty() {
            power_grid.clone()
        } else {
            self.compare
                .tx_power_db
                .iter()
                .map(|&d| db_to_linear(d))
                .collect()
        };
        for &t in &self.compare.taus {
            LbtConfig::new(t)?;
        }
        if self.compare.taus.is_empty() {
            return Err(config_error(
                "`taus` must list at least one sensing fraction",
            ));
        }
        let mut file = self.clone();
        file.sim.seed = scenario.seed;
        file.sim.n_slots = scenario.n_slots as i64;
        Ok(Settings {
            scenario,
            power_grid,
            sweep_chi_sq: s.chi_sq.clone(),
            compare_powers,
            taus: self.compare.taus.clone(),
            file,
        })
    }

    pub fn dsa_config(&self) -> Result<DsaConfig, CliError> {
        let p = &self.protocol;
        Ok(DsaConfig {
            n_sus: count(p.n_sus, "n_sus", 1)?,
            backoff_window: count(p.backoff_window, "backoff_window", 1)?,
            packet_length: count(p.packet_length, "packet_length", 1)?,
            fd_abort: p.fd_abort,
            su_cross_power: either(
                p.su_cross_power,
                p.su_cross_power_db,
                "su_cross_power",
                DsaConfig::default().su_cross_power,
            )?,
        })
    }
}

/// Parse, overlay the environment and resolve in one step.
pub fn load<I>(text: &str, env: I, flags: FlagOverrides) -> Result<Settings, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut table = parse_table(text)?;
    apply_env(&mut table, env)?;
    file_config_from_table(table)?.resolve(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn empty_file_gives_defaults() {
        let s = load("", no_env(), FlagOverrides::default()).unwrap();
        assert_eq!(s.scenario, ScenarioConfig::default());
        assert_eq!(s.power_grid.len(), 40);
        assert_eq!(s.taus, DEFAULT_TAUS.to_vec());
    }

    #[test]
    fn decibel_keys() {
        let s = load(
            "[rsi]\nchi_sq_db = -20\n",
            no_env(),
            FlagOverrides::default(),
        )
        .unwrap();
        assert!((s.scenario.rsi.chi_sq - 0.01).abs() < 1e-15);
        let both = load(
            "[radio]\ntx_power = 2\ntx_power_db = 3\n",
            no_env(),
            FlagOverrides::default(),
        );
        assert!(matches!(both, Err(CliError::Config(m)) if m.contains("tx_power")));
    }

    #[test]
    fn range_errors_name_the_key() {
        let err = load(
            "[sensing]\npd_target = 1.5\n",
            no_env(),
            FlagOverrides::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("pd_target"), "{err}");
        let err = load("[sim]\nn_slots = 0\n", no_env(), FlagOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("n_slots"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load("[sim]\nslots = 5\n", no_env(), FlagOverrides::default()).unwrap_err();
        assert!(err.to_string().contains("slots"), "{err}");
        assert!(load("[nope]\n", no_env(), FlagOverrides::default()).is_err());
    }

    #[test]
    fn environment_then_flags() {
        let env = vec![
            ("FDCR_SIM_SEED".to_string(), "7".to_string()),
            ("FDCR_PROTOCOL_MODE".to_string(), "lbt".to_string()),
            ("FDCR_RSI_CHI_SQ".to_string(), "0.1".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ];
        let s = load("[sim]\nseed = 3\n", env.clone(), FlagOverrides::default()).unwrap();
        assert_eq!(s.scenario.seed, 7);
        assert_eq!(s.scenario.rsi.chi_sq, 0.1);
        assert!(matches!(s.scenario.protocol, Protocol::Lbt(_)));
        let s = load(
            "",
            env,
            FlagOverrides {
                seed: Some(9),
                slots: Some(500),
            },
        )
        .unwrap();
        assert_eq!((s.scenario.seed, s.scenario.n_slots), (9, 500));
        let bad = vec![("FDCR_WHATEVER".to_string(), "1".to_string())];
        assert!(load("", bad, FlagOverrides::default()).is_err());
    }

    #[test]
    fn resolved_file_round_trips() {
        let s = load(
            "[rsi]\nchi_sq_db = -30\n[protocol]\nmode = \"dsa\"\n",
            no_env(),
            FlagOverrides {
                seed: Some(4),
                slots: None,
            },
        )
        .unwrap();
        let json = serde_json::to_string(&s.file).unwrap();
        let file: FileConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(file.resolve(FlagOverrides::default()).unwrap(), s);
    }
}
