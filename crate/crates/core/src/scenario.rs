//! Flat `key = value` scenario files.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and
//! overrides the desk-scale default; unknown keys are errors.
//!
//! | key | value |
//! |-----|-------|
//! | `name` | scenario label used in outputs |
//! | `num_macro`, `num_small`, `num_ues` | counts |
//! | `quotas` | comma list, one per BS (macros first) |
//! | `bs_array`, `ue_array` | planar array as `ROWSxCOLS` |
//! | `streams_per_ue` | mmWave streams per UE |
//! | `macro_tx_power_dbm`, `small_tx_power_dbm` | dBm |
//! | `macro_freq_ghz`, `small_freq_ghz` | GHz |
//! | `noise_psd_dbm_hz`, `bandwidth_hz` | noise density and bandwidth |
//! | `area_side_m` | side of the square area |
//! | `clusters`, `rays_per_cluster` | mmWave cluster model |
//! | `los_d1_m`, `los_d2_m` | LoS probability parameters |
//! | `pl_sub6_los`, `pl_sub6_nlos`, `pl_mmwave_los`, `pl_mmwave_nlos` | `alpha_db,beta,sigma_db` |
//! | `min_separation_m`, `bs_height_m`, `ue_height_m` | geometry |
//! | `seed` | base seed |
//! | `solvers` | comma list of `ea`, `da`, `wcs`, `oracle` |
//! | `drops`, `realizations` | Monte-Carlo sizes |
//! | `max_rounds`, `wcs_max_moves`, `oracle_budget` | solver limits |

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{parse_solvers, Solver};
use crate::netgen::{ArrayShape, NetworkConfig, PathlossParams};

/// Experiment settings a scenario file may carry alongside the network.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanSettings {
    pub solvers: Option<Vec<Solver>>,
    pub drops: Option<usize>,
    pub realizations: Option<usize>,
    pub max_rounds: Option<usize>,
    pub wcs_max_moves: Option<usize>,
    pub oracle_budget: Option<u128>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub name: String,
    pub config: NetworkConfig,
    pub plan: PlanSettings,
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.trim().parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn parse_list(v: &str) -> std::result::Result<Vec<usize>, String> {
    v.split(',').map(parse_num).collect()
}

fn parse_array(v: &str) -> std::result::Result<ArrayShape, String> {
    let (r, c) = v
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("array `{v}` must look like 8x8"))?;
    Ok(ArrayShape::new(parse_num(r)?, parse_num(c)?))
}

fn parse_pathloss(v: &str) -> std::result::Result<PathlossParams, String> {
    let parts: Vec<f64> = v.split(',').map(parse_num).collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [a, b, s] => Ok(PathlossParams::new(a, b, s)),
        _ => Err(format!("path loss `{v}` must be alpha_db,beta,sigma_db")),
    }
}

/// Parse scenario text. Does not validate the resulting network.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let mut cfg = NetworkConfig::default();
    let mut plan = PlanSettings::default();
    let mut name = "scenario".to_string();
    let mut quotas_given = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::ScenarioParse { line: line_no, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let applied: std::result::Result<(), String> = (|| {
            match key {
                "name" => name = value.to_string(),
                "num_macro" => cfg.num_macro = parse_num(value)?,
                "num_small" => cfg.num_small = parse_num(value)?,
                "num_ues" => cfg.num_ues = parse_num(value)?,
                "quotas" => {
                    cfg.quotas = parse_list(value)?;
                    quotas_given = true;
                }
                "bs_array" => cfg.bs_array = parse_array(value)?,
                "ue_array" => cfg.ue_array = parse_array(value)?,
                "streams_per_ue" => cfg.streams_per_ue = parse_num(value)?,
                "macro_tx_power_dbm" => cfg.macro_tx_power_dbm = parse_num(value)?,
                "small_tx_power_dbm" => cfg.small_tx_power_dbm = parse_num(value)?,
                "macro_freq_ghz" => cfg.macro_freq_ghz = parse_num(value)?,
                "small_freq_ghz" => cfg.small_freq_ghz = parse_num(value)?,
                "noise_psd_dbm_hz" => cfg.noise_psd_dbm_hz = parse_num(value)?,
                "bandwidth_hz" => cfg.bandwidth_hz = parse_num(value)?,
                "area_side_m" => cfg.area_side_m = parse_num(value)?,
                "clusters" => cfg.clusters = parse_num(value)?,
                "rays_per_cluster" => cfg.rays_per_cluster = parse_num(value)?,
                "los_d1_m" => cfg.los.d1_m = parse_num(value)?,
                "los_d2_m" => cfg.los.d2_m = parse_num(value)?,
                "pl_sub6_los" => cfg.pathloss.sub6.los = parse_pathloss(value)?,
                "pl_sub6_nlos" => cfg.pathloss.sub6.nlos = parse_pathloss(value)?,
                "pl_mmwave_los" => cfg.pathloss.mmwave.los = parse_pathloss(value)?,
                "pl_mmwave_nlos" => cfg.pathloss.mmwave.nlos = parse_pathloss(value)?,
                "min_separation_m" => cfg.min_separation_m = parse_num(value)?,
                "bs_height_m" => cfg.bs_height_m = parse_num(value)?,
                "ue_height_m" => cfg.ue_height_m = parse_num(value)?,
                "seed" => cfg.rng_seed = parse_num(value)?,
                "solvers" => plan.solvers = Some(parse_solvers(value)?),
                "drops" => plan.drops = Some(parse_num(value)?),
                "realizations" => plan.realizations = Some(parse_num(value)?),
                "max_rounds" => plan.max_rounds = Some(parse_num(value)?),
                "wcs_max_moves" => plan.wcs_max_moves = Some(parse_num(value)?),
                "oracle_budget" => plan.oracle_budget = Some(parse_num(value)?),
                other => return Err(format!("unknown key `{other}`")),
            }
            Ok(())
        })();
        applied.map_err(err)?;
    }
    if !quotas_given && cfg.quotas.len() != cfg.num_bs() {
        return Err(Error::ScenarioParse {
            line: 0,
            message: "BS counts changed, so `quotas` must be given".into(),
        });
    }
    Ok(ScenarioFile { name, config: cfg, plan })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}
