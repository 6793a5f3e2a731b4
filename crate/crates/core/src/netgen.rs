//! Scenario description and network layout.
//!
//! A [`NetworkConfig`] fixes the population of the two tiers: macro BSs on a
//! sub-6 GHz carrier and small-cell BSs on a mmWave carrier, each with a UE
//! quota. [`generate_topology`] places BSs deterministically and drops UEs
//! uniformly over a square.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};

/// Carrier of a BS. Macro cells use sub-6, small cells use mmWave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    Sub6,
    MmWave,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Sub6 => "sub6",
            Band::MmWave => "mmwave",
        }
    }
}

/// Dimensions of a uniform planar array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayShape {
    pub rows: usize,
    pub cols: usize,
}

impl ArrayShape {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub const fn elements(self) -> usize {
        self.rows * self.cols
    }
}

/// Parameters of the LoS probability law
/// `p(d) = (min(d1/d, 1) (1 - exp(-d/d2)) + exp(-d/d2))^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosParams {
    pub d1_m: f64,
    pub d2_m: f64,
}

impl Default for LosParams {
    fn default() -> Self {
        Self {
            d1_m: 20.0,
            d2_m: 39.0,
        }
    }
}

/// Log-distance path loss `alpha + 10 beta log10(d) + sigma * shadow`, in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossParams {
    pub alpha_db: f64,
    pub beta: f64,
    pub sigma_shadow_db: f64,
}

impl PathlossParams {
    pub const fn new(alpha_db: f64, beta: f64, sigma_shadow_db: f64) -> Self {
        Self {
            alpha_db,
            beta,
            sigma_shadow_db,
        }
    }
}

/// LoS and NLoS path-loss laws for one band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPathloss {
    pub los: PathlossParams,
    pub nlos: PathlossParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossTable {
    pub sub6: BandPathloss,
    pub mmwave: BandPathloss,
}

impl PathlossTable {
    pub fn for_band(&self, band: Band) -> &BandPathloss {
        match band {
            Band::Sub6 => &self.sub6,
            Band::MmWave => &self.mmwave,
        }
    }
}

impl Default for PathlossTable {
    fn default() -> Self {
        let sub6 = PathlossParams::new(38.8, 3.0, 6.0);
        Self {
            sub6: BandPathloss {
                los: sub6,
                nlos: sub6,
            },
            mmwave: BandPathloss {
                los: PathlossParams::new(69.8, 2.0, 5.8),
                nlos: PathlossParams::new(82.7, 2.69, 7.7),
            },
        }
    }
}

/// Every parameter of a scenario. BSs `0..num_macro` are macro cells, the
/// rest are small cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub num_macro: usize,
    pub num_small: usize,
    pub num_ues: usize,
    /// Maximum number of UEs per BS, one entry per BS.
    pub quotas: Vec<usize>,
    /// Planar array at every BS; `M_j = rows * cols`.
    pub bs_array: ArrayShape,
    /// mmWave planar array at every UE. The sub-6 module is a single antenna.
    pub ue_array: ArrayShape,
    /// Requested streams per UE on mmWave links. Sub-6 links always carry one.
    pub streams_per_ue: usize,
    pub macro_tx_power_dbm: f64,
    pub small_tx_power_dbm: f64,
    pub macro_freq_ghz: f64,
    pub small_freq_ghz: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub area_side_m: f64,
    pub clusters: usize,
    pub rays_per_cluster: usize,
    pub los: LosParams,
    pub pathloss: PathlossTable,
    pub min_separation_m: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub rng_seed: u64,
}

impl Default for NetworkConfig {
    /// The desk-scale scenario: one macro, two small cells, eight UEs.
    fn default() -> Self {
        Self {
            num_macro: 1,
            num_small: 2,
            num_ues: 8,
            quotas: vec![4, 2, 2],
            bs_array: ArrayShape::new(8, 8),
            ue_array: ArrayShape::new(2, 2),
            streams_per_ue: 1,
            macro_tx_power_dbm: 40.0,
            small_tx_power_dbm: 30.0,
            macro_freq_ghz: 1.8,
            small_freq_ghz: 73.0,
            noise_psd_dbm_hz: -174.0,
            bandwidth_hz: 100e6,
            area_side_m: 300.0,
            clusters: 5,
            rays_per_cluster: 10,
            los: LosParams::default(),
            pathloss: PathlossTable::default(),
            min_separation_m: 5.0,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            rng_seed: 1,
        }
    }
}

impl NetworkConfig {
    /// One macro with quota 8 and four small cells with quota 4 serving 24 UEs.
    pub fn full_scale() -> Self {
        Self::two_tier(4, 24, 8, 4)
    }

    /// One macro plus `num_small` small cells with uniform small-cell quota.
    pub fn two_tier(num_small: usize, num_ues: usize, macro_quota: usize, small_quota: usize) -> Self {
        let mut quotas = vec![macro_quota];
        quotas.extend(std::iter::repeat_n(small_quota, num_small));
        Self {
            num_small,
            num_ues,
            quotas,
            ..Self::default()
        }
    }

    pub fn num_bs(&self) -> usize {
        self.num_macro + self.num_small
    }

    pub fn band(&self, bs: usize) -> Band {
        if bs < self.num_macro {
            Band::Sub6
        } else {
            Band::MmWave
        }
    }

    pub fn bands(&self) -> Vec<Band> {
        (0..self.num_bs()).map(|j| self.band(j)).collect()
    }

    pub fn bs_antennas(&self, _bs: usize) -> usize {
        self.bs_array.elements()
    }

    /// UE receive antennas on the carrier of `bs`.
    pub fn ue_antennas(&self, bs: usize) -> usize {
        match self.band(bs) {
            Band::Sub6 => 1,
            Band::MmWave => self.ue_array.elements(),
        }
    }

    /// Requested streams for a UE served on the carrier of `bs`.
    pub fn streams_on(&self, bs: usize) -> usize {
        match self.band(bs) {
            Band::Sub6 => 1,
            Band::MmWave => self.streams_per_ue,
        }
    }

    pub fn tx_power_dbm(&self, bs: usize) -> f64 {
        match self.band(bs) {
            Band::Sub6 => self.macro_tx_power_dbm,
            Band::MmWave => self.small_tx_power_dbm,
        }
    }

    /// Transmit power of `bs` in mW.
    pub fn tx_power_mw(&self, bs: usize) -> f64 {
        dbm_to_mw(self.tx_power_dbm(bs))
    }

    /// Thermal noise power over the configured bandwidth, in mW.
    pub fn noise_power_mw(&self) -> f64 {
        dbm_to_mw(self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10())
    }

    /// Check every scenario invariant and report all violations at once.
    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(issues))
        }
    }

    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let j = self.num_bs();
        if j == 0 {
            issues.push(ConfigIssue::BadDimension("network needs at least one BS".into()));
        }
        if self.num_ues == 0 {
            issues.push(ConfigIssue::BadDimension("network needs at least one UE".into()));
        }
        if self.quotas.len() != j {
            issues.push(ConfigIssue::BadDimension(format!(
                "{} quotas given for {} BSs",
                self.quotas.len(),
                j
            )));
        }
        if self.bs_array.elements() == 0 || self.ue_array.elements() == 0 {
            issues.push(ConfigIssue::BadDimension("antenna arrays must be non-empty".into()));
        }
        if self.clusters == 0 || self.rays_per_cluster == 0 {
            issues.push(ConfigIssue::BadDimension("need at least one cluster and one ray".into()));
        }
        if self.streams_per_ue == 0 || self.streams_per_ue > self.ue_array.elements() {
            issues.push(ConfigIssue::BadDimension(format!(
                "streams per UE must be in 1..={}, got {}",
                self.ue_array.elements(),
                self.streams_per_ue
            )));
        }
        let total: usize = self.quotas.iter().sum();
        if total < self.num_ues {
            issues.push(ConfigIssue::InsufficientQuota {
                total,
                ues: self.num_ues,
            });
        }
        for (bs, &quota) in self.quotas.iter().enumerate().take(j) {
            let streams = self.streams_on(bs);
            let antennas = self.bs_antennas(bs);
            if quota * streams > antennas {
                issues.push(ConfigIssue::StreamOverflow {
                    bs,
                    quota,
                    streams,
                    antennas,
                });
            }
        }
        for (name, value) in [
            ("area_side_m", self.area_side_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("los d1", self.los.d1_m),
            ("los d2", self.los.d2_m),
            ("bs_height_m", self.bs_height_m),
        ] {
            if !(value.is_finite() && value > 0.0) {
                issues.push(ConfigIssue::BadParameter(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.min_separation_m >= 0.0 && self.min_separation_m < self.area_side_m / 2.0) {
            issues.push(ConfigIssue::BadParameter(format!(
                "min_separation_m {} does not fit the area",
                self.min_separation_m
            )));
        }
        issues
    }
}

/// Free-function form of [`NetworkConfig::validate`].
pub fn validate_config(config: NetworkConfig) -> Result<NetworkConfig> {
    config.validate()?;
    Ok(config)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Geometry of one UE-BS pair. Azimuths are measured in the horizontal plane,
/// elevations from the horizon (negative looking down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Horizontal BS-UE distance.
    pub distance_m: f64,
    pub azimuth_aod: f64,
    pub elevation_aod: f64,
    pub azimuth_aoa: f64,
    pub elevation_aoa: f64,
}

impl LinkGeometry {
    fn between(bs: Point, ue: Point, bs_height: f64, ue_height: f64) -> Self {
        let distance_m = bs.distance(ue);
        let dh = bs_height - ue_height;
        Self {
            distance_m,
            azimuth_aod: (ue.y - bs.y).atan2(ue.x - bs.x),
            elevation_aod: (-dh).atan2(distance_m),
            azimuth_aoa: (bs.y - ue.y).atan2(bs.x - ue.x),
            elevation_aoa: dh.atan2(distance_m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub area_side_m: f64,
    pub bs_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    /// Indexed `[ue][bs]`.
    pub link_geometry: Vec<Vec<LinkGeometry>>,
}

impl Topology {
    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn link(&self, ue: usize, bs: usize) -> &LinkGeometry {
        &self.link_geometry[ue][bs]
    }
}

/// Deterministic BS layout: a single macro sits at the centre (several macros
/// share a ring of radius side/4), small cells sit on a ring of radius
/// `side * sqrt(2) / 4` starting at 45 degrees, which puts four small cells
/// at the `(+-side/4, +-side/4)` offsets.
pub fn bs_layout(config: &NetworkConfig) -> Vec<Point> {
    let side = config.area_side_m;
    let centre = Point::new(side / 2.0, side / 2.0);
    let ring = |count: usize, radius: f64, phase: f64| {
        (0..count).map(move |i| {
            let angle = phase + std::f64::consts::TAU * i as f64 / count as f64;
            Point::new(centre.x + radius * angle.cos(), centre.y + radius * angle.sin())
        })
    };
    let mut positions = Vec::with_capacity(config.num_bs());
    if config.num_macro == 1 {
        positions.push(centre);
    } else {
        positions.extend(ring(config.num_macro, side / 4.0, 0.0));
    }
    positions.extend(ring(
        config.num_small,
        side * std::f64::consts::SQRT_2 / 4.0,
        std::f64::consts::FRAC_PI_4,
    ));
    positions
}

/// Place BSs on the fixed layout and drop `num_ues` UEs uniformly, rejecting
/// draws closer than `min_separation_m` to any BS.
pub fn generate_topology(config: &NetworkConfig, seed: u64) -> Result<Topology> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = config.area_side_m;
    let bs_positions = bs_layout(config);
    let ue_positions: Vec<Point> = (0..config.num_ues)
        .map(|_| loop {
            let p = Point::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side));
            if bs_positions
                .iter()
                .all(|&bs| bs.distance(p) >= config.min_separation_m)
            {
                break p;
            }
        })
        .collect();
    let link_geometry = ue_positions
        .iter()
        .map(|&ue| {
            bs_positions
                .iter()
                .map(|&bs| LinkGeometry::between(bs, ue, config.bs_height_m, config.ue_height_m))
                .collect()
        })
        .collect();
    Ok(Topology {
        area_side_m: side,
        bs_positions,
        ue_positions,
        link_geometry,
    })
}
