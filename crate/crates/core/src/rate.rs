//! Association-dependent rates.
//!
//! For UE `k` served by BS `j`, with combiner `W` and precoders `F`,
//!
//! ```text
//! V = W^H H_kj (sum_{l in Q_j, l != k} F_l F_l^H) H_kj^H W
//!   + W^H (sum_{i != j} sum_{l in Q_i} H_ki F_l F_l^H H_ki^H) W
//!   + N0 W^H W
//! R = log2 det(I + V^{-1} W^H H_kj F_k F_k^H H_kj^H W)
//! ```
//!
//! The inter-cell sum only runs over BSs on the same carrier as `j`; the
//! sub-6 and mmWave tiers do not interfere.
//!
//! A *hypothetical* rate `R_kj` for a BS `j` that does not currently serve
//! `k` is the rate `k` would get if it alone moved to `j`: `k`'s old precoder
//! is switched off, `k` joins `j` with power share `P_j / (|Q_j| + 1)` and a
//! combiner retargeted to the `(k, j)` link, and every other link keeps its
//! current precoder.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamform::{build_beamforming_set, BeamformingSet, LinkDirections};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{add_gram, log2_det_whitened, CMatrix};
use crate::netgen::{Band, NetworkConfig};

/// Serving BS of every UE (`None` while unassigned).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Activation(Vec<Option<usize>>);

impl Activation {
    pub fn new(assignments: Vec<Option<usize>>) -> Self {
        Self(assignments)
    }

    pub fn unassigned(num_ues: usize) -> Self {
        Self(vec![None; num_ues])
    }

    /// Fully assigned activation from a list of BS indices.
    pub fn from_bs(bs: &[usize]) -> Self {
        Self(bs.iter().copied().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, ue: usize) -> Option<usize> {
        self.0[ue]
    }

    pub fn set(&mut self, ue: usize, bs: Option<usize>) {
        self.0[ue] = bs;
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    /// UEs served by `bs`, ascending.
    pub fn members(&self, bs: usize) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(move |(k, b)| (*b == Some(bs)).then_some(k))
    }

    pub fn loads(&self, num_bs: usize) -> Vec<usize> {
        let mut loads = vec![0; num_bs];
        for j in self.0.iter().flatten() {
            if *j < num_bs {
                loads[*j] += 1;
            }
        }
        loads
    }

    /// Copy with `ue` moved to `bs`.
    pub fn with_move(&self, ue: usize, bs: usize) -> Self {
        let mut next = self.clone();
        next.0[ue] = Some(bs);
        next
    }

    /// Valid BS indices and per-BS loads within `quotas`.
    pub fn check_quotas(&self, quotas: &[usize]) -> Result<()> {
        let num_bs = quotas.len();
        if let Some((k, j)) = self
            .0
            .iter()
            .enumerate()
            .find_map(|(k, b)| b.filter(|&j| j >= num_bs).map(|j| (k, j)))
        {
            return Err(Error::InfeasibleActivation(format!("UE {k} points at missing BS {j}")));
        }
        for (j, (load, quota)) in self.loads(num_bs).iter().zip(quotas).enumerate() {
            if load > quota {
                return Err(Error::InfeasibleActivation(format!("BS {j} serves {load} UEs, quota {quota}")));
            }
        }
        Ok(())
    }

    /// Quota constraint plus the stream budget `sum n_k <= M_j`.
    pub fn check_feasible(&self, config: &NetworkConfig) -> Result<()> {
        if self.len() != config.num_ues {
            return Err(Error::ShapeMismatch(format!(
                "activation covers {} UEs, scenario has {}",
                self.len(),
                config.num_ues
            )));
        }
        self.check_quotas(&config.quotas)?;
        for (j, load) in self.loads(config.num_bs()).into_iter().enumerate() {
            let streams = load * config.streams_on(j);
            if streams > config.bs_antennas(j) {
                return Err(Error::InfeasibleActivation(format!(
                    "BS {j} carries {streams} streams on {} antennas",
                    config.bs_antennas(j)
                )));
            }
        }
        Ok(())
    }
}

/// `K x J` spectral efficiencies in bit/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    num_ues: usize,
    num_bs: usize,
    rates: Vec<f64>,
}

impl RateMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let num_ues = rows.len();
        let num_bs = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == num_bs), "ragged rate matrix");
        Self {
            num_ues,
            num_bs,
            rates: rows.into_iter().flatten().collect(),
        }
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn get(&self, ue: usize, bs: usize) -> f64 {
        self.rates[ue * self.num_bs + bs]
    }

    pub fn row(&self, ue: usize) -> &[f64] {
        &self.rates[ue * self.num_bs..(ue + 1) * self.num_bs]
    }

    /// `K` rows of `J` comma-separated values under a `ue,bs0,bs1,...` header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.num_bs).map(|j| format!("bs{j}")).collect();
        writeln!(out, "ue,{}", header.join(","))?;
        for k in 0..self.num_ues {
            let row: Vec<String> = self.row(k).iter().map(|r| r.to_string()).collect();
            writeln!(out, "{k},{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_link(channels: &ChannelSet, bf: &BeamformingSet, k: usize, j: usize) -> Result<()> {
    if k >= channels.num_ues() || j >= channels.num_bs() {
        return Err(Error::ShapeMismatch(format!("link ({k},{j}) outside the channel set")));
    }
    let (h, w) = (channels.h(k, j), &bf.combiners[k][j]);
    if w.nrows() != h.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "combiner of ({k},{j}) has {} rows, channel has {}",
            w.nrows(),
            h.nrows()
        )));
    }
    Ok(())
}

fn serving_precoder(bf: &BeamformingSet, l: usize) -> Result<&CMatrix> {
    bf.precoders[l]
        .as_ref()
        .ok_or_else(|| Error::ShapeMismatch(format!("no precoder for assigned UE {l}; beamformers built for another activation")))
}

/// Interference-plus-noise covariance `V_kj` seen by UE `k` through its
/// `(k, j)` combiner, with every other UE on its current serving precoder.
pub fn interference_covariance(
    k: usize,
    j: usize,
    activation: &Activation,
    bf: &BeamformingSet,
    channels: &ChannelSet,
    noise_power: f64,
) -> Result<CMatrix> {
    check_link(channels, bf, k, j)?;
    let w = &bf.combiners[k][j];
    let band = channels.bands[j];
    let mut v = (w.adjoint() * w).scale(noise_power);
    for i in 0..channels.num_bs() {
        if channels.bands[i] != band {
            continue;
        }
        let wh = w.adjoint() * channels.h(k, i);
        for l in activation.members(i) {
            if l == k {
                continue;
            }
            let f = serving_precoder(bf, l)?;
            if f.nrows() != wh.ncols() {
                return Err(Error::ShapeMismatch(format!("precoder of UE {l} does not fit BS {i}")));
            }
            add_gram(&mut v, &(&wh * f));
        }
    }
    Ok(v)
}

/// Rate of UE `k` on its serving BS `j`.
pub fn instantaneous_rate(
    k: usize,
    j: usize,
    activation: &Activation,
    bf: &BeamformingSet,
    channels: &ChannelSet,
    noise_power: f64,
) -> Result<f64> {
    if activation.get(k) != Some(j) {
        return Err(Error::NotServing { ue: k, bs: j });
    }
    let v = interference_covariance(k, j, activation, bf, channels, noise_power)?;
    let g = bf.combiners[k][j].adjoint() * channels.h(k, j) * serving_precoder(bf, k)?;
    let s = &g * g.adjoint();
    log2_det_whitened(&v, &s)
        .map(|r| r.max(0.0))
        .ok_or(Error::NumericalBreakdown { ue: k, bs: j })
}

/// Rate evaluation against one channel set, with the per-link SVDs cached.
#[derive(Debug, Clone)]
pub struct RateEngine<'a> {
    channels: &'a ChannelSet,
    config: &'a NetworkConfig,
    directions: LinkDirections,
    tx_power_mw: Vec<f64>,
    noise_mw: f64,
}

impl<'a> RateEngine<'a> {
    pub fn new(channels: &'a ChannelSet, config: &'a NetworkConfig) -> Result<Self> {
        channels.audit(config)?;
        Ok(Self {
            channels,
            config,
            directions: LinkDirections::compute(channels, config)?,
            tx_power_mw: (0..config.num_bs()).map(|j| config.tx_power_mw(j)).collect(),
            noise_mw: config.noise_power_mw(),
        })
    }

    pub fn channels(&self) -> &'a ChannelSet {
        self.channels
    }

    pub fn config(&self) -> &'a NetworkConfig {
        self.config
    }

    pub fn directions(&self) -> &LinkDirections {
        &self.directions
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_mw
    }

    pub fn num_ues(&self) -> usize {
        self.config.num_ues
    }

    pub fn num_bs(&self) -> usize {
        self.config.num_bs()
    }

    pub fn beamformers(&self, activation: &Activation) -> BeamformingSet {
        BeamformingSet::from_directions(&self.directions, activation, self.config)
    }

    /// `R_kj` under `activation`: the serving rate when `activation` already
    /// puts `k` on `j`, the hypothetical single-move rate otherwise.
    ///
    /// In the hypothetical case `k` stops transmitting from its old BS and
    /// joins `j` with power share `P_j / (|Q_j| + 1)`; every other precoder
    /// keeps its current power.
    pub fn rate(&self, k: usize, j: usize, activation: &Activation) -> Result<f64> {
        let num_bs = self.num_bs();
        let loads = activation.loads(num_bs);
        let share = |i: usize| self.tx_power_mw[i] / loads[i] as f64;
        let own_share = if activation.get(k) == Some(j) {
            share(j)
        } else {
            self.tx_power_mw[j] / (loads[j] + 1) as f64
        };

        let band: Band = self.channels.bands[j];
        let own = self.directions.get(k, j);
        let w = &own.combiner;
        let w_h = w.adjoint();
        let mut wh: Vec<Option<CMatrix>> = vec![None; num_bs];
        let mut project = |i: usize| -> CMatrix { wh[i].get_or_insert_with(|| &w_h * self.channels.h(k, i)).clone() };

        let gain = project(j) * &own.precoder * Complex64::from((own_share / own.streams() as f64).sqrt());
        let signal = &gain * gain.adjoint();

        let mut v = (&w_h * w).scale(self.noise_mw);
        for (l, serving) in activation.as_slice().iter().enumerate() {
            let Some(i) = *serving else { continue };
            if l == k || self.channels.bands[i] != band {
                continue;
            }
            let d = self.directions.get(l, i);
            let t = project(i) * &d.precoder * Complex64::from((share(i) / d.streams() as f64).sqrt());
            add_gram(&mut v, &t);
        }
        log2_det_whitened(&v, &signal)
            .map(|r| r.max(0.0))
            .ok_or(Error::NumericalBreakdown { ue: k, bs: j })
    }

    /// Same as [`RateEngine::rate`]; named for the counterfactual use.
    pub fn hypothetical_rate(&self, k: usize, j: usize, activation: &Activation) -> Result<f64> {
        self.rate(k, j, activation)
    }

    /// Serving rate of every UE (0 for unassigned UEs).
    pub fn serving_rates(&self, activation: &Activation) -> Result<Vec<f64>> {
        (0..activation.len())
            .map(|k| activation.get(k).map_or(Ok(0.0), |j| self.rate(k, j, activation)))
            .collect()
    }

    pub fn sum_rate(&self, activation: &Activation) -> Result<f64> {
        Ok(self.serving_rates(activation)?.iter().sum())
    }

    /// `R_kj(activation)` for every UE-BS pair.
    pub fn rate_matrix(&self, activation: &Activation) -> Result<RateMatrix> {
        let rows = (0..self.num_ues())
            .map(|k| (0..self.num_bs()).map(|j| self.rate(k, j, activation)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(RateMatrix::from_rows(rows))
    }
}

/// `R_kj` recomputed from scratch: fresh beamformers for `activation`, `k`'s
/// precoder replaced by the `(k, j)` direction at the candidate power share,
/// then the serving-rate formula on the moved activation. Independent of the
/// cached fast path in [`RateEngine::rate`].
pub fn hypothetical_rate(
    k: usize,
    j: usize,
    activation: &Activation,
    channels: &ChannelSet,
    config: &NetworkConfig,
) -> Result<f64> {
    let mut bf = build_beamforming_set(channels, activation, config)?;
    if activation.get(k) != Some(j) {
        let load = activation.members(j).count() + 1;
        bf.precoders[k] = Some(bf.candidate_precoder(k, j, config.tx_power_mw(j) / load as f64));
    }
    let moved = activation.with_move(k, j);
    instantaneous_rate(k, j, &moved, &bf, channels, config.noise_power_mw())
}

/// Network sum-rate `sum_k R_{k, beta_k}` in bit/s/Hz.
pub fn sum_rate(activation: &Activation, channels: &ChannelSet, config: &NetworkConfig) -> Result<f64> {
    RateEngine::new(channels, config)?.sum_rate(activation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_channel_set;
    use crate::netgen::generate_topology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(cfg: &NetworkConfig, seed: u64) -> ChannelSet {
        let topo = generate_topology(cfg, seed).unwrap();
        build_channel_set(&topo, cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn activation_bookkeeping() {
        let a = Activation::new(vec![Some(1), None, Some(1), Some(0)]);
        assert_eq!(a.loads(2), vec![1, 2]);
        assert_eq!(a.members(1).collect::<Vec<_>>(), vec![0, 2]);
        assert!(!a.is_complete());
        assert!(a.check_quotas(&[1, 2]).is_ok());
        assert!(a.check_quotas(&[1, 1]).is_err());
        assert!(Activation::from_bs(&[3]).check_quotas(&[1, 1]).is_err());
        assert_eq!(a.with_move(1, 0).get(1), Some(0));
    }

    #[test]
    fn lone_ue_sees_only_noise() {
        let cfg = NetworkConfig {
            num_small: 0,
            num_ues: 1,
            quotas: vec![1],
            ..NetworkConfig::default()
        };
        let cs = scenario(&cfg, 1);
        let act = Activation::from_bs(&[0]);
        let bf = build_beamforming_set(&cs, &act, &cfg).unwrap();
        let n0 = cfg.noise_power_mw();
        let v = interference_covariance(0, 0, &act, &bf, &cs, n0).unwrap();
        assert!((v[(0, 0)].re - n0).abs() <= 1e-12 * n0);

        // scalar Shannon formula: R = log2(1 + P |h|^2 / N0)
        let p = cfg.tx_power_mw(0);
        let r = instantaneous_rate(0, 0, &act, &bf, &cs, n0).unwrap();
        let expect = (1.0 + p * cs.h(0, 0).norm_squared() / n0).log2();
        assert!((r - expect).abs() <= 1e-9 * expect);
        assert!((sum_rate(&act, &cs, &cfg).unwrap() - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn interference_free_mmwave_link_uses_top_singular_value() {
        let cfg = NetworkConfig {
            num_small: 1,
            num_ues: 1,
            quotas: vec![1, 1],
            ..NetworkConfig::default()
        };
        let cs = scenario(&cfg, 5);
        let act = Activation::from_bs(&[1]);
        let engine = RateEngine::new(&cs, &cfg).unwrap();
        let sigma = engine.directions().get(0, 1).singular_values[0];
        let p = cfg.tx_power_mw(1);
        let expect = (1.0 + sigma * sigma * p / cfg.noise_power_mw()).log2();
        let r = engine.rate(0, 1, &act).unwrap();
        assert!((r - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn serving_rate_agrees_between_routes() {
        let cfg = NetworkConfig::default();
        let cs = scenario(&cfg, 7);
        let act = Activation::from_bs(&[0, 1, 0, 2, 0, 1, 0, 2]);
        let engine = RateEngine::new(&cs, &cfg).unwrap();
        let bf = build_beamforming_set(&cs, &act, &cfg).unwrap();
        for k in 0..cfg.num_ues {
            let j = act.get(k).unwrap();
            let a = engine.rate(k, j, &act).unwrap();
            let b = instantaneous_rate(k, j, &act, &bf, &cs, engine.noise_power()).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.max(1e-12), "UE {k}: {a} vs {b}");
        }
        assert!(matches!(
            instantaneous_rate(0, 1, &act, &bf, &cs, 1.0),
            Err(Error::NotServing { ue: 0, bs: 1 })
        ));
    }

    #[test]
    fn hypothetical_rate_agrees_between_routes() {
        let cfg = NetworkConfig::default();
        let cs = scenario(&cfg, 11);
        let act = Activation::from_bs(&[0, 1, 0, 2, 0, 1, 2, 0]);
        let engine = RateEngine::new(&cs, &cfg).unwrap();
        for k in 0..cfg.num_ues {
            for j in 0..cfg.num_bs() {
                let a = engine.hypothetical_rate(k, j, &act).unwrap();
                let b = hypothetical_rate(k, j, &act, &cs, &cfg).unwrap();
                assert!((a - b).abs() <= 1e-9 * b.max(1e-12), "({k},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn empty_activation_has_zero_sum_rate() {
        let cfg = NetworkConfig::default();
        let cs = scenario(&cfg, 2);
        assert_eq!(sum_rate(&Activation::unassigned(8), &cs, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn rate_matrix_csv_layout() {
        let m = RateMatrix::from_rows(vec![vec![1.0, 2.5], vec![0.0, 3.0]]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "ue,bs0,bs1\n0,1,2.5\n1,0,3\n");
    }
}
