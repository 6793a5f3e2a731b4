//! SVD transmit precoders and receive combiners.
//!
//! Directions depend only on the link's channel, so they are computed once per
//! [`ChannelSet`] ([`LinkDirections`]) and then scaled for a given activation:
//! each BS splits its power equally over its active UEs, and each UE's share
//! equally over its streams.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::netgen::NetworkConfig;
use crate::rate::Activation;

/// Singular values below this fraction of the largest one count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Top singular vector pairs of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDirections {
    /// Right singular vectors, `M x n`.
    pub precoder: CMatrix,
    /// Left singular vectors, `N x n`.
    pub combiner: CMatrix,
    /// Matching singular values, descending.
    pub singular_values: Vec<f64>,
}

impl SvdDirections {
    pub fn streams(&self) -> usize {
        self.precoder.ncols()
    }
}

/// Numerical rank of `h` relative to its largest singular value.
pub fn channel_rank(h: &CMatrix) -> usize {
    let sv = h.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

/// The `n` strongest singular pairs of `h`, ordered by descending singular
/// value. Each pair is rotated so the largest-magnitude entry of its left
/// vector is real and positive; `H v = sigma u` holds after the rotation.
pub fn svd_directions(h: &CMatrix, n: usize) -> Result<SvdDirections> {
    if n == 0 || n > h.nrows().min(h.ncols()) {
        return Err(Error::ShapeMismatch(format!(
            "cannot take {n} streams from a {}x{} channel",
            h.nrows(),
            h.ncols()
        )));
    }
    let svd = h.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let top = sv[order[0]];
    let rank = if top == 0.0 {
        0
    } else {
        order.iter().filter(|&&i| sv[i] > RANK_TOLERANCE * top).count()
    };
    if rank < n {
        return Err(Error::RankDeficient { rank, requested: n });
    }

    let mut precoder = CMatrix::zeros(h.ncols(), n);
    let mut combiner = CMatrix::zeros(h.nrows(), n);
    let mut singular_values = Vec::with_capacity(n);
    for (col, &i) in order.iter().take(n).enumerate() {
        let left = u.column(i);
        let pivot = left
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (r, z)| if z.norm() > best.1 { (r, z.norm()) } else { best })
            .0;
        let unphase = Complex64::from_polar(1.0, -left[pivot].arg());
        combiner.set_column(col, &(left * unphase));
        let right = v_t.row(i).adjoint();
        precoder.set_column(col, &(right * unphase));
        singular_values.push(sv[i]);
    }
    Ok(SvdDirections {
        precoder,
        combiner,
        singular_values,
    })
}

/// Like [`svd_directions`] but drops to the channel rank instead of failing.
pub fn svd_directions_reduced(h: &CMatrix, n: usize) -> Result<SvdDirections> {
    match svd_directions(h, n) {
        Err(Error::RankDeficient { rank, .. }) if rank > 0 => svd_directions(h, rank),
        other => other,
    }
}

/// SVD directions of every UE-BS link, indexed `[ue][bs]`.
#[derive(Debug, Clone)]
pub struct LinkDirections {
    links: Vec<Vec<SvdDirections>>,
}

impl LinkDirections {
    pub fn compute(channels: &ChannelSet, config: &NetworkConfig) -> Result<Self> {
        let links = channels
            .matrices
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, h)| svd_directions_reduced(h, config.streams_on(j)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { links })
    }

    pub fn get(&self, ue: usize, bs: usize) -> &SvdDirections {
        &self.links[ue][bs]
    }

    pub fn streams(&self, ue: usize, bs: usize) -> usize {
        self.links[ue][bs].streams()
    }
}

/// Beamformers for one activation.
#[derive(Debug, Clone)]
pub struct BeamformingSet {
    /// Scaled serving precoder `F_{k, beta_k}`; `None` for unassigned UEs.
    pub precoders: Vec<Option<CMatrix>>,
    /// Combiner of every link `(k, j)`; a UE evaluating BS `j` uses `combiners[k][j]`.
    pub combiners: Vec<Vec<CMatrix>>,
    /// Unit-norm precoder directions of every link, unscaled.
    pub directions: Vec<Vec<CMatrix>>,
    /// Effective stream count of every link.
    pub stream_counts: Vec<Vec<usize>>,
    /// Per-UE power share `P_j / |Q_j|` of each BS (0 for idle BSs).
    pub ue_power: Vec<f64>,
}

impl BeamformingSet {
    /// Scale precomputed directions for `activation`.
    pub fn from_directions(dirs: &LinkDirections, activation: &Activation, config: &NetworkConfig) -> Self {
        let num_bs = config.num_bs();
        let loads = activation.loads(num_bs);
        let ue_power: Vec<f64> = (0..num_bs)
            .map(|j| {
                if loads[j] == 0 {
                    0.0
                } else {
                    config.tx_power_mw(j) / loads[j] as f64
                }
            })
            .collect();
        let precoders = (0..activation.len())
            .map(|k| {
                activation.get(k).map(|j| {
                    let d = dirs.get(k, j);
                    d.precoder.scale((ue_power[j] / d.streams() as f64).sqrt())
                })
            })
            .collect();
        let per_link = |f: &dyn Fn(&SvdDirections) -> CMatrix| -> Vec<Vec<CMatrix>> {
            dirs.links.iter().map(|row| row.iter().map(f).collect()).collect()
        };
        Self {
            precoders,
            combiners: per_link(&|d| d.combiner.clone()),
            directions: per_link(&|d| d.precoder.clone()),
            stream_counts: dirs
                .links
                .iter()
                .map(|row| row.iter().map(SvdDirections::streams).collect())
                .collect(),
            ue_power,
        }
    }

    /// Precoder that link `(ue, bs)` would use at per-UE power `power`.
    pub fn candidate_precoder(&self, ue: usize, bs: usize, power: f64) -> CMatrix {
        self.directions[ue][bs].scale((power / self.stream_counts[ue][bs] as f64).sqrt())
    }

    /// Total radiated power of `bs`, `sum_k trace(F_k^H F_k)` over its UEs.
    pub fn bs_power(&self, activation: &Activation, bs: usize) -> f64 {
        activation
            .members(bs)
            .filter_map(|k| self.precoders[k].as_ref())
            .map(|f| f.norm_squared())
            .sum()
    }
}

/// Compute SVD directions from scratch and scale them for `activation`.
pub fn build_beamforming_set(channels: &ChannelSet, activation: &Activation, config: &NetworkConfig) -> Result<BeamformingSet> {
    activation.check_feasible(config)?;
    let dirs = LinkDirections::compute(channels, config)?;
    Ok(BeamformingSet::from_directions(&dirs, activation, config))
}
