//! Per-link channel synthesis.
//!
//! Sub-6 links are i.i.d. Rayleigh (`CN(0, 1)` entries, one receive antenna).
//! mmWave links follow a clustered geometric model: `C` clusters of `L` rays,
//! each ray an outer product of UE- and BS-side planar-array responses,
//!
//! ```text
//! H = 1/sqrt(C L) * sum_c sum_l sqrt(gamma_c) e^{j phi_cl} a_ue(cl) a_bs(cl)^H
//! ```
//!
//! Cluster gains are unit-mean exponential draws rescaled so they sum to `C`,
//! which keeps `E ||H||_F^2 = 1`. Large-scale loss is applied afterwards as an
//! amplitude factor `10^(-PL/20)`.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::io::{BufRead, Write};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::netgen::{ArrayShape, Band, BandPathloss, LosParams, NetworkConfig, Topology};

/// Element spacing of every planar array, in wavelengths.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Standard deviation of the per-ray angular spread around a cluster centre.
pub const RAY_SPREAD_STD_RAD: f64 = 5.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Los,
    Nlos,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Los => "los",
            LinkKind::Nlos => "nlos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub kind: LinkKind,
    /// Path loss including shadowing, in dB.
    pub pathloss_db: f64,
}

/// Channel matrices for every UE-BS pair, indexed `[ue][bs]`. Each matrix is
/// `(UE antennas on the BS's band) x M_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub matrices: Vec<Vec<CMatrix>>,
    pub states: Vec<Vec<LinkState>>,
    pub bands: Vec<Band>,
}

impl ChannelSet {
    pub fn num_ues(&self) -> usize {
        self.matrices.len()
    }

    pub fn num_bs(&self) -> usize {
        self.bands.len()
    }

    pub fn h(&self, ue: usize, bs: usize) -> &CMatrix {
        &self.matrices[ue][bs]
    }

    /// Check every matrix against the antenna rule of `config` and that all
    /// entries are finite.
    pub fn audit(&self, config: &NetworkConfig) -> Result<()> {
        if self.num_ues() != config.num_ues || self.num_bs() != config.num_bs() {
            return Err(Error::ShapeMismatch(format!(
                "channel set is {}x{}, scenario is {}x{}",
                self.num_ues(),
                self.num_bs(),
                config.num_ues,
                config.num_bs()
            )));
        }
        for (k, row) in self.matrices.iter().enumerate() {
            for (j, h) in row.iter().enumerate() {
                let expected = (config.ue_antennas(j), config.bs_antennas(j));
                if h.shape() != expected {
                    return Err(Error::ShapeMismatch(format!(
                        "link ({k},{j}) is {:?}, expected {:?}",
                        h.shape(),
                        expected
                    )));
                }
                if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::ShapeMismatch(format!("link ({k},{j}) has non-finite entries")));
                }
            }
        }
        Ok(())
    }
}

/// Response of a `rows x cols` planar array, flattened row-major:
/// `a[m cols + n] = exp(j 2 pi s (m sin(az) sin(el) + n cos(el))) / sqrt(rows cols)`.
pub fn upa_response(azimuth: f64, elevation: f64, rows: usize, cols: usize, spacing: f64) -> DVector<Complex64> {
    let norm = 1.0 / ((rows * cols) as f64).sqrt();
    let row_phase = TAU * spacing * azimuth.sin() * elevation.sin();
    let col_phase = TAU * spacing * elevation.cos();
    DVector::from_fn(rows * cols, |idx, _| {
        let (m, n) = (idx / cols, idx % cols);
        Complex64::from_polar(norm, m as f64 * row_phase + n as f64 * col_phase)
    })
}

fn array_response(shape: ArrayShape, azimuth: f64, elevation: f64) -> DVector<Complex64> {
    upa_response(azimuth, elevation, shape.rows, shape.cols, HALF_WAVELENGTH)
}

pub fn los_probability(distance_m: f64, params: &LosParams) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    let tail = (-distance_m / params.d2_m).exp();
    let near = (params.d1_m / distance_m).min(1.0);
    Ok((near * (1.0 - tail) + tail).powi(2))
}

pub fn pathloss_db(distance_m: f64, kind: LinkKind, band: &BandPathloss, shadow_draw: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    let p = match kind {
        LinkKind::Los => band.los,
        LinkKind::Nlos => band.nlos,
    };
    Ok(p.alpha_db + 10.0 * p.beta * distance_m.log10() + p.sigma_shadow_db * shadow_draw)
}

/// One propagation path: arrival angles at the UE, departure angles at the
/// BS and a carrier phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub ue_azimuth: f64,
    pub ue_elevation: f64,
    pub bs_azimuth: f64,
    pub bs_elevation: f64,
    pub phase: f64,
}

/// A drawn mmWave small-scale channel and the cluster gains behind it.
#[derive(Debug, Clone)]
pub struct MmWaveDraw {
    pub matrix: CMatrix,
    pub cluster_gains: Vec<f64>,
}

/// Sum the rays of every cluster with the `1/sqrt(C L)` normalisation.
/// `rays[c]` holds the rays of cluster `c`; `L` is taken from the first cluster.
pub fn assemble_clustered(ue: ArrayShape, bs: ArrayShape, cluster_gains: &[f64], rays: &[Vec<Ray>]) -> CMatrix {
    let c = cluster_gains.len();
    let l = rays.first().map_or(1, Vec::len);
    let scale = 1.0 / ((c * l) as f64).sqrt();
    let mut h = CMatrix::zeros(ue.elements(), bs.elements());
    for (gain, cluster) in cluster_gains.iter().zip(rays) {
        for ray in cluster {
            let a_ue = array_response(ue, ray.ue_azimuth, ray.ue_elevation);
            let a_bs = array_response(bs, ray.bs_azimuth, ray.bs_elevation);
            let coeff = Complex64::from_polar(scale * gain.sqrt(), ray.phase);
            h.gerc(coeff, &a_ue, &a_bs, Complex64::new(1.0, 0.0));
        }
    }
    h
}

/// Unit-mean exponential cluster powers rescaled to sum to `clusters`.
pub fn draw_cluster_gains<R: Rng + ?Sized>(clusters: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..clusters).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|g| g * clusters as f64 / total).collect()
}

fn laplace<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    let b = std / std::f64::consts::SQRT_2;
    let u: f64 = rng.random::<f64>() - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Draw a clustered mmWave channel (no path loss). Cluster centres are
/// uniform over azimuth `[-pi, pi)` and elevation `[-pi/4, pi/4]`; LoS state
/// only enters through the path loss.
pub fn sample_mmwave_channel<R: Rng + ?Sized>(
    ue: ArrayShape,
    bs: ArrayShape,
    clusters: usize,
    rays_per_cluster: usize,
    rng: &mut R,
) -> MmWaveDraw {
    let cluster_gains = draw_cluster_gains(clusters, rng);
    let rays: Vec<Vec<Ray>> = (0..clusters)
        .map(|_| {
            let centre = [
                rng.random_range(-PI..PI),
                rng.random_range(-FRAC_PI_4..=FRAC_PI_4),
                rng.random_range(-PI..PI),
                rng.random_range(-FRAC_PI_4..=FRAC_PI_4),
            ];
            (0..rays_per_cluster)
                .map(|_| Ray {
                    ue_azimuth: centre[0] + laplace(RAY_SPREAD_STD_RAD, rng),
                    ue_elevation: centre[1] + laplace(RAY_SPREAD_STD_RAD, rng),
                    bs_azimuth: centre[2] + laplace(RAY_SPREAD_STD_RAD, rng),
                    bs_elevation: centre[3] + laplace(RAY_SPREAD_STD_RAD, rng),
                    phase: rng.random_range(0.0..TAU),
                })
                .collect()
        })
        .collect();
    MmWaveDraw {
        matrix: assemble_clustered(ue, bs, &cluster_gains, &rays),
        cluster_gains,
    }
}

/// Amplitude factor `10^(-PL/20)`.
pub fn pathloss_amplitude(pathloss_db: f64) -> f64 {
    10f64.powf(-pathloss_db / 20.0)
}

/// A `1 x cols` row of i.i.d. `CN(0, 1)` entries scaled by the path loss.
pub fn sample_sub6_channel<R: Rng + ?Sized>(cols: usize, pathloss_db: f64, rng: &mut R) -> CMatrix {
    let amp = pathloss_amplitude(pathloss_db) * std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(1, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(amp * re, amp * im)
    })
}

/// Draw link state, path loss and small-scale fading for every UE-BS pair.
pub fn build_channel_set<R: Rng + ?Sized>(topology: &Topology, config: &NetworkConfig, rng: &mut R) -> Result<ChannelSet> {
    if topology.num_ues() != config.num_ues || topology.num_bs() != config.num_bs() {
        return Err(Error::ShapeMismatch(format!(
            "topology is {}x{}, scenario is {}x{}",
            topology.num_ues(),
            topology.num_bs(),
            config.num_ues,
            config.num_bs()
        )));
    }
    let bands = config.bands();
    let mut matrices = Vec::with_capacity(config.num_ues);
    let mut states = Vec::with_capacity(config.num_ues);
    for k in 0..config.num_ues {
        let mut row = Vec::with_capacity(bands.len());
        let mut state_row = Vec::with_capacity(bands.len());
        for (j, &band) in bands.iter().enumerate() {
            let geom = topology.link(k, j);
            let p_los = los_probability(geom.distance_m, &config.los)?;
            let kind = if rng.random::<f64>() < p_los {
                LinkKind::Los
            } else {
                LinkKind::Nlos
            };
            let shadow: f64 = StandardNormal.sample(rng);
            let pl = pathloss_db(geom.distance_m, kind, config.pathloss.for_band(band), shadow)?;
            let h = match band {
                Band::Sub6 => sample_sub6_channel(config.bs_antennas(j), pl, rng),
                Band::MmWave => {
                    let draw = sample_mmwave_channel(
                        config.ue_array,
                        config.bs_array,
                        config.clusters,
                        config.rays_per_cluster,
                        rng,
                    );
                    draw.matrix.scale(pathloss_amplitude(pl))
                }
            };
            row.push(h);
            state_row.push(LinkState { kind, pathloss_db: pl });
        }
        matrices.push(row);
        states.push(state_row);
    }
    Ok(ChannelSet {
        matrices,
        states,
        bands,
    })
}

const DUMP_HEADER: &str = "# hetnet-assoc channel dump v1";

/// Text dump: a header line, then per link a
/// `link <ue> <bs> <band> <los|nlos> <pathloss_db> <rows> <cols>` line
/// followed by one line per matrix row of interleaved `re im` values.
/// Floats use shortest round-trip formatting, so [`read_channel_dump`]
/// reproduces the set exactly.
pub fn write_channel_dump<W: Write>(channels: &ChannelSet, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{DUMP_HEADER}")?;
    writeln!(out, "size {} {}", channels.num_ues(), channels.num_bs())?;
    for (k, row) in channels.matrices.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            let st = channels.states[k][j];
            writeln!(
                out,
                "link {k} {j} {} {} {} {} {}",
                channels.bands[j].as_str(),
                st.kind.as_str(),
                st.pathloss_db,
                h.nrows(),
                h.ncols()
            )?;
            for r in 0..h.nrows() {
                let line: Vec<String> = (0..h.ncols())
                    .map(|c| format!("{} {}", h[(r, c)].re, h[(r, c)].im))
                    .collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
    }
    Ok(())
}

pub fn read_channel_dump<R: BufRead>(input: R) -> Result<ChannelSet> {
    let bad = |line: usize, message: &str| Error::ScenarioParse {
        line,
        message: message.to_string(),
    };
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(bad(i + 1, &e.to_string())),
            None => Err(bad(0, &format!("unexpected end of dump, wanted {what}"))),
        }
    };
    let (n, header) = next("header")?;
    if header.trim() != DUMP_HEADER {
        return Err(bad(n, "not a channel dump"));
    }
    let (n, size) = next("size")?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .skip(1)
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad(n, "bad size line"))?;
    let [num_ues, num_bs] = dims[..] else {
        return Err(bad(n, "bad size line"));
    };
    let mut matrices = vec![Vec::with_capacity(num_bs); num_ues];
    let mut states = vec![Vec::with_capacity(num_bs); num_ues];
    let mut bands = vec![Band::Sub6; num_bs];
    for k in 0..num_ues {
        for j in 0..num_bs {
            let (n, head) = next("link header")?;
            let f: Vec<&str> = head.split_whitespace().collect();
            if f.len() != 8 || f[0] != "link" || f[1] != k.to_string() || f[2] != j.to_string() {
                return Err(bad(n, "bad link header"));
            }
            bands[j] = match f[3] {
                "sub6" => Band::Sub6,
                "mmwave" => Band::MmWave,
                _ => return Err(bad(n, "bad band")),
            };
            let kind = match f[4] {
                "los" => LinkKind::Los,
                "nlos" => LinkKind::Nlos,
                _ => return Err(bad(n, "bad link state")),
            };
            let pathloss_db: f64 = f[5].parse().map_err(|_| bad(n, "bad path loss"))?;
            let rows: usize = f[6].parse().map_err(|_| bad(n, "bad rows"))?;
            let cols: usize = f[7].parse().map_err(|_| bad(n, "bad cols"))?;
            let mut h = CMatrix::zeros(rows, cols);
            for r in 0..rows {
                let (n, data) = next("matrix row")?;
                let vals: Vec<f64> = data
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(n, "bad matrix entry"))?;
                if vals.len() != 2 * cols {
                    return Err(bad(n, "wrong number of matrix entries"));
                }
                for c in 0..cols {
                    h[(r, c)] = Complex64::new(vals[2 * c], vals[2 * c + 1]);
                }
            }
            matrices[k].push(h);
            states[k].push(LinkState { kind, pathloss_db });
        }
    }
    Ok(ChannelSet {
        matrices,
        states,
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::generate_topology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn boresight_response_is_phase_flat() {
        let a = upa_response(0.0, PI / 2.0, 2, 2, 0.5);
        for z in a.iter() {
            assert!((z - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn response_matches_double_loop() {
        let (az, el, rows, cols) = (PI / 6.0, PI / 3.0, 8usize, 8usize);
        let a = upa_response(az, el, rows, cols, 0.5);
        let mut idx = 0;
        for m in 0..rows {
            for n in 0..cols {
                let phase = 2.0 * PI * 0.5 * (m as f64 * az.sin() * el.sin() + n as f64 * el.cos());
                let expect = Complex64::new(phase.cos(), phase.sin()) / 8.0;
                assert!((a[idx] - expect).norm() < 1e-12);
                idx += 1;
            }
        }
    }

    #[test]
    fn los_probability_shape() {
        let p = LosParams::default();
        assert!((los_probability(1e-9, &p).unwrap() - 1.0).abs() < 1e-12);
        // (0.02 (1 - e^{-1000/39}) + e^{-1000/39})^2 = 4.0e-4
        let far = los_probability(1000.0, &p).unwrap();
        assert!(far < 0.01);
        assert!((far - 4.0e-4).abs() < 1e-6);
        let (a, b, c) = (
            los_probability(50.0, &p).unwrap(),
            los_probability(100.0, &p).unwrap(),
            los_probability(200.0, &p).unwrap(),
        );
        assert!(a >= b && b >= c);
        assert!(matches!(los_probability(0.0, &p), Err(Error::NonPositiveDistance(_))));
    }

    #[test]
    fn pathloss_law() {
        let mm = crate::netgen::PathlossTable::default().mmwave;
        assert!((pathloss_db(1.0, LinkKind::Los, &mm, 0.0).unwrap() - 69.8).abs() < 1e-12);
        let d1 = pathloss_db(40.0, LinkKind::Nlos, &mm, 0.0).unwrap();
        let d2 = pathloss_db(80.0, LinkKind::Nlos, &mm, 0.0).unwrap();
        assert!((d2 - d1 - 10.0 * 2.69 * 2f64.log10()).abs() < 1e-12);
        let s = pathloss_db(40.0, LinkKind::Nlos, &mm, 1.0).unwrap();
        assert!((s - d1 - 7.7).abs() < 1e-12);
        assert!(pathloss_db(-1.0, LinkKind::Los, &mm, 0.0).is_err());
    }

    #[test]
    fn single_ray_is_an_outer_product() {
        let ue = ArrayShape::new(2, 2);
        let bs = ArrayShape::new(8, 8);
        let ray = Ray {
            ue_azimuth: 0.3,
            ue_elevation: -0.2,
            bs_azimuth: 1.1,
            bs_elevation: 0.4,
            phase: 0.0,
        };
        let h = assemble_clustered(ue, bs, &[1.0], &[vec![ray]]);
        let expect = array_response(ue, 0.3, -0.2) * array_response(bs, 1.1, 0.4).adjoint();
        assert!((&h - &expect).norm() < 1e-14);
        assert!((h.norm() - 1.0).abs() < 1e-12);
        assert_eq!(h.rank(1e-10), 1);
    }

    #[test]
    fn cluster_gains_sum_to_cluster_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in [1, 2, 5, 9] {
            let g = draw_cluster_gains(c, &mut rng);
            assert!((g.iter().sum::<f64>() - c as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn clustered_rank_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = sample_mmwave_channel(ArrayShape::new(2, 2), ArrayShape::new(8, 8), 5, 10, &mut rng);
        assert_eq!(d.matrix.shape(), (4, 64));
        assert!(d.matrix.rank(1e-12) <= 4);
    }

    #[test]
    fn channel_set_shapes_for_full_scenario() {
        let cfg = NetworkConfig::full_scale();
        let topo = generate_topology(&cfg, 1).unwrap();
        let cs = build_channel_set(&topo, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        cs.audit(&cfg).unwrap();
        let sub6 = cs.matrices.iter().flatten().filter(|h| h.shape() == (1, 64)).count();
        let mm = cs.matrices.iter().flatten().filter(|h| h.shape() == (4, 64)).count();
        assert_eq!((sub6, mm), (24, 96));
        let again = build_channel_set(&topo, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(cs, again);
    }

    #[test]
    fn single_macro_single_ue() {
        let cfg = NetworkConfig {
            num_small: 0,
            num_ues: 1,
            quotas: vec![1],
            ..NetworkConfig::default()
        };
        let topo = generate_topology(&cfg, 1).unwrap();
        let cs = build_channel_set(&topo, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(cs.matrices[0][0].shape(), (1, 64));
        assert_eq!(cs.bands, vec![Band::Sub6]);
    }

    #[test]
    fn dump_round_trips_exactly() {
        let cfg = NetworkConfig::default();
        let topo = generate_topology(&cfg, 4).unwrap();
        let cs = build_channel_set(&topo, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut buf = Vec::new();
        write_channel_dump(&cs, &mut buf).unwrap();
        let back = read_channel_dump(buf.as_slice()).unwrap();
        assert_eq!(cs, back);
        assert!(read_channel_dump("nope\n".as_bytes()).is_err());
    }
}
