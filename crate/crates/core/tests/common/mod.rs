//! Straight-line reference implementations shared by the integration tests.
//! Plain nested `Vec`s and textbook loops; nothing here calls into nalgebra
//! decompositions or the crate's rate code.

#![allow(dead_code)]

use hetnet_assoc::channel::ChannelSet;
use hetnet_assoc::linalg::CMatrix;
use hetnet_assoc::netgen::NetworkConfig;
use hetnet_assoc::rate::Activation;
use num_complex::Complex64 as C;

pub type M = Vec<Vec<C>>;

pub fn from_cmatrix(a: &CMatrix) -> M {
    (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| a[(r, c)]).collect()).collect()
}

pub fn zeros(r: usize, c: usize) -> M {
    vec![vec![C::new(0.0, 0.0); c]; r]
}

pub fn eye(n: usize) -> M {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C::new(1.0, 0.0);
    }
    m
}

pub fn mul(a: &M, b: &M) -> M {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = C::new(0.0, 0.0);
            for t in 0..k {
                acc += a[i][t] * b[t][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn adj(a: &M) -> M {
    let (r, c) = (a.len(), a[0].len());
    let mut out = zeros(c, r);
    for i in 0..r {
        for j in 0..c {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn add(a: &M, b: &M) -> M {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn scale(a: &M, s: f64) -> M {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

pub fn fro(a: &M) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &M, b: &M) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `A^{-1} B` by Gauss-Jordan elimination with partial pivoting.
pub fn solve(a: &M, b: &M) -> M {
    let n = a.len();
    let mut a = a.clone();
    let mut b = b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for v in b[col].iter_mut() {
            *v /= d;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                if f.norm() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let t = a[col][c];
                    a[row][c] -= f * t;
                }
                for c in 0..b[0].len() {
                    let t = b[col][c];
                    b[row][c] -= f * t;
                }
            }
        }
    }
    b
}

/// Determinant by elimination with partial pivoting.
pub fn det(a: &M) -> C {
    let n = a.len();
    let mut a = a.clone();
    let mut d = C::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap();
        if piv != col {
            a.swap(col, piv);
            d = -d;
        }
        let p = a[col][col];
        d *= p;
        for row in col + 1..n {
            let f = a[row][col] / p;
            for c in col..n {
                let t = a[col][c];
                a[row][c] -= f * t;
            }
        }
    }
    d
}

/// Per-UE transmit precoders written out by hand: SVD direction of the
/// serving link times `sqrt(P_j / |Q_j| / n)`.
pub fn serving_precoders(
    directions: &dyn Fn(usize, usize) -> CMatrix,
    activation: &Activation,
    config: &NetworkConfig,
) -> Vec<Option<M>> {
    let mut loads = vec![0usize; config.num_bs()];
    for k in 0..activation.len() {
        if let Some(j) = activation.get(k) {
            loads[j] += 1;
        }
    }
    (0..activation.len())
        .map(|k| {
            activation.get(k).map(|j| {
                let d = directions(k, j);
                let p = config.tx_power_mw(j) / loads[j] as f64 / d.ncols() as f64;
                scale(&from_cmatrix(&d), p.sqrt())
            })
        })
        .collect()
}

/// Interference-plus-noise covariance, term by term: intra-cell sum over
/// the other members of `j`, inter-cell sum over the members of every other
/// BS on `j`'s carrier, then `N0 W^H W`.
pub fn covariance(
    k: usize,
    j: usize,
    activation: &Activation,
    precoders: &[Option<M>],
    w: &M,
    channels: &ChannelSet,
    n0: f64,
) -> M {
    let wh = adj(w);
    let n = w[0].len();
    let mut intra = zeros(n, n);
    let h_kj = from_cmatrix(channels.h(k, j));
    for l in 0..activation.len() {
        if l == k || activation.get(l) != Some(j) {
            continue;
        }
        let f = precoders[l].as_ref().unwrap();
        let t = mul(&mul(&wh, &h_kj), f);
        intra = add(&intra, &mul(&t, &adj(&t)));
    }
    let mut inter = zeros(n, n);
    for i in 0..channels.num_bs() {
        if i == j || channels.bands[i] != channels.bands[j] {
            continue;
        }
        let h_ki = from_cmatrix(channels.h(k, i));
        for l in 0..activation.len() {
            if l == k || activation.get(l) != Some(i) {
                continue;
            }
            let f = precoders[l].as_ref().unwrap();
            let t = mul(&mul(&wh, &h_ki), f);
            inter = add(&inter, &mul(&t, &adj(&t)));
        }
    }
    let noise = scale(&mul(&wh, w), n0);
    add(&add(&intra, &inter), &noise)
}

/// `log2 det(I + V^{-1} W^H H F F^H H^H W)`.
pub fn rate(v: &M, w: &M, h: &M, f: &M) -> f64 {
    let g = mul(&mul(&adj(w), h), f);
    let s = mul(&g, &adj(&g));
    let a = add(&eye(v.len()), &solve(v, &s));
    det(&a).re.log2()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// A random 2-BS / 3-UE instance. `variant` cycles through two small cells
/// (mmWave, mutual interference), two macros (sub-6) and one of each, and
/// alternates between one and two streams per mmWave UE.
pub fn two_bs_instance(seed: u64, variant: usize) -> (NetworkConfig, ChannelSet, Activation) {
    use hetnet_assoc::channel::build_channel_set;
    use hetnet_assoc::matching::random_feasible_activation;
    use hetnet_assoc::netgen::generate_topology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let (num_macro, num_small) = [(0, 2), (2, 0), (1, 1)][variant % 3];
    let config = NetworkConfig {
        num_macro,
        num_small,
        num_ues: 3,
        quotas: vec![2, 2],
        streams_per_ue: 1 + variant % 2,
        // a small area keeps interference well above the noise floor
        area_side_m: 60.0,
        min_separation_m: 2.0,
        ..NetworkConfig::default()
    };
    let topo = generate_topology(&config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let channels = build_channel_set(&topo, &config, &mut rng).unwrap();
    let activation = random_feasible_activation(&config.quotas, 3, &mut rng).unwrap();
    (config, channels, activation)
}
