//! Beamspace channel model.
//!
//! Each user sees `L` paths on distinct DFT beams. The path set is a uniformly
//! random `L`-subset of the `N_t` beams and each non-zero beam gain is
//! `CN(0, 1/L)`; all other beams are exactly zero.
//!
//! Beam indices are 0-based throughout the crate: beam `i` is the `(i + 1)`-th
//! beam trained in natural order.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("path count {l} outside [1, N_t = {n_t}]")]
    PathCount { l: usize, n_t: usize },
    #[error("path fraction {0} outside (0, 1]")]
    PathFraction(f64),
    #[error("antenna count must be at least 2 (got {0})")]
    AntennaCount(usize),
    #[error("user count must be at least 1")]
    NoUsers,
    #[error("beam index {beam} out of range for N_t = {n_t}")]
    BeamIndex { beam: usize, n_t: usize },
    #[error("user index {user} out of range for {users} users")]
    UserIndex { user: usize, users: usize },
    #[error("user {user} gain vector has length {len}, expected {n_t}")]
    GainLength { user: usize, len: usize, n_t: usize },
}

/// Number of resolvable paths per user.
///
/// Deserializes from a bare JSON number: an integer is a fixed count, a
/// fractional value `c` means `L = round(c · N_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathCount {
    Fixed(usize),
    LinearInNt(f64),
}

impl PathCount {
    /// Resolves to a concrete `L` for `n_t` antennas. Fractions round half up
    /// and clamp to `[1, n_t]`.
    pub fn resolve(self, n_t: usize) -> Result<usize, ChannelError> {
        match self {
            PathCount::Fixed(l) if l == 0 || l > n_t => Err(ChannelError::PathCount { l, n_t }),
            PathCount::Fixed(l) => Ok(l),
            PathCount::LinearInNt(c) if !(c > 0.0 && c <= 1.0) => Err(ChannelError::PathFraction(c)),
            PathCount::LinearInNt(c) => Ok(((c * n_t as f64 + 0.5).floor() as usize).clamp(1, n_t)),
        }
    }
}

impl std::fmt::Display for PathCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathCount::Fixed(l) => write!(f, "{l}"),
            PathCount::LinearInNt(c) => write!(f, "{c}Nt"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub n_t: usize,
    pub paths: PathCount,
    pub users: usize,
}

impl ChannelConfig {
    pub fn new(n_t: usize, paths: PathCount, users: usize) -> Result<Self, ChannelError> {
        let cfg = ChannelConfig { n_t, paths, users };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_t < 2 {
            return Err(ChannelError::AntennaCount(self.n_t));
        }
        if self.users == 0 {
            return Err(ChannelError::NoUsers);
        }
        self.paths.resolve(self.n_t).map(|_| ())
    }

    pub fn path_count(&self) -> Result<usize, ChannelError> {
        self.paths.resolve(self.n_t)
    }
}

/// Identifies one independent random stream: experiment seed, sweep point
/// and trial. Realizations depend only on this key, never on the order in
/// which trials run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub point: u64,
    pub trial: u64,
}

impl StreamKey {
    pub fn new(seed: u64, point: u64, trial: u64) -> Self {
        StreamKey { seed, point, trial }
    }

    /// Generator for one user's draws within this trial.
    pub fn user_rng(&self, user: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed ^ self.point.wrapping_mul(0xD1B5_4A32_D192_ED03);
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.trial);
        // 2^40 words per user is far more than a realization consumes.
        rng.set_word_pos((user as u128) << 40);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One user's beam-domain channel `h̄_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    paths: Vec<usize>,
    gains: Vec<Complex64>,
}

impl UserChannel {
    /// Sorted indices of the non-zero beams.
    pub fn paths(&self) -> &[usize] {
        &self.paths
    }

    /// Dense beam gains `h̄_{u,i}`, one per beam.
    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn gain(&self, beam: usize) -> Complex64 {
        self.gains[beam]
    }

    pub fn power(&self, beam: usize) -> f64 {
        self.gains[beam].norm_sqr()
    }

    pub fn is_nonzero(&self, beam: usize) -> bool {
        self.gains[beam] != Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_t: usize,
    users: Vec<UserChannel>,
}

/// Debug dump of one user's channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub user: usize,
    pub indices: Vec<usize>,
    pub gains_re: Vec<f64>,
    pub gains_im: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization from dense per-user beam gains. The path set of
    /// each user is the set of exactly non-zero entries.
    pub fn from_gains(n_t: usize, gains: Vec<Vec<Complex64>>) -> Result<Self, ChannelError> {
        if n_t < 2 {
            return Err(ChannelError::AntennaCount(n_t));
        }
        if gains.is_empty() {
            return Err(ChannelError::NoUsers);
        }
        let users = gains
            .into_iter()
            .enumerate()
            .map(|(user, g)| {
                if g.len() != n_t {
                    return Err(ChannelError::GainLength {
                        user,
                        len: g.len(),
                        n_t,
                    });
                }
                let paths = (0..n_t).filter(|&i| g[i] != Complex64::new(0.0, 0.0)).collect();
                Ok(UserChannel { paths, gains: g })
            })
            .collect::<Result<_, _>>()?;
        Ok(ChannelRealization { n_t, users })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn user(&self, u: usize) -> &UserChannel {
        &self.users[u]
    }

    pub fn users(&self) -> &[UserChannel] {
        &self.users
    }

    fn check(&self, u: usize, beam: usize) -> Result<(), ChannelError> {
        if u >= self.users.len() {
            return Err(ChannelError::UserIndex {
                user: u,
                users: self.users.len(),
            });
        }
        if beam >= self.n_t {
            return Err(ChannelError::BeamIndex { beam, n_t: self.n_t });
        }
        Ok(())
    }

    /// Effective channel `√N_t · h̄_{u,i}` seen by user `u` on beam `i`.
    pub fn effective_gain(&self, u: usize, beam: usize) -> Result<Complex64, ChannelError> {
        self.check(u, beam)?;
        Ok(self.users[u].gains[beam] * (self.n_t as f64).sqrt())
    }

    /// Antenna-domain channel `h_u = D h̄_u`.
    pub fn antenna_domain_vector(&self, u: usize) -> Result<DVector<Complex64>, ChannelError> {
        self.check(u, 0)?;
        let n = self.n_t;
        let user = &self.users[u];
        Ok(DVector::from_fn(n, |m, _| {
            user.paths
                .iter()
                .map(|&i| dft_phase(n, i, m).conj() * user.gains[i])
                .sum()
        }))
    }

    pub fn to_records(&self) -> Vec<ChannelRecord> {
        self.users
            .iter()
            .enumerate()
            .map(|(user, ch)| ChannelRecord {
                user,
                indices: ch.paths.clone(),
                gains_re: ch.paths.iter().map(|&i| ch.gains[i].re).collect(),
                gains_im: ch.paths.iter().map(|&i| ch.gains[i].im).collect(),
            })
            .collect()
    }

    pub fn dump_json(&self) -> String {
        serde_json::to_string(&self.to_records()).expect("channel records always serialize")
    }
}

/// `e^{+j2π i m / N}`, entry `m` of `d*_i`.
fn dft_phase(n: usize, beam: usize, m: usize) -> Complex64 {
    // Reduce the exponent modulo n first so large products keep full precision.
    let k = (beam * m) % n;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

/// Analog beam `d*_i / √N_t` from the DFT codebook.
pub fn dft_beam(n_t: usize, beam: usize) -> Result<DVector<Complex64>, ChannelError> {
    if beam >= n_t {
        return Err(ChannelError::BeamIndex { beam, n_t });
    }
    let scale = 1.0 / (n_t as f64).sqrt();
    Ok(DVector::from_fn(n_t, |m, _| dft_phase(n_t, beam, m) * scale))
}

/// Draws a realization for every user in `cfg` from the streams of `key`.
pub fn sample_channel(cfg: &ChannelConfig, key: &StreamKey) -> Result<ChannelRealization, ChannelError> {
    cfg.validate()?;
    let l = cfg.path_count()?;
    let n_t = cfg.n_t;
    let sigma = (0.5 / l as f64).sqrt();
    let mut scratch: Vec<usize> = Vec::with_capacity(n_t);
    let users = (0..cfg.users)
        .map(|u| {
            let mut rng = key.user_rng(u);
            scratch.clear();
            scratch.extend(0..n_t);
            // Partial Fisher-Yates: the first l slots are a uniform l-subset.
            for k in 0..l {
                let r = rng.random_range(k..n_t);
                scratch.swap(k, r);
            }
            let mut paths = scratch[..l].to_vec();
            paths.sort_unstable();
            let mut gains = vec![Complex64::new(0.0, 0.0); n_t];
            for &i in &paths {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                gains[i] = Complex64::new(re * sigma, im * sigma);
            }
            UserChannel { paths, gains }
        })
        .collect();
    Ok(ChannelRealization { n_t, users })
}
