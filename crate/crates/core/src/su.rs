//! Single-user training and transmission.
//!
//! [`it_su_episode`] trains beams in natural order and stops as soon as the
//! strongest `min(N_RF, |B|)` known non-zero beams clear the outage
//! threshold `α / N_t`. The non-interleaved baselines train a fixed window
//! and decide once at the end. All schemes act on user 0 of the realization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{dft_beam, ChannelRealization, UserChannel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuError {
    #[error("N_RF must be at least 1")]
    NoRfChains,
    #[error("target normalized SNR must be positive and finite (got {0})")]
    Alpha(f64),
    #[error("transmit power must be positive and finite (got {0})")]
    Power(f64),
    #[error("trained window {trained} outside [1, N_t = {n_t}]")]
    TrainedRange { trained: usize, n_t: usize },
    #[error("beamformer needs at least one non-zero selected beam")]
    EmptySelection,
}

/// Threshold `α = (2^R_th − 1)/P` plus the RF chain budget. `power` is only
/// needed to report rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuSystemConfig {
    pub n_rf: usize,
    pub alpha: f64,
    pub power: Option<f64>,
}

impl SuSystemConfig {
    pub fn with_alpha(n_rf: usize, alpha: f64) -> Result<Self, SuError> {
        if n_rf == 0 {
            return Err(SuError::NoRfChains);
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(SuError::Alpha(alpha));
        }
        Ok(SuSystemConfig {
            n_rf,
            alpha,
            power: None,
        })
    }

    /// Derives `α` from linear transmit power and target rate in bits/s/Hz.
    pub fn from_rate(n_rf: usize, power: f64, rate_th: f64) -> Result<Self, SuError> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(SuError::Power(power));
        }
        Self::with_alpha(n_rf, (rate_th.exp2() - 1.0) / power).map(|c| c.with_power(power))
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = Some(power);
        self
    }

    /// Target rate implied by `α` and the configured power.
    pub fn rate_threshold(&self) -> Option<f64> {
        self.power.map(|p| (1.0 + self.alpha * p).log2())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuEpisodeResult {
    pub training_length: usize,
    pub outage: bool,
    /// Beams used for transmission, strongest first. Empty when nothing is sent.
    pub selected_beams: Vec<usize>,
    /// `N_t · Σ_{l∈S} |h̄_l|²`, the received SNR per unit transmit power.
    pub normalized_snr: f64,
    /// `log2(1 + P · normalized_snr)`; zero when nothing is transmitted.
    pub rate: Option<f64>,
}

impl SuEpisodeResult {
    pub fn received_snr(&self, power: f64) -> f64 {
        power * self.normalized_snr
    }
}

/// The `capacity` strongest beams seen so far, strongest first; equal powers
/// keep the lower beam index ahead.
#[derive(Debug, Clone)]
struct StrongestBeams {
    capacity: usize,
    beams: Vec<(f64, usize)>,
}

impl StrongestBeams {
    fn new(capacity: usize) -> Self {
        StrongestBeams {
            capacity,
            beams: Vec::with_capacity(capacity + 1),
        }
    }

    fn offer(&mut self, power: f64, beam: usize) {
        let pos = self
            .beams
            .iter()
            .position(|&(p, b)| power > p || (power == p && beam < b))
            .unwrap_or(self.beams.len());
        if pos < self.capacity {
            self.beams.insert(pos, (power, beam));
            self.beams.truncate(self.capacity);
        }
    }

    fn power_sum(&self) -> f64 {
        self.beams.iter().map(|&(p, _)| p).sum()
    }

    fn indices(&self) -> Vec<usize> {
        self.beams.iter().map(|&(_, b)| b).collect()
    }
}

fn rate_for(cfg: &SuSystemConfig, normalized_snr: f64) -> Option<f64> {
    cfg.power.map(|p| (1.0 + p * normalized_snr).log2())
}

fn finish(
    cfg: &SuSystemConfig,
    n_t: usize,
    training_length: usize,
    outage: bool,
    best: &StrongestBeams,
    transmit: bool,
) -> SuEpisodeResult {
    let (selected_beams, normalized_snr) = if transmit {
        (best.indices(), n_t as f64 * best.power_sum())
    } else {
        (Vec::new(), 0.0)
    };
    SuEpisodeResult {
        training_length,
        outage,
        selected_beams,
        normalized_snr,
        rate: rate_for(cfg, normalized_snr),
    }
}

/// Runs the interleaved loop. Returns the episode state after stopping.
fn interleaved(user: &UserChannel, cfg: &SuSystemConfig) -> (usize, bool, StrongestBeams) {
    let n_t = user.gains().len();
    let threshold = cfg.alpha / n_t as f64;
    let mut best = StrongestBeams::new(cfg.n_rf);
    for i in 0..n_t {
        if !user.is_nonzero(i) {
            continue;
        }
        best.offer(user.power(i), i);
        if best.power_sum() > threshold {
            return (i + 1, false, best);
        }
    }
    (n_t, true, best)
}

/// Interleaved training with joint SU transmission. In outage nothing is sent.
pub fn it_su_episode(ch: &ChannelRealization, cfg: &SuSystemConfig) -> SuEpisodeResult {
    let (len, outage, best) = interleaved(ch.user(0), cfg);
    finish(cfg, ch.n_t(), len, outage, &best, !outage)
}

/// Same stopping rule as [`it_su_episode`], but when every beam has been
/// trained without clearing the threshold the best beams are still used.
pub fn su_rate_episode(ch: &ChannelRealization, cfg: &SuSystemConfig) -> SuEpisodeResult {
    let (len, outage, best) = interleaved(ch.user(0), cfg);
    finish(cfg, ch.n_t(), len, outage, &best, true)
}

fn non_interleaved(ch: &ChannelRealization, cfg: &SuSystemConfig, trained: usize) -> SuEpisodeResult {
    let user = ch.user(0);
    let mut best = StrongestBeams::new(cfg.n_rf);
    for i in (0..trained).filter(|&i| user.is_nonzero(i)) {
        best.offer(user.power(i), i);
    }
    let outage = best.power_sum() <= cfg.alpha / ch.n_t() as f64;
    finish(cfg, ch.n_t(), trained, outage, &best, true)
}

/// Trains all `N_t` beams, then transmits on the strongest `min(N_RF, L)`.
pub fn nit_su_full(ch: &ChannelRealization, cfg: &SuSystemConfig) -> SuEpisodeResult {
    non_interleaved(ch, cfg, ch.n_t())
}

/// Trains beams `0..trained` only.
pub fn nit_su_partial(
    ch: &ChannelRealization,
    cfg: &SuSystemConfig,
    trained: usize,
) -> Result<SuEpisodeResult, SuError> {
    if trained == 0 || trained > ch.n_t() {
        return Err(SuError::TrainedRange { trained, n_t: ch.n_t() });
    }
    Ok(non_interleaved(ch, cfg, trained))
}

/// Analog columns `d*_s / √N_t` and the matched baseband vector for the
/// selected `(beam, h̄_beam)` pairs.
pub fn su_beamformers(
    n_t: usize,
    selected: &[(usize, Complex64)],
) -> Result<(DMatrix<Complex64>, DVector<Complex64>), SuError> {
    let power: f64 = selected.iter().map(|(_, g)| g.norm_sqr()).sum();
    if selected.is_empty() || power == 0.0 {
        return Err(SuError::EmptySelection);
    }
    let columns = selected
        .iter()
        .map(|&(b, _)| dft_beam(n_t, b).map_err(|_| SuError::EmptySelection))
        .collect::<Result<Vec<_>, _>>()?;
    let analog = DMatrix::from_columns(&columns);
    let norm = power.sqrt();
    let baseband = DVector::from_iterator(selected.len(), selected.iter().map(|(_, g)| g.conj() / norm));
    Ok((analog, baseband))
}
