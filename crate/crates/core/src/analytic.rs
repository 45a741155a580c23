//! Closed-form training length and outage results for interleaved SU training.
//!
//! These evaluators are independent of the simulators and serve as their
//! reference. Several expressions are alternating sums whose terms can be far
//! larger than the result; they are accumulated with [`CompensatedSum`] and
//! rejected with [`AnalyticError::Cancellation`] when the summed term
//! magnitude exceeds the result by more than [`CANCELLATION_GUARD`]. For the
//! training length PMF the comparison is between the largest term magnitude
//! of any entry and the largest entry.
//!
//! When `N_RF > L` every evaluator uses `N_RF = L`: with only `L` non-zero
//! beams, extra RF chains cannot change which beams are combined.

use thiserror::Error;

use crate::special::{
    factorial, ln_factorial, log_binomial, lower_inc_gamma_int, reg_lower_inc_gamma_int, upper_inc_gamma_int, xi,
    xi_bounds, CompensatedSum, SpecialError,
};

/// Largest tolerated ratio of accumulated term magnitude to result.
pub const CANCELLATION_GUARD: f64 = 1e12;

/// Slack allowed on probabilities before they count as invalid.
pub const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("need 1 <= L <= N_t (got L = {l}, N_t = {n_t})")]
    PathCount { l: usize, n_t: usize },
    #[error("need N_t >= 2 (got {0})")]
    AntennaCount(usize),
    #[error("need N_RF >= 1")]
    NoRfChains,
    #[error("threshold must be finite and non-negative (got {0})")]
    Alpha(f64),
    #[error("hierarchical search needs M >= 2 and L * M <= N_t (got N_t = {n_t}, L = {l}, M = {m})")]
    Hierarchical { n_t: usize, l: usize, m: usize },
    #[error("{quantity}: cancellation ratio {ratio:.3e} exceeds guard")]
    Cancellation { quantity: String, ratio: f64 },
    #[error("{quantity} = {value:e} lies outside [0, 1] beyond numerical slack")]
    OutOfRange { quantity: String, value: f64 },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

fn check_guard(quantity: impl FnOnce() -> String, value: f64, magnitude: f64) -> Result<(), AnalyticError> {
    if magnitude > CANCELLATION_GUARD * value.abs() {
        let ratio = if value == 0.0 {
            f64::INFINITY
        } else {
            magnitude / value.abs()
        };
        return Err(AnalyticError::Cancellation {
            quantity: quantity(),
            ratio,
        });
    }
    Ok(())
}

fn validate(n_t: usize, l: usize, n_rf: usize, alpha: f64) -> Result<usize, AnalyticError> {
    if n_t < 2 {
        return Err(AnalyticError::AntennaCount(n_t));
    }
    if l == 0 || l > n_t {
        return Err(AnalyticError::PathCount { l, n_t });
    }
    if n_rf == 0 {
        return Err(AnalyticError::NoRfChains);
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(AnalyticError::Alpha(alpha));
    }
    Ok(n_rf.min(l))
}

/// Distribution of the IT-SU training length.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLengthPmf {
    pub n_t: usize,
    pub l: usize,
    /// `min(N_RF, L)`.
    pub n_rf: usize,
    pub alpha: f64,
    probs: Vec<f64>,
}

impl TrainingLengthPmf {
    /// `P(length = i)` for `i` in `1..=N_t`.
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i - 1]
    }

    /// `P_1, …, P_{N_t}` in order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `N_t − Σ_{i<N_t} (N_t − i) P_i`.
    pub fn mean(&self) -> f64 {
        let n = self.n_t;
        let tail: CompensatedSum = self.probs[..n - 1]
            .iter()
            .enumerate()
            .map(|(k, p)| (n - k - 1) as f64 * p)
            .collect();
        n as f64 - tail.value()
    }
}

/// Probability that, with `j` non-zero beams already trained without success,
/// the next non-zero beam ends training. Returns the value together with the
/// summed magnitude of the terms that produced it.
fn stop_probability(j: usize, l: usize, k: usize, scaled: f64) -> (f64, f64) {
    let e = (-scaled).exp();
    if k == 1 {
        let v = e * (-(-scaled).exp_m1()).powi(j as i32);
        return (v, v);
    }
    if j < k {
        let v = (j as f64 * scaled.ln() - scaled - ln_factorial(j as u32)).exp();
        let v = if j == 0 { e } else { v };
        return (v, v);
    }
    let (p1, m1) = stop_probability_bulk(j, l, k, scaled);
    let (p2, m2) = stop_probability_tail(j, l, k, scaled);
    (p1 + p2, m1 + m2)
}

/// `ln |((1 − k)/L)^k · β_{j,l}|` and its sign. The `L^k` factors cancel.
fn scaled_beta(j: usize, l: usize, k: usize) -> (f64, f64) {
    let ln = k as f64 * ((k - 1) as f64).ln() + ln_factorial(j as u32)
        - ln_factorial((j - k - l) as u32)
        - ln_factorial((k - 1) as u32)
        - ln_factorial((k - 2) as u32)
        - ln_factorial(l as u32);
    let sign = if (k + l).is_multiple_of(2) { 1.0 } else { -1.0 };
    (ln, sign)
}

fn binom(n: usize, k: usize) -> f64 {
    log_binomial(n as u64, k as u64).map(f64::exp).unwrap_or(0.0)
}

/// Part of the stopping probability where the `(k−1)` strongest trained beams
/// sum to at most `α/N_t · (k−1)/k`.
fn stop_probability_bulk(j: usize, l: usize, k: usize, scaled: f64) -> (f64, f64) {
    let _ = l;
    let pre = (-scaled).exp() / (k - 1) as f64;
    let mut acc = CompensatedSum::new();
    for ll in 0..=(j - k) {
        let (ln_b, sign_b) = scaled_beta(j, ll, k);
        let coef = sign_b * ln_b.exp() * pre / ((ll + 1) as f64).powi(k as i32);
        let upper = scaled * (ll + 1) as f64 / k as f64;
        for m in 0..=(k - 2) {
            let s = (k - 1 - m) as u32;
            let at = |t: f64| -> (f64, f64) {
                let a = t.powi(m as i32 + 1) * lower_inc_gamma_int(s, t).expect("valid gamma args");
                let b = upper_inc_gamma_int(k as u32, t).expect("valid gamma args");
                (a + b, a.abs() + b.abs())
            };
            let (hi, hi_mag) = at(upper);
            let (lo, lo_mag) = at(0.0);
            let w = coef * binom(k - 2, m) * if m.is_multiple_of(2) { 1.0 } else { -1.0 } / (m + 1) as f64;
            acc.add_with_magnitude(w * (hi - lo), w.abs() * (hi_mag + lo_mag));
        }
    }
    (acc.value(), acc.magnitude())
}

/// Remaining part, where the `(k−1)` strongest sum lies in
/// `[α/N_t · (k−1)/k, α/N_t]`.
fn stop_probability_tail(j: usize, l: usize, k: usize, scaled: f64) -> (f64, f64) {
    let _ = l;
    let km1 = (k - 1) as f64;
    let pre = -(-scaled).exp() / (km1 * km1);
    let mut acc = CompensatedSum::new();
    for ll in 0..=(j - k) {
        let (ln_b, sign_b) = scaled_beta(j, ll, k);
        let coef = sign_b * ln_b.exp() * pre / ((ll + 1) as f64).powi(k as i32);
        let upper = scaled * (ll + 1) as f64 / k as f64;
        let shift = -scaled * (ll + 1) as f64;
        for m in 0..=(k - 2) {
            let s = (k - 1 - m) as u32;
            let wm = coef * binom(k - 2, m) / km1.powi(m as i32);
            for n in 0..=m {
                let at = |t: f64| -> (f64, f64) {
                    let a = t.powi((m - n + 1) as i32) * lower_inc_gamma_int(s, t).expect("valid gamma args");
                    let b = upper_inc_gamma_int((k - n) as u32, t).expect("valid gamma args");
                    (a + b, a.abs() + b.abs())
                };
                let (at_zero, zero_mag) = at(0.0);
                let (at_upper, upper_mag) = at(upper);
                let w = wm * binom(m, n) * shift.powi(n as i32) / (m - n + 1) as f64;
                acc.add_with_magnitude(w * (at_zero - at_upper), w.abs() * (zero_mag + upper_mag));
            }
        }
    }
    (acc.value(), acc.magnitude())
}

/// Training length PMF of the interleaved SU scheme.
pub fn pmf_training_length(n_t: usize, l: usize, n_rf: usize, alpha: f64) -> Result<TrainingLengthPmf, AnalyticError> {
    let k = validate(n_t, l, n_rf, alpha)?;
    let scaled = l as f64 * alpha / n_t as f64;

    let stop: Vec<(f64, f64)> = (0..l).map(|j| stop_probability(j, l, k, scaled)).collect();

    let mut probs = Vec::with_capacity(n_t);
    probs.push(l as f64 / n_t as f64 * (-scaled).exp());
    let mut worst = probs[0];
    for i in 2..n_t {
        let (lo, hi) = xi_bounds(i, n_t, l);
        let mut acc = CompensatedSum::new();
        for (j, &(value, magnitude)) in stop.iter().enumerate().take(hi + 1).skip(lo) {
            let w = xi(i, j, n_t, l)?.prob();
            acc.add_with_magnitude(w * value, w * magnitude);
        }
        let p = acc.value();
        worst = worst.max(acc.magnitude());
        if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
            return Err(AnalyticError::OutOfRange {
                quantity: format!("P_{i}"),
                value: p,
            });
        }
        probs.push(p);
    }
    // Judged on the whole vector: far-tail entries can be tiny with poor
    // relative accuracy while their absolute error stays at rounding level.
    let largest = probs.iter().fold(0.0f64, |m, p| m.max(p.abs())).min(1.0);
    check_guard(|| "training length PMF".to_string(), largest, worst)?;
    let head: CompensatedSum = probs.iter().copied().collect();
    let last = 1.0 - head.value();
    if last < -PROBABILITY_SLACK {
        return Err(AnalyticError::OutOfRange {
            quantity: format!("P_{n_t}"),
            value: last,
        });
    }
    probs.push(last);
    Ok(TrainingLengthPmf {
        n_t,
        l,
        n_rf: k,
        alpha,
        probs,
    })
}

/// Average IT-SU training length.
pub fn avg_training_length(n_t: usize, l: usize, n_rf: usize, alpha: f64) -> Result<f64, AnalyticError> {
    Ok(pmf_training_length(n_t, l, n_rf, alpha)?.mean())
}

/// Leading-order average training length `N_t / (L + 1)` for fixed `L`.
pub fn avg_training_length_asymptotic(n_t: usize, l: usize) -> f64 {
    n_t as f64 / (l as f64 + 1.0)
}

/// CDF at `scaled / rate` of the sum of the `k` largest of `n` i.i.d.
/// exponential variables with common rate; `scaled` is the threshold times
/// the rate. For `n < k` all variables are summed. Returns value and term
/// magnitude.
pub fn top_sum_cdf(n: usize, k: usize, scaled: f64) -> Result<(f64, f64), AnalyticError> {
    if k == 0 {
        return Err(AnalyticError::NoRfChains);
    }
    if scaled.is_nan() || scaled < 0.0 {
        return Err(AnalyticError::Alpha(scaled));
    }
    if n == 0 {
        return Ok((1.0, 1.0));
    }
    if n <= k {
        let v = reg_lower_inc_gamma_int(n as u32, scaled)?;
        return Ok((v, v));
    }
    let kf = k as f64;
    let lead = log_binomial(n as u64, k as u64)?.exp();
    let mut acc = CompensatedSum::new();
    acc.add(reg_lower_inc_gamma_int(k as u32, scaled)?);
    for j in 1..=(n - k) {
        let jf = j as f64;
        let c = -1.0 - jf / kf;
        let sign = if (k + j - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        let w = sign * binom(n - k, j) * (kf / jf).powi(k as i32 - 1);
        // (e^{c x} − 1)/c without cancellation at small x.
        let first = (c * scaled).exp_m1() / c;
        let mut inner = CompensatedSum::new();
        inner.add(first);
        let mut coeff = 1.0;
        for m in 0..k.saturating_sub(1) {
            if m > 0 {
                coeff *= -jf / kf / m as f64;
            }
            inner.add(-coeff * lower_inc_gamma_int(m as u32 + 1, scaled)?);
        }
        acc.add_with_magnitude(w * inner.value(), w.abs() * inner.magnitude());
    }
    Ok((lead * acc.value(), lead * acc.magnitude()))
}

fn clip_probability(quantity: &str, value: f64) -> Result<f64, AnalyticError> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
        return Err(AnalyticError::OutOfRange {
            quantity: quantity.to_string(),
            value,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Outage probability of the interleaved SU scheme, which equals the
/// probability that the `N_RF` strongest path powers sum to at most `α/N_t`.
pub fn outage_it_su(n_t: usize, l: usize, n_rf: usize, alpha: f64) -> Result<f64, AnalyticError> {
    let k = validate(n_t, l, n_rf, alpha)?;
    let scaled = l as f64 * alpha / n_t as f64;
    let (value, magnitude) = top_sum_cdf(l, k, scaled)?;
    if value != 0.0 || magnitude != 0.0 {
        check_guard(|| "outage".to_string(), value, magnitude)?;
    }
    clip_probability("outage", value)
}

/// Single-RF-chain outage `(1 − e^{−αL/N_t})^L`.
pub fn outage_single_rf(n_t: usize, l: usize, alpha: f64) -> Result<f64, AnalyticError> {
    validate(n_t, l, 1, alpha)?;
    let x = l as f64 * alpha / n_t as f64;
    Ok((-(-x).exp_m1()).powi(l as i32))
}

/// Large-`N_t` behaviour `(αL/N_t)^L` of [`outage_single_rf`] at fixed `L`.
pub fn outage_single_rf_asymptote(n_t: usize, l: usize, alpha: f64) -> f64 {
    (l as f64 * alpha / n_t as f64).powi(l as i32)
}

/// Training length `M L² log_M(N_t / L)` of hierarchical beam search.
pub fn hierarchical_training_length(n_t: usize, l: usize, m: usize) -> Result<f64, AnalyticError> {
    if m < 2 || l == 0 || l * m > n_t {
        return Err(AnalyticError::Hierarchical { n_t, l, m });
    }
    let (mf, lf) = (m as f64, l as f64);
    Ok(mf * lf * lf * (n_t as f64 / lf).ln() / mf.ln())
}

/// `Υ(s, x)/(s−1)!` re-exported for report code that wants regularized values.
pub fn erlang_cdf(s: u32, x: f64) -> Result<f64, AnalyticError> {
    Ok(lower_inc_gamma_int(s, x)? / factorial(s - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_four_beam_point() {
        let pmf = pmf_training_length(4, 1, 1, 1.0).unwrap();
        let p = 0.25 * (-0.25f64).exp();
        for i in 1..=3 {
            assert!((pmf.prob(i) - p).abs() < 1e-15, "P_{i}");
        }
        assert!((pmf.prob(4) - (1.0 - 3.0 * p)).abs() < 1e-15);
        assert!((pmf.mean() - (4.0 - 6.0 * p)).abs() < 1e-14);
        assert!((pmf.mean() - 2.8318).abs() < 1e-4);
    }

    #[test]
    fn iid_single_rf_geometric() {
        let (n, a) = (20, 1.5f64);
        let pmf = pmf_training_length(n, n, 1, a).unwrap();
        for i in 1..n {
            let expect = (-a).exp() * (1.0 - (-a).exp()).powi(i as i32 - 1);
            assert!((pmf.prob(i) - expect).abs() < 1e-14, "P_{i}");
        }
        let closed = a.exp() * (1.0 - (1.0 - (-a).exp()).powi(n as i32));
        assert!((pmf.mean() - closed).abs() < 1e-12);
    }

    #[test]
    fn iid_full_rf_poisson() {
        let (n, a) = (16, 4.0f64);
        let pmf = pmf_training_length(n, n, n, a).unwrap();
        for i in 1..n {
            let expect = (-a).exp() * a.powi(i as i32 - 1) / factorial(i as u32 - 1);
            assert!((pmf.prob(i) - expect).abs() < 1e-13, "P_{i}");
        }
        assert!(pmf.mean() <= 1.0 + a);
    }

    #[test]
    fn extra_rf_chains_are_ignored() {
        let a = pmf_training_length(24, 3, 3, 4.0).unwrap();
        let b = pmf_training_length(24, 3, 7, 4.0).unwrap();
        assert_eq!(a.probs(), b.probs());
        assert_eq!(b.n_rf, 3);
    }

    #[test]
    fn single_rf_outage_matches_closed_form() {
        for (n, l, a) in [(32, 4, 4.0), (16, 2, 1.0), (64, 6, 8.0)] {
            let t = outage_it_su(n, l, 1, a).unwrap();
            let c = outage_single_rf(n, l, a).unwrap();
            assert!((t - c).abs() < 1e-12, "{n} {l} {a}: {t} vs {c}");
        }
        assert!((outage_single_rf(4, 1, 1.0).unwrap() - (1.0 - (-0.25f64).exp())).abs() < 1e-15);
        assert_eq!(outage_it_su(32, 4, 2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hierarchical_formula() {
        assert!((hierarchical_training_length(64, 1, 2).unwrap() - 12.0).abs() < 1e-12);
        assert!((hierarchical_training_length(81, 3, 3).unwrap() - 81.0).abs() < 1e-12);
        assert!((hierarchical_training_length(30, 10, 3).unwrap() - 300.0).abs() < 1e-12);
        assert!(hierarchical_training_length(64, 40, 2).is_err());
        assert!(hierarchical_training_length(64, 2, 1).is_err());
    }

    #[test]
    fn asymptote_values() {
        assert_eq!(avg_training_length_asymptotic(100, 1), 50.0);
        assert_eq!(avg_training_length_asymptotic(110, 3), 27.5);
    }

    #[test]
    fn domain_errors() {
        assert!(pmf_training_length(8, 9, 1, 1.0).is_err());
        assert!(pmf_training_length(8, 0, 1, 1.0).is_err());
        assert!(pmf_training_length(8, 2, 0, 1.0).is_err());
        assert!(pmf_training_length(8, 2, 1, -1.0).is_err());
        assert!(pmf_training_length(1, 1, 1, 1.0).is_err());
    }
}
