//! Special functions and combinatorial factors for the analytic formulas.
//!
//! Everything here has integer first arguments, so the incomplete gamma
//! functions are evaluated from their finite-sum closed forms rather than
//! through continued fractions. Alternating sums are accumulated with
//! [`CompensatedSum`], a double-word accumulator that also tracks the total
//! magnitude of the terms it has seen so callers can detect cancellation.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("binomial coefficient C({n}, {k}) requires k <= n")]
    BinomialDomain { n: u64, k: u64 },
    #[error("incomplete gamma requires s >= 1 and x >= 0 (got s = {s}, x = {x})")]
    GammaDomain { s: u32, x: f64 },
    #[error("xi({i}, {j}) undefined for N_t = {n_t}, L = {l}")]
    XiDomain { i: usize, j: usize, n_t: usize, l: usize },
    #[error("ordered partial sum density needs 1 <= N_RF <= L (got N_RF = {n_rf}, L = {l})")]
    OrderStatDomain { n_rf: usize, l: usize },
}

/// A probability stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log-probability. Values above zero are rejected.
    pub fn new(value: f64) -> Option<Self> {
        (value <= 0.0).then_some(LogProb(value))
    }

    pub fn from_prob(p: f64) -> Option<Self> {
        (0.0..=1.0).contains(&p).then(|| LogProb(p.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

/// Error-free transformation `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Double-word running sum.
///
/// Keeps the sum as an unevaluated pair `hi + lo`, which carries roughly twice
/// the working precision, and records `Σ|term|` for cancellation checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    hi: f64,
    lo: f64,
    magnitude: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, term: f64) {
        let (s, e) = two_sum(self.hi, term);
        let lo = self.lo + e;
        let (hi, lo) = two_sum(s, lo);
        self.hi = hi;
        self.lo = lo;
        self.magnitude += term.abs();
    }

    /// Adds `term`, charging `magnitude` (instead of `|term|`) to the
    /// cancellation budget. Used when a term is itself the result of an
    /// inner sum whose own term sizes matter.
    #[inline]
    pub fn add_with_magnitude(&mut self, term: f64, magnitude: f64) {
        let (s, e) = two_sum(self.hi, term);
        let lo = self.lo + e;
        let (hi, lo) = two_sum(s, lo);
        self.hi = hi;
        self.lo = lo;
        self.magnitude += magnitude;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// Sum of the absolute values of everything added so far.
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for t in iter {
            acc.add(t);
        }
        acc
    }
}

/// `n!` as a float. Overflows to infinity beyond 170.
pub fn factorial(n: u32) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// `ln Γ(x) − [(x − ½) ln x − x + ½ ln 2π]`, the Stirling remainder, for x >= 16.
fn stirling_remainder(x: f64) -> f64 {
    let r = 1.0 / (x * x);
    (1.0 / 12.0 + r * (-1.0 / 360.0 + r * (1.0 / 1260.0 + r * (-1.0 / 1680.0 + r * (1.0 / 1188.0))))) / x
}

/// Below this many factors the binomial is summed directly.
const DIRECT_BINOMIAL_TERMS: u64 = 64;

/// Natural log of the binomial coefficient `C(n, k)`.
///
/// Short products are summed factor by factor; larger ones use the Stirling
/// series arranged so that the leading terms never cancel.
pub fn log_binomial(n: u64, k: u64) -> Result<f64, SpecialError> {
    if k > n {
        return Err(SpecialError::BinomialDomain { n, k });
    }
    let k = k.min(n - k);
    if k == 0 {
        return Ok(0.0);
    }
    if k <= DIRECT_BINOMIAL_TERMS {
        let nf = n as f64;
        let kf = k as f64;
        let acc: CompensatedSum = (1..=k)
            .map(|i| {
                let i = i as f64;
                ((nf - kf + i) / i).ln()
            })
            .collect();
        return Ok(acc.value());
    }
    // x = n + 1, y = k + 1, z = n - k + 1 with x = y + z - 1.
    let x = n as f64 + 1.0;
    let y = k as f64 + 1.0;
    let z = (n - k) as f64 + 1.0;
    let lead = (y - 0.5) * ((z - 1.0) / y).ln_1p() + (z - 0.5) * ((y - 1.0) / z).ln_1p() - 0.5 * x.ln();
    let corr = stirling_remainder(x) - stirling_remainder(y) - stirling_remainder(z);
    Ok(lead + 1.0 - 0.5 * (2.0 * PI).ln() + corr)
}

/// `e^{-x} Σ_{k<s} x^k / k!`, the regularized upper incomplete gamma Q(s, x).
fn poisson_head(s: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut acc = CompensatedSum::new();
    acc.add(term);
    for k in 1..s {
        term *= x / f64::from(k);
        acc.add(term);
    }
    acc.value() * (-x).exp()
}

/// `e^{-x} Σ_{k>=s} x^k / k!`, the regularized lower incomplete gamma P(s, x).
/// Only used where the head is larger than one half, i.e. x below about s.
fn poisson_tail(s: u32, x: f64) -> f64 {
    // First term x^s / s! in log space so large s does not overflow.
    let ln_first = f64::from(s) * x.ln() - ln_factorial(s);
    let mut term = 1.0;
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let mut k = f64::from(s);
    loop {
        k += 1.0;
        term *= x / k;
        acc.add(term);
        if term < acc.value() * 1e-18 {
            break;
        }
    }
    acc.value() * (ln_first - x).exp()
}

/// `ln n!`, exact to rounding for n <= 170 and Stirling beyond.
pub fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        0.0
    } else if n <= 170 {
        factorial(n).ln()
    } else {
        let x = f64::from(n) + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + stirling_remainder(x)
    }
}

fn check_gamma_args(s: u32, x: f64) -> Result<(), SpecialError> {
    if s == 0 || x.is_nan() || x < 0.0 {
        return Err(SpecialError::GammaDomain { s, x });
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(s, x) = Υ(s, x) / (s-1)!` for integer `s`.
pub fn reg_lower_inc_gamma_int(s: u32, x: f64) -> Result<f64, SpecialError> {
    check_gamma_args(s, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let head = poisson_head(s, x);
    if head <= 0.5 {
        Ok(1.0 - head)
    } else {
        Ok(poisson_tail(s, x))
    }
}

/// Regularized upper incomplete gamma `Q(s, x) = Γ(s, x) / (s-1)!` for integer `s`.
pub fn reg_upper_inc_gamma_int(s: u32, x: f64) -> Result<f64, SpecialError> {
    check_gamma_args(s, x)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(poisson_head(s, x))
}

/// Lower incomplete gamma `Υ(s, x) = ∫₀ˣ t^{s-1} e^{-t} dt` for integer `s >= 1`.
pub fn lower_inc_gamma_int(s: u32, x: f64) -> Result<f64, SpecialError> {
    let reg = reg_lower_inc_gamma_int(s, x)?;
    Ok(factorial(s - 1) * reg)
}

/// Upper incomplete gamma `Γ(s, x) = ∫ₓ^∞ t^{s-1} e^{-t} dt` for integer `s >= 1`.
pub fn upper_inc_gamma_int(s: u32, x: f64) -> Result<f64, SpecialError> {
    let reg = reg_upper_inc_gamma_int(s, x)?;
    Ok(factorial(s - 1) * reg)
}

/// Range `[b_i^(1), b_i^(2)]` of how many of the `L` paths can sit among the
/// first `i - 1` beams when beam `i` (1-based) carries one of them.
pub fn xi_bounds(i: usize, n_t: usize, l: usize) -> (usize, usize) {
    let lower = (l + i).saturating_sub(n_t + 1);
    let upper = (i - 1).min(l - 1);
    (lower, upper)
}

/// Probability that beam `i` (1-based) is aligned with a path and exactly `j`
/// of the remaining `L - 1` paths fall on beams `1..i`.
pub fn xi(i: usize, j: usize, n_t: usize, l: usize) -> Result<LogProb, SpecialError> {
    let err = SpecialError::XiDomain { i, j, n_t, l };
    if l == 0 || l > n_t || i == 0 || i > n_t {
        return Err(err);
    }
    let (lo, hi) = xi_bounds(i, n_t, l);
    if j < lo || j > hi {
        return Err(err);
    }
    let ln = log_binomial((i - 1) as u64, j as u64)? + log_binomial((n_t - i) as u64, (l - j - 1) as u64)?
        - log_binomial(n_t as u64, l as u64)?;
    Ok(LogProb(ln.min(0.0)))
}

/// Density of the sum of the `n_rf` largest of `l` i.i.d. exponential
/// variables with rate `l` (mean `1/l`), evaluated at `x`.
pub fn ordered_partial_sum_pdf(x: f64, n_rf: usize, l: usize) -> Result<f64, SpecialError> {
    if n_rf == 0 || n_rf > l {
        return Err(SpecialError::OrderStatDomain { n_rf, l });
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    let lf = l as f64;
    let k = n_rf as f64;
    let prefactor = log_binomial(l as u64, n_rf as u64)?.exp() * (-lf * x).exp();

    let mut acc = CompensatedSum::new();
    // Full-sum (Erlang) part.
    let ln_erlang = k * lf.ln() + (k - 1.0) * x.ln() - ln_factorial(n_rf as u32 - 1);
    acc.add(if n_rf == 1 {
        lf
    } else if x == 0.0 {
        0.0
    } else {
        ln_erlang.exp()
    });

    for j in 1..=(l - n_rf) {
        let jf = j as f64;
        let sign = if (n_rf + j - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        let weight = lf * log_binomial((l - n_rf) as u64, j as u64)?.exp() * (k / jf).powi(n_rf as i32 - 1);
        let u = -jf * x * lf / k;
        // e^u minus its Taylor head of order n_rf - 2.
        let mut tail = CompensatedSum::new();
        tail.add(u.exp());
        let mut term = 1.0;
        for m in 0..n_rf.saturating_sub(1) {
            if m > 0 {
                term *= u / m as f64;
            }
            tail.add(-term);
        }
        acc.add_with_magnitude(sign * weight * tail.value(), weight * tail.magnitude());
    }
    Ok(prefactor * acc.value())
}
