//! Reference computations that share no code with the crate's evaluators.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use interleaved_training::channel::{dft_beam, ChannelRealization};
use interleaved_training::mu::KnownBeams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 40)
}

/// Composite Simpson rule on `n` (even) intervals.
pub fn simpson_fixed(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

/// `P(sum of the k largest of n i.i.d. Exp(rate) <= a)`.
///
/// By the Rényi representation the sum is `Σ_m E_m · min(m, k) / (rate · m)`
/// with i.i.d. unit exponentials `E_m`, i.e. a chain of exponential phases.
/// The CDF of that phase-type law is `1 − e_1ᵀ exp(T a) 1`.
pub fn top_sum_cdf_phase_type(n: usize, k: usize, rate: f64, a: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let rates: Vec<f64> = (1..=n).map(|m| rate * m as f64 / m.min(k) as f64).collect();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for (i, &r) in rates.iter().enumerate() {
        t[(i, i)] = -r * a;
        if i + 1 < n {
            t[(i, i + 1)] = r * a;
        }
    }
    let e = t.exp();
    1.0 - e.row(0).sum()
}

/// Training length PMF from first principles: stopping at beam `i` means the
/// beam is non-zero, `j` of the earlier beams are non-zero, and the top sum
/// crosses the threshold exactly when the `(j+1)`-th non-zero beam arrives.
pub fn pmf_by_differences(n_t: usize, l: usize, n_rf: usize, alpha: f64) -> Vec<f64> {
    let k = n_rf.min(l);
    let a = alpha / n_t as f64;
    let f: Vec<f64> = (0..=l).map(|n| top_sum_cdf_phase_type(n, k, l as f64, a)).collect();
    let total = binomial_f64(n_t, l);
    let mut p = Vec::with_capacity(n_t);
    for i in 1..n_t {
        let mut s = 0.0;
        for j in 0..l.min(i) {
            if l - 1 - j > n_t - i {
                continue;
            }
            let w = binomial_f64(i - 1, j) * binomial_f64(n_t - i, l - 1 - j) / total;
            s += w * (f[j] - f[j + 1]);
        }
        p.push(s);
    }
    p.push(1.0 - p.iter().sum::<f64>());
    p
}

pub fn binomial_big(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k.min(n - k)).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `ξ(i, j)` as an exact ratio of counts over all `L`-subsets of `N_t` beams.
pub fn xi_by_enumeration(i: usize, j: usize, n_t: usize, l: usize) -> (u64, u64) {
    let mut hits = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n_t) {
        if mask.count_ones() as usize != l {
            continue;
        }
        total += 1;
        let on_i = mask & (1 << (i - 1)) != 0;
        let before = (mask & ((1u32 << (i - 1)) - 1)).count_ones() as usize;
        if on_i && before == j {
            hits += 1;
        }
    }
    (hits, total)
}

/// Sorted (ascending) effective gains of an assignment.
pub fn gain_profile(gains: &[Vec<f64>], beams: &[usize]) -> Vec<f64> {
    let mut g: Vec<f64> = beams.iter().enumerate().map(|(u, &b)| gains[u][b]).collect();
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g
}

/// Lexicographically largest ascending gain profile over all ordered tuples
/// of distinct beams from `pool` with every gain non-zero.
pub fn brute_force_maxmin(gains: &[Vec<f64>], pool: &[usize]) -> Option<Vec<f64>> {
    fn rec(gains: &[Vec<f64>], pool: &[usize], cur: &mut Vec<usize>, best: &mut Option<Vec<f64>>) {
        if cur.len() == gains.len() {
            let p = gain_profile(gains, cur);
            if p[0] > 0.0 && best.as_ref().is_none_or(|b| p.as_slice() > b.as_slice()) {
                *best = Some(p);
            }
            return;
        }
        for &b in pool {
            if !cur.contains(&b) {
                cur.push(b);
                rec(gains, pool, cur, best);
                cur.pop();
            }
        }
    }
    let mut best = None;
    rec(gains, pool, &mut Vec::new(), &mut best);
    best
}

/// `(Ĥ F_BB, ‖F_RF F_BB‖_F²)` built in the antenna domain: rows `h_uᵀ`, analog
/// columns `d*_{n_v} / √N_t`, and baseband `F_BB = λ W`.
pub fn antenna_domain_zf(
    ch: &ChannelRealization,
    beams: &[usize],
    w: &DMatrix<Complex64>,
    lambda: f64,
) -> (DMatrix<Complex64>, f64) {
    let n = ch.n_t();
    let u = ch.num_users();
    let h = DMatrix::from_fn(u, n, |r, c| ch.antenna_domain_vector(r).unwrap()[c]);
    let cols: Vec<DVector<Complex64>> = beams.iter().map(|&b| dft_beam(n, b).unwrap()).collect();
    let f_rf = DMatrix::from_columns(&cols);
    let f_bb = w * Complex64::new(lambda, 0.0);
    let x = &f_rf * &f_bb;
    (&h * &x, x.norm_squared())
}

/// Random complex Gaussian entry with unit variance.
pub fn cn(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(rand_distr::StandardNormal);
    let im: f64 = rng.sample(rand_distr::StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Synthetic instance whose first `beams` beams are each non-zero for a user
/// with probability `1 − sparsity`; every beam is trained.
pub fn random_instance(
    r: &mut impl Rng,
    users: usize,
    beams: usize,
    sparsity: f64,
) -> (ChannelRealization, KnownBeams) {
    let n_t = beams.max(2) + r.random_range(0..3);
    let gains: Vec<Vec<Complex64>> = (0..users)
        .map(|_| {
            (0..n_t)
                .map(|b| {
                    if b < beams && r.random::<f64>() > sparsity {
                        cn(r)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    let ch = ChannelRealization::from_gains(n_t, gains).unwrap();
    let known = KnownBeams::after_training(&ch, n_t);
    (ch, known)
}
