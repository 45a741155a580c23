mod common;

use common::*;
use interleaved_training::analytic::*;
use interleaved_training::channel::{sample_channel, ChannelConfig, ChannelRealization, PathCount, StreamKey};
use interleaved_training::mu::{
    exhaustive_assignment, maxmin_assignment, zf_lambda, zf_precoder, BeamAssignment, KnownBeams, MuSystemConfig,
};
use interleaved_training::special::*;
use interleaved_training::su::{nit_su_full, su_beamformers, SuSystemConfig};
use num_complex::Complex64;
use rand::Rng;

#[test]
fn log_binomial_matches_big_integers() {
    for (n, k) in [
        (10, 3),
        (64, 32),
        (128, 64),
        (256, 100),
        (1000, 499),
        (5000, 70),
        (300, 299),
    ] {
        let exact = binomial_big(n, k);
        // ln of a big integer through its decimal digits.
        let digits = exact.to_string();
        let head: f64 = digits[..17.min(digits.len())].parse().unwrap();
        let ln = head.ln() + (digits.len() - 17.min(digits.len())) as f64 * std::f64::consts::LN_10;
        let got = log_binomial(n as u64, k as u64).unwrap();
        assert!(
            (got - ln).abs() <= 1e-13 * ln.abs().max(1.0),
            "C({n},{k}): {got} vs {ln}"
        );
    }
}

#[test]
fn xi_matches_subset_enumeration() {
    for n_t in 2..=8 {
        for l in 1..=n_t {
            for i in 1..=n_t {
                let (lo, hi) = xi_bounds(i, n_t, l);
                for j in 0..n_t {
                    let (hits, total) = xi_by_enumeration(i, j, n_t, l);
                    match xi(i, j, n_t, l) {
                        Ok(p) => {
                            assert!(j >= lo && j <= hi);
                            let exact = hits as f64 / total as f64;
                            assert!(
                                (p.prob() - exact).abs() <= 1e-15 * exact.max(1e-300) * 8.0,
                                "xi({i},{j}) N_t={n_t} L={l}"
                            );
                        }
                        Err(_) => assert_eq!(hits, 0, "xi({i},{j}) N_t={n_t} L={l} rejected but possible"),
                    }
                }
            }
        }
    }
}

#[test]
fn incomplete_gamma_complement() {
    for s in 1..=20u32 {
        for &x in &[1e-6, 0.01, 0.5, 1.0, 3.0, 7.5, 19.0, 20.0, 35.0, 80.0] {
            let sum = reg_lower_inc_gamma_int(s, x).unwrap() + reg_upper_inc_gamma_int(s, x).unwrap();
            assert!((sum - 1.0).abs() < 1e-12, "s={s} x={x}");
            let raw = lower_inc_gamma_int(s, x).unwrap() + upper_inc_gamma_int(s, x).unwrap();
            assert!((raw / factorial(s - 1) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn lower_gamma_matches_quadrature() {
    for s in 1..=8u32 {
        for &x in &[0.05f64, 0.7, 2.0, 6.0] {
            let scale = x.powi(s as i32) / s as f64;
            let q = integrate(&|t: f64| t.powi(s as i32 - 1) * (-t).exp(), 0.0, x, 1e-15 * scale);
            let v = lower_inc_gamma_int(s, x).unwrap();
            assert!((v - q).abs() <= 1e-11 * q.abs(), "s={s} x={x}: {v} vs {q}");
        }
    }
}

#[test]
fn ordered_partial_sum_density_normalizes() {
    for (n_rf, l) in [(1, 1), (1, 4), (2, 4), (3, 3), (2, 6), (3, 8), (4, 10)] {
        let f = |x: f64| ordered_partial_sum_pdf(x, n_rf, l).unwrap();
        let hi = 60.0 / l as f64 * n_rf as f64;
        let total = simpson_fixed(&f, 0.0, hi, 40_000);
        assert!((total - 1.0).abs() < 1e-8, "N_RF={n_rf} L={l}: {total}");
    }
}

#[test]
fn ordered_partial_sum_density_matches_phase_type() {
    for (n_rf, l) in [(2, 4), (3, 6), (1, 5)] {
        for &x in &[0.1, 0.4, 1.0] {
            let cdf = integrate(&|t: f64| ordered_partial_sum_pdf(t, n_rf, l).unwrap(), 0.0, x, 1e-14);
            let pt = top_sum_cdf_phase_type(l, n_rf, l as f64, x);
            assert!((cdf - pt).abs() < 1e-10, "N_RF={n_rf} L={l} x={x}: {cdf} vs {pt}");
        }
    }
}

#[test]
fn hand_point_pmf() {
    let pmf = pmf_training_length(4, 1, 1, 1.0).unwrap();
    let p = 0.25 * (-0.25f64).exp();
    assert!((pmf.prob(1) - 0.19470).abs() < 1e-5);
    assert!((pmf.prob(4) - 0.41590).abs() < 1e-5);
    assert!((pmf.prob(2) - p).abs() < 1e-15);
    let by_moments: f64 = (1..=4).map(|i| i as f64 * pmf.prob(i)).sum();
    assert!((pmf.mean() - by_moments).abs() < 1e-14);
    assert!((avg_training_length(4, 1, 1, 1.0).unwrap() - 2.8318).abs() < 1e-4);
}

#[test]
fn pmf_matches_phase_type_differences() {
    let cases = [
        (16, 2, 1, 4.0),
        (32, 3, 2, 4.0),
        (32, 4, 2, 4.0),
        (64, 6, 3, 8.0),
        (40, 6, 4, 1.0),
        (24, 5, 5, 0.5),
        (16, 16, 16, 4.0),
        (20, 8, 3, 8.0),
    ];
    for (n_t, l, n_rf, a) in cases {
        let pmf = pmf_training_length(n_t, l, n_rf, a).unwrap();
        let oracle = pmf_by_differences(n_t, l, n_rf, a);
        for i in 1..=n_t {
            let (got, want) = (pmf.prob(i), oracle[i - 1]);
            assert!(
                (got - want).abs() < 1e-10,
                "({n_t},{l},{n_rf},{a}) P_{i}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn iid_special_cases() {
    let a = 4.0f64;
    // The exact value sits below 1 + α by a Poisson tail of order 1e-60, far
    // beneath double rounding, so allow rounding slack on the bound.
    let full = avg_training_length(64, 64, 64, a).unwrap();
    assert!(full <= 1.0 + a + 1e-12, "{full}");
    assert!((full - (1.0 + a)).abs() < 1e-12, "{full}");
    let single = avg_training_length(64, 64, 1, a).unwrap();
    let closed = a.exp() * (1.0 - (1.0 - (-a).exp()).powi(64));
    assert!((single - closed).abs() < 1e-9, "{single} vs {closed}");
}

#[test]
fn asymptotic_length_within_order_one() {
    let exact = avg_training_length(110, 3, 1, 4.0).unwrap();
    assert!((exact - 27.5).abs() <= 5.0, "{exact}");
}

#[test]
fn training_length_slopes() {
    let nts: Vec<f64> = (40..=160).step_by(20).map(|n| n as f64).collect();
    for (l, target) in [(1, 0.50), (3, 0.25), (6, 0.14)] {
        let ys: Vec<f64> = nts
            .iter()
            .map(|&n| avg_training_length(n as usize, l, 1, 4.0).unwrap())
            .collect();
        let s = slope(&nts, &ys);
        assert!((s - target).abs() <= 0.02, "L={l}: slope {s}");
    }
}

#[test]
fn outage_matches_quadrature_and_phase_type() {
    for (n_t, l, n_rf, a) in [
        (32, 4, 2, 4.0),
        (32, 3, 2, 4.0),
        (64, 6, 3, 8.0),
        (16, 5, 4, 2.0),
        (48, 8, 2, 6.0),
    ] {
        let th = outage_it_su(n_t, l, n_rf, a).unwrap();
        let q = integrate(
            &|x: f64| ordered_partial_sum_pdf(x, n_rf, l).unwrap(),
            0.0,
            a / n_t as f64,
            1e-15,
        );
        let pt = top_sum_cdf_phase_type(l, n_rf, l as f64, a / n_t as f64);
        assert!((th - q).abs() < 1e-6, "({n_t},{l},{n_rf},{a}): {th} vs quad {q}");
        assert!(
            (th - pt).abs() < 1e-10,
            "({n_t},{l},{n_rf},{a}): {th} vs phase-type {pt}"
        );
    }
}

#[test]
fn outage_single_rf_lattice() {
    let mut count = 0;
    for n_t in [8, 16, 32, 64, 128] {
        for (l, a) in [(1, 1.0), (2, 4.0), (4, 4.0), (6, 8.0)] {
            let th = outage_it_su(n_t, l, 1, a).unwrap();
            let single = outage_single_rf(n_t, l, a).unwrap();
            assert!((th - single).abs() < 1e-10, "N_t={n_t} L={l}");
            count += 1;
        }
    }
    assert_eq!(count, 20);
    assert!((outage_single_rf(4, 1, 1.0).unwrap() - 0.2212).abs() < 1e-4);
    let a = 2.0f64;
    assert!((outage_single_rf(16, 16, a).unwrap() - (1.0 - (-a).exp()).powi(16)).abs() < 1e-15);
    let ratio = outage_single_rf(1 << 20, 3, 4.0).unwrap() / outage_single_rf_asymptote(1 << 20, 3, 4.0);
    assert!((ratio - 1.0).abs() < 1e-4, "{ratio}");
}

#[test]
fn cancellation_guard_reports_instead_of_noise() {
    // Large path counts drive the alternating sums far past double precision.
    match pmf_training_length(256, 120, 8, 8.0) {
        Err(AnalyticError::Cancellation { ratio, .. }) => assert!(ratio > CANCELLATION_GUARD),
        Err(AnalyticError::OutOfRange { value, .. }) => {
            assert!(!(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value))
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(pmf) => {
            let oracle = pmf_by_differences(256, 120, 8, 8.0);
            for i in 1..=256 {
                assert!((pmf.prob(i) - oracle[i - 1]).abs() < 1e-6, "P_{i}");
            }
        }
    }
}

#[test]
fn beamformer_power_via_antenna_domain() {
    let mut r = rng(11);
    for trial in 0..200 {
        let n_t = r.random_range(4..48);
        let l = r.random_range(1..=n_t.min(6));
        let n_rf = r.random_range(1..=4);
        let cfg = ChannelConfig::new(n_t, PathCount::Fixed(l), 1).unwrap();
        let ch = sample_channel(&cfg, &StreamKey::new(3, 0, trial)).unwrap();
        let res = nit_su_full(&ch, &SuSystemConfig::with_alpha(n_rf, 1.0).unwrap());
        let sel: Vec<(usize, Complex64)> = res.selected_beams.iter().map(|&b| (b, ch.user(0).gain(b))).collect();
        let (analog, baseband) = su_beamformers(n_t, &sel).unwrap();
        let h = ch.antenna_domain_vector(0).unwrap();
        let y = (h.transpose() * &analog * &baseband)[(0, 0)];
        assert!((y.norm_sqr() - res.normalized_snr).abs() < 1e-10 * res.normalized_snr.max(1.0));
        assert!((baseband.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn exhaustive_matches_independent_enumeration() {
    let mut r = rng(21);
    for _ in 0..500 {
        let users = r.random_range(1..=3);
        let beams = r.random_range(users..=6);
        let (ch, known) = random_instance(&mut r, users, beams, 0.4);
        let cfg = MuSystemConfig::with_alpha_bar(3, users, 1.0).unwrap();
        let got = exhaustive_assignment(&known, &ch, &cfg).unwrap();
        // Independent: λ² from the explicit inverse of Ĥ for every tuple.
        let pool = known.union().to_vec();
        let mut best: Option<f64> = None;
        let mut stack = vec![(Vec::<usize>::new())];
        while let Some(t) = stack.pop() {
            if t.len() == users {
                let h = nalgebra::DMatrix::from_fn(users, users, |u, v| ch.effective_gain(u, t[v]).unwrap());
                if let Some(inv) = h.clone().try_inverse() {
                    let svd = h.singular_values();
                    if svd.min() > 1e-9 * svd.max() {
                        let l2 = users as f64 / inv.norm_squared();
                        best = Some(best.map_or(l2, |b: f64| b.max(l2)));
                    }
                }
                continue;
            }
            for &b in &pool {
                if !t.contains(&b) {
                    let mut n = t.clone();
                    n.push(b);
                    stack.push(n);
                }
            }
        }
        match (got, best) {
            (None, None) => {}
            (Some((_, l2)), Some(b)) => assert!((l2 - b).abs() <= 1e-9 * b, "{l2} vs {b}"),
            (g, b) => panic!("mismatch {g:?} vs {b:?}"),
        }
    }
}

#[test]
fn maxmin_matches_brute_force() {
    let mut r = rng(31);
    for _ in 0..10_000 {
        let users = r.random_range(1..=3);
        let beams = r.random_range(users..=8);
        let (ch, known) = random_instance(&mut r, users, beams, 0.5);
        let gains: Vec<Vec<f64>> = (0..users)
            .map(|u| ch.user(u).gains().iter().map(|g| g.norm()).collect())
            .collect();
        let want = brute_force_maxmin(&gains, known.union());
        let got = maxmin_assignment(&known, &ch);
        match (got, want) {
            (None, None) => {}
            (Some((a, _)), Some(w)) => {
                assert!(!a.has_duplicates());
                assert_eq!(gain_profile(&gains, a.beams()), w);
            }
            (g, w) => panic!("mismatch {g:?} vs {w:?}"),
        }
    }
}

#[test]
fn zf_zero_interference_in_antenna_domain() {
    let mut r = rng(41);
    let mut checked = 0;
    while checked < 10_000 {
        let users = r.random_range(1..=4);
        let n_t = r.random_range(users.max(2)..=24);
        let l = r.random_range(1..=n_t.min(5));
        let cfg = ChannelConfig::new(n_t, PathCount::Fixed(l), users).unwrap();
        let ch = sample_channel(&cfg, &StreamKey::new(41, users as u64, checked)).unwrap();
        let known = KnownBeams::after_training(&ch, n_t);
        let Some((a, l2)) = maxmin_assignment(&known, &ch) else {
            continue;
        };
        let Some((w, lambda)) = zf_precoder(&a, &ch) else {
            continue;
        };
        assert!((lambda * lambda - l2).abs() <= 1e-12 * l2);
        let (y, tx_power) = antenna_domain_zf(&ch, a.beams(), &w, lambda);
        for u in 0..users {
            for v in 0..users {
                let z = y[(u, v)];
                if u == v {
                    assert!((z.re - lambda).abs() <= 1e-9 * lambda && z.im.abs() <= 1e-9 * lambda);
                } else {
                    assert!(z.norm() <= 1e-9 * lambda, "leak {z} vs λ {lambda}");
                }
            }
        }
        // ‖F_RF F_BB‖_F² = U: the analog stage preserves the Frobenius norm.
        assert!((tx_power - users as f64).abs() < 1e-10 * users as f64);
        checked += 1;
    }
}

#[test]
fn zf_lambda_closed_forms() {
    let g = [
        Complex64::new(0.3, -0.2),
        Complex64::new(-0.5, 0.1),
        Complex64::new(0.05, 0.4),
    ];
    let n_t = 8;
    let mut gains = vec![vec![Complex64::new(0.0, 0.0); n_t]; 3];
    for u in 0..3 {
        gains[u][u + 2] = g[u];
    }
    let ch = ChannelRealization::from_gains(n_t, gains).unwrap();
    let l2 = zf_lambda(&BeamAssignment(vec![2, 3, 4]), &ch);
    let harmonic = 3.0 / g.iter().map(|z| 1.0 / (n_t as f64 * z.norm_sqr())).sum::<f64>();
    assert!((l2 - harmonic).abs() < 1e-12 * harmonic);
}
